//! Piecewise-parabolic reconstruction on nonuniform zones.

/// Parabola over one zone in the normalized coordinate `xi` in `[0, 1]`:
/// `q(xi) = left + xi * (right - left + six * (1 - xi))`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ZoneParabola {
    pub left: f64,
    pub right: f64,
    pub avg: f64,
    pub six: f64,
}

impl ZoneParabola {
    pub fn constant(a: f64) -> Self {
        Self {
            left: a,
            right: a,
            avg: a,
            six: 0.0,
        }
    }

    /// Build from edge values and the zone average, then apply the
    /// monotonicity constraints.
    pub fn monotone(left: f64, right: f64, avg: f64) -> Self {
        let mut z = Self {
            left,
            right,
            avg,
            six: 0.0,
        };
        z.monotonize();
        z
    }

    /// Colella-Woodward limiter: local extrema become constant, and an edge
    /// that would put an extremum inside the zone is pulled back.
    pub fn monotonize(&mut self) {
        let a = self.avg;
        if (self.right - a) * (a - self.left) <= 0.0 {
            self.left = a;
            self.right = a;
        } else {
            let da = self.right - self.left;
            let curv = da * (a - 0.5 * (self.left + self.right));
            let da2 = da * da / 6.0;
            if curv > da2 {
                self.left = 3.0 * a - 2.0 * self.right;
            } else if -da2 > curv {
                self.right = 3.0 * a - 2.0 * self.left;
            }
        }
        self.six = 6.0 * (a - 0.5 * (self.left + self.right));
    }

    pub fn value(&self, xi: f64) -> f64 {
        self.left + xi * (self.right - self.left + self.six * (1.0 - xi))
    }

    /// Mean over the rightmost fraction `sigma` of the zone.
    pub fn average_right(&self, sigma: f64) -> f64 {
        let da = self.right - self.left;
        self.right - 0.5 * sigma * (da - (1.0 - 2.0 / 3.0 * sigma) * self.six)
    }

    /// Mean over the leftmost fraction `sigma` of the zone.
    pub fn average_left(&self, sigma: f64) -> f64 {
        let da = self.right - self.left;
        self.left + 0.5 * sigma * (da + (1.0 - 2.0 / 3.0 * sigma) * self.six)
    }

    /// Same shape re-anchored to a new zone average.
    pub fn shifted(&self, avg: f64) -> Self {
        let d = avg - self.avg;
        Self::monotone(self.left + d, self.right + d, avg)
    }
}

/// Limited zone slope `delta a_j` for nonuniform zones.
#[inline]
fn slope(am: f64, a: f64, ap: f64, dm: f64, d: f64, dp: f64) -> f64 {
    let (fwd, bwd) = (ap - a, a - am);
    if fwd * bwd <= 0.0 {
        return 0.0;
    }
    let raw = d / (dm + d + dp) * ((2.0 * dm + d) / (dp + d) * fwd + (d + 2.0 * dp) / (dm + d) * bwd);
    let lim = (2.0 * bwd.abs()).min(2.0 * fwd.abs());
    raw.abs().min(lim).copysign(raw)
}

/// Fourth-order interface value between zones `j` and `j + 1`, from zones
/// `j - 1 ..= j + 2`. Differences are formed first so constant data gives
/// back the constant exactly.
#[inline]
fn interface(a: [f64; 4], d: [f64; 4], slope_j: f64, slope_jp: f64) -> f64 {
    let [_, aj, ajp, _] = a;
    let [d0, d1, d2, d3] = d;
    let jump = ajp - aj;
    let z1 = (d0 + d1) / (2.0 * d1 + d2);
    let z2 = (d3 + d2) / (2.0 * d2 + d1);
    let v = aj
        + d1 / (d1 + d2) * jump
        + (2.0 * d2 * d1 / (d1 + d2) * (z1 - z2) * jump - d1 * z1 * slope_jp + d2 * z2 * slope_j)
            / (d0 + d1 + d2 + d3);
    v.clamp(aj.min(ajp), aj.max(ajp))
}

/// Shock flattening coefficient of zone `j` from pressures and normal
/// velocities at `j - 2 ..= j + 2`; 1 means fully flattened.
pub(crate) fn flattening(p: &[f64], u: &[f64], j: usize) -> f64 {
    let dp1 = p[j + 1] - p[j - 1];
    let dp2 = p[j + 2] - p[j - 2];
    let strong = dp1.abs() / p[j + 1].min(p[j - 1]) > 0.33 && u[j - 1] - u[j + 1] > 0.0;
    if !strong || dp2 == 0.0 {
        return 0.0;
    }
    ((dp1 / dp2 - 0.75) * 10.0).clamp(0.0, 1.0)
}

/// Unlimited-shape parabolas for every zone of `q`. Zones within two of
/// either end lack a full stencil and are returned constant.
pub(crate) fn reconstruct_all(q: &[f64], dx: &[f64], flatten: Option<&[f64]>) -> Vec<ZoneParabola> {
    let n = q.len();
    assert_eq!(dx.len(), n);
    let mut out: Vec<ZoneParabola> = q.iter().map(|&a| ZoneParabola::constant(a)).collect();
    if n < 5 {
        return out;
    }
    let mut slopes = vec![0.0; n];
    for j in 1..n - 1 {
        slopes[j] = slope(q[j - 1], q[j], q[j + 1], dx[j - 1], dx[j], dx[j + 1]);
    }
    // face[j] is the value at the right edge of zone j
    let mut face = vec![0.0; n];
    for j in 1..n - 2 {
        face[j] = interface(
            [q[j - 1], q[j], q[j + 1], q[j + 2]],
            [dx[j - 1], dx[j], dx[j + 1], dx[j + 2]],
            slopes[j],
            slopes[j + 1],
        );
    }
    for j in 2..n - 2 {
        let (mut l, mut r) = (face[j - 1], face[j]);
        if let Some(f) = flatten {
            let f = f[j];
            if f > 0.0 {
                l = f * q[j] + (1.0 - f) * l;
                r = f * q[j] + (1.0 - f) * r;
            }
        }
        out[j] = ZoneParabola::monotone(l, r, q[j]);
    }
    out
}

/// Parabolas for the zones `2 .. q.len() - 2`; the two outer values on each
/// side only feed the stencil.
pub fn reconstruct(q: &[f64], spacings: &[f64]) -> Vec<ZoneParabola> {
    let n = q.len();
    if n < 5 {
        return Vec::new();
    }
    reconstruct_all(q, spacings, None)[2..n - 2].to_vec()
}
