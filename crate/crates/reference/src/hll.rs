//! First-order HLL finite-volume solver for 1D ideal MHD (units with mu0 = 1).
//!
//! The normal field `bx` is constant. Boundaries are zero-gradient.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MhdState {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub by: f64,
    pub bz: f64,
    pub p: f64,
}

type Cons = [f64; 7];

#[derive(Clone, Debug)]
pub struct HllMhd {
    pub gamma: f64,
    pub bx: f64,
    pub cfl: f64,
    pub dx: f64,
    pub lo: f64,
    cells: Vec<Cons>,
}

impl HllMhd {
    /// `n` equal cells on `[lo, hi]`, left state for cell centers `< x0`.
    pub fn shock_tube(
        lo: f64,
        hi: f64,
        n: usize,
        x0: f64,
        left: MhdState,
        right: MhdState,
        bx: f64,
        gamma: f64,
    ) -> Self {
        let dx = (hi - lo) / n as f64;
        let cells = (0..n)
            .map(|i| {
                let x = lo + (i as f64 + 0.5) * dx;
                to_cons(if x < x0 { &left } else { &right }, bx, gamma)
            })
            .collect();
        Self {
            gamma,
            bx,
            cfl: 0.8,
            dx,
            lo,
            cells,
        }
    }

    pub fn density(&self) -> Vec<f64> {
        self.cells.iter().map(|c| c[0]).collect()
    }

    pub fn states(&self) -> Vec<MhdState> {
        self.cells
            .iter()
            .map(|c| to_prim(c, self.bx, self.gamma))
            .collect()
    }

    pub fn advance_to(&mut self, t_end: f64) {
        let mut t = 0.0;
        while t < t_end {
            let smax = self
                .cells
                .iter()
                .map(|c| {
                    let s = to_prim(c, self.bx, self.gamma);
                    s.u.abs() + fast_speed(&s, self.bx, self.gamma)
                })
                .fold(0.0_f64, f64::max);
            let dt = (self.cfl * self.dx / smax).min(t_end - t);
            self.step(dt);
            t += dt;
        }
    }

    fn step(&mut self, dt: f64) {
        let n = self.cells.len();
        let at = |i: isize| -> &Cons { &self.cells[i.clamp(0, n as isize - 1) as usize] };
        let fluxes: Vec<Cons> = (0..=n as isize)
            .map(|e| self.hll_flux(at(e - 1), at(e)))
            .collect();
        let k = dt / self.dx;
        for (i, c) in self.cells.iter_mut().enumerate() {
            for q in 0..7 {
                c[q] -= k * (fluxes[i + 1][q] - fluxes[i][q]);
            }
        }
    }

    fn hll_flux(&self, ul: &Cons, ur: &Cons) -> Cons {
        let (g, bx) = (self.gamma, self.bx);
        let (wl, wr) = (to_prim(ul, bx, g), to_prim(ur, bx, g));
        let (cl, cr) = (fast_speed(&wl, bx, g), fast_speed(&wr, bx, g));
        let sl = (wl.u - cl).min(wr.u - cr);
        let sr = (wl.u + cl).max(wr.u + cr);
        let (fl, fr) = (flux(&wl, bx, g), flux(&wr, bx, g));
        if sl >= 0.0 {
            fl
        } else if sr <= 0.0 {
            fr
        } else {
            let mut f = [0.0; 7];
            for q in 0..7 {
                f[q] = (sr * fl[q] - sl * fr[q] + sl * sr * (ur[q] - ul[q])) / (sr - sl);
            }
            f
        }
    }
}

fn to_cons(s: &MhdState, bx: f64, g: f64) -> Cons {
    let b2 = bx * bx + s.by * s.by + s.bz * s.bz;
    let v2 = s.u * s.u + s.v * s.v + s.w * s.w;
    [
        s.rho,
        s.rho * s.u,
        s.rho * s.v,
        s.rho * s.w,
        s.by,
        s.bz,
        s.p / (g - 1.0) + 0.5 * s.rho * v2 + 0.5 * b2,
    ]
}

fn to_prim(c: &Cons, bx: f64, g: f64) -> MhdState {
    let rho = c[0];
    let (u, v, w) = (c[1] / rho, c[2] / rho, c[3] / rho);
    let b2 = bx * bx + c[4] * c[4] + c[5] * c[5];
    let p = (g - 1.0) * (c[6] - 0.5 * rho * (u * u + v * v + w * w) - 0.5 * b2);
    MhdState {
        rho,
        u,
        v,
        w,
        by: c[4],
        bz: c[5],
        p,
    }
}

fn flux(s: &MhdState, bx: f64, g: f64) -> Cons {
    let b2 = bx * bx + s.by * s.by + s.bz * s.bz;
    let pt = s.p + 0.5 * b2;
    let e = to_cons(s, bx, g)[6];
    let vb = s.u * bx + s.v * s.by + s.w * s.bz;
    [
        s.rho * s.u,
        s.rho * s.u * s.u + pt - bx * bx,
        s.rho * s.u * s.v - bx * s.by,
        s.rho * s.u * s.w - bx * s.bz,
        s.by * s.u - bx * s.v,
        s.bz * s.u - bx * s.w,
        (e + pt) * s.u - bx * vb,
    ]
}

fn fast_speed(s: &MhdState, bx: f64, g: f64) -> f64 {
    let a2 = g * s.p / s.rho;
    let b2 = (bx * bx + s.by * s.by + s.bz * s.bz) / s.rho;
    let bx2 = bx * bx / s.rho;
    let sum = a2 + b2;
    (0.5 * (sum + (sum * sum - 4.0 * a2 * bx2).max(0.0).sqrt())).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brio_wu(n: usize) -> HllMhd {
        let l = MhdState { rho: 1.0, u: 0.0, v: 0.0, w: 0.0, by: 1.0, bz: 0.0, p: 1.0 };
        let r = MhdState { rho: 0.125, u: 0.0, v: 0.0, w: 0.0, by: -1.0, bz: 0.0, p: 0.1 };
        HllMhd::shock_tube(0.0, 1.0, n, 0.5, l, r, 0.75, 2.0)
    }

    #[test]
    fn conserves_mass_before_waves_reach_boundary() {
        let mut s = brio_wu(400);
        let m0: f64 = s.density().iter().sum();
        s.advance_to(0.05);
        let m1: f64 = s.density().iter().sum();
        assert!((m1 - m0).abs() / m0 < 1e-13);
    }

    #[test]
    fn brio_wu_density_stays_bounded() {
        let mut s = brio_wu(400);
        s.advance_to(0.1);
        let rho = s.density();
        assert!(rho.iter().all(|&r| r > 0.1 && r < 1.01));
    }
}
