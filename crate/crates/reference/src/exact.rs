//! Exact Riemann solver for the 1D Euler equations of an ideal gas.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GasState {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
}

impl GasState {
    pub fn new(rho: f64, u: f64, p: f64) -> Self {
        Self { rho, u, p }
    }

    fn sound_speed(&self, gamma: f64) -> f64 {
        (gamma * self.p / self.rho).sqrt()
    }
}

/// Solution of a single Riemann problem, sampled in similarity variable `x/t`.
#[derive(Clone, Debug)]
pub struct ExactRiemann {
    pub left: GasState,
    pub right: GasState,
    pub gamma: f64,
    /// Star-region pressure.
    pub p_star: f64,
    /// Star-region velocity; also the contact speed.
    pub u_star: f64,
}

impl ExactRiemann {
    pub fn solve(left: GasState, right: GasState, gamma: f64) -> Self {
        let cl = left.sound_speed(gamma);
        let cr = right.sound_speed(gamma);
        assert!(
            2.0 / (gamma - 1.0) * (cl + cr) > right.u - left.u,
            "vacuum generated"
        );

        // Two-rarefaction initial guess, floored.
        let z = (gamma - 1.0) / (2.0 * gamma);
        let mut p = ((cl + cr - 0.5 * (gamma - 1.0) * (right.u - left.u))
            / (cl / left.p.powf(z) + cr / right.p.powf(z)))
        .powf(1.0 / z);
        p = p.max(1e-10);

        for _ in 0..200 {
            let (fl, dfl) = pressure_function(p, &left, gamma);
            let (fr, dfr) = pressure_function(p, &right, gamma);
            let f = fl + fr + (right.u - left.u);
            let next = (p - f / (dfl + dfr)).max(1e-12);
            let change = 2.0 * (next - p).abs() / (next + p);
            p = next;
            if change < 1e-15 {
                break;
            }
        }
        let (fl, _) = pressure_function(p, &left, gamma);
        let (fr, _) = pressure_function(p, &right, gamma);
        let u = 0.5 * (left.u + right.u) + 0.5 * (fr - fl);

        Self {
            left,
            right,
            gamma,
            p_star: p,
            u_star: u,
        }
    }

    /// State at similarity coordinate `s = (x - x0) / t`.
    pub fn sample(&self, s: f64) -> GasState {
        let g = self.gamma;
        let (ps, us) = (self.p_star, self.u_star);
        if s <= us {
            let w = self.left;
            let c = w.sound_speed(g);
            if ps > w.p {
                // left shock
                let ratio = ps / w.p;
                let speed = w.u - c * ((g + 1.0) / (2.0 * g) * ratio + (g - 1.0) / (2.0 * g)).sqrt();
                if s <= speed {
                    w
                } else {
                    let gr = (g - 1.0) / (g + 1.0);
                    GasState::new(w.rho * (ratio + gr) / (gr * ratio + 1.0), us, ps)
                }
            } else {
                let head = w.u - c;
                let cs = c * (ps / w.p).powf((g - 1.0) / (2.0 * g));
                let tail = us - cs;
                if s <= head {
                    w
                } else if s >= tail {
                    GasState::new(w.rho * (ps / w.p).powf(1.0 / g), us, ps)
                } else {
                    let k = 2.0 / (g + 1.0) + (g - 1.0) / ((g + 1.0) * c) * (w.u - s);
                    GasState::new(
                        w.rho * k.powf(2.0 / (g - 1.0)),
                        2.0 / (g + 1.0) * (c + 0.5 * (g - 1.0) * w.u + s),
                        w.p * k.powf(2.0 * g / (g - 1.0)),
                    )
                }
            }
        } else {
            let w = self.right;
            let c = w.sound_speed(g);
            if ps > w.p {
                let ratio = ps / w.p;
                let speed = w.u + c * ((g + 1.0) / (2.0 * g) * ratio + (g - 1.0) / (2.0 * g)).sqrt();
                if s >= speed {
                    w
                } else {
                    let gr = (g - 1.0) / (g + 1.0);
                    GasState::new(w.rho * (ratio + gr) / (gr * ratio + 1.0), us, ps)
                }
            } else {
                let head = w.u + c;
                let cs = c * (ps / w.p).powf((g - 1.0) / (2.0 * g));
                let tail = us + cs;
                if s >= head {
                    w
                } else if s <= tail {
                    GasState::new(w.rho * (ps / w.p).powf(1.0 / g), us, ps)
                } else {
                    let k = 2.0 / (g + 1.0) - (g - 1.0) / ((g + 1.0) * c) * (w.u - s);
                    GasState::new(
                        w.rho * k.powf(2.0 / (g - 1.0)),
                        2.0 / (g + 1.0) * (-c + 0.5 * (g - 1.0) * w.u + s),
                        w.p * k.powf(2.0 * g / (g - 1.0)),
                    )
                }
            }
        }
    }

    /// Cell-averaged density on `n` equal cells of `[lo, hi]` at time `t`,
    /// with the initial discontinuity at `x0`. Each cell is averaged with
    /// `sub` midpoint samples.
    pub fn density_profile(&self, lo: f64, hi: f64, n: usize, x0: f64, t: f64, sub: usize) -> Vec<f64> {
        let dx = (hi - lo) / n as f64;
        (0..n)
            .map(|i| {
                (0..sub)
                    .map(|k| {
                        let x = lo + dx * (i as f64 + (k as f64 + 0.5) / sub as f64);
                        self.sample((x - x0) / t).rho
                    })
                    .sum::<f64>()
                    / sub as f64
            })
            .collect()
    }
}

fn pressure_function(p: f64, w: &GasState, g: f64) -> (f64, f64) {
    let c = w.sound_speed(g);
    if p > w.p {
        let a = 2.0 / ((g + 1.0) * w.rho);
        let b = (g - 1.0) / (g + 1.0) * w.p;
        let q = (a / (p + b)).sqrt();
        ((p - w.p) * q, q * (1.0 - 0.5 * (p - w.p) / (b + p)))
    } else {
        let r = p / w.p;
        (
            2.0 * c / (g - 1.0) * (r.powf((g - 1.0) / (2.0 * g)) - 1.0),
            r.powf(-(g + 1.0) / (2.0 * g)) / (w.rho * c),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sod_gamma_14_star_state() {
        // Published values for the standard Sod problem with gamma = 1.4.
        let r = ExactRiemann::solve(GasState::new(1.0, 0.0, 1.0), GasState::new(0.125, 0.0, 0.1), 1.4);
        assert!((r.p_star - 0.30313).abs() < 1e-5, "{}", r.p_star);
        assert!((r.u_star - 0.92745).abs() < 1e-5, "{}", r.u_star);
    }

    #[test]
    fn uniform_state_is_unchanged() {
        let w = GasState::new(1.3, 0.4, 2.0);
        let r = ExactRiemann::solve(w, w, 5.0 / 3.0);
        assert!((r.p_star - 2.0).abs() < 1e-12);
        assert!((r.u_star - 0.4).abs() < 1e-12);
        for s in [-3.0, -0.1, 0.0, 0.7, 5.0] {
            let q = r.sample(s);
            assert!((q.rho - 1.3).abs() < 1e-10);
        }
    }

    #[test]
    fn far_field_returns_initial_states() {
        let l = GasState::new(1.0, 0.0, 1.0);
        let rgt = GasState::new(0.125, 0.0, 0.1);
        let r = ExactRiemann::solve(l, rgt, 5.0 / 3.0);
        assert_eq!(r.sample(-10.0), l);
        assert_eq!(r.sample(10.0), rgt);
    }
}
