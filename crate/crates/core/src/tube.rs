//! One-dimensional problems driven directly by the strip kernel.

use crate::error::Result;
use crate::physics::{Constants, PrimitiveState};
use crate::ppm1d::{strip_timestep, sweep_1d, Strip1D, SweepOptions, GHOST};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TubeBoundary {
    Periodic,
    Outflow,
}

/// A uniform 1D tube on `[lo, hi]`.
#[derive(Clone, Debug)]
pub struct Tube {
    pub strip: Strip1D,
    pub lo: f64,
    pub hi: f64,
    pub boundary: TubeBoundary,
    pub time: f64,
    pub steps: u64,
}

impl Tube {
    /// Tube with `n` equal zones initialised from `init(x_center)`.
    pub fn new(
        lo: f64,
        hi: f64,
        n: usize,
        boundary: TubeBoundary,
        init: impl Fn(f64) -> PrimitiveState,
    ) -> Result<Self> {
        let dx = (hi - lo) / n as f64;
        let states: Vec<_> = (0..n + 2 * GHOST)
            .map(|i| init(lo + (i as f64 - GHOST as f64 + 0.5) * dx))
            .collect();
        let strip = Strip1D::without_dipole(vec![dx; n + 2 * GHOST], states, GHOST)?;
        let mut tube = Self {
            strip,
            lo,
            hi,
            boundary,
            time: 0.0,
            steps: 0,
        };
        tube.fill_ghosts();
        Ok(tube)
    }

    /// Two constant states separated at `x0`.
    pub fn riemann(lo: f64, hi: f64, n: usize, x0: f64, left: PrimitiveState, right: PrimitiveState) -> Result<Self> {
        Self::new(lo, hi, n, TubeBoundary::Outflow, |x| if x < x0 { left } else { right })
    }

    fn fill_ghosts(&mut self) {
        match self.boundary {
            TubeBoundary::Periodic => self.strip.fill_periodic(),
            TubeBoundary::Outflow => self.strip.fill_outflow(),
        }
    }

    pub fn dx(&self) -> f64 {
        (self.hi - self.lo) / self.strip.n() as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.strip.n()).map(|i| self.lo + (i as f64 + 0.5) * dx).collect()
    }

    pub fn interior(&self) -> &[PrimitiveState] {
        self.strip.interior()
    }

    pub fn density(&self) -> Vec<f64> {
        self.interior().iter().map(|s| s.rho).collect()
    }

    pub fn step(&mut self, dt: f64, c: &Constants, opts: &SweepOptions) -> Result<()> {
        let out = sweep_1d(&self.strip, dt, c, opts)?;
        self.strip.interior_mut().copy_from_slice(&out);
        self.fill_ghosts();
        self.time += dt;
        self.steps += 1;
        Ok(())
    }

    /// Advance to `t_end` with timestep `cfl * dx / max signal speed`,
    /// shortening the last step to land on `t_end`.
    pub fn run_to(&mut self, t_end: f64, cfl: f64, c: &Constants, opts: &SweepOptions) -> Result<()> {
        while self.time < t_end {
            let dt = strip_timestep(&self.strip, cfl, c)?.min(t_end - self.time);
            self.step(dt, c, opts)?;
            if t_end - self.time < 1e-14 * t_end.max(1.0) {
                self.time = t_end;
            }
        }
        Ok(())
    }
}
