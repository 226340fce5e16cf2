//! One-dimensional PPMLR kernel.
//!
//! A sweep reconstructs parabolas in every zone, traces edge states over
//! the domain of dependence of the fastest wave, solves a two-state
//! Lagrangian interface problem, advances the zones in mass coordinates and
//! remaps the result conservatively back onto the fixed zones.
//!
//! Strips are expressed in a rotated frame: component 0 of `v` and
//! `bprime` is normal to the sweep, components 1 and 2 are transverse.
//! The kernel reads at most four zones on either side of an updated zone.

mod lagrangian;
mod reconstruct;
mod remap;

pub use lagrangian::{lagrangian_step, LagrangianStrip};
pub use reconstruct::{reconstruct, ZoneParabola};
pub use remap::remap;

use crate::error::{Error, Result};
use crate::physics::{Constants, PrimitiveState, Vec3};

/// Ghost zones required on each side of a strip.
pub const GHOST: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    /// Flatten parabolas in strong compressions.
    pub flattening: bool,
    /// Clamp recovered pressure to this floor instead of failing.
    pub pressure_floor: Option<f64>,
    /// Impedance updates in the interface solver; 0 is purely linear.
    pub riemann_iterations: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            flattening: false,
            pressure_floor: None,
            riemann_iterations: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Strip1D {
    /// Zone widths, ghosts included.
    pub spacings: Vec<f64>,
    pub states: Vec<PrimitiveState>,
    /// Dipole field at zone centers in the rotated frame.
    pub bd: Vec<Vec3>,
    pub ghost: usize,
}

impl Strip1D {
    pub fn new(spacings: Vec<f64>, states: Vec<PrimitiveState>, bd: Vec<Vec3>, ghost: usize) -> Result<Self> {
        let s = Self {
            spacings,
            states,
            bd,
            ghost,
        };
        s.check()?;
        Ok(s)
    }

    /// Strip without a dipole field.
    pub fn without_dipole(spacings: Vec<f64>, states: Vec<PrimitiveState>, ghost: usize) -> Result<Self> {
        let bd = vec![[0.0; 3]; states.len()];
        Self::new(spacings, states, bd, ghost)
    }

    pub fn check(&self) -> Result<()> {
        let len = self.states.len();
        if self.ghost < GHOST {
            return Err(Error::Halo(format!("ghost width {} below {GHOST}", self.ghost)));
        }
        if len < 2 * self.ghost + 1 || self.spacings.len() != len || self.bd.len() != len {
            return Err(Error::Halo(format!(
                "strip arrays inconsistent: {} states, {} spacings, {} dipole samples, ghost {}",
                len,
                self.spacings.len(),
                self.bd.len(),
                self.ghost
            )));
        }
        if self.spacings.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Halo("non-positive zone width".into()));
        }
        Ok(())
    }

    /// Number of interior zones.
    pub fn n(&self) -> usize {
        self.states.len() - 2 * self.ghost
    }

    pub fn interior(&self) -> &[PrimitiveState] {
        &self.states[self.ghost..self.states.len() - self.ghost]
    }

    pub fn interior_mut(&mut self) -> &mut [PrimitiveState] {
        let (g, len) = (self.ghost, self.states.len());
        &mut self.states[g..len - g]
    }

    /// Fill ghosts by periodic wrap of the interior.
    pub fn fill_periodic(&mut self) {
        let (g, n) = (self.ghost, self.n());
        for k in 0..g {
            self.states[k] = self.states[n + k];
            self.states[g + n + k] = self.states[g + k];
            self.bd[k] = self.bd[n + k];
            self.bd[g + n + k] = self.bd[g + k];
        }
    }

    /// Fill ghosts by copying the outermost interior zone.
    pub fn fill_outflow(&mut self) {
        let (g, n) = (self.ghost, self.n());
        for k in 0..g {
            self.states[k] = self.states[g];
            self.states[g + n + k] = self.states[g + n - 1];
        }
    }
}

/// Largest stable timestep for a strip: `cfl * min dx / (|u| + c_f)`.
pub fn strip_timestep(strip: &Strip1D, cfl: f64, c: &Constants) -> Result<f64> {
    let g = strip.ghost;
    let mut dt = f64::INFINITY;
    for i in g..strip.states.len() - g {
        let s = &strip.states[i];
        let speed = s.v[0].abs() + crate::physics::fast_speed(s, strip.bd[i], 0, c);
        if !speed.is_finite() {
            return Err(Error::NonFiniteSpeed(crate::error::Location::Zone(i)));
        }
        dt = dt.min(strip.spacings[i] / speed);
    }
    Ok(cfl * dt)
}

/// Advance the interior of `strip` by `dt` along its normal direction.
pub fn sweep_1d(strip: &Strip1D, dt: f64, c: &Constants, opts: &SweepOptions) -> Result<Vec<PrimitiveState>> {
    strip.check()?;
    let lag = lagrangian_step(strip, dt, c, opts)?;
    remap(&lag, &strip.spacings, c, opts)
}
