//! MHD state algebra with the dipole-subtracted field `B' = B - B_d`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};

pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, k: f64) -> Vec3 {
    [a[0] * k, a[1] * k, a[2] * k]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Physical constants. In nondimensional mode `mu0 = 1` and lengths are in R_E.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Constants {
    pub mu0: f64,
    pub gamma: f64,
    pub dipole_moment: Vec3,
}

impl Constants {
    /// Vacuum permeability in H/m.
    pub const MU0_SI: f64 = 4.0e-7 * PI;
    /// Earth's dipole moment magnitude in A m^2.
    pub const EARTH_MOMENT_SI: f64 = 8.0e22;

    /// `mu0 = 1`, gamma = 5/3, and a southward moment giving an equatorial
    /// surface field of `b_equator` pointing north.
    pub fn nondimensional(b_equator: f64) -> Self {
        Self {
            mu0: 1.0,
            gamma: 5.0 / 3.0,
            dipole_moment: [0.0, 0.0, -4.0 * PI * b_equator],
        }
    }

    pub fn si() -> Self {
        Self {
            mu0: Self::MU0_SI,
            gamma: 5.0 / 3.0,
            dipole_moment: [0.0, 0.0, -Self::EARTH_MOMENT_SI],
        }
    }

    /// Pure gas dynamics / no dipole.
    pub fn hydro(gamma: f64) -> Self {
        Self {
            mu0: 1.0,
            gamma,
            dipole_moment: [0.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) || !(self.mu0 > 0.0) {
            return Err(Error::Config(format!(
                "need gamma > 1 and mu0 > 0, got gamma = {}, mu0 = {}",
                self.gamma, self.mu0
            )));
        }
        Ok(())
    }
}

impl Default for Constants {
    fn default() -> Self {
        Self::nondimensional(1.0)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveState {
    pub rho: f64,
    pub v: Vec3,
    pub bprime: Vec3,
    pub p: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ConservedState {
    pub rho: f64,
    pub mom: Vec3,
    pub bprime: Vec3,
    pub energy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedQuantities {
    /// Total pressure `p + B'^2 / (2 mu0)`.
    pub pstar: f64,
    /// Total field `B' + B_d`.
    pub btotal: Vec3,
}

impl PrimitiveState {
    pub fn new(rho: f64, v: Vec3, bprime: Vec3, p: f64) -> Self {
        Self { rho, v, bprime, p }
    }

    pub fn magnetic_pressure(&self, c: &Constants) -> f64 {
        dot(self.bprime, self.bprime) / (2.0 * c.mu0)
    }

    pub fn derived(&self, bd: Vec3, c: &Constants) -> DerivedQuantities {
        DerivedQuantities {
            pstar: self.p + self.magnetic_pressure(c),
            btotal: add(self.bprime, bd),
        }
    }

    pub fn is_physical(&self) -> bool {
        self.rho > 0.0 && self.p > 0.0
    }
}

pub fn prim_to_cons(s: &PrimitiveState, c: &Constants) -> ConservedState {
    let kinetic = 0.5 * s.rho * dot(s.v, s.v);
    ConservedState {
        rho: s.rho,
        mom: scale(s.v, s.rho),
        bprime: s.bprime,
        energy: s.p / (c.gamma - 1.0) + kinetic + s.magnetic_pressure(c),
    }
}

pub fn cons_to_prim(s: &ConservedState, c: &Constants) -> Result<PrimitiveState> {
    let unphysical = |p| Error::Unphysical {
        location: Location::Unknown,
        rho: s.rho,
        pressure: p,
    };
    if !(s.rho > 0.0) {
        return Err(unphysical(f64::NAN));
    }
    let v = scale(s.mom, 1.0 / s.rho);
    let internal =
        s.energy - 0.5 * dot(s.mom, s.mom) / s.rho - dot(s.bprime, s.bprime) / (2.0 * c.mu0);
    let p = (c.gamma - 1.0) * internal;
    if !(p > 0.0) {
        return Err(unphysical(p));
    }
    Ok(PrimitiveState {
        rho: s.rho,
        v,
        bprime: s.bprime,
        p,
    })
}

/// Fast magnetosonic speed along `axis`, using the total field `B' + bd`.
pub fn fast_speed(s: &PrimitiveState, bd: Vec3, axis: usize, c: &Constants) -> f64 {
    let b = add(s.bprime, bd);
    let a2 = c.gamma * s.p / s.rho;
    let ca2 = dot(b, b) / (c.mu0 * s.rho);
    let cax2 = b[axis] * b[axis] / (c.mu0 * s.rho);
    let sum = a2 + ca2;
    let disc = (sum * sum - 4.0 * a2 * cax2).max(0.0);
    (0.5 * (sum + disc.sqrt())).sqrt()
}

/// Point dipole of moment `m` located at the origin.
fn point_dipole(pos: Vec3, m: Vec3, mu0: f64) -> Result<Vec3> {
    let r = norm(pos);
    if !(r > 0.0) {
        return Err(Error::Singularity);
    }
    let rhat = scale(pos, 1.0 / r);
    let k = mu0 / (4.0 * PI * r * r * r);
    Ok(scale(sub(scale(rhat, 3.0 * dot(m, rhat)), m), k))
}

/// Earth's dipole field at `pos` (R_E).
pub fn dipole_field(pos: Vec3, c: &Constants) -> Result<Vec3> {
    point_dipole(pos, c.dipole_moment, c.mu0)
}

/// Moment of the image dipole reflected across a plane of constant x.
pub fn image_moment(m: Vec3) -> Vec3 {
    [-m[0], m[1], m[2]]
}

/// Field of the image of Earth's dipole placed at `image_center`.
///
/// The image moment is the reflection of Earth's moment across the plane
/// midway between the two dipoles, so on that plane the normal component
/// of the image field is the negative of the dipole's.
pub fn mirror_dipole_field(pos: Vec3, image_center: Vec3, c: &Constants) -> Result<Vec3> {
    point_dipole(sub(pos, image_center), image_moment(c.dipole_moment), c.mu0)
}

/// Default image location, (30, 0, 0) R_E.
pub const IMAGE_CENTER: Vec3 = [30.0, 0.0, 0.0];

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_moment() -> Constants {
        Constants {
            mu0: 1.0,
            gamma: 5.0 / 3.0,
            dipole_moment: [0.0, 0.0, 1.0],
        }
    }

    #[test]
    fn equatorial_and_polar_dipole() {
        let c = unit_moment();
        let k = 1.0 / (4.0 * PI);
        let b = dipole_field([2.0, 0.0, 0.0], &c).unwrap();
        assert!(b[0].abs() < 1e-18 && b[1].abs() < 1e-18);
        assert!((b[2] + k / 8.0).abs() < 1e-15);
        let b = dipole_field([0.0, 0.0, 2.0], &c).unwrap();
        assert!((b[2] - 2.0 * k / 8.0).abs() < 1e-15);
        let near = norm(dipole_field([0.0, 0.0, 1.5], &c).unwrap());
        let far = norm(dipole_field([0.0, 0.0, 3.0], &c).unwrap());
        assert!((far / near - 0.125).abs() < 1e-14);
        assert!(matches!(dipole_field([0.0; 3], &c), Err(Error::Singularity)));
    }

    #[test]
    fn nondimensional_equator_field() {
        let c = Constants::nondimensional(3.0);
        let b = dipole_field([1.0, 0.0, 0.0], &c).unwrap();
        assert!((b[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn mirror_cancels_normal_component_on_midplane() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for c in [unit_moment(), Constants { dipole_moment: [0.3, -0.2, 1.0], ..unit_moment() }] {
            for _ in 0..100 {
                let p = [15.0, rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0)];
                let bd = dipole_field(p, &c).unwrap();
                let bm = mirror_dipole_field(p, IMAGE_CENTER, &c).unwrap();
                assert!((bd[0] + bm[0]).abs() <= 1e-12 * norm(bd).max(1e-30), "{p:?}");
            }
        }
    }

    #[test]
    fn mirror_magnitudes() {
        let c = unit_moment();
        let m = norm(mirror_dipole_field([29.0, 0.0, 0.0], IMAGE_CENTER, &c).unwrap());
        let d = norm(dipole_field([1.0, 0.0, 0.0], &c).unwrap());
        assert!((m - d).abs() < 1e-15);
        let far = norm(mirror_dipole_field([-100.0, 0.0, 0.0], IMAGE_CENTER, &c).unwrap());
        assert!(far <= 2.0 / 130f64.powi(3) / (4.0 * PI));
        assert!(mirror_dipole_field(IMAGE_CENTER, IMAGE_CENTER, &c).is_err());
    }

    #[test]
    fn dipole_is_divergence_free() {
        let c = Constants::nondimensional(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let h = 1e-4;
        for _ in 0..100 {
            let p = [
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-20.0..20.0),
                rng.gen_range(-20.0..20.0),
            ];
            let r = norm(p);
            if r < 2.0 {
                continue;
            }
            let mut div = 0.0;
            for a in 0..3 {
                let mut hi = p;
                let mut lo = p;
                hi[a] += h;
                lo[a] -= h;
                div += (dipole_field(hi, &c).unwrap()[a] - dipole_field(lo, &c).unwrap()[a]) / (2.0 * h);
            }
            let b = norm(dipole_field(p, &c).unwrap());
            assert!(div.abs() <= 1e-6 * b / r, "div {div} at {p:?}");
        }
    }

    #[test]
    fn energy_examples() {
        let c = Constants::hydro(5.0 / 3.0);
        let e = prim_to_cons(&PrimitiveState::new(1.0, [0.0; 3], [0.0; 3], 1.0), &c);
        assert!((e.energy - 1.5).abs() < 1e-15);
        let e = prim_to_cons(&PrimitiveState::new(2.0, [1.0, 0.0, 0.0], [0.0; 3], 1.0), &c);
        assert_eq!(e.mom, [2.0, 0.0, 0.0]);
        assert!((e.energy - 2.5).abs() < 1e-15);
        let e = prim_to_cons(&PrimitiveState::new(1.0, [0.0; 3], [1.0, 0.0, 0.0], 1.0), &c);
        assert!((e.energy - 2.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        let c = Constants::hydro(5.0 / 3.0);
        let s = ConservedState {
            rho: 1.0,
            mom: [0.0; 3],
            bprime: [0.0; 3],
            energy: 1.5,
        };
        assert!((cons_to_prim(&s, &c).unwrap().p - 1.0).abs() < 1e-15);
        let s = ConservedState {
            rho: 2.0,
            mom: [2.0, 0.0, 0.0],
            bprime: [0.0; 3],
            energy: 1.0,
        };
        assert!(matches!(cons_to_prim(&s, &c), Err(Error::Unphysical { .. })));
        let s = ConservedState { rho: -1.0, ..s };
        assert!(matches!(cons_to_prim(&s, &c), Err(Error::Unphysical { .. })));
    }

    #[test]
    fn pstar_dominates_pressure() {
        let c = Constants::nondimensional(1.0);
        let s = PrimitiveState::new(1.0, [0.0; 3], [0.0; 3], 2.0);
        assert_eq!(s.derived([0.0; 3], &c).pstar, 2.0);
        let s = PrimitiveState::new(1.0, [0.0; 3], [0.1, 0.0, 0.0], 2.0);
        assert!(s.derived([0.0; 3], &c).pstar > 2.0);
    }

    #[test]
    fn fast_speed_limits() {
        let c = Constants::hydro(5.0 / 3.0);
        let s = PrimitiveState::new(1.0, [0.0; 3], [0.0; 3], 1.0);
        assert!((fast_speed(&s, [0.0; 3], 0, &c) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);

        // perpendicular propagation: c_f^2 = a^2 + c_A^2
        let s = PrimitiveState::new(1.0, [0.0; 3], [0.0, 1.0, 0.0], 1.0);
        let cf = fast_speed(&s, [0.0; 3], 0, &c);
        assert!((cf * cf - (5.0 / 3.0 + 1.0)).abs() < 1e-14);

        // total field includes the dipole contribution
        let s = PrimitiveState::new(1.0, [0.0; 3], [0.0; 3], 1.0);
        let cf = fast_speed(&s, [0.0, 1.0, 0.0], 0, &c);
        assert!((cf * cf - (5.0 / 3.0 + 1.0)).abs() < 1e-14);
    }

    #[test]
    fn fast_speed_parallel_field_matches_quartic_root() {
        // oracle: largest root of w^4 - (a2 + ca2) w^2 + a2 cax2 = 0 by bisection
        let c = Constants::hydro(5.0 / 3.0);
        let s = PrimitiveState::new(1.0, [0.0; 3], [1.0, 0.0, 0.0], 1.0);
        let (a2, ca2, cax2) = (5.0 / 3.0, 1.0, 1.0);
        let q = |w: f64| w.powi(4) - (a2 + ca2) * w * w + a2 * cax2;
        let (mut lo, mut hi) = (a2.max(ca2).sqrt(), 10.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if q(m) > 0.0 {
                hi = m
            } else {
                lo = m
            }
        }
        let cf = fast_speed(&s, [0.0; 3], 0, &c);
        assert!((cf - lo).abs() < 1e-12, "{cf} vs {lo}");
        assert!(cf >= a2.sqrt() && cf >= 1.0);
    }

    #[test]
    fn roundtrip_random_states() {
        let c = Constants::nondimensional(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let s = PrimitiveState::new(
                rng.gen_range(0.1..10.0),
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                rng.gen_range(0.5..10.0),
            );
            let r = cons_to_prim(&prim_to_cons(&s, &c), &c).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            assert_eq!(r.rho, s.rho);
            assert!(rel(r.p, s.p) < 1e-14, "{} vs {}", r.p, s.p);
            for a in 0..3 {
                assert!(rel(r.v[a], s.v[a]) < 1e-14);
                assert_eq!(r.bprime[a], s.bprime[a]);
            }
        }
    }
}
