use super::lagrangian::{is_specific, kinetic, magnetic, LagrangianStrip, BT1, BT2, ESP, NFIELDS, RHO, UN, UT1, UT2};
use super::SweepOptions;
use crate::error::{Error, Location, Result};
use crate::physics::{Constants, PrimitiveState};

/// Remap the Lagrangian zones back onto the fixed zones `spacings`.
/// Returns the interior zones.
pub fn remap(lag: &LagrangianStrip, spacings: &[f64], c: &Constants, opts: &SweepOptions) -> Result<Vec<PrimitiveState>> {
    let len = lag.len();
    let g = lag.ghost;
    if spacings.len() != len || len < 2 * g + 1 || g < 4 {
        return Err(Error::Halo("remap strip does not match Lagrangian strip".into()));
    }
    let dx = spacings;

    // Signed content swept past each fixed edge; positive when the moved
    // edge lies to the right, so the material comes from the zone on the left.
    let mut fm = vec![0.0; len + 1];
    let mut fq = vec![[0.0; NFIELDS]; len + 1];
    for e in g..=len - g {
        let d = lag.displacement[e];
        if d == 0.0 {
            continue;
        }
        let (donor, frac) = if d > 0.0 {
            (e - 1, d / lag.widths[e - 1])
        } else {
            (e, -d / lag.widths[e])
        };
        if frac > 1.0 {
            return Err(Error::StepRejected {
                location: Location::Zone(e),
                reason: format!("interface moved {frac:.3} zone widths in one step"),
            });
        }
        let part = |k: usize, frac: f64| {
            let p = &lag.parabolas[k][donor];
            if d > 0.0 {
                p.average_right(frac)
            } else {
                p.average_left(frac)
            }
        };
        let mass = d * part(RHO, frac);
        fm[e] = mass;
        let mfrac = (mass.abs() / lag.masses[donor]).min(1.0);
        for k in 0..NFIELDS {
            if is_specific(k) {
                fq[e][k] = mass * part(k, mfrac);
            } else if k != RHO {
                fq[e][k] = d * part(k, frac);
            }
        }
    }

    let mut out = Vec::with_capacity(len - 2 * g);
    for i in g..len - g {
        let m = |k: usize| lag.mean[k][i];
        let f = lag.factor[i];
        let dmass = (fm[i] - fm[i + 1]) / dx[i];
        let rho = m(RHO) * f + dmass;
        if !(rho > 0.0) {
            return Err(Error::Unphysical {
                location: Location::Zone(i),
                rho,
                pressure: f64::NAN,
            });
        }
        let specific = |k: usize| {
            let dq = (fq[i][k] - fq[i + 1][k]) / dx[i];
            m(k) + (dq - m(k) * dmass) / rho
        };
        let volumetric = |k: usize| m(k) * f + (fq[i][k] - fq[i + 1][k]) / dx[i];
        let v = [specific(UN), specific(UT1), specific(UT2)];
        let b = [lag.bn[i], volumetric(BT1), volumetric(BT2)];
        let esp = specific(ESP);

        let a = &lag.anchor[i];
        let d_internal = (rho * esp - a.rho_e) - (kinetic(rho, v) - a.kinetic) - (magnetic(b, c.mu0) - a.magnetic);
        let mut p = a.p + (c.gamma - 1.0) * d_internal;
        match opts.pressure_floor {
            Some(floor) => p = if p.is_finite() { p.max(floor) } else { floor },
            None if !(p > 0.0 && p.is_finite()) => {
                return Err(Error::Unphysical {
                    location: Location::Zone(i),
                    rho,
                    pressure: p,
                })
            }
            None => {}
        }
        out.push(PrimitiveState::new(rho, v, b, p));
    }
    Ok(out)
}
