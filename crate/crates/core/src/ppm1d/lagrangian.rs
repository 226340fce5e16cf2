use super::reconstruct::{flattening, reconstruct_all, ZoneParabola};
use super::{Strip1D, SweepOptions};
use crate::error::{Error, Location, Result};
use crate::physics::{fast_speed, Constants, PrimitiveState};

/// Remapped quantities. Density and transverse field are per unit volume;
/// velocities and specific total energy are per unit mass.
pub(crate) const RHO: usize = 0;
pub(crate) const UN: usize = 1;
pub(crate) const UT1: usize = 2;
pub(crate) const UT2: usize = 3;
pub(crate) const BT1: usize = 4;
pub(crate) const BT2: usize = 5;
pub(crate) const ESP: usize = 6;
pub(crate) const NFIELDS: usize = 7;

/// Energy bookkeeping of the zone a remapped value is measured against.
/// Pressure is recovered as a change from this anchor so an unchanged zone
/// returns its pressure bit for bit.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Anchor {
    pub rho_e: f64,
    pub kinetic: f64,
    pub magnetic: f64,
    pub p: f64,
}

#[inline]
pub(crate) fn kinetic(rho: f64, u: [f64; 3]) -> f64 {
    0.5 * rho * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2])
}

#[inline]
pub(crate) fn magnetic(b: [f64; 3], mu0: f64) -> f64 {
    (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]) / (2.0 * mu0)
}

pub(crate) fn specific_energy(s: &PrimitiveState, c: &Constants) -> f64 {
    (s.p / (c.gamma - 1.0) + kinetic(s.rho, s.v) + magnetic(s.bprime, c.mu0)) / s.rho
}

/// Zones after the Lagrangian update, not yet remapped.
#[derive(Clone, Debug)]
pub struct LagrangianStrip {
    pub ghost: usize,
    /// Eulerian zone widths.
    pub spacings: Vec<f64>,
    /// Lagrangian zone widths.
    pub widths: Vec<f64>,
    /// Interface displacement over the step; entry `e` is the left edge of zone `e`.
    pub displacement: Vec<f64>,
    /// Interface velocities from the interface solver (NaN where not computed).
    pub interface_velocity: Vec<f64>,
    pub(crate) factor: Vec<f64>,
    /// Zone masses; specific quantities are reconstructed against these.
    pub(crate) masses: Vec<f64>,
    pub(crate) mean: [Vec<f64>; NFIELDS],
    pub(crate) bn: Vec<f64>,
    pub(crate) parabolas: [Vec<ZoneParabola>; NFIELDS],
    pub(crate) anchor: Vec<Anchor>,
}

impl LagrangianStrip {
    /// Lagrangian zones given directly as primitive states on a moved mesh,
    /// reconstructed afresh on the moved widths.
    pub fn from_parts(
        spacings: Vec<f64>,
        displacement: Vec<f64>,
        states: &[PrimitiveState],
        ghost: usize,
        c: &Constants,
    ) -> Result<Self> {
        let len = states.len();
        if spacings.len() != len || displacement.len() != len + 1 {
            return Err(Error::Halo("moved mesh arrays have inconsistent lengths".into()));
        }
        let widths: Vec<f64> = (0..len)
            .map(|i| spacings[i] + (displacement[i + 1] - displacement[i]))
            .collect();
        if let Some(i) = widths.iter().position(|&w| !(w > 0.0)) {
            return Err(Error::StepRejected {
                location: Location::Zone(i),
                reason: "moved interfaces cross".into(),
            });
        }
        let factor = (0..len).map(|i| widths[i] / spacings[i]).collect();
        let mean = fields_of(states, c);
        let masses: Vec<f64> = (0..len).map(|i| states[i].rho * widths[i]).collect();
        let parabolas = std::array::from_fn(|k| reconstruct_all(&mean[k], measure(k, &widths, &masses), None));
        Ok(Self {
            ghost,
            spacings,
            widths,
            displacement,
            interface_velocity: vec![f64::NAN; len + 1],
            factor,
            masses,
            bn: states.iter().map(|s| s.bprime[0]).collect(),
            anchor: states.iter().map(|s| anchor_of(s, c)).collect(),
            mean,
            parabolas,
        })
    }

    pub fn len(&self) -> usize {
        self.spacings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spacings.is_empty()
    }

    /// Lagrangian zone state (velocities and field as volume averages).
    pub fn state(&self, i: usize, c: &Constants) -> PrimitiveState {
        let m = |k: usize| self.mean[k][i];
        let rho = m(RHO);
        let v = [m(UN), m(UT1), m(UT2)];
        let b = [self.bn[i], m(BT1), m(BT2)];
        let p = (c.gamma - 1.0) * (rho * m(ESP) - kinetic(rho, v) - magnetic(b, c.mu0));
        PrimitiveState::new(rho, v, b, p)
    }
}

/// Whether field `k` is per unit mass.
#[inline]
pub(crate) fn is_specific(k: usize) -> bool {
    matches!(k, UN | UT1 | UT2 | ESP)
}

/// Zone measure a field is reconstructed against: mass for specific
/// quantities, volume otherwise.
fn measure<'a>(k: usize, volumes: &'a [f64], masses: &'a [f64]) -> &'a [f64] {
    if is_specific(k) {
        masses
    } else {
        volumes
    }
}

fn fields_of(states: &[PrimitiveState], c: &Constants) -> [Vec<f64>; NFIELDS] {
    let col = |f: &dyn Fn(&PrimitiveState) -> f64| states.iter().map(f).collect::<Vec<f64>>();
    [
        col(&|s| s.rho),
        col(&|s| s.v[0]),
        col(&|s| s.v[1]),
        col(&|s| s.v[2]),
        col(&|s| s.bprime[1]),
        col(&|s| s.bprime[2]),
        col(&|s| specific_energy(s, c)),
    ]
}

pub(crate) fn anchor_of(s: &PrimitiveState, c: &Constants) -> Anchor {
    Anchor {
        rho_e: s.rho * specific_energy(s, c),
        kinetic: kinetic(s.rho, s.v),
        magnetic: magnetic(s.bprime, c.mu0),
        p: s.p,
    }
}

/// Interface fluxes from the two-state solve.
#[derive(Clone, Copy, Debug, Default)]
struct InterfaceFlux {
    u: f64,
    /// Normal momentum flux `p* - Bn^2 / mu0`.
    normal: f64,
    /// Transverse momentum fluxes `-Bn Bt* / mu0`.
    shear: [f64; 2],
    /// Transverse field fluxes `Bn vt*`.
    induction: [f64; 2],
    energy: f64,
}

/// Edge state traced from one side.
#[derive(Clone, Copy, Debug)]
struct Traced {
    rho: f64,
    u: f64,
    vt: [f64; 2],
    bt: [f64; 2],
    p: f64,
}

/// Two-state Lagrangian interface solve. Total pressure and normal velocity
/// use the fast-wave impedance, corrected toward the two-shock value; the
/// transverse components use the Alfvenic impedance of the normal field.
fn solve_interface(
    l: &Traced,
    r: &Traced,
    bn: f64,
    w0: [f64; 2],
    rho_cell: [f64; 2],
    c: &Constants,
    iterations: usize,
) -> InterfaceFlux {
    let mu0 = c.mu0;
    let pt_l = l.p + magnetic([bn, l.bt[0], l.bt[1]], mu0);
    let pt_r = r.p + magnetic([bn, r.bt[0], r.bt[1]], mu0);
    let g = c.gamma;
    let shock = (g + 1.0) / (2.0 * g);
    let floor = (g - 1.0) / (2.0 * g);

    let (mut wl, mut wr) = (w0[0], w0[1]);
    let star = |wl: f64, wr: f64| pt_l + (wl * (pt_r - pt_l) + wl * wr * (l.u - r.u)) / (wl + wr);
    for _ in 0..iterations {
        let ps = star(wl, wr);
        wl = w0[0] * (1.0 + shock * (ps / pt_l - 1.0)).max(floor).sqrt();
        wr = w0[1] * (1.0 + shock * (ps / pt_r - 1.0)).max(floor).sqrt();
    }
    let pstar = star(wl, wr);
    let ustar = l.u + (wr * (r.u - l.u) + (pt_l - pt_r)) / (wl + wr);

    let mut shear = [0.0; 2];
    let mut vt = [0.0; 2];
    let wa = [(rho_cell[0] / mu0).sqrt() * bn.abs(), (rho_cell[1] / mu0).sqrt() * bn.abs()];
    for t in 0..2 {
        let (sl, sr) = (-bn * l.bt[t] / mu0, -bn * r.bt[t] / mu0);
        let (vl, vr) = (l.vt[t], r.vt[t]);
        let sum = wa[0] + wa[1];
        if sum > 0.0 {
            shear[t] = sl + (wa[0] * (sr - sl) + wa[0] * wa[1] * (vl - vr)) / sum;
            vt[t] = vl + (wa[1] * (vr - vl) + (sl - sr)) / sum;
        } else {
            shear[t] = 0.0;
            vt[t] = vl + 0.5 * (vr - vl);
        }
    }
    let normal = pstar - bn * bn / mu0;
    InterfaceFlux {
        u: ustar,
        normal,
        shear,
        induction: [bn * vt[0], bn * vt[1]],
        energy: normal * ustar + shear[0] * vt[0] + shear[1] * vt[1],
    }
}

/// Advance every zone with a full stencil in mass coordinates.
///
/// Zones `3 .. len - 3` are updated; interfaces `3 ..= len - 3` move with
/// the interface velocity.
pub fn lagrangian_step(strip: &Strip1D, dt: f64, c: &Constants, opts: &SweepOptions) -> Result<LagrangianStrip> {
    strip.check()?;
    let len = strip.states.len();
    let dx = &strip.spacings;
    let states = &strip.states;

    let mean = fields_of(states, c);
    let pressure: Vec<f64> = states.iter().map(|s| s.p).collect();
    let cf: Vec<f64> = (0..len)
        .map(|i| fast_speed(&states[i], strip.bd[i], 0, c))
        .collect();
    if let Some(i) = cf.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteSpeed(Location::Zone(i)));
    }

    let flat = opts.flattening.then(|| {
        let mut f = vec![0.0; len];
        for j in 2..len - 2 {
            f[j] = flattening(&pressure, &mean[UN], j);
        }
        f
    });
    let flat = flat.as_deref();
    let masses: Vec<f64> = (0..len).map(|i| states[i].rho * dx[i]).collect();
    let parabolas: [Vec<ZoneParabola>; NFIELDS] =
        std::array::from_fn(|k| reconstruct_all(&mean[k], measure(k, dx, &masses), flat));
    let p_par = reconstruct_all(&pressure, dx, flat);

    // interfaces 3 ..= len - 3
    let mut flux = vec![InterfaceFlux::default(); len + 1];
    let mut u_iface = vec![f64::NAN; len + 1];
    for e in 3..=len - 3 {
        let (a, b) = (e - 1, e);
        let sa = (cf[a] * dt / dx[a]).min(1.0);
        let sb = (cf[b] * dt / dx[b]).min(1.0);
        let tl = |k: usize| parabolas[k][a].average_right(sa);
        let tr = |k: usize| parabolas[k][b].average_left(sb);
        let left = Traced {
            rho: tl(RHO),
            u: tl(UN),
            vt: [tl(UT1), tl(UT2)],
            bt: [tl(BT1), tl(BT2)],
            p: p_par[a].average_right(sa),
        };
        let right = Traced {
            rho: tr(RHO),
            u: tr(UN),
            vt: [tr(UT1), tr(UT2)],
            bt: [tr(BT1), tr(BT2)],
            p: p_par[b].average_left(sb),
        };
        debug_assert!(left.rho > 0.0 && right.rho > 0.0);
        let bn = 0.5 * (states[a].bprime[0] + states[b].bprime[0]);
        let w0 = [states[a].rho * cf[a], states[b].rho * cf[b]];
        flux[e] = solve_interface(
            &left,
            &right,
            bn,
            w0,
            [states[a].rho, states[b].rho],
            c,
            opts.riemann_iterations,
        );
        u_iface[e] = flux[e].u;
    }

    let displacement: Vec<f64> = u_iface
        .iter()
        .map(|&u| if u.is_nan() { 0.0 } else { u * dt })
        .collect();

    let mut out_mean = mean.clone();
    let mut widths = dx.clone();
    let mut factor = vec![1.0; len];
    for i in 3..len - 3 {
        let (fl, fr) = (&flux[i], &flux[i + 1]);
        let f = 1.0 + (displacement[i + 1] - displacement[i]) / dx[i];
        if !(f > 0.0) {
            return Err(Error::StepRejected {
                location: Location::Zone(i),
                reason: format!("zone volume factor {f} after Lagrangian step"),
            });
        }
        let k = dt / masses[i];
        out_mean[RHO][i] = mean[RHO][i] / f;
        out_mean[UN][i] = mean[UN][i] - k * (fr.normal - fl.normal);
        out_mean[UT1][i] = mean[UT1][i] - k * (fr.shear[0] - fl.shear[0]);
        out_mean[UT2][i] = mean[UT2][i] - k * (fr.shear[1] - fl.shear[1]);
        out_mean[BT1][i] = (mean[BT1][i] + dt * (fr.induction[0] - fl.induction[0]) / dx[i]) / f;
        out_mean[BT2][i] = (mean[BT2][i] + dt * (fr.induction[1] - fl.induction[1]) / dx[i]) / f;
        out_mean[ESP][i] = mean[ESP][i] - k * (fr.energy - fl.energy);
        factor[i] = f;
        widths[i] = dx[i] * f;

        if opts.pressure_floor.is_none() {
            let rho = out_mean[RHO][i];
            let v = [out_mean[UN][i], out_mean[UT1][i], out_mean[UT2][i]];
            let b = [states[i].bprime[0], out_mean[BT1][i], out_mean[BT2][i]];
            let internal = rho * out_mean[ESP][i] - kinetic(rho, v) - magnetic(b, c.mu0);
            if !(internal > 0.0) {
                return Err(Error::Unphysical {
                    location: Location::Zone(i),
                    rho,
                    pressure: (c.gamma - 1.0) * internal,
                });
            }
        }
    }

    // Lagrangian profiles: each zone keeps its Eulerian parabola shape,
    // re-anchored to the updated average.
    let lag_parabolas: [Vec<ZoneParabola>; NFIELDS] = std::array::from_fn(|k| {
        (0..len)
            .map(|i| {
                if (3..len - 3).contains(&i) {
                    parabolas[k][i].shifted(out_mean[k][i])
                } else {
                    parabolas[k][i]
                }
            })
            .collect()
    });

    Ok(LagrangianStrip {
        ghost: strip.ghost,
        spacings: dx.clone(),
        widths,
        displacement,
        interface_velocity: u_iface,
        factor,
        masses,
        mean: out_mean,
        bn: states.iter().map(|s| s.bprime[0]).collect(),
        parabolas: lag_parabolas,
        anchor: states.iter().map(|s| anchor_of(s, c)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppm1d::GHOST;

    fn strip(states: Vec<PrimitiveState>, dx: f64) -> Strip1D {
        let n = states.len();
        Strip1D::without_dipole(vec![dx; n], states, GHOST).unwrap()
    }

    #[test]
    fn quiescent_interfaces_do_not_move() {
        let c = Constants::hydro(5.0 / 3.0);
        let st = PrimitiveState::new(1.0, [0.0; 3], [0.0; 3], 1.0);
        let lag = lagrangian_step(&strip(vec![st; 20], 0.1), 0.01, &c, &SweepOptions::default()).unwrap();
        for e in 3..=17 {
            assert_eq!(lag.interface_velocity[e], 0.0);
        }
        for i in 3..17 {
            assert_eq!(lag.state(i, &c).rho, 1.0);
            assert!((lag.state(i, &c).p - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_flow_translates_interfaces() {
        let c = Constants::hydro(5.0 / 3.0);
        let st = PrimitiveState::new(1.0, [0.8, 0.0, 0.0], [0.0; 3], 1.0);
        let dt = 0.01;
        let lag = lagrangian_step(&strip(vec![st; 20], 0.1), dt, &c, &SweepOptions::default()).unwrap();
        for e in 3..=17 {
            assert_eq!(lag.displacement[e], 0.8 * dt);
        }
        for i in 3..17 {
            assert_eq!(lag.widths[i], 0.1);
            assert_eq!(lag.state(i, &c).v[0], 0.8);
        }
    }

    #[test]
    fn sod_interface_velocity_near_contact_speed() {
        use ppmlr_reference::{ExactRiemann, GasState};
        let g = 5.0 / 3.0;
        let c = Constants::hydro(g);
        let exact = ExactRiemann::solve(GasState::new(1.0, 0.0, 1.0), GasState::new(0.125, 0.0, 0.1), g);
        let n = 64;
        let states: Vec<_> = (0..n)
            .map(|i| {
                if i < n / 2 {
                    PrimitiveState::new(1.0, [0.0; 3], [0.0; 3], 1.0)
                } else {
                    PrimitiveState::new(0.125, [0.0; 3], [0.0; 3], 0.1)
                }
            })
            .collect();
        let s = strip(states, 1.0 / n as f64);
        let dt = crate::ppm1d::strip_timestep(&s, 0.5, &c).unwrap();
        let lag = lagrangian_step(&s, dt, &c, &SweepOptions::default()).unwrap();
        let u = lag.interface_velocity[n / 2];
        assert!(
            (u - exact.u_star).abs() <= 0.2 * exact.u_star,
            "interface velocity {u} vs contact speed {}",
            exact.u_star
        );
    }
}
