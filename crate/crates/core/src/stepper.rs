//! Three-dimensional time integration over one block.
//!
//! A step is three one-dimensional substeps. Before the substep along an
//! axis, the ghost layers along that axis are filled (from neighbours or
//! physical boundaries); the dipole source terms whose derivatives run
//! along that axis are evaluated from the same data and added after the
//! sweep. Transverse ghost cells are never read.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};
use crate::exchange::Face;
use crate::grid::StretchedGrid;
use crate::physics::{
    add, cons_to_prim, cross, dipole_field, dot, fast_speed, mirror_dipole_field, norm, prim_to_cons, scale, Constants,
    PrimitiveState, Vec3, IMAGE_CENTER,
};
use crate::ppm1d::{sweep_1d, Strip1D, SweepOptions};

/// Radius of the frozen inner core, R_E.
pub const FROZEN_RADIUS: f64 = 3.0;
/// Plane separating the dipole region from the solar wind in the initial state.
pub const INITIAL_MIDPLANE: f64 = 15.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolarWindParams {
    pub rho_sw: f64,
    pub p_sw: f64,
    /// Flow velocity; negative x flows from the sunward face toward the tail.
    pub v_sw: Vec3,
    pub imf: Vec3,
}

impl Default for SolarWindParams {
    fn default() -> Self {
        Self {
            rho_sw: 1.0,
            p_sw: 0.5,
            v_sw: [-2.0, 0.0, 0.0],
            imf: [0.0, 0.0, -0.2],
        }
    }
}

impl SolarWindParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_sw > 0.0 && self.p_sw > 0.0) {
            return Err(Error::Config(format!(
                "solar wind needs rho_sw > 0 and p_sw > 0, got {} and {}",
                self.rho_sw, self.p_sw
            )));
        }
        Ok(())
    }

    /// Solar wind state at a point where the dipole field is `bd`; the
    /// total field there is the IMF.
    pub fn state(&self, bd: Vec3) -> PrimitiveState {
        PrimitiveState::new(
            self.rho_sw,
            self.v_sw,
            [self.imf[0] - bd[0], self.imf[1] - bd[1], self.imf[2] - bd[2]],
            self.p_sw,
        )
    }
}

/// Spherically symmetric plasma inside the dipole region:
/// `q(r) = q_sw + (q_inner - q_sw) * min(1, (r_inner / r)^power)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialProfile {
    pub rho_inner: f64,
    pub p_inner: f64,
    pub r_inner: f64,
    pub power: f64,
}

impl Default for RadialProfile {
    fn default() -> Self {
        Self {
            rho_inner: 5.0,
            p_inner: 1.0,
            r_inner: FROZEN_RADIUS,
            power: 2.0,
        }
    }
}

impl RadialProfile {
    fn weight(&self, r: f64) -> f64 {
        if r <= self.r_inner {
            1.0
        } else {
            (self.r_inner / r).powf(self.power)
        }
    }

    pub fn density(&self, r: f64, sw: &SolarWindParams) -> f64 {
        sw.rho_sw + (self.rho_inner - sw.rho_sw) * self.weight(r)
    }

    pub fn pressure(&self, r: f64, sw: &SolarWindParams) -> f64 {
        sw.p_sw + (self.p_inner - sw.p_sw) * self.weight(r)
    }
}

/// Initial magnetosphere state at `pos` where the dipole field is `bd`.
pub fn magnetosphere_state(
    pos: Vec3,
    bd: Vec3,
    sw: &SolarWindParams,
    profile: &RadialProfile,
    c: &Constants,
) -> PrimitiveState {
    if pos[0] > INITIAL_MIDPLANE {
        return sw.state(bd);
    }
    let r = norm(pos);
    let mirror = mirror_dipole_field(pos, IMAGE_CENTER, c).unwrap_or([0.0; 3]);
    PrimitiveState::new(profile.density(r, sw), [0.0; 3], mirror, profile.pressure(r, sw))
}

/// Boundary treatment of a face of the global domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Boundary {
    Periodic,
    /// Zero-gradient.
    Outflow,
    /// Fixed solar-wind inflow.
    Inflow(SolarWindParams),
}

/// What lies beyond one face of a block.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FaceKind {
    Neighbor(usize),
    Physical(Boundary),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepOptions {
    pub cfl: f64,
    /// Add the dipole source terms.
    pub sources: bool,
    pub sweep: SweepOptions,
}

impl Default for StepOptions {
    fn default() -> Self {
        Self {
            cfl: 0.5,
            sources: true,
            sweep: SweepOptions::default(),
        }
    }
}

/// Sweep axes for a given step counter: XYZ on even steps, ZYX on odd.
pub fn sweep_order(step: u64) -> [usize; 3] {
    if step.is_multiple_of(2) {
        [0, 1, 2]
    } else {
        [2, 1, 0]
    }
}

/// Source densities for one cell: momentum, induction, energy.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Source {
    pub momentum: Vec3,
    pub induction: Vec3,
    pub energy: f64,
}

impl Source {
    fn is_zero(&self) -> bool {
        self.momentum == [0.0; 3] && self.induction == [0.0; 3] && self.energy == 0.0
    }

    fn accumulate(&mut self, o: &Source) {
        self.momentum = add(self.momentum, o.momentum);
        self.induction = add(self.induction, o.induction);
        self.energy += o.energy;
    }
}

/// Second-order central derivative on a nonuniform mesh, from samples at
/// offsets `-hm` and `+hp`.
#[inline]
fn central(fm: f64, f0: f64, fp: f64, hm: f64, hp: f64) -> f64 {
    (hm * hm * (fp - f0) + hp * hp * (f0 - fm)) / (hm * hp * (hm + hp))
}

#[inline]
fn central3(fm: Vec3, f0: Vec3, fp: Vec3, hm: f64, hp: f64) -> Vec3 {
    [
        central(fm[0], f0[0], fp[0], hm, hp),
        central(fm[1], f0[1], fp[1], hm, hp),
        central(fm[2], f0[2], fp[2], hm, hp),
    ]
}

#[inline]
fn unit(a: usize) -> Vec3 {
    let mut e = [0.0; 3];
    e[a] = 1.0;
    e
}

/// Rotate a vector so component 0 lies along `axis`.
#[inline]
fn to_strip(v: Vec3, axis: usize) -> Vec3 {
    [v[axis], v[(axis + 1) % 3], v[(axis + 2) % 3]]
}

#[inline]
fn from_strip(v: Vec3, axis: usize) -> Vec3 {
    let mut out = [0.0; 3];
    out[axis] = v[0];
    out[(axis + 1) % 3] = v[1];
    out[(axis + 2) % 3] = v[2];
    out
}

/// One block of the global grid with its ghost shells.
#[derive(Clone, Debug)]
pub struct BlockState {
    /// Global index of the first interior cell.
    pub lo: [usize; 3],
    /// Interior cell counts.
    pub dims: [usize; 3],
    pub ghost: usize,
    /// Padded states, x fastest.
    pub states: Vec<PrimitiveState>,
    /// Dipole field at padded cell centers.
    pub bd: Vec<Vec3>,
    pub spacings: [Vec<f64>; 3],
    pub centers: [Vec<f64>; 3],
    /// Indexed by [`Face::index`].
    pub faces: [FaceKind; 6],
    frozen: Vec<(usize, PrimitiveState)>,
    pub time: f64,
    pub step: u64,
}

impl BlockState {
    /// Block covering global cells `lo .. lo + dims`, initialised from
    /// `init(position, dipole_field)` in every cell including ghosts.
    pub fn new(
        grid: &StretchedGrid,
        lo: [usize; 3],
        dims: [usize; 3],
        ghost: usize,
        faces: [FaceKind; 6],
        c: &Constants,
        init: impl Fn(Vec3, Vec3) -> PrimitiveState,
    ) -> Result<Self> {
        let gdims = grid.dims();
        for a in 0..3 {
            if dims[a] == 0 || lo[a] + dims[a] > gdims[a] {
                return Err(Error::Grid(format!(
                    "block range {}..{} outside axis {a} with {} cells",
                    lo[a],
                    lo[a] + dims[a],
                    gdims[a]
                )));
            }
        }
        let slice = |v: Vec<f64>, a: usize| v[lo[a]..lo[a] + dims[a] + 2 * ghost].to_vec();
        let spacings: [Vec<f64>; 3] = std::array::from_fn(|a| slice(grid.axis(a).padded_spacings(ghost), a));
        let centers: [Vec<f64>; 3] = std::array::from_fn(|a| slice(grid.axis(a).padded_centers(ghost), a));
        let p = [dims[0] + 2 * ghost, dims[1] + 2 * ghost, dims[2] + 2 * ghost];
        let total = p[0] * p[1] * p[2];
        let dipole_on = c.dipole_moment != [0.0; 3];
        let mut bd = Vec::with_capacity(total);
        let mut states = Vec::with_capacity(total);
        for k in 0..p[2] {
            for j in 0..p[1] {
                for i in 0..p[0] {
                    let pos = [centers[0][i], centers[1][j], centers[2][k]];
                    let b = if dipole_on {
                        dipole_field(pos, c).unwrap_or([0.0; 3])
                    } else {
                        [0.0; 3]
                    };
                    bd.push(b);
                    states.push(init(pos, b));
                }
            }
        }
        Ok(Self {
            lo,
            dims,
            ghost,
            states,
            bd,
            spacings,
            centers,
            faces,
            frozen: Vec::new(),
            time: 0.0,
            step: 0,
        })
    }

    /// A single block covering the whole grid with the given boundaries
    /// (indexed by [`Face::index`]).
    pub fn whole(
        grid: &StretchedGrid,
        ghost: usize,
        boundaries: [Boundary; 6],
        c: &Constants,
        init: impl Fn(Vec3, Vec3) -> PrimitiveState,
    ) -> Result<Self> {
        Self::new(grid, [0; 3], grid.dims(), ghost, boundaries.map(FaceKind::Physical), c, init)
    }

    pub fn padded_dims(&self) -> [usize; 3] {
        self.dims.map(|d| d + 2 * self.ghost)
    }

    /// Flat index of padded cell `(i, j, k)`.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let p = self.padded_dims();
        i + p[0] * (j + p[1] * k)
    }

    /// Flat index of interior cell `(i, j, k)` (block-local, zero based).
    #[inline]
    pub fn interior_index(&self, i: usize, j: usize, k: usize) -> usize {
        let g = self.ghost;
        self.index(i + g, j + g, k + g)
    }

    #[inline]
    fn stride(&self, a: usize) -> usize {
        let p = self.padded_dims();
        match a {
            0 => 1,
            1 => p[0],
            _ => p[0] * p[1],
        }
    }

    pub fn position(&self, i: usize, j: usize, k: usize) -> Vec3 {
        [self.centers[0][i], self.centers[1][j], self.centers[2][k]]
    }

    /// Interior states, x fastest.
    pub fn interior_states(&self) -> Vec<PrimitiveState> {
        let mut out = Vec::with_capacity(self.dims.iter().product());
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    out.push(self.states[self.interior_index(i, j, k)]);
                }
            }
        }
        out
    }

    /// Global index of an interior cell given a padded flat index.
    fn global_cell(&self, flat: usize) -> [usize; 3] {
        let p = self.padded_dims();
        let (i, j, k) = (flat % p[0], (flat / p[0]) % p[1], flat / (p[0] * p[1]));
        let g = self.ghost;
        [
            (self.lo[0] + i).saturating_sub(g),
            (self.lo[1] + j).saturating_sub(g),
            (self.lo[2] + k).saturating_sub(g),
        ]
    }

    /// Freeze every interior cell whose center lies within `radius` of the origin.
    pub fn freeze_core(&mut self, radius: f64) {
        self.frozen.clear();
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    let g = self.ghost;
                    if norm(self.position(i + g, j + g, k + g)) < radius {
                        let idx = self.interior_index(i, j, k);
                        self.frozen.push((idx, self.states[idx]));
                    }
                }
            }
        }
    }

    pub fn frozen_cells(&self) -> usize {
        self.frozen.len()
    }

    fn restore_frozen(&mut self) {
        for &(idx, s) in &self.frozen {
            self.states[idx] = s;
        }
    }

    /// `cfl * min over interior cells and axes of dx / (|v| + c_f)`.
    pub fn compute_dt(&self, cfl: f64, c: &Constants) -> Result<f64> {
        let g = self.ghost;
        let mut dt = f64::INFINITY;
        for k in g..g + self.dims[2] {
            for j in g..g + self.dims[1] {
                for i in g..g + self.dims[0] {
                    let idx = self.index(i, j, k);
                    let s = &self.states[idx];
                    let d = [self.spacings[0][i], self.spacings[1][j], self.spacings[2][k]];
                    for a in 0..3 {
                        let speed = s.v[a].abs() + fast_speed(s, self.bd[idx], a, c);
                        if !speed.is_finite() {
                            return Err(Error::NonFiniteSpeed(Location::Cell(self.global_cell(idx))));
                        }
                        dt = dt.min(d[a] / speed);
                    }
                }
            }
        }
        Ok(cfl * dt)
    }

    /// Visit the padded flat index of every cell on the transverse interior
    /// of the plane at position `pos` along `axis`.
    fn for_plane(&self, axis: usize, pos: usize, mut f: impl FnMut(usize)) {
        let g = self.ghost;
        let (t1, t2) = ((axis + 1) % 3, (axis + 2) % 3);
        for b in g..g + self.dims[t2] {
            for a in g..g + self.dims[t1] {
                let mut ijk = [0; 3];
                ijk[axis] = pos;
                ijk[t1] = a;
                ijk[t2] = b;
                f(self.index(ijk[0], ijk[1], ijk[2]));
            }
        }
    }

    /// Fill the ghost layers along `axis` on faces with a physical boundary.
    pub fn fill_physical(&mut self, axis: usize) {
        for high in [false, true] {
            if let FaceKind::Physical(b) = self.faces[Face::new(axis, high).index()] {
                self.fill_face(axis, high, b);
            }
        }
    }

    fn fill_face(&mut self, axis: usize, high: bool, boundary: Boundary) {
        let (g, n) = (self.ghost, self.dims[axis]);
        let s = self.stride(axis);
        for layer in 0..g {
            let pos = if high { g + n + layer } else { g - 1 - layer };
            let mut cells = Vec::new();
            self.for_plane(axis, pos, |idx| cells.push(idx));
            for idx in cells {
                self.states[idx] = match boundary {
                    Boundary::Outflow => {
                        let edge = if high { idx - (layer + 1) * s } else { idx + (layer + 1) * s };
                        self.states[edge]
                    }
                    Boundary::Periodic => {
                        if high {
                            self.states[idx - n * s]
                        } else {
                            self.states[idx + n * s]
                        }
                    }
                    Boundary::Inflow(sw) => sw.state(self.bd[idx]),
                };
            }
        }
    }

    /// Fill every physical ghost layer along all three axes.
    pub fn fill_all_physical(&mut self) {
        for a in 0..3 {
            self.fill_physical(a);
        }
    }

    /// Source terms whose derivatives run along `axis`, for every interior
    /// cell (x fastest). Needs the ghost layers along `axis`.
    pub fn axis_sources(&self, axis: usize) -> Vec<Source> {
        let g = self.ghost;
        let s = self.stride(axis);
        let e = unit(axis);
        let mut out = Vec::with_capacity(self.dims.iter().product());
        for k in g..g + self.dims[2] {
            for j in g..g + self.dims[1] {
                for i in g..g + self.dims[0] {
                    let idx = self.index(i, j, k);
                    let pos = [i, j, k][axis];
                    let c = &self.centers[axis];
                    let (hm, hp) = (c[pos] - c[pos - 1], c[pos + 1] - c[pos]);
                    let (sm, s0, sp) = (&self.states[idx - s], &self.states[idx], &self.states[idx + s]);
                    let (bm, b0, bp) = (self.bd[idx - s], self.bd[idx], self.bd[idx + s]);
                    let db = central3(sm.bprime, s0.bprime, sp.bprime, hm, hp);
                    let dw = central3(cross(sm.v, bm), cross(s0.v, b0), cross(sp.v, bp), hm, hp);
                    let momentum = cross(cross(e, db), b0);
                    let curl_vb = cross(e, dw);
                    let induction = add(curl_vb, scale(s0.v, -db[axis]));
                    out.push(Source {
                        momentum,
                        induction,
                        energy: dot(s0.v, momentum) + dot(s0.bprime, curl_vb),
                    });
                }
            }
        }
        out
    }

    /// Add `dt * sources` to the interior (sources ordered x fastest).
    pub fn add_sources(&mut self, sources: &[Source], dt: f64, c: &Constants) -> Result<()> {
        let mut n = 0;
        for k in 0..self.dims[2] {
            for j in 0..self.dims[1] {
                for i in 0..self.dims[0] {
                    let src = &sources[n];
                    n += 1;
                    if src.is_zero() {
                        continue;
                    }
                    let idx = self.interior_index(i, j, k);
                    let mut u = prim_to_cons(&self.states[idx], c);
                    u.mom = add(u.mom, scale(src.momentum, dt));
                    u.bprime = add(u.bprime, scale(src.induction, dt));
                    u.energy += dt * src.energy;
                    self.states[idx] = cons_to_prim(&u, c).map_err(|e| match e {
                        Error::Unphysical { rho, pressure, .. } => Error::Unphysical {
                            location: Location::Cell([self.lo[0] + i, self.lo[1] + j, self.lo[2] + k]),
                            rho,
                            pressure,
                        },
                        other => other,
                    })?;
                }
            }
        }
        Ok(())
    }

    /// Full source update over all three axes. Ghost layers along every
    /// axis must be current.
    pub fn apply_sources(&mut self, dt: f64, c: &Constants) -> Result<()> {
        let mut total = self.axis_sources(0);
        for a in 1..3 {
            for (t, s) in total.iter_mut().zip(self.axis_sources(a)) {
                t.accumulate(&s);
            }
        }
        self.add_sources(&total, dt, c)
    }

    /// One-dimensional sweeps along `axis` through every interior strip.
    pub fn sweep_axis(&mut self, axis: usize, dt: f64, c: &Constants, opts: &SweepOptions) -> Result<()> {
        let g = self.ghost;
        let s = self.stride(axis);
        let len = self.dims[axis] + 2 * g;
        let mut starts = Vec::new();
        self.for_plane(axis, 0, |idx| starts.push(idx));
        for start in starts {
            let states = (0..len)
                .map(|m| {
                    let q = &self.states[start + m * s];
                    PrimitiveState::new(q.rho, to_strip(q.v, axis), to_strip(q.bprime, axis), q.p)
                })
                .collect();
            let bd = (0..len).map(|m| to_strip(self.bd[start + m * s], axis)).collect();
            let strip = Strip1D::new(self.spacings[axis].clone(), states, bd, g)?;
            let out = sweep_1d(&strip, dt, c, opts).map_err(|e| e.relocate(|z| self.global_cell(start + z * s)))?;
            for (m, q) in out.into_iter().enumerate() {
                self.states[start + (g + m) * s] =
                    PrimitiveState::new(q.rho, from_strip(q.v, axis), from_strip(q.bprime, axis), q.p);
            }
        }
        Ok(())
    }

    /// Sweep along `axis` and add that axis's share of the sources. The
    /// ghost layers along `axis` must already be filled.
    pub fn substep(&mut self, axis: usize, dt: f64, c: &Constants, opts: &StepOptions) -> Result<()> {
        let sources = opts.sources.then(|| self.axis_sources(axis));
        self.sweep_axis(axis, dt, c, &opts.sweep)?;
        if let Some(src) = sources {
            self.add_sources(&src, dt, c)?;
        }
        Ok(())
    }

    /// Close a step: restore frozen cells and advance the clock.
    pub fn finish_step(&mut self, dt: f64) {
        self.restore_frozen();
        self.time += dt;
        self.step += 1;
    }

    /// Advance a block with no neighbours by `dt`.
    pub fn step(&mut self, dt: f64, c: &Constants, opts: &StepOptions) -> Result<()> {
        if self.faces.iter().any(|f| matches!(f, FaceKind::Neighbor(_))) {
            return Err(Error::Halo("block has neighbours; step it through a cluster".into()));
        }
        for axis in sweep_order(self.step) {
            self.fill_physical(axis);
            self.substep(axis, dt, c, opts)?;
        }
        self.finish_step(dt);
        Ok(())
    }
}

/// Magnetosphere block: dipole-region plasma for x <= 15 R_E, solar wind
/// beyond, inner core frozen.
pub fn init_magnetosphere(
    grid: &StretchedGrid,
    lo: [usize; 3],
    dims: [usize; 3],
    ghost: usize,
    faces: [FaceKind; 6],
    sw: &SolarWindParams,
    profile: &RadialProfile,
    c: &Constants,
) -> Result<BlockState> {
    sw.validate()?;
    let mut block = BlockState::new(grid, lo, dims, ghost, faces, c, |pos, bd| {
        magnetosphere_state(pos, bd, sw, profile, c)
    })?;
    block.freeze_core(FROZEN_RADIUS);
    Ok(block)
}

/// Outer boundaries of the magnetosphere box: solar-wind inflow on the
/// sunward (+x) face, outflow elsewhere.
pub fn magnetosphere_boundaries(sw: &SolarWindParams) -> [Boundary; 6] {
    let mut b = [Boundary::Outflow; 6];
    b[Face::XHi.index()] = Boundary::Inflow(*sw);
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ppm1d::{strip_timestep, GHOST};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn periodic() -> [Boundary; 6] {
        [Boundary::Periodic; 6]
    }

    fn unit_box(n: usize) -> StretchedGrid {
        StretchedGrid::uniform([0.0; 3], [1.0; 3], [n; 3]).unwrap()
    }

    #[test]
    fn quiescent_dt() {
        // c_f = 1 with gamma p / rho = 1
        let c = Constants::hydro(1.0 + 1e-12);
        let grid = StretchedGrid::uniform([0.0; 3], [4.0; 3], [10; 3]).unwrap();
        let st = PrimitiveState::new(1.0, [0.0; 3], [0.0; 3], 1.0 / (1.0 + 1e-12));
        let b = BlockState::whole(&grid, GHOST, periodic(), &c, |_, _| st).unwrap();
        assert!((b.compute_dt(0.5, &c).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn dt_matches_scan_and_is_monotone_in_speed() {
        let c = Constants::nondimensional(1.0);
        let grid = StretchedGrid::uniform([1.0; 3], [3.0; 3], [6, 5, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut b = BlockState::whole(&grid, GHOST, periodic(), &c, |_, _| {
            PrimitiveState::new(1.0, [0.0; 3], [0.0; 3], 1.0)
        })
        .unwrap();
        for s in b.states.iter_mut() {
            *s = PrimitiveState::new(
                rng.gen_range(0.5..2.0),
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)],
                rng.gen_range(0.5..2.0),
            );
        }
        let mut scan = f64::INFINITY;
        for k in 0..4 {
            for j in 0..5 {
                for i in 0..6 {
                    let idx = b.interior_index(i, j, k);
                    let s = b.states[idx];
                    let d = [grid.x.spacings[i], grid.y.spacings[j], grid.z.spacings[k]];
                    for a in 0..3 {
                        scan = scan.min(d[a] / (s.v[a].abs() + fast_speed(&s, b.bd[idx], a, &c)));
                    }
                }
            }
        }
        let dt = b.compute_dt(0.4, &c).unwrap();
        assert!((dt - 0.4 * scan).abs() <= 1e-15 * dt);
        for s in b.states.iter_mut() {
            s.v = scale(s.v, 2.0);
        }
        assert!(b.compute_dt(0.4, &c).unwrap() <= dt);
    }

    #[test]
    fn uniform_state_is_fixed_point() {
        let c = Constants::hydro(5.0 / 3.0);
        let st = PrimitiveState::new(1.2, [0.3, -0.4, 0.5], [0.0; 3], 0.8);
        let mut b = BlockState::whole(&unit_box(8), GHOST, periodic(), &c, |_, _| st).unwrap();
        let opts = StepOptions::default();
        for _ in 0..10 {
            let dt = b.compute_dt(0.5, &c).unwrap();
            b.step(dt, &c, &opts).unwrap();
        }
        for s in b.interior_states() {
            assert!((s.rho - st.rho).abs() < 1e-13 && (s.p - st.p).abs() < 1e-13);
            for a in 0..3 {
                assert!((s.v[a] - st.v[a]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn embedded_x_problem_matches_strip_kernel() {
        let c = Constants::hydro(1.4);
        let n = 32;
        let init = |x: f64| {
            if x < 0.5 {
                PrimitiveState::new(1.0, [0.0; 3], [0.0; 3], 1.0)
            } else {
                PrimitiveState::new(0.125, [0.0; 3], [0.0; 3], 0.1)
            }
        };
        let grid = StretchedGrid::uniform([0.0; 3], [1.0; 3], [n, 4, 4]).unwrap();
        let mut bounds = [Boundary::Periodic; 6];
        bounds[0] = Boundary::Outflow;
        bounds[1] = Boundary::Outflow;
        let mut block = BlockState::whole(&grid, GHOST, bounds, &c, |p, _| init(p[0])).unwrap();
        let mut tube = crate::tube::Tube::riemann(0.0, 1.0, n, 0.5, init(0.0), init(1.0)).unwrap();
        let opts = StepOptions {
            sources: false,
            ..StepOptions::default()
        };
        for _ in 0..6 {
            let dt = strip_timestep(&tube.strip, 0.5, &c).unwrap();
            tube.step(dt, &c, &opts.sweep).unwrap();
            block.step(dt, &c, &opts).unwrap();
        }
        let line: Vec<_> = (0..n).map(|i| block.states[block.interior_index(i, 2, 1)]).collect();
        for (a, b) in line.iter().zip(tube.interior()) {
            assert!((a.rho - b.rho).abs() < 1e-13 && (a.p - b.p).abs() < 1e-13 && (a.v[0] - b.v[0]).abs() < 1e-13);
        }
    }

    #[test]
    fn alternating_order_equals_two_strip_sweeps() {
        let c = Constants::hydro(5.0 / 3.0);
        let grid = StretchedGrid::uniform([0.0; 3], [1.0; 3], [16, 3, 3]).unwrap();
        let init = |x: f64| {
            PrimitiveState::new(1.0 + 0.3 * (std::f64::consts::TAU * x).sin(), [0.4, 0.0, 0.0], [0.0; 3], 1.0)
        };
        let mut block = BlockState::whole(&grid, GHOST, periodic(), &c, |p, _| init(p[0])).unwrap();
        let mut tube = crate::tube::Tube::new(0.0, 1.0, 16, crate::tube::TubeBoundary::Periodic, init).unwrap();
        let opts = StepOptions::default();
        for _ in 0..2 {
            block.step(0.01, &c, &opts).unwrap();
            tube.step(0.01, &c, &opts.sweep).unwrap();
        }
        for i in 0..16 {
            assert_eq!(block.states[block.interior_index(i, 1, 1)], tube.interior()[i]);
        }
    }

    #[test]
    fn outflow_ghost_copies_edge_and_inflow_is_solar_wind() {
        let c = Constants::nondimensional(10.0);
        let sw = SolarWindParams::default();
        let grid = StretchedGrid::uniform([-20.0, -10.0, -10.0], [30.0, 10.0, 10.0], [10, 4, 4]).unwrap();
        let mut b = BlockState::whole(&grid, GHOST, magnetosphere_boundaries(&sw), &c, |pos, bd| {
            magnetosphere_state(pos, bd, &sw, &RadialProfile::default(), &c)
        })
        .unwrap();
        for s in b.states.iter_mut() {
            s.rho = 7.0;
        }
        let edge = b.interior_index(0, 1, 2);
        b.states[edge].rho = 3.0;
        b.fill_all_physical();
        let g = GHOST;
        for layer in 0..g {
            assert_eq!(b.states[b.index(layer, g + 1, g + 2)], b.states[edge]);
            let idx = b.index(g + 10 + layer, g + 1, g + 2);
            assert_eq!(b.states[idx], sw.state(b.bd[idx]));
            let total = add(b.states[idx].bprime, b.bd[idx]);
            assert!(norm(crate::physics::sub(total, sw.imf)) < 1e-12);
        }
    }

    #[test]
    fn initial_magnetosphere() {
        let c = Constants::nondimensional(30.0);
        let sw = SolarWindParams::default();
        let prof = RadialProfile::default();
        let at20 = [20.0, 0.0, 0.0];
        let bd = dipole_field(at20, &c).unwrap();
        assert_eq!(magnetosphere_state(at20, bd, &sw, &prof, &c), sw.state(bd));
        // just inside the midplane the normal component of the total field
        // matches the solar-wind side up to the IMF
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = [15.0, rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)];
            let bd = dipole_field(p, &c).unwrap();
            let inside = magnetosphere_state(p, bd, &sw, &prof, &c);
            assert!((inside.bprime[0] + bd[0]).abs() <= 1e-12 * norm(bd).max(1e-300));
        }
        let grid = StretchedGrid::uniform([-12.0, -8.0, -8.0], [20.0, 8.0, 8.0], [16, 8, 8]).unwrap();
        let faces = magnetosphere_boundaries(&sw).map(FaceKind::Physical);
        let b = init_magnetosphere(&grid, [0; 3], grid.dims(), GHOST, faces, &sw, &prof, &c).unwrap();
        assert!(b.states.iter().all(|s| s.rho > 0.0 && s.p > 0.0));
        assert!(b.frozen_cells() > 0);
    }

    #[test]
    fn frozen_core_is_bitwise_unchanged() {
        let c = Constants::nondimensional(10.0);
        let sw = SolarWindParams::default();
        let prof = RadialProfile::default();
        let grid = StretchedGrid::uniform([-8.0; 3], [8.0; 3], [16; 3]).unwrap();
        let faces = magnetosphere_boundaries(&sw).map(FaceKind::Physical);
        let mut b = init_magnetosphere(&grid, [0; 3], grid.dims(), GHOST, faces, &sw, &prof, &c).unwrap();
        // cell centered at r ~ 2.5 (center (1.5, 1.5, 1.5) has r ~ 2.6)
        let idx = b.interior_index(9, 9, 9);
        assert!(norm(b.position(9 + GHOST, 9 + GHOST, 9 + GHOST)) < 3.0);
        let before = b.states[idx];
        let opts = StepOptions {
            sweep: SweepOptions {
                pressure_floor: Some(1e-6),
                ..SweepOptions::default()
            },
            ..StepOptions::default()
        };
        for _ in 0..10 {
            let dt = b.compute_dt(0.4, &c).unwrap();
            b.step(dt, &c, &opts).unwrap();
        }
        assert_eq!(b.states[idx], before);
    }

    #[test]
    fn sources_vanish_without_dipole_or_divergence() {
        let c = Constants::hydro(5.0 / 3.0);
        let grid = unit_box(6);
        let mut b = BlockState::whole(&grid, GHOST, periodic(), &c, |p, _| {
            // divergence-free B' varying across the field direction
            PrimitiveState::new(1.0, [p[1], 0.2, -0.1], [0.0, 0.1 * p[0], 0.3], 1.0)
        })
        .unwrap();
        b.fill_all_physical();
        for a in 0..3 {
            for s in b.axis_sources(a) {
                assert!(norm(s.momentum) < 1e-14 && norm(s.induction) < 1e-14 && s.energy.abs() < 1e-14);
            }
        }
        let c2 = Constants::nondimensional(5.0);
        let grid = StretchedGrid::uniform([2.0; 3], [4.0; 3], [5; 3]).unwrap();
        let mut b = BlockState::whole(&grid, GHOST, periodic(), &c2, |_, _| {
            PrimitiveState::new(1.0, [0.0; 3], [0.3, -0.2, 0.1], 1.0)
        })
        .unwrap();
        b.fill_all_physical();
        for a in 0..3 {
            for s in b.axis_sources(a) {
                assert_eq!(s, Source::default());
            }
        }
    }

    /// Analytic derivative d B_d,i / d x_j of a point dipole.
    fn dipole_gradient(r: Vec3, m: Vec3, mu0: f64) -> [[f64; 3]; 3] {
        let k = mu0 / (4.0 * std::f64::consts::PI);
        let rr = norm(r);
        let (r5, r7) = (rr.powi(5), rr.powi(7));
        let md = dot(m, r);
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let delta = if i == j { 1.0 } else { 0.0 };
                g[i][j] = k * (3.0 * (m[j] * r[i] + md * delta + m[i] * r[j]) / r5 - 15.0 * md * r[i] * r[j] / r7);
            }
        }
        g
    }

    #[test]
    fn induction_source_matches_dipole_gradient() {
        let c = Constants::nondimensional(2.0);
        let v = [0.7, -0.3, 0.4];
        let n = 24;
        let grid = StretchedGrid::uniform([3.0, 2.0, 1.5], [5.0, 4.0, 3.5], [n; 3]).unwrap();
        let mut b = BlockState::whole(&grid, GHOST, [Boundary::Outflow; 6], &c, |_, _| {
            PrimitiveState::new(1.0, v, [0.0; 3], 1.0)
        })
        .unwrap();
        b.fill_all_physical();
        let mut total = b.axis_sources(0);
        for a in 1..3 {
            for (t, s) in total.iter_mut().zip(b.axis_sources(a)) {
                t.accumulate(&s);
            }
        }
        let mut worst: f64 = 0.0;
        let mut n_cell = 0;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let src = total[n_cell];
                    n_cell += 1;
                    let pos = b.position(i + GHOST, j + GHOST, k + GHOST);
                    let grad = dipole_gradient(pos, c.dipole_moment, c.mu0);
                    // -(v . grad) B_d
                    for comp in 0..3 {
                        let expect = -(0..3).map(|j| v[j] * grad[comp][j]).sum::<f64>();
                        worst = worst.max((src.induction[comp] - expect).abs());
                    }
                    assert_eq!(src.momentum, [0.0; 3]);
                }
            }
        }
        let scale_b = norm(dipole_field([3.0, 2.0, 1.5], &c).unwrap());
        assert!(worst < 5e-3 * scale_b, "worst {worst} vs field scale {scale_b}");
    }
}
