//! Stretched Cartesian mesh.
//!
//! Each axis has a uniform core of spacing `d_uniform` and geometrically
//! stretched cells on either side. Coordinates are in Earth radii.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual tolerance for the geometric-series closure, in R_E.
const CLOSURE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub uniform_lo: f64,
    pub uniform_hi: f64,
    pub d_uniform: f64,
    pub target_cells: usize,
    pub nominal_ratio: f64,
}

impl AxisSpec {
    /// An axis made only of uniform cells.
    pub fn uniform(min: f64, max: f64, cells: usize) -> Self {
        Self {
            min,
            max,
            uniform_lo: min,
            uniform_hi: max,
            d_uniform: (max - min) / cells as f64,
            target_cells: cells,
            nominal_ratio: 1.05,
        }
    }

    /// Sun-Earth axis of the magnetosphere grid: [-100, 30] R_E, 156 cells.
    pub fn magnetosphere_x() -> Self {
        Self {
            min: -100.0,
            max: 30.0,
            uniform_lo: -10.0,
            uniform_hi: 10.0,
            d_uniform: 0.4,
            target_cells: 156,
            nominal_ratio: 1.05,
        }
    }

    /// Dawn-dusk or north-south axis: [-100, 100] R_E, 150 cells.
    pub fn magnetosphere_yz() -> Self {
        Self {
            min: -100.0,
            max: 100.0,
            uniform_lo: -10.0,
            uniform_hi: 10.0,
            d_uniform: 0.4,
            target_cells: 150,
            nominal_ratio: 1.05,
        }
    }
}

/// Solved stretching on one side of the uniform core.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SideStretch {
    pub cells: usize,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub edges: Vec<f64>,
    pub centers: Vec<f64>,
    pub spacings: Vec<f64>,
    pub uniform_cells: usize,
    pub lower: SideStretch,
    pub upper: SideStretch,
}

impl Axis {
    pub fn len(&self) -> usize {
        self.spacings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spacings.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.edges[0]
    }

    pub fn max(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    /// Index of the cell containing `q`. Interior edges belong to the lower cell.
    pub fn locate(&self, q: f64) -> Result<usize> {
        if !(q >= self.min() && q <= self.max()) {
            return Err(Error::OutOfRange {
                value: q,
                min: self.min(),
                max: self.max(),
            });
        }
        // first edge index with edges[i] >= q
        let i = self.edges.partition_point(|&e| e < q);
        Ok(i.saturating_sub(1).min(self.len() - 1))
    }

    /// Spacings padded with `ghost` cells each side, replicating the
    /// boundary spacing outward.
    pub fn padded_spacings(&self, ghost: usize) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n + 2 * ghost);
        out.extend(std::iter::repeat_n(self.spacings[0], ghost));
        out.extend_from_slice(&self.spacings);
        out.extend(std::iter::repeat_n(self.spacings[n - 1], ghost));
        out
    }

    /// Cell centers padded consistently with [`Axis::padded_spacings`].
    pub fn padded_centers(&self, ghost: usize) -> Vec<f64> {
        let n = self.len();
        let (d0, d1) = (self.spacings[0], self.spacings[n - 1]);
        let mut out = Vec::with_capacity(n + 2 * ghost);
        for g in (1..=ghost).rev() {
            out.push(self.centers[0] - g as f64 * d0);
        }
        out.extend_from_slice(&self.centers);
        for g in 1..=ghost {
            out.push(self.centers[n - 1] + g as f64 * d1);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StretchedGrid {
    pub x: Axis,
    pub y: Axis,
    pub z: Axis,
}

impl StretchedGrid {
    pub fn new(x: Axis, y: Axis, z: Axis) -> Self {
        Self { x, y, z }
    }

    pub fn from_specs(specs: &[AxisSpec; 3]) -> Result<Self> {
        Ok(Self::new(
            build_axis(&specs[0])?,
            build_axis(&specs[1])?,
            build_axis(&specs[2])?,
        ))
    }

    /// Uniform box grid.
    pub fn uniform(lo: [f64; 3], hi: [f64; 3], cells: [usize; 3]) -> Result<Self> {
        Self::from_specs(&[
            AxisSpec::uniform(lo[0], hi[0], cells[0]),
            AxisSpec::uniform(lo[1], hi[1], cells[1]),
            AxisSpec::uniform(lo[2], hi[2], cells[2]),
        ])
    }

    pub fn axis(&self, a: usize) -> &Axis {
        match a {
            0 => &self.x,
            1 => &self.y,
            2 => &self.z,
            _ => panic!("axis index {a} out of range"),
        }
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.x.len(), self.y.len(), self.z.len()]
    }

    pub fn cell_count(&self) -> usize {
        self.dims().iter().product()
    }

    pub fn min_spacing(&self) -> f64 {
        [&self.x, &self.y, &self.z]
            .iter()
            .flat_map(|a| a.spacings.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }
}

/// The 156 x 150 x 150 magnetosphere grid.
pub fn build_default_grid() -> StretchedGrid {
    let yz = AxisSpec::magnetosphere_yz();
    StretchedGrid::from_specs(&[AxisSpec::magnetosphere_x(), yz, yz])
        .expect("default magnetosphere grid specs are valid")
}

/// Build one axis from its spec.
///
/// Cells left after the uniform core are split between the two stretched
/// sides in proportion to the number of cells each side would need at the
/// nominal ratio; each side's ratio is then re-solved so that the series
/// closes exactly on the domain boundary.
pub fn build_axis(spec: &AxisSpec) -> Result<Axis> {
    check_spec(spec)?;
    let d = spec.d_uniform;
    let core = (spec.uniform_hi - spec.uniform_lo) / d;
    let n_uniform = core.round() as usize;
    if (core - n_uniform as f64).abs() > 1e-9 * core.max(1.0) {
        return Err(Error::Grid(format!(
            "uniform region [{}, {}] is not a whole number of {} cells",
            spec.uniform_lo, spec.uniform_hi, d
        )));
    }
    if spec.target_cells < n_uniform {
        return Err(Error::Grid(format!(
            "target_cells {} is below the {} uniform cells",
            spec.target_cells, n_uniform
        )));
    }

    let lower_extent = spec.uniform_lo - spec.min;
    let upper_extent = spec.max - spec.uniform_hi;
    let remaining = spec.target_cells - n_uniform;
    let (n_lower, n_upper) = allocate(remaining, lower_extent, upper_extent, d, spec.nominal_ratio)?;

    let lower = SideStretch {
        cells: n_lower,
        ratio: solve_side("lower", n_lower, lower_extent, d, spec.nominal_ratio)?,
    };
    let upper = SideStretch {
        cells: n_upper,
        ratio: solve_side("upper", n_upper, upper_extent, d, spec.nominal_ratio)?,
    };

    let mut edges = Vec::with_capacity(spec.target_cells + 1);
    // lower side, built outward from the core then reversed
    let mut outward = Vec::with_capacity(n_lower);
    let mut width = d;
    let mut pos = spec.uniform_lo;
    for _ in 0..n_lower {
        width *= lower.ratio;
        pos -= width;
        outward.push(pos);
    }
    if let Some(last) = outward.last_mut() {
        *last = spec.min;
    }
    edges.extend(outward.iter().rev());
    for i in 0..n_uniform {
        edges.push(spec.uniform_lo + i as f64 * d);
    }
    edges.push(spec.uniform_hi);
    let mut width = d;
    let mut pos = spec.uniform_hi;
    for _ in 0..n_upper {
        width *= upper.ratio;
        pos += width;
        edges.push(pos);
    }
    if n_upper > 0 {
        *edges.last_mut().unwrap() = spec.max;
    }

    let spacings: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();
    let centers = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    if spacings.iter().any(|&s| !(s > 0.0)) {
        return Err(Error::Grid("generated edges are not strictly increasing".into()));
    }
    Ok(Axis {
        edges,
        centers,
        spacings,
        uniform_cells: n_uniform,
        lower,
        upper,
    })
}

fn check_spec(s: &AxisSpec) -> Result<()> {
    let ordered = s.min <= s.uniform_lo && s.uniform_lo < s.uniform_hi && s.uniform_hi <= s.max;
    if !ordered || !s.min.is_finite() || !s.max.is_finite() {
        return Err(Error::Grid(format!(
            "need min <= uniform_lo < uniform_hi <= max, got {} {} {} {}",
            s.min, s.uniform_lo, s.uniform_hi, s.max
        )));
    }
    if !(s.d_uniform > 0.0) {
        return Err(Error::Grid("d_uniform must be positive".into()));
    }
    if !(s.nominal_ratio > 1.0) {
        return Err(Error::Grid("nominal_ratio must exceed 1".into()));
    }
    Ok(())
}

/// Cells needed to cover `extent` starting from spacing `d` at ratio `r`.
fn cells_at_ratio(extent: f64, d: f64, r: f64) -> f64 {
    (1.0 + extent * (r - 1.0) / d).ln() / r.ln()
}

fn allocate(remaining: usize, lower: f64, upper: f64, d: f64, r: f64) -> Result<(usize, usize)> {
    match (lower > 0.0, upper > 0.0) {
        (false, false) if remaining == 0 => Ok((0, 0)),
        (false, false) => Err(Error::Grid(format!(
            "{remaining} cells left over but the axis has no stretched region"
        ))),
        (true, false) => Ok((remaining, 0)),
        (false, true) => Ok((0, remaining)),
        (true, true) => {
            let wl = cells_at_ratio(lower, d, r);
            let wu = cells_at_ratio(upper, d, r);
            let n_lower = (remaining as f64 * wl / (wl + wu)).round() as usize;
            Ok((n_lower, remaining - n_lower))
        }
    }
}

/// Sum of `n` stretched cells, the first of width `d * r`.
fn series(d: f64, r: f64, n: usize) -> f64 {
    let n = n as i32;
    if r == 1.0 {
        d * n as f64
    } else {
        d * r * (r.powi(n) - 1.0) / (r - 1.0)
    }
}

fn solve_side(name: &str, n: usize, extent: f64, d: f64, nominal: f64) -> Result<f64> {
    if n == 0 {
        return if extent > 0.0 {
            Err(Error::Grid(format!("{name} side has extent {extent} but no cells")))
        } else {
            Ok(nominal)
        };
    }
    let f = |r: f64| series(d, r, n) - extent;
    let unsatisfiable = || {
        Error::Grid(format!(
            "{name} side: no ratio in (1, 2] closes {extent} R_E with {n} cells from spacing {d}"
        ))
    };
    let at_one = f(1.0);
    if at_one.abs() < CLOSURE_TOL {
        return Ok(1.0);
    }
    if at_one > 0.0 || f(2.0) < 0.0 {
        return Err(unsatisfiable());
    }
    let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v.abs() < CLOSURE_TOL || hi - lo <= f64::EPSILON * mid {
            break;
        }
        if v > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if !(1.0..=nominal + 0.05).contains(&mid) {
        return Err(Error::Grid(format!(
            "{name} side: solved ratio {mid} is outside [1, {}]",
            nominal + 0.05
        )));
    }
    Ok(mid)
}
