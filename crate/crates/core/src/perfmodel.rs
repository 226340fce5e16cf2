//! Bandwidth-bound performance model.
//!
//! The solver is memory bound, so the best a device can do over the host
//! is the ratio of their memory bandwidths. Blocks too small to keep the
//! device busy lose efficiency linearly below a workload floor.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::decomp::{exchanged_bytes, tde_units, total_ranks, PartitionConfig, BYTES_PER_CELL};
use crate::error::{Error, Result};
use crate::grid::StretchedGrid;

/// Cells per block needed for full modeled efficiency.
pub const WORKLOAD_FLOOR: usize = 64 * 64 * 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BandwidthSpec {
    /// Device memory bandwidth, bytes/s.
    pub device_bw: f64,
    /// Host memory bandwidth, bytes/s.
    pub host_bw: f64,
}

impl BandwidthSpec {
    /// K20X-class device against a two-socket host.
    pub const TITAN: BandwidthSpec = BandwidthSpec {
        device_bw: 250e9,
        host_bw: 51.2e9,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.device_bw > 0.0 && self.host_bw > 0.0) {
            return Err(Error::Config(format!(
                "bandwidths must be positive, got device {} and host {}",
                self.device_bw, self.host_bw
            )));
        }
        Ok(())
    }
}

impl Default for BandwidthSpec {
    fn default() -> Self {
        Self::TITAN
    }
}

/// Maximum achievable speedup: device over host bandwidth.
pub fn mas(spec: &BandwidthSpec) -> f64 {
    spec.device_bw / spec.host_bw
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepTiming {
    pub rank: usize,
    pub step: u64,
    pub compute_seconds: f64,
    pub transfer_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimingSummary {
    pub records: usize,
    pub mean_compute: f64,
    pub mean_transfer: f64,
}

/// Mean compute and transfer time per rank-step.
pub fn aggregate(timings: &[StepTiming]) -> Result<TimingSummary> {
    if timings.is_empty() {
        return Err(Error::Empty("timing records"));
    }
    let n = timings.len() as f64;
    let (c, t) = timings
        .iter()
        .fold((0.0, 0.0), |(c, t), r| (c + r.compute_seconds, t + r.transfer_seconds));
    Ok(TimingSummary {
        records: timings.len(),
        mean_compute: c / n,
        mean_transfer: t / n,
    })
}

/// Efficiency multiplier for a block of `cells`: 1 at or above `floor`,
/// falling linearly to 0 below it.
pub fn workload_factor(cells: usize, floor: usize) -> f64 {
    if floor == 0 || cells >= floor {
        1.0
    } else {
        cells as f64 / floor as f64
    }
}

/// Modeled speedup over the host: `min(mas * efficiency, mas)`, scaled
/// down when blocks fall below the workload floor.
pub fn predict_speedup(config: &PartitionConfig, grid: &StretchedGrid, spec: &BandwidthSpec, efficiency: f64) -> f64 {
    predict_speedup_with_floor(config, grid, spec, efficiency, WORKLOAD_FLOOR)
}

pub fn predict_speedup_with_floor(
    config: &PartitionConfig,
    grid: &StretchedGrid,
    spec: &BandwidthSpec,
    efficiency: f64,
    floor: usize,
) -> f64 {
    let m = mas(spec);
    let cells = grid.cell_count() / config.blocks().max(1);
    (m * efficiency).min(m) * workload_factor(cells, floor)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub config: String,
    pub ranks: usize,
    pub tde_units: usize,
    pub bytes_per_step: u64,
    pub mean_compute_s: f64,
    pub mean_transfer_s: f64,
    pub predicted_speedup: f64,
}

impl ReportRow {
    pub fn new(
        config: &PartitionConfig,
        grid: &StretchedGrid,
        ghost: usize,
        summary: Option<&TimingSummary>,
        spec: &BandwidthSpec,
        efficiency: f64,
    ) -> Self {
        Self {
            config: format!("{}x{}x{}", config.nx, config.ny, config.nz),
            ranks: total_ranks(config),
            tde_units: tde_units(config),
            bytes_per_step: exchanged_bytes(config, grid, ghost, BYTES_PER_CELL),
            mean_compute_s: summary.map_or(f64::NAN, |s| s.mean_compute),
            mean_transfer_s: summary.map_or(f64::NAN, |s| s.mean_transfer),
            predicted_speedup: predict_speedup(config, grid, spec, efficiency),
        }
    }
}

/// CSV with columns config, ranks, tde_units, bytes_per_step,
/// mean_compute_s, mean_transfer_s, predicted_speedup.
pub fn write_report<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decomp::REFERENCE_CONFIGS;
    use crate::grid::build_default_grid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn mas_examples() {
        assert_eq!(mas(&BandwidthSpec::TITAN), 4.8828125);
        let b = 3.0e9;
        assert_eq!(mas(&BandwidthSpec { device_bw: b, host_bw: b }), 1.0);
        assert_eq!(mas(&BandwidthSpec { device_bw: 2.0 * b, host_bw: b }), 2.0);
    }

    #[test]
    fn speedup_examples() {
        let grid = build_default_grid();
        let c = PartitionConfig::new(3, 1, 1);
        let s = predict_speedup(&c, &grid, &BandwidthSpec::TITAN, 0.732);
        assert!((s - 3.574).abs() < 1e-3, "{s}");
        assert_eq!(predict_speedup(&c, &grid, &BandwidthSpec::TITAN, 1.0), 4.8828125);
        // the largest layout puts far fewer than 64^3 cells in each block
        let big = predict_speedup(&PartitionConfig::new(6, 5, 5), &grid, &BandwidthSpec::TITAN, 0.732);
        assert!(big < s);
    }

    #[test]
    fn below_floor_is_strictly_slower() {
        let grid = StretchedGrid::uniform([0.0; 3], [1.0; 3], [64, 64, 64]).unwrap();
        let at = predict_speedup(&PartitionConfig::new(1, 1, 1), &grid, &BandwidthSpec::TITAN, 0.9);
        let below = predict_speedup(&PartitionConfig::new(2, 1, 1), &grid, &BandwidthSpec::TITAN, 0.9);
        assert!(below < at);
    }

    #[test]
    fn speedup_non_increasing_in_ranks_on_default_grid() {
        let grid = build_default_grid();
        let mut configs = REFERENCE_CONFIGS.to_vec();
        configs.sort_by_key(|c| c.blocks());
        let s: Vec<f64> = configs
            .iter()
            .map(|c| predict_speedup(c, &grid, &BandwidthSpec::TITAN, 0.732))
            .collect();
        assert!(s.windows(2).all(|w| w[1] <= w[0]), "{s:?}");
    }

    #[test]
    fn aggregate_examples() {
        let t = |c: f64, x: f64| StepTiming {
            rank: 0,
            step: 0,
            compute_seconds: c,
            transfer_seconds: x,
        };
        assert!(matches!(aggregate(&[]), Err(Error::Empty(_))));
        let one = aggregate(&[t(1.5, 0.5)]).unwrap();
        assert_eq!((one.mean_compute, one.mean_transfer), (1.5, 0.5));
        assert_eq!(aggregate(&[t(1.0, 0.0), t(3.0, 0.0)]).unwrap().mean_compute, 2.0);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let recs: Vec<_> = (0..500).map(|_| t(rng.gen(), rng.gen())).collect();
        let mut sc = 0.0;
        let mut sx = 0.0;
        for r in &recs {
            sc += r.compute_seconds;
            sx += r.transfer_seconds;
        }
        let s = aggregate(&recs).unwrap();
        assert!((s.mean_compute - sc / 500.0).abs() < 1e-12);
        assert!((s.mean_transfer - sx / 500.0).abs() < 1e-12);
    }

    #[test]
    fn report_csv_header() {
        let grid = build_default_grid();
        let row = ReportRow::new(&PartitionConfig::new(3, 1, 1), &grid, 4, None, &BandwidthSpec::TITAN, 0.732);
        let mut buf = Vec::new();
        write_report(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "config,ranks,tde_units,bytes_per_step,mean_compute_s,mean_transfer_s,predicted_speedup\n3x1x1,4,2,"
        ));
    }

    proptest! {
        #[test]
        fn mas_scale_invariant(a in 1.0e6f64..1.0e12, b in 1.0e6f64..1.0e12, k in prop::sample::select(vec![2.0, 4.0, 0.5, 8.0, 1024.0])) {
            let base = mas(&BandwidthSpec { device_bw: a, host_bw: b });
            let scaled = mas(&BandwidthSpec { device_bw: k * a, host_bw: k * b });
            prop_assert_eq!(base, scaled);
        }

        #[test]
        fn speedup_never_exceeds_mas(eff in 0.01f64..1.0, nx in prop::sample::select(vec![1usize, 2, 3, 4, 6])) {
            let grid = StretchedGrid::uniform([0.0; 3], [1.0; 3], [12, 9, 9]).unwrap();
            let spec = BandwidthSpec::TITAN;
            let s = predict_speedup(&PartitionConfig::new(nx, 3, 3), &grid, &spec, eff);
            prop_assert!(s <= mas(&spec));
        }
    }
}
