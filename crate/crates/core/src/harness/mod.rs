//! Batch evaluation: attack success rates, robustness sweeps and reports.

mod report;
mod sweep;

use std::time::Instant;

pub use report::{compute_asr, PlotSeries, Report, ReportRow, CSV_HEADER};
pub use sweep::{
    distance_direction, judge, rotated_case, run as run_sweep, shifted_case, sweep_angle, sweep_distance, sweep_srs,
    SweepCase, SweepKind, SweepSpec,
};

use crate::error::Result;
use crate::gsa::{run_attack, AttackConfig, AttackResult};
use crate::oracle::Detector;
use crate::scene::Scene;

/// Attacks every scene (scene `i` uses seed `config.seed + i`) and reports
/// one row per scene plus an `all` row. `progress` sees each result as it
/// finishes.
pub fn run_benchmark(
    scenes: &[Scene],
    oracle: &dyn Detector,
    config: &AttackConfig,
    mut progress: impl FnMut(usize, &AttackResult),
) -> Result<(Vec<AttackResult>, Report)> {
    let mut report = Report::new("benchmark", config.seed);
    let mut all = ReportRow::new("all", None);
    let mut results = Vec::with_capacity(scenes.len());
    for (i, scene) in scenes.iter().enumerate() {
        let cfg = AttackConfig {
            seed: config.seed.wrapping_add(i as u64),
            ..config.clone()
        };
        let t = Instant::now();
        let r = run_attack(scene, oracle, &cfg)?;
        let ms = t.elapsed().as_secs_f64() * 1e3;
        let mut row = ReportRow::new(format!("scene_{i:02}"), Some(i as f64));
        row.record(Some(r.success), r.oracle_calls, ms);
        all.record(Some(r.success), r.oracle_calls, ms);
        report.rows.push(row);
        progress(i, &r);
        results.push(r);
    }
    report.rows.push(all);
    Ok((results, report))
}
