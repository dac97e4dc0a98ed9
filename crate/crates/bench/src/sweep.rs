//! Scaling-factor sweep: one independent run per alpha on the same stream.

use std::io::Write;

use mlatc::complexity::alpha_grid;
use mlatc::stats::median;
use rayon::prelude::*;
use serde::Serialize;

use crate::runner::{run, Mode, RunConfig, RunError};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub median_wall_ms: f64,
    pub median_distance_evals: f64,
    pub total_distance_evals: u64,
    pub base_nodes: usize,
    pub total_nodes: usize,
    pub layer_count: usize,
}

/// Parses `lo:hi:step` into an inclusive grid.
pub fn parse_range(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(format!("expected lo:hi:step, got {spec:?}"));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| format!("not a number: {s:?}"))
    };
    let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
    alpha_grid(lo, hi, step).map_err(|e| e.to_string())
}

/// Runs the hierarchical learner once per alpha in `grid` with every other
/// setting taken from `base`. Rows come back in grid order.
pub fn alpha_sweep(grid: &[f64], base: &RunConfig) -> Result<Vec<SweepRow>, RunError> {
    grid.par_iter()
        .map(|&alpha| {
            let mut cfg = base.clone();
            cfg.mode = Mode::Mlatc;
            cfg.oracle_check = false;
            cfg.learner.alpha = alpha;
            let out = run(&cfg)?;
            let walls: Vec<f64> = out.metrics.iter().map(|m| m.wall_time_ms).collect();
            let evals: Vec<f64> = out
                .metrics
                .iter()
                .map(|m| m.distance_evals as f64)
                .collect();
            Ok(SweepRow {
                alpha,
                median_wall_ms: median(&walls).unwrap_or(0.0),
                median_distance_evals: median(&evals).unwrap_or(0.0),
                total_distance_evals: out.metrics.iter().map(|m| m.distance_evals).sum(),
                base_nodes: out.map.base().len(),
                total_nodes: out.map.total_nodes(),
                layer_count: out.map.layer_count(),
            })
        })
        .collect()
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), csv::Error> {
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
    use mlatc::streams::SyntheticStreamConfig;

    use crate::runner::Source;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("2:3:0.5").unwrap(), vec![2.0, 2.5, 3.0]);
        assert_eq!(parse_range("2:8:0.1").unwrap().len(), 61);
        assert!(parse_range("2:3").is_err());
        assert!(parse_range("1:3:0.5").is_err());
        assert!(parse_range("3:2:0.5").is_err());
        assert!(parse_range("a:3:0.5").is_err());
    }

    fn small_base() -> RunConfig {
        RunConfig {
            source: Source::Synthetic(SyntheticStreamConfig {
                points_per_frame: 1000,
                ..Default::default()
            }),
            frames: 3,
            learner: mlatc::LearnerConfig {
                lambda: 1000,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn reruns_are_identical_apart_from_time() {
        let grid = [1.05, 2.0, 4.0];
        let strip = |rows: Vec<SweepRow>| {
            rows.into_iter()
                .map(|r| {
                    (
                        r.alpha,
                        r.median_distance_evals,
                        r.total_nodes,
                        r.layer_count,
                    )
                })
                .collect::<Vec<_>>()
        };
        let a = strip(alpha_sweep(&grid, &small_base()).unwrap());
        assert_eq!(a, strip(alpha_sweep(&grid, &small_base()).unwrap()));
        assert_eq!(a.iter().map(|r| r.0).collect::<Vec<_>>(), grid);
        // Near-unit scaling stacks many nearly identical layers.
        assert!(a[0].2 > 3 * a[2].2, "{a:?}");
    }

    #[test]
    fn csv_has_a_header() {
        let rows = alpha_sweep(&[3.0], &small_base()).unwrap();
        let mut buf = Vec::new();
        write_sweep(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "alpha,median_wall_ms,median_distance_evals,total_distance_evals,base_nodes,total_nodes,layer_count\n"
        ));
        assert_eq!(text.lines().count(), 2);
    }
}
