use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use mlatc::LearnerConfig;
use mlatc_bench::fit::{fit, Model};
use mlatc_bench::runner::{run_with, Mode, RunConfig, Source};
use mlatc_bench::{analyze, export, sweep, table};

/// Streams point-cloud frames through the flat or hierarchical topological
/// mapper and reports per-frame metrics as CSV.
#[derive(Debug, Parser)]
#[command(name = "mlatc-bench", version)]
struct Cli {
    #[arg(long, value_enum, default_value = "mlatc")]
    mode: Mode,
    /// `synthetic`, or `dir:<path>` for a directory of frame files.
    #[arg(long, default_value = "synthetic")]
    source: Source,
    #[arg(long, default_value_t = 22)]
    frames: usize,
    /// Training iterations per frame (also the synthetic points per frame).
    #[arg(long, default_value_t = 4000)]
    lambda: usize,
    /// Layer-1 vigilance radius in meters.
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Vigilance ratio between layers.
    #[arg(long, default_value_t = 4.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Never move nodes (insertion-only mode).
    #[arg(long)]
    freeze_updates: bool,
    /// Run the exhaustive baseline in lockstep and count decision mismatches.
    #[arg(long)]
    oracle_check: bool,
    /// Stop once layer 1 holds this many nodes.
    #[arg(long)]
    until_nodes: Option<usize>,
    /// Write the metrics (or sweep) CSV here instead of stdout.
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    /// Export the final map as JSON.
    #[arg(long)]
    map_out: Option<PathBuf>,
    /// Sweep alpha over `lo:hi:step`, one run per value.
    #[arg(long, value_name = "LO:HI:STEP", conflicts_with_all = ["oracle_check", "map_out"])]
    alpha_sweep: Option<String>,
    /// Print the closed-form analysis report and exit.
    #[arg(long, conflicts_with = "alpha_sweep")]
    analyze: bool,
}

impl Cli {
    fn run_config(&self) -> RunConfig {
        let learner = LearnerConfig {
            lambda: self.lambda,
            base_vigilance: self.rho,
            alpha: self.alpha,
            updates_enabled: !self.freeze_updates,
            rng_seed: self.seed,
            ..Default::default()
        };
        let source = match &self.source {
            Source::Synthetic(s) => Source::Synthetic(mlatc::streams::SyntheticStreamConfig {
                points_per_frame: self.lambda,
                seed: self.seed,
                ..*s
            }),
            other => other.clone(),
        };
        RunConfig {
            mode: self.mode,
            source,
            learner,
            frames: self.frames,
            until_nodes: self.until_nodes,
            oracle_check: self.oracle_check,
        }
    }

    fn output(&self) -> Result<Box<dyn Write>> {
        Ok(match &self.metrics_out {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        })
    }
}

fn report_fits(metrics: &[mlatc::FrameMetrics]) {
    let xs: Vec<f64> = metrics.iter().map(|m| m.base_nodes() as f64).collect();
    for (label, ys) in [
        (
            "dist_evals",
            metrics
                .iter()
                .map(|m| m.distance_evals as f64)
                .collect::<Vec<_>>(),
        ),
        ("wall_ms", metrics.iter().map(|m| m.wall_time_ms).collect()),
    ] {
        for model in [Model::Linear, Model::Logarithmic] {
            match fit(&xs, &ys, model) {
                Ok(f) => eprintln!(
                    "fit {label} ~ {model}(N): a = {:.6e}, b = {:.6e}, R^2 = {:.4}{}",
                    f.slope,
                    f.intercept,
                    f.r_squared,
                    if f.degenerate { " (constant)" } else { "" }
                ),
                Err(e) => eprintln!("fit {label} ~ {model}(N): {e}"),
            }
        }
    }
}

fn main_inner(cli: &Cli) -> Result<()> {
    if cli.analyze {
        let mut out = cli.output()?;
        analyze::write_report(&mut out)?;
        out.flush()?;
        return Ok(());
    }

    let cfg = cli.run_config();
    if let Some(range) = &cli.alpha_sweep {
        let grid = sweep::parse_range(range).map_err(anyhow::Error::msg)?;
        let rows = sweep::alpha_sweep(&grid, &cfg)?;
        let mut out = cli.output()?;
        sweep::write_sweep(&mut out, &rows)?;
        out.flush()?;
        return Ok(());
    }

    let output = run_with(&cfg, |m| {
        eprintln!(
            "frame {:>5}  N = {:>8}  L = {:>2}  evals = {:>11}  {:>9.2} ms",
            m.frame_index,
            m.base_nodes(),
            m.layer_count,
            m.distance_evals,
            m.wall_time_ms
        );
    })?;

    let mut out = cli.output()?;
    table::write_metrics(&mut out, &output.metrics)?;
    out.flush()?;

    if let Some(path) = &cli.map_out {
        export::export_map(&output.map, path)?;
    }
    if output.renormalized_normals > 0 {
        eprintln!("renormalized {} input normals", output.renormalized_normals);
    }
    if let Some(r) = output.oracle {
        eprintln!(
            "oracle: {} steps, {} mismatches (rate {:.3e}); first-winner drift {} of {} (rate {:.3e})",
            r.steps,
            r.mismatches,
            r.mismatch_rate(),
            r.drift_misses,
            r.drift_checked,
            r.drift_rate()
        );
    }
    if output.metrics.len() >= 3 {
        report_fits(&output.metrics);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
