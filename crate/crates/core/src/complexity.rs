//! Closed-form cost model for the layer hierarchy under a uniform planar
//! node distribution: layer count, per-layer candidate counts, total search
//! cost, the scaling-factor objective and the storage bound.

use std::f64::consts::PI;

use thiserror::Error;

use crate::graph::LearnerConfig;

/// Upper bound of the packing constant (hexagonal circle packing).
pub const KAPPA_MAX: f64 = PI / (2.0 * 1.732_050_807_568_877_2);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("alpha must be > 1, got {0}")]
    Alpha(f64),
    #[error("node count must be at least 1")]
    NodeCount,
    #[error("layer index must be at least 1")]
    Level,
    #[error("empty search grid [{lo}, {hi}] step {step}")]
    EmptyGrid { lo: f64, hi: f64, step: f64 },
    #[error("invalid cost model parameter: {0}")]
    Params(String),
}

fn check_alpha(alpha: f64) -> Result<(), AnalysisError> {
    if alpha > 1.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(AnalysisError::Alpha(alpha))
    }
}

/// Coefficients of the search cost model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModelParams {
    pub kappa: f64,
    /// Cost per distance computation.
    pub c_d: f64,
    /// Cost per winner-selection comparison.
    pub c_s: f64,
}

impl CostModelParams {
    pub fn new(kappa: f64, c_d: f64, c_s: f64) -> Result<Self, AnalysisError> {
        if !(kappa > 0.0 && kappa <= KAPPA_MAX + 1e-12) {
            return Err(AnalysisError::Params(format!(
                "kappa {kappa} outside (0, {KAPPA_MAX}]"
            )));
        }
        if !(c_d > 0.0 && c_s >= 0.0) {
            return Err(AnalysisError::Params(format!("c_d = {c_d}, c_s = {c_s}")));
        }
        Ok(CostModelParams { kappa, c_d, c_s })
    }

    /// Relative weight of selection to distance cost, `c_s * kappa / c_d`.
    pub fn r(&self) -> f64 {
        self.c_s * self.kappa / self.c_d
    }
}

/// Layers needed for `n` base nodes: `ceil(log n / (2 log alpha)) + 1`.
pub fn layer_count(n: u64, alpha: f64) -> Result<usize, AnalysisError> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(AnalysisError::NodeCount);
    }
    let ratio = (n as f64).ln() / (2.0 * alpha.ln());
    // Snap ratios that are integers up to rounding (e.g. n = alpha^2k).
    let nearest = ratio.round();
    let steps = if (ratio - nearest).abs() < 1e-9 {
        nearest
    } else {
        ratio.ceil()
    };
    Ok(steps as usize + 1)
}

/// Expected candidate count at layer `level`:
/// `kappa * ((1 - alpha^-level) / (1 - alpha^-1))^2`.
pub fn candidate_size(level: usize, alpha: f64, kappa: f64) -> Result<f64, AnalysisError> {
    check_alpha(alpha)?;
    if level < 1 {
        return Err(AnalysisError::Level);
    }
    let ratio = (1.0 - alpha.powi(-(level as i32))) / (1.0 - 1.0 / alpha);
    Ok(kappa * ratio * ratio)
}

/// Limit of [`candidate_size`] as the layer index grows.
pub fn candidate_size_limit(alpha: f64, kappa: f64) -> Result<f64, AnalysisError> {
    check_alpha(alpha)?;
    let r = alpha / (alpha - 1.0);
    Ok(kappa * r * r)
}

/// Modelled search cost over all layers for `n` base nodes.
pub fn total_cost(n: u64, alpha: f64, params: &CostModelParams) -> Result<f64, AnalysisError> {
    let layers = layer_count(n, alpha)?;
    let mut cost = 0.0;
    for level in 1..layers {
        let k_next = candidate_size(level + 1, alpha, params.kappa)?;
        let k = candidate_size(level, alpha, params.kappa)?;
        cost += params.c_d * alpha * alpha * k_next + params.c_s * k * k;
    }
    Ok(cost)
}

/// Scaling-factor objective (natural logarithm):
/// `alpha^2 / ln(alpha) * (alpha/(alpha-1))^2 + r / ln(alpha) * (alpha/(alpha-1))^4`.
pub fn objective_h(alpha: f64, r: f64) -> Result<f64, AnalysisError> {
    check_alpha(alpha)?;
    let q = alpha / (alpha - 1.0);
    let q2 = q * q;
    let ln = alpha.ln();
    Ok(alpha * alpha / ln * q2 + r / ln * q2 * q2)
}

/// Grid `lo, lo + step, ...` up to `hi` inclusive (with a small slack).
pub fn alpha_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>, AnalysisError> {
    if !(lo > 1.0 && hi >= lo && step > 0.0) || !(lo.is_finite() && hi.is_finite()) {
        return Err(AnalysisError::EmptyGrid { lo, hi, step });
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| lo + i as f64 * step).collect())
}

/// Grid minimiser of [`objective_h`]; ties go to the smaller alpha.
pub fn alpha_star(r: f64, lo: f64, hi: f64, step: f64) -> Result<f64, AnalysisError> {
    let mut best: Option<(f64, f64)> = None;
    for a in alpha_grid(lo, hi, step)? {
        let h = objective_h(a, r)?;
        if best.is_none_or(|(_, bh)| h < bh) {
            best = Some((a, h));
        }
    }
    best.map(|b| b.0)
        .ok_or(AnalysisError::EmptyGrid { lo, hi, step })
}

/// Grid used for the reference table: `(1 + 1e-3, 10, 1e-3)`.
pub const TABLE_GRID: (f64, f64, f64) = (1.001, 10.0, 1e-3);

/// Ratios reported in the reference table of optimal scaling factors.
pub const TABLE_RATIOS: [f64; 5] = [0.0, 0.5, 1.5, 5.0, 10.0];

/// Optimal scaling factor for each ratio in [`TABLE_RATIOS`].
pub fn alpha_star_table() -> Vec<(f64, f64)> {
    let (lo, hi, step) = TABLE_GRID;
    TABLE_RATIOS
        .iter()
        .map(|&r| (r, alpha_star(r, lo, hi, step).expect("fixed grid is valid")))
        .collect()
}

/// Upper bound on nodes stored over all layers: `n / (1 - alpha^-2)`.
pub fn space_bound(n: u64, alpha: f64) -> Result<f64, AnalysisError> {
    check_alpha(alpha)?;
    if n == 0 {
        return Err(AnalysisError::NodeCount);
    }
    Ok(n as f64 / (1.0 - alpha.powi(-2)))
}

/// Modelled node density of layer `level` in nodes per square meter:
/// `kappa / (pi * vigilance(level)^2)`.
pub fn node_density(
    level: usize,
    config: &LearnerConfig,
    kappa: f64,
) -> Result<f64, AnalysisError> {
    if level < 1 {
        return Err(AnalysisError::Level);
    }
    let v = config.vigilance(level);
    Ok(kappa / (PI * v * v))
}
