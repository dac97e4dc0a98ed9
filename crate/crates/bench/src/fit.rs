//! Least-squares regression of runtime counters against map size.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `y = a x + b`
    Linear,
    /// `y = a ln(x) + b`
    Logarithmic,
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Model::Linear => write!(f, "linear"),
            Model::Logarithmic => write!(f, "logarithmic"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("x and y lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("logarithmic model needs x > 0, got {0}")]
    NonPositiveX(f64),
    #[error("non-finite value in input")]
    NonFinite,
    #[error("all x values are equal, the slope is undefined")]
    ConstantX,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitResult {
    pub model: Model,
    pub slope: f64,
    pub intercept: f64,
    /// `1 - SS_res / SS_tot`, clamped to `[0, 1]`.
    pub r_squared: f64,
    /// Set when all `y` are equal (`SS_tot = 0`); `r_squared` is then 1.
    pub degenerate: bool,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        match self.model {
            Model::Linear => self.slope * x + self.intercept,
            Model::Logarithmic => self.slope * x.ln() + self.intercept,
        }
    }
}

pub fn fit(xs: &[f64], ys: &[f64], model: Model) -> Result<FitResult, FitError> {
    if xs.len() != ys.len() {
        return Err(FitError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(FitError::TooFewPoints(xs.len()));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(FitError::NonFinite);
    }
    let tx: Vec<f64> = match model {
        Model::Linear => xs.to_vec(),
        Model::Logarithmic => {
            if let Some(&bad) = xs.iter().find(|&&x| x <= 0.0) {
                return Err(FitError::NonPositiveX(bad));
            }
            xs.iter().map(|x| x.ln()).collect()
        }
    };

    let n = tx.len() as f64;
    let mx = tx.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (x, y) in tx.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(FitError::ConstantX);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;

    if syy == 0.0 {
        return Ok(FitResult {
            model,
            slope,
            intercept,
            r_squared: 1.0,
            degenerate: true,
        });
    }
    let ss_res: f64 = tx
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r_squared = (1.0 - ss_res / syy).clamp(0.0, 1.0);
    Ok(FitResult {
        model,
        slope,
        intercept,
        r_squared,
        degenerate: false,
    })
}
