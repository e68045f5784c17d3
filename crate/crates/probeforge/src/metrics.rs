//! Per-run scores and their aggregation over repetitions.

use std::fmt;

use crate::error::{Error, Result};

/// Mean correlation a configuration must exceed.
pub const R_THRESHOLD: f64 = 0.7;
/// Correlation standard deviation a configuration must stay below.
pub const STD_THRESHOLD: f64 = 0.05;

/// Standard deviations at or below this count as zero in [`pearson`].
pub const DEGENERATE_STD: f64 = 1e-12;

/// Sample Pearson correlation.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!("pearson needs at least 2 points, got {n}")));
    }
    let mean_a = a.iter().sum::<f64>() / n as f64;
    let mean_b = b.iter().sum::<f64>() / n as f64;
    let (mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (da, db) = (x - mean_a, y - mean_b);
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    let denom = (n - 1) as f64;
    if (saa / denom).sqrt() <= DEGENERATE_STD || (sbb / denom).sqrt() <= DEGENERATE_STD {
        return Err(Error::DegenerateVariance);
    }
    Ok(sab / (saa.sqrt() * sbb.sqrt()))
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::InvalidInput("rmse of empty vectors".into()));
    }
    let sse: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((sse / a.len() as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunMetrics {
    pub pearson_r: f64,
    pub rmse: f64,
    pub n_test: usize,
}

/// Result of one repetition.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RunOutcome {
    Scored(RunMetrics),
    /// Predictions or targets had (numerically) zero variance.
    Degenerate,
}

impl RunOutcome {
    /// Scores predictions against targets, mapping zero variance to
    /// [`RunOutcome::Degenerate`].
    pub fn score(predictions: &[f64], targets: &[f64]) -> Result<RunOutcome> {
        let rmse = rmse(predictions, targets)?;
        match pearson(predictions, targets) {
            Ok(pearson_r) => Ok(RunOutcome::Scored(RunMetrics {
                pearson_r,
                rmse,
                n_test: targets.len(),
            })),
            Err(Error::DegenerateVariance) => Ok(RunOutcome::Degenerate),
            Err(e) => Err(e),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Thresholds {
    pub r_min: f64,
    pub std_max: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            r_min: R_THRESHOLD,
            std_max: STD_THRESHOLD,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > -1.0 && self.r_min < 1.0) {
            return Err(Error::Config(format!("r_min {} outside (-1, 1)", self.r_min)));
        }
        if !(self.std_max > 0.0 && self.std_max.is_finite()) {
            return Err(Error::Config(format!("std_max {} must be positive", self.std_max)));
        }
        Ok(())
    }

    /// Strict comparisons on both sides.
    pub fn passes(&self, r_mean: f64, r_std: f64) -> bool {
        r_mean > self.r_min && r_std < self.std_max
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateMetrics {
    pub r_mean: f64,
    pub r_std: f64,
    pub rmse_mean: f64,
    pub rmse_std: f64,
    /// Scored (non-degenerate) runs.
    pub repetitions: usize,
    pub degenerate_runs: usize,
    pub pass_mean: bool,
    pub pass_std: bool,
}

impl fmt::Display for AggregateMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.r_mean, self.r_std)
    }
}

/// Mean and sample (n - 1) standard deviation over the scored runs.
pub fn aggregate(runs: &[RunOutcome], thresholds: Thresholds) -> Result<AggregateMetrics> {
    let scored: Vec<&RunMetrics> = runs
        .iter()
        .filter_map(|r| match r {
            RunOutcome::Scored(m) => Some(m),
            RunOutcome::Degenerate => None,
        })
        .collect();
    if scored.len() < 2 {
        return Err(Error::InsufficientRuns { usable: scored.len() });
    }
    let (r_mean, r_std) = mean_std(scored.iter().map(|m| m.pearson_r));
    let (rmse_mean, rmse_std) = mean_std(scored.iter().map(|m| m.rmse));
    Ok(AggregateMetrics {
        r_mean,
        r_std,
        rmse_mean,
        rmse_std,
        repetitions: scored.len(),
        degenerate_runs: runs.len() - scored.len(),
        pass_mean: r_mean > thresholds.r_min,
        pass_std: r_std < thresholds.std_max,
    })
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    // sorted summation keeps the result independent of run order
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
