//! Hypothesis tests for variance-aware controller evaluation.
//!
//! Pooled two-sample and paired t-tests, Wilcoxon signed-rank and
//! Mann-Whitney U (exact below a small-sample cutoff, normal approximation
//! above it), plus the Student-t distribution functions they rely on.
//!
//! Every test returns a [`TestResult`]. `p_one_sided` is the tail probability
//! in the direction of the observed effect; `p_two_sided` doubles it (capped
//! at 1).

mod dist;
mod rank;
mod ttest;

pub use dist::{normal_cdf, student_t_cdf, student_t_quantile};
pub use rank::{
    mann_whitney_u, mann_whitney_u_with, wilcoxon_signed_rank, wilcoxon_signed_rank_with,
    PValueMethod, EXACT_CUTOFF,
};
pub use ttest::{t_paired, t_two_sample, t_two_sample_from_samples};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Count, mean and sample standard deviation (n − 1 denominator).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
}

impl SampleSummary {
    pub fn new(n: usize, mean: f64, sd: f64) -> Result<Self> {
        if !(mean.is_finite() && sd.is_finite()) || sd < 0.0 {
            return Err(Error::Domain(format!(
                "summary needs finite mean and sd >= 0, got mean={mean} sd={sd}"
            )));
        }
        Ok(Self { n, mean, sd })
    }

    /// Summarises raw observations. An empty slice is a domain error; a
    /// single observation gets `sd = 0`.
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::Domain("cannot summarise an empty sample".into()));
        }
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self::new(n, mean, sd)
    }
}

/// Which procedure produced a [`TestResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    TwoSampleT,
    PairedT,
    WilcoxonSignedRank,
    MannWhitneyU,
}

impl TestKind {
    pub fn label(self) -> &'static str {
        match self {
            TestKind::TwoSampleT => "two-sample t (pooled)",
            TestKind::PairedT => "paired t",
            TestKind::WilcoxonSignedRank => "Wilcoxon signed-rank",
            TestKind::MannWhitneyU => "Mann-Whitney U",
        }
    }
}

/// Degenerate-input markers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFlag {
    Ok,
    /// No variability and no difference: reported as "no effect".
    Degenerate,
    /// No variability but a non-zero difference: the statistic is infinite.
    InfiniteStatistic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub kind: TestKind,
    pub statistic: f64,
    pub df: Option<f64>,
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    /// Difference in means (t-tests) or pseudo-median-free location summary
    /// (mean of differences for Wilcoxon, difference of means for Mann-Whitney).
    pub mean_difference: f64,
    pub ci_95: Option<(f64, f64)>,
    /// Cohen's d for t-tests, rank-biserial correlation for rank tests.
    pub effect_size: Option<f64>,
    /// True when p-values come from full enumeration.
    pub exact: bool,
    pub flag: TestFlag,
}

impl TestResult {
    pub fn significant(&self, alpha: f64) -> bool {
        self.flag != TestFlag::Degenerate && self.p_two_sided < alpha
    }

    pub fn is_degenerate(&self) -> bool {
        self.flag != TestFlag::Ok
    }
}

/// Two-sided p from a one-sided tail, capped at 1.
fn two_sided(p_one: f64) -> f64 {
    (2.0 * p_one).min(1.0)
}
