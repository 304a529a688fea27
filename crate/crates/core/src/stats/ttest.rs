use super::{dist, two_sided, SampleSummary, TestFlag, TestKind, TestResult};
use crate::error::{Error, Result};

/// Pooled-variance two-sample t-test of `a.mean - b.mean`.
///
/// `t = (mean_a - mean_b) / (s_p * sqrt(1/n_a + 1/n_b))`, `df = n_a + n_b - 2`,
/// Cohen's d = `(mean_a - mean_b) / s_p`.
pub fn t_two_sample(a: &SampleSummary, b: &SampleSummary) -> Result<TestResult> {
    if a.n < 2 || b.n < 2 {
        return Err(Error::Domain(format!(
            "two-sample t-test needs n >= 2 per group, got {} and {}",
            a.n, b.n
        )));
    }
    let df = (a.n + b.n - 2) as f64;
    let pooled_var = ((a.n - 1) as f64 * a.sd * a.sd + (b.n - 1) as f64 * b.sd * b.sd) / df;
    let sp = pooled_var.sqrt();
    let diff = a.mean - b.mean;
    let se = sp * (1.0 / a.n as f64 + 1.0 / b.n as f64).sqrt();
    if sp == 0.0 {
        return Ok(no_variance(TestKind::TwoSampleT, diff, Some(df)));
    }
    let t = diff / se;
    let p_one = dist::student_t_cdf(-t.abs(), df)?;
    let q = dist::student_t_quantile(0.975, df)?;
    Ok(TestResult {
        kind: TestKind::TwoSampleT,
        statistic: t,
        df: Some(df),
        p_one_sided: p_one,
        p_two_sided: two_sided(p_one),
        mean_difference: diff,
        ci_95: Some((diff - q * se, diff + q * se)),
        effect_size: Some(diff / sp),
        exact: false,
        flag: TestFlag::Ok,
    })
}

/// Convenience wrapper summarising raw observations first.
pub fn t_two_sample_from_samples(a: &[f64], b: &[f64]) -> Result<TestResult> {
    t_two_sample(&SampleSummary::from_samples(a)?, &SampleSummary::from_samples(b)?)
}

/// Paired t-test on per-seed differences `d_i = x_i - y_i`.
pub fn t_paired(differences: &[f64]) -> Result<TestResult> {
    let n = differences.len();
    if n < 2 {
        return Err(Error::Domain(format!("paired t-test needs n >= 2, got {n}")));
    }
    let s = SampleSummary::from_samples(differences)?;
    let df = (n - 1) as f64;
    if differences.iter().all(|d| *d == differences[0]) {
        return Ok(no_variance(TestKind::PairedT, differences[0], Some(df)));
    }
    let se = s.sd / (n as f64).sqrt();
    let t = s.mean / se;
    let p_one = dist::student_t_cdf(-t.abs(), df)?;
    let q = dist::student_t_quantile(0.975, df)?;
    Ok(TestResult {
        kind: TestKind::PairedT,
        statistic: t,
        df: Some(df),
        p_one_sided: p_one,
        p_two_sided: two_sided(p_one),
        mean_difference: s.mean,
        ci_95: Some((s.mean - q * se, s.mean + q * se)),
        effect_size: Some(s.mean / s.sd),
        exact: false,
        flag: TestFlag::Ok,
    })
}

fn no_variance(kind: TestKind, diff: f64, df: Option<f64>) -> TestResult {
    if diff == 0.0 {
        TestResult {
            kind,
            statistic: 0.0,
            df,
            p_one_sided: 0.5,
            p_two_sided: 1.0,
            mean_difference: 0.0,
            ci_95: Some((0.0, 0.0)),
            effect_size: None,
            exact: false,
            flag: TestFlag::Degenerate,
        }
    } else {
        TestResult {
            kind,
            statistic: f64::INFINITY.copysign(diff),
            df,
            p_one_sided: 0.0,
            p_two_sided: 0.0,
            mean_difference: diff,
            ci_95: Some((diff, diff)),
            effect_size: None,
            exact: false,
            flag: TestFlag::InfiniteStatistic,
        }
    }
}
