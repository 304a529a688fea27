use super::{dist, two_sided, TestFlag, TestKind, TestResult};
use crate::error::{Error, Result};

/// Largest sample size (Wilcoxon: non-zero differences; Mann-Whitney:
/// `n_a + n_b`) for which p-values are computed by exact enumeration.
pub const EXACT_CUTOFF: usize = 12;

// Null-distribution counts are u64; 2^60 leaves headroom.
const MAX_EXACT: usize = 60;

/// How rank-test p-values are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PValueMethod {
    /// Exact up to [`EXACT_CUTOFF`], normal approximation above.
    #[default]
    Auto,
    Exact,
    Normal,
}

impl PValueMethod {
    fn use_exact(self, n: usize) -> bool {
        match self {
            PValueMethod::Auto => n <= EXACT_CUTOFF,
            PValueMethod::Exact => true,
            PValueMethod::Normal => false,
        }
    }
}

/// Mid-ranks doubled so that tied ranks stay integral.
fn doubled_midranks(values: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0u64; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        let doubled = (start + end + 2) as u64;
        for &idx in &order[start..=end] {
            ranks[idx] = doubled;
        }
        start = end + 1;
    }
    ranks
}

/// Σ (t³ − t) over tie groups.
fn tie_term(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        total += t * t * t - t;
        i = j + 1;
    }
    total
}

/// Tail probabilities `(P(S <= obs), P(S >= obs))` of an integer-valued
/// null distribution given as counts.
fn tails(counts: &[u64], obs: usize) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let lower: u64 = counts[..=obs.min(counts.len() - 1)].iter().sum();
    let upper: u64 = counts.get(obs..).map_or(0, |c| c.iter().sum());
    (lower as f64 / total as f64, upper as f64 / total as f64)
}

/// Wilcoxon signed-rank test on paired differences.
///
/// Exact zeros are dropped before ranking; ties get mid-ranks. The reported
/// statistic is `W+` (sum of ranks of positive differences). For at most
/// [`EXACT_CUTOFF`] non-zero differences the null distribution over all
/// `2^n` sign assignments is counted exactly; above it a normal
/// approximation with tie and continuity correction is used.
pub fn wilcoxon_signed_rank(differences: &[f64]) -> Result<TestResult> {
    wilcoxon_signed_rank_with(differences, PValueMethod::Auto)
}

/// [`wilcoxon_signed_rank`] with an explicit p-value method. Forcing
/// `Exact` on large samples is exponential in memory only through the rank
/// sum range, so it stays cheap well beyond the default cutoff.
pub fn wilcoxon_signed_rank_with(differences: &[f64], method: PValueMethod) -> Result<TestResult> {
    if differences.iter().any(|d| !d.is_finite()) {
        return Err(Error::Domain("differences must be finite".into()));
    }
    let mean_difference = if differences.is_empty() {
        0.0
    } else {
        differences.iter().sum::<f64>() / differences.len() as f64
    };
    let nonzero: Vec<f64> = differences.iter().copied().filter(|d| *d != 0.0).collect();
    let n = nonzero.len();
    if n == 0 {
        return Ok(TestResult {
            kind: TestKind::WilcoxonSignedRank,
            statistic: 0.0,
            df: None,
            p_one_sided: 0.5,
            p_two_sided: 1.0,
            mean_difference,
            ci_95: None,
            effect_size: None,
            exact: true,
            flag: TestFlag::Degenerate,
        });
    }
    let abs: Vec<f64> = nonzero.iter().map(|d| d.abs()).collect();
    let ranks = doubled_midranks(&abs);
    let w_plus2: u64 = nonzero
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();
    let total2 = (n * (n + 1)) as u64;
    let w_plus = w_plus2 as f64 / 2.0;
    let w_minus = (total2 - w_plus2) as f64 / 2.0;
    let effect = (w_plus - w_minus) / (total2 as f64 / 2.0);

    let exact = method.use_exact(n);
    if exact && n > MAX_EXACT {
        return Err(Error::Domain(format!("exact enumeration limited to n <= {MAX_EXACT}, got {n}")));
    }
    let (lower, upper) = if exact {
        // counts[s] = number of sign assignments whose doubled W+ equals s
        let mut counts = vec![0u64; total2 as usize + 1];
        counts[0] = 1;
        for &r in &ranks {
            for s in (r as usize..counts.len()).rev() {
                counts[s] += counts[s - r as usize];
            }
        }
        tails(&counts, w_plus2 as usize)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term(&abs) / 48.0;
        let sd = var.sqrt();
        (
            dist::normal_cdf((w_plus - mean + 0.5) / sd),
            1.0 - dist::normal_cdf((w_plus - mean - 0.5) / sd),
        )
    };
    let p_one = lower.min(upper).clamp(0.0, 1.0);
    Ok(TestResult {
        kind: TestKind::WilcoxonSignedRank,
        statistic: w_plus,
        df: None,
        p_one_sided: p_one,
        p_two_sided: two_sided(p_one),
        mean_difference,
        ci_95: None,
        effect_size: Some(effect),
        exact,
        flag: TestFlag::Ok,
    })
}

/// Mann-Whitney U test for independent samples.
///
/// The statistic is `U_a = R_a - n_a (n_a + 1) / 2` computed from pooled
/// mid-ranks. Exact when `n_a + n_b <= EXACT_CUTOFF` (all `C(N, n_a)`
/// assignments of the pooled ranks counted), otherwise normal with tie and
/// continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult> {
    mann_whitney_u_with(a, b, PValueMethod::Auto)
}

/// [`mann_whitney_u`] with an explicit p-value method.
pub fn mann_whitney_u_with(a: &[f64], b: &[f64], method: PValueMethod) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("Mann-Whitney needs two non-empty samples".into()));
    }
    if a.iter().chain(b).any(|x| !x.is_finite()) {
        return Err(Error::Domain("samples must be finite".into()));
    }
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = doubled_midranks(&pooled);
    let ra2: u64 = ranks[..na].iter().sum();
    let base2 = (na * (na + 1)) as u64;
    let u_a = (ra2 - base2) as f64 / 2.0;
    let mean_difference = a.iter().sum::<f64>() / na as f64 - b.iter().sum::<f64>() / nb as f64;
    let effect = 2.0 * u_a / (na * nb) as f64 - 1.0;
    let n = na + nb;

    let exact = method.use_exact(n);
    if exact && n > MAX_EXACT {
        return Err(Error::Domain(format!("exact enumeration limited to n <= {MAX_EXACT}, got {n}")));
    }
    let (lower, upper) = if exact {
        // by_size[k][s]: subsets of k pooled items with doubled rank sum s
        let max_sum: usize = ranks.iter().map(|r| *r as usize).sum();
        let mut by_size = vec![vec![0u64; max_sum + 1]; na + 1];
        by_size[0][0] = 1;
        for &r in &ranks {
            let r = r as usize;
            for k in (1..=na).rev() {
                for s in (r..=max_sum).rev() {
                    by_size[k][s] += by_size[k - 1][s - r];
                }
            }
        }
        tails(&by_size[na], ra2 as usize)
    } else {
        let nf = n as f64;
        let mean = (na * nb) as f64 / 2.0;
        let var = (na * nb) as f64 / 12.0 * ((nf + 1.0) - tie_term(&pooled) / (nf * (nf - 1.0)));
        if var <= 0.0 {
            return Ok(TestResult {
                kind: TestKind::MannWhitneyU,
                statistic: u_a,
                df: None,
                p_one_sided: 0.5,
                p_two_sided: 1.0,
                mean_difference,
                ci_95: None,
                effect_size: Some(effect),
                exact: false,
                flag: TestFlag::Degenerate,
            });
        }
        let sd = var.sqrt();
        (
            dist::normal_cdf((u_a - mean + 0.5) / sd),
            1.0 - dist::normal_cdf((u_a - mean - 0.5) / sd),
        )
    };
    let p_one = lower.min(upper).clamp(0.0, 1.0);
    Ok(TestResult {
        kind: TestKind::MannWhitneyU,
        statistic: u_a,
        df: None,
        p_one_sided: p_one,
        p_two_sided: two_sided(p_one),
        mean_difference,
        ci_95: None,
        effect_size: Some(effect),
        exact,
        flag: TestFlag::Ok,
    })
}
