use serde::{Deserialize, Serialize};

use super::run::{run_replications, RunRecord};
use super::spec::{ControllerSpec, ObjectiveSpec, Scenario, SeedSet};
use crate::error::{config, contract, Error, Result};
use crate::stats::{t_paired, wilcoxon_signed_rank, TestKind, TestResult};

/// Per-seed pair; `diff = a - b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRow {
    pub seed: u64,
    pub a: f64,
    pub b: f64,
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub metric: String,
    pub seeds: SeedSet,
    pub pairs: Vec<PairRow>,
    pub result: TestResult,
}

fn value(r: &RunRecord, metric: &str) -> Result<f64> {
    if metric == "objective" {
        return Ok(r.objective);
    }
    r.metrics.get(metric).copied().ok_or_else(|| Error::Lookup { kind: "metric", id: metric.to_string() })
}

/// Pairs two record lists seed by seed and runs the paired test.
/// `metric` may be any recorded metric or `objective`.
pub fn compare_records(a: &[RunRecord], b: &[RunRecord], metric: &str, test: TestKind) -> Result<Comparison> {
    let sa: Vec<u64> = a.iter().map(|r| r.seed).collect();
    let sb: Vec<u64> = b.iter().map(|r| r.seed).collect();
    if sa != sb {
        return contract(format!("paired comparison needs identical seed lists, got {sa:?} and {sb:?}"));
    }
    let pairs = a
        .iter()
        .zip(b)
        .map(|(x, y)| {
            let (va, vb) = (value(x, metric)?, value(y, metric)?);
            Ok(PairRow { seed: x.seed, a: va, b: vb, diff: va - vb })
        })
        .collect::<Result<Vec<_>>>()?;
    let diffs: Vec<f64> = pairs.iter().map(|p| p.diff).collect();
    let result = match test {
        TestKind::PairedT => t_paired(&diffs)?,
        TestKind::WilcoxonSignedRank => wilcoxon_signed_rank(&diffs)?,
        other => return config(format!("`{}` is not a paired test", other.label())),
    };
    Ok(Comparison { metric: metric.to_string(), seeds: SeedSet::new(sa)?, pairs, result })
}

/// Runs both controllers on the identical seed set and compares `metric`.
pub fn compare_controllers(
    scenario: &Scenario,
    a: &ControllerSpec,
    b: &ControllerSpec,
    seeds: &SeedSet,
    metric: &str,
    objective: &ObjectiveSpec,
    test: TestKind,
) -> Result<Comparison> {
    let ra = run_replications(scenario, a, "A", seeds, objective)?;
    let rb = run_replications(scenario, b, "B", seeds, objective)?;
    compare_records(&ra, &rb, metric, test)
}
