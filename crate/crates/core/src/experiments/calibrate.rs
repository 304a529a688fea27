use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::run::{run_once, RunRecord};
use super::spec::{ControllerSpec, ObjectiveSpec, Scenario, SeedSet};
use crate::error::{config, Result};

/// Cartesian grid over named parameters; the first axis varies slowest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    pub axes: Vec<(String, Vec<f64>)>,
}

impl ParameterGrid {
    /// Parses `K_P=5:50:5` (inclusive range) or `K_P=5,10,20` (list).
    /// Several axes are separated by `;`.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut axes = Vec::new();
        for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let Some((name, values)) = part.split_once('=') else {
                return config(format!("grid axis `{part}` is not NAME=VALUES"));
            };
            let name = name.trim();
            if name.is_empty() {
                return config(format!("grid axis `{part}` has no parameter name"));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| crate::Error::Config(format!("`{s}` in grid axis `{name}` is not a number")));
            let values = if values.contains(':') {
                let bits: Vec<&str> = values.split(':').collect();
                if bits.len() != 3 {
                    return config(format!("range for `{name}` must be START:STOP:STEP"));
                }
                let (a, b, step) = (num(bits[0])?, num(bits[1])?, num(bits[2])?);
                if !(step > 0.0) || b < a {
                    return config(format!("range {values} for `{name}` needs STEP > 0 and STOP >= START"));
                }
                let count = ((b - a) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|k| a + k as f64 * step).collect()
            } else {
                values.split(',').map(num).collect::<Result<Vec<_>>>()?
            };
            if values.is_empty() {
                return config(format!("grid axis `{name}` has no values"));
            }
            axes.push((name.to_string(), values));
        }
        if axes.is_empty() {
            return config("empty parameter grid");
        }
        Ok(Self { axes })
    }

    pub fn names(&self) -> Vec<&str> {
        self.axes.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// Every grid point in canonical order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![]];
        for (_, values) in &self.axes {
            out = out.into_iter().flat_map(|p| values.iter().map(move |v| [p.clone(), vec![*v]].concat())).collect();
        }
        out
    }

    /// `K_P=10` or `K_P=10;K_I=0`
    pub fn label(&self, point: &[f64]) -> String {
        self.axes.iter().zip(point).map(|((n, _), v)| format!("{n}={v}")).collect::<Vec<_>>().join(";")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRow {
    pub values: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n - 1); 0 for a single seed.
    pub sd: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub grid: ParameterGrid,
    pub seeds: SeedSet,
    /// Rows in grid order.
    pub rows: Vec<CalibrationRow>,
    /// Index of the row with the lowest mean.
    pub best: usize,
    /// Per-run outcomes in (grid point, seed) order.
    pub records: Vec<RunRecord>,
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, sd)
}

/// Lowest mean; ties go to the lexicographically smaller parameter tuple.
fn pick_best(rows: &[CalibrationRow]) -> usize {
    (0..rows.len())
        .min_by(|&a, &b| {
            rows[a].mean.total_cmp(&rows[b].mean).then_with(|| {
                rows[a].values.iter().zip(&rows[b].values).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
            })
        })
        .expect("grid is non-empty")
}

/// Grid search over an arbitrary evaluator `f(point, seed) -> record`.
/// Jobs run in parallel; the report does not depend on scheduling.
pub fn grid_search_with<F>(grid: &ParameterGrid, seeds: &SeedSet, f: F) -> Result<CalibrationReport>
where
    F: Fn(&[f64], u64) -> Result<RunRecord> + Sync,
{
    let points = grid.points();
    let jobs: Vec<(usize, u64)> = (0..points.len()).flat_map(|i| seeds.seeds().iter().map(move |&s| (i, s))).collect();
    let records: Vec<RunRecord> = jobs.par_iter().map(|&(i, s)| f(&points[i], s)).collect::<Result<_>>()?;
    let k = seeds.len();
    let rows: Vec<CalibrationRow> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let xs: Vec<f64> = records[i * k..(i + 1) * k].iter().map(|r| r.objective).collect();
            let (mean, sd) = mean_sd(&xs);
            CalibrationRow { values: p.clone(), mean, sd, n: k }
        })
        .collect();
    let best = pick_best(&rows);
    Ok(CalibrationReport { grid: grid.clone(), seeds: seeds.clone(), rows, best, records })
}

/// Simulation-backed grid search: every point reuses the same seed set.
pub fn grid_search(
    scenario: &Scenario,
    base: &ControllerSpec,
    grid: &ParameterGrid,
    seeds: &SeedSet,
    objective: &ObjectiveSpec,
) -> Result<CalibrationReport> {
    objective.validate()?;
    scenario.validate()?;
    base.check_compatible(scenario)?;
    let specs = grid
        .points()
        .iter()
        .map(|p| grid.axes.iter().zip(p).try_fold(base.clone(), |c, ((name, _), v)| c.with_parameter(name, *v)))
        .collect::<Result<Vec<_>>>()?;
    let points = grid.points();
    grid_search_with(grid, seeds, |p, seed| {
        let i = points.iter().position(|q| q == p).expect("grid point");
        run_once(scenario, &specs[i], &grid.label(p), seed, objective)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn rec(v: f64, seed: u64) -> RunRecord {
        RunRecord { config_id: String::new(), seed, metrics: BTreeMap::new(), objective: v }
    }

    #[test]
    fn parse_range_and_list() {
        let g = ParameterGrid::parse("K_P=5:50:5").unwrap();
        assert_eq!(g.axes[0].1, (1..=10).map(|k| 5.0 * k as f64).collect::<Vec<_>>());
        let g = ParameterGrid::parse("K_P=1,2; K_I=0:1:0.5").unwrap();
        assert_eq!(g.points().len(), 6);
        assert_eq!(g.points()[1], vec![1.0, 0.5]);
        assert_eq!(g.label(&[1.0, 0.5]), "K_P=1;K_I=0.5");
        for bad in ["", "K_P", "K_P=5:1:1", "K_P=1:2", "K_P=a", "=1"] {
            assert!(ParameterGrid::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn synthetic_minimum_is_found() {
        let g = ParameterGrid::parse("K_P=5:50:5").unwrap();
        let seeds = SeedSet::range(1, 5).unwrap();
        let r = grid_search_with(&g, &seeds, |p, s| Ok(rec((p[0] - 10.0).powi(2) + s as f64 * 1e-3, s))).unwrap();
        assert_eq!(r.rows.len(), 10);
        assert_eq!(r.rows[r.best].values, vec![10.0]);
        assert!(r.rows.iter().all(|row| row.n == 5));
        assert_eq!(r.records.len(), 50);
        assert!(r.records.chunks(5).all(|c| c.iter().map(|x| x.seed).collect::<Vec<_>>() == vec![1, 2, 3, 4, 5]));
    }

    #[test]
    fn ties_go_to_smaller_parameter() {
        let g = ParameterGrid::parse("x=3,1,2").unwrap();
        let r = grid_search_with(&g, &SeedSet::range(0, 2).unwrap(), |_, s| Ok(rec(1.0, s))).unwrap();
        assert_eq!(r.rows[r.best].values, vec![1.0]);
    }

    #[test]
    fn single_point_grid() {
        let g = ParameterGrid::parse("x=4").unwrap();
        let r = grid_search_with(&g, &SeedSet::range(0, 3).unwrap(), |_, s| Ok(rec(s as f64, s))).unwrap();
        assert_eq!((r.rows.len(), r.best, r.rows[0].mean, r.rows[0].sd), (1, 0, 1.0, 1.0));
    }

    #[test]
    fn weight_scaling_keeps_argmin() {
        let g = ParameterGrid::parse("x=0:4:1").unwrap();
        let seeds = SeedSet::range(0, 4).unwrap();
        let f = |lambda: f64| {
            grid_search_with(&g, &seeds, |p, s| Ok(rec(lambda * ((p[0] - 2.5).abs() + s as f64 * 0.1), s))).unwrap()
        };
        let (a, b) = (f(1.0), f(7.0));
        assert_eq!(a.best, b.best);
        for (x, y) in a.rows.iter().zip(&b.rows) {
            assert!((y.mean - 7.0 * x.mean).abs() < 1e-9);
        }
    }
}
