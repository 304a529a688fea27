use std::fmt::Write;

use super::calibrate::CalibrationReport;
use super::compare::Comparison;
use super::run::RunRecord;
use super::spec::SeedSet;

/// Provenance lines written at the top of every report (`# key: value`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReportHeader {
    pub config_hash: String,
    pub seeds: SeedSet,
    /// Extra `key: value` lines, in order.
    pub notes: Vec<(String, String)>,
}

impl ReportHeader {
    pub fn render(&self) -> String {
        let mut s = format!("# tcbench {}\n# config_hash: {}\n# seeds: {}\n", crate::VERSION, self.config_hash, self.seeds.render());
        for (k, v) in &self.notes {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s
    }
}

/// Shortest text that round-trips the value; stable across platforms.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

/// `config,mean,sd,n`, one row per grid point.
pub fn calibration_csv(h: &ReportHeader, r: &CalibrationReport) -> String {
    let mut s = h.render();
    s.push_str("config,mean,sd,n\n");
    for row in &r.rows {
        let _ = writeln!(s, "{},{},{},{}", r.grid.label(&row.values), num(row.mean), num(row.sd), row.n);
    }
    s
}

/// One row of a summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub label: String,
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

/// Aligned text table in the usual calibration layout: configuration,
/// mean performance, standard deviation, with the best row marked and
/// repeated under `best_label`.
pub fn summary_table(h: &ReportHeader, config_title: &str, rows: &[SummaryRow], best: usize, best_label: &str) -> String {
    let head = [format!("Configuration ({config_title})"), "Mean Performance".to_string(), "Standard Deviation".to_string()];
    let body: Vec<[String; 3]> = rows.iter().map(|r| [r.label.clone(), format!("{:.3}", r.mean), format!("{:.3}", r.sd)]).collect();
    let w: Vec<usize> = (0..3).map(|c| body.iter().map(|b| b[c].len()).chain([head[c].len()]).max().unwrap_or(0)).collect();
    let rule = "-".repeat(w.iter().sum::<usize>() + 4);
    let line = |a: &str, b: &str, c: &str| format!("{a:<w0$}  {b:>w1$}  {c:>w2$}", w0 = w[0], w1 = w[1], w2 = w[2]);
    let mut s = h.render();
    let _ = writeln!(s, "{rule}");
    let _ = writeln!(s, "{}", line(&head[0], &head[1], &head[2]));
    let _ = writeln!(s, "{rule}");
    for (i, b) in body.iter().enumerate() {
        let mark = if i == best { "  <- best" } else { "" };
        let _ = writeln!(s, "{}{mark}", line(&b[0], &b[1], &b[2]));
    }
    let _ = writeln!(s, "{rule}");
    if let Some(b) = rows.get(best) {
        let _ = writeln!(s, "best: {best_label} (mean {:.3}, sd {:.3}, n {})", b.mean, b.sd, b.n);
    }
    if rows.len() > 2 {
        s.push_str("note: pairwise tests between several configurations are not corrected for multiple comparisons\n");
    }
    s
}

/// [`summary_table`] for a grid search.
pub fn calibration_table(h: &ReportHeader, r: &CalibrationReport) -> String {
    let rows: Vec<SummaryRow> = r
        .rows
        .iter()
        .map(|row| SummaryRow { label: row.values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(", "), mean: row.mean, sd: row.sd, n: row.n })
        .collect();
    summary_table(h, &r.grid.names().join(", "), &rows, r.best, &r.grid.label(&r.rows[r.best].values))
}

/// `config,seed,objective,<metrics...>` for every run.
pub fn records_csv(h: &ReportHeader, records: &[RunRecord]) -> String {
    let mut s = h.render();
    let metrics: Vec<&String> = records.first().map(|r| r.metrics.keys().collect()).unwrap_or_default();
    let _ = writeln!(s, "config,seed,objective{}", metrics.iter().map(|m| format!(",{m}")).collect::<String>());
    for r in records {
        let vals: String = metrics.iter().map(|m| format!(",{}", r.metrics.get(*m).map_or("nan".into(), |v| num(*v)))).collect();
        let _ = writeln!(s, "{},{},{}{vals}", r.config_id, r.seed, num(r.objective));
    }
    s
}

/// `seed,metric_A,metric_B,diff`
pub fn comparison_csv(h: &ReportHeader, c: &Comparison) -> String {
    let mut s = h.render();
    s.push_str("seed,metric_A,metric_B,diff\n");
    for p in &c.pairs {
        let _ = writeln!(s, "{},{},{},{}", p.seed, num(p.a), num(p.b), num(p.diff));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{grid_search_with, ParameterGrid};
    use std::collections::BTreeMap;

    fn header() -> ReportHeader {
        ReportHeader { config_hash: "abc".into(), seeds: SeedSet::range(1, 2).unwrap(), notes: vec![("objective".into(), "x".into())] }
    }

    #[test]
    fn header_lines() {
        let h = header().render();
        assert!(h.starts_with("# tcbench "));
        assert!(h.contains("# config_hash: abc\n# seeds: 1,2\n# objective: x\n"));
    }

    #[test]
    fn calibration_outputs() {
        let g = ParameterGrid::parse("K_P=5,10").unwrap();
        let r = grid_search_with(&g, &SeedSet::range(1, 2).unwrap(), |p, s| {
            Ok(RunRecord { config_id: g.label(p), seed: s, metrics: BTreeMap::new(), objective: p[0] + s as f64 })
        })
        .unwrap();
        let csv = calibration_csv(&header(), &r);
        assert!(csv.ends_with("config,mean,sd,n\nK_P=5,6.5,0.7071067811865476,2\nK_P=10,11.5,0.7071067811865476,2\n"));
        let t = calibration_table(&header(), &r);
        assert!(t.contains("Configuration (K_P)  Mean Performance  Standard Deviation"));
        assert!(t.contains("5                               6.500               0.707  <- best"));
        assert!(t.contains("best: K_P=5 (mean 6.500, sd 0.707, n 2)"));
    }
}
