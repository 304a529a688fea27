use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use sha2::{Digest, Sha256};
use tcbench_core::experiments::{
    calibration_csv, calibration_table, compare_records, comparison_csv, grid_search, num, records_csv, run_replications, simulate,
    summary_table, Family, ParameterGrid, ReportHeader, RunTrace, Scenario, SeedSet, SummaryRow,
};
use tcbench_core::stats::{t_two_sample, SampleSummary, TestFlag, TestKind, TestResult};

use crate::cli::{Command, Format, TestArg};
use crate::config::{ConfigError, ExperimentConfig};
use crate::plot::{line_chart, spat_chart};

/// How a successful command ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    /// Statistical input was degenerate and `--strict` was given.
    Degenerate,
}

/// Global switches shared by every subcommand.
#[derive(Debug, Clone, Copy)]
pub struct Globals {
    pub format: Format,
    pub strict: bool,
}

pub fn run(cmd: &Command, g: Globals) -> Result<Outcome> {
    match cmd {
        Command::Simulate { config, seed, out } => cmd_simulate(config, *seed, out.as_deref(), g),
        Command::Calibrate { config, grid, seeds, out } => cmd_calibrate(config, grid, seeds.as_deref(), out.as_deref(), g),
        Command::Compare { config_a, config_b, summary_stats, seeds, metric, test, alpha, out } => match summary_stats {
            Some(s) => cmd_compare_summary(&s[0], &s[1], *alpha, g),
            None => cmd_compare(
                config_a.as_deref().context("missing config_a")?,
                config_b.as_deref().context("missing config_b")?,
                seeds.as_deref(),
                metric,
                *test,
                *alpha,
                out.as_deref(),
                g,
            ),
        },
        Command::Report { runs, metric } => cmd_report(runs, metric, g),
    }
}

/// Process exit code for an error: 2 for configuration problems, else 1.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<tcbench_core::Error>() {
            return match e {
                tcbench_core::Error::Config(_) | tcbench_core::Error::Lookup { .. } => 2,
                _ => 1,
            };
        }
    }
    1
}

/// `"20"` is a count starting at 1, `"1,2,3"` an explicit list.
pub fn parse_seeds(spec: &str) -> Result<SeedSet> {
    let spec = spec.trim();
    if spec.contains(',') {
        let list = spec.split(',').map(|s| s.trim().parse::<u64>()).collect::<Result<Vec<_>, _>>().context("seed list must be integers")?;
        Ok(SeedSet::new(list)?)
    } else {
        let n: usize = spec.parse().with_context(|| format!("`{spec}` is neither a seed count nor a comma-separated list"))?;
        Ok(SeedSet::range(1, n)?)
    }
}

fn out_dir(flag: Option<&Path>, cfg: Option<&ExperimentConfig>) -> PathBuf {
    flag.map(Path::to_path_buf).or_else(|| cfg.and_then(|c| c.output_dir.clone())).unwrap_or_else(|| PathBuf::from("out"))
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let p = dir.join(name);
    if let Some(parent) = p.parent() {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(&p, body).with_context(|| format!("writing {}", p.display()))
}

fn header(cfg: &ExperimentConfig, seeds: SeedSet, command: &str) -> ReportHeader {
    let mut notes = vec![
        ("command".to_string(), command.to_string()),
        ("controller".to_string(), cfg.controller.kind().to_string()),
        ("objective".to_string(), cfg.objective.render()),
    ];
    if cfg.scenario.family() == Family::Freeway {
        notes.push((
            "occupancy_violation".into(),
            "mean over post-warm-up metric cycles and all ramp downstream detectors".into(),
        ));
    }
    ReportHeader { config_hash: cfg.hash.clone(), seeds, notes }
}

fn cmd_simulate(path: &Path, seed: Option<u64>, out: Option<&Path>, g: Globals) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(path)?;
    let seed = seed.unwrap_or(cfg.seeds.seeds()[0]);
    let dir = out_dir(out, Some(&cfg));
    let (metrics, trace) = simulate(&cfg.scenario, &cfg.controller, seed, true).with_context(|| format!("simulating seed {seed}"))?;
    let objective = cfg.objective.evaluate(&metrics)?;
    let h = header(&cfg, SeedSet::new(vec![seed])?, "simulate").render();

    let mut m = format!("{h}metric,value\n");
    for (k, v) in &metrics {
        let _ = writeln!(m, "{k},{}", num(*v));
    }
    let _ = writeln!(m, "objective,{}", num(objective));
    write(&dir, "metrics.csv", &m)?;

    match &cfg.scenario {
        Scenario::Freeway(sc) => write_freeway(&dir, &h, &trace, sc.target_occupancy)?,
        Scenario::Urban(net) => {
            let phases: Vec<(String, usize)> = net.intersections.iter().map(|i| (i.id.clone(), i.phases.len())).collect();
            write_urban(&dir, &h, &trace, &phases, net.warmup_s)?;
        }
    }
    match g.format {
        Format::Csv => print!("{m}"),
        Format::Table => {
            let w = metrics.keys().map(String::len).max().unwrap_or(0).max(9);
            println!("seed {seed}, controller {}, outputs in {}", cfg.controller.kind(), dir.display());
            for (k, v) in &metrics {
                println!("{k:<w$}  {v:>14.4}");
            }
            println!("{:<w$}  {objective:>14.4}", "objective");
        }
    }
    Ok(Outcome::Ok)
}

fn series_by<T>(rows: &[T], key: impl Fn(&T) -> String, point: impl Fn(&T) -> (f64, f64)) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut out: Vec<(String, Vec<(f64, f64)>)> = vec![];
    for r in rows {
        let k = key(r);
        match out.iter_mut().find(|(n, _)| *n == k) {
            Some((_, pts)) => pts.push(point(r)),
            None => out.push((k, vec![point(r)])),
        }
    }
    out
}

fn write_freeway(dir: &Path, h: &str, t: &RunTrace, target: f64) -> Result<()> {
    let mut rates = format!("{h}t,ramp,rate,occupancy,queue_m,mode\n");
    for r in &t.ramps {
        let _ = writeln!(rates, "{},{},{},{},{},{}", num(r.t), r.ramp, num(r.rate), num(r.occupancy), num(r.queue_m), r.mode);
    }
    write(dir, "rates.csv", &rates)?;
    let mut det = format!("{h}t,detector,flow_veh_h,speed_m_s,occupancy_pct\n");
    for d in &t.detectors {
        let _ = writeln!(det, "{},{},{},{},{}", num(d.t), d.detector, num(d.flow_veh_h), num(d.speed_m_s), num(d.occupancy_pct));
    }
    write(dir, "detectors.csv", &det)?;
    let ramp = |r: &tcbench_core::experiments::RampRow| r.ramp.clone();
    write(
        dir,
        "plots/occupancy.svg",
        &line_chart("Downstream occupancy", "time [s]", "occupancy [%]", &series_by(&t.ramps, ramp, |r| (r.t, r.occupancy)), Some(target)),
    )?;
    write(dir, "plots/queue.svg", &line_chart("Ramp queue", "time [s]", "queue [m]", &series_by(&t.ramps, ramp, |r| (r.t, r.queue_m)), None))?;
    write(dir, "plots/rate.svg", &line_chart("Metering rate", "time [s]", "rate [%]", &series_by(&t.ramps, ramp, |r| (r.t, r.rate)), None))
}

/// SPAT window shown in the timeline plots, seconds after warm-up.
const SPAT_WINDOW_S: f64 = 210.0;

fn write_urban(dir: &Path, h: &str, t: &RunTrace, phases: &[(String, usize)], warmup_s: f64) -> Result<()> {
    let mut spat = format!("{h}t,intersection,phase,color\n");
    for e in &t.spat {
        let _ = writeln!(spat, "{},{},{},{}", num(e.t), e.intersection, e.phase, e.color.code());
    }
    write(dir, "spat.csv", &spat)?;
    let opt = |x: Option<f64>| x.map_or(String::new(), num);
    let mut dec = format!("{h}t,cycle,intersection,phase,green_s,t_c,offset_s\n");
    for d in &t.decisions {
        let _ = writeln!(dec, "{},{},{},{},{},{},{}", num(d.t), d.cycle, d.intersection, d.phase, num(d.green_s), opt(d.t_c), opt(d.offset_s));
    }
    write(dir, "decisions.csv", &dec)?;
    for (id, n) in phases {
        write(dir, &format!("plots/spat_{id}.svg"), &spat_chart(id, *n, &t.spat, warmup_s, warmup_s + SPAT_WINDOW_S))?;
    }
    let with_cycle: Vec<_> = t.decisions.iter().filter(|d| d.t_c.is_some() && d.phase == 0).collect();
    let chart = if with_cycle.is_empty() {
        let greens = series_by(&t.decisions, |d| d.intersection.clone(), |d| (d.t, d.green_s));
        line_chart("Green durations", "time [s]", "green [s]", &greens, None)
    } else {
        let s = series_by(&with_cycle, |d| d.intersection.clone(), |d| (d.t, d.t_c.unwrap_or(0.0)));
        line_chart("Cycle length", "time [s]", "cycle [s]", &s, None)
    };
    write(dir, "plots/cycle.svg", &chart)
}

fn cmd_calibrate(path: &Path, grid: &str, seeds: Option<&str>, out: Option<&Path>, g: Globals) -> Result<Outcome> {
    let cfg = ExperimentConfig::load(path)?;
    let grid_spec = ParameterGrid::parse(grid)?;
    let seeds = seeds.map(parse_seeds).transpose()?.unwrap_or_else(|| cfg.seeds.clone());
    let rep = grid_search(&cfg.scenario, &cfg.controller, &grid_spec, &seeds, &cfg.objective)?;
    let mut h = header(&cfg, seeds, "calibrate");
    h.notes.push(("grid".into(), grid.to_string()));
    let dir = out_dir(out, Some(&cfg));
    let csv = calibration_csv(&h, &rep);
    let table = calibration_table(&h, &rep);
    write(&dir, "calibration.csv", &csv)?;
    write(&dir, "calibration.txt", &table)?;
    write(&dir, "runs.csv", &records_csv(&h, &rep.records))?;
    print!("{}", if g.format == Format::Csv { csv } else { table });
    Ok(Outcome::Ok)
}

fn parse_summary(s: &str) -> Result<SampleSummary> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [mean, sd, n] = parts.as_slice() else {
        bail!(tcbench_core::Error::Config(format!("summary `{s}` must be `mean,sd,n`")));
    };
    let f = |x: &str| x.parse::<f64>().map_err(|_| tcbench_core::Error::Config(format!("`{x}` in `{s}` is not a number")));
    let n: usize = n.parse().map_err(|_| tcbench_core::Error::Config(format!("sample size `{n}` in `{s}` is not an integer")))?;
    Ok(SampleSummary::new(n, f(mean)?, f(sd)?)?)
}

/// Verdict line printed by `compare`.
pub fn verdict(r: &TestResult, alpha: f64) -> String {
    if r.significant(alpha) {
        format!("statistically significant difference at alpha = {alpha}")
    } else {
        format!("no significant difference (not statistically significant at alpha = {alpha})")
    }
}

/// Human-readable test summary.
pub fn render_test(r: &TestResult, alpha: f64) -> String {
    let mut s = String::new();
    let stat = match r.kind {
        TestKind::TwoSampleT | TestKind::PairedT => "t",
        TestKind::WilcoxonSignedRank => "W",
        TestKind::MannWhitneyU => "U",
    };
    let _ = writeln!(s, "test: {}", r.kind.label());
    let _ = writeln!(s, "mean difference: {:.4}", r.mean_difference);
    if let Some((lo, hi)) = r.ci_95 {
        let _ = writeln!(s, "95% CI: [{lo:.4}, {hi:.4}]");
    }
    let _ = writeln!(s, "{stat}: {:.4}", r.statistic);
    if let Some(df) = r.df {
        let _ = writeln!(s, "df: {df}");
    }
    let _ = writeln!(s, "p (one-sided): {:.4}", r.p_one_sided);
    let _ = writeln!(s, "p (two-sided): {:.4}", r.p_two_sided);
    if let Some(d) = r.effect_size {
        let name = if stat == "t" { "Cohen's d" } else { "rank-biserial r" };
        let _ = writeln!(s, "{name}: {d:.4}");
    }
    let _ = writeln!(s, "p-value method: {}", if r.exact { "exact" } else { "approximate" });
    match r.flag {
        TestFlag::Ok => {}
        TestFlag::Degenerate => s.push_str("flag: degenerate (no variability, no difference)\n"),
        TestFlag::InfiniteStatistic => s.push_str("flag: infinite statistic (no variability, non-zero difference)\n"),
    }
    let _ = writeln!(s, "verdict: {}", verdict(r, alpha));
    s
}

fn finish_test(r: &TestResult, g: Globals) -> Outcome {
    if r.flag == TestFlag::Ok {
        return Outcome::Ok;
    }
    eprintln!("warning: degenerate input ({:?})", r.flag);
    if g.strict {
        Outcome::Degenerate
    } else {
        Outcome::Ok
    }
}

fn cmd_compare_summary(a: &str, b: &str, alpha: f64, g: Globals) -> Result<Outcome> {
    let (sa, sb) = (parse_summary(a)?, parse_summary(b)?);
    let r = t_two_sample(&sa, &sb)?;
    match g.format {
        Format::Table => {
            println!("A: mean {}, sd {}, n {}", sa.mean, sa.sd, sa.n);
            println!("B: mean {}, sd {}, n {}", sb.mean, sb.sd, sb.n);
            print!("{}", render_test(&r, alpha));
        }
        Format::Csv => {
            println!("statistic,df,p_one_sided,p_two_sided,mean_difference,ci_low,ci_high,effect_size,significant");
            let (lo, hi) = r.ci_95.unwrap_or((f64::NAN, f64::NAN));
            println!(
                "{},{},{},{},{},{},{},{},{}",
                num(r.statistic),
                r.df.map_or(String::new(), num),
                num(r.p_one_sided),
                num(r.p_two_sided),
                num(r.mean_difference),
                num(lo),
                num(hi),
                r.effect_size.map_or(String::new(), num),
                r.significant(alpha)
            );
        }
    }
    Ok(finish_test(&r, g))
}

#[allow(clippy::too_many_arguments)]
fn cmd_compare(pa: &Path, pb: &Path, seeds: Option<&str>, metric: &str, test: TestArg, alpha: f64, out: Option<&Path>, g: Globals) -> Result<Outcome> {
    let (ca, cb) = (ExperimentConfig::load(pa)?, ExperimentConfig::load(pb)?);
    if ca.scenario.family() != cb.scenario.family() {
        bail!(ConfigError {
            path: pb.to_path_buf(),
            line: 1,
            column: None,
            message: format!("scenario family {} differs from {} in {}", cb.scenario.family().label(), ca.scenario.family().label(), pa.display()),
        });
    }
    let forced = seeds.map(parse_seeds).transpose()?;
    let sa = forced.clone().unwrap_or_else(|| ca.seeds.clone());
    let sb = forced.unwrap_or_else(|| cb.seeds.clone());
    let ra = run_replications(&ca.scenario, &ca.controller, "A", &sa, &ca.objective)?;
    let rb = run_replications(&cb.scenario, &cb.controller, "B", &sb, &cb.objective)?;
    let kind = match test {
        TestArg::PairedT => TestKind::PairedT,
        TestArg::Wilcoxon => TestKind::WilcoxonSignedRank,
    };
    let c = compare_records(&ra, &rb, metric, kind)?;
    let mut hash = Sha256::new();
    hash.update(ca.hash.as_bytes());
    hash.update(cb.hash.as_bytes());
    let h = ReportHeader {
        config_hash: hex::encode(hash.finalize()),
        seeds: sa,
        notes: vec![
            ("command".into(), "compare".into()),
            ("A".into(), format!("{} ({})", pa.display(), ca.controller.kind())),
            ("B".into(), format!("{} ({})", pb.display(), cb.controller.kind())),
            ("metric".into(), metric.to_string()),
        ],
    };
    let csv = comparison_csv(&h, &c);
    write(&out_dir(out, Some(&ca)), "comparison.csv", &csv)?;
    match g.format {
        Format::Csv => print!("{csv}"),
        Format::Table => {
            println!("metric: {metric}; A = {} ({}), B = {} ({}); {} paired seeds", pa.display(), ca.controller.kind(), pb.display(), cb.controller.kind(), c.pairs.len());
            print!("{}", render_test(&c.result, alpha));
        }
    }
    Ok(finish_test(&c.result, g))
}

/// Config label, seed, value of the chosen column.
type RunValue = (String, u64, f64);

/// Header comments and rows of a `runs.csv`.
fn read_runs(path: &Path, metric: &str) -> Result<(Vec<String>, Vec<RunValue>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let comments: Vec<String> = text.lines().filter(|l| l.starts_with('#')).map(str::to_string).collect();
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let head: Vec<&str> = lines.next().context("runs file has no header")?.split(',').collect();
    let col = head.iter().position(|c| *c == metric).ok_or_else(|| tcbench_core::Error::Lookup { kind: "metric", id: metric.to_string() })?;
    let (ci, si) = match (head.iter().position(|c| *c == "config"), head.iter().position(|c| *c == "seed")) {
        (Some(c), Some(s)) => (c, s),
        _ => bail!("{} is not a runs file (needs config and seed columns)", path.display()),
    };
    let mut rows = vec![];
    for (k, l) in lines.enumerate() {
        let f: Vec<&str> = l.split(',').collect();
        let bad = || format!("{}: malformed data row {}", path.display(), k + 1);
        let seed = f.get(si).and_then(|s| s.parse().ok()).with_context(bad)?;
        let v = f.get(col).and_then(|s| s.parse().ok()).with_context(bad)?;
        rows.push((f.get(ci).with_context(bad)?.to_string(), seed, v));
    }
    Ok((comments, rows))
}

fn cmd_report(paths: &[PathBuf], metric: &str, g: Globals) -> Result<Outcome> {
    let mut all = vec![];
    let mut hash = Sha256::new();
    for p in paths {
        hash.update(std::fs::read(p).with_context(|| format!("reading {}", p.display()))?);
        all.extend(read_runs(p, metric)?.1);
    }
    let mut groups: Vec<(String, Vec<(u64, f64)>)> = vec![];
    for (cfg, seed, v) in all {
        match groups.iter_mut().find(|(c, _)| *c == cfg) {
            Some((_, xs)) => xs.push((seed, v)),
            None => groups.push((cfg, vec![(seed, v)])),
        }
    }
    if groups.is_empty() {
        bail!("no runs found");
    }
    let seed_lists: BTreeMap<Vec<u64>, ()> = groups.iter().map(|(_, xs)| (xs.iter().map(|x| x.0).collect(), ())).collect();
    if seed_lists.len() > 1 {
        eprintln!("warning: configurations were run on different seed lists; comparisons are not paired");
    }
    let rows = groups
        .iter()
        .map(|(c, xs)| {
            let s = SampleSummary::from_samples(&xs.iter().map(|x| x.1).collect::<Vec<_>>())?;
            Ok(SummaryRow { label: c.clone(), mean: s.mean, sd: s.sd, n: s.n })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = (0..rows.len()).min_by(|&a, &b| rows[a].mean.total_cmp(&rows[b].mean)).unwrap_or(0);
    let h = ReportHeader {
        config_hash: hex::encode(hash.finalize()),
        seeds: SeedSet::new(groups[0].1.iter().map(|x| x.0).collect())?,
        notes: vec![("command".into(), "report".into()), ("metric".into(), metric.to_string())],
    };
    match g.format {
        Format::Table => print!("{}", summary_table(&h, "config", &rows, best, &rows[best].label)),
        Format::Csv => {
            println!("{}config,mean,sd,n", h.render());
            for r in &rows {
                println!("{},{},{},{}", r.label, num(r.mean), num(r.sd), r.n);
            }
        }
    }
    Ok(Outcome::Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_specs() {
        assert_eq!(parse_seeds("3").unwrap().seeds(), &[1, 2, 3]);
        assert_eq!(parse_seeds("7, 2,9").unwrap().seeds(), &[7, 2, 9]);
        assert!(parse_seeds("1,1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn summary_triples() {
        let s = parse_summary("13.041,2.438,20").unwrap();
        assert_eq!((s.mean, s.sd, s.n), (13.041, 2.438, 20));
        let e = parse_summary("1,2").unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }
}
