//! Experiment configuration files (TOML, or JSON by extension).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use tcbench_core::experiments::{check_setup, ControllerSpec, Family, ObjectiveSpec, Scenario, SeedSet};
use tcbench_core::freeway::{ramp_corridor, single_ramp_step, ArrivalProcess, GeometryVersion, SourceDemand};
use tcbench_core::urban::arterial_corridor;

/// Configuration problem anchored to a file position.
#[derive(Debug, thiserror::Error)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: usize,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.column {
            Some(c) => write!(f, "{}:{}:{}: {}", self.path.display(), self.line, c, self.message),
            None => write!(f, "{}:{}: {}", self.path.display(), self.line, self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    RampCorridor,
    SingleRampStep,
    ArterialCorridor,
}

impl Preset {
    fn family(self) -> Family {
        match self {
            Preset::RampCorridor | Preset::SingleRampStep => Family::Freeway,
            Preset::ArterialCorridor => Family::Urban,
        }
    }
}

/// Plant selection: a named preset plus optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub family: Family,
    /// Defaults to `ramp_corridor` (freeway) or `arterial_corridor` (urban).
    pub preset: Option<Preset>,
    pub geometry_version: Option<GeometryVersion>,
    pub dt: Option<f64>,
    pub warmup_s: Option<f64>,
    pub horizon_s: Option<f64>,
    pub arrivals: Option<ArrivalProcess>,
    /// Freeway only: replaces the preset's demand profiles.
    pub demand: Option<Vec<SourceDemand>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedsSection {
    pub list: Option<Vec<u64>>,
    pub count: Option<usize>,
    pub base: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub scenario: ScenarioSection,
    pub controller: ControllerSpec,
    #[serde(default)]
    pub seeds: SeedsSection,
    pub objective: Option<ObjectiveSpec>,
    #[serde(default)]
    pub output: OutputSection,
}

/// A parsed and validated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub path: PathBuf,
    pub scenario: Scenario,
    pub controller: ControllerSpec,
    pub seeds: SeedSet,
    pub objective: ObjectiveSpec,
    pub output_dir: Option<PathBuf>,
    /// SHA-256 over the resolved scenario, controller and objective.
    pub hash: String,
}

/// 1-based line of `key` inside `[section]` (or its sub-tables); falls back
/// to the section header, then to line 1.
fn toml_anchor(src: &str, section: &str, key: Option<&str>) -> usize {
    let mut current = String::new();
    let mut header = None;
    for (i, line) in src.lines().enumerate() {
        let t = line.trim();
        if let Some(name) = t.strip_prefix('[').map(|r| r.trim_start_matches('[').trim_end_matches(']').trim()) {
            current = name.to_string();
            if current == section && header.is_none() {
                header = Some(i + 1);
            }
            continue;
        }
        let in_section = current == section || current.starts_with(&format!("{section}."));
        if let (true, Some(k)) = (in_section, key) {
            let bare = t.strip_prefix(k).map(str::trim_start);
            if bare.is_some_and(|r| r.starts_with('=')) {
                return i + 1;
            }
        }
    }
    header.unwrap_or(1)
}

/// First backticked name in a serde message, e.g. ``unknown field `K_Q` ``.
fn key_named_in(msg: &str) -> Option<&str> {
    let rest = &msg[msg.find('`')? + 1..];
    Some(&rest[..rest.find('`')?])
}

/// First line at or after `from` (1-based) that assigns `key`. Serde
/// reports errors inside a table at the table start, so the key usually
/// sits in that table or one of its sub-tables.
fn key_line_after(src: &str, from: usize, key: &str) -> Option<usize> {
    src.lines()
        .enumerate()
        .skip(from.saturating_sub(1))
        .find(|(_, l)| l.trim().strip_prefix(key).is_some_and(|r| r.trim_start().starts_with('=')))
        .map(|(i, _)| i + 1)
}

fn json_anchor(src: &str, key: &str) -> usize {
    let needle = format!("\"{key}\"");
    src.lines().position(|l| l.contains(&needle)).map_or(1, |i| i + 1)
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
    (line, col)
}

fn resolve_scenario(s: &ScenarioSection) -> Result<Scenario, String> {
    let preset = s.preset.unwrap_or(match s.family {
        Family::Freeway => Preset::RampCorridor,
        Family::Urban => Preset::ArterialCorridor,
    });
    if preset.family() != s.family {
        return Err(format!("preset `{preset:?}` is a {} scenario, but family is {}", preset.family().label(), s.family.label()));
    }
    Ok(match preset {
        Preset::RampCorridor | Preset::SingleRampStep => {
            let mut sc = if preset == Preset::RampCorridor {
                ramp_corridor(s.geometry_version.unwrap_or(GeometryVersion::V2NoAux))
            } else {
                single_ramp_step()
            };
            if let Some(g) = s.geometry_version {
                sc.geometry_version = g;
            }
            if let Some(v) = s.dt {
                sc.dt = v;
            }
            if let Some(v) = s.warmup_s {
                sc.warmup_s = v;
            }
            if let Some(v) = s.horizon_s {
                sc.horizon_s = v;
            }
            if let Some(a) = s.arrivals {
                sc.arrivals = a;
            }
            if let Some(d) = &s.demand {
                sc.demand.clone_from(d);
            }
            Scenario::Freeway(sc)
        }
        Preset::ArterialCorridor => {
            if s.demand.is_some() || s.geometry_version.is_some() {
                return Err("`demand` and `geometry_version` only apply to freeway scenarios".into());
            }
            let mut net = arterial_corridor();
            if let Some(v) = s.dt {
                net.dt = v;
            }
            if let Some(v) = s.warmup_s {
                net.warmup_s = v;
            }
            if let Some(v) = s.horizon_s {
                net.horizon_s = v;
            }
            if let Some(a) = s.arrivals {
                net.arrivals = a;
            }
            Scenario::Urban(net)
        }
    })
}

fn resolve_seeds(s: &SeedsSection) -> Result<SeedSet, String> {
    match (&s.list, s.count) {
        (Some(_), Some(_)) => Err("give either seeds.list or seeds.count, not both".into()),
        (Some(list), None) => SeedSet::new(list.clone()).map_err(|e| e.to_string()),
        (None, count) => SeedSet::range(s.base.unwrap_or(1), count.unwrap_or(20)).map_err(|e| e.to_string()),
    }
}

/// Hex SHA-256 of the canonical JSON form of the resolved experiment.
pub fn config_hash(scenario: &Scenario, controller: &ControllerSpec, objective: &ObjectiveSpec) -> String {
    let canonical = serde_json::json!({ "scenario": scenario, "controller": controller, "objective": objective });
    hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let err = |line: usize, column: Option<usize>, message: String| ConfigError { path: path.to_path_buf(), line, column, message };
        let src = std::fs::read_to_string(path).map_err(|e| err(0, None, format!("cannot read config: {e}")))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let raw: RawConfig = if json {
            serde_json::from_str(&src).map_err(|e| err(e.line(), Some(e.column()), e.to_string()))?
        } else {
            toml::from_str(&src).map_err(|e| {
                let start = e.span().map_or(0, |s| s.start);
                let (line, col) = line_col(&src, start);
                match key_named_in(e.message()).and_then(|k| key_line_after(&src, line, k)) {
                    Some(l) => err(l, None, e.message().to_string()),
                    None => err(line, Some(col), e.message().to_string()),
                }
            })?
        };
        let anchor = |section: &str, key: Option<&str>| {
            if json {
                json_anchor(&src, key.unwrap_or(section))
            } else {
                toml_anchor(&src, section, key)
            }
        };
        let scenario = resolve_scenario(&raw.scenario).map_err(|m| err(anchor("scenario", Some("preset")), None, m))?;
        let seeds = resolve_seeds(&raw.seeds).map_err(|m| err(anchor("seeds", None), None, m))?;
        let objective = raw.objective.clone().unwrap_or_else(|| ObjectiveSpec::default_for(scenario.family()));
        objective.validate().map_err(|e| err(anchor("objective", Some("terms")), None, e.to_string()))?;
        if let Err(e) = scenario.validate() {
            return Err(err(anchor("scenario", None), None, e.to_string()));
        }
        check_setup(&scenario, &raw.controller).map_err(|e| err(anchor("controller", Some("kind")), None, e.to_string()))?;
        let hash = config_hash(&scenario, &raw.controller, &objective);
        Ok(Self { path: path.to_path_buf(), scenario, controller: raw.controller, seeds, objective, output_dir: raw.output.dir, hash })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors_find_keys_in_sections() {
        let src = "[scenario]\nfamily = \"freeway\"\n\n[controller]\nkind = \"mp_fixed\"\n[controller.params]\nK_P = 3\n";
        assert_eq!(toml_anchor(src, "controller", Some("kind")), 5);
        assert_eq!(toml_anchor(src, "controller", Some("K_P")), 7);
        assert_eq!(toml_anchor(src, "seeds", None), 1);
        assert_eq!(toml_anchor(src, "scenario", Some("missing")), 1);
        assert_eq!(line_col("ab\ncd", 4), (2, 2));
        assert_eq!(key_named_in("unknown field `K_Q`, expected one of `K_P`"), Some("K_Q"));
        assert_eq!(key_line_after(src, 6, "K_P"), Some(7));
        assert_eq!(key_line_after(src, 1, "K_P"), Some(7));
        assert_eq!(key_line_after(src, 8, "K_P"), None);
    }

    #[test]
    fn seeds_forms() {
        let s = |list: Option<Vec<u64>>, count, base| resolve_seeds(&SeedsSection { list, count, base });
        assert_eq!(s(None, None, None).unwrap().len(), 20);
        assert_eq!(s(None, Some(3), Some(10)).unwrap().seeds(), &[10, 11, 12]);
        assert_eq!(s(Some(vec![5, 1]), None, None).unwrap().seeds(), &[5, 1]);
        assert!(s(Some(vec![1]), Some(1), None).is_err());
        assert!(s(Some(vec![1, 1]), None, None).is_err());
    }
}
