use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::freeway::FreewayScenario;
use crate::ramp_control::{AlineaParams, HeroParams, MetalineParams};
use crate::signal_control::{IntersectionGroup, MpFixedParams, MpFlexParams, ScootParams};
use crate::urban::UrbanNetwork;

/// Which plant a scenario or controller belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Freeway,
    Urban,
}

impl Family {
    pub fn label(self) -> &'static str {
        match self {
            Family::Freeway => "freeway",
            Family::Urban => "urban",
        }
    }
}

/// A fully resolved plant description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Scenario {
    Freeway(FreewayScenario),
    Urban(UrbanNetwork),
}

impl Scenario {
    pub fn family(&self) -> Family {
        match self {
            Scenario::Freeway(_) => Family::Freeway,
            Scenario::Urban(_) => Family::Urban,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::Freeway(s) => s.validate(),
            Scenario::Urban(n) => n.validate(),
        }
    }
}

/// Controller kind plus its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControllerSpec {
    /// Freeway: meters fully open. Urban: the network's programmed plans.
    None,
    /// One ALINEA loop per ramp. `overrides` replaces the parameters of
    /// individual ramps, keyed by ramp id.
    Alinea {
        #[serde(default)]
        params: AlineaParams,
        #[serde(default)]
        overrides: BTreeMap<String, AlineaParams>,
    },
    /// Same law with a non-zero K_I term.
    PiAlinea {
        params: AlineaParams,
        #[serde(default)]
        overrides: BTreeMap<String, AlineaParams>,
    },
    Metaline {
        #[serde(default)]
        params: MetalineParams,
    },
    Hero {
        #[serde(default)]
        params: HeroParams,
        /// Child ALINEA per ramp id; every ramp needs one.
        alinea_controllers: BTreeMap<String, AlineaParams>,
    },
    MpFixed {
        #[serde(default)]
        params: MpFixedParams,
    },
    MpFlex {
        #[serde(default)]
        params: MpFlexParams,
    },
    ScootScats {
        #[serde(default)]
        params: ScootParams,
        group: IntersectionGroup,
    },
}

impl ControllerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ControllerSpec::None => "none",
            ControllerSpec::Alinea { .. } => "alinea",
            ControllerSpec::PiAlinea { .. } => "pi_alinea",
            ControllerSpec::Metaline { .. } => "metaline",
            ControllerSpec::Hero { .. } => "hero",
            ControllerSpec::MpFixed { .. } => "mp_fixed",
            ControllerSpec::MpFlex { .. } => "mp_flex",
            ControllerSpec::ScootScats { .. } => "scoot_scats",
        }
    }

    /// `None` fits both families.
    pub fn family(&self) -> Option<Family> {
        match self {
            ControllerSpec::None => None,
            ControllerSpec::Alinea { .. }
            | ControllerSpec::PiAlinea { .. }
            | ControllerSpec::Metaline { .. }
            | ControllerSpec::Hero { .. } => Some(Family::Freeway),
            ControllerSpec::MpFixed { .. } | ControllerSpec::MpFlex { .. } | ControllerSpec::ScootScats { .. } => {
                Some(Family::Urban)
            }
        }
    }

    pub fn check_compatible(&self, scenario: &Scenario) -> Result<()> {
        match self.family() {
            Some(f) if f != scenario.family() => config(format!(
                "controller `{}` drives {} scenarios, but the scenario is {}",
                self.kind(),
                f.label(),
                scenario.family().label()
            )),
            _ => Ok(()),
        }
    }

    /// Copy with every numeric field called `name` set to `value`, wherever
    /// it sits in the parameter tree (e.g. `K_P` of all HERO children).
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        fn walk(v: &mut serde_json::Value, name: &str, value: f64) -> usize {
            match v {
                serde_json::Value::Object(map) => {
                    let mut hits = 0;
                    for (k, child) in map.iter_mut() {
                        if k == name && child.is_number() {
                            *child = serde_json::json!(value);
                            hits += 1;
                        } else {
                            hits += walk(child, name, value);
                        }
                    }
                    hits
                }
                serde_json::Value::Array(items) => items.iter_mut().map(|c| walk(c, name, value)).sum(),
                _ => 0,
            }
        }
        let mut tree = serde_json::to_value(self).map_err(|e| crate::Error::Config(e.to_string()))?;
        if walk(&mut tree, name, value) == 0 {
            return config(format!("controller `{}` has no numeric parameter `{name}`", self.kind()));
        }
        serde_json::from_value(tree).map_err(|e| crate::Error::Config(format!("setting {name}={value}: {e}")))
    }
}

/// Ordered, duplicate-free replication seeds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct SeedSet(Vec<u64>);

impl SeedSet {
    pub fn new(seeds: Vec<u64>) -> Result<Self> {
        if seeds.is_empty() {
            return config("seed list is empty");
        }
        let mut sorted = seeds.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return config(format!("seed {} appears twice", w[0]));
        }
        Ok(Self(seeds))
    }

    /// `base, base + 1, ..., base + count - 1`.
    pub fn range(base: u64, count: usize) -> Result<Self> {
        Self::new((0..count as u64).map(|k| base + k).collect())
    }

    pub fn seeds(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Comma-separated, as embedded in report headers.
    pub fn render(&self) -> String {
        self.0.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    }
}

impl Default for SeedSet {
    fn default() -> Self {
        Self((1..=20).collect())
    }
}

impl TryFrom<Vec<u64>> for SeedSet {
    type Error = crate::Error;
    fn try_from(v: Vec<u64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SeedSet> for Vec<u64> {
    fn from(s: SeedSet) -> Self {
        s.0
    }
}

/// Weighted sum of run metrics to be minimised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    /// `(metric name, weight)` pairs.
    pub terms: Vec<(String, f64)>,
}

impl Default for ObjectiveSpec {
    /// Queue length (weight 1) plus occupancy violation (weight 5).
    fn default() -> Self {
        Self { terms: vec![("mean_queue_length_m".into(), 1.0), ("mean_occupancy_violation".into(), 5.0)] }
    }
}

impl ObjectiveSpec {
    /// The default for a family; urban runs have no occupancy set-point.
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Freeway => Self::default(),
            Family::Urban => Self { terms: vec![("mean_queue_length_m".into(), 1.0)] },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return config("objective has no terms");
        }
        if let Some((m, w)) = self.terms.iter().find(|(_, w)| !(*w >= 0.0 && w.is_finite())) {
            return config(format!("objective weight of `{m}` must be finite and >= 0, got {w}"));
        }
        Ok(())
    }

    pub fn evaluate(&self, metrics: &BTreeMap<String, f64>) -> Result<f64> {
        let mut total = 0.0;
        for (m, w) in &self.terms {
            let v = metrics.get(m).ok_or_else(|| crate::Error::Lookup { kind: "metric", id: m.clone() })?;
            total += w * v;
        }
        Ok(total)
    }

    /// `1*mean_queue_length_m + 5*mean_occupancy_violation`
    pub fn render(&self) -> String {
        self.terms.iter().map(|(m, w)| format!("{w}*{m}")).collect::<Vec<_>>().join(" + ")
    }
}
