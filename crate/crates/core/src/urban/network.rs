use serde::{Deserialize, Serialize};

use crate::error::{config, Result};
use crate::freeway::{ArrivalProcess, DemandStep};

/// Turn target meaning "leaves the modelled network".
pub const EXIT: &str = "exit";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub id: String,
    /// Upstream intersection; `None` for links fed by a source.
    #[serde(default)]
    pub from: Option<String>,
    /// Downstream intersection; `None` for links that drain out of the network.
    #[serde(default)]
    pub to: Option<String>,
    pub length_m: f64,
    pub lanes: u32,
    /// Storage capacity C_z in vehicles (transit plus queue).
    pub storage_veh: f64,
    /// Saturation flow s_z, veh/s.
    pub sat_flow: f64,
    pub freeflow_tt_s: f64,
}

fn default_tl() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntersectionSpec {
    pub id: String,
    /// Served link ids per phase, in signal order.
    pub phases: Vec<Vec<String>>,
    #[serde(default = "default_tl")]
    pub transition_s: f64,
    /// Greens used until a controller installs its own plan.
    pub initial_greens: Vec<f64>,
    #[serde(default = "default_initial_cycle")]
    pub initial_cycle_s: f64,
}

fn default_initial_cycle() -> f64 {
    120.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TurnSpec {
    pub from: String,
    /// `(target link or "exit", ratio)` pairs summing to one.
    pub to: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrbanSource {
    pub link: String,
    #[serde(default = "one")]
    pub streams: u32,
    pub profile: Vec<DemandStep>,
}

fn one() -> u32 {
    1
}
fn default_dt() -> f64 {
    0.25
}
fn default_warmup() -> f64 {
    600.0
}
fn default_horizon() -> f64 {
    4200.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UrbanNetwork {
    pub intersections: Vec<IntersectionSpec>,
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub turns: Vec<TurnSpec>,
    pub sources: Vec<UrbanSource>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_warmup")]
    pub warmup_s: f64,
    #[serde(default = "default_horizon")]
    pub horizon_s: f64,
    #[serde(default)]
    pub arrivals: ArrivalProcess,
}

/// Resolved turn target.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    Link(usize),
    Exit,
}

fn is_multiple(x: f64, step: f64) -> bool {
    let k = (x / step).round();
    k >= 0.0 && (k * step - x).abs() < 1e-9
}

impl UrbanNetwork {
    pub fn steps_per(&self, seconds: f64) -> u64 {
        (seconds / self.dt).round() as u64
    }

    pub fn horizon_steps(&self) -> u64 {
        self.steps_per(self.horizon_s)
    }

    pub fn warmup_steps(&self) -> u64 {
        self.steps_per(self.warmup_s)
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.links.iter().position(|l| l.id == id)
    }

    pub fn intersection_index(&self, id: &str) -> Option<usize> {
        self.intersections.iter().position(|n| n.id == id)
    }

    /// Served link indices per phase of intersection `n`.
    pub fn phase_links(&self, n: usize) -> Vec<Vec<usize>> {
        self.intersections[n]
            .phases
            .iter()
            .map(|p| p.iter().map(|id| self.link_index(id).expect("validated")).collect())
            .collect()
    }

    /// Incoming links I_n in link order.
    pub fn incoming(&self, n: usize) -> Vec<usize> {
        let id = &self.intersections[n].id;
        (0..self.links.len()).filter(|&z| self.links[z].to.as_deref() == Some(id.as_str())).collect()
    }

    /// Resolved turn split of link `z`; links draining out of the network exit entirely.
    pub fn turn_targets(&self, z: usize) -> Vec<(Target, f64)> {
        match self.turns.iter().find(|t| t.from == self.links[z].id) {
            Some(t) => t
                .to
                .iter()
                .map(|(id, r)| {
                    let target = if id == EXIT { Target::Exit } else { Target::Link(self.link_index(id).expect("validated")) };
                    (target, *r)
                })
                .collect(),
            None => vec![(Target::Exit, 1.0)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !is_multiple(1.0, self.dt) {
            return config(format!("dt must divide one second exactly, got {}", self.dt));
        }
        if !is_multiple(self.horizon_s, self.dt) || !is_multiple(self.warmup_s, self.dt) || self.warmup_s >= self.horizon_s {
            return config("warmup_s and horizon_s must be multiples of dt with warmup_s < horizon_s");
        }
        let mut ids: Vec<&str> = self.links.iter().map(|l| l.id.as_str()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) || ids.contains(&EXIT) {
            return config("link ids must be unique and must not be `exit`");
        }
        let mut nids: Vec<&str> = self.intersections.iter().map(|n| n.id.as_str()).collect();
        nids.sort_unstable();
        if nids.windows(2).any(|w| w[0] == w[1]) {
            return config("intersection ids must be unique");
        }
        for l in &self.links {
            for end in [&l.from, &l.to].into_iter().flatten() {
                if self.intersection_index(end).is_none() {
                    return config(format!("link {}: unknown intersection `{end}`", l.id));
                }
            }
            if !(l.storage_veh >= 1.0) {
                return config(format!("link {}: storage_veh must be >= 1", l.id));
            }
            if l.lanes == 0 || !(l.sat_flow > 0.0) || !(l.length_m > 0.0) || !(l.freeflow_tt_s >= 0.0) {
                return config(format!("link {}: lanes, sat_flow and length_m must be > 0", l.id));
            }
        }
        for (n, spec) in self.intersections.iter().enumerate() {
            if spec.phases.is_empty() {
                return config(format!("intersection {}: no phases", spec.id));
            }
            if !(spec.transition_s >= 0.0) || !is_multiple(spec.transition_s, self.dt) {
                return config(format!("intersection {}: transition_s must be a non-negative multiple of dt", spec.id));
            }
            let incoming = self.incoming(n);
            for (j, p) in spec.phases.iter().enumerate() {
                if p.is_empty() {
                    return config(format!("intersection {} phase {j}: serves no link", spec.id));
                }
                for id in p {
                    match self.link_index(id) {
                        Some(z) if incoming.contains(&z) => {}
                        _ => return config(format!("intersection {} phase {j}: `{id}` is not an incoming link", spec.id)),
                    }
                }
                let mut sorted = p.clone();
                sorted.sort();
                for (k, q) in spec.phases.iter().enumerate().skip(j + 1) {
                    let mut other = q.clone();
                    other.sort();
                    if other == sorted {
                        return config(format!("intersection {}: phases {j} and {k} are identical", spec.id));
                    }
                }
            }
            for z in &incoming {
                if !spec.phases.iter().any(|p| p.contains(&self.links[*z].id)) {
                    return config(format!("intersection {}: incoming link {} is never served", spec.id, self.links[*z].id));
                }
            }
            if spec.initial_greens.len() != spec.phases.len() || spec.initial_greens.iter().any(|g| !(*g > 0.0)) {
                return config(format!("intersection {}: initial_greens must give one positive green per phase", spec.id));
            }
            let need = spec.initial_greens.iter().sum::<f64>() + spec.phases.len() as f64 * spec.transition_s;
            if spec.initial_cycle_s + 1e-9 < need {
                return config(format!("intersection {}: initial cycle {} shorter than greens plus transitions {need}", spec.id, spec.initial_cycle_s));
            }
        }
        for t in &self.turns {
            let Some(z) = self.link_index(&t.from) else {
                return config(format!("turn ratios given for unknown link `{}`", t.from));
            };
            let Some(node) = &self.links[z].to else {
                return config(format!("link {} leaves the network and cannot have turn ratios", t.from));
            };
            let sum: f64 = t.to.iter().map(|(_, r)| r).sum();
            if (sum - 1.0).abs() > 1e-9 || t.to.iter().any(|(_, r)| !(*r >= 0.0)) {
                return config(format!("turn ratios out of link {} must be non-negative and sum to 1, got {sum}", t.from));
            }
            for (target, _) in &t.to {
                if target == EXIT {
                    continue;
                }
                match self.link_index(target) {
                    Some(k) if self.links[k].from.as_ref() == Some(node) => {}
                    _ => return config(format!("turn from {}: `{target}` is not an outgoing link of {node}", t.from)),
                }
            }
        }
        for z in 0..self.links.len() {
            if self.links[z].to.is_some() && !self.turns.iter().any(|t| t.from == self.links[z].id) {
                return config(format!("link {} enters an intersection but has no turn ratios", self.links[z].id));
            }
        }
        for s in &self.sources {
            match self.link_index(&s.link) {
                Some(z) if self.links[z].from.is_none() => {}
                _ => return config(format!("source link `{}` must exist and have no upstream intersection", s.link)),
            }
            if s.streams == 0 || s.profile.is_empty() {
                return config(format!("source `{}`: needs >= 1 stream and a non-empty profile", s.link));
            }
            if s.profile.windows(2).any(|w| w[1].from_s <= w[0].from_s) {
                return config(format!("source `{}`: profile times must increase", s.link));
            }
            if s.profile.iter().any(|st| !(0.0..=1.0).contains(&st.probability)) {
                return config(format!("source `{}`: probability outside [0, 1]", s.link));
            }
        }
        Ok(())
    }
}
