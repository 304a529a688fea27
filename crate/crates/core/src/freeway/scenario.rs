use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// One homogeneous corridor cell with a triangular fundamental diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellSpec {
    pub length_m: f64,
    pub lanes: u32,
    /// Free-flow speed, m/s.
    pub v_f: f64,
    /// Congestion wave speed, m/s.
    pub w: f64,
    /// Jam density, veh/m/lane.
    pub rho_jam: f64,
    /// Capacity, veh/s/lane.
    pub q_max: f64,
}

impl CellSpec {
    pub fn lanes_f(&self) -> f64 {
        f64::from(self.lanes)
    }

    /// Vehicles the cell holds at jam density.
    pub fn jam_vehicles(&self) -> f64 {
        self.rho_jam * self.length_m * self.lanes_f()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeterMode {
    /// Discharge capped at `q_sat * r / 100` every step.
    Averaged,
    /// Green for the first `(r / 100) * t_c` seconds of each signal cycle.
    #[default]
    Signal,
}

fn default_storage() -> f64 {
    200.0
}
fn default_q_sat() -> f64 {
    0.5
}
fn default_spacing() -> f64 {
    7.5
}
fn default_cycle() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RampSpec {
    pub id: String,
    pub merge_cell: usize,
    #[serde(default = "default_storage")]
    pub storage_m: f64,
    #[serde(default = "default_q_sat")]
    pub q_sat: f64,
    #[serde(default = "default_spacing")]
    pub spacing_m: f64,
    #[serde(default = "default_cycle")]
    pub signal_cycle_s: f64,
    #[serde(default)]
    pub meter_mode: MeterMode,
    /// Mainline detector whose occupancy feeds this ramp's controller.
    pub downstream_detector: String,
    /// Area detector covering the ramp queue.
    pub queue_detector: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffRampSpec {
    pub id: String,
    /// Cell whose outflow is split.
    pub cell: usize,
    /// Fraction of the cell outflow leaving the corridor.
    pub split: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    /// Loop detector at the downstream edge of a cell.
    PointE1,
    /// Area detector over a cell or a ramp queue.
    AreaE2,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorLocation {
    Cell(usize),
    Ramp(String),
}

fn default_detector_length() -> f64 {
    50.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub id: String,
    pub kind: DetectorKind,
    pub location: DetectorLocation,
    #[serde(default = "default_detector_length")]
    pub length_m: f64,
}

/// Piece of a piecewise-constant demand profile, active from `from_s` on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandStep {
    pub from_s: f64,
    /// Spawn probability per stream per second.
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalProcess {
    /// One Bernoulli draw per stream each simulated second.
    #[default]
    Bernoulli,
    /// Deterministic fluid inflow of `probability` veh/s per stream.
    Fluid,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceDemand {
    /// `"mainline"` or an on-ramp id.
    pub source: String,
    /// Independent spawn streams (e.g. one per lane).
    #[serde(default = "one")]
    pub streams: u32,
    pub profile: Vec<DemandStep>,
}

/// Probability in force at time `t_s` (zero before the first step).
pub fn profile_probability(profile: &[DemandStep], t_s: f64) -> f64 {
    profile.iter().take_while(|s| s.from_s <= t_s).last().map_or(0.0, |s| s.probability)
}

impl SourceDemand {
    pub fn probability_at(&self, t_s: f64) -> f64 {
        profile_probability(&self.profile, t_s)
    }
}

pub const MAINLINE: &str = "mainline";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GeometryVersion {
    /// Auxiliary lane over 200 m at each merge.
    #[default]
    #[serde(rename = "V1_aux200")]
    V1Aux200,
    #[serde(rename = "V2_noaux")]
    V2NoAux,
    /// Auxiliary lane over 300 m at each merge.
    #[serde(rename = "V3_aux300")]
    V3Aux300,
}

impl GeometryVersion {
    pub fn aux_length_m(self) -> f64 {
        match self {
            GeometryVersion::V1Aux200 => 200.0,
            GeometryVersion::V2NoAux => 0.0,
            GeometryVersion::V3Aux300 => 300.0,
        }
    }

    /// Capacity multiplier for a merge cell (applied to `q_max` in both the
    /// demand and supply functions): the auxiliary lane adds
    /// `aux / length` lanes' worth of capacity, capped at one lane.
    pub fn merge_multiplier(self, cell: &CellSpec) -> f64 {
        let extra_lanes = (self.aux_length_m() / cell.length_m).min(1.0);
        1.0 + extra_lanes / cell.lanes_f()
    }

    pub fn label(self) -> &'static str {
        match self {
            GeometryVersion::V1Aux200 => "V1_aux200",
            GeometryVersion::V2NoAux => "V2_noaux",
            GeometryVersion::V3Aux300 => "V3_aux300",
        }
    }
}

fn default_dt() -> f64 {
    0.5
}
fn default_warmup() -> f64 {
    600.0
}
fn default_horizon() -> f64 {
    4200.0
}
fn default_target() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreewayScenario {
    pub cells: Vec<CellSpec>,
    #[serde(default)]
    pub on_ramps: Vec<RampSpec>,
    #[serde(default)]
    pub off_ramps: Vec<OffRampSpec>,
    #[serde(default)]
    pub detectors: Vec<DetectorSpec>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_warmup")]
    pub warmup_s: f64,
    #[serde(default = "default_horizon")]
    pub horizon_s: f64,
    pub demand: Vec<SourceDemand>,
    #[serde(default)]
    pub arrivals: ArrivalProcess,
    #[serde(default)]
    pub geometry_version: GeometryVersion,
    /// Set-point used by the occupancy-violation metric.
    #[serde(default = "default_target")]
    pub target_occupancy: f64,
    /// Aggregation period of the occupancy-violation metric.
    #[serde(default = "default_cycle")]
    pub metric_cycle_s: f64,
}

fn is_multiple(x: f64, step: f64) -> bool {
    let k = (x / step).round();
    k >= 0.0 && (k * step - x).abs() < 1e-9
}

impl FreewayScenario {
    pub fn steps_per(&self, seconds: f64) -> u64 {
        (seconds / self.dt).round() as u64
    }

    pub fn horizon_steps(&self) -> u64 {
        self.steps_per(self.horizon_s)
    }

    pub fn warmup_steps(&self) -> u64 {
        self.steps_per(self.warmup_s)
    }

    pub fn ramp_index(&self, id: &str) -> Option<usize> {
        self.on_ramps.iter().position(|r| r.id == id)
    }

    pub fn detector_index(&self, id: &str) -> Option<usize> {
        self.detectors.iter().position(|d| d.id == id)
    }

    /// Supply multiplier per cell from the geometry version.
    pub fn supply_multipliers(&self) -> Vec<f64> {
        let mut m = vec![1.0; self.cells.len()];
        for r in &self.on_ramps {
            m[r.merge_cell] = self.geometry_version.merge_multiplier(&self.cells[r.merge_cell]);
        }
        m
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return config("freeway scenario needs at least one cell");
        }
        if !(self.dt > 0.0) || !is_multiple(1.0, self.dt) {
            return config(format!("dt must divide one second exactly, got {}", self.dt));
        }
        if !is_multiple(self.horizon_s, self.dt) || !is_multiple(self.warmup_s, self.dt) {
            return config("warmup_s and horizon_s must be multiples of dt");
        }
        if self.warmup_s >= self.horizon_s {
            return config(format!("warmup_s ({}) must be shorter than horizon_s ({})", self.warmup_s, self.horizon_s));
        }
        if !(self.metric_cycle_s > 0.0) || !is_multiple(self.metric_cycle_s, self.dt) {
            return config("metric_cycle_s must be a positive multiple of dt");
        }
        for (i, c) in self.cells.iter().enumerate() {
            let fields = [c.length_m, c.v_f, c.w, c.rho_jam, c.q_max];
            if c.lanes == 0 || fields.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
                return config(format!("cell {i}: all fields must be positive"));
            }
            if c.q_max / c.v_f >= c.rho_jam {
                return config(format!("cell {i}: critical density q_max/v_f must lie below rho_jam"));
            }
            if c.v_f * self.dt > c.length_m || c.w * self.dt > c.length_m {
                return config(format!(
                    "cell {i}: CFL condition violated (v_f*dt = {}, w*dt = {}, length = {})",
                    c.v_f * self.dt,
                    c.w * self.dt,
                    c.length_m
                ));
            }
        }
        let mut ids: Vec<&str> = self.on_ramps.iter().map(|r| r.id.as_str()).collect();
        ids.extend(self.off_ramps.iter().map(|r| r.id.as_str()));
        ids.push(MAINLINE);
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != ids.len() {
            return config("ramp ids must be unique and differ from `mainline`");
        }
        for r in &self.on_ramps {
            if r.merge_cell >= self.cells.len() {
                return config(format!("on-ramp {}: merge cell {} does not exist", r.id, r.merge_cell));
            }
            if ![r.storage_m, r.q_sat, r.spacing_m, r.signal_cycle_s].iter().all(|x| x.is_finite() && *x > 0.0) {
                return config(format!("on-ramp {}: storage_m, q_sat, spacing_m and signal_cycle_s must be > 0", r.id));
            }
            if !is_multiple(r.signal_cycle_s, self.dt) {
                return config(format!("on-ramp {}: signal cycle must be a multiple of dt", r.id));
            }
            for det in [&r.downstream_detector, &r.queue_detector] {
                if self.detector_index(det).is_none() {
                    return config(format!("on-ramp {}: detector `{det}` is not defined", r.id));
                }
            }
        }
        for o in &self.off_ramps {
            if o.cell >= self.cells.len() {
                return config(format!("off-ramp {}: cell {} does not exist", o.id, o.cell));
            }
            if !(0.0..1.0).contains(&o.split) {
                return config(format!("off-ramp {}: split must lie in [0, 1)", o.id));
            }
            if self.off_ramps.iter().filter(|x| x.cell == o.cell).count() > 1 {
                return config(format!("cell {} has more than one off-ramp", o.cell));
            }
        }
        let mut det_ids: Vec<&str> = self.detectors.iter().map(|d| d.id.as_str()).collect();
        det_ids.sort_unstable();
        if det_ids.windows(2).any(|w| w[0] == w[1]) {
            return config("detector ids must be unique");
        }
        for d in &self.detectors {
            match &d.location {
                DetectorLocation::Cell(c) if *c >= self.cells.len() => {
                    return config(format!("detector {}: cell {c} does not exist", d.id));
                }
                DetectorLocation::Ramp(r) if self.ramp_index(r).is_none() => {
                    return config(format!("detector {}: ramp `{r}` does not exist", d.id));
                }
                DetectorLocation::Ramp(_) if d.kind != DetectorKind::AreaE2 => {
                    return config(format!("detector {}: ramp detectors must be area_e2", d.id));
                }
                _ => {}
            }
            if !(d.length_m > 0.0) {
                return config(format!("detector {}: length must be > 0", d.id));
            }
        }
        for s in &self.demand {
            if s.source != MAINLINE && self.ramp_index(&s.source).is_none() {
                return config(format!("demand source `{}` is neither `mainline` nor an on-ramp", s.source));
            }
            if s.streams == 0 {
                return config(format!("demand source `{}`: streams must be >= 1", s.source));
            }
            if s.profile.is_empty() {
                return config(format!("demand source `{}`: empty profile", s.source));
            }
            if s.profile.windows(2).any(|w| w[1].from_s <= w[0].from_s) {
                return config(format!("demand source `{}`: profile times must increase", s.source));
            }
            for st in &s.profile {
                if !(0.0..=1.0).contains(&st.probability) {
                    return config(format!(
                        "demand source `{}`: probability {} outside [0, 1]",
                        s.source, st.probability
                    ));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn cell() -> CellSpec {
        CellSpec { length_m: 100.0, lanes: 1, v_f: 20.0, w: 5.0, rho_jam: 0.12, q_max: 0.6 }
    }

    fn scenario() -> FreewayScenario {
        FreewayScenario {
            cells: vec![cell(), cell()],
            on_ramps: vec![],
            off_ramps: vec![],
            detectors: vec![],
            dt: 0.5,
            warmup_s: 10.0,
            horizon_s: 100.0,
            demand: vec![],
            arrivals: ArrivalProcess::Bernoulli,
            geometry_version: GeometryVersion::V2NoAux,
            target_occupancy: 10.0,
            metric_cycle_s: 60.0,
        }
    }

    #[test]
    fn cfl_violation_rejected() {
        let mut s = scenario();
        s.cells[1].length_m = 5.0;
        assert!(matches!(s.validate(), Err(crate::Error::Config(m)) if m.contains("CFL")));
    }

    #[test]
    fn probabilities_checked() {
        let mut s = scenario();
        s.demand.push(SourceDemand { source: MAINLINE.into(), streams: 1, profile: vec![DemandStep { from_s: 0.0, probability: 1.5 }] });
        assert!(s.validate().is_err());
        s.demand[0].profile[0].probability = 1.0;
        assert!(s.validate().is_ok());
    }

    #[test]
    fn dangling_references_rejected() {
        let mut s = scenario();
        s.detectors.push(DetectorSpec { id: "d".into(), kind: DetectorKind::AreaE2, location: DetectorLocation::Cell(7), length_m: 50.0 });
        assert!(s.validate().is_err());
        s.detectors[0].location = DetectorLocation::Ramp("nope".into());
        assert!(s.validate().is_err());
    }

    #[test]
    fn profile_lookup() {
        let d = SourceDemand {
            source: MAINLINE.into(),
            streams: 1,
            profile: vec![DemandStep { from_s: 0.0, probability: 0.1 }, DemandStep { from_s: 50.0, probability: 0.4 }],
        };
        assert_eq!(d.probability_at(0.0), 0.1);
        assert_eq!(d.probability_at(49.5), 0.1);
        assert_eq!(d.probability_at(50.0), 0.4);
    }

    #[test]
    fn geometry_multipliers_order() {
        let c = CellSpec { length_m: 256.25, lanes: 2, ..cell() };
        let v1 = GeometryVersion::V1Aux200.merge_multiplier(&c);
        let v2 = GeometryVersion::V2NoAux.merge_multiplier(&c);
        let v3 = GeometryVersion::V3Aux300.merge_multiplier(&c);
        assert_eq!(v2, 1.0);
        assert!(v2 < v1 && v1 < v3);
        assert_eq!(v3, 1.5);
    }
}
