use serde::{Deserialize, Serialize};

use super::{AlineaParams, AlineaState};
use crate::error::{config, contract, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeroParams {
    /// Coordination period in seconds. Must equal every child's cycle.
    pub hero_period: f64,
    pub queue_activation_threshold_m: f64,
    pub queue_release_threshold_m: f64,
    /// Queue a slave is driven towards, in metres.
    pub min_queue_setpoint_m: f64,
    pub anticipation_factor: f64,
    pub avg_vehicle_spacing: f64,
}

impl Default for HeroParams {
    fn default() -> Self {
        Self {
            hero_period: 60.0,
            queue_activation_threshold_m: 15.0,
            queue_release_threshold_m: 2.5,
            min_queue_setpoint_m: 5.0,
            anticipation_factor: 1.0,
            avg_vehicle_spacing: 7.5,
        }
    }
}

impl HeroParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.queue_release_threshold_m < self.queue_activation_threshold_m) {
            return config(format!(
                "queue_release_threshold_m ({}) must be below queue_activation_threshold_m ({})",
                self.queue_release_threshold_m, self.queue_activation_threshold_m
            ));
        }
        if !(self.avg_vehicle_spacing > 0.0) {
            return config("avg_vehicle_spacing must be > 0");
        }
        if !(self.hero_period > 0.0) {
            return config("hero_period must be > 0");
        }
        if self.min_queue_setpoint_m < 0.0 || self.anticipation_factor < 0.0 {
            return config("min_queue_setpoint_m and anticipation_factor must be >= 0");
        }
        Ok(())
    }

    /// Slave queue set-point in vehicles.
    pub fn n_max(&self) -> f64 {
        self.min_queue_setpoint_m / self.avg_vehicle_spacing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RampMode {
    Normal,
    Master,
    /// Slaved to the master at the given ramp index (always downstream).
    Slave { master: usize },
}

impl RampMode {
    pub fn label(&self) -> &'static str {
        match self {
            RampMode::Normal => "NORMAL",
            RampMode::Master => "MASTER",
            RampMode::Slave { .. } => "SLAVE",
        }
    }
}

/// Per-ramp measurements for one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeroReading {
    pub queue_m: f64,
    /// Vehicles that joined the ramp queue during the last period.
    pub arrivals: f64,
    /// Downstream mainline occupancy, percent.
    pub occupancy: f64,
}

/// HERO coordinator. Ramps are indexed upstream (0) to downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct HeroController {
    pub params: HeroParams,
    pub children: Vec<AlineaState>,
    /// Ramp saturation flows in veh/s.
    pub q_sat: Vec<f64>,
    pub modes: Vec<RampMode>,
}

impl HeroController {
    pub fn new(params: HeroParams, children: Vec<AlineaParams>, q_sat: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if children.len() != q_sat.len() {
            return config(format!("HERO has {} ALINEA children but {} ramps", children.len(), q_sat.len()));
        }
        for c in &children {
            if c.cycle_duration != params.hero_period {
                return config(format!(
                    "hero_period ({}) must equal the child ALINEA cycle_duration ({})",
                    params.hero_period, c.cycle_duration
                ));
            }
        }
        if q_sat.iter().any(|q| !(*q > 0.0)) {
            return config("ramp saturation flow must be > 0");
        }
        let n = q_sat.len();
        Ok(Self {
            params,
            children: children.into_iter().map(AlineaState::new).collect(),
            q_sat,
            modes: vec![RampMode::Normal; n],
        })
    }

    pub fn n_ramps(&self) -> usize {
        self.modes.len()
    }

    fn update_modes(&mut self, queues: &[f64]) {
        let (act, rel) = (self.params.queue_activation_threshold_m, self.params.queue_release_threshold_m);
        let n = self.n_ramps();
        for m in 0..n {
            if self.modes[m] == RampMode::Master && queues[m] < rel {
                for mode in self.modes.iter_mut() {
                    if *mode == (RampMode::Slave { master: m }) {
                        *mode = RampMode::Normal;
                    }
                }
                self.modes[m] = RampMode::Normal;
            }
        }
        for i in (0..n).rev() {
            if self.modes[i] == RampMode::Normal && queues[i] > act {
                self.modes[i] = RampMode::Master;
            }
        }
        // Downstream masters recruit first; one ramp each per period.
        for m in (0..n).rev() {
            if self.modes[m] != RampMode::Master || !(queues[m] > act) {
                continue;
            }
            let upstream_end = (0..m)
                .rev()
                .take_while(|&j| self.modes[j] == RampMode::Slave { master: m })
                .last()
                .unwrap_or(m);
            if upstream_end > 0 && self.modes[upstream_end - 1] == RampMode::Normal {
                self.modes[upstream_end - 1] = RampMode::Slave { master: m };
            }
        }
    }

    /// Slave law: drive the queue towards `N_max` within one period.
    pub fn slave_rate(&self, ramp: usize, reading: &HeroReading) -> f64 {
        let p = &self.params;
        let child = &self.children[ramp].params;
        let n_t = reading.queue_m / p.avg_vehicle_spacing;
        let q_ctrl = (p.n_max() - n_t + p.anticipation_factor * reading.arrivals) / p.hero_period;
        (100.0 * q_ctrl / self.q_sat[ramp]).clamp(child.min_rate, child.max_rate)
    }

    /// One coordination period: update modes, then compute every ramp's rate.
    pub fn update(&mut self, readings: &[HeroReading]) -> Result<Vec<f64>> {
        if readings.len() != self.n_ramps() {
            return contract(format!("HERO expects {} readings, got {}", self.n_ramps(), readings.len()));
        }
        let queues: Vec<f64> = readings.iter().map(|r| r.queue_m).collect();
        self.update_modes(&queues);
        let mut rates = Vec::with_capacity(readings.len());
        for (i, r) in readings.iter().enumerate() {
            let rate = match self.modes[i] {
                RampMode::Normal | RampMode::Master => self.children[i].update(r.occupancy),
                RampMode::Slave { .. } => {
                    let rate = self.slave_rate(i, r);
                    // keeps the child bumpless when the slave is released
                    self.children[i].sync(rate, r.occupancy);
                    rate
                }
            };
            rates.push(rate);
        }
        Ok(rates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn controller(n: usize) -> HeroController {
        HeroController::new(HeroParams::default(), vec![AlineaParams::default(); n], vec![0.5; n]).unwrap()
    }

    fn reading(queue_m: f64) -> HeroReading {
        HeroReading { queue_m, arrivals: 0.0, occupancy: 10.0 }
    }

    #[test]
    fn slave_law_example() {
        let h = controller(1);
        let r = h.slave_rate(0, &HeroReading { queue_m: 30.0, arrivals: 6.0, occupancy: 10.0 });
        let expected = 100.0 * ((5.0 / 7.5 - 4.0 + 6.0) / 60.0) / 0.5;
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 8.9).abs() < 0.05);
    }

    #[test]
    fn set_point_reached_gives_min_rate() {
        let h = controller(1);
        assert_eq!(h.slave_rate(0, &reading(5.0)), 5.0);
    }

    #[test]
    fn hysteresis_trace() {
        let mut h = controller(1);
        let mut modes = vec![];
        for q in [16.0, 10.0, 2.0] {
            h.update(&[reading(q)]).unwrap();
            modes.push(h.modes[0]);
        }
        assert_eq!(modes, vec![RampMode::Master, RampMode::Master, RampMode::Normal]);
    }

    #[test]
    fn recruitment_is_one_ramp_per_period() {
        let mut h = controller(4);
        let rs = [reading(0.0), reading(0.0), reading(0.0), reading(20.0)];
        h.update(&rs).unwrap();
        assert_eq!(h.modes[3], RampMode::Master);
        assert_eq!(h.modes[2], RampMode::Slave { master: 3 });
        assert_eq!(h.modes[1], RampMode::Normal);
        h.update(&rs).unwrap();
        assert_eq!(h.modes[1], RampMode::Slave { master: 3 });
        assert_eq!(h.modes[0], RampMode::Normal);
        // master below activation but above release: cluster holds, no growth
        let hold = [reading(0.0), reading(0.0), reading(0.0), reading(10.0)];
        h.update(&hold).unwrap();
        assert_eq!(h.modes[0], RampMode::Normal);
        assert_eq!(h.modes[1], RampMode::Slave { master: 3 });
        let release = [reading(0.0), reading(0.0), reading(0.0), reading(1.0)];
        h.update(&release).unwrap();
        assert!(h.modes.iter().all(|m| *m == RampMode::Normal));
    }

    #[test]
    fn period_mismatch_rejected() {
        let child = AlineaParams { cycle_duration: 30.0, measurement_period: 60, ..AlineaParams::default() };
        assert!(HeroController::new(HeroParams::default(), vec![child], vec![0.5]).is_err());
        let bad = HeroParams { queue_release_threshold_m: 20.0, ..HeroParams::default() };
        assert!(HeroController::new(bad, vec![AlineaParams::default()], vec![0.5]).is_err());
    }

    fn modes_consistent(h: &HeroController) -> bool {
        h.modes.iter().enumerate().all(|(i, m)| match m {
            RampMode::Slave { master } => *master > i && h.modes[*master] == RampMode::Master,
            _ => true,
        })
    }

    proptest! {
        #[test]
        fn rates_bounded_and_modes_consistent(trace in prop::collection::vec(prop::collection::vec((0.0..60.0f64, 0.0..30.0f64, 0.0..40.0f64), 4), 1..40)) {
            let mut h = controller(4);
            for step in trace {
                let rs: Vec<HeroReading> = step.iter().map(|(q, a, c)| HeroReading { queue_m: *q, arrivals: *a, occupancy: *c }).collect();
                let rates = h.update(&rs).unwrap();
                prop_assert!(rates.iter().all(|r| (5.0..=100.0).contains(r)));
                prop_assert!(modes_consistent(&h));
            }
        }

        #[test]
        fn small_blip_cannot_toggle_twice(base in 0.0..40.0f64, blip in -12.4..12.4f64, start_master in any::<bool>()) {
            // |blip| < l_act - l_rel = 12.5 m
            let mut h = controller(1);
            if start_master {
                h.modes[0] = RampMode::Master;
            }
            let before = h.modes[0];
            h.update(&[reading(base)]).unwrap();
            let mid = h.modes[0];
            h.update(&[reading((base + blip).max(0.0))]).unwrap();
            let after = h.modes[0];
            prop_assert!(!(mid != before && after != mid));
        }
    }
}
