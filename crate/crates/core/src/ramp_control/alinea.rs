use serde::{Deserialize, Serialize};

use super::{check_measurement_period, check_rate_bounds};
use crate::error::Result;

/// ALINEA / PI-ALINEA parameters. Field names follow the usual config keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlineaParams {
    /// Occupancy set-point c* in percent.
    pub target_occupancy: f64,
    #[serde(rename = "K_P")]
    pub k_p: f64,
    #[serde(rename = "K_I")]
    pub k_i: f64,
    /// Signal cycle t_c in seconds; one control update per cycle.
    pub cycle_duration: f64,
    /// Control period in simulation steps, `round(cycle_duration / dt)`.
    pub measurement_period: usize,
    pub min_rate: f64,
    pub max_rate: f64,
}

impl Default for AlineaParams {
    fn default() -> Self {
        Self {
            target_occupancy: 10.0,
            k_p: 30.0,
            k_i: 0.0,
            cycle_duration: 60.0,
            measurement_period: 120,
            min_rate: 5.0,
            max_rate: 100.0,
        }
    }
}

impl AlineaParams {
    pub fn validate(&self, dt: f64) -> Result<()> {
        check_rate_bounds(self.min_rate, self.max_rate)?;
        check_measurement_period(self.cycle_duration, self.measurement_period, dt)
    }
}

/// One feedback step: `r = clamp(r_prev + K_P (c* - c) + K_I (c - c_prev))`.
pub fn alinea_update(p: &AlineaParams, prev_rate: f64, occupancy: f64, prev_occupancy: f64) -> f64 {
    let raw = prev_rate + p.k_p * (p.target_occupancy - occupancy) + p.k_i * (occupancy - prev_occupancy);
    raw.clamp(p.min_rate, p.max_rate)
}

/// ALINEA controller memory for one ramp.
#[derive(Debug, Clone, PartialEq)]
pub struct AlineaState {
    pub params: AlineaParams,
    /// Last emitted (clamped) rate.
    pub prev_rate: f64,
    /// Occupancy seen at the previous update; `None` before the first one.
    pub prev_occupancy: Option<f64>,
}

impl AlineaState {
    /// Starts metering fully open at `max_rate`.
    pub fn new(params: AlineaParams) -> Self {
        let prev_rate = params.max_rate;
        Self { params, prev_rate, prev_occupancy: None }
    }

    /// Feeds the cycle-aggregated downstream occupancy and returns the new rate.
    pub fn update(&mut self, occupancy: f64) -> f64 {
        let prev_occ = self.prev_occupancy.unwrap_or(occupancy);
        let r = alinea_update(&self.params, self.prev_rate, occupancy, prev_occ);
        self.prev_rate = r;
        self.prev_occupancy = Some(occupancy);
        r
    }

    /// Overrides the memory after an external controller drove this ramp.
    pub fn sync(&mut self, rate: f64, occupancy: f64) {
        self.prev_rate = rate;
        self.prev_occupancy = Some(occupancy);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn p_law_clamps_to_min_rate() {
        let p = AlineaParams::default();
        assert_eq!(alinea_update(&p, 50.0, 12.0, 12.0), 5.0);
    }

    #[test]
    fn zero_error_is_fixed_point() {
        let mut st = AlineaState::new(AlineaParams::default());
        st.prev_rate = 42.0;
        for _ in 0..100 {
            assert_eq!(st.update(10.0), 42.0);
        }
    }

    #[test]
    fn integral_term() {
        let p = AlineaParams { k_i: 2.0, ..AlineaParams::default() };
        assert_eq!(alinea_update(&p, 40.0, 10.0, 9.0), 42.0);
    }

    #[test]
    fn anti_windup_recovers_immediately() {
        let mut st = AlineaState::new(AlineaParams::default());
        for _ in 0..20 {
            st.update(30.0);
        }
        assert_eq!(st.prev_rate, 5.0);
        let eps = 0.25;
        let r = st.update(10.0 - eps);
        assert_eq!(r, 5.0 + 30.0 * eps);
    }

    #[test]
    fn validation() {
        let p = AlineaParams::default();
        assert!(p.validate(0.5).is_ok());
        assert!(p.validate(0.25).is_err());
        let bad = AlineaParams { min_rate: 60.0, max_rate: 50.0, ..p };
        assert!(bad.validate(0.5).is_err());
    }

    proptest! {
        #[test]
        fn rates_stay_in_bounds(occ in prop::collection::vec(0.0..100.0f64, 1..50), kp in 0.0..80.0f64, ki in -10.0..10.0f64) {
            let mut st = AlineaState::new(AlineaParams { k_p: kp, k_i: ki, ..AlineaParams::default() });
            for c in occ {
                let r = st.update(c);
                prop_assert!((5.0..=100.0).contains(&r));
            }
        }
    }
}
