use serde::{Deserialize, Serialize};

use super::{bounded_split, largest_remainder};
use crate::error::{config, contract, Result};
use crate::urban::SignalPlan;

/// Fixed-order Max-Pressure parameters (usual config keys).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpFixedParams {
    #[serde(rename = "T_L")]
    pub t_l: f64,
    #[serde(rename = "G_T_MIN")]
    pub g_min: f64,
    #[serde(rename = "G_T_MAX")]
    pub g_max: f64,
    /// Steps between pressure samples.
    pub measurement_period: usize,
    pub cycle_duration: f64,
}

impl Default for MpFixedParams {
    fn default() -> Self {
        Self { t_l: 3.0, g_min: 5.0, g_max: 50.0, measurement_period: 4, cycle_duration: 120.0 }
    }
}

impl MpFixedParams {
    pub fn t_eff(&self, n_phases: usize) -> f64 {
        (self.cycle_duration - n_phases as f64 * self.t_l).max(0.0)
    }

    pub fn validate(&self, n_phases: usize) -> Result<()> {
        if n_phases == 0 {
            return config("intersection has no phases");
        }
        if self.measurement_period == 0 {
            return config("measurement_period must be >= 1 step");
        }
        if !(self.t_l >= 0.0 && self.g_min >= 0.0 && self.g_min <= self.g_max) {
            return config(format!("need 0 <= G_T_MIN <= G_T_MAX and T_L >= 0, got {} / {} / {}", self.g_min, self.g_max, self.t_l));
        }
        if self.cycle_duration.fract() != 0.0 || self.g_min.fract() != 0.0 || self.g_max.fract() != 0.0 {
            return config("cycle_duration and green bounds must be whole seconds");
        }
        let n = n_phases as f64;
        if self.cycle_duration < n * (self.g_min + self.t_l) {
            return config(format!(
                "cycle {} s cannot host {n_phases} phases of {} s green plus {} s transition",
                self.cycle_duration, self.g_min, self.t_l
            ));
        }
        Ok(())
    }
}

/// Integer greens for one cycle from mean phase pressures.
///
/// The sum is `round(t_eff)` unless every phase is held at `g_max`, in which
/// case the cycle simply runs short.
pub fn mp_fixed_split(mean_pressures: &[f64], t_eff: f64, g_min: f64, g_max: f64) -> Vec<f64> {
    let g = bounded_split(mean_pressures, t_eff, g_min, g_max);
    largest_remainder(&g, t_eff.round() as i64, g_min as i64, g_max as i64)
        .into_iter()
        .map(|x| x as f64)
        .collect()
}

/// Controller memory for one intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct MpFixedState {
    pub params: MpFixedParams,
    n_phases: usize,
    sums: Vec<f64>,
    samples: usize,
    /// Greens emitted at the last cycle end.
    pub greens: Vec<f64>,
}

impl MpFixedState {
    pub fn new(params: MpFixedParams, n_phases: usize) -> Result<Self> {
        params.validate(n_phases)?;
        Ok(Self { params, n_phases, sums: vec![0.0; n_phases], samples: 0, greens: vec![] })
    }

    /// Stores one pressure sample.
    pub fn sample(&mut self, pressures: &[f64]) -> Result<()> {
        if pressures.len() != self.n_phases {
            return contract(format!("{} pressures for {} phases", pressures.len(), self.n_phases));
        }
        for (s, p) in self.sums.iter_mut().zip(pressures) {
            *s += p;
        }
        self.samples += 1;
        Ok(())
    }

    /// Mean pressure per phase over the samples of the ending cycle.
    pub fn mean_pressures(&self) -> Vec<f64> {
        let h = self.samples.max(1) as f64;
        self.sums.iter().map(|s| s / h).collect()
    }

    /// Closes the cycle: new greens from the averaged pressures, then clears
    /// the accumulator. The plan's cycle is `sum(g) + n * t_L`.
    pub fn cycle_end(&mut self) -> Result<SignalPlan> {
        if self.samples == 0 {
            return contract("cycle ended without any pressure sample");
        }
        let p = &self.params;
        let greens = mp_fixed_split(&self.mean_pressures(), p.t_eff(self.n_phases), p.g_min, p.g_max);
        self.sums.iter_mut().for_each(|s| *s = 0.0);
        self.samples = 0;
        let cycle_s = greens.iter().sum::<f64>() + self.n_phases as f64 * p.t_l;
        self.greens = greens.clone();
        Ok(SignalPlan { greens, cycle_s, offset_s: 0.0 })
    }
}
