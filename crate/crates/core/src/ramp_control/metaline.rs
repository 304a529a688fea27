use serde::{Deserialize, Serialize};

use super::{check_measurement_period, check_rate_bounds};
use crate::error::{config, contract, Result};

/// Square gain matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct GainMatrix {
    n: usize,
    data: Vec<f64>,
}

impl GainMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return config(format!("gain matrix must be square, got {n} rows of lengths {:?}", rows.iter().map(Vec::len).collect::<Vec<_>>()));
        }
        Ok(Self { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| i == j || self.get(i, j) == 0.0))
    }

    /// Row `i` dotted with `v`, summed left to right.
    fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        let row = &self.data[i * self.n..(i + 1) * self.n];
        row.iter().zip(v).fold(0.0, |acc, (k, x)| acc + k * x)
    }
}

impl TryFrom<Vec<Vec<f64>>> for GainMatrix {
    type Error = crate::Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(rows)
    }
}

impl From<GainMatrix> for Vec<Vec<f64>> {
    fn from(m: GainMatrix) -> Self {
        m.data.chunks(m.n.max(1)).map(<[f64]>::to_vec).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetalineParams {
    pub cycle_duration: f64,
    pub measurement_period: usize,
    pub min_rate: f64,
    pub max_rate: f64,
    /// One set-point per ramp, ordered upstream to downstream.
    pub target_occupancies: Vec<f64>,
    #[serde(rename = "K_P")]
    pub k_p: GainMatrix,
    #[serde(rename = "K_I")]
    pub k_i: GainMatrix,
}

impl Default for MetalineParams {
    fn default() -> Self {
        Self {
            cycle_duration: 60.0,
            measurement_period: 120,
            min_rate: 5.0,
            max_rate: 100.0,
            target_occupancies: vec![10.0; 3],
            k_p: GainMatrix::from_rows(vec![
                vec![30.0, -5.0, 0.0],
                vec![-3.0, 25.0, -2.0],
                vec![0.0, -4.0, 20.0],
            ])
            .expect("square"),
            k_i: GainMatrix::zeros(3),
        }
    }
}

impl MetalineParams {
    pub fn n_ramps(&self) -> usize {
        self.target_occupancies.len()
    }

    pub fn validate(&self, dt: f64) -> Result<()> {
        check_rate_bounds(self.min_rate, self.max_rate)?;
        check_measurement_period(self.cycle_duration, self.measurement_period, dt)?;
        let n = self.n_ramps();
        if self.k_p.dim() != n || self.k_i.dim() != n {
            return config(format!(
                "gain matrices must be {n}x{n} to match target_occupancies, got K_P {0}x{0}, K_I {1}x{1}",
                self.k_p.dim(),
                self.k_i.dim()
            ));
        }
        Ok(())
    }
}

/// `r = clamp(r_prev + K_P (c* - c) + K_I (c - c_prev))` per component.
pub fn metaline_update(p: &MetalineParams, prev_rates: &[f64], occupancy: &[f64], prev_occupancy: &[f64]) -> Result<Vec<f64>> {
    let n = p.n_ramps();
    if prev_rates.len() != n || occupancy.len() != n || prev_occupancy.len() != n || p.k_p.dim() != n || p.k_i.dim() != n {
        return contract(format!(
            "METALINE dimension mismatch: n={n}, rates={}, occupancy={}, prev={}",
            prev_rates.len(),
            occupancy.len(),
            prev_occupancy.len()
        ));
    }
    let error: Vec<f64> = p.target_occupancies.iter().zip(occupancy).map(|(t, c)| t - c).collect();
    let delta: Vec<f64> = occupancy.iter().zip(prev_occupancy).map(|(c, cp)| c - cp).collect();
    Ok((0..n)
        .map(|i| (prev_rates[i] + p.k_p.row_dot(i, &error) + p.k_i.row_dot(i, &delta)).clamp(p.min_rate, p.max_rate))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetalineState {
    pub params: MetalineParams,
    pub prev_rates: Vec<f64>,
    pub prev_occupancy: Option<Vec<f64>>,
}

impl MetalineState {
    pub fn new(params: MetalineParams) -> Self {
        let prev_rates = vec![params.max_rate; params.n_ramps()];
        Self { params, prev_rates, prev_occupancy: None }
    }

    pub fn update(&mut self, occupancy: &[f64]) -> Result<Vec<f64>> {
        let prev_occ = self.prev_occupancy.clone().unwrap_or_else(|| occupancy.to_vec());
        let rates = metaline_update(&self.params, &self.prev_rates, occupancy, &prev_occ)?;
        self.prev_rates.clone_from(&rates);
        self.prev_occupancy = Some(occupancy.to_vec());
        Ok(rates)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ramp_control::{AlineaParams, AlineaState};
    use proptest::prelude::*;

    #[test]
    fn coupled_gain_product() {
        let p = MetalineParams { min_rate: -1000.0, max_rate: 1000.0, ..MetalineParams::default() };
        // clamp bounds widened on purpose: we want the raw product
        let r = metaline_update(&p, &[0.0; 3], &[9.0, 10.0, 10.0], &[9.0, 10.0, 10.0]).unwrap();
        assert_eq!(r, vec![30.0, -3.0, 0.0]);
    }

    #[test]
    fn zero_gains_hold_rates() {
        let p = MetalineParams { k_p: GainMatrix::zeros(3), ..MetalineParams::default() };
        let r = metaline_update(&p, &[50.0, 3.0, 120.0], &[1.0, 20.0, 7.0], &[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(r, vec![50.0, 5.0, 100.0]);
    }

    #[test]
    fn dimension_mismatch_is_contract_error() {
        let p = MetalineParams::default();
        assert!(matches!(
            metaline_update(&p, &[1.0, 2.0], &[1.0; 3], &[1.0; 3]),
            Err(crate::Error::Contract(_))
        ));
        let bad = MetalineParams { k_i: GainMatrix::zeros(2), ..MetalineParams::default() };
        assert!(bad.validate(0.5).is_err());
    }

    #[test]
    fn non_square_rows_rejected() {
        assert!(GainMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    proptest! {
        #[test]
        fn diagonal_gains_equal_independent_alinea(
            kp in prop::collection::vec(0.0..60.0f64, 3),
            ki in prop::collection::vec(-5.0..5.0f64, 3),
            trace in prop::collection::vec(prop::collection::vec(0.0..40.0f64, 3), 1..40),
        ) {
            let params = MetalineParams {
                k_p: GainMatrix::diagonal(&kp),
                k_i: GainMatrix::diagonal(&ki),
                ..MetalineParams::default()
            };
            let mut meta = MetalineState::new(params);
            let mut locals: Vec<AlineaState> = (0..3)
                .map(|i| AlineaState::new(AlineaParams { k_p: kp[i], k_i: ki[i], ..AlineaParams::default() }))
                .collect();
            for occ in trace {
                let coordinated = meta.update(&occ).unwrap();
                for i in 0..3 {
                    let local = locals[i].update(occ[i]);
                    prop_assert_eq!(coordinated[i].to_bits(), local.to_bits());
                }
            }
        }
    }
}
