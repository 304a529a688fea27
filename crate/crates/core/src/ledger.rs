//! Exact vehicle accounting.
//!
//! Vehicle stocks are stored as integer multiples of 2^-40 vehicles, so every
//! transfer removes from one stock exactly what it adds to another and the
//! conservation ledger balances with zero residual. Flow rates are still
//! computed in floating point and rounded down onto the grid.

/// Fixed-point vehicle count.
pub type Veh = i64;

const SCALE: f64 = (1u64 << 40) as f64;

/// Rounds a non-negative amount down to the grid.
pub fn to_veh(x: f64) -> Veh {
    if x <= 0.0 || x.is_nan() {
        0
    } else {
        (x * SCALE).floor() as Veh
    }
}

pub fn to_f64(v: Veh) -> f64 {
    v as f64 / SCALE
}
