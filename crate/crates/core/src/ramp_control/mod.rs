//! Ramp-metering controllers.
//!
//! * [`AlineaState`]: local P / PI occupancy feedback on one ramp.
//! * [`MetalineState`]: coordinated PI feedback with gain matrices.
//! * [`HeroController`]: master/slave queue management layered over ALINEA.
//!
//! Rates are percentages of the signal cycle that are green. All update
//! functions clamp to `[min_rate, max_rate]` and remember the clamped value,
//! so a saturated controller recovers as soon as the error changes sign.

mod alinea;
mod hero;
mod metaline;

pub use alinea::{alinea_update, AlineaParams, AlineaState};
pub use hero::{HeroController, HeroParams, HeroReading, RampMode};
pub use metaline::{metaline_update, GainMatrix, MetalineParams, MetalineState};

use crate::error::{config, Result};

fn check_rate_bounds(min_rate: f64, max_rate: f64) -> Result<()> {
    if !(min_rate.is_finite() && max_rate.is_finite()) || min_rate < 0.0 || max_rate > 100.0 {
        return config(format!("rate bounds must lie in [0, 100], got [{min_rate}, {max_rate}]"));
    }
    if min_rate > max_rate {
        return config(format!("min_rate {min_rate} exceeds max_rate {max_rate}"));
    }
    Ok(())
}

/// Control period in simulation steps must equal `round(cycle / dt)`.
fn check_measurement_period(cycle_s: f64, period_steps: usize, dt: f64) -> Result<()> {
    if !(cycle_s > 0.0) {
        return config(format!("cycle_duration must be > 0, got {cycle_s}"));
    }
    let expected = (cycle_s / dt).round() as usize;
    if period_steps != expected {
        return config(format!(
            "measurement_period {period_steps} does not match cycle_duration / dt = {expected}"
        ));
    }
    Ok(())
}
