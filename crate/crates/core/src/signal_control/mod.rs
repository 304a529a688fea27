//! Urban signal controllers.
//!
//! * [`MpFixedState`]: fixed phase order and cycle, pressure-proportional splits.
//! * [`MpFlexState`]: free phase order driven by a five-state machine.
//! * [`ScootState`]: group-level cycle, split and offset adaptation.
//!
//! All of them are pure functions of their state and readings; the only
//! randomness (flexible tie-breaks) comes from a seeded generator.

mod mp_fixed;
mod mp_flex;
mod scoot;

pub use mp_fixed::{mp_fixed_split, MpFixedParams, MpFixedState};
pub use mp_flex::{FlexCommand, FlexState, MpFlexParams, MpFlexState};
pub use scoot::{
    arterial_group, district_congestion, scoot_cycle_update, Connection, IntersectionGroup, ScootParams, ScootState,
    TravelTimeAdjustment,
};

/// Splits `total` over phases in proportion to `weights` (equally when all are
/// zero), then clamps to `[g_min, g_max]` and hands the surplus or deficit to
/// the unclamped phases until the sum is restored. Real-valued result.
///
/// If the bounds cannot absorb `total` every phase ends at the binding bound.
pub(crate) fn bounded_split(weights: &[f64], total: f64, g_min: f64, g_max: f64) -> Vec<f64> {
    let n = weights.len();
    let mut fixed: Vec<Option<f64>> = vec![None; n];
    loop {
        let free: Vec<usize> = (0..n).filter(|&j| fixed[j].is_none()).collect();
        let taken: f64 = fixed.iter().flatten().sum();
        let remaining = total - taken;
        let mut g: Vec<f64> = fixed.iter().map(|f| f.unwrap_or(0.0)).collect();
        if free.is_empty() {
            return g;
        }
        let w: f64 = free.iter().map(|&j| weights[j].max(0.0)).sum();
        for &j in &free {
            g[j] = if w > 0.0 { remaining * weights[j].max(0.0) / w } else { remaining / free.len() as f64 };
        }
        let over: f64 = free.iter().map(|&j| (g[j] - g_max).max(0.0)).sum();
        let under: f64 = free.iter().map(|&j| (g_min - g[j]).max(0.0)).sum();
        if over <= 1e-12 && under <= 1e-12 {
            return g;
        }
        // pin the side with the larger violation; the other side may resolve
        // once its share of the redistributed time arrives
        for &j in &free {
            if over >= under && g[j] > g_max {
                fixed[j] = Some(g_max);
            } else if over < under && g[j] < g_min {
                fixed[j] = Some(g_min);
            }
        }
    }
}

/// Integer rounding that keeps the sum at `target` (largest remainder, lower
/// phase index first on ties) and never leaves `[g_min, g_max]`.
pub(crate) fn largest_remainder(g: &[f64], target: i64, g_min: i64, g_max: i64) -> Vec<i64> {
    let mut out: Vec<i64> = g.iter().map(|x| (x.floor() as i64).clamp(g_min, g_max)).collect();
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = g[a] - g[a].floor();
        let rb = g[b] - g[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });
    let mut missing = target - out.iter().sum::<i64>();
    while missing > 0 {
        let Some(&j) = order.iter().find(|&&j| out[j] < g_max) else { break };
        out[j] += 1;
        missing -= 1;
        order.retain(|&k| k != j);
        order.push(j);
    }
    while missing < 0 {
        let Some(&j) = order.iter().rev().find(|&&j| out[j] > g_min) else { break };
        out[j] -= 1;
        missing += 1;
        order.retain(|&k| k != j);
        order.insert(0, j);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_clamps_and_redistributes() {
        let g = bounded_split(&[100.0, 1.0, 1.0], 111.0, 5.0, 50.0);
        assert_eq!(g, vec![50.0, 30.5, 30.5]);
        assert_eq!(largest_remainder(&g, 111, 5, 50), vec![50, 31, 30]);
    }

    #[test]
    fn split_lifts_starved_phases() {
        let g = bounded_split(&[1.0, 0.0, 0.0], 111.0, 5.0, 200.0);
        assert_eq!(g, vec![101.0, 5.0, 5.0]);
    }

    #[test]
    fn infeasible_upper_bound_saturates() {
        let g = bounded_split(&[3.0, 1.0], 114.0, 5.0, 50.0);
        assert_eq!(g, vec![50.0, 50.0]);
    }

    #[test]
    fn rounding_respects_bounds() {
        assert_eq!(largest_remainder(&[49.6, 30.7, 30.7], 111, 5, 50), vec![49, 31, 31]);
        assert_eq!(largest_remainder(&[50.0, 30.9, 30.1], 112, 5, 50), vec![50, 31, 31]);
        assert_eq!(largest_remainder(&[37.0, 37.0, 37.0], 111, 5, 50), vec![37, 37, 37]);
    }
}
