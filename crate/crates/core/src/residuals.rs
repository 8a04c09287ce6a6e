//! Residual of the scalar-curvature evolution `d_t R = Delta R + 2|Ric|^2`.
//!
//! Grid points are material under this gauge, so `d_t R` is the difference
//! quotient of the stored `R` at fixed `x` across neighbouring snapshots.

use crate::error::{Error, Result};
use crate::flow::FlowHistory;
use crate::geometry::{radial_laplacian_values, rules, sup, warp_derivatives};

/// Residual statistics of one snapshot, normalised by `max(1, sup|d_t R|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualStats {
    pub t: f64,
    pub max: f64,
    pub median: f64,
}

impl ResidualStats {
    fn missing(t: f64) -> Self {
        Self { t, max: f64::NAN, median: f64::NAN }
    }

    pub fn is_evaluated(&self) -> bool {
        !self.max.is_nan()
    }
}

/// Residual per snapshot. The first and last snapshots have no centred
/// time difference and report `NaN`.
pub fn evolution_residuals(history: &FlowHistory) -> Result<Vec<ResidualStats>> {
    let snaps = history.snapshots();
    if snaps.len() < 3 {
        return Err(Error::InsufficientSnapshots { needed: 3, found: snaps.len() });
    }
    let mut out = Vec::with_capacity(snaps.len());
    out.push(ResidualStats::missing(snaps[0].state.time()));
    for k in 1..snaps.len() - 1 {
        let (prev, cur, next) = (&snaps[k - 1], &snaps[k], &snaps[k + 1]);
        let t = cur.state.time();
        let h0 = t - prev.state.time();
        let h1 = next.state.time() - t;
        // Three-point derivative on a non-uniform stencil.
        let c_prev = -h1 / (h0 * (h0 + h1));
        let c_cur = (h1 - h0) / (h0 * h1);
        let c_next = h0 / (h1 * (h0 + h1));
        let r = &cur.sample.scalar;
        let dt_r: Vec<f64> = (0..r.len())
            .map(|i| c_prev * prev.sample.scalar[i] + c_cur * r[i] + c_next * next.sample.scalar[i])
            .collect();
        let der = warp_derivatives(&cur.state);
        let (_, _, rule) = rules(cur.state.topology());
        let lap = radial_laplacian_values(&cur.state, &der, r, rule);
        let scale = sup(&dt_r.iter().map(|v| v.abs()).collect::<Vec<_>>()).max(1.0);
        let mut res: Vec<f64> = (0..r.len())
            .map(|i| {
                let ric = cur.sample.ric_norm[i];
                (dt_r[i] - lap[i] - 2.0 * ric * ric).abs() / scale
            })
            .collect();
        let max = sup(&res);
        res.sort_by(f64::total_cmp);
        let mid = res.len() / 2;
        let median = if res.len() % 2 == 1 { res[mid] } else { 0.5 * (res[mid - 1] + res[mid]) };
        out.push(ResidualStats { t, max, median });
    }
    out.push(ResidualStats::missing(snaps[snaps.len() - 1].state.time()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;
    use crate::flow::{exact_sphere_on, StopReason};
    use crate::grid::Grid;

    #[test]
    fn single_snapshot_is_rejected() {
        let grid = Grid::new(64).unwrap();
        let s = exact_sphere_on(grid, 3, 1.0, 0.0).unwrap();
        let h =
            FlowHistory::from_states(vec![s], ScenarioConfig::default(), StopReason::TimeReached).unwrap();
        assert!(matches!(evolution_residuals(&h), Err(Error::InsufficientSnapshots { needed: 3, found: 1 })));
    }

    #[test]
    fn exact_sphere_history_has_small_residual() {
        let grid = Grid::new(128).unwrap();
        let states = (0..5).map(|k| exact_sphere_on(grid, 3, 1.0, 0.01 * k as f64).unwrap()).collect();
        let h = FlowHistory::from_states(states, ScenarioConfig::default(), StopReason::TimeReached).unwrap();
        let res = evolution_residuals(&h).unwrap();
        assert!(!res[0].is_evaluated() && !res[4].is_evaluated());
        for r in &res[1..4] {
            assert!(r.max < 1e-2, "{r:?}");
        }
    }
}
