//! Ricci flow of rotationally symmetric metrics at fixed grid coordinate.
//!
//! The metric `psi^2 dx^2 + w^2 g_{S^{n-1}}` evolves by
//! `d_t w = -mu w` and `d_t psi = -lambda psi`, where `lambda = (n-1) K0`
//! and `mu = K0 + (n-2) K1` are the Ricci eigenvalues. Time stepping is
//! classical RK4 with a parabolic step bound.

use std::f64::consts::PI;
use std::fmt;

use crate::config::{Profile, ScenarioConfig};
use crate::error::{Error, Result};
use crate::geometry::{
    critical_radius, curvature_sample, sectional_curvatures, smoothstep5, sup, warp_derivatives,
    CurvatureSample,
};
use crate::grid::Grid;
use crate::state::{Topology, WarpedState};

/// Why a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    TimeReached,
    PinchDetected,
    NumericalFailure,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::TimeReached => "time_reached",
            StopReason::PinchDetected => "pinch_detected",
            StopReason::NumericalFailure => "numerical_failure",
        })
    }
}

/// Step-size and recording controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl {
    pub sigma_cfl: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub snapshot_every: usize,
}

impl StepControl {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            sigma_cfl: cfg.sigma_cfl,
            dt_min: cfg.dt_min,
            dt_max: cfg.dt_max,
            snapshot_every: cfg.snapshot_every,
        }
    }

    /// Parabolic step `sigma (min psi dx)^2`, clamped.
    pub fn dt(&self, state: &WarpedState) -> f64 {
        let h = state.grid().dx();
        let min_psi = state.psi().iter().copied().fold(f64::INFINITY, f64::min);
        let dt = self.sigma_cfl * (min_psi * h).powi(2);
        dt.clamp(self.dt_min, self.dt_max)
    }
}

/// One recorded time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: WarpedState,
    pub sample: CurvatureSample,
}

/// Recorded evolution with its global curvature scales.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowHistory {
    snapshots: Vec<Snapshot>,
    scenario: ScenarioConfig,
    k_bar: f64,
    lambda0: f64,
    stop_reason: StopReason,
}

impl FlowHistory {
    /// Build a history from states, computing every curvature sample.
    pub fn from_states(
        states: Vec<WarpedState>,
        scenario: ScenarioConfig,
        stop_reason: StopReason,
    ) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::EmptyHistory);
        }
        for pair in states.windows(2) {
            if !(pair[1].time() > pair[0].time()) {
                return Err(Error::InvalidGrid(format!(
                    "snapshot times must increase ({} then {})",
                    pair[0].time(),
                    pair[1].time()
                )));
            }
        }
        let snapshots = states
            .into_iter()
            .map(|state| curvature_sample(&state).map(|sample| Snapshot { state, sample }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_snapshots(snapshots, scenario, stop_reason))
    }

    fn from_snapshots(snapshots: Vec<Snapshot>, scenario: ScenarioConfig, stop_reason: StopReason) -> Self {
        let k_bar = snapshots.iter().map(|s| s.sample.sup_ric()).fold(0.0, f64::max);
        let lambda0 = snapshots[0].sample.sup_rm();
        Self { snapshots, scenario, k_bar, lambda0, stop_reason }
    }

    pub fn snapshots(&self) -> &[Snapshot] {
        &self.snapshots
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn scenario(&self) -> &ScenarioConfig {
        &self.scenario
    }

    pub fn dim(&self) -> usize {
        self.snapshots[0].state.dim()
    }

    /// Supremum of `|Ric|` over the whole history.
    pub fn k_bar(&self) -> f64 {
        self.k_bar
    }

    /// Supremum of `|Rm|` on the initial slice.
    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    /// Time of the last snapshot.
    pub fn t_end(&self) -> f64 {
        self.snapshots.last().expect("history is non-empty").state.time()
    }

    pub fn stop_reason(&self) -> StopReason {
        self.stop_reason
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.state.time()).collect()
    }

    /// Parabolic rescaling `g -> c g`, `t -> c t` of every slice.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        let states = self.snapshots.iter().map(|s| s.state.rescaled(c)).collect();
        let mut scenario = self.scenario.clone();
        scenario.r0 *= c.sqrt();
        scenario.t_end *= c;
        Self::from_states(states, scenario, self.stop_reason)
    }
}

/// Initial data for a scenario.
pub fn init_scenario(cfg: &ScenarioConfig) -> Result<WarpedState> {
    let grid = Grid::new(cfg.nodes)?;
    let r0 = cfg.r0;
    if !(r0 > 0.0) {
        return Err(Error::InvalidProfileParameters(format!("r0 must be positive, got {r0}")));
    }
    match cfg.profile {
        Profile::Sphere => round_profile(grid, cfg.n, r0, 0.0),
        Profile::Dumbbell => {
            let a = cfg.neck_amp;
            let width = cfg.neck_width;
            if !(0.0..1.0).contains(&a) {
                return Err(Error::InvalidProfileParameters(format!(
                    "neck amplitude must lie in [0, 1), got {a}"
                )));
            }
            if !(width > 0.0) {
                return Err(Error::InvalidProfileParameters(format!(
                    "neck width must be positive, got {width}"
                )));
            }
            let dip = |x: f64| 1.0 - a * (-(x - 0.5).powi(2) / (width * width)).exp();
            // Normalise so the slope at the poles is exactly one.
            let pole = dip(0.0);
            let w = (0..grid.len()).map(|i| r0 * sin_pi(&grid, i) * dip(grid.x(i)) / pole).collect();
            sphere_state(grid, cfg.n, vec![PI * r0; grid.len()], w)
        }
        Profile::CylinderCaps => {
            let amp = cfg.neck_amp;
            let width = cfg.neck_width;
            if !(width > 0.0 && width <= 0.5) {
                return Err(Error::InvalidProfileParameters(format!(
                    "cap width must lie in (0, 0.5], got {width}"
                )));
            }
            let w = grid
                .coords()
                .map(|x| {
                    let d = x.min(1.0 - x);
                    r0 * (1.0 + amp * (1.0 - smoothstep5(d / width)))
                })
                .collect();
            WarpedState::new(grid, cfg.n, 0.0, vec![2.0 * PI * r0; grid.len()], w, Topology::Neck)
        }
    }
}

fn sphere_state(grid: Grid, n: usize, psi: Vec<f64>, mut w: Vec<f64>) -> Result<WarpedState> {
    let last = grid.cells();
    w[0] = 0.0;
    w[last] = 0.0;
    WarpedState::new(grid, n, 0.0, psi, w, Topology::Sphere)
}

/// `sin(pi x)` evaluated from the nearer pole, so both ends are equally
/// accurate.
fn sin_pi(grid: &Grid, i: usize) -> f64 {
    let cells = grid.cells();
    (PI * i.min(cells - i) as f64 / cells as f64).sin()
}

fn round_profile(grid: Grid, n: usize, r: f64, t: f64) -> Result<WarpedState> {
    let w = (0..grid.len()).map(|i| r * sin_pi(&grid, i)).collect();
    sphere_state(grid, n, vec![PI * r; grid.len()], w).map(|s| s.with_time(t))
}

/// Extinction time `r0^2 / (2(n-1))` of the round sphere.
pub fn extinction_time(n: usize, r0: f64) -> f64 {
    r0 * r0 / (2.0 * (n as f64 - 1.0))
}

/// Radius `sqrt(r0^2 - 2(n-1)t)` of the shrinking round sphere.
pub fn sphere_radius(n: usize, r0: f64, t: f64) -> Result<f64> {
    let extinction = extinction_time(n, r0);
    if !(t < extinction) {
        return Err(Error::SphereExtinct { t, extinction });
    }
    Ok((r0 * r0 - 2.0 * (n as f64 - 1.0) * t).sqrt())
}

/// Exact shrinking round sphere on `grid`.
pub fn exact_sphere_on(grid: Grid, n: usize, r0: f64, t: f64) -> Result<WarpedState> {
    let r = sphere_radius(n, r0, t)?;
    round_profile(grid, n, r, t)
}

/// Exact shrinking round sphere on the default 400-cell grid.
pub fn exact_sphere(n: usize, r0: f64, t: f64) -> Result<WarpedState> {
    exact_sphere_on(Grid::new(400)?, n, r0, t)
}

/// Time derivatives `(d_t psi, d_t w)`.
fn velocity(state: &WarpedState) -> (Vec<f64>, Vec<f64>) {
    let der = warp_derivatives(state);
    let (k0, k1) = sectional_curvatures(state, &der);
    let nf = state.dim() as f64;
    let psi = state.psi();
    let w = state.w();
    let last = w.len() - 1;
    let dpsi = (0..w.len()).map(|i| -(nf - 1.0) * k0[i] * psi[i]).collect();
    let mut dw: Vec<f64> = (0..w.len()).map(|i| -(k0[i] + (nf - 2.0) * k1[i]) * w[i]).collect();
    if state.topology() == Topology::Sphere {
        dw[0] = 0.0;
        dw[last] = 0.0;
    }
    (dpsi, dw)
}

fn advanced(base: &WarpedState, t: f64, dir: &(Vec<f64>, Vec<f64>), h: f64) -> WarpedState {
    let psi = base.psi().iter().zip(&dir.0).map(|(p, d)| p + h * d).collect();
    let w = base.w().iter().zip(&dir.1).map(|(v, d)| v + h * d).collect();
    WarpedState::from_parts_unchecked(base, t, psi, w)
}

/// One classical RK4 step.
pub fn step(state: &WarpedState, dt: f64) -> Result<WarpedState> {
    let t = state.time();
    let k1 = velocity(state);
    let k2 = velocity(&advanced(state, t + 0.5 * dt, &k1, 0.5 * dt));
    let k3 = velocity(&advanced(state, t + 0.5 * dt, &k2, 0.5 * dt));
    let k4 = velocity(&advanced(state, t + dt, &k3, dt));
    let combine = |base: &[f64], a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
        (0..base.len()).map(|i| base[i] + dt / 6.0 * (a[i] + 2.0 * b[i] + 2.0 * c[i] + d[i])).collect()
    };
    let psi = combine(state.psi(), &k1.0, &k2.0, &k3.0, &k4.0);
    let mut w = combine(state.w(), &k1.1, &k2.1, &k3.1, &k4.1);
    let t_next = t + dt;
    if psi.iter().chain(&w).any(|v| !v.is_finite()) {
        return Err(Error::NumericalBlowup { t: t_next });
    }
    if state.topology() == Topology::Sphere {
        let last = w.len() - 1;
        w[0] = 0.0;
        w[last] = 0.0;
    }
    WarpedState::new(*state.grid(), state.dim(), t_next, psi, w, state.topology())
}

/// Radius watched by the pinch detector: the smallest equator or neck of a
/// sphere, the smallest cross-section of a tube.
pub fn pinch_radius(state: &WarpedState) -> f64 {
    let w = state.w();
    match state.topology() {
        Topology::Sphere => critical_radius(w).unwrap_or_else(|| sup(w)),
        Topology::Neck => w.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

/// Evolve a scenario from its initial data.
pub fn run(cfg: &ScenarioConfig) -> Result<FlowHistory> {
    run_from(init_scenario(cfg)?, cfg)
}

/// Evolve `initial` with the stepping and stopping rules of `cfg`.
pub fn run_from(initial: WarpedState, cfg: &ScenarioConfig) -> Result<FlowHistory> {
    let control = StepControl::from_config(cfg);
    let floor = cfg.pinch_epsilon * cfg.r0;
    let first = curvature_sample(&initial)?;
    let mut snapshots = vec![Snapshot { state: initial.clone(), sample: first }];
    let mut state = initial;
    let mut steps = 0usize;
    let stop = loop {
        let remaining = cfg.t_end - state.time();
        if remaining <= 0.0 {
            break StopReason::TimeReached;
        }
        let dt = control.dt(&state);
        let last_step = dt >= remaining;
        let dt = if last_step { remaining } else { dt };
        let next = match step(&state, dt).and_then(|s| curvature_sample(&s).map(|c| (s, c))) {
            Ok(pair) => pair,
            Err(_) => break StopReason::NumericalFailure,
        };
        steps += 1;
        let (mut next_state, next_sample) = next;
        if last_step {
            next_state = next_state.with_time(cfg.t_end);
        }
        let pinched = pinch_radius(&next_state) < floor;
        let finished = last_step || pinched;
        if finished || steps.is_multiple_of(control.snapshot_every) {
            snapshots.push(Snapshot { state: next_state.clone(), sample: next_sample });
        }
        state = next_state;
        if pinched {
            break StopReason::PinchDetected;
        }
        if last_step {
            break StopReason::TimeReached;
        }
    };
    if stop == StopReason::NumericalFailure {
        let recorded = snapshots.last().map(|s| s.state.time());
        if recorded != Some(state.time()) {
            let sample = curvature_sample(&state)?;
            snapshots.push(Snapshot { state, sample });
        }
    }
    Ok(FlowHistory::from_snapshots(snapshots, cfg.clone(), stop))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_sphere_examples() {
        assert_eq!(sphere_radius(3, 1.0, 0.0).unwrap(), 1.0);
        let s = exact_sphere(3, 1.0, 0.125).unwrap();
        let c = curvature_sample(&s).unwrap();
        assert!((c.k0[200] - 2.0).abs() < 1e-4 && (c.k1[77] - 2.0).abs() < 1e-4);
        assert!(matches!(exact_sphere(4, 1.0, 1.0 / 6.0), Err(Error::SphereExtinct { .. })));
        assert!(sphere_radius(4, 1.0, 1.0 / 6.0 - 1e-9).unwrap() < 1e-3);
    }

    #[test]
    fn dumbbell_without_neck_is_the_sphere() {
        let sphere = init_scenario(&ScenarioConfig::default()).unwrap();
        let cfg = ScenarioConfig { profile: Profile::Dumbbell, neck_amp: 0.0, ..Default::default() };
        assert_eq!(init_scenario(&cfg).unwrap(), sphere);
        let cfg = ScenarioConfig { profile: Profile::Dumbbell, neck_amp: 1.0, ..Default::default() };
        assert!(matches!(init_scenario(&cfg), Err(Error::InvalidProfileParameters(_))));
    }

    #[test]
    fn flat_tube_is_a_fixed_point() {
        let grid = Grid::new(64).unwrap();
        let w: Vec<f64> = grid.coords().map(|x| 1.0 + x).collect();
        let s = WarpedState::new(grid, 4, 0.0, vec![1.0; 65], w.clone(), Topology::Neck).unwrap();
        let next = step(&s, 1e-4).unwrap();
        for (a, b) in next.w().iter().zip(&w) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(next.psi().iter().all(|p| (p - 1.0).abs() < 1e-13));
    }

    #[test]
    fn cylinder_shrinks_uniformly() {
        let grid = Grid::new(64).unwrap();
        let s = WarpedState::new(grid, 3, 0.0, vec![4.0; 65], vec![1.0; 65], Topology::Neck).unwrap();
        let (_, dw) = velocity(&s);
        assert!(dw.iter().all(|v| (v + 1.0).abs() < 1e-13));
        let mut cur = s;
        for _ in 0..100 {
            cur = step(&cur, 1e-3).unwrap();
        }
        let exact = (1.0f64 - 2.0 * 0.1).sqrt();
        assert!(cur.w().iter().all(|v| (v - exact).abs() < 1e-12));
    }

    #[test]
    fn single_sphere_step_matches_closed_form() {
        let grid = Grid::new(400).unwrap();
        let s = exact_sphere_on(grid, 3, 1.0, 0.0).unwrap();
        // The sampled sine has uniform discrete curvature kappa, so the
        // semi-discrete flow is the exact shrink r^2 = 1 - 4 kappa t.
        let kappa = curvature_sample(&s).unwrap().k0[200];
        let dt = 1e-5;
        let next = step(&s, dt).unwrap();
        let r = (1.0 - 4.0 * kappa * dt).sqrt();
        for (i, x) in grid.coords().enumerate() {
            assert!((next.w()[i] - r * (PI * x).sin()).abs() < 1e-12);
            assert!((next.psi()[i] - PI * r).abs() < 1e-12);
        }
        let continuum = exact_sphere_on(grid, 3, 1.0, dt).unwrap();
        let err = next.w().iter().zip(continuum.w()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }
}
