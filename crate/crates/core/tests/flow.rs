use std::f64::consts::PI;

use ricci_lab::config::{parse_config, Profile, ScenarioConfig};
use ricci_lab::flow::{
    exact_sphere_on, extinction_time, init_scenario, pinch_radius, run, run_from, sphere_radius, step,
    FlowHistory, StopReason,
};
use ricci_lab::{curvature_sample, Error, Grid, Topology, WarpedState};

fn sphere_cfg(nodes: usize, t_end: f64) -> ScenarioConfig {
    ScenarioConfig { nodes, t_end, ..Default::default() }
}

/// Largest error of `w` against the exact shrinking sphere, relative to its radius.
fn sphere_error(history: &FlowHistory) -> f64 {
    let last = history.snapshots().last().unwrap();
    let cfg = history.scenario();
    let t = last.state.time();
    let exact = exact_sphere_on(*last.state.grid(), cfg.n, cfg.r0, t).unwrap();
    let r = sphere_radius(cfg.n, cfg.r0, t).unwrap();
    last.state.w().iter().zip(exact.w()).map(|(a, b)| (a - b).abs() / r).fold(0.0, f64::max)
}

#[test]
fn sphere_tracks_the_exact_solution() {
    let errors: Vec<f64> = [100, 200, 400]
        .iter()
        .map(|&n| {
            let h = run(&sphere_cfg(n, 0.2)).unwrap();
            assert_eq!(h.stop_reason(), StopReason::TimeReached);
            assert_eq!(h.t_end(), 0.2);
            sphere_error(&h)
        })
        .collect();
    assert!(errors[2] < 1e-3, "{errors:?}");
    for pair in errors.windows(2) {
        let ratio = pair[0] / pair[1];
        assert!((3.4..=4.6).contains(&ratio), "{errors:?}");
    }
}

#[test]
fn sphere_stays_round_while_shrinking() {
    let h = run(&sphere_cfg(200, 0.2)).unwrap();
    let mut previous = 0.0;
    for s in h.snapshots() {
        let r = sphere_radius(3, 1.0, s.state.time()).unwrap();
        assert!((s.state.length() - PI * r).abs() < 1e-3 * r, "t = {}", s.state.time());
        let (lo, hi) =
            s.sample.scalar.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
        assert!(hi - lo < 1e-3 * hi, "scalar curvature not constant at t = {}", s.state.time());
        assert!(lo > previous);
        previous = lo;
    }
    // R = n(n-1) / r^2 at the end.
    let r = sphere_radius(3, 1.0, 0.2).unwrap();
    let last = &h.snapshots().last().unwrap().sample;
    assert!((last.scalar[100] - 6.0 / (r * r)).abs() < 1e-2 * 6.0 / (r * r));
}

#[test]
fn runs_are_deterministic() {
    let cfg = ScenarioConfig { profile: Profile::Dumbbell, nodes: 100, t_end: 0.05, ..Default::default() };
    assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
}

#[test]
fn extinction_examples() {
    assert_eq!(extinction_time(3, 1.0), 0.25);
    assert_eq!(extinction_time(4, 3.0), 1.5);
    assert!(matches!(sphere_radius(3, 1.0, 0.25), Err(Error::SphereExtinct { .. })));
}

#[test]
fn sphere_run_past_extinction_stops_early() {
    let cfg = ScenarioConfig { nodes: 100, t_end: 0.3, pinch_epsilon: 0.1, ..Default::default() };
    let h = run(&cfg).unwrap();
    assert_ne!(h.stop_reason(), StopReason::TimeReached);
    assert!(h.t_end() < 0.25);
}

#[test]
fn dumbbell_neck_pinches_first() {
    let cfg = ScenarioConfig {
        profile: Profile::Dumbbell,
        nodes: 200,
        neck_amp: 0.8,
        neck_width: 0.2,
        t_end: 1.0,
        pinch_epsilon: 0.1,
        snapshot_every: 16,
        ..Default::default()
    };
    let h = run(&cfg).unwrap();
    assert_eq!(h.stop_reason(), StopReason::PinchDetected);
    let last = &h.snapshots().last().unwrap().state;
    assert!(pinch_radius(last) < 0.1);
    // The lobes are still macroscopic when the neck goes.
    assert!(last.w().iter().copied().fold(0.0, f64::max) > 0.3);
    assert!(h.t_end() < 0.25);
}

#[test]
fn cylinder_radius_follows_the_ode() {
    // A uniform tube of radius rho0 evolves as rho^2 = rho0^2 - 2(n-2)t.
    let grid = Grid::new(64).unwrap();
    let mut s = WarpedState::new(grid, 4, 0.0, vec![3.0; 65], vec![1.0; 65], Topology::Neck).unwrap();
    for _ in 0..100 {
        s = step(&s, 1e-3).unwrap();
    }
    let expected = (1.0f64 - 4.0 * 0.1).sqrt();
    for w in s.w() {
        assert!((w - expected).abs() < 1e-10, "{w} vs {expected}");
    }
    assert!(s.psi().iter().all(|p| (p - 3.0).abs() < 1e-12));
}

#[test]
fn cylinder_scenario_runs_to_completion() {
    let text =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/cylinder.conf")).unwrap();
    let mut cfg = parse_config(&text).unwrap();
    cfg.nodes = 100;
    let h = run(&cfg).unwrap();
    assert_eq!(h.stop_reason(), StopReason::TimeReached);
    let s = &h.snapshots().last().unwrap().state;
    assert!(pinch_radius(s) < 1.0 && pinch_radius(s) > 0.5);
}

#[test]
fn snapshot_cadence() {
    let cfg = ScenarioConfig { nodes: 50, t_end: 0.01, snapshot_every: 5, ..Default::default() };
    let h = run(&cfg).unwrap();
    let times = h.times();
    assert_eq!(times[0], 0.0);
    assert_eq!(*times.last().unwrap(), 0.01);
    assert!(times.windows(2).all(|p| p[1] > p[0]));
    let every_step = run(&ScenarioConfig { snapshot_every: 1, ..cfg.clone() }).unwrap();
    assert!(every_step.len() > 4 * (h.len() - 2));
}

#[test]
fn invalid_scenarios_are_errors() {
    for cfg in [
        ScenarioConfig { r0: -1.0, ..Default::default() },
        ScenarioConfig { profile: Profile::Dumbbell, neck_amp: 1.5, ..Default::default() },
        ScenarioConfig { profile: Profile::Dumbbell, neck_width: 0.0, ..Default::default() },
        ScenarioConfig {
            profile: Profile::CylinderCaps,
            topology: Topology::Neck,
            neck_width: 0.7,
            ..Default::default()
        },
    ] {
        assert!(matches!(init_scenario(&cfg), Err(Error::InvalidProfileParameters(_))), "{cfg:?}");
    }
    assert!(matches!(
        init_scenario(&ScenarioConfig { nodes: 4, ..Default::default() }),
        Err(Error::InvalidGrid(_))
    ));
    assert!(matches!(
        FlowHistory::from_states(vec![], ScenarioConfig::default(), StopReason::TimeReached),
        Err(Error::EmptyHistory)
    ));
}

#[test]
fn cone_initial_data_fails_numerically() {
    let grid = Grid::new(64).unwrap();
    let w: Vec<f64> = (0..=64).map(|i| 1.5 * (PI * i.min(64 - i) as f64 / 64.0).sin()).collect();
    let cone = WarpedState::new(grid, 3, 0.0, vec![PI; 65], w, Topology::Sphere).unwrap();
    assert!(curvature_sample(&cone).is_err());
    assert!(run_from(cone, &sphere_cfg(64, 0.01)).is_err());
}

#[test]
fn history_rescaling_is_parabolic() {
    let h = run(&sphere_cfg(100, 0.05)).unwrap();
    let scaled = h.rescaled(4.0).unwrap();
    assert_eq!(scaled.len(), h.len());
    assert_eq!(scaled.t_end(), 0.2);
    assert!((scaled.k_bar() * 4.0 - h.k_bar()).abs() < 1e-12 * h.k_bar());
}
