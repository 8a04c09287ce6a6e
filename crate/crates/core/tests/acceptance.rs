//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p ricci-lab --test acceptance`.

use std::f64::consts::LN_2;
use std::fs;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ricci_lab::config::{PickMode, Profile, ScenarioConfig};
use ricci_lab::decomposition::{
    decompose, decomposition_constants, random_instance, random_monotone_profile, rot_sym_bianchi_check,
};
use ricci_lab::flow::{exact_sphere_on, run, sphere_radius, FlowHistory, StopReason};
use ricci_lab::monitors::barrier::{build_cutoff, lemma_a_margins, lemma_b_track};
use ricci_lab::monitors::pick::{pick_point, verify_pick, PickParams, QField, SyntheticShape};
use ricci_lab::monitors::{summary, MonitorParams, MonitorSummary};
use ricci_lab::output::{build_report, emit_outputs, history_from_snapshots, series_csv_for};
use ricci_lab::residuals::evolution_residuals;
use ricci_lab::{Error, Topology, WarpedState};

type Outcome = (bool, String);

fn sphere(nodes: usize) -> ScenarioConfig {
    ScenarioConfig { name: "sphere".into(), nodes, t_end: 0.2, ..Default::default() }
}

fn cylinder(nodes: usize) -> ScenarioConfig {
    ScenarioConfig {
        name: "cylinder".into(),
        topology: Topology::Neck,
        profile: Profile::CylinderCaps,
        nodes,
        neck_amp: 0.3,
        neck_width: 0.2,
        t_end: 0.1,
        ..Default::default()
    }
}

fn dumbbell(nodes: usize) -> ScenarioConfig {
    let refine = nodes / 100;
    ScenarioConfig {
        name: "dumbbell".into(),
        profile: Profile::Dumbbell,
        nodes,
        neck_amp: 0.8,
        neck_width: 0.2,
        t_end: 1.0,
        pinch_epsilon: 0.1,
        // Same recorded times at every resolution: dt scales like 1/N^2.
        snapshot_every: 4 * refine * refine,
        ..Default::default()
    }
}

fn spread(values: &[f64]) -> f64 {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(0.0, f64::max);
    (hi - lo) / lo
}

fn exact_sphere_error(history: &FlowHistory) -> f64 {
    let last = &history.snapshots().last().expect("non-empty").state;
    let t = last.time();
    let exact = exact_sphere_on(*last.grid(), 3, 1.0, t).expect("before extinction");
    let r = sphere_radius(3, 1.0, t).expect("before extinction");
    last.w().iter().zip(exact.w()).map(|(a, b)| (a - b).abs() / r).fold(0.0, f64::max)
}

fn exact_sphere_regression() -> Outcome {
    let mut errors = Vec::new();
    let mut elapsed = Duration::ZERO;
    for nodes in [100, 200, 400] {
        let started = Instant::now();
        let h = match run(&sphere(nodes)) {
            Ok(h) => h,
            Err(e) => return (false, format!("N = {nodes}: {e}")),
        };
        elapsed = started.elapsed();
        if h.stop_reason() != StopReason::TimeReached {
            return (false, format!("N = {nodes} stopped with {}", h.stop_reason()));
        }
        errors.push(exact_sphere_error(&h));
    }
    let ratios = [errors[0] / errors[1], errors[1] / errors[2]];
    let ok = errors[2] < 1e-3
        && ratios.iter().all(|r| (3.4..=4.6).contains(r))
        && elapsed < Duration::from_secs(30);
    (
        ok,
        format!(
            "errors {:.3e} {:.3e} {:.3e}, ratios {:.2} {:.2}, N=400 runtime {:.2} s",
            errors[0],
            errors[1],
            errors[2],
            ratios[0],
            ratios[1],
            elapsed.as_secs_f64()
        ),
    )
}

/// Largest per-snapshot median of the normalised residual.
fn residual_median(cfg: &ScenarioConfig) -> Result<f64, Error> {
    let h = run(cfg)?;
    let stats = evolution_residuals(&h)?;
    Ok(stats.iter().filter(|s| s.is_evaluated()).map(|s| s.median).fold(0.0, f64::max))
}

fn evolution_residual() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, make) in [("sphere", sphere as fn(usize) -> ScenarioConfig), ("cylinder", cylinder)] {
        let medians: Result<Vec<f64>, Error> =
            [100, 200, 400].iter().map(|&n| residual_median(&make(n))).collect();
        let medians = match medians {
            Ok(m) => m,
            Err(e) => return (false, format!("{name}: {e}")),
        };
        let ratios = [medians[0] / medians[1], medians[1] / medians[2]];
        // At least second order: each halving of the grid spacing divides
        // the residual by about four or more.
        ok &= medians[2] < 5e-2 && ratios.iter().all(|r| *r >= 3.4);
        parts.push(format!(
            "{name} medians {:.2e} {:.2e} {:.2e} (ratios {:.2} {:.2})",
            medians[0], medians[1], medians[2], ratios[0], ratios[1]
        ));
    }
    (ok, parts.join("; "))
}

fn decomposition_identities() -> Outcome {
    const CASES: usize = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for n in 2..=8 {
        for _ in 0..CASES {
            let d = random_instance(n, &mut rng).and_then(|inst| decompose(&inst));
            match d {
                Ok(d) => worst = worst.max(d.worst_defect()),
                Err(e) => return (false, format!("n = {n}: {e}")),
            }
        }
    }
    let c3 = decomposition_constants(3).expect("n >= 2");
    let c4 = decomposition_constants(4).expect("n >= 2");
    let exact = (c3.a, c3.b_dec, c4.a, c4.b_dec) == (1.0 / 20.0, 3.0 / 10.0, 1.0 / 18.0, 2.0 / 9.0);
    (
        worst < 1e-10 && exact,
        format!(
            "{CASES} instances per n in 2..=8, worst relative defect {worst:.2e}, constants exact: {exact}"
        ),
    )
}

fn strong_bianchi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut min_margin = f64::INFINITY;
    let mut min_rel = f64::INFINITY;
    for k in 0..200 {
        let n = 3 + k % 6;
        let report =
            random_monotone_profile(n, 200, &mut rng).and_then(|(_, s)| rot_sym_bianchi_check(&s, n, 0.0));
        match report {
            Ok(r) => {
                min_margin = min_margin.min(r.min_margin);
                min_rel = min_rel.min(r.min_margin_rel);
            }
            Err(e) => return (false, format!("profile {k}: {e}")),
        }
    }
    (
        min_margin >= -1e-10,
        format!("200 profiles, n in 3..=8: min margin {min_margin:.3e} (relative {min_rel:.3e})"),
    )
}

/// Arc distance between two nodes of one slice.
fn arc_between(field: &QField, j: usize, a: usize, b: usize) -> f64 {
    let (lo, hi) = (a.min(b), a.max(b));
    field.psi[j][lo..=hi].windows(2).map(|p| 0.5 * (p[0] + p[1]) * field.dx).sum()
}

fn pick_campaign(mode: PickMode, seed: u64) -> Result<(usize, usize, usize), String> {
    const FIELDS: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut picked, mut escalated, mut failed) = (0, 0, 0);
    for k in 0..FIELDS {
        let shape = match mode {
            PickMode::Global => SyntheticShape::default(),
            PickMode::Local => SyntheticShape::local(),
        };
        let field = QField::synthetic_with(&mut rng, shape);
        let mut params = PickParams { alpha: 1.0, eta: 1.0, mode, epsilon: 0.5, x0: 0.5, start: None };
        let centre = (field.nodes() - 1) / 2;
        let reach = 2.0 * field.t_total.sqrt();
        let mut starts = Vec::new();
        for j in 0..field.snapshots() {
            let thr = field.threshold(params.alpha, field.times[j]);
            for i in 0..field.nodes() {
                if field.q[j][i] > thr
                    && (mode == PickMode::Global || arc_between(&field, j, i, centre) < reach)
                {
                    starts.push((j, i));
                }
            }
        }
        // Half the fields start from a random violating point, half from the worst.
        if k % 2 == 0 && !starts.is_empty() {
            params.start = Some(starts[rng.gen_range(0..starts.len())]);
        }
        let r = match pick_point(&field, &params) {
            Ok(r) => r,
            Err(Error::NoViolation) if starts.is_empty() => continue,
            Err(e) => return Err(format!("field {k}: {e}")),
        };
        picked += 1;
        if r.iterations > 0 {
            escalated += 1;
        }
        let escalation = r.trace.windows(2).all(|p| p[1] > 8.0 * p[0]);
        if !verify_pick(&field, &r, &params).all() || !escalation {
            failed += 1;
        }
    }
    Ok((picked, escalated, failed))
}

fn point_picking() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (mode, seed) in [(PickMode::Global, 11), (PickMode::Local, 12)] {
        match pick_campaign(mode, seed) {
            Ok((picked, escalated, failed)) => {
                ok &= failed == 0 && picked > 0;
                parts.push(format!("{mode}: {picked} picks, {escalated} escalated, {failed} failed"));
            }
            Err(e) => return (false, format!("{mode}: {e}")),
        }
    }
    (ok, parts.join("; "))
}

fn barrier_arithmetic() -> Outcome {
    let mut min_c = f64::INFINITY;
    let mut min_d = f64::INFINITY;
    for n in 2..=10 {
        for k in 1..=9 {
            let m = lemma_a_margins(n, k as f64 / 10.0);
            min_c = min_c.min(m.margin_c);
            min_d = min_d.min(m.margin_d);
        }
    }
    let m = lemma_a_margins(3, 0.5);
    let exact = m.margin_c == 50.0 && m.margin_d == 1.5;
    (
        min_c > 0.0 && min_d > 0.0 && exact,
        format!(
            "min margin_c {min_c}, min margin_d {min_d}, n=3 theta1=0.5 gives {:?} / {:?}",
            m.margin_c, m.margin_d
        ),
    )
}

fn cutoff_tracking(sphere_run: &FlowHistory) -> Outcome {
    let s0 = &sphere_run.snapshots()[0].state;
    let k = sphere_run.k_bar();
    let cutoff = match build_cutoff(s0, 0.25 * s0.length()) {
        Ok(c) => c,
        Err(e) => return (false, e.to_string()),
    };
    let along_flow = lemma_b_track(sphere_run, &cutoff, k);

    // Homothetic shrink g(t) = e^{-2Kt} g(0) at the same K, sampled finely
    // around the predicted doubling time.
    let expected = LN_2 / (2.0 * k);
    let a = cutoff.a_grad;
    let states: Result<Vec<WarpedState>, Error> = (0..=400)
        .map(|step| {
            let t = step as f64 * expected / 200.0;
            let f = (-k * t).exp();
            let psi = s0.psi().iter().map(|p| p * f).collect();
            let w = s0.w().iter().map(|v| v * f).collect();
            WarpedState::new(*s0.grid(), s0.dim(), t, psi, w, s0.topology())
        })
        .collect();
    let model = states
        .and_then(|s| FlowHistory::from_states(s, sphere_run.scenario().clone(), StopReason::TimeReached));
    let model = match model {
        Ok(m) => lemma_b_track(&m, &cutoff.with_constant(a), k),
        Err(e) => return (false, e.to_string()),
    };
    let found = model.first_grad_violation;
    let close = found.is_some_and(|t| (t - expected).abs() <= 0.05 * expected);
    (
        along_flow.exponential_bound_ok && model.exponential_bound_ok && close,
        format!(
            "sphere: bound holds at all {} snapshots: {}; model doubling at {:?} vs {:.5}",
            along_flow.t.len(),
            along_flow.exponential_bound_ok,
            found,
            expected
        ),
    )
}

fn scale_invariance(histories: &[&FlowHistory]) -> Outcome {
    let p = MonitorParams::default();
    let mut worst = 0.0f64;
    for h in histories {
        let base = match summary(h, &p) {
            Ok(s) => s,
            Err(e) => return (false, e.to_string()),
        };
        for c in [0.01, 0.5, 7.0, 1e3] {
            let scaled = match h.rescaled(c).and_then(|s| summary(&s, &p)) {
                Ok(s) => s,
                Err(e) => return (false, e.to_string()),
            };
            for (x, y) in [
                (base.shi_ratio_max, scaled.shi_ratio_max),
                (base.rm_ratio_max, scaled.rm_ratio_max),
                (base.shig_ratio_max, scaled.shig_ratio_max),
            ] {
                let rel = if x == y { 0.0 } else { (x - y).abs() / x.abs().max(y.abs()) };
                worst = worst.max(rel);
            }
        }
    }
    (
        worst <= 1e-8,
        format!("worst relative change {worst:.2e} over 4 scalings of {} histories", histories.len()),
    )
}

fn shi_ratio_stability(dumbbell_400: &FlowHistory) -> Outcome {
    let p = MonitorParams::default();
    let mut rows: Vec<(usize, MonitorSummary, StopReason)> = Vec::new();
    for nodes in [200, 400, 800] {
        let s = if nodes == 400 {
            summary(dumbbell_400, &p).map(|s| (s, dumbbell_400.stop_reason()))
        } else {
            run(&dumbbell(nodes)).and_then(|h| summary(&h, &p).map(|s| (s, h.stop_reason())))
        };
        match s {
            Ok((s, stop)) => rows.push((nodes, s, stop)),
            Err(e) => return (false, format!("N = {nodes}: {e}")),
        }
    }
    let pinched = rows.iter().all(|r| r.2 == StopReason::PinchDetected);
    let shi: Vec<f64> = rows.iter().map(|r| r.1.shi_ratio_max).collect();
    let early: Vec<f64> = rows.iter().map(|r| r.1.taming_max.early).collect();
    let late: Vec<f64> = rows.iter().map(|r| r.1.taming_max.late).collect();
    let spreads = [spread(&shi), spread(&early), spread(&late)];
    let (_, mid, _) = &rows[1];
    (
        pinched && spreads.iter().all(|s| *s <= 0.1),
        format!(
            "spreads shi {:.1}% taming early {:.1}% late {:.1}%; at N=400 alpha_obs {:.4} C_obs {:.4} / {:.4}, T {:.5}",
            100.0 * spreads[0],
            100.0 * spreads[1],
            100.0 * spreads[2],
            mid.shi_ratio_max,
            mid.taming_max.early,
            mid.taming_max.late,
            mid.t_total
        ),
    )
}

fn determinism_and_round_trip() -> Outcome {
    let dir = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return (false, e.to_string()),
    };
    let mut notes = Vec::new();
    for cfg in [sphere(200), dumbbell(200), cylinder(200)] {
        let write = |sub: &str| -> Result<FlowHistory, Error> {
            let h = run(&cfg)?;
            let report = build_report(&h, Duration::ZERO)?;
            emit_outputs(&h, &report, &dir.path().join(format!("{}-{sub}", cfg.name)))?;
            Ok(h)
        };
        let h = match write("a").and_then(|h| write("b").map(|_| h)) {
            Ok(h) => h,
            Err(e) => return (false, format!("{}: {e}", cfg.name)),
        };
        let a = dir.path().join(format!("{}-a", cfg.name));
        let b = dir.path().join(format!("{}-b", cfg.name));
        let read = |p: std::path::PathBuf| fs::read(p).unwrap_or_default();
        let identical = ["series.csv", "snapshots.csv", "report.txt"]
            .iter()
            .all(|f| read(a.join(f)) == read(b.join(f)) && !read(a.join(f)).is_empty());
        let snapshots = String::from_utf8(read(a.join("snapshots.csv"))).unwrap_or_default();
        let recomputed =
            history_from_snapshots(&snapshots, &cfg, h.stop_reason()).and_then(|h| series_csv_for(&h));
        let series = String::from_utf8(read(a.join("series.csv"))).unwrap_or_default();
        let round_trip = recomputed.is_ok_and(|s| s == series);
        if !(identical && round_trip) {
            return (false, format!("{}: identical {identical}, round trip {round_trip}", cfg.name));
        }
        notes.push(cfg.name.clone());
    }
    (true, format!("byte-identical reruns and bit-exact series recomputation for {}", notes.join(", ")))
}

fn main() -> ExitCode {
    let started = Instant::now();
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut record = |name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let (ok, detail) = f();
        println!(
            "{} {name}: {detail} [{:.1} s]",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
        results.push((name, (ok, detail)));
    };

    let sphere_run = run(&sphere(400));
    let dumbbell_run = run(&dumbbell(400));
    record("1 exact sphere regression", &exact_sphere_regression);
    record("2 evolution-equation residual", &evolution_residual);
    record("3 decomposition identities", &decomposition_identities);
    record("4 rotationally symmetric strong Bianchi", &strong_bianchi);
    record("5 point picking", &point_picking);
    record("6 barrier arithmetic", &barrier_arithmetic);
    match (&sphere_run, &dumbbell_run) {
        (Ok(s), Ok(d)) => {
            record("7 cutoff tracking", &|| cutoff_tracking(s));
            record("8 monitor scale invariance", &|| scale_invariance(&[s, d]));
            record("9 shi-ratio stability", &|| shi_ratio_stability(d));
        }
        _ => {
            let e = format!("{:?} / {:?}", sphere_run.as_ref().err(), dumbbell_run.as_ref().err());
            record("7 cutoff tracking", &|| (false, e.clone()));
            record("8 monitor scale invariance", &|| (false, e.clone()));
            record("9 shi-ratio stability", &|| (false, e.clone()));
        }
    }
    record("10 determinism and round trip", &determinism_and_round_trip);

    let failed = results.iter().filter(|(_, (ok, _))| !ok).count();
    println!(
        "acceptance: {} of {} criteria pass ({:.1} s)",
        results.len() - failed,
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
