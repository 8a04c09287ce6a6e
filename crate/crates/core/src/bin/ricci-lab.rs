use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ricci_lab::config::{parse_config, HKind, PickMode, ScenarioConfig};
use ricci_lab::decomposition::{decompose, decomposition_constants, random_instance};
use ricci_lab::flow::{run, StopReason};
use ricci_lab::monitors::barrier::lemma_a_margins;
use ricci_lab::monitors::pick::{pick_point, verify_pick, PickParams, QField};
use ricci_lab::monitors::{h_value, validate_h_fn};
use ricci_lab::output::{
    build_report, config_from_report, emit_outputs, history_from_snapshots, stop_reason_from_report,
};
use ricci_lab::Error;

#[derive(Parser)]
#[command(
    name = "ricci-lab",
    version,
    about = "Rotationally symmetric Ricci flow with curvature-estimate monitors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write series.csv, snapshots.csv and report.txt.
    Run {
        config: PathBuf,
        /// Output directory (default: out/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Pick a point on a stored history.
    Pick {
        snapshots: PathBuf,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value = "global")]
        mode: PickMode,
        #[arg(long)]
        x0: Option<f64>,
        /// Scenario config; defaults to the report.txt next to the snapshots.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check the orthogonal decomposition on random instances.
    CheckDecomposition {
        /// Dimension; all of 2..=8 when omitted.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Print the barrier arithmetic margins.
    LemmaA {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        theta1: f64,
    },
    /// Check that a time weight is admissible.
    ValidateH {
        #[arg(long)]
        kind: HKind,
        #[arg(long = "T")]
        t_total: f64,
        #[arg(long)]
        m: f64,
    },
    /// Run every config matching a glob, concurrently.
    Sweep {
        pattern: String,
        /// Parent of the per-config output directories.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

/// Exit status: 0 success, 1 failed check, 2 bad input.
enum Outcome {
    Pass,
    Fail,
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse { .. }
            | Error::Range { .. }
            | Error::Io { .. }
            | Error::InvalidGrid(_)
            | Error::InvalidProfileParameters(_)
            | Error::RadiusTooLarge { .. }
            | Error::DimensionTooSmall { .. }
    )
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn load_config(path: &Path) -> Result<ScenarioConfig, Error> {
    parse_config(&read(path)?)
}

fn run_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<Outcome, Error> {
    let started = Instant::now();
    let history = run(cfg)?;
    let report = build_report(&history, started.elapsed())?;
    emit_outputs(&history, &report, out)?;
    let s = &report.summary;
    println!(
        "{}: {} at t = {:?} after {} snapshots ({:.2} s)",
        cfg.name,
        report.stop_reason,
        s.t_total,
        report.snapshots,
        report.wall_clock.as_secs_f64()
    );
    println!(
        "  k_bar = {:?}  shi_ratio_max = {:?}  taming = {:?} / {:?}",
        s.k_bar, s.shi_ratio_max, s.taming_max.early, s.taming_max.late
    );
    println!("  outputs in {}", out.display());
    let failures = report.failures();
    for f in &failures {
        println!("  FAIL {f}");
    }
    Ok(if failures.is_empty() { Outcome::Pass } else { Outcome::Fail })
}

fn cmd_pick(
    snapshots: &Path,
    alpha: f64,
    mode: PickMode,
    x0: Option<f64>,
    config: Option<&Path>,
) -> Result<Outcome, Error> {
    let sibling = snapshots.with_file_name("report.txt");
    let (cfg, stop) = match config {
        Some(p) => (load_config(p)?, StopReason::TimeReached),
        None if sibling.exists() => {
            let text = read(&sibling)?;
            let stop = stop_reason_from_report(&text).unwrap_or(StopReason::TimeReached);
            (config_from_report(&text)?, stop)
        }
        None => (ScenarioConfig::default(), StopReason::TimeReached),
    };
    let history = history_from_snapshots(&read(snapshots)?, &cfg, stop)?;
    let field = QField::from_history(&history, cfg.nabla_norm);
    let mut params = PickParams::from_config(&cfg);
    params.alpha = alpha;
    params.mode = mode;
    if let Some(x) = x0 {
        params.x0 = x;
    }
    let result = match pick_point(&field, &params) {
        Ok(r) => r,
        Err(Error::NoViolation) => {
            println!("no space-time point exceeds alpha (K T / t)^(3/2); nothing to pick");
            return Ok(Outcome::Pass);
        }
        Err(e) => return Err(e),
    };
    let v = verify_pick(&field, &result, &params);
    println!("point (snapshot, node) = ({}, {})", result.point.0, result.point.1);
    println!("q_bar = {:?}  t_bar = {:?}  x_bar = {:?}", result.q_bar, result.t_bar, result.x_bar);
    println!("window = [{:?}, {:?}]  radius = {:?}", result.window.0, result.window.1, result.radius);
    println!("iterations = {}  trace = {:?}", result.iterations, result.trace);
    println!(
        "verified: threshold {} dominated {} containment {}",
        v.threshold_ok, v.dominated_ok, v.containment_ok
    );
    Ok(if v.all() { Outcome::Pass } else { Outcome::Fail })
}

fn cmd_check_decomposition(n: Option<usize>, cases: usize, seed: u64) -> Result<Outcome, Error> {
    const TOL: f64 = 1e-10;
    let dims: Vec<usize> = match n {
        Some(n) => vec![n],
        None => (2..=8).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ok = true;
    for &n in &dims {
        let c = decomposition_constants(n)?;
        let mut worst = 0.0f64;
        for _ in 0..cases {
            let inst = random_instance(n, &mut rng)?;
            worst = worst.max(decompose(&inst)?.worst_defect());
        }
        let pass = worst < TOL;
        ok &= pass;
        println!(
            "n = {n}: a = {:?} b = {:?}  worst relative defect over {cases} cases = {worst:e}  {}",
            c.a,
            c.b_dec,
            if pass { "ok" } else { "FAIL" }
        );
    }
    Ok(if ok { Outcome::Pass } else { Outcome::Fail })
}

fn cmd_lemma_a(n: usize, theta1: f64) -> Result<Outcome, Error> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { n, min: 2 });
    }
    if !(theta1 > 0.0 && theta1 < 1.0) {
        return Err(Error::Range { key: "theta1".into(), message: "must lie in (0, 1)".into() });
    }
    let m = lemma_a_margins(n, theta1);
    println!("c = {:?}  d = {:?}", m.c, m.d);
    println!("margin_c = {:?}  margin_d = {:?}", m.margin_c, m.margin_d);
    Ok(if m.closes() { Outcome::Pass } else { Outcome::Fail })
}

fn cmd_validate_h(kind: HKind, t_total: f64, m: f64) -> Result<Outcome, Error> {
    if !(t_total > 0.0 && t_total.is_finite()) {
        return Err(Error::Range { key: "T".into(), message: "must be positive".into() });
    }
    if m.is_nan() || m < 1.0 {
        return Err(Error::Range { key: "m".into(), message: "must be at least 1".into() });
    }
    let v = validate_h_fn(|t| h_value(kind, t, t_total), t_total, m);
    println!("h <= t: {}", v.below_identity);
    println!("tightest m = {:?} (given {m:?}): {}", v.tightest_m, if v.m_ok { "ok" } else { "too small" });
    Ok(if v.valid() { Outcome::Pass } else { Outcome::Fail })
}

fn cmd_sweep(pattern: &str, out: &Path, jobs: Option<usize>) -> Result<Outcome, Error> {
    let paths = glob::glob(pattern)
        .map_err(|e| Error::Parse { line: 0, message: format!("bad glob '{pattern}': {e}") })?
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| {
            let path = e.path().to_path_buf();
            Error::Io { path, source: e.into() }
        })?;
    if paths.is_empty() {
        return Err(Error::Range { key: "pattern".into(), message: format!("'{pattern}' matches nothing") });
    }
    // Parse everything up front so a bad file aborts before any run starts.
    let configs =
        paths.iter().map(|p| load_config(p).map(|c| (p.clone(), c))).collect::<Result<Vec<_>, _>>()?;
    let workers = jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .clamp(1, configs.len());
    let next = AtomicUsize::new(0);
    let results = Mutex::new(vec![None; configs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some((path, cfg)) = configs.get(k) else { break };
                let stem = path.file_stem().map_or_else(|| format!("run{k}"), |s| s.to_string_lossy().into());
                let outcome = run_scenario(cfg, &out.join(stem));
                let pass = match outcome {
                    Ok(Outcome::Pass) => true,
                    Ok(Outcome::Fail) => false,
                    Err(e) => {
                        eprintln!("{}: {e}", path.display());
                        false
                    }
                };
                results.lock().expect("no worker panics")[k] = Some(pass);
            });
        }
    });
    let results = results.into_inner().expect("no worker panics");
    let failed: Vec<_> = configs
        .iter()
        .zip(&results)
        .filter(|(_, r)| **r != Some(true))
        .map(|((p, _), _)| p.display().to_string())
        .collect();
    println!("sweep: {} of {} scenarios passed", configs.len() - failed.len(), configs.len());
    for f in &failed {
        println!("  failed: {f}");
    }
    Ok(if failed.is_empty() { Outcome::Pass } else { Outcome::Fail })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out } => load_config(&config).and_then(|cfg| {
            let out = out.unwrap_or_else(|| Path::new("out").join(&cfg.name));
            run_scenario(&cfg, &out)
        }),
        Command::Pick { snapshots, alpha, mode, x0, config } => {
            cmd_pick(&snapshots, alpha, mode, x0, config.as_deref())
        }
        Command::CheckDecomposition { n, cases, seed } => cmd_check_decomposition(n, cases, seed),
        Command::LemmaA { n, theta1 } => cmd_lemma_a(n, theta1),
        Command::ValidateH { kind, t_total, m } => cmd_validate_h(kind, t_total, m),
        Command::Sweep { pattern, out, jobs } => cmd_sweep(&pattern, &out, jobs),
    };
    match outcome {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if is_input_error(&e) { 2 } else { 1 })
        }
    }
}
