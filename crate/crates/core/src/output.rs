//! Run reports and on-disk persistence.
//!
//! Every number is written with Rust's shortest round-trip formatting, so
//! parsing a file back yields the same bits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use crate::config::{parse_config, ScenarioConfig};
use crate::error::{Error, Result};
use crate::flow::{FlowHistory, Snapshot, StopReason};
use crate::grid::Grid;
use crate::monitors::barrier::{
    build_cutoff, lemma_a_margins, lemma_b_track, shil_quantities, BarrierParams, LemmaAMargins,
    LemmaBSeries, ShilReport,
};
use crate::monitors::pick::{pick_point, verify_pick, PickParams, PickResult, PickVerification, QField};
use crate::monitors::{summary, validate_h, HValidation, MonitorParams, MonitorSummary};
use crate::residuals::{evolution_residuals, ResidualStats};
use crate::state::WarpedState;

pub const SERIES_HEADER: &str = "t,sup_ric,sup_rm,sup_nabla_ric_full,sup_nabla_ric_paper,sup_nabla_R,\
inj_est,shi_ratio,shi_ratio_h,rm_ratio,taming_product,beta_needed,shig_ratio,residual_max";
pub const SNAPSHOTS_HEADER: &str = "t,x,psi,w";

/// A report entry that was either computed or skipped for a stated reason.
#[derive(Debug, Clone, PartialEq)]
pub enum Section<T> {
    Done(T),
    Skipped(String),
}

impl<T> Section<T> {
    pub fn done(&self) -> Option<&T> {
        match self {
            Section::Done(v) => Some(v),
            Section::Skipped(_) => None,
        }
    }

    fn from_result(r: Result<T>) -> Self {
        match r {
            Ok(v) => Section::Done(v),
            Err(e) => Section::Skipped(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PickOutcome {
    pub result: PickResult,
    pub verification: PickVerification,
}

/// Everything learned from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: ScenarioConfig,
    pub stop_reason: StopReason,
    pub snapshots: usize,
    pub summary: MonitorSummary,
    pub residuals: Section<Vec<ResidualStats>>,
    pub pick: Section<PickOutcome>,
    pub lemma_a: LemmaAMargins,
    pub lemma_b: Section<LemmaBSeries>,
    pub barrier: Section<ShilReport>,
    pub h_validation: HValidation,
    pub wall_clock: Duration,
}

impl RunReport {
    /// Checks whose failure makes a run unsuccessful.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.stop_reason == StopReason::NumericalFailure {
            out.push("flow stopped on a numerical failure".to_string());
        }
        if !self.h_validation.valid() {
            out.push(format!(
                "time weight rejected (h <= t: {}, tightest m = {})",
                self.h_validation.below_identity, self.h_validation.tightest_m
            ));
        }
        if !self.lemma_a.closes() {
            out.push("barrier arithmetic does not close".to_string());
        }
        if let Section::Done(p) = &self.pick {
            if !p.verification.all() {
                out.push(format!("pick verification failed: {:?}", p.verification));
            }
        }
        if let Section::Done(b) = &self.lemma_b {
            if !b.exponential_bound_ok {
                out.push("cutoff gradient exceeds A^2 exp(2Kt)".to_string());
            }
        }
        if let Section::Done(b) = &self.barrier {
            if let Some((t, x)) = b.first_crossing {
                out.push(format!("barrier F < H fails at t = {t:?}, x = {x:?}"));
            }
        }
        out
    }

    pub fn passed(&self) -> bool {
        self.failures().is_empty()
    }
}

/// Evaluate every monitor of the scenario on `history`.
pub fn build_report(history: &FlowHistory, wall_clock: Duration) -> Result<RunReport> {
    let cfg = history.scenario().clone();
    let params = MonitorParams::from_config(&cfg);
    let summary = summary(history, &params)?;
    let residuals = Section::from_result(evolution_residuals(history));

    let field = QField::from_history(history, cfg.nabla_norm);
    let pick_params = PickParams::from_config(&cfg);
    let pick = Section::from_result(pick_point(&field, &pick_params).map(|result| {
        let verification = verify_pick(&field, &result, &pick_params);
        PickOutcome { result, verification }
    }));

    let state0 = &history.snapshots()[0].state;
    let r = cutoff_radius(&cfg, state0);
    let cutoff = build_cutoff(state0, r);
    let lemma_b = match &cutoff {
        Ok(c) => Section::Done(lemma_b_track(history, c, history.k_bar())),
        Err(e) => Section::Skipped(e.to_string()),
    };
    let barrier = match &cutoff {
        Ok(c) => {
            let bp = BarrierParams::new(history.dim(), cfg.theta1, c.a_measured, cfg.b_const);
            Section::from_result(shil_quantities(history, c, &bp))
        }
        Err(e) => Section::Skipped(e.to_string()),
    };

    Ok(RunReport {
        lemma_a: lemma_a_margins(cfg.n, cfg.theta1),
        h_validation: validate_h(&params, history.t_end()),
        stop_reason: history.stop_reason(),
        snapshots: history.len(),
        config: cfg,
        summary,
        residuals,
        pick,
        lemma_b,
        barrier,
        wall_clock,
    })
}

/// Configured cutoff radius, or a quarter of the initial length.
pub fn cutoff_radius(cfg: &ScenarioConfig, state0: &WarpedState) -> f64 {
    cfg.cutoff_r.unwrap_or_else(|| 0.25 * state0.length())
}

/// Contents of series.csv.
pub fn series_csv(summary: &MonitorSummary, residuals: Option<&[ResidualStats]>) -> String {
    let mut out = String::with_capacity(64 * (summary.series.len() + 1));
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for (k, row) in summary.series.iter().enumerate() {
        let residual = residuals.and_then(|r| r.get(k)).map_or(f64::NAN, |r| r.max);
        let values = [
            row.t,
            row.sup_ric,
            row.sup_rm,
            row.sup_nabla_ric_full,
            row.sup_nabla_ric_paper,
            row.sup_nabla_r,
            row.inj_est,
            row.shi_ratio,
            row.shi_ratio_h,
            row.rm_ratio,
            row.taming_product,
            row.beta_needed,
            row.shig_ratio,
            residual,
        ];
        push_row(&mut out, &values);
    }
    out
}

/// Recompute series.csv from a history alone.
pub fn series_csv_for(history: &FlowHistory) -> Result<String> {
    let params = MonitorParams::from_config(history.scenario());
    let s = summary(history, &params)?;
    let residuals = evolution_residuals(history).ok();
    Ok(series_csv(&s, residuals.as_deref()))
}

fn push_row(out: &mut String, values: &[f64]) {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            out.push(',');
        }
        write!(out, "{v:?}").expect("writing to a String");
    }
    out.push('\n');
}

/// Contents of snapshots.csv. Refuses an empty slice.
pub fn snapshots_csv(snapshots: &[Snapshot]) -> Result<String> {
    if snapshots.is_empty() {
        return Err(Error::Output("no snapshots to write".into()));
    }
    let rows: usize = snapshots.iter().map(|s| s.state.psi().len()).sum();
    let mut out = String::with_capacity(80 * (rows + 1));
    out.push_str(SNAPSHOTS_HEADER);
    out.push('\n');
    for snap in snapshots {
        let s = &snap.state;
        let grid = s.grid();
        for i in 0..grid.len() {
            push_row(&mut out, &[s.time(), grid.x(i), s.psi()[i], s.w()[i]]);
        }
    }
    Ok(out)
}

/// Parse snapshots.csv into states of the configured dimension and topology.
pub fn parse_snapshots(text: &str, cfg: &ScenarioConfig) -> Result<Vec<WarpedState>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == SNAPSHOTS_HEADER => {}
        _ => return Err(Error::Parse { line: 1, message: format!("expected header '{SNAPSHOTS_HEADER}'") }),
    }
    let mut groups: Vec<(f64, Vec<[f64; 3]>, usize)> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut row = [0.0f64; 4];
        let mut fields = line.split(',');
        for slot in &mut row {
            let f = fields
                .next()
                .ok_or_else(|| Error::Parse { line: line_no, message: "expected 4 columns".into() })?;
            *slot = f
                .trim()
                .parse()
                .map_err(|e| Error::Parse { line: line_no, message: format!("bad number '{f}': {e}") })?;
        }
        if fields.next().is_some() {
            return Err(Error::Parse { line: line_no, message: "expected 4 columns".into() });
        }
        let [t, x, psi, w] = row;
        match groups.last_mut() {
            Some((gt, nodes, _)) if gt.to_bits() == t.to_bits() => nodes.push([x, psi, w]),
            _ => groups.push((t, vec![[x, psi, w]], line_no)),
        }
    }
    if groups.is_empty() {
        return Err(Error::Parse { line: 2, message: "no snapshot rows".into() });
    }
    groups
        .into_iter()
        .map(|(t, nodes, line)| {
            let grid = Grid::new(nodes.len().saturating_sub(1))
                .map_err(|e| Error::Parse { line, message: e.to_string() })?;
            for (i, node) in nodes.iter().enumerate() {
                if (node[0] - grid.x(i)).abs() > 1e-12 {
                    return Err(Error::Parse {
                        line: line + i,
                        message: format!("x = {} does not match the uniform grid", node[0]),
                    });
                }
            }
            let psi = nodes.iter().map(|n| n[1]).collect();
            let w = nodes.iter().map(|n| n[2]).collect();
            WarpedState::new(grid, cfg.n, t, psi, w, cfg.topology)
        })
        .collect()
}

/// Rebuild a history from snapshots.csv text.
pub fn history_from_snapshots(
    text: &str,
    cfg: &ScenarioConfig,
    stop_reason: StopReason,
) -> Result<FlowHistory> {
    FlowHistory::from_states(parse_snapshots(text, cfg)?, cfg.clone(), stop_reason)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |v| format!("{v:?}"))
}

/// Human-readable report. The `[config]` block parses back to the config.
/// Wall-clock time is left out so reruns produce identical files.
pub fn report_text(report: &RunReport) -> String {
    let mut o = String::new();
    let s = &report.summary;
    let _ = writeln!(o, "ricci-lab run report: {}", report.config.name);
    let _ = writeln!(o, "[config]");
    o.push_str(&report.config.to_config_text());
    let _ = writeln!(o, "[end config]");
    let _ = writeln!(o);
    let _ = writeln!(o, "[run]");
    let _ = writeln!(o, "stop_reason = {}", report.stop_reason);
    let _ = writeln!(o, "snapshots = {}", report.snapshots);
    let _ = writeln!(o, "t_total = {:?}", s.t_total);
    let _ = writeln!(o);
    let _ = writeln!(o, "[monitors]");
    let _ = writeln!(o, "k_bar = {:?}", s.k_bar);
    let _ = writeln!(o, "lambda0 = {:?}", s.lambda0);
    let _ = writeln!(o, "shi_ratio_max = {:?}", s.shi_ratio_max);
    let _ = writeln!(o, "shi_ratio_h_max = {:?}", s.shi_ratio_h_max);
    let _ = writeln!(o, "rm_ratio_max = {:?}", s.rm_ratio_max);
    let _ = writeln!(o, "taming_max_early = {:?}", s.taming_max.early);
    let _ = writeln!(o, "taming_max_late = {:?}", s.taming_max.late);
    let _ = writeln!(o, "beta_needed_max = {:?}", s.beta_needed_max);
    let _ = writeln!(o, "shig_ratio_max = {:?}", s.shig_ratio_max);
    let _ = writeln!(o, "delta_observed = {:?}", s.delta_observed);
    let _ = writeln!(o, "shi_ratio_max_other_norm = {:?}", s.shi_ratio_max_alt);
    let _ = writeln!(o, "shig_ratio_max_other_norm = {:?}", s.shig_ratio_max_alt);
    let _ = writeln!(o);
    let _ = writeln!(o, "[residuals]");
    match &report.residuals {
        Section::Done(r) => {
            let evaluated: Vec<&ResidualStats> = r.iter().filter(|r| r.is_evaluated()).collect();
            let max = evaluated.iter().map(|r| r.max).fold(0.0, f64::max);
            let worst_median = evaluated.iter().map(|r| r.median).fold(0.0, f64::max);
            let _ = writeln!(o, "evaluated_snapshots = {}", evaluated.len());
            let _ = writeln!(o, "max = {max:?}");
            let _ = writeln!(o, "worst_median = {worst_median:?}");
        }
        Section::Skipped(why) => {
            let _ = writeln!(o, "skipped: {why}");
        }
    }
    let _ = writeln!(o);
    let _ = writeln!(o, "[pick]");
    match &report.pick {
        Section::Done(p) => {
            let r = &p.result;
            let _ = writeln!(o, "point = ({}, {})", r.point.0, r.point.1);
            let _ = writeln!(o, "q_bar = {:?}", r.q_bar);
            let _ = writeln!(o, "t_bar = {:?}", r.t_bar);
            let _ = writeln!(o, "x_bar = {:?}", r.x_bar);
            let _ = writeln!(o, "window = [{:?}, {:?}]", r.window.0, r.window.1);
            let _ = writeln!(o, "radius = {}", fmt_opt(r.radius));
            let _ = writeln!(o, "iterations = {}", r.iterations);
            let trace: Vec<String> = r.trace.iter().map(|q| format!("{q:?}")).collect();
            let _ = writeln!(o, "trace = {}", trace.join(" "));
            let v = &p.verification;
            let _ = writeln!(
                o,
                "verified = threshold {} dominated {} containment {}",
                v.threshold_ok, v.dominated_ok, v.containment_ok
            );
        }
        Section::Skipped(why) => {
            let _ = writeln!(o, "skipped: {why}");
        }
    }
    let _ = writeln!(o);
    let a = &report.lemma_a;
    let _ = writeln!(o, "[barrier arithmetic]");
    let _ = writeln!(o, "c = {:?}", a.c);
    let _ = writeln!(o, "d = {:?}", a.d);
    let _ = writeln!(o, "margin_c = {:?}", a.margin_c);
    let _ = writeln!(o, "margin_d = {:?}", a.margin_d);
    let _ = writeln!(o);
    let _ = writeln!(o, "[cutoff]");
    match &report.lemma_b {
        Section::Done(b) => {
            let _ = writeln!(o, "a = {:?}", b.a);
            let _ = writeln!(o, "first_grad_violation = {}", fmt_opt(b.first_grad_violation));
            let _ = writeln!(o, "first_hess_violation = {}", fmt_opt(b.first_hess_violation));
            let _ = writeln!(o, "exponential_bound_ok = {}", b.exponential_bound_ok);
        }
        Section::Skipped(why) => {
            let _ = writeln!(o, "skipped: {why}");
        }
    }
    let _ = writeln!(o);
    let _ = writeln!(o, "[barrier]");
    match &report.barrier {
        Section::Done(b) => {
            let _ = writeln!(o, "horizon = {:?}", b.horizon);
            let _ = writeln!(o, "snapshots_used = {}", b.snapshots_used);
            let _ = writeln!(o, "c1 = {:?}", b.c1);
            let _ = writeln!(o, "c2 = {:?}", b.c2);
            let _ = writeln!(o, "b = {:?}", b.b);
            let _ = writeln!(o, "b_f = {:?}", b.b_f);
            let _ = writeln!(o, "max_f_over_h = {:?}", b.max_f_over_h);
            let crossing = b.first_crossing.map_or("none".into(), |(t, x)| format!("t = {t:?}, x = {x:?}"));
            let _ = writeln!(o, "first_crossing = {crossing}");
            let _ = writeln!(o, "best_fit_c = {:?}", b.best_fit_c);
        }
        Section::Skipped(why) => {
            let _ = writeln!(o, "skipped: {why}");
        }
    }
    let _ = writeln!(o);
    let h = &report.h_validation;
    let _ = writeln!(o, "[time weight]");
    let _ = writeln!(o, "below_identity = {}", h.below_identity);
    let _ = writeln!(o, "tightest_m = {:?}", h.tightest_m);
    let _ = writeln!(o, "m_ok = {}", h.m_ok);
    let _ = writeln!(o);
    let failures = report.failures();
    let _ = writeln!(o, "[verdict]");
    if failures.is_empty() {
        let _ = writeln!(o, "pass");
    }
    for f in failures {
        let _ = writeln!(o, "fail: {f}");
    }
    o
}

/// Extract and parse the `[config]` block of a report.
pub fn config_from_report(text: &str) -> Result<ScenarioConfig> {
    let start = text
        .lines()
        .position(|l| l.trim() == "[config]")
        .ok_or_else(|| Error::Parse { line: 1, message: "no [config] block".into() })?;
    let block: Vec<&str> = text.lines().skip(start + 1).take_while(|l| l.trim() != "[end config]").collect();
    parse_config(&block.join("\n")).map_err(|e| match e {
        Error::Parse { line, message } => Error::Parse { line: line + start + 1, message },
        other => other,
    })
}

/// Stop reason recorded in a report.
pub fn stop_reason_from_report(text: &str) -> Option<StopReason> {
    text.lines().find_map(|l| l.strip_prefix("stop_reason = ")).and_then(|v| match v.trim() {
        "time_reached" => Some(StopReason::TimeReached),
        "pinch_detected" => Some(StopReason::PinchDetected),
        "numerical_failure" => Some(StopReason::NumericalFailure),
        _ => None,
    })
}

/// Write series.csv, snapshots.csv and report.txt into `out_dir`.
pub fn emit_outputs(history: &FlowHistory, report: &RunReport, out_dir: &Path) -> Result<()> {
    let snapshots = snapshots_csv(history.snapshots())?;
    let residuals = report.residuals.done().map(Vec::as_slice);
    let series = series_csv(&report.summary, residuals);
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (name, body) in
        [("series.csv", series), ("snapshots.csv", snapshots), ("report.txt", report_text(report))]
    {
        let path = out_dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
