//! Estimate monitors evaluated on a recorded flow.

pub mod barrier;
pub mod pick;

use std::f64::consts::PI;

use crate::config::{HKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::flow::FlowHistory;
use crate::geometry::{inj_lower_bound, sup, NablaRicNorm};

/// Free constants of the derivative estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorParams {
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub delta: f64,
    pub m: f64,
    pub h_kind: HKind,
    pub norm: NablaRicNorm,
}

impl MonitorParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            alpha: cfg.alpha,
            beta: cfg.beta,
            eta: cfg.eta,
            delta: cfg.delta,
            m: cfg.m,
            h_kind: cfg.h_kind,
            norm: cfg.nabla_norm,
        }
    }
}

impl Default for MonitorParams {
    fn default() -> Self {
        Self::from_config(&ScenarioConfig::default())
    }
}

/// Time weight `h(t)` on `[0, T]`.
pub fn h_value(kind: HKind, t: f64, t_total: f64) -> f64 {
    match kind {
        HKind::Linear => t,
        HKind::Sine => t_total / PI * (PI * t / t_total).sin(),
    }
}

/// Monitor values of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesRow {
    pub t: f64,
    pub sup_ric: f64,
    pub sup_rm: f64,
    pub sup_nabla_ric_full: f64,
    pub sup_nabla_ric_paper: f64,
    pub sup_nabla_r: f64,
    pub inj_est: f64,
    pub shi_ratio: f64,
    pub shi_ratio_h: f64,
    pub rm_ratio: f64,
    pub taming_product: f64,
    pub beta_needed: f64,
    pub shig_ratio: f64,
}

/// The two taming windows: `t sup|Rm|` for `t <= 1/K` and `sup|Rm|/K`
/// after.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TamingMax {
    pub early: f64,
    pub late: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorSummary {
    pub k_bar: f64,
    pub lambda0: f64,
    pub t_total: f64,
    pub shi_ratio_max: f64,
    pub shi_ratio_h_max: f64,
    pub rm_ratio_max: f64,
    pub taming_max: TamingMax,
    pub beta_needed: Vec<f64>,
    pub beta_needed_max: f64,
    pub shig_ratio_max: f64,
    /// Lower bound for the observed `delta` from the injectivity surrogate.
    pub delta_observed: f64,
    /// Same ratios computed with the other `|nabla Ric|` expression.
    pub shi_ratio_max_alt: f64,
    pub shig_ratio_max_alt: f64,
    pub series: Vec<SeriesRow>,
}

fn ratios(q_sup: f64, q_sq_sup: f64, t: f64, k_bar: f64, t_total: f64, h: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let shi = q_sup / (k_bar * t_total / t).powf(1.5);
    let shi_h = q_sup / (k_bar * t_total / h).powf(1.5);
    let shig = t * q_sq_sup / (k_bar * k_bar);
    (shi, shi_h, shig)
}

/// Evaluate every monitor on `history`.
pub fn summary(history: &FlowHistory, params: &MonitorParams) -> Result<MonitorSummary> {
    if history.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let k_bar = history.k_bar();
    let t_total = history.t_end();
    let alt = match params.norm {
        NablaRicNorm::Full => NablaRicNorm::Paper,
        NablaRicNorm::Paper => NablaRicNorm::Full,
    };
    let guard = 1e-12 * k_bar.powf(1.5);
    let mut series = Vec::with_capacity(history.len());
    let mut out = MonitorSummary {
        k_bar,
        lambda0: history.lambda0(),
        t_total,
        shi_ratio_max: 0.0,
        shi_ratio_h_max: 0.0,
        rm_ratio_max: 0.0,
        taming_max: TamingMax { early: 0.0, late: 0.0 },
        beta_needed: Vec::with_capacity(history.len()),
        beta_needed_max: 0.0,
        shig_ratio_max: 0.0,
        delta_observed: f64::INFINITY,
        shi_ratio_max_alt: 0.0,
        shig_ratio_max_alt: 0.0,
        series: Vec::new(),
    };
    for snap in history.snapshots() {
        let s = &snap.sample;
        let t = snap.state.time();
        let q_sq = s.nabla_ric_sq(params.norm);
        let q_sq_sup = sup(q_sq);
        let q_sup = q_sq_sup.sqrt();
        let alt_sq_sup = sup(s.nabla_ric_sq(alt));
        let h = h_value(params.h_kind, t, t_total);
        let (shi, shi_h, shig) = ratios(q_sup, q_sq_sup, t, k_bar, t_total, h);
        let (shi_alt, _, shig_alt) = ratios(alt_sq_sup.sqrt(), alt_sq_sup, t, k_bar, t_total, h);
        let sup_rm = s.sup_rm();
        let rm_ratio = if t > 0.0 { sup_rm * t / (k_bar * t_total) } else { 0.0 };
        let taming_product = t * sup_rm;
        if t <= 1.0 / k_bar {
            out.taming_max.early = out.taming_max.early.max(taming_product);
        }
        if t >= 1.0 / k_bar {
            out.taming_max.late = out.taming_max.late.max(sup_rm / k_bar);
        }
        let mut beta = 0.0f64;
        if t > 0.0 {
            let slack = params.alpha * k_bar / t.sqrt();
            for (q2, r2) in q_sq.iter().zip(&s.nabla_r_sq) {
                let num = q2.sqrt() - slack;
                let grad = r2.sqrt();
                if num > 0.0 && grad > guard {
                    beta = beta.max(num / grad);
                }
            }
        }
        let inj = inj_lower_bound(&snap.state, s)?;
        out.delta_observed = out.delta_observed.min(inj * k_bar.sqrt());
        out.shi_ratio_max = out.shi_ratio_max.max(shi);
        out.shi_ratio_h_max = out.shi_ratio_h_max.max(shi_h);
        out.rm_ratio_max = out.rm_ratio_max.max(rm_ratio);
        out.shig_ratio_max = out.shig_ratio_max.max(shig);
        out.shi_ratio_max_alt = out.shi_ratio_max_alt.max(shi_alt);
        out.shig_ratio_max_alt = out.shig_ratio_max_alt.max(shig_alt);
        out.beta_needed.push(beta);
        out.beta_needed_max = out.beta_needed_max.max(beta);
        series.push(SeriesRow {
            t,
            sup_ric: s.sup_ric(),
            sup_rm,
            sup_nabla_ric_full: sup(&s.nabla_ric_full).sqrt(),
            sup_nabla_ric_paper: sup(&s.nabla_ric_paper).sqrt(),
            sup_nabla_r: sup(&s.nabla_r_sq).sqrt(),
            inj_est: inj,
            shi_ratio: shi,
            shi_ratio_h: shi_h,
            rm_ratio,
            taming_product,
            beta_needed: beta,
            shig_ratio: shig,
        });
    }
    out.series = series;
    Ok(out)
}

/// Admissibility of the time weight `h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HValidation {
    /// `h(t) <= t` at every sampled time.
    pub below_identity: bool,
    /// Smallest `m` with `min_{[t*/2, t*]} h >= h(t*)/m` on the sample.
    pub tightest_m: f64,
    /// Whether the configured `m` suffices.
    pub m_ok: bool,
}

impl HValidation {
    pub fn valid(&self) -> bool {
        self.below_identity && self.m_ok
    }
}

/// Check `h(t) <= t` and `h(t) >= h(t*)/m` on `[t*/2, t*]` for a 512-point
/// logarithmic grid of `t*` in `(0, T)`.
pub fn validate_h_fn(h: impl Fn(f64) -> f64, t_total: f64, m: f64) -> HValidation {
    const POINTS: usize = 512;
    const INNER: usize = 64;
    let lo = (t_total * 1e-6).ln();
    let hi = (t_total * (1.0 - 1e-6)).ln();
    let mut below = true;
    let mut tightest: f64 = 1.0;
    for k in 0..POINTS {
        let t_star = (lo + (hi - lo) * k as f64 / (POINTS - 1) as f64).exp();
        let h_star = h(t_star);
        let mut min_h = f64::INFINITY;
        for j in 0..=INNER {
            let t = t_star * (0.5 + 0.5 * j as f64 / INNER as f64);
            let v = h(t);
            if v > t * (1.0 + 1e-12) {
                below = false;
            }
            min_h = min_h.min(v);
        }
        if !(h_star > 0.0 && min_h > 0.0) {
            tightest = f64::INFINITY;
            continue;
        }
        tightest = tightest.max(h_star / min_h);
    }
    HValidation { below_identity: below, tightest_m: tightest, m_ok: tightest <= m * (1.0 + 1e-12) }
}

/// `validate_h_fn` for the configured weight.
pub fn validate_h(params: &MonitorParams, t_total: f64) -> HValidation {
    validate_h_fn(|t| h_value(params.h_kind, t, t_total), t_total, params.m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_weight_needs_exactly_two() {
        let params = MonitorParams::default();
        let v = validate_h(&params, 1.0);
        assert!(v.valid());
        assert!((v.tightest_m - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sine_weight_is_admissible() {
        let params = MonitorParams { h_kind: HKind::Sine, ..Default::default() };
        let v = validate_h(&params, 0.7);
        assert!(v.below_identity && v.tightest_m.is_finite() && v.valid());
    }

    #[test]
    fn doubled_weight_is_rejected() {
        let v = validate_h_fn(|t| 2.0 * t, 1.0, 2.0);
        assert!(!v.below_identity && !v.valid());
    }
}
