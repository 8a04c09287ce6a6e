//! Cutoff function and barrier quantities of the local derivative estimate.

use crate::error::{Error, Result};
use crate::flow::FlowHistory;
use crate::geometry::{radial_laplacian_values, rules, smoothstep5, warp_derivatives};
use crate::grid::RadialField;
use crate::state::WarpedState;
use crate::stencil::{d1, d2};

/// Radial cutoff `chi` about the middle of the domain, fixed in grid
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoff {
    pub chi: RadialField,
    /// Support radius `r` in arc length at `t = 0`.
    pub r: f64,
    /// Plateau radius `r / sqrt 2`.
    pub plateau: f64,
    /// Arc-length position of the centre at `t = 0`.
    pub center: f64,
    /// `sup |d_s chi|` at `t = 0`.
    pub a_grad: f64,
    /// `r sup |d_ss chi|` at `t = 0`.
    pub a_hess: f64,
    /// `max(a_grad, a_hess, 1 + 1e-9)`.
    pub a_measured: f64,
    /// `d_x chi` and `d_xx chi` on the grid.
    chi_x: Vec<f64>,
    chi_xx: Vec<f64>,
}

impl Cutoff {
    /// Same profile with the constant `A` replaced.
    pub fn with_constant(mut self, a: f64) -> Self {
        self.a_measured = a;
        self
    }

    pub fn chi_x(&self) -> &[f64] {
        &self.chi_x
    }
}

/// Build the cutoff of support radius `r` on the initial slice.
pub fn build_cutoff(state0: &WarpedState, r: f64) -> Result<Cutoff> {
    let arc = state0.arc_length();
    let length = *arc.last().expect("grid has nodes");
    let half = 0.5 * length;
    if !(r > 0.0 && r < half) {
        return Err(Error::RadiusTooLarge { radius: r, half_length: half });
    }
    let plateau = r / std::f64::consts::SQRT_2;
    let chi: Vec<f64> =
        arc.iter().map(|s| r * (1.0 - smoothstep5(((s - half).abs() - plateau) / (r - plateau)))).collect();
    let h = state0.grid().dx();
    let (_, _, rule) = rules(state0.topology());
    let chi_x = d1(&chi, h, rule);
    let chi_xx = d2(&chi, h, rule);
    let der = warp_derivatives(state0);
    let psi = state0.psi();
    let mut a_grad = 0.0f64;
    let mut a_hess = 0.0f64;
    for i in 0..chi.len() {
        let cs = chi_x[i] / psi[i];
        let css = (chi_xx[i] - chi_x[i] * der.psi_x[i] / psi[i]) / (psi[i] * psi[i]);
        a_grad = a_grad.max(cs.abs());
        a_hess = a_hess.max(r * css.abs());
    }
    Ok(Cutoff {
        chi: RadialField::new(state0.grid(), chi)?,
        r,
        plateau,
        center: half,
        a_grad,
        a_hess,
        a_measured: a_grad.max(a_hess).max(1.0 + 1e-9),
        chi_x,
        chi_xx,
    })
}

/// Time series of the cutoff derivative bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaBSeries {
    pub t: Vec<f64>,
    /// `sup |grad chi|^2_{g(t)}`
    pub grad_sq: Vec<f64>,
    /// `sup chi |Hess chi|_{g(t)}`
    pub hess_prod: Vec<f64>,
    pub a: f64,
    pub k: f64,
    /// First time `grad_sq > 2A^2`.
    pub first_grad_violation: Option<f64>,
    /// First time `hess_prod > 2A^2`.
    pub first_hess_violation: Option<f64>,
    /// `grad_sq <= A^2 e^{2Kt}` at every snapshot.
    pub exponential_bound_ok: bool,
}

/// Track the cutoff, held fixed in coordinates, along the flow.
pub fn lemma_b_track(history: &FlowHistory, cutoff: &Cutoff, k: f64) -> LemmaBSeries {
    let a = cutoff.a_measured;
    let two_a_sq = 2.0 * a * a;
    let chi = cutoff.chi.values();
    let nf = history.dim() as f64;
    let mut out = LemmaBSeries {
        t: Vec::new(),
        grad_sq: Vec::new(),
        hess_prod: Vec::new(),
        a,
        k,
        first_grad_violation: None,
        first_hess_violation: None,
        exponential_bound_ok: true,
    };
    for snap in history.snapshots() {
        let state = &snap.state;
        let t = state.time();
        let psi = state.psi();
        let der = warp_derivatives(state);
        let mut grad = 0.0f64;
        let mut hess = 0.0f64;
        for i in 0..chi.len() {
            let cs = cutoff.chi_x[i] / psi[i];
            let css = (cutoff.chi_xx[i] - cutoff.chi_x[i] * der.psi_x[i] / psi[i]) / (psi[i] * psi[i]);
            let tangential = snap.sample.ws_over_w[i] * cs;
            let norm = (css * css + (nf - 1.0) * tangential * tangential).sqrt();
            grad = grad.max(cs * cs);
            hess = hess.max(chi[i] * norm);
        }
        if grad > two_a_sq && out.first_grad_violation.is_none() {
            out.first_grad_violation = Some(t);
        }
        if hess > two_a_sq && out.first_hess_violation.is_none() {
            out.first_hess_violation = Some(t);
        }
        if grad > a * a * (2.0 * k * t).exp() * (1.0 + 1e-12) {
            out.exponential_bound_ok = false;
        }
        out.t.push(t);
        out.grad_sq.push(grad);
        out.hess_prod.push(hess);
    }
    out
}

/// Margins of the barrier arithmetic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LemmaAMargins {
    pub c: f64,
    pub d: f64,
    /// `c^2 - ((12 + 4n) c + 2)`
    pub margin_c: f64,
    /// `d^2 - (2(1 + theta)^2 + d)`
    pub margin_d: f64,
}

impl LemmaAMargins {
    pub fn closes(&self) -> bool {
        self.margin_c > 0.0 && self.margin_d > 0.0
    }
}

pub fn lemma_a_margins(n: usize, theta1: f64) -> LemmaAMargins {
    let nf = n as f64;
    let c = 14.0 + 4.0 * nf;
    let d = 2.0 * (1.0 + theta1);
    LemmaAMargins {
        c,
        d,
        margin_c: c * c - ((12.0 + 4.0 * nf) * c + 2.0),
        margin_d: d * d - (2.0 * (1.0 + theta1).powi(2) + d),
    }
}

/// Constants of the barrier argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams {
    pub theta1: f64,
    /// Cutoff constant `A`.
    pub a: f64,
    pub c: f64,
    pub d: f64,
    /// Fixed `B`; `None` derives it from `C1`.
    pub b_const: Option<f64>,
}

impl BarrierParams {
    pub fn new(n: usize, theta1: f64, a: f64, b_const: Option<f64>) -> Self {
        let m = lemma_a_margins(n, theta1);
        Self { theta1, a, c: m.c, d: m.d, b_const }
    }
}

/// Barrier comparison `F < H` on the cutoff support.
#[derive(Debug, Clone, PartialEq)]
pub struct ShilReport {
    pub horizon: f64,
    /// Snapshots evaluated (positive times within the horizon).
    pub snapshots_used: usize,
    pub c1: f64,
    pub c2: f64,
    pub b: f64,
    pub b_f: f64,
    /// `max F / H` over the evaluated points.
    pub max_f_over_h: f64,
    /// First `(t, x)` where `F >= H`.
    pub first_crossing: Option<(f64, f64)>,
    /// Smallest `C` with `|nabla Ric|^2 <= C K^2 u` on the evaluated points.
    pub best_fit_c: f64,
}

impl ShilReport {
    pub fn barrier_holds(&self) -> bool {
        self.first_crossing.is_none()
    }
}

/// Per-node derivative terms of `R` at one snapshot.
struct NodeTerms {
    grad_sq: Vec<f64>,
    hess_sq: Vec<f64>,
    lap_grad_sq: Vec<f64>,
    scalar: Vec<f64>,
}

fn node_terms(state: &WarpedState, scalar: &[f64], ws_over_w: &[f64]) -> NodeTerms {
    let h = state.grid().dx();
    let (_, _, rule) = rules(state.topology());
    let der = warp_derivatives(state);
    let psi = state.psi();
    let nf = state.dim() as f64;
    let rx = d1(scalar, h, rule);
    let rxx = d2(scalar, h, rule);
    let mut grad_sq = Vec::with_capacity(scalar.len());
    let mut hess_sq = Vec::with_capacity(scalar.len());
    for i in 0..scalar.len() {
        let rs = rx[i] / psi[i];
        let rss = (rxx[i] - rx[i] * der.psi_x[i] / psi[i]) / (psi[i] * psi[i]);
        let tangential = ws_over_w[i] * rs;
        grad_sq.push(rs * rs);
        hess_sq.push(rss * rss + (nf - 1.0) * tangential * tangential);
    }
    let lap_grad_sq = radial_laplacian_values(state, &der, &grad_sq, rule);
    NodeTerms { grad_sq, hess_sq, lap_grad_sq, scalar: scalar.to_vec() }
}

/// Evaluate the barrier quantities on snapshots with `0 < t <= theta1/K`.
///
/// `C1` and `C2` are the smallest constants for which the differential
/// inequalities of `|nabla R|^2` and `S` hold on the recorded data, floored
/// at one and zero.
pub fn shil_quantities(history: &FlowHistory, cutoff: &Cutoff, params: &BarrierParams) -> Result<ShilReport> {
    let k = history.k_bar();
    let horizon = params.theta1 / k;
    let snaps = history.snapshots();
    let inside: Vec<usize> = (0..snaps.len())
        .filter(|&j| snaps[j].state.time() > 0.0 && snaps[j].state.time() <= horizon)
        .collect();
    if inside.is_empty() {
        return Err(Error::HorizonExceeded { horizon });
    }
    let nf = history.dim() as f64;
    let r = cutoff.r;
    let chi = cutoff.chi.values();
    let terms: Vec<NodeTerms> =
        snaps.iter().map(|s| node_terms(&s.state, &s.sample.scalar, &s.sample.ws_over_w)).collect();
    let u_at = |t: f64| 1.0 / (r * r) + 1.0 / t + k;
    let dt_weights = |j: usize| {
        let t = snaps[j].state.time();
        let h0 = t - snaps[j - 1].state.time();
        let h1 = snaps[j + 1].state.time() - t;
        (-h1 / (h0 * (h0 + h1)), (h1 - h0) / (h0 * h1), h0 / (h1 * (h0 + h1)))
    };
    let interior: Vec<usize> = inside.iter().copied().filter(|&j| j + 1 < snaps.len()).collect();

    let mut c1: f64 = 0.0;
    for &j in &interior {
        let (a, b, c) = dt_weights(j);
        let t = snaps[j].state.time();
        let u = u_at(t);
        let tm = &terms[j];
        for i in 0..chi.len() {
            if chi[i] <= 0.0 {
                continue;
            }
            let dt = a * terms[j - 1].grad_sq[i] + b * tm.grad_sq[i] + c * terms[j + 1].grad_sq[i];
            let lhs = dt - tm.lap_grad_sq[i] + 2.0 * tm.hess_sq[i];
            c1 = c1.max(lhs / (k * tm.grad_sq[i] + k * k * k * u));
        }
    }
    let c1 = c1.max(1.0);
    let b = params.b_const.unwrap_or_else(|| 1.01 * (nf * nf + 4.0 * nf / c1).max(32.0 * nf * nf));

    let s_of = |tm: &NodeTerms, i: usize| (b * k * k + tm.scalar[i] * tm.scalar[i]) * tm.grad_sq[i];
    let mut c2: f64 = 0.0;
    for &j in &interior {
        let (a, bw, c) = dt_weights(j);
        let state = &snaps[j].state;
        let der = warp_derivatives(state);
        let (_, _, rule) = rules(state.topology());
        let tm = &terms[j];
        let s_now: Vec<f64> = (0..chi.len()).map(|i| s_of(tm, i)).collect();
        let lap_s = radial_laplacian_values(state, &der, &s_now, rule);
        let u = u_at(state.time());
        for i in 0..chi.len() {
            if chi[i] <= 0.0 {
                continue;
            }
            let dt = a * s_of(&terms[j - 1], i) + bw * s_now[i] + c * s_of(&terms[j + 1], i);
            let lhs = dt - lap_s[i] + tm.grad_sq[i] * tm.grad_sq[i];
            c2 = c2.max(lhs / (b * b * k.powi(5) * u));
        }
    }
    let b_f = if c2 > 0.0 { (0.25 / (b * b)).min(1.0 / (c2 * b * b)) } else { 0.25 / (b * b) };

    let mut report = ShilReport {
        horizon,
        snapshots_used: inside.len(),
        c1,
        c2,
        b,
        b_f,
        max_f_over_h: 0.0,
        first_crossing: None,
        best_fit_c: 0.0,
    };
    for &j in &inside {
        let snap = &snaps[j];
        let t = snap.state.time();
        let u = u_at(t);
        let tm = &terms[j];
        for i in 0..chi.len() {
            if chi[i] <= 0.0 {
                continue;
            }
            let f = b_f * s_of(tm, i) / k.powi(4);
            let h = params.c * params.a * params.a / (chi[i] * chi[i]) + params.d / t + k;
            report.max_f_over_h = report.max_f_over_h.max(f / h);
            if f >= h && report.first_crossing.is_none() {
                report.first_crossing = Some((t, snap.state.grid().x(i)));
            }
            let q = snap.sample.nabla_ric_full[i];
            report.best_fit_c = report.best_fit_c.max(q / (k * k * u));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_a_examples() {
        let m = lemma_a_margins(3, 0.5);
        assert_eq!((m.c, m.margin_c, m.d, m.margin_d), (26.0, 50.0, 3.0, 1.5));
        assert_eq!(lemma_a_margins(2, 0.5).margin_c, 42.0);
        for k in 1..10 {
            let theta = k as f64 / 10.0;
            let m = lemma_a_margins(4, theta);
            assert!((m.margin_d - 2.0 * (1.0 + theta) * theta).abs() < 1e-12);
        }
    }
}
