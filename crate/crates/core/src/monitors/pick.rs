//! Point picking on a space-time field `Q = |nabla Ric|`.
//!
//! From a point where `Q` beats `alpha (K T / t)^{3/2}`, repeatedly jump to
//! the largest value exceeding `8 Q_k` in the backward window
//! `[t_k - beta Q_k^{-2/3}, t_k]` (restricted to the ball of radius
//! `beta^{1/2} Q_k^{-1/3}` in local mode) until no such value exists.

use rand::Rng;

use crate::config::{PickMode, ScenarioConfig};
use crate::error::{Error, Result};
use crate::flow::FlowHistory;
use crate::geometry::NablaRicNorm;

/// Space-time samples of `Q` with the radial gauge needed for distances.
#[derive(Debug, Clone, PartialEq)]
pub struct QField {
    pub times: Vec<f64>,
    /// `q[snapshot][node]`
    pub q: Vec<Vec<f64>>,
    /// `psi[snapshot][node]`, arc length per unit grid coordinate.
    pub psi: Vec<Vec<f64>>,
    pub dx: f64,
    pub k_bar: f64,
    pub t_total: f64,
}

impl QField {
    pub fn from_history(history: &FlowHistory, norm: NablaRicNorm) -> Self {
        let snaps = history.snapshots();
        Self {
            times: history.times(),
            q: snaps
                .iter()
                .map(|s| s.sample.nabla_ric_sq(norm).iter().map(|v| v.max(0.0).sqrt()).collect())
                .collect(),
            psi: snaps.iter().map(|s| s.state.psi().to_vec()).collect(),
            dx: snaps[0].state.grid().dx(),
            k_bar: history.k_bar(),
            t_total: history.t_end(),
        }
    }

    pub fn snapshots(&self) -> usize {
        self.times.len()
    }

    pub fn nodes(&self) -> usize {
        self.q.first().map_or(0, Vec::len)
    }

    /// `alpha (K T / t)^{3/2}`, infinite at `t = 0`.
    pub fn threshold(&self, alpha: f64, t: f64) -> f64 {
        if t > 0.0 {
            alpha * (self.k_bar * self.t_total / t).powf(1.5)
        } else {
            f64::INFINITY
        }
    }

    /// Cumulative arc length of every node at snapshot `j`.
    fn arc(&self, j: usize) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.nodes());
        let mut acc = 0.0;
        s.push(0.0);
        for pair in self.psi[j].windows(2) {
            acc += 0.5 * (pair[0] + pair[1]) * self.dx;
            s.push(acc);
        }
        s
    }

    /// Arc length of grid coordinate `x` at snapshot `j`.
    fn arc_at(&self, arc: &[f64], j: usize, x: f64) -> f64 {
        let cells = self.nodes() - 1;
        let pos = (x / self.dx).clamp(0.0, cells as f64);
        let i = (pos.floor() as usize).min(cells - 1);
        let frac = pos - i as f64;
        let p = &self.psi[j];
        let p_x = p[i] + frac * (p[i + 1] - p[i]);
        arc[i] + 0.5 * (p[i] + p_x) * frac * self.dx
    }

    /// Random field for testing: smooth background, a few bumps and
    /// occasional spikes, with a random positive gauge.
    pub fn synthetic<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::synthetic_with(rng, SyntheticShape::default())
    }

    /// `synthetic` with control over resolution and domain length.
    pub fn synthetic_with<R: Rng + ?Sized>(rng: &mut R, shape: SyntheticShape) -> Self {
        let snaps = rng.gen_range(12..40);
        let nodes = rng.gen_range(shape.nodes.0..shape.nodes.1);
        let mut times = Vec::with_capacity(snaps);
        let mut t = 0.0f64;
        times.push(t);
        for _ in 1..snaps {
            t += rng.gen_range(0.2..1.0);
            times.push(t);
        }
        let t_total = t;
        let k_bar = rng.gen_range(1.0..4.0) / t_total * 4.0;
        let dx = 1.0 / (nodes - 1) as f64;
        // The gauge below shrinks by half and dips by 30%, so the shortest
        // slice is at least 0.35 of `length`.
        let length = match shape.min_length_sqrt_t {
            Some(m) => rng.gen_range(1.0..1.3) * m * t_total.sqrt() / 0.35,
            None => rng.gen_range(2.0..20.0),
        };
        let bumps: Vec<(f64, f64, f64, f64)> = (0..rng.gen_range(1..5))
            .map(|_| {
                (
                    rng.gen_range(0.0..1.0),
                    rng.gen_range(0.2..1.0) * t_total,
                    rng.gen_range(0.02..0.3),
                    rng.gen_range(0.5..6.0),
                )
            })
            .collect();
        let base = rng.gen_range(0.2..3.0) * (k_bar * t_total).powf(1.5) / t_total.powf(1.5);
        let q = times
            .iter()
            .map(|&tj| {
                (0..nodes)
                    .map(|i| {
                        let x = i as f64 * dx;
                        let mut v = 1.0 + 0.3 * (6.0 * x + tj).sin();
                        for &(bx, bt, bw, amp) in &bumps {
                            let r2 = ((x - bx) / bw).powi(2) + ((tj - bt) / (0.2 * t_total)).powi(2);
                            v += amp * (-r2).exp();
                        }
                        if rng.gen_bool(0.02) {
                            v *= rng.gen_range(5.0..40.0);
                        }
                        base * v * (1.0 + tj / t_total).powi(2)
                    })
                    .collect()
            })
            .collect();
        let psi = times
            .iter()
            .map(|&tj| {
                let shrink = 1.0 - 0.5 * tj / t_total;
                (0..nodes)
                    .map(|i| {
                        let x = i as f64 * dx;
                        length * shrink * (1.0 + 0.3 * (3.0 * x).sin())
                    })
                    .collect()
            })
            .collect();
        Self { times, q, psi, dx, k_bar, t_total }
    }
}

/// Size parameters of [`QField::synthetic_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticShape {
    /// Node count range, half-open.
    pub nodes: (usize, usize),
    /// Lower bound for the length of every slice in units of `sqrt T`;
    /// `None` draws lengths in `[2, 20)`.
    pub min_length_sqrt_t: Option<f64>,
}

impl Default for SyntheticShape {
    fn default() -> Self {
        Self { nodes: (17, 66), min_length_sqrt_t: None }
    }
}

impl SyntheticShape {
    /// Fine grid on a domain long enough that the `4 sqrt T` ball about
    /// the middle stays inside it.
    pub fn local() -> Self {
        Self { nodes: (1500, 3000), min_length_sqrt_t: Some(9.0) }
    }
}

/// Point-picking constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PickParams {
    pub alpha: f64,
    pub eta: f64,
    pub mode: PickMode,
    pub epsilon: f64,
    /// Grid coordinate of the ball centre in local mode.
    pub x0: f64,
    /// Optional `(snapshot, node)` to start from.
    pub start: Option<(usize, usize)>,
}

impl PickParams {
    pub fn from_config(cfg: &ScenarioConfig) -> Self {
        Self {
            alpha: cfg.pick_alpha,
            eta: cfg.eta,
            mode: cfg.pick_mode,
            epsilon: cfg.pick_epsilon,
            x0: cfg.pick_x0,
            start: None,
        }
    }

    /// `1/2 alpha^{2/3} eta`, times `epsilon^2` in local mode.
    pub fn beta(&self) -> f64 {
        let base = 0.5 * self.alpha.powf(2.0 / 3.0) * self.eta;
        match self.mode {
            PickMode::Global => base,
            PickMode::Local => self.epsilon * self.epsilon * base,
        }
    }
}

/// Selected point and the region that was checked around it.
#[derive(Debug, Clone, PartialEq)]
pub struct PickResult {
    /// `(snapshot, node)`
    pub point: (usize, usize),
    pub q_bar: f64,
    pub t_bar: f64,
    pub x_bar: f64,
    /// Backward time window `[t_bar - beta Q^{-2/3}, t_bar]`.
    pub window: (f64, f64),
    /// Ball radius `beta^{1/2} Q^{-1/3}` in local mode.
    pub radius: Option<f64>,
    pub iterations: usize,
    /// `Q_k` along the escalation.
    pub trace: Vec<f64>,
    pub threshold_ok: bool,
    pub dominated_ok: bool,
    pub containment_ok: bool,
}

/// Nodes of snapshot `j` within arc distance `radius` of coordinate `x`.
fn ball(field: &QField, j: usize, x: f64, radius: f64) -> Vec<usize> {
    let arc = field.arc(j);
    let s = field.arc_at(&arc, j, x);
    (0..field.nodes()).filter(|&i| (arc[i] - s).abs() <= radius).collect()
}

fn region(field: &QField, mode: PickMode, beta: f64, j: usize, i: usize, q: f64) -> Vec<(usize, usize)> {
    let t = field.times[j];
    let lower = t - beta * q.powf(-2.0 / 3.0);
    let x = i as f64 * field.dx;
    let radius = beta.sqrt() * q.powf(-1.0 / 3.0);
    let mut out = Vec::new();
    for (jj, &tj) in field.times.iter().enumerate() {
        if tj < lower || tj > t {
            continue;
        }
        match mode {
            PickMode::Global => out.extend((0..field.nodes()).map(|ii| (jj, ii))),
            PickMode::Local => out.extend(ball(field, jj, x, radius).into_iter().map(|ii| (jj, ii))),
        }
    }
    out
}

/// Escalate from the starting point until the backward region is dominated.
pub fn pick_point(field: &QField, params: &PickParams) -> Result<PickResult> {
    let beta = params.beta();
    let local = params.mode == PickMode::Local;
    let sqrt_t = field.t_total.sqrt();
    let start = match params.start {
        Some((j, i)) => {
            let ok = j < field.snapshots()
                && i < field.nodes()
                && field.q[j][i] > field.threshold(params.alpha, field.times[j]);
            if !ok {
                return Err(Error::NoViolation);
            }
            (j, i)
        }
        None => {
            let mut best: Option<((usize, usize), f64)> = None;
            for j in 0..field.snapshots() {
                let thr = field.threshold(params.alpha, field.times[j]);
                if !thr.is_finite() {
                    continue;
                }
                let near: Vec<usize> = if local {
                    let arc = field.arc(j);
                    let c = field.arc_at(&arc, j, params.x0);
                    (0..field.nodes()).filter(|&i| (arc[i] - c).abs() < 2.0 * sqrt_t).collect()
                } else {
                    (0..field.nodes()).collect()
                };
                for i in near {
                    let ratio = field.q[j][i] / thr;
                    if ratio > 1.0 && best.is_none_or(|(_, r)| ratio > r) {
                        best = Some(((j, i), ratio));
                    }
                }
            }
            best.ok_or(Error::NoViolation)?.0
        }
    };

    let (mut j, mut i) = start;
    let mut trace = vec![field.q[j][i]];
    loop {
        let q = field.q[j][i];
        let mut next: Option<((usize, usize), f64)> = None;
        for (jj, ii) in region(field, params.mode, beta, j, i, q) {
            let v = field.q[jj][ii];
            if v > 8.0 * q && next.is_none_or(|(_, b)| v > b) {
                next = Some(((jj, ii), v));
            }
        }
        match next {
            Some(((jj, ii), v)) => {
                j = jj;
                i = ii;
                trace.push(v);
            }
            None => break,
        }
    }

    let q_bar = field.q[j][i];
    let t_bar = field.times[j];
    let x_bar = i as f64 * field.dx;
    let lower = t_bar - beta * q_bar.powf(-2.0 / 3.0);
    let radius = local.then(|| beta.sqrt() * q_bar.powf(-1.0 / 3.0));
    let cells = region(field, params.mode, beta, j, i, q_bar);
    let dominated_ok = cells.iter().all(|&(jj, ii)| field.q[jj][ii] <= 8.0 * q_bar);
    let mut containment_ok = lower > 0.0;
    if let Some(rad) = radius {
        for (jj, &tj) in field.times.iter().enumerate() {
            if tj < lower || tj > t_bar {
                continue;
            }
            let arc = field.arc(jj);
            let s = field.arc_at(&arc, jj, x_bar);
            let c = field.arc_at(&arc, jj, params.x0);
            let length = *arc.last().expect("field has nodes");
            let inside = s - rad >= 0.0 && s + rad <= length;
            let near = (s - c).abs() + rad <= 4.0 * sqrt_t;
            containment_ok &= inside && near;
        }
    }
    Ok(PickResult {
        point: (j, i),
        q_bar,
        t_bar,
        x_bar,
        window: (lower, t_bar),
        radius,
        iterations: trace.len() - 1,
        trace,
        threshold_ok: q_bar > field.threshold(params.alpha, t_bar),
        dominated_ok,
        containment_ok,
    })
}

/// Independent re-check of the three pick conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PickVerification {
    pub threshold_ok: bool,
    pub dominated_ok: bool,
    pub containment_ok: bool,
}

impl PickVerification {
    pub fn all(&self) -> bool {
        self.threshold_ok && self.dominated_ok && self.containment_ok
    }
}

/// Brute-force verification: rebuilds windows and distances from scratch
/// with explicit trapezoid sums between coordinates.
pub fn verify_pick(field: &QField, result: &PickResult, params: &PickParams) -> PickVerification {
    let (j0, i0) = result.point;
    let n_nodes = field.q[0].len();
    if j0 >= field.times.len() || i0 >= n_nodes {
        return PickVerification { threshold_ok: false, dominated_ok: false, containment_ok: false };
    }
    let scale = 0.5 * params.alpha.powf(2.0 / 3.0) * params.eta;
    let beta = if params.mode == PickMode::Local { params.epsilon.powi(2) * scale } else { scale };
    let q_bar = result.q_bar;
    let t_bar = field.times[j0];
    let x_bar = i0 as f64 / (n_nodes - 1) as f64;

    let thr = if t_bar > 0.0 {
        params.alpha * (field.k_bar * field.t_total / t_bar).powf(1.5)
    } else {
        f64::INFINITY
    };
    let threshold_ok = q_bar > thr;

    // Distance from coordinate xa to xb at snapshot j: trapezoids of the
    // piecewise-linear gauge over each cell the segment touches.
    let cells = n_nodes - 1;
    let dist = |j: usize, xa: f64, xb: f64| -> f64 {
        let (lo, hi) = if xa <= xb { (xa, xb) } else { (xb, xa) };
        let psi = &field.psi[j];
        let first = ((lo * cells as f64).floor() as usize).min(cells - 1);
        let last = ((hi * cells as f64).ceil() as usize).clamp(first + 1, cells);
        let mut total = 0.0;
        for k in first..last {
            let x_k = k as f64 / cells as f64;
            let x_k1 = (k + 1) as f64 / cells as f64;
            let a = lo.max(x_k);
            let b = hi.min(x_k1);
            if b <= a {
                continue;
            }
            let at = |x: f64| {
                let f = (x - x_k) * cells as f64;
                psi[k] * (1.0 - f) + psi[k + 1] * f
            };
            total += 0.5 * (at(a) + at(b)) * (b - a);
        }
        total
    };

    let lower = t_bar - beta * q_bar.powf(-2.0 / 3.0);
    let radius = beta.sqrt() * q_bar.powf(-1.0 / 3.0);
    let tol = 1e-12;
    // The reported value must be the field value at the reported point.
    let mut dominated_ok = q_bar == field.q[j0][i0];
    let mut containment_ok = lower > 0.0;
    for j in 0..field.times.len() {
        let tj = field.times[j];
        if !(tj >= lower && tj <= t_bar) {
            continue;
        }
        // Only nodes above 8 Q can break dominance, so test that first.
        for i in (0..n_nodes).filter(|&i| field.q[j][i] > 8.0 * q_bar) {
            let xi = i as f64 / (n_nodes - 1) as f64;
            let in_region = match params.mode {
                PickMode::Global => true,
                PickMode::Local => dist(j, xi, x_bar) <= radius * (1.0 + tol),
            };
            if in_region {
                dominated_ok = false;
            }
        }
        if params.mode == PickMode::Local {
            let to_left = dist(j, 0.0, x_bar);
            let to_right = dist(j, x_bar, 1.0);
            let to_center = dist(j, params.x0, x_bar);
            if radius > to_left * (1.0 + tol) || radius > to_right * (1.0 + tol) {
                containment_ok = false;
            }
            if to_center + radius > 4.0 * field.t_total.sqrt() * (1.0 + tol) {
                containment_ok = false;
            }
        }
    }
    PickVerification { threshold_ok, dominated_ok, containment_ok }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_field(q: f64) -> QField {
        QField {
            times: (0..10).map(|k| k as f64 * 0.1).collect(),
            q: vec![vec![q; 21]; 10],
            psi: vec![vec![1.0; 21]; 10],
            dx: 0.05,
            k_bar: 1.0,
            t_total: 0.9,
        }
    }

    fn global() -> PickParams {
        PickParams { alpha: 1.0, eta: 1.0, mode: PickMode::Global, epsilon: 0.5, x0: 0.5, start: None }
    }

    #[test]
    fn constant_field_picks_the_start() {
        let field = flat_field(50.0);
        let r = pick_point(&field, &global()).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.point.0, 9);
        assert!(verify_pick(&field, &r, &global()).all());
    }

    #[test]
    fn spike_is_found_in_one_step() {
        let mut field = flat_field(5.0);
        field.q[8][4] = 50.0;
        let params = PickParams { start: Some((9, 10)), ..global() };
        let r = pick_point(&field, &params).unwrap();
        assert_eq!((r.point, r.iterations), ((8, 4), 1));
        assert!(verify_pick(&field, &r, &params).all());
    }

    #[test]
    fn quiet_field_has_no_violation() {
        assert!(matches!(pick_point(&flat_field(0.1), &global()), Err(Error::NoViolation)));
    }

    #[test]
    fn halved_value_is_caught() {
        let mut field = flat_field(50.0);
        field.q[9][3] = 300.0;
        let r = pick_point(&field, &global()).unwrap();
        let mut bad = r.clone();
        bad.q_bar *= 0.5;
        assert!(!verify_pick(&field, &bad, &global()).dominated_ok);
    }
}
