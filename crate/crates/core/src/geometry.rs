//! Pointwise curvature of `g = ds^2 + w(s)^2 g_{S^{n-1}}` on the grid.
//!
//! Derivatives in arc length come from second-order stencils in `x`
//! via `d/ds = psi^{-1} d/dx`. Poles use odd continuation of `w` and even
//! continuation of `psi` and of every curvature scalar; the ends of a neck
//! use one-sided stencils.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::RadialField;
use crate::state::{Topology, WarpedState};
use crate::stencil::{d1, d2, EndRule};

/// Largest tolerated deviation of `|w_s|` from one at a pole.
pub const POLE_TOLERANCE: f64 = 0.05;

/// Curvature floor of the injectivity-radius surrogate.
pub const CURVATURE_FLOOR: f64 = 1e-12;

/// All pointwise curvature scalars of a state, one entry per node.
///
/// At poles the spherical curvature is set to its smooth limit `K1 = K0`
/// and the mixed `(w_s/w)^2 (lambda - mu)^2` term of the full norm to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSample {
    pub n: usize,
    /// Radial sectional curvature `-w_ss / w`.
    pub k0: Vec<f64>,
    /// Spherical sectional curvature `(1 - w_s^2) / w^2`.
    pub k1: Vec<f64>,
    /// Radial Ricci eigenvalue `(n-1) K0`.
    pub lambda: Vec<f64>,
    /// Spherical Ricci eigenvalue `K0 + (n-2) K1`.
    pub mu: Vec<f64>,
    /// Scalar curvature.
    pub scalar: Vec<f64>,
    pub d_k0: Vec<f64>,
    pub d_k1: Vec<f64>,
    /// `dR/ds`, differenced from `scalar` directly.
    pub d_scalar: Vec<f64>,
    pub ric_norm: Vec<f64>,
    pub rm_norm: Vec<f64>,
    pub k_max: Vec<f64>,
    /// Squared norm of the full covariant derivative of Ric.
    pub nabla_ric_full: Vec<f64>,
    /// Squared norm from the two-component expression
    /// `(n-1)^2 K0'^2 + (K0' + (n-2) K1')^2`.
    pub nabla_ric_paper: Vec<f64>,
    /// `|grad R|^2`.
    pub nabla_r_sq: Vec<f64>,
    /// `w_s / w`, zero at poles.
    pub ws_over_w: Vec<f64>,
}

impl CurvatureSample {
    pub fn len(&self) -> usize {
        self.k0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k0.is_empty()
    }

    pub fn sup_ric(&self) -> f64 {
        sup(&self.ric_norm)
    }

    pub fn sup_rm(&self) -> f64 {
        sup(&self.rm_norm)
    }

    /// `sup |nabla Ric|` (not squared) for the chosen norm.
    pub fn sup_nabla_ric(&self, norm: NablaRicNorm) -> f64 {
        sup(self.nabla_ric_sq(norm)).sqrt()
    }

    pub fn nabla_ric_sq(&self, norm: NablaRicNorm) -> &[f64] {
        match norm {
            NablaRicNorm::Full => &self.nabla_ric_full,
            NablaRicNorm::Paper => &self.nabla_ric_paper,
        }
    }
}

/// Which `|nabla Ric|` expression a consumer reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NablaRicNorm {
    #[default]
    Full,
    Paper,
}

pub(crate) fn sup(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Arc-length derivatives of the warping function.
#[derive(Debug, Clone)]
pub(crate) struct WarpDerivatives {
    pub ws: Vec<f64>,
    pub wss: Vec<f64>,
    pub psi_x: Vec<f64>,
}

pub(crate) fn rules(topology: Topology) -> (EndRule, EndRule, EndRule) {
    // (w, psi, curvature scalars)
    match topology {
        Topology::Sphere => (EndRule::Odd, EndRule::Even, EndRule::Even),
        Topology::Neck => (EndRule::OneSided, EndRule::OneSided, EndRule::OneSided),
    }
}

pub(crate) fn warp_derivatives(state: &WarpedState) -> WarpDerivatives {
    let h = state.grid().dx();
    let (w_rule, psi_rule, _) = rules(state.topology());
    let w = state.w();
    let psi = state.psi();
    let wx = d1(w, h, w_rule);
    let wxx = d2(w, h, w_rule);
    let psi_x = d1(psi, h, psi_rule);
    let ws = wx.iter().zip(psi).map(|(a, p)| a / p).collect();
    let wss = (0..w.len()).map(|i| (wxx[i] - wx[i] * psi_x[i] / psi[i]) / (psi[i] * psi[i])).collect();
    WarpDerivatives { ws, wss, psi_x }
}

pub(crate) fn check_poles(state: &WarpedState, ws: &[f64]) -> Result<()> {
    if state.topology() != Topology::Sphere {
        return Ok(());
    }
    let last = ws.len() - 1;
    for node in [0, last] {
        if (ws[node].abs() - 1.0).abs() > POLE_TOLERANCE {
            return Err(Error::PoleRegularityViolated { node, slope: ws[node].abs() });
        }
    }
    Ok(())
}

/// Sectional curvatures `(K0, K1)` at every node.
///
/// On a sphere `K1` is evaluated through `1 - w_s^2 = int_pole^s K0 d(w^2)`,
/// accumulated from each pole and blended across the middle third. The
/// direct quotient `(1 - w_s^2)/w^2` divides an `O(dx^2)` slope error by
/// `w^2 = O(dx^2)` next to a pole; the integral form keeps the pole limit
/// `K1 -> K0` exactly.
pub(crate) fn sectional_curvatures(state: &WarpedState, der: &WarpDerivatives) -> (Vec<f64>, Vec<f64>) {
    let w = state.w();
    let last = w.len() - 1;
    let mut k0: Vec<f64> =
        w.iter().zip(&der.wss).map(|(wv, wss)| if *wv > 0.0 { -wss / wv } else { 0.0 }).collect();
    match state.topology() {
        Topology::Neck => {
            let k1 = w.iter().zip(&der.ws).map(|(wv, ws)| (1.0 - ws * ws) / (wv * wv)).collect();
            (k0, k1)
        }
        Topology::Sphere => {
            // Even extrapolation a + b x^2 through the two nearest nodes.
            k0[0] = (4.0 * k0[1] - k0[2]) / 3.0;
            k0[last] = (4.0 * k0[last - 1] - k0[last - 2]) / 3.0;
            let sq: Vec<f64> = w.iter().map(|v| v * v).collect();
            let incr: Vec<f64> = (0..last).map(|j| 0.5 * (k0[j] + k0[j + 1]) * (sq[j + 1] - sq[j])).collect();
            let mut from_left = vec![0.0; w.len()];
            for j in 0..last {
                from_left[j + 1] = from_left[j] + incr[j];
            }
            let mut from_right = vec![0.0; w.len()];
            for j in (0..last).rev() {
                from_right[j] = from_right[j + 1] - incr[j];
            }
            let grid = state.grid();
            let mut k1 = vec![0.0; w.len()];
            k1[0] = k0[0];
            k1[last] = k0[last];
            for i in 1..last {
                let theta = seam_weight(grid.x(i));
                let defect = (1.0 - theta) * from_left[i] + theta * from_right[i];
                k1[i] = defect / sq[i];
            }
            (k0, k1)
        }
    }
}

/// Smooth partition weight: 0 on `[0, 1/3]`, 1 on `[2/3, 1]`.
fn seam_weight(x: f64) -> f64 {
    smoothstep5(3.0 * x - 1.0)
}

/// Quintic smoothstep `10u^3 - 15u^4 + 6u^5`, clamped to `[0, 1]`.
pub fn smoothstep5(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

/// First derivative of a curvature scalar with rounding noise removed.
///
/// Curvature comes from second differences, so its rounding error is about
/// `eps / (psi dx)^2` plus `eps N |K|` from the accumulated `K1`. Stencil
/// differences below that level, times `weight`, are read as zero.
fn slope(v: &[f64], h: f64, rule: EndRule, psi: &[f64], k_max: &[f64], weight: f64) -> Vec<f64> {
    let mut out = d1(v, h, rule);
    let last = v.len() - 1;
    for (i, d) in out.iter_mut().enumerate() {
        let (lo, hi) = match rule {
            EndRule::OneSided if i == 0 => (0, 2),
            EndRule::OneSided if i == last => (last - 2, last),
            _ => (i.saturating_sub(1), (i + 1).min(last)),
        };
        let k_scale = k_max[lo..=hi].iter().fold(0.0f64, |m, x| m.max(*x));
        let noise = 1.0 / (h * psi[i]).powi(2) + last as f64 * k_scale;
        let floor = 64.0 * f64::EPSILON * weight * noise;
        let spread = v[lo..=hi].iter().fold(0.0f64, |m, x| m.max((x - v[i]).abs()));
        if spread <= floor {
            *d = 0.0;
        }
    }
    out
}

/// Compute every curvature scalar of `state`.
pub fn curvature_sample(state: &WarpedState) -> Result<CurvatureSample> {
    let der = warp_derivatives(state);
    check_poles(state, &der.ws)?;
    let n = state.dim();
    let nf = n as f64;
    let (k0, k1) = sectional_curvatures(state, &der);
    let len = k0.len();
    let last = len - 1;
    let h = state.grid().dx();
    let psi = state.psi();
    let (_, _, scalar_rule) = rules(state.topology());

    let lambda: Vec<f64> = k0.iter().map(|a| (nf - 1.0) * a).collect();
    let mu: Vec<f64> = k0.iter().zip(&k1).map(|(a, b)| a + (nf - 2.0) * b).collect();
    let scalar: Vec<f64> =
        k0.iter().zip(&k1).map(|(a, b)| 2.0 * (nf - 1.0) * a + (nf - 1.0) * (nf - 2.0) * b).collect();
    let to_s = |v: Vec<f64>| -> Vec<f64> { v.iter().zip(psi).map(|(a, p)| a / p).collect() };
    let k_max: Vec<f64> = k0.iter().zip(&k1).map(|(a, b)| a.abs().max(b.abs())).collect();
    let d_k0 = to_s(slope(&k0, h, scalar_rule, psi, &k_max, 1.0));
    let d_k1 = to_s(slope(&k1, h, scalar_rule, psi, &k_max, 1.0));
    let d_scalar = to_s(slope(&scalar, h, scalar_rule, psi, &k_max, nf * nf));

    let pole = |i: usize| state.topology() == Topology::Sphere && (i == 0 || i == last);
    let ws_over_w: Vec<f64> =
        (0..len).map(|i| if pole(i) { 0.0 } else { der.ws[i] / state.w()[i] }).collect();

    let mut ric_norm = Vec::with_capacity(len);
    let mut rm_norm = Vec::with_capacity(len);
    let mut nabla_ric_full = Vec::with_capacity(len);
    let mut nabla_ric_paper = Vec::with_capacity(len);
    let mut nabla_r_sq = Vec::with_capacity(len);
    for i in 0..len {
        ric_norm.push((lambda[i] * lambda[i] + (nf - 1.0) * mu[i] * mu[i]).sqrt());
        rm_norm
            .push((4.0 * (nf - 1.0) * k0[i] * k0[i] + 2.0 * (nf - 1.0) * (nf - 2.0) * k1[i] * k1[i]).sqrt());
        let dl = (nf - 1.0) * d_k0[i];
        let dm = d_k0[i] + (nf - 2.0) * d_k1[i];
        let gap_floor = 64.0 * f64::EPSILON * nf * (1.0 / (h * psi[i]).powi(2) + last as f64 * k_max[i]);
        let gap = if (lambda[i] - mu[i]).abs() <= gap_floor { 0.0 } else { lambda[i] - mu[i] };
        let mixed = 2.0 * (nf - 1.0) * ws_over_w[i] * ws_over_w[i] * gap * gap;
        nabla_ric_full.push(dl * dl + (nf - 1.0) * dm * dm + mixed);
        nabla_ric_paper.push((nf - 1.0) * (nf - 1.0) * d_k0[i] * d_k0[i] + dm * dm);
        nabla_r_sq.push(d_scalar[i] * d_scalar[i]);
    }

    Ok(CurvatureSample {
        n,
        k0,
        k1,
        lambda,
        mu,
        scalar,
        d_k0,
        d_k1,
        d_scalar,
        ric_norm,
        rm_norm,
        k_max,
        nabla_ric_full,
        nabla_ric_paper,
        nabla_r_sq,
        ws_over_w,
    })
}

/// Laplacian of a radial function, `f_ss + (n-1)(w_s/w) f_s`, with the
/// pole limit `n f_ss` for even `f`.
pub fn laplacian_radial(state: &WarpedState, f: &RadialField) -> Result<RadialField> {
    let der = warp_derivatives(state);
    let w = state.w();
    let last = w.len() - 1;
    let is_sphere = state.topology() == Topology::Sphere;
    let interior = if is_sphere { &w[1..last] } else { w };
    if let Some(i) = interior.iter().position(|v| !(*v > 0.0)) {
        let node = if is_sphere { i + 1 } else { i };
        return Err(Error::NonPositiveWarping { node, value: w[node] });
    }
    let (_, _, rule) = rules(state.topology());
    let values = radial_laplacian_values(state, &der, f.values(), rule);
    RadialField::new(state.grid(), values)
}

pub(crate) fn radial_laplacian_values(
    state: &WarpedState,
    der: &WarpDerivatives,
    f: &[f64],
    rule: EndRule,
) -> Vec<f64> {
    let h = state.grid().dx();
    let psi = state.psi();
    let w = state.w();
    let nf = state.dim() as f64;
    let last = f.len() - 1;
    let fx = d1(f, h, rule);
    let fxx = d2(f, h, rule);
    (0..f.len())
        .map(|i| {
            let fs = fx[i] / psi[i];
            let fss = (fxx[i] - fx[i] * der.psi_x[i] / psi[i]) / (psi[i] * psi[i]);
            let pole = state.topology() == Topology::Sphere && (i == 0 || i == last);
            if pole {
                nf * fss
            } else {
                fss + (nf - 1.0) * der.ws[i] / w[i] * fs
            }
        })
        .collect()
}

/// Radial geodesic distance `int psi dx` between two grid coordinates,
/// with `psi` interpolated linearly between nodes.
pub fn distance(state: &WarpedState, x_a: f64, x_b: f64) -> f64 {
    let (lo, hi) = if x_a <= x_b { (x_a, x_b) } else { (x_b, x_a) };
    let lo = lo.clamp(0.0, 1.0);
    let hi = hi.clamp(0.0, 1.0);
    if hi <= lo {
        return 0.0;
    }
    let grid = state.grid();
    let psi = state.psi();
    let cells = grid.cells();
    let dx = grid.dx();
    let psi_at = |x: f64| {
        let pos = (x * cells as f64).min(cells as f64);
        let j = (pos.floor() as usize).min(cells - 1);
        let frac = pos - j as f64;
        psi[j] * (1.0 - frac) + psi[j + 1] * frac
    };
    let first = ((lo * cells as f64).floor() as usize).min(cells - 1);
    let mut total = 0.0;
    let mut j = first;
    while j < cells {
        let a = grid.x(j).max(lo);
        let b = (grid.x(j) + dx).min(hi);
        if b > a {
            total += 0.5 * (psi_at(a) + psi_at(b)) * (b - a);
        }
        if grid.x(j + 1) >= hi {
            break;
        }
        j += 1;
    }
    total
}

/// Interior nodes where the discrete slope of `w` changes sign or vanishes:
/// equators, necks and cylindrical plateaus.
pub fn critical_nodes(w: &[f64]) -> impl Iterator<Item = usize> + '_ {
    (1..w.len().saturating_sub(1)).filter(move |&i| (w[i + 1] - w[i]) * (w[i] - w[i - 1]) <= 0.0)
}

/// Smallest warping radius over critical nodes, if any.
pub fn critical_radius(w: &[f64]) -> Option<f64> {
    critical_nodes(w).map(|i| w[i]).reduce(f64::min)
}

/// Lower-bound surrogate for the injectivity radius.
///
/// Klingenberg's estimate: the minimum of the conjugate radius bound
/// `pi / sqrt(max K_sec)` and half the length of the shortest equatorial
/// circle, capped at the diameter of the domain. This is not the exact
/// injectivity radius.
pub fn inj_lower_bound(state: &WarpedState, sample: &CurvatureSample) -> Result<f64> {
    let w = state.w();
    let last = w.len() - 1;
    let interior = match state.topology() {
        Topology::Sphere => 1..last,
        Topology::Neck => 0..last + 1,
    };
    for i in interior {
        if !(w[i] > 0.0) {
            return Err(Error::NonPositiveWarping { node: i, value: w[i] });
        }
    }
    let k_plus = sample.k0.iter().zip(&sample.k1).map(|(a, b)| a.max(*b).max(0.0)).fold(0.0, f64::max);
    let conjugate = PI / k_plus.max(CURVATURE_FLOOR).sqrt();
    let equator = critical_radius(w).map_or(f64::INFINITY, |r| PI * r);
    Ok(conjugate.min(equator).min(state.length()))
}
