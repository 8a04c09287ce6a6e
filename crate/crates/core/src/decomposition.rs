//! Orthogonal splitting `nabla Ric = E + F` and the rotationally symmetric
//! Bianchi inequality.
//!
//! `E_ijk = a (g_ij d_kR + g_ik d_jR) + b g_jk d_iR` with
//! `a = (n-2)/(2n^2+2n-4)` and `b = 1/2 - a(n+1)` carries all traces of
//! `nabla Ric`; the remainder `F` is totally trace-free.

use rand::Rng;

use crate::coords::{curvature_at_origin, inner3, invert, tensor3_norm_sq};
use crate::error::{Error, Result};
use crate::geometry::CurvatureSample;
use crate::grid::Grid;
use crate::jet::{Jet, JetSpace};
use crate::state::{Topology, WarpedState};

/// Relative trace defect above which an instance is rejected.
pub const BIANCHI_TOLERANCE: f64 = 1e-8;

/// Splitting constants for dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionConstants {
    pub n: usize,
    pub a: f64,
    pub b_dec: f64,
    /// `a + b`, the factor in `|E|^2 = (a+b)|nabla R|^2`.
    pub norm_factor: f64,
}

pub fn decomposition_constants(n: usize) -> Result<DecompositionConstants> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { n, min: 2 });
    }
    let nf = n as f64;
    let a = (nf - 2.0) / (2.0 * nf * nf + 2.0 * nf - 4.0);
    // Equal to 1/2 - a(n+1), written as a single rounded division.
    let b_dec = nf / (nf * nf + nf - 2.0);
    Ok(DecompositionConstants { n, a, b_dec, norm_factor: a + b_dec })
}

pub type Tensor3 = Vec<Vec<Vec<f64>>>;

/// A candidate `nabla_i R_jk` and `d_i R` at one point with metric `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTensorInstance {
    pub n: usize,
    pub g: Vec<Vec<f64>>,
    pub t: Tensor3,
    pub d_r: Vec<f64>,
}

impl PointTensorInstance {
    pub fn new(g: Vec<Vec<f64>>, t: Tensor3, d_r: Vec<f64>) -> Result<Self> {
        let n = g.len();
        let square = g.iter().all(|r| r.len() == n);
        let cube = t.len() == n && t.iter().all(|m| m.len() == n && m.iter().all(|r| r.len() == n));
        if !square || !cube || d_r.len() != n {
            return Err(Error::InvalidGrid(format!("tensor shapes do not match dimension {n}")));
        }
        if n < 2 {
            return Err(Error::DimensionTooSmall { n, min: 2 });
        }
        Ok(Self { n, g, t, d_r })
    }

    /// `|T|_g`.
    pub fn norm(&self) -> f64 {
        tensor3_norm_sq(&invert(&self.g), &self.t).max(0.0).sqrt()
    }

    /// Largest violation of `g^{jk}T_ijk = d_iR` and `2 g^{ij}T_ijk = d_kR`,
    /// measured in the metric norm.
    pub fn bianchi_defect(&self) -> f64 {
        let ginv = invert(&self.g);
        let (tr_jk, tr_ij, _) = traces(&ginv, &self.t);
        let n = self.n;
        let first: Vec<f64> = (0..n).map(|i| tr_jk[i] - self.d_r[i]).collect();
        let second: Vec<f64> = (0..n).map(|k| 2.0 * tr_ij[k] - self.d_r[k]).collect();
        covector_norm(&ginv, &first).max(covector_norm(&ginv, &second))
    }
}

fn covector_norm(ginv: &[Vec<f64>], v: &[f64]) -> f64 {
    let n = v.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += ginv[i][j] * v[i] * v[j];
        }
    }
    acc.max(0.0).sqrt()
}

/// The three traces `(g^{jk}X_ijk, g^{ij}X_ijk, g^{ik}X_ijk)`, indexed by
/// the remaining slot.
fn traces(ginv: &[Vec<f64>], x: &Tensor3) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = ginv.len();
    let mut jk = vec![0.0; n];
    let mut ij = vec![0.0; n];
    let mut ik = vec![0.0; n];
    for p in 0..n {
        for q in 0..n {
            let h = ginv[p][q];
            for r in 0..n {
                jk[r] += h * x[r][p][q];
                ij[r] += h * x[p][q][r];
                ik[r] += h * x[p][r][q];
            }
        }
    }
    (jk, ij, ik)
}

/// Result of splitting one instance, with the identities it should satisfy.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub e: Tensor3,
    pub f: Tensor3,
    pub t_norm_sq: f64,
    pub e_norm_sq: f64,
    pub f_norm_sq: f64,
    pub d_r_norm_sq: f64,
    /// Largest trace of `F`, relative to `|T|`.
    pub trace_defect: f64,
    /// `<E, F>_g / |T|^2`.
    pub inner_defect: f64,
    /// `(|T|^2 - |E|^2 - |F|^2) / |T|^2`.
    pub pythagoras_defect: f64,
    /// `(|E|^2 - (a+b)|nabla R|^2) / |T|^2`.
    pub norm_defect: f64,
}

impl Decomposition {
    /// Largest of the four relative defects.
    pub fn worst_defect(&self) -> f64 {
        self.trace_defect
            .abs()
            .max(self.inner_defect.abs())
            .max(self.pythagoras_defect.abs())
            .max(self.norm_defect.abs())
    }
}

/// Split `T` into its trace part `E` and trace-free part `F`.
pub fn decompose(inst: &PointTensorInstance) -> Result<Decomposition> {
    let n = inst.n;
    let consts = decomposition_constants(n)?;
    let ginv = invert(&inst.g);
    let t_norm_sq = tensor3_norm_sq(&ginv, &inst.t);
    let t_norm = t_norm_sq.max(0.0).sqrt();
    let defect = inst.bianchi_defect();
    if defect > BIANCHI_TOLERANCE * t_norm.max(f64::MIN_POSITIVE) && defect > 0.0 {
        return Err(Error::BianchiViolation { defect });
    }
    let g = &inst.g;
    let dr = &inst.d_r;
    let (a, b) = (consts.a, consts.b_dec);
    let mut e = vec![vec![vec![0.0; n]; n]; n];
    let mut f = vec![vec![vec![0.0; n]; n]; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = a * (g[i][j] * dr[k] + g[i][k] * dr[j]) + b * g[j][k] * dr[i];
                e[i][j][k] = v;
                f[i][j][k] = inst.t[i][j][k] - v;
            }
        }
    }
    let e_norm_sq = tensor3_norm_sq(&ginv, &e);
    let f_norm_sq = tensor3_norm_sq(&ginv, &f);
    let d_r_norm_sq = covector_norm(&ginv, dr).powi(2);
    let scale = t_norm_sq.max(f64::MIN_POSITIVE);
    let (t1, t2, t3) = traces(&ginv, &f);
    let trace_defect = [t1, t2, t3].iter().map(|v| covector_norm(&ginv, v)).fold(0.0, f64::max)
        / t_norm.max(f64::MIN_POSITIVE);
    Ok(Decomposition {
        inner_defect: inner3(&ginv, &e, &f) / scale,
        pythagoras_defect: (t_norm_sq - e_norm_sq - f_norm_sq) / scale,
        norm_defect: (e_norm_sq - consts.norm_factor * d_r_norm_sq) / scale,
        trace_defect,
        e,
        f,
        t_norm_sq,
        e_norm_sq,
        f_norm_sq,
        d_r_norm_sq,
    })
}

/// Bianchi-consistent instance from the curvature of a random metric jet
/// `g = G + linear + quadratic + cubic` about the origin.
pub fn random_instance<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PointTensorInstance> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { n, min: 2 });
    }
    let space = JetSpace::new(n, 3);
    // G = A A^T + I/2 is safely positive definite.
    let a: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let mut g = vec![vec![space.zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut base: f64 = (0..n).map(|k| a[i][k] * a[j][k]).sum();
            if i == j {
                base += 0.5;
            }
            let mut jet = space.constant(base);
            for (idx, e) in space.exponents().iter().enumerate() {
                let degree = e.iter().map(|&d| d as usize).sum::<usize>();
                if degree > 0 {
                    let mut coeff = vec![0.0; space.size()];
                    coeff[idx] = rng.gen_range(-0.5..0.5);
                    jet.add_assign(&Jet(coeff));
                }
            }
            g[i][j] = jet.clone();
            g[j][i] = jet;
        }
    }
    let pc = curvature_at_origin(&space, &g);
    PointTensorInstance::new(pc.metric, pc.nabla_ricci, pc.d_scalar)
}

/// Outcome of the rotationally symmetric Bianchi check.
#[derive(Debug, Clone, PartialEq)]
pub struct BianchiReport {
    pub n: usize,
    pub c: f64,
    /// Smallest margin using the paper-form norm.
    pub min_margin: f64,
    /// Smallest margin divided by the size of the terms it balances.
    pub min_margin_rel: f64,
    /// Smallest margin when the full covariant norm is used instead.
    pub min_margin_full: f64,
    /// Nodes where `K0' K1' < -C^2/((n-1)^2 - 1)`.
    pub hypothesis_failures: Vec<usize>,
    /// Whether the strong form `|nabla Ric| <= n/(2(n-1)) |nabla R|` applied.
    pub strong_checked: bool,
    /// Largest `sqrt(paper) - n/(2(n-1)) sqrt(|nabla R|^2)`, relative.
    pub strong_excess_rel: f64,
}

impl BianchiReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_margin_rel >= -tol && (!self.strong_checked || self.strong_excess_rel <= tol)
    }
}

/// Evaluate the weak and strong rotationally symmetric Bianchi inequalities
/// node by node.
pub fn rot_sym_bianchi_check(sample: &CurvatureSample, n: usize, c: f64) -> Result<BianchiReport> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { n, min: 3 });
    }
    let nf = n as f64;
    let m = nf - 1.0;
    let floor = -c * c / (m * m - 1.0);
    let factor = 0.25 + 0.25 / (m * m);
    let strong_factor = nf / (2.0 * m);
    let mut report = BianchiReport {
        n,
        c,
        min_margin: f64::INFINITY,
        min_margin_rel: f64::INFINITY,
        min_margin_full: f64::INFINITY,
        hypothesis_failures: Vec::new(),
        strong_checked: false,
        strong_excess_rel: f64::NEG_INFINITY,
    };
    for i in 0..sample.len() {
        let product = sample.d_k0[i] * sample.d_k1[i];
        if product < floor {
            report.hypothesis_failures.push(i);
            continue;
        }
        let bound = factor * sample.nabla_r_sq[i] + (nf - 2.0) * c * c;
        let margin = bound - sample.nabla_ric_paper[i];
        let scale = (bound + sample.nabla_ric_paper[i]).max(f64::MIN_POSITIVE);
        report.min_margin = report.min_margin.min(margin);
        report.min_margin_rel = report.min_margin_rel.min(margin / scale);
        report.min_margin_full = report.min_margin_full.min(bound - sample.nabla_ric_full[i]);
    }
    let monotone = sample.d_k0.iter().zip(&sample.d_k1).all(|(a, b)| a * b >= 0.0);
    if c == 0.0 && monotone {
        report.strong_checked = true;
        for i in 0..sample.len() {
            let lhs = sample.nabla_ric_paper[i].max(0.0).sqrt();
            let rhs = strong_factor * sample.nabla_r_sq[i].max(0.0).sqrt();
            let scale = (lhs + rhs).max(f64::MIN_POSITIVE);
            report.strong_excess_rel = report.strong_excess_rel.max((lhs - rhs) / scale);
        }
    }
    Ok(report)
}

/// Rotational hypersurface `z = a r^p` over `r in [r_in, r_out]`, a tube
/// with `w = r`. Both sectional curvatures decrease outward for `p` in
/// `(1, 2]`.
pub fn graph_profile(grid: Grid, n: usize, a: f64, p: f64, r_in: f64, r_out: f64) -> Result<WarpedState> {
    if !(a > 0.0 && p > 1.0 && r_in > 0.0 && r_out > r_in) {
        return Err(Error::InvalidProfileParameters(format!(
            "graph profile needs a > 0, p > 1, 0 < r_in < r_out (a={a}, p={p}, r=[{r_in}, {r_out}])"
        )));
    }
    let span = r_out - r_in;
    let r: Vec<f64> = grid.coords().map(|x| r_in + span * x).collect();
    let psi = r
        .iter()
        .map(|&rv| {
            let slope = a * p * rv.powf(p - 1.0);
            span * (1.0 + slope * slope).sqrt()
        })
        .collect();
    WarpedState::new(grid, n, 0.0, psi, r, Topology::Neck)
}

/// Random graph profile whose discrete curvature derivatives satisfy
/// `K0' K1' >= 0` at every node.
pub fn random_monotone_profile<R: Rng + ?Sized>(
    n: usize,
    cells: usize,
    rng: &mut R,
) -> Result<(WarpedState, CurvatureSample)> {
    let grid = Grid::new(cells)?;
    loop {
        let a = rng.gen_range(0.2..2.0);
        let p = rng.gen_range(1.2..2.0);
        let r_in = rng.gen_range(0.2..0.6);
        let r_out = rng.gen_range(2.0..4.0);
        let state = graph_profile(grid, n, a, p, r_in, r_out)?;
        let sample = crate::geometry::curvature_sample(&state)?;
        if sample.d_k0.iter().zip(&sample.d_k1).all(|(x, y)| x * y >= 0.0) {
            return Ok((state, sample));
        }
    }
}
