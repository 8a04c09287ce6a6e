//! Curvature of a metric given as a coordinate Taylor jet about the origin.
//!
//! Everything is computed from the metric coefficients alone: the inverse
//! metric by a Neumann series, Christoffel symbols from first derivatives,
//! Ricci from the coordinate formula, and the covariant derivative of Ricci
//! at the origin. Degree-3 metric jets determine all of these exactly.

use crate::jet::{Jet, JetSpace};

/// Curvature data at the origin of a coordinate patch.
#[derive(Debug, Clone)]
pub struct PointCurvature {
    pub metric: Vec<Vec<f64>>,
    pub inverse: Vec<Vec<f64>>,
    pub ricci: Vec<Vec<f64>>,
    /// `nabla_ricci[a][b][c] = nabla_a R_bc`.
    pub nabla_ricci: Vec<Vec<Vec<f64>>>,
    /// `d_scalar[a] = partial_a R`.
    pub d_scalar: Vec<f64>,
}

impl PointCurvature {
    /// `|nabla Ric|^2` contracted with the inverse metric.
    pub fn nabla_ricci_norm_sq(&self) -> f64 {
        tensor3_norm_sq(&self.inverse, &self.nabla_ricci)
    }
}

/// Invert a small symmetric positive-definite matrix by Gauss-Jordan
/// elimination with partial pivoting.
pub fn invert(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut inv: Vec<Vec<f64>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for col in 0..n {
        let pivot =
            (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).expect("non-empty range");
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for j in 0..n {
            a[col][j] /= p;
            inv[col][j] /= p;
        }
        for row in 0..n {
            if row != col {
                let f = a[row][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[row][j] -= f * a[col][j];
                        inv[row][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}

/// `g^{aa'} g^{bb'} g^{cc'} T_abc T_a'b'c'`.
pub fn tensor3_norm_sq(ginv: &[Vec<f64>], t: &[Vec<Vec<f64>>]) -> f64 {
    inner3(ginv, t, t)
}

/// `g^{aa'} g^{bb'} g^{cc'} S_abc T_a'b'c'`.
pub fn inner3(ginv: &[Vec<f64>], s: &[Vec<Vec<f64>>], t: &[Vec<Vec<f64>>]) -> f64 {
    let raised = raise_all(ginv, t);
    let n = ginv.len();
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                acc += s[a][b][c] * raised[a][b][c];
            }
        }
    }
    acc
}

/// Raise all three indices of `T_abc`.
pub fn raise_all(ginv: &[Vec<f64>], t: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
    let n = ginv.len();
    let mut x = vec![vec![vec![0.0; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                x[a][b][c] = (0..n).map(|d| ginv[a][d] * t[d][b][c]).sum();
            }
        }
    }
    let mut y = vec![vec![vec![0.0; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                y[a][b][c] = (0..n).map(|d| ginv[b][d] * x[a][d][c]).sum();
            }
        }
    }
    let mut z = vec![vec![vec![0.0; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                z[a][b][c] = (0..n).map(|d| ginv[c][d] * y[a][b][d]).sum();
            }
        }
    }
    z
}

/// Curvature at the origin of the metric `g[a][b]` (symmetric jets of
/// degree at least 3 in `space`).
pub fn curvature_at_origin(space: &JetSpace, g: &[Vec<Jet>]) -> PointCurvature {
    let n = g.len();
    assert_eq!(space.vars(), n, "one jet variable per coordinate");
    assert!(space.max_degree() >= 3, "degree-3 jets are needed for nabla Ric");

    let metric: Vec<Vec<f64>> = g.iter().map(|row| row.iter().map(|j| space.value(j)).collect()).collect();
    let inverse = invert(&metric);

    // g^{-1} = sum_k (-G0^{-1} G1)^k G0^{-1}, to degree 2.
    let g1: Vec<Vec<Jet>> = g
        .iter()
        .map(|row| {
            row.iter()
                .map(|j| {
                    let mut d = j.clone();
                    d.0[0] = 0.0;
                    d
                })
                .collect()
        })
        .collect();
    let m: Vec<Vec<Jet>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = space.zero();
                    for k in 0..n {
                        acc.add_scaled(&g1[k][j], -inverse[i][k]);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    let mut term: Vec<Vec<Jet>> =
        (0..n).map(|i| (0..n).map(|j| space.constant(inverse[i][j])).collect()).collect();
    let mut ginv = term.clone();
    for _ in 0..2 {
        let next: Vec<Vec<Jet>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let mut acc = space.zero();
                        for k in 0..n {
                            space.mul_add_capped(&m[i][k], &term[k][j], 2, 1.0, &mut acc);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        for i in 0..n {
            for j in 0..n {
                ginv[i][j].add_assign(&next[i][j]);
            }
        }
        term = next;
    }

    // dg[c][a][b] = partial_c g_ab
    let dg: Vec<Vec<Vec<Jet>>> = (0..n)
        .map(|c| (0..n).map(|a| (0..n).map(|b| space.deriv(&g[a][b], c)).collect()).collect())
        .collect();

    // gamma[a][b][c] = Gamma^a_bc, to degree 2.
    let mut gamma = vec![vec![vec![space.zero(); n]; n]; n];
    for b in 0..n {
        for c in b..n {
            let lowered: Vec<Jet> = (0..n).map(|d| dg[b][d][c].add(&dg[c][d][b]).sub(&dg[d][b][c])).collect();
            for a in 0..n {
                let mut acc = space.zero();
                for d in 0..n {
                    space.mul_add_capped(&ginv[a][d], &lowered[d], 2, 0.5, &mut acc);
                }
                gamma[a][c][b] = acc.clone();
                gamma[a][b][c] = acc;
            }
        }
    }

    // R_bc = d_a G^a_bc - d_c G^a_ab + G^a_ad G^d_bc - G^a_cd G^d_ab, to degree 1.
    let trace: Vec<Jet> = (0..n)
        .map(|d| {
            let mut acc = space.zero();
            for a in 0..n {
                acc.add_assign(&gamma[a][a][d]);
            }
            acc
        })
        .collect();
    let mut ricci_jet = vec![vec![space.zero(); n]; n];
    for b in 0..n {
        for c in b..n {
            let mut acc = space.zero();
            for a in 0..n {
                acc.add_assign(&space.truncate(&space.deriv(&gamma[a][b][c], a), 1));
            }
            acc = acc.sub(&space.truncate(&space.deriv(&trace[b], c), 1));
            for d in 0..n {
                space.mul_add_capped(&trace[d], &gamma[d][b][c], 1, 1.0, &mut acc);
                for a in 0..n {
                    space.mul_add_capped(&gamma[a][c][d], &gamma[d][a][b], 1, -1.0, &mut acc);
                }
            }
            ricci_jet[c][b] = acc.clone();
            ricci_jet[b][c] = acc;
        }
    }

    let ricci: Vec<Vec<f64>> =
        ricci_jet.iter().map(|row| row.iter().map(|j| space.value(j)).collect()).collect();
    let slope = |j: &Jet, a: usize| space.value(&space.deriv(j, a));

    let mut scalar = space.zero();
    for b in 0..n {
        for c in 0..n {
            space.mul_add_capped(&ginv[b][c], &ricci_jet[b][c], 1, 1.0, &mut scalar);
        }
    }
    let d_scalar = (0..n).map(|a| slope(&scalar, a)).collect();

    let gamma0: Vec<Vec<Vec<f64>>> = gamma
        .iter()
        .map(|m| m.iter().map(|row| row.iter().map(|j| space.value(j)).collect()).collect())
        .collect();
    let mut nabla_ricci = vec![vec![vec![0.0; n]; n]; n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                let mut v = slope(&ricci_jet[b][c], a);
                for d in 0..n {
                    v -= gamma0[d][a][b] * ricci[d][c] + gamma0[d][a][c] * ricci[b][d];
                }
                nabla_ricci[a][b][c] = v;
            }
        }
    }

    PointCurvature { metric, inverse, ricci, nabla_ricci, d_scalar }
}
