//! Brute-force `|nabla Ric|^2` in coordinates.
//!
//! At each node the metric is written in coordinates `(xi, y_1..y_{n-1})`
//! as `psi(xi)^2 dxi^2 + w(xi)^2 4(1 - 2|y|^2) |dy|^2` (stereographic
//! coordinates on the sphere factor), expanded to third order, and fed to
//! the generic coordinate curvature engine. No warped-product formulas are
//! used.

use crate::coords::curvature_at_origin;
use crate::error::Result;
use crate::geometry::{check_poles, warp_derivatives};
use crate::grid::RadialField;
use crate::jet::{Jet, JetSpace};
use crate::state::{Topology, WarpedState};

/// Reach of the widest stencil used for the third derivative.
const REACH: usize = 3;

/// `|nabla Ric|^2` at every node, `NaN` where the stencils do not fit
/// (poles and nodes next to a tube end).
pub fn nabla_ric_oracle(state: &WarpedState) -> Result<RadialField> {
    let der = warp_derivatives(state);
    check_poles(state, &der.ws)?;
    let n = state.dim();
    let space = JetSpace::new(n, 3);
    let h = state.grid().dx();
    let last = state.grid().cells();
    let psi = extended(state.psi(), state.topology(), 1.0);
    let w = extended(state.w(), state.topology(), -1.0);

    // sigma = 4 (1 - 2|y|^2) on the sphere factor
    let mut y_sq = space.zero();
    for v in 1..n {
        let y = space.variable(v);
        y_sq.add_assign(&space.mul(&y, &y));
    }
    let sigma = space.constant(1.0).sub(&y_sq.scale(2.0)).scale(4.0);

    let mut out = vec![f64::NAN; last + 1];
    for (i, slot) in out.iter_mut().enumerate() {
        let resolved = match state.topology() {
            Topology::Sphere => i > 0 && i < last,
            Topology::Neck => i >= REACH && i + REACH <= last,
        };
        if !resolved {
            continue;
        }
        let c = i + REACH;
        let psi_jet = radial_jet(&space, &taylor(&psi, c, h));
        let w_jet = radial_jet(&space, &taylor(&w, c, h));
        let g00 = space.mul(&psi_jet, &psi_jet);
        let gss = space.mul(&space.mul(&w_jet, &w_jet), &sigma);
        let g: Vec<Vec<Jet>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| match (a, b) {
                        (0, 0) => g00.clone(),
                        _ if a == b => gss.clone(),
                        _ => space.zero(),
                    })
                    .collect()
            })
            .collect();
        *slot = curvature_at_origin(&space, &g).nabla_ricci_norm_sq();
    }
    RadialField::new(state.grid(), out)
}

/// Values padded by `REACH` ghost nodes at both ends. On a sphere the ghosts
/// reflect through the poles with the given parity; on a tube they are
/// `NaN` and never reach a resolved node.
fn extended(v: &[f64], topology: Topology, parity: f64) -> Vec<f64> {
    let last = v.len() - 1;
    let mut out = Vec::with_capacity(v.len() + 2 * REACH);
    for k in (1..=REACH).rev() {
        out.push(match topology {
            Topology::Sphere => parity * v[k],
            Topology::Neck => f64::NAN,
        });
    }
    out.extend_from_slice(v);
    for k in 1..=REACH {
        out.push(match topology {
            Topology::Sphere => parity * v[last - k],
            Topology::Neck => f64::NAN,
        });
    }
    out
}

/// `[f, f', f'', f''']` at index `c` with fourth-order central stencils.
fn taylor(f: &[f64], c: usize, h: f64) -> [f64; 4] {
    let at = |k: isize| f[(c as isize + k) as usize];
    let d1 = (-at(2) + 8.0 * at(1) - 8.0 * at(-1) + at(-2)) / (12.0 * h);
    let d2 = (-at(2) + 16.0 * at(1) - 30.0 * at(0) + 16.0 * at(-1) - at(-2)) / (12.0 * h * h);
    let d3 =
        (-at(3) + 8.0 * at(2) - 13.0 * at(1) + 13.0 * at(-1) - 8.0 * at(-2) + at(-3)) / (8.0 * h * h * h);
    [at(0), d1, d2, d3]
}

/// Taylor polynomial in the radial variable (jet variable 0).
fn radial_jet(space: &JetSpace, d: &[f64; 4]) -> Jet {
    let mut e = vec![0u8; space.vars()];
    let mut jet = space.zero();
    let mut factorial = 1.0;
    for (k, coeff) in d.iter().enumerate() {
        if k > 0 {
            factorial *= k as f64;
        }
        e[0] = k as u8;
        jet.add_assign(&space.monomial(&e, coeff / factorial));
    }
    jet
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn third_derivative_stencil_is_fourth_order() {
        let h = 1e-2;
        let f: Vec<f64> = (0..9).map(|k| ((k as f64 - 4.0) * h + 0.3).sin()).collect();
        let d = taylor(&f, 4, h);
        assert!((d[1] - 0.3f64.cos()).abs() < 1e-9);
        assert!((d[2] + 0.3f64.sin()).abs() < 1e-8);
        assert!((d[3] + 0.3f64.cos()).abs() < 1e-5);
    }

    #[test]
    fn round_sphere_and_cylinder_vanish() {
        let grid = Grid::new(256).unwrap();
        let mut w: Vec<f64> = grid.coords().map(|x| (PI * x).sin()).collect();
        w[0] = 0.0;
        w[256] = 0.0;
        let sphere = WarpedState::new(grid, 3, 0.0, vec![PI; 257], w, Topology::Sphere).unwrap();
        let q = nabla_ric_oracle(&sphere).unwrap();
        assert!(q.values()[0].is_nan() && q.values()[256].is_nan());
        // Near a pole the radius w ~ dx amplifies stencil error.
        for v in &q.values()[13..244] {
            assert!(v.abs() < 1e-10, "{v}");
        }
        let tube = WarpedState::new(grid, 4, 0.0, vec![3.0; 257], vec![1.0; 257], Topology::Neck).unwrap();
        let q = nabla_ric_oracle(&tube).unwrap();
        for v in q.values().iter().filter(|v| !v.is_nan()) {
            assert!(v.abs() < 1e-20);
        }
    }
}
