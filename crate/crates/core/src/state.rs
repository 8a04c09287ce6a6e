use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Global shape of the radial interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Both ends are poles where the warping function vanishes.
    Sphere,
    /// The warping function is positive at both ends (a tube `S^{n-1} x I`).
    Neck,
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Topology::Sphere => "sphere",
            Topology::Neck => "neck",
        })
    }
}

impl FromStr for Topology {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sphere" => Ok(Topology::Sphere),
            "neck" => Ok(Topology::Neck),
            other => Err(format!("unknown topology '{other}' (expected sphere|neck)")),
        }
    }
}

/// One time slice of a rotationally symmetric metric
/// `g = psi(x)^2 dx^2 + w(x)^2 g_{S^{n-1}}` on the fixed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpedState {
    grid: Grid,
    n: usize,
    t: f64,
    psi: Vec<f64>,
    w: Vec<f64>,
    topology: Topology,
}

impl WarpedState {
    pub fn new(grid: Grid, n: usize, t: f64, psi: Vec<f64>, w: Vec<f64>, topology: Topology) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { n, min: 2 });
        }
        if psi.len() != grid.len() || w.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "psi/w have {}/{} values for {} nodes",
                psi.len(),
                w.len(),
                grid.len()
            )));
        }
        if let Some(i) = psi.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::InvalidProfileParameters(format!(
                "gauge factor must be positive, psi[{i}] = {}",
                psi[i]
            )));
        }
        let last = grid.cells();
        match topology {
            Topology::Sphere => {
                if w[0] != 0.0 || w[last] != 0.0 {
                    return Err(Error::InvalidProfileParameters(format!(
                        "sphere topology needs w = 0 at both poles, got {} and {}",
                        w[0], w[last]
                    )));
                }
                check_positive(&w[1..last], 1)?;
            }
            Topology::Neck => check_positive(&w, 0)?,
        }
        Ok(Self { grid, n, t, psi, w, topology })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Arc length `s_i` of every node, measured from `x = 0` with the
    /// trapezoid rule.
    pub fn arc_length(&self) -> Vec<f64> {
        let dx = self.grid.dx();
        let mut s = Vec::with_capacity(self.psi.len());
        let mut acc = 0.0;
        s.push(0.0);
        for pair in self.psi.windows(2) {
            acc += 0.5 * (pair[0] + pair[1]) * dx;
            s.push(acc);
        }
        s
    }

    /// Total radial length of the domain.
    pub fn length(&self) -> f64 {
        *self.arc_length().last().expect("grid has nodes")
    }

    /// Parabolic rescaling `g -> c g`, `t -> c t`.
    pub fn rescaled(&self, c: f64) -> Self {
        let k = c.sqrt();
        Self {
            grid: self.grid,
            n: self.n,
            t: self.t * c,
            psi: self.psi.iter().map(|p| p * k).collect(),
            w: self.w.iter().map(|v| v * k).collect(),
            topology: self.topology,
        }
    }

    pub(crate) fn from_parts_unchecked(template: &Self, t: f64, psi: Vec<f64>, w: Vec<f64>) -> Self {
        Self { grid: template.grid, n: template.n, t, psi, w, topology: template.topology }
    }
}

fn check_positive(w: &[f64], offset: usize) -> Result<()> {
    match w.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
        Some(i) => Err(Error::NonPositiveWarping { node: i + offset, value: w[i] }),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(32).unwrap()
    }

    #[test]
    fn sphere_requires_zero_poles() {
        let g = grid();
        let w: Vec<f64> = g.coords().map(|x| (std::f64::consts::PI * x).sin() + 0.1).collect();
        let err = WarpedState::new(g, 3, 0.0, vec![1.0; 33], w, Topology::Sphere).unwrap_err();
        assert!(matches!(err, Error::InvalidProfileParameters(_)));
    }

    #[test]
    fn neck_rejects_vanishing_warp() {
        let g = grid();
        let mut w = vec![1.0; 33];
        w[7] = 0.0;
        let err = WarpedState::new(g, 3, 0.0, vec![1.0; 33], w, Topology::Neck).unwrap_err();
        assert!(matches!(err, Error::NonPositiveWarping { node: 7, .. }));
    }

    #[test]
    fn arc_length_of_constant_gauge() {
        let g = grid();
        let s = WarpedState::new(g, 3, 0.0, vec![2.5; 33], vec![1.0; 33], Topology::Neck).unwrap();
        let arc = s.arc_length();
        assert!((arc[32] - 2.5).abs() < 1e-14);
        assert!((arc[16] - 1.25).abs() < 1e-14);
    }
}
