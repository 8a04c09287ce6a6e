use crate::error::{Error, Result};

/// Smallest admissible number of cells.
pub const MIN_CELLS: usize = 16;

/// Uniform grid `x_i = i / N` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    cells: usize,
}

impl Grid {
    pub fn new(cells: usize) -> Result<Self> {
        if cells < MIN_CELLS {
            return Err(Error::InvalidGrid(format!("{cells} cells, need at least {MIN_CELLS}")));
        }
        Ok(Self { cells })
    }

    /// Number of cells `N`.
    pub fn cells(&self) -> usize {
        self.cells
    }

    /// Number of nodes `N + 1`.
    pub fn len(&self) -> usize {
        self.cells + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 / self.cells as f64
    }

    pub fn coords(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.x(i))
    }
}

/// Per-node scalar values aligned with a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { values })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Self { values: grid.coords().map(f).collect() }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl std::ops::Index<usize> for RadialField {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_coarse_grids() {
        assert!(Grid::new(15).is_err());
        let g = Grid::new(16).unwrap();
        assert_eq!(g.len(), 17);
        assert_eq!(g.x(16), 1.0);
    }

    #[test]
    fn field_length_must_match() {
        let g = Grid::new(32).unwrap();
        assert!(RadialField::new(&g, vec![0.0; 32]).is_err());
        assert!(RadialField::new(&g, vec![0.0; 33]).is_ok());
    }
}
