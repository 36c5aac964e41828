//! Uniform spatial grid on the crystal-size interval `[0, length]`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid length must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("grid needs at least 2 cells, got {0}")]
    TooFewCells(usize),
}

/// Equispaced grid with `n_cells` cells and `n_cells + 1` nodes,
/// `x_i = i * length / n_cells`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    length: f64,
    n_cells: usize,
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(length: f64, n_cells: usize) -> Result<Self, GridError> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(GridError::BadLength(length));
        }
        if n_cells < 2 {
            return Err(GridError::TooFewCells(n_cells));
        }
        let n = n_cells as f64;
        let mut nodes: Vec<f64> = (0..=n_cells).map(|i| i as f64 * length / n).collect();
        // the right endpoint is exact by construction
        nodes[n_cells] = length;
        Ok(Self {
            length,
            n_cells,
            nodes,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_equispaced_and_cover_domain() {
        let g = Grid::new(2.5, 10).unwrap();
        assert_eq!(g.n_nodes(), 11);
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(g.nodes()[10], 2.5);
        for w in g.nodes().windows(2) {
            assert!((w[1] - w[0] - 0.25).abs() < 1e-15);
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert_eq!(Grid::new(0.0, 10).unwrap_err(), GridError::BadLength(0.0));
        assert_eq!(Grid::new(-1.0, 10).unwrap_err(), GridError::BadLength(-1.0));
        assert_eq!(Grid::new(1.0, 1).unwrap_err(), GridError::TooFewCells(1));
        assert!(Grid::new(f64::NAN, 4).is_err());
    }
}
