//! Lattice edges and the implicit diffusion operator `W + tau K`.

use crate::error::Result;
use crate::grid::{Bc, Grid};
use crate::linalg::{BandCholesky, SymBand};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Edge {
    pub axis: usize,
    pub left: usize,
    pub right: usize,
    /// Face measure divided by the spacing: the edge's stiffness coefficient.
    pub conductance: f64,
    pub face: f64,
    pub h: f64,
}

pub(crate) fn edges(grid: &Grid) -> Vec<Edge> {
    let mut out = Vec::new();
    for axis in 0..grid.dim() {
        let h = grid.spacing(axis);
        for (left, right) in grid.edges(axis) {
            let face = grid.face_measure(left, axis);
            out.push(Edge {
                axis,
                left,
                right,
                conductance: face / h,
                face,
                h,
            });
        }
    }
    out
}

/// `K x` for the graph Laplacian built from `edges` (Neumann form).
pub(crate) fn stiffness_apply(n: usize, edges: &[Edge], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for e in edges {
        let d = e.conductance * (x[e.left] - x[e.right]);
        y[e.left] += d;
        y[e.right] -= d;
    }
    y
}

/// `sum_edges c (x_r - x_l)^2`, the discrete Dirichlet integral.
pub(crate) fn dirichlet_integral(edges: &[Edge], x: &[f64]) -> f64 {
    edges.iter().map(|e| e.conductance * (x[e.right] - x[e.left]).powi(2)).sum()
}

/// Factored `W + tau K`. Dirichlet rows are replaced by the identity, which
/// pins boundary values to the (zero) right-hand side.
#[derive(Debug, Clone)]
pub(crate) struct Diffusion {
    pub tau: f64,
    weights: Vec<f64>,
    boundary: Option<Vec<bool>>,
    factor: BandCholesky,
}

impl Diffusion {
    pub fn new(grid: &Grid, edges: &[Edge], bc: Bc, tau: f64) -> Result<Self> {
        let n = grid.len();
        let bw = if grid.dim() == 2 { grid.nodes(0) } else { 1 };
        let weights = grid.weights();
        let boundary: Option<Vec<bool>> = match bc {
            Bc::Neumann => None,
            Bc::Dirichlet => Some((0..n).map(|k| grid.is_boundary(k)).collect()),
        };
        let fixed = |k: usize| boundary.as_ref().is_some_and(|b| b[k]);
        let mut a = SymBand::zeros(n, bw);
        for (k, w) in weights.iter().enumerate() {
            a.add(k, k, if fixed(k) { 1.0 } else { *w });
        }
        for e in edges {
            let c = tau * e.conductance;
            if !fixed(e.left) {
                a.add(e.left, e.left, c);
            }
            if !fixed(e.right) {
                a.add(e.right, e.right, c);
            }
            if !fixed(e.left) && !fixed(e.right) {
                a.add(e.left, e.right, -c);
            }
        }
        let factor = a.cholesky()?;
        Ok(Self {
            tau,
            weights,
            boundary,
            factor,
        })
    }

    /// Solves `(W + tau K) x = W f`.
    pub fn smooth(&self, f: &[f64]) -> Vec<f64> {
        let rhs: Vec<f64> = f
            .iter()
            .zip(&self.weights)
            .enumerate()
            .map(|(k, (v, w))| match &self.boundary {
                Some(b) if b[k] => 0.0,
                _ => v * w,
            })
            .collect();
        self.factor.solve(&rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumann_smoothing_conserves_mass_and_constants() {
        for grid in [Grid::line(20, 1.0).unwrap(), Grid::new(&[8, 10], &[1.0, 2.0]).unwrap()] {
            let e = edges(&grid);
            let d = Diffusion::new(&grid, &e, Bc::Neumann, 0.05).unwrap();
            let c = d.smooth(&vec![2.5; grid.len()]);
            assert!(c.iter().all(|v| (v - 2.5).abs() < 1e-13));
            let f: Vec<f64> = (0..grid.len()).map(|k| (k as f64 * 0.7).sin() + 1.5).collect();
            let g = d.smooth(&f);
            let w = grid.weights();
            let m0: f64 = f.iter().zip(&w).map(|(a, b)| a * b).sum();
            let m1: f64 = g.iter().zip(&w).map(|(a, b)| a * b).sum();
            assert!((m0 - m1).abs() < 1e-13);
            assert!(g.iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn dirichlet_smoothing_pins_boundary() {
        let grid = Grid::square(8, 1.0).unwrap();
        let e = edges(&grid);
        let d = Diffusion::new(&grid, &e, Bc::Dirichlet, 0.1).unwrap();
        let g = d.smooth(&vec![1.0; grid.len()]);
        for k in 0..grid.len() {
            if grid.is_boundary(k) {
                assert_eq!(g[k], 0.0);
            } else {
                assert!(g[k] > 0.0 && g[k] < 1.0);
            }
        }
    }
}
