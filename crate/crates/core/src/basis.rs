//! Dirichlet sine modes used as the Galerkin space for the velocity.

use crate::error::{Error, Result};
use crate::grid::{Bc, Grid, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub index: [usize; 2],
    pub eigenvalue: f64,
}

/// The first `k` Dirichlet eigenfunctions of `-Laplace` on the grid's box,
/// ordered by eigenvalue, with their values at the grid nodes.
///
/// On the vertex grid the sampled modes are orthonormal under the trapezoid
/// rule, so projection is a plain weighted sum.
#[derive(Debug, Clone)]
pub struct GalerkinBasis {
    grid: Grid,
    modes: Vec<Mode>,
    table: Vec<Vec<f64>>,
}

impl GalerkinBasis {
    pub fn new(grid: Grid, k: usize) -> Result<Self> {
        let nx = grid.cells(0);
        let ny = if grid.dim() == 2 { grid.cells(1) } else { 2 };
        let limit = (nx - 1) * (ny - 1);
        if k == 0 || k > limit {
            return Err(Error::domain(format!(
                "requested {k} modes, the grid resolves between 1 and {limit}"
            )));
        }
        let lx = grid.extent(0);
        let ly = grid.extent(1);
        let mut modes = Vec::with_capacity(limit);
        for j in 1..nx {
            if grid.dim() == 1 {
                let kx = j as f64 * std::f64::consts::PI / lx;
                modes.push(Mode {
                    index: [j, 0],
                    eigenvalue: kx * kx,
                });
                continue;
            }
            for l in 1..ny {
                let kx = j as f64 * std::f64::consts::PI / lx;
                let ky = l as f64 * std::f64::consts::PI / ly;
                modes.push(Mode {
                    index: [j, l],
                    eigenvalue: kx * kx + ky * ky,
                });
            }
        }
        modes.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue).then(a.index.cmp(&b.index)));
        modes.truncate(k);
        let table = modes.iter().map(|m| mode_values(&grid, m.index)).collect();
        Ok(Self { grid, modes, table })
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Nodal values of mode `j`.
    pub fn values(&self, j: usize) -> &[f64] {
        &self.table[j]
    }

    /// Weighted inner products with every mode.
    pub fn project_values(&self, values: &[f64]) -> Vec<f64> {
        self.table
            .iter()
            .map(|phi| {
                phi.iter()
                    .zip(values)
                    .enumerate()
                    .map(|(k, (p, v))| self.grid.weight(k) * p * v)
                    .sum()
            })
            .collect()
    }

    /// `sum_i phi_j(x_i) f_i` for every mode: pairs modes with forces already
    /// integrated over dual cells.
    pub fn project_values_unweighted(&self, values: &[f64]) -> Vec<f64> {
        self.table
            .iter()
            .map(|phi| phi.iter().zip(values).map(|(p, v)| p * v).sum())
            .collect()
    }

    /// Adjoint of `project_values` without weights: `sum_j c_j phi_j` at the nodes.
    pub fn synthesize(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (c, phi) in coeffs.iter().zip(&self.table) {
            if *c == 0.0 {
                continue;
            }
            for (o, p) in out.iter_mut().zip(phi) {
                *o += c * p;
            }
        }
        out
    }

    pub fn project(&self, f: &ScalarField) -> Result<Vec<f64>> {
        if f.grid != self.grid {
            return Err(Error::domain("field and basis live on different grids"));
        }
        Ok(self.project_values(&f.values))
    }

    pub fn reconstruct(&self, coeffs: &[f64]) -> Result<ScalarField> {
        if coeffs.len() != self.len() {
            return Err(Error::domain(format!("expected {} coefficients, got {}", self.len(), coeffs.len())));
        }
        Ok(ScalarField {
            grid: self.grid,
            values: self.synthesize(coeffs),
            bc: Bc::Dirichlet,
        })
    }

    /// Component-wise projection; coefficients are stored component after component.
    pub fn project_vector(&self, v: &VectorField) -> Result<Vec<f64>> {
        if v.grid != self.grid {
            return Err(Error::domain("field and basis live on different grids"));
        }
        Ok(v.comps.iter().flat_map(|c| self.project_values(c)).collect())
    }

    pub fn reconstruct_vector(&self, coeffs: &[f64]) -> Result<VectorField> {
        let k = self.len();
        if coeffs.len() != k * self.grid.dim() {
            return Err(Error::domain(format!(
                "expected {} coefficients, got {}",
                k * self.grid.dim(),
                coeffs.len()
            )));
        }
        Ok(VectorField {
            grid: self.grid,
            comps: coeffs.chunks(k).map(|c| self.synthesize(c)).collect(),
            bc: Bc::Dirichlet,
        })
    }
}

fn mode_values(grid: &Grid, index: [usize; 2]) -> Vec<f64> {
    let pi = std::f64::consts::PI;
    let lx = grid.extent(0);
    let ly = grid.extent(1);
    (0..grid.len())
        .map(|k| {
            let (i, j) = grid.ij(k);
            if grid.is_boundary(k) {
                return 0.0;
            }
            let fx = (2.0 / lx).sqrt() * (pi * (index[0] * i) as f64 / grid.cells(0) as f64).sin();
            if grid.dim() == 1 {
                fx
            } else {
                fx * (2.0 / ly).sqrt() * (pi * (index[1] * j) as f64 / grid.cells(1) as f64).sin()
            }
        })
        .collect()
}
