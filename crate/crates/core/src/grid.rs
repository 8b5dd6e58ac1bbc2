//! Vertex-centred tensor grids on `[0, Lx]` or `[0, Lx] x [0, Ly]`, nodal
//! fields and summation-by-parts difference operators.
//!
//! Nodes include the boundary; quadrature is the tensor trapezoid rule, which
//! is also the norm under which the first-difference operator is skew up to
//! boundary terms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    cells: [usize; 2],
    extent: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    Neumann,
    Dirichlet,
}

impl Grid {
    pub fn new(cells: &[usize], extent: &[f64]) -> Result<Self> {
        let dim = cells.len();
        if !(dim == 1 || dim == 2) || extent.len() != dim {
            return Err(Error::domain(format!(
                "grid needs 1 or 2 dimensions with matching extents, got cells {cells:?}, extent {extent:?}"
            )));
        }
        for a in 0..dim {
            if cells[a] < 8 {
                return Err(Error::domain(format!("need at least 8 cells per dimension, got {}", cells[a])));
            }
            if !(extent[a].is_finite() && extent[a] > 0.0) {
                return Err(Error::domain(format!("extent must be positive, got {}", extent[a])));
            }
        }
        let mut c = [1, 1];
        let mut e = [1.0, 1.0];
        c[..dim].copy_from_slice(cells);
        e[..dim].copy_from_slice(extent);
        Ok(Self {
            dim,
            cells: c,
            extent: e,
        })
    }

    pub fn line(cells: usize, extent: f64) -> Result<Self> {
        Self::new(&[cells], &[extent])
    }

    pub fn square(cells: usize, extent: f64) -> Result<Self> {
        Self::new(&[cells, cells], &[extent, extent])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cells(&self, axis: usize) -> usize {
        self.cells[axis]
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extent[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.cells[axis] as f64
    }

    /// Nodes along `axis`, boundary included.
    pub fn nodes(&self, axis: usize) -> usize {
        if axis < self.dim {
            self.cells[axis] + 1
        } else {
            1
        }
    }

    pub fn len(&self) -> usize {
        self.nodes(0) * self.nodes(1)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.nodes(0) * j
    }

    /// `(i, j)` lattice coordinates of a flat index.
    pub fn ij(&self, idx: usize) -> (usize, usize) {
        (idx % self.nodes(0), idx / self.nodes(0))
    }

    pub fn coord(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.ij(idx);
        let y = if self.dim == 2 { j as f64 * self.spacing(1) } else { 0.0 };
        [i as f64 * self.spacing(0), y]
    }

    pub fn cells_vec(&self) -> Vec<usize> {
        self.cells[..self.dim].to_vec()
    }

    pub fn extent_vec(&self) -> Vec<f64> {
        self.extent[..self.dim].to_vec()
    }

    /// One-dimensional trapezoid weight of node `i` along `axis`.
    pub fn axis_weight(&self, axis: usize, i: usize) -> f64 {
        if axis >= self.dim {
            return 1.0;
        }
        let h = self.spacing(axis);
        if i == 0 || i == self.cells[axis] {
            0.5 * h
        } else {
            h
        }
    }

    pub fn weight(&self, idx: usize) -> f64 {
        let (i, j) = self.ij(idx);
        self.axis_weight(0, i) * self.axis_weight(1, j)
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.weight(k)).collect()
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let (i, j) = self.ij(idx);
        i == 0 || i == self.cells[0] || (self.dim == 2 && (j == 0 || j == self.cells[1]))
    }

    /// Neighbour of `idx` one step along `axis` (`+1` or `-1`), if inside.
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let (i, j) = self.ij(idx);
        let (pos, n) = if axis == 0 { (i, self.cells[0]) } else { (j, self.cells[1]) };
        if forward && pos < n {
            Some(if axis == 0 { idx + 1 } else { idx + self.nodes(0) })
        } else if !forward && pos > 0 {
            Some(if axis == 0 { idx - 1 } else { idx - self.nodes(0) })
        } else {
            None
        }
    }

    /// Edges `(left, right)` of the lattice along `axis`.
    pub fn edges(&self, axis: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).filter_map(move |k| self.neighbor(k, axis, true).map(|r| (k, r)))
    }

    /// Length of the dual-cell face crossed by an edge along `axis` that starts at `idx`.
    pub fn face_measure(&self, idx: usize, axis: usize) -> f64 {
        if self.dim == 1 {
            return 1.0;
        }
        let (i, j) = self.ij(idx);
        if axis == 0 {
            self.axis_weight(1, j)
        } else {
            self.axis_weight(0, i)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub values: Vec<f64>,
    pub bc: Bc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    /// One component per spatial dimension.
    pub comps: Vec<Vec<f64>>,
    pub bc: Bc,
}

impl ScalarField {
    pub fn zeros(grid: Grid, bc: Bc) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
            bc,
        }
    }

    pub fn from_fn(grid: Grid, bc: Bc, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut values: Vec<f64> = (0..grid.len()).map(|k| f(grid.coord(k))).collect();
        if bc == Bc::Dirichlet {
            for (k, v) in values.iter_mut().enumerate() {
                if grid.is_boundary(k) {
                    *v = 0.0;
                }
            }
        }
        Self { grid, values, bc }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl VectorField {
    pub fn zeros(grid: Grid, bc: Bc) -> Self {
        Self {
            grid,
            comps: vec![vec![0.0; grid.len()]; grid.dim()],
            bc,
        }
    }

    pub fn from_fn(grid: Grid, bc: Bc, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mut comps = vec![vec![0.0; grid.len()]; grid.dim()];
        for k in 0..grid.len() {
            let v = f(grid.coord(k));
            let boundary = bc == Bc::Dirichlet && grid.is_boundary(k);
            for (a, c) in comps.iter_mut().enumerate() {
                c[k] = if boundary { 0.0 } else { v[a] };
            }
        }
        Self { grid, comps, bc }
    }

    pub fn component(&self, axis: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.comps[axis].clone(),
            bc: self.bc,
        }
    }

    /// Pointwise Euclidean norm.
    pub fn norm(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|k| self.comps.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt())
            .collect()
    }
}

fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a != b {
        return Err(Error::domain("fields live on different grids"));
    }
    Ok(())
}

/// Trapezoid integral of nodal values.
pub fn integrate_values(grid: &Grid, values: &[f64]) -> f64 {
    values.iter().enumerate().map(|(k, v)| grid.weight(k) * v).sum()
}

pub fn integrate(f: &ScalarField) -> f64 {
    integrate_values(&f.grid, &f.values)
}

pub fn inner_product(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    same_grid(&a.grid, &b.grid)?;
    Ok(a
        .values
        .iter()
        .zip(&b.values)
        .enumerate()
        .map(|(k, (x, y))| a.grid.weight(k) * x * y)
        .sum())
}

pub fn vector_inner_product(a: &VectorField, b: &VectorField) -> Result<f64> {
    same_grid(&a.grid, &b.grid)?;
    Ok(a
        .comps
        .iter()
        .zip(&b.comps)
        .map(|(x, y)| {
            x.iter()
                .zip(y)
                .enumerate()
                .map(|(k, (p, q))| a.grid.weight(k) * p * q)
                .sum::<f64>()
        })
        .sum())
}

/// First difference along `axis`: centred inside, one-sided first order on the
/// boundary. With `zero_boundary` the boundary rows are set to zero instead.
pub fn diff_axis(grid: &Grid, values: &[f64], axis: usize, zero_boundary: bool) -> Vec<f64> {
    let h = grid.spacing(axis);
    (0..grid.len())
        .map(|k| {
            match (grid.neighbor(k, axis, false), grid.neighbor(k, axis, true)) {
                (Some(l), Some(r)) => (values[r] - values[l]) / (2.0 * h),
                _ if zero_boundary => 0.0,
                (None, Some(r)) => (values[r] - values[k]) / h,
                (Some(l), None) => (values[k] - values[l]) / h,
                (None, None) => 0.0,
            }
        })
        .collect()
}

/// Gradient. For a Neumann field the normal derivative on the boundary is the
/// boundary condition itself, zero.
pub fn gradient(f: &ScalarField) -> VectorField {
    let zero = f.bc == Bc::Neumann;
    let comps = (0..f.grid.dim())
        .map(|a| {
            let g = diff_axis(&f.grid, &f.values, a, false);
            if !zero {
                return g;
            }
            (0..f.grid.len())
                .map(|k| {
                    let on_face = f.grid.neighbor(k, a, false).is_none() || f.grid.neighbor(k, a, true).is_none();
                    if on_face {
                        0.0
                    } else {
                        g[k]
                    }
                })
                .collect()
        })
        .collect();
    VectorField {
        grid: f.grid,
        comps,
        bc: if zero { Bc::Dirichlet } else { Bc::Neumann },
    }
}

pub fn divergence(v: &VectorField) -> ScalarField {
    let mut out = vec![0.0; v.grid.len()];
    for (a, c) in v.comps.iter().enumerate() {
        for (o, d) in out.iter_mut().zip(diff_axis(&v.grid, c, a, false)) {
            *o += d;
        }
    }
    ScalarField {
        grid: v.grid,
        values: out,
        bc: Bc::Neumann,
    }
}

/// Five-point (three-point in 1D) Laplacian. Neumann fields are mirrored across
/// the boundary; Dirichlet fields have zero Laplacian on boundary nodes.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    let g = &f.grid;
    let mut out = vec![0.0; g.len()];
    for (k, o) in out.iter_mut().enumerate() {
        if f.bc == Bc::Dirichlet && g.is_boundary(k) {
            continue;
        }
        for a in 0..g.dim() {
            let h2 = g.spacing(a).powi(2);
            let c = f.values[k];
            let l = g.neighbor(k, a, false).map(|i| f.values[i]);
            let r = g.neighbor(k, a, true).map(|i| f.values[i]);
            let (l, r) = match (l, r) {
                (Some(l), Some(r)) => (l, r),
                (None, Some(r)) => (r, r),
                (Some(l), None) => (l, l),
                (None, None) => (c, c),
            };
            *o += (l - 2.0 * c + r) / h2;
        }
    }
    ScalarField {
        grid: *g,
        values: out,
        bc: f.bc,
    }
}

/// Planar curl of a scalar potential, `(d_y A, -d_x A)`.
pub fn curl_scalar(a: &ScalarField) -> Result<VectorField> {
    if a.grid.dim() != 2 {
        return Err(Error::domain("curl of a scalar potential needs a 2D grid"));
    }
    if a.bc != Bc::Dirichlet {
        return Err(Error::domain("curl needs a Dirichlet potential, got a Neumann field"));
    }
    let dy = diff_axis(&a.grid, &a.values, 1, false);
    let dx = diff_axis(&a.grid, &a.values, 0, false);
    Ok(VectorField {
        grid: a.grid,
        comps: vec![dy, dx.into_iter().map(|v| -v).collect()],
        bc: Bc::Neumann,
    })
}

/// Scalar curl of a planar vector field, `d_x v_2 - d_y v_1`.
pub fn curl_vector(v: &VectorField) -> Result<ScalarField> {
    if v.grid.dim() != 2 {
        return Err(Error::domain("curl of a vector field needs a 2D grid"));
    }
    let a = diff_axis(&v.grid, &v.comps[1], 0, false);
    let b = diff_axis(&v.grid, &v.comps[0], 1, false);
    Ok(ScalarField {
        grid: v.grid,
        values: a.iter().zip(&b).map(|(x, y)| x - y).collect(),
        bc: Bc::Neumann,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn trapezoid_examples() {
        let g = Grid::line(8, 2.0).unwrap();
        assert!((integrate(&ScalarField::from_fn(g, Bc::Neumann, |_| 1.0)) - 2.0).abs() < 1e-15);
        let g = Grid::square(8, 1.0).unwrap();
        let f = ScalarField::from_fn(g, Bc::Neumann, |x| x[0] + 2.0 * x[1]);
        assert!((integrate(&f) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::line(4, 1.0).is_err());
        assert!(Grid::line(16, 0.0).is_err());
        assert!(Grid::new(&[8, 8, 8], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn laplacian_of_cosine_is_second_order() {
        let mut errs = vec![];
        for n in [16, 32, 64] {
            let g = Grid::line(n, 1.0).unwrap();
            let f = ScalarField::from_fn(g, Bc::Neumann, |x| (PI * x[0]).cos());
            let lap = laplacian(&f);
            let e = (0..g.len())
                .map(|k| (lap.values[k] + PI * PI * (PI * g.coord(k)[0]).cos()).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() > 1.9);
        }
    }

    #[test]
    fn gradient_orders() {
        for bc in [Bc::Neumann, Bc::Dirichlet] {
            let mut errs = vec![];
            for n in [16, 32, 64] {
                let g = Grid::square(n, 1.0).unwrap();
                let f = |x: [f64; 2]| match bc {
                    Bc::Neumann => (PI * x[0]).cos() * (2.0 * PI * x[1]).cos(),
                    Bc::Dirichlet => (PI * x[0]).sin() * (PI * x[1]).sin(),
                };
                let df = |x: [f64; 2]| match bc {
                    Bc::Neumann => -PI * (PI * x[0]).sin() * (2.0 * PI * x[1]).cos(),
                    Bc::Dirichlet => PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
                };
                let gr = gradient(&ScalarField::from_fn(g, bc, f));
                let e = (0..g.len())
                    .map(|k| (gr.comps[0][k] - df(g.coord(k))).abs())
                    .fold(0.0, f64::max);
                errs.push(e);
            }
            for w in errs.windows(2) {
                assert!((w[0] / w[1]).log2() > 1.9, "{bc:?}: {errs:?}");
            }
        }
    }

    #[test]
    fn summation_by_parts() {
        let g = Grid::square(24, 1.3).unwrap();
        let f = ScalarField::from_fn(g, Bc::Neumann, |x| (x[0] * 3.1).sin() + x[1] * x[1]);
        let v = VectorField::from_fn(g, Bc::Dirichlet, |x| [(x[0] + x[1]).exp(), (2.0 * x[0]).cos() * x[1]]);
        let lhs = vector_inner_product(&gradient(&f), &v).unwrap() + inner_product(&f, &divergence(&v)).unwrap();
        assert!(lhs.abs() < 1e-10, "{lhs}");
        let f = ScalarField::from_fn(g, Bc::Dirichlet, |x| (x[0] * x[1]).exp());
        let v = VectorField::from_fn(g, Bc::Neumann, |x| [x[0].cos(), x[1] + 1.0]);
        let lhs = vector_inner_product(&gradient(&f), &v).unwrap() + inner_product(&f, &divergence(&v)).unwrap();
        assert!(lhs.abs() < 1e-10, "{lhs}");
    }

    #[test]
    fn divergence_of_curl_vanishes() {
        let g = Grid::new(&[20, 28], &[1.0, 1.5]).unwrap();
        let a = ScalarField::from_fn(g, Bc::Dirichlet, |x| (x[0] * 5.0).sin() * (x[1] * 3.0).cos() + x[0] * x[1]);
        let h = curl_scalar(&a).unwrap();
        assert!(divergence(&h).max_abs() < 1e-10);
        let n = ScalarField::from_fn(g, Bc::Neumann, |x| x[0]);
        assert!(curl_scalar(&n).is_err());
        assert!(curl_scalar(&ScalarField::zeros(Grid::line(8, 1.0).unwrap(), Bc::Dirichlet)).is_err());
    }
}
