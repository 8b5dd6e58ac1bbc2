use serde::{Deserialize, Serialize};

use crate::closure::{ClosureParams, RegularizationParams};
use crate::error::{Error, Result};
use crate::grid::{Bc, Grid, ScalarField, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid: Grid,
    pub closure: ClosureParams,
    pub reg: RegularizationParams,
    /// Artificial density diffusion.
    pub epsilon: f64,
    pub mu: f64,
    pub lambda: f64,
    /// Magnetic resistivity.
    pub nu: f64,
    /// Number of Galerkin modes per velocity component.
    pub modes: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Weight of the `L^2` density term in the regularized energy.
    pub sigma: f64,
}

impl SimConfig {
    /// Defaults on `[0, 1]`: `mu = 1`, `lambda = 0`, `nu = 1`, `gamma = 2`,
    /// 16 modes, 128 cells and `B = ceil(A) + 2`.
    pub fn default_1d() -> Self {
        let closure = ClosureParams {
            gamma_plus: 2.0,
            gamma_minus: 2.0,
            law: crate::closure::PressureLaw::Implicit,
            c0: 2.0,
        };
        let b = closure.constants().a_exponent.ceil() + 2.0;
        Self {
            grid: Grid::line(128, 1.0).expect("static grid"),
            closure,
            reg: RegularizationParams {
                delta: 1e-3,
                b,
                beta: b,
            },
            epsilon: 1e-2,
            mu: 1.0,
            lambda: 0.0,
            nu: 1.0,
            modes: 16,
            dt: 1e-3,
            t_end: 0.1,
            sigma: 1.0,
        }
    }

    pub fn steps(&self) -> u64 {
        ((self.t_end / self.dt).round() as u64).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        self.closure.validate()?;
        if !(self.mu > 0.0) {
            return Err(Error::hypothesis("μ > 0", format!("mu = {}", self.mu)));
        }
        if !(2.0 * self.mu + 3.0 * self.lambda >= 0.0) {
            return Err(Error::hypothesis(
                "2μ+3λ ≥ 0",
                format!("mu = {}, lambda = {}", self.mu, self.lambda),
            ));
        }
        if !(self.nu > 0.0) {
            return Err(Error::hypothesis("ν > 0", format!("nu = {}", self.nu)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::hypothesis("ε ≥ 0", format!("epsilon = {}", self.epsilon)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::hypothesis("dt > 0", format!("dt = {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::hypothesis("t_end > 0", format!("t_end = {}", self.t_end)));
        }
        if !(self.reg.delta >= 0.0 && self.reg.delta.is_finite()) {
            return Err(Error::hypothesis("δ > 0", format!("delta = {}", self.reg.delta)));
        }
        let a = self.closure.constants().a_exponent;
        if self.reg.delta > 0.0 && self.reg.b < a + 2.0 {
            return Err(Error::hypothesis("B ≥ A+2", format!("B = {}, A = {a}", self.reg.b)));
        }
        if self.reg.delta > 0.0 && self.reg.beta <= 1.0 {
            return Err(Error::hypothesis("β > 1", format!("beta = {}", self.reg.beta)));
        }
        if !(self.sigma >= 0.0) {
            return Err(Error::hypothesis("Σ ≥ 0", format!("sigma = {}", self.sigma)));
        }
        let limit = (self.grid.cells(0) - 1) * if self.grid.dim() == 2 { self.grid.cells(1) - 1 } else { 1 };
        if self.modes == 0 || self.modes > limit {
            return Err(Error::domain(format!("modes = {} outside 1..={limit}", self.modes)));
        }
        Ok(())
    }
}

/// Solution at one time level. The magnetic unknown is the transverse field
/// `H_y` in 1D and the potential `A_z` (with `H = curl A_z`) in 2D; both vanish
/// on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub time: f64,
    pub step: u64,
    pub rho: ScalarField,
    pub n: ScalarField,
    /// Galerkin coefficients, component after component.
    pub u: Vec<f64>,
    pub magnetic: ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub rho0: ScalarField,
    pub n0: ScalarField,
    pub u0: VectorField,
    /// Transverse field (1D) or potential `A_z` (2D).
    pub magnetic0: ScalarField,
}

/// Built-in initial profiles; `x` is the first coordinate scaled to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    /// Constant densities at rest.
    Uniform { rho: f64, n: f64 },
    /// `n0 = base (1 + 0.25 cos(pi x))`, `rho0 = ratio (1 + amplitude sin(2 pi x)) n0`,
    /// `u0 = velocity sin(pi x)`, field `field sin(pi x)` (2D: products in `x` and `y`).
    ProportionalPerturbed {
        base: f64,
        ratio: f64,
        amplitude: f64,
        velocity: f64,
        field: f64,
    },
    /// `n0 = base (1 + amplitude cos(pi x))`, `rho0 = ratio n0`, with the same
    /// velocity and field bumps as `ProportionalPerturbed`.
    CosineBump {
        base: f64,
        ratio: f64,
        amplitude: f64,
        velocity: f64,
        field: f64,
    },
    /// Densities `base cos^2(pi x)` on `x < 1/2` and vacuum beyond, with `rho0 = ratio n0`.
    VacuumRegion { base: f64, ratio: f64, velocity: f64 },
}

impl InitialData {
    pub fn from_profile(grid: Grid, profile: &Profile) -> Self {
        let pi = std::f64::consts::PI;
        let lx = grid.extent(0);
        let ly = grid.extent(1);
        let two_d = grid.dim() == 2;
        let bump = move |x: [f64; 2]| {
            let s = (pi * x[0] / lx).sin();
            if two_d {
                s * (pi * x[1] / ly).sin()
            } else {
                s
            }
        };
        match *profile {
            Profile::Uniform { rho, n } => Self {
                rho0: ScalarField::from_fn(grid, Bc::Neumann, |_| rho),
                n0: ScalarField::from_fn(grid, Bc::Neumann, |_| n),
                u0: VectorField::zeros(grid, Bc::Dirichlet),
                magnetic0: ScalarField::zeros(grid, Bc::Dirichlet),
            },
            Profile::ProportionalPerturbed {
                base,
                ratio,
                amplitude,
                velocity,
                field,
            } => {
                let n_of = move |x: [f64; 2]| base * (1.0 + 0.25 * (pi * x[0] / lx).cos());
                let rho_of = move |x: [f64; 2]| ratio * (1.0 + amplitude * (2.0 * pi * x[0] / lx).sin()) * n_of(x);
                let scale = if two_d { 1.0 / pi } else { 1.0 };
                Self {
                    rho0: ScalarField::from_fn(grid, Bc::Neumann, rho_of),
                    n0: ScalarField::from_fn(grid, Bc::Neumann, n_of),
                    u0: VectorField::from_fn(grid, Bc::Dirichlet, |x| [velocity * bump(x), 0.0]),
                    magnetic0: ScalarField::from_fn(grid, Bc::Dirichlet, |x| field * scale * bump(x)),
                }
            }
            Profile::CosineBump {
                base,
                ratio,
                amplitude,
                velocity,
                field,
            } => {
                let n_of = move |x: [f64; 2]| base * (1.0 + amplitude * (pi * x[0] / lx).cos());
                let scale = if two_d { 1.0 / pi } else { 1.0 };
                Self {
                    rho0: ScalarField::from_fn(grid, Bc::Neumann, |x| ratio * n_of(x)),
                    n0: ScalarField::from_fn(grid, Bc::Neumann, n_of),
                    u0: VectorField::from_fn(grid, Bc::Dirichlet, |x| [velocity * bump(x), 0.0]),
                    magnetic0: ScalarField::from_fn(grid, Bc::Dirichlet, |x| field * scale * bump(x)),
                }
            }
            Profile::VacuumRegion { base, ratio, velocity } => {
                let n_of = move |x: [f64; 2]| {
                    let t = x[0] / lx;
                    if t < 0.5 {
                        base * (pi * t).cos().powi(2)
                    } else {
                        0.0
                    }
                };
                Self {
                    rho0: ScalarField::from_fn(grid, Bc::Neumann, |x| ratio * n_of(x)),
                    n0: ScalarField::from_fn(grid, Bc::Neumann, n_of),
                    u0: VectorField::from_fn(grid, Bc::Dirichlet, |x| [velocity * bump(x), 0.0]),
                    magnetic0: ScalarField::zeros(grid, Bc::Dirichlet),
                }
            }
        }
    }

    pub fn grid(&self) -> Grid {
        self.rho0.grid
    }

    /// Smallest `c0 >= 1` with `n0 / c0 <= rho0 <= c0 n0`, or `None` if a node has
    /// exactly one vanishing density.
    pub fn ratio_bound(&self) -> Option<f64> {
        let mut c: f64 = 1.0;
        for (&r, &n) in self.rho0.values.iter().zip(&self.n0.values) {
            match (r > 0.0, n > 0.0) {
                (true, true) => c = c.max(r / n).max(n / r),
                (false, false) => {}
                _ => return None,
            }
        }
        Some(c)
    }

    /// Checks non-negativity and the ratio condition against `c0`.
    pub fn check_ratio(&self, c0: f64) -> Result<()> {
        for (k, (&r, &n)) in self.rho0.values.iter().zip(&self.n0.values).enumerate() {
            if !(r >= 0.0 && n >= 0.0) {
                return Err(Error::domain(format!("negative initial density at node {k}")));
            }
            let tol = 1e-12 * (1.0 + r + n);
            if n > c0 * r + tol || r > c0 * n + tol {
                return Err(Error::hypothesis(
                    "c₀⁻¹n₀ ≤ ρ₀ ≤ c₀n₀",
                    format!("node {k}: rho0 = {r}, n0 = {n}, c0 = {c0}"),
                ));
            }
        }
        Ok(())
    }
}
