//! Built-in manufactured solutions in 1D and the convergence driver.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::closure::{self, ClosureParams, RegularizationParams};
use crate::error::{Error, Result};
use crate::grid::{Bc, Grid, ScalarField, VectorField};
use crate::solver::{Forcing, InitialData, SimConfig, SimState, Solver};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManufacturedCase {
    /// Heat solution for both densities under the continuity step alone (`u = 0`, `eps = 0.1`).
    Diffusion1d,
    /// Velocity `sin(pi x) sin(t)` on a uniform static mixture.
    Momentum1d,
    /// Uniform, growing densities with mass sources, two velocity modes and a
    /// decaying two-mode field: every operator active, all second order.
    Coupled1d,
    /// As `Coupled1d` with spatially varying densities; upwinding caps the order near 1.
    Transport1d,
    /// Self-convergence in `dt` of `Coupled1d` on a fixed grid.
    Temporal1d,
}

impl ManufacturedCase {
    pub const ALL: [ManufacturedCase; 5] = [
        ManufacturedCase::Diffusion1d,
        ManufacturedCase::Momentum1d,
        ManufacturedCase::Coupled1d,
        ManufacturedCase::Transport1d,
        ManufacturedCase::Temporal1d,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            ManufacturedCase::Diffusion1d => "diffusion-1d",
            ManufacturedCase::Momentum1d => "momentum-1d",
            ManufacturedCase::Coupled1d => "coupled-1d",
            ManufacturedCase::Transport1d => "transport-1d",
            ManufacturedCase::Temporal1d => "temporal-1d",
        }
    }

    /// Order the case is expected to reach.
    pub fn expected_order(&self) -> f64 {
        match self {
            ManufacturedCase::Transport1d => 0.9,
            ManufacturedCase::Temporal1d => 0.9,
            _ => 1.8,
        }
    }
}

impl fmt::Display for ManufacturedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ManufacturedCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ManufacturedCase::ALL
            .into_iter()
            .find(|c| c.id() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = ManufacturedCase::ALL.iter().map(|c| c.id()).collect();
                Error::domain(format!("unknown manufactured case `{s}` (known: {})", known.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub dt: f64,
    pub steps: u64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub case: ManufacturedCase,
    /// `"space"` (with `dt ~ h^2`) or `"time"`.
    pub refinement: String,
    pub rows: Vec<ConvergenceRow>,
    /// `log2(e_i / e_{i+1})` for consecutive rows.
    pub orders: Vec<f64>,
    /// Least-squares slope of `log e` against `log h` (or `log dt`).
    pub observed_order: f64,
    pub expected_order: f64,
}

impl ConvergenceTable {
    pub fn passes(&self) -> bool {
        self.observed_order >= self.expected_order
    }

    pub fn csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
        w.write_record(["case", "cells", "dt", "steps", "error", "order"]).map_err(err)?;
        for (i, r) in self.rows.iter().enumerate() {
            let order = if i == 0 { String::new() } else { self.orders[i - 1].to_string() };
            w.write_record([
                self.case.id().to_string(),
                r.cells.to_string(),
                r.dt.to_string(),
                r.steps.to_string(),
                r.error.to_string(),
                order,
            ])
            .map_err(err)?;
        }
        w.write_record([
            self.case.id().to_string(),
            "observed".into(),
            String::new(),
            String::new(),
            String::new(),
            self.observed_order.to_string(),
        ])
        .map_err(err)?;
        w.into_inner().map_err(|e| Error::Numeric(format!("csv: {e}")))
    }
}

/// Closed-form solution and the sources that make it exact.
struct Exact {
    case: ManufacturedCase,
    eps: f64,
    visc: f64,
    nu: f64,
    kappa: f64,
    closure: ClosureParams,
    reg: RegularizationParams,
}

impl Exact {
    fn new(case: ManufacturedCase, cfg: &SimConfig) -> Self {
        Self {
            case,
            eps: cfg.epsilon,
            visc: 2.0 * cfg.mu + cfg.lambda,
            nu: cfg.nu,
            kappa: if case == ManufacturedCase::Transport1d { 0.3 } else { 0.0 },
            closure: cfg.closure,
            reg: cfg.reg,
        }
    }

    fn has_field(&self) -> bool {
        matches!(
            self.case,
            ManufacturedCase::Coupled1d | ManufacturedCase::Transport1d | ManufacturedCase::Temporal1d
        )
    }

    /// `(rho, rho_t, rho_x, rho_xx)`; `n = rho / 2`.
    fn rho(&self, t: f64, x: f64) -> [f64; 4] {
        match self.case {
            ManufacturedCase::Diffusion1d => {
                let d = (-self.eps * PI * PI * t).exp();
                let c = (PI * x).cos();
                [
                    1.0 + 0.1 * d * c,
                    -self.eps * PI * PI * 0.1 * d * c,
                    -0.1 * d * PI * (PI * x).sin(),
                    -0.1 * d * PI * PI * c,
                ]
            }
            ManufacturedCase::Momentum1d => [1.0, 0.0, 0.0, 0.0],
            _ => {
                let bar = 1.0 + 0.5 * t;
                let shape = 1.0 + self.kappa * (PI * x).cos();
                [
                    bar * shape,
                    0.5 * shape,
                    -bar * self.kappa * PI * (PI * x).sin(),
                    -bar * self.kappa * PI * PI * (PI * x).cos(),
                ]
            }
        }
    }

    /// `(u, u_t, u_x, u_xx)`.
    fn u(&self, t: f64, x: f64) -> [f64; 4] {
        match self.case {
            ManufacturedCase::Diffusion1d => [0.0; 4],
            ManufacturedCase::Momentum1d => {
                let s = (PI * x).sin();
                [t.sin() * s, t.cos() * s, t.sin() * PI * (PI * x).cos(), -t.sin() * PI * PI * s]
            }
            _ => {
                let a = 1.0 + t.sin();
                let da = t.cos();
                let f = (PI * x).sin() + 0.5 * (2.0 * PI * x).sin();
                let fx = PI * (PI * x).cos() + PI * (2.0 * PI * x).cos();
                let fxx = -PI * PI * (PI * x).sin() - 2.0 * PI * PI * (2.0 * PI * x).sin();
                [a * f, da * f, a * fx, a * fxx]
            }
        }
    }

    /// `(H, H_t, H_x, H_xx)`.
    fn field(&self, t: f64, x: f64) -> [f64; 4] {
        if !self.has_field() {
            return [0.0; 4];
        }
        let e = (-t).exp();
        let f = (PI * x).sin() + 0.5 * (3.0 * PI * x).sin();
        let fx = PI * (PI * x).cos() + 1.5 * PI * (3.0 * PI * x).cos();
        let fxx = -PI * PI * (PI * x).sin() - 4.5 * PI * PI * (3.0 * PI * x).sin();
        [e * f, -e * f, e * fx, e * fxx]
    }

    fn pressure_x(&self, t: f64, x: f64) -> f64 {
        if self.kappa == 0.0 {
            return 0.0;
        }
        let h = 1e-5;
        let pi_at = |x: f64| {
            let r = self.rho(t, x)[0];
            closure::artificial_pressure(r, 0.5 * r, &self.closure, &self.reg).unwrap_or(f64::NAN)
        };
        (pi_at(x + h) - pi_at(x - h)) / (2.0 * h)
    }

    fn initial(&self, grid: Grid) -> InitialData {
        InitialData {
            rho0: ScalarField::from_fn(grid, Bc::Neumann, |x| self.rho(0.0, x[0])[0]),
            n0: ScalarField::from_fn(grid, Bc::Neumann, |x| 0.5 * self.rho(0.0, x[0])[0]),
            u0: VectorField::from_fn(grid, Bc::Dirichlet, |x| [self.u(0.0, x[0])[0], 0.0]),
            magnetic0: ScalarField::from_fn(grid, Bc::Dirichlet, |x| self.field(0.0, x[0])[0]),
        }
    }

    fn error(&self, solver: &Solver, s: &SimState) -> f64 {
        let grid = solver.grid();
        let u = solver.velocity_nodes(s);
        let mut e = [0.0; 4];
        for k in 0..grid.len() {
            let x = grid.coord(k)[0];
            let w = grid.weight(k);
            let r = self.rho(s.time, x)[0];
            e[0] += w * (s.rho.values[k] - r).powi(2);
            e[1] += w * (s.n.values[k] - 0.5 * r).powi(2);
            e[2] += w * (u[0][k] - self.u(s.time, x)[0]).powi(2);
            e[3] += w * (s.magnetic.values[k] - self.field(s.time, x)[0]).powi(2);
        }
        e.iter().map(|v| v.sqrt()).sum()
    }
}

impl Forcing for Exact {
    fn density_source(&self, t: f64, x: [f64; 2]) -> (f64, f64) {
        let [r, rt, rx, rxx] = self.rho(t, x[0]);
        let [u, _, ux, _] = self.u(t, x[0]);
        let s = rt + rx * u + r * ux - self.eps * rxx;
        (s, 0.5 * s)
    }

    fn momentum_source(&self, t: f64, x: [f64; 2]) -> [f64; 2] {
        let [r, _, rx, rxx] = self.rho(t, x[0]);
        let (big_r, big_rx, big_rxx) = (1.5 * r, 1.5 * rx, 1.5 * rxx);
        let [u, ut, ux, uxx] = self.u(t, x[0]);
        let [h, _, hx, _] = self.field(t, x[0]);
        let f = big_r * (ut + u * ux) + self.pressure_x(t, x[0]) + self.eps * (ux * big_rx + u * big_rxx)
            - self.visc * uxx
            + h * hx;
        [f, 0.0]
    }

    fn magnetic_source(&self, t: f64, x: [f64; 2]) -> f64 {
        let [h, ht, hx, hxx] = self.field(t, x[0]);
        let [u, _, ux, _] = self.u(t, x[0]);
        ht + ux * h + u * hx - self.nu * hxx
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    num / den
}

/// Grid levels and final time of the spatial studies.
pub const LEVELS: [usize; 4] = [16, 32, 64, 128];
const T_END: f64 = 0.05;
const DT_FACTOR: f64 = 0.5;

fn case_config(base: &SimConfig, case: ManufacturedCase, cells: usize, dt: f64) -> Result<SimConfig> {
    let mut cfg = *base;
    cfg.grid = Grid::line(cells, 1.0)?;
    cfg.modes = base.modes.min(cells - 1).max(3);
    cfg.dt = dt;
    cfg.t_end = T_END;
    cfg.closure.c0 = cfg.closure.c0.max(2.0);
    if case == ManufacturedCase::Diffusion1d {
        cfg.epsilon = 0.1;
    }
    Ok(cfg)
}

fn run_case(base: &SimConfig, case: ManufacturedCase, cells: usize, dt: f64) -> Result<(Solver, SimState)> {
    let cfg = case_config(base, case, cells, dt)?;
    let exact = Exact::new(case, &cfg);
    let solver = Solver::new(&cfg)?;
    let mut s = solver.initial_state(&exact.initial(cfg.grid))?;
    if case == ManufacturedCase::Diffusion1d {
        for _ in 0..cfg.steps() {
            let (rho, n) = solver.step_continuity(&s, dt)?;
            s.rho = rho;
            s.n = n;
            s.step += 1;
            s.time = s.step as f64 * dt;
        }
        return Ok((solver, s));
    }
    for _ in 0..cfg.steps() {
        let out = solver.step_forced(&s, dt, &exact)?;
        s = out.state;
        s.time = s.step as f64 * dt;
    }
    Ok((solver, s))
}

/// Runs `case` over the built-in refinement levels, taking physical
/// parameters from `config`; grid, `dt`, horizon and mode count are overridden.
pub fn verify_manufactured(config: &SimConfig, case: ManufacturedCase) -> Result<ConvergenceTable> {
    let mut rows = Vec::new();
    let (refinement, xs) = if case == ManufacturedCase::Temporal1d {
        let cells = 64;
        let dts: Vec<f64> = (0..5).map(|i| 2e-3 / 2f64.powi(i)).collect();
        let (ref_solver, reference) = run_case(config, case, cells, dts[dts.len() - 1])?;
        let ref_u = ref_solver.velocity_nodes(&reference);
        let grid = ref_solver.grid();
        for &dt in &dts[..dts.len() - 1] {
            let (solver, s) = run_case(config, case, cells, dt)?;
            let u = solver.velocity_nodes(&s);
            let mut e = [0.0; 4];
            for k in 0..grid.len() {
                let w = grid.weight(k);
                e[0] += w * (s.rho.values[k] - reference.rho.values[k]).powi(2);
                e[1] += w * (s.n.values[k] - reference.n.values[k]).powi(2);
                e[2] += w * (u[0][k] - ref_u[0][k]).powi(2);
                e[3] += w * (s.magnetic.values[k] - reference.magnetic.values[k]).powi(2);
            }
            rows.push(ConvergenceRow {
                cells,
                dt,
                steps: s.step,
                error: e.iter().map(|v| v.sqrt()).sum(),
            });
        }
        ("time", rows.iter().map(|r| r.dt).collect::<Vec<_>>())
    } else {
        for &cells in &LEVELS {
            let h = 1.0 / cells as f64;
            let dt = DT_FACTOR * h * h;
            let (solver, s) = run_case(config, case, cells, dt)?;
            let exact = Exact::new(case, solver.config());
            rows.push(ConvergenceRow {
                cells,
                dt,
                steps: s.step,
                error: exact.error(&solver, &s),
            });
        }
        ("space", rows.iter().map(|r| 1.0 / r.cells as f64).collect::<Vec<_>>())
    };
    let orders = rows.windows(2).map(|w| (w[0].error / w[1].error).log2()).collect();
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.error.ln()).collect();
    Ok(ConvergenceTable {
        case,
        refinement: refinement.to_string(),
        rows,
        orders,
        observed_order: slope(&lx, &ly),
        expected_order: case.expected_order(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_case_meets_its_expected_order() {
        let cfg = SimConfig::default_1d();
        for case in ManufacturedCase::ALL {
            let t = verify_manufactured(&cfg, case).unwrap();
            assert!(t.rows.len() >= 3);
            assert!(t.rows.windows(2).all(|w| w[1].error < w[0].error), "{case}: {:?}", t.rows);
            assert!(t.passes(), "{case}: observed {} < {}", t.observed_order, t.expected_order);
        }
    }

    #[test]
    fn unknown_case_is_rejected() {
        assert!("vortex-2d".parse::<ManufacturedCase>().is_err());
        assert_eq!("coupled-1d".parse::<ManufacturedCase>().unwrap(), ManufacturedCase::Coupled1d);
    }
}
