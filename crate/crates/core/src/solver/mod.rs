//! Fully discrete scheme: upwind continuity with implicit artificial diffusion,
//! Galerkin momentum with implicit viscosity, implicit-resistive induction.
//!
//! One step is Lie-split as continuity, induction, then momentum; the
//! velocity used by the transport steps is the old one.

mod mollify;
mod ops;
mod state;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::basis::GalerkinBasis;
use crate::closure::{self, ClosureParams, RegularizationParams};
use crate::diagnostics::EnergyLedger;
use crate::error::{Error, Result};
use crate::grid::{self, Bc, Grid, ScalarField};

pub use mollify::mollify_initial_data;
pub(crate) use ops::{dirichlet_integral, edges, stiffness_apply, Diffusion, Edge};
pub use state::{InitialData, Profile, SimConfig, SimState};

/// Source terms added to the right-hand sides, used for manufactured solutions.
/// `t` is the new time level of the step.
pub trait Forcing: Sync {
    /// `(S_rho, S_n)` added to the continuity equations.
    fn density_source(&self, _t: f64, _x: [f64; 2]) -> (f64, f64) {
        (0.0, 0.0)
    }
    /// Force density added to the momentum equation.
    fn momentum_source(&self, _t: f64, _x: [f64; 2]) -> [f64; 2] {
        [0.0, 0.0]
    }
    /// Source for the magnetic unknown.
    fn magnetic_source(&self, _t: f64, _x: [f64; 2]) -> f64 {
        0.0
    }
    /// Whether any hook is non-trivial; lets the solver skip evaluation.
    fn active(&self) -> bool {
        true
    }
}

pub struct NoForcing;

impl Forcing for NoForcing {
    fn active(&self) -> bool {
        false
    }
}

/// Upwind data of one edge from the continuity step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct EdgeFlux {
    pub velocity: f64,
    pub rho_up: f64,
    pub n_up: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct NodePotentials {
    pub h: Vec<f64>,
    pub h_delta: Vec<f64>,
    pub mu_rho: Vec<f64>,
    pub mu_n: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: SimState,
    pub ledger: EnergyLedger,
}

/// Snapshots at the requested stride and one ledger row per time level.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub snapshots: Vec<SimState>,
    pub ledger: Vec<EnergyLedger>,
}

/// Precomputed operators for one configuration.
#[derive(Debug, Clone)]
pub struct Solver {
    config: SimConfig,
    basis: GalerkinBasis,
    edges: Vec<Edge>,
    weights: Vec<f64>,
    viscous: DMatrix<f64>,
    density_diffusion: Option<Diffusion>,
    magnetic_diffusion: Diffusion,
}

impl Solver {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid;
        let basis = GalerkinBasis::new(grid, config.modes)?;
        let edges = edges(&grid);
        let viscous = viscous_matrix(&basis, config.mu, config.lambda);
        let density_diffusion = if config.epsilon > 0.0 {
            Some(Diffusion::new(&grid, &edges, Bc::Neumann, config.dt * config.epsilon)?)
        } else {
            None
        };
        let magnetic_diffusion = Diffusion::new(&grid, &edges, Bc::Dirichlet, config.dt * config.nu)?;
        Ok(Self {
            config: *config,
            weights: grid.weights(),
            basis,
            edges,
            viscous,
            density_diffusion,
            magnetic_diffusion,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn basis(&self) -> &GalerkinBasis {
        &self.basis
    }

    pub fn grid(&self) -> Grid {
        self.config.grid
    }

    /// Projects the initial velocity and checks the ratio condition.
    pub fn initial_state(&self, data: &InitialData) -> Result<SimState> {
        let grid = self.grid();
        if data.grid() != grid || data.u0.grid != grid || data.magnetic0.grid != grid || data.n0.grid != grid {
            return Err(Error::domain("initial data and configuration use different grids"));
        }
        data.check_ratio(self.config.closure.c0)?;
        let mut magnetic = data.magnetic0.clone();
        magnetic.bc = Bc::Dirichlet;
        for k in 0..grid.len() {
            if grid.is_boundary(k) {
                magnetic.values[k] = 0.0;
            }
        }
        let mut rho = data.rho0.clone();
        let mut n = data.n0.clone();
        rho.bc = Bc::Neumann;
        n.bc = Bc::Neumann;
        Ok(SimState {
            time: 0.0,
            step: 0,
            rho,
            n,
            u: self.basis.project_vector(&data.u0)?,
            magnetic,
        })
    }

    /// Nodal velocity, one vector per component.
    pub fn velocity_nodes(&self, state: &SimState) -> Vec<Vec<f64>> {
        state.u.chunks(self.basis.len()).map(|c| self.basis.synthesize(c)).collect()
    }

    fn diffusion_for(&self, cached: Option<&Diffusion>, bc: Bc, tau: f64) -> Result<Diffusion> {
        match cached {
            Some(d) if d.tau == tau => Ok(d.clone()),
            _ => Diffusion::new(&self.config.grid, &self.edges, bc, tau),
        }
    }

    /// Advances both densities by one step with velocity `state.u`.
    pub fn step_continuity(&self, state: &SimState, dt: f64) -> Result<(ScalarField, ScalarField)> {
        let u = self.velocity_nodes(state);
        let (rho, n, _) = self.continuity(state, &u, dt, &NoForcing)?;
        Ok((self.scalar(rho, Bc::Neumann), self.scalar(n, Bc::Neumann)))
    }

    /// Advances the magnetic unknown by one step with velocity `state.u`.
    pub fn step_induction(&self, state: &SimState, dt: f64) -> Result<ScalarField> {
        let u = self.velocity_nodes(state);
        let m = self.induction(state, &u, dt, &NoForcing)?;
        Ok(self.scalar(m, Bc::Dirichlet))
    }

    /// Advances the velocity given the already updated densities and field.
    pub fn step_momentum(
        &self,
        state: &SimState,
        rho_new: &ScalarField,
        n_new: &ScalarField,
        magnetic_new: &ScalarField,
        dt: f64,
    ) -> Result<Vec<f64>> {
        let u = self.velocity_nodes(state);
        let fluxes = self.upwind_fluxes(&state.rho.values, &state.n.values, &u);
        let pots = self.node_potentials(&rho_new.values, &n_new.values)?;
        let (c, _) = self.momentum(
            state,
            &u,
            &rho_new.values,
            &n_new.values,
            &magnetic_new.values,
            &fluxes,
            &pots,
            dt,
            &NoForcing,
        )?;
        Ok(c)
    }

    pub fn step(&self, state: &SimState) -> Result<StepOutcome> {
        self.step_forced(state, self.config.dt, &NoForcing)
    }

    pub fn step_forced(&self, state: &SimState, dt: f64, forcing: &dyn Forcing) -> Result<StepOutcome> {
        let u = self.velocity_nodes(state);
        let (rho, n, fluxes) = self.continuity(state, &u, dt, forcing)?;
        let magnetic = self.induction(state, &u, dt, forcing)?;
        let pots = self.node_potentials(&rho, &n)?;
        let (c, regularized) = self.momentum(state, &u, &rho, &n, &magnetic, &fluxes, &pots, dt, forcing)?;
        let next = SimState {
            time: state.time + dt,
            step: state.step + 1,
            rho: self.scalar(rho, Bc::Neumann),
            n: self.scalar(n, Bc::Neumann),
            u: c,
            magnetic: self.scalar(magnetic, Bc::Dirichlet),
        };
        let mut ledger = self.ledger_with(&next, &pots);
        ledger.mass_regularized = regularized;
        Ok(StepOutcome { state: next, ledger })
    }

    /// Runs from `state` until `end_step`, keeping every `stride`-th state
    /// (and the last one). The ledger has one row per time level including the first.
    pub fn run_until(
        &self,
        state: SimState,
        end_step: u64,
        stride: u64,
        forcing: &dyn Forcing,
    ) -> Result<Trajectory> {
        let stride = stride.max(1);
        let mut traj = Trajectory {
            ledger: vec![self.ledger(&state)?],
            snapshots: vec![state.clone()],
        };
        let mut cur = state;
        while cur.step < end_step {
            let out = self.step_forced(&cur, self.config.dt, forcing)?;
            cur = out.state;
            cur.time = cur.step as f64 * self.config.dt;
            traj.ledger.push(EnergyLedger { time: cur.time, ..out.ledger });
            if cur.step % stride == 0 || cur.step == end_step {
                traj.snapshots.push(cur.clone());
            }
        }
        Ok(traj)
    }

    /// Runs to `t_end` with about `snapshots` evenly spaced snapshots.
    pub fn run(&self, state: SimState, snapshots: usize, forcing: &dyn Forcing) -> Result<Trajectory> {
        let steps = self.config.steps();
        let stride = (steps / snapshots.max(1) as u64).max(1);
        self.run_until(state, steps, stride, forcing)
    }

    fn scalar(&self, values: Vec<f64>, bc: Bc) -> ScalarField {
        ScalarField {
            grid: self.config.grid,
            values,
            bc,
        }
    }

    pub(crate) fn upwind_fluxes(&self, rho: &[f64], n: &[f64], u: &[Vec<f64>]) -> Vec<EdgeFlux> {
        self.edges
            .iter()
            .map(|e| {
                let v = 0.5 * (u[e.axis][e.left] + u[e.axis][e.right]);
                let up = if v >= 0.0 { e.left } else { e.right };
                EdgeFlux {
                    velocity: v,
                    rho_up: rho[up],
                    n_up: n[up],
                }
            })
            .collect()
    }

    fn continuity(
        &self,
        state: &SimState,
        u: &[Vec<f64>],
        dt: f64,
        forcing: &dyn Forcing,
    ) -> Result<(Vec<f64>, Vec<f64>, Vec<EdgeFlux>)> {
        let grid = self.config.grid;
        let fluxes = self.upwind_fluxes(&state.rho.values, &state.n.values, u);
        let mut outflow = vec![0.0; grid.len()];
        for (e, f) in self.edges.iter().zip(&fluxes) {
            if f.velocity > 0.0 {
                outflow[e.left] += f.velocity * e.face;
            } else if f.velocity < 0.0 {
                outflow[e.right] -= f.velocity * e.face;
            }
        }
        let mut limit = f64::INFINITY;
        for (o, w) in outflow.iter().zip(&self.weights) {
            if *o > 0.0 {
                limit = limit.min(w / o);
            }
        }
        if dt > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl {
                dt,
                suggested: 0.9 * limit,
            });
        }
        let mut div_rho = vec![0.0; grid.len()];
        let mut div_n = vec![0.0; grid.len()];
        for (e, f) in self.edges.iter().zip(&fluxes) {
            let fr = f.velocity * e.face * f.rho_up;
            let fn_ = f.velocity * e.face * f.n_up;
            div_rho[e.left] += fr;
            div_rho[e.right] -= fr;
            div_n[e.left] += fn_;
            div_n[e.right] -= fn_;
        }
        let t_new = state.time + dt;
        let mut rho: Vec<f64> = (0..grid.len())
            .map(|k| state.rho.values[k] - dt * div_rho[k] / self.weights[k])
            .collect();
        let mut n: Vec<f64> = (0..grid.len())
            .map(|k| state.n.values[k] - dt * div_n[k] / self.weights[k])
            .collect();
        if forcing.active() {
            for k in 0..grid.len() {
                let (sr, sn) = forcing.density_source(t_new, grid.coord(k));
                rho[k] += dt * sr;
                n[k] += dt * sn;
            }
        }
        if self.config.epsilon > 0.0 {
            let d = self.diffusion_for(self.density_diffusion.as_ref(), Bc::Neumann, dt * self.config.epsilon)?;
            rho = d.smooth(&rho);
            n = d.smooth(&n);
        }
        if rho.iter().chain(&n).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite density after the continuity step".into()));
        }
        Ok((rho, n, fluxes))
    }

    fn induction(&self, state: &SimState, u: &[Vec<f64>], dt: f64, forcing: &dyn Forcing) -> Result<Vec<f64>> {
        let grid = self.config.grid;
        let m = &state.magnetic.values;
        let mut out = m.clone();
        if grid.dim() == 1 {
            for e in &self.edges {
                let v = 0.5 * (u[0][e.left] + u[0][e.right]);
                let f = v * 0.5 * (m[e.left] + m[e.right]);
                out[e.left] -= dt * f / self.weights[e.left];
                out[e.right] += dt * f / self.weights[e.right];
            }
        } else {
            let mut courant: f64 = 0.0;
            for k in 0..grid.len() {
                if grid.is_boundary(k) {
                    continue;
                }
                let mut adv = 0.0;
                for (a, ua) in u.iter().enumerate() {
                    let h = grid.spacing(a);
                    let v = ua[k];
                    let l = grid.neighbor(k, a, false).expect("interior node");
                    let r = grid.neighbor(k, a, true).expect("interior node");
                    adv += if v >= 0.0 { v * (m[k] - m[l]) / h } else { v * (m[r] - m[k]) / h };
                }
                let c: f64 = u.iter().enumerate().map(|(a, ua)| ua[k].abs() / grid.spacing(a)).sum();
                courant = courant.max(c);
                out[k] -= dt * adv;
            }
            if dt * courant > 1.0 + 1e-12 {
                return Err(Error::Cfl {
                    dt,
                    suggested: 0.9 / courant,
                });
            }
        }
        let t_new = state.time + dt;
        for k in 0..grid.len() {
            if grid.is_boundary(k) {
                out[k] = 0.0;
            } else if forcing.active() {
                out[k] += dt * forcing.magnetic_source(t_new, grid.coord(k));
            }
        }
        let d = self.diffusion_for(Some(&self.magnetic_diffusion), Bc::Dirichlet, dt * self.config.nu)?;
        let out = d.smooth(&out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite magnetic field after the induction step".into()));
        }
        Ok(out)
    }

    /// Energy density, artificial energy and both chemical potentials at every node.
    pub(crate) fn node_potentials(&self, rho: &[f64], n: &[f64]) -> Result<NodePotentials> {
        let p = self.config.closure;
        let reg = self.config.reg;
        let pairs: Vec<(f64, f64)> = rho.iter().copied().zip(n.iter().copied()).collect();
        let chunks: Vec<Result<Vec<[f64; 4]>>> = pairs
            .par_chunks(64)
            .map(|chunk| {
                let mut out = Vec::with_capacity(chunk.len());
                let mut last: Option<((f64, f64), [f64; 4])> = None;
                for &(r, m) in chunk {
                    if let Some((key, v)) = last {
                        if key == (r, m) {
                            out.push(v);
                            continue;
                        }
                    }
                    let v = node_potential(r, m, &p, &reg)?;
                    last = Some(((r, m), v));
                    out.push(v);
                }
                Ok(out)
            })
            .collect();
        let mut res = NodePotentials {
            h: Vec::with_capacity(rho.len()),
            h_delta: Vec::with_capacity(rho.len()),
            mu_rho: Vec::with_capacity(rho.len()),
            mu_n: Vec::with_capacity(rho.len()),
        };
        for c in chunks {
            for v in c? {
                res.h.push(v[0]);
                res.h_delta.push(v[1]);
                res.mu_rho.push(v[2]);
                res.mu_n.push(v[3]);
            }
        }
        Ok(res)
    }

    /// Nodal forces integrated over dual cells, one vector per component.
    #[allow(clippy::too_many_arguments)]
    fn momentum_forces(
        &self,
        u: &[Vec<f64>],
        rho_new: &[f64],
        n_new: &[f64],
        magnetic: &[f64],
        fluxes: &[EdgeFlux],
        pots: &NodePotentials,
        t_new: f64,
        forcing: &dyn Forcing,
    ) -> Vec<Vec<f64>> {
        let grid = self.config.grid;
        let dim = grid.dim();
        let eps = self.config.epsilon;
        let mut f = vec![vec![0.0; grid.len()]; dim];
        let r_new: Vec<f64> = rho_new.iter().zip(n_new).map(|(a, b)| a + b).collect();
        for (e, fl) in self.edges.iter().zip(fluxes) {
            let (l, r) = (e.left, e.right);
            // Centred convection against the advective mass flux.
            let mass = fl.velocity * e.face * (fl.rho_up + fl.n_up);
            for (c, uc) in u.iter().enumerate() {
                let d = -0.5 * mass * (uc[r] - uc[l]);
                f[c][l] += d;
                f[c][r] += d;
            }
            if eps > 0.0 {
                let g = e.conductance * (r_new[r] - r_new[l]);
                for (c, uc) in u.iter().enumerate() {
                    let phi = eps * 0.5 * (uc[l] + uc[r]) * g;
                    f[c][l] -= phi;
                    f[c][r] += phi;
                }
            }
            // Pressure: adjoint of the upwind mass flux.
            let mut g = e.face
                * (fl.rho_up * (pots.mu_rho[r] - pots.mu_rho[l]) + fl.n_up * (pots.mu_n[r] - pots.mu_n[l]));
            if dim == 1 {
                g += e.face * 0.5 * (magnetic[r].powi(2) - magnetic[l].powi(2));
            }
            f[e.axis][l] -= 0.5 * g;
            f[e.axis][r] -= 0.5 * g;
        }
        if dim == 2 {
            let j = self.current_density(magnetic);
            for a in 0..2 {
                let da = grid::diff_axis(&grid, magnetic, a, true);
                for k in 0..grid.len() {
                    f[a][k] += self.weights[k] * j[k] * da[k];
                }
            }
        }
        if forcing.active() {
            for k in 0..grid.len() {
                let s = forcing.momentum_source(t_new, grid.coord(k));
                for (c, fc) in f.iter_mut().enumerate() {
                    fc[k] += self.weights[k] * s[c];
                }
            }
        }
        f
    }

    /// `J = -Laplace A` at interior nodes (zero on the boundary), 2D only.
    pub(crate) fn current_density(&self, a: &[f64]) -> Vec<f64> {
        let grid = self.config.grid;
        let ka = stiffness_apply(grid.len(), &self.edges, a);
        (0..grid.len())
            .map(|k| if grid.is_boundary(k) { 0.0 } else { ka[k] / self.weights[k] })
            .collect()
    }

    #[allow(clippy::too_many_arguments)]
    fn momentum(
        &self,
        state: &SimState,
        u: &[Vec<f64>],
        rho_new: &[f64],
        n_new: &[f64],
        magnetic: &[f64],
        fluxes: &[EdgeFlux],
        pots: &NodePotentials,
        dt: f64,
        forcing: &dyn Forcing,
    ) -> Result<(Vec<f64>, bool)> {
        let k = self.basis.len();
        let dim = self.config.grid.dim();
        let mw: Vec<f64> = (0..rho_new.len())
            .map(|i| self.weights[i] * (rho_new[i] + n_new[i]))
            .collect();
        if mw.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Numeric("vacuum everywhere: the momentum mass matrix vanishes".into()));
        }
        let mut mass = DMatrix::<f64>::zeros(k, k);
        for a in 0..k {
            let pa = self.basis.values(a);
            for b in a..k {
                let pb = self.basis.values(b);
                let v: f64 = mw.iter().zip(pa).zip(pb).map(|((w, x), y)| w * x * y).sum();
                mass[(a, b)] = v;
                mass[(b, a)] = v;
            }
        }
        let eig = mass.clone().symmetric_eigenvalues();
        let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = eig.iter().copied().fold(0.0, f64::max);
        let regularized = !(lo > 1e-14 * hi.max(1.0));
        if regularized {
            for a in 0..k {
                mass[(a, a)] += 1e-14;
            }
        }
        let forces = self.momentum_forces(u, rho_new, n_new, magnetic, fluxes, pots, state.time + dt, forcing);
        let size = k * dim;
        let mut sys = &self.viscous * dt;
        let mut rhs = DVector::<f64>::zeros(size);
        for c in 0..dim {
            let cc = DVector::from_column_slice(&state.u[c * k..(c + 1) * k]);
            let mc = &mass * cc;
            let proj = self.basis.project_values_unweighted(&forces[c]);
            for a in 0..k {
                rhs[c * k + a] = mc[a] + dt * proj[a];
                for b in 0..k {
                    sys[(c * k + a, c * k + b)] += mass[(a, b)];
                }
            }
        }
        let chol = sys
            .cholesky()
            .ok_or_else(|| Error::Numeric("momentum system is not positive definite".into()))?;
        let sol = chol.solve(&rhs);
        if sol.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite velocity coefficients".into()));
        }
        Ok((sol.as_slice().to_vec(), regularized))
    }

    /// Ledger row for a state, evaluating the potentials afresh.
    pub fn ledger(&self, state: &SimState) -> Result<EnergyLedger> {
        let pots = self.node_potentials(&state.rho.values, &state.n.values)?;
        Ok(self.ledger_with(state, &pots))
    }

    pub(crate) fn ledger_with(&self, state: &SimState, pots: &NodePotentials) -> EnergyLedger {
        let grid = self.config.grid;
        let w = &self.weights;
        let rho = &state.rho.values;
        let n = &state.n.values;
        let u = self.velocity_nodes(state);
        let m = &state.magnetic.values;
        let dot = |a: &[f64]| -> f64 { a.iter().zip(w).map(|(x, y)| x * y).sum() };
        let kinetic = 0.5
            * (0..grid.len())
                .map(|k| w[k] * (rho[k] + n[k]) * u.iter().map(|c| c[k] * c[k]).sum::<f64>())
                .sum::<f64>();
        let (magnetic, magnetic_dissipation, div_h_max) = if grid.dim() == 1 {
            let e = 0.5 * m.iter().zip(w).map(|(h, w)| w * h * h).sum::<f64>();
            (e, self.config.nu * dirichlet_integral(&self.edges, m), 0.0)
        } else {
            let j = self.current_density(m);
            let d: f64 = j.iter().zip(w).map(|(j, w)| w * j * j).sum();
            let div = match grid::curl_scalar(&state.magnetic) {
                Ok(h) => grid::divergence(&h).max_abs(),
                Err(_) => f64::NAN,
            };
            (0.5 * dirichlet_integral(&self.edges, m), self.config.nu * d, div)
        };
        let cu: DVector<f64> = DVector::from_column_slice(&state.u);
        let viscous = cu.dot(&(&self.viscous * &cu));
        let eps = self.config.epsilon;
        let b = self.config.reg.b;
        let mut eps_plain = 0.0;
        let mut eps_weighted = 0.0;
        for e in &self.edges {
            let dr = (rho[e.right] - rho[e.left]).powi(2);
            let dn = (n[e.right] - n[e.left]).powi(2);
            eps_plain += e.conductance * (dr + dn);
            let rb = 0.5 * (rho[e.right] + rho[e.left]);
            let nb = 0.5 * (n[e.right] + n[e.left]);
            let wr = if rb > 0.0 { rb.powf(b - 2.0) } else { 0.0 };
            let wn = if nb > 0.0 { nb.powf(b - 2.0) } else { 0.0 };
            eps_weighted += e.conductance * (wr * dr + wn * dn);
        }
        let c0 = self.config.closure.c0;
        let ratio_min = rho
            .iter()
            .zip(n)
            .map(|(r, n)| (c0 * r - n).min(c0 * n - r))
            .fold(f64::INFINITY, f64::min);
        let sq: Vec<f64> = rho.iter().zip(n).map(|(r, n)| r * r + n * n).collect();
        EnergyLedger {
            time: state.time,
            step: state.step,
            kinetic,
            magnetic,
            internal: dot(&pots.h),
            artificial: dot(&pots.h_delta),
            sigma_l2: self.config.sigma * dot(&sq),
            dissipation_rate: viscous + magnetic_dissipation,
            eps_dissipation: eps * eps_plain,
            eps_dissipation_weighted: eps * self.config.reg.delta * eps_weighted,
            ratio_min,
            density_min: rho.iter().chain(n).copied().fold(f64::INFINITY, f64::min),
            div_h_max,
            mass_rho: dot(rho),
            mass_n: dot(n),
            mass_regularized: false,
        }
    }
}

fn node_potential(rho: f64, n: f64, p: &ClosureParams, reg: &RegularizationParams) -> Result<[f64; 4]> {
    let base = closure::potentials(rho, n, p)?;
    if reg.delta == 0.0 {
        return Ok([base.h, 0.0, base.mu_rho, base.mu_n]);
    }
    let hd = closure::h_delta(rho, n, p, reg)?;
    let (gr, gn) = closure::h_delta_gradient(rho, n, p, reg)?;
    Ok([base.h, hd, base.mu_rho + gr, base.mu_n + gn])
}

/// Cell-based viscous form `mu |grad u|^2 + (mu + lambda) (div u)^2` on the
/// Galerkin coefficients (component-major).
fn viscous_matrix(basis: &GalerkinBasis, mu: f64, lambda: f64) -> DMatrix<f64> {
    let grid = *basis.grid();
    let k = basis.len();
    let dim = grid.dim();
    let mut v = DMatrix::<f64>::zeros(k * dim, k * dim);
    for (area, g) in cell_gradients(&grid, |j| basis.values(j), k) {
        for a in 0..dim {
            for b in 0..dim {
                for j in 0..k {
                    for l in 0..k {
                        let mut s = (mu + lambda) * g[a][j] * g[b][l];
                        if a == b {
                            s += mu * (0..dim).map(|ax| g[ax][j] * g[ax][l]).sum::<f64>();
                        }
                        v[(a * k + j, b * k + l)] += area * s;
                    }
                }
            }
        }
    }
    v
}

/// For every cell: its area and the gradients (per axis, per field) of `count`
/// nodal fields, averaged over the cell's edges.
pub(crate) fn cell_gradients<'a, F>(grid: &Grid, field: F, count: usize) -> Vec<(f64, Vec<Vec<f64>>)>
where
    F: Fn(usize) -> &'a [f64],
{
    let mut out = Vec::new();
    if grid.dim() == 1 {
        let h = grid.spacing(0);
        for i in 0..grid.cells(0) {
            let g = (0..count).map(|j| (field(j)[i + 1] - field(j)[i]) / h).collect();
            out.push((h, vec![g]));
        }
    } else {
        let (hx, hy) = (grid.spacing(0), grid.spacing(1));
        for jy in 0..grid.cells(1) {
            for ix in 0..grid.cells(0) {
                let a = grid.index(ix, jy);
                let b = grid.index(ix + 1, jy);
                let c = grid.index(ix, jy + 1);
                let d = grid.index(ix + 1, jy + 1);
                let mut gx = Vec::with_capacity(count);
                let mut gy = Vec::with_capacity(count);
                for j in 0..count {
                    let f = field(j);
                    gx.push(0.5 * ((f[b] - f[a]) + (f[d] - f[c])) / hx);
                    gy.push(0.5 * ((f[c] - f[a]) + (f[d] - f[b])) / hy);
                }
                out.push((hx * hy, vec![gx, gy]));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
