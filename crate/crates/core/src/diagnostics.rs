//! Integral quantities, cut-off functions and defect functionals over solver states.

use serde::{Deserialize, Serialize};

use crate::closure::{self, ClosureParams};
use crate::error::{Error, Result};
use crate::grid::{self, Grid};
use crate::solver::{SimConfig, SimState, Solver, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub time: f64,
    pub step: u64,
    pub kinetic: f64,
    pub magnetic: f64,
    /// `int H_P(rho, n)`; negative wherever both densities are small.
    pub internal: f64,
    pub artificial: f64,
    pub sigma_l2: f64,
    pub dissipation_rate: f64,
    pub eps_dissipation: f64,
    /// `eps delta int (rho^{B-2} |grad rho|^2 + n^{B-2} |grad n|^2)`.
    pub eps_dissipation_weighted: f64,
    pub ratio_min: f64,
    /// Smallest nodal value of either density.
    pub density_min: f64,
    pub div_h_max: f64,
    pub mass_rho: f64,
    pub mass_n: f64,
    /// Set when the momentum mass matrix needed the `1e-14 I` shift this step.
    pub mass_regularized: bool,
}

impl EnergyLedger {
    pub const COLUMNS: [&'static str; 16] = [
        "step",
        "kinetic",
        "magnetic",
        "internal",
        "artificial",
        "total",
        "sigma_l2",
        "dissipation_rate",
        "eps_dissipation",
        "eps_dissipation_weighted",
        "ratio_min",
        "density_min",
        "div_h_max",
        "mass_rho",
        "mass_n",
        "mass_regularized",
    ];

    /// `kinetic + magnetic + internal + artificial`.
    pub fn total(&self) -> f64 {
        self.kinetic + self.magnetic + self.internal + self.artificial
    }

    /// The regularized energy `int Sigma (rho^2 + n^2) + R |u|^2 + |H|^2 + 2 (H_P + h_delta)`.
    pub fn e_delta(&self) -> f64 {
        self.sigma_l2 + 2.0 * self.total()
    }

    pub fn is_finite(&self) -> bool {
        [
            self.time,
            self.kinetic,
            self.magnetic,
            self.internal,
            self.artificial,
            self.sigma_l2,
            self.dissipation_rate,
            self.eps_dissipation,
            self.eps_dissipation_weighted,
            self.ratio_min,
            self.density_min,
            self.div_h_max,
            self.mass_rho,
            self.mass_n,
        ]
        .iter()
        .all(|v| v.is_finite())
    }

    /// Values in `COLUMNS` order.
    pub fn values(&self) -> [f64; 16] {
        [
            self.step as f64,
            self.kinetic,
            self.magnetic,
            self.internal,
            self.artificial,
            self.total(),
            self.sigma_l2,
            self.dissipation_rate,
            self.eps_dissipation,
            self.eps_dissipation_weighted,
            self.ratio_min,
            self.density_min,
            self.div_h_max,
            self.mass_rho,
            self.mass_n,
            if self.mass_regularized { 1.0 } else { 0.0 },
        ]
    }
}

pub fn energy_ledger(state: &SimState, config: &SimConfig) -> Result<EnergyLedger> {
    Solver::new(config)?.ledger(state)
}

/// `int H_P` evaluated through the species variables `(alpha, rho_plus, rho_minus)`.
pub fn internal_energy_real(state: &SimState, p: &ClosureParams) -> Result<f64> {
    let grid = state.rho.grid;
    let mut total = 0.0;
    for k in 0..grid.len() {
        let (r, n) = (state.rho.values[k], state.n.values[k]);
        let v = closure::recover_real_variables(r, n, p)?;
        let h = if v.degenerate {
            closure::energy_density_hp(r, n, p)?
        } else {
            closure::energy_density_real(v.alpha, v.rho_plus, v.rho_minus, p)?
        };
        total += grid.weight(k) * h;
    }
    Ok(total)
}

/// Ledger rows in long form: `time,quantity,value`.
pub fn ledger_csv(rows: &[EnergyLedger]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
    w.write_record(["time", "quantity", "value"]).map_err(err)?;
    for r in rows {
        let t = r.time.to_string();
        for (name, v) in EnergyLedger::COLUMNS.iter().zip(r.values()) {
            w.write_record([t.as_str(), name, &v.to_string()]).map_err(err)?;
        }
    }
    w.into_inner().map_err(|e| Error::Numeric(format!("csv: {e}")))
}

/// The concave profile: `z` below 1, `2` above 3, and the quartic
/// `z^4/16 - z^3/2 + 9 z^2/8 + 5/16` in between (C^2 at both ends).
pub fn cutoff_t(z: f64) -> f64 {
    if z <= 1.0 {
        z
    } else if z >= 3.0 {
        2.0
    } else {
        ((z / 16.0 - 0.5) * z + 9.0 / 8.0) * z * z + 5.0 / 16.0
    }
}

fn cutoff_t_derivative(z: f64) -> f64 {
    if z <= 1.0 {
        1.0
    } else if z >= 3.0 {
        0.0
    } else {
        ((z / 4.0 - 1.5) * z + 9.0 / 4.0) * z
    }
}

/// Antiderivative of `T(t) / t^2` on `[1, inf)`, zero at `t = 1`.
fn t_over_sq_integral(t: f64) -> f64 {
    let poly = |t: f64| t.powi(3) / 48.0 - t * t / 4.0 + 9.0 * t / 8.0 - 5.0 / (16.0 * t);
    if t <= 3.0 {
        poly(t) - poly(1.0)
    } else {
        poly(3.0) - poly(1.0) + 2.0 / 3.0 - 2.0 / t
    }
}

pub fn cutoff_tk(z: f64, k: f64) -> f64 {
    k * cutoff_t(z / k)
}

pub fn cutoff_tk_derivative(z: f64, k: f64) -> f64 {
    cutoff_t_derivative(z / k)
}

/// `beta_k = log k + int_k^{3k} T_k(s)/s^2 ds + 2/3`.
pub fn cutoff_beta(k: f64) -> f64 {
    k.ln() + t_over_sq_integral(3.0) + 2.0 / 3.0
}

pub fn cutoff_lk(z: f64, k: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else if z <= k {
        z * z.ln()
    } else {
        z * k.ln() + z * t_over_sq_integral(z / k)
    }
}

/// `b_k(z) = L_k(z) - beta_k z`, so that `b_k'(z) z - b_k(z) = T_k(z)`.
pub fn cutoff_bk(z: f64, k: f64) -> f64 {
    cutoff_lk(z, k) - cutoff_beta(k) * z
}

pub fn cutoff_bk_derivative(z: f64, k: f64) -> f64 {
    if z <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let l = if z <= k { z.ln() + 1.0 } else { k.ln() + t_over_sq_integral(z / k) + cutoff_tk(z, k) / z };
    l - cutoff_beta(k)
}

/// Defect functionals of a family of runs, each measured against the
/// reference member (the finest resolution or smallest parameter). The
/// reference stands in for the weak limit and is not a limit itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectReport {
    pub reference: usize,
    /// Final-time `int n_j ln n_j - int n_ref ln n_ref`.
    pub nlogn_gap: Vec<f64>,
    /// `sup_k || T_k(n_j) - T_k(n_ref) ||_{L^{gamma_minus + 1}(Q_T)}` over `levels`.
    pub osc_measure: Vec<f64>,
    pub levels: Vec<f64>,
    /// Final-time `int n_j |s_j - s_ref|^p`, one row per member, one column per `p`.
    pub s_convergence: Vec<Vec<f64>>,
    pub s_exponents: Vec<f64>,
    /// `int_Q cov_j(F_j, n_j)` with `F = Pi_delta - (2 mu + lambda) div u`,
    /// the covariance taken pointwise across members.
    pub evf_correlation: f64,
    /// Per member: `int_Q n P + delta (n^{B+1} + n rho^B)` and
    /// `int_Q n^{gamma_minus + g} + rho^{gamma_plus} n^g`.
    pub bogovskii_integrals: Vec<[f64; 2]>,
    /// Fraction of consecutive members along which each functional is non-increasing.
    pub monotonicity: Vec<(String, f64)>,
}

impl DefectReport {
    /// Rows `index,functional,value`.
    pub fn csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
        w.write_record(["index", "functional", "value"]).map_err(err)?;
        let mut row = |i: String, f: &str, v: f64| w.write_record([i.as_str(), f, &v.to_string()]);
        for j in 0..self.nlogn_gap.len() {
            let i = j.to_string();
            row(i.clone(), "nlogn_gap", self.nlogn_gap[j]).map_err(err)?;
            row(i.clone(), "osc_measure", self.osc_measure[j]).map_err(err)?;
            for (p, v) in self.s_exponents.iter().zip(&self.s_convergence[j]) {
                row(i.clone(), &format!("s_convergence_p{p}"), *v).map_err(err)?;
            }
            row(i.clone(), "bogovskii_pressure", self.bogovskii_integrals[j][0]).map_err(err)?;
            row(i.clone(), "bogovskii_density", self.bogovskii_integrals[j][1]).map_err(err)?;
        }
        row("all".into(), "evf_correlation", self.evf_correlation).map_err(err)?;
        row("all".into(), "reference_index", self.reference as f64).map_err(err)?;
        for (name, v) in &self.monotonicity {
            row("all".into(), &format!("nonincreasing_fraction_{name}"), *v).map_err(err)?;
        }
        drop(row);
        w.into_inner().map_err(|e| Error::Numeric(format!("csv: {e}")))
    }
}

fn final_state(t: &Trajectory) -> Result<&SimState> {
    t.snapshots
        .last()
        .ok_or_else(|| Error::domain("trajectory without snapshots"))
}

/// Trapezoid rule in time over the snapshots of a trajectory.
fn time_integral(times: &[f64], values: &[f64]) -> f64 {
    times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1]))
        .sum()
}

pub fn defect_report(
    sequence: &[Trajectory],
    reference: usize,
    configs: &[SimConfig],
    levels: &[f64],
    s_exponents: &[f64],
) -> Result<DefectReport> {
    if sequence.is_empty() || reference >= sequence.len() || configs.len() != sequence.len() {
        return Err(Error::domain("defect report needs a non-empty sequence, one config per member and a valid reference"));
    }
    let grid = configs[reference].grid;
    let times: Vec<f64> = sequence[reference].snapshots.iter().map(|s| s.time).collect();
    for (t, c) in sequence.iter().zip(configs) {
        if c.grid != grid {
            return Err(Error::domain("sequence members use different grids"));
        }
        let ts: Vec<f64> = t.snapshots.iter().map(|s| s.time).collect();
        if ts.len() != times.len() || ts.iter().zip(&times).any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs())) {
            return Err(Error::domain("sequence members have different horizons or snapshot times"));
        }
    }
    let p = configs[reference].closure;
    let reff = &sequence[reference];
    let nln = |s: &SimState| {
        let v: Vec<f64> = s.n.values.iter().map(|n| if *n > 0.0 { n * n.ln() } else { 0.0 }).collect();
        grid::integrate_values(&grid, &v)
    };
    let ref_final = final_state(reff)?;
    let nlogn_ref = nln(ref_final);
    let q = p.gamma_minus + 1.0;
    let mut nlogn_gap = Vec::new();
    let mut osc_measure = Vec::new();
    let mut s_convergence = Vec::new();
    let mut bogovskii = Vec::new();
    for (traj, cfg) in sequence.iter().zip(configs) {
        let fin = final_state(traj)?;
        nlogn_gap.push(nln(fin) - nlogn_ref);
        let mut osc: f64 = 0.0;
        for &k in levels {
            let per_time: Vec<f64> = traj
                .snapshots
                .iter()
                .zip(&reff.snapshots)
                .map(|(a, b)| {
                    let d: Vec<f64> = a
                        .n
                        .values
                        .iter()
                        .zip(&b.n.values)
                        .map(|(x, y)| (cutoff_tk(*x, k) - cutoff_tk(*y, k)).abs().powf(q))
                        .collect();
                    grid::integrate_values(&grid, &d)
                })
                .collect();
            osc = osc.max(time_integral(&times, &per_time).max(0.0).powf(1.0 / q));
        }
        osc_measure.push(osc);
        let row: Vec<f64> = s_exponents
            .iter()
            .map(|&pe| {
                let v: Vec<f64> = (0..grid.len())
                    .map(|i| {
                        let (r, n) = (fin.rho.values[i], fin.n.values[i]);
                        let s = closure::ratio_s(r, n);
                        let sr = closure::ratio_s(ref_final.rho.values[i], ref_final.n.values[i]);
                        n * (s - sr).abs().powf(pe)
                    })
                    .collect();
                grid::integrate_values(&grid, &v)
            })
            .collect();
        s_convergence.push(row);
        bogovskii.push(bogovskii_integrals(traj, cfg, &times)?);
    }
    let evf = evf_covariance(sequence, configs, &times)?;
    let trend = |name: &str, v: Vec<f64>| {
        let pairs = v.len().saturating_sub(1).max(1);
        let good = v.windows(2).filter(|w| w[1] <= w[0] + 1e-14 * w[0].abs().max(1.0)).count();
        (name.to_string(), good as f64 / pairs as f64)
    };
    let mut monotonicity = vec![
        trend("abs_nlogn_gap", nlogn_gap.iter().map(|v| v.abs()).collect()),
        trend("osc_measure", osc_measure.clone()),
    ];
    for (i, pe) in s_exponents.iter().enumerate() {
        monotonicity.push(trend(&format!("s_convergence_p{pe}"), s_convergence.iter().map(|r| r[i]).collect()));
    }
    Ok(DefectReport {
        reference,
        nlogn_gap,
        osc_measure,
        levels: levels.to_vec(),
        s_convergence,
        s_exponents: s_exponents.to_vec(),
        evf_correlation: evf,
        bogovskii_integrals: bogovskii,
        monotonicity,
    })
}

fn bogovskii_integrals(traj: &Trajectory, cfg: &SimConfig, times: &[f64]) -> Result<[f64; 2]> {
    let p = cfg.closure;
    let grid = cfg.grid;
    let g = (2.0 * p.gamma_minus / 3.0 - 1.0).min(1.0).min(p.gamma_minus / 3.0);
    let pow = |x: f64, e: f64| if x > 0.0 { x.powf(e) } else { 0.0 };
    let mut first = Vec::new();
    let mut second = Vec::new();
    for s in &traj.snapshots {
        let mut a = vec![0.0; grid.len()];
        let mut b = vec![0.0; grid.len()];
        for i in 0..grid.len() {
            let (r, n) = (s.rho.values[i], s.n.values[i]);
            let pr = closure::pressure(r, n, &p)?;
            a[i] = n * pr + cfg.reg.delta * (pow(n, cfg.reg.b + 1.0) + n * pow(r, cfg.reg.b));
            b[i] = pow(n, p.gamma_minus + g) + pow(r, p.gamma_plus) * pow(n, g);
        }
        first.push(grid::integrate_values(&grid, &a));
        second.push(grid::integrate_values(&grid, &b));
    }
    Ok([time_integral(times, &first), time_integral(times, &second)])
}

fn effective_flux(s: &SimState, cfg: &SimConfig, solver: &Solver) -> Result<Vec<f64>> {
    let grid = cfg.grid;
    let u = solver.basis().reconstruct_vector(&s.u)?;
    let div = grid::divergence(&u);
    (0..grid.len())
        .map(|i| {
            let pi = closure::artificial_pressure(s.rho.values[i], s.n.values[i], &cfg.closure, &cfg.reg)?;
            Ok(pi - (2.0 * cfg.mu + cfg.lambda) * div.values[i])
        })
        .collect()
}

fn evf_covariance(sequence: &[Trajectory], configs: &[SimConfig], times: &[f64]) -> Result<f64> {
    let m = sequence.len() as f64;
    let grid = configs[0].grid;
    let solvers: Vec<Solver> = configs.iter().map(Solver::new).collect::<Result<_>>()?;
    let mut per_time = Vec::with_capacity(times.len());
    for t in 0..times.len() {
        let mut mean_f = vec![0.0; grid.len()];
        let mut mean_n = vec![0.0; grid.len()];
        let mut mean_fn = vec![0.0; grid.len()];
        for ((traj, cfg), solver) in sequence.iter().zip(configs).zip(&solvers) {
            let s = &traj.snapshots[t];
            let f = effective_flux(s, cfg, solver)?;
            for i in 0..grid.len() {
                mean_f[i] += f[i] / m;
                mean_n[i] += s.n.values[i] / m;
                mean_fn[i] += f[i] * s.n.values[i] / m;
            }
        }
        let cov: Vec<f64> = (0..grid.len()).map(|i| mean_fn[i] - mean_f[i] * mean_n[i]).collect();
        per_time.push(grid::integrate_values(&grid, &cov));
    }
    Ok(time_integral(times, &per_time))
}

/// Which density the renormalized equation is tested on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Species {
    Rho,
    N,
}

/// Weak-form residual of `d_t b(f) + div(b(f) u) + [b'(f) f - b(f)] div u = 0`
/// against `psi(x) = prod cos(pi x_a / L_a)`:
/// `int b(f(T)) psi - int b(f(0)) psi - int_0^T int [b(f) u . grad psi - (b'(f) f - b(f)) div u psi]`.
pub fn renormalization_residual<B, D>(
    traj: &Trajectory,
    b: B,
    b_prime: D,
    species: Species,
    config: &SimConfig,
) -> Result<f64>
where
    B: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    if traj.snapshots.len() < 3 {
        return Err(Error::domain(format!(
            "renormalization residual needs at least 3 snapshots, got {}",
            traj.snapshots.len()
        )));
    }
    if config.epsilon != 0.0 {
        return Err(Error::hypothesis("ε = 0", format!("epsilon = {}", config.epsilon)));
    }
    let grid = config.grid;
    let solver = Solver::new(config)?;
    let (psi, grad_psi) = test_function(&grid);
    let field = |s: &SimState| match species {
        Species::Rho => s.rho.values.clone(),
        Species::N => s.n.values.clone(),
    };
    let times: Vec<f64> = traj.snapshots.iter().map(|s| s.time).collect();
    let mut flux = Vec::with_capacity(times.len());
    for s in &traj.snapshots {
        let f = field(s);
        let u = solver.basis().reconstruct_vector(&s.u)?;
        let div = grid::divergence(&u);
        let v: Vec<f64> = (0..grid.len())
            .map(|i| {
                let bf = b(f[i]);
                let adv: f64 = (0..grid.dim()).map(|a| u.comps[a][i] * grad_psi[a][i]).sum();
                bf * adv - (b_prime(f[i]) * f[i] - bf) * div.values[i] * psi[i]
            })
            .collect();
        flux.push(grid::integrate_values(&grid, &v));
    }
    let end = |s: &SimState| {
        let f = field(s);
        let v: Vec<f64> = f.iter().zip(&psi).map(|(x, p)| b(*x) * p).collect();
        grid::integrate_values(&grid, &v)
    };
    let first = &traj.snapshots[0];
    let last = &traj.snapshots[traj.snapshots.len() - 1];
    Ok(end(last) - end(first) - time_integral(&times, &flux))
}

fn test_function(grid: &Grid) -> (Vec<f64>, Vec<Vec<f64>>) {
    let pi = std::f64::consts::PI;
    let mut psi = Vec::with_capacity(grid.len());
    let mut grad = vec![Vec::with_capacity(grid.len()); grid.dim()];
    for k in 0..grid.len() {
        let x = grid.coord(k);
        let c: Vec<f64> = (0..grid.dim()).map(|a| (pi * x[a] / grid.extent(a)).cos()).collect();
        let s: Vec<f64> = (0..grid.dim()).map(|a| (pi * x[a] / grid.extent(a)).sin()).collect();
        psi.push(c.iter().product());
        for a in 0..grid.dim() {
            let mut g = -pi / grid.extent(a) * s[a];
            for (o, cv) in c.iter().enumerate() {
                if o != a {
                    g *= cv;
                }
            }
            grad[a].push(g);
        }
    }
    (psi, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cutoff_examples() {
        for k in [1.0, 2.0, 7.5] {
            assert!((cutoff_tk(0.5 * k, k) - 0.5 * k).abs() < 1e-14);
            assert!((cutoff_tk(5.0 * k, k) - 2.0 * k).abs() < 1e-14);
            let z = 0.7 * k;
            assert!((cutoff_lk(z, k) - z * z.ln()).abs() < 1e-14);
        }
    }

    #[test]
    fn cutoff_profile_is_c2_and_concave() {
        let h = 1e-6;
        for z in [1.0, 3.0] {
            assert!((cutoff_t(z + h) - cutoff_t(z - h)).abs() < 3.0 * h);
            let d = (cutoff_t_derivative(z + h) - cutoff_t_derivative(z - h)) / (2.0 * h);
            assert!(d.abs() < 1e-5);
        }
        let zs: Vec<f64> = (0..=400).map(|i| i as f64 * 0.01).collect();
        for w in zs.windows(3) {
            let dd = cutoff_t(w[0]) - 2.0 * cutoff_t(w[1]) + cutoff_t(w[2]);
            assert!(dd <= 1e-10);
        }
    }

    #[test]
    fn lk_tail_identity_and_bk_identity() {
        for k in [1.0, 3.0, 10.0] {
            for z in [3.0 * k, 4.0 * k, 11.0 * k] {
                assert!((cutoff_lk(z, k) - (cutoff_beta(k) * z - 2.0 * k)).abs() < 1e-10 * z);
            }
            for z in [0.3 * k, 0.99 * k, 1.5 * k, 2.2 * k, 2.9 * k, 6.0 * k] {
                let h = 1e-5 * k;
                let d = (cutoff_bk(z + h, k) - cutoff_bk(z - h, k)) / (2.0 * h);
                assert!((d * z - cutoff_bk(z, k) - cutoff_tk(z, k)).abs() < 1e-8 * (1.0 + z), "k={k} z={z}");
                assert!((d - cutoff_bk_derivative(z, k)).abs() < 1e-7);
            }
        }
    }
}
