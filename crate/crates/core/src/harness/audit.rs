use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closure::{
    energy_density_hp, energy_density_real, euler_identity_residual, evaluate, fd_derivative, pi_decomposition,
    pi_monotone_witness, pressure, pressure_partials, solve_rho_plus, ClosureParams, DerivativeMajorants, PressureLaw,
};
use crate::error::{Error, Result};

/// Inequalities pass when their normalized slack is at least `-BOUND_SLACK`.
pub const BOUND_SLACK: f64 = 1e-10;
pub const FD_REL_TOL: f64 = 1e-6;
pub const EULER_TOL: f64 = 1e-5;
pub const EQUAL_EXPONENT_TOL: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditPlan {
    pub samples: usize,
    pub seed: u64,
    /// Half the samples are uniform on `(0, upper]`, half log-uniform on `[10^log_lo, upper]`.
    pub upper: f64,
    pub log_lo: f64,
    /// Finite-difference and two-route checks skip samples with `min(rho, n)` below this.
    pub axis_floor: f64,
    pub s_values: usize,
    pub n_grid: usize,
}

impl Default for AuditPlan {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            upper: 10.0,
            log_lo: -3.0,
            axis_floor: 1e-2,
            s_values: 20,
            n_grid: 500,
        }
    }
}

impl AuditPlan {
    pub fn points(&self) -> Vec<(f64, f64)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let top = self.upper.log10();
        (0..self.samples)
            .map(|i| {
                if i % 2 == 0 {
                    // (0, upper]: map [0, 1) onto (0, 1].
                    let a = self.upper * (1.0 - rng.gen::<f64>());
                    let b = self.upper * (1.0 - rng.gen::<f64>());
                    (a, b)
                } else {
                    let a = 10f64.powf(rng.gen_range(self.log_lo..top));
                    let b = 10f64.powf(rng.gen_range(self.log_lo..top));
                    (a, b)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// `worst` is the smallest normalized slack `(rhs - lhs) / max(1, |lhs|, |rhs|)`.
    Bound,
    /// `worst` is the largest normalized error.
    Tolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub kind: CheckKind,
    pub worst: f64,
    pub limit: f64,
    pub worst_at: (f64, f64),
    pub evaluated: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub params: ClosureParams,
    pub plan: AuditPlan,
    pub checks: Vec<AuditCheck>,
    /// Samples where a closure operation returned an error.
    pub errors: Vec<((f64, f64), String)>,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.errors.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn csv(&self) -> Result<Vec<u8>> {
        let err = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["check", "kind", "worst", "limit", "rho", "n", "evaluated", "passed"])
            .map_err(err)?;
        for c in &self.checks {
            w.write_record([
                c.name.clone(),
                format!("{:?}", c.kind).to_lowercase(),
                c.worst.to_string(),
                c.limit.to_string(),
                c.worst_at.0.to_string(),
                c.worst_at.1.to_string(),
                c.evaluated.to_string(),
                c.passed.to_string(),
            ])
            .map_err(err)?;
        }
        for ((rho, n), msg) in &self.errors {
            w.write_record(["error".into(), "error".into(), msg.clone(), String::new(), rho.to_string(), n.to_string(), "1".into(), "false".into()])
                .map_err(err)?;
        }
        w.into_inner().map_err(|e| Error::Numeric(format!("csv: {e}")))
    }
}

fn slack(lhs: f64, rhs: f64) -> f64 {
    (rhs - lhs) / 1f64.max(lhs.abs()).max(rhs.abs())
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

fn fd_step(x: f64) -> f64 {
    5e-2 * x.max(1e-2)
}

type Entry = (&'static str, CheckKind, f64);

/// Every pointwise check at one sample.
fn sample_checks(rho: f64, n: f64, p: &ClosureParams, maj: &DerivativeMajorants, floor: f64) -> Result<Vec<Entry>> {
    use CheckKind::*;
    let c = p.constants();
    let r = p.r();
    let e = evaluate(rho, n, p)?;
    let x = e.rho_plus;
    let d = pressure_partials(rho, n, p)?;
    let nr = n.powf(1.0 / r);
    let [b_rn, b_pr, b_pn, b_pnn] = maj.bounds(rho, n, p);
    let mut out: Vec<Entry> = vec![
        ("rho_plus_lower", Bound, slack(rho.max(c.q_lo * (rho + nr)), x)),
        ("rho_plus_upper", Bound, slack(x, c.q_hi * (rho + nr))),
        (
            "closure_residual",
            Tolerance,
            (x.powf(r) * (x - rho) - n * x).abs() / (1.0 + x.powf(1.0 + r)),
        ),
        ("rr_lower", Bound, slack(c.q_lo, d.drho_plus_drho)),
        ("rr_upper", Bound, slack(d.drho_plus_drho, c.q_hi)),
        ("rho_plus_dn_lower", Bound, slack(0.0, d.drho_plus_dn)),
        ("rho_plus_dn_upper", Bound, slack(d.drho_plus_dn, b_rn)),
        ("pr_lower", Bound, slack(0.0, d.dp_drho)),
        ("pr_upper", Bound, slack(d.dp_drho, b_pr)),
        ("pn_lower", Bound, slack(0.0, d.dp_dn)),
        ("pn_upper", Bound, slack(d.dp_dn, b_pn)),
    ];
    if p.law == PressureLaw::Implicit {
        let sum = rho.powf(p.gamma_plus) + n.powf(p.gamma_minus);
        out.push(("p_lower", Bound, slack(c.c_lo * sum, e.pressure)));
        out.push(("p_upper", Bound, slack(e.pressure, c.c_hi * sum)));
    }
    if let Some(d2) = d.d2p_dn2 {
        out.push(("p1", Bound, slack(d2.abs(), b_pnn)));
    }
    if p.gamma_plus == p.gamma_minus {
        out.push(("equal_exponents", Tolerance, (x - (rho + n)).abs() / (1.0 + rho + n)));
    }
    // Swapping (rho, gamma_plus) with (n, gamma_minus) leaves the pressure unchanged.
    let mirrored = ClosureParams {
        gamma_plus: p.gamma_minus,
        gamma_minus: p.gamma_plus,
        ..*p
    };
    let swapped = pressure(n, rho, &mirrored)?;
    out.push(("pressure_symmetry", Tolerance, (swapped - e.pressure).abs() / (1.0 + e.pressure)));

    if rho.min(n) >= floor {
        let (hr, hn) = (fd_step(rho), fd_step(n));
        let fd_rp_r = fd_derivative(|v| solve_rho_plus(v, n, p), rho, hr, 0.0)?;
        let fd_rp_n = fd_derivative(|v| solve_rho_plus(rho, v, p), n, hn, 0.0)?;
        let fd_p_r = fd_derivative(|v| pressure(v, n, p), rho, hr, 0.0)?;
        let fd_p_n = fd_derivative(|v| pressure(rho, v, p), n, hn, 0.0)?;
        out.push(("fd_rho_plus_drho", Tolerance, rel_err(d.drho_plus_drho, fd_rp_r)));
        out.push(("fd_rho_plus_dn", Tolerance, rel_err(d.drho_plus_dn, fd_rp_n)));
        out.push(("fd_p_drho", Tolerance, rel_err(d.dp_drho, fd_p_r)));
        out.push(("fd_p_dn", Tolerance, rel_err(d.dp_dn, fd_p_n)));
        if let Some(d2) = d.d2p_dn2 {
            let fd = fd_derivative(|v| pressure_partials(rho, v, p).map(|q| q.dp_dn), n, hn, 0.0)?;
            out.push(("fd_p_dnn", Tolerance, rel_err(d2, fd)));
        }
        let euler = euler_identity_residual(rho, n, p)?;
        out.push(("euler_identity", Tolerance, euler / (1.0 + e.pressure)));
        if p.law == PressureLaw::Implicit {
            let h = energy_density_hp(rho, n, p)?;
            let h_real = energy_density_real(e.alpha, x, e.rho_minus, p)?;
            out.push(("energy_two_routes", Tolerance, (h - h_real).abs() / (1.0 + h.abs())));
        }
    }
    Ok(out)
}

fn tolerance_of(name: &str) -> f64 {
    match name {
        "closure_residual" => 1e-12,
        "equal_exponents" => EQUAL_EXPONENT_TOL,
        "euler_identity" => EULER_TOL,
        "pressure_symmetry" | "energy_two_routes" => 1e-8,
        _ => FD_REL_TOL,
    }
}

/// Evaluates every closure inequality and cross-check over the sample plan.
pub fn closure_audit(params: &ClosureParams, plan: &AuditPlan) -> AuditReport {
    let maj = DerivativeMajorants::new(params);
    let points = plan.points();
    let results: Vec<((f64, f64), Result<Vec<Entry>>)> = points
        .par_iter()
        .map(|&(rho, n)| ((rho, n), sample_checks(rho, n, params, &maj, plan.axis_floor)))
        .collect();

    let mut checks: Vec<AuditCheck> = Vec::new();
    let mut errors = Vec::new();
    let mut record = |name: &str, kind: CheckKind, value: f64, at: (f64, f64)| {
        let pos = match checks.iter().position(|c| c.name == name) {
            Some(i) => i,
            None => {
                let limit = match kind {
                    CheckKind::Bound => -BOUND_SLACK,
                    CheckKind::Tolerance => tolerance_of(name),
                };
                let init = match kind {
                    CheckKind::Bound => f64::INFINITY,
                    CheckKind::Tolerance => f64::NEG_INFINITY,
                };
                checks.push(AuditCheck {
                    name: name.to_string(),
                    kind,
                    worst: init,
                    limit,
                    worst_at: at,
                    evaluated: 0,
                    passed: true,
                });
                checks.len() - 1
            }
        };
        let c = &mut checks[pos];
        c.evaluated += 1;
        let worse = match kind {
            CheckKind::Bound => value < c.worst,
            CheckKind::Tolerance => value > c.worst,
        } || value.is_nan();
        if worse && !c.worst.is_nan() {
            c.worst = value;
            c.worst_at = at;
        }
    };

    for (at, res) in results {
        match res {
            Ok(entries) => {
                for (name, kind, value) in entries {
                    record(name, kind, value, at);
                }
            }
            Err(e) => errors.push((at, e.to_string())),
        }
    }

    // Monotonicity in n of P(n s, n) and of the remainder pi, for s in [0, c0].
    let grid: Vec<f64> = (0..plan.n_grid)
        .map(|i| plan.upper * i as f64 / (plan.n_grid - 1).max(1) as f64)
        .collect();
    let s_count = plan.s_values.max(2);
    for k in 0..s_count {
        let s = params.c0 * k as f64 / (s_count - 1) as f64;
        let at = (s, 0.0);
        let pressures: Result<Vec<f64>> = grid.iter().map(|&n| pi_decomposition(n, s, params).map(|(pi, q)| pi + q)).collect();
        match pressures.and_then(|pv| Ok((pv, pi_monotone_witness(s, &grid, params)?))) {
            Ok((pv, witness_pi)) => {
                let witness_p = pv.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                record("p_monotone_in_n", CheckKind::Bound, witness_p, at);
                record("pi_monotone_in_n", CheckKind::Bound, witness_pi, at);
            }
            Err(e) => errors.push((at, e.to_string())),
        }
    }

    for c in &mut checks {
        c.passed = match c.kind {
            CheckKind::Bound => c.worst >= c.limit,
            CheckKind::Tolerance => c.worst <= c.limit,
        };
    }
    AuditReport {
        params: *params,
        plan: plan.clone(),
        checks,
        errors,
    }
}
