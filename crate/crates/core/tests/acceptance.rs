//! Acceptance suite: one line per criterion, then a non-zero exit if any failed.
//!
//! Run with `cargo test -p bifluid-core --test acceptance`.

use std::time::Instant;

use bifluid_core::closure::{pressure, solve_rho_plus, ClosureParams};
use bifluid_core::diagnostics::{defect_report, ledger_csv, EnergyLedger};
use bifluid_core::grid::{self, Grid};
use bifluid_core::harness::{closure_audit, run_sweep, verify_manufactured, AuditPlan, ManufacturedCase, SweepAxis, SweepPlan};
use bifluid_core::io::Checkpoint;
use bifluid_core::solver::{InitialData, NoForcing, Profile, SimConfig, Solver, Trajectory};

const AUDIT_PAIRS: [(f64, f64); 4] = [(2.0, 2.0), (3.0, 1.5), (1.8, 1.8), (1.0, 1.8)];
const LEMMA1_CHECKS: [&str; 15] = [
    "rho_plus_lower",
    "rho_plus_upper",
    "rr_lower",
    "rr_upper",
    "p_lower",
    "p_upper",
    "rho_plus_dn_lower",
    "rho_plus_dn_upper",
    "pr_lower",
    "pr_upper",
    "pn_lower",
    "pn_upper",
    "p1",
    "closure_residual",
    "pressure_symmetry",
];
const FD_CHECKS: [&str; 5] = ["fd_rho_plus_drho", "fd_rho_plus_dn", "fd_p_drho", "fd_p_dn", "fd_p_dnn"];

struct Outcome {
    id: usize,
    name: &'static str,
    pass: bool,
    detail: String,
}

fn smooth_profile() -> Profile {
    Profile::ProportionalPerturbed {
        base: 1.0,
        ratio: 1.0,
        amplitude: 0.4,
        velocity: 0.5,
        field: 0.3,
    }
}

fn line_config(cells: usize) -> SimConfig {
    SimConfig {
        grid: Grid::line(cells, 1.0).unwrap(),
        ..SimConfig::default_1d()
    }
}

fn run(cfg: &SimConfig, profile: &Profile, end_step: u64, stride: u64) -> Trajectory {
    let solver = Solver::new(cfg).unwrap();
    let s0 = solver.initial_state(&InitialData::from_profile(cfg.grid, profile)).unwrap();
    solver.run_until(s0, end_step, stride, &NoForcing).unwrap()
}

fn mass_drift(ledger: &[EnergyLedger]) -> f64 {
    let first = ledger[0];
    ledger
        .iter()
        .map(|r| {
            ((r.mass_rho - first.mass_rho) / first.mass_rho)
                .abs()
                .max(((r.mass_n - first.mass_n) / first.mass_n).abs())
        })
        .fold(0.0, f64::max)
}

/// Largest `E(t_m) + sum dt D - E(0)` over a run.
fn energy_excess(ledger: &[EnergyLedger], dt: f64) -> f64 {
    let e0 = ledger[0].total();
    let mut acc = 0.0;
    let mut worst = f64::NEG_INFINITY;
    for row in &ledger[1..] {
        acc += dt * row.dissipation_rate;
        worst = worst.max(row.total() + acc - e0);
    }
    worst
}

fn main() {
    let mut out: Vec<Outcome> = Vec::new();
    let mut ledgers: Vec<(&'static str, Vec<EnergyLedger>)> = Vec::new();

    // 1, 2, 4, 5, 6: closure audit over the catalog of exponent pairs.
    let plan = AuditPlan::default();
    let t0 = Instant::now();
    let reports: Vec<_> = AUDIT_PAIRS
        .iter()
        .map(|&(gp, gm)| {
            let p = ClosureParams::implicit(gp, gm).unwrap().with_c0(2.0).unwrap();
            closure_audit(&p, &plan)
        })
        .collect();
    let audit_secs = t0.elapsed().as_secs_f64();
    let worst_over = |names: &[&str]| -> (bool, String) {
        let mut ok = true;
        let mut worst = String::new();
        for r in &reports {
            ok &= r.errors.is_empty();
            for name in names {
                if let Some(c) = r.check(name) {
                    ok &= c.passed;
                    if !c.passed {
                        worst.push_str(&format!(" ({}, {}) {} = {:e};", r.params.gamma_plus, r.params.gamma_minus, c.name, c.worst));
                    }
                } else if !name.starts_with("equal") {
                    ok = false;
                    worst.push_str(&format!(" missing {name};"));
                }
            }
        }
        (ok, worst)
    };
    let (ok, why) = worst_over(&LEMMA1_CHECKS);
    let min_slack = reports
        .iter()
        .flat_map(|r| r.checks.iter().filter(|c| LEMMA1_CHECKS[..13].contains(&c.name.as_str())).map(|c| c.worst))
        .fold(f64::INFINITY, f64::min);
    out.push(Outcome {
        id: 1,
        name: "closure audit (bracket, rr, P, rho+2, Pr, Pn, P1)",
        pass: ok && audit_secs < 10.0,
        detail: format!(
            "{} samples x {} pairs, min slack {min_slack:.3e} >= -1e-10, {audit_secs:.2}s < 10s{why}",
            plan.samples,
            AUDIT_PAIRS.len()
        ),
    });

    let equal: Vec<f64> = reports.iter().filter_map(|r| r.check("equal_exponents")).map(|c| c.worst).collect();
    out.push(Outcome {
        id: 2,
        name: "equal-exponent oracle",
        pass: equal.len() == 2 && equal.iter().all(|&e| e <= 1e-11),
        detail: format!("max |rho+ - (rho+n)|/(1+rho+n) = {:.3e} <= 1e-11 over {} pairs", equal.iter().fold(0.0f64, |a, b| a.max(*b)), equal.len()),
    });

    let p = ClosureParams::implicit(3.0, 1.5).unwrap();
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    let x = solve_rho_plus(1.0, 1.0, &p).unwrap();
    let pr = pressure(1.0, 1.0, &p).unwrap();
    out.push(Outcome {
        id: 3,
        name: "golden-ratio oracle",
        pass: (x - phi).abs() <= 1e-10 && (pr - phi.powi(3)).abs() <= 1e-9 && (pr - 4.2360679775).abs() <= 1e-9,
        detail: format!("rho+ - phi = {:.1e} (<= 1e-10), P - phi^3 = {:.1e} (<= 1e-9)", x - phi, pr - phi.powi(3)),
    });

    let (ok, why) = worst_over(&FD_CHECKS);
    let fd_worst = reports
        .iter()
        .flat_map(|r| r.checks.iter().filter(|c| FD_CHECKS.contains(&c.name.as_str())).map(|c| c.worst))
        .fold(0.0, f64::max);
    out.push(Outcome {
        id: 4,
        name: "derivative cross-check",
        pass: ok,
        detail: format!("max relative FD mismatch {fd_worst:.3e} <= 1e-6 (min(rho, n) >= 1e-2){why}"),
    });

    let (ok, why) = worst_over(&["euler_identity"]);
    let euler = reports.iter().filter_map(|r| r.check("euler_identity")).map(|c| c.worst).fold(0.0, f64::max);
    out.push(Outcome {
        id: 5,
        name: "Euler identity",
        pass: ok,
        detail: format!("max residual/(1+P) {euler:.3e} <= 1e-5{why}"),
    });

    let (ok, why) = worst_over(&["p_monotone_in_n", "pi_monotone_in_n"]);
    let mono = reports
        .iter()
        .flat_map(|r| r.checks.iter().filter(|c| c.name.ends_with("monotone_in_n")).map(|c| c.worst))
        .fold(f64::INFINITY, f64::min);
    out.push(Outcome {
        id: 6,
        name: "monotonicity of n -> P(ns, n)",
        pass: ok,
        detail: format!("{} s-values in [0, 2] x {} points, min forward difference {mono:.3e} >= -1e-10{why}", plan.s_values, plan.n_grid),
    });

    // 7: maximum principle for the density ratio.
    let mut cfg = line_config(128);
    cfg.epsilon = 1e-2;
    let t0 = Instant::now();
    let traj = run(&cfg, &smooth_profile(), 200, 1);
    let secs = t0.elapsed().as_secs_f64();
    let c0 = cfg.closure.c0;
    let pointwise = traj
        .snapshots
        .iter()
        .flat_map(|s| s.rho.values.iter().zip(&s.n.values).map(|(r, n)| (c0 * r - n).min(c0 * n - r)))
        .fold(f64::INFINITY, f64::min);
    out.push(Outcome {
        id: 7,
        name: "maximum principle",
        pass: traj.snapshots.len() == 201 && pointwise >= -1e-10 && secs < 30.0,
        detail: format!("min(c0 rho - n, c0 n - rho) = {pointwise:.4} >= -1e-10 over 200 steps, {secs:.2}s < 30s"),
    });
    ledgers.push(("maximum principle", traj.ledger.clone()));

    // 9: energy inequality at epsilon = 0 under dt refinement.
    let mut excess = Vec::new();
    let mut e0 = 0.0;
    for dt in [1e-3, 5e-4, 2.5e-4] {
        let mut cfg = line_config(64);
        cfg.epsilon = 0.0;
        cfg.dt = dt;
        let steps = cfg.steps();
        let t = run(&cfg, &smooth_profile(), steps, steps / 4);
        e0 = t.ledger[0].total();
        excess.push(energy_excess(&t.ledger, dt));
        ledgers.push(("energy inequality", t.ledger));
    }
    let halving = excess.windows(2).all(|w| w[1] <= 0.55 * w[0].max(0.0) || w[1] <= 1e-14);
    let bounded = excess.iter().zip([1e-3, 5e-4, 2.5e-4]).all(|(e, dt)| *e <= dt * (1.0 + e0));
    out.push(Outcome {
        id: 9,
        name: "energy inequality at eps = 0",
        pass: halving && bounded,
        detail: format!(
            "overshoot {:.3e}, {:.3e}, {:.3e} for dt = 1e-3, 5e-4, 2.5e-4 (each <= dt (1 + E0), ratio <= 0.55)",
            excess[0], excess[1], excess[2]
        ),
    });

    // 10: solenoidal field in 2D.
    let mut cfg = line_config(16);
    cfg.grid = Grid::square(16, 1.0).unwrap();
    cfg.modes = 8;
    let traj = run(&cfg, &smooth_profile(), 20, 1);
    let div_ledger = traj.ledger.iter().map(|r| r.div_h_max).fold(0.0, f64::max);
    let div_direct = traj
        .snapshots
        .iter()
        .map(|s| grid::divergence(&grid::curl_scalar(&s.magnetic).unwrap()).max_abs())
        .fold(0.0, f64::max);
    let field = traj.snapshots.last().unwrap().magnetic.max_abs();
    out.push(Outcome {
        id: 10,
        name: "solenoidal magnetic field (2D)",
        pass: div_ledger <= 1e-10 && div_direct <= 1e-10 && field > 1e-3,
        detail: format!("max |div H| = {div_direct:.1e} <= 1e-10 over 20 steps, |A_z|max = {field:.3}"),
    });
    ledgers.push(("2D run", traj.ledger));

    // 11: manufactured-solution orders.
    let t0 = Instant::now();
    let base = SimConfig::default_1d();
    let diffusion = verify_manufactured(&base, ManufacturedCase::Diffusion1d).unwrap();
    let coupled = verify_manufactured(&base, ManufacturedCase::Coupled1d).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    out.push(Outcome {
        id: 11,
        name: "verification orders",
        pass: (diffusion.observed_order - 2.0).abs() <= 0.2
            && coupled.observed_order >= 1.8
            && coupled.rows.len() >= 3
            && secs < 300.0,
        detail: format!(
            "diffusion {:.3} (2.0 +- 0.2), coupled {:.3} (>= 1.8) over {} levels, {secs:.1}s < 300s",
            diffusion.observed_order,
            coupled.observed_order,
            coupled.rows.len()
        ),
    });

    // 12: defect trends across an epsilon sweep, and an identical-trajectory control.
    let sweep_plan = SweepPlan::new(SimConfig::default_1d(), smooth_profile(), SweepAxis::Epsilon, vec![1e-2, 5e-3, 2.5e-3]);
    let sweep = run_sweep(&sweep_plan).unwrap();
    let defects = sweep.defects.clone().unwrap();
    let s_cols: Vec<Vec<f64>> = (0..defects.s_exponents.len())
        .map(|i| defects.s_convergence.iter().map(|r| r[i]).collect())
        .collect();
    let nonincreasing = s_cols.iter().all(|c| c.windows(2).all(|w| w[1] <= w[0]));
    let control_traj = sweep.trajectories[0].clone();
    let configs = vec![sweep_plan.members()[0]; 3];
    let control = defect_report(
        &[control_traj.clone(), control_traj.clone(), control_traj],
        2,
        &configs,
        &sweep_plan.cutoff_levels,
        &sweep_plan.s_exponents,
    )
    .unwrap();
    let control_zero = control.osc_measure.iter().all(|&v| v == 0.0);
    out.push(Outcome {
        id: 12,
        name: "defect trends",
        pass: nonincreasing && control_zero && sweep.all_pass(),
        detail: format!(
            "s_convergence {:?} non-increasing, control osc {:?} == 0",
            s_cols.iter().map(|c| c.iter().map(|v| format!("{v:.2e}")).collect::<Vec<_>>()).collect::<Vec<_>>(),
            control.osc_measure
        ),
    });
    for t in &sweep.trajectories {
        ledgers.push(("epsilon sweep", t.ledger.clone()));
    }

    // 13: reruns and checkpoint/restore reproduce byte-identical reports.
    let cfg = line_config(64);
    let steps = cfg.steps();
    let full = run(&cfg, &smooth_profile(), steps, 10);
    let again = run(&cfg, &smooth_profile(), steps, 10);
    let half = run(&cfg, &smooth_profile(), steps / 2, 10);
    let cp = Checkpoint {
        config: cfg,
        state: half.snapshots.last().unwrap().clone(),
        ledger: half.ledger.clone(),
    };
    let restored = Checkpoint::from_bytes(&cp.to_bytes().unwrap()).unwrap();
    let solver = Solver::new(&restored.config).unwrap();
    let rest = solver.run_until(restored.state, steps, 10, &NoForcing).unwrap();
    let mut resumed = restored.ledger;
    resumed.extend_from_slice(&rest.ledger[1..]);
    let a = ledger_csv(&full.ledger).unwrap();
    let sweep_again = run_sweep(&sweep_plan).unwrap();
    let identical = a == ledger_csv(&again.ledger).unwrap()
        && a == ledger_csv(&resumed).unwrap()
        && sweep.members_csv().unwrap() == sweep_again.members_csv().unwrap()
        && defects.csv().unwrap() == sweep_again.defects.unwrap().csv().unwrap();
    out.push(Outcome {
        id: 13,
        name: "determinism",
        pass: identical,
        detail: format!("ledger CSV ({} bytes) identical across rerun and restore at step {}; sweep CSVs identical", a.len(), steps / 2),
    });
    ledgers.push(("determinism", full.ledger));

    // 8: mass conservation on every run above.
    let worst = ledgers.iter().map(|(_, l)| mass_drift(l)).fold(0.0, f64::max);
    out.push(Outcome {
        id: 8,
        name: "mass conservation",
        pass: worst <= 1e-10,
        detail: format!("max relative drift {worst:.2e} <= 1e-10 over {} runs", ledgers.len()),
    });

    out.sort_by_key(|o| o.id);
    let mut failed = 0;
    for o in &out {
        println!("[{}] {:>2}. {}: {}", if o.pass { "PASS" } else { "FAIL" }, o.id, o.name, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {} failed", out.len() - failed, failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
