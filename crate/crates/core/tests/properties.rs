use proptest::prelude::*;

use bifluid_core::closure::{
    energy_density_hp, evaluate, h_delta, pi_monotone_witness, pressure, pressure_partials, solve_rho_plus,
    ClosureParams, DerivativeMajorants, PressureLaw,
};
use bifluid_core::diagnostics::{cutoff_tk, energy_ledger, internal_energy_real};
use bifluid_core::grid::{self, Bc, Grid, ScalarField, VectorField};
use bifluid_core::io::Checkpoint;
use bifluid_core::solver::{InitialData, Profile, SimConfig, SimState, Solver};

fn density() -> impl Strategy<Value = f64> {
    prop_oneof![1e-3..10.0f64, (-3.0..1.0f64).prop_map(|e| 10f64.powf(e))]
}

fn exponents() -> impl Strategy<Value = (f64, f64)> {
    (1.0..4.0f64, 1.0..4.0f64)
}

fn slack(lhs: f64, rhs: f64) -> f64 {
    (rhs - lhs) / 1f64.max(lhs.abs()).max(rhs.abs())
}

fn small_config(cells: usize) -> SimConfig {
    SimConfig {
        grid: Grid::line(cells, 1.0).unwrap(),
        modes: 8,
        dt: 1e-3,
        t_end: 0.01,
        ..SimConfig::default_1d()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rho_plus_lies_in_bracket_and_solves_closure(rho in density(), n in density(), (gp, gm) in exponents()) {
        let p = ClosureParams::implicit(gp, gm).unwrap();
        let c = p.constants();
        let r = p.r();
        let x = solve_rho_plus(rho, n, &p).unwrap();
        let nr = n.powf(1.0 / r);
        prop_assert!(slack(rho.max(c.q_lo * (rho + nr)), x) >= -1e-12);
        prop_assert!(slack(x, c.q_hi * (rho + nr)) >= -1e-12);
        let res = (x.powf(r) * (x - rho) - n * x).abs();
        prop_assert!(res <= 1e-12 * (1.0 + x.powf(1.0 + r)));
    }

    #[test]
    fn partials_respect_signs_and_majorants(rho in density(), n in density(), (gp, gm) in exponents()) {
        let p = ClosureParams::implicit(gp, gm).unwrap();
        let c = p.constants();
        let d = pressure_partials(rho, n, &p).unwrap();
        let [b_rn, b_pr, b_pn, b_pnn] = DerivativeMajorants::new(&p).bounds(rho, n, &p);
        prop_assert!(slack(c.q_lo, d.drho_plus_drho) >= -1e-10 && slack(d.drho_plus_drho, c.q_hi) >= -1e-10);
        prop_assert!(d.drho_plus_dn >= 0.0 && slack(d.drho_plus_dn, b_rn) >= -1e-10);
        prop_assert!(d.dp_drho >= 0.0 && slack(d.dp_drho, b_pr) >= -1e-10);
        prop_assert!(d.dp_dn >= 0.0 && slack(d.dp_dn, b_pn) >= -1e-10);
        prop_assert!(slack(d.d2p_dn2.unwrap().abs(), b_pnn) >= -1e-10);
        let sum = rho.powf(gp) + n.powf(gm);
        let pr = pressure(rho, n, &p).unwrap();
        prop_assert!(slack(c.c_lo * sum, pr) >= -1e-10 && slack(pr, c.c_hi * sum) >= -1e-10);
    }

    #[test]
    fn equal_exponents_collapse(rho in density(), n in density(), g in 1.0..4.0f64) {
        let p = ClosureParams::implicit(g, g).unwrap();
        let e = evaluate(rho, n, &p).unwrap();
        prop_assert!((e.rho_plus - (rho + n)).abs() <= 1e-11 * (1.0 + rho + n));
        prop_assert!((e.pressure - (rho + n).powf(g)).abs() <= 1e-10 * (1.0 + e.pressure));
    }

    #[test]
    fn pressure_is_symmetric_under_species_swap(rho in density(), n in density(), (gp, gm) in exponents()) {
        let p = ClosureParams::implicit(gp, gm).unwrap();
        let q = ClosureParams::implicit(gm, gp).unwrap();
        let a = pressure(rho, n, &p).unwrap();
        let b = pressure(n, rho, &q).unwrap();
        prop_assert!((a - b).abs() <= 1e-10 * (1.0 + a));
    }

    #[test]
    fn pressure_is_nondecreasing_along_rays(s in 0.0..2.0f64, (gp, gm) in exponents()) {
        let p = ClosureParams::implicit(gp, gm).unwrap().with_c0(2.0).unwrap();
        let grid: Vec<f64> = (0..100).map(|i| 0.1 * i as f64).collect();
        prop_assert!(pi_monotone_witness(s, &grid, &p).unwrap() >= -1e-10);
        let values: Vec<f64> = grid.iter().map(|&n| pressure(n * s, n, &p).unwrap()).collect();
        prop_assert!(values.windows(2).all(|w| w[1] - w[0] >= -1e-10));
    }

    #[test]
    fn regularization_is_nonnegative(rho in density(), n in density()) {
        let cfg = SimConfig::default_1d();
        prop_assert!(h_delta(rho, n, &cfg.closure, &cfg.reg).unwrap() >= 0.0);
    }

    #[test]
    fn cutoffs_are_bounded_monotone_and_contractive(a in 0.0..20.0f64, b in 0.0..20.0f64, k in 0.5..5.0f64) {
        let (ta, tb) = (cutoff_tk(a, k), cutoff_tk(b, k));
        prop_assert!(ta <= a.min(2.0 * k) + 1e-12);
        prop_assert!((ta - tb).abs() <= (a - b).abs() + 1e-12);
        if a <= b {
            prop_assert!(ta <= tb + 1e-12);
        }
        let h = 1e-3;
        if a >= h {
            let second = cutoff_tk(a + h, k) - 2.0 * ta + cutoff_tk(a - h, k);
            prop_assert!(second <= 1e-10);
        }
    }

    #[test]
    fn summation_by_parts_holds(c in prop::collection::vec(-1.0..1.0f64, 6)) {
        let g = Grid::line(32, 1.0).unwrap();
        let pi = std::f64::consts::PI;
        let f = ScalarField::from_fn(g, Bc::Neumann, |x| c[0] + c[1] * (pi * x[0]).cos() + c[2] * x[0] * x[0]);
        let v = VectorField::from_fn(g, Bc::Dirichlet, |x| [c[3] * (pi * x[0]).sin() + c[4] * (2.0 * pi * x[0]).sin() + c[5] * x[0] * (1.0 - x[0]), 0.0]);
        let lhs = grid::vector_inner_product(&grid::gradient(&f), &v).unwrap();
        let rhs = grid::inner_product(&f, &grid::divergence(&v)).unwrap();
        prop_assert!((lhs + rhs).abs() <= 1e-10);
    }

    #[test]
    fn discrete_div_curl_vanishes(c in prop::collection::vec(-1.0..1.0f64, 3)) {
        let g = Grid::square(12, 1.0).unwrap();
        let a = ScalarField::from_fn(g, Bc::Dirichlet, |x| {
            c[0] * x[0] * x[1] * (1.0 - x[0]) * (1.0 - x[1]) + c[1] * (3.0 * x[0]).sin() * (2.0 * x[1]).cos() + c[2]
        });
        let h = grid::curl_scalar(&a).unwrap();
        prop_assert!(grid::divergence(&h).max_abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steps_conserve_mass_and_keep_ratio(
        amplitude in 0.0..0.45f64,
        ratio in 0.6..1.6f64,
        velocity in -0.5..0.5f64,
        field in -0.5..0.5f64,
        epsilon in prop_oneof![Just(0.0), 1e-3..1e-1f64],
    ) {
        let mut cfg = small_config(32);
        cfg.epsilon = epsilon;
        let profile = Profile::ProportionalPerturbed { base: 1.0, ratio, amplitude, velocity, field };
        let data = InitialData::from_profile(cfg.grid, &profile);
        let c0 = data.ratio_bound().unwrap();
        cfg.closure = cfg.closure.with_c0(c0.max(1.0)).unwrap();
        let solver = Solver::new(&cfg).unwrap();
        let s0 = solver.initial_state(&data).unwrap();
        let traj = solver.run(s0, 10, &bifluid_core::solver::NoForcing).unwrap();
        let first = traj.ledger[0];
        for row in &traj.ledger {
            prop_assert!(((row.mass_rho - first.mass_rho) / first.mass_rho).abs() <= 1e-10);
            prop_assert!(((row.mass_n - first.mass_n) / first.mass_n).abs() <= 1e-10);
            prop_assert!(row.ratio_min >= -1e-10 * (1.0 + c0));
            prop_assert!(row.density_min >= 0.0);
        }
    }

    #[test]
    fn ledger_energy_matches_direct_quadrature(amplitude in 0.0..0.45f64, velocity in -0.5..0.5f64, field in -0.5..0.5f64) {
        let cfg = small_config(24);
        let data = InitialData::from_profile(cfg.grid, &Profile::ProportionalPerturbed { base: 1.0, ratio: 1.0, amplitude, velocity, field });
        let solver = Solver::new(&cfg).unwrap();
        let state = solver.initial_state(&data).unwrap();
        let row = energy_ledger(&state, &cfg).unwrap();
        let g = cfg.grid;
        let u = solver.velocity_nodes(&state);
        let mut direct = 0.0;
        for k in 0..g.len() {
            let (r, n) = (state.rho.values[k], state.n.values[k]);
            let e = 0.5 * (r + n) * u[0][k] * u[0][k]
                + 0.5 * state.magnetic.values[k].powi(2)
                + energy_density_hp(r, n, &cfg.closure).unwrap()
                + h_delta(r, n, &cfg.closure, &cfg.reg).unwrap();
            direct += g.weight(k) * e;
        }
        prop_assert!((row.total() - direct).abs() <= 1e-12 * (1.0 + direct.abs()));
        let real = internal_energy_real(&state, &cfg.closure).unwrap();
        prop_assert!((real - row.internal).abs() <= 1e-8 * (1.0 + row.internal.abs()));
    }

    #[test]
    fn checkpoint_bytes_round_trip(values in prop::collection::vec(any::<f64>(), 3 * 17 + 8), time in any::<f64>(), step in 0u64..1_000_000) {
        let cfg = small_config(16);
        let g = cfg.grid;
        let field = |o: usize, bc: Bc| ScalarField { grid: g, values: values[o..o + 17].to_vec(), bc };
        let state = SimState {
            time,
            step,
            rho: field(0, Bc::Neumann),
            n: field(17, Bc::Neumann),
            u: values[51..59].to_vec(),
            magnetic: field(34, Bc::Dirichlet),
        };
        let cp = Checkpoint { config: cfg, state, ledger: Vec::new() };
        let back = Checkpoint::from_bytes(&cp.to_bytes().unwrap()).unwrap();
        let bits = |s: &SimState| -> Vec<u64> {
            s.rho.values.iter().chain(&s.n.values).chain(&s.u).chain(&s.magnetic.values).chain([&s.time]).map(|v| v.to_bits()).collect()
        };
        prop_assert_eq!(bits(&back.state), bits(&cp.state));
        prop_assert_eq!(back.state.step, step);
        prop_assert_eq!(back.config, cfg);
    }
}

#[test]
fn explicit_law_is_the_sum_of_powers() {
    let p = ClosureParams::new(2.0, 1.5, PressureLaw::Explicit, 1.0).unwrap();
    let v = pressure(0.7, 1.3, &p).unwrap();
    assert!((v - (0.7f64.powi(2) + 1.3f64.powf(1.5))).abs() < 1e-14);
}
