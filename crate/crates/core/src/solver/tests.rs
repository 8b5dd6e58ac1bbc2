use super::*;
use crate::grid::VectorField;

fn config_1d(cells: usize) -> SimConfig {
    SimConfig {
        grid: Grid::line(cells, 1.0).unwrap(),
        t_end: 0.05,
        ..SimConfig::default_1d()
    }
}

fn perturbed(grid: Grid) -> InitialData {
    InitialData::from_profile(
        grid,
        &Profile::ProportionalPerturbed {
            base: 1.0,
            ratio: 1.0,
            amplitude: 0.4,
            velocity: 0.5,
            field: 0.3,
        },
    )
}

#[test]
fn heat_oracle_for_pure_diffusion() {
    let mut cfg = config_1d(64);
    cfg.epsilon = 0.1;
    cfg.dt = 1e-4;
    let solver = Solver::new(&cfg).unwrap();
    let pi = std::f64::consts::PI;
    let mut data = InitialData::from_profile(cfg.grid, &Profile::Uniform { rho: 1.0, n: 1.0 });
    data.rho0 = ScalarField::from_fn(cfg.grid, Bc::Neumann, |x| 1.0 + 0.1 * (pi * x[0]).cos());
    let mut s = solver.initial_state(&data).unwrap();
    for _ in 0..500 {
        let (rho, n) = solver.step_continuity(&s, cfg.dt).unwrap();
        s.rho = rho;
        s.n = n;
        s.time += cfg.dt;
    }
    let decay = (-0.1 * pi * pi * s.time).exp();
    for k in 0..cfg.grid.len() {
        let x = cfg.grid.coord(k)[0];
        let want = 1.0 + 0.1 * decay * (pi * x).cos();
        assert!((s.rho.values[k] - want).abs() < 2e-5, "{} vs {want}", s.rho.values[k]);
    }
}

#[test]
fn no_flow_no_diffusion_leaves_densities_bitwise() {
    let mut cfg = config_1d(32);
    cfg.epsilon = 0.0;
    let solver = Solver::new(&cfg).unwrap();
    let mut data = perturbed(cfg.grid);
    data.u0 = VectorField::zeros(cfg.grid, Bc::Dirichlet);
    let s = solver.initial_state(&data).unwrap();
    let (rho, n) = solver.step_continuity(&s, cfg.dt).unwrap();
    assert_eq!(rho.values, s.rho.values);
    assert_eq!(n.values, s.n.values);
}

#[test]
fn proportional_densities_stay_proportional() {
    let cfg = config_1d(48);
    let solver = Solver::new(&cfg).unwrap();
    let mut data = perturbed(cfg.grid);
    data.rho0.values = data.n0.values.iter().map(|v| 2.0 * v).collect();
    let mut s = solver.initial_state(&data).unwrap();
    for _ in 0..20 {
        s = solver.step(&s).unwrap().state;
    }
    for (r, n) in s.rho.values.iter().zip(&s.n.values) {
        assert!((r - 2.0 * n).abs() < 1e-12);
    }
}

#[test]
fn uniform_state_is_stationary() {
    let cfg = config_1d(32);
    let solver = Solver::new(&cfg).unwrap();
    let data = InitialData::from_profile(cfg.grid, &Profile::Uniform { rho: 1.5, n: 1.0 });
    let mut s = solver.initial_state(&data).unwrap();
    for _ in 0..1000 {
        s = solver.step(&s).unwrap().state;
    }
    assert!(s.u.iter().all(|c| c.abs() < 1e-12));
    assert!(s.rho.values.iter().all(|r| (r - 1.5).abs() < 1e-12));
    assert!(s.n.values.iter().all(|r| (r - 1.0).abs() < 1e-12));
}

#[test]
fn induction_eigenmode_decays() {
    let cfg = config_1d(64);
    let solver = Solver::new(&cfg).unwrap();
    let pi = std::f64::consts::PI;
    let mut data = InitialData::from_profile(cfg.grid, &Profile::Uniform { rho: 1.0, n: 1.0 });
    data.magnetic0 = ScalarField::from_fn(cfg.grid, Bc::Dirichlet, |x| (pi * x[0]).sin());
    let mut s = solver.initial_state(&data).unwrap();
    let steps = 100i32;
    for _ in 0..steps {
        s.magnetic = solver.step_induction(&s, cfg.dt).unwrap();
        s.time += cfg.dt;
    }
    let h = cfg.grid.spacing(0);
    let lambda_h = 4.0 / (h * h) * (0.5 * pi * h).sin().powi(2);
    let want = (1.0 + cfg.dt * cfg.nu * lambda_h).powi(-steps);
    let got = s.magnetic.values[32];
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    assert!((want - (-cfg.nu * pi * pi * s.time).exp()).abs() < 1e-2 * want);
    let zero = solver.initial_state(&InitialData::from_profile(cfg.grid, &Profile::Uniform { rho: 1.0, n: 1.0 })).unwrap();
    assert!(solver.step_induction(&zero, cfg.dt).unwrap().values.iter().all(|v| *v == 0.0));
}

#[test]
fn potential_formulation_keeps_field_solenoidal() {
    let mut cfg = config_1d(16);
    cfg.grid = Grid::square(16, 1.0).unwrap();
    cfg.modes = 8;
    cfg.dt = 1e-3;
    let solver = Solver::new(&cfg).unwrap();
    let data = perturbed(cfg.grid);
    let mut s = solver.initial_state(&data).unwrap();
    for _ in 0..10 {
        let out = solver.step(&s).unwrap();
        assert!(out.ledger.div_h_max <= 1e-10, "{}", out.ledger.div_h_max);
        s = out.state;
    }
}

#[test]
fn runs_conserve_mass_and_are_deterministic() {
    let cfg = config_1d(64);
    let solver = Solver::new(&cfg).unwrap();
    let s0 = solver.initial_state(&perturbed(cfg.grid)).unwrap();
    let a = solver.run(s0.clone(), 8, &NoForcing).unwrap();
    let b = solver.run(s0, 8, &NoForcing).unwrap();
    assert_eq!(a.snapshots, b.snapshots);
    let first = a.ledger[0];
    for row in &a.ledger {
        assert!(((row.mass_rho - first.mass_rho) / first.mass_rho).abs() < 1e-12);
        assert!(((row.mass_n - first.mass_n) / first.mass_n).abs() < 1e-12);
        assert!(row.ratio_min >= -1e-10);
        assert!(row.is_finite());
    }
}

#[test]
fn oversized_step_reports_cfl() {
    let mut cfg = config_1d(64);
    cfg.dt = 0.5;
    let solver = Solver::new(&cfg).unwrap();
    let mut data = perturbed(cfg.grid);
    data.u0 = VectorField::from_fn(cfg.grid, Bc::Dirichlet, |x| [5.0 * (std::f64::consts::PI * x[0]).sin(), 0.0]);
    let s = solver.initial_state(&data).unwrap();
    match solver.step(&s) {
        Err(Error::Cfl { dt, suggested }) => assert!(suggested < dt),
        other => panic!("expected a CFL error, got {other:?}"),
    }
}

#[test]
fn global_vacuum_is_a_numeric_error() {
    let mut cfg = config_1d(16);
    cfg.modes = 8;
    let solver = Solver::new(&cfg).unwrap();
    let data = InitialData::from_profile(cfg.grid, &Profile::Uniform { rho: 0.0, n: 0.0 });
    let s = solver.initial_state(&data).unwrap();
    assert!(matches!(solver.step(&s), Err(Error::Numeric(_))));
}

#[test]
fn invalid_viscosity_is_rejected() {
    let mut cfg = config_1d(16);
    cfg.lambda = -1.0;
    match Solver::new(&cfg) {
        Err(Error::Hypothesis { hypothesis, .. }) => assert_eq!(hypothesis, "2μ+3λ ≥ 0"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn mollification_examples() {
    let grid = Grid::line(64, 1.0).unwrap();
    let vac = InitialData::from_profile(grid, &Profile::VacuumRegion { base: 1.0, ratio: 1.0, velocity: 0.2 });
    let m = mollify_initial_data(&vac, 1e-3, 4.0, 2.0).unwrap();
    let min = m.rho0.values.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((min - 1e-3).abs() < 1e-15);
    let smooth = perturbed(grid);
    let m = mollify_initial_data(&smooth, 1e-3, 4.0, 2.0).unwrap();
    for (a, b) in m.rho0.values.iter().zip(&smooth.rho0.values) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
    let dist = |d: f64| {
        let m = mollify_initial_data(&vac, d, 4.0, 2.0).unwrap();
        m.rho0
            .values
            .iter()
            .zip(&vac.rho0.values)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let ds: Vec<f64> = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3].iter().map(|d| dist(*d)).collect();
    assert!(ds.windows(2).all(|w| w[1] < w[0]), "{ds:?}");
    let mut bad = smooth.clone();
    bad.rho0.values[10] = 10.0 * bad.n0.values[10];
    assert!(matches!(mollify_initial_data(&bad, 1e-3, 4.0, 2.0), Err(Error::Domain(_))));
}

#[test]
fn energy_overshoot_at_zero_epsilon_is_first_order() {
    let mut excess = Vec::new();
    for dt in [1e-3, 5e-4, 2.5e-4] {
        let mut cfg = config_1d(64);
        cfg.epsilon = 0.0;
        cfg.dt = dt;
        cfg.t_end = 0.1;
        let solver = Solver::new(&cfg).unwrap();
        let s0 = solver.initial_state(&perturbed(cfg.grid)).unwrap();
        let tr = solver.run(s0, 4, &NoForcing).unwrap();
        let e0 = tr.ledger[0].total();
        let mut acc = 0.0;
        let mut worst: f64 = f64::NEG_INFINITY;
        for row in &tr.ledger[1..] {
            acc += dt * row.dissipation_rate;
            worst = worst.max(row.total() + acc - e0);
        }
        assert!(worst <= dt * (1.0 + e0), "dt {dt}: excess {worst}");
        excess.push(worst);
    }
    for w in excess.windows(2) {
        assert!(w[1] <= 0.55 * w[0], "{excess:?}");
    }
}
