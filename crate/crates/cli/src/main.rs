use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use bifluid_core::diagnostics::ledger_csv;
use bifluid_core::harness::{closure_audit, run_sweep, verify_manufactured, InvariantSuite};
use bifluid_core::io::{load_config, read_checkpoint, write_report, Checkpoint, Report, RunConfig};
use bifluid_core::solver::{mollify_initial_data, InitialData, NoForcing, Solver};

#[derive(Parser)]
#[command(name = "bifluid", version, about = "Two-fluid compressible MHD solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; omitted keys take their defaults.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV reports and manifest.json.
    #[arg(long)]
    out: PathBuf,
    /// Reserved: runs are deterministic. Overrides the audit sample seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Snapshot cadence (overrides `snapshots` in the config).
    #[arg(long)]
    snapshots: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its energy ledger and final checkpoint.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Continue from a checkpoint written by an earlier run of the same config.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Stop after this step instead of at `t_end`.
        #[arg(long)]
        stop_at: Option<u64>,
    },
    /// Run a parameter sweep and its defect report.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Run the manufactured-solution convergence studies listed in `cases`.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// Audit the pressure closure on random samples.
    Audit {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut cfg = load_config(&common.config)?;
    if let Some(s) = common.snapshots {
        if s == 0 {
            bail!("--snapshots must be positive");
        }
        cfg.snapshots = s;
    }
    if let Some(seed) = common.seed {
        cfg.audit_seed = seed;
    }
    Ok(cfg)
}

fn simulate(cfg: &RunConfig, resume: Option<&PathBuf>, stop_at: Option<u64>) -> Result<Report> {
    let sim = cfg.sim_config()?;
    let solver = Solver::new(&sim)?;
    let (state, mut ledger) = match resume {
        Some(path) => {
            let cp = read_checkpoint(path)?;
            if cp.config != sim {
                bail!("checkpoint {} was written for a different configuration", path.display());
            }
            (cp.state, cp.ledger)
        }
        None => {
            let raw = InitialData::from_profile(sim.grid, &cfg.profile());
            let data = if cfg.mollify {
                mollify_initial_data(&raw, sim.reg.delta, sim.reg.b, sim.closure.c0)?
            } else {
                raw
            };
            (solver.initial_state(&data)?, Vec::new())
        }
    };
    let steps = sim.steps();
    let end = stop_at.unwrap_or(steps).min(steps);
    let stride = (steps / cfg.snapshots as u64).max(1);
    let traj = solver.run_until(state, end, stride, &NoForcing)?;
    // The first row repeats the checkpoint's last row.
    let skip = usize::from(!ledger.is_empty());
    ledger.extend_from_slice(&traj.ledger[skip..]);
    let last = traj.snapshots.last().cloned().context("run produced no snapshot")?;

    let suite = InvariantSuite::evaluate(&ledger, &sim);
    let mut report = Report::new("simulate");
    report.passed = suite.all_pass();
    report.add("ledger.csv", ledger_csv(&ledger)?);
    report.add("invariants.csv", suite_csv(&suite));
    let cp = Checkpoint {
        config: sim,
        state: last,
        ledger,
    };
    report.add("checkpoint.bin", cp.to_bytes()?);
    Ok(report)
}

fn suite_csv(s: &InvariantSuite) -> Vec<u8> {
    let rows = [
        ("mass", s.mass_drift, InvariantSuite::MASS_TOL, s.mass),
        ("ratio", s.ratio_min, -InvariantSuite::RATIO_TOL, s.ratio),
        ("positivity", s.density_min, 0.0, s.positivity),
        ("div_h", s.div_h_max, InvariantSuite::DIV_TOL, s.div_h),
        ("energy", s.energy_excess, s.energy_allowance, s.energy),
        ("energy_asserted", f64::from(u8::from(s.energy_asserted)), 1.0, true),
    ];
    let mut out = String::from("invariant,value,limit,passed\n");
    for (name, v, lim, ok) in rows {
        out.push_str(&format!("{name},{v},{lim},{ok}\n"));
    }
    out.into_bytes()
}

fn sweep(cfg: &RunConfig) -> Result<Report> {
    let plan = cfg.sweep_plan()?;
    let result = run_sweep(&plan)?;
    let mut report = Report::new("sweep");
    report.passed = result.all_pass();
    report.add("members.csv", result.members_csv()?);
    for (i, t) in result.trajectories.iter().enumerate() {
        report.add(format!("ledger_{i:02}.csv"), ledger_csv(&t.ledger)?);
    }
    if let Some(d) = &result.defects {
        report.add("defects.csv", d.csv()?);
    }
    for (i, msg) in &result.failures {
        eprintln!("member {i} failed: {msg}");
    }
    Ok(report)
}

fn verify(cfg: &RunConfig) -> Result<Report> {
    let sim = cfg.sim_config()?;
    let mut report = Report::new("verify");
    for case in cfg.manufactured_cases()? {
        let table = verify_manufactured(&sim, case)?;
        eprintln!(
            "{}: observed order {:.3} (expected >= {})",
            case.id(),
            table.observed_order,
            table.expected_order
        );
        report.passed &= table.passes();
        report.add(format!("convergence_{}.csv", case.id()), table.csv()?);
    }
    Ok(report)
}

fn audit(cfg: &RunConfig) -> Result<Report> {
    let plan = cfg.audit_plan();
    let mut report = Report::new("audit");
    for p in cfg.audit_params()? {
        let r = closure_audit(&p, &plan);
        for c in r.checks.iter().filter(|c| !c.passed) {
            eprintln!("({}, {}) {} failed: worst {:e} at {:?}", p.gamma_plus, p.gamma_minus, c.name, c.worst, c.worst_at);
        }
        report.passed &= r.all_pass();
        report.add(format!("audit_{}_{}.csv", p.gamma_plus, p.gamma_minus), r.csv()?);
    }
    Ok(report)
}

fn run(cli: Cli) -> Result<bool> {
    let common = match &cli.command {
        Command::Simulate { common, .. } | Command::Sweep { common } | Command::Verify { common } | Command::Audit { common } => {
            common
        }
    };
    let cfg = load(common)?;
    let report = match &cli.command {
        Command::Simulate { resume, stop_at, .. } => simulate(&cfg, resume.as_ref(), *stop_at)?,
        Command::Sweep { .. } => sweep(&cfg)?,
        Command::Verify { .. } => verify(&cfg)?,
        Command::Audit { .. } => audit(&cfg)?,
    };
    let manifest = write_report(&report, &common.out, &cfg)?;
    eprintln!(
        "{}: {} files written to {} ({})",
        manifest.command,
        manifest.files.len() + 1,
        common.out.display(),
        if report.passed { "all invariants pass" } else { "invariant failures" }
    );
    Ok(report.passed)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
