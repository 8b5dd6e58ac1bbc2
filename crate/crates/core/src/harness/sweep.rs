use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{defect_report, DefectReport, EnergyLedger};
use crate::error::{Error, Result};
use crate::solver::{mollify_initial_data, InitialData, NoForcing, Profile, SimConfig, Solver, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Modes,
    Epsilon,
    Delta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPlan {
    pub base: SimConfig,
    pub profile: Profile,
    pub axis: SweepAxis,
    /// Decreasing for `Epsilon` and `Delta`, increasing for `Modes`.
    pub values: Vec<f64>,
    pub snapshots: usize,
    pub cutoff_levels: Vec<f64>,
    pub s_exponents: Vec<f64>,
}

impl SweepPlan {
    pub fn new(base: SimConfig, profile: Profile, axis: SweepAxis, values: Vec<f64>) -> Self {
        Self {
            base,
            profile,
            axis,
            values,
            snapshots: 32,
            cutoff_levels: vec![1.0, 2.0, 4.0],
            s_exponents: vec![1.0, 2.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() < 3 {
            return Err(Error::domain(format!("a sweep needs at least 3 values, got {}", self.values.len())));
        }
        let ok = match self.axis {
            SweepAxis::Modes => self.values.windows(2).all(|w| w[1] > w[0]) && self.values.iter().all(|v| v.fract() == 0.0 && *v >= 1.0),
            _ => self.values.windows(2).all(|w| w[1] < w[0]),
        };
        if !ok {
            return Err(Error::domain(format!(
                "{:?} sweep values must be strictly {}",
                self.axis,
                if self.axis == SweepAxis::Modes { "increasing integers" } else { "decreasing" }
            )));
        }
        if self.snapshots == 0 {
            return Err(Error::domain("snapshot cadence must be positive"));
        }
        for c in self.members() {
            c.validate()?;
        }
        Ok(())
    }

    pub fn members(&self) -> Vec<SimConfig> {
        self.values
            .iter()
            .map(|&v| {
                let mut c = self.base;
                match self.axis {
                    SweepAxis::Modes => c.modes = v as usize,
                    SweepAxis::Epsilon => c.epsilon = v,
                    SweepAxis::Delta => c.reg.delta = v,
                }
                c
            })
            .collect()
    }

    /// Initial data of a member: the profile, mollified at the member's `delta`.
    pub fn initial_data(&self, config: &SimConfig) -> Result<InitialData> {
        let raw = InitialData::from_profile(config.grid, &self.profile);
        if config.reg.delta > 0.0 {
            mollify_initial_data(&raw, config.reg.delta, config.reg.b, config.closure.c0)
        } else {
            Ok(raw)
        }
    }
}

/// Pass/fail of the solver invariants on one trajectory, with the worst values seen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSuite {
    pub mass_drift: f64,
    pub ratio_min: f64,
    pub density_min: f64,
    pub div_h_max: f64,
    /// Largest `E(t_m) + sum dt D - E(0)` over the run.
    pub energy_excess: f64,
    pub energy_allowance: f64,
    /// The energy check is asserted only at `epsilon = 0`; otherwise it is reported.
    pub energy_asserted: bool,
    pub mass: bool,
    pub ratio: bool,
    pub positivity: bool,
    pub div_h: bool,
    pub energy: bool,
}

impl InvariantSuite {
    pub const MASS_TOL: f64 = 1e-10;
    pub const RATIO_TOL: f64 = 1e-10;
    pub const DIV_TOL: f64 = 1e-10;

    /// Evaluates the suite on a ledger; the energy allowance is `dt (1 + E(0))`.
    pub fn evaluate(ledger: &[EnergyLedger], config: &SimConfig) -> Self {
        let dt = config.dt;
        let energy_asserted = config.epsilon == 0.0;
        let first = ledger.first().copied().unwrap_or_default();
        let rel = |a: f64, b: f64| if b != 0.0 { ((a - b) / b).abs() } else { a.abs() };
        let mut mass_drift: f64 = 0.0;
        let mut ratio_min = f64::INFINITY;
        let mut density_min = f64::INFINITY;
        let mut div_h_max: f64 = 0.0;
        let mut excess = f64::NEG_INFINITY;
        let mut acc = 0.0;
        for (i, row) in ledger.iter().enumerate() {
            mass_drift = mass_drift.max(rel(row.mass_rho, first.mass_rho)).max(rel(row.mass_n, first.mass_n));
            ratio_min = ratio_min.min(row.ratio_min);
            density_min = density_min.min(row.density_min);
            div_h_max = div_h_max.max(row.div_h_max);
            if i > 0 {
                acc += dt * row.dissipation_rate;
                excess = excess.max(row.total() + acc - first.total());
            }
        }
        let allowance = dt * (1.0 + first.total().abs());
        Self {
            mass_drift,
            ratio_min,
            density_min,
            div_h_max,
            energy_excess: excess.max(0.0),
            energy_allowance: allowance,
            energy_asserted,
            mass: mass_drift <= Self::MASS_TOL,
            ratio: ratio_min >= -Self::RATIO_TOL,
            positivity: density_min >= 0.0,
            div_h: div_h_max <= Self::DIV_TOL,
            energy: !energy_asserted || excess <= allowance,
        }
    }

    pub fn all_pass(&self) -> bool {
        self.mass && self.ratio && self.positivity && self.div_h && self.energy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub value: f64,
    pub final_ledger: EnergyLedger,
    pub suite: InvariantSuite,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub plan: SweepPlan,
    pub members: Vec<MemberReport>,
    /// `None` when a member failed.
    pub defects: Option<DefectReport>,
    pub failures: Vec<(usize, String)>,
    /// Kept out of every CSV so that reports stay reproducible.
    #[serde(skip)]
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub trajectories: Vec<Trajectory>,
}

impl SweepReport {
    pub fn all_pass(&self) -> bool {
        self.failures.is_empty() && self.members.iter().all(|m| m.suite.all_pass())
    }

    /// One row per member: parameter, final ledger and invariant outcomes.
    pub fn members_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Numeric(format!("csv: {e}"));
        let mut header = vec!["index".to_string(), "value".to_string(), "time".to_string()];
        header.extend(EnergyLedger::COLUMNS.iter().map(|c| c.to_string()));
        header.extend(
            [
                "mass_drift",
                "energy_excess",
                "energy_allowance",
                "mass_ok",
                "ratio_ok",
                "positivity_ok",
                "div_h_ok",
                "energy_ok",
            ]
            .iter()
            .map(|c| c.to_string()),
        );
        w.write_record(&header).map_err(err)?;
        for (i, m) in self.members.iter().enumerate() {
            let mut row = vec![i.to_string(), m.value.to_string(), m.final_ledger.time.to_string()];
            row.extend(m.final_ledger.values().iter().map(|v| v.to_string()));
            let s = m.suite;
            row.extend([s.mass_drift.to_string(), s.energy_excess.to_string(), s.energy_allowance.to_string()]);
            row.extend([s.mass, s.ratio, s.positivity, s.div_h, s.energy].iter().map(|b| b.to_string()));
            w.write_record(&row).map_err(err)?;
        }
        for (i, msg) in &self.failures {
            w.write_record([i.to_string(), "failed".into(), msg.clone()]).map_err(err)?;
        }
        w.into_inner().map_err(|e| Error::Numeric(format!("csv: {e}")))
    }
}

/// Runs one configuration from its initial data to `t_end`.
pub fn run_member(plan: &SweepPlan, config: &SimConfig) -> Result<Trajectory> {
    let solver = Solver::new(config)?;
    let state = solver.initial_state(&plan.initial_data(config)?)?;
    solver.run(state, plan.snapshots, &NoForcing)
}

pub fn run_sweep(plan: &SweepPlan) -> Result<SweepReport> {
    plan.validate()?;
    let start = std::time::Instant::now();
    let configs = plan.members();
    let results: Vec<Result<Trajectory>> = configs.par_iter().map(|c| run_member(plan, c)).collect();
    let mut members = Vec::new();
    let mut failures = Vec::new();
    let mut trajectories = Vec::new();
    for (i, (res, cfg)) in results.into_iter().zip(&configs).enumerate() {
        match res {
            Ok(t) => {
                members.push(MemberReport {
                    value: plan.values[i],
                    final_ledger: t.ledger.last().copied().unwrap_or_default(),
                    suite: InvariantSuite::evaluate(&t.ledger, cfg),
                });
                trajectories.push(t);
            }
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    let defects = if failures.is_empty() {
        Some(defect_report(
            &trajectories,
            trajectories.len() - 1,
            &configs,
            &plan.cutoff_levels,
            &plan.s_exponents,
        )?)
    } else {
        None
    };
    Ok(SweepReport {
        plan: plan.clone(),
        members,
        defects,
        failures,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
        trajectories,
    })
}
