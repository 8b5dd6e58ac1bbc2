//! Run configuration files, checkpoints and report directories.
//!
//! Configurations are flat TOML documents; unknown keys are rejected and the
//! physical constraints are re-validated on load. Checkpoints are one JSON
//! header line followed by a little-endian `f64` payload, so a restored state
//! is bit-identical to the saved one.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::closure::{ClosureParams, PressureLaw, RegularizationParams};
use crate::diagnostics::EnergyLedger;
use crate::error::{Error, Result};
use crate::grid::{Bc, Grid, ScalarField};
use crate::harness::{AuditPlan, ManufacturedCase, SweepAxis, SweepPlan};
use crate::solver::{Profile, SimConfig, SimState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileKind {
    Uniform,
    CosineBump,
    ProportionalPair,
    VacuumRegion,
}

/// File form of a run. Every key is optional; missing keys take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dim: usize,
    pub cells: usize,
    pub extent: f64,
    pub gamma_plus: f64,
    pub gamma_minus: f64,
    pub law: PressureLaw,
    pub c0: f64,
    pub delta: f64,
    /// Defaults to `ceil(A) + 2`.
    pub b: Option<f64>,
    /// Defaults to `b`.
    pub beta: Option<f64>,
    pub epsilon: f64,
    pub mu: f64,
    pub lambda: f64,
    pub nu: f64,
    pub modes: usize,
    pub dt: f64,
    pub t_end: f64,
    pub sigma: f64,

    pub profile: ProfileKind,
    /// Densities of the uniform profile.
    pub rho: f64,
    pub n: f64,
    pub base: f64,
    pub ratio: f64,
    pub amplitude: f64,
    pub velocity: f64,
    pub field: f64,
    /// Mollify the initial data at `delta` before running.
    pub mollify: bool,

    pub snapshots: usize,

    pub sweep_axis: SweepAxis,
    pub sweep_values: Vec<f64>,
    pub cutoff_levels: Vec<f64>,
    pub s_exponents: Vec<f64>,

    pub cases: Vec<String>,

    pub audit_samples: usize,
    pub audit_seed: u64,
    /// Exponent pairs `[gamma_plus, gamma_minus]`; empty means the pair above.
    pub audit_pairs: Vec<[f64; 2]>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let sim = SimConfig::default_1d();
        let plan = AuditPlan::default();
        Self {
            dim: 1,
            cells: sim.grid.cells(0),
            extent: sim.grid.extent(0),
            gamma_plus: sim.closure.gamma_plus,
            gamma_minus: sim.closure.gamma_minus,
            law: sim.closure.law,
            c0: sim.closure.c0,
            delta: sim.reg.delta,
            b: None,
            beta: None,
            epsilon: sim.epsilon,
            mu: sim.mu,
            lambda: sim.lambda,
            nu: sim.nu,
            modes: sim.modes,
            dt: sim.dt,
            t_end: sim.t_end,
            sigma: sim.sigma,
            profile: ProfileKind::ProportionalPair,
            rho: 1.0,
            n: 1.0,
            base: 1.0,
            ratio: 1.0,
            amplitude: 0.4,
            velocity: 0.1,
            field: 0.1,
            mollify: false,
            snapshots: 32,
            sweep_axis: SweepAxis::Epsilon,
            sweep_values: vec![1e-2, 5e-3, 2.5e-3],
            cutoff_levels: vec![1.0, 2.0, 4.0],
            s_exponents: vec![1.0, 2.0],
            cases: vec!["diffusion-1d".into(), "coupled-1d".into()],
            audit_samples: plan.samples,
            audit_seed: plan.seed,
            audit_pairs: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn closure(&self) -> Result<ClosureParams> {
        ClosureParams::new(self.gamma_plus, self.gamma_minus, self.law, self.c0)
    }

    pub fn sim_config(&self) -> Result<SimConfig> {
        let closure = self.closure()?;
        let grid = match self.dim {
            1 => Grid::line(self.cells, self.extent)?,
            2 => Grid::square(self.cells, self.extent)?,
            d => return Err(Error::domain(format!("dim must be 1 or 2, got {d}"))),
        };
        let b = self.b.unwrap_or_else(|| closure.constants().a_exponent.ceil() + 2.0);
        let cfg = SimConfig {
            grid,
            closure,
            reg: RegularizationParams {
                delta: self.delta,
                b,
                beta: self.beta.unwrap_or(b),
            },
            epsilon: self.epsilon,
            mu: self.mu,
            lambda: self.lambda,
            nu: self.nu,
            modes: self.modes,
            dt: self.dt,
            t_end: self.t_end,
            sigma: self.sigma,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn profile(&self) -> Profile {
        match self.profile {
            ProfileKind::Uniform => Profile::Uniform { rho: self.rho, n: self.n },
            ProfileKind::CosineBump => Profile::CosineBump {
                base: self.base,
                ratio: self.ratio,
                amplitude: self.amplitude,
                velocity: self.velocity,
                field: self.field,
            },
            ProfileKind::ProportionalPair => Profile::ProportionalPerturbed {
                base: self.base,
                ratio: self.ratio,
                amplitude: self.amplitude,
                velocity: self.velocity,
                field: self.field,
            },
            ProfileKind::VacuumRegion => Profile::VacuumRegion {
                base: self.base,
                ratio: self.ratio,
                velocity: self.velocity,
            },
        }
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan> {
        let mut plan = SweepPlan::new(self.sim_config()?, self.profile(), self.sweep_axis, self.sweep_values.clone());
        plan.snapshots = self.snapshots;
        plan.cutoff_levels = self.cutoff_levels.clone();
        plan.s_exponents = self.s_exponents.clone();
        plan.validate()?;
        Ok(plan)
    }

    pub fn manufactured_cases(&self) -> Result<Vec<ManufacturedCase>> {
        self.cases.iter().map(|c| c.parse()).collect()
    }

    pub fn audit_plan(&self) -> AuditPlan {
        AuditPlan {
            samples: self.audit_samples,
            seed: self.audit_seed,
            ..AuditPlan::default()
        }
    }

    pub fn audit_params(&self) -> Result<Vec<ClosureParams>> {
        if self.audit_pairs.is_empty() {
            return Ok(vec![self.closure()?]);
        }
        self.audit_pairs
            .iter()
            .map(|[gp, gm]| ClosureParams::new(*gp, *gm, self.law, self.c0))
            .collect()
    }

    /// Checks everything a subcommand could need. Sweep keys are only checked
    /// for consistency with each other, not against the base run.
    pub fn validate(&self) -> Result<()> {
        self.sim_config()?;
        if self.snapshots == 0 {
            return Err(Error::domain("snapshots must be positive"));
        }
        self.manufactured_cases()?;
        self.audit_params()?;
        let data = crate::solver::InitialData::from_profile(self.sim_config()?.grid, &self.profile());
        data.check_ratio(self.c0)
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_vec(self).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(hex::encode(Sha256::digest(&json)))
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::from_toml(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

const CHECKPOINT_FORMAT: &str = "bifluid-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;
const LEDGER_WIDTH: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: SimConfig,
    pub state: SimState,
    /// Ledger rows from step 0 up to and including `state.step`.
    pub ledger: Vec<EnergyLedger>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    config: SimConfig,
    step: u64,
    nodes: usize,
    u_len: usize,
    magnetic_bc: Bc,
    ledger_rows: usize,
}

fn ledger_raw(r: &EnergyLedger) -> [f64; LEDGER_WIDTH] {
    [
        r.time,
        r.step as f64,
        r.kinetic,
        r.magnetic,
        r.internal,
        r.artificial,
        r.sigma_l2,
        r.dissipation_rate,
        r.eps_dissipation,
        r.eps_dissipation_weighted,
        r.ratio_min,
        r.density_min,
        r.div_h_max,
        r.mass_rho,
        r.mass_n,
        if r.mass_regularized { 1.0 } else { 0.0 },
    ]
}

fn ledger_from_raw(v: &[f64]) -> EnergyLedger {
    EnergyLedger {
        time: v[0],
        step: v[1] as u64,
        kinetic: v[2],
        magnetic: v[3],
        internal: v[4],
        artificial: v[5],
        sigma_l2: v[6],
        dissipation_rate: v[7],
        eps_dissipation: v[8],
        eps_dissipation_weighted: v[9],
        ratio_min: v[10],
        density_min: v[11],
        div_h_max: v[12],
        mass_rho: v[13],
        mass_n: v[14],
        mass_regularized: v[15] != 0.0,
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let s = &self.state;
        let header = Header {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.config,
            step: s.step,
            nodes: s.rho.values.len(),
            u_len: s.u.len(),
            magnetic_bc: s.magnetic.bc,
            ledger_rows: self.ledger.len(),
        };
        let mut out = serde_json::to_vec(&header).map_err(|e| Error::Parse(e.to_string()))?;
        out.push(b'\n');
        let mut put = |v: f64| out.extend_from_slice(&v.to_le_bytes());
        put(s.time);
        s.rho.values.iter().chain(&s.n.values).chain(&s.u).chain(&s.magnetic.values).for_each(|&v| put(v));
        for row in &self.ledger {
            ledger_raw(row).into_iter().for_each(&mut put);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let split = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Parse("checkpoint header line missing".into()))?;
        let header: Header =
            serde_json::from_slice(&bytes[..split]).map_err(|e| Error::Parse(format!("checkpoint header: {e}")))?;
        if header.format != CHECKPOINT_FORMAT || header.version != CHECKPOINT_VERSION {
            return Err(Error::Parse(format!(
                "unsupported checkpoint {} v{}",
                header.format, header.version
            )));
        }
        header.config.validate()?;
        let grid = header.config.grid;
        if header.nodes != grid.len() {
            return Err(Error::Parse(format!(
                "checkpoint has {} nodes, config grid has {}",
                header.nodes,
                grid.len()
            )));
        }
        let payload = &bytes[split + 1..];
        let count = 1 + 3 * header.nodes + header.u_len + LEDGER_WIDTH * header.ledger_rows;
        if payload.len() != 8 * count {
            return Err(Error::Parse(format!(
                "checkpoint payload has {} bytes, expected {}",
                payload.len(),
                8 * count
            )));
        }
        let values: Vec<f64> = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let mut at = 1;
        let mut take = |len: usize| {
            let v = values[at..at + len].to_vec();
            at += len;
            v
        };
        let field = |values: Vec<f64>, bc: Bc| ScalarField { grid, values, bc };
        let rho = field(take(header.nodes), Bc::Neumann);
        let n = field(take(header.nodes), Bc::Neumann);
        let u = take(header.u_len);
        let magnetic = field(take(header.nodes), header.magnetic_bc);
        let ledger = take(LEDGER_WIDTH * header.ledger_rows)
            .chunks_exact(LEDGER_WIDTH)
            .map(ledger_from_raw)
            .collect();
        Ok(Self {
            config: header.config,
            state: SimState {
                time: values[0],
                step: header.step,
                rho,
                n,
                u,
                magnetic,
            },
            ledger,
        })
    }
}

pub fn write_checkpoint(path: impl AsRef<Path>, checkpoint: &Checkpoint) -> Result<()> {
    write_atomic(path.as_ref(), &checkpoint.to_bytes()?)
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

/// Writes via a temporary sibling and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Parse(format!("not a file path: {}", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Named output files plus the data recorded in the manifest.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub command: String,
    pub files: Vec<(String, Vec<u8>)>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub config_hash: String,
    pub passed: bool,
    pub files: Vec<ManifestEntry>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            files: Vec::new(),
            passed: true,
        }
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }
}

/// Writes every report file and `manifest.json` into `dir`.
pub fn write_report(report: &Report, dir: impl AsRef<Path>, config: &RunConfig) -> Result<Manifest> {
    let dir = dir.as_ref();
    let mut entries = Vec::new();
    for (name, bytes) in &report.files {
        write_atomic(&dir.join(name), bytes)?;
        entries.push(ManifestEntry {
            name: name.clone(),
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
    }
    let manifest = Manifest {
        command: report.command.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash()?,
        passed: report.passed,
        files: entries,
    };
    let mut json = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Parse(e.to_string()))?;
    json.push(b'\n');
    write_atomic(&dir.join("manifest.json"), &json)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{InitialData, NoForcing, Solver};

    #[test]
    fn default_config_loads_with_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let sim = cfg.sim_config().unwrap();
        assert_eq!(sim, SimConfig::default_1d());
    }

    #[test]
    fn negative_lambda_names_the_hypothesis() {
        let err = RunConfig::from_toml("mu = 1.0\nlambda = -1.0\n").unwrap_err();
        assert!(err.to_string().contains("2μ+3λ ≥ 0"), "{err}");
    }

    #[test]
    fn unknown_keys_and_bad_types_are_parse_errors() {
        let err = RunConfig::from_toml("cells = 64\nviscosity = 2.0\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Parse(_)));
        assert!(msg.contains("viscosity") && msg.contains("line 2"), "{msg}");
        let err = RunConfig::from_toml("dt = \"small\"\n").unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn config_round_trips_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.b = Some(5.5);
        cfg.profile = ProfileKind::VacuumRegion;
        cfg.audit_pairs = vec![[3.0, 1.5]];
        let back = RunConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact_and_resumes_identically() {
        let mut cfg = SimConfig::default_1d();
        cfg.grid = Grid::line(32, 1.0).unwrap();
        cfg.modes = 8;
        cfg.t_end = 0.02;
        let solver = Solver::new(&cfg).unwrap();
        let data = InitialData::from_profile(cfg.grid, &RunConfig::default().profile());
        let s0 = solver.initial_state(&data).unwrap();
        let half = solver.run_until(s0.clone(), 10, 5, &NoForcing).unwrap();
        let cp = Checkpoint {
            config: cfg,
            state: half.snapshots.last().unwrap().clone(),
            ledger: half.ledger.clone(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("state.ckpt");
        write_checkpoint(&path, &cp).unwrap();
        let back = read_checkpoint(&path).unwrap();
        assert_eq!(back, cp);
        for (a, b) in back.state.rho.values.iter().zip(&cp.state.rho.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        let resumed = solver.step(&back.state).unwrap().state;
        let direct = solver.step(&cp.state).unwrap().state;
        assert_eq!(resumed, direct);
    }

    #[test]
    fn corrupt_checkpoints_are_rejected() {
        assert!(matches!(Checkpoint::from_bytes(b"no newline"), Err(Error::Parse(_))));
        assert!(matches!(Checkpoint::from_bytes(b"{}\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn report_writes_manifest_with_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new("simulate");
        r.add("a.csv", b"x,y\n1,2\n".to_vec());
        let m = write_report(&r, dir.path(), &RunConfig::default()).unwrap();
        assert_eq!(m.files.len(), 1);
        assert_eq!(fs::read(dir.path().join("a.csv")).unwrap(), b"x,y\n1,2\n");
        let text = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        assert!(text.contains(&RunConfig::default().hash().unwrap()));
        assert!(!dir.path().join(".a.csv.tmp").exists());
    }
}
