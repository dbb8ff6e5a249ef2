//! JSON experiment configuration.
//!
//! One file describes the loops, the network geometry, the solver settings,
//! the simulation horizon and the schedulers to run. Scalar loops may give
//! `a`, `b`, `sigma`, `l` as plain numbers; matrix loops use nested arrays.
//! `solver.gamma` and `network.m` accept either a single value or a list
//! (lists drive sweeps).

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;

use aoi_ncs::sim::{InitialAoi, SimConfig, SimMode};
use aoi_ncs::solver::SweepMode;
use aoi_ncs::{LoopModel64, SchedulerKind};

use crate::runner::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub loops: Vec<LoopSpec>,
    pub network: NetworkSection,
    pub solver: SolverSection,
    pub sim: SimSection,
    pub schedulers: Vec<SchedulerSpec>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub a: MatrixSpec,
    /// Defaults to the identity (irrelevant outside full-state mode).
    #[serde(default)]
    pub b: Option<MatrixSpec>,
    pub sigma: MatrixSpec,
    /// Defaults to `a` (deadbeat gain for scalar loops).
    #[serde(default)]
    pub l: Option<MatrixSpec>,
    pub p: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum MatrixSpec {
    Scalar(f64),
    Matrix(Vec<Vec<f64>>),
}

impl MatrixSpec {
    fn to_matrix(&self, what: &str) -> Result<DMatrix<f64>, CliError> {
        match self {
            MatrixSpec::Scalar(v) => Ok(DMatrix::from_element(1, 1, *v)),
            MatrixSpec::Matrix(rows) => {
                if rows.is_empty() || rows[0].is_empty() {
                    return Err(CliError::config(format!("{what}: empty matrix")));
                }
                let ncols = rows[0].len();
                if rows.iter().any(|r| r.len() != ncols) {
                    return Err(CliError::config(format!("{what}: ragged matrix rows")));
                }
                let data: Vec<f64> = rows.iter().flatten().copied().collect();
                Ok(DMatrix::from_row_slice(rows.len(), ncols, &data))
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Copy> OneOrMany<T> {
    fn values(&self, what: &str) -> Result<Vec<T>, CliError> {
        match self {
            OneOrMany::One(v) => Ok(vec![*v]),
            OneOrMany::Many(vs) if vs.is_empty() => {
                Err(CliError::config(format!("{what}: empty list")))
            }
            OneOrMany::Many(vs) => Ok(vs.clone()),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub r: usize,
    pub m: OneOrMany<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub gamma: OneOrMany<f64>,
    pub theta: f64,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
}

fn default_max_sweeps() -> usize {
    10_000
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepSpec {
    #[default]
    Jacobi,
    GaussSeidel,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub t: usize,
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub mode: ModeSpec,
    #[serde(default)]
    pub initial_aoi: InitialAoiSpec,
}

#[derive(Debug, Default, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    #[default]
    ErrorRecursion,
    FullState,
}

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(untagged)]
pub enum InitialAoiSpec {
    #[default]
    #[serde(skip)]
    Default,
    Keyword(InitialKeyword),
    Ages(Vec<u32>),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKeyword {
    AllOne,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerSpec {
    Des,
    Aois,
    Ges,
    RoundRobin,
}

impl From<SchedulerSpec> for SchedulerKind {
    fn from(spec: SchedulerSpec) -> Self {
        match spec {
            SchedulerSpec::Des => SchedulerKind::Des,
            SchedulerSpec::Aois => SchedulerKind::Aois,
            SchedulerSpec::Ges => SchedulerKind::Ges,
            SchedulerSpec::RoundRobin => SchedulerKind::RoundRobin,
        }
    }
}

/// Fully resolved experiment: validated models plus the raw sweep axes.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub loops: Vec<LoopModel64>,
    pub resources: usize,
    pub ms: Vec<u32>,
    pub gammas: Vec<f64>,
    pub theta: f64,
    pub sweep: SweepMode,
    pub max_sweeps: usize,
    pub sim: SimConfig,
    pub schedulers: Vec<SchedulerKind>,
    pub output: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
}

impl Experiment {
    pub fn loop_count(&self) -> usize {
        self.loops.len()
    }

    /// The single augmentation level, when the config does not sweep M.
    pub fn single_m(&self) -> Result<u32, CliError> {
        match self.ms.as_slice() {
            [m] => Ok(*m),
            _ => Err(CliError::config(
                "this command needs a single network.m, not a list",
            )),
        }
    }

    pub fn single_gamma(&self) -> Result<f64, CliError> {
        match self.gammas.as_slice() {
            [g] => Ok(*g),
            _ => Err(CliError::config(
                "this command needs a single solver.gamma, not a list",
            )),
        }
    }
}

pub fn load(path: &Path) -> Result<Experiment, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let file: ExperimentFile = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    resolve(file)
}

pub fn resolve(file: ExperimentFile) -> Result<Experiment, CliError> {
    if file.loops.is_empty() {
        return Err(CliError::config("at least one loop required"));
    }
    let loops = file
        .loops
        .iter()
        .enumerate()
        .map(|(i, spec)| {
            let a = spec.a.to_matrix(&format!("loop {i}: a"))?;
            let sigma = spec.sigma.to_matrix(&format!("loop {i}: sigma"))?;
            let b = match &spec.b {
                Some(m) => m.to_matrix(&format!("loop {i}: b"))?,
                None => DMatrix::identity(a.nrows(), a.nrows()),
            };
            let l = match &spec.l {
                Some(m) => m.to_matrix(&format!("loop {i}: l"))?,
                None => a.clone(),
            };
            LoopModel64::new(a, b, sigma, l, spec.p)
                .map_err(|e| CliError::config(format!("loop {i}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let gammas = file.solver.gamma.values("solver.gamma")?;
    for &gamma in &gammas {
        if !(0.0 < gamma && gamma < 1.0) {
            return Err(CliError::config(format!(
                "solver.gamma must lie in (0, 1), got {gamma}"
            )));
        }
    }
    if !(file.solver.theta > 0.0) {
        return Err(CliError::config(format!(
            "solver.theta must be positive, got {}",
            file.solver.theta
        )));
    }
    let ms = file.network.m.values("network.m")?;
    for &m in &ms {
        // network geometry errors surface here rather than mid-run
        aoi_ncs::NetworkConfig::new(loops.len(), file.network.r, m)
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    if file.sim.t < 1 || file.sim.reps < 1 {
        return Err(CliError::config("sim.t and sim.reps must be at least 1"));
    }
    if file.schedulers.is_empty() {
        return Err(CliError::config("at least one scheduler required"));
    }

    let initial_aoi = match &file.sim.initial_aoi {
        InitialAoiSpec::Default | InitialAoiSpec::Keyword(InitialKeyword::AllOne) => {
            InitialAoi::AllOne
        }
        InitialAoiSpec::Ages(ages) => {
            if ages.len() != loops.len() {
                return Err(CliError::config(format!(
                    "sim.initial_aoi has {} entries for {} loops",
                    ages.len(),
                    loops.len()
                )));
            }
            if ages.iter().any(|&a| a < 1) {
                return Err(CliError::config("sim.initial_aoi entries start at 1"));
            }
            InitialAoi::Custom(ages.clone())
        }
    };
    let mode = match file.sim.mode {
        ModeSpec::ErrorRecursion => SimMode::ErrorRecursion,
        ModeSpec::FullState => SimMode::FullState,
    };
    let sim = SimConfig::new(file.sim.t, file.sim.reps, file.sim.seed)
        .with_mode(mode)
        .with_initial_aoi(initial_aoi);

    Ok(Experiment {
        loops,
        resources: file.network.r,
        ms,
        gammas,
        theta: file.solver.theta,
        sweep: match file.solver.sweep {
            SweepSpec::Jacobi => SweepMode::Jacobi,
            SweepSpec::GaussSeidel => SweepMode::GaussSeidel,
        },
        max_sweeps: file.solver.max_sweeps,
        sim,
        schedulers: file.schedulers.iter().map(|&s| s.into()).collect(),
        output: file.output,
        cache_dir: file.cache_dir,
    })
}
