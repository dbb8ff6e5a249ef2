//! Command implementations shared by the binary and the tests.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};
use thiserror::Error;

use aoi_ncs::sim::{run_monte_carlo, RunSummary};
use aoi_ncs::solver::{value_iteration, CostKind, PolicyTable, SolverConfig, SolverError};
use aoi_ncs::{NetworkConfig, Scheduler64, SchedulerKind};

use crate::config::Experiment;
use crate::policy_file;

/// Greedy scheduler tables are precomputed to this multiple of M and grown
/// lazily if an episode ages past the bound.
const GES_TABLE_HEADROOM: u32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NonConvergence { .. } | SolverError::NonFinite { .. } => {
                CliError::Solver(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<aoi_ncs::SimError> for CliError {
    fn from(e: aoi_ncs::SimError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<aoi_ncs::ConfigError> for CliError {
    fn from(e: aoi_ncs::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// One CSV row: a scheduler evaluated under one (gamma, M) combination.
/// Gamma and M stay empty for schedulers that depend on neither.
#[derive(Debug, Clone)]
pub struct ResultRow {
    pub scheduler: SchedulerKind,
    pub gamma: Option<f64>,
    pub m: Option<u32>,
    pub summary: RunSummary<f64>,
}

#[derive(Debug)]
pub struct SolveOutcome {
    pub out: PathBuf,
    pub sweeps: usize,
    pub final_residual: f64,
    pub elapsed: Duration,
    pub states: usize,
}

fn solve_policy(
    exp: &Experiment,
    m: u32,
    gamma: f64,
    cost: CostKind,
) -> Result<(PolicyTable, usize, f64, Duration), CliError> {
    let net = NetworkConfig::new(exp.loop_count(), exp.resources, m)?;
    let solver = SolverConfig::new(gamma, exp.theta)?
        .with_sweep(exp.sweep)
        .with_max_sweeps(exp.max_sweeps);
    let started = Instant::now();
    let solution = value_iteration(&exp.loops, &net, cost, &solver)?;
    Ok((
        solution.policy,
        solution.sweeps,
        solution.final_residual,
        started.elapsed(),
    ))
}

/// Cache key over everything the solve depends on: loop dynamics, noise,
/// channel, network geometry, discount, threshold, sweep mode, cost kind.
fn cache_key(exp: &Experiment, m: u32, gamma: f64, cost: CostKind) -> String {
    let mut hasher = Sha256::new();
    hasher.update(b"aoi-ncs-policy-v1");
    hasher.update((exp.loop_count() as u64).to_le_bytes());
    for model in &exp.loops {
        for matrix in [model.dynamics(), model.covariance()] {
            hasher.update((matrix.nrows() as u64).to_le_bytes());
            hasher.update((matrix.ncols() as u64).to_le_bytes());
            for v in matrix.iter() {
                hasher.update(v.to_le_bytes());
            }
        }
        hasher.update(model.success_prob().to_le_bytes());
    }
    hasher.update((exp.resources as u64).to_le_bytes());
    hasher.update(m.to_le_bytes());
    hasher.update(gamma.to_le_bytes());
    hasher.update(exp.theta.to_le_bytes());
    hasher.update([match exp.sweep {
        aoi_ncs::SweepMode::Jacobi => 0u8,
        aoi_ncs::SweepMode::GaussSeidel => 1,
    }]);
    hasher.update([match cost {
        CostKind::Error => 0u8,
        CostKind::Aoi => 1,
    }]);
    let digest = hasher.finalize();
    digest[..16].iter().map(|b| format!("{b:02x}")).collect()
}

/// Returns the policy for `(m, gamma, cost)`, reading the on-disk cache if
/// configured and populating it after a fresh solve.
fn obtain_policy(
    exp: &Experiment,
    m: u32,
    gamma: f64,
    cost: CostKind,
) -> Result<Arc<PolicyTable>, CliError> {
    let cache_path = exp
        .cache_dir
        .as_ref()
        .map(|dir| dir.join(format!("{}.aoipol", cache_key(exp, m, gamma, cost))));
    if let Some(path) = &cache_path {
        if path.is_file() {
            match policy_file::read_policy(path) {
                Ok(policy) => {
                    eprintln!("[cache] {cost} policy gamma={gamma} M={m}: {}", path.display());
                    return Ok(Arc::new(policy));
                }
                Err(e) => log::warn!("ignoring unreadable cache entry {}: {e}", path.display()),
            }
        }
    }
    let (policy, sweeps, residual, elapsed) = solve_policy(exp, m, gamma, cost)?;
    eprintln!(
        "[solve] {cost} policy gamma={gamma} M={m}: {sweeps} sweeps, residual {residual:.3e}, {:.1}s",
        elapsed.as_secs_f64()
    );
    if let Some(path) = &cache_path {
        if let Some(dir) = path.parent() {
            // cache writes are best effort; a failure only costs re-solves
            if let Err(e) = std::fs::create_dir_all(dir) {
                log::warn!("cannot create cache dir {}: {e}", dir.display());
            } else if let Err(e) = policy_file::write_policy(&policy, path) {
                log::warn!("cannot write cache entry {}: {e}", path.display());
            }
        }
    }
    Ok(Arc::new(policy))
}

fn simulate(
    exp: &Experiment,
    kind: SchedulerKind,
    policy: Option<Arc<PolicyTable>>,
) -> Result<RunSummary<f64>, CliError> {
    let (scheduler, net) = match kind {
        SchedulerKind::Des | SchedulerKind::Aois => {
            let policy = policy.expect("lookup scheduler needs a policy");
            let net = policy.network().clone();
            (Scheduler64::from_policy(policy), net)
        }
        SchedulerKind::Ges => {
            let m = *exp.ms.iter().max().expect("validated non-empty");
            let net = NetworkConfig::new(exp.loop_count(), exp.resources, m)?;
            (
                Scheduler64::greedy(&exp.loops, exp.resources, GES_TABLE_HEADROOM * m)?,
                net,
            )
        }
        SchedulerKind::RoundRobin => {
            let m = *exp.ms.iter().max().expect("validated non-empty");
            let net = NetworkConfig::new(exp.loop_count(), exp.resources, m)?;
            (
                Scheduler64::round_robin(exp.loop_count(), exp.resources)?,
                net,
            )
        }
    };
    Ok(run_monte_carlo(&scheduler, &exp.loops, &net, &exp.sim)?)
}

/// `solve`: one policy, written to `out` in the binary format.
pub fn cmd_solve(exp: &Experiment, cost: CostKind, out: &Path) -> Result<SolveOutcome, CliError> {
    let gamma = exp.single_gamma()?;
    let m = exp.single_m()?;
    let (policy, sweeps, final_residual, elapsed) = solve_policy(exp, m, gamma, cost)?;
    policy_file::write_policy(&policy, out)?;
    if let Some(dir) = &exp.cache_dir {
        let path = dir.join(format!("{}.aoipol", cache_key(exp, m, gamma, cost)));
        if std::fs::create_dir_all(dir).is_ok() {
            if let Err(e) = policy_file::write_policy(&policy, &path) {
                log::warn!("cannot write cache entry {}: {e}", path.display());
            }
        }
    }
    Ok(SolveOutcome {
        out: out.to_path_buf(),
        sweeps,
        final_residual,
        elapsed,
        states: policy.network().state_count(),
    })
}

/// `simulate`: evaluate explicit policy files, or the config's schedulers.
pub fn cmd_simulate(exp: &Experiment, policies: &[PathBuf]) -> Result<Vec<ResultRow>, CliError> {
    let mut rows = Vec::new();
    if !policies.is_empty() {
        for path in policies {
            let policy = policy_file::read_policy(path)?;
            let net = policy.network();
            if net.loops() != exp.loop_count() || net.resources() != exp.resources {
                return Err(CliError::config(format!(
                    "policy {} is for N={}, R={}; config has N={}, R={}",
                    path.display(),
                    net.loops(),
                    net.resources(),
                    exp.loop_count(),
                    exp.resources
                )));
            }
            if !exp.ms.contains(&net.max_age()) {
                return Err(CliError::config(format!(
                    "policy {} uses M={}, config allows {:?}",
                    path.display(),
                    net.max_age(),
                    exp.ms
                )));
            }
            let kind = match policy.cost_kind() {
                CostKind::Error => SchedulerKind::Des,
                CostKind::Aoi => SchedulerKind::Aois,
            };
            let gamma = policy.gamma();
            let m = net.max_age();
            let summary = simulate(exp, kind, Some(Arc::new(policy)))?;
            rows.push(ResultRow {
                scheduler: kind,
                gamma: Some(gamma),
                m: Some(m),
                summary,
            });
        }
        return Ok(rows);
    }

    for &kind in &exp.schedulers {
        match kind {
            SchedulerKind::Des | SchedulerKind::Aois => {
                let m = exp.single_m()?;
                let cost = cost_of(kind);
                for &gamma in &exp.gammas {
                    let policy = obtain_policy(exp, m, gamma, cost)?;
                    let summary = simulate(exp, kind, Some(policy))?;
                    rows.push(ResultRow {
                        scheduler: kind,
                        gamma: Some(gamma),
                        m: Some(m),
                        summary,
                    });
                }
            }
            SchedulerKind::Ges | SchedulerKind::RoundRobin => {
                let summary = simulate(exp, kind, None)?;
                rows.push(ResultRow {
                    scheduler: kind,
                    gamma: None,
                    m: None,
                    summary,
                });
            }
        }
    }
    Ok(rows)
}

/// `sweep`: the full (scheduler × M × gamma) grid, policies cached.
pub fn cmd_sweep(exp: &Experiment) -> Result<Vec<ResultRow>, CliError> {
    let mut rows = Vec::new();
    for &kind in &exp.schedulers {
        match kind {
            SchedulerKind::Des | SchedulerKind::Aois => {
                let cost = cost_of(kind);
                for &m in &exp.ms {
                    for &gamma in &exp.gammas {
                        let policy = obtain_policy(exp, m, gamma, cost)?;
                        let summary = simulate(exp, kind, Some(policy))?;
                        rows.push(ResultRow {
                            scheduler: kind,
                            gamma: Some(gamma),
                            m: Some(m),
                            summary,
                        });
                    }
                }
            }
            SchedulerKind::Ges | SchedulerKind::RoundRobin => {
                let summary = simulate(exp, kind, None)?;
                rows.push(ResultRow {
                    scheduler: kind,
                    gamma: None,
                    m: None,
                    summary,
                });
            }
        }
    }
    Ok(rows)
}

/// `compare`: simulate with every scheduler kind, whatever the config says.
pub fn cmd_compare(exp: &Experiment) -> Result<Vec<ResultRow>, CliError> {
    let mut all = exp.clone();
    all.schedulers = vec![
        SchedulerKind::Des,
        SchedulerKind::Aois,
        SchedulerKind::Ges,
        SchedulerKind::RoundRobin,
    ];
    cmd_simulate(&all, &[])
}

fn cost_of(kind: SchedulerKind) -> CostKind {
    match kind {
        SchedulerKind::Aois => CostKind::Aoi,
        _ => CostKind::Error,
    }
}

/// Renders rows in the stable schema:
/// `scheduler,gamma,M,avg_error_mean,avg_error_ci,avg_aoi_mean,avg_aoi_ci,share_1..share_N`.
pub fn render_csv(rows: &[ResultRow], n: usize) -> String {
    let mut out = String::from("scheduler,gamma,M,avg_error_mean,avg_error_ci,avg_aoi_mean,avg_aoi_ci");
    for i in 1..=n {
        out.push_str(&format!(",share_{i}"));
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.scheduler.to_string());
        out.push(',');
        if let Some(gamma) = row.gamma {
            out.push_str(&gamma.to_string());
        }
        out.push(',');
        if let Some(m) = row.m {
            out.push_str(&m.to_string());
        }
        for value in [
            row.summary.avg_error.mean,
            row.summary.avg_error.ci95,
            row.summary.avg_aoi.mean,
            row.summary.avg_aoi.ci95,
        ] {
            out.push(',');
            out.push_str(&fmt_sig(value));
        }
        for share in &row.summary.shares {
            out.push(',');
            out.push_str(&fmt_sig(share.mean));
        }
        out.push('\n');
    }
    out
}

/// Fixed-point formatting with nine significant digits.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(0, 17) as usize;
    format!("{x:.decimals$}")
}

/// Writes the CSV to `out`, or stdout when no path is given.
pub fn emit_csv(rows: &[ResultRow], n: usize, out: Option<&Path>) -> Result<(), CliError> {
    let csv = render_csv(rows, n);
    match out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display()))),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(27.8311129494567), "27.8311129");
        assert_eq!(fmt_sig(3.33), "3.33000000");
        assert_eq!(fmt_sig(0.2), "0.200000000");
        assert_eq!(fmt_sig(-1.5e-4), "-0.000150000000");
        assert_eq!(fmt_sig(12345678901.0), "12345678901");
        // parse-back stays within one part in 1e8
        for x in [27.8311129494567, 0.2, 3.33, 1.0 / 3.0] {
            let parsed: f64 = fmt_sig(x).parse().unwrap();
            assert!((parsed - x).abs() <= 1e-8 * x.abs());
        }
    }
}
