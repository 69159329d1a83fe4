use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use bbsi_core::banded::{max_block_error, read_bbm};
use bbsi_core::ddrgf::{ddrgf_with, DomainPlan, Grouping};
use bbsi_core::rgf::{rgf_fused_with, rgf_ndiag_with, rgf_tridiag_with};
use bbsi_core::{
    make_layout, oracle_selected_inverse, random_spd_like, BlockBandedMatrix, KernelCounters,
    Kernels,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Rgf,
    Nrgf,
    Fused,
    Ddrgf,
}

impl SolverKind {
    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Rgf => "rgf",
            SolverKind::Nrgf => "nrgf",
            SolverKind::Fused => "fused",
            SolverKind::Ddrgf => "ddrgf",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverKind {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rgf" => Ok(SolverKind::Rgf),
            "nrgf" => Ok(SolverKind::Nrgf),
            "fused" => Ok(SolverKind::Fused),
            "ddrgf" => Ok(SolverKind::Ddrgf),
            other => Err(CliError::Usage(format!("unknown solver {other:?}"))),
        }
    }
}

/// Synthetic problem description.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub layers: usize,
    pub block_size: usize,
    pub bandwidth: usize,
    pub seed: u64,
    pub dominance: f64,
}

impl ProblemSpec {
    pub fn generate(&self) -> Result<BlockBandedMatrix> {
        let layout = make_layout(self.layers, self.block_size, self.bandwidth)?;
        Ok(random_spd_like(&layout, self.seed, self.dominance)?)
    }
}

/// Reads a `.bbm` file or generates the synthetic problem.
pub fn load_or_generate(matrix: Option<&Path>, spec: &ProblemSpec) -> Result<BlockBandedMatrix> {
    match matrix {
        Some(p) => Ok(read_bbm(p)?),
        None => spec.generate(),
    }
}

/// Solver configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub plan: Option<DomainPlan>,
    pub threads: usize,
}

impl SolverConfig {
    pub fn new(kind: SolverKind, threads: usize) -> Self {
        Self {
            kind,
            plan: None,
            threads,
        }
    }

    pub fn with_plan(mut self, plan: DomainPlan) -> Self {
        self.plan = Some(plan);
        self
    }

    /// Rejects solver/bandwidth combinations the solvers cannot handle.
    pub fn check(&self, m: &BlockBandedMatrix) -> Result<()> {
        let w = m.bandwidth();
        match self.kind {
            SolverKind::Rgf | SolverKind::Ddrgf if w > 1 => Err(CliError::Usage(format!(
                "{} needs a block tridiagonal matrix (bandwidth 1), got bandwidth {w}; use nrgf or fused",
                self.kind
            ))),
            SolverKind::Ddrgf => {
                let plan = self.plan.as_ref().ok_or_else(|| CliError::Usage("ddrgf needs --plan".into()))?;
                plan.validate(m.num_layers())?;
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn plan_label(&self) -> String {
        self.plan
            .as_ref()
            .filter(|_| self.kind == SolverKind::Ddrgf)
            .map(|p| p.to_string())
            .unwrap_or_default()
    }

    pub fn run(&self, m: &BlockBandedMatrix) -> Result<(BlockBandedMatrix, KernelCounters)> {
        let mut k = Kernels::with_threads(self.threads);
        let out = match self.kind {
            SolverKind::Rgf => rgf_tridiag_with(m, &mut k)?,
            SolverKind::Nrgf => rgf_ndiag_with(m, &mut k)?,
            SolverKind::Fused => rgf_fused_with(m, &mut k)?,
            SolverKind::Ddrgf => {
                let mut plan = self
                    .plan
                    .clone()
                    .ok_or_else(|| CliError::Usage("ddrgf needs --plan".into()))?;
                plan.n_threads = self.threads;
                let (out, stats) = ddrgf_with(m, &plan, Grouping::Right)?;
                return Ok((out, stats.total()));
            }
        };
        Ok((out, k.counters()))
    }
}

/// Wall-clock statistics in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub mean_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

impl Timing {
    pub fn from_samples(ms: &[f64]) -> Self {
        let mean_ms = ms.iter().sum::<f64>() / ms.len().max(1) as f64;
        let min_ms = ms.iter().copied().fold(f64::INFINITY, f64::min);
        let max_ms = ms.iter().copied().fold(0.0, f64::max);
        Self {
            mean_ms,
            min_ms,
            max_ms,
        }
    }
}

/// One row of `solve`, `scale` and `validate` output. Column order is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub solver: String,
    pub layers: usize,
    pub block_size: usize,
    pub bandwidth: usize,
    pub plan: String,
    pub threads: usize,
    pub reps: usize,
    pub wall_time_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
    pub n_lu: u64,
    pub n_getrs: u64,
    pub n_gemm: u64,
    pub max_block_error: Option<f64>,
    pub error_row: Option<usize>,
    pub error_col: Option<usize>,
    pub seed: u64,
}

pub const RUN_RECORD_COLUMNS: [&str; 17] = [
    "solver",
    "layers",
    "block_size",
    "bandwidth",
    "plan",
    "threads",
    "reps",
    "wall_time_ms",
    "min_ms",
    "max_ms",
    "n_lu",
    "n_getrs",
    "n_gemm",
    "max_block_error",
    "error_row",
    "error_col",
    "seed",
];

/// Validation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub oracle_cap: usize,
    pub tolerance: f64,
}

/// Runs the solver `reps` times and optionally checks the last output
/// against the dense oracle.
///
/// Returns the record even when validation fails; [`check_record`] turns a
/// failed record into an error.
pub fn run_record(
    m: &BlockBandedMatrix,
    cfg: &SolverConfig,
    reps: usize,
    seed: u64,
    validation: Option<Validation>,
) -> Result<RunRecord> {
    if reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    cfg.check(m)?;
    if let Some(v) = validation {
        let dim = m.layout().total_dim();
        if dim > v.oracle_cap {
            return Err(CliError::OracleTooLarge {
                dim,
                cap: v.oracle_cap,
            });
        }
    }
    let mut samples = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps {
        let t = Instant::now();
        let out = cfg.run(m)?;
        samples.push(t.elapsed().as_secs_f64() * 1e3);
        last = Some(out);
    }
    let (out, counters) = last.expect("reps >= 1");
    let worst = match validation {
        Some(_) => Some(max_block_error(&out, &oracle_selected_inverse(m)?)?),
        None => None,
    };
    let timing = Timing::from_samples(&samples);
    Ok(RunRecord {
        solver: cfg.kind.name().into(),
        layers: m.num_layers(),
        block_size: m.layout().block_size(0),
        bandwidth: m.bandwidth(),
        plan: cfg.plan_label(),
        threads: cfg.threads,
        reps,
        wall_time_ms: timing.mean_ms,
        min_ms: timing.min_ms,
        max_ms: timing.max_ms,
        n_lu: counters.n_lu,
        n_getrs: counters.n_getrs,
        n_gemm: counters.n_gemm,
        max_block_error: worst.map(|e| e.error),
        error_row: worst.map(|e| e.row),
        error_col: worst.map(|e| e.col),
        seed,
    })
}

/// Fails when the record's validation error exceeds `tolerance`.
pub fn check_record(r: &RunRecord, tolerance: f64) -> Result<()> {
    match r.max_block_error {
        Some(e) if e.is_nan() || e > tolerance => Err(CliError::ValidationFailed {
            row: r.error_row.unwrap_or(0),
            col: r.error_col.unwrap_or(0),
            error: e,
            tolerance,
        }),
        _ => Ok(()),
    }
}
