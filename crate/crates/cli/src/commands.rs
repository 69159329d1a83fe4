use std::io::Write;
use std::path::PathBuf;

use bbsi_core::banded::DEFAULT_DOMINANCE;
use bbsi_core::cost::{autotune_with, SolverChoice, TuneConfig, Tuned};
use bbsi_core::ddrgf::{parse_s2_sequence, DomainPlan};
use bbsi_core::kernels::{benchmark_kernels_with, default_samples, KernelRatios};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::fit::loglog_slope;
use crate::output::emit;
use crate::run::{
    check_record, load_or_generate, run_record, ProblemSpec, RunRecord, SolverConfig, SolverKind,
    Validation, RUN_RECORD_COLUMNS,
};

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(
    name = "bbsi",
    version,
    about = "Selected inversion of block banded matrices: benchmarks, validation and tuning"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time GEMM, LU and GETRS and report the LU/GEMM and GETRS/GEMM ratios.
    BenchKernels(BenchKernelsArgs),
    /// Run one solver on one matrix.
    Solve(SolveArgs),
    /// Run a solver across a grid of layers, block sizes, bandwidths or threads.
    Scale(ScaleArgs),
    /// Pick a DDRGF plan from the cost model.
    Tune(TuneArgs),
    /// Check every applicable solver against the dense oracle.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    /// Number of principal layers.
    #[arg(long, env = "BBSI_LAYERS", default_value_t = 12)]
    pub layers: usize,
    #[arg(long, env = "BBSI_BLOCK_SIZE", default_value_t = 8)]
    pub block_size: usize,
    /// Block off-diagonals on each side of the main block diagonal.
    #[arg(long, env = "BBSI_BANDWIDTH", default_value_t = 1)]
    pub bandwidth: usize,
    #[arg(long, env = "BBSI_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Diagonal dominance of the synthetic matrix.
    #[arg(long, env = "BBSI_DOMINANCE", default_value_t = DEFAULT_DOMINANCE)]
    pub dominance: f64,
    /// Read the matrix from a `.bbm` file instead of generating it.
    #[arg(long, env = "BBSI_MATRIX")]
    pub matrix: Option<PathBuf>,
}

impl ProblemArgs {
    pub fn spec(&self) -> ProblemSpec {
        ProblemSpec {
            layers: self.layers,
            block_size: self.block_size,
            bandwidth: self.bandwidth,
            seed: self.seed,
            dominance: self.dominance,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    #[arg(long, env = "BBSI_SOLVER", value_enum, default_value_t = SolverKind::Rgf)]
    pub solver: SolverKind,
    /// DDRGF s2 sequence, e.g. "s2:4,1,1".
    #[arg(long, env = "BBSI_PLAN")]
    pub plan: Option<String>,
    #[arg(long, env = "BBSI_THREADS", default_value_t = 1)]
    pub threads: usize,
    /// Kernel threads of the final DDRGF Schur solve (defaults to --threads).
    #[arg(long, env = "BBSI_TERMINAL_THREADS")]
    pub terminal_threads: Option<usize>,
}

impl SolverArgs {
    pub fn config(&self) -> Result<SolverConfig> {
        if self.threads == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        let mut cfg = SolverConfig::new(self.solver, self.threads);
        if let Some(p) = &self.plan {
            let plan = DomainPlan::new(&parse_s2_sequence(p)?, self.threads)
                .with_terminal_threads(self.terminal_threads.unwrap_or(self.threads));
            cfg = cfg.with_plan(plan);
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    /// Compare with the dense oracle and fail on errors above --tolerance.
    #[arg(long, env = "BBSI_VALIDATE")]
    pub validate: bool,
    /// Largest matrix dimension handed to the dense oracle.
    #[arg(long, env = "BBSI_ORACLE_CAP", default_value_t = 4096)]
    pub oracle_cap: usize,
    /// Per-block relative Frobenius error bound.
    #[arg(long, env = "BBSI_TOLERANCE", default_value_t = 1e-10)]
    pub tolerance: f64,
}

impl CheckArgs {
    fn validation(&self) -> Option<Validation> {
        self.validate.then_some(Validation {
            oracle_cap: self.oracle_cap,
            tolerance: self.tolerance,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct BenchKernelsArgs {
    /// Matrix sizes N, comma separated.
    #[arg(long, env = "BBSI_SIZES", default_value = "16,32,64,128,256,512")]
    pub sizes: String,
    /// Samples per kernel (default: 1000 up to N = 512, 100 up to 1024, 10 beyond).
    #[arg(long, env = "BBSI_SAMPLES")]
    pub samples: Option<usize>,
    #[arg(long, env = "BBSI_THREADS", default_value_t = 1)]
    pub threads: usize,
    #[arg(long, env = "BBSI_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Output file, CSV or `.json`; CSV on stdout without one.
    #[arg(long, env = "BBSI_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub check: CheckArgs,
    #[arg(long, env = "BBSI_REPS", default_value_t = 30)]
    pub reps: usize,
    #[arg(long, env = "BBSI_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Layers,
    Blocksize,
    Bandwidth,
    Threads,
}

#[derive(Debug, Clone, Args)]
pub struct ScaleArgs {
    #[arg(long, env = "BBSI_AXIS", value_enum)]
    pub axis: Axis,
    /// Values along the axis, comma separated.
    #[arg(long, env = "BBSI_GRID", value_delimiter = ',', required = true)]
    pub grid: Vec<usize>,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub check: CheckArgs,
    #[arg(long, env = "BBSI_REPS", default_value_t = 30)]
    pub reps: usize,
    #[arg(long, env = "BBSI_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[arg(long, env = "BBSI_LAYERS")]
    pub layers: usize,
    #[arg(long, env = "BBSI_BLOCK_SIZE")]
    pub block_size: usize,
    #[arg(long, env = "BBSI_THREADS", default_value_t = 1)]
    pub threads: usize,
    #[arg(long, env = "BBSI_MAX_LEVELS", default_value_t = 5)]
    pub max_levels: usize,
    #[arg(long, env = "BBSI_S2_MAX", default_value_t = 4)]
    pub s2_max: usize,
    /// Kernel ratios as written by `bench-kernels --out x.json` (one entry)
    /// or a single JSON object; measured at --block-size when absent.
    #[arg(long, env = "BBSI_RATIOS")]
    pub ratios: Option<PathBuf>,
    /// Samples for measuring the ratios.
    #[arg(long, env = "BBSI_SAMPLES")]
    pub samples: Option<usize>,
    /// Also time the chosen plan and plain RGF.
    #[arg(long, env = "BBSI_EXECUTE")]
    pub execute: bool,
    #[arg(long, env = "BBSI_REPS", default_value_t = 30)]
    pub reps: usize,
    #[arg(long, env = "BBSI_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, env = "BBSI_DOMINANCE", default_value_t = DEFAULT_DOMINANCE)]
    pub dominance: f64,
    /// JSON report path.
    #[arg(long, env = "BBSI_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// DDRGF s2 sequence; DDRGF is skipped when the plan does not fit.
    #[arg(long, env = "BBSI_PLAN", default_value = "s2:2")]
    pub plan: String,
    #[arg(long, env = "BBSI_THREADS", default_value_t = 1)]
    pub threads: usize,
    #[arg(long, env = "BBSI_ORACLE_CAP", default_value_t = 4096)]
    pub oracle_cap: usize,
    #[arg(long, env = "BBSI_TOLERANCE", default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long, env = "BBSI_OUT")]
    pub out: Option<PathBuf>,
}

/// One `bench-kernels` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRow {
    pub size: usize,
    pub samples: usize,
    pub t_gemm: f64,
    pub r_lu: f64,
    pub r_getrs: f64,
}

pub const KERNEL_COLUMNS: [&str; 5] = ["size", "samples", "t_gemm", "r_lu", "r_getrs"];

impl From<KernelRatios> for KernelRow {
    fn from(r: KernelRatios) -> Self {
        Self {
            size: r.block_size,
            samples: r.sample_count,
            t_gemm: r.t_gemm,
            r_lu: r.r_lu,
            r_getrs: r.r_getrs,
        }
    }
}

impl From<&KernelRow> for KernelRatios {
    fn from(r: &KernelRow) -> Self {
        KernelRatios::new(r.size, r.t_gemm, r.r_lu, r.r_getrs, r.samples)
    }
}

/// Comma separated sizes; an empty string is an empty list.
pub fn parse_sizes(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| CliError::Usage(format!("bad size {s:?}")))
        })
        .collect()
}

pub fn bench_kernels(
    sizes: &[usize],
    samples: Option<usize>,
    threads: usize,
    seed: u64,
) -> Result<Vec<KernelRow>> {
    sizes
        .iter()
        .map(|&n| {
            let s = samples.unwrap_or_else(|| default_samples(n));
            Ok(benchmark_kernels_with(n, s, threads, seed)?.into())
        })
        .collect()
}

/// Runs `cfg` over `grid` along `axis`, returning the records and, for the
/// layers and block size axes, the log-log slope of mean time against the
/// axis value.
pub fn scale(
    axis: Axis,
    grid: &[usize],
    base: &ProblemSpec,
    cfg: &SolverConfig,
    reps: usize,
    validation: Option<Validation>,
) -> Result<(Vec<RunRecord>, Option<f64>)> {
    let mut records = Vec::with_capacity(grid.len());
    for &v in grid {
        let mut spec = base.clone();
        let mut c = cfg.clone();
        match axis {
            Axis::Layers => spec.layers = v,
            Axis::Blocksize => spec.block_size = v,
            Axis::Bandwidth => spec.bandwidth = v,
            Axis::Threads => {
                c.threads = v;
                if let Some(p) = &mut c.plan {
                    p.n_threads = v;
                    p.terminal_threads = v;
                }
            }
        }
        let m = spec.generate()?;
        records.push(run_record(&m, &c, reps, spec.seed, validation)?);
    }
    let slope = match axis {
        Axis::Layers | Axis::Blocksize => {
            let pts: Vec<(f64, f64)> = grid
                .iter()
                .zip(&records)
                .map(|(&x, r)| (x as f64, r.wall_time_ms))
                .collect();
            loglog_slope(&pts)
        }
        _ => None,
    };
    Ok((records, slope))
}

/// One row of the per-level plan table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRow {
    pub level: String,
    pub layers: usize,
    pub s2: Option<usize>,
    pub threads: usize,
}

/// Result of `tune`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub layers: usize,
    pub block_size: usize,
    pub threads: usize,
    pub ratios: KernelRatios,
    pub tuned: Tuned,
    pub table: Vec<LevelRow>,
    pub measured_ms: Option<f64>,
    pub rgf_measured_ms: Option<f64>,
}

/// Per-level `(s₂, threads)` rows followed by the terminal Schur solve.
pub fn plan_table(l: usize, choice: &SolverChoice) -> Result<Vec<LevelRow>> {
    Ok(match choice {
        SolverChoice::Rgf { threads } => vec![LevelRow {
            level: "RGF".into(),
            layers: l,
            s2: None,
            threads: *threads,
        }],
        SolverChoice::Ddrgf(plan) => {
            let counts = plan.layer_counts(l)?;
            let mut rows: Vec<LevelRow> = plan
                .levels
                .iter()
                .enumerate()
                .map(|(k, lv)| LevelRow {
                    level: (k + 1).to_string(),
                    layers: counts[k],
                    s2: Some(lv.s2),
                    threads: plan.n_threads.min(lv.num_tasks(counts[k])),
                })
                .collect();
            rows.push(LevelRow {
                level: "S".into(),
                layers: *counts.last().expect("levels"),
                s2: None,
                threads: plan.terminal_threads,
            });
            rows
        }
    })
}

pub fn render_table(rows: &[LevelRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{:>6} {:>8} {:>4} {:>8}",
        "level", "layers", "s2", "threads"
    )?;
    for r in rows {
        let s2 = r.s2.map_or_else(|| "-".to_string(), |s| s.to_string());
        writeln!(
            out,
            "{:>6} {:>8} {:>4} {:>8}",
            r.level, r.layers, s2, r.threads
        )?;
    }
    Ok(())
}

fn read_ratios(path: &std::path::Path, block_size: usize) -> Result<KernelRatios> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let rows: Vec<KernelRow> = match value {
        serde_json::Value::Array(_) => serde_json::from_value(value)?,
        other => vec![serde_json::from_value(other)?],
    };
    let row = rows
        .iter()
        .find(|r| r.size == block_size)
        .or_else(|| (rows.len() == 1).then(|| &rows[0]))
        .ok_or_else(|| {
            CliError::Usage(format!(
                "no ratios for block size {block_size} in {}",
                path.display()
            ))
        })?;
    Ok(row.into())
}

pub fn tune(args: &TuneArgs) -> Result<TuneReport> {
    if args.threads == 0 || args.layers == 0 || args.block_size == 0 {
        return Err(CliError::Usage(
            "--layers, --block-size and --threads must be positive".into(),
        ));
    }
    let ratios = match &args.ratios {
        Some(p) => read_ratios(p, args.block_size)?,
        None => {
            let s = args
                .samples
                .unwrap_or_else(|| default_samples(args.block_size));
            benchmark_kernels_with(args.block_size, s, 1, args.seed)?
        }
    };
    let cfg = TuneConfig {
        max_levels: args.max_levels,
        s2_max: args.s2_max,
        ..TuneConfig::default()
    };
    let tuned = autotune_with(args.layers, args.block_size, args.threads, &ratios, &cfg);
    let table = plan_table(args.layers, &tuned.choice)?;
    let mut report = TuneReport {
        layers: args.layers,
        block_size: args.block_size,
        threads: args.threads,
        ratios,
        tuned,
        table,
        measured_ms: None,
        rgf_measured_ms: None,
    };
    if args.execute {
        let spec = ProblemSpec {
            layers: args.layers,
            block_size: args.block_size,
            bandwidth: 1,
            seed: args.seed,
            dominance: args.dominance,
        };
        let m = spec.generate()?;
        let reps = args.reps.max(1);
        let rgf = SolverConfig::new(SolverKind::Rgf, args.threads);
        report.rgf_measured_ms = Some(run_record(&m, &rgf, reps, args.seed, None)?.wall_time_ms);
        report.measured_ms = Some(match &report.tuned.choice {
            SolverChoice::Rgf { .. } => report.rgf_measured_ms.expect("just measured"),
            SolverChoice::Ddrgf(plan) => {
                let cfg =
                    SolverConfig::new(SolverKind::Ddrgf, args.threads).with_plan(plan.clone());
                run_record(&m, &cfg, reps, args.seed, None)?.wall_time_ms
            }
        });
    }
    Ok(report)
}

/// Runs every solver that applies to `m` once against the oracle.
pub fn validate_all(
    m: &bbsi_core::BlockBandedMatrix,
    plan: &[usize],
    threads: usize,
    seed: u64,
    validation: Validation,
) -> Result<Vec<RunRecord>> {
    let mut configs = vec![
        SolverConfig::new(SolverKind::Nrgf, threads),
        SolverConfig::new(SolverKind::Fused, threads),
    ];
    if m.bandwidth() <= 1 {
        configs.insert(0, SolverConfig::new(SolverKind::Rgf, threads));
        let p = DomainPlan::new(plan, threads);
        if p.validate(m.num_layers()).is_ok() {
            configs.push(SolverConfig::new(SolverKind::Ddrgf, threads).with_plan(p));
        }
    }
    configs
        .iter()
        .map(|c| run_record(m, c, 1, seed, Some(validation)))
        .collect()
}

fn check_all(records: &[RunRecord], tolerance: f64) -> Result<()> {
    records.iter().try_for_each(|r| check_record(r, tolerance))
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::BenchKernels(a) => {
            let rows = bench_kernels(&parse_sizes(&a.sizes)?, a.samples, a.threads.max(1), a.seed)?;
            emit(&rows, &KERNEL_COLUMNS, a.out.as_deref())
        }
        Command::Solve(a) => {
            let spec = a.problem.spec();
            let m = load_or_generate(a.problem.matrix.as_deref(), &spec)?;
            let cfg = a.solver.config()?;
            let rec = run_record(&m, &cfg, a.reps, spec.seed, a.check.validation())?;
            emit(
                std::slice::from_ref(&rec),
                &RUN_RECORD_COLUMNS,
                a.out.as_deref(),
            )?;
            check_record(&rec, a.check.tolerance)
        }
        Command::Scale(a) => {
            let cfg = a.solver.config()?;
            let (records, slope) = scale(
                a.axis,
                &a.grid,
                &a.problem.spec(),
                &cfg,
                a.reps,
                a.check.validation(),
            )?;
            emit(&records, &RUN_RECORD_COLUMNS, a.out.as_deref())?;
            if let Some(s) = slope {
                eprintln!("log-log slope: {s:.4}");
            }
            check_all(&records, a.check.tolerance)
        }
        Command::Tune(a) => {
            let report = tune(&a)?;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            writeln!(out, "choice: {}", report.tuned.choice)?;
            writeln!(
                out,
                "ratios: block_size={} r_lu={:.4} r_getrs={:.4} t_gemm={:.3e}s",
                report.ratios.block_size,
                report.ratios.r_lu,
                report.ratios.r_getrs,
                report.ratios.t_gemm
            )?;
            writeln!(
                out,
                "predicted: {:.1} GEMM equivalents ({:.3} ms), RGF {:.1} ({:.3} ms)",
                report.tuned.cost.gemm_equivalents,
                report.tuned.cost.predicted_seconds * 1e3,
                report.tuned.rgf_cost.gemm_equivalents,
                report.tuned.rgf_cost.predicted_seconds * 1e3
            )?;
            render_table(&report.table, &mut out)?;
            if let (Some(t), Some(r)) = (report.measured_ms, report.rgf_measured_ms) {
                writeln!(out, "measured: {t:.3} ms, RGF {r:.3} ms")?;
            }
            if let Some(p) = &a.out {
                std::fs::write(p, serde_json::to_string_pretty(&report)?)?;
            }
            Ok(())
        }
        Command::Validate(a) => {
            let spec = a.problem.spec();
            let m = load_or_generate(a.problem.matrix.as_deref(), &spec)?;
            let v = Validation {
                oracle_cap: a.oracle_cap,
                tolerance: a.tolerance,
            };
            let records = validate_all(
                &m,
                &parse_s2_sequence(&a.plan)?,
                a.threads.max(1),
                spec.seed,
                v,
            )?;
            emit(&records, &RUN_RECORD_COLUMNS, a.out.as_deref())?;
            check_all(&records, a.tolerance)
        }
    }
}
