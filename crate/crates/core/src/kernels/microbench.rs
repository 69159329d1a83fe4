use std::time::Instant;

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Kernels;
use crate::banded::DenseMatrix;
use crate::error::{Error, Result};
use crate::C64;

const WARMUP_RUNS: usize = 3;

/// Measured GEMM time and the LU / GETRS time ratios at one block size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelRatios {
    pub block_size: usize,
    /// Mean GEMM wall time, seconds.
    pub t_gemm: f64,
    /// `t_LU / t_GEMM`.
    pub r_lu: f64,
    /// `t_GETRS / t_GEMM`, GETRS with `block_size` right-hand sides.
    pub r_getrs: f64,
    pub sample_count: usize,
}

impl KernelRatios {
    pub fn new(
        block_size: usize,
        t_gemm: f64,
        r_lu: f64,
        r_getrs: f64,
        sample_count: usize,
    ) -> Self {
        Self {
            block_size,
            t_gemm,
            r_lu,
            r_getrs,
            sample_count,
        }
    }

    /// Ratios without a measurement behind them; `t_gemm` is one second.
    pub fn from_ratios(r_lu: f64, r_getrs: f64) -> Self {
        Self::new(1, 1.0, r_lu, r_getrs, 0)
    }

    /// The asymptotic FLOP ratios, `r_LU = 1/3` and `r_GETRS = 1`.
    pub fn flop_limits(block_size: usize) -> Self {
        Self::new(block_size, 1.0, 1.0 / 3.0, 1.0, 0)
    }

    pub fn t_lu(&self) -> f64 {
        self.r_lu * self.t_gemm
    }

    pub fn t_getrs(&self) -> f64 {
        self.r_getrs * self.t_gemm
    }
}

/// Sample counts used by the kernel sweep: 1000 up to N = 512, 100 at 1024, 10 beyond.
pub fn default_samples(block_size: usize) -> usize {
    match block_size {
        0..=512 => 1000,
        513..=1024 => 100,
        _ => 10,
    }
}

fn random_dominant(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let mut a = Mat::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    });
    for i in 0..n {
        a[(i, i)] += C64::new(2.0 * n as f64, 0.0);
    }
    a
}

fn random_dense(n: usize, rng: &mut ChaCha8Rng) -> DenseMatrix {
    Mat::from_fn(n, n, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// Mean wall time of `run` over `samples` timed calls after the warm-up calls.
/// `setup` builds fresh inputs outside the timed region.
fn time_mean<T>(
    samples: usize,
    mut setup: impl FnMut() -> T,
    mut run: impl FnMut(T) -> Result<()>,
) -> Result<f64> {
    for _ in 0..WARMUP_RUNS {
        run(setup())?;
    }
    let mut total = 0.0;
    for _ in 0..samples {
        let input = setup();
        let start = Instant::now();
        run(input)?;
        total += start.elapsed().as_secs_f64();
    }
    Ok(total / samples as f64)
}

/// Sequential microbenchmark of GEMM, LU and GETRS at `block_size`.
pub fn benchmark_kernels(block_size: usize, samples: usize) -> Result<KernelRatios> {
    benchmark_kernels_with(block_size, samples, 1, 0x5eed)
}

/// Microbenchmark with `threads` kernel threads and a fixed RNG seed.
pub fn benchmark_kernels_with(
    block_size: usize,
    samples: usize,
    threads: usize,
    seed: u64,
) -> Result<KernelRatios> {
    if block_size == 0 || samples == 0 {
        return Err(Error::InvalidDimension(format!(
            "benchmark needs block_size >= 1 and samples >= 1, got {block_size} and {samples}"
        )));
    }
    let n = block_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut k = Kernels::with_threads(threads);

    let t_gemm = {
        let rng = &mut rng;
        let k = &mut k;
        let mut pairs = Vec::new();
        let t = time_mean(
            samples,
            || (random_dense(n, rng), random_dense(n, rng)),
            |(a, b)| {
                pairs.push(k.mul(&a, &b)[(0, 0)]);
                Ok(())
            },
        )?;
        std::hint::black_box(pairs);
        t
    };
    let t_lu = time_mean(
        samples,
        || random_dominant(n, &mut rng),
        |a| k.lu_factor(&a).map(|f| drop(std::hint::black_box(f))),
    )?;
    let mut k2 = Kernels::with_threads(threads);
    let t_getrs = {
        let mut prepared = || {
            let a = random_dominant(n, &mut rng);
            let f = Kernels::sequential()
                .lu_factor(&a)
                .expect("dominant matrix factors");
            (f, random_dense(n, &mut rng))
        };
        time_mean(samples, &mut prepared, |(f, b)| {
            k2.solve_left(&f, &b).map(|x| drop(std::hint::black_box(x)))
        })?
    };
    if t_gemm.is_nan() || t_gemm <= 0.0 {
        return Err(Error::InvalidDimension(format!(
            "GEMM at N = {n} is below timer resolution"
        )));
    }
    Ok(KernelRatios::new(
        n,
        t_gemm,
        t_lu / t_gemm,
        t_getrs / t_gemm,
        samples,
    ))
}
