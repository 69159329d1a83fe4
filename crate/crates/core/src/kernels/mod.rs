//! Dense GEMM / LU / GETRS kernels with call counters.
//!
//! Every solver performs its block arithmetic through a [`Kernels`] value so
//! that the exact number of kernel invocations can be checked against the
//! closed-form operation counts.

mod microbench;
mod roofline;

use std::iter::Sum;
use std::ops::{Add, AddAssign, Sub};

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::{factor, solve};
use faer::linalg::matmul::matmul;
use faer::perm::PermRef;
use faer::{Accum, Mat, MatRef, Par};
use serde::{Deserialize, Serialize};

pub use microbench::{benchmark_kernels, benchmark_kernels_with, default_samples, KernelRatios};
pub use roofline::{ridge_intensity, roofline, RooflinePoint};

use crate::banded::DenseMatrix;
use crate::error::{Error, Result};
use crate::C64;

/// Exact tallies of kernel invocations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelCounters {
    pub n_gemm: u64,
    pub n_lu: u64,
    pub n_getrs: u64,
}

impl KernelCounters {
    pub const ZERO: Self = Self {
        n_gemm: 0,
        n_lu: 0,
        n_getrs: 0,
    };

    pub fn new(n_lu: u64, n_getrs: u64, n_gemm: u64) -> Self {
        Self {
            n_gemm,
            n_lu,
            n_getrs,
        }
    }

    /// Cost in GEMM equivalents: `n_gemm + r_lu·n_lu + r_getrs·n_getrs`.
    pub fn weighted(&self, ratios: &KernelRatios) -> f64 {
        self.n_gemm as f64 + ratios.r_lu * self.n_lu as f64 + ratios.r_getrs * self.n_getrs as f64
    }

    pub fn total(&self) -> u64 {
        self.n_gemm + self.n_lu + self.n_getrs
    }
}

impl Add for KernelCounters {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            n_gemm: self.n_gemm + rhs.n_gemm,
            n_lu: self.n_lu + rhs.n_lu,
            n_getrs: self.n_getrs + rhs.n_getrs,
        }
    }
}

impl AddAssign for KernelCounters {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for KernelCounters {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Self {
            n_gemm: self.n_gemm - rhs.n_gemm,
            n_lu: self.n_lu - rhs.n_lu,
            n_getrs: self.n_getrs - rhs.n_getrs,
        }
    }
}

impl Sum for KernelCounters {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::ZERO, Add::add)
    }
}

impl std::fmt::Display for KernelCounters {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} LU, {} GETRS, {} GEMM",
            self.n_lu, self.n_getrs, self.n_gemm
        )
    }
}

/// Partial-pivoted LU factors `P·A = L·U`, packed in one matrix.
#[derive(Debug, Clone)]
pub struct LUFactors {
    lu: DenseMatrix,
    fwd: Vec<usize>,
    inv: Vec<usize>,
}

impl LUFactors {
    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Packed factors: strict lower part of `L` (unit diagonal implied) and `U`.
    pub fn packed(&self) -> &DenseMatrix {
        &self.lu
    }

    /// Row order: row `i` of `P·A` is row `pivots()[i]` of `A`.
    pub fn pivots(&self) -> &[usize] {
        &self.fwd
    }

    fn perm(&self) -> PermRef<'_, usize> {
        PermRef::new_checked(&self.fwd, &self.inv, self.dim())
    }

    /// Unit lower triangular factor.
    pub fn lower(&self) -> DenseMatrix {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Greater => self.lu[(i, j)],
            std::cmp::Ordering::Equal => C64::new(1.0, 0.0),
            std::cmp::Ordering::Less => C64::new(0.0, 0.0),
        })
    }

    /// Upper triangular factor.
    pub fn upper(&self) -> DenseMatrix {
        let n = self.dim();
        Mat::from_fn(n, n, |i, j| {
            if i <= j {
                self.lu[(i, j)]
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `P·A`, the row-permuted input.
    pub fn permute_rows(&self, a: MatRef<'_, C64>) -> DenseMatrix {
        Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(self.fwd[i], j)])
    }
}

/// Kernel front end carrying the call counters and the parallelism setting.
#[derive(Debug, Clone)]
pub struct Kernels {
    counters: KernelCounters,
    par: Par,
}

impl Default for Kernels {
    fn default() -> Self {
        Self::sequential()
    }
}

fn check_shape(op: &'static str, expected: (usize, usize), m: MatRef<'_, C64>) -> Result<()> {
    let found = (m.nrows(), m.ncols());
    if found != expected {
        return Err(Error::ShapeMismatch {
            op,
            expected,
            found,
        });
    }
    Ok(())
}

impl Kernels {
    /// Single-threaded kernels.
    pub fn sequential() -> Self {
        Self {
            counters: KernelCounters::ZERO,
            par: Par::Seq,
        }
    }

    /// Kernels allowed to use up to `threads` threads internally.
    pub fn with_threads(threads: usize) -> Self {
        let par = if threads <= 1 {
            Par::Seq
        } else {
            Par::rayon(threads)
        };
        Self {
            counters: KernelCounters::ZERO,
            par,
        }
    }

    pub fn threads(&self) -> usize {
        self.par.degree()
    }

    pub fn counters(&self) -> KernelCounters {
        self.counters
    }

    /// Returns the counters accumulated so far and resets them.
    pub fn take_counters(&mut self) -> KernelCounters {
        std::mem::take(&mut self.counters)
    }

    /// `α·A·B + β·C`.
    pub fn gemm(
        &mut self,
        alpha: C64,
        a: &DenseMatrix,
        b: &DenseMatrix,
        beta: C64,
        c: &DenseMatrix,
    ) -> Result<DenseMatrix> {
        check_shape("gemm (B)", (a.ncols(), b.ncols()), b.as_ref())?;
        check_shape("gemm (C)", (a.nrows(), b.ncols()), c.as_ref())?;
        let mut out = if beta == C64::new(0.0, 0.0) {
            Mat::zeros(c.nrows(), c.ncols())
        } else {
            Mat::from_fn(c.nrows(), c.ncols(), |i, j| beta * c[(i, j)])
        };
        self.counters.n_gemm += 1;
        matmul(
            out.as_mut(),
            Accum::Add,
            a.as_ref(),
            b.as_ref(),
            alpha,
            self.par,
        );
        Ok(out)
    }

    /// `A·B`. Panics on mismatched inner dimensions.
    pub fn mul(&mut self, a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        assert_eq!(a.ncols(), b.nrows(), "mul: inner dimensions differ");
        let mut out = Mat::zeros(a.nrows(), b.ncols());
        self.counters.n_gemm += 1;
        matmul(
            out.as_mut(),
            Accum::Replace,
            a.as_ref(),
            b.as_ref(),
            C64::new(1.0, 0.0),
            self.par,
        );
        out
    }

    /// `C += α·A·B` in place. Panics on mismatched shapes.
    pub fn mul_acc(&mut self, c: &mut DenseMatrix, alpha: C64, a: &DenseMatrix, b: &DenseMatrix) {
        assert!(
            a.ncols() == b.nrows() && c.nrows() == a.nrows() && c.ncols() == b.ncols(),
            "mul_acc: shape mismatch"
        );
        self.counters.n_gemm += 1;
        matmul(
            c.as_mut(),
            Accum::Add,
            a.as_ref(),
            b.as_ref(),
            alpha,
            self.par,
        );
    }

    /// `C -= A·B` in place.
    pub fn mul_sub(&mut self, c: &mut DenseMatrix, a: &DenseMatrix, b: &DenseMatrix) {
        self.mul_acc(c, C64::new(-1.0, 0.0), a, b);
    }

    /// `−A·B`.
    pub fn mul_neg(&mut self, a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
        let mut out = Mat::zeros(a.nrows(), b.ncols());
        self.mul_acc(&mut out, C64::new(-1.0, 0.0), a, b);
        out
    }

    /// Partial-pivoted LU. Fails when a pivot is below `ε·n·max|A|`.
    pub fn lu_factor(&mut self, a: &DenseMatrix) -> Result<LUFactors> {
        if a.nrows() != a.ncols() {
            return Err(Error::ShapeMismatch {
                op: "lu_factor",
                expected: (a.nrows(), a.nrows()),
                found: (a.nrows(), a.ncols()),
            });
        }
        let n = a.nrows();
        let mut lu = a.clone();
        let mut fwd = vec![0usize; n];
        let mut inv = vec![0usize; n];
        let params = Default::default();
        let mut mem = MemBuffer::new(factor::lu_in_place_scratch::<usize, C64>(
            n, n, self.par, params,
        ));
        self.counters.n_lu += 1;
        factor::lu_in_place(
            lu.as_mut(),
            &mut fwd,
            &mut inv,
            self.par,
            MemStack::new(&mut mem),
            params,
        );

        let max_abs = (0..n)
            .flat_map(|j| (0..n).map(move |i| (i, j)))
            .map(|(i, j)| a[(i, j)].norm())
            .fold(0.0_f64, f64::max);
        let tol = f64::EPSILON * n as f64 * max_abs;
        for k in 0..n {
            let p = lu[(k, k)].norm();
            if p.is_nan() || p <= tol {
                return Err(Error::Singular { pivot: k });
            }
        }
        Ok(LUFactors { lu, fwd, inv })
    }

    /// `A⁻¹·B` from the factors of `A`.
    pub fn solve_left(&mut self, f: &LUFactors, b: &DenseMatrix) -> Result<DenseMatrix> {
        let n = f.dim();
        if b.nrows() != n {
            return Err(Error::ShapeMismatch {
                op: "solve_left",
                expected: (n, b.ncols()),
                found: (b.nrows(), b.ncols()),
            });
        }
        let mut x = b.clone();
        let mut mem = MemBuffer::new(solve::solve_in_place_scratch::<usize, C64>(
            n,
            b.ncols(),
            self.par,
        ));
        self.counters.n_getrs += 1;
        solve::solve_in_place(
            f.lu.as_ref(),
            f.lu.as_ref(),
            f.perm(),
            x.as_mut(),
            self.par,
            MemStack::new(&mut mem),
        );
        Ok(x)
    }

    /// `B·A⁻¹` from the factors of `A`, through a transposed solve.
    pub fn solve_right(&mut self, b: &DenseMatrix, f: &LUFactors) -> Result<DenseMatrix> {
        let n = f.dim();
        if b.ncols() != n {
            return Err(Error::ShapeMismatch {
                op: "solve_right",
                expected: (b.nrows(), n),
                found: (b.nrows(), b.ncols()),
            });
        }
        let mut xt = b.transpose().to_owned();
        let mut mem = MemBuffer::new(solve::solve_transpose_in_place_scratch::<usize, C64>(
            n,
            b.nrows(),
            self.par,
        ));
        self.counters.n_getrs += 1;
        solve::solve_transpose_in_place(
            f.lu.as_ref(),
            f.lu.as_ref(),
            f.perm(),
            xt.as_mut(),
            self.par,
            MemStack::new(&mut mem),
        );
        Ok(xt.transpose().to_owned())
    }

    /// `A⁻¹` as one GETRS against the identity.
    pub fn inverse(&mut self, f: &LUFactors) -> Result<DenseMatrix> {
        let n = f.dim();
        self.solve_left(f, &Mat::identity(n, n))
    }
}
