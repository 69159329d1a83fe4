//! Brute-force reference: dense LU with partial pivoting and full inversion.
//!
//! This path deliberately shares no code with the kernel layer so it can act
//! as an independent check on every solver.

use faer::Mat;

use super::{extract_bndiag, to_dense, BlockBandedMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::C64;

/// Row-major dense LU factorization `P·A = L·U` (unit lower `L`).
#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// `perm[i]` is the row of `A` that ends up in row `i` of `P·A`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Magnitudes of the pivots `U_kk`.
    pub fn pivots(&self) -> Vec<f64> {
        (0..self.n)
            .map(|k| self.lu[k * self.n + k].norm())
            .collect()
    }

    pub fn min_pivot(&self) -> f64 {
        self.pivots().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Dense inverse `A⁻¹ = U⁻¹ L⁻¹ P`.
    pub fn inverse(&self) -> DenseMatrix {
        let n = self.n;
        // rhs rows are rows of P·I
        let mut x = vec![C64::new(0.0, 0.0); n * n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[i * n + p] = C64::new(1.0, 0.0);
        }
        for i in 0..n {
            for k in 0..i {
                let l = self.lu[i * n + k];
                if l != C64::new(0.0, 0.0) {
                    let (head, tail) = x.split_at_mut(i * n);
                    let src = &head[k * n..k * n + n];
                    for (d, s) in tail[..n].iter_mut().zip(src) {
                        *d -= l * s;
                    }
                }
            }
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let u = self.lu[i * n + k];
                if u != C64::new(0.0, 0.0) {
                    let (head, tail) = x.split_at_mut(k * n);
                    let dst = &mut head[i * n..i * n + n];
                    for (d, s) in dst.iter_mut().zip(&tail[..n]) {
                        *d -= u * s;
                    }
                }
            }
            let inv = C64::new(1.0, 0.0) / self.lu[i * n + i];
            for v in &mut x[i * n..i * n + n] {
                *v *= inv;
            }
        }
        Mat::from_fn(n, n, |i, j| x[i * n + j])
    }
}

/// Dense LU with partial pivoting.
///
/// Fails when a pivot magnitude drops to `ε · n · max|a_ij|` or below.
pub fn dense_lu(a: &DenseMatrix) -> Result<DenseLu> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch {
            op: "dense_lu",
            expected: (n, n),
            found: (a.nrows(), a.ncols()),
        });
    }
    let mut lu: Vec<C64> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            lu.push(a[(i, j)]);
        }
    }
    let max_abs = lu.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let threshold = f64::EPSILON * n as f64 * max_abs;
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[i * n + k].norm()))
            .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if pmax <= threshold || pmax == 0.0 {
            return Err(Error::Singular { pivot: k });
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot_inv = C64::new(1.0, 0.0) / lu[k * n + k];
        let (head, tail) = lu.split_at_mut((k + 1) * n);
        let row_k = &head[k * n..];
        for row_i in tail.chunks_exact_mut(n) {
            let l = row_i[k] * pivot_inv;
            row_i[k] = l;
            if l != C64::new(0.0, 0.0) {
                for (d, s) in row_i[k + 1..].iter_mut().zip(&row_k[k + 1..]) {
                    *d -= l * s;
                }
            }
        }
    }
    Ok(DenseLu { n, lu, perm })
}

/// Dense inverse through [`dense_lu`].
pub fn dense_inverse(a: &DenseMatrix) -> Result<DenseMatrix> {
    Ok(dense_lu(a)?.inverse())
}

/// Ground truth `bndiag(M⁻¹)` obtained by inverting the dense realization of `m`.
pub fn oracle_selected_inverse(m: &BlockBandedMatrix) -> Result<BlockBandedMatrix> {
    let inv = dense_inverse(&to_dense(m))?;
    extract_bndiag(&inv, m.layout())
}
