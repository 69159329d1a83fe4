use crate::banded::{BlockBandedMatrix, DenseMatrix};
use crate::error::{Error, Result};
use crate::kernels::{KernelCounters, Kernels, LUFactors};

/// Buffers of the upward pass.
///
/// With zero-based layers, `pivots[i]` factors the Schur pivot
/// `t_S(i) = M[i,i] − M[i,i+1]·t_S(i+1)⁻¹·M[i+1,i]` (bottom pivot `M[ℓ−1,ℓ−1]`),
/// `right[i] = M[i,i+1]·t_S(i+1)⁻¹` and `left[i] = t_S(i+1)⁻¹·M[i+1,i]`.
#[derive(Debug, Clone)]
pub struct RgfWorkspace {
    pub pivots: Vec<LUFactors>,
    pub right: Vec<DenseMatrix>,
    pub left: Vec<DenseMatrix>,
    pub counters: KernelCounters,
}

pub(crate) fn check_tridiagonal(m: &BlockBandedMatrix, op: &str) -> Result<()> {
    if m.num_layers() > 1 && m.bandwidth() != 1 {
        return Err(Error::Unsupported(format!(
            "{op} needs a block tridiagonal matrix, bandwidth is {}",
            m.bandwidth()
        )));
    }
    Ok(())
}

pub(crate) fn pivot_error(e: Error, layer: usize) -> Error {
    match e {
        Error::Singular { .. } => Error::SingularPivot { layer },
        other => other,
    }
}

/// Upward pass: Schur pivots from the last layer to the first.
pub fn rgf_upward(m: &BlockBandedMatrix, k: &mut Kernels) -> Result<RgfWorkspace> {
    check_tridiagonal(m, "rgf_upward")?;
    let before = k.counters();
    let l = m.num_layers();
    let mut pivots = Vec::with_capacity(l);
    let mut right = vec![DenseMatrix::zeros(0, 0); l - 1];
    let mut left = vec![DenseMatrix::zeros(0, 0); l - 1];

    let last = k
        .lu_factor(m.block(l - 1, l - 1))
        .map_err(|e| pivot_error(e, l - 1))?;
    pivots.push(last);
    for i in (0..l - 1).rev() {
        let below = pivots.last().expect("pivot below exists");
        right[i] = k.solve_right(m.block(i, i + 1), below)?;
        left[i] = k.solve_left(below, m.block(i + 1, i))?;
        let mut schur = m.block(i, i).clone();
        k.mul_sub(&mut schur, m.block(i, i + 1), &left[i]);
        pivots.push(k.lu_factor(&schur).map_err(|e| pivot_error(e, i))?);
    }
    pivots.reverse();
    Ok(RgfWorkspace {
        pivots,
        right,
        left,
        counters: k.counters() - before,
    })
}

/// Downward pass: absorbs the multipliers into the inverted pivots.
pub fn rgf_downward(
    m: &BlockBandedMatrix,
    ws: &RgfWorkspace,
    k: &mut Kernels,
) -> Result<BlockBandedMatrix> {
    let l = m.num_layers();
    let mut out = BlockBandedMatrix::zeros(m.layout());
    *out.block_mut(0, 0) = k.inverse(&ws.pivots[0])?;
    for i in 1..l {
        let upper = k.mul_neg(out.block(i - 1, i - 1), &ws.right[i - 1]);
        let lower = k.mul_neg(&ws.left[i - 1], out.block(i - 1, i - 1));
        let mut diag = k.inverse(&ws.pivots[i])?;
        k.mul_sub(&mut diag, &ws.left[i - 1], &upper);
        *out.block_mut(i - 1, i) = upper;
        *out.block_mut(i, i - 1) = lower;
        *out.block_mut(i, i) = diag;
    }
    Ok(out)
}

/// Block tridiagonal part of `M⁻¹` through the kernels `k`.
pub fn rgf_tridiag_with(m: &BlockBandedMatrix, k: &mut Kernels) -> Result<BlockBandedMatrix> {
    let ws = rgf_upward(m, k)?;
    rgf_downward(m, &ws, k)
}

/// Sequential RGF: block tridiagonal part of `M⁻¹` and the kernel tallies
/// (`ℓ` LU, `3ℓ−2` GETRS, `4(ℓ−1)` GEMM).
pub fn rgf_tridiag(m: &BlockBandedMatrix) -> Result<(BlockBandedMatrix, KernelCounters)> {
    let mut k = Kernels::sequential();
    let out = rgf_tridiag_with(m, &mut k)?;
    Ok((out, k.counters()))
}
