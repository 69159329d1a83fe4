use super::tridiag::pivot_error;
use crate::banded::{BlockBandedMatrix, DenseMatrix};
use crate::error::Result;
use crate::kernels::{KernelCounters, Kernels, LUFactors};

/// Block indices touched while running [`rgf_ndiag_traced`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NdiagTrace {
    /// `(step, a, b)`: block `(a, b)` of the Schur complement updated while
    /// eliminating layer `step`.
    pub schur_updates: Vec<(usize, usize, usize)>,
    /// Blocks of the partial inverse read by the downward pass.
    pub inverse_reads: Vec<(usize, usize)>,
}

impl NdiagTrace {
    /// Largest `|a − b|` among the Schur updates.
    pub fn schur_bandwidth(&self) -> usize {
        self.schur_updates
            .iter()
            .map(|&(_, a, b)| a.abs_diff(b))
            .max()
            .unwrap_or(0)
    }

    /// Largest `|a − b|` among the inverse reads.
    pub fn read_bandwidth(&self) -> usize {
        self.inverse_reads
            .iter()
            .map(|&(a, b)| a.abs_diff(b))
            .max()
            .unwrap_or(0)
    }
}

/// Multipliers produced when eliminating layer `j`: for `c` in `start..j`,
/// `right[c − start] = S[c,j]·p_j⁻¹` and `left[c − start] = p_j⁻¹·S[j,c]`.
struct Step {
    start: usize,
    right: Vec<DenseMatrix>,
    left: Vec<DenseMatrix>,
}

fn run(
    m: &BlockBandedMatrix,
    k: &mut Kernels,
    mut trace: Option<&mut NdiagTrace>,
) -> Result<BlockBandedMatrix> {
    let l = m.num_layers();
    let w = m.bandwidth();
    let mut s = m.clone();
    let mut pivots: Vec<Option<LUFactors>> = vec![None; l];
    let mut steps: Vec<Option<Step>> = (0..l).map(|_| None).collect();

    pivots[l - 1] = Some(
        k.lu_factor(s.block(l - 1, l - 1))
            .map_err(|e| pivot_error(e, l - 1))?,
    );
    for j in (1..l).rev() {
        let p = pivots[j].as_ref().expect("pivot factored");
        let start = j - w.min(j);
        let mut right = Vec::with_capacity(j - start);
        let mut left = Vec::with_capacity(j - start);
        for c in start..j {
            right.push(k.solve_right(s.block(c, j), p)?);
            left.push(k.solve_left(p, s.block(j, c))?);
        }
        for a in start..j {
            let coupling = s.block(a, j).clone();
            for b in start..j {
                k.mul_sub(s.block_mut(a, b), &coupling, &left[b - start]);
                if let Some(t) = trace.as_deref_mut() {
                    t.schur_updates.push((j, a, b));
                }
            }
        }
        pivots[j - 1] = Some(
            k.lu_factor(s.block(j - 1, j - 1))
                .map_err(|e| pivot_error(e, j - 1))?,
        );
        steps[j] = Some(Step { start, right, left });
    }

    let mut g = BlockBandedMatrix::zeros(m.layout());
    *g.block_mut(0, 0) = k.inverse(pivots[0].as_ref().expect("pivot factored"))?;
    let read = |a: usize, b: usize, t: &mut Option<&mut NdiagTrace>| {
        if let Some(t) = t.as_deref_mut() {
            t.inverse_reads.push((a, b));
        }
    };
    for i in 1..l {
        let step = steps[i].take().expect("layer eliminated");
        let win = step.start..i;

        let mut upper = Vec::with_capacity(win.len());
        for a in win.clone().rev() {
            let mut acc: Option<DenseMatrix> = None;
            for c in win.clone() {
                read(a, c, &mut trace);
                let r = &step.right[c - step.start];
                match acc.as_mut() {
                    None => acc = Some(k.mul_neg(g.block(a, c), r)),
                    Some(x) => k.mul_sub(x, g.block(a, c), r),
                }
            }
            upper.push((a, acc.expect("window is not empty")));
        }
        for (a, blk) in upper {
            *g.block_mut(a, i) = blk;
        }

        let mut lower = Vec::with_capacity(win.len());
        for b in win.clone().rev() {
            let mut acc: Option<DenseMatrix> = None;
            for c in win.clone() {
                read(c, b, &mut trace);
                let lm = &step.left[c - step.start];
                match acc.as_mut() {
                    None => acc = Some(k.mul_neg(lm, g.block(c, b))),
                    Some(x) => k.mul_sub(x, lm, g.block(c, b)),
                }
            }
            lower.push((b, acc.expect("window is not empty")));
        }
        for (b, blk) in lower {
            *g.block_mut(i, b) = blk;
        }

        let mut diag = k.inverse(pivots[i].as_ref().expect("pivot factored"))?;
        for c in win.clone() {
            read(c, i, &mut trace);
            k.mul_sub(&mut diag, &step.left[c - step.start], g.block(c, i));
        }
        *g.block_mut(i, i) = diag;
    }
    Ok(g)
}

/// Block n-diagonal RGF through the kernels `k`.
pub fn rgf_ndiag_with(m: &BlockBandedMatrix, k: &mut Kernels) -> Result<BlockBandedMatrix> {
    run(m, k, None)
}

/// Block n-diagonal part of `M⁻¹` for any bandwidth `w`, with the kernel tallies
/// `ℓ` LU, `ℓ(2w+1) − w² − w` GETRS and `(3w²+w)ℓ − 2w³ − 2w²` GEMM.
pub fn rgf_ndiag(m: &BlockBandedMatrix) -> Result<(BlockBandedMatrix, KernelCounters)> {
    let mut k = Kernels::sequential();
    let g = run(m, &mut k, None)?;
    Ok((g, k.counters()))
}

/// [`rgf_ndiag`] recording every Schur update and every read of the partial inverse.
pub fn rgf_ndiag_traced(
    m: &BlockBandedMatrix,
) -> Result<(BlockBandedMatrix, KernelCounters, NdiagTrace)> {
    let mut k = Kernels::sequential();
    let mut trace = NdiagTrace::default();
    let g = run(m, &mut k, Some(&mut trace))?;
    Ok((g, k.counters(), trace))
}

/// Closed-form kernel tallies of [`rgf_ndiag`].
pub fn ndiag_counts(l: usize, w: usize) -> KernelCounters {
    let (l, w) = (l as u64, w as u64);
    KernelCounters::new(
        l,
        l * (2 * w + 1) - w * w - w,
        (3 * w * w + w) * l - 2 * w * w * w - 2 * w * w,
    )
}
