use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BlockBandedMatrix, BlockLayout, DenseMatrix};
use crate::error::{Error, Result};
use crate::C64;

/// Default diagonal dominance factor for synthetic problems.
pub const DEFAULT_DOMINANCE: f64 = 2.0;

fn random_block(rng: &mut ChaCha8Rng, rows: usize, cols: usize, diagonal: bool) -> DenseMatrix {
    Mat::from_fn(rows, cols, |i, j| {
        let im = rng.random_range(-1.0..1.0);
        // Diagonal entries start with a positive real part so the matrix stays
        // invertible even when a row has no off-diagonal mass.
        let re = if diagonal && i == j {
            rng.random_range(1.0..2.0)
        } else {
            rng.random_range(-1.0..1.0)
        };
        C64::new(re, im)
    })
}

/// Adds `dominance × Σ_offdiag |m_rc|` to every scalar diagonal entry, row by row.
fn make_dominant(m: &mut BlockBandedMatrix, dominance: f64) {
    let l = m.num_layers();
    let w = m.bandwidth();
    for a in 0..l {
        let rows = m.layout().block_size(a);
        let mut off = vec![0.0f64; rows];
        for b in a.saturating_sub(w)..=(a + w).min(l - 1) {
            let blk = m.block(a, b);
            for j in 0..blk.ncols() {
                for (i, acc) in off.iter_mut().enumerate() {
                    if !(a == b && i == j) {
                        *acc += blk[(i, j)].norm();
                    }
                }
            }
        }
        let diag = m.block_mut(a, a);
        for (i, s) in off.into_iter().enumerate() {
            diag[(i, i)] += C64::new(dominance * s, 0.0);
        }
    }
}

fn check_dominance(dominance: f64) -> Result<()> {
    if dominance > 0.0 && dominance.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidDimension(format!(
            "dominance must be positive, got {dominance}"
        )))
    }
}

/// Random complex block banded matrix made diagonally dominant.
///
/// Deterministic for a given `(layout, seed, dominance)`.
pub fn random_spd_like(
    layout: &BlockLayout,
    seed: u64,
    dominance: f64,
) -> Result<BlockBandedMatrix> {
    check_dominance(dominance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = BlockBandedMatrix::from_fn(layout, |a, b| {
        random_block(&mut rng, layout.block_size(a), layout.block_size(b), a == b)
    })?;
    make_dominant(&mut m, dominance);
    Ok(m)
}

/// Random block-wise Hermitian (`M_ab = M_ba^H`) diagonally dominant matrix.
pub fn random_hermitian(
    layout: &BlockLayout,
    seed: u64,
    dominance: f64,
) -> Result<BlockBandedMatrix> {
    check_dominance(dominance)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = BlockBandedMatrix::zeros(layout);
    for a in 0..layout.num_layers() {
        for b in a.saturating_sub(layout.bandwidth())..=a {
            let blk = random_block(&mut rng, layout.block_size(a), layout.block_size(b), a == b);
            if a == b {
                let herm = Mat::from_fn(blk.nrows(), blk.ncols(), |i, j| {
                    if i == j {
                        C64::new(blk[(i, i)].re, 0.0)
                    } else if i > j {
                        blk[(i, j)]
                    } else {
                        blk[(j, i)].conj()
                    }
                });
                *m.block_mut(a, a) = herm;
            } else {
                *m.block_mut(b, a) = blk.adjoint().to_owned();
                *m.block_mut(a, b) = blk;
            }
        }
    }
    make_dominant(&mut m, dominance);
    Ok(m)
}
