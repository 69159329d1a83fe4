use std::collections::BTreeSet;
use std::sync::Mutex;

use super::tridiag::{check_tridiagonal, rgf_downward, rgf_upward};
use crate::banded::{BlockBandedMatrix, DenseMatrix};
use crate::error::Result;
use crate::kernels::{KernelCounters, Kernels};

/// Block tridiagonal part of `M⁻¹` plus its first and last block rows and columns.
#[derive(Debug)]
pub struct ExtendedInverse {
    pub core: BlockBandedMatrix,
    /// `(M⁻¹)[a, 0]` for every `a`.
    pub first_col: Vec<DenseMatrix>,
    /// `(M⁻¹)[a, ℓ−1]` for every `a`.
    pub last_col: Vec<DenseMatrix>,
    /// `(M⁻¹)[0, b]` for every `b`.
    pub first_row: Vec<DenseMatrix>,
    /// `(M⁻¹)[ℓ−1, b]` for every `b`.
    pub last_row: Vec<DenseMatrix>,
    /// Kernel calls spent on the halo beyond plain RGF.
    pub extra: KernelCounters,
    reads: Option<Mutex<BTreeSet<(usize, usize)>>>,
}

impl Clone for ExtendedInverse {
    fn clone(&self) -> Self {
        Self {
            core: self.core.clone(),
            first_col: self.first_col.clone(),
            last_col: self.last_col.clone(),
            first_row: self.first_row.clone(),
            last_row: self.last_row.clone(),
            extra: self.extra,
            reads: self
                .reads
                .as_ref()
                .map(|r| Mutex::new(r.lock().expect("read log").clone())),
        }
    }
}

impl ExtendedInverse {
    pub fn num_layers(&self) -> usize {
        self.core.num_layers()
    }

    /// Block `(a, b)` if it belongs to the band or the halo.
    pub fn get(&self, a: usize, b: usize) -> Option<&DenseMatrix> {
        let last = self.num_layers() - 1;
        let blk = if a.abs_diff(b) <= 1 {
            self.core.get(a, b)
        } else if b == 0 {
            Some(&self.first_col[a])
        } else if b == last {
            Some(&self.last_col[a])
        } else if a == 0 {
            Some(&self.first_row[b])
        } else if a == last {
            Some(&self.last_row[b])
        } else {
            None
        };
        if blk.is_some() {
            if let Some(log) = &self.reads {
                log.lock().expect("read log").insert((a, b));
            }
        }
        blk
    }

    /// Like [`get`](Self::get) but panics outside the stored pattern.
    pub fn block(&self, a: usize, b: usize) -> &DenseMatrix {
        self.get(a, b)
            .unwrap_or_else(|| panic!("block ({a}, {b}) is not part of the extended inverse"))
    }

    /// Stored pattern: band plus first/last rows and columns.
    pub fn mask(&self) -> Vec<Vec<bool>> {
        let l = self.num_layers();
        (0..l)
            .map(|a| {
                (0..l)
                    .map(|b| a.abs_diff(b) <= 1 || a == 0 || b == 0 || a == l - 1 || b == l - 1)
                    .collect()
            })
            .collect()
    }

    /// Starts recording which blocks are read through [`get`](Self::get).
    pub fn track_reads(&mut self) {
        self.reads = Some(Mutex::new(BTreeSet::new()));
    }

    /// Blocks read since [`track_reads`](Self::track_reads).
    pub fn reads(&self) -> Vec<(usize, usize)> {
        self.reads
            .as_ref()
            .map(|r| r.lock().expect("read log").iter().copied().collect())
            .unwrap_or_default()
    }
}

/// Extra GEMMs spent on the halo by [`rgf_extended`]: 0 for `ℓ ≤ 2`, 2 for
/// `ℓ = 3` and `6ℓ − 18` from `ℓ = 4` on.
pub fn extended_extra_gemms(l: usize) -> u64 {
    match l {
        0..=2 => 0,
        3 => 2,
        _ => 6 * l as u64 - 18,
    }
}

/// RGF returning the block tridiagonal core and the halo rows and columns.
pub fn rgf_extended(m: &BlockBandedMatrix) -> Result<(ExtendedInverse, KernelCounters)> {
    let mut k = Kernels::sequential();
    let e = rgf_extended_with(m, &mut k)?;
    Ok((e, k.counters()))
}

pub fn rgf_extended_with(m: &BlockBandedMatrix, k: &mut Kernels) -> Result<ExtendedInverse> {
    check_tridiagonal(m, "rgf_extended")?;
    let ws = rgf_upward(m, k)?;
    let core = rgf_downward(m, &ws, k)?;
    let before = k.counters();
    let l = m.num_layers();
    let band = |a: usize, b: usize| -> Option<DenseMatrix> { core.get(a, b).cloned() };

    // G[0,b] = −G[0,b−1]·right[b−1], G[a,0] = −left[a−1]·G[a−1,0]
    let mut first_row: Vec<DenseMatrix> = Vec::with_capacity(l);
    let mut first_col: Vec<DenseMatrix> = Vec::with_capacity(l);
    for b in 0..l {
        let blk = match band(0, b) {
            Some(x) => x,
            None => k.mul_neg(&first_row[b - 1], &ws.right[b - 1]),
        };
        first_row.push(blk);
    }
    for a in 0..l {
        let blk = match band(a, 0) {
            Some(x) => x,
            None => k.mul_neg(&ws.left[a - 1], &first_col[a - 1]),
        };
        first_col.push(blk);
    }

    // G[a,ℓ−1] = G[a,a+1]·Q_a with Q_a = Π_{c=a+1}^{ℓ−2} (−right[c]), built from the right;
    // the last row uses the mirrored chain of left multipliers.
    let mut last_col: Vec<Option<DenseMatrix>> = vec![None; l];
    let mut last_row: Vec<Option<DenseMatrix>> = vec![None; l];
    for a in 0..l {
        if let Some(x) = band(a, l - 1) {
            last_col[a] = Some(x);
        }
        if let Some(x) = band(l - 1, a) {
            last_row[a] = Some(x);
        }
    }
    last_col[0] = Some(first_row[l - 1].clone());
    last_row[0] = Some(first_col[l - 1].clone());
    if l >= 4 {
        let mut q_right = -&ws.right[l - 2];
        let mut q_left = -&ws.left[l - 2];
        for a in (1..=l - 3).rev() {
            if a < l - 3 {
                q_right = k.mul_neg(&ws.right[a + 1], &q_right);
                q_left = k.mul_neg(&q_left, &ws.left[a + 1]);
            }
            last_col[a] = Some(k.mul(core.block(a, a + 1), &q_right));
            last_row[a] = Some(k.mul(&q_left, core.block(a + 1, a)));
        }
    }
    let extra = k.counters() - before;
    let unwrap = |v: Vec<Option<DenseMatrix>>| {
        v.into_iter()
            .map(|x| x.expect("halo block computed"))
            .collect()
    };
    Ok(ExtendedInverse {
        core,
        first_col,
        last_col: unwrap(last_col),
        first_row,
        last_row: unwrap(last_row),
        extra,
        reads: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banded::{dense_inverse, make_layout, random_spd_like, to_dense};

    fn check_against_dense(l: usize, seed: u64) -> ExtendedInverse {
        let layout = make_layout(l, 3, usize::from(l > 1)).unwrap();
        let m = random_spd_like(&layout, seed, 2.0).unwrap();
        let (e, c) = rgf_extended(&m).unwrap();
        let inv = dense_inverse(&to_dense(&m)).unwrap();
        let mask = e.mask();
        for (a, row) in mask.iter().enumerate() {
            for (b, &stored) in row.iter().enumerate() {
                let got = e.get(a, b);
                assert_eq!(got.is_some(), stored);
                if let Some(got) = got {
                    let want = inv.as_ref().submatrix(3 * a, 3 * b, 3, 3).to_owned();
                    let err = (got - &want).norm_l2() / want.norm_l2();
                    assert!(err <= 1e-10, "block ({a},{b}) error {err}");
                }
            }
        }
        assert_eq!(e.extra.n_gemm, extended_extra_gemms(l));
        assert_eq!(c.n_gemm, 4 * (l as u64 - 1) + extended_extra_gemms(l));
        assert_eq!((e.extra.n_lu, e.extra.n_getrs), (0, 0));
        e
    }

    #[test]
    fn small_sizes() {
        for (l, extra) in [(1, 0), (2, 0), (3, 2), (4, 6)] {
            let e = check_against_dense(l, l as u64);
            assert_eq!(e.extra.n_gemm, extra);
        }
    }

    #[test]
    fn larger_sizes() {
        for l in 5..=10 {
            check_against_dense(l, 40 + l as u64);
        }
    }

    #[test]
    fn eight_layer_pattern() {
        let e = check_against_dense(8, 99);
        let mask = e.mask();
        for (a, row) in mask.iter().enumerate() {
            for (b, &stored) in row.iter().enumerate() {
                let expected = a.abs_diff(b) <= 1 || a == 0 || a == 7 || b == 0 || b == 7;
                assert_eq!(stored, expected);
            }
        }
        assert!(e.get(2, 5).is_none());
    }

    #[test]
    fn halo_overlaps_agree_with_core() {
        let layout = make_layout(6, 2, 1).unwrap();
        let m = random_spd_like(&layout, 3, 2.0).unwrap();
        let (e, _) = rgf_extended(&m).unwrap();
        assert_eq!(&e.first_row[1], e.core.block(0, 1));
        assert_eq!(&e.first_col[1], e.core.block(1, 0));
        assert_eq!(&e.last_col[4], e.core.block(4, 5));
        assert_eq!(&e.last_row[5], e.core.block(5, 5));
        assert_eq!(e.first_row[5], e.last_col[0]);
    }

    #[test]
    fn read_tracking() {
        let layout = make_layout(5, 1, 1).unwrap();
        let m = random_spd_like(&layout, 3, 2.0).unwrap();
        let (mut e, _) = rgf_extended(&m).unwrap();
        e.track_reads();
        e.block(0, 4);
        e.block(2, 2);
        assert_eq!(e.reads(), vec![(0, 4), (2, 2)]);
    }
}
