use faer::Mat;

use super::{BlockLayout, DenseMatrix};
use crate::error::{Error, Result};
use crate::C64;

/// Block banded matrix with every in-band block stored densely.
///
/// Blocks are addressed by zero-based block row `a` and block column `b`
/// with `|a - b| <= w`. Zero blocks inside the band are stored explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBandedMatrix {
    layout: BlockLayout,
    row_start: Vec<usize>,
    blocks: Vec<DenseMatrix>,
}

impl BlockBandedMatrix {
    /// All in-band blocks set to zero.
    pub fn zeros(layout: &BlockLayout) -> Self {
        Self::from_fn_unchecked(layout, |a, b| {
            Mat::zeros(layout.block_size(a), layout.block_size(b))
        })
    }

    /// Block identity: identity diagonal blocks, zero off-diagonal blocks.
    pub fn identity(layout: &BlockLayout) -> Self {
        Self::from_fn_unchecked(layout, |a, b| {
            let (r, c) = (layout.block_size(a), layout.block_size(b));
            if a == b {
                Mat::identity(r, c)
            } else {
                Mat::zeros(r, c)
            }
        })
    }

    /// Builds the matrix from a generator called once per in-band block.
    pub fn from_fn(
        layout: &BlockLayout,
        mut f: impl FnMut(usize, usize) -> DenseMatrix,
    ) -> Result<Self> {
        let m = Self::from_fn_unchecked(layout, &mut f);
        for (a, b, blk) in m.iter_blocks() {
            let expected = (layout.block_size(a), layout.block_size(b));
            if (blk.nrows(), blk.ncols()) != expected {
                return Err(Error::ShapeMismatch {
                    op: "BlockBandedMatrix::from_fn",
                    expected,
                    found: (blk.nrows(), blk.ncols()),
                });
            }
        }
        Ok(m)
    }

    fn from_fn_unchecked(
        layout: &BlockLayout,
        mut f: impl FnMut(usize, usize) -> DenseMatrix,
    ) -> Self {
        let l = layout.num_layers();
        let mut row_start = Vec::with_capacity(l + 1);
        let mut blocks = Vec::new();
        for a in 0..l {
            row_start.push(blocks.len());
            for b in band_cols(layout, a) {
                blocks.push(f(a, b));
            }
        }
        row_start.push(blocks.len());
        Self {
            layout: layout.clone(),
            row_start,
            blocks,
        }
    }

    #[inline]
    pub fn layout(&self) -> &BlockLayout {
        &self.layout
    }

    #[inline]
    pub fn num_layers(&self) -> usize {
        self.layout.num_layers()
    }

    #[inline]
    pub fn bandwidth(&self) -> usize {
        self.layout.bandwidth()
    }

    #[inline]
    fn index(&self, a: usize, b: usize) -> Option<usize> {
        if !self.layout.in_band(a, b) {
            return None;
        }
        let lo = a.saturating_sub(self.layout.bandwidth());
        Some(self.row_start[a] + (b - lo))
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&DenseMatrix> {
        self.index(a, b).map(|i| &self.blocks[i])
    }

    /// Block `(a, b)`. Panics outside the band.
    #[track_caller]
    pub fn block(&self, a: usize, b: usize) -> &DenseMatrix {
        match self.index(a, b) {
            Some(i) => &self.blocks[i],
            None => panic!("block ({a}, {b}) is outside the band"),
        }
    }

    #[track_caller]
    pub fn block_mut(&mut self, a: usize, b: usize) -> &mut DenseMatrix {
        match self.index(a, b) {
            Some(i) => &mut self.blocks[i],
            None => panic!("block ({a}, {b}) is outside the band"),
        }
    }

    /// Replaces block `(a, b)`, checking band membership and shape.
    pub fn set_block(&mut self, a: usize, b: usize, value: DenseMatrix) -> Result<()> {
        let i = self.index(a, b).ok_or_else(|| {
            Error::InvalidDimension(format!("block ({a}, {b}) is outside the band"))
        })?;
        let expected = (self.layout.block_size(a), self.layout.block_size(b));
        if (value.nrows(), value.ncols()) != expected {
            return Err(Error::ShapeMismatch {
                op: "set_block",
                expected,
                found: (value.nrows(), value.ncols()),
            });
        }
        self.blocks[i] = value;
        Ok(())
    }

    /// In-band blocks in row-major block order: `a` ascending, then `b` ascending.
    pub fn iter_blocks(&self) -> impl Iterator<Item = (usize, usize, &DenseMatrix)> + '_ {
        (0..self.num_layers()).flat_map(move |a| {
            band_cols(&self.layout, a).map(move |b| (a, b, &self.blocks[self.index(a, b).unwrap()]))
        })
    }

    /// Largest entry magnitude over all stored blocks.
    pub fn max_abs(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|m| {
                (0..m.ncols()).flat_map(move |j| (0..m.nrows()).map(move |i| m[(i, j)].norm()))
            })
            .fold(0.0, f64::max)
    }

    /// Block-wise Hermitian check: `M_ab = M_ba^H` within `tol` (Frobenius, relative to the matrix scale).
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.iter_blocks().all(|(a, b, blk)| {
            let other = self.block(b, a);
            let diff = blk - other.adjoint();
            diff.norm_l2() <= tol * scale * (blk.nrows() * blk.ncols()) as f64
        })
    }

    /// Same blocks viewed with a smaller bandwidth (drops outer diagonals).
    pub fn restrict_bandwidth(&self, bandwidth: usize) -> Result<Self> {
        let layout = self
            .layout
            .with_bandwidth(bandwidth.min(self.bandwidth()))?;
        Ok(Self::from_fn_unchecked(&layout, |a, b| {
            self.block(a, b).clone()
        }))
    }
}

fn band_cols(layout: &BlockLayout, a: usize) -> std::ops::RangeInclusive<usize> {
    let w = layout.bandwidth();
    let lo = a.saturating_sub(w);
    let hi = (a + w).min(layout.num_layers() - 1);
    lo..=hi
}

/// Dense realization; entries outside the band are zero.
pub fn to_dense(m: &BlockBandedMatrix) -> DenseMatrix {
    let layout = m.layout();
    let n = layout.total_dim();
    let mut d = Mat::<C64>::zeros(n, n);
    for (a, b, blk) in m.iter_blocks() {
        let (r0, c0) = (layout.offset(a), layout.offset(b));
        d.as_mut()
            .submatrix_mut(r0, c0, blk.nrows(), blk.ncols())
            .copy_from(blk.as_ref());
    }
    d
}

/// Copies the in-band blocks of a dense matrix, discarding everything else.
pub fn extract_bndiag(d: &DenseMatrix, layout: &BlockLayout) -> Result<BlockBandedMatrix> {
    let n = layout.total_dim();
    if d.nrows() != n || d.ncols() != n {
        return Err(Error::ShapeMismatch {
            op: "extract_bndiag",
            expected: (n, n),
            found: (d.nrows(), d.ncols()),
        });
    }
    Ok(BlockBandedMatrix::from_fn_unchecked(layout, |a, b| {
        d.as_ref()
            .submatrix(
                layout.offset(a),
                layout.offset(b),
                layout.block_size(a),
                layout.block_size(b),
            )
            .to_owned()
    }))
}

/// Error of one block against a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockError {
    pub row: usize,
    pub col: usize,
    /// `‖X − R‖_F / ‖R‖_F`, or the absolute difference when `R` is zero.
    pub error: f64,
}

/// Per-block relative Frobenius errors of `x` against `reference` over the band of `reference`.
pub fn block_errors(
    x: &BlockBandedMatrix,
    reference: &BlockBandedMatrix,
) -> Result<Vec<BlockError>> {
    if x.layout().block_sizes() != reference.layout().block_sizes() {
        return Err(Error::InvalidDimension("layouts differ".into()));
    }
    reference
        .iter_blocks()
        .map(|(a, b, r)| {
            let xb = x.get(a, b).ok_or_else(|| {
                Error::InvalidDimension(format!("block ({a}, {b}) missing from solution"))
            })?;
            let diff = (xb - r).norm_l2();
            let denom = r.norm_l2();
            let error = if denom > 0.0 { diff / denom } else { diff };
            Ok(BlockError {
                row: a,
                col: b,
                error,
            })
        })
        .collect()
}

/// The worst block of [`block_errors`].
pub fn max_block_error(x: &BlockBandedMatrix, reference: &BlockBandedMatrix) -> Result<BlockError> {
    let errs = block_errors(x, reference)?;
    Ok(errs.into_iter().fold(
        BlockError {
            row: 0,
            col: 0,
            error: 0.0,
        },
        |acc, e| {
            if e.error > acc.error || e.error.is_nan() {
                e
            } else {
                acc
            }
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::banded::{make_layout, random_spd_like};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn identity_to_dense_is_identity() {
        let layout = make_layout(4, 3, 1).unwrap();
        let d = to_dense(&BlockBandedMatrix::identity(&layout));
        assert_eq!(d, Mat::<C64>::identity(12, 12));
    }

    #[test]
    fn direct_placement_two_by_two() {
        let layout = make_layout(2, 1, 1).unwrap();
        let vals = [[2.0, -1.0], [-1.0, 2.0]];
        let m =
            BlockBandedMatrix::from_fn(&layout, |a, b| Mat::from_fn(1, 1, |_, _| c(vals[a][b])))
                .unwrap();
        let d = to_dense(&m);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(d[(i, j)], c(vals[i][j]));
            }
        }
    }

    #[test]
    fn dense_is_zero_outside_band() {
        let layout = make_layout(4, 3, 2).unwrap();
        let m = random_spd_like(&layout, 11, 2.0).unwrap();
        let d = to_dense(&m);
        for i in 0..12usize {
            for j in 0..12 {
                if (i / 3).abs_diff(j / 3) > 2 {
                    assert_eq!(d[(i, j)], C64::new(0.0, 0.0));
                }
            }
        }
        assert_eq!(d[(0, 6)], m.block(0, 2)[(0, 0)]);
    }

    #[test]
    fn extract_ones_gives_tridiagonal_ones() {
        let layout = make_layout(3, 1, 1).unwrap();
        let ones = Mat::from_fn(3, 3, |_, _| c(1.0));
        let t = extract_bndiag(&ones, &layout).unwrap();
        let d = to_dense(&t);
        assert_eq!(d[(0, 2)], c(0.0));
        assert_eq!(d[(2, 0)], c(0.0));
        assert_eq!(d[(1, 2)], c(1.0));
        assert_eq!(t.iter_blocks().count(), 7);
    }

    #[test]
    fn extract_rejects_wrong_dimension() {
        let layout = make_layout(3, 2, 1).unwrap();
        let d = Mat::<C64>::zeros(5, 5);
        assert!(matches!(
            extract_bndiag(&d, &layout),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn block_order_is_row_major() {
        let layout = make_layout(3, 1, 1).unwrap();
        let m = BlockBandedMatrix::zeros(&layout);
        let order: Vec<_> = m.iter_blocks().map(|(a, b, _)| (a, b)).collect();
        assert_eq!(
            order,
            vec![(0, 0), (0, 1), (1, 0), (1, 1), (1, 2), (2, 1), (2, 2)]
        );
    }

    #[test]
    fn set_block_validates() {
        let layout = make_layout(3, 2, 1).unwrap();
        let mut m = BlockBandedMatrix::zeros(&layout);
        assert!(m.set_block(0, 2, Mat::zeros(2, 2)).is_err());
        assert!(m.set_block(0, 1, Mat::zeros(3, 2)).is_err());
        assert!(m.set_block(0, 1, Mat::identity(2, 2)).is_ok());
        assert!(m.get(0, 2).is_none());
    }
}
