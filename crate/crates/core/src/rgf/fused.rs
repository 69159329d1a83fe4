use faer::Mat;

use super::tridiag::rgf_tridiag_with;
use crate::banded::{BlockBandedMatrix, BlockLayout};
use crate::error::{Error, Result};
use crate::kernels::{KernelCounters, Kernels};
use crate::C64;

/// Groups every `w` consecutive layers into one super-layer. The last group
/// holds the remainder when `w` does not divide `ℓ`.
pub fn fuse_layout(layout: &BlockLayout) -> Result<(BlockLayout, Vec<std::ops::Range<usize>>)> {
    let w = layout.bandwidth().max(1);
    let l = layout.num_layers();
    let groups: Vec<_> = (0..l).step_by(w).map(|s| s..(s + w).min(l)).collect();
    let sizes = groups
        .iter()
        .map(|g| g.clone().map(|a| layout.block_size(a)).sum())
        .collect();
    let fused = BlockLayout::new(sizes, usize::from(groups.len() > 1))?;
    Ok((fused, groups))
}

/// Block tridiagonal super-block matrix equivalent to `m`.
pub fn fuse(m: &BlockBandedMatrix) -> Result<(BlockBandedMatrix, Vec<std::ops::Range<usize>>)> {
    let (layout, groups) = fuse_layout(m.layout())?;
    let ml = m.layout();
    let fused = BlockBandedMatrix::from_fn(&layout, |g1, g2| {
        let mut blk = Mat::<C64>::zeros(layout.block_size(g1), layout.block_size(g2));
        let (r0, c0) = (ml.offset(groups[g1].start), ml.offset(groups[g2].start));
        for a in groups[g1].clone() {
            for b in groups[g2].clone() {
                if let Some(src) = m.get(a, b) {
                    blk.as_mut()
                        .submatrix_mut(
                            ml.offset(a) - r0,
                            ml.offset(b) - c0,
                            src.nrows(),
                            src.ncols(),
                        )
                        .copy_from(src.as_ref());
                }
            }
        }
        blk
    })?;
    Ok((fused, groups))
}

/// Fused-super-block baseline: runs block tridiagonal RGF on `⌈ℓ/w⌉`
/// super-layers of size `w·b_s` and restricts the result to the original band.
pub fn rgf_fused(m: &BlockBandedMatrix) -> Result<(BlockBandedMatrix, KernelCounters)> {
    let mut k = Kernels::sequential();
    let out = rgf_fused_with(m, &mut k)?;
    Ok((out, k.counters()))
}

pub fn rgf_fused_with(m: &BlockBandedMatrix, k: &mut Kernels) -> Result<BlockBandedMatrix> {
    if m.bandwidth() == 0 && m.num_layers() > 1 {
        return Err(Error::Unsupported("fusing needs bandwidth >= 1".into()));
    }
    let (fused, groups) = fuse(m)?;
    let g = rgf_tridiag_with(&fused, k).map_err(|e| match e {
        Error::SingularPivot { layer } => Error::SingularPivot {
            layer: groups[layer].start,
        },
        other => other,
    })?;
    let ml = m.layout();
    let mut group_of = vec![0; ml.num_layers()];
    for (gi, r) in groups.iter().enumerate() {
        for a in r.clone() {
            group_of[a] = gi;
        }
    }
    BlockBandedMatrix::from_fn(ml, |a, b| {
        let (ga, gb) = (group_of[a], group_of[b]);
        let src = g.block(ga, gb);
        let (r, c) = (
            ml.offset(a) - ml.offset(groups[ga].start),
            ml.offset(b) - ml.offset(groups[gb].start),
        );
        src.as_ref()
            .submatrix(r, c, ml.block_size(a), ml.block_size(b))
            .to_owned()
    })
}
