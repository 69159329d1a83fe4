use std::collections::HashMap;
use std::ops::Range;

use faer::Mat;

use super::{BlockBandedMatrix, BlockLayout, DenseMatrix};
use crate::error::{Error, Result};
use crate::C64;

/// Bijection on layer indices. `forward[new] = old`, `inverse[old] = new`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            forward: (0..n).collect(),
            inverse: (0..n).collect(),
        }
    }

    /// Builds a permutation from its new-to-old map.
    pub fn from_forward(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (new, &old) in forward.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(Error::InvalidPartition(format!(
                    "{forward:?} is not a permutation"
                )));
            }
            inverse[old] = new;
        }
        Ok(Self { forward, inverse })
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Physical layer placed at position `new`.
    #[inline]
    pub fn old_of(&self, new: usize) -> usize {
        self.forward[new]
    }

    /// Position of physical layer `old` in the permuted order.
    #[inline]
    pub fn new_of(&self, old: usize) -> usize {
        self.inverse[old]
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse_map(&self) -> &[usize] {
        &self.inverse
    }

    pub fn inverted(&self) -> Self {
        Self {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }
}

/// Interleaved split of the layers into `D₂¹, D₁¹, D₂², D₁², …` groups.
///
/// `d2[t]` immediately precedes `d1[t]`; ranges are physical, zero-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainDescriptor {
    pub s1: usize,
    pub s2: usize,
    pub d1: Vec<Range<usize>>,
    pub d2: Vec<Range<usize>>,
}

impl DomainDescriptor {
    /// Partitions `num_layers` layers, shortening the last `D₂` group (possibly
    /// to nothing) so that the sequence always ends with a `D₁` group.
    pub fn new(num_layers: usize, s1: usize, s2: usize) -> Result<Self> {
        if s1 == 0 || s2 == 0 {
            return Err(Error::InvalidPartition(format!(
                "s1 = {s1} and s2 = {s2} must be positive"
            )));
        }
        if num_layers < s1 + s2 {
            return Err(Error::InvalidPartition(format!(
                "{num_layers} layers cannot hold one ({s1}, {s2}) domain pair"
            )));
        }
        let (mut d1, mut d2) = (Vec::new(), Vec::new());
        let mut pos = 0;
        while pos < num_layers {
            let rem = num_layers - pos;
            let (n2, n1) = if rem >= s1 + s2 {
                (s2, s1)
            } else {
                (rem.saturating_sub(s1), rem.min(s1))
            };
            d2.push(pos..pos + n2);
            d1.push(pos + n2..pos + n2 + n1);
            pos += n1 + n2;
        }
        Ok(Self { s1, s2, d1, d2 })
    }

    /// Number of domain pairs, `⌈ℓ / (s₁ + s₂)⌉`.
    pub fn num_tasks(&self) -> usize {
        self.d1.len()
    }

    pub fn num_d1_layers(&self) -> usize {
        self.d1.iter().map(|r| r.len()).sum()
    }

    pub fn num_layers(&self) -> usize {
        self.d1.last().map_or(0, |r| r.end)
    }

    /// D₁ layers first, then D₂ layers, each in physical order.
    pub fn permutation(&self) -> Permutation {
        let forward = self
            .d1
            .iter()
            .flat_map(|r| r.clone())
            .chain(self.d2.iter().flat_map(|r| r.clone()))
            .collect();
        Permutation::from_forward(forward).expect("domain groups tile the layers")
    }
}

/// Interleaving permutation for a block tridiagonal layout.
pub fn interleave_permutation(
    layout: &BlockLayout,
    s1: usize,
    s2: usize,
) -> Result<(Permutation, DomainDescriptor)> {
    if layout.bandwidth() != 1 {
        return Err(Error::Unsupported(format!(
            "interleaving requires a block tridiagonal layout, bandwidth is {}",
            layout.bandwidth()
        )));
    }
    let desc = DomainDescriptor::new(layout.num_layers(), s1, s2)?;
    Ok((desc.permutation(), desc))
}

/// Couplings of one D₂ sub-domain (physical layers `first..=last`) to its D₁ neighbours.
#[derive(Debug, Clone)]
pub struct SubdomainCoupling {
    /// Physical layer range of the sub-domain.
    pub layers: Range<usize>,
    /// Left neighbour: (position in the D₁ order, `T[L, first]`, `T[first, L]`).
    pub left: Option<(usize, DenseMatrix, DenseMatrix)>,
    /// Right neighbour: (position in the D₁ order, `T[R, last]`, `T[last, R]`).
    pub right: Option<(usize, DenseMatrix, DenseMatrix)>,
}

/// `T̂ = R T Rᵀ` viewed as a 2×2 partition `[[T̂₁₁, T̂₁₂], [T̂₂₁, T̂₂₂]]`.
///
/// The first `n1` permuted layers form domain 1. Sub-domains are the maximal
/// runs of physically consecutive layers inside each domain.
#[derive(Debug, Clone)]
pub struct PartitionedMatrix {
    perm: Permutation,
    n1: usize,
    original: BlockLayout,
    blocks: HashMap<(usize, usize), DenseMatrix>,
    d1_runs: Vec<Range<usize>>,
    d2_runs: Vec<Range<usize>>,
}

fn physical_runs(mut layers: Vec<usize>) -> Vec<Range<usize>> {
    layers.sort_unstable();
    let mut runs: Vec<Range<usize>> = Vec::new();
    for x in layers {
        match runs.last_mut() {
            Some(r) if r.end == x => r.end = x + 1,
            _ => runs.push(x..x + 1),
        }
    }
    runs
}

/// Reorders `m` with `p` and splits it after the first `n1` permuted layers.
pub fn permute_matrix(
    m: &BlockBandedMatrix,
    p: &Permutation,
    n1: usize,
) -> Result<PartitionedMatrix> {
    let l = m.num_layers();
    if p.len() != l || n1 > l {
        return Err(Error::InvalidPartition(format!(
            "permutation of length {} with n1 = {n1} does not fit {l} layers",
            p.len()
        )));
    }
    let blocks = m
        .iter_blocks()
        .map(|(a, b, blk)| ((p.new_of(a), p.new_of(b)), blk.clone()))
        .collect();
    let d1_runs = physical_runs((0..n1).map(|i| p.old_of(i)).collect());
    let d2_runs = physical_runs((n1..l).map(|i| p.old_of(i)).collect());
    Ok(PartitionedMatrix {
        perm: p.clone(),
        n1,
        original: m.layout().clone(),
        blocks,
        d1_runs,
        d2_runs,
    })
}

impl PartitionedMatrix {
    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    pub fn num_layers(&self) -> usize {
        self.perm.len()
    }

    /// Number of layers in domain 1.
    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn original_layout(&self) -> &BlockLayout {
        &self.original
    }

    /// Block size of permuted layer `i`.
    pub fn block_size(&self, i: usize) -> usize {
        self.original.block_size(self.perm.old_of(i))
    }

    /// Block `(i, j)` of `T̂` in permuted indices; `None` where `T̂` is structurally zero.
    pub fn block(&self, i: usize, j: usize) -> Option<&DenseMatrix> {
        self.blocks.get(&(i, j))
    }

    /// Physical ranges of the D₁ sub-domains.
    pub fn d1_subdomains(&self) -> &[Range<usize>] {
        &self.d1_runs
    }

    /// Physical ranges of the D₂ sub-domains.
    pub fn d2_subdomains(&self) -> &[Range<usize>] {
        &self.d2_runs
    }

    fn zero(&self, i: usize, j: usize) -> DenseMatrix {
        Mat::zeros(self.block_size(i), self.block_size(j))
    }

    fn block_or_zero(&self, i: usize, j: usize) -> DenseMatrix {
        self.block(i, j).cloned().unwrap_or_else(|| self.zero(i, j))
    }

    /// `T̂₁₁` as a block tridiagonal matrix over the domain-1 order.
    ///
    /// Requires domain 1 to be listed in physical order.
    pub fn t11(&self) -> Result<BlockBandedMatrix> {
        let n1 = self.n1;
        if n1 == 0 {
            return Err(Error::InvalidPartition("domain 1 is empty".into()));
        }
        for i in 0..n1 {
            for j in 0..n1 {
                if i.abs_diff(j) > 1 && self.block(i, j).is_some() {
                    return Err(Error::InvalidPartition(format!(
                        "domain-1 layers {i} and {j} are coupled but not adjacent in the permuted order"
                    )));
                }
            }
        }
        let sizes = (0..n1).map(|i| self.block_size(i)).collect();
        let layout = BlockLayout::new(sizes, usize::from(n1 > 1))?;
        BlockBandedMatrix::from_fn(&layout, |i, j| self.block_or_zero(i, j))
    }

    /// Diagonal sub-block of `T̂₂₂` for the D₂ sub-domain `index`, block tridiagonal.
    pub fn t22_subdomain(&self, index: usize) -> Result<BlockBandedMatrix> {
        let range = self.d2_runs[index].clone();
        let layout = self.original.slice(range.clone(), 1)?;
        let first = range.start;
        BlockBandedMatrix::from_fn(&layout, |a, b| {
            self.block_or_zero(self.perm.new_of(first + a), self.perm.new_of(first + b))
        })
    }

    /// Nonzero blocks of `T̂₁₂` keyed by permuted indices `(i, j)` with `i < n1 <= j`.
    pub fn t12_blocks(&self) -> Vec<((usize, usize), &DenseMatrix)> {
        let mut v: Vec<_> = self
            .blocks
            .iter()
            .filter(|((i, j), _)| *i < self.n1 && *j >= self.n1)
            .map(|(k, b)| (*k, b))
            .collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }

    /// Nonzero blocks of `T̂₂₁` keyed by permuted indices `(i, j)` with `j < n1 <= i`.
    pub fn t21_blocks(&self) -> Vec<((usize, usize), &DenseMatrix)> {
        let mut v: Vec<_> = self
            .blocks
            .iter()
            .filter(|((i, j), _)| *i >= self.n1 && *j < self.n1)
            .map(|(k, b)| (*k, b))
            .collect();
        v.sort_by_key(|(k, _)| *k);
        v
    }

    /// Couplings of D₂ sub-domain `index` to its domain-1 neighbours.
    pub fn coupling(&self, index: usize) -> SubdomainCoupling {
        let range = self.d2_runs[index].clone();
        let (first, last) = (range.start, range.end - 1);
        let side = |nb: usize, inner: usize| {
            let (ni, ii) = (self.perm.new_of(nb), self.perm.new_of(inner));
            (ni, self.block_or_zero(ni, ii), self.block_or_zero(ii, ni))
        };
        let left = (first > 0).then(|| side(first - 1, first));
        let right = (last + 1 < self.num_layers()).then(|| side(last + 1, last));
        SubdomainCoupling {
            layers: range,
            left,
            right,
        }
    }

    /// Dense realization of `T̂` in permuted order.
    pub fn to_dense(&self) -> DenseMatrix {
        let l = self.num_layers();
        let mut offs = Vec::with_capacity(l + 1);
        offs.push(0);
        for i in 0..l {
            offs.push(offs[i] + self.block_size(i));
        }
        let mut d = Mat::<C64>::zeros(offs[l], offs[l]);
        for (&(i, j), blk) in &self.blocks {
            d.as_mut()
                .submatrix_mut(offs[i], offs[j], blk.nrows(), blk.ncols())
                .copy_from(blk.as_ref());
        }
        d
    }

    /// Undoes the permutation, recovering the original block banded matrix.
    pub fn unpermute(&self) -> Result<BlockBandedMatrix> {
        BlockBandedMatrix::from_fn(&self.original, |a, b| {
            self.block_or_zero(self.perm.new_of(a), self.perm.new_of(b))
        })
    }
}
