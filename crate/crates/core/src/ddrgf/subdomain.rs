use std::ops::Range;

use faer::Mat;

use crate::banded::{BlockBandedMatrix, DenseMatrix, PartitionedMatrix};
use crate::error::{Error, Result};
use crate::kernels::Kernels;
use crate::rgf::{rgf_extended_with, ExtendedInverse};
use crate::C64;

/// Coupling of a D₂ sub-domain to one neighbouring D₁ layer.
#[derive(Debug, Clone)]
pub struct SideCoupling {
    /// Index of the neighbour in the Schur system (its position in the D₁ order).
    pub d1: usize,
    /// Physical layer index of the neighbour.
    pub neighbour: usize,
    /// Local index of the sub-domain layer touching the neighbour.
    pub edge: usize,
    /// `T[neighbour, edge]`, a block of `T̂₁₂`.
    pub t12: DenseMatrix,
    /// `T[edge, neighbour]`, a block of `T̂₂₁`.
    pub t21: DenseMatrix,
    /// `x[a] = G[a, edge]·T[edge, neighbour]`: the column of `T̂₂₂⁻¹T̂₂₁`.
    pub x: Vec<DenseMatrix>,
    /// `y[b] = T[neighbour, edge]·G[edge, b]`: the row of `T̂₁₂T̂₂₂⁻¹`.
    pub y: Vec<DenseMatrix>,
}

/// Extended inverse of one D₂ sub-domain and its coupling products.
#[derive(Debug, Clone)]
pub struct SubdomainResult {
    pub index: usize,
    /// Physical layers of the sub-domain.
    pub layers: Range<usize>,
    pub inverse: ExtendedInverse,
    /// Left neighbour first, when present.
    pub sides: Vec<SideCoupling>,
}

impl SubdomainResult {
    /// Inverts sub-domain `index` of `parts` and forms its coupling products.
    /// With `track_reads`, every block of the extended inverse read while
    /// forming the products is logged in `inverse`.
    pub fn compute(
        parts: &PartitionedMatrix,
        index: usize,
        k: &mut Kernels,
        track_reads: bool,
    ) -> Result<Self> {
        let sub = parts.t22_subdomain(index)?;
        let mut inverse = rgf_extended_with(&sub, k)?;
        if track_reads {
            inverse.track_reads();
        }
        let coupling = parts.coupling(index);
        let m = sub.num_layers();
        let layers = coupling.layers.clone();
        let mut sides = Vec::with_capacity(2);
        let mut push =
            |nb: Option<(usize, DenseMatrix, DenseMatrix)>, edge: usize, neighbour: usize| {
                if let Some((d1, t12, t21)) = nb {
                    let x = (0..m)
                        .map(|a| k.mul(inverse.block(a, edge), &t21))
                        .collect();
                    let y = (0..m)
                        .map(|b| k.mul(&t12, inverse.block(edge, b)))
                        .collect();
                    sides.push(SideCoupling {
                        d1,
                        neighbour,
                        edge,
                        t12,
                        t21,
                        x,
                        y,
                    });
                }
            };
        push(coupling.left, 0, layers.start.wrapping_sub(1));
        push(coupling.right, m - 1, layers.end);
        Ok(Self {
            index,
            layers,
            inverse,
            sides,
        })
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }
}

/// Assembles `T̂_S = T̂₁₁ − T̂₁₂T̂₂₂⁻¹T̂₂₁` over the D₁ layers.
///
/// Each sub-domain contributes to the diagonal blocks of its neighbours and
/// to the block coupling its left and right neighbour.
pub fn assemble_schur(
    parts: &PartitionedMatrix,
    results: &[SubdomainResult],
    k: &mut Kernels,
) -> Result<BlockBandedMatrix> {
    let mut ts = parts.t11()?;
    for (i, j) in schur_coupling_pattern(results) {
        if i.abs_diff(j) > ts.bandwidth() {
            return Err(Error::InvalidPartition(format!(
                "Schur update ({i}, {j}) falls outside the block tridiagonal band"
            )));
        }
    }
    for r in results {
        for s in &r.sides {
            for s2 in &r.sides {
                k.mul_sub(ts.block_mut(s.d1, s2.d1), &s.t12, &s2.x[s.edge]);
            }
        }
    }
    Ok(ts)
}

/// Pairs of Schur indices updated by [`assemble_schur`].
pub fn schur_coupling_pattern(results: &[SubdomainResult]) -> Vec<(usize, usize)> {
    results
        .iter()
        .flat_map(|r| {
            r.sides
                .iter()
                .flat_map(move |s| r.sides.iter().map(move |s2| (s.d1, s2.d1)))
        })
        .collect()
}

/// Association order of `T̂₂₂⁻¹T̂₂₁ · T̂_S⁻¹ · T̂₁₂T̂₂₂⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Grouping {
    /// `(T̂₂₂⁻¹T̂₂₁T̂_S⁻¹)·(T̂₁₂T̂₂₂⁻¹)`
    Left,
    /// `(T̂₂₂⁻¹T̂₂₁)·(T̂_S⁻¹T̂₁₂T̂₂₂⁻¹)`
    #[default]
    Right,
}

/// Which off-diagonal partition of `T̂⁻¹` to form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OffDiagonal {
    /// `(T̂⁻¹)₁₂ = −T̂_S⁻¹T̂₁₂T̂₂₂⁻¹`, on the pattern of `T̂₁₂`.
    Upper,
    /// `(T̂⁻¹)₂₁ = −T̂₂₂⁻¹T̂₂₁T̂_S⁻¹`, on the pattern of `T̂₂₁`.
    Lower,
}

/// Selected blocks of `T̂⁻¹` owned by one sub-domain, in physical layer indices.
#[derive(Debug, Clone)]
pub struct SubdomainCorrection {
    pub index: usize,
    /// `((neighbour, layer), block)` of `(T̂⁻¹)₁₂`.
    pub upper: Vec<((usize, usize), DenseMatrix)>,
    /// `((layer, neighbour), block)` of `(T̂⁻¹)₂₁`.
    pub lower: Vec<((usize, usize), DenseMatrix)>,
    /// Corrected block tridiagonal core of `(T̂⁻¹)₂₂`.
    pub core: BlockBandedMatrix,
}

fn neg(m: &DenseMatrix) -> DenseMatrix {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| -m[(i, j)])
}

fn zero_like(rows: usize, cols: usize) -> DenseMatrix {
    Mat::<C64>::zeros(rows, cols)
}

/// `−Σ_{s'} S[s, s']·y_{s'}[b]` for every side `s` and every local `b`.
fn schur_times_rows(
    r: &SubdomainResult,
    s: &BlockBandedMatrix,
    cols: impl Fn(usize) -> Vec<usize>,
    k: &mut Kernels,
) -> Vec<Vec<Option<DenseMatrix>>> {
    r.sides
        .iter()
        .enumerate()
        .map(|(si, side)| {
            let mut row = vec![None; r.num_layers()];
            for b in cols(si) {
                let mut acc = zero_like(side.t12.nrows(), r.sides[0].y[b].ncols());
                for other in &r.sides {
                    k.mul_sub(&mut acc, s.block(side.d1, other.d1), &other.y[b]);
                }
                row[b] = Some(acc);
            }
            row
        })
        .collect()
}

/// `Σ_{s'} x_{s'}[a]·S[s', s]` for every side `s` and every local `a`.
fn cols_times_schur(
    r: &SubdomainResult,
    s: &BlockBandedMatrix,
    rows: impl Fn(usize) -> Vec<usize>,
    k: &mut Kernels,
) -> Vec<Vec<Option<DenseMatrix>>> {
    r.sides
        .iter()
        .enumerate()
        .map(|(si, side)| {
            let mut col = vec![None; r.num_layers()];
            for a in rows(si) {
                let mut acc = zero_like(r.sides[0].x[a].nrows(), side.t21.ncols());
                for other in &r.sides {
                    k.mul_acc(
                        &mut acc,
                        C64::new(1.0, 0.0),
                        &other.x[a],
                        s.block(other.d1, side.d1),
                    );
                }
                col[a] = Some(acc);
            }
            col
        })
        .collect()
}

fn tridiagonal_pairs(m: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..m).flat_map(move |a| (a.saturating_sub(1)..(a + 2).min(m)).map(move |b| (a, b)))
}

/// All selected blocks of `T̂⁻¹` belonging to sub-domain `r`, given
/// `schur_inv = b3diag(T̂_S⁻¹)`.
pub fn correct_subdomain(
    r: &SubdomainResult,
    schur_inv: &BlockBandedMatrix,
    grouping: Grouping,
    k: &mut Kernels,
) -> SubdomainCorrection {
    let m = r.num_layers();
    let g = &r.inverse.core;
    let mut core = g.clone();
    let mut upper = Vec::with_capacity(r.sides.len());
    let mut lower = Vec::with_capacity(r.sides.len());
    let phys = |local: usize| r.layers.start + local;
    match grouping {
        Grouping::Right => {
            // z[s][b] = −(T̂_S⁻¹T̂₁₂T̂₂₂⁻¹)[s, b]
            let z = schur_times_rows(r, schur_inv, |_| (0..m).collect(), k);
            for (si, side) in r.sides.iter().enumerate() {
                upper.push((
                    (side.neighbour, phys(side.edge)),
                    z[si][side.edge].clone().expect("row formed"),
                ));
            }
            for side in &r.sides {
                let mut acc = zero_like(m_rows(r, side.edge), side.t21.ncols());
                for other in &r.sides {
                    k.mul_sub(
                        &mut acc,
                        &other.x[side.edge],
                        schur_inv.block(other.d1, side.d1),
                    );
                }
                lower.push(((phys(side.edge), side.neighbour), acc));
            }
            for (a, b) in tridiagonal_pairs(m) {
                for (si, side) in r.sides.iter().enumerate() {
                    let zb = z[si][b].as_ref().expect("row formed");
                    k.mul_sub(core.block_mut(a, b), &side.x[a], zb);
                }
            }
        }
        Grouping::Left => {
            // w[s][a] = (T̂₂₂⁻¹T̂₂₁T̂_S⁻¹)[a, s]
            let w = cols_times_schur(r, schur_inv, |_| (0..m).collect(), k);
            for (si, side) in r.sides.iter().enumerate() {
                lower.push((
                    (phys(side.edge), side.neighbour),
                    neg(w[si][side.edge].as_ref().expect("column formed")),
                ));
            }
            for side in &r.sides {
                let mut acc = zero_like(side.t12.nrows(), r.sides[0].y[side.edge].ncols());
                for other in &r.sides {
                    k.mul_sub(
                        &mut acc,
                        schur_inv.block(side.d1, other.d1),
                        &other.y[side.edge],
                    );
                }
                upper.push(((side.neighbour, phys(side.edge)), acc));
            }
            for (a, b) in tridiagonal_pairs(m) {
                for (si, side) in r.sides.iter().enumerate() {
                    let wa = w[si][a].as_ref().expect("column formed");
                    k.mul_acc(core.block_mut(a, b), C64::new(1.0, 0.0), wa, &side.y[b]);
                }
            }
        }
    }
    SubdomainCorrection {
        index: r.index,
        upper,
        lower,
        core,
    }
}

fn m_rows(r: &SubdomainResult, a: usize) -> usize {
    r.inverse.core.layout().block_size(a)
}

/// Blocks of `(T̂⁻¹)₁₂` or `(T̂⁻¹)₂₁` on the pattern of `T̂₁₂` or `T̂₂₁`, keyed
/// by physical layer indices.
pub fn correction_offdiag(
    which: OffDiagonal,
    schur_inv: &BlockBandedMatrix,
    results: &[SubdomainResult],
    k: &mut Kernels,
) -> Vec<((usize, usize), DenseMatrix)> {
    let mut out = Vec::new();
    for r in results {
        for side in &r.sides {
            let edge_phys = r.layers.start + side.edge;
            match which {
                OffDiagonal::Upper => {
                    let mut acc = zero_like(side.t12.nrows(), side.y[side.edge].ncols());
                    for other in &r.sides {
                        k.mul_sub(
                            &mut acc,
                            schur_inv.block(side.d1, other.d1),
                            &other.y[side.edge],
                        );
                    }
                    out.push(((side.neighbour, edge_phys), acc));
                }
                OffDiagonal::Lower => {
                    let mut acc = zero_like(m_rows(r, side.edge), side.t21.ncols());
                    for other in &r.sides {
                        k.mul_sub(
                            &mut acc,
                            &other.x[side.edge],
                            schur_inv.block(other.d1, side.d1),
                        );
                    }
                    out.push(((edge_phys, side.neighbour), acc));
                }
            }
        }
    }
    out
}

/// Corrected cores `b3diag(T̂₂₂⁻¹ + T̂₂₂⁻¹T̂₂₁T̂_S⁻¹T̂₁₂T̂₂₂⁻¹)`, one per sub-domain.
pub fn correction_diag(
    schur_inv: &BlockBandedMatrix,
    results: &[SubdomainResult],
    grouping: Grouping,
    k: &mut Kernels,
) -> Vec<BlockBandedMatrix> {
    results
        .iter()
        .map(|r| correct_subdomain(r, schur_inv, grouping, k).core)
        .collect()
}
