//! Domain-decomposition RGF for block tridiagonal matrices.
//!
//! Each level splits the layers into interleaved domains, inverts the D₂
//! sub-domains concurrently, reduces the problem to a block tridiagonal Schur
//! system over the D₁ layers, solves that system (recursively or with RGF) and
//! restores the selected inverse through the correction terms.

mod plan;
mod subdomain;

pub use plan::{parse_s2_sequence, DomainPlan, LevelSpec};
pub use subdomain::{
    assemble_schur, correct_subdomain, correction_diag, correction_offdiag, schur_coupling_pattern,
    Grouping, OffDiagonal, SideCoupling, SubdomainCorrection, SubdomainResult,
};

use crate::banded::{interleave_permutation, permute_matrix, BlockBandedMatrix, PartitionedMatrix};
use crate::error::{Error, Result};
use crate::kernels::{KernelCounters, Kernels};
use crate::rgf::rgf_tridiag_with;
use crate::C64;

/// Kernel tallies of one DDRGF run, split by level.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DdrgfStats {
    /// Per level: sub-domain inversions, coupling products, Schur assembly and corrections.
    pub levels: Vec<KernelCounters>,
    /// The final block tridiagonal RGF solve.
    pub terminal: KernelCounters,
}

impl DdrgfStats {
    pub fn total(&self) -> KernelCounters {
        self.levels.iter().copied().sum::<KernelCounters>() + self.terminal
    }
}

/// Runs `f(i, kernels)` for `i in 0..n` on up to `threads` scoped threads with
/// static round-robin assignment. Results come back in task order.
fn run_tasks<T, F>(n: usize, threads: usize, f: F) -> Result<(Vec<T>, KernelCounters)>
where
    T: Send,
    F: Fn(usize, &mut Kernels) -> Result<T> + Sync,
{
    let threads = threads.clamp(1, n.max(1));
    if threads == 1 {
        let mut k = Kernels::sequential();
        let out = (0..n).map(|i| f(i, &mut k)).collect::<Result<Vec<_>>>()?;
        return Ok((out, k.counters()));
    }
    type Chunk<T> = std::result::Result<(Vec<(usize, T)>, KernelCounters), (usize, Error)>;
    let chunks: Vec<Chunk<T>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let f = &f;
                scope.spawn(move || {
                    let mut k = Kernels::sequential();
                    let mut done = Vec::new();
                    for i in (t..n).step_by(threads) {
                        done.push((i, f(i, &mut k).map_err(|e| (i, e))?));
                    }
                    Ok((done, k.counters()))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("DDRGF task panicked"))
            .collect()
    });
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    let mut counters = KernelCounters::ZERO;
    let mut first_error: Option<(usize, Error)> = None;
    for chunk in chunks {
        match chunk {
            Ok((done, c)) => {
                counters += c;
                for (i, x) in done {
                    slots[i] = Some(x);
                }
            }
            Err((i, e)) => {
                if first_error.as_ref().is_none_or(|(j, _)| i < *j) {
                    first_error = Some((i, e));
                }
            }
        }
    }
    if let Some((_, e)) = first_error {
        return Err(e);
    }
    Ok((
        slots
            .into_iter()
            .map(|x| x.expect("every task ran"))
            .collect(),
        counters,
    ))
}

fn locate(e: Error, level: usize, location: String, to_global: impl Fn(usize) -> usize) -> Error {
    match e {
        Error::SingularPivot { layer } => Error::DdrgfSingular {
            level,
            location,
            layer: to_global(layer),
        },
        other => other,
    }
}

struct Solver<'a> {
    plan: &'a DomainPlan,
    grouping: Grouping,
    stats: DdrgfStats,
}

impl Solver<'_> {
    /// `global[i]` is the layer of the original matrix behind layer `i` of `m`.
    fn level(
        &mut self,
        m: &BlockBandedMatrix,
        level: usize,
        global: &[usize],
    ) -> Result<BlockBandedMatrix> {
        let plan = self.plan;
        if level == plan.levels.len() {
            let mut k = Kernels::with_threads(plan.terminal_threads);
            let out = rgf_tridiag_with(m, &mut k)
                .map_err(|e| locate(e, level + 1, "terminal Schur system".into(), |i| global[i]))?;
            self.stats.terminal = k.counters();
            return Ok(out);
        }
        let spec = plan.levels[level];
        let (perm, desc) = interleave_permutation(m.layout(), spec.s1, spec.s2)?;
        let parts = permute_matrix(m, &perm, desc.num_d1_layers())?;
        let n_sub = parts.d2_subdomains().len();

        let (results, c_inv) = run_tasks(n_sub, plan.n_threads, |idx, k| {
            let start = parts.d2_subdomains()[idx].start;
            SubdomainResult::compute(&parts, idx, k, false).map_err(|e| {
                locate(e, level + 1, format!("D2 sub-domain {idx}"), |i| {
                    global[start + i]
                })
            })
        })?;

        let mut k = Kernels::sequential();
        let ts = assemble_schur(&parts, &results, &mut k)?;
        let d1_global: Vec<usize> = (0..parts.n1()).map(|i| global[perm.old_of(i)]).collect();
        let schur_inv = self.level(&ts, level + 1, &d1_global)?;

        let grouping = self.grouping;
        let (corrections, c_corr) = run_tasks(n_sub, plan.n_threads, |idx, k| {
            Ok(correct_subdomain(&results[idx], &schur_inv, grouping, k))
        })?;
        self.stats.levels[level] = c_inv + k.counters() + c_corr;
        scatter(m, &parts, &schur_inv, corrections)
    }
}

/// Places `b3diag(T̂⁻¹)` back into the physical order of `m`.
fn scatter(
    m: &BlockBandedMatrix,
    parts: &PartitionedMatrix,
    schur_inv: &BlockBandedMatrix,
    corrections: Vec<SubdomainCorrection>,
) -> Result<BlockBandedMatrix> {
    let layout = m.layout();
    let perm = parts.permutation();
    let n1 = parts.n1();
    let mut out = BlockBandedMatrix::zeros(layout);
    for a in 0..layout.num_layers() {
        for b in a.saturating_sub(1)..(a + 2).min(layout.num_layers()) {
            let (i, j) = (perm.new_of(a), perm.new_of(b));
            if i < n1 && j < n1 {
                out.set_block(a, b, schur_inv.block(i, j).clone())?;
            }
        }
    }
    let subs = parts.d2_subdomains();
    for c in corrections {
        let start = subs[c.index].start;
        for (a, b, blk) in c.core.iter_blocks() {
            out.set_block(start + a, start + b, blk.clone())?;
        }
        for ((a, b), blk) in c.upper.into_iter().chain(c.lower) {
            out.set_block(a, b, blk)?;
        }
    }
    Ok(out)
}

/// DDRGF with an explicit association order for the correction chain,
/// returning per-level kernel tallies.
pub fn ddrgf_with(
    m: &BlockBandedMatrix,
    plan: &DomainPlan,
    grouping: Grouping,
) -> Result<(BlockBandedMatrix, DdrgfStats)> {
    if m.num_layers() > 1 && m.bandwidth() != 1 {
        return Err(Error::Unsupported(format!(
            "DDRGF needs a block tridiagonal matrix, bandwidth is {}",
            m.bandwidth()
        )));
    }
    plan.validate(m.num_layers())?;
    let global: Vec<usize> = (0..m.num_layers()).collect();
    let mut solver = Solver {
        plan,
        grouping,
        stats: DdrgfStats {
            levels: vec![KernelCounters::ZERO; plan.num_levels()],
            terminal: KernelCounters::ZERO,
        },
    };
    let out = solver.level(m, 0, &global)?;
    Ok((out, solver.stats))
}

/// Block tridiagonal part of `M⁻¹` by domain decomposition, with total kernel tallies.
pub fn ddrgf(
    m: &BlockBandedMatrix,
    plan: &DomainPlan,
) -> Result<(BlockBandedMatrix, KernelCounters)> {
    let (out, stats) = ddrgf_with(m, plan, Grouping::Right)?;
    Ok((out, stats.total()))
}

/// First level of DDRGF exposed step by step: the partition, the sub-domain
/// results and the assembled Schur complement.
pub struct LevelParts {
    pub parts: PartitionedMatrix,
    pub results: Vec<SubdomainResult>,
    pub schur: BlockBandedMatrix,
}

/// Runs the partition, sub-domain inversion and Schur assembly of one level,
/// logging the halo reads of every sub-domain inverse.
pub fn ddrgf_level_parts(m: &BlockBandedMatrix, s2: usize, k: &mut Kernels) -> Result<LevelParts> {
    let (perm, desc) = interleave_permutation(m.layout(), 1, s2)?;
    let parts = permute_matrix(m, &perm, desc.num_d1_layers())?;
    let results = (0..parts.d2_subdomains().len())
        .map(|idx| SubdomainResult::compute(&parts, idx, k, true))
        .collect::<Result<Vec<_>>>()?;
    let schur = assemble_schur(&parts, &results, k)?;
    Ok(LevelParts {
        parts,
        results,
        schur,
    })
}

/// Dense `T̂` blocks over the D₂ layers that couple two different sub-domains.
pub fn cross_subdomain_couplings(parts: &PartitionedMatrix) -> Vec<(usize, usize)> {
    let l = parts.num_layers();
    let n1 = parts.n1();
    let mut owner = vec![usize::MAX; l];
    for (idx, r) in parts.d2_subdomains().iter().enumerate() {
        for a in r.clone() {
            owner[parts.permutation().new_of(a)] = idx;
        }
    }
    let zero = C64::new(0.0, 0.0);
    let mut out = Vec::new();
    for i in n1..l {
        for j in n1..l {
            if owner[i] != owner[j] {
                if let Some(blk) = parts.block(i, j) {
                    let nonzero =
                        (0..blk.ncols()).any(|c| (0..blk.nrows()).any(|r| blk[(r, c)] != zero));
                    if nonzero {
                        out.push((i, j));
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests;
