use std::fmt;

use serde::{Deserialize, Serialize};

use super::{cost_ddrgf_with, cost_rgf, CostEstimate, DEFAULT_BLAS_CAP};
use crate::ddrgf::DomainPlan;
use crate::kernels::KernelRatios;

/// Search limits of the auto-tuner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TuneConfig {
    pub max_levels: usize,
    pub s2_max: usize,
    /// Cap on the modeled speed-up of a multi-threaded RGF solve.
    pub blas_cap: usize,
}

impl Default for TuneConfig {
    fn default() -> Self {
        Self {
            max_levels: 5,
            s2_max: 4,
            blas_cap: DEFAULT_BLAS_CAP,
        }
    }
}

/// Solver picked for a problem size and thread budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverChoice {
    Rgf { threads: usize },
    Ddrgf(DomainPlan),
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverChoice::Rgf { threads } => write!(f, "rgf threads:{threads}"),
            SolverChoice::Ddrgf(p) => write!(f, "ddrgf {p}"),
        }
    }
}

/// Outcome of a plan search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuned {
    pub choice: SolverChoice,
    pub cost: CostEstimate,
    /// Cost of plain RGF under the same thread budget.
    pub rgf_cost: CostEstimate,
    pub candidates: usize,
}

impl Tuned {
    pub fn plan(&self) -> Option<&DomainPlan> {
        match &self.choice {
            SolverChoice::Ddrgf(p) => Some(p),
            SolverChoice::Rgf { .. } => None,
        }
    }
}

/// RGF cost divided by the modeled kernel-threading speed-up.
fn threaded_rgf(l: usize, n_threads: usize, ratios: &KernelRatios, cap: usize) -> CostEstimate {
    let speedup = n_threads.clamp(1, cap.max(1)) as f64;
    cost_rgf(l, ratios).scaled(1.0 / speedup, ratios.t_gemm)
}

/// Every `s₂` sequence of length `1..=max_levels` over `1..=s2_max`, shortest
/// first and lexicographic within a length.
fn sequences(max_levels: usize, s2_max: usize) -> impl Iterator<Item = Vec<usize>> {
    (1..=max_levels).flat_map(move |len| {
        let total = s2_max.checked_pow(len as u32).unwrap_or(0);
        (0..total).map(move |mut code| {
            let mut seq = vec![0; len];
            for slot in seq.iter_mut().rev() {
                *slot = code % s2_max + 1;
                code /= s2_max;
            }
            seq
        })
    })
}

/// Auto-tuner with default limits.
pub fn autotune(l: usize, b_s: usize, n_threads: usize, ratios: &KernelRatios) -> Tuned {
    autotune_with(l, b_s, n_threads, ratios, &TuneConfig::default())
}

/// Minimizes the modeled cost over `s₂` sequences and terminal thread counts,
/// with plain RGF as a candidate. Ties go to RGF, then fewer levels, then the
/// lexicographically smaller sequence, then fewer terminal threads.
///
/// `b_s` must match the block size the ratios were measured at; ratios with
/// `block_size` 1 are accepted for any `b_s`.
pub fn autotune_with(
    l: usize,
    b_s: usize,
    n_threads: usize,
    ratios: &KernelRatios,
    cfg: &TuneConfig,
) -> Tuned {
    debug_assert!(ratios.block_size == 1 || ratios.block_size == b_s);
    let n_threads = n_threads.max(1);
    let rgf_cost = threaded_rgf(l, n_threads, ratios, cfg.blas_cap);
    let mut best = Tuned {
        choice: SolverChoice::Rgf { threads: n_threads },
        cost: rgf_cost.clone(),
        rgf_cost,
        candidates: 1,
    };
    if cfg.s2_max == 0 {
        return best;
    }
    for seq in sequences(cfg.max_levels, cfg.s2_max) {
        for terminal in 1..=n_threads {
            let plan = DomainPlan::new(&seq, n_threads).with_terminal_threads(terminal);
            let Ok(cost) = cost_ddrgf_with(l, &plan, ratios, cfg.blas_cap) else {
                break;
            };
            best.candidates += 1;
            if cost.gemm_equivalents < best.cost.gemm_equivalents {
                best.cost = cost;
                best.choice = SolverChoice::Ddrgf(plan);
            }
        }
    }
    best
}

/// Picks RGF or DDRGF for `ℓ` layers of size `b_s` on `n_threads` threads.
pub fn orchestrate(l: usize, b_s: usize, n_threads: usize, ratios: &KernelRatios) -> SolverChoice {
    orchestrate_with(l, b_s, n_threads, ratios, &TuneConfig::default())
}

pub fn orchestrate_with(
    l: usize,
    b_s: usize,
    n_threads: usize,
    ratios: &KernelRatios,
    cfg: &TuneConfig,
) -> SolverChoice {
    autotune_with(l, b_s, n_threads, ratios, cfg).choice
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ratios() -> KernelRatios {
        KernelRatios::from_ratios(0.4, 1.05)
    }

    #[test]
    fn sequence_order() {
        let s: Vec<_> = sequences(2, 2).collect();
        assert_eq!(
            s,
            vec![
                vec![1],
                vec![2],
                vec![1, 1],
                vec![1, 2],
                vec![2, 1],
                vec![2, 2]
            ]
        );
        assert_eq!(sequences(5, 4).count(), 4 + 16 + 64 + 256 + 1024);
    }

    #[test]
    fn single_thread_prefers_rgf() {
        for l in [2, 5, 16, 100, 1440, 10_000] {
            let t = autotune(l, 1, 1, &ratios());
            assert_eq!(t.choice, SolverChoice::Rgf { threads: 1 }, "l = {l}");
        }
    }

    #[test]
    fn zero_levels_is_rgf() {
        let cfg = TuneConfig {
            max_levels: 0,
            ..TuneConfig::default()
        };
        let t = autotune_with(1440, 1, 64, &ratios(), &cfg);
        assert_eq!(t.choice, SolverChoice::Rgf { threads: 64 });
        assert_eq!(t.candidates, 1);
    }

    #[test]
    fn many_threads_prefer_ddrgf() {
        let t = autotune(1440, 1, 64, &ratios());
        let plan = t.plan().expect("DDRGF expected");
        assert!(plan.num_levels() >= 1);
        assert!(t.cost.gemm_equivalents < t.rgf_cost.gemm_equivalents);
        assert!(plan.layer_counts(1440).is_ok());
    }

    #[test]
    fn tuned_cost_is_minimal_over_search_space() {
        let r = ratios();
        let t = autotune(300, 1, 8, &r);
        for seq in sequences(3, 4) {
            for terminal in 1..=8 {
                let plan = DomainPlan::new(&seq, 8).with_terminal_threads(terminal);
                if let Ok(c) = cost_ddrgf_with(300, &plan, &r, DEFAULT_BLAS_CAP) {
                    assert!(t.cost.gemm_equivalents <= c.gemm_equivalents);
                }
            }
        }
    }

    #[test]
    fn short_problems_skip_infeasible_plans() {
        let t = autotune(3, 1, 16, &ratios());
        if let Some(p) = t.plan() {
            assert!(p.layer_counts(3).is_ok());
        }
    }
}
