//! Operation-count cost models, the plan auto-tuner and the orchestrator.
//!
//! Costs are expressed in GEMM equivalents: one GEMM at block size `b_s`
//! counts 1, one LU counts `r_LU(b_s)` and one GETRS counts `r_GETRS(b_s)`.

mod tune;

use serde::{Deserialize, Serialize};

pub use tune::{
    autotune, autotune_with, orchestrate, orchestrate_with, SolverChoice, TuneConfig, Tuned,
};

use crate::banded::DomainDescriptor;
use crate::ddrgf::DomainPlan;
use crate::error::Result;
use crate::kernels::{KernelCounters, KernelRatios};
use crate::rgf::{extended_extra_gemms, ndiag_counts, tridiag_counts};

/// Default cap on the modeled speed-up of multi-threaded kernels.
pub const DEFAULT_BLAS_CAP: usize = 12;

/// Predicted cost with its named contributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub gemm_equivalents: f64,
    pub breakdown: Vec<(String, f64)>,
    pub predicted_seconds: f64,
}

impl CostEstimate {
    /// Total is the left-to-right sum of the terms.
    pub fn from_terms(terms: Vec<(String, f64)>, t_gemm: f64) -> Self {
        let total = terms.iter().fold(0.0, |acc, (_, v)| acc + v);
        Self {
            gemm_equivalents: total,
            breakdown: terms,
            predicted_seconds: total * t_gemm,
        }
    }

    /// Ratio-weighted kernel tallies, split into `gemm`, `lu` and `getrs`.
    pub fn from_counters(c: &KernelCounters, ratios: &KernelRatios) -> Self {
        Self::from_terms(
            vec![
                ("gemm".into(), c.n_gemm as f64),
                ("lu".into(), ratios.r_lu * c.n_lu as f64),
                ("getrs".into(), ratios.r_getrs * c.n_getrs as f64),
            ],
            ratios.t_gemm,
        )
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.breakdown
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
    }

    /// Every term scaled by `factor`.
    pub fn scaled(&self, factor: f64, t_gemm: f64) -> Self {
        Self::from_terms(
            self.breakdown
                .iter()
                .map(|(n, v)| (n.clone(), v * factor))
                .collect(),
            t_gemm,
        )
    }
}

/// `ℓ(4 + r_LU + 3r_GETRS) − (4 + 2r_GETRS)`, evaluated as
/// `4(ℓ−1) + ℓ·r_LU + (3ℓ−2)·r_GETRS`.
pub fn cost_rgf(l: usize, ratios: &KernelRatios) -> CostEstimate {
    CostEstimate::from_counters(&tridiag_counts(l.max(1)), ratios)
}

/// `[(3w²+w)ℓ − 2w³ − 2w²] + ℓ·r_LU + [ℓ(2w+1) − w² − w]·r_GETRS`.
pub fn cost_nrgf(l: usize, w: usize, ratios: &KernelRatios) -> CostEstimate {
    CostEstimate::from_counters(&ndiag_counts(l.max(1), w), ratios)
}

/// Fused baseline: block tridiagonal RGF on `ℓ' = ⌈ℓ/w⌉` super-layers, with
/// ratios and `t_GEMM` measured at the super-block size `w·b_s`.
pub fn cost_fused(l: usize, w: usize, ratios_at_ws: &KernelRatios) -> CostEstimate {
    cost_rgf(l.div_ceil(w.max(1)), ratios_at_ws)
}

/// Extra GEMMs to obtain the halo rows and columns of a sub-domain inverse.
pub fn r_rgf_extra(l: usize) -> f64 {
    extended_extra_gemms(l) as f64
}

/// Per-task contributions of one DDRGF level with sub-domains of `s2` layers,
/// before the `n_tasks / n_threads` factor.
pub fn ddrgf_task_terms(s2: usize, ratios: &KernelRatios) -> Vec<(&'static str, f64)> {
    let s = s2 as f64;
    vec![
        (
            "r22_inv",
            cost_rgf(s2, ratios).gemm_equivalents + r_rgf_extra(s2),
        ),
        ("r11_12", 2.0 * s),
        ("r11_21", 2.0 * s),
        ("r_S", 4.0),
        ("r12", 4.0 * s),
        ("r21", 4.0),
        ("r22", 4.0 * (s - 1.0) + 2.0 * s),
    ]
}

/// Recursive DDRGF cost with the default kernel-threading cap.
pub fn cost_ddrgf(l: usize, plan: &DomainPlan, ratios: &KernelRatios) -> Result<CostEstimate> {
    cost_ddrgf_with(l, plan, ratios, DEFAULT_BLAS_CAP)
}

/// Recursive DDRGF cost.
///
/// Level `k` contributes `(n_tasks/n_threads)·term` for each per-task term,
/// assuming ideal load balance. The terminal Schur system costs
/// `r_RGF(ℓ_S) / min(terminal_threads, blas_cap)`.
pub fn cost_ddrgf_with(
    l: usize,
    plan: &DomainPlan,
    ratios: &KernelRatios,
    blas_cap: usize,
) -> Result<CostEstimate> {
    let counts = plan.layer_counts(l)?;
    let mut terms = Vec::new();
    for (k, spec) in plan.levels.iter().enumerate() {
        let n_tasks = spec.num_tasks(counts[k]);
        let f = n_tasks as f64 / plan.n_threads as f64;
        for (name, v) in ddrgf_task_terms(spec.s2, ratios) {
            terms.push((format!("L{}.{name}", k + 1), f * v));
        }
    }
    let l_s = *counts.last().expect("at least one level");
    let speedup = plan.terminal_threads.clamp(1, blas_cap.max(1)) as f64;
    terms.push((
        "r_S_inv".into(),
        cost_rgf(l_s, ratios).gemm_equivalents / speedup,
    ));
    Ok(CostEstimate::from_terms(terms, ratios.t_gemm))
}

/// Exact kernel tallies of a DDRGF run, per level and for the terminal solve.
///
/// Unlike [`cost_ddrgf`] this follows the actual partition: the first
/// sub-domain has no left neighbour and the trailing one may be shorter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DdrgfCounts {
    pub levels: Vec<KernelCounters>,
    pub terminal: KernelCounters,
}

impl DdrgfCounts {
    pub fn total(&self) -> KernelCounters {
        self.levels.iter().copied().sum::<KernelCounters>() + self.terminal
    }
}

/// Kernel tallies of one sub-domain task: `m` layers, `c` D₁ neighbours.
pub fn subdomain_counts(m: usize, c: usize) -> KernelCounters {
    let inv = tridiag_counts(m);
    let (m, c) = (m as u64, c as u64);
    let gemm =
        extended_extra_gemms(m as usize) + 2 * c * m + c * c + c * c * m + c * c + (3 * m - 2) * c;
    inv + KernelCounters::new(0, 0, gemm)
}

pub fn ddrgf_counts(l: usize, plan: &DomainPlan) -> Result<DdrgfCounts> {
    let counts = plan.layer_counts(l)?;
    let mut levels = Vec::with_capacity(plan.num_levels());
    for (k, spec) in plan.levels.iter().enumerate() {
        let d = DomainDescriptor::new(counts[k], spec.s1, spec.s2)?;
        let total =
            d.d2.iter()
                .filter(|r| !r.is_empty())
                .map(|r| {
                    let c = usize::from(r.start > 0) + usize::from(r.end < counts[k]);
                    subdomain_counts(r.len(), c)
                })
                .sum();
        levels.push(total);
    }
    Ok(DdrgfCounts {
        levels,
        terminal: tridiag_counts(*counts.last().expect("levels")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgf_examples() {
        assert_eq!(
            cost_rgf(4, &KernelRatios::from_ratios(0.0, 0.0)).gemm_equivalents,
            12.0
        );
        assert_eq!(
            cost_rgf(1, &KernelRatios::from_ratios(1.0, 1.0)).gemm_equivalents,
            2.0
        );
        let r = KernelRatios::from_ratios(0.4, 1.05);
        for l in 1..50 {
            let d = cost_rgf(2 * l, &r).gemm_equivalents - cost_rgf(l, &r).gemm_equivalents;
            assert!((d - l as f64 * (4.0 + 0.4 + 3.0 * 1.05)).abs() < 1e-9);
        }
    }

    #[test]
    fn nrgf_examples() {
        assert_eq!(
            cost_nrgf(160, 2, &KernelRatios::from_ratios(0.0, 0.0)).gemm_equivalents,
            2216.0
        );
        let r = KernelRatios::from_ratios(0.37, 1.21);
        for l in 2..40 {
            assert_eq!(cost_nrgf(l, 1, &r), cost_rgf(l, &r));
        }
    }

    #[test]
    fn fused_examples() {
        let r = KernelRatios::from_ratios(0.4, 1.0);
        assert_eq!(cost_fused(160, 1, &r), cost_rgf(160, &r));
        assert_eq!(cost_fused(160, 3, &r), cost_rgf(54, &r));
    }

    #[test]
    fn fused_is_asymptotically_heavier() {
        // t_GEMM(w·b_s) ≈ w³ t_GEMM(b_s): fused ≈ 4w²ℓ against native (3w²+w)ℓ
        let zero = KernelRatios::from_ratios(0.0, 0.0);
        for w in 2..5 {
            let l = 1200;
            let fused = cost_fused(l, w, &zero).gemm_equivalents * (w * w * w) as f64;
            let native = cost_nrgf(l, w, &zero).gemm_equivalents;
            assert!(fused > native);
        }
    }

    #[test]
    fn ddrgf_single_level_example() {
        let r = KernelRatios::from_ratios(0.4, 1.1);
        let l = 21;
        let plan = DomainPlan::new(&[1], 1);
        let n_tasks = 11.0;
        let l_s = 11;
        let rgf1 = cost_rgf(1, &r).gemm_equivalents;
        let want = n_tasks * (rgf1 + 0.0 + 2.0 + 2.0 + 4.0 + 4.0 + 4.0 + (0.0 + 2.0))
            + cost_rgf(l_s, &r).gemm_equivalents;
        let got = cost_ddrgf(l, &plan, &r).unwrap().gemm_equivalents;
        assert!((got - want).abs() < 1e-9 * want);
    }

    #[test]
    fn thread_scaling_of_terms() {
        let r = KernelRatios::from_ratios(0.4, 1.1);
        let one = cost_ddrgf(400, &DomainPlan::new(&[3], 2).with_terminal_threads(1), &r).unwrap();
        let two = cost_ddrgf(400, &DomainPlan::new(&[3], 4).with_terminal_threads(1), &r).unwrap();
        for ((n1, v1), (n2, v2)) in one.breakdown.iter().zip(&two.breakdown) {
            assert_eq!(n1, n2);
            if n1 == "r_S_inv" {
                assert_eq!(v1, v2);
            } else {
                assert!((v1 / 2.0 - v2).abs() <= 1e-12 * v1);
            }
        }
    }

    #[test]
    fn breakdown_sums_to_total() {
        let r = KernelRatios::from_ratios(0.41, 1.07);
        let e = cost_ddrgf(1440, &DomainPlan::new(&[4, 2, 3, 2, 2], 24), &r).unwrap();
        let sum = e.breakdown.iter().fold(0.0, |a, (_, v)| a + v);
        assert_eq!(sum, e.gemm_equivalents);
        assert!(e.breakdown.iter().all(|(_, v)| *v >= 0.0));
    }

    #[test]
    fn s2_trade_off() {
        let r = KernelRatios::from_ratios(0.4, 1.05);
        let mut prev_ls = usize::MAX;
        let mut prev_inv = 0.0;
        for s2 in 1..=6 {
            let plan = DomainPlan::new(&[s2], 8);
            let ls = plan.layer_counts(1440).unwrap()[1];
            let e = cost_ddrgf(1440, &plan, &r).unwrap();
            let inv = e.term("L1.r22_inv").unwrap() / (1440usize.div_ceil(1 + s2) as f64 / 8.0);
            assert!(ls < prev_ls);
            assert!(inv > prev_inv);
            prev_ls = ls;
            prev_inv = inv;
        }
    }

    #[test]
    fn interior_task_matches_model_terms() {
        let unit = KernelRatios::from_ratios(0.0, 0.0);
        for s2 in 1..=8 {
            let c = subdomain_counts(s2, 2);
            let model: f64 = ddrgf_task_terms(s2, &unit).iter().map(|(_, v)| v).sum();
            assert_eq!(c.n_gemm as f64, model);
            assert_eq!(c.n_lu, s2 as u64);
            assert_eq!(c.n_getrs, 3 * s2 as u64 - 2);
        }
    }

    #[test]
    fn estimates_serialize() {
        let e = cost_rgf(10, &KernelRatios::from_ratios(0.4, 1.0));
        let s = serde_json::to_string(&e).unwrap();
        let back: CostEstimate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }
}
