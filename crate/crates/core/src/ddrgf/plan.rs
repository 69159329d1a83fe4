use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Domain sizes at one recursion level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LevelSpec {
    pub s1: usize,
    pub s2: usize,
}

impl LevelSpec {
    pub fn new(s2: usize) -> Self {
        Self { s1: 1, s2 }
    }

    /// `⌈ℓ / (s₁ + s₂)⌉`.
    pub fn num_tasks(&self, l: usize) -> usize {
        l.div_ceil(self.s1 + self.s2)
    }

    /// Layers of the Schur system, `⌈ℓ / (s₁ + s₂)⌉·s₁`.
    pub fn schur_layers(&self, l: usize) -> usize {
        self.num_tasks(l) * self.s1
    }
}

/// Recursion levels and thread budget of a DDRGF run.
///
/// `n_threads` runs the sub-domain tasks of every level; `terminal_threads`
/// is the kernel thread count of the final block tridiagonal RGF solve.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DomainPlan {
    pub levels: Vec<LevelSpec>,
    pub n_threads: usize,
    pub terminal_threads: usize,
}

impl DomainPlan {
    /// Plan with `s₁ = 1` and the given `s₂` per level; the terminal solve
    /// uses the same number of threads.
    pub fn new(s2: &[usize], n_threads: usize) -> Self {
        Self {
            levels: s2.iter().map(|&s| LevelSpec::new(s)).collect(),
            n_threads,
            terminal_threads: n_threads,
        }
    }

    pub fn with_terminal_threads(mut self, threads: usize) -> Self {
        self.terminal_threads = threads;
        self
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn s2_sequence(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.s2).collect()
    }

    /// Checks the plan against `l` layers and returns the layer count at each
    /// level followed by the size of the terminal Schur system.
    pub fn layer_counts(&self, l: usize) -> Result<Vec<usize>> {
        if self.levels.is_empty() {
            return Err(Error::InvalidPlan("a plan needs at least one level".into()));
        }
        if self.n_threads == 0 || self.terminal_threads == 0 {
            return Err(Error::InvalidPlan("thread counts must be positive".into()));
        }
        let mut counts = vec![l];
        let mut cur = l;
        for (k, lv) in self.levels.iter().enumerate() {
            if lv.s1 != 1 {
                return Err(Error::InvalidPlan(format!(
                    "level {}: s1 must be 1, got {}",
                    k + 1,
                    lv.s1
                )));
            }
            if lv.s2 == 0 {
                return Err(Error::InvalidPlan(format!(
                    "level {}: s2 must be positive",
                    k + 1
                )));
            }
            if cur < lv.s1 + lv.s2 {
                return Err(Error::InvalidPlan(format!(
                    "level {} has {cur} layers, fewer than s1 + s2 = {}",
                    k + 1,
                    lv.s1 + lv.s2
                )));
            }
            let next = lv.schur_layers(cur);
            debug_assert!(next < cur);
            counts.push(next);
            cur = next;
        }
        Ok(counts)
    }

    pub fn validate(&self, l: usize) -> Result<()> {
        self.layer_counts(l).map(drop)
    }
}

impl fmt::Display for DomainPlan {
    /// `s2:4,1,1` style, followed by the thread counts.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.levels.iter().map(|l| l.s2.to_string()).collect();
        write!(
            f,
            "s2:{} threads:{} terminal:{}",
            s.join(","),
            self.n_threads,
            self.terminal_threads
        )
    }
}

/// Parses an `s₂` sequence such as `s2:4,1,1` or `4,1,1`.
pub fn parse_s2_sequence(text: &str) -> Result<Vec<usize>> {
    let body = text.trim();
    let body = body.strip_prefix("s2:").unwrap_or(body);
    if body.is_empty() {
        return Err(Error::InvalidPlan("empty s2 sequence".into()));
    }
    body.split(',')
        .map(|x| {
            x.trim()
                .parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| Error::InvalidPlan(format!("bad s2 entry {x:?} in {text:?}")))
        })
        .collect()
}

impl FromStr for DomainPlan {
    type Err = Error;

    /// Parses the `s₂` sequence only; threads default to 1.
    fn from_str(s: &str) -> Result<Self> {
        Ok(DomainPlan::new(&parse_s2_sequence(s)?, 1))
    }
}
