//! Sequential recursive Green's function solvers.

mod extended;
mod fused;
mod ndiag;
mod tridiag;

pub use extended::{extended_extra_gemms, rgf_extended, rgf_extended_with, ExtendedInverse};
pub use fused::{fuse, fuse_layout, rgf_fused, rgf_fused_with};
pub use ndiag::{ndiag_counts, rgf_ndiag, rgf_ndiag_traced, rgf_ndiag_with, NdiagTrace};
pub use tridiag::{rgf_downward, rgf_tridiag, rgf_tridiag_with, rgf_upward, RgfWorkspace};

use crate::kernels::KernelCounters;

/// Kernel tallies of block tridiagonal RGF: `ℓ` LU, `3ℓ−2` GETRS, `4(ℓ−1)` GEMM.
pub fn tridiag_counts(l: usize) -> KernelCounters {
    let l = l as u64;
    KernelCounters::new(l, 3 * l - 2, 4 * (l - 1))
}
