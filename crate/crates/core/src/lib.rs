//! Selected inversion of block n-diagonal matrices.
//!
//! The library computes `bndiag(M⁻¹)`, the part of the inverse of a block
//! banded matrix that matches the block pattern of `M`, without forming the
//! full inverse. It provides:
//!
//! - [`rgf`]: sequential recursive Green's function solvers for block
//!   tridiagonal and general block n-diagonal matrices, the block-fusing
//!   baseline, and an extended variant returning the halo rows and columns.
//! - [`ddrgf`]: the domain-decomposition solver that splits the layers into
//!   interleaved sub-domains, inverts them concurrently and stitches them
//!   through a block tridiagonal Schur system, recursively.
//! - [`cost`]: operation-count cost models, the plan auto-tuner and the
//!   RGF/DDRGF orchestrator.
//! - [`kernels`]: the GEMM / LU / GETRS kernel layer with call counters, a
//!   microbenchmark and a roofline model.
//! - [`banded`]: storage, permutations, synthetic problems, the `.bbm` file
//!   format and a dense brute-force oracle.

pub mod banded;
pub mod cost;
pub mod ddrgf;
pub mod error;
pub mod kernels;
pub mod rgf;

pub use banded::{
    extract_bndiag, interleave_permutation, make_layout, oracle_selected_inverse, permute_matrix,
    random_hermitian, random_spd_like, to_dense, BlockBandedMatrix, BlockLayout, DenseMatrix,
    DomainDescriptor, PartitionedMatrix, Permutation,
};
pub use error::{Error, Result};
pub use kernels::{KernelCounters, KernelRatios, Kernels, LUFactors};

/// Complex double precision, the reference scalar type.
pub type C64 = num_complex::Complex<f64>;
