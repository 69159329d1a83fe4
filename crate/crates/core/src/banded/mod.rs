//! Block banded storage and everything needed to build and check it.

mod io;
mod layout;
mod matrix;
mod oracle;
mod permutation;
mod synthetic;

pub use io::{read_bbm, read_bbm_from, write_bbm, write_bbm_to};
pub use layout::{make_layout, BlockLayout};
pub use matrix::{
    block_errors, extract_bndiag, max_block_error, to_dense, BlockBandedMatrix, BlockError,
};
pub use oracle::{dense_inverse, dense_lu, oracle_selected_inverse, DenseLu};
pub use permutation::{
    interleave_permutation, permute_matrix, DomainDescriptor, PartitionedMatrix, Permutation,
    SubdomainCoupling,
};
pub use synthetic::{random_hermitian, random_spd_like, DEFAULT_DOMINANCE};

/// Dense complex matrix, column-major.
pub type DenseMatrix = faer::Mat<crate::C64>;
