//! Tensor-network solver for non-equilibrium steady states of boundary-driven
//! spin chains.
//!
//! The steady-state condition of a vectorized Lindblad master equation is
//! recast as a Hermitian ground-state problem and solved with a two-site
//! variational sweep over a matrix product state. A dense kron-assembled
//! implementation of the same superoperator serves as the ground-truth oracle
//! at small system sizes.

// Link the system BLAS for ndarray's gemm paths.
extern crate blas_src as _;

pub mod dmrg;
pub mod liouvillian;
pub mod mpo;
pub mod mps;
pub mod oracle;
pub mod pauli;
pub mod superspace;
pub mod tensor;

pub(crate) mod labels;

pub use dmrg::{local_eigensolve, solve_ness, warm_up, RunResult, SolverError, SweepSchedule};
pub use liouvillian::{
    build_current_mpo, build_liouvillian, build_magnetization_mpo, build_target, ModelError,
    ModelParams, SuperOperatorSet,
};
pub use mpo::{
    mpo_product, overlap3, MatrixProductOperator, MpoBuilder, MpoError, OpTable, OperatorString,
};
pub use mps::{inner, MatrixProductState, MpsError};
pub use oracle::{
    dense_liouvillian, dense_ness, dense_observables, DenseNess, NessFixture, OracleError,
};
pub use superspace::{
    make_ivec, map_side_op, unvectorize, vectorize, OrderingKind, OrderingScheme, Side, SideOp,
    SuperspaceError,
};
pub use tensor::{contract, svd_truncate, LabeledTensor, SvdResult, TensorError};
