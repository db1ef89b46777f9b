//! Dense density matrices over labelled tensor-product bases.
//!
//! Basis states are enumerated with the first factor varying slowest.

mod layout;
mod sparse;
mod state;

pub use layout::{BasisLayout, Bipartition, Encoding, Factor};
pub use sparse::SparseOp;
pub(crate) use state::validity_report;
pub use state::{
    assert_valid_state, bipartite_reduction, hermitian_eigen, hermitian_eigenvalues,
    hermiticity_deviation, partial_trace, partial_transpose, tensor_product, trace_norm,
    BipartiteState, QuantumState, StateReport, Tolerances, Violation,
};
