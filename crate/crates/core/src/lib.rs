//! Differentially private counting queries on quantum-encoded datasets.
//!
//! Rows of a dataset are basis-encoded into a uniform superposition, a
//! predicate query is compiled to a reversible circuit marking the rows it
//! accepts, and the accepted fraction α is estimated either by repeated direct
//! measurement or by amplitude estimation, each with a differentially private
//! noise layer. A quantum one-time pad layer evaluates the compiled circuit on
//! encrypted data.

pub mod accountant;
pub mod dataset;
pub mod direct;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod gate;
pub mod noise;
pub mod qae;
pub mod qotp;
pub mod query;
pub mod state;

pub use accountant::{BudgetLedger, Source};
pub use dataset::{load_dataset, neighbors, Attribute, Dataset, Schema};
pub use direct::{account_direct, run_direct, DirectConfig, DirectReport};
pub use error::{Error, Result};
pub use exec::Exec;
pub use gate::Gate;
pub use noise::{DepolarizingSpec, LaplaceSampler};
pub use qae::{median_amplify, run_qae, DpMode, QaeConfig, QaeOutcome};
pub use qotp::{decrypt, encrypt, homomorphic_exec, HomomorphicTranscript, PauliKey};
pub use query::{compile_circuit, decompose_to_clifford_t, parse_query, PredicateQuery};
pub use state::{basis_encode, decompose, SparseState};
