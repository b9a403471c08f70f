//! Quantum-inspired projection heads for dense retrieval embeddings.
//!
//! Real vectors are angle-encoded as product states of qubits and compared by
//! fidelity. A trainable head of parameterised two-qubit compressors halves
//! the qubit count per layer. A dense linear baseline, a reverse-mode
//! autodiff tape, an NDCG evaluator and a dense state-vector oracle round out
//! the crate.

pub mod autodiff;
pub mod baseline;
pub mod circuit;
pub mod cli;
pub mod complex;
pub mod encoding;
pub mod error;
pub mod eval;
pub mod head;
pub mod model;
pub mod oracle;
pub mod persist;
pub mod store;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
