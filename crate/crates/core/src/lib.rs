//! Stabilizer-based entanglement distillation protocols over qudits.
//!
//! The crate works in the symplectic picture: an `[[n, k]]_p` stabilizer code
//! is a self-orthogonal subspace `C` of `Z_p^{2n}`, an encoding operator is a
//! hyperbolic basis extending a basis of `C`, and a distillation protocol is
//! the induced map on Bell-diagonal error labels. Everything downstream of
//! that picture is exact arithmetic mod `p`; floating point only enters when
//! probability distributions and yields are computed.
//!
//! Modules, roughly bottom-up:
//!
//! * [`symplectic`]: vectors and subspaces of `Z_p^{2n}`, hyperbolic
//!   completion, quotients `C^perp / C`, exhaustive enumeration, counting.
//! * [`pauli`]: phase-tracked Pauli operators `XZ(v)` and stabilizer groups.
//! * [`encoder`]: encoding operators, their classification into encoding
//!   classes, the label maps `f` and `g`, and the serializable
//!   [`encoder::ProtocolSpec`].
//! * [`sim`]: fast simulation of a protocol on Bell-diagonal inputs,
//!   iteration over rounds, and yield curves.
//! * [`oracle`]: a dense state-vector implementation of the same protocol,
//!   used to cross-check the fast path and the operator constructions.
//! * [`search`]: exhaustive, deterministic, parallel search over all
//!   protocols of given `(n, k, p)`.
//! * [`cli`]: the `edp` command-line tool.

pub mod cli;
pub mod encoder;
pub mod oracle;
pub mod pauli;
pub mod search;
pub mod sim;
pub mod symplectic;

use num_bigint::BigUint;
use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u8, u8),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("vectors are not linearly independent")]
    DependentVectors,
    #[error("required symplectic products do not hold")]
    BadProducts,
    #[error("no hyperbolic partner satisfies the constraints")]
    NoPartner,
    #[error("vector lies outside the orthogonal complement")]
    OutsideComplement,
    #[error("symplectic form is degenerate")]
    DegenerateForm,
    #[error("eigenvalue label is inconsistent with the operator order")]
    BadEigenvalue,
    #[error("state space too large: dimension {0} exceeds limit {1}")]
    SizeLimit(usize, usize),
    #[error("averaging projector annihilated every candidate seed state")]
    ZeroProjector,
    #[error("encoding operator is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("probabilities must be nonnegative and sum to 1 (sum = {0})")]
    BadDistribution(f64),
    #[error("fidelity must lie in [0, 1], got {0}")]
    BadFidelity(f64),
    #[error("candidate count {candidates} exceeds budget {budget}")]
    BudgetExceeded { candidates: BigUint, budget: u64 },
    #[error("protocol spec rejected: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
