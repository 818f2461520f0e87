//! Deciding, optimizing and synthesizing LOCC transformations between
//! bipartite pure states.
//!
//! The pipeline is: Schmidt spectra ([`bipartite`]) are compared by
//! majorization ([`majorize`]); [`synth`] turns a feasible request into an
//! explicit two-stage protocol (a deterministic Kraus measurement on Alice's
//! side with Bob corrections, then an optional single pure contraction), and
//! [`simulate`] checks and samples it.
//!
//! ```
//! use locc_forge::synth::{feasibility, synthesize, ProbabilityRequest};
//! use locc_forge::simulate::{estimate, verify};
//! use locc_forge::BipartiteState;
//!
//! let a = BipartiteState::from_schmidt(&[0.8, 0.2], 2, 2)?;
//! let b = BipartiteState::from_schmidt(&[0.5, 0.5], 2, 2)?;
//!
//! let report = feasibility(&a, &b, ProbabilityRequest::Max)?;
//! assert!((report.p_max - 0.4).abs() < 1e-12);
//!
//! let protocol = synthesize(&a, &b, ProbabilityRequest::Max)?;
//! assert!(verify(&protocol, &a, &b, 1e-9)?.passed);
//!
//! let est = estimate(&protocol, &a, &b, 10_000, 42)?;
//! assert!((est.p_hat - 0.4).abs() < 4.0 * est.stderr.max(1e-3));
//! # Ok::<(), locc_forge::Error>(())
//! ```

pub mod bipartite;
pub mod cli;
pub mod error;
pub mod majorize;
pub mod numkit;
pub mod simulate;
pub mod synth;

pub use bipartite::{BipartiteState, SchmidtForm};
pub use error::{Error, Result};
pub use majorize::{BirkhoffDecomposition, Permutation, Relation};
pub use numkit::{ComplexMatrix, SvdTriple};

pub use simulate::{Estimate, RunTrace, VerificationReport};
pub use synth::{FeasibilityReport, LoccProtocol, ProbabilityRequest};
