//! Constructive control of bilinear Schrödinger systems `ψ' = (A + uB)ψ`
//! given through Galerkin truncations in the eigenbasis of `A`.
//!
//! The crate checks the spectral hypotheses behind approximate
//! controllability and synthesizes piecewise-constant controls by averaging.
//! Controls are propagated exactly, with their L¹ cost bounded from both sides.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod liealg;
pub mod linalg;
pub mod models;
pub mod propagate;
pub mod report;
pub mod spectra;
pub mod synthesis;

pub use error::{Error, Pair, Result};
pub use liealg::{lie_rank, LieRank, SkewPair, Verdict};
pub use linalg::{CMat, CVec};
pub use models::{example_4x4, infinite_well, planar_molecule, MoleculeParams, Parity, WellParams};
pub use propagate::{DensityMatrix, Trajectory, Unitary};
pub use report::TransferReport;
pub use spectra::{Chain, SystemSpec, Violation};
pub use synthesis::{PiecewiseConstantControl, SigmaSchedule, SigmaStep, SynthesisParams};
