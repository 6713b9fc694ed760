//! Numerical laboratory for the mean-field equations of ferromagnetic Ising
//! systems.
//!
//! The Gibbs magnetizations `m_i = ⟨σ_i⟩` of a ferromagnet with couplings
//! `J ≥ 0` and fields `h > 0` nearly solve `m = tanh(h + Jm)`, with a residual
//! controlled by the largest coupling. This crate computes both sides: exact
//! Gibbs quantities by enumeration ([`exact`]), mean-field solutions
//! ([`solver`]), the interpolation argument behind the residual bound
//! ([`dynamics`]), Monte Carlo estimates for large systems ([`sampler`]), and
//! the standard model families ([`models`]).

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod exact;
pub mod io;
pub mod models;
pub mod numerics;
pub mod sampler;
pub mod solver;
pub mod system;

pub use error::{Error, Result};
pub use exact::{gibbs_exact, GibbsReport};
pub use sampler::{glauber_estimate, SampleEstimate};
pub use solver::{fixed_point, MeanFieldSolution};
pub use system::{BoundReport, NormTriple, SpinSystem};
