//! Direct transcription toolkit for continuous-time optimal control problems.
//!
//! A problem in Bolza form ([`ocp::OcpProblem`]) is approximated in a space of
//! piecewise polynomials ([`fem`]), transcribed into a finite-dimensional NLP
//! by collocation, quadrature penalty or penalty-barrier ([`transcription`]),
//! solved by a primal-dual penalty-barrier interior-point method ([`ipm`]) and
//! assessed with the optimality gap, equality residual and bound violation
//! ([`measures`]). [`malm`] implements the modified augmented Lagrangian
//! method for quadratic penalty programs on top of the same solver.

pub mod banded;
pub mod error;
pub mod fem;
pub mod ipm;
pub mod malm;
pub mod measures;
pub mod nlp;
pub mod ocp;
pub mod sparse;
pub mod transcription;

pub use error::{Error, Result};
