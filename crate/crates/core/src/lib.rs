//! Numerics for Banach SN spaces over coordinate spaces `R^d`.
//!
//! A space is a norm together with a symmetric nonexpansive matrix `L`, giving
//! `q_L(b) = ½<b, Lb>` and `r_L = ½‖·‖² + q_L`. On top of that the crate
//! evaluates `s_L`, L-positive sets and their density gaps, Fitzpatrick-type
//! functions `Φ_A` and `Θ_A`, monotone multifunctions on `E × E*`, linear
//! relations with their polars and adjoints, and negative-alignment numbers.
//!
//! ```
//! use snmono::norm::BaseNorm;
//! use snmono::space::{pt, SnSpace};
//!
//! let s = SnSpace::product(1, BaseNorm::Euclidean);
//! assert_eq!(s.q_l(&pt(&[3.0, -2.0])), -6.0);
//! assert_eq!(s.r_l(&pt(&[1.0, 1.0])), 2.0);
//! ```
//!
//! Every stochastic routine takes an [`optim::Budget`] whose seed fixes the
//! result.

pub mod error;
pub mod grid;
pub mod serde_mat;
pub mod ext;
pub mod linalg;
pub mod norm;
pub mod optim;
pub mod parallel;
pub mod space;
pub mod convex;
pub mod sets;
pub mod mono;
pub mod fitzpatrick;
pub mod linrel;
pub mod alignment;
pub mod report;
pub mod cli;
