//! A finite-truncation laboratory for the w-energy Dirichlet form on
//! Bernoulli functionals.
//!
//! The probability space `{-1, +1}^n` carries the product measure with
//! per-site success probabilities `p_k`. Square-integrable functionals are
//! held either in the orthonormal chaos basis `{Z_sigma}` ([`ChaosVector`])
//! or by their values at every sample point ([`PointwiseVector`]); a
//! per-coordinate butterfly converts between the two in `O(n 2^n)`.
//!
//! On top of that sit the annihilation/creation operators and their
//! anti-commutation relations ([`operators`]), the w-energy form and its
//! contraction property ([`dirichlet`]), the w-Ornstein-Uhlenbeck semigroup
//! ([`semigroup`]) and an exact continuous-time refresh chain whose
//! transition semigroup is checked against the spectral one by Monte Carlo
//! ([`glauber`]).
//!
//! Subsets `sigma` of `{0, .., n-1}` and sample points `omega` are both
//! encoded as bitmasks: bit `j` set means `j ∈ sigma`, respectively
//! `omega(j) = +1`.
//!
//! At finite `n` the form domain is the whole space, so every vector is an
//! admissible argument of the form, the number operator and the semigroup.

pub mod chaos;
pub mod cli;
pub mod dirichlet;
mod error;
pub mod glauber;
pub mod measure;
pub mod operators;
pub mod rng;
pub mod semigroup;

pub use chaos::{ChaosVector, PointwiseVector};
pub use dirichlet::{ContractionFunction, WeightFunction};
pub use error::{Error, Result};
pub use glauber::{GlauberConfig, GlauberTrajectory};
pub use measure::{SamplePoint, SiteParams};
pub use operators::{Ladder, OperatorLabel};
pub use semigroup::SemigroupQuery;
