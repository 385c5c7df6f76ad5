//! Ordered Banach spaces with a base (OBSB): concrete cones and base norms,
//! Markov operators and nonhomogeneous chains over them, the Dobrushin
//! ergodicity coefficient, and Doeblin-type minorization certificates for
//! weak, uniform, L-weak and L-strong ergodicity.
//!
//! The crate is organized around six pieces:
//! - [`space`]: cone families, the strictly positive functional, minimal
//!   decompositions and the base norm;
//! - [`operators`]: Markov operators, Markovianity certificates, and
//!   nonhomogeneous chain composition;
//! - [`dobrushin`]: the ergodicity coefficient and its property battery;
//! - [`ergodicity`]: chain classification and Doeblin-type certificates;
//! - [`gallery`]: the built-in instance families (grid multiplication chain,
//!   Lorentz kernel chain, classical stochastic matrices);
//! - [`props`]: randomized invariant suites backing the `properties` command.

pub mod dobrushin;
pub mod ergodicity;
pub mod error;
pub mod gallery;
mod lp;
pub mod operators;
pub mod probes;
pub mod props;
pub mod space;

pub use error::{Error, Result};
pub use operators::{MarkovCertificate, MarkovOperator, NdmcSpec, NormEstimate};
pub use space::{ConeDecomposition, ExtremePoints, SpaceDescriptor, SpaceKind, Vector};
