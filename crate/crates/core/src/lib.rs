//! Numerical analysis of weighted composition semigroups
//! (T(t) f)(x) = h_t(x) f(phi(t, x)) on weighted L^p and Sobolev
//! spaces: semiflow evaluation, transported weights, and spectral-free
//! asymptotic stability / hypercyclicity-candidacy classification,
//! cross-checked against direct simulation of orbit norms.

pub mod config;
pub mod error;
pub mod expr;
pub(crate) mod fit;
pub mod grid;
pub mod lasota;
pub mod model;
pub mod nd;
pub mod ode;
pub mod quad;
pub mod report;
pub mod semiflow;
pub mod sobolev;
pub mod stability;
pub mod weights;

pub use error::{EngineError, Result};
pub use model::{
    Domain, Family, Field, Interval, Multiplier, ProblemSpec, ScalarMode, SpaceKind, Weight,
};
pub use semiflow::Semiflow;
pub use stability::{Status, Verdict};
pub use weights::{SampledFunction, WeightEvolution};
