//! Exact symbolic construction of symplectic realizations of quasi-Poisson
//! bivectors, order by order in a deformation parameter.

pub mod error;
pub mod examples;
pub mod octonion;
pub mod poly;
pub mod realization;
pub mod tensor;
pub mod testing;

pub use error::{Error, Result};
pub use octonion::{Octonion, OctonionStructure};
pub use poly::{Monomial, Naming, Poly, Rational, Var, VarSet};
pub use realization::{realize, Bivector, Realization};
pub use tensor::{LeadSymmetry, SymTensor, TensorEntry, Trivector};
