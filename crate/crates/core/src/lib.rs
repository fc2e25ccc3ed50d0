//! Bessel pairs, their weights and the Hardy and Rellich-type inequalities
//! they generate, evaluated numerically on balls in `ℝⁿ`.
//!
//! * [`potentials`]: radial weights with exact jets and their exponents.
//! * [`radial_ode`]: shooting from the singular origin.
//! * [`bessel_weight`]: pair certificates and the weight `β(V, W; R)`.
//! * [`spectral`]: best constants of weighted Rellich quotients.
//! * [`inequality`]: deficits of concrete inequalities on test functions.
//!
//! The guide under `book/` walks through each of these with runnable code.

pub mod bessel_weight;
pub mod error;
pub mod inequality;
pub mod jet;
pub mod potentials;
pub mod quadrature;
pub mod radial_ode;
pub mod roots;
pub mod special;
pub mod spectral;

pub use bessel_weight::{is_bessel_pair, weight, WeightOptions, WeightResult};
pub use error::{Error, Result};
pub use jet::Jet;
pub use potentials::{candidate_phi, lambda_limit, make_potential, PotentialSpec, RadialPotential};
pub use radial_ode::{
    indicial_exponents, shoot_from_origin, theta, OdeDim, OdeProblem, ShootOptions, Trajectory,
};
pub use spectral::{min_rayleigh, BoundaryCondition, GridParams, QuotientKind};

// The guide's code blocks run as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/potentials.md")]
    mod potentials {}
    #[doc = include_str!("../../../book/src/bessel-pairs.md")]
    mod bessel_pairs {}
    #[doc = include_str!("../../../book/src/shooting.md")]
    mod shooting {}
    #[doc = include_str!("../../../book/src/spectral.md")]
    mod spectral {}
    #[doc = include_str!("../../../book/src/inequalities.md")]
    mod inequalities {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
