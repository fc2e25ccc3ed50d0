use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("argument outside the domain of {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    /// The indicial equation at r = 0 has complex roots: solutions oscillate
    /// immediately at the origin.
    #[error(
        "not a Bessel pair at c = {c}: complex indicial exponents (discriminant {discriminant:e})"
    )]
    ComplexExponents { c: f64, discriminant: f64 },

    #[error("W/V is more singular than r^-2 at the origin (exponent {exponent})")]
    TooSingular { exponent: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("integrator step size collapsed near r = {radius:e}")]
    StepCollapse { radius: f64 },

    #[error("solution vanishes at the boundary (critical boundary): |y(R)| = {y_end:e}")]
    CriticalBoundary { y_end: f64 },

    #[error("solution changes sign at r = {radius}")]
    SignChange { radius: f64 },

    #[error("no positive solution for any c >= {c_min:e}")]
    NeverPositive { c_min: f64 },

    #[error("extrapolation did not converge: successive estimates {a} and {b}")]
    NoConvergence { a: f64, b: f64 },

    #[error("potential kind `{0}` has no closed-form solution")]
    Unsupported(String),

    #[error("mode k = {k} is not integrable for this weight and boundary condition")]
    NonIntegrableMode { k: usize },

    #[error("denominator form is not positive definite (pivot {pivot:e} at row {row})")]
    IndefiniteDenominator { row: usize, pivot: f64 },

    #[error("divergent integral: {0}")]
    Divergent(String),
}
