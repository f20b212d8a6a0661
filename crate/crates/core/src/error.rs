use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An exponent `a·x²` left the range of `f64`.
    #[error("overflow evaluating term with exponent {exponent} at x = {x}")]
    Overflow { x: f64, exponent: f64 },

    #[error("argument outside the domain: {0}")]
    Domain(String),

    /// A σ-constant term has no function-valued inverse.
    #[error("transform-domain expression carries impulse content (constant term {0})")]
    ImpulseContent(String),

    /// Multiplying a σ-constant by σ leaves the representable space.
    #[error("result would contain polynomial content in σ")]
    PolynomialContent,

    #[error("integral diverges: s² = {sigma} does not exceed growth rate {rate}")]
    DivergentIntegral { sigma: f64, rate: f64 },

    #[error("quadrature failed to reach tolerance: {0}")]
    QuadratureFailure(String),

    #[error("grid point ({x}, {t}) outside x > 0, t > 0")]
    GridDomain { x: f64, t: f64 },

    #[error("non-positive sample f({x}) = {value}")]
    NonPositiveSample { x: f64, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}
