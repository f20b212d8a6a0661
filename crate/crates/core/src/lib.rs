//! Exact symbolic and numeric machinery for the L2 integral transform
//!
//! ```text
//! L2{f}(s) = ∫₀^∞ x·e^(−x²s²)·f(x) dx
//! ```
//!
//! The crate works over the Gaussian-polynomial algebra of finite sums
//! `c·x^(2k)·e^(a·x²)` on `[0, ∞)`. That algebra is closed under addition,
//! multiplication, the operator `δ_x = (1/x)·d/dx`, the L2 convolution `⋆`,
//! and the transform itself, whose image is a rational function of `σ = s²`.
//! All symbolic work uses exact rationals; floating point only appears when
//! evaluating expressions and in the independent quadrature oracle.
//!
//! Modules:
//!
//! * [`expr`] – the function algebra ([`GExpr`]) and `δ_x`.
//! * [`transform`] – forward/inverse transform, `δ_s`, partial fractions ([`SExpr`]).
//! * [`convolution`] – symbolic and numeric `⋆`, star powers.
//! * [`quadrature`] – adaptive Gauss–Kronrod oracle for the defining integral.
//! * [`pde`] – series solvers for four PDE families plus a residual harness.
//! * [`order`] – exponential / exponential-squared growth classification.

pub mod convolution;
pub mod error;
pub mod expr;
pub mod lpoly;
pub mod order;
pub mod pde;
pub mod quadrature;
pub mod rational;
pub mod transform;

#[cfg(any(test, feature = "test-util"))]
pub mod sample;

pub use error::{Error, Result};
pub use expr::{GExpr, GTerm};
pub use lpoly::LPoly;
pub use rational::Rational;
pub use transform::{SExpr, STerm};
