//! Exact univariate polynomials with rational coefficients.
//!
//! Used for the PDE coefficient ratios and their antiderivatives, and as the
//! polynomial-in-σ oracle when recombining partial fractions.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{One, Signed, Zero};

use crate::rational::{to_f64, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LPoly {
    /// degree → coefficient; zero coefficients are never stored.
    coeffs: BTreeMap<u32, Rational>,
}

impl LPoly {
    pub fn zero() -> Self {
        LPoly::default()
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, 0)
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    /// The identity polynomial `t`.
    pub fn var() -> Self {
        Self::monomial(Rational::one(), 1)
    }

    pub fn monomial(c: Rational, degree: u32) -> Self {
        let mut p = LPoly::zero();
        p.add_term(degree, c);
        p
    }

    /// Builds from `(degree, coefficient)` pairs; repeated degrees accumulate.
    pub fn from_terms<I: IntoIterator<Item = (u32, Rational)>>(terms: I) -> Self {
        let mut p = LPoly::zero();
        for (d, c) in terms {
            p.add_term(d, c);
        }
        p
    }

    /// `Π (t − r)` over the given roots, each repeated by its multiplicity.
    pub fn from_roots<'a, I: IntoIterator<Item = (&'a Rational, u32)>>(roots: I) -> Self {
        let mut p = LPoly::one();
        for (r, m) in roots {
            let lin = LPoly::from_terms([(1, Rational::one()), (0, -r.clone())]);
            for _ in 0..m {
                p = &p * &lin;
            }
        }
        p
    }

    fn add_term(&mut self, degree: u32, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.coeffs.entry(degree).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.coeffs.remove(&degree);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<u32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn coeff(&self, degree: u32) -> Rational {
        self.coeffs.get(&degree).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &Rational)> + '_ {
        self.coeffs.iter().map(|(d, c)| (*d, c))
    }

    pub fn scale(&self, c: &Rational) -> LPoly {
        LPoly::from_terms(self.terms().map(|(d, q)| (d, q * c)))
    }

    pub fn pow(&self, n: u32) -> LPoly {
        (0..n).fold(LPoly::one(), |acc, _| &acc * self)
    }

    pub fn derivative(&self) -> LPoly {
        LPoly::from_terms(
            self.terms()
                .filter(|(d, _)| *d > 0)
                .map(|(d, c)| (d - 1, c * Rational::from_integer(d.into()))),
        )
    }

    /// The antiderivative vanishing at zero, `∫₀ᵗ p(w) dw`.
    pub fn integral(&self) -> LPoly {
        LPoly::from_terms(
            self.terms()
                .map(|(d, c)| (d + 1, c / Rational::from_integer((d + 1).into()))),
        )
    }

    pub fn eval_exact(&self, t: &Rational) -> Rational {
        let mut acc = Rational::zero();
        let top = self.degree().unwrap_or(0);
        for d in (0..=top).rev() {
            acc = acc * t + self.coeff(d);
        }
        acc
    }

    pub fn eval(&self, t: f64) -> f64 {
        let top = match self.degree() {
            Some(d) => d,
            None => return 0.0,
        };
        let mut acc = 0.0;
        for d in (0..=top).rev() {
            acc = acc * t + self.coeffs.get(&d).map(to_f64).unwrap_or(0.0);
        }
        acc
    }

    /// `Σ |c_d|·τ^d` with `τ = max(|lo|, |hi|)`: bounds `|p(t)|` on `[lo, hi]`.
    pub fn abs_bound(&self, lo: f64, hi: f64) -> f64 {
        let tau = lo.abs().max(hi.abs());
        self.terms()
            .map(|(d, c)| to_f64(&c.abs()) * tau.powi(d as i32))
            .sum()
    }
}

impl Add for &LPoly {
    type Output = LPoly;
    fn add(self, rhs: &LPoly) -> LPoly {
        let mut out = self.clone();
        for (d, c) in rhs.terms() {
            out.add_term(d, c.clone());
        }
        out
    }
}

impl Sub for &LPoly {
    type Output = LPoly;
    fn sub(self, rhs: &LPoly) -> LPoly {
        self + &(-rhs)
    }
}

impl Neg for &LPoly {
    type Output = LPoly;
    fn neg(self) -> LPoly {
        self.scale(&-Rational::one())
    }
}

impl Mul for &LPoly {
    type Output = LPoly;
    fn mul(self, rhs: &LPoly) -> LPoly {
        let mut out = LPoly::zero();
        for (d1, c1) in self.terms() {
            for (d2, c2) in rhs.terms() {
                out.add_term(d1 + d2, c1 * c2);
            }
        }
        out
    }
}

impl fmt::Display for LPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (d, c)) in self.terms().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match d {
                0 => write!(f, "({c})")?,
                1 => write!(f, "({c})·t")?,
                _ => write!(f, "({c})·t^{d}")?,
            }
        }
        Ok(())
    }
}
