//! Seeded generators for random algebra elements, shared by the test suites.

use num::BigInt;
use rand::Rng;

use crate::expr::{canonicalize, GExpr, GTerm};
use crate::rational::Rational;

#[derive(Debug, Clone)]
pub struct GenParams {
    pub min_terms: usize,
    pub max_terms: usize,
    pub max_half_degree: u32,
    /// Rates are drawn as `p/q` with `q` from `rate_denominators`, clamped to
    /// `[min_rate, max_rate]`.
    pub min_rate: Rational,
    pub max_rate: Rational,
    pub rate_denominators: Vec<i64>,
    pub max_coeff_numer: i64,
    pub max_coeff_denom: i64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            min_terms: 1,
            max_terms: 5,
            max_half_degree: 4,
            min_rate: Rational::from_integer((-2).into()),
            max_rate: Rational::new(1.into(), 2.into()),
            rate_denominators: vec![1, 2, 3, 4],
            max_coeff_numer: 12,
            max_coeff_denom: 6,
        }
    }
}

pub fn random_rational<R: Rng>(rng: &mut R, max_numer: i64, max_denom: i64) -> Rational {
    loop {
        let p = rng.gen_range(-max_numer..=max_numer);
        if p != 0 {
            let q = rng.gen_range(1..=max_denom);
            return Rational::new(BigInt::from(p), BigInt::from(q));
        }
    }
}

pub fn random_rate<R: Rng>(rng: &mut R, params: &GenParams) -> Rational {
    let q = params.rate_denominators[rng.gen_range(0..params.rate_denominators.len())];
    let lo = (&params.min_rate * Rational::from_integer(q.into())).ceil().to_integer();
    let hi = (&params.max_rate * Rational::from_integer(q.into())).floor().to_integer();
    let lo: i64 = lo.try_into().unwrap_or(0);
    let hi: i64 = hi.try_into().unwrap_or(0);
    let p = if hi >= lo { rng.gen_range(lo..=hi) } else { 0 };
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// A random canonical, nonzero expression.
pub fn random_gexpr<R: Rng>(rng: &mut R, params: &GenParams) -> GExpr {
    loop {
        let n = rng.gen_range(params.min_terms..=params.max_terms);
        let terms: Vec<GTerm> = (0..n)
            .map(|_| {
                GTerm::new(
                    random_rational(rng, params.max_coeff_numer, params.max_coeff_denom),
                    rng.gen_range(0..=params.max_half_degree),
                    random_rate(rng, params),
                )
            })
            .collect();
        let e = canonicalize(terms);
        if !e.is_zero() {
            return e;
        }
    }
}

