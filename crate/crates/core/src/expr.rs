//! The Gaussian-polynomial function algebra.
//!
//! A [`GExpr`] is a finite sum of terms `c·x^(2k)·e^(a·x²)` with exact rational
//! `c` and `a`, considered on `[0, ∞)`. Only even powers of `x` occur, which is
//! exactly what the transform pairs and `δ_x` need.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::{to_f64, Rational};

/// Largest `y` with `e^y` finite in `f64`.
pub(crate) const MAX_EXP: f64 = 709.782_712_893_384;

/// One term `c·x^(2k)·e^(a·x²)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GTerm {
    pub c: Rational,
    /// Half-degree: the power of `x` is `2k`.
    pub k: u32,
    pub a: Rational,
}

impl GTerm {
    pub fn new(c: Rational, k: u32, a: Rational) -> Self {
        GTerm { c, k, a }
    }
}

/// Canonical element of the algebra.
///
/// Terms are sorted by `(a, k)`, no two share `(a, k)`, and no coefficient is
/// zero. The zero function is the empty sum.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct GExpr {
    terms: Vec<GTerm>,
}

impl GExpr {
    pub fn zero() -> Self {
        GExpr { terms: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        Self::monomial(c, 0, Rational::zero())
    }

    pub fn one() -> Self {
        Self::constant(Rational::one())
    }

    /// `c·x^(2k)·e^(a·x²)`.
    pub fn monomial(c: Rational, k: u32, a: Rational) -> Self {
        canonicalize(vec![GTerm::new(c, k, a)])
    }

    /// `x^(2k)`.
    pub fn x_pow(k: u32) -> Self {
        Self::monomial(Rational::one(), k, Rational::zero())
    }

    /// `e^(a·x²)`.
    pub fn gaussian(a: Rational) -> Self {
        Self::monomial(Rational::one(), 0, a)
    }

    pub fn terms(&self) -> &[GTerm] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<GTerm> {
        self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest Gaussian rate present, `None` for the zero expression.
    pub fn max_rate(&self) -> Option<&Rational> {
        self.terms.iter().map(|t| &t.a).max()
    }

    /// Largest half-degree present.
    pub fn max_half_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.k).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Rational) -> GExpr {
        if c.is_zero() {
            return GExpr::zero();
        }
        GExpr {
            terms: self
                .terms
                .iter()
                .map(|t| GTerm::new(&t.c * c, t.k, t.a.clone()))
                .collect(),
        }
    }

    pub fn add(&self, other: &GExpr) -> GExpr {
        canonicalize(self.terms.iter().chain(other.terms.iter()).cloned().collect())
    }

    pub fn multiply(&self, other: &GExpr) -> GExpr {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for p in &self.terms {
            for q in &other.terms {
                out.push(GTerm::new(&p.c * &q.c, p.k + q.k, &p.a + &q.a));
            }
        }
        canonicalize(out)
    }

    /// Image under `δ_x = (1/x)·d/dx`.
    pub fn delta_x(&self) -> GExpr {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.k > 0 {
                out.push(GTerm::new(
                    &t.c * Rational::from_integer((2 * t.k).into()),
                    t.k - 1,
                    t.a.clone(),
                ));
            }
            if !t.a.is_zero() {
                out.push(GTerm::new(
                    &t.c * &t.a * Rational::from_integer(2.into()),
                    t.k,
                    t.a.clone(),
                ));
            }
        }
        canonicalize(out)
    }

    /// `lim_{x→0⁺}`: only the `k = 0` terms survive.
    pub fn limit_at_zero(&self) -> Rational {
        self.terms
            .iter()
            .filter(|t| t.k == 0)
            .fold(Rational::zero(), |acc, t| acc + &t.c)
    }

    /// Floating-point value at `x ≥ 0`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        self.compile().evaluate(x)
    }

    /// Pre-converts coefficients to `f64` for repeated evaluation.
    pub fn compile(&self) -> CompiledGExpr {
        CompiledGExpr {
            terms: self
                .terms
                .iter()
                .map(|t| (to_f64(&t.c), t.k as i32, to_f64(&t.a)))
                .collect(),
        }
    }

    /// Upper bound on `ln |e(x)|` from `ln Σ |c|·x^(2k)·e^(a·x²)`, computed
    /// without leaving log space. `-∞` for the zero expression.
    pub fn ln_abs_bound(&self, x: f64) -> f64 {
        let logs: Vec<f64> = self
            .terms
            .iter()
            .map(|t| {
                let lc = to_f64(&t.c.abs()).ln();
                let lx = if t.k == 0 { 0.0 } else { 2.0 * t.k as f64 * x.ln() };
                lc + lx + to_f64(&t.a) * x * x
            })
            .collect();
        log_sum_exp(&logs)
    }
}

pub(crate) fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

/// Sort by `(a, k)`, merge like terms, and drop zeros.
pub fn canonicalize(mut terms: Vec<GTerm>) -> GExpr {
    terms.sort_by(|p, q| (&p.a, p.k).cmp(&(&q.a, q.k)));
    let mut out: Vec<GTerm> = Vec::with_capacity(terms.len());
    for t in terms {
        match out.last_mut() {
            Some(last) if last.a == t.a && last.k == t.k => last.c += t.c,
            _ => out.push(t),
        }
    }
    out.retain(|t| !t.c.is_zero());
    GExpr { terms: out }
}

/// A [`GExpr`] with `f64` coefficients, ready for evaluation in loops.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledGExpr {
    terms: Vec<(f64, i32, f64)>,
}

impl CompiledGExpr {
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::Domain(format!("evaluation point x = {x} must be ≥ 0")));
        }
        let x2 = x * x;
        let mut sum = NeumaierSum::default();
        for &(c, k, a) in &self.terms {
            let exponent = a * x2;
            if exponent > MAX_EXP {
                return Err(Error::Overflow { x, exponent });
            }
            sum.add(term_value(c, k, exponent, x));
        }
        let v = sum.value();
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow { x, exponent: f64::INFINITY })
        }
    }

    /// `x·e^(−σx²)·e(x)`, the L2 integrand, with the Gaussian factors merged
    /// before exponentiation.
    pub fn weighted(&self, x: f64, sigma: f64) -> f64 {
        let x2 = x * x;
        let mut sum = NeumaierSum::default();
        for &(c, k, a) in &self.terms {
            sum.add(x * term_value(c, k, (a - sigma) * x2, x));
        }
        sum.value()
    }

    /// `x·e^(−σx²)·Σ|terms|`, the scale against which [`Self::weighted`] loses
    /// digits to cancellation.
    pub fn weighted_abs(&self, x: f64, sigma: f64) -> f64 {
        let x2 = x * x;
        self.terms
            .iter()
            .map(|&(c, k, a)| x * term_value(c.abs(), k, (a - sigma) * x2, x))
            .sum()
    }
}

fn term_value(c: f64, k: i32, exponent: f64, x: f64) -> f64 {
    let p = x.powi(2 * k);
    let g = exponent.exp();
    if p.is_finite() && g != 0.0 {
        c * p * g
    } else {
        c * (2.0 * k as f64 * x.ln() + exponent).exp()
    }
}

/// Compensated summation.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        iter.into_iter().for_each(|v| s.add(v));
        s
    }
}

impl Add for &GExpr {
    type Output = GExpr;
    fn add(self, rhs: &GExpr) -> GExpr {
        GExpr::add(self, rhs)
    }
}

impl Sub for &GExpr {
    type Output = GExpr;
    fn sub(self, rhs: &GExpr) -> GExpr {
        GExpr::add(self, &rhs.scale(&-Rational::one()))
    }
}

impl Mul for &GExpr {
    type Output = GExpr;
    fn mul(self, rhs: &GExpr) -> GExpr {
        self.multiply(rhs)
    }
}

impl Neg for &GExpr {
    type Output = GExpr;
    fn neg(self) -> GExpr {
        self.scale(&-Rational::one())
    }
}

impl fmt::Display for GExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({})", t.c)?;
            if t.k > 0 {
                write!(f, "·x^{}", 2 * t.k)?;
            }
            if !t.a.is_zero() {
                write!(f, "·e^(({})·x²)", t.a)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use proptest::prelude::*;

    fn term(c: Rational, k: u32, a: Rational) -> GTerm {
        GTerm::new(c, k, a)
    }

    #[test]
    fn merges_like_terms() {
        let e = canonicalize(vec![term(int(1), 0, int(0)), term(int(2), 0, int(0))]);
        assert_eq!(e.terms(), &[term(int(3), 0, int(0))]);
    }

    #[test]
    fn cancellation_gives_empty_sum() {
        let e = canonicalize(vec![term(int(1), 1, int(0)), term(int(-1), 1, int(0))]);
        assert!(e.is_zero());
        assert_eq!(e, GExpr::zero());
    }

    #[test]
    fn cancellation_in_the_middle_is_dropped() {
        let e = canonicalize(vec![
            term(int(1), 0, int(0)),
            term(int(2), 1, int(0)),
            term(int(-2), 1, int(0)),
            term(int(5), 2, int(0)),
        ]);
        assert_eq!(e.terms().len(), 2);
        assert_eq!(e.terms()[1].k, 2);
    }

    #[test]
    fn sorted_by_rate_then_degree() {
        let e = canonicalize(vec![
            term(int(1), 0, rat(1, 2)),
            term(int(1), 3, int(-1)),
            term(int(1), 1, rat(1, 2)),
            term(int(1), 0, int(-1)),
        ]);
        let keys: Vec<(Rational, u32)> = e.terms().iter().map(|t| (t.a.clone(), t.k)).collect();
        assert_eq!(
            keys,
            vec![(int(-1), 0), (int(-1), 3), (rat(1, 2), 0), (rat(1, 2), 1)]
        );
    }

    #[test]
    fn evaluation_examples() {
        assert_eq!(GExpr::one().evaluate(7.0).unwrap(), 1.0);
        let e = GExpr::monomial(int(1), 1, int(-1));
        assert!((e.evaluate(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        let h = GExpr::gaussian(rat(1, 2));
        assert!((h.evaluate(2.0).unwrap() - 2.0f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn evaluation_errors() {
        let e = GExpr::gaussian(int(1));
        assert!(matches!(e.evaluate(30.0), Err(Error::Overflow { .. })));
        assert!(matches!(e.evaluate(-1.0), Err(Error::Domain(_))));
        assert!(matches!(e.evaluate(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn large_degree_with_decay_stays_finite() {
        let e = GExpr::monomial(int(1), 200, int(-1));
        let x: f64 = 40.0;
        let v = e.evaluate(x).unwrap();
        let expected = (400.0 * x.ln() - x * x).exp();
        assert!(((v - expected) / expected).abs() < 1e-10);
    }

    #[test]
    fn arithmetic_examples() {
        let half = GExpr::gaussian(rat(1, 2));
        assert_eq!(
            GExpr::x_pow(1).multiply(&half),
            GExpr::monomial(int(1), 1, rat(1, 2))
        );
        assert!((&half - &half).is_zero());
        assert_eq!(
            GExpr::gaussian(rat(1, 3)).multiply(&GExpr::gaussian(rat(-2, 5))),
            GExpr::gaussian(rat(-1, 15))
        );
    }

    #[test]
    fn delta_x_examples() {
        assert_eq!(GExpr::x_pow(1).delta_x(), GExpr::constant(int(2)));
        assert!(GExpr::one().delta_x().is_zero());
        let h = GExpr::gaussian(rat(1, 2));
        assert_eq!(h.delta_x(), h);
    }

    #[test]
    fn limit_examples() {
        let e = &GExpr::one() + &GExpr::x_pow(1);
        assert_eq!(e.limit_at_zero(), int(1));
        assert_eq!(GExpr::monomial(int(1), 2, int(1)).limit_at_zero(), int(0));
        let e = &GExpr::monomial(int(3), 0, int(-1)) + &GExpr::constant(int(2));
        assert_eq!(e.limit_at_zero(), int(5));
    }

    #[test]
    fn ln_bound_dominates() {
        let e = &GExpr::monomial(int(3), 2, rat(1, 2)) - &GExpr::monomial(int(1), 0, int(-1));
        for x in [0.5, 1.0, 3.0] {
            assert!(e.evaluate(x).unwrap().abs().ln() <= e.ln_abs_bound(x) + 1e-12);
        }
        assert_eq!(GExpr::zero().ln_abs_bound(2.0), f64::NEG_INFINITY);
    }

    fn arb_term() -> impl Strategy<Value = GTerm> {
        (-20i64..=20, 1i64..=6, 0u32..=4, -8i64..=4, 1i64..=4).prop_map(|(p, q, k, ap, aq)| {
            GTerm::new(rat(p, q), k, rat(ap, aq * 2))
        })
    }

    fn arb_terms(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<GTerm>> {
        proptest::collection::vec(arb_term(), n)
    }

    fn raw_sum(terms: &[GTerm], x: f64) -> f64 {
        terms
            .iter()
            .map(|t| to_f64(&t.c) * x.powi(2 * t.k as i32) * (to_f64(&t.a) * x * x).exp())
            .sum()
    }

    fn abs_sum(e: &GExpr, x: f64) -> f64 {
        raw_sum(&e.terms().iter().map(|t| GTerm::new(t.c.abs(), t.k, t.a.clone())).collect::<Vec<_>>(), x)
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(terms in arb_terms(0..12)) {
            let once = canonicalize(terms);
            let twice = canonicalize(once.terms().to_vec());
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn canonicalize_preserves_values(terms in arb_terms(10..11), seed in 0u64..1000) {
            let e = canonicalize(terms.clone());
            for i in 0..20 {
                let x = 0.1 + 0.19 * i as f64 + (seed as f64) * 1e-4;
                let want = raw_sum(&terms, x);
                let got = e.evaluate(x).unwrap();
                let scale: f64 = terms.iter()
                    .map(|t| (to_f64(&t.c) * x.powi(2 * t.k as i32) * (to_f64(&t.a) * x * x).exp()).abs())
                    .sum();
                prop_assert!((want - got).abs() <= 1e-12 * scale.max(1.0));
            }
        }

        #[test]
        fn arithmetic_is_pointwise(t1 in arb_terms(1..5), t2 in arb_terms(1..5), c in -9i64..9, x in 0.0f64..4.0) {
            let e1 = canonicalize(t1);
            let e2 = canonicalize(t2);
            let (v1, v2) = (e1.evaluate(x).unwrap(), e2.evaluate(x).unwrap());
            let sum = e1.add(&e2).evaluate(x).unwrap();
            let prod = e1.multiply(&e2).evaluate(x).unwrap();
            let scaled = e1.scale(&int(c)).evaluate(x).unwrap();
            // sums can cancel, so compare against the magnitude of the operands
            prop_assert!((sum - (v1 + v2)).abs() <= 1e-12 * (abs_sum(&e1, x) + abs_sum(&e2, x)).max(1.0));
            let (m1, m2) = (abs_sum(&e1, x), abs_sum(&e2, x));
            prop_assert!((prod - v1 * v2).abs() <= 1e-12 * (m1 * m2).max(1.0));
            prop_assert!(close(scaled, c as f64 * v1, 1e-12));
        }

        #[test]
        fn delta_x_matches_finite_difference(terms in arb_terms(1..5)) {
            let e = canonicalize(terms);
            let d = e.delta_x();
            let h = 1e-5;
            for x in [0.5, 1.0, 2.0] {
                let fd = (e.evaluate(x + h).unwrap() - e.evaluate(x - h).unwrap()) / (2.0 * h) / x;
                let exact = d.evaluate(x).unwrap();
                let scale = e.ln_abs_bound(x).exp().max(1.0);
                prop_assert!((fd - exact).abs() <= 1e-6 * scale, "x={} fd={} exact={}", x, fd, exact);
            }
        }

        #[test]
        fn limit_at_zero_matches_small_x(terms in arb_terms(1..6)) {
            let e = canonicalize(terms);
            let v = e.evaluate(1e-8).unwrap();
            prop_assert!((v - to_f64(&e.limit_at_zero())).abs() <= 1e-7);
        }
    }
}
