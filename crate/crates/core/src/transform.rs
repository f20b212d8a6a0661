//! Forward and inverse L2 transform in the variable `σ = s²`.
//!
//! Transform-domain expressions are sums `c·(σ−a)^(−m)`. The pair
//!
//! ```text
//! c·x^(2k)·e^(a·x²)  ⟷  c·k!/2 · (σ−a)^(−(k+1))
//! ```
//!
//! maps the function algebra bijectively onto the `m ≥ 1` part. Terms with
//! `m = 0` are σ-constants; they appear when `σ` multiplies a simple pole
//! (the `f(0⁺)` term of the `δ_x` rule) and have no function-valued inverse.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use num::{BigInt, One, Zero};

use crate::error::{Error, Result};
use crate::expr::{GExpr, GTerm};
use crate::rational::{binomial, factorial_q, to_f64, Rational};

/// One term `c·(σ−a)^(−m)`. For `m = 0` the pole is irrelevant and stored as 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct STerm {
    pub c: Rational,
    pub a: Rational,
    pub m: u32,
}

impl STerm {
    pub fn new(c: Rational, a: Rational, m: u32) -> Self {
        let a = if m == 0 { Rational::zero() } else { a };
        STerm { c, a, m }
    }
}

/// Canonical transform-domain expression.
///
/// Terms are sorted by `(a, m)` with no duplicates and no zero coefficients.
/// `region` records the half-line `σ > region` on which the expression is a
/// genuine transform; it is metadata and does not take part in equality.
#[derive(Debug, Clone, Default)]
pub struct SExpr {
    terms: Vec<STerm>,
    region: Option<Rational>,
}

impl PartialEq for SExpr {
    fn eq(&self, other: &Self) -> bool {
        self.terms == other.terms
    }
}

impl Eq for SExpr {}

fn max_region(a: &Option<Rational>, b: &Option<Rational>) -> Option<Rational> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y).clone()),
        (Some(x), None) | (None, Some(x)) => Some(x.clone()),
        (None, None) => None,
    }
}

impl SExpr {
    pub fn zero() -> Self {
        SExpr::default()
    }

    /// A σ-independent constant (impulse content).
    pub fn constant(c: Rational) -> Self {
        SExpr::from_terms(vec![STerm::new(c, Rational::zero(), 0)])
    }

    /// `c·(σ−a)^(−m)`.
    pub fn pole(c: Rational, a: Rational, m: u32) -> Self {
        SExpr::from_terms(vec![STerm::new(c, a, m)])
    }

    /// Canonicalizes arbitrary terms; no region is attached.
    pub fn from_terms(terms: Vec<STerm>) -> Self {
        let mut terms: Vec<STerm> = terms
            .into_iter()
            .map(|t| STerm::new(t.c, t.a, t.m))
            .collect();
        terms.sort_by(|p, q| (&p.a, p.m).cmp(&(&q.a, q.m)));
        let mut out: Vec<STerm> = Vec::with_capacity(terms.len());
        for t in terms {
            match out.last_mut() {
                Some(last) if last.a == t.a && last.m == t.m => last.c += t.c,
                _ => out.push(t),
            }
        }
        out.retain(|t| !t.c.is_zero());
        SExpr { terms: out, region: None }
    }

    pub fn with_region(mut self, region: Option<Rational>) -> Self {
        self.region = region;
        self
    }

    /// Valid for `σ > region`; `None` means no constraint was recorded.
    pub fn region(&self) -> Option<&Rational> {
        self.region.as_ref()
    }

    pub fn terms(&self) -> &[STerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn has_impulse_content(&self) -> bool {
        self.terms.iter().any(|t| t.m == 0)
    }

    pub fn add(&self, other: &SExpr) -> SExpr {
        SExpr::from_terms(self.terms.iter().chain(&other.terms).cloned().collect())
            .with_region(max_region(&self.region, &other.region))
    }

    pub fn scale(&self, c: &Rational) -> SExpr {
        SExpr::from_terms(
            self.terms
                .iter()
                .map(|t| STerm::new(&t.c * c, t.a.clone(), t.m))
                .collect(),
        )
        .with_region(self.region.clone())
    }

    /// Multiplication by `σ`, using `σ·(σ−a)^(−m) = (σ−a)^(−(m−1)) + a·(σ−a)^(−m)`.
    ///
    /// Fails with [`Error::PolynomialContent`] on a σ-constant term.
    pub fn mul_sigma(&self) -> Result<SExpr> {
        let mut out = Vec::with_capacity(2 * self.terms.len());
        for t in &self.terms {
            if t.m == 0 {
                return Err(Error::PolynomialContent);
            }
            out.push(STerm::new(t.c.clone(), t.a.clone(), t.m - 1));
            out.push(STerm::new(&t.c * &t.a, t.a.clone(), t.m));
        }
        Ok(SExpr::from_terms(out).with_region(self.region.clone()))
    }

    /// `δ_s = (1/s)·d/ds = 2·d/dσ`.
    pub fn delta_s(&self) -> SExpr {
        SExpr::from_terms(
            self.terms
                .iter()
                .filter(|t| t.m > 0)
                .map(|t| {
                    let f = Rational::from_integer(BigInt::from(-2 * t.m as i64));
                    STerm::new(&t.c * f, t.a.clone(), t.m + 1)
                })
                .collect(),
        )
        .with_region(self.region.clone())
    }

    /// Exact product, re-expanded into partial fractions.
    pub fn multiply(&self, other: &SExpr) -> SExpr {
        let mut out = Vec::new();
        for p in &self.terms {
            for q in &other.terms {
                let c = &p.c * &q.c;
                if p.m == 0 || q.m == 0 {
                    let (a, m) = if p.m == 0 { (&q.a, q.m) } else { (&p.a, p.m) };
                    out.push(STerm::new(c, a.clone(), m));
                    continue;
                }
                let pf = partial_fractions(&[(p.a.clone(), p.m), (q.a.clone(), q.m)]);
                out.extend(pf.terms.into_iter().map(|t| STerm::new(t.c * &c, t.a, t.m)));
            }
        }
        SExpr::from_terms(out).with_region(max_region(&self.region, &other.region))
    }

    /// `n`-th power by repeated multiplication; `pow(0)` is the constant 1.
    pub fn pow(&self, n: u32) -> SExpr {
        (0..n).fold(SExpr::constant(Rational::one()), |acc, _| acc.multiply(self))
    }

    pub fn evaluate(&self, sigma: f64) -> f64 {
        self.terms
            .iter()
            .map(|t| to_f64(&t.c) * (sigma - to_f64(&t.a)).powi(-(t.m as i32)))
            .sum()
    }
}

impl Add for &SExpr {
    type Output = SExpr;
    fn add(self, rhs: &SExpr) -> SExpr {
        SExpr::add(self, rhs)
    }
}

impl Sub for &SExpr {
    type Output = SExpr;
    fn sub(self, rhs: &SExpr) -> SExpr {
        SExpr::add(self, &-rhs)
    }
}

impl Neg for &SExpr {
    type Output = SExpr;
    fn neg(self) -> SExpr {
        self.scale(&-Rational::one())
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if t.m == 0 {
                write!(f, "({})", t.c)?;
            } else {
                write!(f, "({})·(σ−({}))^−{}", t.c, t.a, t.m)?;
            }
        }
        Ok(())
    }
}

/// `L2{e}` as a function of `σ`, valid for `σ > max a`.
pub fn forward(e: &GExpr) -> SExpr {
    let half = Rational::new(1.into(), 2.into());
    SExpr::from_terms(
        e.terms()
            .iter()
            .map(|t| STerm::new(&t.c * factorial_q(t.k) * &half, t.a.clone(), t.k + 1))
            .collect(),
    )
    .with_region(e.max_rate().cloned())
}

/// Inverse transform; rejects σ-constant terms with [`Error::ImpulseContent`].
pub fn inverse(s: &SExpr) -> Result<GExpr> {
    let mut out = Vec::with_capacity(s.terms.len());
    for t in &s.terms {
        if t.m == 0 {
            return Err(Error::ImpulseContent(t.c.to_string()));
        }
        let c = &t.c * Rational::from_integer(2.into()) / factorial_q(t.m - 1);
        out.push(GTerm::new(c, t.m - 1, t.a.clone()));
    }
    Ok(crate::expr::canonicalize(out))
}

/// Partial-fraction expansion of `Π (σ−a_i)^(−m_i)`.
///
/// Repeated poles are merged first. Each coefficient is read off the Taylor
/// expansion of the cofactor at its pole, so everything stays exact. An empty
/// product, or one whose multiplicities are all zero, is the constant 1.
pub fn partial_fractions(factors: &[(Rational, u32)]) -> SExpr {
    let mut poles: BTreeMap<Rational, u32> = BTreeMap::new();
    for (a, m) in factors.iter().filter(|(_, m)| *m > 0) {
        *poles.entry(a.clone()).or_insert(0) += m;
    }
    if poles.is_empty() {
        return SExpr::constant(Rational::one());
    }

    let mut out = Vec::new();
    for (p, &mp) in &poles {
        // Taylor coefficients of Π_{q≠p} (σ−q)^(−n) at σ = p, orders 0..mp.
        let mut series = vec![Rational::zero(); mp as usize];
        series[0] = Rational::one();
        for (q, &n) in poles.iter().filter(|(q, _)| *q != p) {
            let d = p - q;
            let factor: Vec<Rational> = (0..mp)
                .map(|r| {
                    let sign = if r % 2 == 0 { Rational::one() } else { -Rational::one() };
                    let c = Rational::from_integer(binomial(n + r - 1, r));
                    sign * c * crate::rational::powi(&d, -((n + r) as i32))
                })
                .collect();
            series = truncated_product(&series, &factor);
        }
        for (r, b) in series.into_iter().enumerate() {
            out.push(STerm::new(b, p.clone(), mp - r as u32));
        }
    }
    SExpr::from_terms(out).with_region(poles.keys().next_back().cloned())
}

fn truncated_product(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len();
    (0..n)
        .map(|i| (0..=i).fold(Rational::zero(), |acc, j| acc + &a[j] * &b[i - j]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lpoly::LPoly;
    use crate::rational::{int, rat};
    use crate::sample::{random_gexpr, GenParams};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_examples() {
        assert_eq!(forward(&GExpr::one()), SExpr::pole(rat(1, 2), int(0), 1));
        assert_eq!(forward(&GExpr::x_pow(1)), SExpr::pole(rat(1, 2), int(0), 2));
        let h = forward(&GExpr::gaussian(rat(1, 2)));
        assert_eq!(h, SExpr::pole(rat(1, 2), rat(1, 2), 1));
        assert_eq!(h.region(), Some(&rat(1, 2)));
        assert_eq!(h.evaluate(1.0), 1.0);
    }

    #[test]
    fn inverse_examples() {
        let s = SExpr::pole(rat(1, 2), int(0), 4);
        assert_eq!(inverse(&s).unwrap(), GExpr::monomial(rat(1, 6), 3, int(0)));
        let h = SExpr::pole(rat(1, 2), rat(1, 2), 1);
        assert_eq!(inverse(&h).unwrap(), GExpr::gaussian(rat(1, 2)));
        let d = SExpr::pole(int(1), rat(1, 2), 2);
        let g = inverse(&d).unwrap();
        assert_eq!(g, GExpr::monomial(int(2), 1, rat(1, 2)));
        assert_eq!(forward(&g), d);
    }

    #[test]
    fn inverse_rejects_impulse() {
        let s = &SExpr::constant(int(3)) + &SExpr::pole(int(1), int(0), 1);
        assert!(matches!(inverse(&s), Err(Error::ImpulseContent(_))));
    }

    #[test]
    fn delta_s_examples() {
        let s = SExpr::pole(rat(1, 2), int(0), 1);
        assert_eq!(s.delta_s(), SExpr::pole(int(-1), int(0), 2));
        let lhs = s.delta_s().scale(&rat(-1, 2));
        assert_eq!(lhs, forward(&GExpr::x_pow(1)));
        assert!(SExpr::constant(int(5)).delta_s().is_zero());
    }

    #[test]
    fn mul_sigma_examples() {
        let s = SExpr::pole(rat(1, 2), int(0), 1);
        assert_eq!(s.mul_sigma().unwrap(), SExpr::constant(rat(1, 2)));
        let d = SExpr::pole(int(1), rat(1, 2), 2);
        let want = &SExpr::pole(int(1), rat(1, 2), 1) + &SExpr::pole(rat(1, 2), rat(1, 2), 2);
        assert_eq!(d.mul_sigma().unwrap(), want);
        assert_eq!(SExpr::constant(int(1)).mul_sigma(), Err(Error::PolynomialContent));
    }

    #[test]
    fn toperator_for_x_squared() {
        let f = GExpr::x_pow(1);
        let lhs = forward(&f.delta_x());
        assert_eq!(lhs, SExpr::pole(int(1), int(0), 1));
        let rhs = &forward(&f).mul_sigma().unwrap().scale(&int(2))
            - &SExpr::constant(f.limit_at_zero());
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn multiply_examples() {
        let h = SExpr::pole(rat(1, 2), int(0), 1);
        assert_eq!(h.multiply(&h), SExpr::pole(rat(1, 4), int(0), 2));
        let p = SExpr::pole(int(1), int(0), 1).multiply(&SExpr::pole(int(1), int(1), 1));
        let want = &SExpr::pole(int(1), int(1), 1) - &SExpr::pole(int(1), int(0), 1);
        assert_eq!(p, want);
        let c = SExpr::constant(int(3)).multiply(&h);
        assert_eq!(c, SExpr::pole(rat(3, 2), int(0), 1));
    }

    #[test]
    fn partial_fraction_examples() {
        let pf = partial_fractions(&[(int(0), 1), (int(1), 1)]);
        assert_eq!(pf, &SExpr::pole(int(1), int(1), 1) - &SExpr::pole(int(1), int(0), 1));

        let pf = partial_fractions(&[(int(0), 1), (rat(1, 2), 1)]);
        let want = &SExpr::pole(int(2), rat(1, 2), 1) - &SExpr::pole(int(2), int(0), 1);
        assert_eq!(pf, want);
        assert_eq!(recombine(&pf, &[(int(0), 1), (rat(1, 2), 1)]), LPoly::one());

        let pf = partial_fractions(&[(int(0), 2), (int(1), 1)]);
        let want = SExpr::from_terms(vec![
            STerm::new(int(1), int(1), 1),
            STerm::new(int(-1), int(0), 1),
            STerm::new(int(-1), int(0), 2),
        ]);
        assert_eq!(pf, want);
        assert_eq!(recombine(&pf, &[(int(0), 2), (int(1), 1)]), LPoly::one());
    }

    #[test]
    fn partial_fractions_merge_repeated_factors() {
        let pf = partial_fractions(&[(int(2), 1), (int(2), 2)]);
        assert_eq!(pf, SExpr::pole(int(1), int(2), 3));
        assert_eq!(partial_fractions(&[]), SExpr::constant(int(1)));
    }

    /// Numerator of `s` written over `Π (σ−a)^m` for the given factors.
    fn recombine(s: &SExpr, factors: &[(Rational, u32)]) -> LPoly {
        let mut den: BTreeMap<Rational, u32> = BTreeMap::new();
        for (a, m) in factors {
            *den.entry(a.clone()).or_insert(0) += m;
        }
        numerator_over(s, &den)
    }

    fn numerator_over(s: &SExpr, den: &BTreeMap<Rational, u32>) -> LPoly {
        let mut acc = LPoly::zero();
        for t in s.terms() {
            let mut rest = den.clone();
            let e = rest.entry(t.a.clone()).or_insert(0);
            assert!(*e >= t.m, "denominator too small");
            *e -= t.m;
            let poly = LPoly::from_roots(rest.iter().map(|(a, m)| (a, *m)));
            acc = &acc + &poly.scale(&t.c);
        }
        acc
    }

    fn denominator_of(s: &SExpr) -> BTreeMap<Rational, u32> {
        let mut den = BTreeMap::new();
        for t in s.terms().iter().filter(|t| t.m > 0) {
            let e = den.entry(t.a.clone()).or_insert(0);
            *e = (*e).max(t.m);
        }
        den
    }

    fn arb_pole() -> impl Strategy<Value = (Rational, u32)> {
        (-6i64..=6, 1i64..=3, 1u32..=3).prop_map(|(p, q, m)| (rat(p, q), m))
    }

    fn arb_sexpr() -> impl Strategy<Value = SExpr> {
        proptest::collection::vec(((-9i64..=9), arb_pole()), 0..4).prop_map(|ts| {
            SExpr::from_terms(ts.into_iter().map(|(c, (a, m))| STerm::new(int(c), a, m)).collect())
        })
    }

    proptest! {
        #[test]
        fn partial_fractions_recombine(factors in proptest::collection::vec(arb_pole(), 1..5)) {
            let pf = partial_fractions(&factors);
            prop_assert_eq!(recombine(&pf, &factors), LPoly::one());
        }

        #[test]
        fn product_recombines_to_numerator_product(s1 in arb_sexpr(), s2 in arb_sexpr(), k1 in -3i64..3, k2 in -3i64..3) {
            let s1 = &s1 + &SExpr::constant(int(k1));
            let s2 = &s2 + &SExpr::constant(int(k2));
            let (d1, d2) = (denominator_of(&s1), denominator_of(&s2));
            let mut d = d1.clone();
            for (a, m) in &d2 {
                *d.entry(a.clone()).or_insert(0) += m;
            }
            let prod = s1.multiply(&s2);
            let lhs = numerator_over(&prod, &d);
            let rhs = &numerator_over(&s1, &d1) * &numerator_over(&s2, &d2);
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn round_trip_is_structural(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_gexpr(&mut rng, &GenParams::default());
            prop_assert_eq!(inverse(&forward(&e)).unwrap(), e);
        }

        #[test]
        fn toperator_identity(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_gexpr(&mut rng, &GenParams::default());
            let lhs = forward(&e.delta_x());
            let rhs = &forward(&e).mul_sigma().unwrap().scale(&int(2))
                - &SExpr::constant(e.limit_at_zero());
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn t2n_identity(seed in any::<u64>(), n in 0u32..=4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let e = random_gexpr(&mut rng, &GenParams::default());
            let lhs = forward(&GExpr::x_pow(n).multiply(&e));
            let mut rhs = forward(&e);
            for _ in 0..n {
                rhs = rhs.delta_s();
            }
            let factor = Rational::new(if n % 2 == 0 { 1.into() } else { (-1).into() }, BigInt::from(1u64 << n));
            prop_assert_eq!(lhs, rhs.scale(&factor));
        }
    }
}
