//! Transform-method series solutions for four PDE families, with exact
//! term-wise derivatives and a residual harness.
//!
//! | family | equation (normalized)                         | coefficient |
//! |--------|-----------------------------------------------|-------------|
//! | A      | `t³·u_xt + 2x·u = 0`                          | none        |
//! | B      | `M·u + M·δ_x u + δ_x u_t = 0`                 | `M = f/g`   |
//! | C      | `H·u − u_t + δ_x u_t = 0`                     | `H = g/f`   |
//! | D      | `M·u + M·δ_x u + u_t + δ_x u_t = 0`           | `M = f/g`   |
//!
//! The coefficient ratio is a polynomial in `t` so that its antiderivative
//! `𝓐(t) = ∫₀ᵗ ratio` stays exact. Every series term is stored as an exact
//! product `X_n(x)·T_n(t)` where `X_n` is an algebra element and `T_n` is a
//! [`TimeFactor`]; derivatives in `x` come from `δ_x` on `X_n`, derivatives in
//! `t` from the closed form of `T_n`. No numerical differentiation is used
//! except in the finite-difference cross-check of the residual.

use std::collections::BTreeMap;
use std::fmt;

use num::{BigInt, One, Zero};

use crate::convolution::star_power;
use crate::error::{Error, Result};
use crate::expr::{CompiledGExpr, GExpr, NeumaierSum};
use crate::lpoly::LPoly;
use crate::rational::{factorial_q, powi, to_f64, Rational};

/// Default number of series terms beyond the constant.
pub const DEFAULT_TRUNCATION: u32 = 40;

/// Step of the central finite differences in the residual cross-check.
pub const FD_STEP: f64 = 1e-5;

/// Required agreement between the exact and finite-difference residuals.
pub const FD_AGREEMENT_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    A,
    B,
    C,
    D,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::A => "A",
            Family::B => "B",
            Family::C => "C",
            Family::D => "D",
        };
        f.write_str(s)
    }
}

impl Family {
    pub fn equation(&self) -> &'static str {
        match self {
            Family::A => "t^3 u_xt + 2 x u = 0",
            Family::B => "f u + f (1/x) u_x + g (1/x) u_xt = 0",
            Family::C => "g u - f u_t + f (1/x) u_xt = 0",
            Family::D => "f u + f (1/x) u_x + g u_t + g (1/x) u_xt = 0",
        }
    }
}

/// Which closed form to use where the printed series and the transform-domain
/// ODE disagree (families B and C).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum SignConvention {
    PaperLiteral,
    #[default]
    Derived,
}

impl fmt::Display for SignConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignConvention::PaperLiteral => "paper",
            SignConvention::Derived => "derived",
        })
    }
}

/// PDE coefficient data: the ratio itself, or its antiderivative given
/// directly (e.g. a frozen constant `𝓗 = 1`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Coefficient {
    Ratio(LPoly),
    Antiderivative(LPoly),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PdeProblem {
    pub family: Family,
    pub coefficient: Option<Coefficient>,
    pub convention: SignConvention,
}

impl PdeProblem {
    pub fn family_a() -> Self {
        PdeProblem { family: Family::A, coefficient: None, convention: SignConvention::Derived }
    }

    pub fn new(family: Family, coefficient: Coefficient, convention: SignConvention) -> Result<Self> {
        if family == Family::A {
            return Err(Error::InvalidInput("family A carries no coefficient ratio".into()));
        }
        Ok(PdeProblem { family, coefficient: Some(coefficient), convention })
    }

    /// `M` (B, D) or `H` (C); zero for family A.
    pub fn ratio(&self) -> LPoly {
        match &self.coefficient {
            Some(Coefficient::Ratio(p)) => p.clone(),
            Some(Coefficient::Antiderivative(p)) => p.derivative(),
            None => LPoly::zero(),
        }
    }

    /// `𝓜` or `𝓗`.
    pub fn antiderivative(&self) -> LPoly {
        match &self.coefficient {
            Some(Coefficient::Ratio(p)) => p.integral(),
            Some(Coefficient::Antiderivative(p)) => p.clone(),
            None => LPoly::zero(),
        }
    }

    fn check(&self) -> Result<()> {
        match (self.family, &self.coefficient) {
            (Family::A, Some(_)) => Err(Error::InvalidInput("family A carries no coefficient ratio".into())),
            (Family::A, None) => Ok(()),
            (_, None) => Err(Error::InvalidInput(format!("family {} needs a coefficient ratio", self.family))),
            _ => Ok(()),
        }
    }
}

/// `c · t^t_power · 𝓐(t)^ad_power · e^(exp_ad·𝓐(t))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimeFactor {
    pub c: Rational,
    pub t_power: i32,
    pub ad_power: u32,
    pub exp_ad: i32,
}

impl TimeFactor {
    fn constant(c: Rational) -> Self {
        TimeFactor { c, t_power: 0, ad_power: 0, exp_ad: 0 }
    }

    /// Value and `d/dt` given `𝓐(t)` and `𝓐'(t)`.
    fn eval(&self, c: f64, t: f64, ad: f64, ad_dot: f64) -> (f64, f64) {
        let p = self.t_power;
        let q = self.ad_power as i32;
        let r = self.exp_ad as f64;
        let e = if self.exp_ad == 0 { 1.0 } else { (r * ad).exp() };
        let tp = if p == 0 { 1.0 } else { t.powi(p) };
        let aq = if q == 0 { 1.0 } else { ad.powi(q) };
        let value = c * tp * aq * e;
        let mut deriv = 0.0;
        if p != 0 {
            deriv += p as f64 * t.powi(p - 1) * aq;
        }
        if q != 0 {
            deriv += q as f64 * tp * ad.powi(q - 1) * ad_dot;
        }
        if self.exp_ad != 0 {
            deriv += r * ad_dot * tp * aq;
        }
        (value, c * deriv * e)
    }
}

/// One series term `X(x)·T(t)`.
#[derive(Debug, Clone)]
pub struct SeriesTerm {
    pub x_part: GExpr,
    pub t_part: TimeFactor,
    x_eval: CompiledGExpr,
    dx_eval: CompiledGExpr,
    c: f64,
}

impl SeriesTerm {
    fn new(x_part: GExpr, t_part: TimeFactor) -> Self {
        let x_eval = x_part.compile();
        let dx_eval = x_part.delta_x().compile();
        let c = to_f64(&t_part.c);
        SeriesTerm { x_part, t_part, x_eval, dx_eval, c }
    }

    fn eval(&self, x: f64, t: f64, ad: f64, ad_dot: f64) -> Result<Derivs> {
        let xv = self.x_eval.evaluate(x)?;
        // d/dx = x·δ_x
        let xd = x * self.dx_eval.evaluate(x)?;
        let (tv, td) = self.t_part.eval(self.c, t, ad, ad_dot);
        Ok(Derivs { u: xv * tv, u_t: xv * td, u_x: xd * tv, u_xt: xd * td })
    }
}

impl PartialEq for SeriesTerm {
    fn eq(&self, other: &Self) -> bool {
        self.x_part == other.x_part && self.t_part == other.t_part
    }
}

/// `u` and the three derivatives the residuals need.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Derivs {
    pub u: f64,
    pub u_t: f64,
    pub u_x: f64,
    pub u_xt: f64,
}

#[derive(Default)]
struct DerivSum {
    u: NeumaierSum,
    u_t: NeumaierSum,
    u_x: NeumaierSum,
    u_xt: NeumaierSum,
}

impl DerivSum {
    fn add(&mut self, d: Derivs) {
        self.u.add(d.u);
        self.u_t.add(d.u_t);
        self.u_x.add(d.u_x);
        self.u_xt.add(d.u_xt);
    }

    fn value(&self) -> Derivs {
        Derivs {
            u: self.u.value(),
            u_t: self.u_t.value(),
            u_x: self.u_x.value(),
            u_xt: self.u_xt.value(),
        }
    }
}

/// Truncated series solution `u = (Σ_{n≤N} X_n·T_n) · (Σ_{n≤N} S_n)` where the
/// time-only multiplier `S` is present only for the literal family-B form.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSolution {
    pub problem: PdeProblem,
    pub truncation: u32,
    pub terms: Vec<SeriesTerm>,
    pub multiplier: Option<Vec<TimeFactor>>,
    /// The constant term stands for σ-constant content of the exact transform.
    pub has_impulse_content: bool,
    pub notes: Vec<String>,
    antiderivative: LPoly,
    ratio: LPoly,
}

fn sign_pow(negative: bool, n: u32) -> Rational {
    if negative && n % 2 == 1 {
        -Rational::one()
    } else {
        Rational::one()
    }
}

fn pow2(n: u32) -> Rational {
    Rational::from_integer(BigInt::one() << n as usize)
}

/// Dispatches on the problem's family.
pub fn solve(problem: &PdeProblem, n: u32) -> Result<SeriesSolution> {
    problem.check()?;
    match problem.family {
        Family::A => solve_family_a(n),
        Family::B => family_b(problem.clone(), n),
        Family::C => family_c(problem.clone(), n),
        Family::D => family_d(problem.clone(), n),
    }
}

fn require_terms(n: u32) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidInput("truncation N must be ≥ 1".into()));
    }
    Ok(())
}

/// `u = Σ_{n=0}^{N} (1/2)^n·x^(2n) / (t^(2n)·(n!)²)`.
pub fn solve_family_a(n: u32) -> Result<SeriesSolution> {
    require_terms(n)?;
    let terms = (0..=n)
        .map(|k| {
            let c = powi(&Rational::new(1.into(), 2.into()), k as i32) / (factorial_q(k) * factorial_q(k));
            SeriesTerm::new(
                GExpr::x_pow(k),
                TimeFactor { c, t_power: -2 * k as i32, ad_power: 0, exp_ad: 0 },
            )
        })
        .collect();
    Ok(SeriesSolution {
        problem: PdeProblem::family_a(),
        truncation: n,
        terms,
        multiplier: None,
        has_impulse_content: false,
        notes: vec![
            "stated side condition u(0+,t) = 0 is not met: the series gives u(0,t) = 1".into(),
        ],
        antiderivative: LPoly::zero(),
        ratio: LPoly::zero(),
    })
}

/// Derived: `u = e^(−𝓜)·Σ (−𝓜/2)^n·x^(2n)/(n!)²`.
/// Literal: `u = Σ 𝓜^n·x^(2n)/((n!)²·2^(n−1)) · Σ 𝓜^n/(2·n!)`.
pub fn solve_family_b(m: &LPoly, n: u32, convention: SignConvention) -> Result<SeriesSolution> {
    family_b(PdeProblem::new(Family::B, Coefficient::Ratio(m.clone()), convention)?, n)
}

fn family_b(problem: PdeProblem, n: u32) -> Result<SeriesSolution> {
    require_terms(n)?;
    let ad = problem.antiderivative();
    let (terms, multiplier) = match problem.convention {
        SignConvention::Derived => {
            let terms = (0..=n)
                .map(|k| {
                    let c = sign_pow(true, k) / (pow2(k) * factorial_q(k) * factorial_q(k));
                    SeriesTerm::new(
                        GExpr::x_pow(k),
                        TimeFactor { c, t_power: 0, ad_power: k, exp_ad: -1 },
                    )
                })
                .collect();
            (terms, None)
        }
        SignConvention::PaperLiteral => {
            let terms = (0..=n)
                .map(|k| {
                    let c = Rational::from_integer(2.into())
                        / (pow2(k) * factorial_q(k) * factorial_q(k));
                    SeriesTerm::new(
                        GExpr::x_pow(k),
                        TimeFactor { c, t_power: 0, ad_power: k, exp_ad: 0 },
                    )
                })
                .collect();
            let mult = (0..=n)
                .map(|k| TimeFactor {
                    c: Rational::new(1.into(), 2.into()) / factorial_q(k),
                    t_power: 0,
                    ad_power: k,
                    exp_ad: 0,
                })
                .collect();
            (terms, Some(mult))
        }
    };
    let ratio = problem.ratio();
    Ok(SeriesSolution {
        problem,
        truncation: n,
        terms,
        multiplier,
        has_impulse_content: false,
        notes: Vec::new(),
        antiderivative: ad,
        ratio,
    })
}

/// `u = 1 + Σ_{n=1}^{N} (ε𝓗)^n/n! · (e^(x²/2))^{⋆n}`, `ε = −1` (derived) or
/// `+1` (literal). Star powers come from the convolution module.
pub fn solve_family_c(h: &Coefficient, n: u32, convention: SignConvention) -> Result<SeriesSolution> {
    family_c(PdeProblem::new(Family::C, h.clone(), convention)?, n)
}

fn family_c(problem: PdeProblem, n: u32) -> Result<SeriesSolution> {
    require_terms(n)?;
    let negative = problem.convention == SignConvention::Derived;
    let base = GExpr::gaussian(Rational::new(1.into(), 2.into()));
    let mut terms = vec![SeriesTerm::new(GExpr::one(), TimeFactor::constant(Rational::one()))];
    for k in 1..=n {
        let x_part = star_power(&base, k)?;
        let t_part = TimeFactor {
            c: sign_pow(negative, k) / factorial_q(k),
            t_power: 0,
            ad_power: k,
            exp_ad: 0,
        };
        terms.push(SeriesTerm::new(x_part, t_part));
    }
    let sign = if negative { "1 - H(t)" } else { "1 + H(t)" };
    let ad = problem.antiderivative();
    let ratio = problem.ratio();
    Ok(SeriesSolution {
        problem,
        truncation: n,
        terms,
        multiplier: None,
        has_impulse_content: true,
        notes: vec![
            "leading 1 stands for the sigma-constant term of the exact transform, which has no classical inverse".into(),
            format!("stated side condition u(0+,t) = 0 is not met: the series gives u(0,t) = {sign} with H the antiderivative"),
        ],
        antiderivative: ad,
        ratio,
    })
}

/// `u = e^(−𝓜(t))`, independent of `x`.
pub fn solve_family_d(m: &LPoly, n: u32) -> Result<SeriesSolution> {
    family_d(PdeProblem::new(Family::D, Coefficient::Ratio(m.clone()), SignConvention::Derived)?, n)
}

fn family_d(problem: PdeProblem, n: u32) -> Result<SeriesSolution> {
    require_terms(n)?;
    let ad = problem.antiderivative();
    let ratio = problem.ratio();
    Ok(SeriesSolution {
        problem,
        truncation: n,
        terms: vec![SeriesTerm::new(
            GExpr::one(),
            TimeFactor { c: Rational::one(), t_power: 0, ad_power: 0, exp_ad: -1 },
        )],
        multiplier: None,
        has_impulse_content: false,
        notes: vec![
            "equation read as 0 = f u + f (1/x) u_x + g u_t + g (1/x) u_xt; the printed form is garbled".into(),
        ],
        antiderivative: ad,
        ratio,
    })
}

impl SeriesSolution {
    pub fn antiderivative(&self) -> &LPoly {
        &self.antiderivative
    }

    pub fn ratio(&self) -> &LPoly {
        &self.ratio
    }

    fn check_point(&self, x: f64, t: f64) -> Result<()> {
        if !(x >= 0.0) || !t.is_finite() {
            return Err(Error::Domain(format!("cannot evaluate at ({x}, {t})")));
        }
        if t <= 0.0 && self.terms.iter().any(|s| s.t_part.t_power < 0) {
            return Err(Error::Domain(format!("family {} needs t > 0", self.problem.family)));
        }
        Ok(())
    }

    fn multiplier_eval(&self, upto: usize, t: f64, ad: f64, ad_dot: f64) -> Option<(f64, f64)> {
        self.multiplier.as_ref().map(|m| {
            let mut v = NeumaierSum::default();
            let mut d = NeumaierSum::default();
            for f in m.iter().take(upto) {
                let (a, b) = f.eval(to_f64(&f.c), t, ad, ad_dot);
                v.add(a);
                d.add(b);
            }
            (v.value(), d.value())
        })
    }

    fn eval_upto(&self, upto: usize, x: f64, t: f64) -> Result<Derivs> {
        self.check_point(x, t)?;
        let ad = self.antiderivative.eval(t);
        let ad_dot = self.ratio.eval(t);
        let mut sum = DerivSum::default();
        for term in self.terms.iter().take(upto) {
            sum.add(term.eval(x, t, ad, ad_dot)?);
        }
        let s = sum.value();
        Ok(match self.multiplier_eval(upto, t, ad, ad_dot) {
            None => s,
            Some((b, bt)) => Derivs {
                u: s.u * b,
                u_t: s.u_t * b + s.u * bt,
                u_x: s.u_x * b,
                u_xt: s.u_xt * b + s.u_x * bt,
            },
        })
    }

    /// `u, u_t, u_x, u_xt` at `(x, t)` from the exact term closed forms.
    pub fn evaluate(&self, x: f64, t: f64) -> Result<Derivs> {
        self.eval_upto(usize::MAX, x, t)
    }

    pub fn value(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.evaluate(x, t)?.u)
    }

    /// The `n`-th increment `u_n − u_{n−1}` of the partial sums, from closed
    /// forms; zero beyond the stored terms.
    pub fn term(&self, n: u32, x: f64, t: f64) -> Result<f64> {
        self.check_point(x, t)?;
        let n = n as usize;
        let ad = self.antiderivative.eval(t);
        let ad_dot = self.ratio.eval(t);
        let xt = |k: usize| -> Result<f64> {
            match self.terms.get(k) {
                Some(s) => Ok(s.eval(x, t, ad, ad_dot)?.u),
                None => Ok(0.0),
            }
        };
        match &self.multiplier {
            None => xt(n),
            Some(m) => {
                // a_n·B_n + A_{n−1}·b_n
                let b_n = m.get(n).map(|f| f.eval(to_f64(&f.c), t, ad, ad_dot).0).unwrap_or(0.0);
                let big_b = self.multiplier_eval(n + 1, t, ad, ad_dot).map(|v| v.0).unwrap_or(0.0);
                let big_a: f64 = (0..n).map(xt).sum::<Result<f64>>()?;
                Ok(xt(n)? * big_b + big_a * b_n)
            }
        }
    }

    /// Upper bound on `Σ_{n>N} |term_n|` over `0 ≤ x ≤ x_max`, `t ∈ [t_lo, t_hi]`,
    /// by majorizing each family's term ratio. May be `+∞` when the ratio test
    /// does not yet apply at this `N`.
    pub fn truncation_bound(&self, x_max: f64, t_lo: f64, t_hi: f64) -> Result<f64> {
        if !(x_max >= 0.0) || !(t_hi >= t_lo) {
            return Err(Error::Domain(format!("bad box x ≤ {x_max}, t ∈ [{t_lo}, {t_hi}]")));
        }
        let n = self.truncation as f64;
        let big_n = self.truncation;
        let x2 = x_max * x_max;
        let amax = self.antiderivative.abs_bound(t_lo, t_hi);
        let ln_fact = |k: u32| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
        // tail of Σ_{k>N} z^k/(k!)² with z ≥ 0
        let bessel_tail = |z: f64| -> f64 {
            if z == 0.0 {
                return 0.0;
            }
            let r = z / ((n + 2.0) * (n + 2.0));
            if r >= 1.0 {
                return f64::INFINITY;
            }
            ((big_n + 1) as f64 * z.ln() - 2.0 * ln_fact(big_n + 1)).exp() / (1.0 - r)
        };
        let bound = match (self.problem.family, self.problem.convention) {
            (Family::A, _) => {
                if !(t_lo > 0.0) {
                    return Err(Error::Domain("family A bound needs t_lo > 0".into()));
                }
                bessel_tail(x2 / (2.0 * t_lo * t_lo))
            }
            (Family::B, SignConvention::Derived) => amax.exp() * bessel_tail(amax * x2 / 2.0),
            (Family::B, SignConvention::PaperLiteral) => {
                // |A_∞B_∞ − A_N B_N| ≤ |A_∞ − A_N|·|B_∞| + |A_N|·|B_∞ − B_N|
                let z = amax * x2 / 2.0;
                let a_all = 2.0 * z.exp();
                let b_all = 0.5 * amax.exp();
                let a_tail = 2.0 * bessel_tail(z);
                let rb = amax / (n + 2.0);
                let b_tail = if amax == 0.0 {
                    0.0
                } else if rb >= 1.0 {
                    f64::INFINITY
                } else {
                    0.5 * ((big_n + 1) as f64 * amax.ln() - ln_fact(big_n + 1)).exp() / (1.0 - rb)
                };
                a_tail * b_all + a_all * b_tail
            }
            (Family::C, _) => {
                // |T_k| = A^k/k! · x^(2(k−1))·e^(x²/2)/(2^(k−1)(k−1)!)
                if amax == 0.0 {
                    0.0
                } else {
                    let k = big_n + 1;
                    let r = amax * x2 / (2.0 * (n + 1.0) * (n + 2.0));
                    if r >= 1.0 {
                        f64::INFINITY
                    } else {
                        let ln_x = if x2 > 0.0 { (k - 1) as f64 * x2.ln() } else if k == 1 { 0.0 } else { f64::NEG_INFINITY };
                        let ln_t = k as f64 * amax.ln() - ln_fact(k) + ln_x + x2 / 2.0
                            - (k - 1) as f64 * std::f64::consts::LN_2
                            - ln_fact(k - 1);
                        ln_t.exp() / (1.0 - r)
                    }
                }
            }
            (Family::D, _) => 0.0,
        };
        Ok(bound)
    }
}

/// One residual sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualPoint {
    pub x: f64,
    pub t: f64,
    /// Residual from the exact term-wise derivatives.
    pub residual: f64,
    /// The same residual with central finite differences of `u`.
    pub fd_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualReport {
    pub family: Family,
    pub convention: SignConvention,
    pub truncation: u32,
    pub equation: &'static str,
    pub points: Vec<ResidualPoint>,
    pub max_abs: f64,
    pub fd_max_disagreement: f64,
    /// Whether every point satisfies `|residual − fd_residual| ≤ FD_AGREEMENT_TOL`.
    pub fd_agrees: bool,
    pub truncation_bound: f64,
    pub has_impulse_content: bool,
    pub notes: Vec<String>,
}

/// Left side of the normalized equation.
fn equation_lhs(family: Family, ratio: f64, x: f64, t: f64, d: &Derivs) -> f64 {
    match family {
        Family::A => t * t * t * d.u_xt + 2.0 * x * d.u,
        Family::B => ratio * d.u + ratio * d.u_x / x + d.u_xt / x,
        Family::C => ratio * d.u - d.u_t + d.u_xt / x,
        Family::D => ratio * d.u + ratio * d.u_x / x + d.u_t + d.u_xt / x,
    }
}

/// Central differences of `u` with step `h`, using the actually representable
/// step widths.
pub fn finite_difference_derivs(u: &SeriesSolution, x: f64, t: f64, h: f64) -> Result<Derivs> {
    let (xp, xm, tp, tm) = (x + h, x - h, t + h, t - h);
    let (dx, dt) = (xp - xm, tp - tm);
    let v = |a: f64, b: f64| u.value(a, b);
    let u0 = v(x, t)?;
    let u_t = (v(x, tp)? - v(x, tm)?) / dt;
    let u_x = (v(xp, t)? - v(xm, t)?) / dx;
    let u_xt = (v(xp, tp)? - v(xp, tm)? - v(xm, tp)? + v(xm, tm)?) / (dx * dt);
    Ok(Derivs { u: u0, u_t, u_x, u_xt })
}

/// Evaluates `problem`'s equation on `u` over `grid`, with a finite-difference
/// cross-check at every point.
pub fn residual(problem: &PdeProblem, u: &SeriesSolution, grid: &[(f64, f64)]) -> Result<ResidualReport> {
    problem.check()?;
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty residual grid".into()));
    }
    if let Some(&(x, t)) = grid.iter().find(|(x, t)| !(*x > 0.0 && *t > 0.0)) {
        return Err(Error::GridDomain { x, t });
    }
    let ratio = problem.ratio();
    let mut points = Vec::with_capacity(grid.len());
    for &(x, t) in grid {
        let r = ratio.eval(t);
        let exact = u.evaluate(x, t)?;
        let fd = finite_difference_derivs(u, x, t, FD_STEP)?;
        points.push(ResidualPoint {
            x,
            t,
            residual: equation_lhs(problem.family, r, x, t, &exact),
            fd_residual: equation_lhs(problem.family, r, x, t, &fd),
        });
    }
    let max_abs = points.iter().map(|p| p.residual.abs()).fold(0.0, f64::max);
    let fd_max = points
        .iter()
        .map(|p| (p.residual - p.fd_residual).abs())
        .fold(0.0, f64::max);
    let x_max = grid.iter().map(|g| g.0).fold(0.0, f64::max);
    let t_lo = grid.iter().map(|g| g.1).fold(f64::INFINITY, f64::min);
    let t_hi = grid.iter().map(|g| g.1).fold(0.0, f64::max);
    let mut notes = u.notes.clone();
    if problem != &u.problem {
        notes.push("residual equation differs from the problem the series was solved for".into());
    }
    Ok(ResidualReport {
        family: problem.family,
        convention: u.problem.convention,
        truncation: u.truncation,
        equation: problem.family.equation(),
        points,
        max_abs,
        fd_max_disagreement: fd_max,
        fd_agrees: fd_max <= FD_AGREEMENT_TOL,
        truncation_bound: u.truncation_bound(x_max, t_lo, t_hi)?,
        has_impulse_content: u.has_impulse_content,
        notes,
    })
}

/// `nx × nt` points, log-spaced in both coordinates.
pub fn log_grid(x0: f64, x1: f64, nx: usize, t0: f64, t1: f64, nt: usize) -> Result<Vec<(f64, f64)>> {
    if !(x0 > 0.0 && x1 >= x0 && t0 > 0.0 && t1 >= t0) || nx == 0 || nt == 0 {
        return Err(Error::GridDomain { x: x0, t: t0 });
    }
    let axis = |lo: f64, hi: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        let (a, b) = (lo.ln(), hi.ln());
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                }
            })
            .collect()
    };
    let xs = axis(x0, x1, nx);
    let ts = axis(t0, t1, nt);
    Ok(xs.iter().flat_map(|&x| ts.iter().map(move |&t| (x, t))).collect())
}

/// 10×10 log-spaced over `[0.1, 2] × [0.5, 2]`.
pub fn default_grid() -> Vec<(f64, f64)> {
    log_grid(0.1, 2.0, 10, 0.5, 2.0, 10).expect("static grid is valid")
}

/// `e^(exponent(t)) · Σ P_{a,m}(t)·(σ−a)^(−m)`: transform-domain series with
/// polynomial-in-`t` coefficients, for exact checks of the transform ODEs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SigmaSeries {
    pub exponent: LPoly,
    pub coeffs: BTreeMap<(Rational, u32), LPoly>,
}

impl SigmaSeries {
    pub fn new(exponent: LPoly) -> Self {
        SigmaSeries { exponent, coeffs: BTreeMap::new() }
    }

    pub fn push(&mut self, a: Rational, m: u32, p: LPoly) {
        let a = if m == 0 { Rational::zero() } else { a };
        let slot = self.coeffs.entry((a.clone(), m)).or_default();
        *slot = &*slot + &p;
        if slot.is_zero() {
            self.coeffs.remove(&(a, m));
        }
    }

    /// `∂/∂t`, including the exponential prefactor.
    pub fn d_dt(&self) -> SigmaSeries {
        let e_dot = self.exponent.derivative();
        let mut out = SigmaSeries::new(self.exponent.clone());
        for ((a, m), p) in &self.coeffs {
            out.push(a.clone(), *m, &p.derivative() + &(&e_dot * p));
        }
        out
    }

    pub fn mul_poly(&self, q: &LPoly) -> SigmaSeries {
        let mut out = SigmaSeries::new(self.exponent.clone());
        for ((a, m), p) in &self.coeffs {
            out.push(a.clone(), *m, p * q);
        }
        out
    }

    /// Multiplication by `α·σ + β`.
    pub fn mul_affine(&self, alpha: &Rational, beta: &Rational) -> Result<SigmaSeries> {
        let mut out = SigmaSeries::new(self.exponent.clone());
        for ((a, m), p) in &self.coeffs {
            if !alpha.is_zero() {
                if *m == 0 {
                    return Err(Error::PolynomialContent);
                }
                out.push(a.clone(), m - 1, p.scale(alpha));
                out.push(a.clone(), *m, p.scale(&(alpha * a)));
            }
            out.push(a.clone(), *m, p.scale(beta));
        }
        Ok(out)
    }

    pub fn sub(&self, other: &SigmaSeries) -> Result<SigmaSeries> {
        if self.exponent != other.exponent {
            return Err(Error::InvalidInput("exponential prefactors differ".into()));
        }
        let mut out = self.clone();
        for ((a, m), p) in &other.coeffs {
            out.push(a.clone(), *m, -p);
        }
        Ok(out)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }
}

/// Outcome of an exact transform-domain ODE check on a truncated series.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformCheck {
    /// `lhs − rhs` of the transformed equation.
    pub defect: SigmaSeries,
    /// The single top-order term truncation must leave behind.
    pub expected_remainder: SigmaSeries,
}

impl TransformCheck {
    pub fn holds(&self) -> bool {
        self.defect == self.expected_remainder
    }
}

/// Family B: `û = (1/(2σ))·e^(−𝓜)·e^(−𝓜/(2σ))` truncated at order `N`, checked
/// against `2σ·û_t = −M·(1+2σ)·û`.
pub fn family_b_transform_check(m: &LPoly, n: u32) -> Result<TransformCheck> {
    let ad = m.integral();
    let mut u_hat = SigmaSeries::new(-&ad);
    let minus_half_ad = ad.scale(&Rational::new((-1).into(), 2.into()));
    let mut last = LPoly::zero();
    for k in 0..=n {
        let p = minus_half_ad.pow(k).scale(&(Rational::new(1.into(), 2.into()) / factorial_q(k)));
        u_hat.push(Rational::zero(), k + 1, p.clone());
        last = p;
    }
    let two = Rational::from_integer(2.into());
    let lhs = u_hat.d_dt().mul_affine(&two, &Rational::zero())?;
    let rhs = u_hat.mul_affine(&two, &Rational::one())?.mul_poly(&-m);
    let mut expected = SigmaSeries::new(-&ad);
    expected.push(Rational::zero(), n + 1, m * &last);
    Ok(TransformCheck { defect: lhs.sub(&rhs)?, expected_remainder: expected })
}

/// Family C: `û = Σ_{n≤N} (ε𝓗)^n/n!·(2σ−1)^(−n)` checked against
/// `H·û + (2σ−1)·û_t = 0`. Only the derived sign satisfies it.
pub fn family_c_transform_check(h: &Coefficient, n: u32, convention: SignConvention) -> Result<TransformCheck> {
    let problem = PdeProblem::new(Family::C, h.clone(), convention)?;
    let ad = problem.antiderivative();
    let ratio = problem.ratio();
    let eps = if convention == SignConvention::Derived { -Rational::one() } else { Rational::one() };
    let half = Rational::new(1.into(), 2.into());
    let mut u_hat = SigmaSeries::new(LPoly::zero());
    let mut last = LPoly::zero();
    for k in 0..=n {
        // (2σ−1)^(−k) = 2^(−k)·(σ−1/2)^(−k)
        let c = powi(&(&eps * &half), k as i32) / factorial_q(k);
        let p = ad.pow(k).scale(&c);
        u_hat.push(half.clone(), k, p.clone());
        last = p;
    }
    let two = Rational::from_integer(2.into());
    let lhs = u_hat.mul_poly(&ratio);
    let rhs = u_hat.d_dt().mul_affine(&two, &-Rational::one())?;
    let mut defect = lhs.clone();
    for ((a, m), p) in &rhs.coeffs {
        defect.push(a.clone(), *m, p.clone());
    }
    let mut expected = SigmaSeries::new(LPoly::zero());
    expected.push(half, n, &ratio * &last);
    Ok(TransformCheck { defect, expected_remainder: expected })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn family_a_basic_values() {
        let u = solve_family_a(30).unwrap();
        for t in [0.3, 1.0, 5.0] {
            assert_eq!(u.value(0.0, t).unwrap(), 1.0);
        }
        // partial sum oracle, independent of the term machinery
        let mut oracle = 0.0;
        let mut term = 1.0;
        for n in 0..=30 {
            if n > 0 {
                term *= 0.5 / (n as f64 * n as f64);
            }
            oracle += term;
        }
        assert!(close(u.value(1.0, 1.0).unwrap(), oracle, 1e-12));
        assert!(close(oracle, 1.566_082_929_756_350_5, 1e-12));
    }

    #[test]
    fn family_a_residual_telescopes() {
        let n = 3;
        let u = solve_family_a(n).unwrap();
        let p = PdeProblem::family_a();
        for &(x, t) in &[(0.7, 0.9), (1.5, 1.2)] {
            let d = u.evaluate(x, t).unwrap();
            let r = equation_lhs(p.family, 0.0, x, t, &d);
            let c_n = 0.5f64.powi(n as i32) / (1..=n).map(|k| (k * k) as f64).product::<f64>();
            let boundary = 2.0 * c_n * x.powi(2 * n as i32 + 1) * t.powi(-2 * n as i32);
            assert!(((r - boundary) / boundary).abs() < 1e-8, "{r} vs {boundary}");
        }
        let rep = residual(&p, &solve_family_a(30).unwrap(), &default_grid()).unwrap();
        assert!(rep.max_abs <= 1e-8);
        assert!(rep.fd_agrees);
    }

    #[test]
    fn family_b_degenerate_ratio() {
        let u = solve_family_b(&LPoly::zero(), 5, SignConvention::Derived).unwrap();
        for &(x, t) in &[(0.3, 0.4), (2.0, 1.5)] {
            assert_eq!(u.value(x, t).unwrap(), 1.0);
        }
    }

    #[test]
    fn family_b_residual() {
        let m = LPoly::one();
        let u = solve_family_b(&m, 40, SignConvention::Derived).unwrap();
        let p = PdeProblem::new(Family::B, Coefficient::Ratio(m), SignConvention::Derived).unwrap();
        let grid = log_grid(0.2, 2.0, 10, 0.2, 2.0, 10).unwrap();
        let rep = residual(&p, &u, &grid).unwrap();
        assert!(rep.max_abs <= 1e-8, "{}", rep.max_abs);
        assert!(rep.fd_agrees, "{}", rep.fd_max_disagreement);
    }

    #[test]
    fn family_b_literal_matches_printed_double_series() {
        let n = 25;
        let u = solve_family_b(&LPoly::one(), n, SignConvention::PaperLiteral).unwrap();
        // 𝓜(1) = 1
        let a: f64 = (0..=n)
            .map(|k| 1.0 / ((1..=k).map(|i| i as f64).product::<f64>().powi(2) * 2f64.powi(k as i32 - 1)))
            .sum();
        let b: f64 = (0..=n).map(|k| 1.0 / (2.0 * (1..=k).map(|i| i as f64).product::<f64>())).sum();
        assert!(close(u.value(1.0, 1.0).unwrap(), a * b, 1e-13));
    }

    #[test]
    fn family_c_examples() {
        let h = Coefficient::Antiderivative(LPoly::one());
        let u = solve_family_c(&h, 20, SignConvention::PaperLiteral).unwrap();
        let x: f64 = 1.3;
        let mut want = 1.0;
        let mut fact_n = 1.0;
        let mut fact_nm1 = 1.0;
        for n in 1..=20 {
            fact_n *= n as f64;
            if n > 1 {
                fact_nm1 *= (n - 1) as f64;
            }
            want += x.powi(2 * n - 2) * (x * x / 2.0).exp() / (fact_n * 2f64.powi(n - 1) * fact_nm1);
        }
        assert!(close(u.value(x, 0.7).unwrap(), want, 1e-12));

        let ad = Coefficient::Ratio(LPoly::from_terms([(0, int(1)), (1, int(3))]));
        for conv in [SignConvention::PaperLiteral, SignConvention::Derived] {
            let u = solve_family_c(&ad, 8, conv).unwrap();
            let t: f64 = 0.8;
            let big_h = t + 1.5 * t * t;
            let sign = if conv == SignConvention::Derived { -1.0 } else { 1.0 };
            assert!(close(u.value(0.0, t).unwrap(), 1.0 + sign * big_h, 1e-14));
        }
    }

    #[test]
    fn family_c_terms_are_star_powers() {
        let h = Coefficient::Ratio(LPoly::var());
        let base = GExpr::gaussian(rat(1, 2));
        for conv in [SignConvention::PaperLiteral, SignConvention::Derived] {
            let u = solve_family_c(&h, 6, conv).unwrap();
            for n in 1..=6u32 {
                let sign = if conv == SignConvention::Derived && n % 2 == 1 { -1 } else { 1 };
                assert_eq!(u.terms[n as usize].x_part, star_power(&base, n).unwrap());
                assert_eq!(u.terms[n as usize].t_part.c, int(sign) / factorial_q(n));
                assert_eq!(u.terms[n as usize].t_part.ad_power, n);
            }
            // n = 2: (𝓗²/2)·x²e^(x²/2)/2
            assert_eq!(u.terms[2].x_part, GExpr::monomial(rat(1, 2), 1, rat(1, 2)));
            assert_eq!(u.terms[2].t_part.c, rat(1, 2));
        }
    }

    #[test]
    fn family_d_examples() {
        let u = solve_family_d(&LPoly::zero(), 3).unwrap();
        assert_eq!(u.value(1.0, 2.0).unwrap(), 1.0);
        let u = solve_family_d(&LPoly::one(), 3).unwrap();
        assert!(close(u.value(0.5, 1.5).unwrap(), (-1.5f64).exp(), 1e-15));
        let d = u.evaluate(0.5, 1.5).unwrap();
        assert_eq!(d.u + d.u_t, 0.0);

        let m = LPoly::monomial(int(2), 1);
        let u = solve_family_d(&m, 3).unwrap();
        let p = PdeProblem::new(Family::D, Coefficient::Ratio(m), SignConvention::Derived).unwrap();
        assert!(close(u.value(0.5, 1.5).unwrap(), (-2.25f64).exp(), 1e-15));
        let rep = residual(&p, &u, &default_grid()).unwrap();
        assert!(rep.max_abs <= 1e-12);
    }

    #[test]
    fn increments_are_single_terms() {
        let cases: Vec<PdeProblem> = vec![
            PdeProblem::family_a(),
            PdeProblem::new(Family::B, Coefficient::Ratio(LPoly::var()), SignConvention::Derived).unwrap(),
            PdeProblem::new(Family::B, Coefficient::Ratio(LPoly::one()), SignConvention::PaperLiteral).unwrap(),
            PdeProblem::new(Family::C, Coefficient::Ratio(LPoly::one()), SignConvention::PaperLiteral).unwrap(),
            PdeProblem::new(Family::C, Coefficient::Ratio(LPoly::one()), SignConvention::Derived).unwrap(),
            PdeProblem::new(Family::D, Coefficient::Ratio(LPoly::one()), SignConvention::Derived).unwrap(),
        ];
        for p in cases {
            for n in [3u32, 7] {
                let lo = solve(&p, n).unwrap();
                let hi = solve(&p, n + 1).unwrap();
                for &(x, t) in &[(0.4, 0.6), (1.7, 1.1)] {
                    let diff = hi.value(x, t).unwrap() - lo.value(x, t).unwrap();
                    let term = hi.term(n + 1, x, t).unwrap();
                    let scale = hi.value(x, t).unwrap().abs().max(1.0);
                    assert!((diff - term).abs() <= 1e-14 * scale, "{:?} n={n}: {diff} vs {term}", p.family);
                }
            }
        }
    }

    /// Σ_{k=N+1}^{N+200} |term_k| at a box corner, via logs.
    fn extended_tail_a(x: f64, t: f64, n: u32) -> f64 {
        let z = x * x / (2.0 * t * t);
        (n + 1..=n + 200)
            .map(|k| {
                let lf: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
                (k as f64 * z.ln() - 2.0 * lf).exp()
            })
            .sum()
    }

    #[test]
    fn truncation_bound_family_a() {
        let u = solve_family_a(30).unwrap();
        let b = u.truncation_bound(2.0, 0.5, 2.0).unwrap();
        assert!(b <= 1e-12);
        assert!(b >= extended_tail_a(2.0, 0.5, 30));
        let mut prev = f64::INFINITY;
        for n in [5, 10, 20, 30] {
            let b = solve_family_a(n).unwrap().truncation_bound(2.0, 0.5, 2.0).unwrap();
            assert!(b >= extended_tail_a(2.0, 0.5, n));
            assert!(b < prev);
            prev = b;
        }
        assert!(u.truncation_bound(2.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn truncation_bound_family_c() {
        let h = Coefficient::Antiderivative(LPoly::one());
        let u = solve_family_c(&h, 25, SignConvention::PaperLiteral).unwrap();
        let b = u.truncation_bound(2.0, 0.5, 2.0).unwrap();
        assert!(b <= 1e-10);
        let long = solve_family_c(&h, 225, SignConvention::PaperLiteral).unwrap();
        let tail = long.value(2.0, 1.0).unwrap() - u.value(2.0, 1.0).unwrap();
        assert!(b >= tail);
    }

    #[test]
    fn transform_checks() {
        for m in [
            LPoly::one(),
            LPoly::var(),
            LPoly::monomial(int(2), 1),
            LPoly::from_terms([(0, int(1)), (1, int(1))]),
        ] {
            let chk = family_b_transform_check(&m, 6).unwrap();
            assert!(chk.holds());
            assert_eq!(chk.defect.coeffs.len(), 1);
        }
        let h = Coefficient::Ratio(LPoly::from_terms([(0, rat(1, 3)), (2, int(-2))]));
        assert!(family_c_transform_check(&h, 6, SignConvention::Derived).unwrap().holds());
        assert!(!family_c_transform_check(&h, 6, SignConvention::PaperLiteral).unwrap().holds());
    }

    #[test]
    fn grid_validation() {
        let u = solve_family_a(5).unwrap();
        let p = PdeProblem::family_a();
        assert!(matches!(residual(&p, &u, &[(0.0, 1.0)]), Err(Error::GridDomain { .. })));
        assert!(matches!(residual(&p, &u, &[(1.0, -1.0)]), Err(Error::GridDomain { .. })));
        assert_eq!(default_grid().len(), 100);
        assert!(PdeProblem::new(Family::A, Coefficient::Ratio(LPoly::one()), SignConvention::Derived).is_err());
        assert!(solve_family_a(0).is_err());
    }
}
