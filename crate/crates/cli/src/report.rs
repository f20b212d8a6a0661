//! JSON report types. Floats are written with 17 significant digits; NaN and
//! infinities become `null`.

use std::str::FromStr;

use l2transform::order::{GrowthReport, Verdict};
use l2transform::pde::{ResidualReport, SeriesSolution, SigmaSeries, TimeFactor, TransformCheck};
use serde::{Serialize, Serializer};

use crate::doc::{format_rational, ExprDocument, RatStr};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            serde_json::Number::from_str(&format_real(self.0))
                .expect("scientific notation is a JSON number")
                .serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("reports always serialize")
}

#[derive(Serialize)]
pub struct Scalar {
    pub value: RatStr,
}

#[derive(Serialize)]
pub struct Evaluation {
    pub at: Real,
    pub value: Real,
}

#[derive(Serialize)]
pub struct Quadrature {
    /// `null` when σ < 0.
    pub s: Real,
    pub sigma: Real,
    pub value: Real,
    /// The symbolic transform at the same point, for comparison.
    pub symbolic: Real,
}

#[derive(Serialize)]
pub struct NumericConvolution {
    pub t: Real,
    pub value: Real,
    pub symbolic: Real,
}

fn verdict(v: Verdict) -> serde_json::Value {
    match v.as_bool() {
        Some(b) => serde_json::Value::Bool(b),
        None => serde_json::Value::String("unknown".into()),
    }
}

#[derive(Serialize)]
pub struct Growth {
    pub exact_rate: Option<RatStr>,
    pub estimated_rate: Option<Real>,
    pub r_squared: Option<Real>,
    pub is_exponential_order: serde_json::Value,
    pub is_exp_squared_order: serde_json::Value,
}

impl From<&GrowthReport> for Growth {
    fn from(g: &GrowthReport) -> Self {
        Growth {
            exact_rate: g.exact_rate.clone().map(RatStr),
            estimated_rate: g.estimated_rate.map(Real),
            r_squared: g.r_squared.map(Real),
            is_exponential_order: verdict(g.is_exponential_order),
            is_exp_squared_order: verdict(g.is_exp_squared_order),
        }
    }
}

#[derive(Serialize)]
pub struct BoundCheck {
    pub holds: bool,
    pub samples: usize,
    pub range: [Real; 2],
}

#[derive(Serialize)]
pub struct Time {
    pub c: RatStr,
    pub t_power: i32,
    pub ad_power: u32,
    pub exp_ad: i32,
}

impl From<&TimeFactor> for Time {
    fn from(t: &TimeFactor) -> Self {
        Time { c: RatStr(t.c.clone()), t_power: t.t_power, ad_power: t.ad_power, exp_ad: t.exp_ad }
    }
}

#[derive(Serialize)]
pub struct Term {
    pub x: ExprDocument,
    pub t: Time,
}

#[derive(Serialize)]
pub struct PointValue {
    pub x: Real,
    pub t: Real,
    pub u: Real,
}

#[derive(Serialize)]
pub struct Solution {
    pub family: String,
    pub convention: String,
    pub truncation: u32,
    pub equation: &'static str,
    pub ratio: ExprDocument,
    pub antiderivative: ExprDocument,
    pub terms: Vec<Term>,
    pub multiplier: Option<Vec<Time>>,
    pub has_impulse_content: bool,
    pub notes: Vec<String>,
    pub values: Vec<PointValue>,
}

impl Solution {
    pub fn new(u: &SeriesSolution, values: Vec<PointValue>) -> Self {
        Solution {
            family: u.problem.family.to_string(),
            convention: u.problem.convention.to_string(),
            truncation: u.truncation,
            equation: u.problem.family.equation(),
            ratio: ExprDocument::from_lpoly(u.ratio()),
            antiderivative: ExprDocument::from_lpoly(u.antiderivative()),
            terms: u
                .terms
                .iter()
                .map(|t| Term { x: ExprDocument::from_gexpr(&t.x_part), t: (&t.t_part).into() })
                .collect(),
            multiplier: u.multiplier.as_ref().map(|m| m.iter().map(Time::from).collect()),
            has_impulse_content: u.has_impulse_content,
            notes: u.notes.clone(),
            values,
        }
    }
}

#[derive(Serialize)]
pub struct Grid {
    pub x0: Real,
    pub x1: Real,
    pub nx: usize,
    pub t0: Real,
    pub t1: Real,
    pub nt: usize,
    pub spacing: &'static str,
}

#[derive(Serialize)]
pub struct Point {
    pub x: Real,
    pub t: Real,
    pub residual: Real,
    pub fd_residual: Real,
}

#[derive(Serialize)]
pub struct Residual {
    pub family: String,
    pub convention: String,
    pub truncation: u32,
    pub equation: &'static str,
    pub grid: Grid,
    pub points: Vec<Point>,
    pub max_abs: Real,
    pub fd_max_disagreement: Real,
    pub fd_tolerance: Real,
    pub fd_agrees: bool,
    pub truncation_bound: Real,
    pub has_impulse_content: bool,
    pub notes: Vec<String>,
}

impl Residual {
    pub fn new(r: &ResidualReport, grid: Grid) -> Self {
        Residual {
            family: r.family.to_string(),
            convention: r.convention.to_string(),
            truncation: r.truncation,
            equation: r.equation,
            grid,
            points: r
                .points
                .iter()
                .map(|p| Point { x: Real(p.x), t: Real(p.t), residual: Real(p.residual), fd_residual: Real(p.fd_residual) })
                .collect(),
            max_abs: Real(r.max_abs),
            fd_max_disagreement: Real(r.fd_max_disagreement),
            fd_tolerance: Real(l2transform::pde::FD_AGREEMENT_TOL),
            fd_agrees: r.fd_agrees,
            truncation_bound: Real(r.truncation_bound),
            has_impulse_content: r.has_impulse_content,
            notes: r.notes.clone(),
        }
    }
}

#[derive(Serialize)]
pub struct SigmaTerm {
    pub a: String,
    pub m: u32,
    pub p: ExprDocument,
}

/// `e^(exponent(t))·Σ p(t)·(σ−a)^(−m)`.
#[derive(Serialize)]
pub struct Sigma {
    pub exponent: ExprDocument,
    pub terms: Vec<SigmaTerm>,
}

impl From<&SigmaSeries> for Sigma {
    fn from(s: &SigmaSeries) -> Self {
        Sigma {
            exponent: ExprDocument::from_lpoly(&s.exponent),
            terms: s
                .coeffs
                .iter()
                .map(|((a, m), p)| SigmaTerm { a: format_rational(a), m: *m, p: ExprDocument::from_lpoly(p) })
                .collect(),
        }
    }
}

#[derive(Serialize)]
pub struct OdeCheck {
    pub family: String,
    pub convention: String,
    pub truncation: u32,
    pub holds: bool,
    pub defect: Sigma,
    pub expected_remainder: Sigma,
}

impl OdeCheck {
    pub fn new(family: String, convention: String, truncation: u32, c: &TransformCheck) -> Self {
        OdeCheck {
            family,
            convention,
            truncation,
            holds: c.holds(),
            defect: (&c.defect).into(),
            expected_remainder: (&c.expected_remainder).into(),
        }
    }
}

#[derive(Serialize)]
pub struct ErrorReport {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_keep_seventeen_digits() {
        assert_eq!(to_json(&Real(0.5)), "5.0000000000000000e-1");
        assert_eq!(to_json(&Real(0.1)), "1.0000000000000001e-1");
        assert_eq!(to_json(&Real(f64::NAN)), "null");
        assert_eq!(to_json(&Real(f64::NEG_INFINITY)), "null");
        let back: f64 = to_json(&Real(std::f64::consts::PI)).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }
}
