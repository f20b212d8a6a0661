//! Growth-order classification: exponential order versus exponential-squared
//! order, exactly for algebra elements and by regression for sampled functions.
//!
//! `f` has exponential-squared order when `f(x)·e^(−x²) → 0`, and exponential
//! order when `|f(x)| ≤ C·e^(cx)` for some constants. On the algebra these reduce
//! to `max a < 1` and `max a ≤ 0`.

use std::fmt;

use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::expr::GExpr;
use crate::rational::Rational;

/// Minimum number of samples for [`estimate_rate`] and [`check_bound`].
pub const MIN_SAMPLES: usize = 8;

/// Fits with `R²` below this are reported as inconclusive.
pub const MIN_R_SQUARED: f64 = 0.999;

/// Relative slack of [`check_bound`].
pub const BOUND_SLACK: f64 = 1e-12;

/// Samples with `|f|` below this are dropped before the fit.
const TINY: f64 = 1e-300;

/// Dead zones around the two thresholds of the sampled classification.
const EXP_ORDER_BAND: (f64, f64) = (0.05, 0.1);
const EXP_SQUARED_BAND: (f64, f64) = (0.95, 1.05);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

impl Verdict {
    fn from_bool(b: bool) -> Self {
        if b {
            Verdict::Yes
        } else {
            Verdict::No
        }
    }

    /// `Some(true)`, `Some(false)` or `None` for unknown.
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Verdict::Yes => Some(true),
            Verdict::No => Some(false),
            Verdict::Unknown => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "true",
            Verdict::No => "false",
            Verdict::Unknown => "unknown",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub exact_rate: Option<Rational>,
    pub estimated_rate: Option<f64>,
    pub r_squared: Option<f64>,
    pub is_exponential_order: Verdict,
    pub is_exp_squared_order: Verdict,
}

pub fn classify_exact(e: &GExpr) -> GrowthReport {
    let a = e.max_rate().cloned().unwrap_or_else(Rational::zero);
    GrowthReport {
        is_exponential_order: Verdict::from_bool(!a.is_positive()),
        is_exp_squared_order: Verdict::from_bool(a < Rational::one()),
        exact_rate: Some(a),
        estimated_rate: None,
        r_squared: None,
    }
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

fn check_samples(xs: &[f64]) -> Result<()> {
    if xs.len() < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!("need at least {MIN_SAMPLES} samples, got {}", xs.len())));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("sample points must be finite".into()));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("sample points must be strictly increasing".into()));
    }
    Ok(())
}

/// Fits `ln f(x) ≈ ln C + ρ·x²` over the upper half of the samples.
pub fn estimate_rate<F: Fn(f64) -> f64>(f: F, xs: &[f64]) -> Result<GrowthReport> {
    check_samples(xs)?;
    let mut logs = Vec::with_capacity(xs.len());
    for &x in xs {
        let v = f(x);
        if !(v > 0.0) {
            return Err(Error::NonPositiveSample { x, value: v });
        }
        logs.push((x, v));
    }
    let upper = &logs[logs.len() / 2..];
    let pts: Vec<(f64, f64)> = upper
        .iter()
        .filter(|(_, v)| *v >= TINY)
        .map(|&(x, v)| (x * x, v.ln()))
        .collect();
    let inconclusive = GrowthReport {
        exact_rate: None,
        estimated_rate: None,
        r_squared: None,
        is_exponential_order: Verdict::Unknown,
        is_exp_squared_order: Verdict::Unknown,
    };
    if pts.len() < 2 {
        return Ok(inconclusive);
    }
    let (slope, r2) = least_squares(&pts);
    if !slope.is_finite() || r2 < MIN_R_SQUARED {
        return Ok(GrowthReport { estimated_rate: Some(slope), r_squared: Some(r2), ..inconclusive });
    }
    Ok(GrowthReport {
        exact_rate: None,
        estimated_rate: Some(slope),
        r_squared: Some(r2),
        is_exponential_order: band(slope, EXP_ORDER_BAND),
        is_exp_squared_order: band(slope, EXP_SQUARED_BAND),
    })
}

/// `Yes` below the band, `No` above it.
fn band(rho: f64, (lo, hi): (f64, f64)) -> Verdict {
    if rho < lo {
        Verdict::Yes
    } else if rho > hi {
        Verdict::No
    } else {
        Verdict::Unknown
    }
}

/// Slope and `R²` of the ordinary least-squares line. Data with no spread in
/// `y` fits perfectly.
fn least_squares(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pts {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let ss_res: f64 = pts.iter().map(|&(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
    let r2 = if syy <= f64::EPSILON * my.abs().max(1.0) * n { 1.0 } else { 1.0 - ss_res / syy };
    (slope, r2)
}

/// True iff `f(x) ≤ g(x)·(1 + 1e−12)` at every sample.
pub fn check_bound<F, G>(f: F, g: G, xs: &[f64]) -> Result<bool>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    check_samples(xs)?;
    Ok(xs.iter().all(|&x| {
        let (fv, gv) = (f(x), g(x));
        fv <= gv + gv.abs() * BOUND_SLACK
    }))
}

/// `ln |e(x)·e^(−x²)|` bounded from above without overflow.
pub fn ln_damped_bound(e: &GExpr, x: f64) -> f64 {
    e.ln_abs_bound(x) - x * x
}
