//! Numerical evaluation of the defining integral `∫₀^∞ x·e^(−σx²)·f(x) dx`.
//!
//! This is the independent oracle for everything symbolic in the crate. The
//! semi-infinite range is truncated at a point `X*` where an analytic bound on
//! the remaining tail drops below `tail_epsilon`; `[0, X*]` is then handled by
//! globally adaptive Gauss–Kronrod (7, 15) bisection.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num::Signed;

use crate::error::{Error, Result};
use crate::expr::{log_sum_exp, GExpr};
use crate::rational::to_f64;

/// Multiple of `ε·∫|terms|` below which errors of an algebra-element
/// integrand are indistinguishable from evaluation noise.
const ROUNDOFF_FLOOR: f64 = 128.0 * f64::EPSILON;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum bisection depth of any subinterval.
    pub max_refinements: u32,
    /// Maximum number of live subintervals.
    pub max_intervals: usize,
    pub tail_epsilon: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_refinements: 60,
            max_intervals: 500_000,
            tail_epsilon: 1e-16,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.rel_tol, self.abs_tol, self.tail_epsilon]
            .iter()
            .all(|v| *v > 0.0 && v.is_finite());
        if !positive || self.max_refinements < 1 || self.max_intervals < 4 {
            return Err(Error::InvalidInput(format!("invalid quadrature config {self:?}")));
        }
        Ok(())
    }
}

/// Declared growth of a sampled function: `|f(x)| ≤ scale·x^(2·half_degree)·e^(rate·x²)`
/// for `x ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub rate: f64,
    pub half_degree: u32,
    pub scale: f64,
}

impl Envelope {
    /// Envelope valid for every term of `e` on `x ≥ 1`; `None` for zero.
    pub fn of(e: &GExpr) -> Option<Envelope> {
        let rate = to_f64(e.max_rate()?);
        Some(Envelope {
            rate,
            half_degree: e.max_half_degree(),
            scale: e.terms().iter().map(|t| to_f64(&t.c.abs())).sum(),
        })
    }

    /// Analytic bound on `∫_X^∞ scale·x^(2k+1)·e^((rate−σ)x²) dx`, via
    /// `Γ(k+1, z) = k!·e^(−z)·Σ_{j≤k} z^j/j!` with `z = (σ−rate)·X²`.
    pub fn tail_bound(&self, sigma: f64, x: f64) -> f64 {
        let lambda = sigma - self.rate;
        if lambda <= 0.0 {
            return f64::INFINITY;
        }
        let k = self.half_degree;
        let z = lambda * x * x;
        let ln_fact = |n: u32| (1..=n).map(|i| (i as f64).ln()).sum::<f64>();
        let partial: Vec<f64> = (0..=k)
            .map(|j| if j == 0 { 0.0 } else { j as f64 * z.ln() - ln_fact(j) })
            .collect();
        let ln_tail = self.scale.ln() - std::f64::consts::LN_2 - (k + 1) as f64 * lambda.ln()
            + ln_fact(k)
            - z
            + log_sum_exp(&partial);
        ln_tail.exp()
    }

    /// Smallest `X* ≥ 1` (to within bisection precision) with
    /// `tail_bound(σ, X*) < eps`, by doubling then bisection.
    pub fn truncation_point(&self, sigma: f64, eps: f64) -> Result<f64> {
        if sigma <= self.rate {
            return Err(Error::DivergentIntegral { sigma, rate: self.rate });
        }
        let mut hi = 1.0;
        while self.tail_bound(sigma, hi) >= eps {
            hi *= 2.0;
            if hi > 1e150 {
                return Err(Error::QuadratureFailure("no finite truncation point".into()));
            }
        }
        if hi == 1.0 {
            return Ok(hi);
        }
        let mut lo = hi / 2.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.tail_bound(sigma, mid) < eps {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-9 * hi {
                break;
            }
        }
        Ok(hi)
    }
}

/// What to transform: an algebra element or a sampled function with a
/// declared envelope.
#[derive(Clone, Copy)]
pub enum Integrand<'a> {
    Expr(&'a GExpr),
    Sampled {
        f: &'a dyn Fn(f64) -> f64,
        envelope: Envelope,
    },
}

/// `∫₀^∞ x·e^(−s²x²)·f(x) dx`, truncated where the analytic tail bound falls
/// below `cfg.tail_epsilon`.
pub fn l2_quadrature(f: Integrand<'_>, s: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::Domain(format!("transform variable s = {s} must be > 0")));
    }
    l2_quadrature_sigma(f, s * s, cfg)
}

/// The same integral parameterized by `σ = s²`. Any `σ` above the growth rate
/// is admissible, including negative values.
pub fn l2_quadrature_sigma(f: Integrand<'_>, sigma: f64, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    if !sigma.is_finite() {
        return Err(Error::Domain(format!("σ = {sigma} must be finite")));
    }
    match f {
        Integrand::Expr(e) => {
            let Some(env) = Envelope::of(e) else {
                return Ok(0.0);
            };
            let x_max = env.truncation_point(sigma, cfg.tail_epsilon)?;
            let compiled = e.compile();
            // Cancellation between terms caps the attainable accuracy.
            let rough = QuadratureConfig { rel_tol: 1e-3, ..*cfg };
            let scale = integrate(|x| compiled.weighted_abs(x, sigma), 0.0, x_max, &rough)?.value;
            let cfg = QuadratureConfig { abs_tol: cfg.abs_tol.max(ROUNDOFF_FLOOR * scale), ..*cfg };
            Ok(integrate(|x| compiled.weighted(x, sigma), 0.0, x_max, &cfg)?.value)
        }
        Integrand::Sampled { f, envelope } => {
            let x_max = envelope.truncation_point(sigma, cfg.tail_epsilon)?;
            Ok(integrate(|x| x * (-sigma * x * x).exp() * f(x), 0.0, x_max, cfg)?.value)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub intervals: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Value, error estimate, and whether the estimate sits at the roundoff floor.
fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, bool) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = (fc * WGK[7]).abs();
    let mut fv = [(0.0, 0.0); 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv[j] = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        abs_sum += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv[j].0 - mean).abs() + (fv[j].1 - mean).abs());
    }
    let value = kronrod * half;
    let abs_sum = abs_sum * half.abs();
    let asc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * abs_sum;
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    (value, err, err <= floor)
}

/// Globally adaptive G7/K15 quadrature of `f` over `[a, b]`.
///
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol·|I|)`;
/// fails if the worst segment would exceed `max_refinements` bisections.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult> {
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration bounds [{a}, {b}] must be finite")));
    }
    if a == b {
        return Ok(QuadResult { value: 0.0, error_estimate: 0.0, intervals: 0 });
    }
    const INITIAL: usize = 4;
    let mut heap = BinaryHeap::new();
    // Segments whose error is already at the roundoff floor are not split again.
    let mut settled = (0.0, 0.0, 0usize);
    let push = |heap: &mut BinaryHeap<Segment>, settled: &mut (f64, f64, usize), lo: f64, hi: f64, depth: u32| {
        let (value, error, at_floor) = gauss_kronrod(&f, lo, hi);
        if at_floor {
            settled.0 += value;
            settled.1 += error;
            settled.2 += 1;
        } else {
            heap.push(Segment { a: lo, b: hi, value, error, depth });
        }
    };
    let width = (b - a) / INITIAL as f64;
    for i in 0..INITIAL {
        let lo = a + width * i as f64;
        let hi = if i + 1 == INITIAL { b } else { a + width * (i + 1) as f64 };
        push(&mut heap, &mut settled, lo, hi, 0);
    }
    loop {
        let (settled_value, settled_error, settled_count) = settled;
        let total: f64 = settled_value + heap.iter().map(|s| s.value).sum::<f64>();
        let err: f64 = settled_error + heap.iter().map(|s| s.error).sum::<f64>();
        let intervals = settled_count + heap.len();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::QuadratureFailure(format!(
                "non-finite integrand on [{a}, {b}]"
            )));
        }
        if heap.is_empty() || err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            return Ok(QuadResult { value: total, error_estimate: err, intervals });
        }
        // Split a batch so that the O(n) totals above stay cheap.
        let batch = (heap.len() / 8).max(1);
        for _ in 0..batch {
            let Some(worst) = heap.pop() else { break };
            if worst.depth >= cfg.max_refinements || intervals + 1 > cfg.max_intervals {
                return Err(Error::QuadratureFailure(format!(
                    "error estimate {err:e} above tolerance after {} bisections near [{}, {}]",
                    worst.depth, worst.a, worst.b
                )));
            }
            let mid = 0.5 * (worst.a + worst.b);
            push(&mut heap, &mut settled, worst.a, mid, worst.depth + 1);
            push(&mut heap, &mut settled, mid, worst.b, worst.depth + 1);
        }
    }
}
