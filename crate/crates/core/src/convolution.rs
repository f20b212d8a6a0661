//! The L2 convolution `(f ⋆ g)(t) = ∫₀ᵗ x·f(√(t²−x²))·g(x) dx`.
//!
//! Symbolically, `⋆` is computed as `inverse(forward(f)·forward(g))`; the
//! defining integral is kept as an independent numerical check.

use crate::error::Result;
use crate::expr::GExpr;
use crate::quadrature::{integrate, QuadratureConfig};
use crate::transform::{forward, inverse, SExpr};

/// Fraction of `[0, t]` integrated in `x`; the rest uses `w = t² − x²`.
const SPLIT: f64 = 1.0 - 1.0 / (1u64 << 20) as f64;

pub fn convolve_symbolic(f: &GExpr, g: &GExpr) -> GExpr {
    from_transform(&forward(f).multiply(&forward(g)))
}

/// `f ⋆ f ⋆ … ⋆ f` with `n` factors. `n = 0` is rejected since the unit of
/// `⋆` is not a function.
pub fn star_power(f: &GExpr, n: u32) -> Result<GExpr> {
    if n == 0 {
        return Err(crate::Error::InvalidInput("star power needs n ≥ 1".into()));
    }
    Ok(from_transform(&forward(f).pow(n)))
}

fn from_transform(s: &SExpr) -> GExpr {
    // Products of proper transforms have no σ-constant part.
    inverse(s).expect("product of transforms without constants stays proper")
}

/// Adaptive quadrature of the defining integral at `t ≥ 0`.
pub fn convolve_numeric<F, G>(f: F, g: G, t: f64, cfg: &QuadratureConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    if !(t >= 0.0 && t.is_finite()) {
        return Err(crate::Error::Domain(format!("convolution point t = {t} must be ≥ 0")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let t2 = t * t;
    let x1 = t * SPLIT;
    let head = integrate(|x| x * f((t2 - x * x).max(0.0).sqrt()) * g(x), 0.0, x1, cfg)?;
    // x dx = −dw/2 with w = t² − x², which keeps f's argument well resolved near x = t.
    let w1 = (t - x1) * (t + x1);
    let tail = integrate(|w| 0.5 * f(w.sqrt()) * g((t2 - w).max(0.0).sqrt()), 0.0, w1, cfg)?;
    Ok(head.value + tail.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use crate::sample::{random_gexpr, GenParams};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn half_gaussian() -> GExpr {
        GExpr::gaussian(rat(1, 2))
    }

    fn eval(e: &GExpr) -> impl Fn(f64) -> f64 + '_ {
        let c = e.compile();
        move |x| c.evaluate(x).expect("finite on test range")
    }

    #[test]
    fn symbolic_examples() {
        let one = GExpr::one();
        assert_eq!(convolve_symbolic(&one, &one), GExpr::monomial(rat(1, 2), 1, int(0)));
        let h = half_gaussian();
        assert_eq!(convolve_symbolic(&h, &h), GExpr::monomial(rat(1, 2), 1, rat(1, 2)));
        // 1 ⋆ x²: (1/2σ)(1/2σ²) = (1/4)σ^(−3) ⟷ x⁴/4
        let v = convolve_symbolic(&one, &GExpr::x_pow(1));
        assert_eq!(v, GExpr::monomial(rat(1, 4), 2, int(0)));
        let cfg = QuadratureConfig::default();
        for t in [0.5, 1.0, 2.0] {
            let n = convolve_numeric(|_| 1.0, |x| x * x, t, &cfg).unwrap();
            assert!((n - v.evaluate(t).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn numeric_examples() {
        let cfg = QuadratureConfig::default();
        assert!((convolve_numeric(|_| 1.0, |_| 1.0, 2.0, &cfg).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(convolve_numeric(|_| 1.0, |_| 1.0, 0.0, &cfg).unwrap(), 0.0);
        let h = half_gaussian();
        let v = convolve_numeric(eval(&h), eval(&h), 1.0, &cfg).unwrap();
        assert!((v - 0.5f64.exp() / 2.0).abs() < 1e-12, "{v}");
        assert!((v - 0.8243606).abs() < 1e-7);
        assert!(convolve_numeric(|_| 1.0, |_| 1.0, -1.0, &cfg).is_err());
    }

    #[test]
    fn star_power_examples() {
        let h = half_gaussian();
        assert_eq!(star_power(&h, 1).unwrap(), h);
        assert!(star_power(&h, 0).is_err());
        assert_eq!(star_power(&h, 3).unwrap(), GExpr::monomial(rat(1, 8), 2, rat(1, 2)));
        assert_eq!(star_power(&GExpr::one(), 2).unwrap(), GExpr::monomial(rat(1, 2), 1, int(0)));
    }

    #[test]
    fn star_power_closed_form() {
        let h = half_gaussian();
        let mut fact = 1i64;
        for n in 1..=6u32 {
            if n > 1 {
                fact *= (n - 1) as i64;
            }
            let want = GExpr::monomial(rat(1, (1i64 << (n - 1)) * fact), n - 1, rat(1, 2));
            assert_eq!(star_power(&h, n).unwrap(), want, "n = {n}");
        }
    }

    fn params() -> GenParams {
        GenParams { max_rate: rat(1, 4), max_terms: 3, max_half_degree: 3, ..Default::default() }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn commutative(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_gexpr(&mut rng, &params());
            let g = random_gexpr(&mut rng, &params());
            prop_assert_eq!(convolve_symbolic(&f, &g), convolve_symbolic(&g, &f));
        }

        #[test]
        fn associative(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_gexpr(&mut rng, &params());
            let g = random_gexpr(&mut rng, &params());
            let h = random_gexpr(&mut rng, &params());
            let left = convolve_symbolic(&convolve_symbolic(&f, &g), &h);
            let right = convolve_symbolic(&f, &convolve_symbolic(&g, &h));
            prop_assert_eq!(left, right);
        }

        #[test]
        fn numeric_matches_symbolic(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_gexpr(&mut rng, &params());
            let g = random_gexpr(&mut rng, &params());
            let fg = convolve_symbolic(&f, &g);
            let cfg = QuadratureConfig::default();
            for t in [0.5, 1.0, 2.0] {
                let n = convolve_numeric(eval(&f), eval(&g), t, &cfg).unwrap();
                let s = fg.evaluate(t).unwrap();
                // f64 evaluation of fg loses digits to cancellation between terms
                let cond = fg.ln_abs_bound(t).exp();
                prop_assert!((n - s).abs() <= 1e-8 + 1e-14 * cond, "t={} numeric={} symbolic={}", t, n, s);
            }
        }
    }
}
