//! Zero-mean generalized Gaussian model: kurtosis-matching fit, differential
//! entropy and additive Gaussian (neural noise) channel.
//!
//! Density: `f(x) = beta / (2 alpha Gamma(1/beta)) * exp(-(|x| / alpha)^beta)`.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Lower end of the shape search interval.
pub const BETA_MIN: f64 = 0.1;
/// Upper end of the shape search interval.
pub const BETA_MAX: f64 = 10.0;
const MAX_BISECTIONS: usize = 200;

/// Fitted GGD parameters with their implied second and fourth moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgdParams {
    alpha: f64,
    beta: f64,
    variance: f64,
    kurtosis: f64,
}

impl GgdParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("GGD scale must be positive, got {alpha}")));
        }
        if !(BETA_MIN..=BETA_MAX).contains(&beta) {
            return Err(Error::invalid(format!(
                "GGD shape {beta} outside [{BETA_MIN}, {BETA_MAX}]"
            )));
        }
        let variance = alpha * alpha * (ln_gamma(3.0 / beta) - ln_gamma(1.0 / beta)).exp();
        Ok(Self {
            alpha,
            beta,
            variance,
            kurtosis: ggd_kurtosis(beta),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn kurtosis(&self) -> f64 {
        self.kurtosis
    }

    /// Differential entropy in nats.
    pub fn entropy(&self) -> f64 {
        ggd_entropy(self)
    }
}

/// `1/beta - ln(beta / (2 alpha Gamma(1/beta)))`.
pub fn ggd_entropy(p: &GgdParams) -> f64 {
    1.0 / p.beta - (p.beta / 2.0).ln() + p.alpha.ln() + ln_gamma(1.0 / p.beta)
}

/// `Gamma(1/b) Gamma(5/b) / Gamma(3/b)^2`, strictly decreasing in `b`.
pub fn ggd_kurtosis(beta: f64) -> f64 {
    (ln_gamma(1.0 / beta) + ln_gamma(5.0 / beta) - 2.0 * ln_gamma(3.0 / beta)).exp()
}

/// Solves `ggd_kurtosis(beta) = kurtosis` by bisection on `[BETA_MIN, BETA_MAX]`.
/// Kurtosis values outside the representable range clamp to an endpoint.
pub fn beta_from_kurtosis(kurtosis: f64) -> f64 {
    if kurtosis.is_nan() || kurtosis >= ggd_kurtosis(BETA_MIN) {
        return BETA_MIN;
    }
    if kurtosis <= ggd_kurtosis(BETA_MAX) {
        return BETA_MAX;
    }
    // Bisect in log(beta); kurtosis spans several decades near BETA_MIN.
    let (mut lo, mut hi) = (BETA_MIN.ln(), BETA_MAX.ln());
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ggd_kurtosis(mid.exp()) > kurtosis {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

/// Kurtosis matching from precomputed moments.
pub fn fit_ggd_from_moments(variance: f64, kurtosis: f64) -> Result<GgdParams> {
    if !(variance > 0.0) || !variance.is_finite() {
        return Err(Error::Degenerate);
    }
    let beta = beta_from_kurtosis(kurtosis);
    let alpha = (variance * (ln_gamma(1.0 / beta) - ln_gamma(3.0 / beta)).exp()).sqrt();
    GgdParams::new(alpha, beta)
}

/// Central second moment and normalized fourth moment (population estimators).
pub fn sample_moments(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for &x in samples {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    let kurt = if m2 > 0.0 { m4 / (m2 * m2) } else { f64::NAN };
    (m2, kurt)
}

/// Fits a GGD to `samples` by matching the sample kurtosis.
pub fn fit_ggd_kurtosis_match(samples: &[f64]) -> Result<GgdParams> {
    if samples.len() < 4 {
        return Err(Error::TooFewSamples {
            min: 4,
            got: samples.len(),
        });
    }
    let (variance, kurtosis) = sample_moments(samples);
    fit_ggd_from_moments(variance, kurtosis)
}

/// Refits the GGD after adding independent `N(0, noise_variance)`.
///
/// Moments of the sum are exact for independent variables; only the final
/// GGD refit is an approximation.
pub fn apply_neural_noise(p: &GgdParams, noise_variance: f64) -> Result<GgdParams> {
    if noise_variance < 0.0 || !noise_variance.is_finite() {
        return Err(Error::invalid(format!("noise variance {noise_variance}")));
    }
    if noise_variance == 0.0 {
        return Ok(*p);
    }
    let (total, kurt_out) = noisy_moments(p.variance, p.kurtosis, noise_variance);
    fit_ggd_from_moments(total, kurt_out)
}

// Variance and kurtosis of X + N for independent zero-mean X and Gaussian N.
pub(crate) fn noisy_moments(variance: f64, kurtosis: f64, noise_variance: f64) -> (f64, f64) {
    if noise_variance == 0.0 {
        return (variance, kurtosis);
    }
    let total = variance + noise_variance;
    let k = (kurtosis * variance * variance
        + 6.0 * variance * noise_variance
        + 3.0 * noise_variance * noise_variance)
        / (total * total);
    (total, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, PI, SQRT_2};

    #[test]
    fn entropy_closed_forms() {
        let gauss = GgdParams::new(1.0, 2.0).unwrap();
        assert_relative_eq!(ggd_entropy(&gauss), 0.5 + PI.sqrt().ln(), epsilon = 1e-12);
        assert_relative_eq!(ggd_entropy(&gauss), 1.0723649429247, epsilon = 1e-9);
        let lap = GgdParams::new(1.0, 1.0).unwrap();
        assert_relative_eq!(ggd_entropy(&lap), 1.0 + LN_2, epsilon = 1e-12);
        let lap2 = GgdParams::new(2.0, 1.0).unwrap();
        assert_relative_eq!(ggd_entropy(&lap2), 1.0 + 4f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn kurtosis_values() {
        assert_relative_eq!(ggd_kurtosis(2.0), 3.0, epsilon = 1e-12);
        assert_relative_eq!(ggd_kurtosis(1.0), 6.0, epsilon = 1e-12);
        assert_relative_eq!(ggd_kurtosis(0.5), 362880.0 / 14400.0, epsilon = 1e-9);
    }

    #[test]
    fn kurtosis_strictly_decreasing() {
        let mut prev = f64::INFINITY;
        for i in 0..=2000 {
            let b = BETA_MIN + (BETA_MAX - BETA_MIN) * i as f64 / 2000.0;
            let k = ggd_kurtosis(b);
            assert!(k < prev, "not decreasing at beta={b}");
            prev = k;
        }
    }

    #[test]
    fn moment_inversion() {
        let g = fit_ggd_from_moments(1.0, 3.0).unwrap();
        assert_relative_eq!(g.beta(), 2.0, epsilon = 1e-6);
        assert_relative_eq!(g.alpha(), SQRT_2, epsilon = 1e-6);
        let l = fit_ggd_from_moments(1.0, 6.0).unwrap();
        assert_relative_eq!(l.beta(), 1.0, epsilon = 1e-6);
        assert_relative_eq!(l.alpha(), 0.5f64.sqrt(), epsilon = 1e-6);
        let g4 = fit_ggd_from_moments(4.0, 3.0).unwrap();
        assert_relative_eq!(g4.alpha(), 2.0 * SQRT_2, epsilon = 1e-6);
        assert_relative_eq!(g4.beta(), 2.0, epsilon = 1e-6);
    }

    #[test]
    fn bisection_residual() {
        for &k in &[1.9, 2.5, 3.0, 4.2, 6.0, 25.2, 300.0] {
            let b = beta_from_kurtosis(k);
            assert!((ggd_kurtosis(b) - k).abs() < 1e-8 * k.max(1.0), "k={k}");
        }
    }

    #[test]
    fn out_of_range_kurtosis_clamps() {
        assert_eq!(beta_from_kurtosis(1.0), BETA_MAX);
        assert_eq!(beta_from_kurtosis(1e12), BETA_MIN);
        assert_eq!(beta_from_kurtosis(f64::NAN), BETA_MIN);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_ggd_kurtosis_match(&[3.0; 10]), Err(Error::Degenerate)));
        assert!(matches!(
            fit_ggd_kurtosis_match(&[1.0, 2.0, 3.0]),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(fit_ggd_from_moments(0.0, 3.0), Err(Error::Degenerate)));
        assert!(matches!(fit_ggd_from_moments(-1.0, 3.0), Err(Error::Degenerate)));
    }

    #[test]
    fn neural_noise_identity_and_limits() {
        let p = fit_ggd_from_moments(1.0, 6.0).unwrap();
        let same = apply_neural_noise(&p, 0.0).unwrap();
        assert_relative_eq!(same.alpha(), p.alpha(), epsilon = 1e-9);
        assert_relative_eq!(same.beta(), p.beta(), epsilon = 1e-9);

        let noisy = apply_neural_noise(&p, 1.0).unwrap();
        assert_relative_eq!(noisy.variance(), 2.0, epsilon = 1e-9);
        assert_relative_eq!(noisy.kurtosis(), 3.75, epsilon = 1e-7);

        let swamped = apply_neural_noise(&p, 1e6).unwrap();
        assert_relative_eq!(swamped.beta(), 2.0, epsilon = 1e-3);
    }

    #[test]
    fn neural_noise_moment_formula_matches_monte_carlo() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        // Laplace(0, b) with variance 1: b = 1/sqrt(2), kurtosis 6.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let exp = rand_distr::Exp1;
        let n = 400_000;
        let samples: Vec<f64> = (0..n)
            .map(|_| {
                let e: f64 = exp.sample(&mut rng);
                let sign = if rand::Rng::random::<bool>(&mut rng) { 1.0 } else { -1.0 };
                sign * e / SQRT_2 + normal.sample(&mut rng)
            })
            .collect();
        let (var, kurt) = sample_moments(&samples);
        assert!((var - 2.0).abs() < 0.03, "var {var}");
        assert!((kurt - 3.75).abs() < 0.1, "kurt {kurt}");
    }

    proptest! {
        #[test]
        fn entropy_scale_law(alpha in 1e-3f64..1e3, beta in BETA_MIN..BETA_MAX) {
            let a = GgdParams::new(alpha, beta).unwrap();
            let one = GgdParams::new(1.0, beta).unwrap();
            prop_assert!((ggd_entropy(&a) - ggd_entropy(&one) - alpha.ln()).abs() < 1e-9);
        }

        #[test]
        fn moment_round_trip(alpha in 1e-2f64..1e2, beta in 0.2f64..8.0) {
            let p = GgdParams::new(alpha, beta).unwrap();
            let q = fit_ggd_from_moments(p.variance(), p.kurtosis()).unwrap();
            prop_assert!((q.alpha() / p.alpha() - 1.0).abs() < 1e-6);
            prop_assert!((q.beta() / p.beta() - 1.0).abs() < 1e-6);
        }

        #[test]
        fn noise_never_shrinks_variance(var in 1e-3f64..1e3, kurt in 3.0f64..50.0, nv in 0.0f64..100.0) {
            let p = fit_ggd_from_moments(var, kurt).unwrap();
            let q = apply_neural_noise(&p, nv).unwrap();
            prop_assert!(q.variance() >= p.variance() * (1.0 - 1e-12));
            prop_assert!(q.kurtosis() >= 3.0 - 1e-6);
            prop_assert!(q.kurtosis() <= p.kurtosis() + 1e-6);
        }
    }
}
