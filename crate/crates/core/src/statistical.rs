//! Statistical exposure: the probability that a random user of an `n`-row
//! database drawn i.i.d. from `p` is less than `k`-anonymous,
//!
//! `Q_p(n, k) = Σ_i p_i · F(k−2; n−1, p_i)`
//!
//! where `F` is the binomial CDF (equivalently `I_{1−p_i}(n−k+1, k−1)`).

use crate::distribution::DiscreteDistribution;
use crate::error::{invalid, Result};

/// `P(X ≤ x)` for `X ~ Bin(trials, p)`, summing the `x + 1` lower terms with
/// log-space coefficients. Intended for small `x`; accuracy is about 1e-10
/// relative for `trials ≤ 10^6`, `x ≤ 64`.
pub fn binomial_cdf(x: u64, trials: u64, p: f64) -> f64 {
    if x >= trials || p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return 0.0;
    }
    let ln_p = p.ln();
    let ln_q = (-p).ln_1p();
    let mut ln_coef = 0.0;
    let mut sum = 0.0;
    let mut comp = 0.0;
    for j in 0..=x {
        if j > 0 {
            ln_coef += ((trials - j + 1) as f64).ln() - (j as f64).ln();
        }
        let term = (ln_coef + j as f64 * ln_p + (trials - j) as f64 * ln_q).exp();
        // Neumaier summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    (sum + comp).min(1.0)
}

/// Statistical exposure of probability vector `probs`.
pub fn statistical_exposure_probs(probs: &[f64], n: u64, k: u64) -> Result<f64> {
    if n == 0 {
        return Err(invalid("n", "database size must be at least 1"));
    }
    if k == 0 || k > n {
        return Err(invalid("k", format!("{k} is outside [1, {n}]")));
    }
    if k == 1 {
        return Ok(0.0);
    }
    let q: f64 = probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * binomial_cdf(k - 2, n - 1, p))
        .sum();
    Ok(q.clamp(0.0, 1.0))
}

pub fn statistical_exposure(dist: &DiscreteDistribution, n: u64, k: u64) -> Result<f64> {
    statistical_exposure_probs(&dist.probabilities(), n, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use statrs::function::beta::beta_reg;

    #[test]
    fn k_one_is_zero() {
        let d = DiscreteDistribution::from_probs(&[0.5, 0.3, 0.2]).unwrap();
        for n in 1..20 {
            assert_eq!(statistical_exposure(&d, n, 1).unwrap(), 0.0);
        }
    }

    #[test]
    fn k_two_closed_form() {
        // Σ p_i (1 − p_i)^{n−1}
        let d = DiscreteDistribution::from_probs(&[0.5, 0.5]).unwrap();
        assert!((statistical_exposure(&d, 2, 2).unwrap() - 0.5).abs() < 1e-15);
        let p = [0.5, 0.3, 0.2];
        let d = DiscreteDistribution::from_probs(&p).unwrap();
        let want: f64 = p.iter().map(|p| p * (1.0 - p).powi(31)).sum();
        assert!((statistical_exposure(&d, 32, 2).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn domain_errors() {
        let d = DiscreteDistribution::uniform(3).unwrap();
        assert!(statistical_exposure(&d, 0, 1).is_err());
        assert!(statistical_exposure(&d, 5, 0).is_err());
        assert!(statistical_exposure(&d, 5, 6).is_err());
    }

    #[test]
    fn point_mass_edges() {
        assert_eq!(binomial_cdf(3, 10, 0.0), 1.0);
        assert_eq!(binomial_cdf(3, 10, 1.0), 0.0);
        assert_eq!(binomial_cdf(10, 10, 1.0), 1.0);
        let d = DiscreteDistribution::from_probs(&[1.0, 0.0]).unwrap();
        assert_eq!(statistical_exposure(&d, 10, 10).unwrap(), 0.0);
        // a single user is always less than 2-anonymous... but k ≤ n forbids it
        assert!(statistical_exposure(&d, 1, 2).is_err());
    }

    #[test]
    fn agrees_with_regularized_incomplete_beta() {
        for &(n, p) in &[(32u64, 0.2), (100, 0.01), (1000, 0.3), (1_000_000, 1e-5), (64, 0.9)] {
            for k in 2..=n.min(64) {
                let ours = binomial_cdf(k - 2, n - 1, p);
                let beta = beta_reg((n - k + 1) as f64, (k - 1) as f64, 1.0 - p);
                let tol = 1e-8 * beta.abs() + 1e-14;
                assert!(
                    (ours - beta).abs() <= tol,
                    "n={n} k={k} p={p}: {ours} vs {beta}"
                );
            }
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn matches_high_precision_values() {
        // 50-digit reference values
        let cases = [
            (1, 999_999, 0.00001, 0.000_499_383_337_547_359_757_18),
            (62, 999_999, 0.00005, 0.957_613_716_457_601_313_42),
            (30, 127, 0.25, 0.405_206_954_544_733_311_86),
            (6, 31, 0.2, 0.571_078_423_298_656_602_69),
            (62, 255, 0.1, 0.999_999_999_988_352_881_62),
            (0, 9, 0.5, 0.001_953_125),
        ];
        for (x, m, p, want) in cases {
            let got = binomial_cdf(x, m, p);
            assert!((got - want).abs() <= 1e-10 * want, "x={x} m={m} p={p}: {got} vs {want}");
        }
    }

    proptest! {
        #[test]
        fn monotone_in_k_and_n(w in prop::collection::vec(0.01f64..1.0, 1..6), n in 2u64..80) {
            let s: f64 = w.iter().sum();
            let p: Vec<f64> = w.iter().map(|x| x / s).collect();
            let mut prev = 0.0;
            for k in 1..=n {
                let q = statistical_exposure_probs(&p, n, k).unwrap();
                prop_assert!((0.0..=1.0).contains(&q));
                prop_assert!(q + 1e-12 >= prev);
                prev = q;
            }
            for k in 2..=n {
                let a = statistical_exposure_probs(&p, n, k).unwrap();
                let b = statistical_exposure_probs(&p, n + 1, k).unwrap();
                prop_assert!(b <= a + 1e-12);
            }
        }
    }
}
