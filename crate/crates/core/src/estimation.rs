//! Sample-size and error bounds for estimating exposure from data, the
//! two-distribution construction showing small thresholds cannot be
//! estimated, and the estimator-variance experiment.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::{DiscreteDistribution, ValueId};
use crate::error::{invalid, Result};
use crate::exposure::{rows_less_than_k_anonymous, ExposureCurve};
use crate::rational::Rational;
use crate::statistical::{statistical_exposure, statistical_exposure_probs};

fn check_open_unit(name: &'static str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return Err(invalid(name, format!("{x} is outside (0, 1)")));
    }
    Ok(())
}

/// Samples needed so the plug-in interval holds with probability `1 − δ`:
/// `⌈(ln(1/δ) + ln|V|) / (2γ²)⌉`, at least 1.
pub fn required_sample_size(gamma: f64, delta: f64, support_size: usize) -> Result<u64> {
    check_open_unit("gamma", gamma)?;
    check_open_unit("delta", delta)?;
    if support_size == 0 {
        return Err(invalid("support_size", "must be at least 1"));
    }
    let n = ((1.0 / delta).ln() + (support_size as f64).ln()) / (2.0 * gamma * gamma);
    Ok((n.ceil() as u64).max(1))
}

/// Slack `γ` achieved by `n` samples at failure probability `δ`; the
/// inverse of [`required_sample_size`] before rounding.
pub fn hoeffding_slack(n: u64, delta: f64, support_size: usize) -> Result<f64> {
    check_open_unit("delta", delta)?;
    if n == 0 || support_size == 0 {
        return Err(invalid("n", "sample and support sizes must be positive"));
    }
    Ok((((1.0 / delta).ln() + (support_size as f64).ln()) / (2.0 * n as f64)).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExposureInterval {
    pub lower: f64,
    pub upper: f64,
    pub gamma: f64,
    /// Failure probability, when the interval was built from a sample size.
    pub delta: Option<f64>,
    pub support_size: usize,
}

impl ExposureInterval {
    pub fn contains(&self, q: f64) -> bool {
        self.lower <= q && q <= self.upper
    }
}

fn curve_at_clamped(curve: &ExposureCurve, t: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else if t > 1.0 {
        1.0
    } else {
        curve.eval_f64(t)
    }
}

/// `[Q̂(t−γ) − γ|V|, Q̂(t+γ) + γ|V|]` clipped to `[0, 1]`.
pub fn plugin_exposure_interval(
    emp_curve: &ExposureCurve,
    t: f64,
    gamma: f64,
    support_size: usize,
) -> Result<ExposureInterval> {
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid("t", format!("{t} is outside [0, 1]")));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(invalid("gamma", format!("{gamma} is outside [0, 1)")));
    }
    if support_size == 0 {
        return Err(invalid("support_size", "must be at least 1"));
    }
    let slack = gamma * support_size as f64;
    let lower = (curve_at_clamped(emp_curve, t - gamma) - slack).max(0.0);
    let upper = (curve_at_clamped(emp_curve, t + gamma) + slack).min(1.0);
    Ok(ExposureInterval {
        lower,
        upper,
        gamma,
        delta: None,
        support_size,
    })
}

/// Lipschitz constant of statistical exposure in `‖p − p̂‖_∞`:
/// `|V|·(√(e(n+1)) / (2√(|V|−1)) + 1)`.
pub fn statistical_exposure_error_constant(n: u64, support_size: usize) -> Result<f64> {
    if support_size < 2 {
        return Err(invalid("support_size", "must be at least 2"));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    let v = support_size as f64;
    let e = std::f64::consts::E;
    Ok(v * ((e * (n as f64 + 1.0)).sqrt() / (2.0 * (v - 1.0).sqrt()) + 1.0))
}

/// Uniform-in-`k` bound on `|Q_p(n,k) − Q_p̂(n,k)|`.
pub fn statistical_exposure_error_bound(n: u64, support_size: usize, linf_error: f64) -> Result<f64> {
    if linf_error.is_nan() || linf_error < 0.0 {
        return Err(invalid("linf_error", format!("{linf_error} is negative")));
    }
    Ok(statistical_exposure_error_constant(n, support_size)? * linf_error)
}

/// Two distributions that are hard to tell apart from `n` samples yet
/// differ in exposure at `q` by about `1/s`.
///
/// `p0` has `s` atoms of mass `1/s² − ε` and a remainder; `p1` has `s`
/// atoms of mass `1/s²` and a remainder; `ε = (s−1)/(s²n)` and
/// `q = 1/s² − ε/2`.
#[derive(Clone, Debug)]
pub struct LeCamPair {
    pub s: u64,
    pub n: u64,
    pub epsilon: Rational,
    pub q: Rational,
    pub p0_masses: Vec<Rational>,
    pub p1_masses: Vec<Rational>,
}

pub fn lecam_hard_pair(s: u64, n: u64) -> Result<LeCamPair> {
    if s < 2 {
        return Err(invalid("s", "must be at least 2"));
    }
    if n == 0 {
        return Err(invalid("n", "must be at least 1"));
    }
    if n < s - 1 {
        return Err(invalid(
            "n",
            format!("atoms of p0 would be negative: need n ≥ s − 1 = {}", s - 1),
        ));
    }
    let s2 = s * s;
    let epsilon = Rational::ratio(s - 1, s2 * n)?;
    let atom1 = Rational::ratio(1, s2)?;
    let atom0 = &atom1 - &epsilon;
    let s_r = Rational::from_integer(s);
    let rest1 = Rational::ratio(s - 1, s)?;
    let rest0 = &Rational::one() - &(&s_r * &atom0);
    let q = &atom1 - &(&epsilon * &Rational::ratio(1, 2)?);
    let mut p0_masses = vec![atom0; s as usize];
    p0_masses.push(rest0);
    let mut p1_masses = vec![atom1; s as usize];
    p1_masses.push(rest1);
    Ok(LeCamPair {
        s,
        n,
        epsilon,
        q,
        p0_masses,
        p1_masses,
    })
}

fn exact_exposure(masses: &[Rational], t: &Rational) -> Rational {
    masses
        .iter()
        .filter(|m| *m < t)
        .fold(Rational::zero(), |acc, m| &acc + m)
}

fn to_distribution(masses: &[Rational]) -> Result<DiscreteDistribution> {
    let values = (0..masses.len())
        .map(|i| {
            if i + 1 == masses.len() {
                ValueId::single("rest")
            } else {
                ValueId::single(format!("atom{i}"))
            }
        })
        .collect();
    DiscreteDistribution::from_probabilities(values, masses.iter().map(Rational::to_f64).collect())
}

impl LeCamPair {
    pub fn p0(&self) -> Result<DiscreteDistribution> {
        to_distribution(&self.p0_masses)
    }

    pub fn p1(&self) -> Result<DiscreteDistribution> {
        to_distribution(&self.p1_masses)
    }

    pub fn exposure_p0(&self) -> Rational {
        exact_exposure(&self.p0_masses, &self.q)
    }

    pub fn exposure_p1(&self) -> Rational {
        exact_exposure(&self.p1_masses, &self.q)
    }

    pub fn exposure_gap(&self) -> Rational {
        let (a, b) = (self.exposure_p0(), self.exposure_p1());
        if a >= b {
            &a - &b
        } else {
            &b - &a
        }
    }

    /// `KL(p0 ‖ p1)` in nats.
    pub fn kl_divergence(&self) -> f64 {
        self.p0_masses
            .iter()
            .zip(&self.p1_masses)
            .filter(|(a, _)| !a.is_zero())
            .map(|(a, b)| {
                let (a, b) = (a.to_f64(), b.to_f64());
                a * (a / b).ln()
            })
            .sum::<f64>()
            .max(0.0)
    }

    /// `ln 2 / n`.
    pub fn kl_bound(&self) -> f64 {
        std::f64::consts::LN_2 / self.n as f64
    }

    /// `2s²ε/(s−1)`, the intermediate bound before substituting `ε`.
    pub fn kl_bound_epsilon(&self) -> f64 {
        let s = self.s as f64;
        2.0 * s * s * self.epsilon.to_f64() / (s - 1.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub k_grid: Vec<u64>,
    pub mean_exposure: Vec<f64>,
    pub std_exposure: Vec<f64>,
    pub mean_statexp: Vec<f64>,
    pub std_statexp: Vec<f64>,
    pub truth: Vec<f64>,
    pub trials: usize,
    pub n_users: u64,
    pub seed: u64,
}

impl EstimatorSummary {
    pub const CSV_HEADER: [&'static str; 6] = [
        "k",
        "mean_exposure",
        "std_exposure",
        "mean_statexp",
        "std_statexp",
        "truth",
    ];

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::CSV_HEADER)?;
        for i in 0..self.k_grid.len() {
            w.write_record([
                self.k_grid[i].to_string(),
                self.mean_exposure[i].to_string(),
                self.std_exposure[i].to_string(),
                self.mean_statexp[i].to_string(),
                self.std_statexp[i].to_string(),
                self.truth[i].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Number of grid points where the statistical-exposure estimator has
    /// strictly smaller spread than the exposure estimator.
    pub fn lower_variance_count(&self) -> usize {
        self.std_statexp
            .iter()
            .zip(&self.std_exposure)
            .filter(|(s, e)| s < e)
            .count()
    }
}

/// Per-trial generator: the seed selects the key, the trial index the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn mean_std(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Repeatedly samples `n_users` rows from `true_dist` and records, for each
/// `k`, the plug-in exposure at `k/n` and the plug-in statistical exposure.
/// Standard deviations are population (divide by `trials`).
pub fn simulate_estimators(
    true_dist: &DiscreteDistribution,
    n_users: u64,
    k_grid: &[u64],
    trials: usize,
    seed: u64,
) -> Result<EstimatorSummary> {
    if trials == 0 {
        return Err(invalid("trials", "must be at least 1"));
    }
    if n_users == 0 {
        return Err(invalid("n_users", "must be at least 1"));
    }
    if let Some(k) = k_grid.iter().find(|&&k| k == 0 || k > n_users) {
        return Err(invalid("k_grid", format!("{k} is outside [1, {n_users}]")));
    }
    let per_trial: Vec<Vec<(f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial as u64);
            let counts = true_dist.sample_counts(n_users as usize, &mut rng);
            let probs: Vec<f64> = counts
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| c as f64 / n_users as f64)
                .collect();
            k_grid
                .iter()
                .map(|&k| {
                    let exp = rows_less_than_k_anonymous(&counts, k) as f64 / n_users as f64;
                    let stat = statistical_exposure_probs(&probs, n_users, k)?;
                    Ok((exp, stat))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut summary = EstimatorSummary {
        k_grid: k_grid.to_vec(),
        mean_exposure: Vec::with_capacity(k_grid.len()),
        std_exposure: Vec::with_capacity(k_grid.len()),
        mean_statexp: Vec::with_capacity(k_grid.len()),
        std_statexp: Vec::with_capacity(k_grid.len()),
        truth: Vec::with_capacity(k_grid.len()),
        trials,
        n_users,
        seed,
    };
    for (i, &k) in k_grid.iter().enumerate() {
        let (m, s) = mean_std(per_trial.iter().map(|t| t[i].0));
        summary.mean_exposure.push(m);
        summary.std_exposure.push(s);
        let (m, s) = mean_std(per_trial.iter().map(|t| t[i].1));
        summary.mean_statexp.push(m);
        summary.std_statexp.push(s);
        summary.truth.push(statistical_exposure(true_dist, n_users, k)?);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: u64, d: u64) -> Rational {
        Rational::ratio(n, d).unwrap()
    }

    #[test]
    fn sample_size_worked_example() {
        let expected = ((20f64).ln() + 9f64.ln()) / 0.005;
        assert!((expected - 1038.59).abs() < 0.01);
        assert_eq!(required_sample_size(0.05, 0.05, 9).unwrap(), 1039);
    }

    #[test]
    fn sample_size_floor_and_errors() {
        assert_eq!(required_sample_size(0.5, 1.0 - 1e-12, 1).unwrap(), 1);
        assert!(required_sample_size(0.0, 0.05, 3).is_err());
        assert!(required_sample_size(0.05, 1.0, 3).is_err());
        assert!(required_sample_size(0.05, 0.05, 0).is_err());
    }

    #[test]
    fn interval_degenerates_at_zero_slack() {
        let d = DiscreteDistribution::from_counts(
            vec![ValueId::single("a"), ValueId::single("b"), ValueId::single("c")],
            vec![5, 3, 2],
        )
        .unwrap();
        let c = ExposureCurve::new(&d);
        let iv = plugin_exposure_interval(&c, 0.25, 0.0, 3).unwrap();
        assert_eq!((iv.lower, iv.upper), (0.2, 0.2));
        let iv = plugin_exposure_interval(&c, 0.25, 0.4, 3).unwrap();
        assert_eq!((iv.lower, iv.upper), (0.0, 1.0));
    }

    #[test]
    fn error_constant() {
        assert!(statistical_exposure_error_bound(10, 1, 0.1).is_err());
        assert_eq!(statistical_exposure_error_bound(10, 3, 0.0).unwrap(), 0.0);
        let c = statistical_exposure_error_constant(99, 4).unwrap();
        let expected = 4.0 * ((100.0 * std::f64::consts::E).sqrt() / (2.0 * 3f64.sqrt()) + 1.0);
        assert!((c - expected).abs() < 1e-12);
    }

    #[test]
    fn lecam_s2_n100() {
        let p = lecam_hard_pair(2, 100).unwrap();
        assert_eq!(p.epsilon, r(1, 400));
        assert_eq!(p.p0_masses, vec![r(99, 400), r(99, 400), r(101, 200)]);
        assert_eq!(p.p1_masses, vec![r(1, 4), r(1, 4), r(1, 2)]);
        assert!(p.exposure_p1().is_zero());
        assert_eq!(p.exposure_p0(), r(99, 200));
        assert_eq!(p.exposure_gap(), r(99, 200));
        let sum = p.p0_masses.iter().fold(Rational::zero(), |a, m| &a + m);
        assert_eq!(sum, Rational::one());
        assert!(p.kl_divergence() <= p.kl_bound());
        assert!(p.kl_divergence() <= p.kl_bound_epsilon());
    }

    #[test]
    fn lecam_boundary() {
        let p = lecam_hard_pair(2, 1).unwrap();
        assert_eq!(p.p0_masses, vec![r(0, 1), r(0, 1), Rational::one()]);
        assert!((p.kl_divergence() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(lecam_hard_pair(5, 3).is_err());
        assert!(lecam_hard_pair(1, 3).is_err());
    }

    #[test]
    fn point_mass_estimators_vanish() {
        let d = DiscreteDistribution::from_probs(&[1.0]).unwrap();
        let s = simulate_estimators(&d, 10, &[1, 5, 10], 1, 3).unwrap();
        assert!(s.mean_exposure.iter().chain(&s.mean_statexp).all(|&x| x == 0.0));
        assert!(s.std_exposure.iter().chain(&s.std_statexp).all(|&x| x == 0.0));
    }

    #[test]
    fn simulation_is_reproducible() {
        let d = DiscreteDistribution::from_probs(&[0.4, 0.3, 0.2, 0.1]).unwrap();
        let grid: Vec<u64> = (2..=16).collect();
        let a = simulate_estimators(&d, 32, &grid, 50, 9).unwrap();
        let b = simulate_estimators(&d, 32, &grid, 50, 9).unwrap();
        assert_eq!(a, b);
        assert!(simulate_estimators(&d, 32, &[33], 5, 9).is_err());
    }
}
