//! Exposure `Q(t) = Σ_v p(v)·1{p(v) < t}`: the fraction of users whose
//! value has probability strictly below `t`, i.e. who are less than
//! `(t·n)`-anonymous.

use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::distribution::{DiscreteDistribution, Masses};
use crate::error::{invalid, Result};
use crate::rational::Rational;

fn check_threshold(t: &Rational) -> Result<()> {
    if !t.is_probability() {
        return Err(invalid("t", format!("{t} is outside [0, 1]")));
    }
    Ok(())
}

/// Exact exposure of `dist` at threshold `t`.
pub fn exposure_exact(dist: &DiscreteDistribution, t: &Rational) -> Result<Rational> {
    check_threshold(t)?;
    Ok(match dist.masses() {
        Masses::Counts { counts, total } => {
            let below: u64 = counts
                .iter()
                .filter(|&&c| t.exceeds_fraction(c, *total))
                .sum();
            Rational::ratio(below, *total)?
        }
        Masses::Probabilities(p) => {
            let mut sum = BigRational::zero();
            for &m in p {
                if t.exceeds_f64(m) {
                    sum += BigRational::from_float(m).expect("finite mass");
                }
            }
            Rational::from(sum)
        }
    })
}

/// Exposure rounded to the nearest `f64`.
pub fn exposure(dist: &DiscreteDistribution, t: &Rational) -> Result<f64> {
    exposure_exact(dist, t).map(|q| q.to_f64())
}

/// Number of rows whose value has multiplicity `< k`, for an empirical
/// distribution (exposure at `t = k/n` times `n`).
pub fn rows_less_than_k_anonymous(counts: &[u64], k: u64) -> u64 {
    counts.iter().filter(|&&c| c < k).sum()
}

#[derive(Clone, Debug, PartialEq)]
enum Steps {
    /// Distinct count levels with the number of rows at each level.
    Counts {
        total: u64,
        levels: Vec<u64>,
        rows_at: Vec<u64>,
        rows_below: Vec<u64>,
    },
    /// Distinct real levels with exact cumulative mass strictly below each.
    Reals {
        levels: Vec<f64>,
        mass_at: Vec<f64>,
        exact_levels: Vec<BigRational>,
        mass_below: Vec<BigRational>,
        total_mass: BigRational,
    },
}

/// The step function `t ↦ Q(t)` of a distribution, stored as its distinct
/// probability levels and the mass sitting at each level.
#[derive(Clone, Debug, PartialEq)]
pub struct ExposureCurve {
    steps: Steps,
    support_size: usize,
}

/// One step of an exposure curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveStep {
    pub level: f64,
    pub mass: f64,
}

impl ExposureCurve {
    pub fn new(dist: &DiscreteDistribution) -> Self {
        let support_size = dist.len();
        let steps = match dist.masses() {
            Masses::Counts { counts, total } => {
                let mut sorted = counts.clone();
                sorted.sort_unstable();
                let mut levels = Vec::new();
                let mut rows_at: Vec<u64> = Vec::new();
                for c in sorted {
                    if levels.last() == Some(&c) {
                        *rows_at.last_mut().unwrap() += c;
                    } else {
                        levels.push(c);
                        rows_at.push(c);
                    }
                }
                let mut rows_below = Vec::with_capacity(levels.len());
                let mut acc = 0;
                for r in &rows_at {
                    rows_below.push(acc);
                    acc += r;
                }
                Steps::Counts {
                    total: *total,
                    levels,
                    rows_at,
                    rows_below,
                }
            }
            Masses::Probabilities(p) => {
                let mut sorted: Vec<f64> = p.iter().copied().filter(|m| *m > 0.0).collect();
                sorted.sort_by(f64::total_cmp);
                let mut levels: Vec<f64> = Vec::new();
                let mut exact_at: Vec<BigRational> = Vec::new();
                for m in sorted {
                    let exact = BigRational::from_float(m).expect("finite mass");
                    if levels.last() == Some(&m) {
                        *exact_at.last_mut().unwrap() += exact;
                    } else {
                        levels.push(m);
                        exact_at.push(exact);
                    }
                }
                let mut mass_below = Vec::with_capacity(levels.len());
                let mut acc = BigRational::zero();
                for e in &exact_at {
                    mass_below.push(acc.clone());
                    acc += e;
                }
                let mass_at = exact_at
                    .iter()
                    .map(|e| Rational::from(e.clone()).to_f64())
                    .collect();
                let exact_levels = levels
                    .iter()
                    .map(|&l| BigRational::from_float(l).expect("finite level"))
                    .collect();
                Steps::Reals {
                    levels,
                    mass_at,
                    exact_levels,
                    mass_below,
                    total_mass: acc,
                }
            }
        };
        ExposureCurve {
            steps,
            support_size,
        }
    }

    /// Number of values of the underlying distribution, `|V|`.
    pub fn support_size(&self) -> usize {
        self.support_size
    }

    pub fn is_empirical(&self) -> bool {
        matches!(self.steps, Steps::Counts { .. })
    }

    pub fn total(&self) -> Option<u64> {
        match &self.steps {
            Steps::Counts { total, .. } => Some(*total),
            Steps::Reals { .. } => None,
        }
    }

    pub fn n_levels(&self) -> usize {
        match &self.steps {
            Steps::Counts { levels, .. } => levels.len(),
            Steps::Reals { levels, .. } => levels.len(),
        }
    }

    /// Breakpoints (distinct positive probability levels), ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.steps().iter().map(|s| s.level).collect()
    }

    /// Breakpoints as exact rationals, ascending.
    pub fn exact_breakpoints(&self) -> Vec<Rational> {
        match &self.steps {
            Steps::Counts { total, levels, .. } => levels
                .iter()
                .map(|&c| Rational::ratio(c, *total).expect("nonzero total"))
                .collect(),
            Steps::Reals { exact_levels, .. } => {
                exact_levels.iter().cloned().map(Rational::from).collect()
            }
        }
    }

    pub fn steps(&self) -> Vec<CurveStep> {
        match &self.steps {
            Steps::Counts {
                total,
                levels,
                rows_at,
                ..
            } => levels
                .iter()
                .zip(rows_at)
                .map(|(&l, &r)| CurveStep {
                    level: l as f64 / *total as f64,
                    mass: r as f64 / *total as f64,
                })
                .collect(),
            Steps::Reals {
                levels, mass_at, ..
            } => levels
                .iter()
                .zip(mass_at)
                .map(|(&level, &mass)| CurveStep { level, mass })
                .collect(),
        }
    }

    /// Number of levels strictly below `t`.
    fn levels_below(&self, t: &Rational) -> usize {
        match &self.steps {
            Steps::Counts { total, levels, .. } => {
                levels.partition_point(|&c| t.exceeds_fraction(c, *total))
            }
            Steps::Reals { exact_levels, .. } => {
                exact_levels.partition_point(|l| l < t.as_big())
            }
        }
    }

    /// Exact `Q(t)`. Thresholds above every level give the full mass; any
    /// nonnegative `t` is accepted.
    pub fn eval_exact(&self, t: &Rational) -> Rational {
        let i = self.levels_below(t);
        match &self.steps {
            Steps::Counts {
                total,
                rows_at,
                rows_below,
                ..
            } => {
                let below = if i == rows_at.len() {
                    *total
                } else {
                    rows_below[i]
                };
                Rational::ratio(below, *total).expect("nonzero total")
            }
            Steps::Reals {
                mass_below,
                total_mass,
                ..
            } => {
                if i == mass_below.len() {
                    Rational::from(total_mass.clone())
                } else {
                    Rational::from(mass_below[i].clone())
                }
            }
        }
    }

    pub fn eval(&self, t: &Rational) -> f64 {
        self.eval_exact(t).to_f64()
    }

    /// `Q(t)` for an `f64` threshold, converted exactly.
    pub fn eval_f64(&self, t: f64) -> f64 {
        if t.is_nan() || t <= 0.0 {
            return 0.0;
        }
        if t.is_infinite() {
            return self.eval(&Rational::from_integer(2));
        }
        self.eval(&Rational::from_f64(t).expect("finite threshold"))
    }

    /// Rows strictly below `t` for an empirical curve.
    pub fn rows_below(&self, t: &Rational) -> Option<u64> {
        match &self.steps {
            Steps::Counts {
                total,
                rows_below,
                ..
            } => {
                let i = self.levels_below(t);
                Some(if i == rows_below.len() {
                    *total
                } else {
                    rows_below[i]
                })
            }
            Steps::Reals { .. } => None,
        }
    }

    /// `∫₀¹ Q(t)/t dt` evaluated in closed form over the steps: on each
    /// interval `(ℓ_i, ℓ_{i+1}]` the curve is constant, contributing
    /// `Q·ln(ℓ_{i+1}/ℓ_i)`.
    pub fn entropy_integral(&self) -> f64 {
        let steps = self.steps();
        let mut cumulative = 0.0;
        let mut integral = 0.0;
        for (i, s) in steps.iter().enumerate() {
            cumulative += s.mass;
            let upper = steps.get(i + 1).map_or(1.0, |n| n.level);
            if upper > s.level {
                integral += cumulative * (upper / s.level).ln();
            }
        }
        integral
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::ValueId;

    fn r(n: u64, d: u64) -> Rational {
        Rational::ratio(n, d).unwrap()
    }

    fn dist532() -> DiscreteDistribution {
        DiscreteDistribution::from_probs(&[0.5, 0.3, 0.2]).unwrap()
    }

    #[test]
    fn strict_inequality_at_atoms() {
        let d = dist532();
        let q = exposure(&d, &Rational::from_f64(0.25).unwrap()).unwrap();
        assert!((q - 0.2).abs() < 1e-15);
        assert_eq!(exposure(&d, &Rational::from_f64(0.2).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn uniform_has_no_mass_below_its_level() {
        let m = 7;
        let d = DiscreteDistribution::from_counts(
            (0..m).map(|i| ValueId::single(i.to_string())).collect(),
            vec![3; m],
        )
        .unwrap();
        for k in 0..=3 {
            assert_eq!(exposure(&d, &r(k, 21)).unwrap(), 0.0);
        }
        assert_eq!(exposure(&d, &r(1, 1)).unwrap(), 1.0);
    }

    #[test]
    fn rejects_thresholds_outside_unit_interval() {
        let d = dist532();
        assert!(exposure(&d, &r(3, 2)).is_err());
        assert!(exposure(&d, &Rational::from_f64(-0.1).unwrap()).is_err());
    }

    #[test]
    fn two_point_curve() {
        let c = ExposureCurve::new(&DiscreteDistribution::from_probs(&[0.5, 0.5]).unwrap());
        assert_eq!(c.breakpoints(), vec![0.5]);
        assert_eq!(c.eval_f64(0.5), 0.0);
        assert_eq!(c.eval_f64(0.3), 0.0);
        assert_eq!(c.eval_f64(0.500001), 1.0);
    }

    #[test]
    fn curve_levels_532() {
        let c = ExposureCurve::new(&dist532());
        assert!((c.eval_f64(0.25) - 0.2).abs() < 1e-15);
        assert!((c.eval_f64(0.35) - 0.5).abs() < 1e-15);
        assert!((c.eval_f64(0.6) - 1.0).abs() < 1e-15);
        assert_eq!(c.support_size(), 3);
    }

    #[test]
    fn empirical_curve_counts() {
        let d = DiscreteDistribution::from_counts(
            (0..4).map(|i| ValueId::single(i.to_string())).collect(),
            vec![1, 1, 2, 6],
        )
        .unwrap();
        let c = ExposureCurve::new(&d);
        assert_eq!(c.breakpoints(), vec![0.1, 0.2, 0.6]);
        assert_eq!(c.rows_below(&r(2, 10)), Some(2));
        assert_eq!(c.rows_below(&r(3, 10)), Some(4));
        assert_eq!(c.rows_below(&r(1, 1)), Some(10));
        assert_eq!(c.eval_exact(&r(1, 10)), Rational::zero());
    }

    #[test]
    fn entropy_integral_of_two_point() {
        let c = ExposureCurve::new(&DiscreteDistribution::from_probs(&[0.5, 0.5]).unwrap());
        assert!((c.entropy_integral() - std::f64::consts::LN_2).abs() < 1e-15);
    }
}
