//! The curator's choice of which features are safe to release.

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::composition::{best_bound, BoundCertificate};
use crate::distribution::DiscreteDistribution;
use crate::entropy::entropy_nats;
use crate::error::{invalid, Error, Result};
use crate::estimation::{hoeffding_slack, statistical_exposure_error_constant};
use crate::exposure::ExposureCurve;
use crate::rational::Rational;
use crate::statistical::statistical_exposure_probs;

/// Joint supports above this size are never certified in statistical mode.
pub const MAX_PRODUCT_SUPPORT: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyMode {
    /// The same users take part in both rounds; certify with composition bounds.
    Fixed,
    /// Round two is a fresh cohort; certify with estimation bounds.
    Statistical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityOrder {
    /// Marginal entropy, highest first.
    Entropy,
    /// Table column order.
    Given,
    /// Explicit list of column names; unlisted columns are never released.
    Explicit(Vec<String>),
}

/// Either an anonymity level `k` or a probability threshold `t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    K(u64),
    T(Rational),
}

impl Target {
    /// Threshold for a database of `n` rows.
    pub fn threshold(&self, n: u64) -> Result<Rational> {
        match self {
            Target::K(k) => Rational::ratio(*k, n),
            Target::T(t) => Ok(t.clone()),
        }
    }

    /// `k` such that "count < k" matches "count/n < t", i.e. `⌈t·n⌉`.
    pub fn level(&self, n: u64) -> Result<u64> {
        match self {
            Target::K(k) => Ok(*k),
            Target::T(t) => {
                let scaled = t * &Rational::from_integer(n);
                scaled
                    .as_big()
                    .ceil()
                    .to_integer()
                    .to_u64()
                    .ok_or_else(|| invalid("t", "level does not fit in 64 bits"))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReleasePolicy {
    pub target: Target,
    /// Largest acceptable exposure bound `Q_max`.
    pub budget: f64,
    pub mode: PolicyMode,
    pub utility: UtilityOrder,
    /// Failure probability for statistical certificates.
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    0.05
}

impl ReleasePolicy {
    pub fn fixed(target: Target, budget: f64) -> Self {
        ReleasePolicy {
            target,
            budget,
            mode: PolicyMode::Fixed,
            utility: UtilityOrder::Entropy,
            delta: default_delta(),
        }
    }

    pub fn statistical(target: Target, budget: f64) -> Self {
        ReleasePolicy {
            mode: PolicyMode::Statistical,
            ..Self::fixed(target, budget)
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.budget) {
            return Err(invalid("budget", format!("{} is outside [0, 1]", self.budget)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid("delta", format!("{} is outside (0, 1)", self.delta)));
        }
        match &self.target {
            Target::K(0) => Err(invalid("k", "must be at least 1")),
            Target::T(t) if t.is_zero() || !t.is_probability() => {
                Err(invalid("t", format!("{t} is outside (0, 1]")))
            }
            _ => Ok(()),
        }
    }
}

/// Expected exposure of the next cohort under the product of the round-one
/// marginals, plus the estimation slack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatisticalCertificate {
    pub round_one_size: u64,
    pub round_two_size: u64,
    pub k: u64,
    pub delta: f64,
    /// Per-column sup-norm slack, each at failure probability `δ/|J|`.
    pub gammas: Vec<f64>,
    pub support_sizes: Vec<usize>,
    /// Support of the product distribution, at least 2.
    pub joint_support: usize,
    pub estimate: f64,
    pub constant: f64,
    pub bound: f64,
}

impl StatisticalCertificate {
    pub fn linf_bound(&self) -> f64 {
        self.gammas.iter().sum()
    }

    pub fn slack(&self) -> f64 {
        self.constant * self.linf_bound()
    }

    pub fn reported_bound(&self) -> f64 {
        self.bound.min(1.0)
    }

    /// Recomputes the slack terms and the bound from the recorded estimate.
    pub fn verify(&self) -> bool {
        let m = self.gammas.len();
        if m == 0 {
            return self.bound == 0.0;
        }
        let gammas_ok = self
            .gammas
            .iter()
            .zip(&self.support_sizes)
            .all(|(&g, &v)| hoeffding_slack(self.round_one_size, self.delta / m as f64, v).ok() == Some(g));
        let constant_ok =
            statistical_exposure_error_constant(self.round_two_size, self.joint_support).ok() == Some(self.constant);
        gammas_ok && constant_ok && self.bound == self.estimate + self.slack()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionCertificate {
    Fixed(BoundCertificate),
    Statistical(StatisticalCertificate),
}

impl DecisionCertificate {
    pub fn reported_bound(&self) -> f64 {
        match self {
            DecisionCertificate::Fixed(c) => c.reported_bound(),
            DecisionCertificate::Statistical(c) => c.reported_bound(),
        }
    }

    pub fn verify(&self) -> bool {
        match self {
            DecisionCertificate::Fixed(c) => c.verify(),
            DecisionCertificate::Statistical(c) => c.verify(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReleaseDecision {
    /// Released column indices, ascending.
    pub columns: Vec<usize>,
    pub column_names: Vec<String>,
    pub certificate: DecisionCertificate,
    pub policy: ReleasePolicy,
}

fn utility_order(tallies: &[DiscreteDistribution], names: &[String], utility: &UtilityOrder) -> Result<Vec<usize>> {
    match utility {
        UtilityOrder::Given => Ok((0..tallies.len()).collect()),
        UtilityOrder::Entropy => {
            let mut order: Vec<(f64, usize)> =
                tallies.iter().enumerate().map(|(j, d)| (entropy_nats(d), j)).collect();
            order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            Ok(order.into_iter().map(|(_, j)| j).collect())
        }
        UtilityOrder::Explicit(list) => list
            .iter()
            .map(|n| {
                names
                    .iter()
                    .position(|m| m == n)
                    .ok_or_else(|| Error::UnknownColumn(n.clone()))
            })
            .collect(),
    }
}

fn product_probabilities(tallies: &[&DiscreteDistribution]) -> Option<Vec<f64>> {
    let mut probs = vec![1.0];
    for d in tallies {
        if probs.len().checked_mul(d.len())? > MAX_PRODUCT_SUPPORT {
            return None;
        }
        let marginal = d.probabilities();
        probs = probs
            .iter()
            .flat_map(|p| marginal.iter().map(move |q| p * q))
            .collect();
    }
    Some(probs)
}

fn statistical_certificate(
    tallies: &[&DiscreteDistribution],
    n1: u64,
    n2: u64,
    k: u64,
    delta: f64,
) -> Result<Option<StatisticalCertificate>> {
    let supports: Vec<usize> = tallies.iter().map(|d| d.len()).collect();
    if tallies.is_empty() {
        return Ok(Some(StatisticalCertificate {
            round_one_size: n1,
            round_two_size: n2,
            k,
            delta,
            gammas: Vec::new(),
            support_sizes: Vec::new(),
            joint_support: 1,
            estimate: 0.0,
            constant: 0.0,
            bound: 0.0,
        }));
    }
    let Some(probs) = product_probabilities(tallies) else {
        return Ok(None);
    };
    let m = tallies.len() as f64;
    let gammas = supports
        .iter()
        .map(|&v| hoeffding_slack(n1, delta / m, v))
        .collect::<Result<Vec<_>>>()?;
    let joint_support = probs.len().max(2);
    let estimate = statistical_exposure_probs(&probs, n2, k)?;
    let constant = statistical_exposure_error_constant(n2, joint_support)?;
    let mut cert = StatisticalCertificate {
        round_one_size: n1,
        round_two_size: n2,
        k,
        delta,
        gammas,
        support_sizes: supports,
        joint_support,
        estimate,
        constant,
        bound: 0.0,
    };
    cert.bound = cert.estimate + cert.slack();
    Ok(Some(cert))
}

/// Greedy release: walk the columns in utility order and keep each one
/// whose addition still certifies an exposure of at most the budget.
///
/// `n` is the round-one cohort size; `next_cohort` the size of the round-two
/// cohort (equal to `n` in the fixed setting).
pub fn select_release_set(
    tallies: &[DiscreteDistribution],
    column_names: &[String],
    n: u64,
    next_cohort: u64,
    policy: &ReleasePolicy,
) -> Result<ReleaseDecision> {
    policy.validate()?;
    if tallies.len() != column_names.len() {
        return Err(invalid("column_names", "one name per tally is required"));
    }
    let order = utility_order(tallies, column_names, &policy.utility)?;
    let curves: Vec<ExposureCurve> = tallies.iter().map(ExposureCurve::new).collect();

    let evaluate = |cols: &[usize]| -> Result<Option<DecisionCertificate>> {
        match policy.mode {
            PolicyMode::Fixed => {
                if cols.is_empty() {
                    return Ok(Some(DecisionCertificate::Fixed(BoundCertificate::empty())));
                }
                let t = policy.target.threshold(n)?;
                let cs: Vec<&ExposureCurve> = cols.iter().map(|&j| &curves[j]).collect();
                let cert = best_bound(&cs, &t)?
                    .with_columns(cols.iter().map(|&j| column_names[j].clone()).collect());
                Ok(Some(DecisionCertificate::Fixed(cert)))
            }
            PolicyMode::Statistical => {
                let k = policy.target.level(next_cohort)?;
                if k == 0 || k > next_cohort {
                    return Err(invalid("k", format!("{k} is outside [1, {next_cohort}]")));
                }
                let ts: Vec<&DiscreteDistribution> = cols.iter().map(|&j| &tallies[j]).collect();
                Ok(statistical_certificate(&ts, n, next_cohort, k, policy.delta)?
                    .map(DecisionCertificate::Statistical))
            }
        }
    };

    let mut chosen: Vec<usize> = Vec::new();
    let mut certificate = evaluate(&chosen)?.expect("empty set is always certified");
    for j in order {
        if chosen.contains(&j) {
            continue;
        }
        let mut candidate = chosen.clone();
        candidate.push(j);
        candidate.sort_unstable();
        if let Some(cert) = evaluate(&candidate)? {
            if cert.reported_bound() <= policy.budget {
                chosen = candidate;
                certificate = cert;
            }
        }
    }
    Ok(ReleaseDecision {
        column_names: chosen.iter().map(|&j| column_names[j].clone()).collect(),
        columns: chosen,
        certificate,
        policy: policy.clone(),
    })
}
