//! Bounds on the exposure of a joint set of columns from the exposures of
//! the individual columns, and the adversarial tables showing where such
//! bounds must lose.
//!
//! Two rules are available. With known support sizes, for any `j*`:
//!
//! `Q_J(∏ t_j) ≤ Σ_j Q_j(t_j) + Σ_{j≠j*} t_j·|V_j|`
//!
//! and in general, for a free parameter `c ∈ (0, 1)`:
//!
//! `Q_J(c·∏ t_j) ≤ Σ_j Q_j(t_j) + c`
//!
//! All quantities are exact rationals, so a certificate's bound can be
//! recomputed bit-for-bit from its recorded parameters.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exposure::ExposureCurve;
use crate::rational::Rational;
use crate::table::{CategoricalTable, Column};

/// Candidate products above this size switch the search from exhaustive
/// enumeration to coordinate descent.
pub const EXHAUSTIVE_LIMIT: usize = 100_000;

/// The geometric grid `2^-1 … 2^-20` searched for the free parameter `c`.
pub const C_GRID_MAX_EXPONENT: u32 = 20;

/// One column's curve, threshold and support size.
#[derive(Clone, Debug)]
pub struct MarginalSpec<'a> {
    pub curve: &'a ExposureCurve,
    pub threshold: Rational,
    pub support_size: usize,
}

impl<'a> MarginalSpec<'a> {
    pub fn new(curve: &'a ExposureCurve, threshold: Rational) -> Self {
        MarginalSpec {
            curve,
            threshold,
            support_size: curve.support_size(),
        }
    }

    /// Declares a support size; it may not be below the number of values
    /// the curve actually has.
    pub fn with_support_size(mut self, support_size: usize) -> Result<Self> {
        if support_size < self.curve.support_size().max(1) {
            return Err(invalid(
                "support_size",
                format!(
                    "{support_size} is below the curve's {} values",
                    self.curve.support_size()
                ),
            ));
        }
        self.support_size = support_size;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !self.threshold.is_probability() {
            return Err(invalid("t_j", format!("{} is outside [0, 1]", self.threshold)));
        }
        if self.support_size == 0 {
            return Err(invalid("support_size", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum CompositionRule {
    /// Composition with known support sizes, dropping the slack of `j_star`.
    SupportSize { j_star: usize },
    /// General composition with free parameter `c`.
    General { c: Rational },
    /// No feasible parameters: the vacuous bound 1.
    Trivial,
    /// No columns: every row agrees, so nobody is exposed below `t ≤ 1`.
    Empty,
}

/// Auditable record of one application of a composition rule.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub rule: CompositionRule,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub columns: Vec<String>,
    pub thresholds: Vec<Rational>,
    pub marginal_exposures: Vec<Rational>,
    pub support_sizes: Vec<usize>,
    pub joint_threshold: Rational,
    /// Unclamped exact bound.
    pub bound: Rational,
}

fn rule_bound(
    rule: &CompositionRule,
    thresholds: &[Rational],
    exposures: &[Rational],
    supports: &[usize],
) -> Result<(Rational, Rational)> {
    let sum_q = exposures.iter().fold(Rational::zero(), |acc, q| &acc + q);
    let prod_t = Rational::product(thresholds);
    match rule {
        CompositionRule::SupportSize { j_star } => {
            if *j_star >= thresholds.len() {
                return Err(invalid(
                    "j_star",
                    format!("{j_star} is not one of the {} columns", thresholds.len()),
                ));
            }
            let mut bound = sum_q;
            for (j, (t, &v)) in thresholds.iter().zip(supports).enumerate() {
                if j != *j_star {
                    bound = &bound + &(t * &Rational::from_integer(v as u64));
                }
            }
            Ok((prod_t, bound))
        }
        CompositionRule::General { c } => {
            if c.is_zero() || !c.is_probability() || *c == Rational::one() {
                return Err(invalid("c", format!("{c} is outside (0, 1)")));
            }
            Ok((c * &prod_t, &sum_q + c))
        }
        CompositionRule::Trivial => Ok((Rational::one(), Rational::one())),
        CompositionRule::Empty => Ok((Rational::one(), Rational::zero())),
    }
}

impl BoundCertificate {
    fn build(rule: CompositionRule, marginals: &[MarginalSpec<'_>]) -> Result<Self> {
        if marginals.is_empty() {
            return Err(Error::EmptyColumnSet);
        }
        for m in marginals {
            m.validate()?;
        }
        let thresholds: Vec<Rational> = marginals.iter().map(|m| m.threshold.clone()).collect();
        let exposures: Vec<Rational> = marginals
            .iter()
            .map(|m| m.curve.eval_exact(&m.threshold))
            .collect();
        let supports: Vec<usize> = marginals.iter().map(|m| m.support_size).collect();
        let (joint_threshold, bound) = rule_bound(&rule, &thresholds, &exposures, &supports)?;
        Ok(BoundCertificate {
            rule,
            columns: Vec::new(),
            thresholds,
            marginal_exposures: exposures,
            support_sizes: supports,
            joint_threshold,
            bound,
        })
    }

    pub fn trivial(target: &Rational) -> Self {
        BoundCertificate {
            rule: CompositionRule::Trivial,
            columns: Vec::new(),
            thresholds: Vec::new(),
            marginal_exposures: Vec::new(),
            support_sizes: Vec::new(),
            joint_threshold: target.clone(),
            bound: Rational::one(),
        }
    }

    /// Certificate for the empty column set, valid for any threshold `≤ 1`.
    pub fn empty() -> Self {
        BoundCertificate {
            rule: CompositionRule::Empty,
            columns: Vec::new(),
            thresholds: Vec::new(),
            marginal_exposures: Vec::new(),
            support_sizes: Vec::new(),
            joint_threshold: Rational::one(),
            bound: Rational::zero(),
        }
    }

    pub fn with_columns(mut self, columns: Vec<String>) -> Self {
        self.columns = columns;
        self
    }

    pub fn bound_f64(&self) -> f64 {
        self.bound.to_f64()
    }

    /// The bound as reported: clamped to 1.
    pub fn reported_bound(&self) -> f64 {
        self.bound_f64().min(1.0)
    }

    /// Recomputes `(joint_threshold, bound)` from the recorded parameters.
    pub fn recompute(&self) -> Result<(Rational, Rational)> {
        match self.rule {
            CompositionRule::Trivial => Ok((self.joint_threshold.clone(), Rational::one())),
            _ => rule_bound(
                &self.rule,
                &self.thresholds,
                &self.marginal_exposures,
                &self.support_sizes,
            ),
        }
    }

    /// True iff the recorded threshold and bound follow from the recorded
    /// parameters.
    pub fn verify(&self) -> bool {
        match self.recompute() {
            Ok((t, b)) => t == self.joint_threshold && b == self.bound,
            Err(_) => false,
        }
    }

    /// Also checks the recorded per-column exposures against `curves`.
    pub fn verify_against(&self, curves: &[&ExposureCurve]) -> bool {
        if !self.verify() {
            return false;
        }
        if matches!(self.rule, CompositionRule::Trivial | CompositionRule::Empty) {
            return true;
        }
        curves.len() == self.thresholds.len()
            && curves
                .iter()
                .zip(&self.thresholds)
                .zip(&self.marginal_exposures)
                .all(|((c, t), q)| &c.eval_exact(t) == q)
    }
}

/// Composition with known support sizes.
pub fn compose_support(marginals: &[MarginalSpec<'_>], j_star: usize) -> Result<BoundCertificate> {
    BoundCertificate::build(CompositionRule::SupportSize { j_star }, marginals)
}

/// Default `j*`: the column with the largest slack `t_j·|V_j|`, lowest index
/// on ties.
pub fn default_j_star(marginals: &[MarginalSpec<'_>]) -> usize {
    let mut best = 0;
    let mut best_slack = Rational::zero();
    for (j, m) in marginals.iter().enumerate() {
        let slack = &m.threshold * &Rational::from_integer(m.support_size as u64);
        if j == 0 || slack > best_slack {
            best = j;
            best_slack = slack;
        }
    }
    best
}

/// General composition with free parameter `c ∈ (0, 1)`.
pub fn compose_general(marginals: &[MarginalSpec<'_>], c: &Rational) -> Result<BoundCertificate> {
    BoundCertificate::build(CompositionRule::General { c: c.clone() }, marginals)
}

struct Candidate {
    t: Rational,
    ln_t: f64,
    q: f64,
    slack: f64,
}

fn column_candidates(curve: &ExposureCurve, target: &Rational) -> Vec<Candidate> {
    let levels = curve.exact_breakpoints();
    let one = Rational::one();
    let mut ts: Vec<Rational> = Vec::with_capacity(2 * levels.len() + 1);
    for (i, l) in levels.iter().enumerate() {
        ts.push(l.clone());
        let next = levels.get(i + 1).unwrap_or(&one);
        if next > l {
            ts.push(l.midpoint(next));
        }
    }
    ts.push(one);
    ts.sort();
    ts.dedup();
    let support = curve.support_size().max(1) as f64;
    ts.into_iter()
        .filter(|t| t >= target)
        .map(|t| {
            let tf = t.to_f64();
            Candidate {
                q: curve.eval(&t),
                ln_t: tf.ln(),
                slack: tf * support,
                t,
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Pick {
    Support(usize),
    General(u32),
}

#[derive(Clone, Debug)]
struct Scored {
    score: f64,
    pick: Pick,
    combo: Vec<usize>,
}

fn pick_order(p: &Pick) -> (u8, u32) {
    match p {
        Pick::Support(j) => (0, *j as u32),
        Pick::General(m) => (1, *m),
    }
}

fn cmp_scored(a: &Scored, b: &Scored) -> Ordering {
    a.score
        .total_cmp(&b.score)
        .then_with(|| pick_order(&a.pick).cmp(&pick_order(&b.pick)))
        .then_with(|| a.combo.cmp(&b.combo))
}

/// Rule choices worth considering for one threshold allocation.
fn score_combo(cands: &[Vec<Candidate>], combo: &[usize], ln_target: f64, out: &mut Vec<Scored>) {
    let mut ln_p = 0.0;
    let mut sum_q = 0.0;
    let mut sum_slack = 0.0;
    let mut max_slack = f64::NEG_INFINITY;
    let mut j_star = 0;
    for (j, &i) in combo.iter().enumerate() {
        let c = &cands[j][i];
        ln_p += c.ln_t;
        sum_q += c.q;
        sum_slack += c.slack;
        if c.slack > max_slack {
            max_slack = c.slack;
            j_star = j;
        }
    }
    let margin = ln_p - ln_target;
    if margin < -1e-9 {
        return;
    }
    out.push(Scored {
        score: sum_q + sum_slack - max_slack,
        pick: Pick::Support(j_star),
        combo: combo.to_vec(),
    });
    // Exact feasibility is re-checked in `certify`, so round generously here.
    let m = (margin / std::f64::consts::LN_2 + 1e-9).floor().min(C_GRID_MAX_EXPONENT as f64);
    if m >= 1.0 {
        let m = m as u32;
        for e in [m, m - 1] {
            if e >= 1 {
                out.push(Scored {
                    score: sum_q + 0.5f64.powi(e as i32),
                    pick: Pick::General(e),
                    combo: combo.to_vec(),
                });
            }
        }
    }
}

fn c_for_exponent(e: u32) -> Rational {
    Rational::ratio(1, 1u64 << e).expect("nonzero")
}

fn certify(
    curves: &[&ExposureCurve],
    cands: &[Vec<Candidate>],
    s: &Scored,
    target: &Rational,
) -> Option<BoundCertificate> {
    let marginals: Vec<MarginalSpec<'_>> = curves
        .iter()
        .zip(&s.combo)
        .zip(cands)
        .map(|((c, &i), cs)| MarginalSpec::new(c, cs[i].t.clone()))
        .collect();
    let cert = match s.pick {
        Pick::Support(j) => compose_support(&marginals, j).ok()?,
        Pick::General(e) => compose_general(&marginals, &c_for_exponent(e)).ok()?,
    };
    (&cert.joint_threshold >= target).then_some(cert)
}

/// The smallest certified bound on `Q_J(target)` over both composition
/// rules, searching per-column thresholds among each curve's breakpoints,
/// the midpoints just above them, and 1, and `c` over `2^-1 … 2^-20`.
///
/// Every returned certificate has `joint_threshold ≥ target`, so by
/// monotonicity of exposure it also bounds `Q_J(target)`. When nothing is
/// feasible the trivial bound 1 is returned.
pub fn best_bound(curves: &[&ExposureCurve], target: &Rational) -> Result<BoundCertificate> {
    if curves.is_empty() {
        return Err(Error::EmptyColumnSet);
    }
    if target.is_zero() || !target.is_probability() {
        return Err(invalid("target", format!("{target} is outside (0, 1]")));
    }
    let cands: Vec<Vec<Candidate>> = curves.iter().map(|c| column_candidates(c, target)).collect();
    if cands.iter().any(Vec::is_empty) {
        return Ok(BoundCertificate::trivial(target));
    }
    let ln_target = target.to_f64().ln();
    let space = cands
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
        .unwrap_or(usize::MAX);

    let mut scored = Vec::new();
    if space <= EXHAUSTIVE_LIMIT {
        let mut combo = vec![0usize; cands.len()];
        loop {
            score_combo(&cands, &combo, ln_target, &mut scored);
            let mut j = cands.len();
            loop {
                if j == 0 {
                    break;
                }
                j -= 1;
                combo[j] += 1;
                if combo[j] < cands[j].len() {
                    break;
                }
                combo[j] = 0;
                if j == 0 {
                    j = usize::MAX;
                    break;
                }
            }
            if j == usize::MAX {
                break;
            }
        }
    } else {
        coordinate_descent(&cands, ln_target, &mut scored);
    }
    scored.sort_by(cmp_scored);

    let mut best: Option<(f64, BoundCertificate)> = None;
    for s in &scored {
        if let Some((score, _)) = &best {
            if s.score > score + 1e-12 {
                break;
            }
        }
        if let Some(cert) = certify(curves, &cands, s, target) {
            match &best {
                Some((_, b)) if b.bound <= cert.bound => {}
                Some((score, _)) => best = Some((*score, cert)),
                None => best = Some((s.score, cert)),
            }
        }
    }
    Ok(best
        .map(|(_, c)| c)
        .unwrap_or_else(|| BoundCertificate::trivial(target)))
}

fn coordinate_descent(cands: &[Vec<Candidate>], ln_target: f64, out: &mut Vec<Scored>) {
    let d = cands.len();
    let share = ln_target / d as f64;
    let mut combo: Vec<usize> = cands
        .iter()
        .map(|cs| {
            cs.iter()
                .position(|c| c.ln_t >= share)
                .unwrap_or(cs.len() - 1)
        })
        .collect();
    let objective = |combo: &[usize]| -> Option<Scored> {
        let ln_p: f64 = combo.iter().enumerate().map(|(j, &i)| cands[j][i].ln_t).sum();
        // conservative margin so the exact check rarely rejects
        if ln_p < ln_target + 1e-12 {
            return None;
        }
        let mut v = Vec::new();
        score_combo(cands, combo, ln_target, &mut v);
        v.into_iter().min_by(cmp_scored)
    };
    if objective(&combo).is_none() {
        combo = cands.iter().map(|cs| cs.len() - 1).collect();
    }
    let mut current = objective(&combo);
    for _ in 0..50 {
        let mut improved = false;
        for j in 0..d {
            for i in 0..cands[j].len() {
                if i == combo[j] {
                    continue;
                }
                let mut trial = combo.clone();
                trial[j] = i;
                if let Some(s) = objective(&trial) {
                    let better = match &current {
                        Some(c) => cmp_scored(&s, c) == Ordering::Less,
                        None => true,
                    };
                    if better {
                        combo = trial;
                        current = Some(s);
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            break;
        }
    }
    score_combo(cands, &combo, ln_target, out);
}

/// The `(n+1)`-by-2 binary table: `n/2` rows `(1,0)`, one row `(0,0)`,
/// `n/2` rows `(0,1)`. Each column alone is `n/2`-anonymous while the
/// middle row is unique.
pub fn middle_user_example(n: usize) -> Result<CategoricalTable> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(invalid("n", format!("{n} must be even and at least 2")));
    }
    let alphabet = vec!["0".to_string(), "1".to_string()];
    let columns = vec![
        Column::new("col1", alphabet.clone()),
        Column::new("col2", alphabet),
    ];
    let mut rows = Vec::with_capacity(n + 1);
    rows.extend(std::iter::repeat_n(vec![Some(1), Some(0)], n / 2));
    rows.push(vec![Some(0), Some(0)]);
    rows.extend(std::iter::repeat_n(vec![Some(0), Some(1)], n / 2));
    CategoricalTable::new(columns, rows)
}

/// A table on which the slack-free composition inequality fails:
/// `Q_J(c·∏ q_i) ≥ Σ_i Q_i(q_i)`.
#[derive(Clone, Debug)]
pub struct SlackWitness {
    pub table: CategoricalTable,
    pub thresholds: Vec<Rational>,
    pub c: Rational,
    /// Rows per group, `3/c`.
    pub group_size: u64,
    /// Number of columns.
    pub k: u32,
}

impl SlackWitness {
    pub fn joint_threshold(&self) -> Rational {
        &self.c * &Rational::product(&self.thresholds)
    }
}

fn group_size_for(c: &Rational) -> Result<u64> {
    if c.is_zero() || !c.is_probability() {
        return Err(invalid("c", format!("{c} is outside (0, 1]")));
    }
    let inv = c
        .recip()
        .and_then(|r| r.to_integer())
        .ok_or_else(|| invalid("c", format!("1/c is not an integer for c = {c}")))?;
    Ok(3 * inv)
}

/// Whether `c·((a·2^{k−1} − 1)/(a·2^k))^k ≥ 2/(a·2^k)`.
fn slack_inequality_holds(c: &Rational, a: u64, k: u32) -> bool {
    let rows = a << k;
    let q = Rational::ratio((a << (k - 1)) - 1, rows).expect("nonzero");
    let lhs = (0..k).fold(c.clone(), |acc, _| &acc * &q);
    lhs >= Rational::ratio(2, rows).expect("nonzero")
}

const MAX_WITNESS_COLUMNS: u32 = 20;

/// Witness with the smallest number of columns `k` satisfying the
/// construction's inequality.
pub fn slack_witness(c: &Rational) -> Result<SlackWitness> {
    let a = group_size_for(c)?;
    let k = (1..=MAX_WITNESS_COLUMNS)
        .find(|&k| slack_inequality_holds(c, a, k))
        .ok_or_else(|| Error::Precondition(format!("no k ≤ {MAX_WITNESS_COLUMNS} works for c = {c}")))?;
    slack_witness_with_columns(c, k)
}

/// Witness with exactly `k` columns: `2^k` groups of `a = 3/c` identical rows
/// holding the binary encoding of the group index; the first row of group
/// `i < k` has column `i` replaced by ⊥.
pub fn slack_witness_with_columns(c: &Rational, k: u32) -> Result<SlackWitness> {
    let a = group_size_for(c)?;
    if k == 0 || k > MAX_WITNESS_COLUMNS {
        return Err(invalid("k", format!("{k} must be in 1..={MAX_WITNESS_COLUMNS}")));
    }
    if !slack_inequality_holds(c, a, k) {
        return Err(Error::Precondition(format!(
            "c·q^k < 2/(a·2^k) for c = {c}, k = {k}"
        )));
    }
    let groups = 1usize << k;
    let alphabet = vec!["0".to_string(), "1".to_string()];
    let columns = (0..k)
        .map(|i| Column::new(format!("bit{i}"), alphabet.clone()))
        .collect();
    let mut rows = Vec::with_capacity(groups * a as usize);
    for g in 0..groups {
        let bits: Vec<Option<u32>> = (0..k).map(|i| Some(((g >> i) & 1) as u32)).collect();
        for r in 0..a {
            let mut row = bits.clone();
            if r == 0 && g < k as usize {
                row[g] = None;
            }
            rows.push(row);
        }
    }
    let table = CategoricalTable::new(columns, rows)?;
    let total = a << k;
    let q = Rational::ratio((a << (k - 1)) - 1, total)?;
    Ok(SlackWitness {
        table,
        thresholds: vec![q; k as usize],
        c: c.clone(),
        group_size: a,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::empirical_distribution;
    use crate::exposure::exposure_exact;

    fn r(n: u64, d: u64) -> Rational {
        Rational::ratio(n, d).unwrap()
    }

    fn balanced_binary_pair() -> CategoricalTable {
        CategoricalTable::from_strings(
            &["a", "b"],
            &[
                vec![Some("0"), Some("0")],
                vec![Some("0"), Some("1")],
                vec![Some("1"), Some("0")],
                vec![Some("1"), Some("1")],
            ],
        )
        .unwrap()
    }

    fn curves(t: &CategoricalTable) -> Vec<ExposureCurve> {
        (0..t.n_cols())
            .map(|j| ExposureCurve::new(&empirical_distribution(t, &[j]).unwrap()))
            .collect()
    }

    #[test]
    fn singleton_support_rule_is_identity() {
        let t = middle_user_example(10).unwrap();
        let cs = curves(&t);
        let m = [MarginalSpec::new(&cs[0], r(6, 11))];
        let cert = compose_support(&m, 0).unwrap();
        assert_eq!(cert.bound, cs[0].eval_exact(&r(6, 11)));
        assert_eq!(cert.joint_threshold, r(6, 11));
        assert!(cert.verify());
    }

    #[test]
    fn two_uniform_binary_columns() {
        let t = balanced_binary_pair();
        let cs = curves(&t);
        let m = [
            MarginalSpec::new(&cs[0], r(2, 5)),
            MarginalSpec::new(&cs[1], r(2, 5)),
        ];
        let cert = compose_support(&m, 0).unwrap();
        assert_eq!(cert.joint_threshold, r(4, 25));
        assert_eq!(cert.bound, r(4, 5));
        let joint = empirical_distribution(&t, &[0, 1]).unwrap();
        assert!(exposure_exact(&joint, &cert.joint_threshold).unwrap().is_zero());

        let cert = compose_general(&m, &r(1, 2)).unwrap();
        assert_eq!(cert.joint_threshold, r(2, 25));
        assert_eq!(cert.bound, r(1, 2));
        assert!(exposure_exact(&joint, &cert.joint_threshold).unwrap().is_zero());
    }

    #[test]
    fn general_rule_ignores_support_sizes() {
        let t = balanced_binary_pair();
        let cs = curves(&t);
        let c = r(1, 1000);
        let m: Vec<_> = cs
            .iter()
            .map(|c| MarginalSpec::new(c, r(1, 2)).with_support_size(1000).unwrap())
            .collect();
        assert_eq!(compose_general(&m, &c).unwrap().bound, c);
    }

    #[test]
    fn parameter_errors() {
        let t = balanced_binary_pair();
        let cs = curves(&t);
        let m = [MarginalSpec::new(&cs[0], r(1, 2))];
        assert!(compose_support(&m, 1).is_err());
        assert!(compose_general(&m, &Rational::zero()).is_err());
        assert!(compose_general(&m, &Rational::one()).is_err());
        assert!(compose_support(&[], 0).is_err());
        assert!(MarginalSpec::new(&cs[0], r(1, 2)).with_support_size(1).is_err());
    }

    #[test]
    fn default_j_star_drops_largest_slack() {
        let t = balanced_binary_pair();
        let cs = curves(&t);
        let m = [
            MarginalSpec::new(&cs[0], r(1, 4)),
            MarginalSpec::new(&cs[1], r(1, 2)),
        ];
        assert_eq!(default_j_star(&m), 1);
    }

    #[test]
    fn best_bound_single_column_recovers_exposure() {
        let t = middle_user_example(10).unwrap();
        let cs = curves(&t);
        for num in 1..=11 {
            let target = r(num, 11);
            let cert = best_bound(&[&cs[0]], &target).unwrap();
            assert_eq!(cert.bound, cs[0].eval_exact(&target), "target {target}");
        }
    }

    #[test]
    fn best_bound_on_middle_user_is_sound() {
        let n = 100;
        let t = middle_user_example(n).unwrap();
        let cs = curves(&t);
        let target = r(2, n as u64 + 1);
        let cert = best_bound(&[&cs[0], &cs[1]], &target).unwrap();
        assert!(cert.joint_threshold >= target);
        assert!(cert.bound >= r(1, n as u64 + 1));
        assert!(cert.verify_against(&[&cs[0], &cs[1]]));
    }

    #[test]
    fn middle_user_shape() {
        let t = middle_user_example(2).unwrap();
        let rows: Vec<Vec<Option<String>>> = (0..3).map(|i| t.row_strings(i)).collect();
        let s = |a: &str, b: &str| vec![Some(a.to_string()), Some(b.to_string())];
        assert_eq!(rows, vec![s("1", "0"), s("0", "0"), s("0", "1")]);
        assert!(middle_user_example(3).is_err());
        assert!(middle_user_example(0).is_err());
    }

    #[test]
    fn slack_witness_c_one() {
        let w = slack_witness(&Rational::one()).unwrap();
        assert_eq!(w.k, 1);
        assert_eq!(w.group_size, 3);
        assert_eq!(w.table.n_rows(), 6);
        assert_eq!(w.thresholds, vec![r(1, 3)]);
        let col = empirical_distribution(&w.table, &[0]).unwrap();
        assert_eq!(exposure_exact(&col, &r(1, 3)).unwrap(), r(1, 6));
    }

    #[test]
    fn slack_witness_rejects_non_reciprocal_c() {
        assert!(slack_witness(&r(2, 3)).is_err());
        assert!(slack_witness(&Rational::zero()).is_err());
    }
}
