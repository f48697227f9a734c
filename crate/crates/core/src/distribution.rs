//! Discrete distributions over a finite value set.
//!
//! The empirical variant keeps exact integer counts so that threshold
//! comparisons can be decided by integer arithmetic; the analytic variant
//! holds real-valued probabilities.

use std::collections::BTreeMap;
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::table::{CategoricalTable, Cell, REDACTED};

const MASS_TOLERANCE: f64 = 1e-12;

/// Identifier of one (joint) value; `None` components are ⊥.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ValueId(pub Vec<Option<String>>);

impl ValueId {
    pub fn single(label: impl Into<String>) -> Self {
        ValueId(vec![Some(label.into())])
    }
}

impl fmt::Display for ValueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self
            .0
            .iter()
            .map(|c| c.as_deref().unwrap_or(REDACTED))
            .collect();
        if parts.len() == 1 {
            write!(f, "{}", parts[0])
        } else {
            write!(f, "({})", parts.join(","))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Masses {
    Counts { counts: Vec<u64>, total: u64 },
    Probabilities(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDistribution {
    values: Vec<ValueId>,
    masses: Masses,
}

fn check_distinct(values: &[ValueId]) -> Result<()> {
    let mut sorted: Vec<&ValueId> = values.iter().collect();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidDistribution(
            "value identifiers are not distinct".into(),
        ));
    }
    Ok(())
}

impl DiscreteDistribution {
    pub fn from_counts(values: Vec<ValueId>, counts: Vec<u64>) -> Result<Self> {
        if values.len() != counts.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} values but {} counts",
                values.len(),
                counts.len()
            )));
        }
        check_distinct(&values)?;
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::InvalidDistribution("counts sum to zero".into()));
        }
        Ok(DiscreteDistribution {
            values,
            masses: Masses::Counts { counts, total },
        })
    }

    pub fn from_probabilities(values: Vec<ValueId>, probs: Vec<f64>) -> Result<Self> {
        if values.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} values but {} probabilities",
                values.len(),
                probs.len()
            )));
        }
        if values.is_empty() {
            return Err(Error::InvalidDistribution("no values".into()));
        }
        check_distinct(&values)?;
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("bad probability {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(DiscreteDistribution {
            values,
            masses: Masses::Probabilities(probs),
        })
    }

    /// Analytic distribution with values labelled `0..m`.
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        let values = (0..probs.len()).map(|i| ValueId::single(i.to_string())).collect();
        Self::from_probabilities(values, probs.to_vec())
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidDistribution("no values".into()));
        }
        Self::from_probs(&vec![1.0 / m as f64; m])
    }

    pub fn values(&self) -> &[ValueId] {
        &self.values
    }

    pub fn masses(&self) -> &Masses {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_empirical(&self) -> bool {
        matches!(self.masses, Masses::Counts { .. })
    }

    /// Sample count `n` of an empirical distribution.
    pub fn total(&self) -> Option<u64> {
        match &self.masses {
            Masses::Counts { total, .. } => Some(*total),
            Masses::Probabilities(_) => None,
        }
    }

    pub fn counts(&self) -> Option<&[u64]> {
        match &self.masses {
            Masses::Counts { counts, .. } => Some(counts),
            Masses::Probabilities(_) => None,
        }
    }

    pub fn mass(&self, i: usize) -> f64 {
        match &self.masses {
            Masses::Counts { counts, total } => counts[i] as f64 / *total as f64,
            Masses::Probabilities(p) => p[i],
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.mass(i)).collect()
    }

    pub fn mass_of(&self, value: &ValueId) -> f64 {
        self.values
            .iter()
            .position(|v| v == value)
            .map_or(0.0, |i| self.mass(i))
    }

    /// Draws `n` i.i.d. samples and returns the per-value counts.
    pub fn sample_counts<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<u64> {
        let mut counts = vec![0u64; self.len()];
        for i in self.sample_indices(n, rng) {
            counts[i] += 1;
        }
        counts
    }

    /// Draws `n` i.i.d. value indices.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<usize> {
        let weights = self.probabilities();
        let sampler = WeightedIndex::new(&weights).expect("validated distribution");
        (0..n).map(|_| sampler.sample(rng)).collect()
    }

    /// Empirical distribution of `n` i.i.d. samples, keeping only observed values.
    pub fn sample_empirical<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Self> {
        let counts = self.sample_counts(n, rng);
        let (values, counts): (Vec<_>, Vec<_>) = self
            .values
            .iter()
            .cloned()
            .zip(counts)
            .filter(|(_, c)| *c > 0)
            .unzip();
        Self::from_counts(values, counts)
    }

    /// L-infinity distance over the union of both supports.
    pub fn linf_distance(&self, other: &DiscreteDistribution) -> f64 {
        let mut diff: BTreeMap<&ValueId, f64> = BTreeMap::new();
        for (i, v) in self.values.iter().enumerate() {
            *diff.entry(v).or_default() += self.mass(i);
        }
        for (i, v) in other.values.iter().enumerate() {
            *diff.entry(v).or_default() -= other.mass(i);
        }
        diff.values().fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// Tally of the joint values of `cols` over all rows. ⊥ is an ordinary
/// value. Values are ordered by their coded tuples (⊥ first).
pub fn empirical_distribution(table: &CategoricalTable, cols: &[usize]) -> Result<DiscreteDistribution> {
    table.check_columns(cols)?;
    let mut tally: BTreeMap<Vec<Cell>, u64> = BTreeMap::new();
    for row in table.rows() {
        let key: Vec<Cell> = cols.iter().map(|&j| row[j]).collect();
        *tally.entry(key).or_default() += 1;
    }
    let mut values = Vec::with_capacity(tally.len());
    let mut counts = Vec::with_capacity(tally.len());
    for (key, count) in tally {
        let id = key
            .iter()
            .zip(cols)
            .map(|(c, &j)| c.map(|c| table.column(j).alphabet[c as usize].clone()))
            .collect();
        values.push(ValueId(id));
        counts.push(count);
    }
    DiscreteDistribution::from_counts(values, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashMap;

    #[test]
    fn binary_column_halves() {
        let t = CategoricalTable::from_strings(
            &["x"],
            &[vec![Some("0")], vec![Some("0")], vec![Some("1")], vec![Some("1")]],
        )
        .unwrap();
        let d = empirical_distribution(&t, &[0]).unwrap();
        assert_eq!(d.counts().unwrap(), &[2, 2]);
        assert_eq!(d.total(), Some(4));
        assert_eq!(d.mass_of(&ValueId::single("0")), 0.5);
        assert_eq!(d.mass_of(&ValueId::single("1")), 0.5);
    }

    #[test]
    fn errors_on_bad_column_sets() {
        let t = CategoricalTable::from_strings(&["x"], &[vec![Some("0")]]).unwrap();
        assert!(matches!(empirical_distribution(&t, &[]), Err(Error::EmptyColumnSet)));
        assert!(matches!(empirical_distribution(&t, &[3]), Err(Error::UnknownColumn(_))));
    }

    #[test]
    fn redaction_counts_as_a_value() {
        let t = CategoricalTable::from_strings(&["x"], &[vec![Some("a")], vec![None], vec![None]]).unwrap();
        let d = empirical_distribution(&t, &[0]).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.mass_of(&ValueId(vec![None])), 2.0 / 3.0);
    }

    #[test]
    fn matches_brute_force_tally() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let rows: Vec<Vec<Option<String>>> = (0..20)
                .map(|_| {
                    (0..2)
                        .map(|_| {
                            let v: u32 = rng.random_range(0..4);
                            if v == 3 { None } else { Some(v.to_string()) }
                        })
                        .collect()
                })
                .collect();
            let t = CategoricalTable::from_strings(&["a", "b"], &rows).unwrap();
            let d = empirical_distribution(&t, &[0, 1]).unwrap();
            let mut brute: HashMap<Vec<Option<String>>, u64> = HashMap::new();
            for r in &rows {
                *brute.entry(r.clone()).or_default() += 1;
            }
            assert_eq!(d.len(), brute.len());
            for (v, c) in d.values().iter().zip(d.counts().unwrap()) {
                assert_eq!(brute[&v.0], *c);
            }
        }
    }

    #[test]
    fn analytic_validation() {
        assert!(DiscreteDistribution::from_probs(&[0.5, 0.4]).is_err());
        assert!(DiscreteDistribution::from_probs(&[1.5, -0.5]).is_err());
        let dup = DiscreteDistribution::from_probabilities(
            vec![ValueId::single("a"), ValueId::single("a")],
            vec![0.5, 0.5],
        );
        assert!(dup.is_err());
    }
}
