//! End-to-end runs: sampling cohorts, both rounds, the curator's decision,
//! and the audit of what each party could see.

use std::collections::{BTreeMap, HashMap};

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::policy::{select_release_set, DecisionCertificate, PolicyMode, ReleaseDecision, ReleasePolicy};
use super::rounds::{decode_feature, run_round_one, run_round_two};
use super::transcript::{Direction, Party, ProtocolTranscript};
use crate::distribution::{empirical_distribution, DiscreteDistribution};
use crate::error::{invalid, Error, Result};
use crate::estimation::trial_rng;
use crate::exposure::{rows_less_than_k_anonymous, ExposureCurve};
use crate::rational::Rational;
use crate::table::{CategoricalTable, Cell, Column};

const COHORT_STREAM: u64 = 0;

/// Distribution over whole rows, used to draw cohorts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowDistribution {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub probabilities: Vec<f64>,
}

impl RowDistribution {
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<Cell>>, probabilities: Vec<f64>) -> Result<Self> {
        if rows.len() != probabilities.len() || rows.is_empty() {
            return Err(invalid("probabilities", "one probability per row is required"));
        }
        // validates arity and codes
        CategoricalTable::new(columns.clone(), rows.clone())?;
        DiscreteDistribution::from_probs(&probabilities)?;
        Ok(RowDistribution {
            columns,
            rows,
            probabilities,
        })
    }

    /// Product of independent per-column distributions over each alphabet.
    pub fn independent(columns: Vec<Column>, marginals: Vec<Vec<f64>>) -> Result<Self> {
        if columns.len() != marginals.len() {
            return Err(invalid("marginals", "one marginal per column is required"));
        }
        for (c, m) in columns.iter().zip(&marginals) {
            if c.alphabet.len() != m.len() {
                return Err(invalid("marginals", format!("{} needs {} masses", c.name, c.alphabet.len())));
            }
            DiscreteDistribution::from_probs(m)?;
        }
        let mut rows: Vec<Vec<Cell>> = vec![Vec::new()];
        let mut probs = vec![1.0];
        for m in &marginals {
            let mut next_rows = Vec::with_capacity(rows.len() * m.len());
            let mut next_probs = Vec::with_capacity(rows.len() * m.len());
            for (row, p) in rows.iter().zip(&probs) {
                for (code, q) in m.iter().enumerate() {
                    let mut r = row.clone();
                    r.push(Some(code as u32));
                    next_rows.push(r);
                    next_probs.push(p * q);
                }
            }
            rows = next_rows;
            probs = next_probs;
        }
        Self::new(columns, rows, probs)
    }

    /// One column named `name` with `m` equally likely values `0..m`.
    pub fn uniform(name: &str, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m", "must be at least 1"));
        }
        let column = Column::new(name, (0..m).map(|i| i.to_string()).collect());
        Self::independent(vec![column], vec![vec![1.0 / m as f64; m]])
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<CategoricalTable> {
        let sampler = WeightedIndex::new(&self.probabilities)
            .map_err(|e| Error::InvalidDistribution(e.to_string()))?;
        let rows = (0..n).map(|_| self.rows[sampler.sample(rng)].clone()).collect();
        CategoricalTable::new(self.columns.clone(), rows)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Setting {
    /// The same users take part in both rounds.
    Fixed { table: CategoricalTable },
    /// Two independent cohorts drawn from one population.
    Statistical {
        population: RowDistribution,
        round_one: usize,
        round_two: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolConfig {
    pub setting: Setting,
    pub policy: ReleasePolicy,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolOutcome {
    pub round_one_users: CategoricalTable,
    pub round_two_users: CategoricalTable,
    pub tallies: Vec<DiscreteDistribution>,
    pub decision: ReleaseDecision,
    pub released: CategoricalTable,
    pub round_one: ProtocolTranscript,
    pub round_two: ProtocolTranscript,
    /// Exposure of the released table at the policy target.
    pub realized_exposure: f64,
    /// Realized exposure where the certificate applies and the bound it
    /// must respect.
    pub realized_at_certificate: f64,
    pub certified_bound: f64,
    pub certificate_holds: bool,
}

/// Row counts of the released table's joint values; a table without
/// columns is one value shared by every row.
fn joint_counts(table: &CategoricalTable) -> Vec<u64> {
    if table.n_cols() == 0 {
        return vec![table.n_rows() as u64];
    }
    let mut tally: HashMap<&[Cell], u64> = HashMap::new();
    for row in table.rows() {
        *tally.entry(row).or_default() += 1;
    }
    tally.into_values().collect()
}

fn exposure_of_counts(counts: &[u64], n: u64, t: &Rational) -> Rational {
    let below: u64 = counts.iter().filter(|&&c| t.exceeds_fraction(c, n)).sum();
    Rational::ratio(below, n).expect("nonempty table")
}

pub fn run_protocol(config: &ProtocolConfig) -> Result<ProtocolOutcome> {
    let (u1, u2) = match &config.setting {
        Setting::Fixed { table } => (table.clone(), table.clone()),
        Setting::Statistical {
            population,
            round_one,
            round_two,
        } => {
            if *round_one == 0 || *round_two == 0 {
                return Err(invalid("cohorts", "both cohorts need at least one user"));
            }
            let mut rng = trial_rng(config.seed, COHORT_STREAM);
            let a = population.sample(*round_one, &mut rng)?;
            let b = population.sample(*round_two, &mut rng)?;
            (a, b)
        }
    };
    let (n1, n2) = (u1.n_rows() as u64, u2.n_rows() as u64);
    let (tallies, round_one) = run_round_one(&u1, config.seed)?;
    let names: Vec<String> = u1.columns().iter().map(|c| c.name.clone()).collect();
    let decision = select_release_set(&tallies, &names, n1, n2, &config.policy)?;
    let (released, round_two) = run_round_two(&u2, &decision.columns, config.seed)?;

    let counts = joint_counts(&released);
    let (realized, at_cert, holds) = match &decision.certificate {
        DecisionCertificate::Fixed(cert) => {
            let t = config.policy.target.threshold(n2)?;
            let realized = exposure_of_counts(&counts, n2, &t);
            let at_cert = exposure_of_counts(&counts, n2, &cert.joint_threshold);
            let holds = at_cert <= cert.bound && cert.joint_threshold >= t;
            (realized.to_f64(), at_cert.to_f64(), holds)
        }
        DecisionCertificate::Statistical(cert) => {
            let realized = rows_less_than_k_anonymous(&counts, cert.k) as f64 / n2 as f64;
            (realized, realized, realized <= cert.bound)
        }
    };
    Ok(ProtocolOutcome {
        round_one_users: u1,
        round_two_users: u2,
        tallies,
        certified_bound: decision.certificate.reported_bound(),
        decision,
        released,
        round_one,
        round_two,
        realized_exposure: realized,
        realized_at_certificate: at_cert,
        certificate_holds: holds,
    })
}

/// Result of checking an outcome's structural invariants.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    /// Every curator plaintext is a single `(feature, value, salt)` triple.
    pub curator_sees_single_features: bool,
    /// No shuffler-visible payload contains a user plaintext or a
    /// `feature=value|` string.
    pub shuffler_sees_no_plaintext: bool,
    /// Receivers got the shuffler's pool in the recorded permuted order.
    pub order_follows_permutation: bool,
    /// Plaintext multisets are preserved in both rounds.
    pub conservation: bool,
    /// Round-one tallies equal each column's empirical distribution.
    pub marginal_fidelity: bool,
    /// The released table is the round-two cohort restricted to the
    /// released columns, permuted.
    pub joint_fidelity: bool,
    pub certificate_recomputes: bool,
    /// Fixed setting only; statistical certificates hold with probability.
    pub certificate_sound: Option<bool>,
}

impl AuditReport {
    pub fn all_hold(&self) -> bool {
        self.curator_sees_single_features
            && self.shuffler_sees_no_plaintext
            && self.order_follows_permutation
            && self.conservation
            && self.marginal_fidelity
            && self.joint_fidelity
            && self.certificate_recomputes
            && self.certificate_sound.unwrap_or(true)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let checks = [
            (self.curator_sees_single_features, "curator_sees_single_features"),
            (self.shuffler_sees_no_plaintext, "shuffler_sees_no_plaintext"),
            (self.order_follows_permutation, "order_follows_permutation"),
            (self.conservation, "conservation"),
            (self.marginal_fidelity, "marginal_fidelity"),
            (self.joint_fidelity, "joint_fidelity"),
            (self.certificate_recomputes, "certificate_recomputes"),
            (self.certificate_sound.unwrap_or(true), "certificate_sound"),
        ];
        checks.iter().filter(|(ok, _)| !ok).map(|(_, n)| *n).collect()
    }
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

fn sorted(v: Vec<&[u8]>) -> Vec<&[u8]> {
    let mut v = v;
    v.sort_unstable();
    v
}

fn permutation_ok(tr: &ProtocolTranscript, receiver: Party) -> bool {
    let perm = tr.permutation();
    let pooled = tr.payloads(Party::Shuffler, Direction::Opened);
    let delivered = tr.payloads(receiver, Direction::Received);
    let mut seen = vec![false; perm.len()];
    for &i in perm {
        if i >= seen.len() || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    perm.len() == pooled.len()
        && delivered.len() == pooled.len()
        && perm.iter().enumerate().all(|(pos, &i)| delivered[pos] == pooled[i])
}

fn shuffler_blind(tr: &ProtocolTranscript, markers: &[Vec<u8>]) -> bool {
    let plains = tr.user_plaintexts();
    tr.log(Party::Shuffler).iter().all(|e| {
        plains.iter().all(|p| !contains(&e.payload, p)) && markers.iter().all(|m| !contains(&e.payload, m))
    })
}

pub fn audit(outcome: &ProtocolOutcome) -> AuditReport {
    let r1 = &outcome.round_one;
    let r2 = &outcome.round_two;
    let u1 = &outcome.round_one_users;
    let u2 = &outcome.round_two_users;

    let curator_plain = r1.payloads(Party::Curator, Direction::Opened);
    let curator_sees_single_features = curator_plain.len() == u1.n_rows() * u1.n_cols()
        && curator_plain.iter().all(|p| {
            decode_feature(p).is_ok_and(|(name, value, _)| {
                u1.column_index(&name).is_ok_and(|j| match &value {
                    Some(v) => u1.column(j).code_of(v).is_some(),
                    None => true,
                })
            })
        });

    let mut markers: Vec<Vec<u8>> = Vec::new();
    for c in u1.columns() {
        for v in &c.alphabet {
            markers.push(format!("{}={}|", c.name, v).into_bytes());
        }
    }
    let shuffler_sees_no_plaintext = shuffler_blind(r1, &markers) && shuffler_blind(r2, &markers);

    let order_follows_permutation =
        permutation_ok(r1, Party::Curator) && permutation_ok(r2, Party::Analyst);

    let conservation = sorted(r1.user_plaintexts()) == sorted(curator_plain.clone())
        && sorted(r2.user_plaintexts()) == sorted(r2.payloads(Party::Analyst, Direction::Opened));

    let marginal_fidelity = outcome.tallies.len() == u1.n_cols()
        && outcome
            .tallies
            .iter()
            .enumerate()
            .all(|(j, t)| empirical_distribution(u1, &[j]).is_ok_and(|e| &e == t));

    let cols = &outcome.decision.columns;
    let released = &outcome.released;
    let perm = r2.permutation();
    let joint_fidelity = released.n_rows() == u2.n_rows()
        && released.n_cols() == cols.len()
        && perm.len() == u2.n_rows()
        && (0..released.n_rows()).all(|pos| {
            let src = u2.row(perm[pos]);
            cols.iter().enumerate().all(|(c, &j)| released.cell(pos, c) == src[j])
        });

    let certificate_recomputes = match &outcome.decision.certificate {
        DecisionCertificate::Fixed(cert) => {
            let curves: Vec<ExposureCurve> =
                cols.iter().map(|&j| ExposureCurve::new(&outcome.tallies[j])).collect();
            let refs: Vec<&ExposureCurve> = curves.iter().collect();
            cert.verify_against(&refs)
        }
        DecisionCertificate::Statistical(cert) => cert.verify(),
    };
    let certificate_sound =
        (outcome.decision.policy.mode == PolicyMode::Fixed).then_some(outcome.certificate_holds);

    AuditReport {
        curator_sees_single_features,
        shuffler_sees_no_plaintext,
        order_follows_permutation,
        conservation,
        marginal_fidelity,
        joint_fidelity,
        certificate_recomputes,
        certificate_sound,
    }
}

/// Fraction of runs in which the certificate held, over `seeds`.
pub fn coverage<I: IntoIterator<Item = u64>>(base: &ProtocolConfig, seeds: I) -> Result<CoverageSummary> {
    let mut runs = 0usize;
    let mut held = 0usize;
    let mut released: BTreeMap<String, usize> = BTreeMap::new();
    for seed in seeds {
        let outcome = run_protocol(&ProtocolConfig {
            seed,
            ..base.clone()
        })?;
        runs += 1;
        held += usize::from(outcome.certificate_holds);
        *released.entry(outcome.decision.column_names.join(",")).or_default() += 1;
    }
    Ok(CoverageSummary {
        runs,
        held,
        fraction: if runs == 0 { 0.0 } else { held as f64 / runs as f64 },
        released_sets: released,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageSummary {
    pub runs: usize,
    pub held: usize,
    pub fraction: f64,
    /// How often each released column set was chosen.
    pub released_sets: BTreeMap<String, usize>,
}

/// Eight users described by the presence (`Y`) or absence (`N`) of the A,
/// B and Rh(D) antigens. Charlie is O+ and Zelda is AB−.
pub fn blood_type_demo() -> (Vec<String>, CategoricalTable) {
    let people = [
        ("Alice", "A+"),
        ("Bob", "B+"),
        ("Charlie", "O+"),
        ("Dana", "O+"),
        ("Erin", "A-"),
        ("Frank", "A+"),
        ("Grace", "O-"),
        ("Zelda", "AB-"),
    ];
    let yn = |b: bool| Some(if b { "Y" } else { "N" });
    let rows: Vec<Vec<Option<&str>>> = people
        .iter()
        .map(|(_, t)| {
            let (abo, rh) = t.split_at(t.len() - 1);
            vec![yn(abo.contains('A')), yn(abo.contains('B')), yn(rh == "+")]
        })
        .collect();
    let table = CategoricalTable::from_strings(&["A", "B", "Rh"], &rows).expect("static table");
    (people.iter().map(|(n, _)| n.to_string()).collect(), table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::composition::middle_user_example;
    use crate::protocol::policy::Target;

    fn fixed(table: CategoricalTable, policy: ReleasePolicy, seed: u64) -> ProtocolConfig {
        ProtocolConfig {
            setting: Setting::Fixed { table },
            policy,
            seed,
        }
    }

    #[test]
    fn blood_types_encode_charlie_and_zelda() {
        let (names, t) = blood_type_demo();
        let row = |who: &str| t.row_strings(names.iter().position(|n| n == who).unwrap());
        let s = |v: &str| Some(v.to_string());
        assert_eq!(row("Charlie"), vec![s("N"), s("N"), s("Y")]);
        assert_eq!(row("Zelda"), vec![s("Y"), s("Y"), s("N")]);
    }

    #[test]
    fn permissive_budget_releases_everything() {
        let (_, t) = blood_type_demo();
        let out = run_protocol(&fixed(t, ReleasePolicy::fixed(Target::K(2), 1.0), 11)).unwrap();
        assert_eq!(out.decision.columns, vec![0, 1, 2]);
        assert_eq!(
            empirical_distribution(&out.released, &[0, 1, 2]).unwrap(),
            empirical_distribution(&out.round_two_users, &[0, 1, 2]).unwrap()
        );
        let report = audit(&out);
        assert!(report.all_hold(), "{:?}", report.failures());
    }

    #[test]
    fn zero_budget_drops_columns_with_unique_values() {
        let t = CategoricalTable::from_strings(
            &["common", "rare"],
            &[
                vec![Some("a"), Some("x")],
                vec![Some("a"), Some("x")],
                vec![Some("b"), Some("x")],
                vec![Some("b"), Some("y")],
            ],
        )
        .unwrap();
        let out = run_protocol(&fixed(t, ReleasePolicy::fixed(Target::K(2), 0.0), 3)).unwrap();
        assert_eq!(out.decision.column_names, vec!["common".to_string()]);
        assert!(audit(&out).all_hold());
    }

    #[test]
    fn middle_user_releases_one_column() {
        let n = 100u64;
        let t = middle_user_example(n as usize).unwrap();
        let target = Target::T(Rational::ratio(2, n + 1).unwrap());
        let budget = 0.5 / (n + 1) as f64;
        let out = run_protocol(&fixed(t.clone(), ReleasePolicy::fixed(target.clone(), budget), 5)).unwrap();
        assert_eq!(out.decision.columns.len(), 1);
        let out = run_protocol(&fixed(t, ReleasePolicy::fixed(target, 1.0), 5)).unwrap();
        assert_eq!(out.decision.columns.len(), 2);
        assert_eq!(out.realized_exposure, 1.0 / (n + 1) as f64);
        assert!(out.certificate_holds);
    }

    #[test]
    fn same_seed_same_transcripts() {
        let (_, t) = blood_type_demo();
        let cfg = fixed(t, ReleasePolicy::fixed(Target::K(2), 0.5), 42);
        let a = run_protocol(&cfg).unwrap();
        let b = run_protocol(&cfg).unwrap();
        assert_eq!(a.round_one.to_lines(), b.round_one.to_lines());
        assert_eq!(a, b);
        let c = run_protocol(&ProtocolConfig { seed: 43, ..cfg }).unwrap();
        assert_ne!(a.round_one.to_lines(), c.round_one.to_lines());
    }

    #[test]
    fn statistical_setting_draws_two_cohorts() {
        let cfg = ProtocolConfig {
            setting: Setting::Statistical {
                population: RowDistribution::uniform("x", 4).unwrap(),
                round_one: 128,
                round_two: 64,
            },
            policy: ReleasePolicy::statistical(Target::K(4), 1.0),
            seed: 8,
        };
        let out = run_protocol(&cfg).unwrap();
        assert_eq!(out.round_one_users.n_rows(), 128);
        assert_eq!(out.released.n_rows(), 64);
        assert!(audit(&out).all_hold());
        assert!(out.certificate_holds);
    }
}
