mod common;

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use statanon::protocol::rounds::{decode_feature, decode_row};
use statanon::protocol::sim::blood_type_demo;
use statanon::protocol::{
    audit, run_protocol, run_round_one, run_round_two, Direction, Party, ProtocolConfig, ReleasePolicy, Setting,
    Target,
};
use statanon::{empirical_distribution, CategoricalTable};

fn owned(v: &[&str]) -> Vec<Option<String>> {
    v.iter().map(|s| Some(s.to_string())).collect()
}

#[test]
fn charlie_sends_one_message_per_feature() {
    let (names, table) = blood_type_demo();
    let charlie = names.iter().position(|n| n == "Charlie").unwrap();
    let (_, tr) = run_round_one(&table, 1).unwrap();
    let sent: Vec<(String, Option<String>)> = tr
        .payloads(Party::User(charlie), Direction::Composed)
        .into_iter()
        .map(|p| {
            let (name, value, _) = decode_feature(p).unwrap();
            (name, value)
        })
        .collect();
    let want: Vec<(String, Option<String>)> = ["A", "B", "Rh"]
        .iter()
        .zip(owned(&["N", "N", "Y"]))
        .map(|(n, v)| (n.to_string(), v))
        .collect();
    assert_eq!(sent, want);
    // Every curator plaintext carries exactly one feature.
    for p in tr.payloads(Party::Curator, Direction::Opened) {
        assert!(decode_feature(p).is_ok());
    }
}

#[test]
fn zelda_sends_the_whole_row_in_round_two() {
    let (names, table) = blood_type_demo();
    let zelda = names.iter().position(|n| n == "Zelda").unwrap();
    let (released, tr) = run_round_two(&table, &[0, 1, 2], 1).unwrap();
    let sent = tr.payloads(Party::User(zelda), Direction::Composed);
    assert_eq!(sent.len(), 1);
    assert_eq!(decode_row(sent[0]).unwrap().0, owned(&["Y", "Y", "N"]));
    let rows: Vec<_> = (0..released.n_rows()).map(|i| released.row_strings(i)).collect();
    assert!(rows.contains(&owned(&["Y", "Y", "N"])));
}

#[test]
fn salts_differ_between_identical_messages() {
    let (_, table) = blood_type_demo();
    let (_, tr) = run_round_one(&table, 5).unwrap();
    let plains = tr.user_plaintexts();
    let mut unique = plains.clone();
    unique.sort_unstable();
    unique.dedup();
    assert_eq!(unique.len(), plains.len());
}

#[test]
fn curator_tallies_match_a_direct_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for seed in 0..10 {
        let table = random_table(&mut rng, 50, 4, 5);
        let (tallies, _) = run_round_one(&table, seed).unwrap();
        for (j, tally) in tallies.iter().enumerate() {
            let mut direct: BTreeMap<Option<&str>, u64> = BTreeMap::new();
            for i in 0..table.n_rows() {
                *direct.entry(table.cell_str(i, j)).or_default() += 1;
            }
            let got: BTreeMap<Option<&str>, u64> = tally
                .values()
                .iter()
                .zip(tally.counts().unwrap())
                .map(|(v, &c)| (v.0[0].as_deref(), c))
                .collect();
            assert_eq!(got, direct);
            assert_eq!(tally, &empirical_distribution(&table, &[j]).unwrap());
        }
    }
}

#[test]
fn released_table_is_a_permutation_of_the_cohort() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..10 {
        let table = random_table(&mut rng, 50, 4, 5);
        let cols = [0usize, 2, 3];
        let (released, _) = run_round_two(&table, &cols, seed).unwrap();
        let mut got: Vec<_> = (0..released.n_rows()).map(|i| released.row_strings(i)).collect();
        let mut want: Vec<_> = (0..table.n_rows())
            .map(|i| cols.iter().map(|&j| table.cell_str(i, j).map(str::to_string)).collect::<Vec<_>>())
            .collect();
        got.sort();
        want.sort();
        assert_eq!(got, want);
    }
}

#[test]
fn empty_release_set_keeps_row_count() {
    let (_, table) = blood_type_demo();
    let (released, _) = run_round_two(&table, &[], 3).unwrap();
    assert_eq!(released.n_cols(), 0);
    assert_eq!(released.n_rows(), table.n_rows());
}

#[test]
fn random_fixed_runs_pass_the_audit() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for seed in 0..20u64 {
        let n = rng.random_range(4..=40);
        let table: CategoricalTable = random_table(&mut rng, n, 3, 4);
        let k = rng.random_range(1..=4.min(n as u64));
        let budget = rng.random_range(0.0..=1.0);
        let config = ProtocolConfig {
            setting: Setting::Fixed { table },
            policy: ReleasePolicy::fixed(Target::K(k), budget),
            seed,
        };
        let out = run_protocol(&config).unwrap();
        let report = audit(&out);
        assert!(report.all_hold(), "seed {seed}: {:?}", report.failures());
        assert!(out.certified_bound <= budget || out.decision.columns.is_empty());
        assert_eq!(run_protocol(&config).unwrap(), out);
    }
}
