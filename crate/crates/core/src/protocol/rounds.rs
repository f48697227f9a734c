//! The two message rounds. In each, every sender double-encrypts its
//! salted plaintexts (inner layer for the final receiver, outer layer for
//! the shuffler); the shuffler peels its layer and forwards the pool in a
//! seeded uniformly random order; the receiver peels the inner layer.

use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;
use rand::RngCore;
use rand_chacha::ChaCha8Rng;

use super::cipher::{CipherScheme, KeyedXorCipher};
use super::transcript::{Direction, Party, ProtocolTranscript};
use crate::distribution::{DiscreteDistribution, ValueId};
use crate::error::{Error, Result};
use crate::estimation::trial_rng;
use crate::table::{CategoricalTable, Cell, Column};

pub const SALT_LEN: usize = 16;

/// Streams of the per-run generator used by each round.
pub(crate) const ROUND_ONE_STREAM: u64 = 1;
pub(crate) const ROUND_TWO_STREAM: u64 = 2;

fn salt(rng: &mut dyn RngCore) -> [u8; SALT_LEN] {
    let mut s = [0u8; SALT_LEN];
    rng.fill_bytes(&mut s);
    s
}

fn split_salt(bytes: &[u8]) -> Result<(&[u8], [u8; SALT_LEN])> {
    if bytes.len() < SALT_LEN + 1 || bytes[bytes.len() - SALT_LEN - 1] != b'|' {
        return Err(Error::MalformedPlaintext("missing salt suffix".into()));
    }
    let (body, s) = bytes.split_at(bytes.len() - SALT_LEN);
    Ok((&body[..body.len() - 1], s.try_into().expect("fixed length")))
}

/// `name=value|salt`, with an empty value for ⊥.
pub fn encode_feature(name: &str, value: Option<&str>, salt: &[u8; SALT_LEN]) -> Result<Vec<u8>> {
    if name.contains('=') {
        return Err(Error::Schema(format!("feature name {name:?} contains '='")));
    }
    let mut out = format!("{name}={}|", value.unwrap_or("")).into_bytes();
    out.extend_from_slice(salt);
    Ok(out)
}

pub fn decode_feature(bytes: &[u8]) -> Result<(String, Option<String>, [u8; SALT_LEN])> {
    let (body, s) = split_salt(bytes)?;
    let body = std::str::from_utf8(body).map_err(|e| Error::MalformedPlaintext(e.to_string()))?;
    let (name, value) = body
        .split_once('=')
        .ok_or_else(|| Error::MalformedPlaintext(format!("no '=' in {body:?}")))?;
    let value = (!value.is_empty()).then(|| value.to_string());
    Ok((name.to_string(), value, s))
}

/// JSON array of the row's values (`null` for ⊥), then `|salt`.
pub fn encode_row(values: &[Option<&str>], salt: &[u8; SALT_LEN]) -> Vec<u8> {
    let mut out = serde_json::to_vec(values).expect("strings serialize");
    out.push(b'|');
    out.extend_from_slice(salt);
    out
}

pub fn decode_row(bytes: &[u8]) -> Result<(Vec<Option<String>>, [u8; SALT_LEN])> {
    let (body, s) = split_salt(bytes)?;
    let values = serde_json::from_slice(body).map_err(|e| Error::MalformedPlaintext(e.to_string()))?;
    Ok((values, s))
}

/// Sends every `(sender, plaintext)` through the shuffler to `receiver` and
/// returns the plaintexts in the order the receiver opened them.
fn mix(
    transcript: &mut ProtocolTranscript,
    cipher: &dyn CipherScheme,
    rng: &mut ChaCha8Rng,
    messages: Vec<(Party, Vec<u8>)>,
    receiver: Party,
) -> Result<Vec<Vec<u8>>> {
    let shuffler_keys = cipher.keygen(rng);
    let receiver_keys = cipher.keygen(rng);

    for (sender, plain) in messages {
        let inner = cipher.encrypt(&receiver_keys.public, &plain, rng)?;
        let outer = cipher.encrypt(&shuffler_keys.public, &inner, rng)?;
        transcript.note(sender, Direction::Composed, 0, plain);
        transcript.deliver(sender, Party::Shuffler, 0, outer);
    }

    let pooled: Vec<Vec<u8>> = transcript
        .payloads(Party::Shuffler, Direction::Received)
        .into_iter()
        .map(|ct| cipher.decrypt(&shuffler_keys.private, ct))
        .collect::<Result<_>>()?;
    for inner in &pooled {
        transcript.note(Party::Shuffler, Direction::Opened, 0, inner.clone());
    }
    let mut permutation: Vec<usize> = (0..pooled.len()).collect();
    permutation.shuffle(rng);
    for &i in &permutation {
        transcript.deliver(Party::Shuffler, receiver, 1, pooled[i].clone());
    }
    transcript.set_permutation(permutation);

    let opened: Vec<Vec<u8>> = transcript
        .payloads(receiver, Direction::Received)
        .into_iter()
        .map(|ct| cipher.decrypt(&receiver_keys.private, ct))
        .collect::<Result<_>>()?;
    for plain in &opened {
        transcript.note(receiver, Direction::Opened, 1, plain.clone());
    }
    Ok(opened)
}

fn code_in(column: &Column, value: Option<&str>) -> Result<Cell> {
    match value {
        None => Ok(None),
        Some(v) => column.code_of(v).map(Some).ok_or_else(|| {
            Error::MalformedPlaintext(format!("{v:?} is not in the alphabet of {}", column.name))
        }),
    }
}

/// Round one: each user sends one message per feature; the curator learns
/// only per-feature tallies.
pub fn run_round_one_with(
    users: &CategoricalTable,
    cipher: &dyn CipherScheme,
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<(Vec<DiscreteDistribution>, ProtocolTranscript)> {
    let mut transcript = ProtocolTranscript::new(1, seed);
    let mut messages = Vec::with_capacity(users.n_rows() * users.n_cols());
    for i in 0..users.n_rows() {
        for j in 0..users.n_cols() {
            let s = salt(rng);
            let plain = encode_feature(&users.column(j).name, users.cell_str(i, j), &s)?;
            messages.push((Party::User(i), plain));
        }
    }
    let opened = mix(&mut transcript, cipher, rng, messages, Party::Curator)?;

    let by_name: HashMap<&str, usize> = users
        .columns()
        .iter()
        .enumerate()
        .map(|(j, c)| (c.name.as_str(), j))
        .collect();
    let mut tallies: Vec<BTreeMap<Cell, u64>> = vec![BTreeMap::new(); users.n_cols()];
    for plain in &opened {
        let (name, value, _) = decode_feature(plain)?;
        let j = *by_name
            .get(name.as_str())
            .ok_or_else(|| Error::MalformedPlaintext(format!("unknown feature {name:?}")))?;
        let cell = code_in(users.column(j), value.as_deref())?;
        *tallies[j].entry(cell).or_default() += 1;
    }
    let dists = tallies
        .into_iter()
        .enumerate()
        .map(|(j, tally)| {
            let column = users.column(j);
            let (values, counts) = tally
                .into_iter()
                .map(|(cell, n)| {
                    let label = cell.map(|c| column.alphabet[c as usize].clone());
                    (ValueId(vec![label]), n)
                })
                .unzip();
            DiscreteDistribution::from_counts(values, counts)
        })
        .collect::<Result<_>>()?;
    Ok((dists, transcript))
}

pub fn run_round_one(
    users: &CategoricalTable,
    seed: u64,
) -> Result<(Vec<DiscreteDistribution>, ProtocolTranscript)> {
    let mut rng = trial_rng(seed, ROUND_ONE_STREAM);
    run_round_one_with(users, &KeyedXorCipher, &mut rng, seed)
}

/// Round two: each user sends one freshly salted message holding its whole
/// row restricted to `columns`; the analyst assembles the released table in
/// the order the shuffler delivered it.
pub fn run_round_two_with(
    users: &CategoricalTable,
    columns: &[usize],
    cipher: &dyn CipherScheme,
    rng: &mut ChaCha8Rng,
    seed: u64,
) -> Result<(CategoricalTable, ProtocolTranscript)> {
    if !columns.is_empty() {
        users.select(columns)?;
    }
    let mut transcript = ProtocolTranscript::new(2, seed);
    let mut messages = Vec::with_capacity(users.n_rows());
    for i in 0..users.n_rows() {
        let values: Vec<Option<&str>> = columns.iter().map(|&j| users.cell_str(i, j)).collect();
        messages.push((Party::User(i), encode_row(&values, &salt(rng))));
    }
    let opened = mix(&mut transcript, cipher, rng, messages, Party::Analyst)?;

    if columns.is_empty() {
        for plain in &opened {
            let (values, _) = decode_row(plain)?;
            if !values.is_empty() {
                return Err(Error::MalformedPlaintext("unexpected row values".into()));
            }
        }
        return Ok((CategoricalTable::without_columns(users.n_rows())?, transcript));
    }
    let schema: Vec<Column> = columns.iter().map(|&j| users.column(j).clone()).collect();
    let rows = opened
        .iter()
        .map(|plain| {
            let (values, _) = decode_row(plain)?;
            if values.len() != schema.len() {
                return Err(Error::MalformedPlaintext(format!(
                    "row has {} values, expected {}",
                    values.len(),
                    schema.len()
                )));
            }
            schema
                .iter()
                .zip(&values)
                .map(|(c, v)| code_in(c, v.as_deref()))
                .collect()
        })
        .collect::<Result<Vec<Vec<Cell>>>>()?;
    Ok((CategoricalTable::new(schema, rows)?, transcript))
}

pub fn run_round_two(
    users: &CategoricalTable,
    columns: &[usize],
    seed: u64,
) -> Result<(CategoricalTable, ProtocolTranscript)> {
    let mut rng = trial_rng(seed, ROUND_TWO_STREAM);
    run_round_two_with(users, columns, &KeyedXorCipher, &mut rng, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::empirical_distribution;

    #[test]
    fn feature_codec() {
        let s = [7u8; SALT_LEN];
        let m = encode_feature("A", Some("Y"), &s).unwrap();
        assert_eq!(decode_feature(&m).unwrap(), ("A".into(), Some("Y".into()), s));
        let m = encode_feature("A", None, &s).unwrap();
        assert_eq!(decode_feature(&m).unwrap().1, None);
        let m = encode_feature("A", Some("x=|y"), &s).unwrap();
        assert_eq!(decode_feature(&m).unwrap().1.as_deref(), Some("x=|y"));
        assert!(encode_feature("a=b", Some("1"), &s).is_err());
        assert!(decode_feature(b"short").is_err());
    }

    #[test]
    fn row_codec() {
        let s = [1u8; SALT_LEN];
        let m = encode_row(&[Some("1"), None], &s);
        assert_eq!(decode_row(&m).unwrap().0, vec![Some("1".to_string()), None]);
    }

    #[test]
    fn single_user_single_column() {
        let t = CategoricalTable::from_strings(&["x"], &[vec![Some("v")]]).unwrap();
        let (tallies, tr) = run_round_one(&t, 0).unwrap();
        assert_eq!(tallies[0], empirical_distribution(&t, &[0]).unwrap());
        assert_eq!(tr.permutation(), &[0]);
    }

    #[test]
    fn empty_release_keeps_row_count() {
        let t = CategoricalTable::from_strings(&["x"], &[vec![Some("a")], vec![Some("b")]]).unwrap();
        let (released, _) = run_round_two(&t, &[], 5).unwrap();
        assert_eq!((released.n_rows(), released.n_cols()), (2, 0));
    }
}
