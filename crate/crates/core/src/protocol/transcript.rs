use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Party {
    User(usize),
    Shuffler,
    Curator,
    Analyst,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::User(i) => write!(f, "user{i}"),
            Party::Shuffler => f.write_str("shuffler"),
            Party::Curator => f.write_str("curator"),
            Party::Analyst => f.write_str("analyst"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Plaintext a party put together before encrypting it.
    Composed,
    Sent,
    Received,
    /// Result of the party removing one encryption layer.
    Opened,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Composed => "composed",
            Direction::Sent => "sent",
            Direction::Received => "received",
            Direction::Opened => "opened",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub direction: Direction,
    pub hop: u32,
    /// The other endpoint of a sent or received message.
    pub counterpart: Option<Party>,
    pub payload: Vec<u8>,
}

impl LogEntry {
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(&self.payload))
    }
}

/// Everything each party saw during one round, in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolTranscript {
    pub round: u8,
    pub seed: u64,
    logs: BTreeMap<Party, Vec<LogEntry>>,
    /// Position `i` of the shuffler's output holds pooled message
    /// `permutation[i]`. Recorded for auditing only.
    permutation: Vec<usize>,
}

impl ProtocolTranscript {
    pub fn new(round: u8, seed: u64) -> Self {
        ProtocolTranscript {
            round,
            seed,
            logs: BTreeMap::new(),
            permutation: Vec::new(),
        }
    }

    pub(crate) fn note(&mut self, party: Party, direction: Direction, hop: u32, payload: Vec<u8>) {
        self.logs.entry(party).or_default().push(LogEntry {
            direction,
            hop,
            counterpart: None,
            payload,
        });
    }

    pub(crate) fn deliver(&mut self, from: Party, to: Party, hop: u32, payload: Vec<u8>) {
        self.logs.entry(from).or_default().push(LogEntry {
            direction: Direction::Sent,
            hop,
            counterpart: Some(to),
            payload: payload.clone(),
        });
        self.logs.entry(to).or_default().push(LogEntry {
            direction: Direction::Received,
            hop,
            counterpart: Some(from),
            payload,
        });
    }

    pub(crate) fn set_permutation(&mut self, permutation: Vec<usize>) {
        self.permutation = permutation;
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn parties(&self) -> impl Iterator<Item = Party> + '_ {
        self.logs.keys().copied()
    }

    pub fn log(&self, party: Party) -> &[LogEntry] {
        self.logs.get(&party).map_or(&[], Vec::as_slice)
    }

    /// Payloads of `party`'s entries with the given direction, in order.
    pub fn payloads(&self, party: Party, direction: Direction) -> Vec<&[u8]> {
        self.log(party)
            .iter()
            .filter(|e| e.direction == direction)
            .map(|e| e.payload.as_slice())
            .collect()
    }

    /// Plaintexts composed by all users, in pooled (user, message) order.
    pub fn user_plaintexts(&self) -> Vec<&[u8]> {
        self.logs
            .iter()
            .filter(|(p, _)| matches!(p, Party::User(_)))
            .flat_map(|(_, log)| {
                log.iter()
                    .filter(|e| e.direction == Direction::Composed)
                    .map(|e| e.payload.as_slice())
            })
            .collect()
    }

    /// Tab-separated `round, party, direction, hop, counterpart, sha256`
    /// lines, one per log entry.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (party, log) in &self.logs {
            for e in log {
                let counterpart = e.counterpart.map_or_else(|| "-".to_string(), |p| p.to_string());
                out.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\t{}\n",
                    self.round,
                    party,
                    e.direction,
                    e.hop,
                    counterpart,
                    e.digest()
                ));
            }
        }
        out
    }
}
