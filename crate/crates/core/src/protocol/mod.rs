//! Simulation of the two-round release protocol.
//!
//! Round one: every user sends each feature value as a separate salted
//! message through a shuffler, so the curator learns only per-feature
//! tallies. The curator then picks a set of features whose joint release it
//! can certify. Round two: every user sends its row restricted to those
//! features, again through the shuffler, to the analyst.
//!
//! Each message is encrypted twice: the inner layer for the final receiver
//! and the outer layer for the shuffler, which peels it before mixing.

pub mod cipher;
pub mod policy;
pub mod rounds;
pub mod sim;
pub mod transcript;

pub use cipher::{CipherScheme, KeyPair, KeyedXorCipher};
pub use policy::{
    select_release_set, DecisionCertificate, PolicyMode, ReleaseDecision, ReleasePolicy,
    StatisticalCertificate, Target, UtilityOrder,
};
pub use rounds::{run_round_one, run_round_two};
pub use sim::{
    audit, blood_type_demo, coverage, run_protocol, AuditReport, CoverageSummary, ProtocolConfig,
    ProtocolOutcome, RowDistribution, Setting,
};
pub use transcript::{Direction, LogEntry, Party, ProtocolTranscript};
