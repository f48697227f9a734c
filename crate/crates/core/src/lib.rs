//! Statistical k-anonymity: exposure metrics, composition bounds, estimation
//! error bounds, and a deterministic simulator of the two-round
//! shuffler/curator/analyst anonymization protocol.
//!
//! The exposure `Q(t)` of a database is the fraction of users whose row has
//! empirical probability strictly below `t`, i.e. who are less than
//! `(t·n)`-anonymous. The statistical exposure `Q_p(n, k)` is the probability
//! that a random user of an `n`-row i.i.d. sample from `p` is less than
//! `k`-anonymous.

pub mod composition;
pub mod dataio;
pub mod distribution;
pub mod entropy;
pub mod error;
pub mod estimation;
pub mod exposure;
pub mod protocol;
pub mod rational;
pub mod statistical;
pub mod table;

pub use composition::{
    best_bound, compose_general, compose_support, middle_user_example, slack_witness, BoundCertificate,
    CompositionRule, MarginalSpec,
};
pub use distribution::{empirical_distribution, DiscreteDistribution, Masses, ValueId};
pub use entropy::{entropy, entropy_exposure_bound, entropy_nats, entropy_tightness_witness};
pub use error::{Error, Result};
pub use estimation::{
    lecam_hard_pair, plugin_exposure_interval, required_sample_size, simulate_estimators,
    statistical_exposure_error_bound, EstimatorSummary, ExposureInterval, LeCamPair,
};
pub use exposure::{exposure, exposure_exact, ExposureCurve};
pub use rational::Rational;
pub use statistical::{binomial_cdf, statistical_exposure};
pub use table::{CategoricalTable, Cell, Column};
