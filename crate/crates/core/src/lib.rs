//! Multi-agent Q-learning for UAV downlink resource allocation.
//!
//! A fleet of UAVs flies straight across a disk of ground users. Each slot,
//! every UAV picks a user, a subchannel and a power level. The UAV earns the
//! achievable rate minus a power cost, but only if the user's SINR clears a
//! threshold. Each UAV learns independently with tabular Q-learning over a
//! two-state QoS indicator. A deferred-acceptance matcher and a uniform
//! random scheduler serve as baselines, and [`oracle`] provides exact
//! dynamic-programming references on small explicit MDPs.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod channel;
pub mod env;
pub mod error;
pub mod experiment;
pub mod learn;
pub mod metrics;
pub mod oracle;
pub mod radio;
pub mod rng;
pub mod scenario;
pub mod world;

pub use error::{Error, Result};
