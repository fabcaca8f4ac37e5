//! A laboratory for learning and evaluating conversational search policies
//! that choose, turn by turn, between asking a clarifying question and
//! returning results.
//!
//! The pieces:
//! - [`types`] and [`features`]: conversations, rank lists, trajectories, and
//!   leakage-free numeric state views.
//! - [`metrics`]: expected conversational reciprocal rank (ECRR) under a
//!   cascade user model, plus trajectory-level recall and MRR.
//! - [`expert`]: best-stop-point demonstrations derived with ECRR.
//! - [`env`]: rollout semantics over a conversation.
//! - [`models`] and [`lsgail`]: least-squares adversarial imitation learning.
//! - [`baselines`]: fixed-turn, behavior cloning, reward-table Q-learning and
//!   the oracle.
//! - [`data`]: synthetic generation, fixtures and JSON Lines persistence.

pub mod baselines;
pub mod data;
pub mod env;
pub mod error;
pub mod experiment;
pub mod expert;
pub mod features;
pub mod lsgail;
pub mod metrics;
pub mod models;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    Action, CascadeParams, ConversationRecord, ConversationView, RankList, StrippedRecord,
    Trajectory, TurnRetrieval, T_MAX,
};
