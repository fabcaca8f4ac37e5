//! Comparison policies: fixed-turn, behavior cloning, reward-table
//! Q-learning, and the backtracking oracle.

mod ctxpred;
mod fixed;
mod oracle;
mod rcsq;

pub use ctxpred::{train_ctxpred, CtxPredConfig};
pub use fixed::{fixed_policy, FixedTurnPolicy};
pub use oracle::{oracle_evaluate, oracle_report};
pub use rcsq::{rcsq_reward, train_rcsq, RcsqConfig, RcsqPolicy, RCSQ_SWEEP};
