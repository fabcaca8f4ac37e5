use crate::env::{EnvState, Policy};
use crate::error::Result;

/// Asks at turns `1..=n_questions`, then returns results. Ignores features.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedTurnPolicy {
    pub n_questions: usize,
}

pub fn fixed_policy(n_questions: usize) -> FixedTurnPolicy {
    FixedTurnPolicy { n_questions }
}

impl Policy for FixedTurnPolicy {
    fn action_probs(&self, state: &EnvState) -> Result<[f64; 2]> {
        Ok(if state.turn <= self.n_questions {
            [0.0, 1.0]
        } else {
            [1.0, 0.0]
        })
    }
}
