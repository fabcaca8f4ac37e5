//! Behavior cloning: a supervised classifier from state features to the
//! expert's action.

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::features::StateFeatures;
use crate::models::{policy_cross_entropy, PolicyNet, DEFAULT_HIDDEN};
use crate::types::Action;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CtxPredConfig {
    pub lr: f64,
    pub epochs: usize,
    pub hidden: usize,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for CtxPredConfig {
    fn default() -> Self {
        Self {
            lr: 0.5,
            epochs: 500,
            hidden: DEFAULT_HIDDEN,
            seed: 0,
        }
    }
}

/// Full-batch gradient descent on the mean cross-entropy.
pub fn train_ctxpred(expert_pairs: &[(StateFeatures, Action)], config: &CtxPredConfig) -> Result<PolicyNet> {
    if expert_pairs.is_empty() {
        return Err(validation("behavior cloning needs at least one expert pair"));
    }
    if config.hidden == 0 || !(config.lr >= 0.0) {
        return Err(validation("behavior cloning needs a positive width and non-negative lr"));
    }
    let mut net = PolicyNet::new(config.hidden, config.seed);
    for epoch in 0..config.epochs {
        let (loss, grad) = policy_cross_entropy(&net, expert_pairs)?;
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("cross-entropy is {loss} at epoch {epoch}")));
        }
        net.0.add_scaled(-config.lr, &grad.0);
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SHAPE_LEN;
    use crate::models::policy_forward;

    fn state(level: f64) -> StateFeatures {
        StateFeatures {
            turn_fraction: 0.0,
            result_shape: [level; SHAPE_LEN],
            question_shape: [1.0 - level; SHAPE_LEN],
        }
    }

    #[test]
    fn memorizes_a_single_pair() {
        let pairs = vec![(state(0.3), Action::AskQuestion)];
        let net = train_ctxpred(&pairs, &CtxPredConfig { epochs: 200, ..Default::default() }).unwrap();
        assert!(policy_forward(&net, &pairs[0].0).unwrap()[1] > 0.9);
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(train_ctxpred(&[], &CtxPredConfig::default()).is_err());
    }
}
