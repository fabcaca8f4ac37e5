//! Risk-aware Q-learning baseline driven by a hand-set reward table: a
//! returned result list earns its reciprocal rank, a clarifying question earns
//! `r_cq` when the relevant question sits at rank 1 (and the user can answer)
//! and `p_cq` otherwise.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{reset, step, EnvState, Policy};
use crate::error::{validation, Error, Result};
use crate::features::StateFeatures;
use crate::models::{action_value_loss, PolicyNet, DEFAULT_HIDDEN};
use crate::types::{Action, ConversationRecord, TurnRetrieval};

/// Question rewards swept in comparisons.
pub const RCSQ_SWEEP: [f64; 6] = [-0.1, 0.11, 0.3, 0.5, 0.7, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RcsqConfig {
    #[serde(skip)]
    pub r_cq: f64,
    #[serde(skip)]
    pub p_cq: f64,
    pub gamma: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_conversations: usize,
    #[serde(skip)]
    pub seed: u64,
    pub hidden: usize,
    /// Exploration rate decays linearly from start to end over the epochs.
    pub epsilon_start: f64,
    pub epsilon_end: f64,
}

impl Default for RcsqConfig {
    fn default() -> Self {
        Self {
            r_cq: 0.11,
            p_cq: -0.89,
            gamma: 1.0,
            lr: 0.05,
            epochs: 300,
            batch_conversations: 128,
            seed: 0,
            hidden: DEFAULT_HIDDEN,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
        }
    }
}

impl RcsqConfig {
    /// Reward `r` for a relevant question and `r - 1` otherwise.
    pub fn with_reward(r: f64) -> Self {
        Self {
            r_cq: r,
            p_cq: r - 1.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.r_cq, self.p_cq, self.gamma, self.lr, self.epsilon_start, self.epsilon_end]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.lr < 0.0 || !(0.0..=1.0).contains(&self.gamma) {
            return Err(validation("RCSQ rewards, gamma and lr must be finite with gamma in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.epsilon_start) || !(0.0..=1.0).contains(&self.epsilon_end) {
            return Err(validation("RCSQ epsilon schedule must lie in [0, 1]"));
        }
        if self.batch_conversations == 0 || self.hidden == 0 {
            return Err(validation("RCSQ batch size and hidden width must be positive"));
        }
        Ok(())
    }

    fn epsilon(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 {
            return self.epsilon_end;
        }
        let f = epoch as f64 / (self.epochs - 1) as f64;
        self.epsilon_start + f * (self.epsilon_end - self.epsilon_start)
    }
}

pub fn rcsq_reward(turn: &TurnRetrieval, action: Action, config: &RcsqConfig) -> f64 {
    match action {
        Action::ReturnResults => turn.result_list.reciprocal_rank(),
        Action::AskQuestion => {
            if turn.user_answer_available && turn.question_list.relevant_rank() == Some(1) {
                config.r_cq
            } else {
                config.p_cq
            }
        }
    }
}

/// Greedy policy over a learned action-value net.
#[derive(Debug, Clone, PartialEq)]
pub struct RcsqPolicy {
    pub qnet: PolicyNet,
}

impl RcsqPolicy {
    pub fn q_values(&self, s: &StateFeatures) -> Result<[f64; 2]> {
        let z = self.qnet.logits(s)?;
        Ok([z[0], z[1]])
    }
}

fn greedy(q: [f64; 2]) -> Action {
    if q[1] > q[0] {
        Action::AskQuestion
    } else {
        Action::ReturnResults
    }
}

impl Policy for RcsqPolicy {
    fn action_probs(&self, state: &EnvState) -> Result<[f64; 2]> {
        let mut p = [0.0; 2];
        p[greedy(self.q_values(&state.features)?).index()] = 1.0;
        Ok(p)
    }
}

struct Transition {
    state: StateFeatures,
    action: Action,
    reward: f64,
    next: Option<StateFeatures>,
}

fn explore(
    policy: &RcsqPolicy,
    record: &ConversationRecord,
    config: &RcsqConfig,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<Transition>,
) -> Result<()> {
    let mut state = reset(record)?;
    loop {
        let action = if rng.random::<f64>() < epsilon {
            Action::from_index(rng.random_range(0..2))
        } else {
            greedy(policy.q_values(&state.features)?)
        };
        let reward = rcsq_reward(record.turn(state.turn)?, action, config);
        let next = step(record, &state, action)?;
        out.push(Transition {
            state: state.features.clone(),
            action,
            reward,
            next: (!next.terminal).then(|| next.features.clone()),
        });
        if next.terminal {
            return Ok(());
        }
        state = next;
    }
}

/// Temporal-difference Q-learning with epsilon-greedy exploration. Each epoch
/// explores a batch of conversations and takes one semi-gradient step on the
/// squared TD error of the collected transitions.
pub fn train_rcsq(config: &RcsqConfig, records: &[ConversationRecord]) -> Result<RcsqPolicy> {
    config.validate()?;
    if records.is_empty() {
        return Err(validation("RCSQ training needs at least one record"));
    }
    let mut policy = RcsqPolicy {
        qnet: PolicyNet::new(config.hidden, config.seed),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5eed_0f7d);
    for epoch in 0..config.epochs {
        let epsilon = config.epsilon(epoch);
        let batch = config.batch_conversations.min(records.len());
        let mut transitions = Vec::new();
        let mut chosen = sample(&mut rng, records.len(), batch).into_vec();
        chosen.sort_unstable();
        for i in chosen {
            explore(&policy, &records[i], config, epsilon, &mut rng, &mut transitions)?;
        }
        let targets = transitions
            .iter()
            .map(|t| {
                let future = match &t.next {
                    Some(s) => {
                        let q = policy.q_values(s)?;
                        config.gamma * q[0].max(q[1])
                    }
                    None => 0.0,
                };
                Ok((t.state.clone(), t.action, t.reward + future))
            })
            .collect::<Result<Vec<_>>>()?;
        let (loss, grad) = action_value_loss(&policy.qnet, &targets)?;
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("RCSQ TD loss is {loss} at epoch {epoch}")));
        }
        policy.qnet.0.add_scaled(-config.lr, &grad.0);
        if !policy.qnet.0.is_finite() {
            return Err(Error::Divergence(format!("RCSQ weights non-finite at epoch {epoch}")));
        }
    }
    Ok(policy)
}
