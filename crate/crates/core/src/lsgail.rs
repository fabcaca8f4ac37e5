//! Least-squares generative adversarial imitation learning.
//!
//! Each epoch samples on-policy rollouts, fits the discriminator to separate
//! generated (state, action) pairs from expert ones with a least-squares
//! objective, then takes one policy-gradient step that uses suffix sums of
//! `log D` as action values. The loop only sees [`StrippedRecord`]s and
//! expert stop turns.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{episode_rng, evaluate_policy, run_episode, Episode};
use crate::error::{validation, Error, Result};
use crate::expert::{expert_action_features, ExpertLabel};
use crate::features::{ActionFeatures, StateFeatures};
use crate::models::{disc_log_reward, disc_ls_loss, policy_objective, DiscNet, PolicyNet, DEFAULT_HIDDEN};
use crate::types::{Action, ConversationRecord, StrippedRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Cascade alpha the expert labels were derived with.
    #[serde(skip)]
    pub alpha: f64,
    pub lr: f64,
    /// Entropy bonus weight.
    pub lambda: f64,
    pub disc_steps_per_gen_step: usize,
    pub epochs: usize,
    pub batch_conversations: usize,
    /// Sampled rollouts per conversation per epoch.
    pub rollouts_per_conversation: usize,
    #[serde(skip)]
    pub seed: u64,
    pub hidden: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            lr: 1e-3,
            lambda: 1e-2,
            disc_steps_per_gen_step: 5,
            epochs: 3000,
            batch_conversations: 64,
            rollouts_per_conversation: 1,
            seed: 0,
            hidden: DEFAULT_HIDDEN,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(validation(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.lr >= 0.0) || !(self.lambda >= 0.0) {
            return Err(validation("lr and lambda must be non-negative"));
        }
        if self.disc_steps_per_gen_step == 0
            || self.batch_conversations == 0
            || self.rollouts_per_conversation == 0
            || self.hidden == 0
        {
            return Err(validation(
                "disc_steps_per_gen_step, batch_conversations, rollouts_per_conversation and hidden must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Least-squares loss per pair, averaged over the inner discriminator steps.
    pub disc_loss: f64,
    pub policy_obj: f64,
    pub val_mean_ecrr: f64,
    /// Fraction of greedy validation decisions that ask.
    pub ask_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,disc_loss,policy_obj,val_mean_ecrr,ask_rate\n");
        for e in &self.epochs {
            let _ = writeln!(
                s,
                "{},{},{},{},{}",
                e.epoch, e.disc_loss, e.policy_obj, e.val_mean_ecrr, e.ask_rate
            );
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub policy: PolicyNet,
    pub disc: DiscNet,
    pub history: TrainHistory,
}

/// Monte-Carlo action values along one sampled trajectory:
/// `Q_t = sum_{u >= t} log D(s_u, a_u)`.
pub fn q_estimate(traj_actions: &[ActionFeatures], disc: &DiscNet) -> Result<Vec<f64>> {
    let mut q = vec![0.0; traj_actions.len()];
    let mut acc = 0.0;
    for (i, a) in traj_actions.iter().enumerate().rev() {
        acc += disc_log_reward(disc, a)?;
        q[i] = acc;
    }
    Ok(q)
}

fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed.wrapping_add((epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_labels(config: &TrainConfig, labels: &[ExpertLabel]) -> Result<()> {
    if let Some(l) = labels.iter().find(|l| l.alpha != config.alpha) {
        return Err(validation(format!(
            "expert label for {} was derived with alpha {} but training uses alpha {}",
            l.record_id, l.alpha, config.alpha
        )));
    }
    Ok(())
}

/// Trains policy and discriminator, reporting greedy validation ECRR at
/// `config.alpha` after every epoch.
pub fn train(
    config: &TrainConfig,
    train_records: &[ConversationRecord],
    expert_labels: &[ExpertLabel],
    val_records: &[ConversationRecord],
) -> Result<TrainOutput> {
    let stripped: Vec<StrippedRecord> = train_records.iter().map(ConversationRecord::strip).collect();
    let alphas = [config.alpha];
    train_stripped(config, &stripped, expert_labels, |policy| {
        if val_records.is_empty() {
            return Ok((0.0, 0.0));
        }
        let ev = evaluate_policy(policy, val_records, &alphas)?;
        Ok((ev.report.ecrr_by_alpha[0].1, ev.ask_rate))
    })
}

/// The training loop proper. `validate` returns `(mean ECRR, ask rate)` for
/// the current policy and only feeds the history.
///
/// It accepts only relevance-free records:
///
/// ```compile_fail
/// use convlab_core::data::make_separable_set;
/// use convlab_core::lsgail::{train_stripped, TrainConfig};
/// let records = make_separable_set(4, 0).unwrap();
/// let _ = train_stripped(&TrainConfig::default(), &records, &[], |_| Ok((0.0, 0.0)));
/// ```
pub fn train_stripped<F>(
    config: &TrainConfig,
    records: &[StrippedRecord],
    expert_labels: &[ExpertLabel],
    mut validate: F,
) -> Result<TrainOutput>
where
    F: FnMut(&PolicyNet) -> Result<(f64, f64)>,
{
    config.validate()?;
    check_labels(config, expert_labels)?;
    if records.is_empty() {
        return Err(validation("training needs at least one record"));
    }
    let expert = expert_action_features(records, expert_labels)?;

    let mut policy = PolicyNet::new(config.hidden, config.seed);
    let mut disc = DiscNet::new(config.hidden, config.seed.wrapping_add(1));
    let mut history = TrainHistory::default();

    for epoch in 0..config.epochs {
        let seed = epoch_seed(config.seed, epoch);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let batch = config.batch_conversations.min(records.len());
        let mut chosen = sample(&mut rng, records.len(), batch).into_vec();
        chosen.sort_unstable();
        let jobs: Vec<usize> = chosen
            .iter()
            .flat_map(|&i| (0..config.rollouts_per_conversation).map(move |j| i * config.rollouts_per_conversation + j))
            .collect();
        let episodes: Vec<(usize, Episode)> = jobs
            .par_iter()
            .map(|&job| {
                let record = &records[job / config.rollouts_per_conversation];
                run_episode(&policy, record, &mut episode_rng(seed, job), true).map(|e| (job, e))
            })
            .collect::<Result<_>>()?;

        let per_episode: Vec<Vec<ActionFeatures>> = episodes
            .iter()
            .map(|(job, e)| e.action_features(&records[job / config.rollouts_per_conversation]))
            .collect::<Result<_>>()?;
        let generated: Vec<ActionFeatures> = per_episode.iter().flatten().cloned().collect();

        let mut disc_loss = 0.0;
        for _ in 0..config.disc_steps_per_gen_step {
            let expert_batch: Vec<ActionFeatures> = (0..generated.len())
                .map(|_| expert[rng.random_range(0..expert.len())].clone())
                .collect();
            let (loss, grad) = disc_ls_loss(&disc, &generated, &expert_batch)?;
            if !loss.is_finite() {
                return Err(Error::Divergence(format!("discriminator loss is {loss} at epoch {epoch}")));
            }
            disc.0.add_scaled(-config.lr, &grad.0);
            disc_loss += loss / (2 * generated.len()) as f64;
        }
        disc_loss /= config.disc_steps_per_gen_step as f64;

        let mut steps: Vec<(StateFeatures, Action, f64)> = Vec::with_capacity(generated.len());
        for ((_, episode), feats) in episodes.iter().zip(&per_episode) {
            let q = q_estimate(feats, &disc)?;
            for ((_, state, action), q) in episode.steps.iter().zip(q) {
                steps.push((state.clone(), *action, q));
            }
        }
        let baseline = steps.iter().map(|s| s.2).sum::<f64>() / steps.len() as f64;
        for s in &mut steps {
            s.2 -= baseline;
        }
        let (policy_obj, grad) = policy_objective(&policy, &steps, config.lambda)?;
        if !policy_obj.is_finite() {
            return Err(Error::Divergence(format!("policy objective is {policy_obj} at epoch {epoch}")));
        }
        policy.0.add_scaled(config.lr, &grad.0);
        if !policy.0.is_finite() || !disc.0.is_finite() {
            return Err(Error::Divergence(format!("non-finite weights after epoch {epoch}")));
        }

        let (val_mean_ecrr, ask_rate) = validate(&policy)?;
        history.epochs.push(EpochStats {
            epoch,
            disc_loss,
            policy_obj,
            val_mean_ecrr,
            ask_rate,
        });
    }

    Ok(TrainOutput {
        policy,
        disc,
        history,
    })
}
