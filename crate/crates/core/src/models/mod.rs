//! The policy generator and the (state, action) discriminator, with their
//! losses and exact analytic gradients.

mod checkpoint;
mod mlp;

pub use checkpoint::{read_checkpoint, write_checkpoint, NetKind};
pub use mlp::Mlp;

use crate::error::{validation, Result};
use crate::features::{ActionFeatures, StateFeatures, ACTION_DIM, STATE_DIM};
use crate::types::Action;
use mlp::{log_softmax2, sigmoid, softmax2};

pub const DEFAULT_HIDDEN: usize = 64;

/// Discriminator outputs are clamped to this margin before taking logs.
pub const D_CLAMP: f64 = 1e-6;

/// Softmax policy over `[ReturnResults, AskQuestion]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet(pub Mlp);

/// Probability that a (state, action) pair comes from the expert.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscNet(pub Mlp);

impl PolicyNet {
    pub fn new(hidden: usize, seed: u64) -> Self {
        Self(Mlp::init(STATE_DIM, hidden, 2, seed))
    }

    pub fn zeros(hidden: usize) -> Self {
        Self(Mlp::zeros(STATE_DIM, hidden, 2))
    }

    pub fn logits(&self, s: &StateFeatures) -> Result<Vec<f64>> {
        let x = finite_input(s.to_vec())?;
        Ok(self.0.forward(&x).out)
    }
}

impl DiscNet {
    pub fn new(hidden: usize, seed: u64) -> Self {
        Self(Mlp::init(ACTION_DIM, hidden, 1, seed))
    }

    pub fn zeros(hidden: usize) -> Self {
        Self(Mlp::zeros(ACTION_DIM, hidden, 1))
    }
}

fn finite_input(x: Vec<f64>) -> Result<Vec<f64>> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(validation("network input contains a non-finite value"))
    }
}

impl crate::env::Policy for PolicyNet {
    fn action_probs(&self, state: &crate::env::EnvState) -> Result<[f64; 2]> {
        policy_forward(self, &state.features)
    }
}

pub fn policy_forward(net: &PolicyNet, s: &StateFeatures) -> Result<[f64; 2]> {
    Ok(softmax2(&net.logits(s)?))
}

/// Sigmoid output, kept inside the open unit interval.
pub fn disc_forward(net: &DiscNet, a: &ActionFeatures) -> Result<f64> {
    let x = finite_input(a.to_vec())?;
    Ok(sigmoid(net.0.forward(&x).out[0]).clamp(f64::EPSILON, 1.0 - f64::EPSILON))
}

/// `log D(s, a)` with `D` clamped to `[D_CLAMP, 1 - D_CLAMP]`.
pub fn disc_log_reward(net: &DiscNet, a: &ActionFeatures) -> Result<f64> {
    Ok(disc_forward(net, a)?.clamp(D_CLAMP, 1.0 - D_CLAMP).ln())
}

/// Least-squares discriminator loss
/// `sum_gen D^2 + sum_expert (D - 1)^2` and its gradient.
pub fn disc_ls_loss(
    net: &DiscNet,
    generated: &[ActionFeatures],
    expert: &[ActionFeatures],
) -> Result<(f64, DiscNet)> {
    if generated.is_empty() || expert.is_empty() {
        return Err(validation("discriminator loss needs generated and expert pairs"));
    }
    let mut grad = net.0.zeros_like();
    let mut loss = 0.0;
    let batches = [(generated, 0.0), (expert, 1.0)];
    for (pairs, target) in batches {
        for a in pairs {
            let x = finite_input(a.to_vec())?;
            let act = net.0.forward(&x);
            let d = sigmoid(act.out[0]);
            loss += (d - target) * (d - target);
            let d_out = 2.0 * (d - target) * d * (1.0 - d);
            net.0.backward(&x, &act, &[d_out], &mut grad);
        }
    }
    Ok((loss, DiscNet(grad)))
}

/// Policy-gradient objective
/// `mean(log G(a|s) * Q) + lambda * mean(H(G(.|s)))` and its gradient
/// (an ascent direction).
pub fn policy_objective(
    net: &PolicyNet,
    batch: &[(StateFeatures, Action, f64)],
    lambda: f64,
) -> Result<(f64, PolicyNet)> {
    if batch.is_empty() {
        return Err(validation("policy objective needs a non-empty batch"));
    }
    if !(lambda >= 0.0) {
        return Err(validation(format!("entropy weight must be non-negative, got {lambda}")));
    }
    let inv = 1.0 / batch.len() as f64;
    let mut grad = net.0.zeros_like();
    let mut objective = 0.0;
    for (s, action, q) in batch {
        if !q.is_finite() {
            return Err(validation("Q value is not finite"));
        }
        let x = finite_input(s.to_vec())?;
        let act = net.0.forward(&x);
        let logp = log_softmax2(&act.out);
        let p = [logp[0].exp(), logp[1].exp()];
        let entropy = -(p[0] * logp[0] + p[1] * logp[1]);
        objective += inv * (logp[action.index()] * q + lambda * entropy);
        let d_out: Vec<f64> = (0..2)
            .map(|j| {
                let indicator = if j == action.index() { 1.0 } else { 0.0 };
                inv * (q * (indicator - p[j]) - lambda * p[j] * (logp[j] + entropy))
            })
            .collect();
        net.0.backward(&x, &act, &d_out, &mut grad);
    }
    Ok((objective, PolicyNet(grad)))
}

/// Mean cross-entropy `-log G(a|s)` over labelled pairs and its gradient.
pub fn policy_cross_entropy(
    net: &PolicyNet,
    pairs: &[(StateFeatures, Action)],
) -> Result<(f64, PolicyNet)> {
    if pairs.is_empty() {
        return Err(validation("cross-entropy needs a non-empty batch"));
    }
    let inv = 1.0 / pairs.len() as f64;
    let mut grad = net.0.zeros_like();
    let mut loss = 0.0;
    for (s, action) in pairs {
        let x = finite_input(s.to_vec())?;
        let act = net.0.forward(&x);
        let logp = log_softmax2(&act.out);
        loss -= inv * logp[action.index()];
        let d_out: Vec<f64> = (0..2)
            .map(|j| {
                let indicator = if j == action.index() { 1.0 } else { 0.0 };
                inv * (logp[j].exp() - indicator)
            })
            .collect();
        net.0.backward(&x, &act, &d_out, &mut grad);
    }
    Ok((loss, PolicyNet(grad)))
}

/// Mean squared TD error `mean(0.5 * (out[a] - target)^2)` for a net whose
/// two raw outputs are action values.
pub fn action_value_loss(
    net: &PolicyNet,
    batch: &[(StateFeatures, Action, f64)],
) -> Result<(f64, PolicyNet)> {
    if batch.is_empty() {
        return Err(validation("TD loss needs a non-empty batch"));
    }
    let inv = 1.0 / batch.len() as f64;
    let mut grad = net.0.zeros_like();
    let mut loss = 0.0;
    for (s, action, target) in batch {
        let x = finite_input(s.to_vec())?;
        let act = net.0.forward(&x);
        let err = act.out[action.index()] - target;
        loss += inv * 0.5 * err * err;
        let mut d_out = [0.0; 2];
        d_out[action.index()] = inv * err;
        net.0.backward(&x, &act, &d_out, &mut grad);
    }
    Ok((loss, PolicyNet(grad)))
}
