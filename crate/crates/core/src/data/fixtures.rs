//! Hand-shaped conversation sets whose experts are known in closed form.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{validation, Result};
use crate::types::{ConversationRecord, RankList};

const K: usize = 100;
const NOISE: f64 = 0.02;

const SHARP: f64 = 1.5;
const MEDIUM: f64 = 4.0;
const FLAT: f64 = 12.0;

/// `exp(-i / decay)` plus Gaussian jitter of scale `noise`, sorted
/// non-increasing.
pub fn shaped_scores(decay: f64, k: usize, noise: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let jitter = Normal::new(0.0, noise).expect("non-negative noise");
    let mut s: Vec<f64> = (0..k)
        .map(|i| (-(i as f64) / decay).exp() + jitter.sample(rng))
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

struct TurnSpec {
    result: (f64, usize),
    question: (f64, usize),
}

fn build(id: String, spec: &[TurnSpec], rng: &mut ChaCha8Rng) -> Result<ConversationRecord> {
    let turns = spec
        .iter()
        .map(|t| {
            Ok((
                RankList::new(shaped_scores(t.result.0, K, NOISE, rng), Some(t.result.1))?,
                RankList::new(shaped_scores(t.question.0, K, NOISE, rng), Some(t.question.1))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    ConversationRecord::new(id, turns)
}

/// Case A: a confident result list with the relevant result on top at turn 1.
fn case_a(id: String, rng: &mut ChaCha8Rng) -> Result<ConversationRecord> {
    build(
        id,
        &[
            TurnSpec { result: (SHARP, 1), question: (FLAT, 1) },
            TurnSpec { result: (SHARP, 1), question: (FLAT, 1) },
        ],
        rng,
    )
}

/// Case B: a flat result list with the relevant result at rank 20 and a
/// confident question list; the next turn's results are on target.
fn case_b(id: String, rng: &mut ChaCha8Rng) -> Result<ConversationRecord> {
    build(
        id,
        &[
            TurnSpec { result: (FLAT, 20), question: (SHARP, 1) },
            TurnSpec { result: (SHARP, 1), question: (FLAT, 1) },
        ],
        rng,
    )
}

/// Case C: relevant result at rank 2 now and rank 1 after one top-ranked
/// question; asking pays off only when `alpha > 0.5`.
fn case_c(id: String, rng: &mut ChaCha8Rng) -> Result<ConversationRecord> {
    build(
        id,
        &[
            TurnSpec { result: (MEDIUM, 2), question: (MEDIUM, 1) },
            TurnSpec { result: (SHARP, 1), question: (FLAT, 1) },
        ],
        rng,
    )
}

/// Alternating case A / case B two-turn conversations.
///
/// Case A is best answered immediately for any `alpha < 1`; case B is best
/// answered after one question whenever `alpha > 1/20`.
pub fn make_separable_set(n: usize, seed: u64) -> Result<Vec<ConversationRecord>> {
    if n < 2 {
        return Err(validation("separable set needs at least two conversations"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let id = format!("sep-{i:05}");
            if i % 2 == 0 {
                case_a(id, &mut rng)
            } else {
                case_b(id, &mut rng)
            }
        })
        .collect()
}

/// Cycles through cases A, B and C, so the expert's ask-rate grows once
/// `alpha` exceeds 0.5.
pub fn make_alpha_split_set(n: usize, seed: u64) -> Result<Vec<ConversationRecord>> {
    if n < 3 {
        return Err(validation("alpha split set needs at least three conversations"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let id = format!("mix-{i:05}");
            match i % 3 {
                0 => case_a(id, &mut rng),
                1 => case_b(id, &mut rng),
                _ => case_c(id, &mut rng),
            }
        })
        .collect()
}
