use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::types::{ConversationRecord, RankList, T_MAX};

/// Standard deviation of the per-turn random walk of latent quality.
pub const LATENT_NOISE_STD: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub n_conversations: usize,
    /// Inclusive bounds on the number of turns.
    pub turns_min: usize,
    pub turns_max: usize,
    /// Candidates per rank list.
    pub k: usize,
    /// Per-turn improvement of latent retrieval quality.
    pub quality_drift: f64,
    pub p_question_absent: f64,
    pub noise_scale: f64,
    #[serde(skip)]
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            n_conversations: 1000,
            turns_min: 2,
            turns_max: T_MAX,
            k: 100,
            quality_drift: 0.15,
            p_question_absent: 0.05,
            noise_scale: 0.02,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 10 {
            return Err(validation(format!("k must be at least 10, got {}", self.k)));
        }
        if self.turns_min == 0 || self.turns_min > self.turns_max || self.turns_max > T_MAX {
            return Err(validation(format!(
                "turn range {}..={} must be non-empty within 1..={T_MAX}",
                self.turns_min, self.turns_max
            )));
        }
        if !(0.0..=1.0).contains(&self.p_question_absent) {
            return Err(validation("p_question_absent must lie in [0, 1]"));
        }
        if !self.quality_drift.is_finite() || !(self.noise_scale >= 0.0) || !self.noise_scale.is_finite() {
            return Err(validation("quality_drift must be finite and noise_scale non-negative"));
        }
        Ok(())
    }
}

/// Score list whose decay sharpens with quality `u`, plus Gaussian jitter,
/// sorted non-increasing.
fn scores_for_quality<R: Rng>(u: f64, k: usize, noise: &Normal<f64>, rng: &mut R) -> Vec<f64> {
    let decay = 1.0 + 9.0 * (1.0 - u);
    let mut scores: Vec<f64> = (0..k)
        .map(|i| (-(i as f64) / decay).exp() + noise.sample(rng))
        .collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    scores
}

fn rank_for_quality<R: Rng>(u: f64, k: usize, rng: &mut R) -> usize {
    let geo = Geometric::new(0.2 + 0.75 * u).expect("success probability in (0, 1]");
    1 + (geo.sample(rng) as usize).min(k - 1)
}

fn conversation_seed(seed: u64, index: usize) -> u64 {
    let mut z = seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 33)).wrapping_mul(0xFF51_AFD7_ED55_8CCD);
    z = (z ^ (z >> 33)).wrapping_mul(0xC4CE_B9FE_1A85_EC53);
    z ^ (z >> 33)
}

/// Conversations whose score shapes reveal (noisily) a latent retrieval
/// quality that also drives where the relevant candidate lands.
pub fn generate_synthetic(params: &GenParams) -> Result<Vec<ConversationRecord>> {
    params.validate()?;
    let score_noise = Normal::new(0.0, params.noise_scale).map_err(|e| validation(e.to_string()))?;
    let latent_noise = Normal::new(0.0, LATENT_NOISE_STD).expect("valid std");
    (0..params.n_conversations)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(conversation_seed(params.seed, i));
            let n = rng.random_range(params.turns_min..=params.turns_max);
            let mut u: f64 = rng.random();
            let mut v: f64 = rng.random();
            let mut turns = Vec::with_capacity(n);
            for _ in 0..n {
                u = (u + params.quality_drift + latent_noise.sample(&mut rng)).clamp(0.0, 1.0);
                v = (v + params.quality_drift + latent_noise.sample(&mut rng)).clamp(0.0, 1.0);
                let result_rank = rank_for_quality(u, params.k, &mut rng);
                let result = RankList::new(
                    scores_for_quality(u, params.k, &score_noise, &mut rng),
                    Some(result_rank),
                )?;
                let question_rank = rank_for_quality(v, params.k, &mut rng);
                let absent = rng.random::<f64>() < params.p_question_absent;
                let question = RankList::new(
                    scores_for_quality(v, params.k, &score_noise, &mut rng),
                    (!absent).then_some(question_rank),
                )?;
                turns.push((result, question));
            }
            ConversationRecord::new(format!("syn-{i:06}"), turns)
        })
        .collect()
}

/// Splits records by `ratios` (e.g. 8:1:1) in order; the last part takes the
/// remainder.
pub fn split_records(records: &[ConversationRecord], ratios: &[f64]) -> Result<Vec<Vec<ConversationRecord>>> {
    let total: f64 = ratios.iter().sum();
    if ratios.is_empty() || ratios.iter().any(|r| !(*r >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(validation(format!("split ratios must be non-negative and sum to 1, got {ratios:?}")));
    }
    let n = records.len();
    let mut parts = Vec::with_capacity(ratios.len());
    let mut start = 0;
    let mut cumulative = 0.0;
    for (i, r) in ratios.iter().enumerate() {
        cumulative += r;
        let end = if i + 1 == ratios.len() {
            n
        } else {
            ((cumulative * n as f64).round() as usize).clamp(start, n)
        };
        parts.push(records[start..end].to_vec());
        start = end;
    }
    Ok(parts)
}
