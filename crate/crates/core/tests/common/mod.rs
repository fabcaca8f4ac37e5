#![allow(dead_code)]

use convlab_core::models::Mlp;
use convlab_core::{ConversationRecord, RankList, Trajectory};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn sorted_scores(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut s: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Rank within `1..=k`, absent with probability `p_absent`, skewed toward the top.
pub fn random_rank(rng: &mut ChaCha8Rng, k: usize, p_absent: f64) -> Option<usize> {
    if rng.random_bool(p_absent) {
        return None;
    }
    if rng.random_bool(0.5) {
        Some(rng.random_range(1..=k.min(3)))
    } else {
        Some(rng.random_range(1..=k))
    }
}

pub fn random_list(rng: &mut ChaCha8Rng, k: usize, p_absent: f64) -> RankList {
    let rank = random_rank(rng, k, p_absent);
    RankList::new(sorted_scores(rng, k), rank).unwrap()
}

pub fn random_record(rng: &mut ChaCha8Rng, id: usize) -> ConversationRecord {
    let n = rng.random_range(1..=10);
    let k = rng.random_range(1..=12);
    let turns = (0..n)
        .map(|_| (random_list(rng, k, 0.1), random_list(rng, k, 0.1)))
        .collect();
    ConversationRecord::new(format!("r{id}"), turns).unwrap()
}

pub fn random_trajectory(rng: &mut ChaCha8Rng) -> Trajectory {
    let k = rng.random_range(1..=12);
    let asks = rng.random_range(0..10);
    let question_lists = (0..asks).map(|_| random_list(rng, k, 0.1)).collect();
    let abandoned = rng.random_bool(0.05);
    Trajectory {
        record_id: "t".into(),
        question_lists,
        final_result_list: (!abandoned).then(|| random_list(rng, k, 0.1)),
        stop_turn: if abandoned { asks.max(1) } else { asks + 1 },
    }
}

/// ECRR from raw ranks, written independently of the library.
pub fn ecrr_from_ranks(question_ranks: &[Option<usize>], result_rank: Option<usize>, alpha: f64) -> f64 {
    let mut value = match result_rank {
        Some(r) => 1.0 / r as f64,
        None => return 0.0,
    };
    for q in question_ranks {
        match q {
            Some(r) => {
                for _ in 0..*r {
                    value *= alpha;
                }
            }
            None => return 0.0,
        }
    }
    value
}

/// Relative error of an analytic gradient against central differences of
/// `f` over every parameter of `net`, measured on the whole vector.
pub fn gradient_rel_error(net: &Mlp, analytic: &Mlp, f: impl Fn(&Mlp) -> f64) -> f64 {
    let h = 1e-6;
    let mut probe = net.clone();
    let n = net.num_params();
    let mut diff = 0.0;
    let mut scale = 0.0;
    let analytic: Vec<f64> = analytic.params().copied().collect();
    for i in 0..n {
        let orig = *probe.params().nth(i).unwrap();
        *probe.params_mut().nth(i).unwrap() = orig + h;
        let up = f(&probe);
        *probe.params_mut().nth(i).unwrap() = orig - h;
        let down = f(&probe);
        *probe.params_mut().nth(i).unwrap() = orig;
        let numeric = (up - down) / (2.0 * h);
        diff += (numeric - analytic[i]).powi(2);
        scale += numeric.powi(2).max(analytic[i].powi(2));
    }
    if scale == 0.0 {
        0.0
    } else {
        diff.sqrt() / scale.sqrt()
    }
}

pub fn random_shape(rng: &mut ChaCha8Rng) -> [f64; convlab_core::features::SHAPE_LEN] {
    let mut s = [0.0_f64; convlab_core::features::SHAPE_LEN];
    for v in &mut s {
        *v = rng.random();
    }
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn random_state(rng: &mut ChaCha8Rng) -> convlab_core::features::StateFeatures {
    convlab_core::features::StateFeatures {
        turn_fraction: rng.random_range(0..10) as f64 / 10.0,
        result_shape: random_shape(rng),
        question_shape: random_shape(rng),
    }
}

pub fn random_action_features(rng: &mut ChaCha8Rng) -> convlab_core::features::ActionFeatures {
    convlab_core::features::ActionFeatures {
        turn_fraction: rng.random_range(0..10) as f64 / 10.0,
        action_flag: if rng.random_bool(0.5) { 1.0 } else { 0.0 },
        chosen_shape: random_shape(rng),
    }
}

pub fn random_action(rng: &mut ChaCha8Rng) -> convlab_core::Action {
    convlab_core::Action::from_index(rng.random_range(0..2))
}
