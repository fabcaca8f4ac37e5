use convlab_core::baselines::{
    fixed_policy, oracle_evaluate, oracle_report, rcsq_reward, train_ctxpred, train_rcsq, CtxPredConfig, RcsqConfig,
};
use convlab_core::data::{make_alpha_split_set, make_separable_set};
use convlab_core::env::{evaluate_policy, rollout};
use convlab_core::expert::build_expert_dataset;
use convlab_core::models::policy_forward;
use convlab_core::{Action, CascadeParams, ConversationRecord};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Optimal action values under the reward table by backward induction.
fn value_iteration(record: &ConversationRecord, cfg: &RcsqConfig) -> Vec<[f64; 2]> {
    let n = record.num_turns();
    let mut q = vec![[0.0; 2]; n];
    let mut next_value = 0.0;
    for t in (0..n).rev() {
        let turn = &record.turns()[t];
        let ret = rcsq_reward(turn, Action::ReturnResults, cfg);
        let replies = turn.user_answer_available && turn.question_list.relevant_rank().is_some();
        let ask = rcsq_reward(turn, Action::AskQuestion, cfg) + if replies { cfg.gamma * next_value } else { 0.0 };
        q[t] = [ret, ask];
        next_value = ret.max(ask);
    }
    q
}

#[test]
fn rcsq_matches_value_iteration_on_separable_set() {
    // Only the first turn's score shapes tell case A from case B, so rewards
    // whose optimal action differs between turns with identical shapes are
    // out of reach of the features; r = -0.1 is not.
    let records = make_separable_set(200, 5).unwrap();
    let r = -0.1;
    let cfg = RcsqConfig::with_reward(r);
    let policy = train_rcsq(&cfg, &records).unwrap();
    for record in &records {
        let optimal = value_iteration(record, &cfg);
        let traj = rollout(&policy, record, &mut ChaCha8Rng::seed_from_u64(0), false).unwrap();
        let expected_stop = optimal
            .iter()
            .position(|q| q[0] >= q[1])
            .map_or(record.num_turns(), |t| t + 1);
        assert_eq!(traj.stop_turn, expected_stop, "record {}", record.id());
    }
}

#[test]
fn ctxpred_imitates_separable_experts() {
    let records = make_separable_set(200, 6).unwrap();
    let pairs = build_expert_dataset(&records, CascadeParams::new(0.7).unwrap()).unwrap();
    let net = train_ctxpred(&pairs, &CtxPredConfig::default()).unwrap();
    let correct = pairs
        .iter()
        .filter(|(s, a)| {
            let p = policy_forward(&net, s).unwrap();
            (p[1] > p[0]) == (*a == Action::AskQuestion)
        })
        .count();
    assert_eq!(correct, pairs.len());
}

#[test]
fn oracle_bounds_fixed_policies() {
    let records = make_alpha_split_set(300, 7).unwrap();
    let alphas = [0.3, 0.5, 0.7, 0.9];
    let oracle = oracle_report(&records, &alphas).unwrap();
    for n in 0..3 {
        let report = evaluate_policy(&fixed_policy(n), &records, &alphas).unwrap().report;
        assert!(report.recall_at_1 <= oracle.recall_at_1);
        assert!(report.mrr <= oracle.mrr);
        for &a in &alphas {
            assert!(report.ecrr_at(a).unwrap() <= oracle.ecrr_at(a).unwrap());
        }
    }
    for &a in &alphas {
        let single = oracle_evaluate(&records, CascadeParams::new(a).unwrap()).unwrap();
        assert_eq!(single.ecrr_at(a), oracle.ecrr_at(a));
    }
}

#[test]
fn q0a_is_alpha_invariant() {
    let records = make_alpha_split_set(30, 8).unwrap();
    let report = evaluate_policy(&fixed_policy(0), &records, &[0.3, 0.5, 0.7, 0.9]).unwrap().report;
    let first = report.ecrr_by_alpha[0].1;
    assert!(report.ecrr_by_alpha.iter().all(|(_, v)| *v == first));
    assert_eq!(report.mrr, first);
}
