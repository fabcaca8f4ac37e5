//! The conversational MDP: a policy acts turn by turn over a recorded
//! conversation until it returns results or the user stops replying.
//!
//! User abandonment is not sampled. The user answers whenever the question
//! list holds a relevant question and a next turn exists; the cascade
//! continuation probability is accounted for analytically by ECRR.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{extract_action_features, extract_state_features, ActionFeatures, StateFeatures};
use crate::metrics::{evaluate, MetricReport};
use crate::types::{Action, ConversationRecord, ConversationView, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Returned,
    Abandoned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    pub record_id: String,
    pub turn: usize,
    pub features: StateFeatures,
    pub terminal: bool,
    pub outcome: Option<Outcome>,
}

pub fn reset<V: ConversationView + ?Sized>(record: &V) -> Result<EnvState> {
    Ok(EnvState {
        record_id: record.id().to_owned(),
        turn: 1,
        features: extract_state_features(record, 1)?,
        terminal: false,
        outcome: None,
    })
}

pub fn step<V: ConversationView + ?Sized>(
    record: &V,
    state: &EnvState,
    action: Action,
) -> Result<EnvState> {
    if state.terminal {
        return Err(Error::Usage(format!(
            "step called on terminal state of {} at turn {}",
            state.record_id, state.turn
        )));
    }
    let finish = |outcome| EnvState {
        terminal: true,
        outcome: Some(outcome),
        ..state.clone()
    };
    match action {
        Action::ReturnResults => Ok(finish(Outcome::Returned)),
        Action::AskQuestion => {
            if state.turn >= record.num_turns() || !record.user_replies(state.turn) {
                Ok(finish(Outcome::Abandoned))
            } else {
                let turn = state.turn + 1;
                Ok(EnvState {
                    record_id: state.record_id.clone(),
                    turn,
                    features: extract_state_features(record, turn)?,
                    terminal: false,
                    outcome: None,
                })
            }
        }
    }
}

/// Anything that maps a state to a distribution over
/// `[ReturnResults, AskQuestion]`.
pub trait Policy: Sync {
    fn action_probs(&self, state: &EnvState) -> Result<[f64; 2]>;
}

impl<P: Policy + ?Sized> Policy for &P {
    fn action_probs(&self, state: &EnvState) -> Result<[f64; 2]> {
        (**self).action_probs(state)
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn action_probs(&self, state: &EnvState) -> Result<[f64; 2]> {
        (**self).action_probs(state)
    }
}

/// Draws from `probs` when sampling, else takes the argmax (ties return).
pub fn choose<R: Rng + ?Sized>(probs: [f64; 2], rng: &mut R, sample: bool) -> Action {
    if sample {
        if rng.random::<f64>() < probs[1] {
            Action::AskQuestion
        } else {
            Action::ReturnResults
        }
    } else if probs[1] > probs[0] {
        Action::AskQuestion
    } else {
        Action::ReturnResults
    }
}

/// The (state, action) sequence of one run and how it ended.
#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub record_id: String,
    pub steps: Vec<(usize, StateFeatures, Action)>,
    pub outcome: Outcome,
}

impl Episode {
    pub fn stop_turn(&self) -> usize {
        self.steps.last().map_or(1, |s| s.0)
    }

    pub fn num_asks(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.2 == Action::AskQuestion)
            .count()
    }

    pub fn action_features<V: ConversationView + ?Sized>(
        &self,
        record: &V,
    ) -> Result<Vec<ActionFeatures>> {
        self.steps
            .iter()
            .map(|&(turn, _, action)| extract_action_features(record, turn, action))
            .collect()
    }

    pub fn trajectory(&self, record: &ConversationRecord) -> Result<Trajectory> {
        match self.outcome {
            Outcome::Returned => Trajectory::stopping_at(record, self.stop_turn()),
            Outcome::Abandoned => Trajectory::abandoned_at(record, self.stop_turn()),
        }
    }
}

pub fn run_episode<P, V, R>(policy: &P, record: &V, rng: &mut R, sample: bool) -> Result<Episode>
where
    P: Policy + ?Sized,
    V: ConversationView + ?Sized,
    R: Rng + ?Sized,
{
    let mut state = reset(record)?;
    let mut steps = Vec::new();
    loop {
        let action = choose(policy.action_probs(&state)?, rng, sample);
        steps.push((state.turn, state.features.clone(), action));
        state = step(record, &state, action)?;
        if let Some(outcome) = state.outcome {
            return Ok(Episode {
                record_id: state.record_id,
                steps,
                outcome,
            });
        }
    }
}

pub fn rollout<P, R>(
    policy: &P,
    record: &ConversationRecord,
    rng: &mut R,
    sample: bool,
) -> Result<Trajectory>
where
    P: Policy + ?Sized,
    R: Rng + ?Sized,
{
    run_episode(policy, record, rng, sample)?.trajectory(record)
}

/// Per-rollout generator for record `index` under a global seed.
pub fn episode_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index as u64)
}

/// Greedy evaluation of a policy over a record set.
#[derive(Debug, Clone)]
pub struct PolicyEvaluation {
    pub report: MetricReport,
    /// Fraction of decisions that asked a question.
    pub ask_rate: f64,
    pub trajectories: Vec<Trajectory>,
}

pub fn evaluate_policy<P: Policy + ?Sized>(
    policy: &P,
    records: &[ConversationRecord],
    alphas: &[f64],
) -> Result<PolicyEvaluation> {
    let episodes: Vec<Episode> = records
        .par_iter()
        .enumerate()
        .map(|(i, r)| run_episode(policy, r, &mut episode_rng(0, i), false))
        .collect::<Result<_>>()?;
    let decisions: usize = episodes.iter().map(|e| e.steps.len()).sum();
    let asks: usize = episodes.iter().map(Episode::num_asks).sum();
    let trajectories = episodes
        .iter()
        .zip(records)
        .map(|(e, r)| e.trajectory(r))
        .collect::<Result<Vec<_>>>()?;
    Ok(PolicyEvaluation {
        report: evaluate(&trajectories, alphas)?,
        ask_rate: if decisions == 0 { 0.0 } else { asks as f64 / decisions as f64 },
        trajectories,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::RankList;

    struct Always(Action);

    impl Policy for Always {
        fn action_probs(&self, _: &EnvState) -> Result<[f64; 2]> {
            let mut p = [0.0; 2];
            p[self.0.index()] = 1.0;
            Ok(p)
        }
    }

    struct Uniform;

    impl Policy for Uniform {
        fn action_probs(&self, _: &EnvState) -> Result<[f64; 2]> {
            Ok([0.5, 0.5])
        }
    }

    struct Script(Vec<Action>);

    impl Policy for Script {
        fn action_probs(&self, s: &EnvState) -> Result<[f64; 2]> {
            Always(self.0[s.turn - 1]).action_probs(s)
        }
    }

    fn list(rank: Option<usize>, decay: f64) -> RankList {
        RankList::new((0..12).map(|i| (-(i as f64) / decay).exp()).collect(), rank).unwrap()
    }

    fn record(n: usize) -> ConversationRecord {
        let turns = (0..n)
            .map(|t| (list(Some(n - t), 1.0 + t as f64), list(Some(1), 2.0 + t as f64)))
            .collect();
        ConversationRecord::new("rec", turns).unwrap()
    }

    #[test]
    fn reset_starts_at_turn_one() {
        for n in [1, 3] {
            let rec = record(n);
            let s = reset(&rec).unwrap();
            assert_eq!(s.turn, 1);
            assert!(!s.terminal);
            assert_eq!(s.features, extract_state_features(&rec, 1).unwrap());
        }
    }

    #[test]
    fn step_semantics() {
        let rec = record(3);
        let s = reset(&rec).unwrap();
        let done = step(&rec, &s, Action::ReturnResults).unwrap();
        assert!(done.terminal);
        assert_eq!(done.outcome, Some(Outcome::Returned));
        assert!(matches!(step(&rec, &done, Action::AskQuestion), Err(Error::Usage(_))));

        let s2 = step(&rec, &s, Action::AskQuestion).unwrap();
        let s3 = step(&rec, &s2, Action::AskQuestion).unwrap();
        assert_eq!(s3.turn, 3);
        let end = step(&rec, &s3, Action::AskQuestion).unwrap();
        assert_eq!(end.outcome, Some(Outcome::Abandoned));
    }

    #[test]
    fn missing_relevant_question_ends_the_conversation() {
        let rec = ConversationRecord::new(
            "gap",
            vec![(list(Some(4), 1.0), list(None, 1.0)), (list(Some(1), 2.0), list(Some(1), 1.0))],
        )
        .unwrap();
        let s = reset(&rec).unwrap();
        let end = step(&rec, &s, Action::AskQuestion).unwrap();
        assert_eq!(end.outcome, Some(Outcome::Abandoned));
        assert_eq!(end.turn, 1);
    }

    #[test]
    fn scripted_replay_matches_trajectory() {
        let rec = record(3);
        let script = Script(vec![Action::AskQuestion, Action::AskQuestion, Action::ReturnResults]);
        let traj = rollout(&script, &rec, &mut episode_rng(1, 0), false).unwrap();
        assert_eq!(traj.stop_turn, 3);
        assert_eq!(traj, Trajectory::stopping_at(&rec, 3).unwrap());
    }

    #[test]
    fn constant_policies() {
        for n in 1..=4 {
            let rec = record(n);
            let ret = rollout(&Always(Action::ReturnResults), &rec, &mut episode_rng(0, 0), true).unwrap();
            assert_eq!(ret.stop_turn, 1);
            let ask = rollout(&Always(Action::AskQuestion), &rec, &mut episode_rng(0, 0), true).unwrap();
            assert!(ask.is_abandoned());
            assert_eq!(ask.stop_turn, n);
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let rec = record(8);
        let a: Vec<_> = (0..20)
            .map(|i| run_episode(&Uniform, &rec, &mut episode_rng(99, i), true).unwrap())
            .collect();
        let b: Vec<_> = (0..20)
            .map(|i| run_episode(&Uniform, &rec, &mut episode_rng(99, i), true).unwrap())
            .collect();
        assert_eq!(a, b);
        assert!(a.iter().any(|e| e.stop_turn() > 1));
    }

    #[test]
    fn greedy_ties_return() {
        let mut rng = episode_rng(0, 0);
        assert_eq!(choose([0.5, 0.5], &mut rng, false), Action::ReturnResults);
        assert_eq!(choose([0.4, 0.6], &mut rng, false), Action::AskQuestion);
    }

    #[test]
    fn ask_rate_counts_decisions() {
        let recs = vec![record(3), record(2)];
        let ev = evaluate_policy(&Always(Action::AskQuestion), &recs, &[0.5]).unwrap();
        assert_eq!(ev.ask_rate, 1.0);
        assert_eq!(ev.report.ecrr_at(0.5), Some(0.0));
        let ev = evaluate_policy(&Always(Action::ReturnResults), &recs, &[0.5]).unwrap();
        assert_eq!(ev.ask_rate, 0.0);
    }
}
