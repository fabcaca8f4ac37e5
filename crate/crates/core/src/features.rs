//! Fixed-length numeric views of conversation states and chosen actions.
//!
//! Each rank list is summarized by its top-10 scores, min-max normalized over
//! the whole list. Lists with fewer than 10 candidates are padded with zeros.

use crate::error::{check_range, Result};
use crate::types::{Action, ConversationView, T_MAX};

/// Number of leading scores kept per list.
pub const SHAPE_LEN: usize = 10;
/// Width of [`StateFeatures::to_vec`].
pub const STATE_DIM: usize = 1 + 2 * SHAPE_LEN;
/// Width of [`ActionFeatures::to_vec`].
pub const ACTION_DIM: usize = 2 + SHAPE_LEN;

pub type Shape = [f64; SHAPE_LEN];

#[derive(Debug, Clone, PartialEq)]
pub struct StateFeatures {
    /// `(t - 1) / T_MAX`.
    pub turn_fraction: f64,
    pub result_shape: Shape,
    pub question_shape: Shape,
}

impl StateFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(STATE_DIM);
        v.push(self.turn_fraction);
        v.extend_from_slice(&self.result_shape);
        v.extend_from_slice(&self.question_shape);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionFeatures {
    pub turn_fraction: f64,
    /// 1 for a clarifying question, 0 for results.
    pub action_flag: f64,
    pub chosen_shape: Shape,
}

impl ActionFeatures {
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(ACTION_DIM);
        v.push(self.turn_fraction);
        v.push(self.action_flag);
        v.extend_from_slice(&self.chosen_shape);
        v
    }

    pub fn action(&self) -> Action {
        if self.action_flag > 0.5 {
            Action::AskQuestion
        } else {
            Action::ReturnResults
        }
    }
}

/// Min-max normalized top-10 shape of a non-increasing score list.
pub fn score_shape(scores: &[f64]) -> Shape {
    let mut shape = [0.0; SHAPE_LEN];
    let (Some(&max), Some(&min)) = (scores.first(), scores.last()) else {
        return shape;
    };
    let span = max - min;
    if span <= 0.0 {
        return shape;
    }
    for (dst, &s) in shape.iter_mut().zip(scores) {
        *dst = ((s - min) / span).clamp(0.0, 1.0);
    }
    shape
}

fn turn_fraction(turn: usize) -> f64 {
    (turn - 1) as f64 / T_MAX as f64
}

pub fn extract_state_features<V: ConversationView + ?Sized>(
    record: &V,
    turn: usize,
) -> Result<StateFeatures> {
    check_range("turn", turn, 1, record.num_turns())?;
    Ok(StateFeatures {
        turn_fraction: turn_fraction(turn),
        result_shape: score_shape(record.result_scores(turn)),
        question_shape: score_shape(record.question_scores(turn)),
    })
}

pub fn extract_action_features<V: ConversationView + ?Sized>(
    record: &V,
    turn: usize,
    action: Action,
) -> Result<ActionFeatures> {
    check_range("turn", turn, 1, record.num_turns())?;
    let (flag, scores) = match action {
        Action::ReturnResults => (0.0, record.result_scores(turn)),
        Action::AskQuestion => (1.0, record.question_scores(turn)),
    };
    Ok(ActionFeatures {
        turn_fraction: turn_fraction(turn),
        action_flag: flag,
        chosen_shape: score_shape(scores),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{ConversationRecord, RankList};
    use proptest::prelude::*;

    fn record_from(result: Vec<f64>, question: Vec<f64>, turns: usize) -> ConversationRecord {
        let r = RankList::new(result, Some(1)).unwrap();
        let q = RankList::new(question, Some(1)).unwrap();
        ConversationRecord::new("f", vec![(r, q); turns]).unwrap()
    }

    /// Straightforward re-statement of the normalization used as an oracle.
    fn oracle_shape(scores: &[f64]) -> Vec<f64> {
        let lo = scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (0..SHAPE_LEN)
            .map(|i| match scores.get(i) {
                Some(s) if hi > lo => (s - lo) / (hi - lo),
                _ => 0.0,
            })
            .collect()
    }

    #[test]
    fn constant_lists_normalize_to_zero() {
        let rec = record_from(vec![0.3; 20], vec![2.0; 20], 10);
        let f = extract_state_features(&rec, 1).unwrap();
        assert_eq!(f.turn_fraction, 0.0);
        assert_eq!(f.result_shape, [0.0; SHAPE_LEN]);
        assert_eq!(f.question_shape, [0.0; SHAPE_LEN]);
    }

    #[test]
    fn min_max_identity() {
        let mut scores = vec![1.0, 0.5, 0.4, 0.3, 0.2, 0.1, 0.1, 0.1, 0.05, 0.05];
        scores.extend(std::iter::repeat_n(0.0, 10));
        let rec = record_from(scores, vec![1.0; 20], 2);
        let f = extract_state_features(&rec, 2).unwrap();
        assert_eq!(f.result_shape[0], 1.0);
        assert_eq!(f.result_shape[1], 0.5);
        assert_eq!(f.turn_fraction, 0.1);
    }

    #[test]
    fn short_lists_are_padded() {
        let rec = record_from(vec![2.0, 1.0, 0.0], vec![1.0], 1);
        let f = extract_state_features(&rec, 1).unwrap();
        assert_eq!(&f.result_shape[..4], &[1.0, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn turn_out_of_range() {
        let rec = record_from(vec![1.0, 0.0], vec![1.0, 0.0], 2);
        assert!(extract_state_features(&rec, 0).is_err());
        assert!(extract_state_features(&rec, 3).is_err());
        assert!(extract_action_features(&rec, 3, Action::AskQuestion).is_err());
    }

    #[test]
    fn action_features_project_state_blocks() {
        let rec = record_from(vec![3.0, 1.0, 0.0], vec![5.0, 4.5, 0.0], 1);
        let s = extract_state_features(&rec, 1).unwrap();
        let ret = extract_action_features(&rec, 1, Action::ReturnResults).unwrap();
        let ask = extract_action_features(&rec, 1, Action::AskQuestion).unwrap();
        assert_eq!(ret.action_flag, 0.0);
        assert_eq!(ret.chosen_shape, s.result_shape);
        assert_eq!(ask.action_flag, 1.0);
        assert_eq!(ask.chosen_shape, s.question_shape);
        assert_eq!(ask.action(), Action::AskQuestion);
        assert_eq!(ret.to_vec().len(), ACTION_DIM);
        assert_eq!(s.to_vec().len(), STATE_DIM);
    }

    fn sorted_scores() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, 1..40).prop_map(|mut v| {
            v.sort_by(|a, b| b.partial_cmp(a).unwrap());
            v
        })
    }

    proptest! {
        #[test]
        fn matches_oracle_and_is_leakage_free(
            res in sorted_scores(),
            q in sorted_scores(),
            r1 in 0usize..50,
            r2 in 0usize..50,
        ) {
            let rank = |r: usize, len: usize| if r == 0 { None } else { Some(1 + r % len) };
            let rec_a = ConversationRecord::new("a", vec![(
                RankList::new(res.clone(), rank(r1, res.len())).unwrap(),
                RankList::new(q.clone(), rank(r2, q.len())).unwrap(),
            )]).unwrap();
            let rec_b = ConversationRecord::new("a", vec![(
                RankList::new(res.clone(), rank(r2, res.len())).unwrap(),
                RankList::new(q.clone(), None).unwrap(),
            )]).unwrap();

            let fa = extract_state_features(&rec_a, 1).unwrap();
            let fb = extract_state_features(&rec_b, 1).unwrap();
            prop_assert_eq!(&fa, &fb);

            let want: Vec<f64> = std::iter::once(0.0)
                .chain(oracle_shape(&res))
                .chain(oracle_shape(&q))
                .collect();
            let got = fa.to_vec();
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-12);
            }
            for block in [&fa.result_shape, &fa.question_shape] {
                prop_assert!(block.iter().all(|x| (0.0..=1.0).contains(x)));
                prop_assert!(block.windows(2).all(|w| w[0] >= w[1]));
            }

            let ask = extract_action_features(&rec_a, 1, Action::AskQuestion).unwrap();
            let want_ask: Vec<f64> = [0.0, 1.0].into_iter().chain(oracle_shape(&q)).collect();
            for (g, w) in ask.to_vec().iter().zip(&want_ask) {
                prop_assert!((g - w).abs() < 1e-12);
            }
        }
    }
}
