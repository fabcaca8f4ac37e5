//! Domain types shared by every module.

use std::fmt;

use crate::error::{check_range, validation, Result};

/// Maximum number of turns in a conversation.
pub const T_MAX: usize = 10;

/// `K` scored candidates in rank order, with the 1-based rank of the single
/// relevant candidate if it was retrieved at all.
#[derive(Debug, Clone, PartialEq)]
pub struct RankList {
    scores: Vec<f64>,
    relevant_rank: Option<usize>,
}

impl RankList {
    pub fn new(scores: Vec<f64>, relevant_rank: Option<usize>) -> Result<Self> {
        if scores.is_empty() {
            return Err(validation("rank list must hold at least one score"));
        }
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(validation(format!("score at position {i} is not finite")));
        }
        if let Some(i) = scores.windows(2).position(|w| w[0] < w[1]) {
            return Err(validation(format!(
                "scores must be non-increasing (position {} < position {})",
                i,
                i + 1
            )));
        }
        if let Some(rank) = relevant_rank {
            check_range("relevant rank", rank, 1, scores.len())?;
        }
        Ok(Self {
            scores,
            relevant_rank,
        })
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn relevant_rank(&self) -> Option<usize> {
        self.relevant_rank
    }

    /// `1 / rank` of the relevant candidate, or 0 when it is absent.
    pub fn reciprocal_rank(&self) -> f64 {
        self.relevant_rank.map_or(0.0, |r| 1.0 / r as f64)
    }
}

/// Both retrieval outputs for one turn of a conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct TurnRetrieval {
    pub result_list: RankList,
    pub question_list: RankList,
    /// Whether the user has a reply that enables a next turn.
    pub user_answer_available: bool,
}

/// A logged or synthetic multi-turn conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConversationRecord {
    id: String,
    turns: Vec<TurnRetrieval>,
}

impl ConversationRecord {
    /// Builds a record from `(result_list, question_list)` pairs; the user is
    /// taken to have a reply on every turn but the last.
    pub fn new(id: impl Into<String>, turns: Vec<(RankList, RankList)>) -> Result<Self> {
        let n = turns.len();
        let turns = turns
            .into_iter()
            .enumerate()
            .map(|(i, (result_list, question_list))| TurnRetrieval {
                result_list,
                question_list,
                user_answer_available: i + 1 < n,
            })
            .collect();
        Self::from_turns(id, turns)
    }

    pub fn from_turns(id: impl Into<String>, turns: Vec<TurnRetrieval>) -> Result<Self> {
        let id = id.into();
        check_range("number of turns", turns.len(), 1, T_MAX)?;
        if turns.last().is_some_and(|t| t.user_answer_available) {
            return Err(validation(format!(
                "record {id}: last turn cannot have a user answer available"
            )));
        }
        Ok(Self { id, turns })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn turns(&self) -> &[TurnRetrieval] {
        &self.turns
    }

    pub fn num_turns(&self) -> usize {
        self.turns.len()
    }

    /// Turn by 1-based index.
    pub fn turn(&self, turn: usize) -> Result<&TurnRetrieval> {
        check_range("turn", turn, 1, self.turns.len())?;
        Ok(&self.turns[turn - 1])
    }

    /// The relevance-free view used by the imitation-learning path.
    pub fn strip(&self) -> StrippedRecord {
        StrippedRecord {
            id: self.id.clone(),
            turns: self
                .turns
                .iter()
                .map(|t| StrippedTurn {
                    result_scores: t.result_list.scores().to_vec(),
                    question_scores: t.question_list.scores().to_vec(),
                    user_replies: user_replies(t),
                })
                .collect(),
        }
    }
}

fn user_replies(turn: &TurnRetrieval) -> bool {
    turn.user_answer_available && turn.question_list.relevant_rank().is_some()
}

/// Read access to what a policy (and the simulated user's replies) can see
/// of a conversation. Nothing here exposes relevance ranks.
pub trait ConversationView {
    fn id(&self) -> &str;
    fn num_turns(&self) -> usize;
    /// Result scores at a 1-based turn. Callers check the range.
    fn result_scores(&self, turn: usize) -> &[f64];
    fn question_scores(&self, turn: usize) -> &[f64];
    /// Whether the user answers a clarifying question asked at `turn`.
    fn user_replies(&self, turn: usize) -> bool;
}

impl ConversationView for ConversationRecord {
    fn id(&self) -> &str {
        &self.id
    }

    fn num_turns(&self) -> usize {
        self.turns.len()
    }

    fn result_scores(&self, turn: usize) -> &[f64] {
        self.turns[turn - 1].result_list.scores()
    }

    fn question_scores(&self, turn: usize) -> &[f64] {
        self.turns[turn - 1].question_list.scores()
    }

    fn user_replies(&self, turn: usize) -> bool {
        user_replies(&self.turns[turn - 1])
    }
}

#[derive(Debug, Clone, PartialEq)]
struct StrippedTurn {
    result_scores: Vec<f64>,
    question_scores: Vec<f64>,
    user_replies: bool,
}

/// A conversation with every relevance judgement removed. Only the score
/// lists and whether the user replies to a question survive.
///
/// ```
/// use convlab_core::{ConversationRecord, ConversationView, RankList};
/// let list = |rank| RankList::new(vec![0.9, 0.1], rank).unwrap();
/// let record = ConversationRecord::new("c", vec![(list(Some(1)), list(Some(2)))]).unwrap();
/// assert_eq!(record.strip().result_scores(1), &[0.9, 0.1]);
/// ```
///
/// Relevance cannot be reached through the stripped view:
///
/// ```compile_fail
/// use convlab_core::{ConversationRecord, RankList};
/// let list = |rank| RankList::new(vec![0.9, 0.1], rank).unwrap();
/// let record = ConversationRecord::new("c", vec![(list(Some(1)), list(Some(2)))]).unwrap();
/// let _ = record.strip().turn(1).unwrap().result_list.relevant_rank();
/// ```
///
/// ```compile_fail
/// use convlab_core::{ConversationRecord, RankList};
/// let list = |rank| RankList::new(vec![0.9, 0.1], rank).unwrap();
/// let record = ConversationRecord::new("c", vec![(list(Some(1)), list(Some(2)))]).unwrap();
/// let _ = record.strip().turns;
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct StrippedRecord {
    id: String,
    turns: Vec<StrippedTurn>,
}

impl ConversationView for StrippedRecord {
    fn id(&self) -> &str {
        &self.id
    }

    fn num_turns(&self) -> usize {
        self.turns.len()
    }

    fn result_scores(&self, turn: usize) -> &[f64] {
        &self.turns[turn - 1].result_scores
    }

    fn question_scores(&self, turn: usize) -> &[f64] {
        &self.turns[turn - 1].question_scores
    }

    fn user_replies(&self, turn: usize) -> bool {
        self.turns[turn - 1].user_replies
    }
}

/// The two system actions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    ReturnResults,
    AskQuestion,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::ReturnResults, Action::AskQuestion];

    /// Position of the action in a two-way distribution.
    pub fn index(self) -> usize {
        match self {
            Action::ReturnResults => 0,
            Action::AskQuestion => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            Action::ReturnResults
        } else {
            Action::AskQuestion
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::ReturnResults => f.write_str("return"),
            Action::AskQuestion => f.write_str("ask"),
        }
    }
}

/// A realized policy run over one conversation.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub record_id: String,
    /// Question lists shown in the asked turns, in order.
    pub question_lists: Vec<RankList>,
    /// `None` when the conversation was abandoned.
    pub final_result_list: Option<RankList>,
    /// 1-based turn where results were returned or the run aborted.
    pub stop_turn: usize,
}

impl Trajectory {
    /// Ask at turns `1..stop_turn`, then return the results of `stop_turn`.
    pub fn stopping_at(record: &ConversationRecord, stop_turn: usize) -> Result<Self> {
        record.turn(stop_turn)?;
        Ok(Self {
            record_id: record.id().to_owned(),
            question_lists: record.turns()[..stop_turn - 1]
                .iter()
                .map(|t| t.question_list.clone())
                .collect(),
            final_result_list: Some(record.turns()[stop_turn - 1].result_list.clone()),
            stop_turn,
        })
    }

    /// Ask at turns `1..=turn` and lose the user on the last of them.
    pub fn abandoned_at(record: &ConversationRecord, turn: usize) -> Result<Self> {
        record.turn(turn)?;
        Ok(Self {
            record_id: record.id().to_owned(),
            question_lists: record.turns()[..turn]
                .iter()
                .map(|t| t.question_list.clone())
                .collect(),
            final_result_list: None,
            stop_turn: turn,
        })
    }

    pub fn is_abandoned(&self) -> bool {
        self.final_result_list.is_none()
    }

    pub fn num_questions(&self) -> usize {
        self.question_lists.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.stop_turn == 0 {
            return Err(validation("trajectory stop_turn must be at least 1"));
        }
        let expected = if self.is_abandoned() {
            self.stop_turn
        } else {
            self.stop_turn - 1
        };
        if self.question_lists.len() != expected {
            return Err(validation(format!(
                "trajectory {} has {} question lists, expected {expected} for stop_turn {}",
                self.record_id,
                self.question_lists.len(),
                self.stop_turn
            )));
        }
        Ok(())
    }
}

/// Cascade user model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CascadeParams {
    alpha: f64,
}

impl CascadeParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(validation(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}
