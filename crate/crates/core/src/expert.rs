//! Expert demonstrations derived by scoring every stop point of a
//! conversation with ECRR and keeping the best one.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::features::{extract_action_features, extract_state_features, ActionFeatures, StateFeatures};
use crate::metrics::ecrr;
use crate::types::{Action, CascadeParams, ConversationRecord, ConversationView, Trajectory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertLabel {
    #[serde(rename = "id")]
    pub record_id: String,
    pub stop_turn: usize,
    #[serde(rename = "ecrr")]
    pub ecrr_value: f64,
    pub alpha: f64,
}

/// All `N` trajectories of a record; the `t`-th asks at turns `1..t` and
/// returns the results of turn `t`.
pub fn enumerate_trajectories(record: &ConversationRecord) -> Vec<Trajectory> {
    (1..=record.num_turns())
        .map(|t| Trajectory::stopping_at(record, t).expect("stop turn within record"))
        .collect()
}

/// The ECRR-maximizing stop turn. Ties go to the earliest turn.
pub fn select_expert(record: &ConversationRecord, params: CascadeParams) -> ExpertLabel {
    let mut best = (1, f64::NEG_INFINITY);
    for traj in enumerate_trajectories(record) {
        let value = ecrr(&traj, params).expect("enumerated trajectories are well formed");
        if value > best.1 {
            best = (traj.stop_turn, value);
        }
    }
    ExpertLabel {
        record_id: record.id().to_owned(),
        stop_turn: best.0,
        ecrr_value: best.1,
        alpha: params.alpha(),
    }
}

/// Actions of the trajectory stopping at `stop_turn`, keyed by 1-based turn.
pub fn expert_actions(stop_turn: usize) -> impl Iterator<Item = (usize, Action)> {
    (1..=stop_turn).map(move |t| {
        let action = if t < stop_turn {
            Action::AskQuestion
        } else {
            Action::ReturnResults
        };
        (t, action)
    })
}

pub fn build_expert_dataset(
    records: &[ConversationRecord],
    params: CascadeParams,
) -> Result<Vec<(StateFeatures, Action)>> {
    if records.is_empty() {
        return Err(validation("expert dataset needs at least one record"));
    }
    let mut pairs = Vec::new();
    for record in records {
        let label = select_expert(record, params);
        for (turn, action) in expert_actions(label.stop_turn) {
            pairs.push((extract_state_features(record, turn)?, action));
        }
    }
    Ok(pairs)
}

/// Discriminator inputs for the expert trajectory of each labelled record.
/// Labels are matched to records by id.
pub fn expert_action_features<V: ConversationView>(
    records: &[V],
    labels: &[ExpertLabel],
) -> Result<Vec<ActionFeatures>> {
    let by_id: std::collections::HashMap<&str, &ExpertLabel> =
        labels.iter().map(|l| (l.record_id.as_str(), l)).collect();
    let mut out = Vec::new();
    for record in records {
        let label = by_id
            .get(record.id())
            .ok_or_else(|| validation(format!("no expert label for record {}", record.id())))?;
        if label.stop_turn == 0 || label.stop_turn > record.num_turns() {
            return Err(validation(format!(
                "expert label for {} stops at turn {} of {}",
                record.id(),
                label.stop_turn,
                record.num_turns()
            )));
        }
        for (turn, action) in expert_actions(label.stop_turn) {
            out.push(extract_action_features(record, turn, action)?);
        }
    }
    Ok(out)
}

pub fn write_labels<W: Write>(labels: &[ExpertLabel], mut out: W) -> Result<()> {
    for label in labels {
        let line = serde_json::to_string(label).map_err(|e| validation(e.to_string()))?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_labels<R: BufRead>(input: R) -> Result<Vec<ExpertLabel>> {
    let mut labels = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let label: ExpertLabel = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            field: "label".into(),
            message: e.to_string(),
        })?;
        labels.push(label);
    }
    Ok(labels)
}
