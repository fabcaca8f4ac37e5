//! Trajectory-level evaluation: ECRR, mean ECRR, and recall/MRR computed over
//! whole trajectories under the binary cascade.

use std::fmt::Write as _;

use crate::error::{check_range, validation, Result};
use crate::types::{CascadeParams, Trajectory};

/// Expected conversational reciprocal rank of one trajectory.
///
/// Each asked turn contributes `alpha^rank` where `rank` is the 1-based rank of
/// the relevant clarifying question; the final result list contributes its
/// reciprocal rank. An abandoned trajectory, a missing relevant question in
/// any asked turn, or a missing relevant result scores 0.
pub fn ecrr(traj: &Trajectory, params: CascadeParams) -> Result<f64> {
    traj.validate()?;
    let Some(result) = &traj.final_result_list else {
        return Ok(0.0);
    };
    let mut continuation = 1.0;
    for list in &traj.question_lists {
        match list.relevant_rank() {
            Some(rank) => continuation *= params.alpha().powi(rank as i32),
            None => return Ok(0.0),
        }
    }
    Ok(continuation * result.reciprocal_rank())
}

pub fn mean_ecrr(trajs: &[Trajectory], params: CascadeParams) -> Result<f64> {
    if trajs.is_empty() {
        return Err(validation("mean ECRR needs at least one trajectory"));
    }
    let mut total = 0.0;
    for t in trajs {
        total += ecrr(t, params)?;
    }
    Ok(total / trajs.len() as f64)
}

fn questions_all_on_top(traj: &Trajectory) -> bool {
    traj.question_lists
        .iter()
        .all(|q| q.relevant_rank() == Some(1))
}

/// Reciprocal rank of the trajectory under the binary cascade: the user only
/// continues past a question list whose top entry is relevant.
pub fn trajectory_mrr(traj: &Trajectory) -> Result<f64> {
    traj.validate()?;
    match &traj.final_result_list {
        Some(result) if questions_all_on_top(traj) => Ok(result.reciprocal_rank()),
        _ => Ok(0.0),
    }
}

pub fn trajectory_recall_at_k(traj: &Trajectory, k: usize) -> Result<f64> {
    traj.validate()?;
    let upper = traj
        .final_result_list
        .as_ref()
        .map_or(usize::MAX, |r| r.len());
    check_range("k", k, 1, upper)?;
    let hit = match &traj.final_result_list {
        Some(result) => {
            questions_all_on_top(traj) && result.relevant_rank().is_some_and(|r| r <= k)
        }
        None => false,
    };
    Ok(if hit { 1.0 } else { 0.0 })
}

/// One row of a comparison table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub recall_at_1: f64,
    pub mrr: f64,
    /// `(alpha, mean ECRR)` in the order the alphas were requested.
    pub ecrr_by_alpha: Vec<(f64, f64)>,
}

impl MetricReport {
    pub fn ecrr_at(&self, alpha: f64) -> Option<f64> {
        self.ecrr_by_alpha
            .iter()
            .find(|(a, _)| *a == alpha)
            .map(|&(_, v)| v)
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.ecrr_by_alpha.iter().map(|&(a, _)| a).collect()
    }

    pub fn csv_header(alphas: &[f64]) -> String {
        let mut s = String::from("policy,R@1/100,MRR");
        for a in alphas {
            let _ = write!(s, ",ECRR@{a}");
        }
        s
    }

    /// Values are written with shortest round-trip formatting.
    pub fn csv_row(&self, policy: &str) -> String {
        let mut s = format!("{policy},{},{}", self.recall_at_1, self.mrr);
        for (_, v) in &self.ecrr_by_alpha {
            let _ = write!(s, ",{v}");
        }
        s
    }

    pub fn markdown_header(alphas: &[f64]) -> String {
        let mut head = String::from("| Policy | R@1/100 (binary α) | MRR (binary α) |");
        let mut rule = String::from("|---|---|---|");
        for a in alphas {
            let _ = write!(head, " ECRR α = {a} |");
            rule.push_str("---|");
        }
        format!("{head}\n{rule}")
    }

    pub fn markdown_row(&self, policy: &str) -> String {
        let mut s = format!("| {policy} | {:.4} | {:.4} |", self.recall_at_1, self.mrr);
        for (_, v) in &self.ecrr_by_alpha {
            let _ = write!(s, " {v:.4} |");
        }
        s
    }
}

/// Aggregates recall@1, MRR and mean ECRR at each alpha.
pub fn evaluate(trajs: &[Trajectory], alphas: &[f64]) -> Result<MetricReport> {
    if trajs.is_empty() {
        return Err(validation("cannot evaluate an empty trajectory set"));
    }
    if alphas.is_empty() {
        return Err(validation("at least one alpha is required"));
    }
    let n = trajs.len() as f64;
    let mut recall = 0.0;
    let mut mrr = 0.0;
    for t in trajs {
        recall += trajectory_recall_at_k(t, 1)?;
        mrr += trajectory_mrr(t)?;
    }
    let mut ecrr_by_alpha = Vec::with_capacity(alphas.len());
    for &a in alphas {
        ecrr_by_alpha.push((a, mean_ecrr(trajs, CascadeParams::new(a)?)?));
    }
    Ok(MetricReport {
        recall_at_1: recall / n,
        mrr: mrr / n,
        ecrr_by_alpha,
    })
}
