use crate::error::{validation, Result};
use crate::expert::{enumerate_trajectories, select_expert};
use crate::metrics::{ecrr, trajectory_mrr, trajectory_recall_at_k, MetricReport};
use crate::types::{CascadeParams, ConversationRecord, Trajectory};

fn expert_trajectory(record: &ConversationRecord, params: CascadeParams) -> Result<Trajectory> {
    Trajectory::stopping_at(record, select_expert(record, params).stop_turn)
}

/// Metrics of the per-record ECRR-optimal trajectories at one alpha.
pub fn oracle_evaluate(records: &[ConversationRecord], params: CascadeParams) -> Result<MetricReport> {
    if records.is_empty() {
        return Err(validation("oracle evaluation needs at least one record"));
    }
    let trajs = records
        .iter()
        .map(|r| expert_trajectory(r, params))
        .collect::<Result<Vec<_>>>()?;
    crate::metrics::evaluate(&trajs, &[params.alpha()])
}

/// Upper-bound row for a comparison table: every column takes the best
/// stop point per record for that column's metric.
pub fn oracle_report(records: &[ConversationRecord], alphas: &[f64]) -> Result<MetricReport> {
    if records.is_empty() || alphas.is_empty() {
        return Err(validation("oracle report needs records and alphas"));
    }
    let n = records.len() as f64;
    let mut recall = 0.0;
    let mut mrr = 0.0;
    for record in records {
        let mut best_recall = 0.0f64;
        let mut best_mrr = 0.0f64;
        for t in enumerate_trajectories(record) {
            best_recall = best_recall.max(trajectory_recall_at_k(&t, 1)?);
            best_mrr = best_mrr.max(trajectory_mrr(&t)?);
        }
        recall += best_recall;
        mrr += best_mrr;
    }
    let mut ecrr_by_alpha = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let params = CascadeParams::new(a)?;
        let mut total = 0.0;
        for record in records {
            total += ecrr(&expert_trajectory(record, params)?, params)?;
        }
        ecrr_by_alpha.push((a, total / n));
    }
    Ok(MetricReport {
        recall_at_1: recall / n,
        mrr: mrr / n,
        ecrr_by_alpha,
    })
}
