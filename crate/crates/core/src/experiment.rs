//! Experiment configuration and the comparison run behind the command-line
//! driver. Every table cell is produced by the library operation of the
//! policy it names.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    fixed_policy, oracle_report, train_ctxpred, train_rcsq, CtxPredConfig, RcsqConfig, RcsqPolicy, RCSQ_SWEEP,
};
use crate::data::{generate_synthetic, load_run_file, make_alpha_split_set, make_separable_set, split_records, GenParams};
use crate::env::{evaluate_policy, Policy};
use crate::error::{validation, Error, Result};
use crate::expert::{build_expert_dataset, select_expert, ExpertLabel};
use crate::lsgail::{train, TrainConfig, TrainOutput};
use crate::metrics::MetricReport;
use crate::models::PolicyNet;
use crate::types::{CascadeParams, ConversationRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataSource {
    Synthetic,
    Separable,
    AlphaSplit,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub source: DataSource,
    /// Conversation count for the fixture sources.
    pub n: usize,
    /// Run file read when `source = "file"`.
    pub path: Option<PathBuf>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            source: DataSource::Synthetic,
            n: 1000,
            path: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub out: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        Self { out: PathBuf::from("runs") }
    }
}

/// Whole-run configuration. The top-level `seed` feeds every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub alphas: Vec<f64>,
    /// Train / validation / test fractions.
    pub split: Vec<f64>,
    pub paths: PathsConfig,
    pub data: DataConfig,
    pub gen: GenParams,
    pub lsgail: TrainConfig,
    /// Question rewards swept for RCSQ; each run uses `r - 1` as the penalty.
    pub rcsq_sweep: Vec<f64>,
    pub rcsq: RcsqConfig,
    /// Alpha of the expert labels behavior cloning imitates.
    pub ctxpred_alpha: f64,
    pub ctxpred: CtxPredConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            alphas: vec![0.3, 0.5, 0.7, 0.9],
            split: vec![0.8, 0.1, 0.1],
            paths: PathsConfig::default(),
            data: DataConfig::default(),
            gen: GenParams {
                n_conversations: 2500,
                ..GenParams::default()
            },
            lsgail: TrainConfig::default(),
            rcsq_sweep: RCSQ_SWEEP.to_vec(),
            rcsq: RcsqConfig::default(),
            ctxpred_alpha: 0.5,
            ctxpred: CtxPredConfig::default(),
        }
    }
}

fn in_section(section: &str, err: Error) -> Error {
    match err {
        Error::Validation(m) => Error::Validation(format!("{section}: {m}")),
        other => other,
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.alphas.is_empty() {
            return Err(validation("alphas: at least one alpha is required"));
        }
        for &a in &self.alphas {
            CascadeParams::new(a).map_err(|_| validation(format!("alphas: {a} is outside [0, 1]")))?;
        }
        if self.split.len() != 3 || self.split.iter().any(|r| !(*r >= 0.0)) {
            return Err(validation("split: expected three non-negative fractions"));
        }
        let total: f64 = self.split.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(validation(format!("split: fractions must sum to 1, got {total}")));
        }
        if self.paths.out.as_os_str().is_empty() {
            return Err(validation("paths.out: must not be empty"));
        }
        match (&self.data.source, &self.data.path) {
            (DataSource::File, None) => return Err(validation("data.path: required when data.source = \"file\"")),
            (DataSource::File, Some(p)) if p.as_os_str().is_empty() => {
                return Err(validation("data.path: must not be empty"))
            }
            (DataSource::Separable, _) if self.data.n < 2 => {
                return Err(validation("data.n: the separable set needs at least two conversations"))
            }
            (DataSource::AlphaSplit, _) if self.data.n < 3 => {
                return Err(validation("data.n: the alpha split set needs at least three conversations"))
            }
            _ => {}
        }
        self.gen_params().validate().map_err(|e| in_section("gen", e))?;
        self.lsgail_config(self.alphas[0]).validate().map_err(|e| in_section("lsgail", e))?;
        for &r in &self.rcsq_sweep {
            self.rcsq_config(r).validate().map_err(|e| in_section("rcsq", e))?;
        }
        CascadeParams::new(self.ctxpred_alpha).map_err(|_| validation("ctxpred_alpha: outside [0, 1]"))?;
        Ok(())
    }

    pub fn gen_params(&self) -> GenParams {
        GenParams {
            seed: self.seed,
            ..self.gen.clone()
        }
    }

    pub fn lsgail_config(&self, alpha: f64) -> TrainConfig {
        TrainConfig {
            alpha,
            seed: self.seed,
            ..self.lsgail.clone()
        }
    }

    pub fn rcsq_config(&self, r: f64) -> RcsqConfig {
        RcsqConfig {
            r_cq: r,
            p_cq: r - 1.0,
            seed: self.seed,
            ..self.rcsq.clone()
        }
    }

    pub fn ctxpred_config(&self) -> CtxPredConfig {
        CtxPredConfig {
            seed: self.seed,
            ..self.ctxpred.clone()
        }
    }
}

/// Records named by the config's data section.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Vec<ConversationRecord>> {
    match config.data.source {
        DataSource::Synthetic => generate_synthetic(&config.gen_params()),
        DataSource::Separable => make_separable_set(config.data.n, config.seed),
        DataSource::AlphaSplit => make_alpha_split_set(config.data.n, config.seed),
        DataSource::File => {
            let path = config.data.path.as_ref().ok_or_else(|| validation("data.path: missing"))?;
            load_run_file(path)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Vec<ConversationRecord>,
    pub val: Vec<ConversationRecord>,
    pub test: Vec<ConversationRecord>,
}

impl Splits {
    pub fn new(records: &[ConversationRecord], config: &ExperimentConfig) -> Result<Self> {
        let mut parts = split_records(records, &config.split)?.into_iter();
        let (train, val, test) = (parts.next(), parts.next(), parts.next());
        match (train, val, test) {
            (Some(train), Some(val), Some(test)) => Ok(Self { train, val, test }),
            _ => Err(validation("split: expected three parts")),
        }
    }
}

pub fn expert_labels(records: &[ConversationRecord], alpha: f64) -> Result<Vec<ExpertLabel>> {
    let params = CascadeParams::new(alpha)?;
    Ok(records.iter().map(|r| select_expert(r, params)).collect())
}

pub fn train_lsgail_at(config: &ExperimentConfig, splits: &Splits, alpha: f64) -> Result<TrainOutput> {
    let labels = expert_labels(&splits.train, alpha)?;
    train(&config.lsgail_config(alpha), &splits.train, &labels, &splits.val)
}

pub fn train_ctxpred_on(config: &ExperimentConfig, splits: &Splits) -> Result<PolicyNet> {
    let pairs = build_expert_dataset(&splits.train, CascadeParams::new(config.ctxpred_alpha)?)?;
    train_ctxpred(&pairs, &config.ctxpred_config())
}

pub fn train_rcsq_at(config: &ExperimentConfig, splits: &Splits, r: f64) -> Result<RcsqPolicy> {
    train_rcsq(&config.rcsq_config(r), &splits.train)
}

/// Formats a swept value the way row labels show it.
pub fn label_value(v: f64) -> String {
    format!("{v}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub alphas: Vec<f64>,
    pub rows: Vec<(String, MetricReport)>,
}

impl ComparisonTable {
    pub fn row(&self, label: &str) -> Option<&MetricReport> {
        self.rows.iter().find(|(l, _)| l == label).map(|(_, r)| r)
    }

    pub fn to_csv(&self) -> String {
        let mut s = MetricReport::csv_header(&self.alphas);
        s.push('\n');
        for (label, report) in &self.rows {
            s.push_str(&report.csv_row(label));
            s.push('\n');
        }
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = MetricReport::markdown_header(&self.alphas);
        s.push('\n');
        for (label, report) in &self.rows {
            s.push_str(&report.markdown_row(label));
            s.push('\n');
        }
        s
    }
}

fn report<P: Policy + ?Sized>(policy: &P, records: &[ConversationRecord], alphas: &[f64]) -> Result<MetricReport> {
    Ok(evaluate_policy(policy, records, alphas)?.report)
}

/// Trains every learned policy on the train split and evaluates all rows on
/// the test split.
pub fn run_compare(config: &ExperimentConfig, records: &[ConversationRecord]) -> Result<ComparisonTable> {
    config.validate()?;
    let splits = Splits::new(records, config)?;
    if splits.train.is_empty() || splits.test.is_empty() {
        return Err(validation("split: train and test parts must be non-empty"));
    }
    let alphas = &config.alphas;
    let test = &splits.test;

    let mut rows = Vec::new();
    for n in 0..3 {
        rows.push((format!("Q{n}A"), report(&fixed_policy(n), test, alphas)?));
    }

    let ctxpred = train_ctxpred_on(config, &splits)?;
    rows.push(("CtxPred".to_string(), report(&ctxpred, test, alphas)?));

    let rcsq: Vec<RcsqPolicy> = config
        .rcsq_sweep
        .par_iter()
        .map(|&r| train_rcsq_at(config, &splits, r))
        .collect::<Result<_>>()?;
    for (r, policy) in config.rcsq_sweep.iter().zip(&rcsq) {
        rows.push((format!("RCSQ r={}", label_value(*r)), report(policy, test, alphas)?));
    }

    let lsgail: Vec<TrainOutput> = alphas
        .par_iter()
        .map(|&a| train_lsgail_at(config, &splits, a))
        .collect::<Result<_>>()?;
    for (a, out) in alphas.iter().zip(&lsgail) {
        rows.push((format!("LSGAIL a={}", label_value(*a)), report(&out.policy, test, alphas)?));
    }

    rows.push(("Oracle".to_string(), oracle_report(test, alphas)?));
    Ok(ComparisonTable {
        alphas: alphas.clone(),
        rows,
    })
}
