//! `convlab`: batch driver for generating data, deriving experts, training
//! and comparing clarifying-question policies.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use convlab_core::baselines::{fixed_policy, oracle_report, RcsqPolicy};
use convlab_core::data::write_records;
use convlab_core::env::evaluate_policy;
use convlab_core::experiment::{
    expert_labels, label_value, load_dataset, run_compare, train_ctxpred_on, train_lsgail_at, train_rcsq_at,
    ExperimentConfig, Splits,
};
use convlab_core::expert::write_labels;
use convlab_core::metrics::MetricReport;
use convlab_core::models::{read_checkpoint, write_checkpoint, Mlp, NetKind, PolicyNet};

#[derive(Parser, Debug)]
#[command(name = "convlab", version, about = "Clarifying-question policy experiments")]
struct Cli {
    /// TOML experiment configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the configured dataset as JSON Lines.
    Gen,
    /// Write expert labels of the training split for one alpha.
    Experts {
        #[arg(long)]
        alpha: f64,
    },
    /// Train one policy and write its checkpoints.
    Train {
        #[arg(long, value_enum)]
        algo: Algo,
        /// Expert alpha (lsgail, ctxpred).
        #[arg(long)]
        alpha: Option<f64>,
        /// Question reward (rcsq).
        #[arg(long = "r", allow_negative_numbers = true)]
        r: Option<f64>,
    },
    /// Evaluate one policy on the test split.
    Eval {
        #[arg(long, value_enum)]
        policy: PolicyKind,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        /// Checkpoint of a learned policy.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Train every policy and write the comparison table.
    Compare,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Algo {
    Lsgail,
    Ctxpred,
    Rcsq,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum PolicyKind {
    Q0a,
    Q1a,
    Q2a,
    Oracle,
    Lsgail,
    Ctxpred,
    Rcsq,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    config_sha256: String,
    config: &'a str,
    outputs: Vec<String>,
}

/// Exclusive claim on an output directory, released on drop.
struct DirLock {
    path: PathBuf,
}

impl DirLock {
    fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(".convlab.lock");
        OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
            .with_context(|| format!("output directory {} is locked ({} exists)", dir.display(), path.display()))?;
        Ok(Self { path })
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

struct Run {
    config: ExperimentConfig,
    config_text: String,
    out: PathBuf,
    outputs: Vec<String>,
}

impl Run {
    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_owned());
        self.out.join(name)
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    fn checkpoint(&mut self, name: &str, kind: NetKind, net: &Mlp) -> Result<()> {
        let path = self.path(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        write_checkpoint(kind, net, &mut w)?;
        w.flush()?;
        Ok(())
    }

    fn manifest(self, command: &str) -> Result<()> {
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed: self.config.seed,
            config_sha256: hex::encode(Sha256::digest(self.config_text.as_bytes())),
            config: &self.config_text,
            outputs: self.outputs,
        };
        let path = self.out.join(format!("manifest-{command}.json"));
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = &cli.out {
        config.paths.out = out.clone();
    }
    config.validate().context("invalid config")?;
    Ok(config)
}

fn report_csv(label: &str, report: &MetricReport) -> String {
    format!("{}\n{}\n", MetricReport::csv_header(&report.alphas()), report.csv_row(label))
}

fn read_policy_net(kind: NetKind, path: Option<&PathBuf>) -> Result<PolicyNet> {
    let path = path.ok_or_else(|| anyhow!("--checkpoint is required for learned policies"))?;
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(PolicyNet(read_checkpoint(kind, std::io::BufReader::new(file))?))
}

fn execute(cli: &Cli) -> Result<()> {
    let config = load_config(cli)?;
    let out = config.paths.out.clone();
    let _lock = DirLock::acquire(&out)?;
    let config_text = toml::to_string(&config)?;
    let mut run = Run {
        config,
        config_text,
        out,
        outputs: Vec::new(),
    };
    let records = load_dataset(&run.config)?;

    let command = match &cli.command {
        Command::Gen => {
            let path = run.path("dataset.jsonl");
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            write_records(&records, BufWriter::new(file))?;
            "gen"
        }
        Command::Experts { alpha } => {
            let splits = Splits::new(&records, &run.config)?;
            let labels = expert_labels(&splits.train, *alpha)?;
            let mut buf = Vec::new();
            write_labels(&labels, &mut buf)?;
            run.write(&format!("experts-alpha{}.jsonl", label_value(*alpha)), &String::from_utf8(buf)?)?;
            "experts"
        }
        Command::Train { algo, alpha, r } => {
            let splits = Splits::new(&records, &run.config)?;
            match algo {
                Algo::Lsgail => {
                    let alpha = alpha.ok_or_else(|| anyhow!("--alpha is required for lsgail"))?;
                    let trained = train_lsgail_at(&run.config, &splits, alpha)?;
                    let stem = format!("lsgail-alpha{}", label_value(alpha));
                    run.checkpoint(&format!("{stem}.policy.ckpt"), NetKind::Policy, &trained.policy.0)?;
                    run.checkpoint(&format!("{stem}.disc.ckpt"), NetKind::Discriminator, &trained.disc.0)?;
                    run.write(&format!("{stem}-history.csv"), &trained.history.to_csv())?;
                }
                Algo::Ctxpred => {
                    if let Some(a) = alpha {
                        run.config.ctxpred_alpha = *a;
                        run.config.validate()?;
                        run.config_text = toml::to_string(&run.config)?;
                    }
                    let net = train_ctxpred_on(&run.config, &splits)?;
                    let name = format!("ctxpred-alpha{}.policy.ckpt", label_value(run.config.ctxpred_alpha));
                    run.checkpoint(&name, NetKind::Policy, &net.0)?;
                }
                Algo::Rcsq => {
                    let r = r.unwrap_or(run.config.rcsq.r_cq);
                    let policy = train_rcsq_at(&run.config, &splits, r)?;
                    run.checkpoint(&format!("rcsq-r{}.qnet.ckpt", label_value(r)), NetKind::ActionValue, &policy.qnet.0)?;
                }
            }
            "train"
        }
        Command::Eval {
            policy,
            alphas,
            checkpoint,
        } => {
            let splits = Splits::new(&records, &run.config)?;
            let alphas = alphas.clone().unwrap_or_else(|| run.config.alphas.clone());
            if alphas.is_empty() {
                bail!("--alphas must list at least one alpha");
            }
            let test = &splits.test;
            let report = match policy {
                PolicyKind::Q0a => evaluate_policy(&fixed_policy(0), test, &alphas)?.report,
                PolicyKind::Q1a => evaluate_policy(&fixed_policy(1), test, &alphas)?.report,
                PolicyKind::Q2a => evaluate_policy(&fixed_policy(2), test, &alphas)?.report,
                PolicyKind::Oracle => oracle_report(test, &alphas)?,
                PolicyKind::Lsgail | PolicyKind::Ctxpred => {
                    let net = read_policy_net(NetKind::Policy, checkpoint.as_ref())?;
                    evaluate_policy(&net, test, &alphas)?.report
                }
                PolicyKind::Rcsq => {
                    let qnet = read_policy_net(NetKind::ActionValue, checkpoint.as_ref())?;
                    evaluate_policy(&RcsqPolicy { qnet }, test, &alphas)?.report
                }
            };
            let name = format!("{policy:?}").to_lowercase();
            let csv = report_csv(&name, &report);
            print!("{csv}");
            run.write(&format!("eval-{name}.csv"), &csv)?;
            "eval"
        }
        Command::Compare => {
            let table = run_compare(&run.config, &records)?;
            print!("{}", table.to_markdown());
            run.write("compare.csv", &table.to_csv())?;
            run.write("compare.md", &table.to_markdown())?;
            "compare"
        }
    };
    run.manifest(command)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
