//! Flag definitions and upfront validation.

use std::path::PathBuf;

use anyhow::{Result, bail};
use clap::{Args, Parser, Subcommand, ValueEnum};
use topicbp::{Algorithm, Schedule};

#[derive(Parser)]
#[command(
    name = "topicbp",
    about = "Topic modeling by message passing: train LDA, labeled LDA, and author-topic models on bag-of-words corpora"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Train a model and write perplexity log, parameter matrices, and top words
    Train(TrainArgs),
    /// Generate a synthetic corpus with known topics for recovery tests
    GenSynthetic(GenArgs),
    /// Re-score a saved model against a corpus
    Perplexity(PerplexityArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Lda,
    Lalda,
    Atm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoKind {
    Bp,
    Vb,
    Gs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScheduleKind {
    Sync,
    Async,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Lda)]
    pub model: ModelKind,
    /// Update rule; lalda and atm support bp only
    #[arg(long, value_enum, default_value_t = AlgoKind::Bp)]
    pub algo: AlgoKind,
    /// Sweep schedule for bp (default sync)
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleKind>,
    /// Number of topics K
    #[arg(long)]
    pub topics: usize,
    /// Document-topic smoothing (default 50/K)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Topic-word smoothing
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    #[arg(long, default_value_t = 500)]
    pub iters: u32,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub report_every: u32,
    /// Words printed per topic
    #[arg(long, default_value_t = 5)]
    pub top_n: usize,
    #[arg(long)]
    pub docword: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Author metadata, required for --model atm
    #[arg(long)]
    pub authors: Option<PathBuf>,
    /// Label metadata, required for --model lalda
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads for synchronous sweeps; results do not depend on this
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    /// Stop once the relative perplexity change between reports drops below
    /// this threshold
    #[arg(long)]
    pub stop_threshold: Option<f64>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Number of ground-truth topics
    #[arg(long)]
    pub topics: usize,
    #[arg(long)]
    pub docs: usize,
    /// Vocabulary size
    #[arg(long)]
    pub words: usize,
    /// Tokens per document
    #[arg(long)]
    pub doc_len: usize,
    /// Dirichlet concentration for both topic-word and doc-topic draws
    #[arg(long, default_value_t = 0.1)]
    pub concentration: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output directory for docword.txt, vocab.txt, phi_true.csv
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PerplexityArgs {
    #[arg(long)]
    pub theta: PathBuf,
    #[arg(long)]
    pub phi: PathBuf,
    #[arg(long)]
    pub docword: PathBuf,
}

/// Flag combinations resolved and checked before any file is touched.
pub struct TrainPlan {
    pub model: ModelKind,
    pub algorithm: Algorithm,
    pub schedule: Schedule,
    pub alpha: f64,
    pub beta: f64,
}

impl TrainArgs {
    pub fn plan(&self) -> Result<TrainPlan> {
        if self.topics < 1 {
            bail!("--topics must be at least 1");
        }
        if self.iters < 1 {
            bail!("--iters must be at least 1");
        }
        if self.report_every < 1 {
            bail!("--report-every must be at least 1");
        }
        if self.top_n < 1 {
            bail!("--top-n must be at least 1");
        }
        if self.workers < 1 {
            bail!("--workers must be at least 1");
        }
        let alpha = self.alpha.unwrap_or(50.0 / self.topics as f64);
        if alpha <= 0.0 || self.beta <= 0.0 {
            bail!("--alpha and --beta must be positive");
        }
        if let Some(t) = self.stop_threshold
            && t <= 0.0
        {
            bail!("--stop-threshold must be positive");
        }

        let algorithm = match self.algo {
            AlgoKind::Bp => Algorithm::Bp,
            AlgoKind::Vb => Algorithm::Vb,
            AlgoKind::Gs => Algorithm::Gs,
        };
        if self.algo != AlgoKind::Bp && self.schedule.is_some() {
            bail!("--schedule only applies to --algo bp");
        }
        let schedule = match self.schedule {
            Some(ScheduleKind::Async) => Schedule::Async,
            _ => Schedule::Sync,
        };

        match self.model {
            ModelKind::Lda => {
                if self.authors.is_some() {
                    bail!("--authors only applies to --model atm");
                }
                if self.labels.is_some() {
                    bail!("--labels only applies to --model lalda");
                }
            }
            ModelKind::Lalda | ModelKind::Atm => {
                if self.algo != AlgoKind::Bp {
                    bail!("--model {:?} supports --algo bp only", self.model);
                }
                if self.schedule == Some(ScheduleKind::Async) {
                    bail!("--model {:?} supports the sync schedule only", self.model);
                }
                if self.model == ModelKind::Lalda {
                    if self.labels.is_none() {
                        bail!("--model lalda requires --labels");
                    }
                    if self.authors.is_some() {
                        bail!("--authors only applies to --model atm");
                    }
                } else {
                    if self.authors.is_none() {
                        bail!("--model atm requires --authors");
                    }
                    if self.labels.is_some() {
                        bail!("--labels only applies to --model lalda");
                    }
                }
            }
        }

        Ok(TrainPlan {
            model: self.model,
            algorithm,
            schedule,
            alpha,
            beta: self.beta,
        })
    }
}

impl GenArgs {
    pub fn validate(&self) -> Result<()> {
        if self.topics < 1 || self.docs < 1 || self.doc_len < 1 {
            bail!("--topics, --docs, and --doc-len must be at least 1");
        }
        if self.words < self.topics {
            bail!("--words must be at least --topics");
        }
        if self.concentration <= 0.0 {
            bail!("--concentration must be positive");
        }
        Ok(())
    }
}

pub fn algo_banner_name(algorithm: Algorithm, schedule: Schedule) -> &'static str {
    match (algorithm, schedule) {
        (Algorithm::Bp, Schedule::Sync) => "sBP",
        (Algorithm::Bp, Schedule::Async) => "aBP",
        (Algorithm::Vb, _) => "VB",
        (Algorithm::Gs, _) => "GS",
    }
}
