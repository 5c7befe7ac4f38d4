//! Subcommand bodies.

use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result, bail};
use ndarray::Array2;

use topicbp::corpus::{self, MetadataKind, SparseCorpus};
use topicbp::engine::{self, Hyperparameters, TrainOptions, format_report_line};
use topicbp::eval::{self, PerplexityTrace};
use topicbp::lalda::{self, LabelMasks};
use topicbp::{atm, synth};

use crate::args::{GenArgs, ModelKind, PerplexityArgs, TrainArgs, algo_banner_name};
use crate::io;

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn banner(line: &str) {
    println!("*********************");
    println!("{line}");
    println!("*********************");
}

pub fn cmd_train(args: &TrainArgs) -> Result<()> {
    let plan = args.plan()?;
    let corpus = corpus::parse_docword(open(&args.docword)?)
        .with_context(|| format!("parsing {}", args.docword.display()))?;
    let vocab = corpus::parse_vocab(open(&args.vocab)?)
        .with_context(|| format!("parsing {}", args.vocab.display()))?;
    if vocab.len() != corpus.num_words() {
        bail!(
            "vocabulary has {} terms but the corpus declares {} words",
            vocab.len(),
            corpus.num_words()
        );
    }
    if corpus.total_tokens() == 0 {
        bail!("corpus has no tokens");
    }

    let hp = Hyperparameters::new(plan.alpha, plan.beta, args.topics);
    let opts = TrainOptions {
        iters: args.iters,
        seed: args.seed,
        report_every: args.report_every,
        workers: args.workers,
        early_stop: args.stop_threshold,
    };

    banner(&format!(
        "The {} Algorithm",
        algo_banner_name(plan.algorithm, plan.schedule)
    ));
    let mut trace = PerplexityTrace::new();
    let started = Instant::now();
    let mut report = |iteration: u32, perplexity: f64| {
        println!(
            "    Iteration {iteration} of {}:    {perplexity:.6}",
            args.iters
        );
        trace.push(iteration, perplexity);
    };

    // theta rows are documents for lda/lalda and authors for atm.
    let (theta, phi, theta_file) = match plan.model {
        ModelKind::Lda => {
            let (model, _) = engine::train(
                &corpus,
                &hp,
                plan.algorithm,
                plan.schedule,
                &opts,
                &mut report,
            );
            (model.theta, model.phi, "theta.csv")
        }
        ModelKind::Lalda => {
            let labels_path = args.labels.as_ref().expect("checked by plan");
            let meta =
                corpus::parse_metadata(open(labels_path)?, MetadataKind::Labels, corpus.num_docs())
                    .with_context(|| format!("parsing {}", labels_path.display()))?;
            let masks = LabelMasks::from_metadata(&meta, args.topics)?;
            let (model, _) = lalda::train(&corpus, &masks, &hp, &opts, &mut report);
            (model.theta, model.phi, "theta.csv")
        }
        ModelKind::Atm => {
            let authors_path = args.authors.as_ref().expect("checked by plan");
            let meta = corpus::parse_metadata(
                open(authors_path)?,
                MetadataKind::Authors,
                corpus.num_docs(),
            )
            .with_context(|| format!("parsing {}", authors_path.display()))?;
            let (model, _) = atm::train(&corpus, &meta, &hp, &opts, &mut report);
            (model.author_theta, model.phi, "author_theta.csv")
        }
    };
    println!(
        "Elapsed time is {:.6} seconds.",
        started.elapsed().as_secs_f64()
    );

    let words = eval::top_words(&phi, &vocab, args.top_n);
    println!();
    banner(&format!(
        "Top {} words in each of {} topics by {}",
        args.top_n,
        args.topics,
        algo_banner_name(plan.algorithm, plan.schedule)
    ));
    let mut topwords = String::new();
    for topic in &words {
        let line = topic.join(" ");
        println!("{line}");
        topwords.push_str(&line);
        topwords.push('\n');
    }

    let mut log = String::new();
    for &(iteration, perplexity) in trace.points() {
        log.push_str(&format_report_line(iteration, args.iters, perplexity));
        log.push('\n');
    }
    io::write_all_or_clean_up(
        &args.out,
        &[
            ("perplexity.log", log),
            (theta_file, io::matrix_to_csv(&theta, 6)),
            ("phi.csv", io::matrix_to_csv(&phi, 9)),
            ("topwords.txt", topwords),
        ],
    )
}

pub fn cmd_gen_synthetic(args: &GenArgs) -> Result<()> {
    args.validate()?;
    let data = synth::generate(&synth::SyntheticConfig {
        num_topics: args.topics,
        num_docs: args.docs,
        num_words: args.words,
        doc_len: args.doc_len,
        concentration: args.concentration,
        seed: args.seed,
    });
    let mut docword = Vec::new();
    data.corpus.write_docword(&mut docword)?;
    let mut vocab = Vec::new();
    data.vocab.write(&mut vocab)?;
    io::write_all_or_clean_up(
        &args.out,
        &[
            ("docword.txt", String::from_utf8(docword)?),
            ("vocab.txt", String::from_utf8(vocab)?),
            ("phi_true.csv", io::matrix_to_csv(&data.phi_true, 9)),
        ],
    )?;
    println!(
        "wrote {} docs, {} words, {} tokens to {}",
        args.docs,
        args.words,
        data.corpus.total_tokens(),
        args.out.display()
    );
    Ok(())
}

pub fn cmd_perplexity(args: &PerplexityArgs) -> Result<()> {
    let theta = io::read_matrix_csv(&args.theta)?;
    let phi = io::read_matrix_csv(&args.phi)?;
    let corpus = corpus::parse_docword(open(&args.docword)?)
        .with_context(|| format!("parsing {}", args.docword.display()))?;
    check_dims(&theta, &phi, &corpus)?;
    let model = topicbp::TopicModel { theta, phi };
    println!("{:.6}", eval::training_perplexity(&model, &corpus));
    Ok(())
}

fn check_dims(theta: &Array2<f64>, phi: &Array2<f64>, corpus: &SparseCorpus) -> Result<()> {
    if theta.ncols() != phi.ncols() {
        bail!(
            "theta has {} topics but phi has {}",
            theta.ncols(),
            phi.ncols()
        );
    }
    if theta.nrows() != corpus.num_docs() {
        bail!(
            "theta has {} rows but the corpus has {} documents",
            theta.nrows(),
            corpus.num_docs()
        );
    }
    if phi.nrows() != corpus.num_words() {
        bail!(
            "phi has {} rows but the corpus has {} words",
            phi.nrows(),
            corpus.num_words()
        );
    }
    Ok(())
}
