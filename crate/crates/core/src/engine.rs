//! Message state, sufficient statistics, parameter estimation, and the
//! iterative training loop shared by all inference rules.
//!
//! Training alternates two steps. The message step applies one of the
//! update rules from [`crate::updaters`] to every nonzero corpus entry. The
//! estimation step folds the messages into sufficient statistics and reads
//! off the smoothed multinomial parameters
//!
//! ```text
//! theta_d(k) = (dt_d(k) + alpha) / sum_k (dt_d(k) + alpha)
//! phi_w(k)   = (wt_w(k) + beta)  / (tt(k) + W * beta)
//! ```
//!
//! where `dt`, `wt`, `tt` are the doc-topic, word-topic, and topic-total
//! aggregates of [`Aggregates`].

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::SparseCorpus;
use crate::eval;
use crate::updaters::{self, TokenState};

/// Symmetric Dirichlet smoothing constants plus the topic count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparameters {
    alpha: f64,
    beta: f64,
    num_topics: usize,
}

impl Hyperparameters {
    pub fn new(alpha: f64, beta: f64, num_topics: usize) -> Self {
        assert!(alpha > 0.0, "alpha must be positive");
        assert!(beta > 0.0, "beta must be positive");
        assert!(num_topics >= 1, "at least one topic required");
        Hyperparameters {
            alpha,
            beta,
            num_topics,
        }
    }

    /// Conventional defaults: `alpha = 50/K`, `beta = 0.01`.
    pub fn with_defaults(num_topics: usize) -> Self {
        Self::new(50.0 / num_topics as f64, 0.01, num_topics)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }
}

/// Per-entry topic distributions: one normalized length-`K` row per nonzero
/// corpus entry, in corpus entry order.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageBoard {
    num_topics: usize,
    mu: Vec<f64>,
}

impl MessageBoard {
    /// Builds a board from explicit rows; rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty(), "no rows");
        let num_topics = rows[0].len();
        let mut mu = Vec::with_capacity(rows.len() * num_topics);
        for row in rows {
            assert_eq!(row.len(), num_topics, "ragged rows");
            mu.extend_from_slice(row);
        }
        MessageBoard { num_topics, mu }
    }

    pub(crate) fn from_flat(num_topics: usize, mu: Vec<f64>) -> Self {
        debug_assert_eq!(mu.len() % num_topics, 0);
        MessageBoard { num_topics, mu }
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn num_entries(&self) -> usize {
        self.mu.len() / self.num_topics
    }

    pub fn row(&self, entry: usize) -> &[f64] {
        let k = self.num_topics;
        &self.mu[entry * k..(entry + 1) * k]
    }

    pub(crate) fn row_mut(&mut self, entry: usize) -> &mut [f64] {
        let k = self.num_topics;
        &mut self.mu[entry * k..(entry + 1) * k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.mu
    }

    /// Largest deviation of any row sum from 1, for invariant checks.
    pub fn max_row_sum_error(&self) -> f64 {
        self.mu
            .chunks(self.num_topics)
            .map(|row| (row.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Sufficient statistics derived from a message board:
/// `doc_topic[d][k] = sum_w x_{w,d} mu_{w,d}(k)`,
/// `word_topic[w][k] = sum_d x_{w,d} mu_{w,d}(k)`,
/// `topic_total[k] = sum_w word_topic[w][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregates {
    pub doc_topic: Array2<f64>,
    pub word_topic: Array2<f64>,
    pub topic_total: Array1<f64>,
}

/// Estimated model parameters: `theta` is `D x K` row-stochastic, `phi` is
/// `W x K` with each topic column summing to 1 over words.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub theta: Array2<f64>,
    pub phi: Array2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Bp,
    Vb,
    Gs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Sync,
    Async,
}

/// Knobs shared by every training loop. `early_stop`, when set, stops at the
/// first report point whose relative perplexity change falls below the
/// threshold.
#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub iters: u32,
    pub seed: u64,
    pub report_every: u32,
    pub workers: usize,
    pub early_stop: Option<f64>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            iters: 500,
            seed: 1,
            report_every: 10,
            workers: 1,
            early_stop: None,
        }
    }
}

/// Final latent state of a training run.
#[derive(Debug, Clone)]
pub enum LatentState {
    Messages(MessageBoard),
    Tokens(TokenState),
}

/// Seeds every entry with `K` uniform variates normalized to sum 1.
/// Identical `(corpus, num_topics, seed)` give bit-identical boards.
pub fn init_messages(corpus: &SparseCorpus, num_topics: usize, seed: u64) -> MessageBoard {
    assert!(num_topics >= 1, "at least one topic required");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mu = draw_normalized_rows(corpus.num_entries(), num_topics, &mut rng);
    MessageBoard { num_topics, mu }
}

pub(crate) fn draw_normalized_rows<R: Rng + ?Sized>(
    rows: usize,
    width: usize,
    rng: &mut R,
) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * width);
    for _ in 0..rows {
        let start = out.len();
        let mut sum = 0.0;
        for _ in 0..width {
            // (0, 1] keeps every row sum strictly positive.
            let u = 1.0 - rng.random::<f64>();
            out.push(u);
            sum += u;
        }
        for v in &mut out[start..] {
            *v /= sum;
        }
    }
    out
}

/// Recomputes all three aggregate tables from scratch.
pub fn compute_aggregates(board: &MessageBoard, corpus: &SparseCorpus) -> Aggregates {
    assert_eq!(
        board.num_entries(),
        corpus.num_entries(),
        "board does not match corpus"
    );
    let k = board.num_topics();
    let mut doc_topic = Array2::<f64>::zeros((corpus.num_docs(), k));
    let mut word_topic = Array2::<f64>::zeros((corpus.num_words(), k));
    for (n, e) in corpus.entries().iter().enumerate() {
        let x = e.count as f64;
        let mu = board.row(n);
        let mut dt = doc_topic.row_mut(e.doc as usize);
        for i in 0..k {
            dt[i] += x * mu[i];
        }
        let mut wt = word_topic.row_mut(e.word as usize);
        for i in 0..k {
            wt[i] += x * mu[i];
        }
    }
    let mut topic_total = Array1::<f64>::zeros(k);
    for w in 0..corpus.num_words() {
        let wt = word_topic.row(w);
        for i in 0..k {
            topic_total[i] += wt[i];
        }
    }
    Aggregates {
        doc_topic,
        word_topic,
        topic_total,
    }
}

/// `(row + alpha)` normalized per row; shared by the doc-topic and
/// author-topic estimators.
pub(crate) fn smoothed_rows(counts: &Array2<f64>, alpha: f64) -> Array2<f64> {
    let (rows, k) = counts.dim();
    let mut out = Array2::<f64>::zeros((rows, k));
    for r in 0..rows {
        let row = counts.row(r);
        let mut den = 0.0;
        for i in 0..k {
            den += row[i] + alpha;
        }
        let mut dst = out.row_mut(r);
        for i in 0..k {
            dst[i] = (row[i] + alpha) / den;
        }
    }
    out
}

pub(crate) fn smoothed_phi(
    word_topic: &Array2<f64>,
    topic_total: &Array1<f64>,
    beta: f64,
) -> Array2<f64> {
    let (num_words, k) = word_topic.dim();
    let wbeta = num_words as f64 * beta;
    let mut out = Array2::<f64>::zeros((num_words, k));
    for w in 0..num_words {
        let row = word_topic.row(w);
        let mut dst = out.row_mut(w);
        for i in 0..k {
            dst[i] = (row[i] + beta) / (topic_total[i] + wbeta);
        }
    }
    out
}

/// Row-stochastic doc-topic proportions from the aggregates.
pub fn estimate_theta(agg: &Aggregates, hp: &Hyperparameters) -> Array2<f64> {
    assert_eq!(agg.doc_topic.ncols(), hp.num_topics());
    smoothed_rows(&agg.doc_topic, hp.alpha())
}

/// Topic-word distributions from the aggregates; each topic column sums to 1.
pub fn estimate_phi(agg: &Aggregates, hp: &Hyperparameters) -> Array2<f64> {
    assert_eq!(agg.word_topic.ncols(), hp.num_topics());
    smoothed_phi(&agg.word_topic, &agg.topic_total, hp.beta())
}

/// Canonical reporter line, also used for `perplexity.log`.
pub fn format_report_line(iteration: u32, total: u32, perplexity: f64) -> String {
    format!("Iteration {iteration} of {total}: {perplexity:.6}")
}

/// Runs `iters` full sweeps of the chosen update rule and reports training
/// perplexity every `report_every` iterations and at the final iteration.
///
/// With a fixed seed the result is bit-identical across runs and across
/// worker counts; synchronous sweeps only partition independent per-entry
/// work.
pub fn train(
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
    algorithm: Algorithm,
    schedule: Schedule,
    opts: &TrainOptions,
    mut reporter: impl FnMut(u32, f64),
) -> (TopicModel, LatentState) {
    assert!(opts.iters >= 1, "iters must be at least 1");
    assert!(opts.report_every >= 1, "report_every must be at least 1");
    match algorithm {
        Algorithm::Bp | Algorithm::Vb => {
            train_messages(corpus, hp, algorithm, schedule, opts, &mut reporter)
        }
        Algorithm::Gs => train_gibbs(corpus, hp, opts, &mut reporter),
    }
}

fn train_messages(
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
    algorithm: Algorithm,
    schedule: Schedule,
    opts: &TrainOptions,
    reporter: &mut dyn FnMut(u32, f64),
) -> (TopicModel, LatentState) {
    let pool = worker_pool(opts.workers);
    let mut board = init_messages(corpus, hp.num_topics(), opts.seed);
    let mut agg = compute_aggregates(&board, corpus);
    let mut model = None;
    let mut last_reported = None;
    for it in 1..=opts.iters {
        match (algorithm, schedule) {
            (Algorithm::Bp, Schedule::Sync) => {
                board = pool.install(|| updaters::bp_sweep_sync(&board, &agg, corpus, hp).0);
            }
            (Algorithm::Bp, Schedule::Async) => {
                updaters::bp_sweep_async(&mut board, &mut agg, corpus, hp);
                if cfg!(debug_assertions) {
                    let fresh = compute_aggregates(&board, corpus);
                    debug_assert!(
                        aggregates_close(&agg, &fresh, 1e-6),
                        "incremental aggregates drifted past 1e-6"
                    );
                }
            }
            (Algorithm::Vb, _) => {
                board = pool.install(|| updaters::vb_sweep(&board, &agg, corpus, hp).0);
            }
            (Algorithm::Gs, _) => unreachable!("handled by train_gibbs"),
        }
        agg = compute_aggregates(&board, corpus);
        if it % opts.report_every == 0 || it == opts.iters {
            let current = TopicModel {
                theta: estimate_theta(&agg, hp),
                phi: estimate_phi(&agg, hp),
            };
            let ppx = eval::training_perplexity(&current, corpus);
            reporter(it, ppx);
            model = Some(current);
            if converged(opts.early_stop, last_reported, ppx) {
                break;
            }
            last_reported = Some(ppx);
        }
    }
    (
        model.expect("final iteration reports"),
        LatentState::Messages(board),
    )
}

fn train_gibbs(
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
    opts: &TrainOptions,
    reporter: &mut dyn FnMut(u32, f64),
) -> (TopicModel, LatentState) {
    // One rng stream serves initialization and all sweeps.
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut state = updaters::gs_init(corpus, hp.num_topics(), &mut rng);
    let mut model = None;
    let mut last_reported = None;
    for it in 1..=opts.iters {
        updaters::gs_sweep(&mut state, corpus, hp, &mut rng);
        if it % opts.report_every == 0 || it == opts.iters {
            let agg = updaters::gs_messages(&state);
            let current = TopicModel {
                theta: estimate_theta(&agg, hp),
                phi: estimate_phi(&agg, hp),
            };
            let ppx = eval::training_perplexity(&current, corpus);
            reporter(it, ppx);
            model = Some(current);
            if converged(opts.early_stop, last_reported, ppx) {
                break;
            }
            last_reported = Some(ppx);
        }
    }
    (
        model.expect("final iteration reports"),
        LatentState::Tokens(state),
    )
}

fn converged(threshold: Option<f64>, previous: Option<f64>, current: f64) -> bool {
    match (threshold, previous) {
        (Some(t), Some(prev)) => ((prev - current).abs() / prev) < t,
        _ => false,
    }
}

pub(crate) fn worker_pool(workers: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("failed to build worker pool")
}

pub(crate) fn aggregates_close(a: &Aggregates, b: &Aggregates, tol: f64) -> bool {
    let close = |x: &[f64], y: &[f64]| x.iter().zip(y).all(|(u, v)| (u - v).abs() <= tol);
    close(
        a.doc_topic.as_slice().unwrap(),
        b.doc_topic.as_slice().unwrap(),
    ) && close(
        a.word_topic.as_slice().unwrap(),
        b.word_topic.as_slice().unwrap(),
    ) && close(
        a.topic_total.as_slice().unwrap(),
        b.topic_total.as_slice().unwrap(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_entry_corpus() -> SparseCorpus {
        // docs: d1 = {w1 x2, w2 x1}, d2 = {w2 x1, w3 x2}
        SparseCorpus::from_counts(2, 3, vec![(0, 0, 2), (0, 1, 1), (1, 1, 1), (1, 2, 2)])
    }

    fn uniform_board(entries: usize, k: usize) -> MessageBoard {
        MessageBoard::from_rows(&vec![vec![1.0 / k as f64; k]; entries])
    }

    #[test]
    fn init_single_topic_is_certain() {
        let c = four_entry_corpus();
        let board = init_messages(&c, 1, 42);
        assert!(board.as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn init_is_deterministic_and_seed_sensitive() {
        let c = four_entry_corpus();
        let a = init_messages(&c, 2, 7);
        let b = init_messages(&c, 2, 7);
        assert_eq!(a, b);
        let d = init_messages(&c, 2, 8);
        assert_ne!(a, d);
        assert!(a.max_row_sum_error() < 1e-12);
    }

    #[test]
    fn aggregates_match_hand_computation() {
        let c = four_entry_corpus();
        let agg = compute_aggregates(&uniform_board(4, 2), &c);
        assert_eq!(agg.doc_topic.row(0).to_vec(), vec![1.5, 1.5]);
        assert_eq!(agg.word_topic.row(1).to_vec(), vec![1.0, 1.0]);
        assert_eq!(agg.topic_total.to_vec(), vec![3.0, 3.0]);
    }

    #[test]
    fn aggregates_one_hot_messages() {
        let c = four_entry_corpus();
        let board = MessageBoard::from_rows(&vec![vec![1.0, 0.0]; 4]);
        let agg = compute_aggregates(&board, &c);
        assert_eq!(agg.topic_total.to_vec(), vec![6.0, 0.0]);
    }

    #[test]
    fn aggregates_empty_corpus_are_zero() {
        let c = SparseCorpus::from_counts(1, 1, Vec::<(u32, u32, u32)>::new());
        let board = MessageBoard::from_flat(2, Vec::new());
        let agg = compute_aggregates(&board, &c);
        assert_eq!(agg.doc_topic.sum(), 0.0);
        assert_eq!(agg.topic_total.sum(), 0.0);
    }

    #[test]
    fn theta_estimator_examples() {
        let hp = Hyperparameters::new(1.0, 1.0, 2);
        let agg = Aggregates {
            doc_topic: ndarray::array![[2.0, 0.0]],
            word_topic: Array2::zeros((1, 2)),
            topic_total: Array1::zeros(2),
        };
        let theta = estimate_theta(&agg, &hp);
        assert_eq!(theta.row(0).to_vec(), vec![0.75, 0.25]);

        // Empty document: smoothing makes the row uniform.
        let empty = Aggregates {
            doc_topic: ndarray::array![[0.0, 0.0]],
            word_topic: Array2::zeros((1, 2)),
            topic_total: Array1::zeros(2),
        };
        let theta = estimate_theta(&empty, &Hyperparameters::new(0.37, 1.0, 2));
        assert_eq!(theta.row(0).to_vec(), vec![0.5, 0.5]);

        // Large alpha washes out the counts.
        let hp_big = Hyperparameters::new(1e9, 1.0, 2);
        let theta = estimate_theta(&agg, &hp_big);
        assert!((theta[[0, 0]] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn phi_estimator_examples() {
        let hp = Hyperparameters::new(1.0, 1.0, 2);
        let agg = Aggregates {
            doc_topic: Array2::zeros((1, 2)),
            word_topic: ndarray::array![[1.0, 0.0], [0.0, 1.0]],
            topic_total: ndarray::array![1.0, 1.0],
        };
        let phi = estimate_phi(&agg, &hp);
        assert!((phi[[0, 0]] - 2.0 / 3.0).abs() < 1e-15);
        assert!((phi[[1, 0]] - 1.0 / 3.0).abs() < 1e-15);

        let zero = Aggregates {
            doc_topic: Array2::zeros((1, 2)),
            word_topic: Array2::zeros((2, 2)),
            topic_total: Array1::zeros(2),
        };
        let phi = estimate_phi(&zero, &hp);
        assert_eq!(phi[[0, 0]], 0.5);

        // beta -> 0 approaches the unsmoothed ratio.
        let hp_small = Hyperparameters::new(1.0, 1e-12, 2);
        let phi = estimate_phi(&agg, &hp_small);
        assert!((phi[[0, 0]] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reporter_fires_on_schedule() {
        let c = four_entry_corpus();
        let hp = Hyperparameters::with_defaults(2);
        let opts = TrainOptions {
            iters: 500,
            report_every: 10,
            ..TrainOptions::default()
        };
        let mut seen = Vec::new();
        train(&c, &hp, Algorithm::Bp, Schedule::Sync, &opts, |it, _| {
            seen.push(it)
        });
        let expected: Vec<u32> = (1..=50).map(|i| i * 10).collect();
        assert_eq!(seen, expected);
    }

    #[test]
    fn reporter_fires_at_final_iteration() {
        let c = four_entry_corpus();
        let hp = Hyperparameters::with_defaults(2);
        let opts = TrainOptions {
            iters: 1,
            report_every: 10,
            ..TrainOptions::default()
        };
        let mut seen = Vec::new();
        train(&c, &hp, Algorithm::Vb, Schedule::Sync, &opts, |it, _| {
            seen.push(it)
        });
        assert_eq!(seen, vec![1]);
    }

    #[test]
    fn training_is_deterministic() {
        let c = four_entry_corpus();
        let hp = Hyperparameters::with_defaults(3);
        let opts = TrainOptions {
            iters: 20,
            report_every: 5,
            seed: 99,
            ..TrainOptions::default()
        };
        for (algo, sched) in [
            (Algorithm::Bp, Schedule::Sync),
            (Algorithm::Bp, Schedule::Async),
            (Algorithm::Vb, Schedule::Sync),
            (Algorithm::Gs, Schedule::Sync),
        ] {
            let (m1, _) = train(&c, &hp, algo, sched, &opts, |_, _| {});
            let (m2, _) = train(&c, &hp, algo, sched, &opts, |_, _| {});
            assert_eq!(m1.theta, m2.theta, "{algo:?} {sched:?}");
            assert_eq!(m1.phi, m2.phi, "{algo:?} {sched:?}");
        }
    }

    #[test]
    fn early_stop_cuts_the_run_short() {
        let c = four_entry_corpus();
        let hp = Hyperparameters::with_defaults(2);
        let opts = TrainOptions {
            iters: 500,
            report_every: 1,
            early_stop: Some(1e-4),
            ..TrainOptions::default()
        };
        let mut last = 0;
        train(&c, &hp, Algorithm::Bp, Schedule::Sync, &opts, |it, _| {
            last = it
        });
        assert!(last < 500, "expected convergence before 500 iterations");
    }
}
