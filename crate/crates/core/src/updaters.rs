//! The three interchangeable message-update rules.
//!
//! All three factor the per-entry update into a document side and a word
//! side, differing only in what feeds each factor:
//!
//! * **BP** uses the previous messages directly, excluding the entry's own
//!   contribution from both sides.
//! * **VB** wraps the document side in `exp(digamma(..))` and uses the full
//!   sums with no exclusion.
//! * **GS** replaces expectations with integer counts of sampled topic
//!   labels, excluding the current token.
//!
//! Synchronous sweeps are pure functions of the previous iteration's board
//! and aggregates and may run entry-parallel; the asynchronous BP sweep and
//! the Gibbs sweep are sequential by contract, visiting entries (tokens) in
//! ascending `(doc, word)` order.

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;
use std::sync::atomic::{AtomicUsize, Ordering};

use crate::corpus::SparseCorpus;
use crate::engine::{self, Aggregates, Hyperparameters, MessageBoard};

/// Diagnostic counters accumulated over one sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    /// Messages whose unnormalized components all vanished and were reset
    /// to uniform.
    pub underflow_guards: usize,
    /// Labeled-LDA masks that found no mass inside the label set and fell
    /// back to uniform over it.
    pub mask_fallbacks: usize,
}

/// Digamma function for positive arguments, accurate to about 1e-14.
///
/// Arguments below 12 are shifted up by the recurrence
/// `psi(x) = psi(x + 1) - 1/x`, then the asymptotic series in `1/x^2` is
/// applied. Rejects `x <= 0`.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma requires a positive argument, got {x}");
    const THRESHOLD: f64 = 12.0;
    let mut acc = 0.0;
    let mut y = x;
    while y < THRESHOLD {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    acc + y.ln() - 0.5 * inv - series
}

/// Divides `out` by `norm`, or resets to uniform when everything vanished.
/// Returns whether the guard fired.
pub(crate) fn finish_normalize(out: &mut [f64], norm: f64) -> bool {
    if norm > 0.0 && norm.is_finite() {
        for v in out.iter_mut() {
            *v /= norm;
        }
        false
    } else {
        let u = 1.0 / out.len() as f64;
        out.fill(u);
        true
    }
}

/// One BP message: document factor from the doc aggregate minus this entry's
/// own mass, word factor likewise, the word-side denominator being the topic
/// totals minus the whole document's mass.
#[allow(clippy::too_many_arguments)]
fn bp_message(
    out: &mut [f64],
    mu: &[f64],
    dt: &[f64],
    wt: &[f64],
    tt: &[f64],
    x: f64,
    alpha: f64,
    beta: f64,
    wbeta: f64,
) -> bool {
    let k = out.len();
    let mut den1 = 0.0;
    for i in 0..k {
        let f = dt[i] - x * mu[i] + alpha;
        out[i] = f;
        den1 += f;
    }
    let mut norm = 0.0;
    for i in 0..k {
        let t1 = out[i] / den1;
        let t2 = (wt[i] - x * mu[i] + beta) / (tt[i] - dt[i] + wbeta);
        let v = t1 * t2;
        out[i] = v;
        norm += v;
    }
    finish_normalize(out, norm)
}

fn check_sweep_inputs(
    board: &MessageBoard,
    agg: &Aggregates,
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
) {
    assert_eq!(
        board.num_entries(),
        corpus.num_entries(),
        "board/corpus mismatch"
    );
    assert_eq!(
        board.num_topics(),
        hp.num_topics(),
        "board/hyperparameter mismatch"
    );
    assert_eq!(agg.doc_topic.dim(), (corpus.num_docs(), hp.num_topics()));
    assert_eq!(agg.word_topic.dim(), (corpus.num_words(), hp.num_topics()));
}

/// Jacobi-style BP sweep: every new message is computed from the previous
/// iteration's board and aggregates.
pub fn bp_sweep_sync(
    board: &MessageBoard,
    agg: &Aggregates,
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
) -> (MessageBoard, SweepStats) {
    check_sweep_inputs(board, agg, corpus, hp);
    let k = hp.num_topics();
    let (alpha, beta) = (hp.alpha(), hp.beta());
    let wbeta = corpus.num_words() as f64 * beta;
    let entries = corpus.entries();
    let old = board.as_slice();
    let doc_topic = agg.doc_topic.as_slice().unwrap();
    let word_topic = agg.word_topic.as_slice().unwrap();
    let topic_total = agg.topic_total.as_slice().unwrap();
    let guards = AtomicUsize::new(0);

    let mut new_mu = vec![0.0; old.len()];
    new_mu.par_chunks_mut(k).enumerate().for_each(|(n, out)| {
        let e = &entries[n];
        let x = e.count as f64;
        let d = e.doc as usize;
        let w = e.word as usize;
        let guarded = bp_message(
            out,
            &old[n * k..(n + 1) * k],
            &doc_topic[d * k..(d + 1) * k],
            &word_topic[w * k..(w + 1) * k],
            topic_total,
            x,
            alpha,
            beta,
            wbeta,
        );
        if guarded {
            guards.fetch_add(1, Ordering::Relaxed);
        }
    });
    (
        MessageBoard::from_flat(k, new_mu),
        SweepStats {
            underflow_guards: guards.load(Ordering::Relaxed),
            mask_fallbacks: 0,
        },
    )
}

/// Gauss-Seidel BP sweep: entries are visited in ascending `(doc, word)`
/// order and the aggregates are adjusted by `x * (mu' - mu)` after each
/// update, so later entries see earlier results within the same sweep.
pub fn bp_sweep_async(
    board: &mut MessageBoard,
    agg: &mut Aggregates,
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
) -> SweepStats {
    check_sweep_inputs(board, agg, corpus, hp);
    let k = hp.num_topics();
    let (alpha, beta) = (hp.alpha(), hp.beta());
    let wbeta = corpus.num_words() as f64 * beta;
    let mut guards = 0;
    let mut fresh = vec![0.0; k];
    for (n, e) in corpus.entries().iter().enumerate() {
        let x = e.count as f64;
        let d = e.doc as usize;
        let w = e.word as usize;
        {
            let dt = agg.doc_topic.as_slice().unwrap();
            let wt = agg.word_topic.as_slice().unwrap();
            let tt = agg.topic_total.as_slice().unwrap();
            if bp_message(
                &mut fresh,
                board.row(n),
                &dt[d * k..(d + 1) * k],
                &wt[w * k..(w + 1) * k],
                tt,
                x,
                alpha,
                beta,
                wbeta,
            ) {
                guards += 1;
            }
        }
        let row = board.row_mut(n);
        for i in 0..k {
            let delta = x * (fresh[i] - row[i]);
            agg.doc_topic[[d, i]] += delta;
            agg.word_topic[[w, i]] += delta;
            agg.topic_total[i] += delta;
        }
        row.copy_from_slice(&fresh);
    }
    SweepStats {
        underflow_guards: guards,
        mask_fallbacks: 0,
    }
}

/// Variational sweep. Both factors use the full sums including the current
/// entry; only the document factor passes through `exp(digamma(..))`, so the
/// two factor tables depend on `(doc, topic)` and `(word, topic)` alone and
/// are precomputed once per sweep.
pub fn vb_sweep(
    board: &MessageBoard,
    agg: &Aggregates,
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
) -> (MessageBoard, SweepStats) {
    check_sweep_inputs(board, agg, corpus, hp);
    let k = hp.num_topics();
    let alpha = hp.alpha();

    let mut doc_factor = vec![0.0; corpus.num_docs() * k];
    for d in 0..corpus.num_docs() {
        let dt = agg.doc_topic.row(d);
        let mut total = 0.0;
        for i in 0..k {
            total += dt[i] + alpha;
        }
        let den = digamma(total).exp();
        for i in 0..k {
            doc_factor[d * k + i] = digamma(dt[i] + alpha).exp() / den;
        }
    }
    let word_factor = engine::smoothed_phi(&agg.word_topic, &agg.topic_total, hp.beta());
    let word_factor = word_factor.as_slice().unwrap();

    let entries = corpus.entries();
    let guards = AtomicUsize::new(0);
    let mut new_mu = vec![0.0; board.as_slice().len()];
    new_mu.par_chunks_mut(k).enumerate().for_each(|(n, out)| {
        let e = &entries[n];
        let d = e.doc as usize;
        let w = e.word as usize;
        let mut norm = 0.0;
        for i in 0..k {
            let v = doc_factor[d * k + i] * word_factor[w * k + i];
            out[i] = v;
            norm += v;
        }
        if finish_normalize(out, norm) {
            guards.fetch_add(1, Ordering::Relaxed);
        }
    });
    (
        MessageBoard::from_flat(k, new_mu),
        SweepStats {
            underflow_guards: guards.load(Ordering::Relaxed),
            mask_fallbacks: 0,
        },
    )
}

/// Collapsed Gibbs state over individual tokens: corpus entries expanded to
/// `count` replicas each, in entry order. The count tables are exact
/// integer histograms of `assignments` at all times.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenState {
    num_topics: usize,
    assignments: Vec<u32>,
    count_doc: Array2<u64>,
    count_word: Array2<u64>,
    count_topic: Vec<u64>,
}

impl TokenState {
    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn num_tokens(&self) -> usize {
        self.assignments.len()
    }

    pub fn assignments(&self) -> &[u32] {
        &self.assignments
    }

    pub fn count_doc(&self) -> &Array2<u64> {
        &self.count_doc
    }

    pub fn count_word(&self) -> &Array2<u64> {
        &self.count_word
    }

    pub fn count_topic(&self) -> &[u64] {
        &self.count_topic
    }

    /// Panics unless the count tables equal the histogram of `assignments`
    /// and the row/column sums match the corpus exactly.
    pub fn assert_consistent(&self, corpus: &SparseCorpus) {
        let k = self.num_topics;
        assert_eq!(self.assignments.len() as u64, corpus.total_tokens());
        let mut doc = Array2::<u64>::zeros((corpus.num_docs(), k));
        let mut word = Array2::<u64>::zeros((corpus.num_words(), k));
        let mut topic = vec![0u64; k];
        let mut i = 0;
        for e in corpus.entries() {
            for _ in 0..e.count {
                let z = self.assignments[i] as usize;
                doc[[e.doc as usize, z]] += 1;
                word[[e.word as usize, z]] += 1;
                topic[z] += 1;
                i += 1;
            }
        }
        assert_eq!(doc, self.count_doc, "doc-topic table out of sync");
        assert_eq!(word, self.count_word, "word-topic table out of sync");
        assert_eq!(topic, self.count_topic, "topic totals out of sync");
        for d in 0..corpus.num_docs() {
            let row: u64 = self.count_doc.row(d).sum();
            assert_eq!(row, corpus.doc_len(d), "doc {d} row sum");
        }
        let total: u64 = self.count_topic.iter().sum();
        assert_eq!(total, corpus.total_tokens());
    }
}

/// Assigns every token an independent uniformly random topic and builds the
/// count tables to match. The caller owns the rng so that initialization and
/// sweeps share one stream.
pub fn gs_init<R: Rng + ?Sized>(
    corpus: &SparseCorpus,
    num_topics: usize,
    rng: &mut R,
) -> TokenState {
    assert!(num_topics >= 1, "at least one topic required");
    let n = corpus.total_tokens() as usize;
    let mut assignments = Vec::with_capacity(n);
    let mut count_doc = Array2::<u64>::zeros((corpus.num_docs(), num_topics));
    let mut count_word = Array2::<u64>::zeros((corpus.num_words(), num_topics));
    let mut count_topic = vec![0u64; num_topics];
    for e in corpus.entries() {
        for _ in 0..e.count {
            let z = ((rng.random::<f64>() * num_topics as f64) as usize).min(num_topics - 1);
            assignments.push(z as u32);
            count_doc[[e.doc as usize, z]] += 1;
            count_word[[e.word as usize, z]] += 1;
            count_topic[z] += 1;
        }
    }
    TokenState {
        num_topics,
        assignments,
        count_doc,
        count_word,
        count_topic,
    }
}

/// One Gibbs sweep. For each token in ascending `(doc, word, replica)`
/// order: decrement its counts, form
/// `p(k) ~ (n_doc(k) + alpha) * (n_word(k) + beta) / (n_topic(k) + W*beta)`
/// over the remaining tokens, draw the new topic by inverse CDF from a
/// single uniform variate, and increment the counts again.
pub fn gs_sweep<R: Rng + ?Sized>(
    state: &mut TokenState,
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
    rng: &mut R,
) {
    let k = state.num_topics;
    assert_eq!(k, hp.num_topics());
    assert_eq!(state.assignments.len() as u64, corpus.total_tokens());
    let (alpha, beta) = (hp.alpha(), hp.beta());
    let wbeta = corpus.num_words() as f64 * beta;
    let mut p = vec![0.0; k];
    let mut i = 0;
    for e in corpus.entries() {
        let d = e.doc as usize;
        let w = e.word as usize;
        for _ in 0..e.count {
            let old = state.assignments[i] as usize;
            state.count_doc[[d, old]] -= 1;
            state.count_word[[w, old]] -= 1;
            state.count_topic[old] -= 1;

            let mut total = 0.0;
            for (t, slot) in p.iter_mut().enumerate() {
                let v = (state.count_doc[[d, t]] as f64 + alpha)
                    * (state.count_word[[w, t]] as f64 + beta)
                    / (state.count_topic[t] as f64 + wbeta);
                *slot = v;
                total += v;
            }
            let u = rng.random::<f64>();
            let mut z = k - 1;
            let mut cum = 0.0;
            for (t, &v) in p.iter().enumerate() {
                cum += v / total;
                if u < cum {
                    z = t;
                    break;
                }
            }

            state.assignments[i] = z as u32;
            state.count_doc[[d, z]] += 1;
            state.count_word[[w, z]] += 1;
            state.count_topic[z] += 1;
            i += 1;
        }
    }
}

/// Casts the integer count tables into [`Aggregates`] so the shared
/// estimators and perplexity code apply unchanged.
pub fn gs_messages(state: &TokenState) -> Aggregates {
    Aggregates {
        doc_topic: state.count_doc.mapv(|v| v as f64),
        word_topic: state.count_word.mapv(|v| v as f64),
        topic_total: state.count_topic.iter().map(|&v| v as f64).collect(),
    }
}
