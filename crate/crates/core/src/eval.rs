//! Training perplexity and top-word extraction.

use ndarray::Array2;

use crate::corpus::{SparseCorpus, Vocabulary};
use crate::engine::TopicModel;

/// Reported `(iteration, perplexity)` pairs with strictly increasing
/// iterations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PerplexityTrace {
    points: Vec<(u32, f64)>,
}

impl PerplexityTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, iteration: u32, perplexity: f64) {
        if let Some(&(last, _)) = self.points.last() {
            assert!(iteration > last, "iterations must be strictly increasing");
        }
        assert!(perplexity > 0.0, "perplexity must be positive");
        self.points.push((iteration, perplexity));
    }

    pub fn points(&self) -> &[(u32, f64)] {
        &self.points
    }

    pub fn last(&self) -> Option<(u32, f64)> {
        self.points.last().copied()
    }
}

/// Exponential of the negative mean per-token log likelihood,
/// `exp(-sum_{(w,d)} x_{w,d} ln(sum_k theta_d(k) phi_w(k)) / N)`,
/// evaluated over the nonzero entries only. A uniform model scores exactly
/// the vocabulary size.
pub fn training_perplexity(model: &TopicModel, corpus: &SparseCorpus) -> f64 {
    assert!(corpus.total_tokens() > 0, "perplexity of an empty corpus");
    assert_eq!(model.theta.nrows(), corpus.num_docs(), "theta shape");
    assert_eq!(model.phi.nrows(), corpus.num_words(), "phi shape");
    assert_eq!(model.theta.ncols(), model.phi.ncols(), "topic count");
    perplexity_over_entries(corpus, |e| {
        let theta = model.theta.row(e.doc as usize);
        let phi = model.phi.row(e.word as usize);
        let mut p = 0.0;
        for i in 0..theta.len() {
            p += theta[i] * phi[i];
        }
        p
    })
}

/// Shared accumulation: `predict` yields `p(word | doc)` for one entry.
pub(crate) fn perplexity_over_entries(
    corpus: &SparseCorpus,
    mut predict: impl FnMut(&crate::corpus::Entry) -> f64,
) -> f64 {
    let mut log_sum = 0.0;
    for e in corpus.entries() {
        let p = predict(e);
        assert!(p > 0.0, "zero predictive probability; smoothing missing?");
        log_sum += e.count as f64 * p.ln();
    }
    (-log_sum / corpus.total_tokens() as f64).exp()
}

/// The `n` highest-probability words per topic, ties broken by ascending
/// word id. Asking for more than `W` words returns all of them.
pub fn top_words(phi: &Array2<f64>, vocab: &Vocabulary, n: usize) -> Vec<Vec<String>> {
    assert!(n >= 1, "n must be at least 1");
    assert_eq!(phi.nrows(), vocab.len(), "phi rows must match vocabulary");
    let num_words = phi.nrows();
    let take = n.min(num_words);
    (0..phi.ncols())
        .map(|k| {
            let mut order: Vec<usize> = (0..num_words).collect();
            order.sort_unstable_by(|&a, &b| {
                phi[[b, k]]
                    .partial_cmp(&phi[[a, k]])
                    .expect("phi must be finite")
                    .then(a.cmp(&b))
            });
            order[..take]
                .iter()
                .map(|&w| vocab.term(w).to_string())
                .collect()
        })
        .collect()
}
