//! Synthetic corpus generation for recovery tests and demos.
//!
//! Each of the `K` ground-truth topics owns a contiguous block of the
//! vocabulary, so topic supports are disjoint by construction. Topic-word
//! distributions are drawn from a symmetric Dirichlet over each block,
//! document-topic proportions from a symmetric Dirichlet over the topics,
//! and tokens sampled accordingly. Small concentrations give nearly
//! one-topic documents; in the limit the realized corpus splits into one
//! co-occurrence component per topic.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use crate::corpus::{SparseCorpus, Vocabulary};

#[derive(Debug, Clone, Copy)]
pub struct SyntheticConfig {
    pub num_topics: usize,
    pub num_docs: usize,
    pub num_words: usize,
    pub doc_len: usize,
    pub concentration: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub corpus: SparseCorpus,
    pub vocab: Vocabulary,
    /// Ground-truth topic-word distributions, `W x K`, columns summing to 1.
    pub phi_true: Array2<f64>,
}

/// Word ids owned by topic `k` when `num_words` is split into `num_topics`
/// contiguous blocks.
pub fn topic_block(num_words: usize, num_topics: usize, k: usize) -> std::ops::Range<usize> {
    (k * num_words / num_topics)..((k + 1) * num_words / num_topics)
}

pub fn generate(cfg: &SyntheticConfig) -> Synthetic {
    assert!(cfg.num_topics >= 1 && cfg.num_docs >= 1 && cfg.doc_len >= 1);
    assert!(
        cfg.num_words >= cfg.num_topics,
        "need at least one word per topic"
    );
    assert!(cfg.concentration > 0.0, "concentration must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut phi_true = Array2::<f64>::zeros((cfg.num_words, cfg.num_topics));
    for k in 0..cfg.num_topics {
        let block = topic_block(cfg.num_words, cfg.num_topics, k);
        let weights = dirichlet(block.len(), cfg.concentration, &mut rng);
        for (offset, w) in block.enumerate() {
            phi_true[[w, k]] = weights[offset];
        }
    }

    let mut tokens: Vec<(u32, u32, u32)> = Vec::with_capacity(cfg.num_docs * cfg.doc_len);
    for d in 0..cfg.num_docs {
        let theta = dirichlet(cfg.num_topics, cfg.concentration, &mut rng);
        for _ in 0..cfg.doc_len {
            let z = categorical(&theta, &mut rng);
            let block = topic_block(cfg.num_words, cfg.num_topics, z);
            let within: Vec<f64> = block.clone().map(|w| phi_true[[w, z]]).collect();
            let w = block.start + categorical(&within, &mut rng);
            tokens.push((d as u32, w as u32, 1));
        }
    }

    let corpus = SparseCorpus::from_counts(cfg.num_docs, cfg.num_words, tokens);
    let vocab = Vocabulary::new((1..=cfg.num_words).map(|i| format!("w{i}")).collect());
    Synthetic {
        corpus,
        vocab,
        phi_true,
    }
}

/// Symmetric Dirichlet draw computed in log space, so concentrations far
/// below 1 stay usable: minority components underflow to an exact 0 rather
/// than poisoning the normalization.
fn dirichlet<R: Rng + ?Sized>(n: usize, concentration: f64, rng: &mut R) -> Vec<f64> {
    // Gamma(c) = Gamma(c + 1) * U^(1/c), taken in logs.
    let gamma = Gamma::new(concentration + 1.0, 1.0).expect("valid shape");
    let mut logs = Vec::with_capacity(n);
    for _ in 0..n {
        let g: f64 = gamma.sample(rng);
        let u = 1.0 - rng.random::<f64>();
        logs.push(g.ln() + u.ln() / concentration);
    }
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    let mut out: Vec<f64> = logs
        .iter()
        .map(|&l| {
            let v = (l - max).exp();
            sum += v;
            v
        })
        .collect();
    for v in &mut out {
        *v /= sum;
    }
    out
}

fn categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}
