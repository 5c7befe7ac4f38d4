//! Brute-force reference implementations of every sweep rule, plus random
//! case builders.
//!
//! The naive functions rebuild every sum per entry straight from the raw
//! message board: no aggregate tables, no incremental bookkeeping, all
//! denominators written out in full. They are quadratic or worse and only
//! meant for corpora with a handful of entries, where they pin down the
//! optimized sweeps to within floating-point noise.

use rand::Rng;

use topicbp::atm::AuthorMessageBoard;
use topicbp::corpus::{DocMetadata, MetadataKind, SparseCorpus, parse_metadata};
use topicbp::engine::{Hyperparameters, MessageBoard};
use topicbp::lalda::LabelMasks;
use topicbp::updaters::digamma;

/// Weighted message sum over the entries selected by `pick`.
fn sum_where(
    board: &MessageBoard,
    corpus: &SparseCorpus,
    k: usize,
    pick: impl Fn(usize, &topicbp::corpus::Entry) -> bool,
) -> Vec<f64> {
    let mut acc = vec![0.0; k];
    for (n, e) in corpus.entries().iter().enumerate() {
        if pick(n, e) {
            let x = e.count as f64;
            let mu = board.row(n);
            for i in 0..k {
                acc[i] += x * mu[i];
            }
        }
    }
    acc
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 && s.is_finite() {
        for x in &mut v {
            *x /= s;
        }
    } else {
        let u = 1.0 / v.len() as f64;
        v.iter_mut().for_each(|x| *x = u);
    }
    v
}

fn naive_bp_message(
    board: &MessageBoard,
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
    n: usize,
    keep_constant_factors: bool,
) -> Vec<f64> {
    let k = hp.num_topics();
    let e = corpus.entries()[n];
    let (d, w) = (e.doc, e.word);

    // x_{-w,d} mu_{-w,d}: the rest of the document.
    let doc_rest = sum_where(board, corpus, k, |_, o| o.doc == d && o.word != w);
    let den1: f64 = doc_rest.iter().map(|&v| v + hp.alpha()).sum();

    // x_{w,-d} mu_{w,-d}: the same word elsewhere.
    let word_rest = sum_where(board, corpus, k, |_, o| o.word == w && o.doc != d);

    // Word-side denominator: the same exclusion applied at every word.
    let mut den2 = vec![corpus.num_words() as f64 * hp.beta(); k];
    for word in 0..corpus.num_words() as u32 {
        let rest = sum_where(board, corpus, k, |_, o| o.word == word && o.doc != d);
        for i in 0..k {
            den2[i] += rest[i];
        }
    }

    let mut un = Vec::with_capacity(k);
    for i in 0..k {
        let mut v = (doc_rest[i] + hp.alpha()) * (word_rest[i] + hp.beta()) / den2[i];
        if keep_constant_factors {
            v /= den1;
        }
        un.push(v);
    }
    normalize(un)
}

/// Full-formula synchronous BP reference.
pub fn naive_bp_sync(
    board: &MessageBoard,
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
) -> Vec<Vec<f64>> {
    (0..corpus.num_entries())
        .map(|n| naive_bp_message(board, corpus, hp, n, true))
        .collect()
}

/// Same rule with the topic-constant first-factor denominator dropped;
/// equality with [`naive_bp_sync`] is what licenses the optimization.
pub fn naive_bp_sync_dropped_constants(
    board: &MessageBoard,
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
) -> Vec<Vec<f64>> {
    (0..corpus.num_entries())
        .map(|n| naive_bp_message(board, corpus, hp, n, false))
        .collect()
}

/// Sequential (Gauss-Seidel) BP reference: every entry sees all previously
/// refreshed messages because each step rescans the whole board.
pub fn naive_bp_async(
    board: &MessageBoard,
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = (0..corpus.num_entries())
        .map(|n| board.row(n).to_vec())
        .collect();
    for n in 0..corpus.num_entries() {
        let current = MessageBoard::from_rows(&rows);
        rows[n] = naive_bp_message(&current, corpus, hp, n, true);
    }
    rows
}

/// Variational reference: full sums on both sides, digamma on the document
/// side only.
pub fn naive_vb(
    board: &MessageBoard,
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
) -> Vec<Vec<f64>> {
    let k = hp.num_topics();
    (0..corpus.num_entries())
        .map(|n| {
            let e = corpus.entries()[n];
            let doc_all = sum_where(board, corpus, k, |_, o| o.doc == e.doc);
            let total: f64 = doc_all.iter().map(|&v| v + hp.alpha()).sum();
            let den1 = digamma(total).exp();
            let word_all = sum_where(board, corpus, k, |_, o| o.word == e.word);
            let mut den2 = vec![corpus.num_words() as f64 * hp.beta(); k];
            for word in 0..corpus.num_words() as u32 {
                let col = sum_where(board, corpus, k, |_, o| o.word == word);
                for i in 0..k {
                    den2[i] += col[i];
                }
            }
            let mut un = Vec::with_capacity(k);
            for i in 0..k {
                un.push(
                    digamma(doc_all[i] + hp.alpha()).exp() / den1 * (word_all[i] + hp.beta())
                        / den2[i],
                );
            }
            normalize(un)
        })
        .collect()
}

/// Labeled-LDA reference: the BP reference followed by the mask rule.
pub fn naive_lalda(
    board: &MessageBoard,
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
    masks: &LabelMasks,
) -> Vec<Vec<f64>> {
    let mut rows = naive_bp_sync(board, corpus, hp);
    for (n, e) in corpus.entries().iter().enumerate() {
        let mask = masks.mask(e.doc as usize);
        if mask.is_empty() {
            continue;
        }
        let inside: f64 = mask.iter().map(|&k| rows[n][k]).sum();
        let mut masked = vec![0.0; rows[n].len()];
        for &k in mask {
            masked[k] = if inside > 0.0 {
                rows[n][k] / inside
            } else {
                1.0 / mask.len() as f64
            };
        }
        rows[n] = masked;
    }
    rows
}

/// Author-topic reference. Blocks are author-major like the real board.
pub fn naive_atm(
    board: &AuthorMessageBoard,
    corpus: &SparseCorpus,
    meta: &DocMetadata,
    hp: &Hyperparameters,
) -> Vec<Vec<f64>> {
    let k = hp.num_topics();
    let wbeta = corpus.num_words() as f64 * hp.beta();
    let entries = corpus.entries();

    // Marginal message per entry.
    let marginal = |n: usize| -> Vec<f64> {
        let authors = meta.ids(entries[n].doc as usize).len();
        let block = board.block(n);
        (0..k)
            .map(|i| (0..authors).map(|ai| block[ai * k + i]).sum())
            .collect()
    };
    // Author-topic mass of one author over a chosen entry set.
    let author_mass = |a: u32, skip: usize| -> Vec<f64> {
        let mut acc = vec![0.0; k];
        for (n, e) in entries.iter().enumerate() {
            if n == skip {
                continue;
            }
            let authors = meta.ids(e.doc as usize);
            if let Some(ai) = authors.iter().position(|&b| b == a) {
                let block = board.block(n);
                for i in 0..k {
                    acc[i] += e.count as f64 * block[ai * k + i];
                }
            }
        }
        acc
    };

    (0..corpus.num_entries())
        .map(|n| {
            let e = entries[n];
            let authors = meta.ids(e.doc as usize);

            // Word-side numerator: same word elsewhere, marginalized.
            let mut word_rest = vec![0.0; k];
            // Word-side denominator: all words, excluding this document.
            let mut den2 = vec![wbeta; k];
            for (m, o) in entries.iter().enumerate() {
                let marg = marginal(m);
                if o.word == e.word && m != n {
                    for i in 0..k {
                        word_rest[i] += o.count as f64 * marg[i];
                    }
                }
                if o.doc != e.doc {
                    for i in 0..k {
                        den2[i] += o.count as f64 * marg[i];
                    }
                }
            }

            let mut un = Vec::with_capacity(authors.len() * k);
            for (ai, &a) in authors.iter().enumerate() {
                let mass = author_mass(a, n);
                let block = board.block(n);
                let _ = block;
                let den_a: f64 = mass.iter().map(|&v| v + hp.alpha()).sum::<f64>();
                let _ = ai;
                for i in 0..k {
                    un.push((mass[i] + hp.alpha()) / den_a * (word_rest[i] + hp.beta()) / den2[i]);
                }
            }
            normalize(un)
        })
        .collect()
}

/// Largest absolute difference between two row sets.
pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    assert_eq!(a.len(), b.len(), "row count mismatch");
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        assert_eq!(x.len(), y.len(), "row width mismatch");
        for (u, v) in x.iter().zip(y) {
            worst = worst.max((u - v).abs());
        }
    }
    worst
}

/// A random corpus with up to `max_entries` nonzero cells.
pub fn random_corpus<R: Rng + ?Sized>(rng: &mut R, max_entries: usize) -> SparseCorpus {
    let num_docs = rng.random_range(1..=4);
    let num_words = rng.random_range(1..=4);
    let want = rng.random_range(1..=max_entries);
    let mut cells: Vec<(u32, u32)> = (0..num_docs as u32)
        .flat_map(|d| (0..num_words as u32).map(move |w| (d, w)))
        .collect();
    // Fisher-Yates prefix shuffle.
    for i in 0..cells.len() {
        let j = rng.random_range(i..cells.len());
        cells.swap(i, j);
    }
    let counts = cells
        .into_iter()
        .take(want)
        .map(|(d, w)| (d, w, rng.random_range(1..=4)));
    SparseCorpus::from_counts(num_docs, num_words, counts)
}

/// A random normalized board for `corpus` with `k` topics.
pub fn random_board<R: Rng + ?Sized>(rng: &mut R, corpus: &SparseCorpus, k: usize) -> MessageBoard {
    let rows: Vec<Vec<f64>> = (0..corpus.num_entries())
        .map(|_| {
            let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect()
        })
        .collect();
    MessageBoard::from_rows(&rows)
}

/// Random label sets (possibly empty) over `num_topics`.
pub fn random_masks<R: Rng + ?Sized>(
    rng: &mut R,
    num_docs: usize,
    num_topics: usize,
) -> LabelMasks {
    let mut text = String::new();
    for _ in 0..num_docs {
        let picks: Vec<String> = (1..=num_topics)
            .filter(|_| rng.random::<f64>() < 0.5)
            .map(|k| k.to_string())
            .collect();
        text.push_str(&picks.join(" "));
        text.push('\n');
    }
    let meta = parse_metadata(std::io::Cursor::new(text), MetadataKind::Labels, num_docs).unwrap();
    LabelMasks::from_metadata(&meta, num_topics).unwrap()
}

/// Random nonempty author sets drawn from a pool of up to four authors.
pub fn random_authors<R: Rng + ?Sized>(rng: &mut R, num_docs: usize) -> DocMetadata {
    let pool = rng.random_range(1..=4usize);
    let mut text = String::new();
    for _ in 0..num_docs {
        let mut picks: Vec<usize> = (1..=pool).filter(|_| rng.random::<f64>() < 0.5).collect();
        if picks.is_empty() {
            picks.push(rng.random_range(1..=pool));
        }
        let joined: Vec<String> = picks.iter().map(|a| a.to_string()).collect();
        text.push_str(&joined.join(" "));
        text.push('\n');
    }
    parse_metadata(std::io::Cursor::new(text), MetadataKind::Authors, num_docs).unwrap()
}
