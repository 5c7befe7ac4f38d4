//! Labeled LDA: BP-LDA with each document's topic support restricted to its
//! label set.
//!
//! Masking happens after the standard BP update: components outside the
//! document's label set are zeroed and the rest renormalized. A document
//! with an empty label set is unrestricted, so a corpus with no labels at
//! all trains bit-identically to plain BP-LDA.

use crate::corpus::{CorpusError, DocMetadata, SparseCorpus};
use crate::engine::{self, Aggregates, Hyperparameters, MessageBoard, TopicModel, TrainOptions};
use crate::eval;
use crate::updaters::{self, SweepStats};

/// Per-document topic subsets (0-based, sorted). Empty means unrestricted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMasks {
    num_topics: usize,
    masks: Vec<Vec<usize>>,
}

impl LabelMasks {
    /// No restrictions anywhere; training equals plain BP-LDA.
    pub fn unrestricted(num_docs: usize, num_topics: usize) -> Self {
        LabelMasks {
            num_topics,
            masks: vec![Vec::new(); num_docs],
        }
    }

    /// Converts parsed label metadata, rejecting labels beyond `num_topics`.
    pub fn from_metadata(meta: &DocMetadata, num_topics: usize) -> Result<Self, CorpusError> {
        let mut masks = Vec::with_capacity(meta.num_docs());
        for d in 0..meta.num_docs() {
            let ids = meta.ids(d);
            for &id in ids {
                if id as usize >= num_topics {
                    return Err(CorpusError::LabelOutOfRange {
                        doc: d + 1,
                        label: id as usize + 1,
                        num_topics,
                    });
                }
            }
            masks.push(ids.iter().map(|&id| id as usize).collect());
        }
        Ok(LabelMasks { num_topics, masks })
    }

    pub fn num_docs(&self) -> usize {
        self.masks.len()
    }

    pub fn num_topics(&self) -> usize {
        self.num_topics
    }

    pub fn mask(&self, doc: usize) -> &[usize] {
        &self.masks[doc]
    }

    pub fn all_empty(&self) -> bool {
        self.masks.iter().all(|m| m.is_empty())
    }
}

/// Zeroes the components outside `mask` and renormalizes over it. An empty
/// mask is the identity. If the mask holds no mass the message becomes
/// uniform over the mask (recoverable thanks to alpha smoothing); returns
/// whether that fallback fired.
pub fn apply_mask(message: &mut [f64], mask: &[usize]) -> bool {
    if mask.is_empty() {
        return false;
    }
    let mut inside = 0.0;
    for &k in mask {
        inside += message[k];
    }
    let mut next = mask.iter().copied().peekable();
    for (k, v) in message.iter_mut().enumerate() {
        if next.peek() == Some(&k) {
            next.next();
        } else {
            *v = 0.0;
        }
    }
    if inside > 0.0 && inside.is_finite() {
        for &k in mask {
            message[k] /= inside;
        }
        false
    } else {
        let u = 1.0 / mask.len() as f64;
        for &k in mask {
            message[k] = u;
        }
        true
    }
}

/// One synchronous labeled-BP sweep: [`updaters::bp_sweep_sync`] followed by
/// [`apply_mask`] on every entry with its document's mask.
pub fn lalda_bp_sweep(
    board: &MessageBoard,
    agg: &Aggregates,
    corpus: &SparseCorpus,
    hp: &Hyperparameters,
    masks: &LabelMasks,
) -> (MessageBoard, SweepStats) {
    assert_eq!(masks.num_docs(), corpus.num_docs(), "mask/corpus mismatch");
    assert_eq!(masks.num_topics(), hp.num_topics(), "mask/topic mismatch");
    let (mut next, mut stats) = updaters::bp_sweep_sync(board, agg, corpus, hp);
    for (n, e) in corpus.entries().iter().enumerate() {
        if apply_mask(next.row_mut(n), masks.mask(e.doc as usize)) {
            stats.mask_fallbacks += 1;
        }
    }
    (next, stats)
}

/// Random initialization with the masks already applied.
pub fn init_masked_messages(
    corpus: &SparseCorpus,
    num_topics: usize,
    seed: u64,
    masks: &LabelMasks,
) -> MessageBoard {
    let mut board = engine::init_messages(corpus, num_topics, seed);
    for (n, e) in corpus.entries().iter().enumerate() {
        apply_mask(board.row_mut(n), masks.mask(e.doc as usize));
    }
    board
}

/// Labeled-LDA training loop; mirrors the synchronous BP loop exactly so an
/// all-empty mask set reproduces plain BP-LDA bit for bit.
pub fn train(
    corpus: &SparseCorpus,
    masks: &LabelMasks,
    hp: &Hyperparameters,
    opts: &TrainOptions,
    mut reporter: impl FnMut(u32, f64),
) -> (TopicModel, MessageBoard) {
    assert!(opts.iters >= 1 && opts.report_every >= 1);
    let pool = engine::worker_pool(opts.workers);
    let mut board = init_masked_messages(corpus, hp.num_topics(), opts.seed, masks);
    let mut agg = engine::compute_aggregates(&board, corpus);
    let mut model = None;
    let mut last_reported: Option<f64> = None;
    for it in 1..=opts.iters {
        board = pool.install(|| lalda_bp_sweep(&board, &agg, corpus, hp, masks).0);
        agg = engine::compute_aggregates(&board, corpus);
        if it % opts.report_every == 0 || it == opts.iters {
            let current = TopicModel {
                theta: engine::estimate_theta(&agg, hp),
                phi: engine::estimate_phi(&agg, hp),
            };
            let ppx = eval::training_perplexity(&current, corpus);
            reporter(it, ppx);
            model = Some(current);
            if let (Some(t), Some(prev)) = (opts.early_stop, last_reported)
                && ((prev - ppx).abs() / prev) < t
            {
                break;
            }
            last_reported = Some(ppx);
        }
    }
    (model.expect("final iteration reports"), board)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{Algorithm, Schedule, compute_aggregates, init_messages};

    fn four_entry_corpus() -> SparseCorpus {
        SparseCorpus::from_counts(2, 3, vec![(0, 0, 2), (0, 1, 1), (1, 1, 1), (1, 2, 2)])
    }

    #[test]
    fn mask_renormalizes_over_subset() {
        let mut m = vec![0.5, 0.3, 0.2];
        assert!(!apply_mask(&mut m, &[0, 1]));
        assert!((m[0] - 0.625).abs() < 1e-15);
        assert!((m[1] - 0.375).abs() < 1e-15);
        assert_eq!(m[2], 0.0);
    }

    #[test]
    fn empty_mask_is_identity() {
        let mut m = vec![0.5, 0.3, 0.2];
        let before = m.clone();
        assert!(!apply_mask(&mut m, &[]));
        assert_eq!(m, before);
    }

    #[test]
    fn singleton_mask_forces_certainty() {
        let mut m = vec![0.5, 0.3, 0.2];
        apply_mask(&mut m, &[1]);
        assert_eq!(m, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn empty_mass_inside_mask_falls_back_to_uniform() {
        let mut m = vec![0.0, 0.0, 1.0];
        assert!(apply_mask(&mut m, &[0, 1]));
        assert_eq!(m, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn empty_masks_reduce_to_plain_bp() {
        let c = four_entry_corpus();
        let hp = Hyperparameters::new(0.8, 0.05, 3);
        let masks = LabelMasks::unrestricted(2, 3);
        let board = init_messages(&c, 3, 21);
        let agg = compute_aggregates(&board, &c);
        let (plain, _) = updaters::bp_sweep_sync(&board, &agg, &c, &hp);
        let (masked, _) = lalda_bp_sweep(&board, &agg, &c, &hp, &masks);
        assert_eq!(plain, masked);
    }

    #[test]
    fn shared_singleton_mask_pins_everything() {
        let c = four_entry_corpus();
        let hp = Hyperparameters::new(1.0, 1.0, 3);
        let masks = LabelMasks {
            num_topics: 3,
            masks: vec![vec![1], vec![1]],
        };
        let board = init_masked_messages(&c, 3, 5, &masks);
        let agg = compute_aggregates(&board, &c);
        let (next, _) = lalda_bp_sweep(&board, &agg, &c, &hp, &masks);
        for n in 0..4 {
            assert_eq!(next.row(n), &[0.0, 1.0, 0.0]);
        }
        let agg = compute_aggregates(&next, &c);
        assert_eq!(agg.doc_topic[[0, 0]], 0.0);
        assert_eq!(agg.doc_topic[[0, 1]], 3.0);
    }

    #[test]
    fn mask_closure_holds_every_iteration() {
        let c = four_entry_corpus();
        let hp = Hyperparameters::new(0.5, 0.1, 3);
        // Doc 0 restricted to topics {0, 1}; doc 1 unrestricted.
        let masks = LabelMasks {
            num_topics: 3,
            masks: vec![vec![0, 1], vec![]],
        };
        let mut board = init_masked_messages(&c, 3, 13, &masks);
        for _ in 0..20 {
            let agg = compute_aggregates(&board, &c);
            board = lalda_bp_sweep(&board, &agg, &c, &hp, &masks).0;
            assert_eq!(board.row(0)[2], 0.0);
            assert_eq!(board.row(1)[2], 0.0);
        }
        // The unsmoothed aggregate outside the mask is exactly zero.
        let agg = compute_aggregates(&board, &c);
        assert_eq!(agg.doc_topic[[0, 2]], 0.0);
    }

    #[test]
    fn unlabeled_training_run_is_bit_identical_to_bp() {
        let c = four_entry_corpus();
        let hp = Hyperparameters::new(0.9, 0.02, 3);
        let opts = TrainOptions {
            iters: 40,
            report_every: 10,
            seed: 77,
            ..TrainOptions::default()
        };
        let masks = LabelMasks::unrestricted(2, 3);
        let mut lalda_trace = Vec::new();
        let (lalda_model, lalda_board) =
            train(&c, &masks, &hp, &opts, |it, p| lalda_trace.push((it, p)));
        let mut bp_trace = Vec::new();
        let (bp_model, state) =
            engine::train(&c, &hp, Algorithm::Bp, Schedule::Sync, &opts, |it, p| {
                bp_trace.push((it, p))
            });
        assert_eq!(lalda_trace, bp_trace);
        assert_eq!(lalda_model.theta, bp_model.theta);
        assert_eq!(lalda_model.phi, bp_model.phi);
        match state {
            engine::LatentState::Messages(b) => assert_eq!(b, lalda_board),
            _ => unreachable!(),
        }
    }
}
