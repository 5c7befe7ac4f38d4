//! Sparse bag-of-words corpora, vocabularies, and per-document metadata.
//!
//! The on-disk docword format is the UCI bag-of-words layout: three header
//! lines holding the document count `D`, the vocabulary size `W`, and the
//! number of nonzero entries, followed by one `doc word count` triple per
//! line. Ids are 1-based on disk and converted to 0-based here; everything
//! written back out is 1-based again.

use std::io::{self, BufRead, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("malformed header at line {line}: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("malformed entry at line {line}: {reason}")]
    MalformedEntry { line: usize, reason: String },
    #[error("document id {id} out of range 1..={max} at line {line}")]
    DocIdOutOfRange { line: usize, id: i64, max: usize },
    #[error("word id {id} out of range 1..={max} at line {line}")]
    WordIdOutOfRange { line: usize, id: i64, max: usize },
    #[error("nonpositive count at line {line}")]
    NonpositiveCount { line: usize },
    #[error("declared {declared} entries but found {found}")]
    EntryCountMismatch { declared: usize, found: usize },
    #[error("merged count for document {doc}, word {word} exceeds u32::MAX")]
    CountOverflow { doc: u32, word: u32 },
    #[error("empty vocabulary term at line {line}")]
    EmptyTerm { line: usize },
    #[error("metadata has {found} lines but corpus has {expected} documents")]
    MetadataLineCount { expected: usize, found: usize },
    #[error("invalid id at line {line}: {reason}")]
    InvalidId { line: usize, reason: String },
    #[error("document {doc} has no authors")]
    EmptyAuthorList { doc: usize },
    #[error("document {doc} lists label {label} but the model has {num_topics} topics")]
    LabelOutOfRange {
        doc: usize,
        label: usize,
        num_topics: usize,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// One nonzero cell of the document-word matrix. Ids are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub doc: u32,
    pub word: u32,
    pub count: u32,
}

/// A validated sparse document-word count matrix.
///
/// Entries are sorted by `(doc, word)` and each pair appears exactly once;
/// duplicate pairs in the input are merged by summing their counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCorpus {
    num_docs: usize,
    num_words: usize,
    entries: Vec<Entry>,
    doc_lengths: Vec<u64>,
    total_tokens: u64,
}

impl SparseCorpus {
    /// Builds a corpus from `(doc, word, count)` triples with 0-based ids.
    /// Duplicates are merged. Panics on out-of-range ids or zero counts;
    /// use [`parse_docword`] for untrusted input.
    pub fn from_counts(
        num_docs: usize,
        num_words: usize,
        counts: impl IntoIterator<Item = (u32, u32, u32)>,
    ) -> Self {
        let raw: Vec<Entry> = counts
            .into_iter()
            .map(|(doc, word, count)| {
                assert!((doc as usize) < num_docs, "doc id {doc} out of range");
                assert!((word as usize) < num_words, "word id {word} out of range");
                assert!(count > 0, "zero count for ({doc}, {word})");
                Entry { doc, word, count }
            })
            .collect();
        Self::assemble(num_docs, num_words, raw).expect("count overflow")
    }

    fn assemble(
        num_docs: usize,
        num_words: usize,
        mut raw: Vec<Entry>,
    ) -> Result<Self, CorpusError> {
        raw.sort_unstable_by_key(|e| (e.doc, e.word));
        let mut entries: Vec<Entry> = Vec::with_capacity(raw.len());
        for e in raw {
            match entries.last_mut() {
                Some(last) if last.doc == e.doc && last.word == e.word => {
                    last.count =
                        last.count
                            .checked_add(e.count)
                            .ok_or(CorpusError::CountOverflow {
                                doc: e.doc + 1,
                                word: e.word + 1,
                            })?;
                }
                _ => entries.push(e),
            }
        }
        let mut doc_lengths = vec![0u64; num_docs];
        let mut total_tokens = 0u64;
        for e in &entries {
            doc_lengths[e.doc as usize] += e.count as u64;
            total_tokens += e.count as u64;
        }
        Ok(SparseCorpus {
            num_docs,
            num_words,
            entries,
            doc_lengths,
            total_tokens,
        })
    }

    pub fn num_docs(&self) -> usize {
        self.num_docs
    }

    pub fn num_words(&self) -> usize {
        self.num_words
    }

    pub fn num_entries(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn doc_lengths(&self) -> &[u64] {
        &self.doc_lengths
    }

    pub fn doc_len(&self, doc: usize) -> u64 {
        self.doc_lengths[doc]
    }

    /// Total token count `N = sum of all entry counts`.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Writes the corpus in docword format with 1-based ids.
    pub fn write_docword<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", self.num_docs)?;
        writeln!(out, "{}", self.num_words)?;
        writeln!(out, "{}", self.entries.len())?;
        for e in &self.entries {
            writeln!(out, "{} {} {}", e.doc + 1, e.word + 1, e.count)?;
        }
        Ok(())
    }
}

/// Parses a UCI bag-of-words stream into a [`SparseCorpus`].
///
/// Duplicate `(doc, word)` pairs are merged by summing counts. Blank lines
/// after the header are skipped; every other malformed line is reported with
/// its line number.
pub fn parse_docword<R: BufRead>(reader: R) -> Result<SparseCorpus, CorpusError> {
    let mut lines = reader.lines();
    let mut line_no = 0usize;
    let mut header = [0usize; 3];
    for (i, slot) in header.iter_mut().enumerate() {
        line_no += 1;
        let line = lines.next().ok_or_else(|| CorpusError::MalformedHeader {
            line: line_no,
            reason: "missing header line".into(),
        })??;
        let text = line.trim();
        *slot = text.parse().map_err(|_| CorpusError::MalformedHeader {
            line: line_no,
            reason: format!("expected an integer, got {text:?}"),
        })?;
        if i < 2 && *slot == 0 {
            return Err(CorpusError::MalformedHeader {
                line: line_no,
                reason: "dimension must be positive".into(),
            });
        }
    }
    let [num_docs, num_words, declared] = header;

    let mut raw = Vec::with_capacity(declared);
    for line in lines {
        line_no += 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let mut fields = text.split_whitespace().map(|f| f.parse::<i64>());
        let mut next =
            |line_no: usize| -> Result<i64, CorpusError> {
                fields.next().transpose().ok().flatten().ok_or_else(|| {
                    CorpusError::MalformedEntry {
                        line: line_no,
                        reason: format!("expected \"doc word count\", got {text:?}"),
                    }
                })
            };
        let doc = next(line_no)?;
        let word = next(line_no)?;
        let count = next(line_no)?;
        if doc < 1 || doc as usize > num_docs {
            return Err(CorpusError::DocIdOutOfRange {
                line: line_no,
                id: doc,
                max: num_docs,
            });
        }
        if word < 1 || word as usize > num_words {
            return Err(CorpusError::WordIdOutOfRange {
                line: line_no,
                id: word,
                max: num_words,
            });
        }
        if count < 1 {
            return Err(CorpusError::NonpositiveCount { line: line_no });
        }
        if count > u32::MAX as i64 {
            return Err(CorpusError::MalformedEntry {
                line: line_no,
                reason: "count exceeds u32::MAX".into(),
            });
        }
        raw.push(Entry {
            doc: (doc - 1) as u32,
            word: (word - 1) as u32,
            count: count as u32,
        });
    }
    if raw.len() != declared {
        return Err(CorpusError::EntryCountMismatch {
            declared,
            found: raw.len(),
        });
    }
    SparseCorpus::assemble(num_docs, num_words, raw)
}

/// An ordered term list; index `i` names word id `i` (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
}

impl Vocabulary {
    pub fn new(terms: Vec<String>) -> Self {
        assert!(terms.iter().all(|t| !t.is_empty()), "empty term");
        Vocabulary { terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, word: usize) -> &str {
        &self.terms[word]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        for t in &self.terms {
            writeln!(out, "{t}")?;
        }
        Ok(())
    }
}

/// Parses a one-term-per-line vocabulary. Blank lines are errors; an empty
/// file yields an empty vocabulary (the caller checks the length against the
/// corpus).
pub fn parse_vocab<R: BufRead>(reader: R) -> Result<Vocabulary, CorpusError> {
    let mut terms = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let term = line.trim();
        if term.is_empty() {
            return Err(CorpusError::EmptyTerm { line: i + 1 });
        }
        terms.push(term.to_string());
    }
    Ok(Vocabulary { terms })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetadataKind {
    Authors,
    Labels,
}

/// Per-document id lists: author ids for the author-topic model, or label
/// (topic) ids for labeled LDA. Stored 0-based, sorted, deduplicated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocMetadata {
    kind: MetadataKind,
    ids: Vec<Vec<u32>>,
    id_limit: usize,
}

impl DocMetadata {
    pub fn kind(&self) -> MetadataKind {
        self.kind
    }

    pub fn num_docs(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self, doc: usize) -> &[u32] {
        &self.ids[doc]
    }

    /// Smallest `n` such that every id is `< n`; for author metadata this is
    /// the author count `A`.
    pub fn id_limit(&self) -> usize {
        self.id_limit
    }
}

/// Parses per-document metadata: line `d` lists whitespace-separated 1-based
/// ids for document `d`. Author lists must be nonempty; label lists may be
/// empty (an unlabeled document is unrestricted).
pub fn parse_metadata<R: BufRead>(
    reader: R,
    kind: MetadataKind,
    num_docs: usize,
) -> Result<DocMetadata, CorpusError> {
    let mut ids: Vec<Vec<u32>> = Vec::new();
    let mut id_limit = 0usize;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let mut list = Vec::new();
        for field in line.split_whitespace() {
            let id: u64 = field.parse().map_err(|_| CorpusError::InvalidId {
                line: line_no,
                reason: format!("expected an integer, got {field:?}"),
            })?;
            if id == 0 || id > u32::MAX as u64 {
                return Err(CorpusError::InvalidId {
                    line: line_no,
                    reason: format!("id {id} outside 1..=u32::MAX"),
                });
            }
            id_limit = id_limit.max(id as usize);
            list.push((id - 1) as u32);
        }
        if list.is_empty() && kind == MetadataKind::Authors {
            return Err(CorpusError::EmptyAuthorList { doc: line_no });
        }
        list.sort_unstable();
        list.dedup();
        ids.push(list);
    }
    if ids.len() != num_docs {
        return Err(CorpusError::MetadataLineCount {
            expected: num_docs,
            found: ids.len(),
        });
    }
    Ok(DocMetadata {
        kind,
        ids,
        id_limit,
    })
}
