//! Bag-of-words corpora: UCI loading, vocabulary selection, splits and
//! minibatching.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// Sparse word-count vector of one document.
///
/// Entries are sorted by word index, every count is positive and the
/// document length is the sum of counts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Document {
    counts: Vec<(u32, u32)>,
    len: u32,
}

impl Document {
    /// Build from `(word, count)` pairs. Duplicate words are summed and zero
    /// counts are dropped.
    pub fn from_counts<I: IntoIterator<Item = (usize, u32)>>(pairs: I) -> Self {
        let mut map = BTreeMap::new();
        for (w, c) in pairs {
            if c > 0 {
                *map.entry(w as u32).or_insert(0u32) += c;
            }
        }
        let counts: Vec<(u32, u32)> = map.into_iter().collect();
        let len = counts.iter().map(|&(_, c)| c).sum();
        Document { counts, len }
    }

    /// Build from a dense count vector.
    pub fn from_dense(dense: &[u32]) -> Self {
        Self::from_counts(dense.iter().copied().enumerate())
    }

    /// Document length `D`.
    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// `(word, count)` pairs in ascending word order.
    #[inline]
    pub fn iter(&self) -> impl ExactSizeIterator<Item = (usize, u32)> + '_ {
        self.counts.iter().map(|&(w, c)| (w as usize, c))
    }

    pub fn nnz(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, word: usize) -> u32 {
        match self.counts.binary_search_by_key(&(word as u32), |&(w, _)| w) {
            Ok(i) => self.counts[i].1,
            Err(_) => 0,
        }
    }

    pub fn contains(&self, word: usize) -> bool {
        self.count(word) > 0
    }

    pub fn to_dense(&self, vocab_size: usize) -> Vec<u32> {
        let mut v = vec![0; vocab_size];
        for (w, c) in self.iter() {
            v[w] = c;
        }
        v
    }

    /// Largest word index plus one, or 0 for an empty document.
    pub fn min_vocab(&self) -> usize {
        self.counts.last().map_or(0, |&(w, _)| w as usize + 1)
    }
}

/// A named collection of documents over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub name: String,
    vocab: Vec<String>,
    docs: Vec<Document>,
}

impl Corpus {
    /// Validates vocabulary uniqueness and document index bounds.
    pub fn new(name: impl Into<String>, vocab: Vec<String>, docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(vocab.len());
        for (i, w) in vocab.iter().enumerate() {
            if w.is_empty() {
                return Err(Error::Structure(format!("vocabulary entry {i} is empty")));
            }
            if !seen.insert(w.as_str()) {
                return Err(Error::Structure(format!("vocabulary word {w:?} appears twice")));
            }
        }
        for (n, d) in docs.iter().enumerate() {
            if d.min_vocab() > vocab.len() {
                return Err(Error::Structure(format!(
                    "document {n} references word {} but K={}",
                    d.min_vocab() - 1,
                    vocab.len()
                )));
            }
        }
        Ok(Corpus {
            name: name.into(),
            vocab,
            docs,
        })
    }

    /// Corpus with placeholder vocabulary `w0, w1, ...`.
    pub fn with_anonymous_vocab(name: impl Into<String>, k: usize, docs: Vec<Document>) -> Result<Self> {
        Self::new(name, (0..k).map(|i| format!("w{i}")).collect(), docs)
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Sub-corpus made of the documents at `indices`, in that order.
    pub fn subset(&self, name: impl Into<String>, indices: &[usize]) -> Corpus {
        Corpus {
            name: name.into(),
            vocab: self.vocab.clone(),
            docs: indices.iter().map(|&i| self.docs[i].clone()).collect(),
        }
    }

    /// Total count of each word over the corpus.
    pub fn word_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.vocab.len()];
        for d in &self.docs {
            for (w, c) in d.iter() {
                totals[w] += c as u64;
            }
        }
        totals
    }

    /// Number of documents containing each word.
    pub fn document_frequencies(&self) -> Vec<u64> {
        let mut df = vec![0u64; self.vocab.len()];
        for d in &self.docs {
            for (w, _) in d.iter() {
                df[w] += 1;
            }
        }
        df
    }

    /// Write the corpus as a UCI bag-of-words pair (docword + vocab).
    pub fn write_uci(&self, docword_path: &Path, vocab_path: &Path) -> Result<()> {
        let nnz: usize = self.docs.iter().map(Document::nnz).sum();
        let mut out = String::new();
        out.push_str(&format!("{}\n{}\n{}\n", self.docs.len(), self.vocab.len(), nnz));
        for (n, d) in self.docs.iter().enumerate() {
            for (w, c) in d.iter() {
                out.push_str(&format!("{} {} {}\n", n + 1, w + 1, c));
            }
        }
        write_file(docword_path, out.as_bytes())?;
        let mut v = String::new();
        for w in &self.vocab {
            v.push_str(w);
            v.push('\n');
        }
        write_file(vocab_path, v.as_bytes())
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Result of [`load_uci_bow`].
#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    /// Documents declared in the header that had no tokens.
    pub dropped_empty: usize,
}

/// Load a UCI bag-of-words corpus. IDs in the file are 1-based.
pub fn load_uci_bow(docword_path: &Path, vocab_path: &Path) -> Result<LoadedCorpus> {
    let vocab_text = read_file(vocab_path)?;
    let mut vocab = Vec::new();
    for (i, line) in vocab_text.lines().enumerate() {
        let w = line.trim();
        if w.is_empty() {
            // tolerate a trailing blank line only
            if vocab_text.lines().skip(i + 1).all(|l| l.trim().is_empty()) {
                break;
            }
            return Err(Error::parse(vocab_path, i + 1, "empty vocabulary entry"));
        }
        vocab.push(w.to_string());
    }

    let text = read_file(docword_path)?;
    let mut lines = text.lines().enumerate();
    let mut header = [0usize; 3];
    for (slot, name) in header.iter_mut().zip(["N", "K", "NNZ"]) {
        let (i, line) = lines
            .next()
            .ok_or_else(|| Error::parse(docword_path, 1, format!("missing header line {name}")))?;
        *slot = line
            .trim()
            .parse()
            .map_err(|_| Error::parse(docword_path, i + 1, format!("malformed header value for {name}: {line:?}")))?;
    }
    let [n_docs, k, nnz] = header;
    if k != vocab.len() {
        return Err(Error::Structure(format!(
            "docword header declares K={k} but vocabulary has {} words",
            vocab.len()
        )));
    }

    let mut per_doc: Vec<Vec<(usize, u32)>> = vec![Vec::new(); n_docs];
    let mut seen = 0usize;
    for (i, line) in lines {
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let mut next = |what: &str| -> Result<i64> {
            fields
                .next()
                .ok_or_else(|| Error::parse(docword_path, lineno, format!("missing {what}")))?
                .parse::<i64>()
                .map_err(|_| Error::parse(docword_path, lineno, format!("malformed {what}")))
        };
        let (doc, word, count) = (next("document ID")?, next("word ID")?, next("count")?);
        if doc < 1 || doc as usize > n_docs {
            return Err(Error::parse(
                docword_path,
                lineno,
                format!("document ID {doc} outside 1..={n_docs}"),
            ));
        }
        if word < 1 || word as usize > k {
            return Err(Error::parse(docword_path, lineno, format!("word ID {word} exceeds K={k}")));
        }
        if count <= 0 || count > u32::MAX as i64 {
            return Err(Error::parse(docword_path, lineno, format!("count {count} must be positive")));
        }
        per_doc[doc as usize - 1].push((word as usize - 1, count as u32));
        seen += 1;
    }
    if seen != nnz {
        log::warn!("{}: header declares NNZ={nnz} but {seen} entries were read", docword_path.display());
    }

    let mut docs = Vec::with_capacity(n_docs);
    let mut dropped_empty = 0;
    for pairs in per_doc {
        let d = Document::from_counts(pairs);
        if d.is_empty() {
            dropped_empty += 1;
        } else {
            docs.push(d);
        }
    }
    if dropped_empty > 0 {
        log::warn!("{}: dropped {dropped_empty} empty documents", docword_path.display());
    }
    let name = docword_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(LoadedCorpus {
        corpus: Corpus::new(name, vocab, docs)?,
        dropped_empty,
    })
}

/// Word ranking used by [`select_vocab`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VocabMethod {
    /// Total count over the corpus.
    Frequency,
    /// Average over all documents of `(count / D) * ln(N / df)`.
    TfIdf,
}

impl std::str::FromStr for VocabMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" => Ok(VocabMethod::Frequency),
            "tfidf" => Ok(VocabMethod::TfIdf),
            _ => Err(Error::arg(format!("unknown vocabulary method {s:?}"))),
        }
    }
}

/// Per-word score for vocabulary selection.
pub fn vocab_scores(corpus: &Corpus, method: VocabMethod) -> Vec<f64> {
    match method {
        VocabMethod::Frequency => corpus.word_totals().into_iter().map(|t| t as f64).collect(),
        VocabMethod::TfIdf => {
            let n = corpus.len() as f64;
            let df = corpus.document_frequencies();
            let idf: Vec<f64> = df
                .iter()
                .map(|&d| if d == 0 { 0.0 } else { (n / d as f64).ln() })
                .collect();
            let mut sum = vec![0.0; corpus.vocab_size()];
            for d in corpus.docs() {
                let len = d.len() as f64;
                for (w, c) in d.iter() {
                    sum[w] += c as f64 / len * idf[w];
                }
            }
            sum.into_iter().map(|s| if n > 0.0 { s / n } else { 0.0 }).collect()
        }
    }
}

/// Indices of the `k` best words, ties to the lower index, returned in
/// ascending index order.
pub fn top_words(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut keep = order[..k.min(order.len())].to_vec();
    keep.sort_unstable();
    keep
}

/// Result of [`select_vocab`].
#[derive(Debug, Clone)]
pub struct SelectedCorpus {
    pub corpus: Corpus,
    /// Original vocabulary index of each kept word.
    pub kept: Vec<usize>,
    pub dropped_empty: usize,
}

/// Restrict the corpus to its `k` top-ranked words.
///
/// Kept words keep their original relative order. Documents left empty are
/// dropped.
pub fn select_vocab(corpus: &Corpus, k: usize, method: VocabMethod) -> Result<SelectedCorpus> {
    if k == 0 || k > corpus.vocab_size() {
        return Err(Error::arg(format!(
            "cannot select {k} words from a vocabulary of {}",
            corpus.vocab_size()
        )));
    }
    let kept = top_words(&vocab_scores(corpus, method), k);
    let mut remap = vec![usize::MAX; corpus.vocab_size()];
    for (new, &old) in kept.iter().enumerate() {
        remap[old] = new;
    }
    let mut docs = Vec::with_capacity(corpus.len());
    let mut dropped_empty = 0;
    for d in corpus.docs() {
        let nd = Document::from_counts(
            d.iter()
                .filter(|&(w, _)| remap[w] != usize::MAX)
                .map(|(w, c)| (remap[w], c)),
        );
        if nd.is_empty() {
            dropped_empty += 1;
        } else {
            docs.push(nd);
        }
    }
    let vocab = kept.iter().map(|&i| corpus.vocab[i].clone()).collect();
    Ok(SelectedCorpus {
        corpus: Corpus {
            name: corpus.name.clone(),
            vocab,
            docs,
        },
        kept,
        dropped_empty,
    })
}

/// Train/validation/test partition of one corpus.
#[derive(Debug, Clone)]
pub struct CorpusSplit {
    pub train: Corpus,
    pub validation: Corpus,
    pub test: Corpus,
    pub seed: u64,
    /// Source document indices of train, validation and test.
    pub indices: [Vec<usize>; 3],
}

impl CorpusSplit {
    /// Plain-text manifest: one `[section]` header followed by the source
    /// document indices of that part, one per line.
    pub fn manifest(&self) -> String {
        let mut s = format!("# seed {}\n", self.seed);
        for (name, idx) in ["train", "validation", "test"].iter().zip(&self.indices) {
            s.push_str(&format!("[{name}]\n"));
            for i in idx {
                s.push_str(&format!("{i}\n"));
            }
        }
        s
    }
}

/// Seeded random split; documents are shuffled then dealt out in order.
pub fn split_corpus(corpus: &Corpus, seed: u64, n_train: usize, n_val: usize, n_test: usize) -> Result<CorpusSplit> {
    let total = n_train + n_val + n_test;
    if total > corpus.len() {
        return Err(Error::arg(format!(
            "split sizes {n_train}+{n_val}+{n_test} exceed {} documents",
            corpus.len()
        )));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut rng::stream(seed, &[0x5e11]));
    let train = order[..n_train].to_vec();
    let val = order[n_train..n_train + n_val].to_vec();
    let test = order[n_train + n_val..total].to_vec();
    Ok(CorpusSplit {
        train: corpus.subset(format!("{}.train", corpus.name), &train),
        validation: corpus.subset(format!("{}.validation", corpus.name), &val),
        test: corpus.subset(format!("{}.test", corpus.name), &test),
        seed,
        indices: [train, val, test],
    })
}

/// Per-epoch shuffled minibatch schedule over `n_docs` documents.
#[derive(Debug, Clone, Copy)]
pub struct BatchPlan {
    pub n_docs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl BatchPlan {
    pub fn new(n_docs: usize, batch_size: usize, seed: u64) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::arg("batch size must be at least 1"));
        }
        Ok(BatchPlan { n_docs, batch_size, seed })
    }

    pub fn batches_per_epoch(&self) -> usize {
        self.n_docs.div_ceil(self.batch_size)
    }

    /// Batches of document indices for one epoch. The order depends only on
    /// the seed and the epoch index.
    pub fn epoch(&self, epoch: usize) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.n_docs).collect();
        order.shuffle(&mut rng::stream(self.seed, &[0xba7c, epoch as u64]));
        order.chunks(self.batch_size).map(<[usize]>::to_vec).collect()
    }
}

/// Minibatch schedule for a corpus; see [`BatchPlan`].
pub fn minibatches(corpus: &Corpus, batch_size: usize, seed: u64) -> Result<BatchPlan> {
    BatchPlan::new(corpus.len(), batch_size, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn loads_small_uci_file() {
        let dir = tempfile::tempdir().unwrap();
        let dw = write(dir.path(), "docword.txt", "2\n3\n3\n1 1 2\n1 3 1\n2 2 5\n");
        let vo = write(dir.path(), "vocab.txt", "a\nb\nc\n");
        let loaded = load_uci_bow(&dw, &vo).unwrap();
        let docs = loaded.corpus.docs();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].iter().collect::<Vec<_>>(), vec![(0, 2), (2, 1)]);
        assert_eq!(docs[1].iter().collect::<Vec<_>>(), vec![(1, 5)]);
        assert_eq!(docs[0].len(), 3);
        assert_eq!(loaded.dropped_empty, 0);
    }

    #[test]
    fn word_out_of_range_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let dw = write(dir.path(), "docword.txt", "2\n3\n3\n1 1 2\n2 2 5\n1 4 1\n");
        let vo = write(dir.path(), "vocab.txt", "a\nb\nc\n");
        let err = load_uci_bow(&dw, &vo).unwrap_err().to_string();
        assert!(err.contains("word ID 4 exceeds K=3 at line 6"), "{err}");
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let vo = write(dir.path(), "vocab.txt", "a\nb\nc\n");
        let bad_header = write(dir.path(), "h.txt", "2\nx\n3\n");
        assert!(matches!(load_uci_bow(&bad_header, &vo), Err(Error::Parse { line: 2, .. })));
        let zero = write(dir.path(), "z.txt", "1\n3\n1\n1 1 0\n");
        assert!(matches!(load_uci_bow(&zero, &vo), Err(Error::Parse { line: 4, .. })));
        let mismatch = write(dir.path(), "m.txt", "1\n4\n1\n1 1 1\n");
        assert!(matches!(load_uci_bow(&mismatch, &vo), Err(Error::Structure(_))));
    }

    #[test]
    fn empty_documents_are_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let dw = write(dir.path(), "docword.txt", "3\n2\n2\n1 1 1\n3 2 4\n");
        let vo = write(dir.path(), "vocab.txt", "a\nb\n");
        let loaded = load_uci_bow(&dw, &vo).unwrap();
        assert_eq!(loaded.corpus.len(), 2);
        assert_eq!(loaded.dropped_empty, 1);
    }

    #[test]
    fn uci_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let docs = vec![
            Document::from_counts([(0, 3), (4, 1)]),
            Document::from_counts([(2, 2)]),
            Document::from_counts([(1, 1), (3, 7), (4, 2)]),
        ];
        let c = Corpus::with_anonymous_vocab("t", 5, docs).unwrap();
        let (dw, vo) = (dir.path().join("d.txt"), dir.path().join("v.txt"));
        c.write_uci(&dw, &vo).unwrap();
        let back = load_uci_bow(&dw, &vo).unwrap().corpus;
        assert_eq!(back.docs(), c.docs());
        assert_eq!(back.vocab(), c.vocab());
    }

    #[test]
    fn select_vocab_single_word() {
        let docs = vec![Document::from_counts([(0, 2)]), Document::from_counts([(0, 1)])];
        let c = Corpus::with_anonymous_vocab("t", 3, docs).unwrap();
        let s = select_vocab(&c, 1, VocabMethod::Frequency).unwrap();
        assert_eq!(s.corpus.vocab_size(), 1);
        assert_eq!(s.corpus.len(), 2);
        assert!(select_vocab(&c, 4, VocabMethod::TfIdf).is_err());
    }

    #[test]
    fn tfidf_matches_hand_computation() {
        // word 0 is in both docs (idf 0); word 1 only in doc 0
        let docs = vec![Document::from_counts([(0, 1), (1, 3)]), Document::from_counts([(0, 2)])];
        let c = Corpus::with_anonymous_vocab("t", 3, docs).unwrap();
        let s = vocab_scores(&c, VocabMethod::TfIdf);
        assert_eq!(s[0], 0.0);
        assert!((s[1] - 0.75 * 2f64.ln() / 2.0).abs() < 1e-15);
        assert_eq!(s[2], 0.0);
        let sel = select_vocab(&c, 1, VocabMethod::TfIdf).unwrap();
        assert_eq!(sel.kept, vec![1]);
        assert_eq!(sel.corpus.len(), 1);
        assert_eq!(sel.dropped_empty, 1);
    }

    #[test]
    fn split_boundaries_and_determinism() {
        let docs = (0..20).map(|i| Document::from_counts([(i % 4, 1 + i as u32)])).collect();
        let c = Corpus::with_anonymous_vocab("t", 4, docs).unwrap();
        let all = split_corpus(&c, 3, 20, 0, 0).unwrap();
        assert_eq!(all.train.len(), 20);
        assert!(all.validation.is_empty() && all.test.is_empty());
        let a = split_corpus(&c, 9, 10, 5, 5).unwrap();
        let b = split_corpus(&c, 9, 10, 5, 5).unwrap();
        assert_eq!(a.indices, b.indices);
        assert!(split_corpus(&c, 9, 10, 6, 5).is_err());
    }

    #[test]
    fn batches_cover_with_remainder() {
        let plan = BatchPlan::new(7, 3, 1).unwrap();
        let sizes: Vec<usize> = plan.epoch(0).iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 1]);
        assert_eq!(plan.epoch(4), plan.epoch(4));
        assert_eq!(BatchPlan::new(1640, 10, 0).unwrap().batches_per_epoch(), 164);
        assert!(BatchPlan::new(3, 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn frequency_selection_separates_kept_and_dropped(
            totals in proptest::collection::vec(1u32..6, 2..12),
            k_frac in 0.0f64..1.0,
        ) {
            let k = 1 + ((totals.len() - 1) as f64 * k_frac) as usize;
            let docs = vec![Document::from_counts(totals.iter().copied().enumerate())];
            let c = Corpus::with_anonymous_vocab("p", totals.len(), docs).unwrap();
            let sel = select_vocab(&c, k, VocabMethod::Frequency).unwrap();
            let kept: HashSet<usize> = sel.kept.iter().copied().collect();
            let min_kept = sel.kept.iter().map(|&i| totals[i]).min().unwrap();
            for (i, &t) in totals.iter().enumerate() {
                if !kept.contains(&i) {
                    prop_assert!(t <= min_kept);
                    if t == min_kept {
                        // ties go to the lower index
                        prop_assert!(sel.kept.iter().any(|&j| totals[j] == t && j < i));
                    }
                }
            }
        }

        #[test]
        fn split_parts_are_disjoint(n in 0usize..40, seed in 0u64..1000, a in 0usize..15, b in 0usize..15) {
            let docs = (0..n).map(|i| Document::from_counts([(i % 3, 1)])).collect();
            let c = Corpus::with_anonymous_vocab("p", 3, docs).unwrap();
            let (tr, va) = (a.min(n), b.min(n - a.min(n)));
            let te = n - tr - va;
            let s = split_corpus(&c, seed, tr, va, te).unwrap();
            let mut all: Vec<usize> = s.indices.concat();
            prop_assert_eq!(all.len(), n);
            all.sort_unstable();
            all.dedup();
            prop_assert_eq!(all.len(), n);
        }

        #[test]
        fn every_epoch_covers_each_doc_once(n in 0usize..50, bs in 1usize..9, epoch in 0usize..5) {
            let plan = BatchPlan::new(n, bs, 11).unwrap();
            let batches = plan.epoch(epoch);
            prop_assert_eq!(batches.len(), plan.batches_per_epoch());
            let mut all: Vec<usize> = batches.concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
