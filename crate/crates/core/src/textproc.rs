//! Vocabulary construction and tfIdf weighting of image descriptions.
//!
//! The weight of word `i` in description `j` is `n_i^j / N_i`: the raw count
//! of the word in the description divided by the number of descriptions
//! containing it. There is no logarithm.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::LabelCorpus;
use crate::{Error, Result};

/// Ordered word list: descending document frequency, ties lexicographic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    /// Vocabulary with the given order. Duplicates are an error.
    pub fn from_words<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let words: Vec<String> = words.into_iter().map(Into::into).collect();
        if words.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        let mut index = BTreeMap::new();
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::InvalidData(alloc::format!("duplicate vocabulary word `{w}`")));
            }
        }
        Ok(Vocabulary { words, index })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn position(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }
}

/// Number of images whose label set contains each word.
pub fn document_frequencies(corpus: &LabelCorpus) -> BTreeMap<&str, usize> {
    let mut df = BTreeMap::new();
    for (_, words) in corpus.iter() {
        for w in words {
            *df.entry(w.word.as_str()).or_insert(0) += 1;
        }
    }
    df
}

/// Keeps words present in at least `min_images` images, most frequent first,
/// optionally truncated to `max_size` words.
pub fn build_vocabulary(corpus: &LabelCorpus, min_images: usize, max_size: Option<usize>) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::Argument("empty label corpus".into()));
    }
    if min_images == 0 {
        return Err(Error::Argument("min_images must be positive".into()));
    }
    if max_size == Some(0) {
        return Err(Error::Argument("max_size must be positive".into()));
    }
    let mut ranked: Vec<(&str, usize)> =
        document_frequencies(corpus).into_iter().filter(|&(_, df)| df >= min_images).collect();
    // BTreeMap iteration is lexicographic; a stable sort keeps that for ties.
    ranked.sort_by(|a, b| b.1.cmp(&a.1));
    if let Some(max) = max_size {
        ranked.truncate(max);
    }
    if ranked.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    Vocabulary::from_words(ranked.into_iter().map(|(w, _)| w))
}

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds from arbitrary `(index, value)` pairs. Duplicate indices are
    /// summed and explicit zeros dropped.
    pub fn from_pairs<I: IntoIterator<Item = (usize, f64)>>(pairs: I) -> Self {
        let mut entries: Vec<(usize, f64)> = pairs.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged.retain(|e| e.1 != 0.0);
        SparseVector { entries: merged }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries.binary_search_by_key(&index, |e| e.0).map(|k| self.entries[k].1).unwrap_or(0.0)
    }

    pub fn dot(&self, other: &SparseVector) -> f64 {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                core::cmp::Ordering::Less => {
                    a.next();
                }
                core::cmp::Ordering::Greater => {
                    b.next();
                }
                core::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    pub fn norm2(&self) -> f64 {
        libm::sqrt(self.entries.iter().map(|e| e.1 * e.1).sum())
    }

    pub fn scaled(&self, alpha: f64) -> SparseVector {
        SparseVector::from_pairs(self.entries.iter().map(|&(i, v)| (i, v * alpha)))
    }
}

/// `u·v / (‖u‖‖v‖)`, or 0 when either vector is all-zero.
pub fn cosine_similarity(u: &SparseVector, v: &SparseVector) -> f64 {
    let nu = u.dot(u);
    let nv = v.dot(v);
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    // one square root keeps sim(u, u) exactly 1
    (u.dot(v) / libm::sqrt(nu * nv)).clamp(-1.0, 1.0)
}

/// One sparse tfIdf row per corpus image, in corpus order.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfMatrix {
    pub ids: Vec<String>,
    pub rows: Vec<SparseVector>,
    pub vocab_size: usize,
}

/// Out-of-vocabulary words are ignored. `N_i` counts images of `corpus`
/// containing word `i`.
pub fn tfidf_weights(corpus: &LabelCorpus, vocab: &Vocabulary) -> TfidfMatrix {
    let df = document_frequencies(corpus);
    let mut ids = Vec::with_capacity(corpus.len());
    let mut rows = Vec::with_capacity(corpus.len());
    for (id, words) in corpus.iter() {
        let row = SparseVector::from_pairs(words.iter().filter_map(|w| {
            let i = vocab.position(&w.word)?;
            Some((i, f64::from(w.count) / df[w.word.as_str()] as f64))
        }));
        ids.push(String::from(id));
        rows.push(row);
    }
    TfidfMatrix { ids, rows, vocab_size: vocab.len() }
}
