//! In-memory dataset types: image features, word labels and the bundle that
//! pairs them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// `N` feature vectors of a common dimension, keyed by image id, in row order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f64>,
    index: BTreeMap<String, usize>,
}

impl FeatureMatrix {
    /// Builds a matrix from row-major `data`. Ids must be unique, every entry
    /// finite, and there must be at least one row.
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f64>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::InvalidData("no rows".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidData("feature dimension must be positive".into()));
        }
        if data.len() != ids.len() * dim {
            return Err(Error::Shape {
                expected: ids.len() * dim,
                found: data.len(),
                context: "feature matrix entries",
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite value in row {} (`{}`)",
                pos / dim + 1,
                ids[pos / dim]
            )));
        }
        let mut index = BTreeMap::new();
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::InvalidData(format!("duplicate image id `{id}` in row {}", i + 1)));
            }
        }
        Ok(FeatureMatrix { ids, dim, data, index })
    }

    pub fn from_rows<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f64>)>,
    {
        let mut ids = Vec::new();
        let mut data = Vec::new();
        let mut dim = None;
        for (id, row) in rows {
            let d = *dim.get_or_insert(row.len());
            if row.len() != d {
                return Err(Error::Shape { expected: d, found: row.len(), context: "feature row length" });
            }
            ids.push(id);
            data.extend_from_slice(&row);
        }
        FeatureMatrix::new(ids, dim.unwrap_or(0), data)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn row_by_id(&self, id: &str) -> Option<&[f64]> {
        self.position(id).map(|i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids.iter().map(String::as_str).zip(self.data.chunks_exact(self.dim))
    }

    /// Sub-matrix with the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let ids = rows.iter().map(|&i| self.ids[i].clone()).collect();
        let mut data = Vec::with_capacity(rows.len() * self.dim);
        for &i in rows {
            data.extend_from_slice(self.row(i));
        }
        FeatureMatrix::new(ids, self.dim, data)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordCount {
    pub word: String,
    pub count: u32,
}

/// Per-image word multisets. Entries keep insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelCorpus {
    entries: Vec<(String, Vec<WordCount>)>,
    index: BTreeMap<String, usize>,
}

impl LabelCorpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one image. Words are lowercased; repeated words are merged by
    /// summing their counts.
    pub fn insert<I, S>(&mut self, id: impl Into<String>, words: I) -> Result<()>
    where
        I: IntoIterator<Item = (S, u32)>,
        S: AsRef<str>,
    {
        let id = id.into();
        if self.index.contains_key(&id) {
            return Err(Error::InvalidData(format!("duplicate image id `{id}` in labels")));
        }
        let mut merged: Vec<WordCount> = Vec::new();
        for (word, count) in words {
            let word = word.as_ref();
            if word.is_empty() {
                return Err(Error::InvalidData(format!("empty word for image `{id}`")));
            }
            if word.chars().any(char::is_whitespace) {
                return Err(Error::InvalidData(format!("word `{word}` contains whitespace")));
            }
            if count == 0 {
                return Err(Error::InvalidData(format!("word `{word}` has count 0")));
            }
            let word = word.to_lowercase();
            match merged.iter_mut().find(|w| w.word == word) {
                Some(w) => w.count += count,
                None => merged.push(WordCount { word, count }),
            }
        }
        self.index.insert(id.clone(), self.entries.len());
        self.entries.push((id, merged));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[WordCount]> {
        self.index.get(id).map(|&i| self.entries[i].1.as_slice())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[WordCount])> {
        self.entries.iter().map(|(id, w)| (id.as_str(), w.as_slice()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    /// Set of distinct words of one image.
    pub fn word_set(&self, id: &str) -> BTreeSet<&str> {
        self.get(id).map(|ws| ws.iter().map(|w| w.word.as_str()).collect()).unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Test,
}

/// Features and labels over the same id set, labels stored in feature row order.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub features: FeatureMatrix,
    pub labels: LabelCorpus,
    pub role: Role,
}

impl DatasetBundle {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        self.features.ids()
    }

    /// Sub-bundle with the given rows in the given order.
    pub fn select(&self, rows: &[usize], role: Role) -> Result<Self> {
        let features = self.features.select(rows)?;
        let mut labels = LabelCorpus::new();
        for id in features.ids() {
            let words = self.labels.get(id).unwrap_or(&[]);
            labels.insert(id.clone(), words.iter().map(|w| (w.word.as_str(), w.count)))?;
        }
        Ok(DatasetBundle { features, labels, role })
    }
}

/// Pairs features with labels. Training bundles require identical id sets.
/// Test bundles tolerate unlabeled images (empty word list); label entries
/// without a feature row are ignored there.
pub fn make_bundle(features: FeatureMatrix, labels: LabelCorpus, role: Role) -> Result<DatasetBundle> {
    let missing: Vec<String> = features.ids().iter().filter(|id| !labels.contains(id)).cloned().collect();
    let unmatched: Vec<String> =
        labels.ids().filter(|id| features.position(id).is_none()).map(ToString::to_string).collect();
    if role == Role::Train && !(missing.is_empty() && unmatched.is_empty()) {
        return Err(Error::Mismatch { missing, unmatched });
    }
    let mut aligned = LabelCorpus::new();
    for id in features.ids() {
        let words = labels.get(id).unwrap_or(&[]);
        aligned.insert(id.clone(), words.iter().map(|w| (w.word.as_str(), w.count)))?;
    }
    Ok(DatasetBundle { features, labels: aligned, role })
}

/// Number of test rows for a split: `round(n * fraction)`, at least one.
pub fn test_size(n: usize, test_fraction: f64) -> usize {
    (libm::round(n as f64 * test_fraction) as usize).max(1)
}

/// Uniform random train/test split. Both halves keep the input row order.
pub fn split_train_test(
    bundle: &DatasetBundle,
    test_fraction: f64,
    seed: u64,
) -> Result<(DatasetBundle, DatasetBundle)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let n = bundle.len();
    if n < 2 {
        return Err(Error::Argument(format!("cannot split {n} image(s)")));
    }
    let n_test = test_size(n, test_fraction);
    if n_test >= n {
        return Err(Error::Argument(format!("test fraction {test_fraction} leaves no training images out of {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = alloc::vec![false; n];
    for i in rand::seq::index::sample(&mut rng, n, n_test) {
        is_test[i] = true;
    }
    let (test_rows, train_rows): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_test[i]);
    Ok((bundle.select(&train_rows, Role::Train)?, bundle.select(&test_rows, Role::Test)?))
}
