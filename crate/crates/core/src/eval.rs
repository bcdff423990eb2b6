//! Per-word precision/recall evaluation of multi-label annotations.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::LabelCorpus;
use crate::textproc::{document_frequencies, Vocabulary};
use crate::{Error, Result};

/// Image id → set of words.
pub type WordSets = BTreeMap<String, BTreeSet<String>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordCounts {
    pub word: String,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    /// Number of training images carrying the word.
    pub train_frequency: u64,
}

impl WordCounts {
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }
}

/// 0/0 is taken as 0.
fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Confusion counts for every vocabulary word, in vocabulary order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordConfusion {
    pub words: Vec<WordCounts>,
}

impl WordConfusion {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Fills `train_frequency` from the training labels.
    pub fn with_train_frequencies(mut self, train: &LabelCorpus) -> Self {
        let df = document_frequencies(train);
        for w in &mut self.words {
            w.train_frequency = df.get(w.word.as_str()).copied().unwrap_or(0) as u64;
        }
        self
    }

    /// Elementwise sum of two tables over the same vocabulary.
    pub fn merge(&self, other: &WordConfusion) -> Result<WordConfusion> {
        if self.words.len() != other.words.len() || self.words.iter().zip(&other.words).any(|(a, b)| a.word != b.word) {
            return Err(Error::Argument("confusion tables cover different vocabularies".into()));
        }
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| WordCounts {
                word: a.word.clone(),
                tp: a.tp + b.tp,
                fp: a.fp + b.fp,
                fn_: a.fn_ + b.fn_,
                train_frequency: a.train_frequency,
            })
            .collect();
        Ok(WordConfusion { words })
    }
}

/// Accumulates per-word TP/FP/FN over all images. Words outside `vocab`
/// are ignored on both sides.
pub fn confusion_counts(predictions: &WordSets, truth: &WordSets, vocab: &Vocabulary) -> Result<WordConfusion> {
    let mismatched: Vec<String> = predictions
        .keys()
        .filter(|k| !truth.contains_key(*k))
        .chain(truth.keys().filter(|k| !predictions.contains_key(*k)))
        .cloned()
        .collect();
    if !mismatched.is_empty() {
        return Err(Error::KeyMismatch(mismatched));
    }
    let mut words: Vec<WordCounts> = vocab
        .words()
        .iter()
        .map(|w| WordCounts { word: w.clone(), tp: 0, fp: 0, fn_: 0, train_frequency: 0 })
        .collect();
    for (image, predicted) in predictions {
        let actual = &truth[image];
        for w in predicted {
            if let Some(i) = vocab.position(w) {
                if actual.contains(w) {
                    words[i].tp += 1;
                } else {
                    words[i].fp += 1;
                }
            }
        }
        for w in actual.difference(predicted) {
            if let Some(i) = vocab.position(w) {
                words[i].fn_ += 1;
            }
        }
    }
    Ok(WordConfusion { words })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub mean_precision: f64,
    pub mean_recall: f64,
    /// Harmonic mean of `mean_precision` and `mean_recall`.
    pub mean_f: f64,
    /// Words with recall > 0.
    pub n_plus: usize,
    pub vocabulary_size: usize,
}

impl MetricsReport {
    /// `(P, R, F)` as whole percentages.
    pub fn percent(&self) -> (u32, u32, u32) {
        let pct = |v: f64| libm::round(v * 100.0) as u32;
        (pct(self.mean_precision), pct(self.mean_recall), pct(self.mean_f))
    }
}

/// `2PR / (P + R)`, or 0 when both are 0.
pub fn f_measure(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Unweighted means over every word of the table.
pub fn mean_metrics(table: &WordConfusion) -> Result<MetricsReport> {
    if table.is_empty() {
        return Err(Error::Argument("empty confusion table".into()));
    }
    let m = table.len() as f64;
    let mean_precision = table.words.iter().map(WordCounts::precision).sum::<f64>() / m;
    let mean_recall = table.words.iter().map(WordCounts::recall).sum::<f64>() / m;
    Ok(MetricsReport {
        mean_precision,
        mean_recall,
        mean_f: f_measure(mean_precision, mean_recall),
        n_plus: table.words.iter().filter(|w| w.recall() > 0.0).count(),
        vocabulary_size: table.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyBin {
    pub mean_frequency: f64,
    pub mean_precision: f64,
}

/// Words sorted by ascending training frequency (ties lexicographic), cut
/// into consecutive chunks of `bin_size`; the last chunk may be smaller.
pub fn precision_frequency_bins(table: &WordConfusion, bin_size: usize) -> Result<Vec<FrequencyBin>> {
    if bin_size == 0 {
        return Err(Error::Argument("bin size must be positive".into()));
    }
    let mut sorted: Vec<&WordCounts> = table.words.iter().collect();
    sorted.sort_by(|a, b| a.train_frequency.cmp(&b.train_frequency).then_with(|| a.word.cmp(&b.word)));
    Ok(sorted
        .chunks(bin_size)
        .map(|chunk| {
            let n = chunk.len() as f64;
            FrequencyBin {
                mean_frequency: chunk.iter().map(|w| w.train_frequency as f64).sum::<f64>() / n,
                mean_precision: chunk.iter().map(|w| w.precision()).sum::<f64>() / n,
            }
        })
        .collect())
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape { expected: a.len(), found: b.len(), context: "labelings" });
    }
    let pairs = |n: u64| (n * n.saturating_sub(1) / 2) as f64;
    let mut joint: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0) += 1;
        *rows.entry(x).or_insert(0) += 1;
        *cols.entry(y).or_insert(0) += 1;
    }
    let index: f64 = joint.values().map(|&n| pairs(n)).sum();
    let sum_rows: f64 = rows.values().map(|&n| pairs(n)).sum();
    let sum_cols: f64 = cols.values().map(|&n| pairs(n)).sum();
    let total = pairs(a.len() as u64);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = sum_rows * sum_cols / total;
    let max = 0.5 * (sum_rows + sum_cols);
    if max == expected {
        // both labelings trivial (all singletons or one block)
        return Ok(if index == expected { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn sets(entries: &[(&str, &[&str])]) -> WordSets {
        entries.iter().map(|(id, ws)| (id.to_string(), ws.iter().map(|w| w.to_string()).collect())).collect()
    }

    fn vocab(words: &[&str]) -> Vocabulary {
        Vocabulary::from_words(words.iter().copied()).unwrap()
    }

    #[test]
    fn confusion_examples() {
        let v = vocab(&["car", "sky"]);
        let t = confusion_counts(&sets(&[("a", &["car"])]), &sets(&[("a", &["car"])]), &v).unwrap();
        assert_eq!((t.words[0].tp, t.words[0].fp, t.words[0].fn_), (1, 0, 0));
        let t = confusion_counts(&sets(&[("a", &["car"])]), &sets(&[("a", &["sky"])]), &v).unwrap();
        assert_eq!((t.words[0].tp, t.words[0].fp, t.words[0].fn_), (0, 1, 0));
        assert_eq!((t.words[1].tp, t.words[1].fp, t.words[1].fn_), (0, 0, 1));
        let err = confusion_counts(&sets(&[("a", &[])]), &sets(&[("b", &[])]), &v).unwrap_err();
        assert_eq!(err, Error::KeyMismatch(vec!["a".into(), "b".into()]));
    }

    #[test]
    fn metric_conventions() {
        let zero =
            WordConfusion { words: vec![WordCounts { word: "a".into(), tp: 0, fp: 0, fn_: 0, train_frequency: 1 }] };
        let r = mean_metrics(&zero).unwrap();
        assert_eq!((r.mean_precision, r.mean_recall, r.mean_f, r.n_plus), (0.0, 0.0, 0.0, 0));
        let eq = WordConfusion {
            words: vec![
                WordCounts { word: "a".into(), tp: 1, fp: 1, fn_: 1, train_frequency: 1 },
                WordCounts { word: "b".into(), tp: 3, fp: 1, fn_: 1, train_frequency: 1 },
            ],
        };
        let r = mean_metrics(&eq).unwrap();
        assert!((r.mean_f - r.mean_precision).abs() < 1e-15);
        assert_eq!(r.n_plus, 2);
        assert!(mean_metrics(&WordConfusion { words: vec![] }).is_err());
    }

    #[test]
    fn percent_rounding_of_reported_row() {
        let f = f_measure(0.41, 0.42);
        assert!((f - 0.414_939_759_036_144_6).abs() < 1e-15);
    }

    #[test]
    fn bins_by_frequency() {
        let words = (0..20)
            .map(|i| WordCounts { word: alloc::format!("w{i:02}"), tp: 1, fp: 0, fn_: 0, train_frequency: 5 })
            .collect();
        let bins = precision_frequency_bins(&WordConfusion { words }, 10).unwrap();
        assert_eq!(bins.len(), 2);
        assert!(bins.iter().all(|b| b.mean_frequency == 5.0 && b.mean_precision == 1.0));
        assert!(precision_frequency_bins(&WordConfusion { words: vec![] }, 0).is_err());
    }

    #[test]
    fn ari_examples() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 3, 3]).unwrap(), 1.0);
        let v = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert!(v < 0.0);
        assert_eq!(adjusted_rand_index(&[0, 1, 2], &[2, 1, 0]).unwrap(), 1.0);
    }
}
