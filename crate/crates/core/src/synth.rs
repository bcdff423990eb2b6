//! Planted-theme synthetic datasets.
//!
//! Theme `k` owns the `k`-th contiguous block of feature dimensions: its
//! images have value 1 there plus Gaussian noise everywhere, clipped at 0
//! (features are non-negative like rectified CNN activations). Every image
//! of theme `k` is labeled with the theme's distinctive words `tKKdI` and
//! with `common_per_theme` of the shared words `cJ`, assigned round-robin.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{FeatureMatrix, LabelCorpus};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub themes: usize,
    pub images_per_theme: usize,
    pub dim: usize,
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
    pub distinctive_words: usize,
    pub common_words: usize,
    pub common_per_theme: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            themes: 8,
            images_per_theme: 40,
            dim: 64,
            noise: 0.05,
            distinctive_words: 3,
            common_words: 5,
            common_per_theme: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub features: FeatureMatrix,
    pub labels: LabelCorpus,
    /// Planted theme of every row, in row order.
    pub themes: Vec<usize>,
}

pub fn distinctive_word(theme: usize, i: usize) -> String {
    format!("t{theme:02}d{i}")
}

pub fn common_word(j: usize) -> String {
    format!("c{j}")
}

/// Words planted on every image of `theme`.
pub fn theme_words(cfg: &SynthConfig, theme: usize) -> Vec<String> {
    let mut words: Vec<String> = (0..cfg.distinctive_words).map(|i| distinctive_word(theme, i)).collect();
    if cfg.common_words > 0 {
        words.extend((0..cfg.common_per_theme).map(|j| common_word((theme + j) % cfg.common_words)));
    }
    words
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthDataset> {
    if cfg.themes == 0 || cfg.images_per_theme == 0 {
        return Err(Error::Argument("need at least one theme and one image per theme".into()));
    }
    if cfg.dim < cfg.themes {
        return Err(Error::Argument(format!("dim {} is smaller than the theme count {}", cfg.dim, cfg.themes)));
    }
    if cfg.distinctive_words == 0 {
        return Err(Error::Argument("each theme needs at least one distinctive word".into()));
    }
    if cfg.common_per_theme > cfg.common_words {
        return Err(Error::Argument(format!(
            "common_per_theme {} exceeds common_words {}",
            cfg.common_per_theme, cfg.common_words
        )));
    }
    if !(cfg.noise.is_finite() && cfg.noise >= 0.0) {
        return Err(Error::Argument(format!("noise level {} must be finite and non-negative", cfg.noise)));
    }
    let noise = Normal::new(0.0, cfg.noise).map_err(|e| Error::Argument(format!("noise level: {e}")))?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut planted: Vec<usize> = (0..cfg.themes).flat_map(|k| vec![k; cfg.images_per_theme]).collect();
    planted.shuffle(&mut rng);

    let block = cfg.dim / cfg.themes;
    let mut ids = Vec::with_capacity(planted.len());
    let mut data = Vec::with_capacity(planted.len() * cfg.dim);
    let mut labels = LabelCorpus::new();
    let words: Vec<Vec<String>> = (0..cfg.themes).map(|k| theme_words(cfg, k)).collect();
    for (row, &k) in planted.iter().enumerate() {
        let id = format!("img{row:05}");
        for d in 0..cfg.dim {
            let base = if d / block == k && d < block * cfg.themes { 1.0 } else { 0.0 };
            data.push(f64::max(0.0, base + noise.sample(&mut rng)));
        }
        labels.insert(id.clone(), words[k].iter().map(|w| (w.as_str(), 1)))?;
        ids.push(id);
    }
    Ok(SynthDataset { features: FeatureMatrix::new(ids, cfg.dim, data)?, labels, themes: planted })
}
