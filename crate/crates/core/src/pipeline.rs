//! Coarse-to-fine annotation.
//!
//! Layer 1 codes the test feature against every themed training image with
//! a sparse group lasso whose groups are the themes. Themes with a non-zero
//! coefficient block are selected; their images with non-zero coefficients
//! form the filtered training set `J^I`, and the in-vocabulary words of
//! those images form the candidate set `W^I`.
//!
//! Layer 2 scores every candidate word `v`: the test feature is coded with a
//! lasso over the images of `J^I` tagged with `v`, and the score is the
//! cosine between the reconstruction and the test feature. The `B` best
//! words are the annotation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use crate::clustering::ThemeModel;
use crate::dataset::DatasetBundle;
use crate::linalg::{cosine, norm2};
use crate::solvers::{solve_lasso, solve_sgl, DesignMatrix, GroupStructure, SolverConfig, SparseSolution};
use crate::textproc::Vocabulary;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub solver: SolverConfig,
    /// Annotations per image (`B`).
    pub annotations: usize,
    /// Coefficients (and group norms) at or below this count as zero.
    pub epsilon_group: f64,
    /// Put every member of a selected theme into `J^I`, not only those with
    /// non-zero coefficients.
    pub all_theme_members: bool,
    /// Scale design columns to unit L2 norm before solving.
    pub normalize_columns: bool,
    /// How many times λ₂ is halved when layer 1 selects nothing.
    pub max_lambda2_halvings: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            solver: SolverConfig::default(),
            annotations: 5,
            epsilon_group: 1e-8,
            all_theme_members: false,
            normalize_columns: true,
            max_lambda2_halvings: 6,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        if self.annotations == 0 {
            return Err(Error::Argument("annotation count B must be at least 1".into()));
        }
        if !(self.epsilon_group.is_finite() && self.epsilon_group >= 0.0) {
            return Err(Error::Argument(format!("epsilon_group = {} must be non-negative", self.epsilon_group)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// Layer 1 selected nothing until λ₂ was halved `times` times.
    Lambda2Halved { times: usize, lambda2: f64 },
    /// Layer 1 selected nothing at any λ₂; the theme with the closest mean
    /// feature was used instead.
    NearestThemeFallback { theme: usize },
    /// A solve hit `max_iter` without a convergence certificate.
    NotConverged { stage: String, kkt_residual: f64 },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Lambda2Halved { times, lambda2 } => {
                write!(f, "layer 1 empty; lambda2 halved {times} time(s) to {lambda2:e}")
            }
            Diagnostic::NearestThemeFallback { theme } => {
                write!(f, "layer 1 empty at every lambda2; fell back to nearest theme {theme}")
            }
            Diagnostic::NotConverged { stage, kkt_residual } => {
                write!(f, "{stage} solve did not converge (kkt residual {kkt_residual:e})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThemeSelection {
    /// Selected theme indices (`C^I`), ascending.
    pub themes: Vec<usize>,
    /// Filtered training images `J^I`, in design column order.
    pub active_images: Vec<String>,
    /// Candidate words `W^I`, in vocabulary order.
    pub candidate_words: Vec<String>,
    pub layer1: SparseSolution,
    /// λ₂ of the solve that produced the selection.
    pub lambda2: f64,
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationResult {
    pub image_id: String,
    pub selection: ThemeSelection,
    /// Score of every candidate word, in vocabulary order.
    pub word_scores: Vec<(String, f64)>,
    /// `V^I`: at most `B` words, best score first, ties by word.
    pub annotations: Vec<(String, f64)>,
    pub diagnostics: Vec<Diagnostic>,
}

impl AnnotationResult {
    pub fn annotation_words(&self) -> impl Iterator<Item = &str> {
        self.annotations.iter().map(|(w, _)| w.as_str())
    }
}

/// Training state shared by every test image: the theme-grouped layer-1
/// design, per-image vocabulary words and per-theme mean features.
#[derive(Debug, Clone)]
pub struct Annotator<'a> {
    train: &'a DatasetBundle,
    vocab: &'a Vocabulary,
    cfg: PipelineConfig,
    /// Training row of every layer-1 column.
    columns: Vec<usize>,
    /// Theme of every layer-1 column.
    column_theme: Vec<usize>,
    theme_columns: Vec<core::ops::Range<usize>>,
    groups: GroupStructure,
    design: DesignMatrix,
    /// Vocabulary indices carried by each training row.
    row_words: Vec<BTreeSet<usize>>,
    theme_means: Vec<Vec<f64>>,
}

impl<'a> Annotator<'a> {
    pub fn new(
        train: &'a DatasetBundle,
        themes: &ThemeModel,
        vocab: &'a Vocabulary,
        cfg: PipelineConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        if themes.is_empty() {
            return Err(Error::NoThemes);
        }
        let dim = train.features.dim();
        let mut columns = Vec::new();
        let mut column_theme = Vec::new();
        let mut theme_columns = Vec::with_capacity(themes.len());
        let mut theme_means = Vec::with_capacity(themes.len());
        for (k, members) in themes.themes.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::InvalidData(format!("theme {k} is empty")));
            }
            let start = columns.len();
            let mut mean = vec![0.0; dim];
            for id in members {
                let row = train
                    .features
                    .position(id)
                    .ok_or_else(|| Error::InvalidData(format!("theme member `{id}` is not a training image")))?;
                crate::linalg::axpy(1.0 / members.len() as f64, train.features.row(row), &mut mean);
                columns.push(row);
                column_theme.push(k);
            }
            theme_columns.push(start..columns.len());
            theme_means.push(mean);
        }
        let mut design = DesignMatrix::from_columns(dim, columns.iter().map(|&r| train.features.row(r)))?;
        if cfg.normalize_columns {
            design.normalize_columns();
        }
        let sizes: Vec<usize> = theme_columns.iter().map(|r| r.len()).collect();
        let groups = GroupStructure::from_sizes(&sizes)?;
        let row_words = train
            .ids()
            .iter()
            .map(|id| train.labels.get(id).unwrap_or(&[]).iter().filter_map(|w| vocab.position(&w.word)).collect())
            .collect();
        Ok(Annotator {
            train,
            vocab,
            cfg,
            columns,
            column_theme,
            theme_columns,
            groups,
            design,
            row_words,
            theme_means,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn theme_count(&self) -> usize {
        self.theme_columns.len()
    }

    fn check_dim(&self, feature: &[f64]) -> Result<()> {
        if feature.len() != self.train.features.dim() {
            return Err(Error::Shape {
                expected: self.train.features.dim(),
                found: feature.len(),
                context: "test feature dimension",
            });
        }
        Ok(())
    }

    /// Layer 1. Never fails on degenerate solutions: an empty selection
    /// triggers λ₂ halving and finally the nearest-theme fallback.
    pub fn select_themes(&self, feature: &[f64]) -> Result<ThemeSelection> {
        self.check_dim(feature)?;
        let eps = self.cfg.epsilon_group;
        let mut lambda2 = self.cfg.solver.lambda2;
        let mut diagnostics = Vec::new();
        let mut halvings = 0;
        loop {
            let sol =
                solve_sgl(&self.design, feature, &self.groups, self.cfg.solver.lambda1, lambda2, &self.cfg.solver)?;
            let themes: Vec<usize> =
                (0..self.theme_count()).filter(|&k| norm2(&sol.w[self.theme_columns[k].clone()]) > eps).collect();
            let active: Vec<usize> = themes
                .iter()
                .flat_map(|&k| self.theme_columns[k].clone())
                .filter(|&c| self.cfg.all_theme_members || sol.w[c].abs() > eps)
                .collect();
            if !active.is_empty() {
                if halvings > 0 {
                    diagnostics.push(Diagnostic::Lambda2Halved { times: halvings, lambda2 });
                }
                if !sol.converged {
                    diagnostics
                        .push(Diagnostic::NotConverged { stage: "layer 1".into(), kkt_residual: sol.kkt_residual });
                }
                return Ok(self.selection(themes, active, sol, lambda2, diagnostics));
            }
            if halvings == self.cfg.max_lambda2_halvings || lambda2 == 0.0 {
                let theme = self.nearest_theme(feature);
                diagnostics.push(Diagnostic::NearestThemeFallback { theme });
                let active = self.theme_columns[theme].clone().collect();
                return Ok(self.selection(vec![theme], active, sol, lambda2, diagnostics));
            }
            lambda2 /= 2.0;
            halvings += 1;
        }
    }

    fn nearest_theme(&self, feature: &[f64]) -> usize {
        let mut best = (f64::NEG_INFINITY, 0);
        for (k, mean) in self.theme_means.iter().enumerate() {
            let s = cosine(mean, feature);
            if s > best.0 {
                best = (s, k);
            }
        }
        best.1
    }

    fn selection(
        &self,
        themes: Vec<usize>,
        active_columns: Vec<usize>,
        layer1: SparseSolution,
        lambda2: f64,
        diagnostics: Vec<Diagnostic>,
    ) -> ThemeSelection {
        debug_assert!(active_columns.iter().all(|&c| themes.contains(&self.column_theme[c])));
        let mut candidates = BTreeSet::new();
        for &c in &active_columns {
            candidates.extend(self.row_words[self.columns[c]].iter().copied());
        }
        ThemeSelection {
            themes,
            active_images: active_columns.iter().map(|&c| self.train.ids()[self.columns[c]].clone()).collect(),
            candidate_words: candidates.into_iter().map(|i| self.vocab.words()[i].clone()).collect(),
            layer1,
            lambda2,
            diagnostics,
        }
    }

    /// Layer 2 score of one candidate word, together with the lasso solution.
    pub fn score_word_detailed(
        &self,
        feature: &[f64],
        word: &str,
        selection: &ThemeSelection,
    ) -> Result<(f64, SparseSolution)> {
        self.check_dim(feature)?;
        if selection.candidate_words.binary_search_by(|w| self.vocab_cmp(w, word)).is_err() {
            return Err(Error::WordNotCandidate(word.into()));
        }
        let v = self.vocab.position(word).ok_or_else(|| Error::WordNotCandidate(word.into()))?;
        // Predictors come from J^I only.
        let rows: Vec<usize> = selection
            .active_images
            .iter()
            .filter_map(|id| self.train.features.position(id))
            .filter(|&r| self.row_words[r].contains(&v))
            .collect();
        let mut design = DesignMatrix::from_columns(feature.len(), rows.iter().map(|&r| self.train.features.row(r)))?;
        if self.cfg.normalize_columns {
            design.normalize_columns();
        }
        let sol = solve_lasso(&design, feature, self.cfg.solver.rho, &self.cfg.solver)?;
        if sol.is_zero() {
            return Ok((-1.0, sol));
        }
        let mut reconstruction = vec![0.0; feature.len()];
        design.mul_vec(&sol.w, &mut reconstruction);
        Ok((cosine(&reconstruction, feature), sol))
    }

    pub fn score_word(&self, feature: &[f64], word: &str, selection: &ThemeSelection) -> Result<f64> {
        self.score_word_detailed(feature, word, selection).map(|(s, _)| s)
    }

    fn vocab_cmp(&self, a: &str, b: &str) -> Ordering {
        self.vocab.position(a).cmp(&self.vocab.position(b))
    }

    pub fn annotate(&self, feature: &[f64], image_id: &str) -> Result<AnnotationResult> {
        let selection = self.select_themes(feature)?;
        let mut diagnostics = selection.diagnostics.clone();
        let mut word_scores = Vec::with_capacity(selection.candidate_words.len());
        for word in &selection.candidate_words {
            let (score, sol) = self.score_word_detailed(feature, word, &selection)?;
            if !sol.converged {
                diagnostics
                    .push(Diagnostic::NotConverged { stage: format!("word `{word}`"), kkt_residual: sol.kkt_residual });
            }
            word_scores.push((word.clone(), score));
        }
        let mut ranked = word_scores.clone();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(self.cfg.annotations);
        Ok(AnnotationResult { image_id: image_id.into(), selection, word_scores, annotations: ranked, diagnostics })
    }

    /// Annotates every test image, in input order.
    pub fn annotate_batch(&self, test: &DatasetBundle) -> Result<Vec<AnnotationResult>> {
        self.check_dim(test.features.row(0))?;
        test.features.rows().map(|(id, row)| self.annotate(row, id)).collect()
    }
}

/// One-shot layer 1 for a single test feature.
pub fn select_themes(
    feature: &[f64],
    train: &DatasetBundle,
    themes: &ThemeModel,
    vocab: &Vocabulary,
    cfg: &PipelineConfig,
) -> Result<ThemeSelection> {
    Annotator::new(train, themes, vocab, *cfg)?.select_themes(feature)
}

/// One-shot annotation of a single test feature.
pub fn annotate(
    feature: &[f64],
    image_id: &str,
    train: &DatasetBundle,
    themes: &ThemeModel,
    vocab: &Vocabulary,
    cfg: &PipelineConfig,
) -> Result<AnnotationResult> {
    Annotator::new(train, themes, vocab, *cfg)?.annotate(feature, image_id)
}

pub fn annotate_batch(
    test: &DatasetBundle,
    train: &DatasetBundle,
    themes: &ThemeModel,
    vocab: &Vocabulary,
    cfg: &PipelineConfig,
) -> Result<Vec<AnnotationResult>> {
    Annotator::new(train, themes, vocab, *cfg)?.annotate_batch(test)
}

/// `V^I` of each result keyed by image id.
pub fn predictions(results: &[AnnotationResult]) -> BTreeMap<String, BTreeSet<String>> {
    results.iter().map(|r| (r.image_id.clone(), r.annotation_words().map(String::from).collect())).collect()
}
