//! Coarse-to-fine image annotation engine.
//!
//! Training images are grouped into *themes* by clustering the tfIdf vectors
//! of their descriptions. A test image is first coded against all themed
//! training images with a sparse group lasso; the themes that receive
//! non-zero coefficient groups narrow the candidate vocabulary. Each
//! candidate word is then scored by how well a lasso reconstruction from the
//! word's representative images matches the test image (cosine similarity),
//! and the top `B` words become the annotation.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel batch execution live in the companion `theme-annotate` crate.

#![no_std]

extern crate alloc;

pub mod baseline;
pub mod clustering;
pub mod dataset;
mod error;
pub mod eval;
pub mod linalg;
pub mod pipeline;
pub mod solvers;
pub mod synth;
pub mod textproc;

pub use error::{Error, Result};

pub mod prelude {
    pub use crate::clustering::{cluster_themes, prune_themes, Linkage, ThemeModel};
    pub use crate::dataset::{DatasetBundle, FeatureMatrix, LabelCorpus, Role};
    pub use crate::pipeline::{annotate, annotate_batch, AnnotationResult, PipelineConfig};
    pub use crate::solvers::{solve_lasso, solve_sgl, DesignMatrix, GroupStructure, SolverConfig};
    pub use crate::textproc::{build_vocabulary, tfidf_weights, Vocabulary};
    pub use crate::{Error, Result};
}
