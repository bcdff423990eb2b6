//! Random-classifier baseline.
//!
//! A classifier that assigns a uniformly random set of `z` distinct labels
//! out of `M` picks any given word with probability `z/M`. If a fraction `X`
//! of images truly carry the word:
//!
//! ```text
//! p(TP) = zX/M    p(FP) = z(1−X)/M    p(FN) = X(M−z)/M
//! ```
//!
//! so precision is `X` (grows with word frequency) and recall is `z/M`
//! (shrinks with vocabulary size).

use alloc::format;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomBaselineParams {
    /// Vocabulary size.
    pub vocabulary: usize,
    /// Labels assigned per image.
    pub labels_per_image: usize,
    /// Fraction of images truly carrying the tracked word.
    pub true_fraction: f64,
}

impl RandomBaselineParams {
    pub fn new(vocabulary: usize, labels_per_image: usize, true_fraction: f64) -> Result<Self> {
        let p = RandomBaselineParams { vocabulary, labels_per_image, true_fraction };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocabulary == 0 {
            return Err(Error::Argument("vocabulary size must be positive".into()));
        }
        if self.labels_per_image == 0 || self.labels_per_image > self.vocabulary {
            return Err(Error::Argument(format!(
                "labels per image {} must lie in 1..={}",
                self.labels_per_image, self.vocabulary
            )));
        }
        if !(0.0..=1.0).contains(&self.true_fraction) {
            return Err(Error::Argument(format!("true fraction {} outside [0, 1]", self.true_fraction)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticProbabilities {
    /// Probability the word is assigned to an image.
    pub p_word: f64,
    pub p_tp: f64,
    pub p_fp: f64,
    pub p_fn: f64,
}

pub fn analytic_probabilities(p: &RandomBaselineParams) -> Result<AnalyticProbabilities> {
    p.validate()?;
    let m = p.vocabulary as f64;
    let z = p.labels_per_image as f64;
    let x = p.true_fraction;
    Ok(AnalyticProbabilities { p_word: z / m, p_tp: z * x / m, p_fp: z * (1.0 - x) / m, p_fn: x * (m - z) / m })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticPr {
    pub precision: f64,
    /// `None` when no image carries the word (`X = 0`).
    pub recall: Option<f64>,
}

pub fn analytic_pr(p: &RandomBaselineParams) -> Result<AnalyticPr> {
    let probs = analytic_probabilities(p)?;
    let precision = probs.p_tp / (probs.p_tp + probs.p_fp);
    let recall = if p.true_fraction > 0.0 { Some(probs.p_tp / (probs.p_tp + probs.p_fn)) } else { None };
    Ok(AnalyticPr { precision, recall })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmpiricalPr {
    pub precision: Estimate,
    /// `None` when `round(X · images)` is 0.
    pub recall: Option<Estimate>,
    /// Images truly carrying the word in every trial.
    pub positives: usize,
}

/// Monte-Carlo run of the random classifier for one tracked word.
///
/// Every trial draws a uniform `z`-subset of the vocabulary for each image;
/// the first `round(X · images)` images carry the tracked word. Trial `t`
/// uses ChaCha stream `t` of the master seed, so results do not depend on
/// how trials are scheduled.
pub fn simulate_random_classifier(
    p: &RandomBaselineParams,
    images: usize,
    trials: usize,
    seed: u64,
) -> Result<EmpiricalPr> {
    p.validate()?;
    if images == 0 || trials == 0 {
        return Err(Error::Argument("images and trials must be positive".into()));
    }
    let positives = (libm::round(p.true_fraction * images as f64) as usize).min(images);
    let tracked = 0usize;
    let mut precision = RunningMean::default();
    let mut recall = RunningMean::default();
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let (mut tp, mut fp) = (0u64, 0u64);
        for image in 0..images {
            let assigned =
                rand::seq::index::sample(&mut rng, p.vocabulary, p.labels_per_image).iter().any(|w| w == tracked);
            if assigned {
                if image < positives {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
        precision.push(if tp + fp > 0 { tp as f64 / (tp + fp) as f64 } else { 0.0 });
        if positives > 0 {
            recall.push(tp as f64 / positives as f64);
        }
    }
    Ok(EmpiricalPr { precision: precision.estimate(), recall: (positives > 0).then(|| recall.estimate()), positives })
}

/// Welford accumulator.
#[derive(Default)]
struct RunningMean {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningMean {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn estimate(&self) -> Estimate {
        let std_error = if self.n > 1 { libm::sqrt(self.m2 / (self.n - 1) as f64 / self.n as f64) } else { 0.0 };
        Estimate { mean: self.mean, std_error }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn always_assign_case() {
        let p = RandomBaselineParams::new(7, 7, 0.3).unwrap();
        let a = analytic_probabilities(&p).unwrap();
        assert_eq!(a.p_word, 1.0);
        assert_eq!(a.p_fn, 0.0);
        assert_eq!(analytic_pr(&p).unwrap().recall, Some(1.0));
    }

    #[test]
    fn iapr_sized_vocabulary() {
        let p = RandomBaselineParams::new(291, 5, 0.1).unwrap();
        let a = analytic_probabilities(&p).unwrap();
        assert!((a.p_tp - 0.5 / 291.0).abs() < 1e-15);
        assert!((a.p_tp - 0.001_718_2).abs() < 1e-7);
        let pr = analytic_pr(&p).unwrap();
        assert!((pr.recall.unwrap() - 5.0 / 291.0).abs() < 1e-15);
        assert!((pr.precision - 0.1).abs() < 1e-15);
    }

    #[test]
    fn zero_fraction_has_no_recall() {
        let p = RandomBaselineParams::new(10, 2, 0.0).unwrap();
        let a = analytic_probabilities(&p).unwrap();
        assert_eq!((a.p_tp, a.p_fn), (0.0, 0.0));
        let pr = analytic_pr(&p).unwrap();
        assert_eq!(pr.recall, None);
        assert_eq!(pr.precision, 0.0);
        let sim = simulate_random_classifier(&p, 100, 2, 1).unwrap();
        assert!(sim.recall.is_none());
    }

    #[test]
    fn invalid_params() {
        assert!(RandomBaselineParams::new(5, 6, 0.1).is_err());
        assert!(RandomBaselineParams::new(5, 0, 0.1).is_err());
        assert!(RandomBaselineParams::new(5, 2, 1.5).is_err());
        let p = RandomBaselineParams::new(5, 2, 0.5).unwrap();
        assert!(simulate_random_classifier(&p, 0, 1, 0).is_err());
    }

    #[test]
    fn simulation_is_seeded() {
        let p = RandomBaselineParams::new(20, 3, 0.25).unwrap();
        let a = simulate_random_classifier(&p, 500, 4, 9).unwrap();
        assert_eq!(a, simulate_random_classifier(&p, 500, 4, 9).unwrap());
        let all = RandomBaselineParams::new(6, 6, 1.0).unwrap();
        let s = simulate_random_classifier(&all, 50, 3, 0).unwrap();
        assert_eq!(s.precision, Estimate { mean: 1.0, std_error: 0.0 });
        assert_eq!(s.recall, Some(Estimate { mean: 1.0, std_error: 0.0 }));
    }
}
