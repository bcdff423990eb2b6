//! Subcommand implementations. Each reads its inputs from the configured
//! paths and the output directory and writes its artifacts there.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use log::{debug, info, warn};
use rayon::prelude::*;
use theme_annotate_core::baseline::{analytic_pr, simulate_random_classifier, RandomBaselineParams};
use theme_annotate_core::clustering::{cluster_themes, prune_themes, theme_stats, ThemeModel};
use theme_annotate_core::dataset::{make_bundle, split_train_test, DatasetBundle, Role};
use theme_annotate_core::eval::{confusion_counts, mean_metrics, precision_frequency_bins, MetricsReport, WordSets};
use theme_annotate_core::pipeline::{AnnotationResult, Annotator, Diagnostic};
use theme_annotate_core::synth::{generate, SynthConfig};
use theme_annotate_core::textproc::{build_vocabulary, tfidf_weights};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult, Context};
use crate::io;

pub const VOCAB: &str = "vocab.txt";
pub const TRAIN_IDS: &str = "train_ids.txt";
pub const TEST_IDS: &str = "test_ids.txt";
pub const THEMES: &str = "themes.tsv";
pub const THEME_STATS: &str = "theme_stats.txt";
pub const ANNOTATIONS: &str = "annotations.tsv";
pub const REPORT: &str = "report.txt";
pub const METRICS: &str = "metrics.tsv";
pub const BINS: &str = "bins.tsv";
pub const MANIFEST: &str = "run_manifest.txt";
pub const TRACE: &str = "trace.csv";

/// Echoes the resolved parameters of the current command.
pub fn write_manifest(cfg: &RunConfig, command: &str) -> CliResult<()> {
    let text = format!("# theme-annotate {} {command}\n{}", env!("CARGO_PKG_VERSION"), cfg.render());
    io::write_text(&cfg.out(MANIFEST), &text)
}

pub fn load_dataset(cfg: &RunConfig) -> CliResult<DatasetBundle> {
    let features_path = cfg.features_path()?;
    let labels_path = cfg.labels_path()?;
    let features = io::read_features(features_path)?;
    let labels = io::read_labels(labels_path)?;
    info!("loaded {} images of dimension {}", features.len(), features.dim());
    make_bundle(features, labels, Role::Train).context(format!(
        "{} and {} disagree",
        features_path.display(),
        labels_path.display()
    ))
}

fn select_ids(bundle: &DatasetBundle, ids: &[String], role: Role, source: &Path) -> CliResult<DatasetBundle> {
    let mut rows = Vec::with_capacity(ids.len());
    for id in ids {
        let row = bundle
            .features
            .position(id)
            .ok_or_else(|| CliError::format(source, 0, format!("id `{id}` is not in the dataset")))?;
        rows.push(row);
    }
    bundle.select(&rows, role).context(source.display().to_string())
}

/// Train and test bundles from the split manifests written by `prepare`.
pub fn load_split(cfg: &RunConfig, bundle: &DatasetBundle) -> CliResult<(DatasetBundle, DatasetBundle)> {
    let train_path = cfg.out(TRAIN_IDS);
    let test_path = cfg.out(TEST_IDS);
    let train_ids = io::parse_list(&io::read_text(&train_path)?);
    let test_ids = io::parse_list(&io::read_text(&test_path)?);
    if train_ids.is_empty() {
        return Err(CliError::format(&train_path, 0, "empty training split"));
    }
    let overlap: BTreeSet<&String> = train_ids.iter().collect::<BTreeSet<_>>();
    if let Some(id) = test_ids.iter().find(|id| overlap.contains(id)) {
        return Err(CliError::format(&test_path, 0, format!("id `{id}` is in both splits")));
    }
    Ok((
        select_ids(bundle, &train_ids, Role::Train, &train_path)?,
        select_ids(bundle, &test_ids, Role::Test, &test_path)?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareSummary {
    pub train: usize,
    pub test: usize,
    pub vocabulary: usize,
}

pub fn prepare(cfg: &RunConfig) -> CliResult<PrepareSummary> {
    let bundle = load_dataset(cfg)?;
    let (train, test) = split_train_test(&bundle, cfg.test_fraction, cfg.seed).context("split")?;
    let vocab = build_vocabulary(&train.labels, cfg.min_images, cfg.max_size).context("vocabulary")?;
    io::write_text(&cfg.out(VOCAB), &io::render_list(vocab.words()))?;
    io::write_text(&cfg.out(TRAIN_IDS), &io::render_list(train.ids()))?;
    io::write_text(&cfg.out(TEST_IDS), &io::render_list(test.ids()))?;
    write_manifest(cfg, "prepare")?;
    let summary = PrepareSummary { train: train.len(), test: test.len(), vocabulary: vocab.len() };
    info!("split {} train / {} test, vocabulary {}", summary.train, summary.test, summary.vocabulary);
    Ok(summary)
}

pub fn cluster(cfg: &RunConfig) -> CliResult<ThemeModel> {
    let bundle = load_dataset(cfg)?;
    let (train, _) = load_split(cfg, &bundle)?;
    let vocab = io::read_vocabulary(&cfg.out(VOCAB))?;
    let tfidf = tfidf_weights(&train.labels, &vocab);
    let raw = cluster_themes(&tfidf, cfg.cutoff, cfg.linkage).context("clustering")?;
    let model = prune_themes(&raw, cfg.coverage).context("pruning")?;
    info!("{} clusters, {} themes after pruning to coverage {}", raw.len(), model.len(), cfg.coverage);
    io::write_text(&cfg.out(THEMES), &io::render_themes(&model))?;
    io::write_text(&cfg.out(THEME_STATS), &render_stats(&raw, &model))?;
    write_manifest(cfg, "cluster")?;
    Ok(model)
}

fn render_stats(raw: &ThemeModel, pruned: &ThemeModel) -> String {
    let stats = theme_stats(pruned);
    let mut out = String::new();
    writeln!(out, "clusters before pruning  {}", raw.len()).unwrap();
    writeln!(out, "themes                   {}", stats.themes).unwrap();
    writeln!(out, "images in themes         {}", stats.retained).unwrap();
    writeln!(out, "images dropped           {}", stats.dropped).unwrap();
    writeln!(out, "retained fraction        {:.6}", stats.retained_fraction).unwrap();
    writeln!(out, "size\tthemes").unwrap();
    for (size, count) in &stats.size_histogram {
        writeln!(out, "{size}\t{count}").unwrap();
    }
    out
}

#[derive(Debug, Clone, Default)]
pub struct AnnotateOptions {
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    /// Test image whose layer-1 objective trace is written to `trace.csv`.
    pub trace_image: Option<String>,
}

pub fn annotate(cfg: &RunConfig, opts: &AnnotateOptions) -> CliResult<Vec<AnnotationResult>> {
    let bundle = load_dataset(cfg)?;
    let (train, test) = load_split(cfg, &bundle)?;
    let vocab = io::read_vocabulary(&cfg.out(VOCAB))?;
    let themes = io::read_themes(&cfg.out(THEMES))?;
    let annotator = Annotator::new(&train, &themes, &vocab, cfg.pipeline()).context("annotator")?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {} worker threads: {e}", opts.jobs)))?;
    let results: Vec<AnnotationResult> = pool
        .install(|| {
            test.features
                .rows()
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|(id, row)| annotator.annotate(row, id))
                .collect::<Result<_, _>>()
        })
        .context("annotation")?;

    let mut fallbacks = 0;
    for r in &results {
        for d in &r.diagnostics {
            match d {
                Diagnostic::NotConverged { .. } => debug!("{}: {d}", r.image_id),
                _ => {
                    fallbacks += 1;
                    warn!("{}: {d}", r.image_id);
                }
            }
        }
    }
    info!("annotated {} images ({} fallbacks)", results.len(), fallbacks);
    io::write_text(&cfg.out(ANNOTATIONS), &io::render_annotations(&results))?;

    if let Some(id) = &opts.trace_image {
        let feature = test
            .features
            .row_by_id(id)
            .ok_or_else(|| CliError::Usage(format!("trace image `{id}` is not in the test split")))?;
        let mut traced = cfg.pipeline();
        traced.solver.record_trace = true;
        let sel = Annotator::new(&train, &themes, &vocab, traced)
            .context("annotator")?
            .select_themes(feature)
            .context("trace")?;
        let mut csv = String::from("iteration,objective\n");
        for (i, v) in sel.layer1.trace.iter().enumerate() {
            writeln!(csv, "{},{v:.12e}", i + 1).unwrap();
        }
        io::write_text(&cfg.out(TRACE), &csv)?;
    }
    write_manifest(cfg, "annotate")?;
    Ok(results)
}

pub fn evaluate(cfg: &RunConfig) -> CliResult<MetricsReport> {
    let bundle = load_dataset(cfg)?;
    let (train, test) = load_split(cfg, &bundle)?;
    let vocab = io::read_vocabulary(&cfg.out(VOCAB))?;
    let predictions = io::read_annotations(&cfg.out(ANNOTATIONS))?;
    let truth = word_sets(&test);
    let table = confusion_counts(&predictions, &truth, &vocab)
        .context(format!("{} against the test split", cfg.out(ANNOTATIONS).display()))?
        .with_train_frequencies(&train.labels);
    let report = mean_metrics(&table).context("metrics")?;
    let bins = precision_frequency_bins(&table, cfg.bin_size).context("frequency bins")?;
    io::write_text(&cfg.out(REPORT), &io::render_report(&report, test.len(), cfg.bin_size))?;
    io::write_text(&cfg.out(METRICS), &io::render_metrics(&table))?;
    io::write_text(&cfg.out(BINS), &io::render_bins(&bins))?;
    write_manifest(cfg, "evaluate")?;
    Ok(report)
}

/// Ground-truth word sets of a bundle.
pub fn word_sets(bundle: &DatasetBundle) -> WordSets {
    bundle
        .ids()
        .iter()
        .map(|id| (id.clone(), bundle.labels.word_set(id).into_iter().map(String::from).collect()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineArgs {
    pub vocabulary: usize,
    pub labels_per_image: usize,
    pub true_fraction: f64,
    pub images: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Analytic versus simulated precision and recall of the random classifier.
pub fn baseline(args: &BaselineArgs) -> CliResult<String> {
    let params = RandomBaselineParams::new(args.vocabulary, args.labels_per_image, args.true_fraction)
        .context("baseline parameters")?;
    let analytic = analytic_pr(&params).context("analytic")?;
    let sim = simulate_random_classifier(&params, args.images, args.trials, args.seed).context("simulation")?;
    let mut out = String::new();
    writeln!(
        out,
        "M={} z={} X={} images={} trials={} seed={} positives={}",
        args.vocabulary, args.labels_per_image, args.true_fraction, args.images, args.trials, args.seed, sim.positives
    )
    .unwrap();
    writeln!(out, "quantity\tanalytic\tempirical\tstd_error").unwrap();
    writeln!(out, "precision\t{:.6}\t{:.6}\t{:.6}", analytic.precision, sim.precision.mean, sim.precision.std_error)
        .unwrap();
    match (analytic.recall, sim.recall) {
        (Some(a), Some(e)) => writeln!(out, "recall\t{a:.6}\t{:.6}\t{:.6}", e.mean, e.std_error).unwrap(),
        (a, _) => writeln!(out, "recall\t{}\tn/a\tn/a", a.map_or_else(|| "n/a".into(), |a| format!("{a:.6}"))).unwrap(),
    }
    Ok(out)
}

pub const SYNTH_FEATURES: &str = "features.tsv";
pub const SYNTH_LABELS: &str = "labels.tsv";
pub const SYNTH_PLANTED: &str = "planted.tsv";

/// Writes `features.tsv`, `labels.tsv` and `planted.tsv` (id, theme) to `dir`.
pub fn synth(cfg: &SynthConfig, dir: &Path) -> CliResult<()> {
    let ds = generate(cfg).context("synth")?;
    io::write_text(&dir.join(SYNTH_FEATURES), &io::render_features(&ds.features))?;
    io::write_text(&dir.join(SYNTH_LABELS), &io::render_labels(&ds.labels))?;
    let planted: String = ds.features.ids().iter().zip(&ds.themes).map(|(id, k)| format!("{id}\t{k}\n")).collect();
    io::write_text(&dir.join(SYNTH_PLANTED), &planted)?;
    info!("wrote {} images in {} themes to {}", ds.features.len(), cfg.themes, dir.display());
    Ok(())
}
