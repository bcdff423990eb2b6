use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use theme_annotate::commands::{self, AnnotateOptions, BaselineArgs};
use theme_annotate::{CliError, CliResult, RunConfig};
use theme_annotate_core::synth::SynthConfig;

/// Theme-based coarse-to-fine image annotation.
///
/// Typical run: `prepare`, `cluster`, `annotate`, `evaluate`, all sharing
/// one config file and output directory.
#[derive(Parser)]
#[command(name = "theme-annotate", version)]
struct Cli {
    /// Flat `key = value` config file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set cutoff=0.3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Shorthand for `--set features=PATH`.
    #[arg(long, global = true)]
    features: Option<PathBuf>,
    /// Shorthand for `--set labels=PATH`.
    #[arg(long, global = true)]
    labels: Option<PathBuf>,
    /// Shorthand for `--set out_dir=DIR`.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split the dataset and build the vocabulary.
    Prepare,
    /// Cluster training descriptions into themes.
    Cluster,
    /// Annotate the test split.
    Annotate {
        /// Worker threads (0 = all cores). Output does not depend on it.
        #[arg(long, short, default_value_t = 0)]
        jobs: usize,
        /// Also write the layer-1 objective trace of this test image.
        #[arg(long, value_name = "IMAGE_ID")]
        trace: Option<String>,
    },
    /// Score annotations against the test labels.
    Evaluate,
    /// Random-classifier precision and recall, analytic and simulated.
    Baseline(BaselineCmd),
    /// Generate a planted-theme synthetic dataset into the output directory.
    Synth(SynthCmd),
}

#[derive(Args)]
struct BaselineCmd {
    /// Vocabulary size M.
    #[arg(long = "vocabulary", short = 'm')]
    vocabulary: usize,
    /// Labels per image z.
    #[arg(long = "labels-per-image", short = 'z')]
    labels_per_image: usize,
    /// Fraction X of images truly carrying the word.
    #[arg(long = "true-fraction", short = 'x')]
    true_fraction: f64,
    #[arg(long, default_value_t = 10_000)]
    images: usize,
    #[arg(long, default_value_t = 30)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SynthCmd {
    #[arg(long, default_value_t = 8)]
    themes: usize,
    #[arg(long, default_value_t = 40)]
    images_per_theme: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    /// Standard deviation of the feature noise.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long, default_value_t = 3)]
    distinctive_words: usize,
    #[arg(long, default_value_t = 5)]
    common_words: usize,
    #[arg(long, default_value_t = 2)]
    common_per_theme: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn resolve_config(cli: &Cli) -> CliResult<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    for assignment in &cli.overrides {
        cfg.apply_override(assignment)?;
    }
    if let Some(p) = &cli.features {
        cfg.features = Some(p.clone());
    }
    if let Some(p) = &cli.labels {
        cfg.labels = Some(p.clone());
    }
    if let Some(p) = &cli.out_dir {
        cfg.out_dir = p.clone();
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    let cfg = resolve_config(&cli)?;
    match cli.command {
        Command::Prepare => {
            let s = commands::prepare(&cfg)?;
            println!("train {}  test {}  vocabulary {}", s.train, s.test, s.vocabulary);
        }
        Command::Cluster => {
            let model = commands::cluster(&cfg)?;
            println!(
                "themes {}  retained {}/{} ({:.6})",
                model.len(),
                model.retained_images(),
                model.total_images(),
                model.retained_fraction()
            );
        }
        Command::Annotate { jobs, trace } => {
            let results = commands::annotate(&cfg, &AnnotateOptions { jobs, trace_image: trace })?;
            println!("annotated {} images", results.len());
        }
        Command::Evaluate => {
            let m = commands::evaluate(&cfg)?;
            let (p, r, f) = m.percent();
            println!(
                "P {:.6}  R {:.6}  F {:.6}  N+ {}  ({p}/{r}/{f})",
                m.mean_precision, m.mean_recall, m.mean_f, m.n_plus
            );
        }
        Command::Baseline(b) => {
            let args = BaselineArgs {
                vocabulary: b.vocabulary,
                labels_per_image: b.labels_per_image,
                true_fraction: b.true_fraction,
                images: b.images,
                trials: b.trials,
                seed: b.seed,
            };
            print!("{}", commands::baseline(&args)?);
        }
        Command::Synth(s) => {
            let synth = SynthConfig {
                themes: s.themes,
                images_per_theme: s.images_per_theme,
                dim: s.dim,
                noise: s.noise,
                distinctive_words: s.distinctive_words,
                common_words: s.common_words,
                common_per_theme: s.common_per_theme,
                seed: s.seed,
            };
            commands::synth(&synth, &cfg.out_dir)?;
        }
    }
    Ok(())
}

fn init_logging() -> Result<(), CliError> {
    let level = std::env::var("THEME_ANNOTATE_LOG").unwrap_or_else(|_| "info".into());
    let filter = match level.as_str() {
        "error" | "info" | "debug" => level,
        other => {
            return Err(CliError::Usage(format!("THEME_ANNOTATE_LOG must be error, info or debug, not `{other}`")))
        }
    };
    env_logger::Builder::new().parse_filters(&filter).format_timestamp(None).init();
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = init_logging().and_then(|()| run(cli));
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
