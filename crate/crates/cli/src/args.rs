//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use csgm_core::{Criterion, Encoding};

use crate::commands::{self, Split, MODEL_FILE};
use crate::config::{ComponentRange, DatasetName, Overrides, PipelineConfig};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "csgm", version, about = "Credit scoring with Gaussian mixture models")]
pub struct Cli {
    /// Log progress (repeat for more detail). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Encode, split and standardize a dataset; write the CSVs and a summary.
    Prepare(Common),
    /// Fit every candidate component count and report AIC/BIC.
    Select(Common),
    /// Fit the classifier and write the model and fit report.
    Train(Common),
    /// Score a stored model on one split.
    Evaluate(ModelArgs),
    /// Write the ROC curve of a stored model on one split.
    Roc(ModelArgs),
    /// Compare against the logistic baseline and published numbers.
    Benchmark(Common),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Aic,
    Bic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum EncodingArg {
    Dummy,
    Integer,
}

#[derive(Clone, Debug, Args)]
pub struct Common {
    /// Bundled dataset, or `custom` together with --config.
    #[arg(long, value_enum)]
    pub dataset: Option<DatasetName>,
    /// Config file; overrides the bundled one for --dataset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding the bundled `<name>/dataset.toml` files.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Seed shared by every random step; required here or in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Balance the training classes by oversampling.
    #[arg(long, value_enum)]
    pub smote: Option<Toggle>,
    /// Information criterion used to pick the component count.
    #[arg(long, value_enum)]
    pub criterion: Option<CriterionArg>,
    /// Candidate component counts, MIN:MAX.
    #[arg(long, value_name = "MIN:MAX")]
    pub range: Option<ComponentRange>,
    /// Decision boundary D in [0, 1].
    #[arg(long, value_name = "D")]
    pub boundary: Option<f64>,
    /// Categorical encoding.
    #[arg(long, value_enum)]
    pub encoding: Option<EncodingArg>,
    /// Skip z-scoring the features.
    #[arg(long)]
    pub no_standardize: bool,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct ModelArgs {
    #[command(flatten)]
    pub common: Common,
    /// Stored model; defaults to `model.json` in the output directory.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    pub split: Split,
}

impl Common {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            dataset: self.dataset,
            config: self.config.clone(),
            data_dir: self.data_dir.clone(),
            seed: self.seed,
            smote: self.smote.map(|t| t == Toggle::On),
            criterion: self.criterion.map(|c| match c {
                CriterionArg::Aic => Criterion::Aic,
                CriterionArg::Bic => Criterion::Bic,
            }),
            range: self.range,
            boundary: self.boundary,
            encoding: self.encoding.map(|e| match e {
                EncodingArg::Dummy => Encoding::Dummy,
                EncodingArg::Integer => Encoding::Integer,
            }),
            no_standardize: self.no_standardize,
            out: self.out.clone(),
        }
    }
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let resolve = |c: &Common| PipelineConfig::resolve(&c.overrides());
    match &cli.command {
        Command::Prepare(c) => commands::cmd_prepare(&resolve(c)?).map(drop),
        Command::Select(c) => commands::cmd_select(&resolve(c)?).map(drop),
        Command::Train(c) => commands::cmd_train(&resolve(c)?).map(drop),
        Command::Benchmark(c) => commands::cmd_benchmark(&resolve(c)?).map(drop),
        Command::Evaluate(m) => {
            let cfg = resolve(&m.common)?;
            let model = model_path(m, &cfg);
            commands::cmd_evaluate(&cfg, &model, m.split, m.common.boundary).map(drop)
        }
        Command::Roc(m) => {
            let cfg = resolve(&m.common)?;
            let model = model_path(m, &cfg);
            commands::cmd_roc(&cfg, &model, m.split).map(drop)
        }
    }
}

fn model_path(m: &ModelArgs, cfg: &PipelineConfig) -> PathBuf {
    m.model.clone().unwrap_or_else(|| cfg.out_dir.join(MODEL_FILE))
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let code = e.exit_code();
            if let CliError::Usage(_) = e {
                eprintln!("run `csgm --help` for usage");
            }
            code
        }
    }
}
