//! `cw`: run the check-worthiness pipeline stage by stage.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use cw_core::pipeline::{self, PipelineConfig};
use cw_core::Error;

#[derive(Parser)]
#[command(name = "cw", version, about = "Check-worthiness estimation with triple-enriched sentence embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Override a configuration leaf, e.g. `--set train.epochs=3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract, refine and store triples for every split.
    Extract(Common),
    /// Build and cache embedding bundles.
    Featurize(Common),
    /// Train the fused model and the LM-only ablation.
    Train(Common),
    /// Score both models and write the comparison report.
    Eval(Common),
    /// Label the test split and write the submission file.
    Predict(Common),
    /// Rank one sentence's triples by integrated-gradients attribution.
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sentence_id: String,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::MissingPath(_) | Error::Config(_) => 2,
        Error::Integrity(_) | Error::Dimension(_) | Error::ModelFormat(_) => 3,
        Error::MissingModel(_) => 4,
        Error::UnknownSentence(_) => 5,
        _ => 1,
    }
}

fn run(cli: Cli) -> cw_core::Result<String> {
    let load = |c: &Common| PipelineConfig::load(&c.config, &c.overrides);
    match cli.command {
        Command::Extract(c) => pipeline::cmd_extract(&load(&c)?),
        Command::Featurize(c) => pipeline::cmd_featurize(&load(&c)?),
        Command::Train(c) => pipeline::cmd_train(&load(&c)?),
        Command::Eval(c) => {
            let report = pipeline::cmd_eval(&load(&c)?)?;
            Ok(report.render_text() + "\n" + &report.render_final())
        }
        Command::Predict(c) => pipeline::cmd_predict(&load(&c)?),
        Command::Explain { common, sentence_id } => {
            Ok(pipeline::cmd_explain(&load(&common)?, &sentence_id)?.render())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("cw: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
