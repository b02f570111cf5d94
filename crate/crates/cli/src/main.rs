//! `bhlr`: generate planted networks, train similarity models, score tuples.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use bhlr::synth::{LiftMode, Noise};
use bhlr::{IndexPolicy, LinkFunction};
use clap::{Parser, Subcommand, ValueEnum};

use commands::{EvalArgs, GenerateArgs};
use config::{Metric, NetworkFiles, RunConfig};
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "bhlr", version, about = "Bregman hyperlink regression")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Bernoulli,
    Poisson,
    Gaussian,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw vectors and noisy hyperlink weights from a random planted model.
    Generate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        arity: usize,
        #[arg(long, default_value_t = 4)]
        p: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Hidden width; the planted model is linear without it.
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long, default_value = "sigmoid")]
        link: LinkFunction,
        #[arg(long, value_enum, default_value = "bernoulli")]
        noise: NoiseArg,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Standard normal vectors instead of uniform on [-1, 1].
        #[arg(long)]
        gaussian_vectors: bool,
        #[arg(long, default_value = "distinct-entries")]
        policy: IndexPolicy,
        /// Multiplies the planted parameters to sharpen the signal.
        #[arg(long, default_value_t = 1.0)]
        theta_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Use this checkpoint as the true model instead of a random one.
        #[arg(long)]
        planted: Option<PathBuf>,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        edges: PathBuf,
        /// Also save the planted model as a checkpoint.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Turn a binary pairwise network into triples that are connected or triangles.
    Lift {
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        edges: PathBuf,
        #[arg(long, default_value = "fully-connected")]
        mode: LiftMode,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a model from a JSON run config.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one config key, e.g. `--set optimizer.iterations=500`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Score each tuple of a file, one line per tuple.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        tuples: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report MSE or ROC-AUC of a model on a network as JSON.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        vectors: PathBuf,
        #[arg(long)]
        edges: Option<PathBuf>,
        #[arg(long, default_value = "distinct-entries")]
        policy: IndexPolicy,
        #[arg(long, default_value = "roc-auc")]
        metric: Metric,
        #[arg(long, default_value_t = 10)]
        per_anchor: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check analytic gradients and sampler expectations on small random instances.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol_unbiased: f64,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.cmd {
        Cmd::Generate {
            n,
            arity,
            p,
            k,
            hidden,
            link,
            noise,
            sigma,
            gaussian_vectors,
            policy,
            theta_scale,
            seed,
            planted,
            vectors,
            edges,
            model,
        } => {
            let noise = match noise {
                NoiseArg::Bernoulli => Noise::Bernoulli,
                NoiseArg::Poisson => Noise::Poisson,
                NoiseArg::Gaussian => Noise::Gaussian { sigma },
            };
            commands::cmd_generate(&GenerateArgs {
                n,
                arity,
                p,
                k,
                hidden,
                link,
                noise,
                gaussian_vectors,
                policy,
                theta_scale,
                seed,
                planted,
                vectors,
                edges,
                model,
            })
        }
        Cmd::Lift { vectors, edges, mode, out } => commands::cmd_lift(&NetworkFiles { vectors, edges: Some(edges) }, mode, &out),
        Cmd::Train { config, overrides } => {
            let cfg = RunConfig::load(config.as_deref(), &overrides)?;
            commands::cmd_train(&cfg)
        }
        Cmd::Predict { model, vectors, tuples, out } => commands::cmd_predict(&model, &vectors, &tuples, out.as_deref()),
        Cmd::Eval { model, vectors, edges, policy, metric, per_anchor, seed, out } => commands::cmd_eval(EvalArgs {
            model: &model,
            files: NetworkFiles { vectors, edges },
            policy,
            metric,
            per_anchor,
            seed,
            out: out.as_deref(),
        }),
        Cmd::Gradcheck { seed, tol, tol_unbiased } => {
            if commands::cmd_gradcheck(seed, tol, tol_unbiased)? {
                Ok(())
            } else {
                Err(CliError::numeric("gradient checks failed"))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
