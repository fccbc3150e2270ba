//! `bihet`: command-line pipeline over the embedding engine.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use config::Config;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "bihet", version, about = "Heterogeneous graph embeddings for user-tweet interaction data")]
struct Cli {
    /// Log progress (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
struct Common {
    /// `key = value` file; flags take precedence over it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default 1).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct EncoderOpts {
    #[arg(long)]
    text_dim: Option<usize>,
    #[arg(long)]
    image_dim: Option<usize>,
    #[arg(long)]
    hash_seed: Option<u64>,
}

#[derive(Debug, Args)]
struct WalkOpts {
    #[arg(long)]
    walk_length: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    walks_per_node: Option<usize>,
    /// Restart probability.
    #[arg(long)]
    restart: Option<f64>,
    #[arg(long)]
    topk_user: Option<usize>,
    #[arg(long)]
    topk_tweet: Option<usize>,
}

#[derive(Debug, Args)]
struct ModelOpts {
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    leaky_slope: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Negatives per positive pair.
    #[arg(long)]
    negatives: Option<usize>,
    /// Pairs drawn per epoch, or `all`.
    #[arg(long)]
    triples_per_epoch: Option<String>,
    /// standard | paper-literal
    #[arg(long)]
    loss_sign: Option<String>,
}

#[derive(Debug, Args)]
struct GcnOpts {
    #[arg(long)]
    gcn_feature_dim: Option<usize>,
    #[arg(long)]
    gcn_hidden: Option<usize>,
    #[arg(long)]
    gcn_steps: Option<usize>,
    #[arg(long)]
    gcn_batch_size: Option<usize>,
    #[arg(long)]
    gcn_learning_rate: Option<f64>,
    #[arg(long)]
    gcn_temperature: Option<f64>,
}

#[derive(Debug, Args)]
struct EvalOpts {
    /// logreg | rf
    #[arg(long)]
    model: Option<String>,
    /// Cross-validation folds.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    n_trees: Option<usize>,
    /// Depth limit, or `none`.
    #[arg(long)]
    max_depth: Option<String>,
    /// sqrt | all
    #[arg(long)]
    max_features: Option<String>,
}

#[derive(Debug, Args)]
struct AnalyzeOpts {
    #[arg(long)]
    k_min: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    top_words: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a polarized synthetic dataset.
    Synth {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        encoder: EncoderOpts,
        /// small | medium
        #[arg(long)]
        profile: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Validate a dataset directory and write its canonical graph.
    Ingest {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        encoder: EncoderOpts,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Random walks with restart and typed neighbour sets.
    Sample {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        encoder: EncoderOpts,
        #[command(flatten)]
        walk: WalkOpts,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the encoder and export node embeddings.
    Train {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        encoder: EncoderOpts,
        #[command(flatten)]
        walk: WalkOpts,
        #[command(flatten)]
        model: ModelOpts,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Embed every node with a saved checkpoint.
    Embed {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        encoder: EncoderOpts,
        #[command(flatten)]
        walk: WalkOpts,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate a comparison method.
    Baseline {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        encoder: EncoderOpts,
        #[command(flatten)]
        walk: WalkOpts,
        #[command(flatten)]
        gcn: GcnOpts,
        #[command(flatten)]
        eval: EvalOpts,
        /// userinfo | textual | visual | tv | utv | latefusion | gcn
        #[arg(long)]
        variant: String,
        /// Embedding dimension of the GCN.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-validate a classifier on user embeddings.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eval: EvalOpts,
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cluster user embeddings and characterise the clusters.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        encoder: EncoderOpts,
        #[command(flatten)]
        analyze: AnalyzeOpts,
        #[arg(long)]
        embeddings: PathBuf,
        /// Dataset directory.
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic and finite-difference gradients on a small model.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// `(key, value)` pairs for the flags that were given.
trait Flags {
    fn flags(&self, out: &mut Vec<(&'static str, String)>);
}

macro_rules! flags {
    ($ty:ty { $($field:ident),* }) => {
        impl Flags for $ty {
            fn flags(&self, out: &mut Vec<(&'static str, String)>) {
                $(if let Some(v) = &self.$field {
                    out.push((stringify!($field), v.to_string()));
                })*
            }
        }
    };
}

flags!(Common { seed, threads });
flags!(EncoderOpts { text_dim, image_dim, hash_seed });
flags!(WalkOpts { walk_length, window, walks_per_node, restart, topk_user, topk_tweet });
flags!(ModelOpts { dim, leaky_slope, epochs, batch_size, learning_rate, negatives, triples_per_epoch, loss_sign });
flags!(GcnOpts { gcn_feature_dim, gcn_hidden, gcn_steps, gcn_batch_size, gcn_learning_rate, gcn_temperature });
flags!(EvalOpts { model, k, c, max_iter, tol, n_trees, max_depth, max_features });
flags!(AnalyzeOpts { k_min, k_max, top_words });

fn resolve(common: &Common, groups: &[&dyn Flags], extra: Vec<(&'static str, String)>) -> Result<Config, CliError> {
    let mut pairs = Vec::new();
    common.flags(&mut pairs);
    for g in groups {
        g.flags(&mut pairs);
    }
    pairs.extend(extra);
    Config::resolve(common.config.as_deref(), pairs)
}

fn init_threads(config: &Config) -> Result<(), CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    use commands as c;
    match command {
        Command::Synth {
            common,
            encoder,
            profile,
            out,
        } => {
            let extra = profile.map(|p| ("profile", p)).into_iter().collect();
            let cfg = resolve(&common, &[&encoder], extra)?;
            init_threads(&cfg)?;
            c::synth(&cfg, &out)
        }
        Command::Ingest {
            common,
            encoder,
            data,
            labels,
            out,
        } => {
            let cfg = resolve(&common, &[&encoder], Vec::new())?;
            init_threads(&cfg)?;
            c::ingest(&cfg, &data, labels.as_deref(), &out)
        }
        Command::Sample {
            common,
            encoder,
            walk,
            data,
            out,
        } => {
            let cfg = resolve(&common, &[&encoder, &walk], Vec::new())?;
            init_threads(&cfg)?;
            c::sample(&cfg, &data, &out)
        }
        Command::Train {
            common,
            encoder,
            walk,
            model,
            data,
            out,
        } => {
            let cfg = resolve(&common, &[&encoder, &walk, &model], Vec::new())?;
            init_threads(&cfg)?;
            c::train(&cfg, &data, &out)
        }
        Command::Embed {
            common,
            encoder,
            walk,
            data,
            checkpoint,
            out,
        } => {
            let cfg = resolve(&common, &[&encoder, &walk], Vec::new())?;
            init_threads(&cfg)?;
            c::embed(cfg, &data, &checkpoint, &out)
        }
        Command::Baseline {
            common,
            encoder,
            walk,
            gcn,
            eval,
            variant,
            dim,
            data,
            labels,
            out,
        } => {
            let extra = dim.map(|d| ("dim", d.to_string())).into_iter().collect();
            let cfg = resolve(&common, &[&encoder, &walk, &gcn, &eval], extra)?;
            let variant = variant.parse().map_err(|e: bihet::Error| CliError::Usage(e.to_string()))?;
            init_threads(&cfg)?;
            c::baseline(&cfg, variant, &data, labels.as_deref(), &out)
        }
        Command::Evaluate {
            common,
            eval,
            embeddings,
            labels,
            out,
        } => {
            let cfg = resolve(&common, &[&eval], Vec::new())?;
            init_threads(&cfg)?;
            c::evaluate(&cfg, &embeddings, &labels, out.as_deref())
        }
        Command::Analyze {
            common,
            encoder,
            analyze,
            embeddings,
            graph,
            labels,
            out,
        } => {
            let cfg = resolve(&common, &[&encoder, &analyze], Vec::new())?;
            init_threads(&cfg)?;
            c::analyze(&cfg, &embeddings, &graph, labels.as_deref(), &out)
        }
        Command::Gradcheck { common, out } => {
            let cfg = resolve(&common, &[], Vec::new())?;
            init_threads(&cfg)?;
            c::gradcheck(&cfg, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    let parsed = Cli::command()
        .after_long_help(config::keys_help())
        .try_get_matches()
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
