use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cyberaggr::config::RunConfig;
use cyberaggr::pipeline::{self, Format, Options, Outcome};
use cyberaggr::report;
use cyberaggr::synth::{Signal, SynthConfig};
use cyberaggr::{CliError, Result};

#[derive(Parser)]
#[command(name = "cyberaggr", version, about = "Predict cyber-aggression levels from social-media activity")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for cross-validation splits and network training.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Both)]
    format: FormatArg,
    /// Override a configuration value, e.g. `--set eval.k=10`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Replace outputs built from different inputs.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignalArg {
    Behavior,
    Transformer,
    Both,
    None,
}

#[derive(Subcommand)]
enum Command {
    /// Read posts and profiles, apply the activity filter.
    Ingest,
    /// Score the survey and assign high/neutral/low labels.
    Label,
    /// Extract the configured feature blocks.
    Featurize,
    /// Fit every configured model on all labeled users.
    Train,
    /// Cross-validate every configured model and write the results table.
    Eval,
    /// Label users with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Feature file; defaults to the configured output's features.csv.
        #[arg(long)]
        features: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a seeded synthetic cohort with a ready-to-run config.json.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 320)]
        users: usize,
        #[arg(long, value_enum, default_value_t = SignalArg::Both)]
        signal: SignalArg,
    },
    /// Ingest, label, featurize and eval in one go.
    Run,
}

fn report_outcome(o: &Outcome) {
    match o {
        Outcome::Wrote(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Outcome::UpToDate(p) => println!("{} is up to date", p.display()),
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Validation("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let opts = Options {
        force: cli.force,
        format: match cli.format {
            FormatArg::Text => Format::Text,
            FormatArg::Json => Format::Json,
            FormatArg::Both => Format::Both,
        },
    };
    if let Command::Synth { out, users, signal } = &cli.command {
        let cfg = SynthConfig {
            users: *users,
            seed: cli.seed.unwrap_or(42),
            signal: match signal {
                SignalArg::Behavior => Signal::Behavior,
                SignalArg::Transformer => Signal::Transformer,
                SignalArg::Both => Signal::Both,
                SignalArg::None => Signal::None,
            },
            ..Default::default()
        };
        report_outcome(&pipeline::cmd_synth(out, &cfg, &opts)?);
        return Ok(());
    }
    let mut overrides = Vec::new();
    if let Some(seed) = cli.seed {
        for key in ["eval.seed", "models.nn.seed", "models.aug_head.seed"] {
            overrides.push(format!("{key}={seed}"));
        }
    }
    overrides.extend(cli.overrides.iter().cloned());
    let cfg = RunConfig::load(cli.config.as_deref(), &overrides)?;
    match &cli.command {
        Command::Ingest => report_outcome(&pipeline::cmd_ingest(&cfg, &opts)?),
        Command::Label => report_outcome(&pipeline::cmd_label(&cfg, &opts)?),
        Command::Featurize => report_outcome(&pipeline::cmd_featurize(&cfg, &opts)?),
        Command::Train => report_outcome(&pipeline::cmd_train(&cfg, &opts)?),
        Command::Eval | Command::Run => {
            let table = if matches!(cli.command, Command::Run) {
                pipeline::run_all_with(&cfg, &opts, report_outcome)?
            } else {
                let (outcome, table) = pipeline::cmd_eval(&cfg, &opts)?;
                report_outcome(&outcome);
                table
            };
            if let (Some(t), true) = (table, opts.format.text()) {
                print!("{}", report::render_text(&t));
            }
        }
        Command::Predict { model, features, out } => {
            report_outcome(&pipeline::cmd_predict(&cfg, &opts, model, features.as_deref(), out.as_deref())?)
        }
        Command::Synth { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
