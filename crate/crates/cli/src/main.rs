use clap::{Parser, Subcommand};
use footcast::commands;
use footcast::config::ExperimentConfig;
use footcast_core::planner::Formulation;

#[derive(Parser)]
#[command(name = "footcast", about = "foothold prediction and planning experiments")]
struct Cli {
    /// experiment configuration file (INI); defaults used when omitted
    #[arg(long, global = true)]
    config: Option<String>,
    /// output directory, overrides the configured one
    #[arg(long, global = true)]
    out: Option<String>,
    /// experiment seed, overrides the configured one
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// collect the training dataset and evaluation rollouts
    Collect,
    /// train the full model and the terrain-only ablation
    Train,
    /// detect out-of-distribution segments and tabulate region errors
    EvalOod,
    /// correlate predicted uncertainty with realized foothold error
    EvalCorr,
    /// run the planner comparison across cost formulations
    Plan {
        /// restrict to one formulation
        #[arg(long)]
        formulation: Option<String>,
    },
    /// render figures from previously written outputs
    Report,
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let mut cfg = match &cli.config {
        Some(path) => footcast::config::load_config(std::path::Path::new(path))?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    cfg.validate()?;
    match &cli.command {
        Command::Collect => commands::cmd_collect(&cfg),
        Command::Train => commands::cmd_train(&cfg),
        Command::EvalOod => commands::cmd_eval_ood(&cfg),
        Command::EvalCorr => commands::cmd_eval_corr(&cfg),
        Command::Plan { formulation } => {
            let only = match formulation {
                Some(name) => Some(Formulation::parse(name).map_err(|e| anyhow::anyhow!("{e}"))?),
                None => None,
            };
            commands::cmd_plan(&cfg, only)
        }
        Command::Report => commands::cmd_report(&cfg),
    }
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
