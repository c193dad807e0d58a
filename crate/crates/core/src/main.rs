use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use miai::experiment::{self, ExperimentConfig, RunOptions};
use miai::{Error, Result};

#[derive(Parser)]
#[command(name = "miai", version, about = "Black-box model inversion attribute inference experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the target, run the attacks and write the reports
    Run(Common),
    /// Train the target model and save it to the output directory
    TrainTarget(Common),
    /// Run the configured attacks against the saved target
    Attack(Common),
    /// Score saved attack results and write metrics.json and report.txt
    Report(Common),
    /// Print a summary of a saved target model
    InspectModel {
        /// Saved model; defaults to model.json in the config's output directory
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Hide confidence scores from every attack
    #[arg(long)]
    label_only: bool,
    /// Worker threads for per-record attack work
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            out: self.out.clone(),
            label_only: self.label_only,
        }
    }

    fn execute(&self, stage: fn(&ExperimentConfig, &RunOptions) -> Result<PathBuf>) -> Result<PathBuf> {
        let options = self.options();
        let config = experiment::load_config(&self.config, &options)?;
        let mut pool = rayon::ThreadPoolBuilder::new();
        if let Some(jobs) = self.jobs {
            if jobs == 0 {
                return Err(Error::InvalidArgument("--jobs must be at least 1".into()));
            }
            pool = pool.num_threads(jobs);
        }
        let pool = pool
            .build()
            .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
        pool.install(|| stage(&config, &options))
    }
}

fn dispatch(command: Command) -> Result<()> {
    let written = match command {
        Command::Run(c) => c.execute(experiment::run)?,
        Command::TrainTarget(c) => c.execute(experiment::train_target)?,
        Command::Attack(c) => c.execute(experiment::attack)?,
        Command::Report(c) => c.execute(experiment::report)?,
        Command::InspectModel { model, config, out } => {
            let path = match (model, config) {
                (Some(m), _) => m,
                (None, Some(c)) => {
                    let config = ExperimentConfig::from_file(&c)?;
                    match &config.target.saved {
                        Some(saved) => config.resolve(saved),
                        None => out.unwrap_or_else(|| config.output_dir()).join("model.json"),
                    }
                }
                (None, None) => return Err(Error::InvalidArgument("give --model or --config".into())),
            };
            print!("{}", experiment::inspect_model(path)?);
            return Ok(());
        }
    };
    println!("wrote {}", written.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
