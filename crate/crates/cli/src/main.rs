use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use skorokhod_cli::{run, Command, ExperimentConfig, Format, Overrides};

#[derive(Parser)]
#[command(
    name = "skorokhod",
    version,
    about = "Skorokhod embeddings of two-sided Markov chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide whether the target can be embedded without extra randomness.
    Check(Common),
    /// Stopping times of independent replicas, or of a trajectory fixture.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Trajectory fixture: one label per line, origin prefixed by `>`.
        #[arg(long)]
        path: Option<PathBuf>,
    },
    /// Chi-square tests of the law of the path seen from the stopping time.
    Verify(Common),
    /// Survival curve and log-log tail slope of the stopping time.
    Tail(Common),
    /// Running means of fractional moments.
    Moment(Common),
    /// Concave-cost comparison of the optimal time against alternatives.
    Compare(Common),
    /// First-passage oracle for a skip-free walk.
    Oracle(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML or JSON)
    #[arg(long)]
    config: PathBuf,
    /// Master seed; overrides the config
    #[arg(long)]
    seed: Option<u64>,
    /// Number of independent replicas
    #[arg(long)]
    replicas: Option<u64>,
    /// Censoring cap on the scan length
    #[arg(long)]
    cap: Option<u64>,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    threads: Option<usize>,
    /// Write the report to <OUT_DIR>/<command>.<format> instead of stdout
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl Common {
    fn overrides(&self, path: Option<PathBuf>) -> Overrides {
        Overrides {
            seed: self.seed,
            replicas: self.replicas,
            cap: self.cap,
            threads: self.threads,
            out_dir: self.out_dir.clone(),
            format: self.format,
            path,
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let (command, common, path) = match cli.command {
        Cmd::Check(c) => (Command::Check, c, None),
        Cmd::Sample { common, path } => (Command::Sample, common, path),
        Cmd::Verify(c) => (Command::Verify, c, None),
        Cmd::Tail(c) => (Command::Tail, c, None),
        Cmd::Moment(c) => (Command::Moment, c, None),
        Cmd::Compare(c) => (Command::Compare, c, None),
        Cmd::Oracle(c) => (Command::Oracle, c, None),
    };
    let overrides = common.overrides(path);
    let result = ExperimentConfig::load(&common.config).and_then(|config| {
        let out_dir = overrides
            .out_dir
            .clone()
            .or_else(|| config.output.dir.as_ref().map(|d| config.resolve(d)));
        run(command, config, &overrides).map(|outcome| (outcome, out_dir))
    });
    match result {
        Ok((outcome, out_dir)) => {
            eprintln!("{}", outcome.summary);
            let written = match out_dir {
                Some(dir) => std::fs::create_dir_all(&dir).and_then(|_| {
                    std::fs::write(dir.join(outcome.file_name(command)), &outcome.report)
                }),
                None => std::io::stdout().write_all(outcome.report.as_bytes()),
            };
            if let Err(e) = written {
                eprintln!("error: cannot write report: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(outcome.status.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
