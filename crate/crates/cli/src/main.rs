use std::path::PathBuf;
use std::process::ExitCode;

use adaptive_milstein_cli::{run, Command, Settings};
use anyhow::Context;
use clap::{Args, Parser, Subcommand};

/// Adaptive Milstein experiments: convergence tables, timings, backstop
/// probabilities, single paths and Levy-area moment checks.
#[derive(Parser)]
#[command(name = "admil", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Strong-error table and fitted orders.
    Convergence(Options),
    /// Error against wall time.
    Efficiency(Options),
    /// Probability of ever using the backstop, per rho.
    BackstopProb(Options),
    /// One adaptive path as CSV.
    SinglePath(Options),
    /// Monte Carlo check of the Levy-area moments.
    MomentsCheck(Options),
}

#[derive(Args)]
struct Options {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    rhos: Option<String>,
    /// `2^-12..2^-8`, a comma list, or a single value.
    #[arg(long = "h-max", allow_hyphen_values = true)]
    h_max: Option<String>,
    #[arg(long)]
    paths: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    order: Option<String>,
    #[arg(long)]
    samples: Option<String>,
}

impl Options {
    fn settings(&self) -> anyhow::Result<Settings> {
        let mut s = Settings::default();
        if let Some(path) = &self.config {
            s.apply_file(path)?;
        }
        for pair in &self.set {
            s.set_pair(pair)?;
        }
        let named = [
            ("problem", &self.problem),
            ("methods", &self.methods),
            ("rho", &self.rho),
            ("rhos", &self.rhos),
            ("h_max", &self.h_max),
            ("paths", &self.paths),
            ("seed", &self.seed),
            ("order", &self.order),
            ("samples", &self.samples),
        ];
        for (key, value) in named {
            if let Some(v) = value {
                s.set(key, v)?;
            }
        }
        Ok(s)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, options) = match &cli.command {
        Cmd::Convergence(o) => (Command::Convergence, o),
        Cmd::Efficiency(o) => (Command::Efficiency, o),
        Cmd::BackstopProb(o) => (Command::BackstopProb, o),
        Cmd::SinglePath(o) => (Command::SinglePath, o),
        Cmd::MomentsCheck(o) => (Command::MomentsCheck, o),
    };
    let result = options
        .settings()
        .and_then(|s| run(command, &s, &options.out).with_context(|| format!("{command} failed")));
    match result {
        Ok(report) => {
            for w in &report.warnings {
                eprintln!("{w}");
            }
            for line in &report.lines {
                println!("{line}");
            }
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            if report.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
