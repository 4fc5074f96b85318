//! Command-line driver for elliptic training, benchmarking and Feynman-Kac
//! verification.

pub mod commands;
pub mod config;
pub mod train;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{0}")]
    Runtime(String),

    #[error(transparent)]
    Core(#[from] elliptic_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for usage errors, 2 for failures at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "elliptic", version, about = "Elliptic loss-landscape training and verification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model and write metrics plus a checkpoint.
    Train(Common),
    /// Evaluate a saved checkpoint.
    Eval(Common),
    /// Feynman-Kac landscape estimates, maximum-principle and Dynkin checks.
    FkVerify(Common),
    /// Loss and landscape estimate on a grid over a 2-D feature box.
    Surface(Common),
    /// Train every listed objective over a range of seeds and aggregate.
    Bench(Common),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Flat `key = value` config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Common {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn run(command: &Command) -> Result<(), CliError> {
    let common = match command {
        Command::Train(c) | Command::Eval(c) | Command::FkVerify(c) | Command::Surface(c) | Command::Bench(c) => c,
    };
    let cfg = common.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    let out: &Path = &common.out;
    pool.install(|| match command {
        Command::Train(_) => commands::cmd_train(&cfg, out),
        Command::Eval(_) => commands::cmd_eval(&cfg, out),
        Command::FkVerify(_) => commands::cmd_fk_verify(&cfg, out),
        Command::Surface(_) => commands::cmd_surface(&cfg, out),
        Command::Bench(_) => commands::cmd_bench(&cfg, out),
    })
}

/// Parse arguments, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
