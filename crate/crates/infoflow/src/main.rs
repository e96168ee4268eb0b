use std::error::Error as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use infoflow::cli::{dispatch, exit_code, parse_config, CliCommand, CliError, ConfigError};

/// Information-flow analysis of asset return panels.
#[derive(Parser)]
#[command(name = "infoflow", version, about)]
struct Args {
    #[command(subcommand)]
    command: Command,

    /// Config file of `key = value` lines; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Input price CSV (`date,<ticker>,...`).
    #[arg(long, global = true)]
    input: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Significance level for the Granger tests.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Comma-separated time scales, e.g. `1,2,5`.
    #[arg(long, global = true)]
    k: Option<String>,

    /// Seed for synthetic panels and shuffles.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for the pair sweep; results are identical for any value.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Flow ratios over the (k, L) grid -> grid.csv, grid_avg.csv.
    Grid,
    /// Market-factor removal comparison -> dfr.csv.
    Defactor,
    /// Rolling-window flow series -> rolling.csv, rolling_jb.csv.
    Rolling,
    /// Generate a synthetic panel -> prices.csv, returns.csv.
    Synth,
}

fn run(args: Args) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
                path: path.clone(),
                reason: e.to_string(),
            })?;
            parse_config(&text)?
        }
        None => Default::default(),
    };
    if let Some(input) = args.input {
        cfg.input = Some(input);
    }
    if let Some(out) = args.out {
        cfg.out_dir = out;
    }
    if let Some(alpha) = args.alpha {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(ConfigError::BadValue {
                line: 0,
                key: "alpha".into(),
                reason: format!("{alpha} outside (0, 1)"),
            }
            .into());
        }
        cfg.alpha = alpha;
    }
    if let Some(k) = args.k {
        let mut ks = Vec::new();
        for f in k.split(',') {
            let v: usize = f.trim().parse().map_err(|_| ConfigError::BadValue {
                line: 0,
                key: "k".into(),
                reason: format!("cannot parse {f:?}"),
            })?;
            if v == 0 || v > 5 {
                return Err(ConfigError::BadValue {
                    line: 0,
                    key: "k".into(),
                    reason: "k values must lie in 1..=5".into(),
                }
                .into());
            }
            ks.push(v);
        }
        ks.sort_unstable();
        ks.dedup();
        cfg.k_values = ks;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = args.workers {
        cfg.workers = Some(workers);
    }

    let command = match args.command {
        Command::Grid => CliCommand::Grid,
        Command::Defactor => CliCommand::Defactor,
        Command::Rolling => CliCommand::Rolling,
        Command::Synth => CliCommand::Synth,
    };
    dispatch(command, &cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("error: {err}");
            let mut source = err.source();
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
