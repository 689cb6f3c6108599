use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod classify;
mod serve;
mod simulate;

#[derive(Parser)]
#[command(name = "radaa", version, about = "Risk-adaptive authorization server, resource server and threat harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the authorization server and resource servers from a config file.
    Serve {
        #[arg(long, env = "RADAA_CONFIG")]
        config: PathBuf,
    },
    /// Run threat scenarios against fresh in-process deployments.
    Simulate {
        /// Scenario id (e.g. TOKEN_REPLAY) or `all`.
        #[arg(long, default_value = "all")]
        scenario: String,
        /// Mitigation to disable; repeatable.
        #[arg(long = "fault")]
        faults: Vec<String>,
        /// Write the text report here and the JSON matrix next to it (`<path>.json`).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Score and classify one transaction context (JSON file, or `-` for stdin).
    Classify {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, value_enum, default_value = "authn")]
        stage: StageArg,
        /// Space-separated scopes the decision applies to.
        #[arg(long, default_value = "")]
        scopes: String,
        /// Take weights, thresholds, posture and mode from this config.
        #[arg(long, env = "RADAA_CONFIG")]
        config: Option<PathBuf>,
        /// KNN training samples: JSON list of `[[f0..f4], "CLASS"]`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Print the text table for a saved JSON matrix.
    Report { path: PathBuf },
    /// Generate a signing key file.
    GenKeys {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "as-signing")]
        key_id: String,
        #[arg(long, value_enum, default_value = "ed25519")]
        algorithm: AlgorithmArg,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Authn,
    TokenIssue,
    ResourceAccess,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Ed25519,
    Hs256,
}

type CliResult = Result<ExitCode, String>;

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve { config } => serve::run(&config),
        Command::Simulate { scenario, faults, report } => simulate::run(&scenario, &faults, report.as_deref()),
        Command::Classify { input, stage, scopes, config, model } => {
            let stage = match stage {
                StageArg::Authn => radaa_engine::Stage::Authn,
                StageArg::TokenIssue => radaa_engine::Stage::TokenIssue,
                StageArg::ResourceAccess => radaa_engine::Stage::ResourceAccess,
            };
            classify::run(&input, stage, &scopes, config.as_deref(), model.as_deref())
        }
        Command::Report { path } => simulate::report(&path),
        Command::GenKeys { out, key_id, algorithm } => gen_keys(&out, &key_id, algorithm),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn gen_keys(out: &std::path::Path, key_id: &str, algorithm: AlgorithmArg) -> CliResult {
    let key = match algorithm {
        AlgorithmArg::Ed25519 => radaa_token::KeyPair::generate_ed25519(key_id),
        AlgorithmArg::Hs256 => radaa_token::KeyPair::generate_hmac(key_id),
    };
    let file = radaa_persist::KeyFile::from_key(&key);
    file.write(out).map_err(|e| format!("{}: {e}", out.display()))?;
    println!("{}", file.public_key_b64);
    Ok(ExitCode::SUCCESS)
}
