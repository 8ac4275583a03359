use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chainlight::app::{self, Overrides};
use chainlight::config::{self, Provenance, RunConfig};
use chainlight::presets;

/// Photon statistics of light scattered by trapped-ion chains.
#[derive(Parser)]
#[command(name = "chainlight", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// Master seed override for the Monte-Carlo ensemble.
    #[arg(long)]
    seed: Option<u64>,
    /// Realization-count override.
    #[arg(long)]
    realizations: Option<usize>,
    /// Worker threads (results are identical for any value).
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory override (default: $CHAINLIGHT_OUT_DIR or ./out).
    #[arg(long, value_name = "DIR")]
    out_dir: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config file; writes CSV and a reproducibility manifest.
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Run a named figure preset (fig1, fig2ab, fig2c, fig3a, fig3b).
    Preset {
        name: String,
        #[command(flatten)]
        flags: CommonFlags,
    },
    /// Parse and validate a config; print the resolved echo, compute nothing.
    Validate { config: PathBuf },
}

impl From<&CommonFlags> for Overrides {
    fn from(f: &CommonFlags) -> Self {
        Overrides {
            seed: f.seed,
            realizations: f.realizations,
            threads: f.threads,
            out_dir: f.out_dir.clone(),
        }
    }
}

fn provenance(command: String, preset: Option<String>) -> Provenance {
    Provenance {
        tool: Some("chainlight".into()),
        version: Some(env!("CARGO_PKG_VERSION").into()),
        command: Some(command),
        preset,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> chainlight::Result<()> {
    match cli.command {
        Command::Run { config, flags } => {
            let text = std::fs::read_to_string(&config).map_err(|e| {
                chainlight::Error::Config(format!("cannot read '{}': {e}", config.display()))
            })?;
            let cfg = RunConfig::from_toml_str(&text)?;
            let outcome = app::run(
                &cfg,
                &(&flags).into(),
                provenance(format!("run {}", config.display()), None),
            )?;
            for line in outcome.summary {
                println!("{line}");
            }
            for f in outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(())
        }
        Command::Preset { name, flags } => {
            let parts = presets::preset(&name)?;
            for part in parts {
                let outcome = app::run(
                    &part.config,
                    &(&flags).into(),
                    provenance(format!("preset {name}"), Some(name.clone())),
                )?;
                for line in outcome.summary {
                    println!("{line}");
                }
                for f in outcome.files {
                    println!("wrote {}", f.display());
                }
            }
            Ok(())
        }
        Command::Validate { config } => {
            let (_, _resolved) = config::load_config(&config)?;
            let text = std::fs::read_to_string(&config)?;
            let cfg = RunConfig::from_toml_str(&text)?;
            print!("{}", app::validate_echo(&cfg)?);
            Ok(())
        }
    }
}
