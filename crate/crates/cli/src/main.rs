mod commands;
mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use commands::Outcome;
use config::Resolve;

#[derive(Parser)]
#[command(name = "driftlab", version, about = "Random-walk drift experiments on torus Teichmüller models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample-path (Kingman) drift estimate
    Drift(Args),
    /// Drift through the Busemann cocycle integral
    BusemannDrift(Args),
    /// Comparison-lemma and sequence-condition diagnostics
    CompareHoro(Args),
    /// Drift continuity along a convex family
    Continuity(Args),
    /// Degeneration towards a Dirac mass
    NsSweep(Args),
    /// Zero-drift family built on an elliptic element
    ZeroDrift(Args),
    /// Dihedral counterexample
    Dihedral(Args),
    /// Flat versus Fricke drift on shared paths
    DriftEquality(Args),
    /// Convolution entropy sequence
    Entropy(Args),
    /// Asymptotic entropy along a convex family
    EntropySweep(Args),
    /// Covering-number and shadow-measure checks
    Shadows(Args),
}

#[derive(clap::Args, Clone)]
struct Args {
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Drift(_) => "drift",
            Command::BusemannDrift(_) => "busemann-drift",
            Command::CompareHoro(_) => "compare-horo",
            Command::Continuity(_) => "continuity",
            Command::NsSweep(_) => "ns-sweep",
            Command::ZeroDrift(_) => "zero-drift",
            Command::Dihedral(_) => "dihedral",
            Command::DriftEquality(_) => "drift-equality",
            Command::Entropy(_) => "entropy",
            Command::EntropySweep(_) => "entropy-sweep",
            Command::Shadows(_) => "shadows",
        }
    }

    fn args(&self) -> &Args {
        match self {
            Command::Drift(a)
            | Command::BusemannDrift(a)
            | Command::CompareHoro(a)
            | Command::Continuity(a)
            | Command::NsSweep(a)
            | Command::ZeroDrift(a)
            | Command::Dihedral(a)
            | Command::DriftEquality(a)
            | Command::Entropy(a)
            | Command::EntropySweep(a)
            | Command::Shadows(a) => a,
        }
    }
}

/// Parses the config and fills in every default, so the echoed copy is the
/// full set of inputs.
fn load<C: DeserializeOwned + Serialize + Resolve>(path: &Path) -> Result<C> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut c: C = serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
    c.resolve_model();
    let w = c.workers();
    if let Some(0) = *w {
        anyhow::bail!("workers must be positive");
    }
    *w = Some(w.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())));
    Ok(c)
}

/// Loads the config, runs `f` inside a pool of the configured size and
/// writes the artifacts.
fn execute<C, F>(name: &str, args: &Args, f: F) -> Result<bool>
where
    C: DeserializeOwned + Serialize + Resolve + Sync,
    F: FnOnce(&C) -> Result<Outcome> + Send,
{
    let mut cfg: C = load(&args.config)?;
    let workers = cfg.workers().expect("resolved");
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    let outcome = pool.install(|| f(&cfg))?;
    let out = &args.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for (suffix, bytes) in &outcome.tables {
        let p = out.join(format!("{name}{suffix}.csv"));
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?;
    }
    let doc = json!({
        "tool": "driftlab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": name,
        "config": cfg,
        "result": outcome.result,
        "pass": outcome.pass,
    });
    let p = out.join(format!("{name}.json"));
    fs::write(&p, serde_json::to_string_pretty(&doc)? + "\n").with_context(|| format!("writing {}", p.display()))?;
    Ok(outcome.pass)
}

fn run(cmd: &Command) -> Result<bool> {
    let name = cmd.name();
    let a = cmd.args();
    match cmd {
        Command::Drift(_) => execute(name, a, commands::drift),
        Command::BusemannDrift(_) => execute(name, a, commands::busemann_drift),
        Command::CompareHoro(_) => execute(name, a, commands::compare_horo),
        Command::Continuity(_) => execute(name, a, commands::continuity),
        Command::NsSweep(_) => execute(name, a, commands::ns_sweep),
        Command::ZeroDrift(_) => execute(name, a, commands::zero_drift),
        Command::Dihedral(_) => execute(name, a, commands::dihedral),
        Command::DriftEquality(_) => execute(name, a, commands::drift_equality),
        Command::Entropy(_) => execute(name, a, commands::entropy),
        Command::EntropySweep(_) => execute(name, a, commands::entropy_sweep),
        Command::Shadows(_) => execute(name, a, commands::shadows),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verdict: FAIL");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
