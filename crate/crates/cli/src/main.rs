use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use nerve_core::cli::{parse_config, render_text, run, Artifact, CliError, Command, RunFlags};

#[derive(Parser, Debug)]
#[command(name = "nerve-einstein", version, about = "Flag complexes and invariant Einstein metrics of compact homogeneous spaces")]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// Seed for the multistart search (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flow horizon for `einstein`/`report`, curve length for `curve`.
    #[arg(long, global = true)]
    t_max: Option<f64>,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Isotropy summands and structure constants.
    Describe { config: PathBuf },
    /// Intermediate subalgebras.
    Lattice { config: PathBuf },
    /// Flag complex homology and contractibility certificate.
    Homology { config: PathBuf },
    /// Multistart search for invariant Einstein metrics.
    Einstein { config: PathBuf },
    /// Scalar curvature and Ricci eigenvalues along a canonical geodesic, as CSV.
    Curve {
        config: PathBuf,
        /// Lattice node whose canonical direction is followed.
        #[arg(long, default_value_t = 0)]
        node: usize,
        #[arg(long, default_value_t = 50)]
        steps: usize,
    },
    /// Full pipeline with an existence verdict.
    Report { config: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Text,
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var("NERVE_EINSTEIN_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| CliError::Config(format!("NERVE_EINSTEIN_THREADS must be a positive integer, got `{v}`")))?;
            Ok(Some(n.max(1)))
        }
        Err(_) => Ok(None),
    }
}

fn execute(args: &Args) -> Result<()> {
    let (cmd, path, node, steps) = match &args.command {
        Cmd::Describe { config } => (Command::Describe, config, None, None),
        Cmd::Lattice { config } => (Command::Lattice, config, None, None),
        Cmd::Homology { config } => (Command::Homology, config, None, None),
        Cmd::Einstein { config } => (Command::Einstein, config, None, None),
        Cmd::Curve { config, node, steps } => (Command::Curve, config, Some(*node), Some(*steps)),
        Cmd::Report { config } => (Command::Report, config, None, None),
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg = parse_config(&text).with_context(|| format!("in {}", path.display()))?;
    let flags = RunFlags { seed: args.seed, t_max: args.t_max, threads: threads_from_env()?, node, steps };
    let artifact = run(cmd, &cfg, &text, &flags)?;
    let (body, summary) = match &artifact {
        Artifact::Csv(csv) => (csv.clone(), None),
        Artifact::Report(r) => match args.format {
            Format::Json => (serde_json::to_string_pretty(r)? + "\n", Some(render_text(r))),
            Format::Text => (render_text(r), None),
        },
    };
    match &args.out {
        Some(out) => {
            write_atomic(out, &body)?;
            if let Some(s) = summary {
                print!("{s}");
            }
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn write_atomic(path: &Path, body: &str) -> Result<()> {
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, body).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map(CliError::exit_code).unwrap_or(1);
            ExitCode::from(code as u8)
        }
    }
}
