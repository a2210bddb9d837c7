use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use fpp_cli::config::from_object;
use fpp_cli::run::{run, RunError};

const EXIT_CODES: &str = "\
Exit codes:
  0  success
  1  runtime failure (including disagreement with an oracle)
  2  configuration rejected
  3  instance too large for an exhaustive oracle
  4  counterexample to the crossing-path construction (written as counterexample.json)";

#[derive(Parser)]
#[command(name = "fpp", version, about = "Maximal flows through cylinders in first-passage percolation", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Maximal flow and minimal cut of one sampled cylinder
    Flow(Common),
    /// Monte Carlo estimate of alpha(eps) and its rate over a list of sides
    Sweep(Common),
    /// Bad-block probability delta_K and the block process
    Blocks(Common),
    /// Closed-form bounds and growth constants
    Bounds(Common),
    /// Exhaustive min-cut or path-packing cross-checks
    Oracle(Common),
}

#[derive(Args)]
#[command(after_help = EXIT_CODES)]
struct Common {
    /// JSON configuration file
    #[arg(long)]
    config: PathBuf,
    /// Global seed, overriding the configuration
    #[arg(long)]
    seed: Option<u64>,
    /// Replicate count, overriding the configuration
    #[arg(long)]
    replicates: Option<u64>,
    /// Exact arithmetic for flow, exhaustive event enumeration for blocks
    #[arg(long)]
    exact: bool,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory, overriding the configuration
    #[arg(long)]
    out: Option<PathBuf>,
}

fn overrides(
    kind: &str,
    args: &Common,
    obj: &mut serde_json::Map<String, Value>,
) -> Result<(), Vec<String>> {
    let mut errs = Vec::new();
    match obj.get("kind").and_then(Value::as_str) {
        None => {
            obj.insert("kind".into(), json!(kind));
        }
        Some(k) if k != kind => errs.push(format!("configuration is for kind {k}, not {kind}")),
        _ => {}
    }
    if let Some(s) = args.seed {
        obj.insert("seed".into(), json!(s));
    }
    if let Some(r) = args.replicates {
        match kind {
            "sweep" | "blocks" | "oracle" => {
                obj.insert("replicates".into(), json!(r));
            }
            _ => errs.push(format!("--replicates does not apply to {kind}")),
        }
    }
    if args.exact {
        match kind {
            "flow" => {
                obj.insert("arithmetic".into(), json!("exact"));
            }
            "blocks" => {
                obj.insert("exact".into(), json!(true));
            }
            _ => errs.push(format!("--exact does not apply to {kind}")),
        }
    }
    if let Some(out) = &args.out {
        obj.insert("output".into(), json!(out.to_string_lossy()));
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn execute(kind: &str, args: &Common) -> Result<String, RunError> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| RunError::Config(vec![format!("{}: {e}", args.config.display())]))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| RunError::Config(vec![format!("invalid JSON: {e}")]))?;
    let Value::Object(mut obj) = value else {
        return Err(RunError::Config(vec![
            "the configuration must be a JSON object".into(),
        ]));
    };
    overrides(kind, args, &mut obj).map_err(RunError::Config)?;
    let manifest = from_object(obj).map_err(RunError::Config)?;
    let go = || run(&manifest);
    let summary = match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| RunError::Runtime(e.to_string()))?
            .install(go)?,
        None => go()?,
    };
    let files: Vec<String> = summary
        .files
        .iter()
        .map(|p| p.display().to_string())
        .collect();
    Ok(format!("{}\nwrote {}", summary.message, files.join(", ")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Flow(a) => ("flow", a),
        Command::Sweep(a) => ("sweep", a),
        Command::Blocks(a) => ("blocks", a),
        Command::Bounds(a) => ("bounds", a),
        Command::Oracle(a) => ("oracle", a),
    };
    match execute(kind, args) {
        Ok(msg) => {
            println!("{msg}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("fpp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
