//! `opentc`: run open Tavis-Cummings scenarios from TOML files or presets.
//!
//! Exit codes: 0 success, 1 run failure, 2 invalid configuration,
//! 3 a self-check failed (output is still written).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use opentc::par::Execution;
use opentc::scenario::{presets, run_scenario, OutputFormat, RunOptions, ScenarioConfig, ScenarioError};

#[derive(Parser, Debug)]
#[command(name = "opentc", version, about = "Open Tavis-Cummings dynamics on simulated qubit registers")]
struct Cli {
    /// List the built-in presets and exit.
    #[arg(long)]
    list_presets: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a scenario file or preset.
    Run(RunArgs),
    /// Print a preset's TOML source.
    Show { preset: String },
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Scenario TOML file.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario (see --list-presets).
    #[arg(long)]
    preset: Option<String>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when neither this nor the scenario sets one.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// csv or json; defaults from the output extension, else csv.
    #[arg(long)]
    format: Option<OutputFormat>,
    /// Drop the oracle columns.
    #[arg(long)]
    no_oracle: bool,
    /// Record wall-clock timings (output is then no longer reproducible).
    #[arg(long)]
    timings: bool,
    /// Run shots and time points on one thread.
    #[arg(long)]
    sequential: bool,
    /// Override a scenario value, e.g. `--set run.num_points=5`; `KEY=` removes it.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

enum Failure {
    Config(String),
    Run(String),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Run(e.to_string())
        }
    }
}

/// Set a dotted `key` to `value`, parsed as a TOML value (bare strings
/// allowed); an empty value removes the key.
fn apply_override(doc: &mut toml::Table, assignment: &str) -> Result<(), Failure> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Failure::Config(format!("override {assignment:?} is not KEY=VALUE")))?;
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .map(|mut t| t.remove("v").expect("key present"))
        .unwrap_or_else(|_| toml::Value::String(raw.to_string()));
    let mut path: Vec<&str> = key.trim().split('.').collect();
    let last = path.pop().filter(|k| !k.is_empty()).ok_or_else(|| Failure::Config(format!("empty key in {assignment:?}")))?;
    let mut table = doc;
    for part in path {
        table = table
            .entry(part)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Failure::Config(format!("{part} in {key} is not a table")))?;
    }
    if raw.trim().is_empty() {
        table.remove(last);
    } else {
        table.insert(last.to_string(), value);
    }
    Ok(())
}

fn load(args: &RunArgs) -> Result<ScenarioConfig, Failure> {
    let text = match (&args.config, &args.preset) {
        (Some(path), _) => std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?,
        (None, Some(name)) => presets::preset_source(name)
            .ok_or_else(|| Failure::Config(format!("unknown preset {name:?}")))?
            .to_string(),
        (None, None) => return Err(Failure::Config("give a config file or --preset".into())),
    };
    let mut config = if args.overrides.is_empty() {
        ScenarioConfig::from_toml(&text)?
    } else {
        let mut doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Failure::Config(e.to_string()))?;
        for o in &args.overrides {
            apply_override(&mut doc, o)?;
        }
        ScenarioConfig::from_toml(&toml::to_string(&doc).map_err(|e| Failure::Config(e.to_string()))?)?
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn format_for(explicit: Option<OutputFormat>, path: Option<&Path>) -> OutputFormat {
    explicit.unwrap_or_else(|| match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("json") => OutputFormat::Json,
        _ => OutputFormat::Csv,
    })
}

fn run(args: &RunArgs) -> Result<bool, Failure> {
    let config = load(args)?;
    let options = RunOptions {
        oracle: !args.no_oracle,
        exec: if args.sequential { Execution::Sequential } else { Execution::Parallel },
        timings: args.timings,
    };
    let series = run_scenario(&config, &options)?;
    let path = args.output.clone().or_else(|| config.output.as_ref().map(PathBuf::from));
    let text = series.emit(format_for(args.format, path.as_deref()))?;
    match &path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Run(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    for note in &series.metadata.notes {
        eprintln!("note: {note}");
    }
    for c in series.failed_checks() {
        eprintln!("self-check {} failed: {} > {}", c.name, c.value, c.limit);
    }
    Ok(series.all_checks_passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_presets {
        for (name, src) in presets::PRESETS {
            let description = ScenarioConfig::from_toml(src).map(|c| c.description).unwrap_or_default();
            println!("{name}\t{description}");
        }
        return ExitCode::SUCCESS;
    }
    let outcome = match cli.command {
        Some(Command::Run(args)) => run(&args),
        Some(Command::Show { preset }) => match presets::preset_source(&preset) {
            Some(src) => {
                print!("{src}");
                Ok(true)
            }
            None => Err(Failure::Config(format!("unknown preset {preset:?}"))),
        },
        None => Err(Failure::Config("nothing to do; try `opentc run --preset fig1` or --list-presets".into())),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
