mod output;
mod presets;
mod run;
mod scenario;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("validation error: {0}")]
    Validation(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] spiderlab::Error),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Output(_) => 1,
        }
    }
}

#[derive(Parser)]
#[command(name = "spiderlab", version, about = "Spider walks: speeds, recurrence diagnostics and factor chains")]
struct Cli {
    /// Worker threads for parallel analyses (default: all cores).
    #[arg(long, global = true, env = "SPIDERLAB_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a scenario file and run its analyses in order.
    Run {
        scenario: PathBuf,
        /// Output directory, overriding the scenario's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a named preset experiment.
    Preset {
        name: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// List presets with the experiment they reproduce and their runtime.
    ListPresets,
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
}

fn prepare(path: &Path, out: Option<PathBuf>) -> Result<scenario::Prepared, CliError> {
    let mut s = scenario::load(path)?;
    if let Some(dir) = out {
        s.output.dir = Some(std::env::current_dir().map(|c| c.join(&dir)).unwrap_or(dir));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    scenario::prepare(s, base)
}

fn report(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("cannot size the thread pool: {e}")))?;
    }
    match cli.command {
        Command::Run { scenario, out } => {
            let prepared = prepare(&scenario, out)?;
            report(&run::run(&prepared)?);
        }
        Command::Preset { name, seed, out } => {
            let preset = presets::find(&name)
                .ok_or_else(|| CliError::Validation(format!("unknown preset `{name}` (see list-presets)")))?;
            let mut artifacts = output::Artifacts::new(&out, "")?;
            (preset.run)(seed, &mut artifacts)?;
            report(&artifacts.written);
        }
        Command::ListPresets => {
            let width = presets::PRESETS.iter().map(|p| p.name.len()).max().unwrap_or(0);
            println!("{:width$}  {:>7}  experiment", "name", "runtime");
            for p in presets::PRESETS {
                println!("{:width$}  {:>7}  {}", p.name, p.runtime, p.example);
            }
        }
        Command::Validate { scenario } => {
            let prepared = prepare(&scenario, None)?;
            println!(
                "{}: ok ({} analyses, {} on {})",
                prepared.scenario.name,
                prepared.scenario.analyses.len(),
                if prepared.walker { "walker".to_string() } else { format!("{}-leg spider", prepared.rule.k()) },
                prepared.sub.name()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("spiderlab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
