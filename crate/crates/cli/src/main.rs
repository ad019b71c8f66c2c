use clap::{Args, Parser, Subcommand};
use groupsync::observation::{sample_instance, write_instance};
use groupsync_cli::config::{load, ExperimentConfig, Mode};
use groupsync_cli::harness::{points, run_table, run_trials, trial_seed};
use groupsync_cli::output::{self, Table};
use groupsync_cli::{analyze, presets, validate, CliError};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "groupsync", version, about = "Synchronization over compact groups: AMP, baselines and state evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    workers: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trials per sweep point (overrides the config).
    #[arg(long)]
    trials: Option<usize>,
    /// Record wall_time_ms (the output is then no longer reproducible byte for byte).
    #[arg(long)]
    timing: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run estimators over a λ sweep and write one CSV row per trial and estimator.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// State-evolution and free-energy analyses (se-vs-amp, phase-scan, landscape, trajectory).
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Regenerate the data behind a figure from a bundled preset.
    ReproduceFigure {
        /// Preset name; `list` prints the available ones.
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Draw one instance and write it as `<out>.bin` + `<out>.json`.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Trial index whose seed is used.
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Run the invariant checks.
    Validate {
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn read_config(path: &Path, seed: Option<u64>, trials: Option<usize>) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    from_text(&text, path.parent(), seed, trials)
}

fn from_text(text: &str, base: Option<&Path>, seed: Option<u64>, trials: Option<usize>) -> Result<ExperimentConfig, CliError> {
    let mut overrides = Vec::new();
    if let Some(s) = seed {
        overrides.push(("seed", s.to_string()));
    }
    if let Some(t) = trials {
        overrides.push(("trials", t.to_string()));
    }
    Ok(load(text, base, &overrides)?)
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    if workers == Some(0) {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    b.build().map_err(|e| CliError::Runtime(e.to_string()))
}

fn execute(config: &ExperimentConfig, common: &Common) -> Result<(), CliError> {
    let table: Table = pool(common.workers)?.install(|| -> Result<Table, CliError> {
        match config.mode {
            Mode::Run => {
                let pts = points(config)?;
                let rows = run_trials(config, &pts, common.timing);
                Ok(run_table(config, &pts, &rows))
            }
            _ => analyze::analyze(config),
        }
    })?;
    let out = common.out.clone().or_else(|| config.out.clone());
    output::write(&table.render(config.seed, &config.hash()), out.as_deref())?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, common } => {
            let c = read_config(&config, common.seed, common.trials)?;
            if c.mode != Mode::Run {
                return Err(CliError::Config("this config is an analysis; use `analyze`".into()));
            }
            execute(&c, &common)
        }
        Command::Analyze { config, common } => {
            let c = read_config(&config, common.seed, common.trials)?;
            if c.mode == Mode::Run {
                return Err(CliError::Config("this config is a plain run; use `run`".into()));
            }
            execute(&c, &common)
        }
        Command::ReproduceFigure { name, common } => {
            if name == "list" {
                for n in presets::names() {
                    println!("{n}");
                }
                return Ok(());
            }
            let text = presets::preset(&name)
                .ok_or_else(|| CliError::Config(format!("unknown preset `{name}`; available: {}", presets::names().join(", "))))?;
            let c = from_text(text, None, common.seed, common.trials)?;
            execute(&c, &common)
        }
        Command::Sample { config, out, seed, trial } => {
            let c = read_config(&config, seed, None)?;
            let point = points(&c)?.into_iter().next().ok_or_else(|| CliError::Config("empty λ schedule".into()))?;
            let inst = sample_instance(&point.group, c.n, &point.lambda, trial_seed(c.seed, &point, trial))?;
            write_instance(&inst, &out)?;
            Ok(())
        }
        Command::Validate { workers } => {
            let checks = pool(workers)?.install(validate::run_checks)?;
            let mut failed = 0;
            for c in &checks {
                println!("{} {}: {:.3e} (bound {:.1e})", if c.passed() { "ok  " } else { "FAIL" }, c.name, c.value, c.bound);
                failed += usize::from(!c.passed());
            }
            if failed > 0 {
                return Err(CliError::Runtime(format!("{failed} invariant check(s) failed")));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
