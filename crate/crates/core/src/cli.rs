//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::env::EnvKind;
use crate::error::Error;
use crate::experiment::ExperimentSpec;
use crate::harness::{emit_report, run_experiment, run_grid, Checkpoint, GridSummary};
use crate::orchestrator::{evaluate_bank, ModeFlags};
use crate::rng::{stream, Stream};
use crate::selftest::run_selftest;

#[derive(Debug, Parser)]
#[command(name = "compete-rl", version, about = "Competitive multi-agent PPO on 1-D race tasks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one experiment (every seed in the spec, or just --seed).
    Train(TrainArgs),
    /// Evaluate a checkpoint as a lone racer.
    Eval(EvalArgs),
    /// Run a grid of modes and agent counts and summarize it.
    Compare(GridArgs),
    /// Like compare, defaulting to the full baseline matrix.
    Grid(GridArgs),
    /// Write SVG charts and a markdown report from a summary file.
    Plot(PlotArgs),
    /// Run the built-in invariant checks.
    Selftest,
}

/// Overrides applied on top of the config file (or the defaults).
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// JSON experiment spec; every key is optional.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
    /// PointRacer or StaminaRacer.
    #[arg(long)]
    pub env: Option<EnvKind>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub steps_per_agent: Option<usize>,
    #[arg(long)]
    pub eval_episodes: Option<usize>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Train only this seed.
    #[arg(long, conflicts_with = "seeds")]
    pub seed: Option<u64>,
    /// Mode label such as SA, Sh-Decent-Comp or 3A-Sh-Cent-Comp.
    #[arg(long)]
    pub mode: Option<ModeFlags>,
    #[arg(long)]
    pub agents: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to the environment the checkpoint was trained on.
    #[arg(long)]
    pub env: Option<EnvKind>,
    #[arg(long, default_value_t = 20)]
    pub episodes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Comma-separated mode labels.
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<ModeFlags>>,
    /// Comma-separated agent counts.
    #[arg(long, value_delimiter = ',')]
    pub agents: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub summary: PathBuf,
    /// Output directory; defaults to the summary's directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub title: Option<String>,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    /// Bad invocation or configuration: exit 2.
    Usage(String),
    /// Failure while running: exit 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

impl SpecArgs {
    /// Load the config (if any) and apply the overrides.
    pub fn resolve(&self) -> Result<ExperimentSpec, CliError> {
        let mut spec = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(name) = &self.name {
            spec.name = name.clone();
        }
        if let Some(kind) = self.env {
            if kind != spec.env.kind {
                spec.env.kind = kind;
                spec.env.w_ctrl = None;
            }
        }
        if let Some(t) = self.iterations {
            spec.total_iterations = t;
        }
        if let Some(s) = self.steps_per_agent {
            spec.steps_per_agent = s;
        }
        if let Some(e) = self.eval_episodes {
            spec.eval_episodes = e;
        }
        if let Some(seeds) = &self.seeds {
            spec.seeds = seeds.clone();
        }
        if let Some(out) = &self.output {
            spec.output_dir = out.clone();
        }
        Ok(spec)
    }
}

fn load_config(path: &Path) -> Result<ExperimentSpec, CliError> {
    if !path.is_file() {
        return Err(CliError::Usage(format!("config not found: {}", path.display())));
    }
    ExperimentSpec::from_file(path).map_err(|e| match e {
        Error::Json(e) => CliError::Usage(format!("invalid config {}: {e}", path.display())),
        other => runtime(other),
    })
}

fn validated(spec: ExperimentSpec) -> Result<ExperimentSpec, CliError> {
    spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(spec)
}

fn train_cmd(args: &TrainArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let mut spec = args.spec.resolve()?;
    if let Some(flags) = args.mode {
        spec.flags = flags;
    }
    if let Some(n) = args.agents {
        spec.n_agents = n;
    }
    if let Some(seed) = args.seed {
        spec.seeds = vec![seed];
    }
    let spec = validated(spec)?;
    let report = run_experiment(&spec).map_err(runtime)?;
    let _ = writeln!(out, "{} -> {}", spec.flags.full_label(spec.n_agents), report.cell_dir.display());
    for m in &report.seeds {
        let result = match (&m.error, m.final_eval_mean) {
            (Some(e), _) => format!("failed after {} iterations: {e}", m.iterations_completed),
            (None, Some(r)) => format!("final eval reward {r:.3}"),
            (None, None) => "no iterations".into(),
        };
        let _ = writeln!(out, "  seed {}: {result}", m.seed);
    }
    let failed = report.failed().count();
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} of {} seeds failed", report.seeds.len())));
    }
    Ok(())
}

fn eval_cmd(args: &EvalArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !args.checkpoint.is_file() {
        return Err(CliError::Usage(format!("checkpoint not found: {}", args.checkpoint.display())));
    }
    let ckpt = Checkpoint::load(&args.checkpoint).map_err(runtime)?;
    let mut env = ckpt.env.clone();
    if let Some(kind) = args.env {
        if kind != env.kind {
            env.kind = kind;
            env.w_ctrl = None;
        }
    }
    let config = env.race_config(ckpt.n_agents);
    let mut rng = stream(args.seed, Stream::Eval);
    let (mean, std) = evaluate_bank(&ckpt.bank, &config, &ckpt.flags, args.episodes, &mut rng).map_err(runtime)?;
    let _ = writeln!(
        out,
        "{} {}: {mean:.3} ± {std:.3} over {} episodes",
        ckpt.flags.full_label(ckpt.n_agents),
        config.kind,
        args.episodes * ckpt.bank.params.len()
    );
    Ok(())
}

fn grid_cmd(args: &GridArgs, default_modes: Option<&[ModeFlags]>, out: &mut dyn Write) -> Result<(), CliError> {
    let base = args.spec.resolve()?;
    let modes = match (&args.modes, default_modes) {
        (Some(m), _) => m.clone(),
        (None, Some(d)) => d.to_vec(),
        (None, None) => return Err(CliError::Usage("--modes is required".into())),
    };
    let agents = args.agents.clone().unwrap_or_else(|| vec![base.n_agents]);
    let (summary, issues) = match run_grid(&base, &modes, &agents) {
        Ok(x) => x,
        Err(e @ (Error::EmptyGrid | Error::Config(_))) => return Err(CliError::Usage(e.to_string())),
        Err(e) => return Err(runtime(e)),
    };
    let root = crate::harness::experiment_root(&base);
    let files = emit_report(&summary, &root, &base.name).map_err(runtime)?;
    let _ = write!(out, "{summary}");
    let _ = writeln!(out, "summary: {}", root.join("summary.csv").display());
    for f in files {
        let _ = writeln!(out, "wrote {}", f.display());
    }
    if !issues.0.is_empty() {
        return Err(CliError::Runtime(format!("{} grid task(s) failed:\n{}", issues.0.len(), issues.0.join("\n"))));
    }
    Ok(())
}

fn plot_cmd(args: &PlotArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if !args.summary.is_file() {
        return Err(CliError::Usage(format!("summary not found: {}", args.summary.display())));
    }
    let summary = GridSummary::load(&args.summary, None).map_err(runtime)?;
    let dir = match &args.out {
        Some(d) => d.clone(),
        None => args.summary.parent().unwrap_or(Path::new(".")).to_path_buf(),
    };
    let title = args.title.clone().unwrap_or_else(|| {
        dir.file_name()
            .map_or("report".into(), |n| n.to_string_lossy().into_owned())
    });
    for f in emit_report(&summary, &dir, &title).map_err(runtime)? {
        let _ = writeln!(out, "wrote {}", f.display());
    }
    Ok(())
}

fn selftest_cmd(out: &mut dyn Write) -> Result<(), CliError> {
    let results = run_selftest();
    for r in &results {
        let _ = writeln!(out, "[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} self-test check(s) failed")));
    }
    Ok(())
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Train(a) => train_cmd(a, out),
        Command::Eval(a) => eval_cmd(a, out),
        Command::Compare(a) => grid_cmd(a, None, out),
        Command::Grid(a) => grid_cmd(a, Some(&ModeFlags::BASELINES), out),
        Command::Plot(a) => plot_cmd(a, out),
        Command::Selftest => selftest_cmd(out),
    }
}

/// Parse `argv`, run the command and return the process exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return if code == 0 { 0 } else { 2 };
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
