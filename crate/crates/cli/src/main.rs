use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use wgspec::{execute, write_outputs, Failure, Format, GeometryConfig, RunConfig, Task, THREADS_VAR};

#[derive(Parser)]
#[command(name = "wgspec", version, about = "Spectral computations for thin twisted waveguides")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run whatever task the configuration file names
    Run(Overrides),
    /// Transverse Neumann eigenvalues
    Modes(Overrides),
    /// Coupling constants and matrices
    Coupling(Overrides),
    /// Effective potentials on a grid
    Potential(Overrides),
    /// Interval spectrum of the effective operator
    #[command(name = "spectrum-1d")]
    Spectrum1d(Overrides),
    /// Floquet band functions and gaps
    Bands(Overrides),
    /// Gaps, Borg diagnostic and scaled-twist study
    Gaps(Overrides),
    /// Small-coupling gap widths
    GapAsymptotics(Overrides),
    /// Full model against the interval oracle
    Converge(Overrides),
    /// Full model fiber against the band functions
    FiberConverge(Overrides),
    /// Gap margins of the full model
    Persistence(Overrides),
    /// Metric and Jacobian identities
    Validate(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Geometry preset name
    #[arg(long)]
    geometry: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Mode cutoff M
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    theta_count: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long)]
    jmax: Option<usize>,
    #[arg(long)]
    gap_index: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<String>,
    #[arg(long, value_parser = parse_format)]
    format: Option<Format>,
    #[arg(long)]
    allow_degenerate: bool,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        _ => Err(format!("unknown format '{s}'")),
    }
}

impl Command {
    fn split(self) -> (Option<Task>, Overrides) {
        use Command::*;
        match self {
            Run(o) => (None, o),
            Modes(o) => (Some(Task::Modes), o),
            Coupling(o) => (Some(Task::Coupling), o),
            Potential(o) => (Some(Task::Potential), o),
            Spectrum1d(o) => (Some(Task::Spectrum1d), o),
            Bands(o) => (Some(Task::Bands), o),
            Gaps(o) => (Some(Task::Gaps), o),
            GapAsymptotics(o) => (Some(Task::GapAsymptotics), o),
            Converge(o) => (Some(Task::Converge), o),
            FiberConverge(o) => (Some(Task::FiberConverge), o),
            Persistence(o) => (Some(Task::Persistence), o),
            Validate(o) => (Some(Task::Validate), o),
        }
    }
}

fn load(task: Option<Task>, o: &Overrides) -> Result<RunConfig, Failure> {
    let mut cfg = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
            RunConfig::from_json(&text)?
        }
        None => RunConfig::from_json("{}")?,
    };
    if let Some(t) = task {
        if cfg.task.is_some_and(|c| c != t) {
            return Err(Failure::config(format!(
                "subcommand {} conflicts with configured task {}",
                t.name(),
                cfg.task.unwrap().name()
            )));
        }
        cfg.task = Some(t);
    }
    if let Some(g) = &o.geometry {
        cfg.geometry = Some(GeometryConfig::Preset(g.clone()));
    }
    let p = &mut cfg.params;
    macro_rules! set {
        ($($field:ident <- $value:expr),*) => { $(if let Some(v) = $value { p.$field = Some(v); })* };
    }
    set!(n <- o.n, cutoff <- o.cutoff, h <- o.h, nodes <- o.nodes, theta_count <- o.theta_count,
         theta <- o.theta, jmax <- o.jmax, gap_index <- o.gap_index, epsilon <- o.epsilon);
    if o.allow_degenerate {
        p.allow_degenerate = Some(true);
    }
    if o.out.is_some() {
        cfg.output = o.out.clone();
    }
    if o.format.is_some() {
        cfg.format = o.format;
    }
    Ok(cfg)
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(value) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = value
        .parse()
        .map_err(|_| Failure::config(format!("{THREADS_VAR}={value} is not a thread count")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::config(e.to_string()))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let (task, overrides) = cli.command.split();
    let cfg = load(task, &overrides)?;
    let resolved = cfg.resolve()?;
    let dir = PathBuf::from(cfg.output.as_deref().unwrap_or("out"));
    let start = Instant::now();
    let artifacts = execute(&resolved)?;
    write_outputs(&dir, &resolved, &artifacts, start.elapsed().as_secs_f64())?;
    for a in &artifacts {
        println!("{}", dir.join(&a.file).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("wgspec: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
