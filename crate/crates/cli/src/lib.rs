//! Command-line front end for dustmotion: set generation, dimension
//! estimates, escape segments, configuration-space obstacles, translation
//! plans and their verification, tube checks, and bundled demos.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use dustmotion::boxdim::CountMethod;

pub mod commands;
pub mod demo;
pub mod scenario;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Exit 0.
    Success,
    /// Exit 2: covered, gate failure, no waypoint, failed verification.
    Negative,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Negative => 2,
        }
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub status: Status,
    pub json: String,
    /// Human-readable table printed instead of the JSON when present.
    pub table: Option<String>,
    pub csv: Option<String>,
}

impl Output {
    pub fn json<T: serde::Serialize>(status: Status, value: &T) -> Result<Self> {
        Ok(Output {
            status,
            json: to_json(value)?,
            table: None,
            csv: None,
        })
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Debug, Parser)]
#[command(name = "dustmotion", version, about = "Motion planning through sampled fractal obstacles")]
pub struct Cli {
    /// Seed for every randomized step; overrides the scenario seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Clearance; overrides the scenario value.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Write (method, delta, count) rows here.
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
    /// Write the JSON result here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a point cloud from a generator spec file.
    Gen { spec: PathBuf },
    /// Estimate the box dimension of a point cloud file.
    Dim {
        cloud: PathBuf,
        #[arg(long)]
        delta_max: Option<f64>,
        #[arg(long)]
        delta_min: Option<f64>,
        #[arg(long)]
        levels: Option<usize>,
        #[arg(long, default_value = "packing")]
        method: CountMethod,
    },
    /// Search for a straight escape segment (needs source, X, Y).
    Escape { scenario: PathBuf },
    /// Build the configuration-space obstacle K = X - M.
    Cspace {
        scenario: PathBuf,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Gate, C-space, path search, and motion verification (needs M, X).
    Plan {
        scenario: PathBuf,
        #[arg(long)]
        t_samples: Option<usize>,
    },
    /// Re-verify a motion plan file.
    Verify {
        plan: PathBuf,
        #[arg(long, default_value_t = commands::DEFAULT_T_SAMPLES)]
        t_samples: usize,
        /// Anchor source point, comma separated.
        #[arg(long, requires = "y0", allow_hyphen_values = true)]
        x0: Option<String>,
        /// Anchor target point, comma separated.
        #[arg(long, requires = "x0", allow_hyphen_values = true)]
        y0: Option<String>,
    },
    /// Check the tube dimension bound on a named fixture.
    Tube {
        fixture: String,
        #[arg(long, default_value = "packing")]
        method: CountMethod,
    },
    /// Run a bundled scenario end to end (`list` shows the names).
    Demo { name: String },
}

pub fn run(cli: &Cli) -> Result<Output> {
    let g = &cli;
    match &cli.command {
        Command::Gen { spec } => commands::gen(spec),
        Command::Dim {
            cloud,
            delta_max,
            delta_min,
            levels,
            method,
        } => commands::dim(cloud, *delta_max, *delta_min, *levels, *method),
        Command::Escape { scenario } => commands::escape(scenario, g.epsilon, g.seed),
        Command::Cspace { scenario, cap } => commands::cspace(scenario, *cap, g.epsilon, g.seed),
        Command::Plan { scenario, t_samples } => commands::plan(scenario, *t_samples, g.epsilon, g.seed),
        Command::Verify { plan, t_samples, x0, y0 } => {
            commands::verify(plan, *t_samples, x0.as_deref(), y0.as_deref())
        }
        Command::Tube { fixture, method } => commands::tube(fixture, *method),
        Command::Demo { name } => demo::command(name, g.seed.unwrap_or(0)),
    }
}

fn write_new(path: &Path, contents: &str, force: bool) -> Result<()> {
    if path.exists() && !force {
        bail!("{} exists; pass --force to overwrite", path.display());
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// Writes the output where the flags say and returns the exit code.
pub fn emit(cli: &Cli, output: &Output, stdout: &mut dyn Write) -> Result<i32> {
    if let (Some(path), Some(csv)) = (&cli.csv, &output.csv) {
        write_new(path, csv, cli.force)?;
    }
    if let Some(table) = &output.table {
        stdout.write_all(table.as_bytes())?;
    }
    match &cli.out {
        Some(path) => write_new(path, &output.json, cli.force)?,
        None if output.table.is_none() => stdout.write_all(output.json.as_bytes())?,
        None => {}
    }
    Ok(output.status.code())
}

/// Parses, runs, and emits; every failure becomes exit code 1.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        run(&cli).and_then(|out| emit(&cli, &out, stdout))
    }));
    match result {
        Ok(Ok(code)) => code,
        Ok(Err(e)) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
        Err(_) => {
            let _ = writeln!(stderr, "error: internal failure");
            1
        }
    }
}
