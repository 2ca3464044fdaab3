//! Command-line driver: JSON experiment configs, parameter sweeps, CSV/SVG output.
//!
//! ```text
//! holonomy run <config.json>
//! holonomy fig1 --out DIR
//! holonomy fig2 --out DIR
//! holonomy oracle {quantum|classical} --slowness S
//! ```

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::error::HolonomyError;

pub use config::{Experiment, ExperimentConfig};
pub use output::{Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config: {0}")]
    ConfigInvalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Model(#[from] HolonomyError),
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Csv(e.to_string())
    }
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigInvalid(_) => "ConfigInvalid",
            CliError::Io { .. } => "Io",
            CliError::Csv(_) => "Csv",
            CliError::Model(e) => e.kind(),
        }
    }

    /// One-line JSON error record.
    pub fn record(&self) -> String {
        json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

#[derive(Debug, Parser)]
#[command(name = "holonomy", version, about = "Berry phases and Hannay angles of hybrid systems")]
pub struct Cli {
    /// Loop samples per closed curve.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Seed for the randomized gauge checks.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write an SVG chart.
    #[arg(long, global = true)]
    pub emit_svg: bool,
    /// Suppress the per-point summary lines.
    #[arg(long, short, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Overrides `output.directory`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ground-state Berry phase against coupling K.
    Fig1 {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Hannay-angle coupling correction against K.
    Fig2 {
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Time-domain oracle against the geometric prediction.
    Oracle {
        kind: OracleKind,
        #[arg(long, default_value_t = 1e3)]
        slowness: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Quantum,
    Classical,
}

/// Result of a completed run.
#[derive(Debug)]
pub struct RunOutcome {
    pub table: Table,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn failures(&self) -> usize {
        self.table.failures()
    }
}

fn summary_line(cfg: &ExperimentConfig, t: &Table, i: usize) -> String {
    let row = &t.rows[i];
    let mut parts = vec![format!("{} [{}/{}]", cfg.experiment.name(), i + 1, t.rows.len())];
    let err = t.column("error").map(|c| &row[c]);
    for (h, c) in t.header.iter().zip(row).take(6) {
        match c {
            Cell::Num(v) => parts.push(format!("{h}={v:.6e}")),
            Cell::Int(v) => parts.push(format!("{h}={v}")),
            Cell::Text(s) if *h != "error" => parts.push(format!("{h}={s}")),
            _ => {}
        }
    }
    match err {
        Some(Cell::Text(e)) => parts.push(format!("error={e}")),
        _ => parts.push("ok".into()),
    }
    parts.join(" ")
}

/// Runs a validated config and writes `<experiment>.csv`, optional `.svg` and `run_meta.json`.
pub fn run_config(cfg: &ExperimentConfig, quiet: bool) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let table = experiments::run_table(cfg);
    let compute_s = start.elapsed().as_secs_f64();
    if !quiet {
        for i in 0..table.rows.len() {
            println!("{}", summary_line(cfg, &table, i));
        }
    }

    let dir = &cfg.output.directory;
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.clone(),
        source: e,
    })?;
    let name = cfg.experiment.name();
    let csv_path = dir.join(format!("{name}.csv"));
    table.write_csv(&csv_path)?;
    let mut files = vec![csv_path];
    if cfg.output.emit_svg {
        let svg_path = dir.join(format!("{name}.svg"));
        std::fs::write(&svg_path, experiments::chart(cfg, &table)).map_err(|e| CliError::Io {
            path: svg_path.clone(),
            source: e,
        })?;
        files.push(svg_path);
    }
    let meta_path = dir.join("run_meta.json");
    let meta = json!({
        "experiment": name,
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg,
        "rows": table.rows.len(),
        "failures": table.failures(),
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "timings": { "compute_seconds": compute_s, "total_seconds": start.elapsed().as_secs_f64() },
    });
    let text = serde_json::to_string_pretty(&meta).expect("serializable metadata");
    std::fs::write(&meta_path, text).map_err(|e| CliError::Io {
        path: meta_path.clone(),
        source: e,
    })?;
    files.push(meta_path);
    Ok(RunOutcome { table, files })
}

/// Builds the config a command line describes.
pub fn config_for(cli: &Cli) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &cli.command {
        Command::Run { config, out } => {
            let mut c = ExperimentConfig::from_path(config)?;
            if let Some(o) = out {
                c.output.directory = o.clone();
            }
            c
        }
        Command::Fig1 { out } | Command::Fig2 { out } => {
            let e = if matches!(cli.command, Command::Fig1 { .. }) {
                Experiment::Fig1
            } else {
                Experiment::Fig2
            };
            let mut c = ExperimentConfig::new(e);
            c.output.directory = out.clone();
            c
        }
        Command::Oracle { kind, slowness, out } => {
            let mut c = ExperimentConfig::new(match kind {
                OracleKind::Quantum => Experiment::OracleQuantum,
                OracleKind::Classical => Experiment::OracleClassical,
            });
            c.numerics.slowness = *slowness;
            c.output.directory = out.clone();
            c
        }
    };
    if let Some(n) = cli.samples {
        cfg.numerics.n_samples = n;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.output.emit_svg |= cli.emit_svg;
    cfg.validate()?;
    Ok(cfg)
}

/// Exit codes: 0 success, 1 invalid input or I/O failure, 2 some sweep points failed.
pub fn main_with(cli: Cli) -> i32 {
    let cfg = match config_for(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", e.record());
            return 1;
        }
    };
    match run_config(&cfg, cli.quiet) {
        Ok(out) if out.failures() == 0 => 0,
        Ok(out) => {
            eprintln!(
                "{}",
                json!({ "error": "PointFailures", "failed": out.failures(), "rows": out.table.rows.len() })
            );
            2
        }
        Err(e) => {
            eprintln!("{}", e.record());
            1
        }
    }
}
