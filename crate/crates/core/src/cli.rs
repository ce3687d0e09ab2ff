//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::downwash::DownwashParams;
use crate::error::Error;
use crate::oracle;
use crate::sim::{self, ScenarioConfig};
use crate::verify::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;

/// Thresholds of the paper-n10-sweep preset.
pub const SWEEP_THRESHOLDS: [f64; 6] = [0.25, 0.5, 1.0, 1.5, 2.0, 2.5];

#[derive(Debug, Parser)]
#[command(
    name = "flatcouple",
    version,
    about = "Distributed flatness-based control of downwash-coupled quadrotor swarms"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one scenario and write run.csv and summary.txt.
    Run(ScenarioArgs),
    /// Sweep the approximate model's threshold and write sweep.csv.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated thresholds [m].
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check regularity, round trip, sparsity and closed forms.
    Verify(ScenarioArgs),
    /// Write quadrature fixtures for the downwash closed forms.
    Oracle {
        #[arg(long, default_value = "fixtures")]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// paper-n4-exact | paper-n4-approx | paper-n4-nominal | paper-n10-sweep
    #[arg(long)]
    pub preset: Option<String>,
    /// `key = value` config file applied after the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// `key=value` overrides applied last.
    pub overrides: Vec<String>,
}

pub fn preset(name: &str) -> Result<ScenarioConfig, Error> {
    let base = ScenarioConfig::default();
    let variant = |v| ScenarioConfig {
        variant: v,
        ..base.clone()
    };
    use crate::control::Variant;
    match name {
        "paper-n4-exact" => Ok(variant(Variant::Exact)),
        "paper-n4-approx" => Ok(variant(Variant::Approximate)),
        "paper-n4-nominal" => Ok(variant(Variant::Nominal)),
        "paper-n10-sweep" => Ok(ScenarioConfig {
            n: 10,
            variant: Variant::Approximate,
            ..base
        }),
        _ => Err(Error::Config(format!("unknown preset {name:?}"))),
    }
}

impl ScenarioArgs {
    pub fn resolve(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match &self.preset {
            Some(p) => preset(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            cfg.merge_text(&text)?;
        }
        cfg.apply_overrides(&self.overrides)?;
        Ok(cfg)
    }
}

/// Exit code for an error escaping a command.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Simulation { source, .. } => exit_code(source),
        Error::Synthesis(_) => EXIT_PROPERTY,
        _ => EXIT_DOMAIN,
    }
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    sim::write_atomic(path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// Run the parsed command; returns the process exit code.
pub fn execute(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.resolve()?;
            let (log, wall) = sim::run_timed(&cfg)?;
            write(&args.out.join("run.csv"), &log.to_csv())?;
            let summary = log.summary_text(Some(wall));
            write(&args.out.join("summary.txt"), &summary)?;
            print!("{summary}");
            Ok(EXIT_OK)
        }
        Command::Sweep {
            scenario,
            thresholds,
            jobs,
        } => {
            let cfg = scenario.resolve()?;
            cfg.validate()?;
            let list = thresholds.unwrap_or_else(|| SWEEP_THRESHOLDS.to_vec());
            if list.is_empty() {
                return Err(Error::Config("empty threshold list".into()));
            }
            if let Some(bad) = list.iter().find(|d| !(**d > 0.0)) {
                return Err(Error::Config(format!("threshold {bad} is not positive")));
            }
            let rows = sim::sweep_threshold(&cfg, &list, jobs.max(1))?;
            let csv = sim::sweep_csv(&rows);
            write(&scenario.out.join("sweep.csv"), &csv)?;
            print!("{csv}");
            Ok(EXIT_OK)
        }
        Command::Verify(args) => {
            let cfg = args.resolve()?;
            let report = verify(&cfg);
            print!("{report}");
            Ok(if report.passed() { EXIT_OK } else { EXIT_PROPERTY })
        }
        Command::Oracle { out } => {
            let json = oracle::downwash_fixtures_json(&DownwashParams::default());
            write(&out.join("downwash.json"), &json)?;
            println!("wrote {}", out.join("downwash.json").display());
            Ok(EXIT_OK)
        }
    }
}
