//! Command-line flags. Each subcommand maps its flags onto a [`RawConfig`]
//! that is then overlaid on the optional configuration file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use qfall_core::detection::Variant;

use crate::config::{OracleTarget, OutputFormat, RawConfig, Scale, ScenarioKind, TimeList};

#[derive(Debug, Parser)]
#[command(
    name = "qfall",
    version,
    about = "Gaussian wave packets in uniform gravity: detection tables, arrival times, classical comparison"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Gravitational acceleration (cm/s²).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub g: Option<f64>,
    /// Reduced Planck constant (erg·s).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub hbar: Option<f64>,
    /// Atomic mass unit (g).
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub amu: Option<f64>,
    /// Flat `key = value` configuration file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $QFALL_OUT_DIR, else standard output).
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Probability of detection at the launch point when the centre returns.
    Table1(TableArgs),
    /// Probability of detection at the apex of the trajectory.
    Table2(TableArgs),
    /// Mean arrival time against mass for a packet dropped from rest.
    ArrivalSweep(SweepArgs),
    /// Density and current of one packet on a (z, t) grid.
    Evolve(EvolveArgs),
    /// Classical Monte-Carlo ensemble compared with the quantum result.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct TableFlags {
    /// Launch velocity (cm/s).
    #[arg(long, allow_negative_numbers = true)]
    pub u: Option<f64>,
    /// Half-width of the detection window (cm).
    #[arg(long, allow_negative_numbers = true)]
    pub epsilon: Option<f64>,
    /// exact, midpoint or both.
    #[arg(long)]
    pub variant: Option<Variant>,
    /// `builtin` or a file with one `[label,]mass` per line.
    #[arg(long)]
    pub masses: Option<String>,
}

#[derive(Debug, Args)]
pub struct SweepFlags {
    /// Fall distance to the detector (cm).
    #[arg(long = "Z", allow_negative_numbers = true)]
    pub distance: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mass_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub mass_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    /// log or linear.
    #[arg(long)]
    pub scale: Option<Scale>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// Initial packet width (cm).
    #[arg(long, allow_negative_numbers = true)]
    pub sigma0: Option<f64>,
    #[command(flatten)]
    pub table: TableFlags,
    /// csv, json or text.
    #[arg(long)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub sigma0: Option<f64>,
    #[command(flatten)]
    pub sweep: SweepFlags,
    /// csv or json.
    #[arg(long)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Particle mass (amu).
    #[arg(long, allow_negative_numbers = true)]
    pub mass: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub u: Option<f64>,
    /// Comma-separated evaluation times (s).
    #[arg(long, allow_hyphen_values = true)]
    pub t: Option<TimeList>,
    #[arg(long, allow_negative_numbers = true)]
    pub z_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub z_max: Option<f64>,
    #[arg(long)]
    pub nz: Option<usize>,
    #[arg(long)]
    pub format: Option<OutputFormat>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// table1, table2 or arrival-sweep.
    pub target: Option<OracleTarget>,
    #[arg(long, allow_negative_numbers = true)]
    pub sigma0: Option<f64>,
    #[command(flatten)]
    pub table: TableFlags,
    #[command(flatten)]
    pub sweep: SweepFlags,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub format: Option<OutputFormat>,
}

impl TableFlags {
    fn apply(&self, raw: &mut RawConfig) {
        raw.u = self.u;
        raw.epsilon = self.epsilon;
        raw.variant = self.variant;
        raw.masses.clone_from(&self.masses);
    }
}

impl SweepFlags {
    fn apply(&self, raw: &mut RawConfig) {
        raw.distance = self.distance;
        raw.mass_min = self.mass_min;
        raw.mass_max = self.mass_max;
        raw.points = self.points;
        raw.scale = self.scale;
    }
}

impl Cli {
    pub fn scenario(&self) -> ScenarioKind {
        match self.command {
            Command::Table1(_) => ScenarioKind::Table1,
            Command::Table2(_) => ScenarioKind::Table2,
            Command::ArrivalSweep(_) => ScenarioKind::ArrivalSweep,
            Command::Evolve(_) => ScenarioKind::Evolve,
            Command::Oracle(_) => ScenarioKind::Oracle,
        }
    }

    /// Settings given on the command line, excluding `--config`.
    pub fn raw_config(&self) -> RawConfig {
        let mut raw = RawConfig {
            g: self.global.g,
            hbar: self.global.hbar,
            amu: self.global.amu,
            out_dir: self.global.out_dir.clone(),
            ..RawConfig::default()
        };
        match &self.command {
            Command::Table1(a) | Command::Table2(a) => {
                raw.sigma0 = a.sigma0;
                raw.format = a.format;
                a.table.apply(&mut raw);
            }
            Command::ArrivalSweep(a) => {
                raw.sigma0 = a.sigma0;
                raw.format = a.format;
                a.sweep.apply(&mut raw);
            }
            Command::Evolve(a) => {
                raw.mass = a.mass;
                raw.sigma0 = a.sigma0;
                raw.u = a.u;
                raw.t.clone_from(&a.t);
                raw.z_min = a.z_min;
                raw.z_max = a.z_max;
                raw.nz = a.nz;
                raw.format = a.format;
            }
            Command::Oracle(a) => {
                raw.target = a.target;
                raw.sigma0 = a.sigma0;
                raw.n_samples = a.n_samples;
                raw.seed = a.seed;
                raw.format = a.format;
                a.table.apply(&mut raw);
                a.sweep.apply(&mut raw);
            }
        }
        raw
    }
}
