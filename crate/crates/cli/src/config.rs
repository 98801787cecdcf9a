//! Run configuration: a flat `key = value` file overlaid by command-line flags.
//!
//! Every key is spelled like its flag without the leading dashes; `-` and `_`
//! are interchangeable in the file. Unknown keys, duplicate keys, malformed
//! values and keys that do not apply to the selected scenario are usage errors.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use qfall_core::arrival::FallParams;
use qfall_core::detection::{TableParams, Variant};
use qfall_core::{MassSweep, PhysicalConstants};

use crate::error::{usage, CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "QFALL_OUT_DIR";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SAMPLES: usize = 1_000_000;

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(&self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => Err(format!(
                        "expected one of {}",
                        [$($text),+].join(", ")
                    )),
                }
            }
        }
    };
}

named_enum!(ScenarioKind {
    Table1 => "table1",
    Table2 => "table2",
    ArrivalSweep => "arrival-sweep",
    Evolve => "evolve",
    Oracle => "oracle",
});

named_enum!(
    /// What the classical oracle is compared against.
    OracleTarget {
        Table1 => "table1",
        Table2 => "table2",
        ArrivalSweep => "arrival-sweep",
    }
);

named_enum!(OutputFormat {
    Csv => "csv",
    Json => "json",
    Text => "text",
});

named_enum!(Scale {
    Log => "log",
    Linear => "linear",
});

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
            OutputFormat::Text => "txt",
        }
    }
}

/// Comma-separated list of evaluation times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeList(pub Vec<f64>);

impl FromStr for TimeList {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
            .collect::<Result<Vec<_>, _>>()
            .map(TimeList)
    }
}

fn parse_value<T>(key: &str, value: &str) -> CliResult<T>
where
    T: FromStr,
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| usage(format!("invalid value `{value}` for `{key}`: {e}")))
}

macro_rules! raw_config {
    ($($field:ident : $ty:ty => $key:literal),+ $(,)?) => {
        /// Unvalidated settings from one source (file or flags).
        #[derive(Debug, Clone, Default, PartialEq)]
        pub struct RawConfig {
            $(pub $field: Option<$ty>,)+
        }

        impl RawConfig {
            pub const KEYS: &'static [&'static str] = &[$($key),+];

            fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
                match key {
                    $($key => {
                        if self.$field.is_some() {
                            return Err(usage(format!("duplicate key `{key}`")));
                        }
                        self.$field = Some(parse_value(key, value)?);
                    })+
                    _ => return Err(usage(format!("unknown key `{key}`"))),
                }
                Ok(())
            }

            /// Settings in `self` take precedence over `fallback`.
            pub fn overlay(self, fallback: RawConfig) -> RawConfig {
                RawConfig {
                    $($field: self.$field.or(fallback.$field),)+
                }
            }

            pub fn present_keys(&self) -> Vec<&'static str> {
                let mut keys = Vec::new();
                $(if self.$field.is_some() {
                    keys.push($key);
                })+
                keys
            }
        }
    };
}

raw_config! {
    scenario: ScenarioKind => "scenario",
    target: OracleTarget => "target",
    g: f64 => "g",
    hbar: f64 => "hbar",
    amu: f64 => "amu",
    out_dir: PathBuf => "out_dir",
    format: OutputFormat => "format",
    u: f64 => "u",
    sigma0: f64 => "sigma0",
    epsilon: f64 => "epsilon",
    variant: Variant => "variant",
    masses: String => "masses",
    distance: f64 => "Z",
    mass_min: f64 => "mass_min",
    mass_max: f64 => "mass_max",
    points: usize => "points",
    scale: Scale => "scale",
    n_samples: usize => "n_samples",
    seed: u64 => "seed",
    mass: f64 => "mass",
    t: TimeList => "t",
    z_min: f64 => "z_min",
    z_max: f64 => "z_max",
    nz: usize => "nz",
}

/// Parses the text of a configuration file.
pub fn parse_config_text(text: &str) -> CliResult<RawConfig> {
    let mut raw = RawConfig::default();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("line {}: expected `key = value`, got `{line}`", n + 1)))?;
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        if value.is_empty() {
            return Err(usage(format!("line {}: empty value for `{key}`", n + 1)));
        }
        raw.set(&key, value)?;
    }
    Ok(raw)
}

pub fn load_config_file(path: &Path) -> CliResult<RawConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_text(&text)
}

const COMMON_KEYS: &[&str] = &["scenario", "g", "hbar", "amu", "out_dir", "format"];
const TABLE_KEYS: &[&str] = &["u", "sigma0", "epsilon", "variant", "masses"];
const SWEEP_KEYS: &[&str] = &["sigma0", "Z", "mass_min", "mass_max", "points", "scale"];
const EVOLVE_KEYS: &[&str] = &["mass", "sigma0", "u", "t", "z_min", "z_max", "nz"];
const ORACLE_KEYS: &[&str] = &["target", "n_samples", "seed"];

fn applies(kind: ScenarioKind, target: Option<OracleTarget>, key: &str) -> bool {
    let scenario_keys: &[&[&str]] = match (kind, target) {
        (ScenarioKind::Table1 | ScenarioKind::Table2, _) => &[TABLE_KEYS],
        (ScenarioKind::ArrivalSweep, _) => &[SWEEP_KEYS],
        (ScenarioKind::Evolve, _) => &[EVOLVE_KEYS],
        (ScenarioKind::Oracle, Some(OracleTarget::ArrivalSweep)) => &[ORACLE_KEYS, SWEEP_KEYS],
        (ScenarioKind::Oracle, _) => &[ORACLE_KEYS, TABLE_KEYS],
    };
    COMMON_KEYS.contains(&key) || scenario_keys.iter().any(|ks| ks.contains(&key))
}

/// Parameters of a detection-probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableConfig {
    pub params: TableParams,
    pub variant: Variant,
    pub masses: MassSweep,
}

/// Mass grid and drop geometry of an arrival-time sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub fall: FallParams,
    pub mass_min: f64,
    pub mass_max: f64,
    pub points: usize,
    pub scale: Scale,
}

impl SweepConfig {
    pub fn masses(&self) -> CliResult<MassSweep> {
        Ok(match self.scale {
            Scale::Log => MassSweep::geometric(self.mass_min, self.mass_max, self.points)?,
            Scale::Linear => MassSweep::linear(self.mass_min, self.mass_max, self.points)?,
        })
    }
}

impl Default for SweepConfig {
    /// One to 10⁹ amu, five points per decade.
    fn default() -> Self {
        Self {
            fall: FallParams::default(),
            mass_min: 1.0,
            mass_max: 1e9,
            points: 46,
            scale: Scale::Log,
        }
    }
}

/// Density and current on a (z, t) grid for one packet.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub mass_amu: f64,
    pub sigma0: f64,
    pub u: f64,
    pub times: Vec<f64>,
    /// Defaults to the packet centre ± 6σ over all requested times.
    pub z_range: Option<(f64, f64)>,
    pub nz: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OracleJob {
    Table1(TableConfig),
    Table2(TableConfig),
    ArrivalSweep(SweepConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub job: OracleJob,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioConfig {
    Table1(TableConfig),
    Table2(TableConfig),
    ArrivalSweep(SweepConfig),
    Evolve(EvolveConfig),
    Oracle(OracleConfig),
}

impl ScenarioConfig {
    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioConfig::Table1(_) => ScenarioKind::Table1,
            ScenarioConfig::Table2(_) => ScenarioKind::Table2,
            ScenarioConfig::ArrivalSweep(_) => ScenarioKind::ArrivalSweep,
            ScenarioConfig::Evolve(_) => ScenarioKind::Evolve,
            ScenarioConfig::Oracle(_) => ScenarioKind::Oracle,
        }
    }
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub constants: PhysicalConstants,
    pub scenario: ScenarioConfig,
    pub format: OutputFormat,
    /// `None` sends tables to standard output.
    pub out_dir: Option<PathBuf>,
    pub seed: u64,
}

fn positive(key: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(usage(format!("`{key}` must be positive, got {v}")))
    }
}

fn finite(key: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(usage(format!("`{key}` must be finite, got {v}")))
    }
}

/// Reads a mass list: one mass (amu) per line, optionally preceded by a
/// label and a comma. Blank lines and `#` comments are skipped.
pub fn parse_mass_list(text: &str) -> CliResult<MassSweep> {
    let mut masses = Vec::new();
    let mut labels = Vec::new();
    let mut labelled = false;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (label, mass) = match line.rsplit_once(',') {
            Some((l, m)) => {
                labelled = true;
                (Some(l.trim().to_string()), m.trim())
            }
            None => (None, line),
        };
        let m: f64 = mass
            .parse()
            .map_err(|e| usage(format!("mass list line {}: `{mass}`: {e}", n + 1)))?;
        labels.push(label.unwrap_or_else(|| format!("{m}")));
        masses.push(m);
    }
    if masses.is_empty() {
        return Err(usage("mass list is empty"));
    }
    Ok(if labelled {
        MassSweep::with_labels(masses, labels)?
    } else {
        MassSweep::new(masses)?
    })
}

fn load_masses(source: Option<&str>) -> CliResult<MassSweep> {
    match source {
        None | Some("builtin") => Ok(MassSweep::builtin_species()),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            parse_mass_list(&text)
        }
    }
}

fn table_config(raw: &RawConfig) -> CliResult<TableConfig> {
    let d = TableParams::default();
    Ok(TableConfig {
        params: TableParams {
            u: positive("u", raw.u.unwrap_or(d.u))?,
            sigma0: positive("sigma0", raw.sigma0.unwrap_or(d.sigma0))?,
            epsilon: positive("epsilon", raw.epsilon.unwrap_or(d.epsilon))?,
        },
        variant: raw.variant.unwrap_or(Variant::Exact),
        masses: load_masses(raw.masses.as_deref())?,
    })
}

fn sweep_config(raw: &RawConfig) -> CliResult<SweepConfig> {
    let d = SweepConfig::default();
    let cfg = SweepConfig {
        fall: FallParams {
            sigma0: positive("sigma0", raw.sigma0.unwrap_or(d.fall.sigma0))?,
            distance: positive("Z", raw.distance.unwrap_or(d.fall.distance))?,
        },
        mass_min: positive("mass_min", raw.mass_min.unwrap_or(d.mass_min))?,
        mass_max: positive("mass_max", raw.mass_max.unwrap_or(d.mass_max))?,
        points: raw.points.unwrap_or(d.points),
        scale: raw.scale.unwrap_or(d.scale),
    };
    if cfg.points == 0 {
        return Err(usage("`points` must be at least 1"));
    }
    if cfg.mass_max < cfg.mass_min || (cfg.points > 1 && cfg.mass_max == cfg.mass_min) {
        return Err(usage(format!(
            "`mass_min` = {} conflicts with `mass_max` = {}",
            cfg.mass_min, cfg.mass_max
        )));
    }
    Ok(cfg)
}

fn evolve_config(raw: &RawConfig) -> CliResult<EvolveConfig> {
    let times = raw.t.clone().map(|t| t.0).unwrap_or_else(|| vec![0.0]);
    for &t in &times {
        if !(t.is_finite() && t >= 0.0) {
            return Err(usage(format!("`t` must be non-negative, got {t}")));
        }
    }
    let z_range = match (raw.z_min, raw.z_max) {
        (None, None) => None,
        (Some(lo), Some(hi)) => {
            let (lo, hi) = (finite("z_min", lo)?, finite("z_max", hi)?);
            if lo >= hi {
                return Err(usage(format!("`z_min` = {lo} conflicts with `z_max` = {hi}")));
            }
            Some((lo, hi))
        }
        _ => return Err(usage("`z_min` and `z_max` must be given together")),
    };
    let nz = raw.nz.unwrap_or(201);
    if nz < 2 {
        return Err(usage("`nz` must be at least 2"));
    }
    let d = TableParams::default();
    Ok(EvolveConfig {
        mass_amu: positive("mass", raw.mass.unwrap_or(1.0))?,
        sigma0: positive("sigma0", raw.sigma0.unwrap_or(d.sigma0))?,
        u: finite("u", raw.u.unwrap_or(d.u))?,
        times,
        z_range,
        nz,
    })
}

/// Validates merged settings for `kind`. `env_out_dir` is used when neither
/// source names an output directory.
pub fn resolve(kind: ScenarioKind, raw: RawConfig, env_out_dir: Option<PathBuf>) -> CliResult<RunConfig> {
    if let Some(s) = raw.scenario {
        if s != kind {
            return Err(usage(format!("`scenario` = {s} conflicts with subcommand {kind}")));
        }
    }
    if kind == ScenarioKind::Oracle && raw.target.is_none() {
        return Err(usage(
            "`target` is required for oracle (table1, table2 or arrival-sweep)",
        ));
    }
    for key in raw.present_keys() {
        if !applies(kind, raw.target, key) {
            let what = match raw.target {
                Some(t) if kind == ScenarioKind::Oracle => format!("oracle target {t}"),
                _ => kind.to_string(),
            };
            return Err(usage(format!("`{key}` does not apply to {what}")));
        }
    }

    let mut constants = PhysicalConstants::default();
    if let Some(g) = raw.g {
        constants.g_accel = positive("g", g)?;
    }
    if let Some(h) = raw.hbar {
        constants.hbar = positive("hbar", h)?;
    }
    if let Some(a) = raw.amu {
        constants.amu = positive("amu", a)?;
    }

    let scenario = match kind {
        ScenarioKind::Table1 => ScenarioConfig::Table1(table_config(&raw)?),
        ScenarioKind::Table2 => ScenarioConfig::Table2(table_config(&raw)?),
        ScenarioKind::ArrivalSweep => ScenarioConfig::ArrivalSweep(sweep_config(&raw)?),
        ScenarioKind::Evolve => ScenarioConfig::Evolve(evolve_config(&raw)?),
        ScenarioKind::Oracle => {
            let n_samples = raw.n_samples.unwrap_or(DEFAULT_SAMPLES);
            if n_samples == 0 {
                return Err(usage("`n_samples` must be at least 1"));
            }
            let job = match raw.target.expect("checked above") {
                OracleTarget::Table1 => OracleJob::Table1(table_config(&raw)?),
                OracleTarget::Table2 => OracleJob::Table2(table_config(&raw)?),
                OracleTarget::ArrivalSweep => OracleJob::ArrivalSweep(sweep_config(&raw)?),
            };
            ScenarioConfig::Oracle(OracleConfig { job, n_samples })
        }
    };

    let default_format = match kind {
        ScenarioKind::Table1 | ScenarioKind::Table2 | ScenarioKind::Oracle => OutputFormat::Text,
        ScenarioKind::ArrivalSweep | ScenarioKind::Evolve => OutputFormat::Csv,
    };
    let format = raw.format.unwrap_or(default_format);
    if format == OutputFormat::Text && matches!(kind, ScenarioKind::ArrivalSweep | ScenarioKind::Evolve) {
        return Err(usage(format!("{kind} writes csv or json, not text")));
    }

    Ok(RunConfig {
        constants,
        scenario,
        format,
        out_dir: raw.out_dir.or(env_out_dir),
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flags(f: impl FnOnce(&mut RawConfig)) -> RawConfig {
        let mut r = RawConfig::default();
        f(&mut r);
        r
    }

    #[test]
    fn table1_defaults() {
        let cfg = resolve(ScenarioKind::Table1, RawConfig::default(), None).unwrap();
        let ScenarioConfig::Table1(t) = &cfg.scenario else {
            panic!("wrong scenario")
        };
        assert_eq!(t.params.u, 1e3);
        assert_eq!(t.params.sigma0, 1e-3);
        assert_eq!(t.params.epsilon, t.params.sigma0);
        assert_eq!(t.variant, Variant::Exact);
        assert_eq!(t.masses.len(), 9);
        assert_eq!(cfg.constants, PhysicalConstants::default());
        assert_eq!(cfg.format, OutputFormat::Text);
        assert_eq!(cfg.out_dir, None);
    }

    #[test]
    fn parses_file() {
        let raw = parse_config_text(
            "# comment\n\nscenario = table2\nu=500\n sigma0 = 2e-3 \nvariant = midpoint\nformat = json\n",
        )
        .unwrap();
        assert_eq!(raw.scenario, Some(ScenarioKind::Table2));
        assert_eq!(raw.u, Some(500.0));
        assert_eq!(raw.sigma0, Some(2e-3));
        assert_eq!(raw.variant, Some(Variant::Midpoint));
        assert_eq!(raw.format, Some(OutputFormat::Json));
        let raw = parse_config_text("mass-min = 3\nZ = 0.5\nt = 0, 1.5,2").unwrap();
        assert_eq!(raw.mass_min, Some(3.0));
        assert_eq!(raw.distance, Some(0.5));
        assert_eq!(raw.t, Some(TimeList(vec![0.0, 1.5, 2.0])));
    }

    #[test]
    fn strict_file_errors_name_the_key() {
        for (text, needle) in [
            ("colour = red", "colour"),
            ("u = fast", "`u`"),
            ("u = 1\nu = 2", "duplicate key `u`"),
            ("u 1", "line 1"),
            ("u =", "`u`"),
            ("variant = approximate", "`variant`"),
        ] {
            let err = parse_config_text(text).unwrap_err().to_string();
            assert!(err.contains(needle), "{text:?}: {err}");
        }
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_text("g = 975\nu = 500").unwrap();
        let cli = flags(|r| r.g = Some(981.0));
        let cfg = resolve(ScenarioKind::Table1, cli.overlay(file), None).unwrap();
        assert_eq!(cfg.constants.g_accel, 981.0);
        let ScenarioConfig::Table1(t) = cfg.scenario else {
            panic!()
        };
        assert_eq!(t.params.u, 500.0);
    }

    #[test]
    fn rejects_non_positive_and_conflicts() {
        let bad = [
            (ScenarioKind::Table1, flags(|r| r.sigma0 = Some(-1.0)), "sigma0"),
            (ScenarioKind::Table2, flags(|r| r.epsilon = Some(0.0)), "epsilon"),
            (ScenarioKind::Table1, flags(|r| r.g = Some(f64::NAN)), "`g`"),
            (ScenarioKind::ArrivalSweep, flags(|r| r.points = Some(0)), "points"),
            (
                ScenarioKind::ArrivalSweep,
                flags(|r| {
                    r.mass_min = Some(10.0);
                    r.mass_max = Some(1.0)
                }),
                "mass_min",
            ),
            (
                ScenarioKind::Table1,
                flags(|r| r.scenario = Some(ScenarioKind::Table2)),
                "scenario",
            ),
            (
                ScenarioKind::Table1,
                flags(|r| r.points = Some(3)),
                "`points` does not apply",
            ),
            (ScenarioKind::Oracle, RawConfig::default(), "target"),
            (
                ScenarioKind::Oracle,
                flags(|r| {
                    r.target = Some(OracleTarget::ArrivalSweep);
                    r.u = Some(1.0)
                }),
                "oracle target arrival-sweep",
            ),
            (
                ScenarioKind::ArrivalSweep,
                flags(|r| r.format = Some(OutputFormat::Text)),
                "text",
            ),
            (ScenarioKind::Evolve, flags(|r| r.z_min = Some(0.0)), "together"),
            (ScenarioKind::Evolve, flags(|r| r.t = Some(TimeList(vec![-1.0]))), "`t`"),
        ];
        for (kind, raw, needle) in bad {
            let err = resolve(kind, raw, None).unwrap_err();
            assert_eq!(err.exit_code(), crate::error::EXIT_USAGE);
            assert!(err.to_string().contains(needle), "{err}");
        }
    }

    #[test]
    fn out_dir_precedence() {
        let env = Some(PathBuf::from("/env"));
        let cfg = resolve(ScenarioKind::Table1, RawConfig::default(), env.clone()).unwrap();
        assert_eq!(cfg.out_dir, env);
        let cfg = resolve(ScenarioKind::Table1, flags(|r| r.out_dir = Some("/flag".into())), env).unwrap();
        assert_eq!(cfg.out_dir, Some(PathBuf::from("/flag")));
    }

    #[test]
    fn mass_lists() {
        let m = parse_mass_list("# species\nH, 1\nC60,720\n").unwrap();
        assert_eq!(m.masses(), &[1.0, 720.0]);
        assert_eq!(m.label(1), "C60");
        let m = parse_mass_list("1\n2.5\n").unwrap();
        assert_eq!(m.label(1), "2.5");
        assert!(parse_mass_list("").is_err());
        assert!(parse_mass_list("2\n1").is_err());
        assert!(parse_mass_list("H, heavy").is_err());
    }

    #[test]
    fn oracle_targets() {
        let cfg = resolve(
            ScenarioKind::Oracle,
            flags(|r| {
                r.target = Some(OracleTarget::ArrivalSweep);
                r.points = Some(3);
                r.n_samples = Some(10);
                r.seed = Some(7)
            }),
            None,
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        let ScenarioConfig::Oracle(o) = cfg.scenario else {
            panic!()
        };
        assert_eq!(o.n_samples, 10);
        assert!(matches!(o.job, OracleJob::ArrivalSweep(s) if s.points == 3));
    }

    #[test]
    fn every_key_parses_from_text() {
        for key in RawConfig::KEYS {
            if let Err(e) = parse_config_text(&format!("{key} = \u{1}")) {
                assert!(!e.to_string().contains("unknown key"), "{key}: {e}");
            }
        }
    }
}
