//! Scenario dispatch: computes each scenario and renders its artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use qfall_core::arrival::{cutoff_time, mass_sweep_tau, mean_arrival_time, DetectorConfig, FallParams};
use qfall_core::detection::{self, limit_probability, ProbabilityTable, Scenario, Variant};
use qfall_core::kernel::Evolution;
use qfall_core::oracle::{classical_detection_probability, classical_mean_arrival, sample_ensemble};
use qfall_core::{PhysicalConstants, WavePacketSpec};
use serde_json::{json, Value};

use crate::config::{
    EvolveConfig, OracleConfig, OracleJob, OutputFormat, RunConfig, ScenarioConfig, SweepConfig, TableConfig,
};
use crate::error::{CliError, CliResult};
use crate::output::{Cell, Column, Report};
use crate::plot::{emit_plot, Asymptote, PlotStyle};

/// One output file, named relative to the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
}

fn constants_json(c: &PhysicalConstants) -> Value {
    json!({ "hbar": c.hbar, "g_accel": c.g_accel, "amu": c.amu })
}

fn table_title(scenario: Scenario) -> &'static str {
    match scenario {
        Scenario::ProjectionPoint => "Detection probability at the launch point when the centre returns (t = 2u/g)",
        Scenario::TurningPoint => "Detection probability at the apex of the centre's trajectory (t = u/g)",
    }
}

pub fn table_report(table: &ProbabilityTable, variant: Variant, constants: &PhysicalConstants) -> Report {
    let mut columns = vec![
        Column::sci("species"),
        Column::sci("mass_amu"),
        Column::sci("window_center_cm"),
        Column::sci("t_eval_s"),
        Column::sci("sigma_t_cm"),
    ];
    let (exact, midpoint) = match variant {
        Variant::Exact => (true, false),
        Variant::Midpoint => (false, true),
        Variant::Both => (true, true),
    };
    if exact {
        columns.push(Column::fixed("p_exact", 4));
    }
    if midpoint {
        columns.push(Column::fixed("p_midpoint", 4));
    }
    let mut r = Report::new(table_title(table.scenario), columns);
    r.meta.insert("scenario".into(), json!(table.scenario));
    r.meta.insert("variant".into(), json!(variant));
    r.meta.insert("params".into(), json!(table.params));
    r.meta.insert("constants".into(), constants_json(constants));
    r.meta.insert(
        "large_mass_limit".into(),
        json!({
            "exact": limit_probability(&table.params, Variant::Exact),
            "midpoint": limit_probability(&table.params, Variant::Midpoint),
        }),
    );
    for row in &table.rows {
        let mut cells = vec![
            Cell::Text(row.species.clone()),
            Cell::Real(row.mass_amu),
            Cell::Real(row.window_center),
            Cell::Real(row.t_eval),
            Cell::Real(row.probability.sigma_at_t),
        ];
        if exact {
            cells.push(Cell::Real(row.probability.exact));
        }
        if midpoint {
            cells.push(Cell::Real(row.probability.midpoint));
        }
        r.push(cells);
    }
    r
}

fn compute_table(scenario: Scenario, cfg: &TableConfig, constants: &PhysicalConstants) -> CliResult<ProbabilityTable> {
    Ok(match scenario {
        Scenario::ProjectionPoint => detection::table1(&cfg.masses, cfg.params, constants)?,
        Scenario::TurningPoint => detection::table2(&cfg.masses, cfg.params, constants)?,
    })
}

/// Classical fall time `sqrt(2Z/g)` for equal inertial and gravitational mass.
pub fn classical_asymptote(fall: &FallParams, constants: &PhysicalConstants) -> f64 {
    (2.0 * fall.distance / constants.g_accel).sqrt()
}

fn sweep_artifacts(cfg: &SweepConfig, format: OutputFormat, constants: &PhysicalConstants) -> CliResult<Vec<Artifact>> {
    let masses = cfg.masses()?;
    let rows = mass_sweep_tau(&masses, cfg.fall, constants)?;
    let meta = json!({
        "sigma0": cfg.fall.sigma0,
        "Z": cfg.fall.distance,
        "scale": cfg.scale.as_str(),
        "constants": constants_json(constants),
    });

    let mut data = Report::new(
        "Mean arrival time from the probability current",
        vec![Column::sci("mass_amu"), Column::sci("tau_s")],
    );
    data.meta.insert("geometry".into(), meta.clone());
    for r in &rows {
        data.push(vec![Cell::Real(r.mass_amu), Cell::Real(r.tau)]);
    }

    let tau_c = classical_asymptote(&cfg.fall, constants);
    let mut asym = Report::new(
        "Classical fall time sqrt(2Z/g)",
        vec![Column::sci("mass_amu"), Column::sci("tau_classical_s")],
    );
    asym.meta.insert("geometry".into(), meta);
    for m in [cfg.mass_min, cfg.mass_max] {
        asym.push(vec![Cell::Real(m), Cell::Real(tau_c)]);
    }

    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.mass_amu, r.tau)).collect();
    let style = PlotStyle {
        log_x: cfg.scale == crate::config::Scale::Log,
        ..PlotStyle::default()
    };
    let svg = emit_plot(
        &points,
        Some(&Asymptote {
            y: tau_c,
            label: format!("classical sqrt(2Z/g) = {tau_c:.4e} s"),
        }),
        &style,
    )?;

    let ext = format.extension();
    Ok(vec![
        Artifact {
            file_name: format!("arrival_sweep.{ext}"),
            contents: data.render(format)?,
        },
        Artifact {
            file_name: format!("arrival_sweep_asymptote.{ext}"),
            contents: asym.render(format)?,
        },
        Artifact {
            file_name: "arrival_sweep.svg".into(),
            contents: svg,
        },
    ])
}

pub fn evolve_report(cfg: &EvolveConfig, constants: &PhysicalConstants) -> CliResult<Report> {
    let spec = WavePacketSpec::from_amu(cfg.mass_amu, cfg.sigma0, cfg.u, constants)?;
    let evo = Evolution::new(&spec, constants);
    let (z_lo, z_hi) = cfg.z_range.unwrap_or_else(|| {
        cfg.times
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &t| {
                let (c, s) = (evo.center(t), evo.sigma(t));
                (lo.min(c - 6.0 * s), hi.max(c + 6.0 * s))
            })
    });
    let mut r = Report::new(
        "Density and probability current",
        vec![
            Column::sci("t_s"),
            Column::sci("z_cm"),
            Column::sci("rho_per_cm"),
            Column::sci("v_cm_per_s"),
            Column::sci("j_per_s"),
        ],
    );
    r.meta.insert(
        "packet".into(),
        json!({ "mass_amu": cfg.mass_amu, "sigma0": cfg.sigma0, "u": cfg.u }),
    );
    r.meta.insert("constants".into(), constants_json(constants));
    let n = (cfg.nz - 1) as f64;
    for &t in &cfg.times {
        for i in 0..cfg.nz {
            let z = if i == cfg.nz - 1 {
                z_hi
            } else {
                z_lo + (z_hi - z_lo) * i as f64 / n
            };
            let s = evo.sample(z, t);
            r.push(vec![
                Cell::Real(t),
                Cell::Real(z),
                Cell::Real(s.rho),
                Cell::Real(s.v),
                Cell::Real(s.j),
            ]);
        }
    }
    Ok(r)
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn oracle_table_report(
    scenario: Scenario,
    cfg: &TableConfig,
    n: usize,
    seed: u64,
    constants: &PhysicalConstants,
) -> CliResult<Report> {
    let quantum = compute_table(scenario, cfg, constants)?;
    let mut r = Report::new(
        format!("Classical ensemble against quantum: {}", table_title(scenario)),
        vec![
            Column::sci("species"),
            Column::sci("mass_amu"),
            Column::fixed("p_quantum", 4),
            Column::fixed("p_classical", 4),
            Column::sci("std_error"),
            Column::fixed("z_score", 2),
            Column::sci("sigma_t_cm"),
            Column::sci("classical_std_cm"),
        ],
    );
    r.meta.insert("scenario".into(), json!(scenario));
    r.meta.insert("params".into(), json!(cfg.params));
    r.meta.insert("n_samples".into(), json!(n));
    r.meta.insert("seed".into(), json!(seed));
    r.meta.insert("constants".into(), constants_json(constants));
    for row in &quantum.rows {
        let spec = WavePacketSpec::from_amu(row.mass_amu, cfg.params.sigma0, cfg.params.u, constants)?;
        let window = scenario.window(&spec, constants, cfg.params.epsilon)?;
        let ens = sample_ensemble(&spec, constants, n, seed)?;
        let est = classical_detection_probability(&ens, constants, &window)?;
        let (_, var) = ens.position_moments(constants, window.t_eval);
        r.push(vec![
            Cell::Text(row.species.clone()),
            Cell::Real(row.mass_amu),
            Cell::Real(row.probability.exact),
            Cell::Real(est.value),
            Cell::Real(est.std_error),
            Cell::Real(z_score(est.value - row.probability.exact, est.std_error)),
            Cell::Real(row.probability.sigma_at_t),
            Cell::Real(var.sqrt()),
        ]);
    }
    Ok(r)
}

fn oracle_arrival_report(cfg: &SweepConfig, n: usize, seed: u64, constants: &PhysicalConstants) -> CliResult<Report> {
    let detector = DetectorConfig::new(cfg.fall.distance)?;
    let mut r = Report::new(
        "Classical first-passage time against the probability-current mean",
        vec![
            Column::sci("mass_amu"),
            Column::sci("tau_quantum_s"),
            Column::sci("tau_classical_s"),
            Column::sci("std_error_s"),
            Column::fixed("z_score", 2),
            Column::sci("included"),
            Column::sci("excluded"),
        ],
    );
    r.meta.insert("sigma0".into(), json!(cfg.fall.sigma0));
    r.meta.insert("Z".into(), json!(cfg.fall.distance));
    r.meta.insert("n_samples".into(), json!(n));
    r.meta.insert("seed".into(), json!(seed));
    r.meta.insert("constants".into(), constants_json(constants));
    for &m in cfg.masses()?.masses() {
        let spec = WavePacketSpec::from_amu(m, cfg.fall.sigma0, 0.0, constants)?;
        let quantum = mean_arrival_time(&spec, constants, &detector)?;
        let cutoff = cutoff_time(&spec, constants, &detector)?;
        let ens = sample_ensemble(&spec, constants, n, seed)?;
        let c = classical_mean_arrival(&ens, constants, cfg.fall.distance, Some(cutoff.time))?;
        r.push(vec![
            Cell::Real(m),
            Cell::Real(quantum.mean_tau),
            Cell::Real(c.mean),
            Cell::Real(c.std_error),
            Cell::Real(z_score(c.mean - quantum.mean_tau, c.std_error)),
            Cell::Int(c.included as u64),
            Cell::Int(c.excluded as u64),
        ]);
    }
    Ok(r)
}

fn oracle_artifact(cfg: &OracleConfig, run: &RunConfig) -> CliResult<Artifact> {
    let c = &run.constants;
    let (name, report) = match &cfg.job {
        OracleJob::Table1(t) => (
            "oracle_table1",
            oracle_table_report(Scenario::ProjectionPoint, t, cfg.n_samples, run.seed, c)?,
        ),
        OracleJob::Table2(t) => (
            "oracle_table2",
            oracle_table_report(Scenario::TurningPoint, t, cfg.n_samples, run.seed, c)?,
        ),
        OracleJob::ArrivalSweep(s) => (
            "oracle_arrival_sweep",
            oracle_arrival_report(s, cfg.n_samples, run.seed, c)?,
        ),
    };
    Ok(Artifact {
        file_name: format!("{name}.{}", run.format.extension()),
        contents: report.render(run.format)?,
    })
}

/// Computes the scenario and renders every output file in memory.
pub fn build_artifacts(run: &RunConfig) -> CliResult<Vec<Artifact>> {
    let c = &run.constants;
    let ext = run.format.extension();
    let single = |name: &str, report: Report| -> CliResult<Vec<Artifact>> {
        Ok(vec![Artifact {
            file_name: format!("{name}.{ext}"),
            contents: report.render(run.format)?,
        }])
    };
    match &run.scenario {
        ScenarioConfig::Table1(t) => single(
            "table1",
            table_report(&compute_table(Scenario::ProjectionPoint, t, c)?, t.variant, c),
        ),
        ScenarioConfig::Table2(t) => single(
            "table2",
            table_report(&compute_table(Scenario::TurningPoint, t, c)?, t.variant, c),
        ),
        ScenarioConfig::ArrivalSweep(s) => sweep_artifacts(s, run.format, c),
        ScenarioConfig::Evolve(e) => single("evolve", evolve_report(e, c)?),
        ScenarioConfig::Oracle(o) => Ok(vec![oracle_artifact(o, run)?]),
    }
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> CliResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(&a.file_name);
            fs::write(&path, &a.contents).map_err(|e| CliError::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

/// Runs the scenario. With an output directory every artifact is written
/// there and the paths are returned; otherwise a single-file scenario goes
/// to `stdout`, and the arrival sweep (several files) uses the current
/// directory.
pub fn run(config: &RunConfig, stdout: &mut dyn Write) -> CliResult<Vec<PathBuf>> {
    let artifacts = build_artifacts(config)?;
    match (&config.out_dir, artifacts.as_slice()) {
        (Some(dir), _) => write_artifacts(dir, &artifacts),
        (None, [only]) => {
            stdout
                .write_all(only.contents.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io("<stdout>", e))?;
            Ok(Vec::new())
        }
        (None, _) => write_artifacts(Path::new("."), &artifacts),
    }
}
