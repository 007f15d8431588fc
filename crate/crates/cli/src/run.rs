//! The four modes. Everything is computed before anything is written.

use std::path::{Path, PathBuf};

use qubit_lgti::analytic::coherence;
use qubit_lgti::export::report_to_json;
use qubit_lgti::oracle::integrate;
use qubit_lgti::{
    BlochDynamics, BlochVector, DensityMatrix, LgModel, LgQuantity, StepControl, SystemParams,
    Temperature, ViolationReport,
};
use rayon::prelude::*;
use serde_json::json;

use crate::config::{time_grid, Command, FigureId, Format, RunConfig, SweepParam};
use crate::error::CliError;
use crate::output::{csv_field, json_text, numbered, write_all, Artifact, Metadata, Table};

const PROBABILITY_SLACK: f64 = 1e-10;
const BOUND_SLACK: f64 = 1e-9;

pub fn execute(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    let (artifacts, status) = match command {
        Command::Dynamics => (curves(cfg, Mode::Dynamics)?, Ok(())),
        Command::Lgti => (curves(cfg, Mode::Lgti)?, Ok(())),
        Command::Sweep => sweep(cfg)?,
        Command::Figure { id } => (figure(cfg, id)?, Ok(())),
    };
    write_all(&artifacts)?;
    status
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Dynamics,
    Lgti,
}

fn describe(params: &SystemParams, kind: &str) -> Result<Metadata, CliError> {
    let d = BlochDynamics::new(params)?;
    let mut meta = Metadata::new(kind);
    meta.params(params);
    let mu = d.rates().mu_s;
    meta.regime(d.regime(), (mu.re, mu.im));
    Ok(meta)
}

fn check_probability(p: f64, what: &str, t: f64) -> Result<(), CliError> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p) {
        return Err(CliError::Physics(format!(
            "{what} = {p} outside [0, 1] at t = {t}"
        )));
    }
    Ok(())
}

/// p_g from the closed form and the oracle on `times`, plus coherence.
fn dynamics_table(
    params: &SystemParams,
    times: &[f64],
    control: &StepControl,
) -> Result<Table, CliError> {
    let d = BlochDynamics::new(params)?;
    let t_end = *times.last().expect("at least two samples");
    let traj = integrate(&DensityMatrix::ground(), params, t_end, times, control)?;
    let tol = (10.0 * control.rtol).max(1e-8);
    let mut table = Table::new(&["t", "p_g_analytic", "p_g_oracle", "coherence"]);
    for &t in times {
        let v = d.evolve(&BlochVector::ground(), t)?;
        let p_a = v.ground_probability();
        let p_o = traj
            .at(t)
            .expect("oracle samples every grid time")
            .ground_probability();
        if !((p_a - p_o).abs() <= tol) {
            return Err(CliError::Physics(format!(
                "oracle and closed form differ by {:e} at t = {t} (tolerance {tol:e})",
                (p_a - p_o).abs()
            )));
        }
        check_probability(p_a, "p_g", t)?;
        check_probability(p_o, "oracle p_g", t)?;
        let c = coherence(&DensityMatrix::from_bloch(&v))?;
        table.rows.push(vec![t, p_a, p_o, c]);
    }
    Ok(table)
}

/// K±, ℱ, p_g and coherence on `times`, K± scaled by ξ².
fn lgti_table(model: &LgModel, times: &[f64], xi: f64) -> Result<Table, CliError> {
    let rows: Vec<Vec<f64>> = times
        .par_iter()
        .map(|&t| -> Result<Vec<f64>, CliError> {
            let (kp, km) = if xi == 1.0 {
                model.k_pm(t)?
            } else {
                model.k_pm_weak(t, xi)?
            };
            let f = model.f_function(t)?;
            let v = model.dynamics().evolve(&BlochVector::ground(), t)?;
            let p_g = v.ground_probability();
            check_probability(p_g, "p_g", t)?;
            for (name, k) in [("K+", kp), ("K-", km)] {
                if k > 1.5 + BOUND_SLACK {
                    return Err(CliError::Physics(format!(
                        "{name} = {k} exceeds 3/2 at t = {t}"
                    )));
                }
            }
            Ok(vec![t, kp, km, f, p_g, v.coherence()])
        })
        .collect::<Result<_, _>>()?;
    let mut table = Table::new(&["t", "k_plus", "k_minus", "f", "p_g", "coherence"]);
    table.rows = rows;
    Ok(table)
}

fn scan(
    model: &LgModel,
    cfg: &RunConfig,
    which: LgQuantity,
    xi: f64,
) -> Result<ViolationReport, CliError> {
    Ok(model.scan_violation((0.0, cfg.t_max), cfg.points, which, xi)?)
}

fn report_metadata(meta: &mut Metadata, r: &ViolationReport) {
    meta.push("which", json!(r.which.as_str()));
    meta.float("k_max", r.k_max);
    meta.float("t_at_max", r.t_at_max);
    meta.float("total_violation_time", r.total_violation_time);
    meta.push("violation_intervals", json!(r.violation_intervals.len()));
}

fn render(
    format: Format,
    meta: &Metadata,
    table: &Table,
    report: Option<&ViolationReport>,
) -> String {
    match format {
        Format::Csv => table.to_csv(meta),
        Format::Json => {
            let mut obj = json!({ "metadata": meta.to_json(), "series": table.to_json() });
            if let Some(r) = report {
                obj["report"] = report_to_json(r);
            }
            json_text(&obj)
        }
    }
}

fn curve(
    cfg: &RunConfig,
    mode: Mode,
    point: Option<(SweepParam, f64)>,
) -> Result<String, CliError> {
    let params = cfg.params(point)?;
    let times = cfg.times();
    match mode {
        Mode::Dynamics => {
            let meta = describe(&params, "dynamics")?;
            let table = dynamics_table(&params, &times, &cfg.control)?;
            Ok(render(cfg.format, &meta, &table, None))
        }
        Mode::Lgti => {
            let xi = cfg.xi_at(point)?;
            let model = LgModel::new(&params)?;
            let mut meta = describe(&params, "lgti")?;
            meta.float("xi", xi);
            let report = scan(&model, cfg, cfg.which, xi)?;
            report_metadata(&mut meta, &report);
            let table = lgti_table(&model, &times, xi)?;
            Ok(render(cfg.format, &meta, &table, Some(&report)))
        }
    }
}

/// Single run, or one curve per sweep value.
fn curves(cfg: &RunConfig, mode: Mode) -> Result<Vec<Artifact>, CliError> {
    let points: Vec<Option<(SweepParam, f64)>> = match &cfg.sweep {
        Some(s) if !s.values.is_empty() => {
            if mode == Mode::Dynamics && s.param == SweepParam::Xi {
                return Err(CliError::Config("dynamics does not depend on xi".into()));
            }
            s.values.iter().map(|&v| Some((s.param, v))).collect()
        }
        _ => vec![None],
    };
    let bodies: Vec<String> = points
        .par_iter()
        .map(|&p| curve(cfg, mode, p))
        .collect::<Result<_, _>>()?;
    let single = bodies.len() == 1;
    Ok(bodies
        .into_iter()
        .enumerate()
        .map(|(i, body)| Artifact {
            path: cfg
                .out
                .as_ref()
                .map(|p| if single { p.clone() } else { numbered(p, i) }),
            body,
        })
        .collect())
}

struct SweepRow {
    value: f64,
    outcome: Result<(ViolationReport, &'static str), CliError>,
}

fn sweep_point(
    cfg: &RunConfig,
    param: SweepParam,
    value: f64,
) -> Result<(ViolationReport, &'static str), CliError> {
    let point = Some((param, value));
    let params = cfg.params(point)?;
    let xi = cfg.xi_at(point)?;
    let model = LgModel::new(&params)?;
    let report = scan(&model, cfg, cfg.which, xi)?;
    if report.k_max > 1.5 + BOUND_SLACK && report.which != LgQuantity::K3 {
        return Err(CliError::Physics(format!(
            "k_max = {} exceeds 3/2",
            report.k_max
        )));
    }
    Ok((report, model.dynamics().regime().as_str()))
}

/// Per-value reports; a failed row is reported in place and only an
/// all-failed sweep is an error.
fn sweep(cfg: &RunConfig) -> Result<(Vec<Artifact>, Result<(), CliError>), CliError> {
    let Some(spec) = cfg.sweep.as_ref().filter(|s| !s.values.is_empty()) else {
        return Err(CliError::Config(
            "sweep needs sweep_param and at least one value".into(),
        ));
    };
    let rows: Vec<SweepRow> = spec
        .values
        .par_iter()
        .map(|&value| SweepRow {
            value,
            outcome: sweep_point(cfg, spec.param, value),
        })
        .collect();

    let mut meta = Metadata::new("sweep");
    meta.push("sweep_param", json!(spec.param.as_str()));
    meta.push("which", json!(cfg.which.as_str()));
    let base = cfg.params(None).ok();
    if let Some(p) = base {
        meta.params(&p);
    }
    if spec.param != SweepParam::Xi {
        meta.float("xi", cfg.xi);
    }

    let body = match cfg.format {
        Format::Csv => {
            let mut s = meta.csv_header();
            s.push_str(&format!(
                "{},k_max,t_at_max,total_violation_time,violation_intervals,regime,error\n",
                spec.param.as_str()
            ));
            for row in &rows {
                let value = qubit_lgti::export::format_float(row.value);
                match &row.outcome {
                    Ok((r, regime)) => s.push_str(&format!(
                        "{value},{},{},{},{},{regime},\n",
                        qubit_lgti::export::format_float(r.k_max),
                        qubit_lgti::export::format_float(r.t_at_max),
                        qubit_lgti::export::format_float(r.total_violation_time),
                        r.violation_intervals.len()
                    )),
                    Err(e) => s.push_str(&format!("{value},,,,,,{}\n", csv_field(&e.to_string()))),
                }
            }
            s
        }
        Format::Json => {
            let entries: Vec<serde_json::Value> = rows
                .iter()
                .map(|row| match &row.outcome {
                    Ok((r, regime)) => json!({
                        "value": row.value,
                        "regime": regime,
                        "report": report_to_json(r),
                        "error": null,
                    }),
                    Err(e) => json!({ "value": row.value, "report": null, "error": e.to_string() }),
                })
                .collect();
            json_text(&json!({ "metadata": meta.to_json(), "rows": entries }))
        }
    };

    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    for row in &rows {
        if let Err(e) = &row.outcome {
            log::warn!("{} = {}: {e}", spec.param.as_str(), row.value);
        }
    }
    let status = if failed == rows.len() {
        let first = rows
            .into_iter()
            .find_map(|r| r.outcome.err())
            .expect("all rows failed");
        Err(first)
    } else {
        Ok(())
    };
    Ok((
        vec![Artifact {
            path: cfg.out.clone(),
            body,
        }],
        status,
    ))
}

/// A preset curve: its label and parameters at Ω = 1.
struct Preset {
    label: String,
    params: SystemParams,
}

fn preset(
    label: String,
    ratio_r: f64,
    temperature: Temperature,
    s: f64,
) -> Result<Preset, CliError> {
    Ok(Preset {
        label,
        params: SystemParams::from_ratio(0.5, 1.0, ratio_r, temperature, s)?,
    })
}

fn figure_presets(id: FigureId) -> Result<Vec<Preset>, CliError> {
    let beta10 = Temperature::Beta(10.0);
    match id {
        FigureId::Fig2 | FigureId::Fig3 => [0.0, 0.05, 5.0]
            .into_iter()
            .map(|r| preset(format!("ratio_r_{r}"), r, beta10, 0.0))
            .collect(),
        FigureId::Fig4 => Ok(vec![preset("ratio_r_0.005".into(), 0.005, beta10, 0.0)?]),
        FigureId::Fig5 => [10.0, 1.0, 1e-3]
            .into_iter()
            .map(|b| preset(format!("beta_{b}"), 0.005, Temperature::Beta(b), 0.0))
            .collect(),
        FigureId::Fig6 => [0.0, 1.0, 3.5]
            .into_iter()
            .map(|s| preset(format!("squeeze_s_{s}"), 0.05, Temperature::Beta(100.0), s))
            .collect(),
        FigureId::Fig7 => [0.0, 0.05]
            .into_iter()
            .map(|r| preset(format!("ratio_r_{r}"), r, Temperature::Beta(5.0), 0.0))
            .collect(),
    }
}

pub const FIG7_XI_COUNT: usize = 10;

fn fig7_xi() -> Vec<f64> {
    (1..=FIG7_XI_COUNT)
        .map(|k| k as f64 / FIG7_XI_COUNT as f64)
        .collect()
}

fn figure_curve(
    cfg: &RunConfig,
    id: FigureId,
    dir: &Path,
    p: &Preset,
) -> Result<Vec<Artifact>, CliError> {
    let name =
        |suffix: &str| -> PathBuf { dir.join(format!("{}_{}{suffix}", id.as_str(), p.label)) };
    let times = time_grid(cfg.t_max, cfg.points);
    let model = LgModel::new(&p.params)?;
    let mut meta = describe(&p.params, id.as_str())?;
    let mut out = Vec::new();

    if id == FigureId::Fig7 {
        let xis = fig7_xi();
        let mut surface = Table::new(&["t", "xi", "k_plus"]);
        let mut reports = Vec::new();
        for &xi in &xis {
            let report = scan(&model, cfg, LgQuantity::KPlus, xi)?;
            reports.push(json!({ "xi": xi, "report": report_to_json(&report) }));
        }
        let rows: Vec<Vec<Vec<f64>>> = times
            .par_iter()
            .map(|&t| -> Result<Vec<Vec<f64>>, CliError> {
                xis.iter()
                    .map(|&xi| Ok(vec![t, xi, model.k_pm_weak(t, xi)?.0]))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        surface.rows = rows.into_iter().flatten().collect();
        out.push(Artifact {
            path: Some(name(".csv")),
            body: surface.to_csv(&meta),
        });
        let body = json_text(&json!({ "metadata": meta.to_json(), "reports": reports }));
        out.push(Artifact {
            path: Some(name(".json")),
            body,
        });
        return Ok(out);
    }

    let reports = [
        scan(&model, cfg, LgQuantity::KPlus, 1.0)?,
        scan(&model, cfg, LgQuantity::KMinus, 1.0)?,
    ];
    let table = lgti_table(&model, &times, 1.0)?;
    if id == FigureId::Fig2 {
        let dynamics = dynamics_table(&p.params, &times, &cfg.control)?;
        let mut dyn_meta = describe(&p.params, id.as_str())?;
        dyn_meta.push("series", json!("dynamics"));
        out.push(Artifact {
            path: Some(name("_dynamics.csv")),
            body: dynamics.to_csv(&dyn_meta),
        });
    }
    meta.push("series", json!("lgti"));
    out.push(Artifact {
        path: Some(name(".csv")),
        body: table.to_csv(&meta),
    });
    let body = json_text(&json!({
        "metadata": meta.to_json(),
        "reports": reports.iter().map(report_to_json).collect::<Vec<_>>(),
    }));
    out.push(Artifact {
        path: Some(name(".json")),
        body,
    });
    Ok(out)
}

/// Preset curves for one figure, always as CSV series plus JSON reports.
fn figure(cfg: &RunConfig, id: FigureId) -> Result<Vec<Artifact>, CliError> {
    let dir = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(id.as_str()));
    let presets = figure_presets(id)?;
    let per_curve: Vec<Vec<Artifact>> = presets
        .par_iter()
        .map(|p| figure_curve(cfg, id, &dir, p))
        .collect::<Result<_, _>>()?;
    Ok(per_curve.into_iter().flatten().collect())
}
