//! Execute one [`RunConfig`] and write its report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hardy_core::discretization::{BoundaryCondition, DiscreteForms};
use hardy_core::evolution::{self, SweepClass};
use hardy_core::hardy::{self, HardyReport};
use hardy_core::io::{fmt17, write_csv};
use hardy_core::linalg::{EigenOptions, RESIDUAL_TOL};
use hardy_core::spectrum::{self, relative_residual, Classification};
use hardy_core::weights::{self, Family};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{require, Command, InitialData, ResolvedGrid, RunConfig};
use crate::error::CliError;

/// Default output directory when neither the command line nor the config
/// names one.
pub const DEFAULT_OUTPUT_DIR: &str = "hardy-lab-out";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Invariant {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Invariant {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Invariant {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Inputs {
    pub weight: hardy_core::WeightSpec,
    pub grid: Option<ResolvedGrid>,
    pub params: Value,
    pub seed: u64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: &'static str,
    pub inputs: Inputs,
    pub outputs: Value,
    pub tolerances: BTreeMap<String, f64>,
    pub invariants: Vec<Invariant>,
    pub passed: bool,
    pub timestamp: String,
}

pub struct Table {
    pub file: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

struct Outcome {
    params: Value,
    outputs: Value,
    tolerances: BTreeMap<String, f64>,
    invariants: Vec<Invariant>,
    tables: Vec<Table>,
    forms: Option<DiscreteForms>,
}

impl Outcome {
    fn new(params: Value) -> Self {
        Outcome {
            params,
            outputs: Value::Null,
            tolerances: BTreeMap::new(),
            invariants: Vec::new(),
            tables: Vec::new(),
            forms: None,
        }
    }
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

pub fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

/// Write `report` as pretty JSON followed by a newline.
pub fn write_json<T: Serialize>(path: &Path, report: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| CliError::Solver(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Result of a run whose invariants were evaluated; `passed` is false when
/// any invariant failed.
pub struct RunResult {
    pub report: Report,
    pub output_dir: PathBuf,
}

/// Run `config`, writing `report.json` and the command's CSV files into
/// `output_dir` (or the config's own, or [`DEFAULT_OUTPUT_DIR`]).
pub fn run(config: &RunConfig, output_dir: Option<&Path>) -> Result<RunResult, CliError> {
    config.weight.validate()?;
    let dir = output_dir
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    let seed = config.seed.unwrap_or(EigenOptions::default().seed);
    let opts = EigenOptions {
        seed,
        ..EigenOptions::default()
    };
    let grid = match &config.grid {
        Some(g) => Some(g.resolve(config.weight.dim)?),
        None => None,
    };
    let outcome = match config.command {
        Command::CheckWeight => check_weight(config)?,
        Command::HardyConstant => hardy_constant(config, &opts)?,
        Command::CCurve => c_curve(config)?,
        Command::Spectrum => spectrum_cmd(config, &opts)?,
        Command::BlowupWitness => blowup_witness(config, &opts)?,
        Command::Dichotomy => dichotomy(config, &opts)?,
        Command::Evolve => evolve(config)?,
        Command::BlowupSweep => blowup_sweep(config)?,
    };
    std::fs::create_dir_all(&dir)?;
    for table in &outcome.tables {
        write_csv(&dir.join(table.file), &table.header, &table.rows)?;
    }
    if let Some(forms) = &outcome.forms {
        forms.export_triplets(&dir.join("forms"))?;
    }
    let passed = outcome.invariants.iter().all(|i| i.passed);
    let report = Report {
        command: config.command.name(),
        inputs: Inputs {
            weight: config.weight,
            grid,
            params: outcome.params,
            seed,
        },
        outputs: outcome.outputs,
        tolerances: outcome.tolerances,
        invariants: outcome.invariants,
        passed,
        timestamp: timestamp(),
    };
    write_json(&dir.join("report.json"), &report)?;
    Ok(RunResult { report, output_dir: dir })
}

/// [`run`] followed by the exit-status mapping: failed invariants become
/// [`CliError::Assertion`].
pub fn run_checked(config: &RunConfig, output_dir: Option<&Path>) -> Result<RunResult, CliError> {
    let result = run(config, output_dir)?;
    let failed: Vec<String> = result
        .report
        .invariants
        .iter()
        .filter(|i| !i.passed)
        .map(|i| format!("{}: {}", i.name, i.detail))
        .collect();
    if failed.is_empty() {
        Ok(result)
    } else {
        Err(CliError::Assertion(failed))
    }
}

fn check_weight(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = &cfg.weight;
    let alpha = require(cfg.params.alpha, "alpha", cfg.command)?;
    let eps = require(cfg.params.eps, "eps", cfg.command)?;
    let mut out = Outcome::new(json!({ "alpha": alpha, "eps": eps, "r_scan": {"lo": 1e-6, "hi": 1e6, "count": 2001} }));
    let h3 = weights::check_h3(spec, alpha, eps, &weights::default_scan())?;
    let class = if spec.family == Family::ExpPoly {
        Some(to_value(&weights::classify_exp_poly(spec.gamma, spec.delta, spec.m, spec.k2, alpha)?))
    } else {
        None
    };
    let k2_h6 = weights::k2_from_h6(spec)
        .map(|v| json!(v))
        .unwrap_or_else(|e| json!(e.to_string()));
    out.outputs = json!({ "h3": to_value(&h3), "exp_poly_class": class, "k2_from_h6": k2_h6 });
    out.tolerances.insert("h3".into(), h3.tolerance);
    out.invariants.push(Invariant::new(
        "h3_holds",
        h3.holds,
        format!("max violation {} at r = {}", fmt17(h3.max_violation), fmt17(h3.witness_r)),
    ));
    let rows = weights::log_scan(1e-3, 10.0, 101)
        .into_iter()
        .map(|r| {
            let mu = weights::eval_weight(spec, r).map(fmt17).unwrap_or_else(|_| "nan".into());
            let drift = weights::eval_log_drift(spec, r).map(fmt17).unwrap_or_else(|_| "nan".into());
            vec![fmt17(r), mu, drift, fmt17(weights::h3_excess(spec, alpha, eps, r))]
        })
        .collect();
    out.tables.push(Table {
        file: "weight.csv",
        header: vec!["r", "mu", "log_drift", "h3_excess"],
        rows,
    });
    Ok(out)
}

fn history_table(report: &HardyReport) -> Table {
    Table {
        file: "history.csv",
        header: vec!["n", "r1", "c_star", "residual"],
        rows: report
            .refinement_history
            .iter()
            .map(|e| vec![e.n.to_string(), fmt17(e.r1), fmt17(e.c_star), fmt17(e.residual)])
            .collect(),
    }
}

fn hardy_constant(cfg: &RunConfig, opts: &EigenOptions) -> Result<Outcome, CliError> {
    let spec = &cfg.weight;
    let grid_cfg = cfg.grid_config()?;
    let k1 = cfg.params.k1.unwrap_or(spec.k1);
    let mut out = Outcome::new(json!({ "k1": k1, "bc": "dirichlet", "rel_tol": cfg.params.rel_tol, "export_forms": cfg.params.export_forms.unwrap_or(false) }));
    let report = if grid_cfg.rungs.unwrap_or(1) > 1 {
        hardy::hardy_ladder(spec, &grid_cfg.ladder(spec.dim)?, k1, opts)?
    } else {
        let forms = DiscreteForms::assemble(&grid_cfg.grid(spec.dim)?, spec, BoundaryCondition::Dirichlet)?;
        hardy::best_constant(&forms, k1, opts)?
    };
    if cfg.params.export_forms.unwrap_or(false) {
        out.forms = Some(DiscreteForms::assemble(&grid_cfg.grid(spec.dim)?, spec, BoundaryCondition::Dirichlet)?);
    }
    let tol = 1e-9 * report.c_theory.abs().max(1e-300);
    out.tolerances.insert("residual".into(), RESIDUAL_TOL);
    out.tolerances.insert("c_star_floor".into(), tol);
    out.invariants.push(Invariant::new(
        "residual",
        report.residual <= RESIDUAL_TOL,
        format!("finest residual {}", fmt17(report.residual)),
    ));
    out.invariants.push(Invariant::new(
        "monotone_refinement",
        report.monotone,
        "c_star non-increasing along the ladder",
    ));
    let floor_ok = report.refinement_history.iter().all(|e| e.c_star >= report.c_theory - tol);
    out.invariants.push(Invariant::new(
        "c_star_above_theory",
        floor_ok,
        format!("every c_star >= c_theory = {} up to {}", fmt17(report.c_theory), fmt17(tol)),
    ));
    if let Some(rel) = cfg.params.rel_tol {
        let estimate = report.c_extrapolated.unwrap_or(report.c_star);
        let err = (estimate - report.c_theory).abs() / report.c_theory.abs();
        out.tolerances.insert("rel_tol".into(), rel);
        out.invariants.push(Invariant::new(
            "estimate_near_theory",
            err <= rel,
            format!("estimate {} relative error {}", fmt17(estimate), fmt17(err)),
        ));
    }
    out.tables.push(history_table(&report));
    out.outputs = to_value(&report);
    Ok(out)
}

/// `c(α)` on the grid `α_k = −k/d`, `d = round(1/step)`, covering
/// `(−(N − 2 + k₂), 0)`. Division keeps grid points such as `−1.25` exact.
pub fn c_curve_points(dim: u32, k2: f64, alpha_step: f64) -> Result<Vec<(f64, f64)>, CliError> {
    if !(alpha_step > 0.0 && alpha_step <= 0.5) {
        return Err(CliError::config(format!("alpha_step must lie in (0, 0.5], got {alpha_step}")));
    }
    let width = dim as f64 - 2.0 + k2;
    if !(width > 0.0) {
        return Err(CliError::config(format!("need N - 2 + k2 > 0, got {width}")));
    }
    let d = (1.0 / alpha_step).round();
    let count = (width * d).ceil() as usize;
    Ok((1..count)
        .map(|k| {
            let alpha = -(k as f64) / d;
            (alpha, hardy::c_of_alpha(dim, k2, alpha))
        })
        .collect())
}

/// Grid point with the largest value; the first one on ties.
pub fn argmax(points: &[(f64, f64)]) -> (f64, f64) {
    points
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |best, p| if p.1 > best.1 { p } else { best })
}

fn c_curve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = &cfg.weight;
    let step = cfg.params.alpha_step.unwrap_or(1e-3);
    let mut out = Outcome::new(json!({ "alpha_step": step }));
    let points = c_curve_points(spec.dim, spec.k2, step)?;
    let (alpha_o, c_o) = hardy::alpha_opt(spec.dim, spec.k2);
    let (best_alpha, best_c) = argmax(&points);
    let on_grid = points.iter().any(|p| p.0 == alpha_o);
    let ulp_tol = 4.0 * f64::EPSILON * c_o.abs();
    out.tolerances.insert("max_value".into(), ulp_tol);
    out.invariants.push(if on_grid {
        Invariant::new("argmax_is_alpha_o", best_alpha == alpha_o, format!("argmax {}", fmt17(best_alpha)))
    } else {
        Invariant::new(
            "argmax_near_alpha_o",
            (best_alpha - alpha_o).abs() <= step,
            format!("alpha_o off grid; argmax {}", fmt17(best_alpha)),
        )
    });
    out.invariants.push(Invariant::new(
        "max_is_c_o",
        !on_grid || (best_c - c_o).abs() <= ulp_tol,
        format!("max {} vs c_o {}", fmt17(best_c), fmt17(c_o)),
    ));
    out.outputs = json!({
        "alpha_o": alpha_o, "c_o": c_o, "argmax_alpha": best_alpha, "max_c": best_c,
        "alpha_o_on_grid": on_grid, "points": points.len(),
    });
    out.tables.push(Table {
        file: "c_curve.csv",
        header: vec!["alpha", "c"],
        rows: points.iter().map(|(a, c)| vec![fmt17(*a), fmt17(*c)]).collect(),
    });
    Ok(out)
}

fn trend_table(report: &spectrum::SpectrumReport) -> Table {
    Table {
        file: "trend.csv",
        header: vec!["n", "r1", "lambda1", "residual"],
        rows: report
            .trend
            .iter()
            .map(|p| vec![p.n.to_string(), fmt17(p.r1), fmt17(p.lambda1), fmt17(p.residual)])
            .collect(),
    }
}

fn spectrum_cmd(cfg: &RunConfig, opts: &EigenOptions) -> Result<Outcome, CliError> {
    let spec = &cfg.weight;
    let grid_cfg = cfg.grid_config()?;
    let c = require(cfg.params.c, "c", cfg.command)?;
    let bc = cfg.params.bc.unwrap_or(BoundaryCondition::Neumann);
    let trunc = cfg.params.trunc_n;
    let mut out = Outcome::new(json!({ "c": c, "bc": bc, "trunc_n": trunc, "export_forms": cfg.params.export_forms.unwrap_or(false) }));
    let forms = DiscreteForms::assemble(&grid_cfg.grid(spec.dim)?, spec, bc)?;
    let report = match (grid_cfg.rungs.unwrap_or(1) > 1, trunc) {
        (true, Some(_)) => return Err(CliError::config("trunc_n is not supported on ladders")),
        (true, None) => spectrum::lambda1_ladder(spec, &grid_cfg.ladder(spec.dim)?, bc, c, opts)?,
        (false, Some(n)) => spectrum::lambda1_truncated(&forms, c, n, opts)?,
        (false, None) => spectrum::lambda1(&forms, c, opts)?,
    };
    // λ₁ on a 5-point c-grid at the finest grid must be non-increasing
    let c_grid: Vec<f64> = (0..5).map(|i| c * i as f64 / 4.0).collect();
    let mut values = Vec::new();
    for &ci in &c_grid {
        values.push(match trunc {
            Some(n) if ci > 0.0 => spectrum::lambda1_truncated(&forms, ci, n, opts)?.lambda1,
            _ => spectrum::lambda1(&forms, ci, opts)?.lambda1,
        });
    }
    let monotone = values.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
    out.tolerances.insert("relative_residual".into(), RESIDUAL_TOL);
    out.invariants.push(Invariant::new(
        "residual",
        relative_residual(report.residual, report.lambda1) <= RESIDUAL_TOL,
        format!("residual {} at lambda1 {}", fmt17(report.residual), fmt17(report.lambda1)),
    ));
    out.invariants.push(Invariant::new(
        "monotone_in_c",
        monotone,
        format!("lambda1 over c in [0, {}]: {:?}", fmt17(c), values.iter().map(|v| fmt17(*v)).collect::<Vec<_>>()),
    ));
    if cfg.params.export_forms.unwrap_or(false) {
        out.forms = Some(forms);
    }
    out.tables.push(trend_table(&report));
    out.outputs = json!({ "report": to_value(&report), "c_grid": c_grid, "lambda1_on_c_grid": values });
    Ok(out)
}

fn blowup_witness(cfg: &RunConfig, opts: &EigenOptions) -> Result<Outcome, CliError> {
    let spec = &cfg.weight;
    let grid = cfg.grid_config()?.grid(spec.dim)?;
    let c = require(cfg.params.c, "c", cfg.command)?;
    let (lo, hi) = spectrum::eta_range(spec.dim, spec.k2, c)?;
    let eta = cfg.params.eta.unwrap_or(0.5 * (lo + hi));
    let eps_list = cfg
        .params
        .eps_list
        .clone()
        .ok_or_else(|| CliError::config("command blowup-witness needs params.eps_list"))?;
    let mut out = Outcome::new(json!({ "c": c, "eta": eta, "eps_list": eps_list }));
    let w = spectrum::blowup_witness(spec, &grid, c, eta, &eps_list)?;
    let forms = DiscreteForms::assemble(&grid, spec, BoundaryCondition::Neumann)?;
    let l1 = spectrum::lambda1(&forms, c, opts)?.lambda1;
    out.invariants.push(Invariant::new(
        "bounds_hold",
        w.bound_holds.iter().all(|&b| b),
        format!("{:?}", w.bound_holds),
    ));
    out.invariants.push(Invariant::new(
        "quotients_strictly_decreasing",
        w.strictly_decreasing,
        format!("{:?}", w.quotients.iter().map(|q| fmt17(*q)).collect::<Vec<_>>()),
    ));
    out.invariants.push(Invariant::new(
        "quotients_above_lambda1",
        w.quotients.iter().all(|&q| q >= l1),
        format!("lambda1 = {}", fmt17(l1)),
    ));
    out.tables.push(Table {
        file: "witness.csv",
        header: vec!["eps", "quotient", "numerator", "denominator", "c2_eps", "bound_numerator", "bound_holds"],
        rows: (0..w.eps_list.len())
            .map(|i| {
                vec![
                    fmt17(w.eps_list[i]),
                    fmt17(w.quotients[i]),
                    fmt17(w.numerators[i]),
                    fmt17(w.denominators[i]),
                    fmt17(w.c2_eps[i]),
                    fmt17(w.bound_numerators[i]),
                    w.bound_holds[i].to_string(),
                ]
            })
            .collect(),
    });
    out.outputs = json!({ "witness": to_value(&w), "eta_range": [lo, hi], "lambda1": l1 });
    Ok(out)
}

fn dichotomy(cfg: &RunConfig, opts: &EigenOptions) -> Result<Outcome, CliError> {
    let spec = &cfg.weight;
    let grid_cfg = cfg.grid_config()?;
    let ladder = grid_cfg.ladder(spec.dim)?;
    if ladder.rungs < 3 {
        return Err(CliError::config("dichotomy needs a ladder with at least 3 rungs"));
    }
    let c_list = cfg
        .params
        .c_list
        .clone()
        .ok_or_else(|| CliError::config("command dichotomy needs params.c_list"))?;
    let bc = cfg.params.bc.unwrap_or(BoundaryCondition::Neumann);
    let mut out = Outcome::new(json!({ "c_list": c_list, "bc": bc }));
    let scan = spectrum::dichotomy_scan(spec, &ladder, bc, &c_list, opts)?;
    let mut rows = Vec::new();
    for row in &scan.rows {
        for p in &row.report.trend {
            rows.push(vec![
                fmt17(row.c),
                p.n.to_string(),
                fmt17(p.r1),
                fmt17(p.lambda1),
                fmt17(p.residual),
                row.classification.as_str().to_string(),
            ]);
        }
    }
    out.tables.push(Table {
        file: "dichotomy.csv",
        header: vec!["c", "n", "r1", "lambda1", "residual", "classification"],
        rows,
    });
    out.tolerances.insert("stabilization".into(), spectrum::STABILIZATION_TOL);
    let inconclusive: Vec<f64> = scan
        .rows
        .iter()
        .filter(|r| r.classification == Classification::Inconclusive)
        .map(|r| r.c)
        .collect();
    out.invariants.push(Invariant::new(
        "conclusive",
        inconclusive.is_empty(),
        format!("inconclusive at c = {inconclusive:?}"),
    ));
    out.invariants.push(Invariant::new(
        "brackets_c_o",
        scan.brackets,
        format!("bounded entries at or below c_o = {}, divergent above", fmt17(scan.c_theory)),
    ));
    out.outputs = to_value(&scan);
    Ok(out)
}

fn initial_data(kind: InitialData, forms: &DiscreteForms) -> Result<Vec<f64>, CliError> {
    Ok(match kind {
        InitialData::Bump => evolution::default_initial(forms)?,
        InitialData::Ones => vec![1.0; forms.dofs()],
    })
}

fn trace_summary(trace: &evolution::EvolutionTrace) -> Value {
    let m0 = trace.masses[0];
    let drift = trace.masses.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
    json!({
        "omega_fit": trace.omega_fit,
        "steps": trace.times.len() - 1,
        "final_log_norm": trace.log_norms.last(),
        "initial_mass": m0,
        "max_mass_drift": drift,
        "positivity_verified": trace.positivity_verified,
        "min_relative_component": trace.min_relative_component,
    })
}

fn evolve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = &cfg.weight;
    let grid = cfg.grid_config()?.grid(spec.dim)?;
    let p = &cfg.params;
    let c = require(p.c, "c", cfg.command)?;
    let trunc = require(p.trunc_n, "trunc_n", cfg.command)?;
    let tau = require(p.tau, "tau", cfg.command)?;
    let t_end = require(p.t_end, "T", cfg.command)?;
    let scheme = p.scheme.unwrap_or_default();
    let bc = p.bc.unwrap_or(BoundaryCondition::Neumann);
    let u0_kind = p.u0.unwrap_or_default();
    let mut out = Outcome::new(json!({
        "c": c, "trunc_n": trunc, "tau": tau, "T": t_end, "scheme": scheme, "bc": bc, "u0": u0_kind,
    }));
    let forms = DiscreteForms::assemble(&grid, spec, bc)?;
    let u0 = initial_data(u0_kind, &forms)?;
    let trace = evolution::evolve(&forms, c, trunc, &u0, tau, t_end, scheme)?;
    out.invariants.push(Invariant::new(
        "norms_positive",
        trace.log_norms.iter().all(|l| l.is_finite()),
        "every recorded norm is positive and finite in log scale",
    ));
    out.invariants.push(Invariant::new(
        "positivity",
        !trace.positivity_verified || trace.min_relative_component >= -1e-12,
        if trace.positivity_verified {
            "step matrix is a Stieltjes matrix; nonnegativity enforced every step".to_string()
        } else {
            format!(
                "step matrix sign pattern not verified; claim skipped (min relative component {})",
                fmt17(trace.min_relative_component)
            )
        },
    ));
    if c == 0.0 && bc == BoundaryCondition::Neumann {
        let m0 = trace.masses[0];
        let drift = trace.masses.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
        out.tolerances.insert("mass_conservation".into(), 1e-10);
        out.invariants.push(Invariant::new(
            "mass_conserved",
            drift <= 1e-10 * m0.abs(),
            format!("max drift {} of initial mass {}", fmt17(drift), fmt17(m0)),
        ));
    }
    out.tables.push(Table {
        file: "trace.csv",
        header: vec!["t", "norm", "mass"],
        rows: trace
            .times
            .iter()
            .zip(&trace.norms)
            .zip(&trace.masses)
            .map(|((t, n), m)| vec![fmt17(*t), fmt17(*n), fmt17(*m)])
            .collect(),
    });
    out.outputs = trace_summary(&trace);
    Ok(out)
}

fn blowup_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = &cfg.weight;
    let grid = cfg.grid_config()?.grid(spec.dim)?;
    let p = &cfg.params;
    let c = require(p.c, "c", cfg.command)?;
    let trunc_list = p
        .trunc_list
        .clone()
        .ok_or_else(|| CliError::config("command blowup-sweep needs params.trunc_list"))?;
    let tau = require(p.tau, "tau", cfg.command)?;
    let t_end = require(p.t_end, "T", cfg.command)?;
    let scheme = p.scheme.unwrap_or_default();
    let u0_kind = p.u0.unwrap_or_default();
    let mut out = Outcome::new(json!({
        "c": c, "trunc_list": trunc_list, "tau": tau, "T": t_end, "scheme": scheme, "bc": "neumann", "u0": u0_kind,
    }));
    let forms = DiscreteForms::assemble(&grid, spec, BoundaryCondition::Neumann)?;
    let u0 = initial_data(u0_kind, &forms)?;
    let table = evolution::blowup_sweep(&forms, c, &trunc_list, &u0, tau, t_end, scheme)?;
    let c_o = hardy::c_o(spec.dim, spec.k2);
    let expected = if c <= c_o { SweepClass::Converging } else { SweepClass::Diverging };
    out.tolerances.insert("stabilization".into(), evolution::SWEEP_STABILIZATION_TOL);
    out.invariants.push(Invariant::new(
        "conclusive",
        table.classification != SweepClass::Inconclusive,
        format!("classification {}", table.classification.as_str()),
    ));
    out.invariants.push(Invariant::new(
        "matches_threshold",
        table.classification == expected,
        format!("c = {} vs c_o = {}", fmt17(c), fmt17(c_o)),
    ));
    out.tables.push(Table {
        file: "sweep.csv",
        header: vec!["trunc_n", "omega_fit", "classification"],
        rows: table
            .trunc_list
            .iter()
            .zip(&table.omega_fit)
            .map(|(n, w)| vec![fmt17(*n), fmt17(*w), table.classification.as_str().to_string()])
            .collect(),
    });
    out.outputs = json!({
        "table": to_value(&table),
        "runs": table.traces.iter().map(trace_summary).collect::<Vec<_>>(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_curve_grid_contains_exact_maximizers() {
        for (n, k2) in [(3, 0.0), (5, 0.0), (5, -1.0), (4, 0.5)] {
            let points = c_curve_points(n, k2, 1e-3).unwrap();
            let (alpha_o, c_o) = hardy::alpha_opt(n, k2);
            let (a, c) = argmax(&points);
            assert_eq!(a, alpha_o);
            assert_eq!(c, c_o);
        }
    }

    #[test]
    fn c_curve_rejects_bad_step() {
        assert!(c_curve_points(3, 0.0, 0.0).is_err());
        assert!(c_curve_points(2, 0.0, 1e-3).is_err());
    }
}
