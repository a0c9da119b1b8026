//! The acceptance suite behind `reproduce-all`.
//!
//! Each criterion reads a small JSON config carrying its weights, grids and
//! tolerances. Bundled copies live in `configs/`; a directory passed with
//! `--configs` overrides them file by file (matched on the `criterion`
//! field), which is how tolerance edits are exercised.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hardy_core::discretization::{integrate_radial, BoundaryCondition, DiscreteForms};
use hardy_core::evolution::{self, Scheme};
use hardy_core::hardy::{self, HardyReport};
use hardy_core::io::{fmt17, write_csv};
use hardy_core::linalg::{EigenOptions, RESIDUAL_TOL};
use hardy_core::spectrum::{self, Classification};
use hardy_core::weights::{self, log_scan, ExpPolyCase, Family};
use hardy_core::{Error as CoreError, WeightSpec};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::GridConfig;
use crate::error::CliError;
use crate::run::{argmax, c_curve_points, timestamp, write_json, Invariant, Table};

pub const CRITERIA: [(u32, &str); 10] = [
    (1, "classical Hardy constant"),
    (2, "Caffarelli-Nirenberg weighted constant"),
    (3, "constant-curve maximizer"),
    (4, "Gaussian and sub-Gaussian H3 certificates"),
    (5, "dichotomy bracketing"),
    (6, "blowup witness monotonicity"),
    (7, "evolution consistency"),
    (8, "evolution rate vs bottom of the spectrum"),
    (9, "quadrature oracle"),
    (10, "determinism"),
];

const BUNDLED: [(u32, &str); 9] = [
    (1, include_str!("../configs/01-classical-hardy.json")),
    (2, include_str!("../configs/02-weighted-hardy.json")),
    (3, include_str!("../configs/03-constant-curve.json")),
    (4, include_str!("../configs/04-h3-certificates.json")),
    (5, include_str!("../configs/05-dichotomy.json")),
    (6, include_str!("../configs/06-blowup-witness.json")),
    (7, include_str!("../configs/07-evolution.json")),
    (8, include_str!("../configs/08-rate-vs-spectrum.json")),
    (9, include_str!("../configs/09-quadrature.json")),
];

pub fn title(criterion: u32) -> &'static str {
    CRITERIA
        .iter()
        .find(|(n, _)| *n == criterion)
        .map(|(_, t)| *t)
        .unwrap_or("unknown")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionOutcome {
    pub criterion: u32,
    pub title: &'static str,
    pub passed: bool,
    pub checks: Vec<Invariant>,
}

/// Contents of the suite's `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub criteria: Vec<CriterionOutcome>,
    pub failures: Vec<u32>,
    pub passed: bool,
    pub timestamp: String,
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub configs_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Restrict to these criteria; all when `None`.
    pub only: Option<Vec<u32>>,
}

pub struct SuiteRun {
    pub report: SuiteReport,
    /// Wall time per criterion, seconds; kept out of `report.json`.
    pub seconds: BTreeMap<u32, f64>,
}

// ---------------------------------------------------------------- configs

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct HardyLadderConfig {
    #[allow(dead_code)]
    criterion: u32,
    weight: WeightSpec,
    grid: GridConfig,
    k1: f64,
    target: f64,
    rel_tol: f64,
    max_r1: f64,
    min_finest_nodes: usize,
    max_seconds: f64,
    seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantCurveConfig {
    #[allow(dead_code)]
    criterion: u32,
    cases: Vec<(u32, f64)>,
    alpha_step: f64,
    max_ulps: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanConfig {
    lo: f64,
    hi: f64,
    count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianCase {
    weight: WeightSpec,
    alpha: f64,
    k1_pass: f64,
    k1_fail: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubGaussianCase {
    weight: WeightSpec,
    alpha: f64,
    tilde_k1: f64,
    tilde_tol: f64,
    k1_pass: f64,
    k1_fail: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct H3Config {
    #[allow(dead_code)]
    criterion: u32,
    eps: f64,
    scan: ScanConfig,
    gaussian: GaussianCase,
    sub_gaussian: SubGaussianCase,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightGrid {
    weight: WeightSpec,
    grid: GridConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DichotomyConfig {
    #[allow(dead_code)]
    criterion: u32,
    cases: Vec<WeightGrid>,
    factors: Vec<f64>,
    min_rungs: usize,
    max_seconds: f64,
    seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct WitnessConfig {
    #[allow(dead_code)]
    criterion: u32,
    weight: WeightSpec,
    grid: GridConfig,
    factor: f64,
    eps_list: Vec<f64>,
    magnitude_ratio: f64,
    reject_factor: f64,
    /// Additional weight on which only the monotone decrease is required.
    reference: Option<WeightGrid>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SteadyCase {
    weight: WeightSpec,
    grid: GridConfig,
    tau: f64,
    #[serde(rename = "T")]
    t_end: f64,
    tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepCase {
    weight: WeightSpec,
    grid: GridConfig,
    trunc_list: Vec<f64>,
    tau: f64,
    #[serde(rename = "T")]
    t_end: f64,
    bounded_factor: f64,
    divergent_factor: f64,
    stabilization_tol: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvolutionConfig {
    #[allow(dead_code)]
    criterion: u32,
    steady: SteadyCase,
    sweep: SweepCase,
    max_seconds_per_run: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RateConfig {
    #[allow(dead_code)]
    criterion: u32,
    weight: WeightSpec,
    grid: GridConfig,
    factor: f64,
    trunc_list: Vec<f64>,
    tau: f64,
    #[serde(rename = "T")]
    t_end: f64,
    rel_tol: f64,
    seed: u64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadratureConfig {
    #[allow(dead_code)]
    criterion: u32,
    grid: GridConfig,
    rel_tol: f64,
}

/// Criterion number to config text: bundled, then overridden from `dir`.
pub fn load_configs(dir: Option<&Path>) -> Result<BTreeMap<u32, String>, CliError> {
    let mut map: BTreeMap<u32, String> = BUNDLED.iter().map(|(n, t)| (*n, t.to_string())).collect();
    if let Some(dir) = dir {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| CliError::config(format!("cannot read config dir {}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in paths {
            let text = std::fs::read_to_string(&path)?;
            #[derive(Deserialize)]
            struct Tag {
                criterion: u32,
            }
            let tag: Tag = serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("{}: {}", path.display(), CliError::json(&e))))?;
            if !BUNDLED.iter().any(|(n, _)| *n == tag.criterion) {
                return Err(CliError::config(format!(
                    "{}: no configurable criterion {}",
                    path.display(),
                    tag.criterion
                )));
            }
            map.insert(tag.criterion, text);
        }
    }
    Ok(map)
}

fn parse<T: DeserializeOwned>(criterion: u32, text: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::config(format!("criterion {criterion} config: {}", CliError::json(&e))))
}

// ---------------------------------------------------------------- criteria

type Checks = Vec<Invariant>;

struct Evaluated {
    checks: Checks,
    tables: Vec<Table>,
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> Invariant {
    Invariant::new(name, passed, detail)
}

fn history_table(file: &'static str, report: &HardyReport) -> Table {
    Table {
        file,
        header: vec!["n", "r1", "c_star", "residual"],
        rows: report
            .refinement_history
            .iter()
            .map(|e| vec![e.n.to_string(), fmt17(e.r1), fmt17(e.c_star), fmt17(e.residual)])
            .collect(),
    }
}

fn hardy_ladder_criterion(cfg: &HardyLadderConfig, file: &'static str) -> Result<Evaluated, CliError> {
    let start = Instant::now();
    let ladder = cfg.grid.ladder(cfg.weight.dim)?;
    let opts = EigenOptions {
        seed: cfg.seed,
        ..EigenOptions::default()
    };
    let report = hardy::hardy_ladder(&cfg.weight, &ladder, cfg.k1, &opts)?;
    let elapsed = start.elapsed().as_secs_f64();
    let finest = *report.refinement_history.last().expect("non-empty ladder");
    let mut checks = Vec::new();
    match report.c_extrapolated {
        Some(x) => {
            let err = (x - cfg.target).abs() / cfg.target.abs();
            checks.push(check(
                "extrapolated_within_tolerance",
                err <= cfg.rel_tol,
                format!("extrapolated {} vs {} (relative error {}, tolerance {})", fmt17(x), fmt17(cfg.target), fmt17(err), fmt17(cfg.rel_tol)),
            ));
        }
        None => checks.push(check("extrapolated_within_tolerance", false, "ladder too short or not contracting for extrapolation")),
    }
    checks.push(check(
        "raw_monotone",
        report.monotone,
        format!("raw c_star {:?}", report.refinement_history.iter().map(|e| fmt17(e.c_star)).collect::<Vec<_>>()),
    ));
    checks.push(check(
        "ladder_depth",
        finest.n >= cfg.min_finest_nodes && finest.r1 <= cfg.max_r1,
        format!("finest n = {}, r1 = {}", finest.n, fmt17(finest.r1)),
    ));
    checks.push(check("residual", report.residual <= RESIDUAL_TOL, format!("finest residual {}", fmt17(report.residual))));
    checks.push(check("runtime", elapsed <= cfg.max_seconds, format!("budget {} s", cfg.max_seconds)));
    Ok(Evaluated {
        checks,
        tables: vec![history_table(file, &report)],
    })
}

fn constant_curve_criterion(cfg: &ConstantCurveConfig) -> Result<Evaluated, CliError> {
    let mut checks = Vec::new();
    for &(n, k2) in &cfg.cases {
        let points = c_curve_points(n, k2, cfg.alpha_step)?;
        let (alpha_o, c_o) = hardy::alpha_opt(n, k2);
        let (a, c) = argmax(&points);
        checks.push(check(
            &format!("argmax_N{n}_k2_{k2}"),
            a == alpha_o && points.iter().any(|p| p.0 == alpha_o),
            format!("argmax {} vs alpha_o {}", fmt17(a), fmt17(alpha_o)),
        ));
        checks.push(check(
            &format!("max_N{n}_k2_{k2}"),
            (c - c_o).abs() <= cfg.max_ulps * f64::EPSILON * c_o.abs(),
            format!("max {} vs c_o {} (within {} ulp)", fmt17(c), fmt17(c_o), cfg.max_ulps),
        ));
    }
    Ok(Evaluated { checks, tables: vec![] })
}

fn h3_criterion(cfg: &H3Config) -> Result<Evaluated, CliError> {
    let scan = log_scan(cfg.scan.lo, cfg.scan.hi, cfg.scan.count);
    let mut checks = Vec::new();
    let g = &cfg.gaussian;
    let pass = weights::check_h3(&g.weight.with_constants(g.k1_pass, g.weight.k2), g.alpha, cfg.eps, &scan)?;
    let fail = weights::check_h3(&g.weight.with_constants(g.k1_fail, g.weight.k2), g.alpha, cfg.eps, &scan)?;
    checks.push(check(
        "gaussian_holds",
        pass.holds && pass.max_violation <= 0.0,
        format!("k1 = {}: max violation {}", g.k1_pass, fmt17(pass.max_violation)),
    ));
    checks.push(check("gaussian_fails_below", !fail.holds, format!("k1 = {}: max violation {}", g.k1_fail, fmt17(fail.max_violation))));

    let s = &cfg.sub_gaussian;
    let w = &s.weight;
    let class = weights::classify_exp_poly(w.gamma, w.delta, w.m, w.k2, s.alpha)?;
    checks.push(check(
        "tilde_k1",
        class.case == ExpPolyCase::Iii && (class.required_k1 - s.tilde_k1).abs() <= s.tilde_tol,
        format!("case {:?}, tilde k1 = {}", class.case, fmt17(class.required_k1)),
    ));
    let pass = weights::check_h3(&w.with_constants(s.k1_pass, w.k2), s.alpha, cfg.eps, &scan)?;
    let fail = weights::check_h3(&w.with_constants(s.k1_fail, w.k2), s.alpha, cfg.eps, &scan)?;
    checks.push(check("sub_gaussian_holds", pass.holds, format!("k1 = {}: max violation {}", s.k1_pass, fmt17(pass.max_violation))));
    checks.push(check("sub_gaussian_fails_below", !fail.holds, format!("k1 = {}: max violation {}", s.k1_fail, fmt17(fail.max_violation))));
    Ok(Evaluated { checks, tables: vec![] })
}

fn dichotomy_criterion(cfg: &DichotomyConfig) -> Result<Evaluated, CliError> {
    let start = Instant::now();
    let opts = EigenOptions {
        seed: cfg.seed,
        ..EigenOptions::default()
    };
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for case in &cfg.cases {
        let spec = &case.weight;
        let ladder = case.grid.ladder(spec.dim)?;
        let c_o = hardy::c_o(spec.dim, spec.k2);
        let c_list: Vec<f64> = cfg.factors.iter().map(|f| f * c_o).collect();
        let scan = spectrum::dichotomy_scan(spec, &ladder, BoundaryCondition::Neumann, &c_list, &opts)?;
        let tag = format!("N{}_gamma{}", spec.dim, spec.gamma);
        for (row, factor) in scan.rows.iter().zip(&cfg.factors) {
            let expected = if *factor < 1.0 { Classification::Bounded } else { Classification::Divergent };
            checks.push(check(
                &format!("{tag}_c{factor}"),
                row.classification == expected,
                format!("{} at c = {} (expected {})", row.classification.as_str(), fmt17(row.c), expected.as_str()),
            ));
            for p in &row.report.trend {
                rows.push(vec![
                    tag.clone(),
                    fmt17(row.c),
                    p.n.to_string(),
                    fmt17(p.r1),
                    fmt17(p.lambda1),
                    fmt17(p.residual),
                    row.classification.as_str().to_string(),
                ]);
            }
        }
        checks.push(check(&format!("{tag}_depth"), ladder.rungs >= cfg.min_rungs, format!("{} rungs", ladder.rungs)));
    }
    let elapsed = start.elapsed().as_secs_f64();
    checks.push(check("runtime", elapsed <= cfg.max_seconds, format!("budget {} s", cfg.max_seconds)));
    Ok(Evaluated {
        checks,
        tables: vec![Table {
            file: "c05_dichotomy.csv",
            header: vec!["case", "c", "n", "r1", "lambda1", "residual", "classification"],
            rows,
        }],
    })
}

fn witness_criterion(cfg: &WitnessConfig) -> Result<Evaluated, CliError> {
    let spec = &cfg.weight;
    let grid = cfg.grid.grid(spec.dim)?;
    let c_o = hardy::c_o(spec.dim, spec.k2);
    let c = cfg.factor * c_o;
    let (lo, hi) = spectrum::eta_range(spec.dim, spec.k2, c)?;
    let w = spectrum::blowup_witness(spec, &grid, c, 0.5 * (lo + hi), &cfg.eps_list)?;
    let mut checks = Vec::new();
    let fmt_list = |v: &[f64]| v.iter().map(|q| fmt17(*q)).collect::<Vec<_>>();
    checks.push(check("strictly_decreasing", w.strictly_decreasing, format!("quotients {:?}", fmt_list(&w.quotients))));
    let first = w.quotients[0];
    let last = *w.quotients.last().expect("eps_list is non-empty");
    checks.push(check(
        "final_below_multiple_of_first",
        last < -cfg.magnitude_ratio * first.abs(),
        format!("final {} vs -{} * |{}|", fmt17(last), cfg.magnitude_ratio, fmt17(first)),
    ));
    checks.push(check("bounds_hold", w.bound_holds.iter().all(|&b| b), format!("{:?}", w.bound_holds)));
    let rejected = matches!(
        spectrum::eta_range(spec.dim, spec.k2, cfg.reject_factor * c_o),
        Err(CoreError::EmptyEtaRange { .. })
    );
    checks.push(check("below_threshold_rejected", rejected, format!("eta_range at {} c_o", cfg.reject_factor)));
    let mut rows: Vec<Vec<String>> = (0..w.eps_list.len())
        .map(|i| vec!["primary".into(), fmt17(w.eps_list[i]), fmt17(w.quotients[i]), fmt17(w.bound_numerators[i]), fmt17(w.c2_eps[i])])
        .collect();
    if let Some(reference) = &cfg.reference {
        let rs = &reference.weight;
        let rc = cfg.factor * hardy::c_o(rs.dim, rs.k2);
        let (lo, hi) = spectrum::eta_range(rs.dim, rs.k2, rc)?;
        let rw = spectrum::blowup_witness(rs, &reference.grid.grid(rs.dim)?, rc, 0.5 * (lo + hi), &cfg.eps_list)?;
        checks.push(check(
            "reference_strictly_decreasing",
            rw.strictly_decreasing,
            format!("N = {}, k2 = {}: quotients {:?}", rs.dim, rs.k2, fmt_list(&rw.quotients)),
        ));
        rows.extend(
            (0..rw.eps_list.len())
                .map(|i| vec!["reference".into(), fmt17(rw.eps_list[i]), fmt17(rw.quotients[i]), fmt17(rw.bound_numerators[i]), fmt17(rw.c2_eps[i])]),
        );
    }
    Ok(Evaluated {
        checks,
        tables: vec![Table {
            file: "c06_witness.csv",
            header: vec!["case", "eps", "quotient", "bound_numerator", "c2_eps"],
            rows,
        }],
    })
}

fn evolution_criterion(cfg: &EvolutionConfig) -> Result<Evaluated, CliError> {
    let mut checks = Vec::new();
    let st = &cfg.steady;
    let forms = DiscreteForms::assemble(&st.grid.grid(st.weight.dim)?, &st.weight, BoundaryCondition::Neumann)?;
    let ones = vec![1.0; forms.dofs()];
    let start = Instant::now();
    let steady = evolution::evolve(&forms, 0.0, 1.0, &ones, st.tau, st.t_end, Scheme::ImplicitEuler)?;
    let dev = steady.final_state.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    checks.push(check("ones_preserved", dev <= st.tol, format!("max |u(T) - 1| = {}", fmt17(dev))));
    let bump = evolution::default_initial(&forms)?;
    let moving = evolution::evolve(&forms, 0.0, 1.0, &bump, st.tau, st.t_end, Scheme::ImplicitEuler)?;
    for (name, trace) in [("mass_conserved_ones", &steady), ("mass_conserved_bump", &moving)] {
        let m0 = trace.masses[0];
        let drift = trace.masses.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
        checks.push(check(name, drift <= st.tol * m0.abs(), format!("max drift {} of {}", fmt17(drift), fmt17(m0))));
    }
    let steady_secs = start.elapsed().as_secs_f64();

    let sw = &cfg.sweep;
    let spec = &sw.weight;
    let forms = DiscreteForms::assemble(&sw.grid.grid(spec.dim)?, spec, BoundaryCondition::Neumann)?;
    let u0 = evolution::default_initial(&forms)?;
    let c_o = hardy::c_o(spec.dim, spec.k2);
    let mut rows = Vec::new();
    let mut slowest = steady_secs;
    for (label, factor) in [("bounded", sw.bounded_factor), ("divergent", sw.divergent_factor)] {
        let start = Instant::now();
        let table = evolution::blowup_sweep(&forms, factor * c_o, &sw.trunc_list, &u0, sw.tau, sw.t_end, Scheme::ImplicitEuler)?;
        slowest = slowest.max(start.elapsed().as_secs_f64());
        let om = &table.omega_fit;
        let gaps: Vec<f64> = om.windows(2).map(|w| w[1] - w[0]).collect();
        let rates = format!("omega_fit {:?}", om.iter().map(|w| fmt17(*w)).collect::<Vec<_>>());
        if label == "bounded" {
            let last = *gaps.last().expect("at least two caps");
            let omega = *om.last().unwrap();
            checks.push(check(
                &format!("stabilizes_at_{factor}_c_o"),
                last.abs() <= sw.stabilization_tol * (1.0 + omega.abs()),
                format!("last difference {}; {rates}", fmt17(last)),
            ));
        } else {
            let increasing = gaps.iter().all(|&g| g > 0.0);
            let non_shrinking = gaps.windows(2).all(|w| w[1] >= w[0]);
            checks.push(check(&format!("diverges_at_{factor}_c_o"), increasing && non_shrinking, rates));
        }
        for (n, w) in table.trunc_list.iter().zip(om) {
            rows.push(vec![fmt17(factor * c_o), fmt17(*n), fmt17(*w), table.classification.as_str().to_string()]);
        }
    }
    // runs inside a sweep execute concurrently, so a sweep's wall time bounds each of its runs
    checks.push(check("runtime_per_run", slowest <= cfg.max_seconds_per_run, format!("budget {} s", cfg.max_seconds_per_run)));
    Ok(Evaluated {
        checks,
        tables: vec![Table {
            file: "c07_sweeps.csv",
            header: vec!["c", "trunc_n", "omega_fit", "classification"],
            rows,
        }],
    })
}

fn rate_criterion(cfg: &RateConfig) -> Result<Evaluated, CliError> {
    let spec = &cfg.weight;
    let forms = DiscreteForms::assemble(&cfg.grid.grid(spec.dim)?, spec, BoundaryCondition::Neumann)?;
    let c = cfg.factor * hardy::c_o(spec.dim, spec.k2);
    let opts = EigenOptions {
        seed: cfg.seed,
        ..EigenOptions::default()
    };
    let u0 = evolution::default_initial(&forms)?;
    let table = evolution::blowup_sweep(&forms, c, &cfg.trunc_list, &u0, cfg.tau, cfg.t_end, Scheme::ImplicitEuler)?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (&n, &omega) in cfg.trunc_list.iter().zip(&table.omega_fit) {
        let l1 = spectrum::lambda1_truncated(&forms, c, n, &opts)?.lambda1;
        let err = (omega + l1).abs() / l1.abs();
        checks.push(check(
            &format!("trunc_{n}"),
            err <= cfg.rel_tol,
            format!("omega_fit {} vs -lambda1 {} (relative {})", fmt17(omega), fmt17(-l1), fmt17(err)),
        ));
        checks.push(check(
            &format!("long_run_{n}"),
            l1 == 0.0 || cfg.t_end >= 10.0 / l1.abs(),
            format!("T = {} vs 10/|lambda1| = {}", cfg.t_end, fmt17(10.0 / l1.abs())),
        ));
        rows.push(vec![fmt17(n), fmt17(omega), fmt17(l1), fmt17(err)]);
    }
    Ok(Evaluated {
        checks,
        tables: vec![Table {
            file: "c08_rates.csv",
            header: vec!["trunc_n", "omega_fit", "lambda1", "relative_error"],
            rows,
        }],
    })
}

fn quadrature_criterion(cfg: &QuadratureConfig) -> Result<Evaluated, CliError> {
    let grid = cfg.grid.grid(3)?;
    // r^{-1} in three dimensions sits outside the Hardy parameter range
    // (γ < N − 2) but is a perfectly good integrand weight
    let inv_r = WeightSpec {
        family: Family::ExpPoly,
        gamma: 1.0,
        delta: 0.0,
        m: 1.0,
        k1: 0.0,
        k2: -1.0,
        dim: 3,
    };
    let unit = WeightSpec::constant(3);
    let cases: [(&str, WeightSpec, fn(f64) -> f64, f64); 3] = [
        ("ball_volume", unit, |_| 1.0, 4.0 * PI / 3.0),
        ("inverse_square", unit, |r| 1.0 / (r * r), 4.0 * PI),
        ("power_weight", inv_r, |_| 1.0, 2.0 * PI),
    ];
    let mut checks = Vec::new();
    for (name, spec, f, exact) in cases {
        let value = integrate_radial(&grid, &spec, f)?;
        let err = (value - exact).abs() / exact;
        checks.push(check(name, err <= cfg.rel_tol, format!("{} vs {} (relative {})", fmt17(value), fmt17(exact), fmt17(err))));
    }
    Ok(Evaluated { checks, tables: vec![] })
}

fn evaluate(criterion: u32, text: &str) -> Result<Evaluated, CliError> {
    match criterion {
        1 => hardy_ladder_criterion(&parse(1, text)?, "c01_history.csv"),
        2 => hardy_ladder_criterion(&parse(2, text)?, "c02_history.csv"),
        3 => constant_curve_criterion(&parse(3, text)?),
        4 => h3_criterion(&parse(4, text)?),
        5 => dichotomy_criterion(&parse(5, text)?),
        6 => witness_criterion(&parse(6, text)?),
        7 => evolution_criterion(&parse(7, text)?),
        8 => rate_criterion(&parse(8, text)?),
        9 => quadrature_criterion(&parse(9, text)?),
        _ => Err(CliError::config(format!("unknown criterion {criterion}"))),
    }
}

struct Pass {
    outcomes: Vec<CriterionOutcome>,
    tables: Vec<Table>,
    seconds: BTreeMap<u32, f64>,
}

fn run_pass(configs: &BTreeMap<u32, String>, selected: &[u32]) -> Result<Pass, CliError> {
    let mut pass = Pass {
        outcomes: Vec::new(),
        tables: Vec::new(),
        seconds: BTreeMap::new(),
    };
    for &n in selected.iter().filter(|&&n| n != 10) {
        let text = configs
            .get(&n)
            .ok_or_else(|| CliError::config(format!("no config for criterion {n}")))?;
        let start = Instant::now();
        let checks = match evaluate(n, text) {
            Ok(ev) => {
                pass.tables.extend(ev.tables);
                ev.checks
            }
            // malformed configs abort the suite; numerical failures fail the criterion
            Err(e @ CliError::Config(_)) if is_parse_error(&e) => return Err(e),
            Err(e) => vec![check("run", false, e.to_string())],
        };
        pass.seconds.insert(n, start.elapsed().as_secs_f64());
        pass.outcomes.push(CriterionOutcome {
            criterion: n,
            title: title(n),
            passed: checks.iter().all(|c| c.passed),
            checks,
        });
    }
    Ok(pass)
}

fn is_parse_error(e: &CliError) -> bool {
    matches!(e, CliError::Config(msg) if msg.contains(" config: "))
}

/// Outcomes without anything time-dependent, as compared by criterion 10.
fn fingerprint(outcomes: &[CriterionOutcome]) -> String {
    serde_json::to_string(outcomes).expect("outcomes serialize")
}

/// Run the suite and write `report.json`, `summary.csv` and per-criterion
/// CSV files into `opts.output_dir`.
///
/// Criterion 10 runs the selected criteria a second time and compares the
/// two outcome lists byte for byte.
pub fn reproduce_all(opts: &SuiteOptions) -> Result<SuiteRun, CliError> {
    let configs = load_configs(opts.configs_dir.as_deref())?;
    let selected: Vec<u32> = match &opts.only {
        Some(list) => {
            if let Some(bad) = list.iter().find(|n| !CRITERIA.iter().any(|(m, _)| m == *n)) {
                return Err(CliError::config(format!("no criterion {bad}")));
            }
            CRITERIA.iter().map(|(n, _)| *n).filter(|n| list.contains(n)).collect()
        }
        None => CRITERIA.iter().map(|(n, _)| *n).collect(),
    };
    let first = run_pass(&configs, &selected)?;
    let mut outcomes = first.outcomes.clone();
    let mut seconds = first.seconds.clone();
    if selected.contains(&10) {
        let start = Instant::now();
        let second = run_pass(&configs, &selected)?;
        let same = fingerprint(&first.outcomes) == fingerprint(&second.outcomes);
        let covered: Vec<u32> = first.outcomes.iter().map(|o| o.criterion).collect();
        outcomes.push(CriterionOutcome {
            criterion: 10,
            title: title(10),
            passed: same,
            checks: vec![check(
                "identical_outcomes",
                same,
                format!("two passes over criteria {covered:?} agree byte for byte"),
            )],
        });
        seconds.insert(10, start.elapsed().as_secs_f64());
    }
    let failures: Vec<u32> = outcomes.iter().filter(|o| !o.passed).map(|o| o.criterion).collect();
    let report = SuiteReport {
        passed: failures.is_empty(),
        failures,
        criteria: outcomes,
        timestamp: timestamp(),
    };
    std::fs::create_dir_all(&opts.output_dir)?;
    write_json(&opts.output_dir.join("report.json"), &report)?;
    for table in &first.tables {
        write_csv(&opts.output_dir.join(table.file), &table.header, &table.rows)?;
    }
    let summary: Vec<Vec<String>> = report
        .criteria
        .iter()
        .map(|o| {
            vec![
                o.criterion.to_string(),
                o.title.to_string(),
                if o.passed { "pass" } else { "fail" }.to_string(),
                format!("{:.3}", seconds.get(&o.criterion).copied().unwrap_or(0.0)),
            ]
        })
        .collect();
    write_csv(&opts.output_dir.join("summary.csv"), &["criterion", "title", "result", "seconds"], &summary)?;
    Ok(SuiteRun { report, seconds })
}

/// Exit mapping for a finished suite: any failed criterion is an assertion
/// failure naming the criteria.
pub fn failures_as_error(report: &SuiteReport) -> Result<(), CliError> {
    if report.passed {
        return Ok(());
    }
    Err(CliError::Assertion(
        report
            .criteria
            .iter()
            .filter(|o| !o.passed)
            .map(|o| format!("criterion {} ({})", o.criterion, o.title))
            .collect(),
    ))
}
