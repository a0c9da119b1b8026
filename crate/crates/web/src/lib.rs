//! Browser bindings for the demo page in `www/`.
//!
//! Everything works on power weights `μ = r^{-γ}` (so `k₂ = -γ`), which is
//! enough to move the threshold `c_o` around.

use hardy_core::discretization::{build_grid, BoundaryCondition, DiscreteForms, Grading, Ladder};
use hardy_core::evolution::{self, Scheme};
use hardy_core::hardy;
use hardy_core::linalg::EigenOptions;
use hardy_core::spectrum;
use hardy_core::WeightSpec;
use wasm_bindgen::prelude::*;

fn js_err(e: hardy_core::Error) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn weight(dim: u32, gamma: f64) -> Result<WeightSpec, JsValue> {
    let spec = WeightSpec::power(dim, gamma);
    spec.validate().map_err(js_err)?;
    Ok(spec)
}

/// The threshold `c_o` for `μ = r^{-γ}` in dimension `dim`.
#[wasm_bindgen]
pub fn threshold(dim: u32, gamma: f64) -> f64 {
    hardy::c_o(dim, -gamma)
}

/// `c(α)` sampled on `count` points of `[lo, hi]`, interleaved as
/// `[α₀, c₀, α₁, c₁, ...]`.
#[wasm_bindgen]
pub fn c_curve(dim: u32, gamma: f64, lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .flat_map(|i| {
            let a = lo + (hi - lo) * i as f64 / (count - 1) as f64;
            [a, hardy::c_of_alpha(dim, -gamma, a)]
        })
        .collect()
}

#[wasm_bindgen(getter_with_clone)]
pub struct LadderResult {
    pub nodes: Vec<f64>,
    pub r1: Vec<f64>,
    pub c_star: Vec<f64>,
    pub c_theory: f64,
    /// NaN when the ladder is too short or not contracting.
    pub c_extrapolated: f64,
}

/// Best Hardy constant on a nested ladder of geometric grids on `(0, 1]`.
#[wasm_bindgen]
pub fn hardy_ladder(dim: u32, gamma: f64, base_nodes: usize, rungs: usize, r_min: f64) -> Result<LadderResult, JsValue> {
    let spec = weight(dim, gamma)?;
    let ladder = Ladder {
        r_max: 1.0,
        r_min,
        base_nodes,
        rungs,
        quad_order: hardy_core::discretization::DEFAULT_QUAD_ORDER,
    };
    ladder.validate().map_err(js_err)?;
    let report = hardy::hardy_ladder(&spec, &ladder, 0.0, &EigenOptions::default()).map_err(js_err)?;
    let h = &report.refinement_history;
    Ok(LadderResult {
        nodes: h.iter().map(|e| e.n as f64).collect(),
        r1: h.iter().map(|e| e.r1).collect(),
        c_star: h.iter().map(|e| e.c_star).collect(),
        c_theory: report.c_theory,
        c_extrapolated: report.c_extrapolated.unwrap_or(f64::NAN),
    })
}

#[wasm_bindgen(getter_with_clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub log_norms: Vec<f64>,
    pub omega_fit: f64,
    /// Bottom of the spectrum of the truncated operator; `-λ₁` is the
    /// growth rate the trace should settle on.
    pub lambda1: f64,
}

/// Implicit Euler for `u_t = Δ_μ u + min(c/r², trunc_n) u` on `(0, R]` with
/// a Neumann outer boundary, started from a unit bump.
#[wasm_bindgen]
pub fn evolve_trace(
    dim: u32,
    gamma: f64,
    c: f64,
    trunc_n: f64,
    r_max: f64,
    nodes: usize,
    tau: f64,
    t_end: f64,
) -> Result<EvolutionResult, JsValue> {
    let spec = weight(dim, gamma)?;
    let ratio = ((r_max / 1e-8f64).ln() / (nodes.max(2) - 1) as f64).exp();
    let grid = build_grid(r_max, nodes, Grading::Geometric, ratio, dim).map_err(js_err)?;
    let forms = DiscreteForms::assemble(&grid, &spec, BoundaryCondition::Neumann).map_err(js_err)?;
    let u0 = evolution::default_initial(&forms).map_err(js_err)?;
    let trace = evolution::evolve(&forms, c, trunc_n, &u0, tau, t_end, Scheme::ImplicitEuler).map_err(js_err)?;
    let l1 = spectrum::lambda1_truncated(&forms, c, trunc_n, &EigenOptions::default()).map_err(js_err)?;
    // keep the page light: at most ~2000 plotted points
    let stride = (trace.times.len() / 2000).max(1);
    Ok(EvolutionResult {
        times: trace.times.iter().step_by(stride).copied().collect(),
        log_norms: trace.log_norms.iter().step_by(stride).copied().collect(),
        omega_fit: trace.omega_fit,
        lambda1: l1.lambda1,
    })
}
