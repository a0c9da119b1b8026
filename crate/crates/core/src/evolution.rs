//! Implicit time stepping of `∂_t u = Lu + min(c/|x|², n) u` on the radial
//! mesh, and growth-rate fits that expose the existence/blowup dichotomy
//! in the limit `n → ∞`.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discretization::{project, DiscreteForms};
use crate::error::{Error, Result};
use crate::io::{fmt17, write_csv};
use crate::linalg::SymTridiag;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    ImplicitEuler,
    CrankNicolson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionTrace {
    pub c: f64,
    pub truncation_n: f64,
    pub tau: f64,
    pub scheme: Scheme,
    pub times: Vec<f64>,
    /// `‖u(t)‖_{L²_μ}`; may overflow to infinity for fast growth, the fit
    /// uses `log_norms`.
    pub norms: Vec<f64>,
    pub log_norms: Vec<f64>,
    /// `∫ u(t) dμ`.
    pub masses: Vec<f64>,
    /// Least-squares slope of `log ‖u(t)‖` over the final half of the run.
    pub omega_fit: f64,
    /// The step matrix is a Stieltjes matrix, so nonnegative data stay
    /// nonnegative; when false the positivity claim is skipped.
    pub positivity_verified: bool,
    /// `min_k min_i u_i^k / ‖u^k‖_∞`.
    pub min_relative_component: f64,
    #[serde(skip)]
    pub final_state: Vec<f64>,
}

/// Smooth nonnegative bump `cos²(π r / 2s)` on `r < s`, `s = min(1, R)`,
/// normalized to unit `L²_μ` norm on the active degrees of freedom.
pub fn default_initial(forms: &DiscreteForms) -> Result<Vec<f64>> {
    let s = forms.grid.r_max().min(1.0);
    let nodal = project(&forms.grid, |r| if r < s { (PI * r / (2.0 * s)).cos().powi(2) } else { 0.0 })?;
    let mut u = forms.restrict(&nodal);
    let norm = forms.m.quad_form(&u).sqrt();
    if !(norm > 0.0) {
        return Err(Error::Precondition("initial bump vanishes on this grid".into()));
    }
    u.iter_mut().for_each(|v| *v /= norm);
    Ok(u)
}

fn is_stieltjes_offdiag(p: &SymTridiag) -> bool {
    p.off.iter().all(|&v| v <= 0.0)
}

/// Time-step `(M + τ(A − cS_n)) u^{k+1} = M u^k` from `u0` up to `t_end`
/// (Crank–Nicolson averages the operator over the step instead).
///
/// The state is renormalized internally every step and the logarithm of the
/// norm accumulated, so rapid growth does not overflow the fit.
pub fn evolve(
    forms: &DiscreteForms,
    c: f64,
    trunc_n: f64,
    u0: &[f64],
    tau: f64,
    t_end: f64,
    scheme: Scheme,
) -> Result<EvolutionTrace> {
    if u0.len() != forms.dofs() {
        return Err(Error::InvalidParameter(format!(
            "u0 has {} entries for {} degrees of freedom",
            u0.len(),
            forms.dofs()
        )));
    }
    if !(tau > 0.0) || !(t_end > 0.0) || !tau.is_finite() || !t_end.is_finite() {
        return Err(Error::InvalidParameter(format!("tau and T must be positive, got {tau} and {t_end}")));
    }
    if !(c >= 0.0) {
        return Err(Error::InvalidParameter(format!("c must be >= 0, got {c}")));
    }
    if u0.iter().any(|v| !v.is_finite()) || u0.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidParameter("u0 must be finite and nonzero".into()));
    }
    let s = forms.truncated_singular(c, trunc_n)?;
    let k = forms.a.lin_comb(1.0, &s, -c);
    let (lhs, rhs) = match scheme {
        Scheme::ImplicitEuler => (forms.m.lin_comb(1.0, &k, tau), forms.m.clone()),
        Scheme::CrankNicolson => (forms.m.lin_comb(1.0, &k, 0.5 * tau), forms.m.lin_comb(1.0, &k, -0.5 * tau)),
    };
    let factor = lhs.ldl();
    if !factor.is_positive_definite() {
        return Err(Error::NotPositiveDefinite(format!(
            "step matrix M + τK has {} negative pivots (τ = {tau}, trunc_n = {trunc_n}); reduce τ below 1/trunc_n",
            factor.negative_pivots()
        )));
    }
    let nonneg_start = u0.iter().all(|&v| v >= 0.0);
    // M ≥ 0 entrywise, and a positive definite Z-matrix has a nonnegative inverse
    let positivity_verified = scheme == Scheme::ImplicitEuler && nonneg_start && is_stieltjes_offdiag(&lhs);

    let steps = (t_end / tau).round().max(1.0) as usize;
    let ones = vec![1.0; forms.dofs()];
    let mut u = u0.to_vec();
    let mut log_scale = 0.0;
    let mut times = Vec::with_capacity(steps + 1);
    let mut log_norms = Vec::with_capacity(steps + 1);
    let mut masses = Vec::with_capacity(steps + 1);
    let mut min_rel = f64::INFINITY;

    let mut record = |t: f64, u: &[f64], log_scale: f64, min_rel: &mut f64| -> Result<()> {
        let norm = forms.m.quad_form(u).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Solver(format!("state norm {norm} at t = {t}")));
        }
        let sup = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let lowest = u.iter().copied().fold(f64::INFINITY, f64::min);
        *min_rel = min_rel.min(lowest / sup);
        times.push(t);
        log_norms.push(log_scale + norm.ln());
        masses.push(log_scale.exp() * forms.m.bilinear(&ones, u));
        Ok(())
    };
    record(0.0, &u, log_scale, &mut min_rel)?;
    for step in 1..=steps {
        let b = rhs.matvec(&u);
        u = factor.solve(&b);
        if positivity_verified {
            let norm = u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if let Some(&low) = u.iter().find(|&&v| v < -1e-12 * norm) {
                return Err(Error::Positivity { step, min: low, norm });
            }
        }
        // renormalize only when the scale drifts far, so that c = 0 runs
        // keep bit-level mass bookkeeping
        let norm = forms.m.quad_form(&u).sqrt();
        if !(norm > 1e-100 && norm < 1e100) {
            if !(norm > 0.0) || !norm.is_finite() {
                return Err(Error::Solver(format!("state norm {norm} at step {step}")));
            }
            u.iter_mut().for_each(|v| *v /= norm);
            log_scale += norm.ln();
        }
        record(step as f64 * tau, &u, log_scale, &mut min_rel)?;
    }
    let norms: Vec<f64> = log_norms.iter().map(|l| l.exp()).collect();
    let omega_fit = fit_final_half(&times, &log_norms)?;
    Ok(EvolutionTrace {
        c,
        truncation_n: trunc_n,
        tau,
        scheme,
        times,
        norms,
        log_norms,
        masses,
        omega_fit,
        positivity_verified,
        min_relative_component: min_rel,
        final_state: u,
    })
}

fn fit_final_half(times: &[f64], log_norms: &[f64]) -> Result<f64> {
    if times.len() < 10 {
        return Err(Error::Precondition(format!(
            "growth-rate fit needs at least 10 recorded steps, got {}",
            times.len()
        )));
    }
    let t_end = *times.last().unwrap();
    let t0 = times[0] + 0.5 * (t_end - times[0]);
    let (xs, ys): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(log_norms)
        .filter(|(t, _)| **t >= t0)
        .map(|(t, l)| (*t, *l))
        .unzip();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Precondition("fit window has no time spread".into()));
    }
    Ok(sxy / sxx)
}

/// Least-squares slope of `log ‖u(t)‖` over the final half of the trace.
pub fn growth_rate(trace: &EvolutionTrace) -> Result<f64> {
    if trace.norms.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Precondition("trace has a zero norm".into()));
    }
    fit_final_half(&trace.times, &trace.log_norms)
}

impl EvolutionTrace {
    /// CSV with columns `t, norm, mass`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .times
            .iter()
            .zip(&self.norms)
            .zip(&self.masses)
            .map(|((t, n), m)| vec![fmt17(*t), fmt17(*n), fmt17(*m)])
            .collect();
        write_csv(path, &["t", "norm", "mass"], &rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepClass {
    /// Fitted rates settle as the cap is lifted.
    Converging,
    /// Fitted rates keep increasing with non-shrinking increments.
    Diverging,
    Inconclusive,
}

impl SweepClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepClass::Converging => "converging",
            SweepClass::Diverging => "diverging",
            SweepClass::Inconclusive => "inconclusive",
        }
    }
}

/// Relative threshold on the last rate increment for a converging sweep.
pub const SWEEP_STABILIZATION_TOL: f64 = 0.05;

/// Classify rates ordered by increasing cap.
pub fn classify_sweep(omegas: &[f64]) -> SweepClass {
    let gaps: Vec<f64> = omegas.windows(2).map(|w| w[1] - w[0]).collect();
    if gaps.len() >= 2 && gaps.iter().all(|&g| g > 0.0) && gaps.windows(2).all(|w| w[1] >= w[0]) {
        return SweepClass::Diverging;
    }
    if let Some(&last) = gaps.last() {
        let omega = *omegas.last().unwrap();
        if last.abs() <= SWEEP_STABILIZATION_TOL * (1.0 + omega.abs()) {
            return SweepClass::Converging;
        }
    }
    SweepClass::Inconclusive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub c: f64,
    pub trunc_list: Vec<f64>,
    pub omega_fit: Vec<f64>,
    pub classification: SweepClass,
    #[serde(skip)]
    pub traces: Vec<EvolutionTrace>,
}

impl SweepTable {
    /// CSV with columns `trunc_n, omega_fit, classification`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .trunc_list
            .iter()
            .zip(&self.omega_fit)
            .map(|(n, w)| vec![fmt17(*n), fmt17(*w), self.classification.as_str().to_string()])
            .collect();
        write_csv(path, &["trunc_n", "omega_fit", "classification"], &rows)
    }
}

/// Growth rates for increasing potential caps on one grid, runs in parallel.
pub fn blowup_sweep(
    forms: &DiscreteForms,
    c: f64,
    trunc_list: &[f64],
    u0: &[f64],
    tau: f64,
    t_end: f64,
    scheme: Scheme,
) -> Result<SweepTable> {
    if trunc_list.len() < 2 || trunc_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("trunc_list must be increasing with at least two entries".into()));
    }
    if trunc_list[trunc_list.len() - 1] < 100.0 * trunc_list[0] {
        return Err(Error::InvalidParameter("trunc_list must span at least two decades".into()));
    }
    let runs = crate::par_map(trunc_list, |&n| evolve(forms, c, n, u0, tau, t_end, scheme));
    let mut traces = Vec::with_capacity(runs.len());
    for run in runs {
        traces.push(run?);
    }
    let omega_fit: Vec<f64> = traces.iter().map(|t| t.omega_fit).collect();
    Ok(SweepTable {
        c,
        trunc_list: trunc_list.to_vec(),
        classification: classify_sweep(&omega_fit),
        omega_fit,
        traces,
    })
}
