//! Bottom of the spectrum of `−(L + c/|x|²)` and the witness family that
//! drives it to `−∞` above the sharp constant.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discretization::{integrate_field, project, radial_density, BoundaryCondition, DiscreteForms, Ladder, RadialGrid};
use crate::error::{Error, Result};
use crate::hardy::c_o;
use crate::linalg::{generalized_eigenpair, EigenOptions, SymTridiag, RESIDUAL_TOL};
use crate::weights::WeightSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridTag {
    pub n: usize,
    pub r1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub n: usize,
    pub r1: f64,
    pub lambda1: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub c: f64,
    /// Smallest eigenvalue on the finest grid.
    pub lambda1: f64,
    /// `‖(K − λM)x‖ / ‖Mx‖` on the finest grid.
    pub residual: f64,
    pub grid_tag: GridTag,
    /// `λ₁` along a refinement ladder, coarsest first; a single entry for a
    /// one-grid run.
    pub trend: Vec<TrendPoint>,
}

/// Residual normalized by the magnitude of the eigenvalue.
///
/// Above the sharp constant `|λ₁|` grows like `r₁⁻²`, and the absolute
/// residual grows with it at fixed relative accuracy; acceptance is judged
/// relative to `max(1, |λ|)`.
pub fn relative_residual(residual: f64, lambda: f64) -> f64 {
    residual / lambda.abs().max(1.0)
}

fn smallest(k: &SymTridiag, forms: &DiscreteForms, c: f64, opts: &EigenOptions) -> Result<SpectrumReport> {
    let pair = generalized_eigenpair(k, &forms.m, 0, opts)?;
    let rel = relative_residual(pair.residual, pair.value);
    if rel > RESIDUAL_TOL {
        return Err(Error::Solver(format!(
            "eigen-residual {} (relative {rel}) exceeds {RESIDUAL_TOL} at c = {c}",
            pair.residual
        )));
    }
    let point = TrendPoint {
        n: forms.grid.len(),
        r1: forms.grid.r_min(),
        lambda1: pair.value,
        residual: pair.residual,
    };
    Ok(SpectrumReport {
        c,
        lambda1: pair.value,
        residual: pair.residual,
        grid_tag: GridTag {
            n: point.n,
            r1: point.r1,
        },
        trend: vec![point],
    })
}

/// Smallest eigenvalue of `(A − cS) x = λ M x`.
///
/// Neumann at `R` stands in for the whole space (constants stay in the
/// kernel at `c = 0`); Dirichlet forms are accepted as well and give the
/// ball problem.
pub fn lambda1(forms: &DiscreteForms, c: f64, opts: &EigenOptions) -> Result<SpectrumReport> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("c must be finite and >= 0, got {c}")));
    }
    let k = forms.a.lin_comb(1.0, &forms.s, -c);
    smallest(&k, forms, c, opts)
}

/// [`lambda1`] with the potential capped at `trunc_n`.
pub fn lambda1_truncated(forms: &DiscreteForms, c: f64, trunc_n: f64, opts: &EigenOptions) -> Result<SpectrumReport> {
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!("c must be finite and >= 0, got {c}")));
    }
    let s = forms.truncated_singular(c, trunc_n)?;
    let k = forms.a.lin_comb(1.0, &s, -c);
    smallest(&k, forms, c, opts)
}

/// [`lambda1`] on every rung of a nested ladder, rungs in parallel.
pub fn lambda1_ladder(
    spec: &WeightSpec,
    ladder: &Ladder,
    bc: BoundaryCondition,
    c: f64,
    opts: &EigenOptions,
) -> Result<SpectrumReport> {
    let grids = ladder.grids(spec.dim)?;
    let runs = crate::par_map(&grids, |g| DiscreteForms::assemble(g, spec, bc).and_then(|f| lambda1(&f, c, opts)));
    let mut trend = Vec::with_capacity(runs.len());
    for run in runs {
        trend.push(run?.trend[0]);
    }
    let last = *trend.last().expect("ladder has at least one rung");
    Ok(SpectrumReport {
        c,
        lambda1: last.lambda1,
        residual: last.residual,
        grid_tag: GridTag { n: last.n, r1: last.r1 },
        trend,
    })
}

/// Open interval of admissible exponents `η` for the witness family:
/// `max(−√c, −(N+k₂)/2) < η < min(−(N+k₂−2)/2, 0)`.
pub fn eta_range(dim: u32, k2: f64, c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
    }
    let nk = dim as f64 + k2;
    let lo = (-c.sqrt()).max(-nk / 2.0);
    let hi = (-(nk - 2.0) / 2.0).min(0.0);
    if !(lo < hi) {
        return Err(Error::EmptyEtaRange { min: lo, max: hi, c });
    }
    Ok((lo, hi))
}

/// `θ = 1` on `r ≤ 1`, `cos²(π(r−1)/2)` on `1 < r < 2`, `0` beyond.
pub fn cutoff(r: f64) -> f64 {
    if r <= 1.0 {
        1.0
    } else if r < 2.0 {
        (PI * (r - 1.0) / 2.0).cos().powi(2)
    } else {
        0.0
    }
}

/// `‖θ'‖²_∞ = π²/4` for [`cutoff`].
pub const CUTOFF_GRAD_SQ: f64 = PI * PI / 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupWitness {
    pub c: f64,
    pub eta: f64,
    pub eps_list: Vec<f64>,
    /// Rayleigh quotient of the projected `φ_ε` under `(A − cS, M)`.
    pub quotients: Vec<f64>,
    /// Discrete numerator `φᵀ(A − cS)φ` per `ε`.
    pub numerators: Vec<f64>,
    /// Discrete denominator `φᵀMφ` per `ε`.
    pub denominators: Vec<f64>,
    /// `(2η² + 2‖θ'‖²_∞) ∫_{1<r<2} dμ`.
    pub c1: f64,
    /// `∫_{r<1} (ε+r)^{2η} dμ` per `ε`.
    pub c2_eps: Vec<f64>,
    /// `∫_{r<1} (ε+r)^{2η} [η²/(ε+r)² − c/r²] dμ + C₁` per `ε`.
    pub bound_numerators: Vec<f64>,
    /// Per `ε`: numerator and denominator bounds hold, and the quotient
    /// bound `numerator/C₂,ε` holds when it is non-negative.
    pub bound_holds: Vec<bool>,
    pub strictly_decreasing: bool,
}

const BOUND_TOL: f64 = 1e-6;

/// Evaluate the witness family `φ_ε = (ε + r)^η θ(r)` on `grid`.
///
/// The grid must reach `R ≥ 2` so that `θ` is fully supported on it. A node
/// at `r = 1` is not required; the split integrals over `r < 1` and
/// `1 < r < 2` are computed with their own graded quadrature.
pub fn blowup_witness(spec: &WeightSpec, grid: &RadialGrid, c: f64, eta: f64, eps_list: &[f64]) -> Result<BlowupWitness> {
    spec.validate()?;
    let (lo, hi) = eta_range(spec.dim, spec.k2, c)?;
    if !(eta > lo && eta < hi) {
        return Err(Error::InvalidParameter(format!("eta = {eta} outside the open range ({lo}, {hi})")));
    }
    if eps_list.is_empty() || eps_list.iter().any(|e| !(*e > 0.0)) || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("eps_list must be strictly decreasing positive values".into()));
    }
    if grid.r_max() < 2.0 {
        return Err(Error::Precondition(format!(
            "grid ends at {} but the cut-off needs R >= 2",
            grid.r_max()
        )));
    }
    let forms = DiscreteForms::assemble(grid, spec, BoundaryCondition::Neumann)?;
    let k = forms.a.lin_comb(1.0, &forms.s, -c);

    let annulus = integrate_density(spec, 1.0, 2.0, grid, |_| 1.0)?;
    let c1 = (2.0 * eta * eta + 2.0 * CUTOFF_GRAD_SQ) * annulus;

    let mut out = BlowupWitness {
        c,
        eta,
        eps_list: eps_list.to_vec(),
        quotients: Vec::new(),
        numerators: Vec::new(),
        denominators: Vec::new(),
        c1,
        c2_eps: Vec::new(),
        bound_numerators: Vec::new(),
        bound_holds: Vec::new(),
        strictly_decreasing: true,
    };
    for &eps in eps_list {
        let phi = project(grid, |r| (eps + r).powf(eta) * cutoff(r))?;
        let num = k.quad_form(&phi);
        let den = forms.m.quad_form(&phi);
        let c2 = integrate_density(spec, 0.0, 1.0, grid, |r| (eps + r).powf(2.0 * eta))?;
        let inner = integrate_density(spec, 0.0, 1.0, grid, |r| {
            (eps + r).powf(2.0 * eta) * (eta * eta / (eps + r).powi(2) - c / (r * r))
        })?;
        let bound = inner + c1;
        let q = num / den;
        let num_ok = num <= bound + BOUND_TOL * bound.abs().max(num.abs());
        let den_ok = den >= c2 * (1.0 - BOUND_TOL);
        let ratio_ok = bound < 0.0 || q <= bound / c2 * (1.0 + BOUND_TOL) + BOUND_TOL;
        out.quotients.push(q);
        out.numerators.push(num);
        out.denominators.push(den);
        out.c2_eps.push(c2);
        out.bound_numerators.push(bound);
        out.bound_holds.push(num_ok && den_ok && ratio_ok);
    }
    out.strictly_decreasing = out.quotients.windows(2).all(|w| w[1] < w[0]);
    Ok(out)
}

/// `∫_{a<r<b} f dμ` on the part of `grid` inside `(a, b)`, with the
/// innermost piece `(a, r₁)` added when `a = 0` on a log-graded sub-mesh.
fn integrate_density<F: Fn(f64) -> f64>(spec: &WeightSpec, a: f64, b: f64, grid: &RadialGrid, f: F) -> Result<f64> {
    let mut nodes: Vec<f64> = Vec::new();
    let start = if a > 0.0 { a } else { grid.r_min() * 1e-6 };
    nodes.push(start);
    nodes.extend(grid.nodes.iter().copied().filter(|&r| r > start && r < b));
    nodes.push(b);
    // subdivide each piece so the quadrature sees the scale (ε + r)
    let mut fine = Vec::with_capacity(nodes.len() * 4);
    for w in nodes.windows(2) {
        for j in 0..4 {
            fine.push(w[0] + (w[1] - w[0]) * j as f64 / 4.0);
        }
    }
    fine.push(b);
    if a == 0.0 {
        let mut head: Vec<f64> = (1..40).map(|j| start * 10f64.powf(-(40 - j) as f64 * 0.25)).collect();
        head.extend(fine);
        fine = head;
    }
    let sub = RadialGrid {
        nodes: fine,
        grading: grid.grading,
        quad_order: grid.quad_order.max(8),
        dim: grid.dim,
    };
    let zeros = vec![0.0; sub.len()];
    integrate_field(&sub, |r| radial_density(spec, r), &zeros, |r, _, _| f(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Bounded,
    Divergent,
    Inconclusive,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Bounded => "bounded",
            Classification::Divergent => "divergent",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

/// Relative stabilization threshold for a bounded trend.
pub const STABILIZATION_TOL: f64 = 0.01;

/// Classify a ladder trend of values, coarsest first.
///
/// - bounded: the last two values differ by less than
///   `STABILIZATION_TOL · (1 + |last|)`;
/// - divergent: the last three are strictly decreasing with growing steps;
/// - inconclusive otherwise.
pub fn classify_trend(values: &[f64]) -> Classification {
    let n = values.len();
    if n >= 2 {
        let last = values[n - 1];
        if (last - values[n - 2]).abs() < STABILIZATION_TOL * (1.0 + last.abs()) {
            return Classification::Bounded;
        }
    }
    if n >= 3 {
        let (a, b, c) = (values[n - 3], values[n - 2], values[n - 1]);
        if b < a && c < b && (b - c) > (a - b) {
            return Classification::Divergent;
        }
    }
    Classification::Inconclusive
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyRow {
    pub c: f64,
    pub classification: Classification,
    pub report: SpectrumReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyScan {
    pub c_theory: f64,
    pub rows: Vec<DichotomyRow>,
    /// Whether every bounded entry lies below every divergent one and the
    /// switch happens across `c_theory`.
    pub brackets: bool,
}

/// Classify each `c` by its `λ₁` trend along the ladder.
pub fn dichotomy_scan(
    spec: &WeightSpec,
    ladder: &Ladder,
    bc: BoundaryCondition,
    c_list: &[f64],
    opts: &EigenOptions,
) -> Result<DichotomyScan> {
    if c_list.is_empty() {
        return Err(Error::InvalidParameter("c_list is empty".into()));
    }
    let runs = crate::par_map(c_list, |&c| lambda1_ladder(spec, ladder, bc, c, opts));
    let mut rows = Vec::with_capacity(runs.len());
    for (run, &c) in runs.into_iter().zip(c_list) {
        let report = run?;
        let values: Vec<f64> = report.trend.iter().map(|p| p.lambda1).collect();
        rows.push(DichotomyRow {
            c,
            classification: classify_trend(&values),
            report,
        });
    }
    let c_theory = c_o(spec.dim, spec.k2);
    let brackets = rows.iter().all(|row| match row.classification {
        Classification::Bounded => row.c <= c_theory,
        Classification::Divergent => row.c > c_theory,
        Classification::Inconclusive => false,
    });
    Ok(DichotomyScan { c_theory, rows, brackets })
}

impl DichotomyScan {
    /// CSV rows `c, n, r1, lambda1, residual, classification`, one per rung.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut rows = Vec::new();
        for row in &self.rows {
            for p in &row.report.trend {
                rows.push(vec![
                    crate::io::fmt17(row.c),
                    p.n.to_string(),
                    crate::io::fmt17(p.r1),
                    crate::io::fmt17(p.lambda1),
                    crate::io::fmt17(p.residual),
                    row.classification.as_str().to_string(),
                ]);
            }
        }
        crate::io::write_csv(path, &["c", "n", "r1", "lambda1", "residual", "classification"], &rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_grid, Grading};
    use crate::hardy::best_constant;
    use crate::linalg::rayleigh_quotient;
    use approx::assert_relative_eq;

    fn geometric(r_max: f64, r1: f64, n: usize, dim: u32) -> RadialGrid {
        build_grid(r_max, n, Grading::Geometric, ((r_max / r1).ln() / (n - 1) as f64).exp(), dim).unwrap()
    }

    #[test]
    fn zero_potential_has_constant_ground_state() {
        for spec in [WeightSpec::constant(3), WeightSpec::exp_poly(3, 0.0, 1.0, 2.0), WeightSpec::power(5, 1.0)] {
            let forms = DiscreteForms::assemble(&geometric(2.0, 1e-6, 200, spec.dim), &spec, BoundaryCondition::Neumann).unwrap();
            let rep = lambda1(&forms, 0.0, &EigenOptions::default()).unwrap();
            assert!(rep.lambda1.abs() < 1e-10, "{}", rep.lambda1);
            assert!(rep.residual <= 1e-8);
        }
    }

    #[test]
    fn monotone_in_c() {
        let spec = WeightSpec::constant(3);
        let forms = DiscreteForms::assemble(&geometric(1.0, 1e-8, 300, 3), &spec, BoundaryCondition::Neumann).unwrap();
        let values: Vec<f64> = [0.0, 0.1, 0.2, 0.3, 0.5]
            .iter()
            .map(|&c| lambda1(&forms, c, &EigenOptions::default()).unwrap().lambda1)
            .collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]), "{values:?}");
    }

    #[test]
    fn variational_upper_bound() {
        let spec = WeightSpec::constant(3);
        let forms = DiscreteForms::assemble(&geometric(1.0, 1e-6, 150, 3), &spec, BoundaryCondition::Neumann).unwrap();
        let c = 0.2;
        let rep = lambda1(&forms, c, &EigenOptions::default()).unwrap();
        let k = forms.a.lin_comb(1.0, &forms.s, -c);
        for seed in 0..20u64 {
            let v = crate::linalg::start_vector(forms.dofs(), seed);
            assert!(rayleigh_quotient(&k, &forms.m, &v) >= rep.lambda1);
        }
    }

    #[test]
    fn hardy_constant_bounds_the_spectrum() {
        let spec = WeightSpec::exp_poly(3, 0.0, 1.0, 2.0).with_constants(2.0, 0.0);
        let forms = DiscreteForms::assemble(&geometric(2.0, 1e-6, 200, 3), &spec, BoundaryCondition::Dirichlet).unwrap();
        let k1 = 2.0;
        let c_star = best_constant(&forms, k1, &EigenOptions::default()).unwrap().c_star;
        for frac in [0.0, 0.5, 0.9, 1.0] {
            let rep = lambda1(&forms, frac * c_star, &EigenOptions::default()).unwrap();
            assert!(rep.lambda1 >= -k1 * (1.0 + 1e-9), "{frac}: {}", rep.lambda1);
        }
        let above = lambda1(&forms, 1.05 * c_star, &EigenOptions::default()).unwrap();
        assert!(above.lambda1 < -k1);
    }

    #[test]
    fn eta_range_examples() {
        assert_eq!(eta_range(3, 0.0, 1.0).unwrap(), (-1.0, -0.5));
        assert_eq!(eta_range(5, 0.0, 4.0).unwrap(), (-2.0, -1.5));
        assert!(matches!(eta_range(3, 0.0, 0.25), Err(Error::EmptyEtaRange { .. })));
        assert!(eta_range(3, 0.0, 0.2).is_err());
        let (lo, hi) = eta_range(5, -1.0, 1.3).unwrap();
        let eta = 0.5 * (lo + hi);
        assert!(eta * eta < 1.3);
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(cutoff(0.3), 1.0);
        assert_eq!(cutoff(1.0), 1.0);
        assert_relative_eq!(cutoff(1.5), 0.5, max_relative = 1e-15);
        assert_eq!(cutoff(2.0), 0.0);
        let h = 1e-6;
        let max_slope = (1..1000)
            .map(|i| 1.0 + i as f64 / 1000.0)
            .map(|r| ((cutoff(r + h) - cutoff(r - h)) / (2.0 * h)).abs())
            .fold(0.0, f64::max);
        assert_relative_eq!(max_slope * max_slope, CUTOFF_GRAD_SQ, max_relative = 1e-5);
    }

    #[test]
    fn witness_decreases_above_threshold() {
        let spec = WeightSpec::constant(3);
        let grid = geometric(2.0, 1e-9, 600, 3);
        let c = 1.0;
        let (lo, hi) = eta_range(3, 0.0, c).unwrap();
        let w = blowup_witness(&spec, &grid, c, 0.5 * (lo + hi), &[1e-1, 1e-2, 1e-3]).unwrap();
        assert!(w.strictly_decreasing, "{:?}", w.quotients);
        assert!(w.bound_holds.iter().all(|&b| b), "{w:?}");
        let forms = DiscreteForms::assemble(&grid, &spec, BoundaryCondition::Neumann).unwrap();
        let l1 = lambda1(&forms, c, &EigenOptions::default()).unwrap().lambda1;
        assert!(w.quotients.iter().all(|&q| q >= l1));
    }

    #[test]
    fn witness_quotient_nonnegative_without_potential() {
        // the construction needs c > c_o, so evaluate the same φ_ε family with c = 0 directly
        let spec = WeightSpec::constant(3);
        let grid = geometric(2.0, 1e-9, 300, 3);
        let forms = DiscreteForms::assemble(&grid, &spec, BoundaryCondition::Neumann).unwrap();
        for eps in [1e-1, 1e-3] {
            let phi = project(&grid, |r| (eps + r).powf(-0.7) * cutoff(r)).unwrap();
            assert!(rayleigh_quotient(&forms.a, &forms.m, &phi) >= 0.0);
        }
    }

    #[test]
    fn witness_rejects_bad_inputs() {
        let spec = WeightSpec::constant(3);
        let grid = geometric(2.0, 1e-6, 100, 3);
        assert!(matches!(
            blowup_witness(&spec, &grid, 0.2, -0.4, &[0.1]),
            Err(Error::EmptyEtaRange { .. })
        ));
        assert!(blowup_witness(&spec, &grid, 1.0, -0.2, &[0.1]).is_err());
        assert!(blowup_witness(&spec, &grid, 1.0, -0.7, &[0.01, 0.1]).is_err());
        let short = geometric(1.5, 1e-6, 100, 3);
        assert!(blowup_witness(&spec, &short, 1.0, -0.7, &[0.1]).is_err());
    }

    #[test]
    fn trend_classification() {
        assert_eq!(classify_trend(&[-1.0, -1.2, -1.201]), Classification::Bounded);
        assert_eq!(classify_trend(&[-1.0, -2.0, -4.0]), Classification::Divergent);
        assert_eq!(classify_trend(&[-1.0, -2.0, -2.5]), Classification::Inconclusive);
        assert_eq!(classify_trend(&[0.0, 0.0]), Classification::Bounded);
    }

    #[test]
    fn dichotomy_brackets_classical_constant() {
        let ladder = Ladder {
            r_max: 1.0,
            r_min: 1e-20,
            base_nodes: 64,
            rungs: 5,
            quad_order: 4,
        };
        let scan = dichotomy_scan(
            &WeightSpec::constant(3),
            &ladder,
            BoundaryCondition::Neumann,
            &[0.0, 0.2, 0.5],
            &EigenOptions::default(),
        )
        .unwrap();
        let classes: Vec<_> = scan.rows.iter().map(|r| r.classification).collect();
        assert_eq!(
            classes,
            [Classification::Bounded, Classification::Bounded, Classification::Divergent],
            "{scan:#?}"
        );
        assert!(scan.brackets);
        assert!(scan.rows[0].report.lambda1.abs() < 1e-9);
    }
}
