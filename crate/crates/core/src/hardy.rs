//! Sharp constants of the weighted Hardy inequality
//!
//! `c ∫ φ²/|x|² dμ ≤ ∫ |∇φ|² dμ + k₁ ∫ φ² dμ`.
//!
//! The discrete best constant on a mesh is the smallest eigenvalue of the
//! pencil `(A + k₁M) x = c S x`; on nested meshes it decreases toward the
//! continuum constant `c_o(N + k₂) = ((N + k₂ − 2)/2)²`. The module also
//! carries the constant curve `c(α)` and a quadrature check of the estimate
//! chain obtained with the regularized functions `f_ε = (ε + r²)^{α/2}`.

use serde::{Deserialize, Serialize};

use crate::discretization::{integrate_field, radial_density, sphere_area, BoundaryCondition, DiscreteForms, Ladder, RadialGrid};
use crate::error::{Error, Result};
use crate::linalg::{generalized_eigenpair, EigenOptions, RESIDUAL_TOL};
use crate::weights::{H3Report, WeightSpec};

/// `c(α) = −α(N − 2 + k₂) − α²`, positive for `α ∈ (−(N − 2 + k₂), 0)`.
pub fn c_of_alpha(dim: u32, k2: f64, alpha: f64) -> f64 {
    -alpha * (dim as f64 - 2.0 + k2) - alpha * alpha
}

/// Maximizer and maximum of [`c_of_alpha`]: `(−(N + k₂ − 2)/2, ((N + k₂ − 2)/2)²)`.
pub fn alpha_opt(dim: u32, k2: f64) -> (f64, f64) {
    let half = (dim as f64 + k2 - 2.0) / 2.0;
    (-half, half * half)
}

/// `c_o(N + k₂)`.
pub fn c_o(dim: u32, k2: f64) -> f64 {
    alpha_opt(dim, k2).1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderEntry {
    pub n: usize,
    pub r1: f64,
    pub c_star: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    /// Best constant on the finest mesh.
    pub c_star: f64,
    /// `c_o(N + k₂)` for the weight's `k₂`.
    pub c_theory: f64,
    /// Aitken extrapolation of the last three ladder entries, when available.
    pub c_extrapolated: Option<f64>,
    pub refinement_history: Vec<LadderEntry>,
    /// Eigen-residual on the finest mesh.
    pub residual: f64,
    /// Whether `c_star` is non-increasing along the history.
    pub monotone: bool,
}

/// Best constant `c*` on a single mesh: the smallest eigenvalue of
/// `(A + k₁M) x = c S x`.
pub fn best_constant(forms: &DiscreteForms, k1: f64, opts: &EigenOptions) -> Result<HardyReport> {
    if forms.bc_outer != BoundaryCondition::Dirichlet {
        return Err(Error::Precondition(
            "best constant needs the Dirichlet outer condition (compactly supported test functions)".into(),
        ));
    }
    let lhs = forms.a.lin_comb(1.0, &forms.m, k1);
    if k1 < 0.0 && !lhs.ldl().is_positive_definite() {
        return Err(Error::NotPositiveDefinite(format!("A + k1 M is indefinite for k1 = {k1}")));
    }
    let pair = generalized_eigenpair(&lhs, &forms.s, 0, opts)?;
    if pair.residual > RESIDUAL_TOL {
        return Err(Error::Solver(format!(
            "eigen-residual {} exceeds {RESIDUAL_TOL}",
            pair.residual
        )));
    }
    let entry = LadderEntry {
        n: forms.grid.len(),
        r1: forms.grid.r_min(),
        c_star: pair.value,
        residual: pair.residual,
    };
    Ok(HardyReport {
        c_star: pair.value,
        c_theory: c_o(forms.spec.dim, forms.spec.k2),
        c_extrapolated: None,
        refinement_history: vec![entry],
        residual: pair.residual,
        monotone: true,
    })
}

/// Aitken's Δ² on the last three values of a sequence.
pub fn aitken(values: &[f64]) -> Option<f64> {
    if values.len() < 3 {
        return None;
    }
    let [a, b, c] = [values[values.len() - 3], values[values.len() - 2], values[values.len() - 1]];
    let d1 = b - a;
    let d2 = c - b;
    let denom = d2 - d1;
    if denom == 0.0 || !denom.is_finite() || d1 == 0.0 || d2 / d1 <= 0.0 || d2 / d1 >= 1.0 {
        return None;
    }
    Some(c - d2 * d2 / denom)
}

/// Best constants along a nested ladder, finest rung last.
pub fn hardy_ladder(spec: &WeightSpec, ladder: &Ladder, k1: f64, opts: &EigenOptions) -> Result<HardyReport> {
    let grids = ladder.grids(spec.dim)?;
    let reports = crate::par_map(&grids, |grid| {
        DiscreteForms::assemble(grid, spec, BoundaryCondition::Dirichlet).and_then(|f| best_constant(&f, k1, opts))
    });
    let mut history = Vec::with_capacity(reports.len());
    for r in reports {
        history.push(r?.refinement_history[0]);
    }
    let values: Vec<f64> = history.iter().map(|e| e.c_star).collect();
    let finest = *history.last().expect("ladder has at least one rung");
    let monotone = values
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-9 * w[0].abs().max(1e-300));
    Ok(HardyReport {
        c_star: finest.c_star,
        c_theory: c_o(spec.dim, spec.k2),
        c_extrapolated: aitken(&values),
        refinement_history: history,
        residual: finest.residual,
        monotone,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    /// `c(α) ∫ r²φ²/(ε+r²)² dμ − εα(N+k₂) ∫ φ²/(ε+r²)² dμ − k₁ ∫ φ² dμ`.
    pub lhs: f64,
    /// `∫ |∇φ|² dμ`.
    pub rhs: f64,
    /// `rhs − lhs`.
    pub gap: f64,
    pub tolerance: f64,
    pub holds: bool,
}

/// Evaluate both sides of the lower estimate for `∫|∇φ|² dμ` produced by the
/// substitution `φ = ψ f_ε`, for a piecewise-linear `φ` with one value per
/// grid node.
///
/// The estimate is only valid under H3 with the same `(α, ε, k₁, k₂)`, so the
/// caller passes the [`H3Report`] of a successful check on `spec`. `φ` should
/// vanish at `R`: otherwise integration by parts leaves a boundary term of
/// the wrong sign.
pub fn verify_feps_chain(spec: &WeightSpec, grid: &RadialGrid, h3: &H3Report, phi: &[f64]) -> Result<ChainCheck> {
    if !h3.holds {
        return Err(Error::Precondition(format!(
            "H3 does not hold (max violation {}); the estimate chain is not valid",
            h3.max_violation
        )));
    }
    if h3.spec != *spec {
        return Err(Error::Precondition("H3 report was produced for a different weight".into()));
    }
    let (alpha, eps) = (h3.alpha, h3.eps);
    let n = spec.dim_f64();
    let density = |r| radial_density(spec, r);
    let near = integrate_field(grid, density, phi, |r, v, _| r * r * v * v / (eps + r * r).powi(2))?;
    let core = integrate_field(grid, density, phi, |r, v, _| v * v / (eps + r * r).powi(2))?;
    let mass = integrate_field(grid, density, phi, |_, v, _| v * v)?;
    let rhs = integrate_field(grid, density, phi, |_, _, d| d * d)?;
    let lhs = c_of_alpha(spec.dim, spec.k2, alpha) * near - eps * alpha * (n + spec.k2) * core - spec.k1 * mass;
    let gap = rhs - lhs;
    let tolerance = 1e-9 * (lhs.abs() + rhs.abs()) + f64::MIN_POSITIVE;
    Ok(ChainCheck {
        lhs,
        rhs,
        gap,
        tolerance,
        holds: gap >= -tolerance,
    })
}

/// Radial function with exact first and second derivatives.
pub trait RadialProfile {
    fn value(&self, r: f64) -> f64;
    fn d1(&self, r: f64) -> f64;
    fn d2(&self, r: f64) -> f64;

    /// `−Δf/f = −(f'' + (N − 1) f'/r)/f`.
    fn neg_laplacian_ratio(&self, dim: u32, r: f64) -> f64 {
        -(self.d2(r) + (dim as f64 - 1.0) * self.d1(r) / r) / self.value(r)
    }
}

/// `f(r) = r^α`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerProfile {
    pub alpha: f64,
}

impl RadialProfile for PowerProfile {
    fn value(&self, r: f64) -> f64 {
        r.powf(self.alpha)
    }
    fn d1(&self, r: f64) -> f64 {
        self.alpha * r.powf(self.alpha - 1.0)
    }
    fn d2(&self, r: f64) -> f64 {
        self.alpha * (self.alpha - 1.0) * r.powf(self.alpha - 2.0)
    }
    fn neg_laplacian_ratio(&self, dim: u32, r: f64) -> f64 {
        -self.alpha * (dim as f64 - 2.0 + self.alpha) / (r * r)
    }
}

/// `f_ε(r) = (ε + r²)^{α/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedProfile {
    pub alpha: f64,
    pub eps: f64,
}

impl RadialProfile for RegularizedProfile {
    fn value(&self, r: f64) -> f64 {
        (self.eps + r * r).powf(self.alpha / 2.0)
    }
    fn d1(&self, r: f64) -> f64 {
        self.alpha * r * (self.eps + r * r).powf(self.alpha / 2.0 - 1.0)
    }
    fn d2(&self, r: f64) -> f64 {
        let s = self.eps + r * r;
        self.alpha * s.powf(self.alpha / 2.0 - 2.0) * (s + (self.alpha - 2.0) * r * r)
    }
    fn neg_laplacian_ratio(&self, dim: u32, r: f64) -> f64 {
        // Δf_ε = [α(N − 2 + α) r² + α ε N] / (ε + r²)^{2 − α/2}
        let n = dim as f64;
        let s = self.eps + r * r;
        -(self.alpha * (n - 2.0 + self.alpha) * r * r + self.alpha * self.eps * n) / (s * s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyTypeCheck {
    /// Pointwise `−Δf/f ≥ V` on every quadrature node.
    pub pointwise_holds: bool,
    /// `min (−Δf/f − V)` over the quadrature nodes.
    pub pointwise_margin: f64,
    /// `∫ V φ² dx ≤ ∫ |∇φ|² dx` for the supplied `φ`.
    pub holds: bool,
    /// `∫ |∇φ|² dx − ∫ V φ² dx`.
    pub margin: f64,
}

/// Unweighted Hardy-type check: the pointwise supersolution condition
/// `−Δf/f ≥ V` for a positive profile `f`, and the integral inequality
/// `∫ V φ² dx ≤ ∫ |∇φ|² dx` for a given nodal `φ`.
pub fn hardy_type_check<P, V>(grid: &RadialGrid, profile: &P, potential: V, phi: &[f64]) -> Result<HardyTypeCheck>
where
    P: RadialProfile,
    V: Fn(f64) -> f64,
{
    let rule = crate::discretization::quadrature::GaussLegendre::new(grid.quad_order.max(2));
    let mut margin_min = f64::INFINITY;
    let mut pointwise_holds = true;
    for (a, b) in grid.cells() {
        for (r, _) in rule.mapped(a, b) {
            let f = profile.value(r);
            if !(f > 0.0) || !f.is_finite() {
                return Err(Error::Domain {
                    r,
                    what: format!("profile must be positive, got {f}"),
                });
            }
            let ratio = profile.neg_laplacian_ratio(grid.dim, r);
            let v = potential(r);
            let diff = ratio - v;
            let tol = 1e-12 * ratio.abs().max(v.abs());
            if diff < -tol {
                pointwise_holds = false;
            }
            margin_min = margin_min.min(diff);
        }
    }
    let omega = sphere_area(grid.dim);
    let dim = grid.dim as i32;
    let lebesgue = |r: f64| Ok(omega * r.powi(dim - 1));
    let energy = integrate_field(grid, lebesgue, phi, |_, _, d| d * d)?;
    let potential_energy = integrate_field(grid, lebesgue, phi, |r, v, _| potential(r) * v * v)?;
    let margin = energy - potential_energy;
    let tol = 1e-9 * (energy.abs() + potential_energy.abs());
    Ok(HardyTypeCheck {
        pointwise_holds,
        pointwise_margin: margin_min,
        holds: margin >= -tol,
        margin,
    })
}
