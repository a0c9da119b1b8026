use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::RadialGrid;
use super::quadrature::GaussLegendre;
use crate::error::{Error, Result};
use crate::linalg::SymTridiag;
use crate::weights::{eval_weight, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    /// `φ(R) = 0`: the node at `R` is removed.
    Dirichlet,
    /// Natural (no-flux) condition at `R`.
    Neumann,
}

/// Surface area of the unit sphere `S^{N-1}`: `2 π^{N/2} / Γ(N/2)`.
pub fn sphere_area(dim: u32) -> f64 {
    use std::f64::consts::PI;
    // Γ(N/2) by the recurrence from Γ(1) = 1 or Γ(1/2) = √π
    let mut gamma = if dim % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if dim % 2 == 0 { 1.0 } else { 0.5 };
    let target = dim as f64 / 2.0;
    while x < target {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(target) / gamma
}

/// Radial measure density `ω_{N-1} μ(r) r^{N-1}`.
pub fn radial_density(spec: &WeightSpec, r: f64) -> Result<f64> {
    Ok(sphere_area(spec.dim) * eval_weight(spec, r)? * r.powi(spec.dim as i32 - 1))
}

/// Piecewise-linear Galerkin matrices on a radial grid against
/// `dμ_rad = ω_{N-1} μ(r) r^{N-1} dr`:
///
/// - `a`: `∫ φ' ψ' dμ_rad` (gradient form)
/// - `m`: `∫ φ ψ dμ_rad` (mass)
/// - `s`: `∫ φ ψ / r² dμ_rad` (inverse-square mass)
///
/// Natural condition at `r₁`; at `R` either condition from
/// [`BoundaryCondition`]. Under Dirichlet the matrices cover the first
/// `n - 1` nodes only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteForms {
    pub grid: RadialGrid,
    pub spec: WeightSpec,
    pub bc_outer: BoundaryCondition,
    pub a: SymTridiag,
    pub m: SymTridiag,
    pub s: SymTridiag,
}

/// Per-cell element matrices for stiffness, mass and inverse-square mass.
type Element = ([[f64; 2]; 2], [[f64; 2]; 2], [[f64; 2]; 2]);

fn element<F>(rule: &GaussLegendre, left: f64, right: f64, cell: usize, density: &F) -> Result<Element>
where
    F: Fn(f64) -> Result<f64>,
{
    let h = right - left;
    let mut stiff = 0.0;
    let mut mass = [[0.0; 2]; 2];
    let mut sing = [[0.0; 2]; 2];
    for (r, w) in rule.mapped(left, right) {
        let rho = density(r)?;
        if !rho.is_finite() {
            return Err(Error::SingularQuadrature { cell, left, right });
        }
        let basis = [(right - r) / h, (r - left) / h];
        stiff += w * rho;
        for i in 0..2 {
            for j in 0..2 {
                mass[i][j] += w * rho * basis[i] * basis[j];
                sing[i][j] += w * rho * basis[i] * basis[j] / (r * r);
            }
        }
    }
    let k = stiff / (h * h);
    let stiffness = [[k, -k], [-k, k]];
    let all = stiffness.iter().chain(&mass).chain(&sing).flatten();
    if all.into_iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularQuadrature { cell, left, right });
    }
    Ok((stiffness, mass, sing))
}

/// Assemble `(A, M, S)` over all nodes of `grid` against an arbitrary radial
/// density (the integrand factor multiplying `φψ`).
pub fn assemble_with_density<F>(grid: &RadialGrid, density: F) -> Result<(SymTridiag, SymTridiag, SymTridiag)>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    if grid.quad_order < 2 {
        return Err(Error::InvalidParameter(format!(
            "quad_order must be >= 2, got {}",
            grid.quad_order
        )));
    }
    let rule = GaussLegendre::new(grid.quad_order);
    let cells: Vec<(usize, f64, f64)> = grid.cells().enumerate().map(|(i, (a, b))| (i, a, b)).collect();
    let elements = crate::par_map(&cells, |&(i, a, b)| element(&rule, a, b, i, &density));
    let n = grid.len();
    let (mut stiff, mut mass, mut sing) = (SymTridiag::zeros(n), SymTridiag::zeros(n), SymTridiag::zeros(n));
    for (i, el) in elements.into_iter().enumerate() {
        let (ka, km, ks) = el?;
        stiff.add_element(i, ka);
        mass.add_element(i, km);
        sing.add_element(i, ks);
    }
    Ok((stiff, mass, sing))
}

impl DiscreteForms {
    pub fn assemble(grid: &RadialGrid, spec: &WeightSpec, bc_outer: BoundaryCondition) -> Result<Self> {
        if grid.dim != spec.dim {
            return Err(Error::InvalidParameter(format!(
                "grid dimension {} differs from weight dimension {}",
                grid.dim, spec.dim
            )));
        }
        spec.validate()?;
        let spec_copy = *spec;
        let (a, m, s) = assemble_with_density(grid, move |r| radial_density(&spec_copy, r))?;
        let active = match bc_outer {
            BoundaryCondition::Dirichlet => grid.len() - 1,
            BoundaryCondition::Neumann => grid.len(),
        };
        Ok(DiscreteForms {
            grid: grid.clone(),
            spec: *spec,
            bc_outer,
            a: a.leading(active),
            m: m.leading(active),
            s: s.leading(active),
        })
    }

    /// Number of active degrees of freedom.
    pub fn dofs(&self) -> usize {
        self.a.len()
    }

    /// Drop the boundary node from a full nodal vector when Dirichlet.
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        nodal[..self.dofs()].to_vec()
    }

    /// Singular mass with `1/r²` replaced by `min(1/r², cap)`, where
    /// `cap = trunc_n / c`, so that `c · min(1/r², cap) = min(c/r², trunc_n)`.
    pub fn truncated_singular(&self, c: f64, trunc_n: f64) -> Result<SymTridiag> {
        if !(trunc_n > 0.0) {
            return Err(Error::InvalidParameter(format!("truncation level must be positive, got {trunc_n}")));
        }
        if c <= 0.0 {
            return Ok(self.s.clone());
        }
        let cap = trunc_n / c;
        let r1 = self.grid.r_min();
        if cap >= 1.0 / (r1 * r1) {
            return Ok(self.s.clone());
        }
        let spec = self.spec;
        let (_, _, s) = assemble_with_density(&self.grid, move |r| {
            Ok(radial_density(&spec, r)? * (1.0 / (r * r)).min(cap) * r * r)
        })?;
        Ok(s.leading(self.dofs()))
    }

    /// Pad an active-dof vector back to one value per grid node (zero at `R`
    /// under Dirichlet).
    pub fn extend(&self, active: &[f64]) -> Vec<f64> {
        let mut full = active.to_vec();
        full.resize(self.grid.len(), 0.0);
        full
    }

    /// `∫ f dμ` over `[r₁, R]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        integrate_radial(&self.grid, &self.spec, f)
    }

    /// Write `A.txt`, `M.txt`, `S.txt` as `row col value` triplets with 17
    /// significant digits.
    pub fn export_triplets(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, mat) in [("A.txt", &self.a), ("M.txt", &self.m), ("S.txt", &self.s)] {
            let mut out = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
            write_triplets(&mut out, mat)?;
            out.flush()?;
        }
        Ok(())
    }
}

pub fn write_triplets<W: Write>(out: &mut W, mat: &SymTridiag) -> Result<()> {
    for (i, j, v) in mat.triplets() {
        writeln!(out, "{i} {j} {}", crate::io::fmt17(v))?;
    }
    Ok(())
}

/// `ω_{N-1} ∫_{r₁}^{R} f(r) μ(r) r^{N-1} dr` by per-cell Gauss quadrature.
pub fn integrate_radial<F: Fn(f64) -> f64>(grid: &RadialGrid, spec: &WeightSpec, f: F) -> Result<f64> {
    let rule = GaussLegendre::new(grid.quad_order.max(2));
    let mut total = 0.0;
    for (cell, (a, b)) in grid.cells().enumerate() {
        let mut part = 0.0;
        for (r, w) in rule.mapped(a, b) {
            part += w * f(r) * radial_density(spec, r)?;
        }
        if !part.is_finite() {
            return Err(Error::SingularQuadrature { cell, left: a, right: b });
        }
        total += part;
    }
    Ok(total)
}

/// `∫ g(r, φ(r), φ'(r)) ρ(r) dr` for a piecewise-linear field with nodal
/// values `phi` (one per grid node) against the radial density `ρ`.
pub fn integrate_field<D, G>(grid: &RadialGrid, density: D, phi: &[f64], g: G) -> Result<f64>
where
    D: Fn(f64) -> Result<f64>,
    G: Fn(f64, f64, f64) -> f64,
{
    if phi.len() != grid.len() {
        return Err(Error::InvalidParameter(format!(
            "field has {} values for {} nodes",
            phi.len(),
            grid.len()
        )));
    }
    let rule = GaussLegendre::new(grid.quad_order.max(2));
    let mut total = 0.0;
    for (cell, (a, b)) in grid.cells().enumerate() {
        let h = b - a;
        let slope = (phi[cell + 1] - phi[cell]) / h;
        let mut part = 0.0;
        for (r, w) in rule.mapped(a, b) {
            let value = phi[cell] * (b - r) / h + phi[cell + 1] * (r - a) / h;
            part += w * g(r, value, slope) * density(r)?;
        }
        if !part.is_finite() {
            return Err(Error::SingularQuadrature { cell, left: a, right: b });
        }
        total += part;
    }
    Ok(total)
}

/// Nodal interpolant of `f` on every node of `grid`.
pub fn project<F: Fn(f64) -> f64>(grid: &RadialGrid, f: F) -> Result<Vec<f64>> {
    grid.nodes
        .iter()
        .map(|&r| {
            let v = f(r);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Domain {
                    r,
                    what: format!("projected function evaluates to {v}"),
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::grid::{build_grid, Grading};
    use crate::linalg::{generalized_eigenpair, EigenOptions};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn geometric(n: usize, r1: f64, dim: u32) -> RadialGrid {
        let ratio = (r1.recip().ln() / (n - 1) as f64).exp();
        build_grid(1.0, n, Grading::Geometric, ratio, dim).unwrap()
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(1), 2.0, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(4), 2.0 * PI * PI, max_relative = 1e-15);
        assert_relative_eq!(sphere_area(5), 8.0 * PI * PI / 3.0, max_relative = 1e-15);
    }

    #[test]
    fn integrate_examples() {
        let grid = geometric(513, 1e-9, 3);
        let unit = WeightSpec::constant(3);
        let vol = integrate_radial(&grid, &unit, |_| 1.0).unwrap();
        assert_relative_eq!(vol, 4.0 * PI / 3.0, max_relative = 1e-6);
        let inv_sq = integrate_radial(&grid, &unit, |r| 1.0 / (r * r)).unwrap();
        assert_relative_eq!(inv_sq, 4.0 * PI, max_relative = 1e-6);
        // γ = 1 sits on the N - 2 boundary of the Hardy range; integration alone only
        // needs local integrability, so the struct is built without validation
        let inv = WeightSpec::exp_poly(3, 1.0, 0.0, 1.0);
        let v = integrate_radial(&grid, &inv, |_| 1.0).unwrap();
        assert_relative_eq!(v, 2.0 * PI, max_relative = 1e-6);
        let power = WeightSpec::exp_poly(4, 1.0, 0.0, 1.0);
        let grid4 = geometric(513, 1e-9, 4);
        // ∫₀¹ 2π² r² dr = 2π²/3
        let v = integrate_radial(&grid4, &power, |_| 1.0).unwrap();
        assert_relative_eq!(v, 2.0 * PI * PI / 3.0, max_relative = 1e-6);
    }

    #[test]
    fn refinement_reduces_quadrature_error() {
        let spec = WeightSpec::exp_poly(3, 0.5, 0.0, 1.0);
        let f = |r: f64| (3.0 * r).cos();
        let exact = {
            // fine composite Simpson on ∫_{r1}^1 cos(3r) r^{1.5} dr, r1 = 1e-3
            let (a, b, n) = (1e-3f64, 1.0f64, 2_000_000usize);
            let h = (b - a) / n as f64;
            let g = |r: f64| f(r) * r.powf(1.5);
            let mut s = g(a) + g(b);
            for i in 1..n {
                s += g(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            4.0 * PI * s * h / 3.0
        };
        let mut prev = f64::INFINITY;
        for n in [5, 10, 20, 40] {
            let grid = build_grid(1.0, n, Grading::Geometric, (1e3f64.ln() / (n - 1) as f64).exp(), 3)
                .unwrap()
                .with_quad_order(2);
            let err = (integrate_radial(&grid, &spec, f).unwrap() - exact).abs();
            assert!(err < prev, "n = {n}: {err} !< {prev}");
            prev = err;
        }
    }

    #[test]
    fn stiffness_kills_constants_under_neumann() {
        let grid = geometric(40, 1e-4, 3);
        let forms = DiscreteForms::assemble(&grid, &WeightSpec::constant(3), BoundaryCondition::Neumann).unwrap();
        for v in forms.a.row_sums() {
            assert!(v.abs() < 1e-12 * forms.a.diag.iter().cloned().fold(0.0, f64::max));
        }
    }

    #[test]
    fn hand_assembled_mass_pattern() {
        // two uniform cells, density ≡ 1: standard h/6 {1, 4, 1} interior row
        let grid = build_grid(2.0, 3, Grading::Uniform, 0.0, 1).unwrap();
        let (a, m, s) = assemble_with_density(&grid, |_| Ok(1.0)).unwrap();
        let h = 2.0 / 3.0;
        assert_relative_eq!(m.get(1, 0), h / 6.0, max_relative = 1e-14);
        assert_relative_eq!(m.get(1, 1), 4.0 * h / 6.0, max_relative = 1e-14);
        assert_relative_eq!(m.get(1, 2), h / 6.0, max_relative = 1e-14);
        assert_relative_eq!(m.get(0, 0), 2.0 * h / 6.0, max_relative = 1e-14);
        assert_relative_eq!(a.get(1, 1), 2.0 / h, max_relative = 1e-14);
        assert_relative_eq!(a.get(0, 1), -1.0 / h, max_relative = 1e-14);
        assert!(s.get(1, 1) > m.get(1, 1) / 4.0);

        // with the r^{N-1} factor (N = 3, ω₀ overridden to 1): exact cubic-in-r integrals
        let (_, m3, _) = assemble_with_density(&grid, |r| Ok(r * r)).unwrap();
        let (x0, x1) = (2.0 / 3.0, 4.0 / 3.0);
        // ∫_{x0}^{x1} r² φ₁(r) φ₂(r) dr with φ₁ = (x1 - r)/h, φ₂ = (r - x0)/h
        let mut oracle = 0.0;
        let steps = 200_000;
        let dr = (x1 - x0) / steps as f64;
        for i in 0..steps {
            let r = x0 + dr * (i as f64 + 0.5);
            oracle += dr * r * r * (x1 - r) * (r - x0) / (h * h);
        }
        assert_relative_eq!(m3.get(0, 1), oracle, max_relative = 1e-9);
    }

    #[test]
    fn singular_mass_dominates_scaled_mass() {
        let grid = geometric(60, 1e-3, 3);
        let forms = DiscreteForms::assemble(&grid, &WeightSpec::exp_poly(3, 0.5, 1.0, 2.0), BoundaryCondition::Neumann).unwrap();
        // S - M/R² is positive semidefinite: its smallest eigenvalue relative to M is >= 0
        let diff = forms.s.lin_comb(1.0, &forms.m, -1.0);
        let pair = generalized_eigenpair(&diff, &forms.m, 0, &EigenOptions::default()).unwrap();
        assert!(pair.value >= -1e-10, "{}", pair.value);
    }

    #[test]
    fn dirichlet_drops_outer_node() {
        let grid = geometric(20, 1e-3, 3);
        let d = DiscreteForms::assemble(&grid, &WeightSpec::constant(3), BoundaryCondition::Dirichlet).unwrap();
        let n = DiscreteForms::assemble(&grid, &WeightSpec::constant(3), BoundaryCondition::Neumann).unwrap();
        assert_eq!(d.dofs(), 19);
        assert_eq!(n.dofs(), 20);
        assert_eq!(d.a.diag[..19], n.a.diag[..19]);
    }

    #[test]
    fn projection_examples() {
        let grid = geometric(10, 1e-2, 3);
        assert_eq!(project(&grid, |_| 1.0).unwrap(), vec![1.0; 10]);
        let eps = 0.1;
        let eta = -0.3;
        let v = project(&grid, |r| (eps + r).powf(eta)).unwrap();
        for (x, r) in v.iter().zip(&grid.nodes) {
            assert_eq!(*x, (eps + r).powf(eta));
        }
        assert!(project(&grid, |r| 1.0 / (r - grid.nodes[3])).is_err());
    }

    #[test]
    fn truncation_caps_potential() {
        let grid = geometric(50, 1e-4, 3);
        let forms = DiscreteForms::assemble(&grid, &WeightSpec::constant(3), BoundaryCondition::Neumann).unwrap();
        let huge = forms.truncated_singular(0.5, 1e12).unwrap();
        assert_eq!(huge, forms.s, "cap above 1/r1² changes nothing");
        let capped = forms.truncated_singular(0.5, 10.0).unwrap();
        // c·S_n ≤ trunc_n·M in the quadratic-form sense on a test vector
        let v: Vec<f64> = (0..forms.dofs()).map(|i| 1.0 + (i as f64).sin()).collect();
        assert!(0.5 * capped.quad_form(&v) <= 10.0 * forms.m.quad_form(&v) * (1.0 + 1e-12));
        assert!(capped.quad_form(&v) <= forms.s.quad_form(&v));
    }

    #[test]
    fn triplet_export_is_symmetric_and_precise() {
        let grid = geometric(6, 1e-2, 3);
        let forms = DiscreteForms::assemble(&grid, &WeightSpec::constant(3), BoundaryCondition::Dirichlet).unwrap();
        let dir = std::env::temp_dir().join(format!("hardy-triplets-{}", std::process::id()));
        forms.export_triplets(&dir).unwrap();
        let text = std::fs::read_to_string(dir.join("S.txt")).unwrap();
        let rows: Vec<(usize, usize, f64)> = text
            .lines()
            .map(|l| {
                let p: Vec<&str> = l.split(' ').collect();
                (p[0].parse().unwrap(), p[1].parse().unwrap(), p[2].parse().unwrap())
            })
            .collect();
        assert_eq!(rows.len(), 3 * 5 - 2);
        for &(i, j, v) in &rows {
            assert_eq!(v, forms.s.get(i, j), "17 digits round-trip exactly");
            assert_eq!(v, forms.s.get(j, i));
        }
        std::fs::remove_dir_all(dir).ok();
    }
}
