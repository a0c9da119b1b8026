//! Symmetric tridiagonal matrices and the generalized eigensolver used by
//! every variational computation in the crate.
//!
//! The smallest eigenvalues of a pencil `K x = λ B x` (B positive definite)
//! are located by Sylvester-inertia bisection: the number of negative pivots
//! of `LDLᵀ(K − σB)` equals the number of eigenvalues below `σ`. The
//! eigenvector is then recovered by shifted inverse iteration from a seeded
//! random start vector. Both steps work on the diagonally equilibrated pencil
//! `D K D`, `D B D` with `D = diag(B)^{-1/2}`, which removes the `r^{N-1}`
//! scaling of graded meshes.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn zeros(n: usize) -> Self {
        SymTridiag {
            diag: vec![0.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn identity(n: usize) -> Self {
        SymTridiag {
            diag: vec![1.0; n],
            off: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match i.abs_diff(j) {
            0 => self.diag[i],
            1 => self.off[i.min(j)],
            _ => 0.0,
        }
    }

    /// Add a 2×2 element matrix on rows/columns `(i, i + 1)`.
    pub fn add_element(&mut self, i: usize, local: [[f64; 2]; 2]) {
        self.diag[i] += local[0][0];
        self.diag[i + 1] += local[1][1];
        self.off[i] += 0.5 * (local[0][1] + local[1][0]);
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        let mut y: Vec<f64> = self.diag.iter().zip(x).map(|(d, v)| d * v).collect();
        for i in 0..n.saturating_sub(1) {
            y[i] += self.off[i] * x[i + 1];
            y[i + 1] += self.off[i] * x[i];
        }
        y
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.matvec(x))
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    /// `a · self + b · other`.
    pub fn lin_comb(&self, a: f64, other: &SymTridiag, b: f64) -> SymTridiag {
        assert_eq!(self.len(), other.len());
        SymTridiag {
            diag: self.diag.iter().zip(&other.diag).map(|(x, y)| a * x + b * y).collect(),
            off: self.off.iter().zip(&other.off).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    /// Leading `n × n` block.
    pub fn leading(&self, n: usize) -> SymTridiag {
        SymTridiag {
            diag: self.diag[..n].to_vec(),
            off: self.off[..n.saturating_sub(1)].to_vec(),
        }
    }

    /// `D A D` for diagonal `D = diag(scale)`.
    pub fn congruence(&self, scale: &[f64]) -> SymTridiag {
        SymTridiag {
            diag: self.diag.iter().zip(scale).map(|(d, s)| d * s * s).collect(),
            off: self
                .off
                .iter()
                .enumerate()
                .map(|(i, e)| e * scale[i] * scale[i + 1])
                .collect(),
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.matvec(&vec![1.0; self.len()])
    }

    /// All nonzero-pattern entries `(row, col, value)`, both triangles.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::with_capacity(3 * self.len());
        for i in 0..self.len() {
            if i > 0 {
                out.push((i, i - 1, self.off[i - 1]));
            }
            out.push((i, i, self.diag[i]));
            if i + 1 < self.len() {
                out.push((i, i + 1, self.off[i]));
            }
        }
        out
    }

    /// `LDLᵀ` factorization without pivoting. Exact zero pivots are nudged to
    /// a tiny value of the appropriate scale so inertia counts stay defined.
    pub fn ldl(&self) -> Ldl {
        let n = self.len();
        let mut d = Vec::with_capacity(n);
        let mut l = Vec::with_capacity(n.saturating_sub(1));
        for i in 0..n {
            let mut pivot = self.diag[i];
            if i > 0 {
                let e = self.off[i - 1];
                let prev = d[i - 1];
                pivot -= e * (e / prev);
                l.push(e / prev);
            }
            if pivot == 0.0 {
                pivot = f64::EPSILON * (self.diag[i].abs() + f64::MIN_POSITIVE);
            }
            d.push(pivot);
        }
        Ldl { d, l }
    }

    /// `(A − σB)` negative pivot count, without storing the factors.
    pub fn inertia_below(&self, b: &SymTridiag, sigma: f64) -> usize {
        let mut count = 0;
        let mut prev = 1.0;
        for i in 0..self.len() {
            let a = self.diag[i] - sigma * b.diag[i];
            let mut pivot = if i == 0 {
                a
            } else {
                let e = self.off[i - 1] - sigma * b.off[i - 1];
                a - e * (e / prev)
            };
            if pivot == 0.0 {
                pivot = -f64::EPSILON * (a.abs() + f64::MIN_POSITIVE);
            }
            if pivot < 0.0 {
                count += 1;
            }
            prev = pivot;
        }
        count
    }
}

#[derive(Debug, Clone)]
pub struct Ldl {
    pub d: Vec<f64>,
    pub l: Vec<f64>,
}

impl Ldl {
    pub fn negative_pivots(&self) -> usize {
        self.d.iter().filter(|p| **p < 0.0).count()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.d.iter().all(|p| *p > 0.0)
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.d.len();
        let mut y = rhs.to_vec();
        for i in 1..n {
            y[i] -= self.l[i - 1] * y[i - 1];
        }
        for i in 0..n {
            y[i] /= self.d[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            y[i] -= self.l[i] * y[i + 1];
        }
        y
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Seeded start vector with entries in `[0.5, 1.5)`.
pub fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| 0.5 + (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenOptions {
    pub seed: u64,
    pub max_bisection: usize,
    pub max_inverse_iterations: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            seed: 0x5eed,
            max_bisection: 400,
            max_inverse_iterations: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    /// Eigenvector in the original coordinates, normalized to `xᵀBx = 1`.
    pub vector: Vec<f64>,
    /// `‖(K − λB)x‖₂ / ‖Bx‖₂`.
    pub residual: f64,
    /// Same quantity on the equilibrated pencil.
    pub scaled_residual: f64,
}

/// Residual threshold an eigenpair must meet to be accepted.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// `index`-th smallest eigenpair (0-based) of `K x = λ B x`.
pub fn generalized_eigenpair(k: &SymTridiag, b: &SymTridiag, index: usize, opts: &EigenOptions) -> Result<EigenPair> {
    let n = k.len();
    if n == 0 || b.len() != n {
        return Err(Error::InvalidParameter(format!(
            "pencil sizes {} and {} are incompatible",
            n,
            b.len()
        )));
    }
    if index >= n {
        return Err(Error::InvalidParameter(format!("eigen index {index} out of range for size {n}")));
    }
    if let Some(i) = b.diag.iter().position(|d| !(*d > 0.0) || !d.is_finite()) {
        return Err(Error::NotPositiveDefinite(format!("B has diagonal entry {} at {i}", b.diag[i])));
    }
    if k.diag.iter().chain(&k.off).any(|v| !v.is_finite()) {
        return Err(Error::Solver("K has non-finite entries".into()));
    }
    let scale: Vec<f64> = b.diag.iter().map(|d| 1.0 / d.sqrt()).collect();
    let kh = k.congruence(&scale);
    let bh = b.congruence(&scale);
    if !bh.ldl().is_positive_definite() {
        return Err(Error::NotPositiveDefinite("B is not positive definite".into()));
    }

    // bracket [lo, hi] with count(lo) <= index < count(hi)
    let ones = vec![1.0; n];
    let rq = kh.quad_form(&ones) / bh.quad_form(&ones);
    let mut step = rq.abs().max(1.0);
    let mut hi = rq + f64::EPSILON * rq.abs();
    let mut guard = 0;
    while kh.inertia_below(&bh, hi) <= index {
        hi += step;
        step *= 2.0;
        guard += 1;
        if guard > 2000 || !hi.is_finite() {
            return Err(Error::Solver("could not bracket eigenvalue from above".into()));
        }
    }
    let mut step = rq.abs().max(1.0);
    let mut lo = hi - step;
    guard = 0;
    while kh.inertia_below(&bh, lo) > index {
        lo -= step;
        step *= 2.0;
        guard += 1;
        if guard > 2000 || !lo.is_finite() {
            return Err(Error::Solver("could not bracket eigenvalue from below".into()));
        }
    }
    let mut converged = false;
    for _ in 0..opts.max_bisection {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            converged = true;
            break;
        }
        if kh.inertia_below(&bh, mid) > index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if !converged {
        return Err(Error::Solver(format!(
            "bisection did not converge in {} steps (bracket [{lo}, {hi}])",
            opts.max_bisection
        )));
    }

    // shifted inverse iteration just below the eigenvalue
    let width = (hi - lo).max(4.0 * f64::EPSILON * lo.abs().max(1e-300));
    let mut y = start_vector(n, opts.seed);
    let mut value = lo;
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for attempt in 0..4 {
        let shift = lo - width * 10f64.powi(attempt);
        let factor = kh.lin_comb(1.0, &bh, -shift).ldl();
        let mut x = y.clone();
        let mut ok = true;
        for _ in 0..opts.max_inverse_iterations {
            let rhs = bh.matvec(&x);
            let mut z = factor.solve(&rhs);
            let norm = bh.quad_form(&z).sqrt();
            if !norm.is_finite() || norm == 0.0 {
                ok = false;
                break;
            }
            z.iter_mut().for_each(|v| *v /= norm);
            let prev = value;
            value = kh.quad_form(&z);
            x = z;
            if (value - prev).abs() <= 4.0 * f64::EPSILON * value.abs() {
                break;
            }
        }
        if !ok {
            continue;
        }
        let r = pencil_residual(&kh, &bh, value, &x);
        if best.as_ref().map_or(true, |(_, _, br)| r < *br) {
            best = Some((value, x.clone(), r));
        }
        if r <= RESIDUAL_TOL * 1e-3 {
            break;
        }
        y = x;
    }
    let (value, yv, scaled_residual) =
        best.ok_or_else(|| Error::Solver("inverse iteration broke down for every shift".into()))?;
    let vector: Vec<f64> = yv.iter().zip(&scale).map(|(v, s)| v * s).collect();
    let residual = pencil_residual(k, b, value, &vector);
    Ok(EigenPair {
        value,
        vector,
        residual,
        scaled_residual,
    })
}

/// `‖(K − λB)x‖₂ / ‖Bx‖₂`.
pub fn pencil_residual(k: &SymTridiag, b: &SymTridiag, lambda: f64, x: &[f64]) -> f64 {
    let kx = k.matvec(x);
    let bx = b.matvec(x);
    let r: Vec<f64> = kx.iter().zip(&bx).map(|(a, c)| a - lambda * c).collect();
    norm2(&r) / norm2(&bx)
}

/// Rayleigh quotient `xᵀKx / xᵀBx`.
pub fn rayleigh_quotient(k: &SymTridiag, b: &SymTridiag, x: &[f64]) -> f64 {
    k.quad_form(x) / b.quad_form(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Dense Jacobi eigenvalues of a small symmetric matrix (test oracle).
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..200 {
            let mut off = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        off += a[i][j] * a[i][j];
                    }
                }
            }
            if off < 1e-26 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }

    fn dense(m: &SymTridiag) -> Vec<Vec<f64>> {
        let n = m.len();
        (0..n).map(|i| (0..n).map(|j| m.get(i, j)).collect()).collect()
    }

    #[test]
    fn laplacian_eigenvalues() {
        // 1D Dirichlet Laplacian stencil: λ_k = 2 - 2cos(kπ/(n+1))
        let n = 50;
        let k = SymTridiag {
            diag: vec![2.0; n],
            off: vec![-1.0; n - 1],
        };
        let b = SymTridiag::identity(n);
        for idx in 0..3 {
            let pair = generalized_eigenpair(&k, &b, idx, &EigenOptions::default()).unwrap();
            let want = 2.0 - 2.0 * (((idx + 1) as f64) * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            assert!((pair.value - want).abs() < 1e-13, "{} vs {}", pair.value, want);
            assert!(pair.residual < 1e-10);
        }
    }

    #[test]
    fn ldl_solves() {
        let a = SymTridiag {
            diag: vec![4.0, 5.0, 6.0, 7.0],
            off: vec![1.0, -2.0, 0.5],
        };
        let x = vec![1.0, -2.0, 3.0, 0.25];
        let rhs = a.matvec(&x);
        let got = a.ldl().solve(&rhs);
        for (g, w) in got.iter().zip(&x) {
            assert!((g - w).abs() < 1e-14);
        }
    }

    #[test]
    fn start_vector_is_deterministic() {
        assert_eq!(start_vector(10, 7), start_vector(10, 7));
        assert_ne!(start_vector(10, 7), start_vector(10, 8));
        assert!(start_vector(100, 1).iter().all(|v| (0.5..1.5).contains(v)));
    }

    fn pencil_strategy() -> impl Strategy<Value = (SymTridiag, SymTridiag)> {
        (3usize..9).prop_flat_map(|n| {
            (
                prop::collection::vec(-3.0f64..3.0, n),
                prop::collection::vec(-1.0f64..1.0, n - 1),
                prop::collection::vec(0.5f64..2.0, n),
                prop::collection::vec(-0.2f64..0.2, n - 1),
            )
                .prop_map(|(kd, ko, bd, bo)| (SymTridiag { diag: kd, off: ko }, SymTridiag { diag: bd, off: bo }))
        })
    }

    proptest! {
        #[test]
        fn smallest_matches_dense_oracle((k, b) in pencil_strategy()) {
            // B = LLᵀ via dense Cholesky, then eigenvalues of L⁻¹ K L⁻ᵀ
            let n = k.len();
            let bd = dense(&b);
            let mut l = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..=i {
                    let s: f64 = (0..j).map(|p| l[i][p] * l[j][p]).sum();
                    if i == j { l[i][i] = (bd[i][i] - s).sqrt(); } else { l[i][j] = (bd[i][j] - s) / l[j][j]; }
                }
            }
            let kd = dense(&k);
            // solve L Y = K, then L Z = Yᵀ
            let lsolve = |rhs: &Vec<Vec<f64>>| {
                let mut y = rhs.clone();
                for c in 0..n {
                    for i in 0..n {
                        let s: f64 = (0..i).map(|p| l[i][p] * y[p][c]).sum();
                        y[i][c] = (rhs[i][c] - s) / l[i][i];
                    }
                }
                y
            };
            let y = lsolve(&kd);
            let yt: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| y[j][i]).collect()).collect();
            let c = lsolve(&yt);
            let oracle = jacobi_eigenvalues(c);
            for idx in 0..2 {
                let pair = generalized_eigenpair(&k, &b, idx, &EigenOptions::default()).unwrap();
                prop_assert!((pair.value - oracle[idx]).abs() <= 1e-9 * (1.0 + oracle[idx].abs()),
                    "index {}: {} vs {}", idx, pair.value, oracle[idx]);
                prop_assert!(pair.residual < 1e-8);
            }
            // variational upper bound for arbitrary vectors
            let v: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin() + 0.1).collect();
            prop_assert!(rayleigh_quotient(&k, &b, &v) >= oracle[0] - 1e-12);
        }
    }
}
