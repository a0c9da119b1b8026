use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grading {
    Uniform,
    Geometric,
}

/// Graded mesh `0 < r₁ < … < r_n = R` of the radial half-line.
///
/// The origin is never a node: the inverse-square potential and the power
/// weights are singular there, and the optimality mechanism shows up as
/// divergence as `r₁ → 0` rather than on any fixed mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub grading: Grading,
    /// Gauss points per cell.
    pub quad_order: usize,
    pub dim: u32,
}

pub const DEFAULT_QUAD_ORDER: usize = 4;

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().expect("grid has nodes")
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn with_quad_order(mut self, quad_order: usize) -> Self {
        self.quad_order = quad_order;
        self
    }

    /// Same node pattern scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        RadialGrid {
            nodes: self.nodes.iter().map(|r| r * factor).collect(),
            ..self.clone()
        }
    }

    /// Whether every node of `self` is also a node of `finer`.
    pub fn is_nested_in(&self, finer: &RadialGrid) -> bool {
        let mut j = 0;
        for &r in &self.nodes {
            while j < finer.nodes.len() && finer.nodes[j] < r {
                j += 1;
            }
            if j == finer.nodes.len() || (finer.nodes[j] - r).abs() > 1e-12 * r {
                return false;
            }
        }
        true
    }
}

/// Build a radial grid with `n` nodes ending exactly at `r_max`.
///
/// - `Uniform`: `r_i = i R / n`, `i = 1..n`.
/// - `Geometric`: `r_i = R q^{-(n-i)}`, so `r₁ = R q^{-(n-1)}`.
///
/// `ratio` is ignored for uniform grading.
pub fn build_grid(r_max: f64, n: usize, grading: Grading, ratio: f64, dim: u32) -> Result<RadialGrid> {
    if !(r_max > 0.0) || !r_max.is_finite() {
        return Err(Error::InvalidParameter(format!("R must be positive, got {r_max}")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("a grid needs at least 2 nodes, got {n}")));
    }
    if dim < 1 {
        return Err(Error::InvalidParameter("dim must be positive".into()));
    }
    let nodes: Vec<f64> = match grading {
        Grading::Uniform => (1..=n).map(|i| r_max * i as f64 / n as f64).collect(),
        Grading::Geometric => {
            if !(ratio > 1.0) || !ratio.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "geometric grading needs ratio > 1, got {ratio}"
                )));
            }
            let log_q = ratio.ln();
            (1..=n)
                .map(|i| {
                    if i == n {
                        r_max
                    } else {
                        r_max * (-(log_q * (n - i) as f64)).exp()
                    }
                })
                .collect()
        }
    };
    if !(nodes[0] > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "innermost node underflows to {} (R = {r_max}, n = {n}, ratio = {ratio})",
            nodes[0]
        )));
    }
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("nodes are not strictly increasing".into()));
    }
    Ok(RadialGrid {
        nodes,
        grading,
        quad_order: DEFAULT_QUAD_ORDER,
        dim,
    })
}

/// Nested geometric refinement ladder.
///
/// All rungs share the cell ratio `q`; rung `k` has `base_nodes · 2^k` nodes,
/// so each rung extends the previous one toward the origin. Rung node sets
/// are nested, which makes discrete minima non-increasing along the ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub r_max: f64,
    /// Innermost node of the finest rung.
    pub r_min: f64,
    /// Node count of the coarsest rung.
    pub base_nodes: usize,
    pub rungs: usize,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
}

fn default_quad_order() -> usize {
    DEFAULT_QUAD_ORDER
}

impl Ladder {
    pub fn finest_nodes(&self) -> usize {
        self.base_nodes << (self.rungs - 1)
    }

    /// Common cell ratio `q = (R / r_min)^{1/(n_finest - 1)}`.
    pub fn ratio(&self) -> f64 {
        ((self.r_max / self.r_min).ln() / (self.finest_nodes() - 1) as f64).exp()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rungs == 0 || self.base_nodes < 2 {
            return Err(Error::InvalidParameter("ladder needs rungs >= 1 and base_nodes >= 2".into()));
        }
        if !(self.r_min > 0.0 && self.r_max > self.r_min) {
            return Err(Error::InvalidParameter(format!(
                "ladder needs 0 < r_min < r_max, got {} and {}",
                self.r_min, self.r_max
            )));
        }
        if self.quad_order < 2 {
            return Err(Error::InvalidParameter("quad_order must be >= 2".into()));
        }
        Ok(())
    }

    pub fn grids(&self, dim: u32) -> Result<Vec<RadialGrid>> {
        self.validate()?;
        let q = self.ratio();
        (0..self.rungs)
            .map(|k| {
                build_grid(self.r_max, self.base_nodes << k, Grading::Geometric, q, dim)
                    .map(|g| g.with_quad_order(self.quad_order))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_example() {
        let g = build_grid(1.0, 3, Grading::Uniform, 0.0, 3).unwrap();
        assert_eq!(g.nodes, vec![1.0 / 3.0, 2.0 / 3.0, 1.0]);
    }

    #[test]
    fn dyadic_example() {
        let g = build_grid(1.0, 4, Grading::Geometric, 2.0, 3).unwrap();
        let want = [0.125, 0.25, 0.5, 1.0];
        for (a, b) in g.nodes.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(g.r_max(), 1.0);
    }

    #[test]
    fn refinement_halves_uniform_width() {
        let coarse = build_grid(2.0, 10, Grading::Uniform, 0.0, 3).unwrap();
        let fine = build_grid(2.0, 20, Grading::Uniform, 0.0, 3).unwrap();
        let h = |g: &RadialGrid| g.nodes[1] - g.nodes[0];
        assert!((h(&coarse) - 2.0 * h(&fine)).abs() < 1e-15);
        assert!(coarse.is_nested_in(&fine));
    }

    #[test]
    fn geometric_first_node() {
        let g = build_grid(3.0, 50, Grading::Geometric, 1.3, 5).unwrap();
        assert!((g.r_min() - 3.0 * 1.3f64.powi(-49)).abs() < 1e-12 * g.r_min());
        assert!(g.nodes.windows(2).all(|w| ((w[1] / w[0]) - 1.3).abs() < 1e-12));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(build_grid(1.0, 1, Grading::Uniform, 0.0, 3).is_err());
        assert!(build_grid(1.0, 10, Grading::Geometric, 1.0, 3).is_err());
        assert!(build_grid(0.0, 10, Grading::Uniform, 0.0, 3).is_err());
        assert!(build_grid(1.0, 5000, Grading::Geometric, 2.0, 3).is_err(), "r1 underflows");
    }

    #[test]
    fn ladder_is_nested_and_reaches_r_min() {
        let ladder = Ladder {
            r_max: 1.0,
            r_min: 1e-20,
            base_nodes: 32,
            rungs: 4,
            quad_order: 4,
        };
        let grids = ladder.grids(3).unwrap();
        assert_eq!(grids.iter().map(|g| g.len()).collect::<Vec<_>>(), [32, 64, 128, 256]);
        assert!((grids[3].r_min() / 1e-20 - 1.0).abs() < 1e-9);
        for w in grids.windows(2) {
            assert!(w[0].is_nested_in(&w[1]));
            assert!(w[1].r_min() < w[0].r_min());
        }
    }
}
