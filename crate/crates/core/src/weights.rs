//! Radial weight families `μ(r)` and executable versions of the hypotheses
//! the Hardy inequality and its optimality rest on.
//!
//! Families:
//! - `ExpPoly`:  `μ(r) = r^{-γ} e^{-δ r^m}`
//! - `LogPow`:   `μ(r) = [log(1 + r)]^{-γ}`
//! - `CosExp`:   `μ(r) = cos(e^{-r²})`
//! - `Constant`: `μ(r) = 1`
//!
//! Regularity and local integrability requirements (H1, H2, H4, H5, H7, H8)
//! are decidable from the closed forms and are enforced as parameter ranges
//! when a [`WeightSpec`] is built or deserialized.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    ExpPoly,
    LogPow,
    CosExp,
    Constant,
}

/// A member of one of the radial weight families together with the Hardy
/// hypothesis constants `(k₁, k₂)` it is paired with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeightSpec")]
pub struct WeightSpec {
    pub family: Family,
    pub gamma: f64,
    pub delta: f64,
    pub m: f64,
    pub k1: f64,
    pub k2: f64,
    pub dim: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeightSpec {
    family: Family,
    gamma: f64,
    delta: f64,
    m: f64,
    k1: f64,
    k2: f64,
    dim: u32,
}

impl TryFrom<RawWeightSpec> for WeightSpec {
    type Error = Error;

    fn try_from(raw: RawWeightSpec) -> Result<Self> {
        let spec = WeightSpec {
            family: raw.family,
            gamma: raw.gamma,
            delta: raw.delta,
            m: raw.m,
            k1: raw.k1,
            k2: raw.k2,
            dim: raw.dim,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl WeightSpec {
    /// `μ ≡ 1` in dimension `dim` with `k₁ = k₂ = 0`.
    pub fn constant(dim: u32) -> Self {
        WeightSpec {
            family: Family::Constant,
            gamma: 0.0,
            delta: 0.0,
            m: 1.0,
            k1: 0.0,
            k2: 0.0,
            dim,
        }
    }

    /// `μ = r^{-γ} e^{-δ r^m}`; Hardy constants must be set separately.
    pub fn exp_poly(dim: u32, gamma: f64, delta: f64, m: f64) -> Self {
        WeightSpec {
            family: Family::ExpPoly,
            gamma,
            delta,
            m,
            k1: 0.0,
            k2: 0.0,
            dim,
        }
    }

    /// `μ = r^{-γ}` with the constants that make H3 an identity (`k₁ = 0`, `k₂ = -γ`).
    pub fn power(dim: u32, gamma: f64) -> Self {
        Self::exp_poly(dim, gamma, 0.0, 1.0).with_constants(0.0, -gamma)
    }

    pub fn log_pow(dim: u32, gamma: f64) -> Self {
        WeightSpec {
            family: Family::LogPow,
            gamma,
            delta: 0.0,
            m: 1.0,
            k1: 0.0,
            k2: -gamma,
            dim,
        }
    }

    pub fn cos_exp(dim: u32) -> Self {
        WeightSpec {
            family: Family::CosExp,
            ..Self::constant(dim)
        }
    }

    pub fn with_constants(mut self, k1: f64, k2: f64) -> Self {
        self.k1 = k1;
        self.k2 = k2;
        self
    }

    /// Check the per-family parameter ranges.
    pub fn validate(&self) -> Result<()> {
        let n = self.dim as f64;
        for (name, v) in [
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("m", self.m),
            ("k1", self.k1),
            ("k2", self.k2),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("{name} must be finite, got {v}")));
            }
        }
        if self.dim < 3 {
            return Err(invalid(format!("dim must be >= 3, got {}", self.dim)));
        }
        if self.k2 <= 2.0 - n {
            return Err(invalid(format!(
                "k2 must exceed 2 - N = {}, got {}",
                2.0 - n,
                self.k2
            )));
        }
        if self.m <= 0.0 {
            return Err(invalid(format!("m must be positive, got {}", self.m)));
        }
        if self.delta < 0.0 {
            return Err(invalid(format!("delta must be >= 0, got {}", self.delta)));
        }
        match self.family {
            Family::ExpPoly => {
                if !(self.gamma > -n && self.gamma < n - 2.0) {
                    return Err(invalid(format!(
                        "ExpPoly needs -N < gamma < N - 2, got gamma = {} with N = {}",
                        self.gamma, self.dim
                    )));
                }
            }
            Family::LogPow => {
                if self.gamma >= n - 2.0 {
                    return Err(invalid(format!(
                        "LogPow needs gamma < N - 2, got {}",
                        self.gamma
                    )));
                }
                if self.delta != 0.0 {
                    return Err(invalid("LogPow has no exponential factor; delta must be 0"));
                }
            }
            Family::CosExp | Family::Constant => {
                if self.gamma != 0.0 || self.delta != 0.0 {
                    return Err(invalid(format!(
                        "{:?} fixes gamma = delta = 0",
                        self.family
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim_f64(&self) -> f64 {
        self.dim as f64
    }

    /// Small-r exponent: `μ(r) ~ r^{-γ}` as `r → 0`.
    pub fn small_r_exponent(&self) -> f64 {
        match self.family {
            Family::ExpPoly | Family::LogPow => -self.gamma,
            Family::CosExp | Family::Constant => 0.0,
        }
    }
}

/// `μ(r)`. Accepts `r = 0` for families that are finite and positive there.
pub fn eval_weight(spec: &WeightSpec, r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Domain {
            r,
            what: "radius must be finite and non-negative".into(),
        });
    }
    let value = match spec.family {
        Family::Constant => 1.0,
        Family::ExpPoly => {
            let power = if spec.gamma == 0.0 { 1.0 } else { r.powf(-spec.gamma) };
            let tail = if spec.delta == 0.0 {
                1.0
            } else {
                (-spec.delta * r.powf(spec.m)).exp()
            };
            power * tail
        }
        Family::LogPow => r.ln_1p().powf(-spec.gamma),
        Family::CosExp => (-r * r).exp().cos(),
    };
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::Domain {
            r,
            what: format!("weight evaluates to {value}"),
        });
    }
    Ok(value)
}

/// Logarithmic derivative `μ'(r)/μ(r)`, the radial drift of `L`.
pub fn eval_log_drift(spec: &WeightSpec, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain {
            r,
            what: "drift is singular at r = 0".into(),
        });
    }
    let value = match spec.family {
        Family::Constant => 0.0,
        Family::ExpPoly => -spec.gamma / r - spec.delta * spec.m * r.powf(spec.m - 1.0),
        Family::LogPow => -spec.gamma / ((1.0 + r) * r.ln_1p()),
        Family::CosExp => {
            let s = (-r * r).exp();
            2.0 * r * s * s.tan()
        }
    };
    if !value.is_finite() {
        return Err(Error::Domain {
            r,
            what: format!("drift evaluates to {value}"),
        });
    }
    Ok(value)
}

/// `r μ'(r)/μ(r)`, finite at `r = 0` for every family.
pub fn radial_flux(spec: &WeightSpec, r: f64) -> f64 {
    match spec.family {
        Family::Constant => 0.0,
        Family::ExpPoly => -spec.gamma - spec.delta * spec.m * r.powf(spec.m),
        Family::LogPow => {
            if r == 0.0 {
                -spec.gamma
            } else {
                -spec.gamma * r / ((1.0 + r) * r.ln_1p())
            }
        }
        Family::CosExp => {
            let s = (-r * r).exp();
            2.0 * r * r * s * s.tan()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H3Report {
    pub holds: bool,
    /// Largest excess of LHS − RHS over the scan set and the analytic limits,
    /// normalized by `μ(r)`; `+inf` when the large-r limit is unbounded.
    #[serde(with = "crate::io::lenient_f64")]
    pub max_violation: f64,
    /// Radius of the largest excess (`+inf` when attained in the large-r limit).
    #[serde(with = "crate::io::lenient_f64")]
    pub witness_r: f64,
    pub alpha: f64,
    pub eps: f64,
    /// Tolerance the excess was compared against.
    pub tolerance: f64,
    /// The weight the check was run on.
    pub spec: WeightSpec,
}

/// `α r (μ'/μ)/(ε + r²) − k₁ − k₂ α/(ε + r²)`: H3 divided through by `μ(r) > 0`.
pub fn h3_excess(spec: &WeightSpec, alpha: f64, eps: f64, r: f64) -> f64 {
    let denom = eps + r * r;
    alpha * radial_flux(spec, r) / denom - spec.k1 - spec.k2 * alpha / denom
}

/// Closed-form limit of [`h3_excess`] as `r → ∞`.
fn h3_excess_at_infinity(spec: &WeightSpec, alpha: f64) -> f64 {
    match spec.family {
        Family::ExpPoly if spec.delta > 0.0 => {
            if spec.m > 2.0 {
                f64::INFINITY
            } else if spec.m == 2.0 {
                -alpha * spec.delta * spec.m - spec.k1
            } else {
                -spec.k1
            }
        }
        _ => -spec.k1,
    }
}

/// Scan tolerance `1e-9 (1 + |k₁| + |k₂||α|/ε)`.
pub fn h3_tolerance(spec: &WeightSpec, alpha: f64, eps: f64) -> f64 {
    1e-9 * (1.0 + spec.k1.abs() + spec.k2.abs() * alpha.abs() / eps)
}

/// Check `α x·∇μ/(ε+|x|²) ≤ (k₁ + k₂α/(ε+|x|²)) μ` on a radius scan plus the
/// closed-form limits at `r = 0` and `r → ∞`.
pub fn check_h3(spec: &WeightSpec, alpha: f64, eps: f64, r_scan: &[f64]) -> Result<H3Report> {
    if r_scan.is_empty() {
        return Err(invalid("H3 scan set is empty"));
    }
    if !(alpha < 0.0) {
        return Err(invalid(format!("alpha must be negative, got {alpha}")));
    }
    if !(eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    let mut max_violation = h3_excess(spec, alpha, eps, 0.0);
    let mut witness_r = 0.0;
    for &r in r_scan {
        if !(r > 0.0) || !r.is_finite() {
            return Err(invalid(format!("scan radius must be positive, got {r}")));
        }
        let v = h3_excess(spec, alpha, eps, r);
        if !v.is_finite() {
            return Err(Error::Domain {
                r,
                what: "H3 excess is not finite".into(),
            });
        }
        if v > max_violation {
            max_violation = v;
            witness_r = r;
        }
    }
    let at_infinity = h3_excess_at_infinity(spec, alpha);
    if at_infinity > max_violation {
        max_violation = at_infinity;
        witness_r = f64::INFINITY;
    }
    let tolerance = h3_tolerance(spec, alpha, eps);
    Ok(H3Report {
        holds: max_violation <= tolerance,
        max_violation,
        witness_r,
        alpha,
        eps,
        tolerance,
        spec: *spec,
    })
}

/// `count` radii log-spaced on `[lo, hi]`.
pub fn log_scan(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Default H3 scan: 2001 log-spaced radii on `[1e-6, 1e6]`.
pub fn default_scan() -> Vec<f64> {
    log_scan(1e-6, 1e6, 2001)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpPolyCase {
    I,
    Ii,
    Iii,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpPolyClass {
    pub case: ExpPolyCase,
    /// Smallest `k₁` the matching case prescribes (`NaN` for `None`).
    #[serde(with = "crate::io::lenient_f64")]
    pub required_k1: f64,
}

/// Which parameter condition makes `r^{-γ} e^{-δ r^m}` satisfy H3, and the
/// smallest `k₁` that condition allows.
///
/// - (i)   `γ ≤ -k₂`, `δ = 0`: `k₁ = 0`
/// - (ii)  `γ ≤ -k₂`, `m = 2`: `k₁ ≥ -2αδ`
/// - (iii) `γ < -k₂`, `m < 2`: `k₁ ≥ k̃₁`
///
/// The lower bound `γ > -N` is a [`WeightSpec`] invariant and is not repeated
/// here.
pub fn classify_exp_poly(gamma: f64, delta: f64, m: f64, k2: f64, alpha: f64) -> Result<ExpPolyClass> {
    if !(alpha < 0.0) {
        return Err(invalid(format!("alpha must be negative, got {alpha}")));
    }
    if delta < 0.0 || !(m > 0.0) {
        return Err(invalid(format!("need delta >= 0 and m > 0, got {delta}, {m}")));
    }
    let class = if delta == 0.0 && gamma <= -k2 {
        ExpPolyClass {
            case: ExpPolyCase::I,
            required_k1: 0.0,
        }
    } else if m == 2.0 && gamma <= -k2 {
        ExpPolyClass {
            case: ExpPolyCase::Ii,
            required_k1: -2.0 * alpha * delta,
        }
    } else if m < 2.0 && gamma < -k2 {
        let p = 2.0 / m;
        let numerator = (m / 2.0) * (1.0 - m / 2.0).powf(p - 1.0) * (-alpha * delta * m).powf(p);
        let denominator = (alpha * (gamma + k2)).powf(p - 1.0);
        ExpPolyClass {
            case: ExpPolyCase::Iii,
            required_k1: numerator / denominator,
        }
    } else {
        ExpPolyClass {
            case: ExpPolyCase::None,
            required_k1: f64::NAN,
        }
    };
    Ok(class)
}

/// Lower bound on `μ(r)` for `r ≥ r₀` implied by H3:
/// `μ(r₀) (r/r₀)^{k₂ − k₁ε/|α|} exp(−k₁ (r² − r₀²)/(2|α|))`.
pub fn radial_lower_bound(spec: &WeightSpec, r0: f64, r: f64, alpha: f64, eps: f64) -> Result<f64> {
    if !(r0 > 0.0) {
        return Err(invalid(format!("r0 must be positive, got {r0}")));
    }
    if !(r >= r0) {
        return Err(invalid(format!("r = {r} lies below r0 = {r0}")));
    }
    if !(alpha < 0.0) || !(eps > 0.0) {
        return Err(invalid("need alpha < 0 and eps > 0"));
    }
    let mu0 = eval_weight(spec, r0)?;
    let a = alpha.abs();
    let exponent = spec.k2 - spec.k1 * eps / a;
    Ok(mu0 * (r / r0).powf(exponent) * (-spec.k1 * (r * r - r0 * r0) / (2.0 * a)).exp())
}

/// Integral of `r^{p} μ(r)` over `[a, b]` with 8-point Gauss–Legendre in
/// `log r`, split into `pieces` subintervals.
fn log_gauss_integral(spec: &WeightSpec, p: f64, a: f64, b: f64, pieces: usize) -> Result<f64> {
    let rule = crate::discretization::quadrature::GaussLegendre::new(8);
    let (la, lb) = (a.ln(), b.ln());
    let h = (lb - la) / pieces as f64;
    let mut total = 0.0;
    for k in 0..pieces {
        let s0 = la + h * k as f64;
        for (x, w) in rule.points() {
            let s = s0 + 0.5 * h * (x + 1.0);
            let r = s.exp();
            total += 0.5 * h * w * r.powf(p + 1.0) * eval_weight(spec, r)?;
        }
    }
    Ok(total)
}

/// Outcome of the small-r integrability probe at a single exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Integrability {
    Convergent,
    Divergent,
    Unclear,
}

fn probe_integrability(spec: &WeightSpec, delta_prime: f64) -> Result<Integrability> {
    // decade increments of ∫_{r_min}^1 r^{N-1-δ'} μ dr as r_min → 0
    let p = spec.dim_f64() - 1.0 - delta_prime;
    let mut increments = Vec::new();
    for j in 0..24 {
        let hi = 10f64.powi(-j);
        let lo = hi / 10.0;
        increments.push(log_gauss_integral(spec, p, lo, hi, 4)?);
    }
    let tail = &increments[increments.len() - 8..];
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    if ratios.iter().any(|q| !q.is_finite() || *q <= 0.0) {
        return Ok(Integrability::Unclear);
    }
    let spread = ratios.iter().cloned().fold(0.0, f64::max) - ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread > 0.05 {
        return Ok(Integrability::Unclear);
    }
    let q = ratios[ratios.len() - 1];
    Ok(if q < 0.97 {
        Integrability::Convergent
    } else if q > 1.03 {
        Integrability::Divergent
    } else {
        Integrability::Unclear
    })
}

/// `k₂` consistent with H6 (`μ/|x|^δ ∈ L¹_loc` iff `δ < N + k₂`), i.e. the
/// small-r power of `μ`, validated by probing the decade increments of
/// `∫ r^{N-1-δ'} μ dr` just below and just above `δ' = N + k₂`.
///
/// The boundary case `δ' = N + k₂` is treated as non-integrable.
pub fn k2_from_h6(spec: &WeightSpec) -> Result<f64> {
    let k2 = spec.small_r_exponent();
    let critical = spec.dim_f64() + k2;
    let below = probe_integrability(spec, critical - 0.1)?;
    let above = probe_integrability(spec, critical + 0.1)?;
    if below != Integrability::Convergent || above != Integrability::Divergent {
        return Err(Error::H6Validation(format!(
            "expected convergence below and divergence above delta = {critical}, got {below:?} / {above:?}"
        )));
    }
    Ok(k2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weight_examples() {
        let unit = WeightSpec::exp_poly(3, 0.0, 0.0, 1.0);
        assert_eq!(eval_weight(&unit, 7.0).unwrap(), 1.0);
        let inv = WeightSpec::exp_poly(3, 1.0, 0.0, 1.0);
        assert_eq!(eval_weight(&inv, 2.0).unwrap(), 0.5);
        let cos = WeightSpec::cos_exp(3);
        assert_relative_eq!(eval_weight(&cos, 0.0).unwrap(), 1f64.cos(), max_relative = 1e-15);
        assert_relative_eq!(eval_weight(&cos, 0.0).unwrap(), 0.5403023058681398, max_relative = 1e-15);
        assert_eq!(eval_weight(&WeightSpec::constant(4), 123.0).unwrap(), 1.0);
    }

    #[test]
    fn weight_rejects_overflow_and_singular_origin() {
        let grow = WeightSpec::exp_poly(5, -4.5, 0.0, 1.0);
        assert!(matches!(eval_weight(&grow, 1e300), Err(Error::Domain { .. })));
        let inv = WeightSpec::exp_poly(3, 1.0, 0.0, 1.0);
        assert!(eval_weight(&inv, 0.0).is_err());
        assert!(eval_weight(&inv, -1.0).is_err());
    }

    #[test]
    fn drift_examples() {
        let inv = WeightSpec::exp_poly(3, 1.0, 0.0, 1.0);
        assert_eq!(eval_log_drift(&inv, 2.0).unwrap(), -0.5);
        let gauss = WeightSpec::exp_poly(3, 0.0, 1.0, 2.0);
        assert_eq!(eval_log_drift(&gauss, 3.0).unwrap(), -6.0);
        assert_eq!(eval_log_drift(&WeightSpec::constant(3), 0.7).unwrap(), 0.0);
        assert!(eval_log_drift(&inv, 0.0).is_err());
    }

    #[test]
    fn drift_matches_finite_difference_for_all_families() {
        let specs = [
            WeightSpec::exp_poly(5, 1.3, 0.7, 1.5),
            WeightSpec::exp_poly(3, -2.0, 2.0, 2.0),
            WeightSpec::log_pow(5, 1.0),
            WeightSpec::cos_exp(3),
        ];
        for spec in specs {
            for r in [0.05, 0.3, 1.0, 2.5] {
                let h = 1e-5 * r;
                let fd = (eval_weight(&spec, r + h).unwrap().ln() - eval_weight(&spec, r - h).unwrap().ln()) / (2.0 * h);
                let exact = eval_log_drift(&spec, r).unwrap();
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3), "{spec:?} r={r}: {fd} vs {exact}");
                assert_relative_eq!(radial_flux(&spec, r), r * exact, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(WeightSpec::exp_poly(3, 1.0, 0.0, 1.0).validate().is_err(), "gamma = N - 2 excluded");
        assert!(WeightSpec::exp_poly(3, -3.0, 0.0, 1.0).validate().is_err(), "gamma = -N excluded");
        assert!(WeightSpec::exp_poly(3, 0.5, 0.0, 1.0).validate().is_ok());
        assert!(WeightSpec::constant(3).with_constants(0.0, -1.0).validate().is_err(), "k2 = 2 - N excluded");
        assert!(WeightSpec::constant(2).validate().is_err());
        let mut cos = WeightSpec::cos_exp(3);
        cos.gamma = 0.5;
        assert!(cos.validate().is_err());
        assert!(WeightSpec::exp_poly(3, 0.0, -1.0, 2.0).validate().is_err());
        assert!(WeightSpec::exp_poly(3, 0.0, 1.0, 0.0).validate().is_err());
    }

    #[test]
    fn json_field_names_and_strictness() {
        let spec = WeightSpec::exp_poly(5, 1.0, 0.0, 1.0).with_constants(0.0, -1.0);
        let json = serde_json::to_value(spec).unwrap();
        let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["delta", "dim", "family", "gamma", "k1", "k2", "m"]);
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.starts_with(r#"{"family":"ExpPoly","gamma":1.0,"delta":0.0,"m":1.0,"k1":0.0,"k2":-1.0,"dim":5}"#));
        assert_eq!(json["family"], "ExpPoly");
        let back: WeightSpec = serde_json::from_value(json).unwrap();
        assert_eq!(back, spec);

        let extra = r#"{"family":"Constant","gamma":0,"delta":0,"m":1,"k1":0,"k2":0,"dim":3,"x":1}"#;
        assert!(serde_json::from_str::<WeightSpec>(extra).is_err());
        let bad = r#"{"family":"ExpPoly","gamma":2,"delta":0,"m":1,"k1":0,"k2":0,"dim":3}"#;
        assert!(serde_json::from_str::<WeightSpec>(bad).is_err());
    }

    #[test]
    fn h3_power_weight_is_an_identity() {
        let spec = WeightSpec::power(3, 0.5).with_constants(0.0, -0.5);
        let scan = log_scan(0.1, 10.0, 101);
        let report = check_h3(&spec, -1.0, 0.01, &scan).unwrap();
        assert!(report.holds);
        assert!(report.max_violation.abs() < 1e-12);

        let inv = WeightSpec::exp_poly(5, 1.0, 0.0, 1.0).with_constants(0.0, -1.0);
        let report = check_h3(&inv, -1.0, 0.01, &scan).unwrap();
        assert!(report.holds, "{report:?}");
    }

    #[test]
    fn h3_gaussian_needs_k1() {
        let base = WeightSpec::exp_poly(3, 0.0, 1.0, 2.0);
        let ok = check_h3(&base.with_constants(2.0, 0.0), -1.0, 0.01, &default_scan()).unwrap();
        assert!(ok.holds);
        assert!(ok.max_violation <= 0.0);
        let bad = check_h3(&base.with_constants(0.0, 0.0), -1.0, 0.01, &default_scan()).unwrap();
        assert!(!bad.holds);
        assert!(bad.max_violation > 0.0);
        assert!(bad.witness_r > 1.0);
    }

    #[test]
    fn h3_super_gaussian_fails_at_infinity() {
        let spec = WeightSpec::exp_poly(3, 0.0, 1.0, 3.0).with_constants(100.0, 0.0);
        let report = check_h3(&spec, -1.0, 0.01, &log_scan(0.1, 2.0, 10)).unwrap();
        assert!(!report.holds);
        assert_eq!(report.witness_r, f64::INFINITY);
    }

    #[test]
    fn h3_rejects_bad_arguments() {
        let spec = WeightSpec::constant(3);
        assert!(check_h3(&spec, -1.0, 0.01, &[]).is_err());
        assert!(check_h3(&spec, 1.0, 0.01, &[1.0]).is_err());
        assert!(check_h3(&spec, -1.0, 0.0, &[1.0]).is_err());
    }

    #[test]
    fn cos_exp_is_increasing_so_h3_holds_with_zero_constants() {
        let report = check_h3(&WeightSpec::cos_exp(3), -0.5, 0.1, &default_scan()).unwrap();
        assert!(report.holds, "{report:?}");
    }

    #[test]
    fn classification_examples() {
        let c = classify_exp_poly(-1.0, 0.0, 1.0, 0.0, -1.0).unwrap();
        assert_eq!(c.case, ExpPolyCase::I);
        assert_eq!(c.required_k1, 0.0);
        let c = classify_exp_poly(0.0, 1.0, 2.0, 0.0, -1.0).unwrap();
        assert_eq!(c.case, ExpPolyCase::Ii);
        assert_eq!(c.required_k1, 2.0);
        let c = classify_exp_poly(-1.0, 1.0, 1.0, 0.0, -1.0).unwrap();
        assert_eq!(c.case, ExpPolyCase::Iii);
        assert_relative_eq!(c.required_k1, 0.25, max_relative = 1e-15);
        let c = classify_exp_poly(0.0, 1.0, 3.0, 0.0, -1.0).unwrap();
        assert_eq!(c.case, ExpPolyCase::None);
        assert!(c.required_k1.is_nan());
    }

    /// Brute-force maximum of the μ-normalized H3 excess at ε → 0 for case (iii).
    fn brute_force_k1_tilde(gamma: f64, delta: f64, m: f64, k2: f64, alpha: f64) -> f64 {
        log_scan(1e-4, 1e4, 400_001)
            .into_iter()
            .map(|r| (-alpha * (gamma + k2) - alpha * delta * m * r.powf(m)) / (r * r))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    #[test]
    fn k1_tilde_matches_brute_force_maximum() {
        for (gamma, delta, m, k2, alpha) in [
            (-1.0, 1.0, 1.0, 0.0, -1.0),
            (-0.5, 2.0, 1.5, 0.0, -0.7),
            (-1.0, 0.5, 0.5, 0.3, -2.0),
        ] {
            let c = classify_exp_poly(gamma, delta, m, k2, alpha).unwrap();
            assert_eq!(c.case, ExpPolyCase::Iii);
            let brute = brute_force_k1_tilde(gamma, delta, m, k2, alpha);
            assert_relative_eq!(c.required_k1, brute, max_relative = 1e-6);
        }
    }

    #[test]
    fn sub_gaussian_threshold() {
        let base = WeightSpec::exp_poly(3, -1.0, 1.0, 1.0);
        let holds = check_h3(&base.with_constants(0.25, 0.0), -1.0, 0.01, &default_scan()).unwrap();
        assert!(holds.holds, "{holds:?}");
        let fails = check_h3(&base.with_constants(0.2, 0.0), -1.0, 0.01, &default_scan()).unwrap();
        assert!(!fails.holds);
    }

    #[test]
    fn lower_bound_examples() {
        let unit = WeightSpec::constant(3);
        for r in [1.0, 2.0, 50.0] {
            assert_eq!(radial_lower_bound(&unit, 1.0, r, -1.0, 0.1).unwrap(), 1.0);
        }
        let spec = WeightSpec::constant(3).with_constants(0.0, -1.0);
        assert_eq!(radial_lower_bound(&spec, 1.0, 2.0, -1.0, 0.1).unwrap(), 0.5);
        assert!(radial_lower_bound(&spec, 1.0, 0.5, -1.0, 0.1).is_err());

        // Gaussian with k₁ = 2|α|δ: the bound reproduces μ as ε → 0
        let alpha: f64 = -1.5;
        let delta = 0.8;
        let gauss = WeightSpec::exp_poly(3, 0.0, delta, 2.0).with_constants(2.0 * alpha.abs() * delta, 0.0);
        for r in [0.5, 1.0, 3.0] {
            let bound = radial_lower_bound(&gauss, 0.5, r, alpha, 1e-14).unwrap();
            assert_relative_eq!(bound, eval_weight(&gauss, r).unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn h6_examples() {
        assert_eq!(k2_from_h6(&WeightSpec::exp_poly(5, 1.0, 0.0, 1.0)).unwrap(), -1.0);
        assert_eq!(k2_from_h6(&WeightSpec::constant(3)).unwrap(), 0.0);
        assert_eq!(k2_from_h6(&WeightSpec::log_pow(5, 1.0)).unwrap(), -1.0);
        assert_eq!(k2_from_h6(&WeightSpec::cos_exp(4)).unwrap(), 0.0);
        assert_eq!(k2_from_h6(&WeightSpec::exp_poly(3, -2.0, 0.0, 1.0)).unwrap(), 2.0);
    }

    #[test]
    fn h6_ignores_exponential_tail() {
        for (delta, m) in [(0.5, 1.0), (3.0, 2.0), (1.0, 0.5)] {
            let tailed = WeightSpec::exp_poly(5, 1.0, delta, m);
            assert_eq!(k2_from_h6(&tailed).unwrap(), -1.0);
        }
    }

    /// Brute-force quadrature of ∫_{r_min}^1 r^{N-1-δ'} r^{-γ} dr on refined
    /// uniform midpoint grids, independent of the log-Gauss probe.
    #[test]
    fn h6_brute_force_oracle() {
        let (n, gamma) = (5.0, 1.0);
        let integral = |delta_prime: f64, r_min: f64| {
            let cells = 200_000;
            let (a, b) = (r_min.ln(), 0.0);
            let h = (b - a) / cells as f64;
            (0..cells)
                .map(|i| {
                    let r = (a + h * (i as f64 + 0.5)).exp();
                    h * r * r.powf(n - 1.0 - delta_prime - gamma)
                })
                .sum::<f64>()
        };
        let conv = [integral(3.9, 1e-10), integral(3.9, 1e-20), integral(3.9, 1e-40)];
        let div = [integral(4.1, 1e-10), integral(4.1, 1e-20), integral(4.1, 1e-40)];
        assert!((conv[2] - conv[1]) < (conv[1] - conv[0]));
        assert!((div[2] - div[1]) > (div[1] - div[0]));
    }
}
