//! Strict JSON run configuration.

use std::path::PathBuf;

use hardy_core::discretization::{build_grid, BoundaryCondition, Grading, Ladder, RadialGrid, DEFAULT_QUAD_ORDER};
use hardy_core::evolution::Scheme;
use hardy_core::WeightSpec;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckWeight,
    HardyConstant,
    CCurve,
    Spectrum,
    BlowupWitness,
    Dichotomy,
    Evolve,
    BlowupSweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::CheckWeight => "check-weight",
            Command::HardyConstant => "hardy-constant",
            Command::CCurve => "c-curve",
            Command::Spectrum => "spectrum",
            Command::BlowupWitness => "blowup-witness",
            Command::Dichotomy => "dichotomy",
            Command::Evolve => "evolve",
            Command::BlowupSweep => "blowup-sweep",
        }
    }
}

/// Radial mesh description. Geometric grids take either `ratio` or `r_min`
/// (the innermost node); `rungs` turns the grid into the finest rung of a
/// nested ladder whose coarser rungs halve the node count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "R")]
    pub r_max: f64,
    pub n: usize,
    pub grading: Grading,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rungs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quad_order: Option<usize>,
}

/// The grid actually used, with every derived quantity spelled out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedGrid {
    #[serde(rename = "R")]
    pub r_max: f64,
    pub n: usize,
    pub grading: Grading,
    pub ratio: Option<f64>,
    pub r_min: f64,
    pub rungs: usize,
    pub quad_order: usize,
    pub dim: u32,
}

impl GridConfig {
    fn ratio_for(&self) -> Result<Option<f64>, CliError> {
        match self.grading {
            Grading::Uniform => {
                if self.ratio.is_some() || self.r_min.is_some() {
                    return Err(CliError::config("uniform grids take neither ratio nor r_min"));
                }
                Ok(None)
            }
            Grading::Geometric => match (self.ratio, self.r_min) {
                (Some(q), None) => Ok(Some(q)),
                (None, Some(r1)) => {
                    if !(r1 > 0.0 && r1 < self.r_max) || self.n < 2 {
                        return Err(CliError::config(format!("need 0 < r_min < R, got r_min = {r1}")));
                    }
                    Ok(Some(((self.r_max / r1).ln() / (self.n - 1) as f64).exp()))
                }
                _ => Err(CliError::config("geometric grids take exactly one of ratio and r_min")),
            },
        }
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order.unwrap_or(DEFAULT_QUAD_ORDER)
    }

    /// The (finest) grid.
    pub fn grid(&self, dim: u32) -> Result<RadialGrid, CliError> {
        let ratio = self.ratio_for()?;
        if self.quad_order() < 2 {
            return Err(CliError::config("quad_order must be >= 2"));
        }
        Ok(build_grid(self.r_max, self.n, self.grading, ratio.unwrap_or(0.0), dim)?.with_quad_order(self.quad_order()))
    }

    /// Nested ladder ending at this grid; a one-rung ladder without `rungs`.
    pub fn ladder(&self, dim: u32) -> Result<Ladder, CliError> {
        let rungs = self.rungs.unwrap_or(1);
        if self.grading != Grading::Geometric {
            return Err(CliError::config("ladders need geometric grading"));
        }
        if rungs == 0 || self.n % (1 << (rungs - 1)) != 0 {
            return Err(CliError::config(format!(
                "n = {} is not divisible by 2^(rungs-1) for rungs = {rungs}",
                self.n
            )));
        }
        let finest = self.grid(dim)?;
        let ladder = Ladder {
            r_max: self.r_max,
            r_min: finest.r_min(),
            base_nodes: self.n >> (rungs - 1),
            rungs,
            quad_order: self.quad_order(),
        };
        ladder.validate()?;
        Ok(ladder)
    }

    pub fn resolve(&self, dim: u32) -> Result<ResolvedGrid, CliError> {
        let grid = self.grid(dim)?;
        Ok(ResolvedGrid {
            r_max: self.r_max,
            n: self.n,
            grading: self.grading,
            ratio: self.ratio_for()?,
            r_min: grid.r_min(),
            rungs: self.rungs.unwrap_or(1),
            quad_order: self.quad_order(),
            dim,
        })
    }
}

/// Initial data for `evolve` and `blowup-sweep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialData {
    /// Normalized `cos²` bump supported in the unit ball.
    #[default]
    Bump,
    /// The constant function `1`.
    Ones,
}

/// Command-specific parameters; which ones are required depends on the
/// command.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Params {
    pub alpha: Option<f64>,
    pub eps: Option<f64>,
    pub k1: Option<f64>,
    pub c: Option<f64>,
    pub c_list: Option<Vec<f64>>,
    pub eta: Option<f64>,
    pub eps_list: Option<Vec<f64>>,
    pub trunc_n: Option<f64>,
    pub trunc_list: Option<Vec<f64>>,
    pub tau: Option<f64>,
    #[serde(rename = "T")]
    pub t_end: Option<f64>,
    pub scheme: Option<Scheme>,
    pub bc: Option<BoundaryCondition>,
    pub u0: Option<InitialData>,
    pub alpha_step: Option<f64>,
    /// Relative tolerance for comparing a computed constant with `c_o`.
    pub rel_tol: Option<f64>,
    /// Also write the assembled matrices as triplet files.
    pub export_forms: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub weight: WeightSpec,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Seed for the eigensolver start vectors.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn grid_config(&self) -> Result<&GridConfig, CliError> {
        self.grid
            .as_ref()
            .ok_or_else(|| CliError::config(format!("command {} needs a grid", self.command.name())))
    }
}

/// Parse a config, reporting the line and column of JSON errors.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::json(&e))
}

pub fn require<T: Copy>(value: Option<T>, name: &str, command: Command) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::config(format!("command {} needs params.{name}", command.name())))
}
