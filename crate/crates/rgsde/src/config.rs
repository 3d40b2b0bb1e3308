//! Sectioned run configuration: TOML with a closed schema (unknown keys
//! are errors) and total validation — every section is checked before any
//! computation or file output happens.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::coeffs::{CoeffFn, CoefficientSet, ModulusKind, ObstacleSpec};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scenario::{bang_bang_family, VolatilityControl, VolatilitySpec};
use crate::solver::{Problem, SolverConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolatilitySection {
    pub sigma_lo_sq: f64,
    pub sigma_hi_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub horizon: f64,
    pub n_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsSection {
    pub family: String,
    pub f: CoeffFn,
    pub h: CoeffFn,
    pub g: CoeffFn,
    pub modulus: ModulusKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_p")]
    pub p_exponent: f64,
    #[serde(default = "default_picard_tol")]
    pub picard_tol: f64,
    #[serde(default = "default_max_picard")]
    pub max_picard: usize,
    #[serde(default)]
    pub oracle_check: bool,
}

fn default_p() -> f64 {
    3.0
}
fn default_picard_tol() -> f64 {
    1e-10
}
fn default_max_picard() -> usize {
    200
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            p_exponent: default_p(),
            picard_tol: default_picard_tol(),
            max_picard: default_max_picard(),
            oracle_check: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlsSection {
    /// all on/off combinations of the volatility bounds over contiguous
    /// step blocks
    BangBang {
        n_blocks: usize,
    },
    /// one constant control per listed theta-squared value
    Constant {
        values: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub n_paths: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpectSection {
    pub functional: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSection {
    /// deliberately swap the comparison drifts to demonstrate the
    /// hypothesis probes firing
    #[serde(default)]
    pub misordered_drifts: bool,
    #[serde(default)]
    pub n_paths: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineSection {
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub volatility: VolatilitySection,
    pub grid: GridSection,
    pub initial: InitialSection,
    pub coefficients: CoefficientsSection,
    pub obstacle: ObstacleSpec,
    #[serde(default)]
    pub solver: SolverSection,
    pub controls: ControlsSection,
    pub monte_carlo: MonteCarloSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub expect: Option<ExpectSection>,
    #[serde(default)]
    pub check: Option<CheckSection>,
    #[serde(default)]
    pub refine: Option<RefineSection>,
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read {}: {e}", path.display()))
        })?;
        RunConfig::from_str(&text)
    }

    /// Builds every derived object once, so any invalid field fails here
    /// before a command writes output.
    pub fn validate(&self) -> Result<()> {
        let grid = self.time_grid()?;
        let spec = self.vol_spec()?;
        let controls = self.build_controls(&grid, &spec)?;
        if controls.is_empty() {
            return Err(Error::Config("control family is empty".into()));
        }
        self.coefficient_set()?;
        self.solver_config()?.validate()?;
        if self.monte_carlo.n_paths == 0 {
            return Err(Error::Config("n_paths must be positive".into()));
        }
        if let ObstacleSpec::GridPath { values } = &self.obstacle {
            if values.len() != grid.n_steps + 1 {
                return Err(Error::Config(format!(
                    "obstacle grid path has {} values but the grid has {} nodes",
                    values.len(),
                    grid.n_steps + 1
                )));
            }
        }
        if self.obstacle.initial_value() > self.initial.x0 {
            return Err(Error::Config(format!(
                "initial obstacle value {} exceeds x0 = {}; the obstacle must \
                 start at or below the initial state",
                self.obstacle.initial_value(),
                self.initial.x0
            )));
        }
        if let Some(expect) = &self.expect {
            crate::expectation::PathFunctional::from_registry_id(&expect.functional)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(refine) = &self.refine {
            if refine.levels < 2 {
                return Err(Error::Config(
                    "refinement needs at least 2 levels".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn vol_spec(&self) -> Result<VolatilitySpec> {
        VolatilitySpec::new(self.volatility.sigma_lo_sq, self.volatility.sigma_hi_sq)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::uniform(self.grid.horizon, self.grid.n_steps)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn coefficient_set(&self) -> Result<CoefficientSet> {
        CoefficientSet::from_registry(
            self.coefficients.family.clone(),
            self.coefficients.f.clone(),
            self.coefficients.h.clone(),
            self.coefficients.g.clone(),
            self.coefficients.modulus.clone(),
            self.solver.p_exponent,
        )
        .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let cfg = SolverConfig {
            p_exponent: self.solver.p_exponent,
            picard_tol: self.solver.picard_tol,
            max_picard: self.solver.max_picard,
            oracle_check: self.solver.oracle_check,
        };
        cfg.validate().map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn build_controls(
        &self,
        grid: &TimeGrid,
        spec: &VolatilitySpec,
    ) -> Result<Vec<VolatilityControl>> {
        match &self.controls {
            ControlsSection::BangBang { n_blocks } => bang_bang_family(grid, spec, *n_blocks),
            ControlsSection::Constant { values } => {
                if values.is_empty() {
                    return Err(Error::Config(
                        "constant control list is empty".into(),
                    ));
                }
                let controls: Vec<VolatilityControl> = values
                    .iter()
                    .map(|v| {
                        VolatilityControl::constant(*v, grid.n_steps, format!("const-{v}"))
                    })
                    .collect();
                for c in &controls {
                    c.validate(grid, spec)
                        .map_err(|e| Error::Config(e.to_string()))?;
                }
                Ok(controls)
            }
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        Ok(Problem {
            coeffs: self.coefficient_set()?,
            obstacle: self.obstacle.clone(),
            x0: self.initial.x0,
            cfg: self.solver_config()?,
        })
    }
}
