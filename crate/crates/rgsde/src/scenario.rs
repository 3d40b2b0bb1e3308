//! Discretized G-Brownian scenarios: classical Brownian paths time-changed by
//! admissible squared-volatility controls from the representing family.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Default cap on the size of a generated control family.
pub const DEFAULT_FAMILY_CAP: usize = 4096;

/// Volatility uncertainty interval [sigma_lo_sq, sigma_hi_sq] for theta^2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolatilitySpec {
    pub sigma_lo_sq: f64,
    pub sigma_hi_sq: f64,
}

impl VolatilitySpec {
    pub fn new(sigma_lo_sq: f64, sigma_hi_sq: f64) -> Result<Self> {
        if !(sigma_lo_sq >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma_lo_sq must be nonnegative, got {sigma_lo_sq}"
            )));
        }
        if !(sigma_hi_sq > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma_hi_sq must be positive, got {sigma_hi_sq}"
            )));
        }
        if sigma_lo_sq > sigma_hi_sq {
            return Err(Error::InvalidArgument(format!(
                "sigma_lo_sq ({sigma_lo_sq}) exceeds sigma_hi_sq ({sigma_hi_sq})"
            )));
        }
        Ok(VolatilitySpec {
            sigma_lo_sq,
            sigma_hi_sq,
        })
    }

    /// Classical-Brownian bounds sigma_lo_sq = sigma_hi_sq = 1.
    pub fn classical() -> Self {
        VolatilitySpec {
            sigma_lo_sq: 1.0,
            sigma_hi_sq: 1.0,
        }
    }
}

/// Per-step squared-volatility schedule; indexes one measure of the
/// representing family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolatilityControl {
    pub theta_sq: Vec<f64>,
    pub label: String,
}

impl VolatilityControl {
    pub fn constant(value: f64, n_steps: usize, label: impl Into<String>) -> Self {
        VolatilityControl {
            theta_sq: vec![value; n_steps],
            label: label.into(),
        }
    }

    pub fn validate(&self, grid: &TimeGrid, spec: &VolatilitySpec) -> Result<()> {
        if self.theta_sq.len() != grid.n_steps {
            return Err(Error::InvalidArgument(format!(
                "control '{}' has {} entries, grid has {} steps",
                self.label,
                self.theta_sq.len(),
                grid.n_steps
            )));
        }
        for (i, &t) in self.theta_sq.iter().enumerate() {
            if !(t >= spec.sigma_lo_sq && t <= spec.sigma_hi_sq) {
                return Err(Error::ConstraintViolation(format!(
                    "control '{}' step {} has theta_sq {} outside [{}, {}]",
                    self.label, i, t, spec.sigma_lo_sq, spec.sigma_hi_sq
                )));
            }
        }
        Ok(())
    }

    /// Control on a grid refined by `factor`, each entry repeated.
    pub fn refined(&self, factor: usize) -> Self {
        let theta_sq = self
            .theta_sq
            .iter()
            .flat_map(|&t| std::iter::repeat_n(t, factor))
            .collect();
        VolatilityControl {
            theta_sq,
            label: self.label.clone(),
        }
    }
}

/// One discretized scenario: increments of B and of its quadratic variation,
/// with cumulative paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPath {
    pub d_b: Vec<f64>,
    pub d_qv: Vec<f64>,
    pub b: Vec<f64>,
    pub qv: Vec<f64>,
    pub control_label: String,
    pub seed: u64,
}

impl ScenarioPath {
    pub fn n_steps(&self) -> usize {
        self.d_b.len()
    }
}

/// Deterministic per-scenario seed from a master seed and scenario index
/// (splitmix64 finalizer). Independent of the control, so the same normal
/// stream drives every control for a given index (common random numbers).
pub fn scenario_seed(master_seed: u64, scenario_index: u64) -> u64 {
    let mut z = master_seed
        .wrapping_add(scenario_index.wrapping_mul(0x9e3779b97f4a7c15))
        .wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Samples one scenario under the given control. The normal stream is keyed
/// by `seed` only, so identical seeds give common random numbers across
/// controls, and identical (control, grid, seed) give bit-identical output.
pub fn sample_scenario(
    control: &VolatilityControl,
    grid: &TimeGrid,
    spec: &VolatilitySpec,
    seed: u64,
) -> Result<ScenarioPath> {
    control.validate(grid, spec)?;
    let normals = normal_stream(seed, grid.n_steps);
    Ok(scenario_from_normals(control, grid, &normals, seed))
}

/// Standard normal draws for a scenario; shared across controls and grid
/// refinement logic.
pub fn normal_stream(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Builds a path from precomputed normals: dB_i = sqrt(theta_sq_i * dt) Z_i,
/// dQV_i = theta_sq_i * dt (exact in law under the generating control).
pub fn scenario_from_normals(
    control: &VolatilityControl,
    grid: &TimeGrid,
    normals: &[f64],
    seed: u64,
) -> ScenarioPath {
    let n = grid.n_steps;
    let dt = grid.dt;
    let mut d_b = Vec::with_capacity(n);
    let mut d_qv = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n + 1);
    let mut qv = Vec::with_capacity(n + 1);
    b.push(0.0);
    qv.push(0.0);
    for i in 0..n {
        let var = control.theta_sq[i] * dt;
        let db = var.sqrt() * normals[i];
        d_b.push(db);
        d_qv.push(var);
        b.push(b[i] + db);
        qv.push(qv[i] + var);
    }
    ScenarioPath {
        d_b,
        d_qv,
        b,
        qv,
        control_label: control.label.clone(),
        seed,
    }
}

/// All 2^n_blocks controls constant at sigma_lo_sq or sigma_hi_sq on each of
/// n_blocks contiguous step-blocks, capped at `DEFAULT_FAMILY_CAP` members.
pub fn bang_bang_family(
    grid: &TimeGrid,
    spec: &VolatilitySpec,
    n_blocks: usize,
) -> Result<Vec<VolatilityControl>> {
    bang_bang_family_capped(grid, spec, n_blocks, DEFAULT_FAMILY_CAP)
}

pub fn bang_bang_family_capped(
    grid: &TimeGrid,
    spec: &VolatilitySpec,
    n_blocks: usize,
    cap: usize,
) -> Result<Vec<VolatilityControl>> {
    if n_blocks == 0 {
        return Err(Error::InvalidArgument("n_blocks must be at least 1".into()));
    }
    if n_blocks > grid.n_steps {
        return Err(Error::InvalidArgument(format!(
            "n_blocks ({n_blocks}) exceeds n_steps ({})",
            grid.n_steps
        )));
    }
    if n_blocks >= usize::BITS as usize || (1usize << n_blocks) > cap {
        return Err(Error::ResourceLimit(format!(
            "2^{n_blocks} controls exceed the family cap of {cap}"
        )));
    }
    let n = grid.n_steps;
    let mut family = Vec::with_capacity(1 << n_blocks);
    for mask in 0..(1usize << n_blocks) {
        let mut theta_sq = Vec::with_capacity(n);
        let mut label = String::from("bb-");
        for block in 0..n_blocks {
            let hi = mask >> block & 1 == 1;
            label.push(if hi { 'H' } else { 'L' });
        }
        for step in 0..n {
            // near-equal contiguous blocks
            let block = step * n_blocks / n;
            let hi = mask >> block & 1 == 1;
            theta_sq.push(if hi { spec.sigma_hi_sq } else { spec.sigma_lo_sq });
        }
        family.push(VolatilityControl { theta_sq, label });
    }
    Ok(family)
}

/// Cumulative sums of squared B-increments: the empirical quadratic-variation
/// estimate, kept only as a consistency check against the stored dQV.
pub fn qv_from_increments(path: &ScenarioPath) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.d_b.len() + 1);
    out.push(0.0);
    for (i, db) in path.d_b.iter().enumerate() {
        out.push(out[i] + db * db);
    }
    out
}
