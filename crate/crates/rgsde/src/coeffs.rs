//! Coefficient families, growth/modulus declarations, and obstacle
//! specifications. Families come from a fixed registry so the growth and
//! integral-Lipschitz declarations stay checkable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::scenario::ScenarioPath;

/// One coefficient evaluator (step index, x, k) -> value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoeffFn {
    Zero,
    Constant { value: f64 },
    /// a + b*x + c*k
    Linear { a: f64, b: f64, c: f64 },
    /// offset + amp*sin(freq*x) + k_slope*k
    Sinusoid {
        offset: f64,
        amp: f64,
        freq: f64,
        k_slope: f64,
    },
    /// inner clamped to [-bound, bound]
    Clamped { inner: Box<CoeffFn>, bound: f64 },
}

impl CoeffFn {
    pub fn eval(&self, _step: usize, x: f64, k: f64) -> f64 {
        match self {
            CoeffFn::Zero => 0.0,
            CoeffFn::Constant { value } => *value,
            CoeffFn::Linear { a, b, c } => a + b * x + c * k,
            CoeffFn::Sinusoid {
                offset,
                amp,
                freq,
                k_slope,
            } => offset + amp * (freq * x).sin() + k_slope * k,
            CoeffFn::Clamped { inner, bound } => inner.eval(_step, x, k).clamp(-bound, *bound),
        }
    }

    /// Constant part of the growth bound: |phi(x, k)| <= base + slope*(|x| + |k|).
    pub fn base_bound(&self) -> f64 {
        match self {
            CoeffFn::Zero => 0.0,
            CoeffFn::Constant { value } => value.abs(),
            CoeffFn::Linear { a, .. } => a.abs(),
            CoeffFn::Sinusoid { offset, amp, .. } => offset.abs() + amp.abs(),
            CoeffFn::Clamped { inner, bound } => inner.base_bound().min(*bound),
        }
    }

    /// Largest of the |x|- and |k|-slopes in the growth bound.
    pub fn slope_bound(&self) -> f64 {
        match self {
            CoeffFn::Zero | CoeffFn::Constant { .. } => 0.0,
            CoeffFn::Linear { b, c, .. } => b.abs().max(c.abs()),
            CoeffFn::Sinusoid { k_slope, .. } => k_slope.abs(),
            CoeffFn::Clamped { inner, .. } => inner.slope_bound(),
        }
    }

    /// Lipschitz constant in (x, k) jointly (sum norm).
    pub fn lipschitz_bound(&self) -> f64 {
        match self {
            CoeffFn::Zero | CoeffFn::Constant { .. } => 0.0,
            CoeffFn::Linear { b, c, .. } => b.abs().max(c.abs()),
            CoeffFn::Sinusoid {
                amp, freq, k_slope, ..
            } => (amp * freq).abs().max(k_slope.abs()),
            CoeffFn::Clamped { inner, .. } => inner.lipschitz_bound(),
        }
    }

    /// Uniform bound on |phi| if the family is bounded.
    pub fn uniform_bound(&self) -> Option<f64> {
        match self {
            CoeffFn::Zero => Some(0.0),
            CoeffFn::Constant { value } => Some(value.abs()),
            CoeffFn::Linear { b, c, .. } => {
                if *b == 0.0 && *c == 0.0 {
                    Some(self.base_bound())
                } else {
                    None
                }
            }
            CoeffFn::Sinusoid {
                offset,
                amp,
                k_slope,
                ..
            } => {
                if *k_slope == 0.0 {
                    Some(offset.abs() + amp.abs())
                } else {
                    None
                }
            }
            CoeffFn::Clamped { bound, .. } => Some(*bound),
        }
    }

    pub fn is_k_independent(&self) -> bool {
        match self {
            CoeffFn::Zero | CoeffFn::Constant { .. } => true,
            CoeffFn::Linear { c, .. } => *c == 0.0,
            CoeffFn::Sinusoid { k_slope, .. } => *k_slope == 0.0,
            CoeffFn::Clamped { inner, .. } => inner.is_k_independent(),
        }
    }

    pub fn clamped(self, bound: f64) -> CoeffFn {
        CoeffFn::Clamped {
            inner: Box::new(self),
            bound,
        }
    }
}

/// Deterministic weight: a constant or a per-step grid path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weight {
    Constant(f64),
    Grid(Vec<f64>),
}

impl Weight {
    pub fn value_at(&self, step: usize) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::Grid(v) => v[step.min(v.len().saturating_sub(1))],
        }
    }

    /// Integral over [0, t] against a uniform grid (left-endpoint sum).
    pub fn integral(&self, t: f64, grid: &TimeGrid) -> f64 {
        match self {
            Weight::Constant(c) => c * t,
            Weight::Grid(_) => {
                let mut acc = 0.0;
                for i in 0..grid.n_steps {
                    if grid.nodes[i] >= t {
                        break;
                    }
                    let step_end = grid.nodes[i + 1].min(t);
                    acc += self.value_at(i) * (step_end - grid.nodes[i]);
                }
                acc
            }
        }
    }

    pub fn min_with(&self, cap: f64) -> Weight {
        match self {
            Weight::Constant(c) => Weight::Constant(c.min(cap)),
            Weight::Grid(v) => Weight::Grid(v.iter().map(|x| x.min(cap)).collect()),
        }
    }
}

/// Integral-Lipschitz modulus rho together with the integrable weight beta(t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusSpec {
    pub kind: ModulusKind,
    pub beta_weight: Weight,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModulusKind {
    /// rho(r) = l * r
    Lipschitz { l: f64 },
    /// rho(r) = c * r * ln(1/r) for r < 1/e, extended as c * r above
    LogModulus { c: f64 },
}

impl ModulusKind {
    pub fn rho(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        match self {
            ModulusKind::Lipschitz { l } => l * r,
            ModulusKind::LogModulus { c } => {
                let cutoff = (-1.0f64).exp();
                if r < cutoff {
                    c * r * (1.0 / r).ln()
                } else {
                    c * r
                }
            }
        }
    }
}

impl ModulusSpec {
    pub fn lipschitz(l: f64) -> Self {
        ModulusSpec {
            kind: ModulusKind::Lipschitz { l },
            beta_weight: Weight::Constant(1.0),
        }
    }

    pub fn log_modulus(c: f64) -> Self {
        ModulusSpec {
            kind: ModulusKind::LogModulus { c },
            beta_weight: Weight::Constant(1.0),
        }
    }
}

/// Coefficient triple (f, h, g) with its declared growth data and modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub f: CoeffFn,
    pub h: CoeffFn,
    pub g: CoeffFn,
    pub beta1: Weight,
    pub beta2: f64,
    pub modulus: ModulusSpec,
    pub family_name: String,
    /// Exponent the growth declaration was derived for.
    pub growth_p: f64,
}

impl CoefficientSet {
    /// Builds a set from registry evaluators, deriving a sound growth
    /// declaration: each registry family satisfies
    /// |phi|^p <= 3^(p-1)(base^p + slope^p (|x|^p + |k|^p)),
    /// so beta1 = 3^((p-1)/p) (sum base^p)^(1/p) and
    /// beta2 = 3^((p-1)/p) (sum slope^p)^(1/p) witness (A2) for the triple.
    pub fn from_registry(
        family_name: impl Into<String>,
        f: CoeffFn,
        h: CoeffFn,
        g: CoeffFn,
        modulus_kind: ModulusKind,
        p: f64,
    ) -> Result<Self> {
        if !(p > 2.0) {
            return Err(Error::InvalidArgument(format!(
                "growth exponent must satisfy p > 2, got {p}"
            )));
        }
        let scale = 3.0f64.powf((p - 1.0) / p);
        let base = [&f, &h, &g]
            .iter()
            .map(|c| c.base_bound().powf(p))
            .sum::<f64>()
            .powf(1.0 / p);
        let slope = [&f, &h, &g]
            .iter()
            .map(|c| c.slope_bound().powf(p))
            .sum::<f64>()
            .powf(1.0 / p);
        // modulus weight covering the triple's joint Lipschitz bound:
        // sum |dphi|^p <= 3 (2 max_lip)^p ... folded into beta_weight so the
        // declared kind keeps its natural normalization
        let max_lip = [&f, &h, &g]
            .iter()
            .map(|c| c.lipschitz_bound())
            .fold(0.0f64, f64::max);
        let lip_weight = 3.0 * (2.0 * max_lip).powf(p);
        let (kind, beta_weight) = match modulus_kind {
            ModulusKind::Lipschitz { .. } => (
                ModulusKind::Lipschitz { l: 1.0 },
                Weight::Constant(lip_weight.max(1e-12)),
            ),
            ModulusKind::LogModulus { c } => {
                // c r >= r on the extension branch needs c >= 1 scaled by the
                // triple's Lipschitz data; weight carries the rest
                (
                    ModulusKind::LogModulus { c },
                    Weight::Constant((lip_weight * (1.0 / c).max(1.0) * std::f64::consts::E).max(1e-12)),
                )
            }
        };
        Ok(CoefficientSet {
            f,
            h,
            g,
            beta1: Weight::Constant(scale * base),
            beta2: scale * slope,
            modulus: ModulusSpec { kind, beta_weight },
            family_name: family_name.into(),
            growth_p: p,
        })
    }

    /// Convenience: constant drift/diffusion coefficients.
    pub fn constants(f: f64, h: f64, g: f64, p: f64) -> Result<Self> {
        CoefficientSet::from_registry(
            "constant",
            CoeffFn::Constant { value: f },
            CoeffFn::Constant { value: h },
            CoeffFn::Constant { value: g },
            ModulusKind::Lipschitz { l: 1.0 },
            p,
        )
    }

    pub fn zero(p: f64) -> Result<Self> {
        CoefficientSet::from_registry(
            "zero",
            CoeffFn::Zero,
            CoeffFn::Zero,
            CoeffFn::Zero,
            ModulusKind::Lipschitz { l: 1.0 },
            p,
        )
    }

    /// Every evaluator clamped to [-n, n]; growth declaration updated to
    /// beta1 ∧ (n * 3^(1/p)), which stays sound for the clamped triple.
    pub fn truncated(&self, n: f64) -> Result<Self> {
        if !(n > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "truncation level must be positive, got {n}"
            )));
        }
        let p = self.growth_p;
        Ok(CoefficientSet {
            f: self.f.clone().clamped(n),
            h: self.h.clone().clamped(n),
            g: self.g.clone().clamped(n),
            beta1: self.beta1.min_with(n * 3.0f64.powf(1.0 / p)),
            beta2: self.beta2,
            modulus: self.modulus.clone(),
            family_name: format!("{}~trunc{}", self.family_name, n),
            growth_p: p,
        })
    }
}

/// Obstacle process: a fixed grid path, a constant level, or a G-Ito process
/// built per scenario from its own coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ObstacleSpec {
    Constant { level: f64 },
    GridPath { values: Vec<f64> },
    Ito {
        s0: f64,
        f_s: CoeffFn,
        h_s: CoeffFn,
        g_s: CoeffFn,
    },
    Truncated { inner: Box<ObstacleSpec>, cap: f64 },
}

impl ObstacleSpec {
    pub fn constant(level: f64) -> Self {
        ObstacleSpec::Constant { level }
    }

    pub fn truncated(self, cap: f64) -> Self {
        ObstacleSpec::Truncated {
            inner: Box::new(self),
            cap,
        }
    }

    /// Value at t = 0, used for the S_0 <= x_0 admissibility check.
    pub fn initial_value(&self) -> f64 {
        match self {
            ObstacleSpec::Constant { level } => *level,
            ObstacleSpec::GridPath { values } => values.first().copied().unwrap_or(f64::NAN),
            ObstacleSpec::Ito { s0, .. } => *s0,
            ObstacleSpec::Truncated { inner, cap } => inner.initial_value().min(*cap),
        }
    }

    /// Uniform upper bound when one is structurally known.
    pub fn upper_bound(&self) -> Option<f64> {
        match self {
            ObstacleSpec::Constant { level } => Some(*level),
            ObstacleSpec::GridPath { values } => {
                values.iter().copied().fold(None, |acc, v| {
                    Some(acc.map_or(v, |a: f64| a.max(v)))
                })
            }
            ObstacleSpec::Ito { .. } => None,
            ObstacleSpec::Truncated { inner, cap } => {
                Some(inner.upper_bound().map_or(*cap, |b| b.min(*cap)))
            }
        }
    }

    /// Builds the obstacle path along one scenario.
    pub fn build(&self, scenario: &ScenarioPath, grid: &TimeGrid) -> Result<Vec<f64>> {
        let n = grid.n_steps;
        match self {
            ObstacleSpec::Constant { level } => Ok(vec![*level; n + 1]),
            ObstacleSpec::GridPath { values } => {
                if values.len() != n + 1 {
                    return Err(Error::InvalidArgument(format!(
                        "obstacle grid path has {} nodes, grid needs {}",
                        values.len(),
                        n + 1
                    )));
                }
                Ok(values.clone())
            }
            ObstacleSpec::Ito { s0, f_s, h_s, g_s } => {
                let mut s = Vec::with_capacity(n + 1);
                s.push(*s0);
                for i in 0..n {
                    let cur = s[i];
                    let next = cur
                        + f_s.eval(i, cur, 0.0) * grid.dt
                        + h_s.eval(i, cur, 0.0) * scenario.d_qv[i]
                        + g_s.eval(i, cur, 0.0) * scenario.d_b[i];
                    if !next.is_finite() {
                        return Err(Error::NumericFailure(format!(
                            "obstacle path diverged at step {i}"
                        )));
                    }
                    s.push(next);
                }
                Ok(s)
            }
            ObstacleSpec::Truncated { inner, cap } => {
                let s = inner.build(scenario, grid)?;
                Ok(s.into_iter().map(|v| v.min(*cap)).collect())
            }
        }
    }
}
