//! Scenario-based estimation of the sublinear expectation as a maximum of
//! Monte Carlo means over a finite control family, with common random
//! numbers across controls.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::reflection::flatness_defect;
use crate::scenario::{sample_scenario, scenario_seed, VolatilityControl, VolatilitySpec};
use crate::solver::{picard_solve, Problem};

/// All paths produced by one solve, for functional evaluation.
#[derive(Debug, Clone)]
pub struct EvalPaths {
    pub x: Vec<f64>,
    pub k: Vec<f64>,
    pub s: Vec<f64>,
    pub b: Vec<f64>,
    pub qv: Vec<f64>,
}

/// Real-valued functional of a solved path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathFunctional {
    /// X_T
    TerminalValue,
    /// sup_t X_t
    RunningSup,
    /// sup_t X_t^+
    RunningSupPositivePart,
    /// K_T
    TerminalK,
    /// discrete flatness defect
    Flatness,
    /// B_T
    TerminalB,
    /// B_T^2
    TerminalBSquared,
    Constant { value: f64 },
    /// sup_t |X_t|^p + K_T^p, the a priori estimate's left-hand side
    SupNormPower { p: f64 },
    /// indicator of |B_T| <= threshold
    IndicatorAbsTerminalBBelow { threshold: f64 },
    Sum {
        left: Box<PathFunctional>,
        right: Box<PathFunctional>,
    },
    Scale {
        factor: f64,
        inner: Box<PathFunctional>,
    },
}

impl PathFunctional {
    pub fn evaluate(&self, paths: &EvalPaths) -> f64 {
        match self {
            PathFunctional::TerminalValue => *paths.x.last().unwrap(),
            PathFunctional::RunningSup => paths.x.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            PathFunctional::RunningSupPositivePart => paths
                .x
                .iter()
                .map(|v| v.max(0.0))
                .fold(0.0f64, f64::max),
            PathFunctional::TerminalK => *paths.k.last().unwrap(),
            PathFunctional::Flatness => flatness_defect(
                &crate::reflection::ReflectedSolution {
                    x: paths.x.clone(),
                    k: paths.k.clone(),
                },
                &paths.s,
            ),
            PathFunctional::TerminalB => *paths.b.last().unwrap(),
            PathFunctional::TerminalBSquared => {
                let b = *paths.b.last().unwrap();
                b * b
            }
            PathFunctional::Constant { value } => *value,
            PathFunctional::SupNormPower { p } => {
                let sup = paths
                    .x
                    .iter()
                    .map(|v| v.abs())
                    .fold(0.0f64, f64::max);
                sup.powf(*p) + paths.k.last().unwrap().powf(*p)
            }
            PathFunctional::IndicatorAbsTerminalBBelow { threshold } => {
                if paths.b.last().unwrap().abs() <= *threshold {
                    1.0
                } else {
                    0.0
                }
            }
            PathFunctional::Sum { left, right } => left.evaluate(paths) + right.evaluate(paths),
            PathFunctional::Scale { factor, inner } => factor * inner.evaluate(paths),
        }
    }

    /// Looks up a functional by its registry id.
    pub fn from_registry_id(id: &str) -> Result<Self> {
        match id {
            "terminal_value" => Ok(PathFunctional::TerminalValue),
            "running_sup" => Ok(PathFunctional::RunningSup),
            "running_sup_positive_part" => Ok(PathFunctional::RunningSupPositivePart),
            "terminal_k" => Ok(PathFunctional::TerminalK),
            "flatness" => Ok(PathFunctional::Flatness),
            "terminal_b" => Ok(PathFunctional::TerminalB),
            "terminal_b_squared" => Ok(PathFunctional::TerminalBSquared),
            other => {
                if let Some(v) = other.strip_prefix("constant:") {
                    let value: f64 = v.parse().map_err(|_| {
                        Error::InvalidArgument(format!("bad constant functional '{other}'"))
                    })?;
                    Ok(PathFunctional::Constant { value })
                } else {
                    Err(Error::InvalidArgument(format!(
                        "unknown functional id '{other}'"
                    )))
                }
            }
        }
    }
}

/// Path event for capacity estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathEvent {
    /// X_0 != x0: impossible by construction
    StartsOffInitialValue { x0: f64 },
    /// K_0 = 0: certain by construction
    PusherStartsAtZero,
    /// B_T > 0
    TerminalBPositive,
    /// sup_t X_t > threshold
    RunningSupAbove { threshold: f64 },
}

impl PathEvent {
    pub fn holds(&self, paths: &EvalPaths) -> bool {
        match self {
            PathEvent::StartsOffInitialValue { x0 } => paths.x[0] != *x0,
            PathEvent::PusherStartsAtZero => paths.k[0] == 0.0,
            PathEvent::TerminalBPositive => *paths.b.last().unwrap() > 0.0,
            PathEvent::RunningSupAbove { threshold } => {
                paths.x.iter().any(|v| v > threshold)
            }
        }
    }

    pub fn from_registry_id(id: &str) -> Result<Self> {
        match id {
            "pusher_starts_at_zero" => Ok(PathEvent::PusherStartsAtZero),
            "terminal_b_positive" => Ok(PathEvent::TerminalBPositive),
            other => Err(Error::InvalidArgument(format!(
                "unknown event id '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlStat {
    pub label: String,
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpperExpectationEstimate {
    pub value: f64,
    pub per_control: Vec<ControlStat>,
    pub argmax_control: String,
    pub master_seed: u64,
}

/// Pairwise (divide and conquer) summation; deterministic and exact for
/// all-equal inputs when the length is a power of two.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

fn stats(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Solves one scenario of the problem under the given control.
pub fn solve_scenario(
    problem: &Problem,
    control: &VolatilityControl,
    grid: &TimeGrid,
    vol_spec: &VolatilitySpec,
    master_seed: u64,
    scenario_index: u64,
) -> Result<EvalPaths> {
    let seed = scenario_seed(master_seed, scenario_index);
    let scen = sample_scenario(control, grid, vol_spec, seed)?;
    let s = problem.obstacle.build(&scen, grid)?;
    let res = picard_solve(
        &problem.coeffs,
        &problem.obstacle,
        &scen,
        grid,
        problem.x0,
        &problem.cfg,
    )?;
    Ok(EvalPaths {
        x: res.solution.x,
        k: res.solution.k,
        s,
        b: scen.b,
        qv: scen.qv,
    })
}

/// Per-path functional values for one control, in scenario-index order.
/// Parallelized over scenarios; the reduction order is fixed by index.
pub fn per_path_values(
    functional: &PathFunctional,
    problem: &Problem,
    control: &VolatilityControl,
    grid: &TimeGrid,
    vol_spec: &VolatilitySpec,
    n_paths: usize,
    master_seed: u64,
) -> Result<Vec<f64>> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|j| {
            let paths = solve_scenario(problem, control, grid, vol_spec, master_seed, j)
                .map_err(|e| {
                    Error::NumericFailure(format!(
                        "control '{}', scenario {j}: {e}",
                        control.label
                    ))
                })?;
            Ok(functional.evaluate(&paths))
        })
        .collect()
}

/// Upper expectation: maximum over the control family of the Monte Carlo
/// mean of the functional, with common random numbers across controls.
pub fn upper_expectation(
    functional: &PathFunctional,
    problem: &Problem,
    grid: &TimeGrid,
    vol_spec: &VolatilitySpec,
    controls: &[VolatilityControl],
    n_paths: usize,
    master_seed: u64,
) -> Result<UpperExpectationEstimate> {
    if controls.is_empty() {
        return Err(Error::InvalidArgument("control family is empty".into()));
    }
    if n_paths < 2 {
        return Err(Error::InvalidArgument("n_paths must be at least 2".into()));
    }
    let mut per_control = Vec::with_capacity(controls.len());
    for control in controls {
        let values = per_path_values(
            functional, problem, control, grid, vol_spec, n_paths, master_seed,
        )?;
        let (mean, stderr) = stats(&values);
        per_control.push(ControlStat {
            label: control.label.clone(),
            mean,
            stderr,
            n_paths,
        });
    }
    let best = per_control
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.mean
                .partial_cmp(&b.mean)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(ib.cmp(ia)) // first index wins ties
        })
        .unwrap();
    Ok(UpperExpectationEstimate {
        value: best.1.mean,
        argmax_control: best.1.label.clone(),
        per_control: per_control.clone(),
        master_seed,
    })
}

/// Capacity of an event: the same maximization applied to the indicator's
/// empirical frequency.
pub fn capacity(
    event: &PathEvent,
    problem: &Problem,
    grid: &TimeGrid,
    vol_spec: &VolatilitySpec,
    controls: &[VolatilityControl],
    n_paths: usize,
    master_seed: u64,
) -> Result<UpperExpectationEstimate> {
    if controls.is_empty() {
        return Err(Error::InvalidArgument("control family is empty".into()));
    }
    if n_paths < 2 {
        return Err(Error::InvalidArgument("n_paths must be at least 2".into()));
    }
    let mut per_control = Vec::with_capacity(controls.len());
    for control in controls {
        let values: Vec<f64> = (0..n_paths as u64)
            .into_par_iter()
            .map(|j| {
                let paths = solve_scenario(problem, control, grid, vol_spec, master_seed, j)?;
                Ok(if event.holds(&paths) { 1.0 } else { 0.0 })
            })
            .collect::<Result<_>>()?;
        let (mean, stderr) = stats(&values);
        per_control.push(ControlStat {
            label: control.label.clone(),
            mean,
            stderr,
            n_paths,
        });
    }
    let best = per_control
        .iter()
        .max_by(|a, b| a.mean.partial_cmp(&b.mean).unwrap())
        .unwrap()
        .clone();
    Ok(UpperExpectationEstimate {
        value: best.mean,
        argmax_control: best.label,
        per_control,
        master_seed,
    })
}
