//! Theorem-level experiment suites: pathwise comparison of ordered
//! problems, truncation stability ladders, and uniqueness probes that
//! restart the fixed-point iteration from perturbed initializations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::{CoeffFn, CoefficientSet, ModulusKind, ObstacleSpec};
use crate::error::{Error, Result};
use crate::expectation::pairwise_sum;
use crate::grid::TimeGrid;
use crate::scenario::{sample_scenario, scenario_seed, VolatilityControl, VolatilitySpec};
use crate::solver::{picard_solve, picard_solve_from, Problem, SolverConfig};

/// Which set of order hypotheses a comparison case claims to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisProfile {
    /// bounded coefficients, uniformly upper-bounded obstacles, full
    /// monotonicity in k on both sides
    Thm36Bounded,
    /// full monotonicity in k, no boundedness requirement
    Thm37General,
    /// lower problem k-independent, upper problem nondecreasing in k
    Cor38Case1,
    /// upper problem k-independent, lower problem nonincreasing in k
    Cor38Case2,
}

/// One side of a comparison pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemData {
    pub coeffs: CoefficientSet,
    pub obstacle: ObstacleSpec,
    pub x0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCase {
    pub lower: ProblemData,
    pub upper: ProblemData,
    pub profile: HypothesisProfile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorstNode {
    pub control: String,
    pub scenario: u64,
    pub node: usize,
    pub x_lower: f64,
    pub x_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// max over scenarios and nodes of (X_lower - X_upper)^+
    pub max_violation: f64,
    pub n_scenarios: usize,
    pub sup_abs_upper: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub worst: Option<WorstNode>,
}

const PROBE_X: [f64; 9] = [-8.0, -3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0, 8.0];
const PROBE_K: [f64; 7] = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];
const PROBE_TOL: f64 = 1e-12;

fn probe_monotone_in_k(c: &CoeffFn, nonincreasing: bool, name: &str) -> Result<()> {
    for &x in &PROBE_X {
        for w in PROBE_K.windows(2) {
            let lo = c.eval(0, x, w[0]);
            let hi = c.eval(0, x, w[1]);
            let ok = if nonincreasing {
                hi <= lo + PROBE_TOL
            } else {
                hi >= lo - PROBE_TOL
            };
            if !ok {
                return Err(Error::IllPosedCase(format!(
                    "{name} is not {} in k at x = {x}: value {lo} at k = {}, {hi} at k = {}",
                    if nonincreasing { "nonincreasing" } else { "nondecreasing" },
                    w[0],
                    w[1]
                )));
            }
        }
    }
    Ok(())
}

fn probe_k_independent(c: &CoeffFn, name: &str) -> Result<()> {
    for &x in &PROBE_X {
        let base = c.eval(0, x, 0.0);
        for &k in &PROBE_K {
            if (c.eval(0, x, k) - base).abs() > PROBE_TOL {
                return Err(Error::IllPosedCase(format!(
                    "{name} depends on k at x = {x}"
                )));
            }
        }
    }
    Ok(())
}

fn probe_ordered_at_zero_k(lo: &CoeffFn, hi: &CoeffFn, name: &str) -> Result<()> {
    for &x in &PROBE_X {
        let a = lo.eval(0, x, 0.0);
        let b = hi.eval(0, x, 0.0);
        if a > b + PROBE_TOL {
            return Err(Error::IllPosedCase(format!(
                "{name}: lower value {a} exceeds upper value {b} at (x, k) = ({x}, 0)"
            )));
        }
    }
    Ok(())
}

/// Necessary-condition probes for the case's claimed hypothesis profile,
/// evaluated on finite (x, k) lattices.
pub fn probe_hypotheses(case: &ComparisonCase) -> Result<()> {
    if case.lower.x0 > case.upper.x0 {
        return Err(Error::IllPosedCase(format!(
            "initial values are mis-ordered: {} > {}",
            case.lower.x0, case.upper.x0
        )));
    }
    if case.lower.coeffs.g != case.upper.coeffs.g {
        return Err(Error::IllPosedCase(
            "the diffusion coefficient must be shared".into(),
        ));
    }
    probe_k_independent(&case.lower.coeffs.g, "shared diffusion coefficient")?;
    probe_ordered_at_zero_k(&case.lower.coeffs.f, &case.upper.coeffs.f, "drift")?;
    probe_ordered_at_zero_k(
        &case.lower.coeffs.h,
        &case.upper.coeffs.h,
        "variation drift",
    )?;
    match case.profile {
        HypothesisProfile::Thm36Bounded | HypothesisProfile::Thm37General => {
            probe_monotone_in_k(&case.lower.coeffs.f, true, "lower drift")?;
            probe_monotone_in_k(&case.lower.coeffs.h, true, "lower variation drift")?;
            probe_monotone_in_k(&case.upper.coeffs.f, false, "upper drift")?;
            probe_monotone_in_k(&case.upper.coeffs.h, false, "upper variation drift")?;
        }
        HypothesisProfile::Cor38Case1 => {
            probe_k_independent(&case.lower.coeffs.f, "lower drift")?;
            probe_k_independent(&case.lower.coeffs.h, "lower variation drift")?;
            probe_monotone_in_k(&case.upper.coeffs.f, false, "upper drift")?;
            probe_monotone_in_k(&case.upper.coeffs.h, false, "upper variation drift")?;
        }
        HypothesisProfile::Cor38Case2 => {
            probe_k_independent(&case.upper.coeffs.f, "upper drift")?;
            probe_k_independent(&case.upper.coeffs.h, "upper variation drift")?;
            probe_monotone_in_k(&case.lower.coeffs.f, true, "lower drift")?;
            probe_monotone_in_k(&case.lower.coeffs.h, true, "lower variation drift")?;
        }
    }
    if case.profile == HypothesisProfile::Thm36Bounded {
        for (c, name) in [
            (&case.lower.coeffs.f, "lower drift"),
            (&case.lower.coeffs.h, "lower variation drift"),
            (&case.upper.coeffs.f, "upper drift"),
            (&case.upper.coeffs.h, "upper variation drift"),
            (&case.lower.coeffs.g, "diffusion"),
        ] {
            if c.uniform_bound().is_none() {
                return Err(Error::IllPosedCase(format!(
                    "{name} is unbounded but the bounded profile was claimed"
                )));
            }
        }
        for (obs, name) in [
            (&case.lower.obstacle, "lower obstacle"),
            (&case.upper.obstacle, "upper obstacle"),
        ] {
            if obs.upper_bound().is_none() {
                return Err(Error::IllPosedCase(format!(
                    "{name} has no uniform upper bound but the bounded profile was claimed"
                )));
            }
        }
    }
    Ok(())
}

/// Solves both problems on identical scenarios and measures the worst
/// order violation.
pub fn run_comparison(
    case: &ComparisonCase,
    grid: &TimeGrid,
    vol_spec: &VolatilitySpec,
    controls: &[VolatilityControl],
    n_paths: usize,
    cfg: &SolverConfig,
    master_seed: u64,
) -> Result<ComparisonReport> {
    probe_hypotheses(case)?;
    if controls.is_empty() {
        return Err(Error::InvalidArgument("control family is empty".into()));
    }
    struct ScenOutcome {
        violation: f64,
        sup_abs_upper: f64,
        worst_node: usize,
        worst_pair: (f64, f64),
    }
    let mut max_violation = 0.0f64;
    let mut sup_abs_upper = 0.0f64;
    let mut worst: Option<WorstNode> = None;
    let mut n_scenarios = 0usize;
    for control in controls {
        let outcomes: Vec<ScenOutcome> = (0..n_paths as u64)
            .into_par_iter()
            .map(|j| {
                let scen =
                    sample_scenario(control, grid, vol_spec, scenario_seed(master_seed, j))?;
                let s_lo = case.lower.obstacle.build(&scen, grid)?;
                let s_hi = case.upper.obstacle.build(&scen, grid)?;
                for (i, (a, b)) in s_lo.iter().zip(&s_hi).enumerate() {
                    if a > b {
                        return Err(Error::IllPosedCase(format!(
                            "obstacles are mis-ordered at node {i}: {a} > {b}"
                        )));
                    }
                }
                let lo = picard_solve(
                    &case.lower.coeffs,
                    &case.lower.obstacle,
                    &scen,
                    grid,
                    case.lower.x0,
                    cfg,
                )?;
                let hi = picard_solve(
                    &case.upper.coeffs,
                    &case.upper.obstacle,
                    &scen,
                    grid,
                    case.upper.x0,
                    cfg,
                )?;
                let mut violation = 0.0f64;
                let mut worst_node = 0usize;
                let mut worst_pair = (lo.solution.x[0], hi.solution.x[0]);
                let mut sup_hi = 0.0f64;
                for i in 0..=grid.n_steps {
                    let x1 = lo.solution.x[i];
                    let x2 = hi.solution.x[i];
                    sup_hi = sup_hi.max(x2.abs());
                    let v = (x1 - x2).max(0.0);
                    if v > violation {
                        violation = v;
                        worst_node = i;
                        worst_pair = (x1, x2);
                    }
                }
                Ok(ScenOutcome {
                    violation,
                    sup_abs_upper: sup_hi,
                    worst_node,
                    worst_pair,
                })
            })
            .collect::<Result<_>>()?;
        for (j, o) in outcomes.iter().enumerate() {
            n_scenarios += 1;
            sup_abs_upper = sup_abs_upper.max(o.sup_abs_upper);
            if o.violation > max_violation {
                max_violation = o.violation;
                worst = Some(WorstNode {
                    control: control.label.clone(),
                    scenario: j as u64,
                    node: o.worst_node,
                    x_lower: o.worst_pair.0,
                    x_upper: o.worst_pair.1,
                });
            }
        }
    }
    let tolerance = 1e-9 * (1.0 + sup_abs_upper);
    Ok(ComparisonReport {
        max_violation,
        n_scenarios,
        sup_abs_upper,
        tolerance,
        passed: max_violation <= tolerance,
        worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationRow {
    pub level: f64,
    /// maximized-over-controls mean of the per-path sup |X^N - X|
    pub gap_estimate: f64,
    /// per-path maximum of the gap across all scenarios
    pub gap_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationTable {
    pub rows: Vec<TruncationRow>,
    /// realized sup over paths and nodes of |f|, |h|, |g| and S
    pub realized_bound: f64,
    pub monotone_within_tol: bool,
    pub zero_beyond_realized_bound: bool,
}

/// Solves the problem under coefficient/obstacle clamping at each ladder
/// level and measures the gap to the unclamped solution on shared
/// scenarios.
pub fn run_truncation_study(
    problem: &Problem,
    n_ladder: &[f64],
    grid: &TimeGrid,
    vol_spec: &VolatilitySpec,
    controls: &[VolatilityControl],
    n_paths: usize,
    master_seed: u64,
) -> Result<TruncationTable> {
    if n_ladder.is_empty() {
        return Err(Error::InvalidArgument("truncation ladder is empty".into()));
    }
    for w in n_ladder.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidArgument(format!(
                "truncation ladder must be strictly increasing, got {} after {}",
                w[1], w[0]
            )));
        }
    }
    if !(n_ladder[0] > 0.0) {
        return Err(Error::InvalidArgument(
            "truncation levels must be positive".into(),
        ));
    }
    if controls.is_empty() {
        return Err(Error::InvalidArgument("control family is empty".into()));
    }
    let truncated: Vec<Problem> = n_ladder
        .iter()
        .map(|&n| {
            Ok(Problem {
                coeffs: problem.coeffs.truncated(n)?,
                obstacle: problem.obstacle.clone().truncated(n),
                x0: problem.x0,
                cfg: problem.cfg.clone(),
            })
        })
        .collect::<Result<_>>()?;

    let mut realized_bound = 0.0f64;
    let mut rows: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 0.0); n_ladder.len()];
    let mut per_level_means: Vec<Vec<f64>> = vec![Vec::new(); n_ladder.len()];
    for control in controls {
        let outcomes: Vec<(Vec<f64>, f64)> = (0..n_paths as u64)
            .into_par_iter()
            .map(|j| {
                let scen =
                    sample_scenario(control, grid, vol_spec, scenario_seed(master_seed, j))?;
                let s = problem.obstacle.build(&scen, grid)?;
                let base = picard_solve(
                    &problem.coeffs,
                    &problem.obstacle,
                    &scen,
                    grid,
                    problem.x0,
                    &problem.cfg,
                )?;
                // realized magnitude of every clamped quantity along the
                // unclamped path
                let mut realized = 0.0f64;
                for i in 0..=grid.n_steps {
                    let x = base.solution.x[i];
                    let k = base.solution.k[i];
                    for c in [&problem.coeffs.f, &problem.coeffs.h, &problem.coeffs.g] {
                        realized = realized.max(c.eval(i.min(grid.n_steps - 1), x, k).abs());
                    }
                    realized = realized.max(s[i].abs());
                }
                let mut gaps = Vec::with_capacity(truncated.len());
                for tp in &truncated {
                    let sol =
                        picard_solve(&tp.coeffs, &tp.obstacle, &scen, grid, tp.x0, &tp.cfg)?;
                    let gap = sol
                        .solution
                        .x
                        .iter()
                        .zip(&base.solution.x)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                    gaps.push(gap);
                }
                Ok((gaps, realized))
            })
            .collect::<Result<_>>()?;
        for level in 0..n_ladder.len() {
            let vals: Vec<f64> = outcomes.iter().map(|(g, _)| g[level]).collect();
            let mean = pairwise_sum(&vals) / vals.len() as f64;
            per_level_means[level].push(mean);
            let max = vals.iter().copied().fold(0.0f64, f64::max);
            rows[level].1 = rows[level].1.max(max);
        }
        realized_bound = realized_bound.max(
            outcomes
                .iter()
                .map(|(_, r)| *r)
                .fold(0.0f64, f64::max),
        );
    }
    let rows: Vec<TruncationRow> = n_ladder
        .iter()
        .enumerate()
        .map(|(level, &n)| TruncationRow {
            level: n,
            gap_estimate: per_level_means[level]
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
            gap_max: rows[level].1,
        })
        .collect();
    // nonincreasing within a small statistical slack relative to scale
    let slack = 1e-9 + 1e-3 * rows.first().map(|r| r.gap_estimate).unwrap_or(0.0);
    let monotone_within_tol = rows
        .windows(2)
        .all(|w| w[1].gap_estimate <= w[0].gap_estimate + slack);
    let zero_beyond_realized_bound = rows
        .iter()
        .filter(|r| r.level > realized_bound)
        .all(|r| r.gap_max == 0.0);
    Ok(TruncationTable {
        rows,
        realized_bound,
        monotone_within_tol,
        zero_beyond_realized_bound,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    /// worst sup-norm distance between fixed points reached from
    /// different initializations
    pub max_gap: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub n_solves: usize,
}

/// Re-solves each scenario from perturbed iteration starts and checks all
/// runs land on the same fixed point.
pub fn run_uniqueness_probe(
    problem: &Problem,
    deltas: &[f64],
    grid: &TimeGrid,
    vol_spec: &VolatilitySpec,
    controls: &[VolatilityControl],
    n_paths: usize,
    master_seed: u64,
) -> Result<UniquenessReport> {
    if controls.is_empty() {
        return Err(Error::InvalidArgument("control family is empty".into()));
    }
    let tolerance = 10.0 * problem.cfg.picard_tol;
    let mut max_gap = 0.0f64;
    let mut n_solves = 0usize;
    for control in controls {
        let gaps: Vec<(f64, usize)> = (0..n_paths as u64)
            .into_par_iter()
            .map(|j| {
                let scen =
                    sample_scenario(control, grid, vol_spec, scenario_seed(master_seed, j))?;
                let base = picard_solve(
                    &problem.coeffs,
                    &problem.obstacle,
                    &scen,
                    grid,
                    problem.x0,
                    &problem.cfg,
                )?;
                let mut worst = 0.0f64;
                let mut solves = 1usize;
                for &delta in deltas {
                    let alt = picard_solve_from(
                        &problem.coeffs,
                        &problem.obstacle,
                        &scen,
                        grid,
                        problem.x0,
                        &problem.cfg,
                        delta,
                    )?;
                    solves += 1;
                    let gap_x = alt
                        .solution
                        .x
                        .iter()
                        .zip(&base.solution.x)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                    let gap_k = alt
                        .solution
                        .k
                        .iter()
                        .zip(&base.solution.k)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0f64, f64::max);
                    worst = worst.max(gap_x.max(gap_k));
                }
                Ok((worst, solves))
            })
            .collect::<Result<_>>()?;
        for (g, s) in gaps {
            max_gap = max_gap.max(g);
            n_solves += s;
        }
    }
    Ok(UniquenessReport {
        max_gap,
        tolerance,
        passed: max_gap <= tolerance,
        n_solves,
    })
}

/// Empirical paired-difference moment under common random numbers:
/// maximized-over-controls mean of sup|dX|^p + sup|dK|^p.
#[allow(clippy::too_many_arguments)]
pub fn paired_difference_estimate(
    problem1: &Problem,
    problem2: &Problem,
    p: f64,
    grid: &TimeGrid,
    vol_spec: &VolatilitySpec,
    controls: &[VolatilityControl],
    n_paths: usize,
    master_seed: u64,
) -> Result<f64> {
    if controls.is_empty() {
        return Err(Error::InvalidArgument("control family is empty".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for control in controls {
        let vals: Vec<f64> = (0..n_paths as u64)
            .into_par_iter()
            .map(|j| {
                let scen =
                    sample_scenario(control, grid, vol_spec, scenario_seed(master_seed, j))?;
                let a = picard_solve(
                    &problem1.coeffs,
                    &problem1.obstacle,
                    &scen,
                    grid,
                    problem1.x0,
                    &problem1.cfg,
                )?;
                let b = picard_solve(
                    &problem2.coeffs,
                    &problem2.obstacle,
                    &scen,
                    grid,
                    problem2.x0,
                    &problem2.cfg,
                )?;
                let dx = a
                    .solution
                    .x
                    .iter()
                    .zip(&b.solution.x)
                    .map(|(u, v)| (u - v).abs())
                    .fold(0.0f64, f64::max);
                let dk = a
                    .solution
                    .k
                    .iter()
                    .zip(&b.solution.k)
                    .map(|(u, v)| (u - v).abs())
                    .fold(0.0f64, f64::max);
                Ok(dx.powf(p) + dk.powf(p))
            })
            .collect::<Result<_>>()?;
        best = best.max(pairwise_sum(&vals) / vals.len() as f64);
    }
    Ok(best)
}

fn shared_g() -> CoeffFn {
    CoeffFn::Sinusoid {
        offset: 1.0,
        amp: 0.1,
        freq: 1.0,
        k_slope: 0.0,
    }
}

fn set(name: &str, f: CoeffFn, h: CoeffFn, g: CoeffFn) -> Result<CoefficientSet> {
    CoefficientSet::from_registry(name, f, h, g, ModulusKind::Lipschitz { l: 1.0 }, 3.0)
}

/// Built-in comparison cases, one per hypothesis profile.
pub fn default_comparison_cases() -> Result<Vec<(String, ComparisonCase)>> {
    let g = shared_g();
    let mut cases = Vec::new();
    cases.push((
        "bounded-constant-drifts".to_string(),
        ComparisonCase {
            lower: ProblemData {
                coeffs: set(
                    "cmp36-lo",
                    CoeffFn::Constant { value: -1.0 },
                    CoeffFn::Zero,
                    g.clone(),
                )?,
                obstacle: ObstacleSpec::constant(-1.0),
                x0: 0.0,
            },
            upper: ProblemData {
                coeffs: set(
                    "cmp36-hi",
                    CoeffFn::Constant { value: 1.0 },
                    CoeffFn::Zero,
                    g.clone(),
                )?,
                obstacle: ObstacleSpec::constant(-1.0),
                x0: 0.0,
            },
            profile: HypothesisProfile::Thm36Bounded,
        },
    ));
    cases.push((
        "general-k-coupled-drifts".to_string(),
        ComparisonCase {
            lower: ProblemData {
                coeffs: set(
                    "cmp37-lo",
                    CoeffFn::Linear {
                        a: 0.0,
                        b: 0.0,
                        c: -1.0,
                    },
                    CoeffFn::Zero,
                    g.clone(),
                )?,
                obstacle: ObstacleSpec::constant(-1.0),
                x0: 0.0,
            },
            upper: ProblemData {
                coeffs: set(
                    "cmp37-hi",
                    CoeffFn::Linear {
                        a: 0.0,
                        b: 0.0,
                        c: 1.0,
                    },
                    CoeffFn::Zero,
                    g.clone(),
                )?,
                obstacle: ObstacleSpec::constant(-1.0),
                x0: 0.0,
            },
            profile: HypothesisProfile::Thm37General,
        },
    ));
    cases.push((
        "lower-side-k-free".to_string(),
        ComparisonCase {
            lower: ProblemData {
                coeffs: set(
                    "cmp38a-lo",
                    CoeffFn::Constant { value: -1.0 },
                    CoeffFn::Zero,
                    g.clone(),
                )?,
                obstacle: ObstacleSpec::constant(-1.0),
                x0: 0.0,
            },
            upper: ProblemData {
                coeffs: set(
                    "cmp38a-hi",
                    CoeffFn::Linear {
                        a: 1.0,
                        b: 0.0,
                        c: 0.5,
                    },
                    CoeffFn::Zero,
                    g.clone(),
                )?,
                obstacle: ObstacleSpec::constant(-0.5),
                x0: 0.5,
            },
            profile: HypothesisProfile::Cor38Case1,
        },
    ));
    cases.push((
        "upper-side-k-free".to_string(),
        ComparisonCase {
            lower: ProblemData {
                coeffs: set(
                    "cmp38b-lo",
                    CoeffFn::Linear {
                        a: -1.0,
                        b: 0.0,
                        c: -0.5,
                    },
                    CoeffFn::Zero,
                    g.clone(),
                )?,
                obstacle: ObstacleSpec::constant(-1.0),
                x0: 0.0,
            },
            upper: ProblemData {
                coeffs: set(
                    "cmp38b-hi",
                    CoeffFn::Constant { value: 1.0 },
                    CoeffFn::Zero,
                    g,
                )?,
                obstacle: ObstacleSpec::constant(-1.0),
                x0: 0.0,
            },
            profile: HypothesisProfile::Cor38Case2,
        },
    ));
    Ok(cases)
}

/// The mis-ordered case used to prove the probes actually fire.
pub fn misordered_comparison_case() -> Result<ComparisonCase> {
    let g = shared_g();
    Ok(ComparisonCase {
        lower: ProblemData {
            coeffs: set(
                "cmp-bad-lo",
                CoeffFn::Constant { value: 1.0 },
                CoeffFn::Zero,
                g.clone(),
            )?,
            obstacle: ObstacleSpec::constant(-1.0),
            x0: 0.0,
        },
        upper: ProblemData {
            coeffs: set(
                "cmp-bad-hi",
                CoeffFn::Constant { value: -1.0 },
                CoeffFn::Zero,
                g,
            )?,
            obstacle: ObstacleSpec::constant(-1.0),
            x0: 0.0,
        },
        profile: HypothesisProfile::Thm36Bounded,
    })
}

/// Outcome of the full default suite, serialized by the check command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub comparisons: Vec<(String, ComparisonReport)>,
    pub truncation: TruncationTable,
    pub uniqueness: UniquenessReport,
    pub all_passed: bool,
}

/// Runs all default comparison cases plus a truncation ladder and a
/// uniqueness probe on a linear family.
pub fn run_default_suite(
    grid: &TimeGrid,
    vol_spec: &VolatilitySpec,
    controls: &[VolatilityControl],
    n_paths: usize,
    cfg: &SolverConfig,
    master_seed: u64,
) -> Result<SuiteReport> {
    let mut comparisons = Vec::new();
    for (name, case) in default_comparison_cases()? {
        let report =
            run_comparison(&case, grid, vol_spec, controls, n_paths, cfg, master_seed)?;
        comparisons.push((name, report));
    }
    let linear = Problem {
        coeffs: set(
            "suite-linear",
            CoeffFn::Linear {
                a: 0.0,
                b: -0.5,
                c: 0.0,
            },
            CoeffFn::Zero,
            shared_g(),
        )?,
        obstacle: ObstacleSpec::constant(-1.0),
        x0: 0.0,
        cfg: cfg.clone(),
    };
    let truncation = run_truncation_study(
        &linear,
        &[1.0, 2.0, 4.0, 8.0, 16.0, 1e6],
        grid,
        vol_spec,
        controls,
        n_paths.min(64),
        master_seed,
    )?;
    let uniqueness = run_uniqueness_probe(
        &linear,
        &[1.0, -1.0, 10.0, -10.0],
        grid,
        vol_spec,
        controls,
        n_paths.min(64),
        master_seed,
    )?;
    let all_passed = comparisons.iter().all(|(_, r)| r.passed)
        && truncation.monotone_within_tol
        && truncation.zero_beyond_realized_bound
        && uniqueness.passed;
    Ok(SuiteReport {
        comparisons,
        truncation,
        uniqueness,
        all_passed,
    })
}
