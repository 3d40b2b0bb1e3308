//! Pathwise solver for the reflected SDE with nonlinear resistance:
//! a Picard iteration over the discrete Skorokhod map, with a stepwise
//! explicit scheme as an independent oracle.
//!
//! Convention: within a step [t_j, t_{j+1}] the coefficients see the previous
//! iterate's X at the left node and K at the right node; the iteration
//! resolves the implicit K-dependence. The stepwise oracle is fully explicit
//! and uses the left K value, so the two schemes differ by O(dt) on
//! K-coupled families and coincide when the pusher is inactive.

use serde::{Deserialize, Serialize};

use crate::coeffs::{CoefficientSet, ObstacleSpec};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::reflection::{flatness_defect, flatness_tolerance, skorokhod_map, ReflectedSolution};
use crate::scenario::{
    normal_stream, scenario_from_normals, ScenarioPath, VolatilityControl, VolatilitySpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub p_exponent: f64,
    pub picard_tol: f64,
    pub max_picard: usize,
    pub oracle_check: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            p_exponent: 3.0,
            picard_tol: 1e-10,
            max_picard: 200,
            oracle_check: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_exponent > 2.0) {
            return Err(Error::InvalidArgument(format!(
                "p_exponent must exceed 2, got {}",
                self.p_exponent
            )));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "picard_tol must be positive".into(),
            ));
        }
        if self.max_picard == 0 {
            return Err(Error::InvalidArgument("max_picard must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub solution: ReflectedSolution,
    pub picard_iters: usize,
    pub residual: f64,
    pub oracle_gap: Option<f64>,
}

/// A complete problem instance; immutable and shareable across scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub coeffs: CoefficientSet,
    pub obstacle: ObstacleSpec,
    pub x0: f64,
    pub cfg: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeFailure {
    pub check: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub failures: Vec<ProbeFailure>,
}

/// Probes the admissibility assumptions: S_0 <= x_0, the declared growth
/// bound on a lattice of (x, k) values, and the declared modulus bound on
/// sampled pairs. Failures are reported, not raised.
pub fn validate_assumptions(
    coeffs: &CoefficientSet,
    x0: f64,
    obstacle: &ObstacleSpec,
    _grid: &TimeGrid,
) -> ValidationReport {
    let mut failures = Vec::new();
    let p = coeffs.growth_p;

    if coeffs.beta2 < 0.0 {
        failures.push(ProbeFailure {
            check: "invalid-growth".into(),
            detail: format!("beta2 = {} is negative", coeffs.beta2),
        });
    }

    let s0 = obstacle.initial_value();
    if !(s0 <= x0) {
        failures.push(ProbeFailure {
            check: "obstacle-violation".into(),
            detail: format!("S_0 = {s0} exceeds x0 = {x0} at t = 0"),
        });
    }

    // growth probe on a deterministic lattice
    let xs: Vec<f64> = (-10..=10).map(|i| i as f64).collect();
    let ks: Vec<f64> = (0..=10).map(|i| i as f64).collect();
    let slack = 1e-9;
    'growth: for &x in &xs {
        for &k in &ks {
            for step in [0usize, 1, 7] {
                let lhs = coeffs.f.eval(step, x, k).abs().powf(p)
                    + coeffs.h.eval(step, x, k).abs().powf(p)
                    + coeffs.g.eval(step, x, k).abs().powf(p);
                let rhs = coeffs.beta1.value_at(step).abs().powf(p)
                    + coeffs.beta2.powf(p) * (x.abs().powf(p) + k.abs().powf(p));
                if lhs > rhs * (1.0 + slack) + slack {
                    failures.push(ProbeFailure {
                        check: "growth-bound".into(),
                        detail: format!(
                            "growth bound fails at (x, k) = ({x}, {k}): {lhs:.6e} > {rhs:.6e}"
                        ),
                    });
                    break 'growth;
                }
            }
        }
    }

    // modulus probe on sampled pairs
    let probes = [
        (0.0, 0.0, 0.5, 0.0),
        (0.0, 0.0, 0.0, 0.5),
        (1.0, 2.0, -1.0, 3.0),
        (-3.0, 0.5, 2.5, 1.5),
        (0.1, 0.1, 0.100001, 0.1),
        (5.0, 4.0, -5.0, 0.0),
    ];
    for &(x1, k1, x2, k2) in &probes {
        let step = 0;
        let lhs = (coeffs.f.eval(step, x1, k1) - coeffs.f.eval(step, x2, k2))
            .abs()
            .powf(p)
            + (coeffs.h.eval(step, x1, k1) - coeffs.h.eval(step, x2, k2))
                .abs()
                .powf(p)
            + (coeffs.g.eval(step, x1, k1) - coeffs.g.eval(step, x2, k2))
                .abs()
                .powf(p);
        let r = (x1 - x2).abs().powf(p) + (k1 - k2).abs().powf(p);
        let rhs = coeffs.modulus.beta_weight.value_at(step) * coeffs.modulus.kind.rho(r);
        if lhs > rhs * (1.0 + slack) + slack {
            failures.push(ProbeFailure {
                check: "modulus-bound".into(),
                detail: format!(
                    "integral-Lipschitz bound fails at ({x1}, {k1}) vs ({x2}, {k2}): {lhs:.6e} > {rhs:.6e}"
                ),
            });
            break;
        }
    }

    ValidationReport {
        passed: failures.is_empty(),
        failures,
    }
}

fn check_scenario(scenario: &ScenarioPath, grid: &TimeGrid) -> Result<()> {
    if scenario.n_steps() != grid.n_steps {
        return Err(Error::InvalidArgument(format!(
            "scenario has {} steps, grid has {}",
            scenario.n_steps(),
            grid.n_steps
        )));
    }
    Ok(())
}

/// Picard fixed-point solve; see the module docs for the step convention.
pub fn picard_solve(
    coeffs: &CoefficientSet,
    obstacle: &ObstacleSpec,
    scenario: &ScenarioPath,
    grid: &TimeGrid,
    x0: f64,
    cfg: &SolverConfig,
) -> Result<SolveResult> {
    picard_solve_from(coeffs, obstacle, scenario, grid, x0, cfg, 0.0)
}

/// Picard solve started from the perturbed initialization X^0 = x0 + delta;
/// used by the uniqueness probe.
pub fn picard_solve_from(
    coeffs: &CoefficientSet,
    obstacle: &ObstacleSpec,
    scenario: &ScenarioPath,
    grid: &TimeGrid,
    x0: f64,
    cfg: &SolverConfig,
    init_offset: f64,
) -> Result<SolveResult> {
    cfg.validate()?;
    check_scenario(scenario, grid)?;
    let s = obstacle.build(scenario, grid)?;
    if s[0] > x0 {
        return Err(Error::ObstacleViolation(format!(
            "S_0 = {} exceeds x0 = {x0}",
            s[0]
        )));
    }
    let n = grid.n_steps;
    let dt = grid.dt;
    let mut x = vec![x0 + init_offset; n + 1];
    let mut k = vec![0.0; n + 1];
    let mut history = Vec::new();

    for iter in 1..=cfg.max_picard {
        let mut y = Vec::with_capacity(n + 1);
        y.push(x0);
        for j in 0..n {
            let fv = coeffs.f.eval(j, x[j], k[j + 1]);
            let hv = coeffs.h.eval(j, x[j], k[j + 1]);
            let gv = coeffs.g.eval(j, x[j], k[j + 1]);
            let next = y[j] + fv * dt + hv * scenario.d_qv[j] + gv * scenario.d_b[j];
            if !next.is_finite() {
                return Err(Error::NumericFailure(format!(
                    "free path diverged at step {j} in Picard iteration {iter}"
                )));
            }
            y.push(next);
        }
        let sol = skorokhod_map(&y, &s)?;
        let res_x = sol
            .x
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let res_k = sol
            .k
            .iter()
            .zip(&k)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        let residual = res_x + res_k;
        x = sol.x;
        k = sol.k;
        history.push(residual);
        if residual <= cfg.picard_tol {
            let solution = ReflectedSolution { x, k };
            let oracle_gap = if cfg.oracle_check {
                let oracle = stepwise_solve(coeffs, obstacle, scenario, grid, x0)?;
                let gx = solution
                    .x
                    .iter()
                    .zip(&oracle.x)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                let gk = solution
                    .k
                    .iter()
                    .zip(&oracle.k)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                Some(gx.max(gk))
            } else {
                None
            };
            return Ok(SolveResult {
                solution,
                picard_iters: iter,
                residual,
                oracle_gap,
            });
        }
    }
    let last = history.last().copied().unwrap_or(f64::NAN);
    Err(Error::NonConvergence {
        iters: cfg.max_picard,
        residual: last,
        history,
    })
}

/// Single-pass explicit scheme: step the free dynamics with left values,
/// then push back up to the obstacle.
pub fn stepwise_solve(
    coeffs: &CoefficientSet,
    obstacle: &ObstacleSpec,
    scenario: &ScenarioPath,
    grid: &TimeGrid,
    x0: f64,
) -> Result<ReflectedSolution> {
    check_scenario(scenario, grid)?;
    let s = obstacle.build(scenario, grid)?;
    if s[0] > x0 {
        return Err(Error::ObstacleViolation(format!(
            "S_0 = {} exceeds x0 = {x0}",
            s[0]
        )));
    }
    let n = grid.n_steps;
    let dt = grid.dt;
    let mut x = Vec::with_capacity(n + 1);
    let mut k = Vec::with_capacity(n + 1);
    x.push(x0);
    k.push(0.0);
    for i in 0..n {
        let fv = coeffs.f.eval(i, x[i], k[i]);
        let hv = coeffs.h.eval(i, x[i], k[i]);
        let gv = coeffs.g.eval(i, x[i], k[i]);
        let x_tilde = x[i] + fv * dt + hv * scenario.d_qv[i] + gv * scenario.d_b[i];
        if !x_tilde.is_finite() {
            return Err(Error::NumericFailure(format!(
                "free step diverged at step {i}"
            )));
        }
        let dk = (s[i + 1] - x_tilde).max(0.0);
        k.push(k[i] + dk);
        x.push(x_tilde + dk);
    }
    Ok(ReflectedSolution { x, k })
}

/// Checks the reflection-module invariants on a solve output.
pub fn check_solution_invariants(
    sol: &ReflectedSolution,
    s: &[f64],
    tol_reflect: f64,
) -> Result<()> {
    if sol.k[0] != 0.0 {
        return Err(Error::ConstraintViolation(format!(
            "K[0] = {} is not 0",
            sol.k[0]
        )));
    }
    for i in 1..sol.k.len() {
        if sol.k[i] < sol.k[i - 1] {
            return Err(Error::ConstraintViolation(format!(
                "K decreases at node {i}"
            )));
        }
    }
    for i in 0..sol.x.len() {
        if sol.x[i] < s[i] - tol_reflect {
            return Err(Error::ConstraintViolation(format!(
                "X[{i}] = {} is below S[{i}] = {}",
                sol.x[i], s[i]
            )));
        }
    }
    let defect = flatness_defect(sol, s).abs();
    let tol = flatness_tolerance(sol, s);
    if defect > tol {
        return Err(Error::ConstraintViolation(format!(
            "flatness defect {defect:.3e} exceeds tolerance {tol:.3e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefineRow {
    pub n_steps: usize,
    /// sup-norm gap of X to the next-finer level at shared nodes
    pub sup_gap: f64,
}

/// Solves on n, 2n, ..., 2^(levels-1) n steps with nested Brownian
/// increments and reports sup-norm gaps between consecutive levels.
pub fn richardson_refine(
    coeffs: &CoefficientSet,
    obstacle: &ObstacleSpec,
    control: &VolatilityControl,
    vol_spec: &VolatilitySpec,
    base_grid: &TimeGrid,
    x0: f64,
    cfg: &SolverConfig,
    levels: usize,
    seed: u64,
) -> Result<Vec<RefineRow>> {
    if levels < 2 {
        return Err(Error::InvalidArgument(
            "refinement needs at least 2 levels".into(),
        ));
    }
    let solutions = nested_level_solutions(
        coeffs, obstacle, control, vol_spec, base_grid, x0, cfg, levels, seed,
    )?;
    let mut rows = Vec::new();
    for l in 0..levels - 1 {
        let coarse = &solutions[l].1;
        let fine = &solutions[l + 1].1;
        let mut gap = 0.0f64;
        for (i, xc) in coarse.solution.x.iter().enumerate() {
            gap = gap.max((xc - fine.solution.x[2 * i]).abs());
        }
        rows.push(RefineRow {
            n_steps: solutions[l].0,
            sup_gap: gap,
        });
    }
    Ok(rows)
}

/// Per-level Picard solutions on nested grids driven by one fine normal
/// stream (coarse dB is the sum of fine dB).
pub fn nested_level_solutions(
    coeffs: &CoefficientSet,
    obstacle: &ObstacleSpec,
    control: &VolatilityControl,
    vol_spec: &VolatilitySpec,
    base_grid: &TimeGrid,
    x0: f64,
    cfg: &SolverConfig,
    levels: usize,
    seed: u64,
) -> Result<Vec<(usize, SolveResult)>> {
    let scenarios = nested_scenarios(control, vol_spec, base_grid, levels, seed)?;
    let mut out = Vec::with_capacity(levels);
    for (grid, scen) in &scenarios {
        let sol = picard_solve(coeffs, obstacle, scen, grid, x0, cfg)?;
        out.push((grid.n_steps, sol));
    }
    Ok(out)
}

/// Nested scenarios on n, 2n, ..., 2^(levels-1) n steps sharing one
/// Brownian path: level l's increments aggregate the finest level's.
pub fn nested_scenarios(
    control: &VolatilityControl,
    vol_spec: &VolatilitySpec,
    base_grid: &TimeGrid,
    levels: usize,
    seed: u64,
) -> Result<Vec<(TimeGrid, ScenarioPath)>> {
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be positive".into()));
    }
    let fine_factor = 1usize << (levels - 1);
    let fine_grid = base_grid.refined(fine_factor)?;
    let fine_control = control.refined(fine_factor);
    fine_control.validate(&fine_grid, vol_spec)?;
    let normals = normal_stream(seed, fine_grid.n_steps);
    let fine = scenario_from_normals(&fine_control, &fine_grid, &normals, seed);

    let mut per_level: Vec<(TimeGrid, ScenarioPath)> = Vec::with_capacity(levels);
    per_level.push((fine_grid, fine));
    for _ in 1..levels {
        let (prev_grid, prev) = per_level.last().unwrap();
        let n = prev_grid.n_steps / 2;
        let grid = TimeGrid::uniform(prev_grid.horizon, n)?;
        let mut d_b = Vec::with_capacity(n);
        let mut d_qv = Vec::with_capacity(n);
        let mut b = vec![0.0];
        let mut qv = vec![0.0];
        for i in 0..n {
            let db = prev.d_b[2 * i] + prev.d_b[2 * i + 1];
            let dqv = prev.d_qv[2 * i] + prev.d_qv[2 * i + 1];
            d_b.push(db);
            d_qv.push(dqv);
            b.push(b[i] + db);
            qv.push(qv[i] + dqv);
        }
        let coarse = ScenarioPath {
            d_b,
            d_qv,
            b,
            qv,
            control_label: prev.control_label.clone(),
            seed,
        };
        per_level.push((grid, coarse));
    }
    per_level.reverse();
    Ok(per_level)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{CoeffFn, ModulusKind};
    use crate::scenario::{sample_scenario, scenario_seed};

    fn classical_scenario(n: usize, seed: u64) -> (TimeGrid, ScenarioPath) {
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        let spec = VolatilitySpec::classical();
        let ctrl = VolatilityControl::constant(1.0, n, "hi");
        let scen = sample_scenario(&ctrl, &grid, &spec, seed).unwrap();
        (grid, scen)
    }

    #[test]
    fn zero_dynamics_inactive_obstacle() {
        let (grid, scen) = classical_scenario(32, 1);
        let coeffs = CoefficientSet::zero(3.0).unwrap();
        let obstacle = ObstacleSpec::constant(-10.0);
        let cfg = SolverConfig::default();
        let res = picard_solve(&coeffs, &obstacle, &scen, &grid, 0.0, &cfg).unwrap();
        assert!(res.solution.x.iter().all(|&v| v == 0.0));
        assert!(res.solution.k.iter().all(|&v| v == 0.0));
        assert!(res.picard_iters <= 2);
    }

    #[test]
    fn pure_diffusion_reproduces_b() {
        let (grid, scen) = classical_scenario(64, 2);
        let coeffs = CoefficientSet::constants(0.0, 0.0, 1.0, 3.0).unwrap();
        let obstacle = ObstacleSpec::constant(-1e6);
        let cfg = SolverConfig::default();
        let res = picard_solve(&coeffs, &obstacle, &scen, &grid, 0.0, &cfg).unwrap();
        for i in 0..=64 {
            assert_eq!(res.solution.x[i], scen.b[i], "X must equal B exactly");
            assert_eq!(res.solution.k[i], 0.0);
        }
    }

    #[test]
    fn nonlinear_resistance_matches_closed_form() {
        // f(x, k) = -1 - k, S = 0: on the contact set dK = (1 + K) dt,
        // so K(t) = e^t - 1
        let n = 1 << 14;
        let (grid, scen) = classical_scenario(n, 3);
        let coeffs = CoefficientSet::from_registry(
            "resistance",
            CoeffFn::Linear {
                a: -1.0,
                b: 0.0,
                c: -1.0,
            },
            CoeffFn::Zero,
            CoeffFn::Zero,
            ModulusKind::Lipschitz { l: 1.0 },
            3.0,
        )
        .unwrap();
        let obstacle = ObstacleSpec::constant(0.0);
        let cfg = SolverConfig::default();
        let res = picard_solve(&coeffs, &obstacle, &scen, &grid, 0.0, &cfg).unwrap();
        let k_t = *res.solution.k.last().unwrap();
        let expect = std::f64::consts::E - 1.0;
        assert!(
            (k_t - expect).abs() <= 5e-4,
            "K_T = {k_t}, expected {expect}"
        );
        assert!(res.solution.x.iter().all(|&x| x.abs() < 1e-9));
    }

    #[test]
    fn stepwise_trivial_cases() {
        let (grid, scen) = classical_scenario(32, 4);
        let zero = CoefficientSet::zero(3.0).unwrap();
        let sol = stepwise_solve(&zero, &ObstacleSpec::constant(0.0), &scen, &grid, 1.0).unwrap();
        assert!(sol.x.iter().all(|&v| v == 1.0));
        assert!(sol.k.iter().all(|&v| v == 0.0));

        // constant downward drift fully absorbed: K[i] = i dt, X = 0
        let drift = CoefficientSet::constants(-1.0, 0.0, 0.0, 3.0).unwrap();
        let sol = stepwise_solve(&drift, &ObstacleSpec::constant(0.0), &scen, &grid, 0.0).unwrap();
        for i in 0..=32 {
            assert!((sol.k[i] - i as f64 * grid.dt).abs() < 1e-12);
            assert!(sol.x[i].abs() < 1e-12);
        }
    }

    #[test]
    fn picard_and_stepwise_cross_check() {
        // k-independent cases agree exactly; the K-coupled resistance case
        // agrees to O(dt)
        let n = 1 << 10;
        let (grid, scen) = classical_scenario(n, 5);
        let cfg = SolverConfig {
            oracle_check: true,
            ..SolverConfig::default()
        };

        let zero = CoefficientSet::zero(3.0).unwrap();
        let res = picard_solve(&zero, &ObstacleSpec::constant(-10.0), &scen, &grid, 0.0, &cfg)
            .unwrap();
        assert!(res.oracle_gap.unwrap() <= 1e-9);

        let diff = CoefficientSet::constants(0.0, 0.0, 1.0, 3.0).unwrap();
        let res = picard_solve(&diff, &ObstacleSpec::constant(-1e6), &scen, &grid, 0.0, &cfg)
            .unwrap();
        assert!(res.oracle_gap.unwrap() <= 1e-9);

        let resist = CoefficientSet::from_registry(
            "resistance",
            CoeffFn::Linear {
                a: -1.0,
                b: 0.0,
                c: -1.0,
            },
            CoeffFn::Zero,
            CoeffFn::Zero,
            ModulusKind::Lipschitz { l: 1.0 },
            3.0,
        )
        .unwrap();
        let res = picard_solve(&resist, &ObstacleSpec::constant(0.0), &scen, &grid, 0.0, &cfg)
            .unwrap();
        // gap between the implicit-K and explicit-K conventions is O(dt)
        let gap = res.oracle_gap.unwrap();
        assert!(gap > 0.0 && gap <= 10.0 * grid.dt, "gap {gap} out of range");
    }

    #[test]
    fn validation_probes() {
        let grid = TimeGrid::uniform(1.0, 8).unwrap();
        let set = CoefficientSet::from_registry(
            "linear",
            CoeffFn::Linear {
                a: 0.5,
                b: 0.4,
                c: -0.3,
            },
            CoeffFn::Linear {
                a: -0.2,
                b: 0.1,
                c: 0.2,
            },
            CoeffFn::Constant { value: 1.0 },
            ModulusKind::Lipschitz { l: 1.0 },
            3.0,
        )
        .unwrap();
        let ok = validate_assumptions(&set, 0.0, &ObstacleSpec::constant(-1.0), &grid);
        assert!(ok.passed, "failures: {:?}", ok.failures);

        // S_0 > x0 must fail with an obstacle violation at t = 0
        let bad = validate_assumptions(&set, 0.0, &ObstacleSpec::constant(1.0), &grid);
        assert!(!bad.passed);
        assert!(bad.failures.iter().any(|f| f.check == "obstacle-violation"));

        // negative beta2 declaration
        let mut broken = set.clone();
        broken.beta2 = -1.0;
        let bad = validate_assumptions(&broken, 0.0, &ObstacleSpec::constant(-1.0), &grid);
        assert!(bad.failures.iter().any(|f| f.check == "invalid-growth"));

        // understated growth declaration must be caught by the lattice probe
        let mut understated = set.clone();
        understated.beta1 = crate::coeffs::Weight::Constant(0.0);
        understated.beta2 = 0.0;
        let bad = validate_assumptions(&understated, 0.0, &ObstacleSpec::constant(-1.0), &grid);
        assert!(bad.failures.iter().any(|f| f.check == "growth-bound"));
    }

    #[test]
    fn non_convergence_is_an_error() {
        let (grid, scen) = classical_scenario(16, 6);
        // strongly K-coupled drift with a tiny iteration budget
        let coeffs = CoefficientSet::from_registry(
            "resistance",
            CoeffFn::Linear {
                a: -1.0,
                b: 0.0,
                c: -1.0,
            },
            CoeffFn::Zero,
            CoeffFn::Zero,
            ModulusKind::Lipschitz { l: 1.0 },
            3.0,
        )
        .unwrap();
        let cfg = SolverConfig {
            max_picard: 1,
            ..SolverConfig::default()
        };
        let err = picard_solve(&coeffs, &ObstacleSpec::constant(0.0), &scen, &grid, 0.0, &cfg)
            .unwrap_err();
        match err {
            Error::NonConvergence { history, .. } => assert_eq!(history.len(), 1),
            other => panic!("expected NonConvergence, got {other}"),
        }
    }

    #[test]
    fn solution_invariants_hold() {
        let (grid, scen) = classical_scenario(128, 7);
        let coeffs = CoefficientSet::from_registry(
            "linear",
            CoeffFn::Linear {
                a: -0.5,
                b: -0.2,
                c: -0.1,
            },
            CoeffFn::Constant { value: 0.1 },
            CoeffFn::Constant { value: 0.5 },
            ModulusKind::Lipschitz { l: 1.0 },
            3.0,
        )
        .unwrap();
        let obstacle = ObstacleSpec::constant(-0.2);
        let cfg = SolverConfig::default();
        let res = picard_solve(&coeffs, &obstacle, &scen, &grid, 0.0, &cfg).unwrap();
        let s = obstacle.build(&scen, &grid).unwrap();
        check_solution_invariants(&res.solution, &s, 0.0).unwrap();
        assert!(res.residual <= cfg.picard_tol);
    }

    #[test]
    fn refine_exact_for_pure_diffusion() {
        // constant g, inactive obstacle: coarse solution is the coarse sum of
        // the same increments, so all gaps are exactly 0
        let base = TimeGrid::uniform(1.0, 16).unwrap();
        let spec = VolatilitySpec::classical();
        let ctrl = VolatilityControl::constant(1.0, 16, "hi");
        let coeffs = CoefficientSet::constants(0.0, 0.0, 1.0, 3.0).unwrap();
        let rows = richardson_refine(
            &coeffs,
            &ObstacleSpec::constant(-1e6),
            &ctrl,
            &spec,
            &base,
            0.0,
            &SolverConfig::default(),
            3,
            scenario_seed(9, 0),
        )
        .unwrap();
        for row in rows {
            assert!(row.sup_gap <= 1e-12, "gap {} at n = {}", row.sup_gap, row.n_steps);
        }
    }

    #[test]
    fn refine_rejects_single_level() {
        let base = TimeGrid::uniform(1.0, 16).unwrap();
        let spec = VolatilitySpec::classical();
        let ctrl = VolatilityControl::constant(1.0, 16, "hi");
        let coeffs = CoefficientSet::zero(3.0).unwrap();
        assert!(matches!(
            richardson_refine(
                &coeffs,
                &ObstacleSpec::constant(-1.0),
                &ctrl,
                &spec,
                &base,
                0.0,
                &SolverConfig::default(),
                1,
                0,
            ),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn refine_gaps_shrink_for_lipschitz_family() {
        let base = TimeGrid::uniform(1.0, 64).unwrap();
        let spec = VolatilitySpec::classical();
        let ctrl = VolatilityControl::constant(1.0, 64, "hi");
        let coeffs = CoefficientSet::from_registry(
            "linear",
            CoeffFn::Linear {
                a: -1.0,
                b: -0.3,
                c: -0.2,
            },
            CoeffFn::Zero,
            CoeffFn::Constant { value: 0.5 },
            ModulusKind::Lipschitz { l: 1.0 },
            3.0,
        )
        .unwrap();
        // single-path sup gaps are noisy (the reflection term converges at
        // rate 1/2 with heavy-tailed fluctuations), so average over seeds
        // and require decay across the whole ladder
        let n_seeds = 32u64;
        let mut mean = [0.0f64; 4];
        for seed in 0..n_seeds {
            let rows = richardson_refine(
                &coeffs,
                &ObstacleSpec::constant(-0.1),
                &ctrl,
                &spec,
                &base,
                0.0,
                &SolverConfig::default(),
                5,
                scenario_seed(40, seed),
            )
            .unwrap();
            for (l, r) in rows.iter().enumerate() {
                mean[l] += r.sup_gap / n_seeds as f64;
            }
        }
        for w in mean.windows(2) {
            assert!(w[1] <= 1.05 * w[0], "mean gaps not decaying: {mean:?}");
        }
        assert!(
            mean[3] <= 0.7 * mean[0],
            "insufficient decay across the ladder: {mean:?}"
        );
    }

    #[test]
    fn truncated_set_clamps_and_orders() {
        // ordered pair stays ordered after clamping on probes
        let f1 = CoeffFn::Linear {
            a: -2.0,
            b: 0.5,
            c: 0.0,
        };
        let f2 = CoeffFn::Linear {
            a: 2.0,
            b: 0.5,
            c: 0.0,
        };
        for n in [0.5, 1.0, 3.0] {
            let t1 = f1.clone().clamped(n);
            let t2 = f2.clone().clamped(n);
            for x in [-6.0, -1.0, 0.0, 2.0, 8.0] {
                assert!(t1.eval(0, x, 0.0) <= t2.eval(0, x, 0.0));
            }
        }
    }
}
