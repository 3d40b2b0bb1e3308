//! Command implementations behind the CLI: scenario generation, solving,
//! upper-expectation estimation, theorem suites, and grid refinement.
//! All computation is parallel over scenarios; all file writes happen in a
//! fixed order afterwards, so output bytes do not depend on the job count.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{
    build_manifest, cache_is_valid, cache_root, read_scenario_csv, render_f64,
    scenario_file_name, write_manifest, write_scenario_csv,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::expectation::{upper_expectation, PathFunctional};
use crate::grid::TimeGrid;
use crate::harness::{misordered_comparison_case, run_comparison, run_default_suite};
use crate::reflection::{flatness_defect, flatness_tolerance};
use crate::scenario::{sample_scenario, scenario_seed, ScenarioPath, VolatilityControl};
use crate::solver::{picard_solve, richardson_refine};

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Generates every (control, scenario) path into the cache directory and
/// stamps it with a manifest.
pub fn cmd_simulate(config: &RunConfig, out_dir: &Path) -> Result<i32> {
    config.validate()?;
    let grid = config.time_grid()?;
    let spec = config.vol_spec()?;
    let controls = config.build_controls(&grid, &spec)?;
    let n_paths = config.monte_carlo.n_paths;
    let master_seed = config.monte_carlo.master_seed;

    let dir = cache_root(out_dir);
    std::fs::create_dir_all(&dir)?;
    let mut n_files = 0usize;
    for control in &controls {
        let scenarios: Vec<ScenarioPath> = (0..n_paths as u64)
            .into_par_iter()
            .map(|j| sample_scenario(control, &grid, &spec, scenario_seed(master_seed, j)))
            .collect::<Result<_>>()?;
        for (j, scen) in scenarios.iter().enumerate() {
            let path = dir.join(scenario_file_name(&control.label, j as u64));
            write_scenario_csv(&path, scen, &grid)?;
            n_files += 1;
        }
    }
    let manifest = build_manifest(&spec, &grid, &controls, master_seed, n_paths);
    write_manifest(&dir, &manifest)?;
    println!(
        "wrote {n_files} scenario files for {} controls to {}",
        controls.len(),
        dir.display()
    );
    Ok(0)
}

fn load_or_sample_scenario(
    cache_dir: &Path,
    cache_valid: bool,
    control: &VolatilityControl,
    grid: &TimeGrid,
    spec: &crate::scenario::VolatilitySpec,
    master_seed: u64,
    j: u64,
) -> Result<ScenarioPath> {
    let seed = scenario_seed(master_seed, j);
    if cache_valid {
        let path = cache_dir.join(scenario_file_name(&control.label, j));
        if path.exists() {
            return read_scenario_csv(&path, grid, &control.label, seed);
        }
    }
    sample_scenario(control, grid, spec, seed)
}

#[derive(Debug, Serialize)]
struct SolveFailure {
    control: String,
    scenario: u64,
    error: String,
}

#[derive(Debug, Serialize)]
struct SolveSummary {
    family: String,
    coefficients: crate::coeffs::CoefficientSet,
    obstacle: crate::coeffs::ObstacleSpec,
    x0: f64,
    master_seed: u64,
    n_steps: usize,
    n_controls: usize,
    n_scenarios_per_control: usize,
    picard_iters_max: usize,
    residual_max: f64,
    flatness_defect_max: f64,
    flatness_tolerance_max: f64,
    oracle_gap_max: Option<f64>,
    terminal_k_max: f64,
    failures: Vec<SolveFailure>,
}

/// Solves every (control, scenario) pair, writing one `t,X,K,S,B,QV` CSV
/// each plus an aggregate JSON summary. Per-scenario non-convergence is
/// recorded and skipped; the exit status reflects it.
pub fn cmd_solve(config: &RunConfig, out_dir: &Path) -> Result<i32> {
    config.validate()?;
    let grid = config.time_grid()?;
    let spec = config.vol_spec()?;
    let controls = config.build_controls(&grid, &spec)?;
    let problem = config.problem()?;
    let n_paths = config.monte_carlo.n_paths;
    let master_seed = config.monte_carlo.master_seed;

    let cache_dir = cache_root(out_dir);
    let manifest = build_manifest(&spec, &grid, &controls, master_seed, n_paths);
    let cache_valid = cache_dir.exists() && cache_is_valid(&cache_dir, &manifest)?;

    std::fs::create_dir_all(out_dir)?;
    let mut summary = SolveSummary {
        family: problem.coeffs.family_name.clone(),
        coefficients: problem.coeffs.clone(),
        obstacle: problem.obstacle.clone(),
        x0: problem.x0,
        master_seed,
        n_steps: grid.n_steps,
        n_controls: controls.len(),
        n_scenarios_per_control: n_paths,
        picard_iters_max: 0,
        residual_max: 0.0,
        flatness_defect_max: 0.0,
        flatness_tolerance_max: 0.0,
        oracle_gap_max: None,
        terminal_k_max: 0.0,
        failures: Vec::new(),
    };
    for control in &controls {
        type Row = std::result::Result<
            (ScenarioPath, Vec<f64>, crate::solver::SolveResult),
            String,
        >;
        let outcomes: Vec<Row> = (0..n_paths as u64)
            .into_par_iter()
            .map(|j| {
                let run = || -> Result<_> {
                    let scen = load_or_sample_scenario(
                        &cache_dir,
                        cache_valid,
                        control,
                        &grid,
                        &spec,
                        master_seed,
                        j,
                    )?;
                    let s = problem.obstacle.build(&scen, &grid)?;
                    let res = picard_solve(
                        &problem.coeffs,
                        &problem.obstacle,
                        &scen,
                        &grid,
                        problem.x0,
                        &problem.cfg,
                    )?;
                    Ok((scen, s, res))
                };
                run().map_err(|e| e.to_string())
            })
            .collect();
        for (j, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Err(msg) => summary.failures.push(SolveFailure {
                    control: control.label.clone(),
                    scenario: j as u64,
                    error: msg,
                }),
                Ok((scen, s, res)) => {
                    let sol = &res.solution;
                    let mut csv = String::from("t,X,K,S,B,QV\n");
                    for i in 0..=grid.n_steps {
                        let _ = writeln!(
                            csv,
                            "{},{},{},{},{},{}",
                            render_f64(grid.nodes[i]),
                            render_f64(sol.x[i]),
                            render_f64(sol.k[i]),
                            render_f64(s[i]),
                            render_f64(scen.b[i]),
                            render_f64(scen.qv[i]),
                        );
                    }
                    let path = out_dir
                        .join(format!("solution_{}_{:05}.csv", control.label, j));
                    std::fs::write(path, csv)?;
                    summary.picard_iters_max =
                        summary.picard_iters_max.max(res.picard_iters);
                    summary.residual_max = summary.residual_max.max(res.residual);
                    let defect = flatness_defect(sol, &s).abs();
                    summary.flatness_defect_max =
                        summary.flatness_defect_max.max(defect);
                    summary.flatness_tolerance_max = summary
                        .flatness_tolerance_max
                        .max(flatness_tolerance(sol, &s));
                    if let Some(gap) = res.oracle_gap {
                        summary.oracle_gap_max =
                            Some(summary.oracle_gap_max.unwrap_or(0.0).max(gap));
                    }
                    summary.terminal_k_max =
                        summary.terminal_k_max.max(*sol.k.last().unwrap());
                }
            }
        }
    }
    let failed = !summary.failures.is_empty();
    write_json(&out_dir.join("summary.json"), &summary)?;
    println!(
        "solved {} scenario(s) across {} control(s); {} failure(s); terminal K max {}",
        n_paths,
        controls.len(),
        summary.failures.len(),
        summary.terminal_k_max
    );
    Ok(if failed { 3 } else { 0 })
}

/// Estimates the upper expectation of the configured functional.
pub fn cmd_expect(config: &RunConfig, out_dir: &Path) -> Result<i32> {
    config.validate()?;
    let section = config.expect.as_ref().ok_or_else(|| {
        Error::Config("the expect command needs an [expect] section".into())
    })?;
    let functional = PathFunctional::from_registry_id(&section.functional)?;
    let grid = config.time_grid()?;
    let spec = config.vol_spec()?;
    let controls = config.build_controls(&grid, &spec)?;
    let problem = config.problem()?;
    let estimate = upper_expectation(
        &functional,
        &problem,
        &grid,
        &spec,
        &controls,
        config.monte_carlo.n_paths,
        config.monte_carlo.master_seed,
    )?;
    std::fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("expect.json"), &estimate)?;
    println!(
        "upper expectation of {} = {} (argmax control {})",
        section.functional, estimate.value, estimate.argmax_control
    );
    Ok(0)
}

/// Runs the theorem suites; exit 0 only if every check passes.
pub fn cmd_check(config: &RunConfig, out_dir: &Path) -> Result<i32> {
    config.validate()?;
    let check = config.check.clone().unwrap_or_default();
    let grid = config.time_grid()?;
    let spec = config.vol_spec()?;
    let controls = config.build_controls(&grid, &spec)?;
    let n_paths = check.n_paths.unwrap_or(config.monte_carlo.n_paths);
    let cfg = config.solver_config()?;
    if check.misordered_drifts {
        // demonstrates the hypothesis probes: this returns an
        // ill-posed-case error and a nonzero exit
        let case = misordered_comparison_case()?;
        run_comparison(
            &case,
            &grid,
            &spec,
            &controls,
            n_paths,
            &cfg,
            config.monte_carlo.master_seed,
        )?;
        unreachable!("the mis-ordered case must fail its hypothesis probe");
    }
    let report = run_default_suite(
        &grid,
        &spec,
        &controls,
        n_paths,
        &cfg,
        config.monte_carlo.master_seed,
    )?;
    std::fs::create_dir_all(out_dir)?;
    write_json(&out_dir.join("check.json"), &report)?;
    for (name, cmp) in &report.comparisons {
        println!(
            "comparison {name}: {} (max violation {:.3e}, tolerance {:.3e})",
            if cmp.passed { "pass" } else { "FAIL" },
            cmp.max_violation,
            cmp.tolerance
        );
    }
    println!(
        "truncation ladder: {}",
        if report.truncation.monotone_within_tol
            && report.truncation.zero_beyond_realized_bound
        {
            "pass"
        } else {
            "FAIL"
        }
    );
    println!(
        "uniqueness probe: {} (max gap {:.3e})",
        if report.uniqueness.passed { "pass" } else { "FAIL" },
        report.uniqueness.max_gap
    );
    Ok(if report.all_passed { 0 } else { 4 })
}

#[derive(Debug, Serialize)]
struct RefineReport {
    control: String,
    levels: usize,
    rows: Vec<crate::solver::RefineRow>,
}

/// Solves on nested grid refinements of one scenario and reports the
/// sup-norm gaps between consecutive levels.
pub fn cmd_refine(config: &RunConfig, out_dir: &Path) -> Result<i32> {
    config.validate()?;
    let section = config.refine.as_ref().ok_or_else(|| {
        Error::Config("the refine command needs a [refine] section".into())
    })?;
    let grid = config.time_grid()?;
    let spec = config.vol_spec()?;
    let controls = config.build_controls(&grid, &spec)?;
    let problem = config.problem()?;
    let control = &controls[0];
    let rows = richardson_refine(
        &problem.coeffs,
        &problem.obstacle,
        control,
        &spec,
        &grid,
        problem.x0,
        &problem.cfg,
        section.levels,
        scenario_seed(config.monte_carlo.master_seed, 0),
    )?;
    std::fs::create_dir_all(out_dir)?;
    let mut csv = String::from("n_steps,sup_gap\n");
    for row in &rows {
        let _ = writeln!(csv, "{},{}", row.n_steps, render_f64(row.sup_gap));
    }
    std::fs::write(out_dir.join("refine.csv"), csv)?;
    write_json(
        &out_dir.join("refine.json"),
        &RefineReport {
            control: control.label.clone(),
            levels: section.levels,
            rows,
        },
    )?;
    println!("refinement study written for control {}", control.label);
    Ok(0)
}
