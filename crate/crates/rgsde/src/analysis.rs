//! Analytic bounds: Bihari/Gronwall estimates evaluated numerically
//! (quadrature of 1/rho plus bisection of the antiderivative), the a priori
//! and stability right-hand sides built on them, and empirical checks of
//! the Burkholder-Davis-Gundy-type moment inequalities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::ModulusKind;
use crate::error::{Error, Result};
use crate::expectation::{pairwise_sum, solve_scenario, EvalPaths};
use crate::grid::TimeGrid;
use crate::scenario::{VolatilityControl, VolatilitySpec};
use crate::solver::Problem;

/// Integrable weight kappa(t) entering the comparison-function integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Kappa {
    Constant(f64),
    Grid { values: Vec<f64>, dt: f64 },
}

impl Kappa {
    /// Integral of kappa over [0, t] (piecewise-constant for grid weights).
    pub fn integral(&self, t: f64) -> f64 {
        match self {
            Kappa::Constant(c) => c * t,
            Kappa::Grid { values, dt } => {
                let mut acc = 0.0;
                let mut covered = 0.0;
                for v in values {
                    if covered >= t {
                        break;
                    }
                    let span = dt.min(t - covered);
                    acc += v * span;
                    covered += span;
                }
                acc
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = match self {
            Kappa::Constant(c) => !(c.is_finite() && *c >= 0.0),
            Kappa::Grid { values, dt } => {
                !(dt.is_finite() && *dt > 0.0)
                    || values.iter().any(|v| !(v.is_finite() && *v >= 0.0))
            }
        };
        if bad {
            Err(Error::InvalidArgument(
                "weight kappa must be finite and nonnegative".into(),
            ))
        } else {
            Ok(())
        }
    }
}

/// Inputs for the nonlinear Gronwall bound u <= v^{-1}(v(a) + int kappa),
/// where v(u) = int_{t0}^{u} dr / rho(r).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BihariSpec {
    pub modulus: ModulusKind,
    pub kappa: Kappa,
    pub a: f64,
    /// base point for v; defaults to min(a, 1)/2 (the choice cancels)
    pub t0: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundMethod {
    ClosedForm,
    QuadratureBisection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_value: f64,
    pub method: BoundMethod,
    pub tolerance: f64,
}

/// rho on its natural domain, without the linear extension used by the
/// coefficient-assumption probes: the log modulus is only integrated on
/// (0, 1), where r*ln(1/r) is positive.
fn rho_pure(kind: &ModulusKind, r: f64) -> f64 {
    match kind {
        ModulusKind::Lipschitz { l } => l * r,
        ModulusKind::LogModulus { c } => c * r * (1.0 / r).ln(),
    }
}

/// Romberg quadrature on [lo, hi]; converges to ~1e-10 relative for the
/// smooth integrands produced by the log-substitution below.
fn romberg<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<f64> {
    if lo == hi {
        return Ok(0.0);
    }
    let (a, b, sign) = if lo < hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let max_levels = 22;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(max_levels);
    let mut h = b - a;
    let mut trap = 0.5 * h * (f(a) + f(b));
    rows.push(vec![trap]);
    for level in 1..max_levels {
        h *= 0.5;
        let new_points = 1usize << (level - 1);
        let mut mids = 0.0;
        for j in 0..new_points {
            mids += f(a + (2 * j + 1) as f64 * h);
        }
        trap = 0.5 * rows[level - 1][0] + h * mids;
        let mut row = vec![trap];
        let mut pow4 = 1.0;
        for m in 1..=level {
            pow4 *= 4.0;
            let prev = row[m - 1];
            row.push(prev + (prev - rows[level - 1][m - 1]) / (pow4 - 1.0));
        }
        let best = *row.last().unwrap();
        let prev_best = *rows[level - 1].last().unwrap();
        rows.push(row);
        if level >= 4 && (best - prev_best).abs() <= 1e-11 * (1.0 + best.abs()) {
            return Ok(sign * best);
        }
    }
    Err(Error::NumericFailure(format!(
        "quadrature on [{a}, {b}] did not converge"
    )))
}

/// v(u) = int_{t0}^{u} dr/rho(r), computed after substituting r = e^s so
/// that wide brackets stay well-conditioned.
fn v_of(kind: &ModulusKind, t0: f64, u: f64) -> Result<f64> {
    let integrand = |s: f64| {
        let r = s.exp();
        r / rho_pure(kind, r)
    };
    romberg(&integrand, t0.ln(), u.ln())
}

const BISECTION_TOL: f64 = 1e-12;

/// Evaluates the bound u(t) <= v^{-1}(v(a) + int_0^t kappa).
pub fn bihari_bound(spec: &BihariSpec, t: f64) -> Result<BoundReport> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    if !(spec.a >= 0.0 && spec.a.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "initial bound a must be finite and nonnegative, got {}",
            spec.a
        )));
    }
    spec.kappa.validate()?;
    match &spec.modulus {
        ModulusKind::Lipschitz { l } if !(l.is_finite() && *l > 0.0) => {
            return Err(Error::UnsupportedModulus(format!(
                "lipschitz constant must be positive, got {l}"
            )));
        }
        ModulusKind::LogModulus { c } if !(c.is_finite() && *c > 0.0) => {
            return Err(Error::UnsupportedModulus(format!(
                "log-modulus constant must be positive, got {c}"
            )));
        }
        _ => {}
    }
    if spec.a == 0.0 {
        return Ok(BoundReport {
            bound_value: 0.0,
            method: BoundMethod::ClosedForm,
            tolerance: 0.0,
        });
    }
    let is_log = matches!(spec.modulus, ModulusKind::LogModulus { .. });
    if is_log && spec.a >= 1.0 {
        return Err(Error::UnsupportedModulus(format!(
            "log modulus requires the initial bound below 1, got {}",
            spec.a
        )));
    }
    let t0 = spec.t0.unwrap_or(spec.a.min(1.0) / 2.0);
    if !(t0 > 0.0) || (is_log && t0 >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "base point t0 = {t0} outside the modulus domain"
        )));
    }
    let target = v_of(&spec.modulus, t0, spec.a)? + spec.kappa.integral(t);

    // bracket [a, hi] with v(hi) >= target; v is increasing
    let lo0 = spec.a;
    let mut hi = spec.a;
    let mut bracketed = false;
    for _ in 0..600 {
        if v_of(&spec.modulus, t0, hi)? >= target {
            bracketed = true;
            break;
        }
        hi = if is_log { 1.0 - 0.5 * (1.0 - hi) } else { 2.0 * hi };
        if !hi.is_finite() || (is_log && 1.0 - hi < 1e-15) {
            break;
        }
    }
    if !bracketed && v_of(&spec.modulus, t0, hi)? < target {
        return Ok(BoundReport {
            bound_value: f64::INFINITY,
            method: BoundMethod::QuadratureBisection,
            tolerance: BISECTION_TOL,
        });
    }
    let mut lo = lo0;
    while hi - lo > BISECTION_TOL * (1.0 + hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if v_of(&spec.modulus, t0, mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(BoundReport {
        bound_value: 0.5 * (lo + hi),
        method: BoundMethod::QuadratureBisection,
        tolerance: BISECTION_TOL,
    })
}

/// Closed forms for the registry moduli: a*e^{l*int kappa} for the
/// Lipschitz case and a^{exp(-c*int kappa)} for the log case.
pub fn bihari_closed_form(spec: &BihariSpec, t: f64) -> Result<f64> {
    if spec.a == 0.0 {
        return Ok(0.0);
    }
    let integral = spec.kappa.integral(t);
    match &spec.modulus {
        ModulusKind::Lipschitz { l } => Ok(spec.a * (l * integral).exp()),
        ModulusKind::LogModulus { c } => {
            if spec.a >= 1.0 {
                return Err(Error::UnsupportedModulus(
                    "log modulus requires the initial bound below 1".into(),
                ));
            }
            Ok(spec.a.powf((-c * integral).exp()))
        }
    }
}

/// Right-hand side of the p-th moment a priori estimate:
/// C*(|x0|^p + int ||beta1||_p^p) + sup-positive-part obstacle term.
pub fn a_priori_rhs(
    p: f64,
    x0: f64,
    beta1_pnorm: f64,
    obstacle_sup_plus_p: f64,
    c: f64,
) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::InvalidArgument(format!(
            "moment exponent must exceed 2, got {p}"
        )));
    }
    if !(beta1_pnorm >= 0.0 && obstacle_sup_plus_p >= 0.0) {
        return Err(Error::InvalidArgument(
            "norm inputs must be nonnegative".into(),
        ));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "constant must be positive, got {c}"
        )));
    }
    Ok(c * (x0.abs().powf(p) + beta1_pnorm) + obstacle_sup_plus_p)
}

/// Smallest constant making the a priori bound hold for a measured
/// left-hand side; used to fit C once and reuse it across resolutions.
pub fn fit_a_priori_constant(
    measured_lhs: f64,
    p: f64,
    x0: f64,
    beta1_pnorm: f64,
    obstacle_sup_plus_p: f64,
) -> Result<f64> {
    if !(p > 2.0) {
        return Err(Error::InvalidArgument(format!(
            "moment exponent must exceed 2, got {p}"
        )));
    }
    let denom = x0.abs().powf(p) + beta1_pnorm;
    if denom <= 0.0 {
        return Err(Error::InvalidArgument(
            "cannot fit a constant against a zero homogeneous term".into(),
        ));
    }
    Ok(((measured_lhs - obstacle_sup_plus_p).max(0.0)) / denom)
}

/// Right-hand side of the stability estimate: assembles the initial bound
/// a = C*(|dx|^p + coefficient-difference norms + obstacle term) and
/// applies the Bihari bound with weight C over [0, beta_integral].
#[allow(clippy::too_many_arguments)]
pub fn stability_rhs(
    p: f64,
    delta_x: f64,
    delta_coeff_pnorms: [f64; 3],
    delta_obstacle_sup_p: f64,
    beta_integral: f64,
    modulus: ModulusKind,
    t0: Option<f64>,
    c: f64,
) -> Result<BoundReport> {
    if !(p > 2.0) {
        return Err(Error::InvalidArgument(format!(
            "moment exponent must exceed 2, got {p}"
        )));
    }
    if delta_coeff_pnorms.iter().any(|v| *v < 0.0) || delta_obstacle_sup_p < 0.0 {
        return Err(Error::InvalidArgument(
            "norm inputs must be nonnegative".into(),
        ));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "constant must be positive, got {c}"
        )));
    }
    let a = c
        * (delta_x.abs().powf(p)
            + delta_coeff_pnorms.iter().sum::<f64>()
            + delta_obstacle_sup_p);
    let spec = BihariSpec {
        modulus,
        kappa: Kappa::Constant(c),
        a,
        t0,
    };
    bihari_bound(&spec, beta_integral)
}

/// Integrand for the moment-inequality checks, evaluated at the left node
/// of each step (adapted).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrand {
    Zero,
    One,
    BPath,
}

impl Integrand {
    pub fn value(&self, paths: &EvalPaths, step: usize) -> f64 {
        match self {
            Integrand::Zero => 0.0,
            Integrand::One => 1.0,
            Integrand::BPath => paths.b[step],
        }
    }

    pub fn from_registry_id(id: &str) -> Result<Self> {
        match id {
            "zero" => Ok(Integrand::Zero),
            "one" => Ok(Integrand::One),
            "b_path" => Ok(Integrand::BPath),
            other => Err(Error::InvalidArgument(format!(
                "unknown integrand id '{other}'"
            ))),
        }
    }
}

/// Empirical report on both moment inequalities for one integrand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdgReport {
    pub p: f64,
    pub integrand: Integrand,
    /// sup-of-QV-integral moment vs the time-averaged p-th moment bound
    pub qv_left: f64,
    pub qv_right: f64,
    pub qv_pooled_se: f64,
    pub qv_ratio: f64,
    pub qv_holds_within_3se: bool,
    /// martingale-integral moment and the fitted constant against the
    /// energy term; present only for p >= 2
    pub db_left: Option<f64>,
    pub db_energy_base: Option<f64>,
    pub fitted_cp: Option<f64>,
}

struct ControlMoments {
    qv_left: (f64, f64),
    qv_right: (f64, f64),
    db_left: (f64, f64),
    energy: (f64, f64),
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = pairwise_sum(values) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Estimates both sides of the moment inequalities under every control and
/// maximizes the means, mirroring the upper-expectation estimator. The
/// right-hand sides are per-path time averages, which under-estimate the
/// analytic right-hand side and so make the check conservative.
#[allow(clippy::too_many_arguments)]
pub fn bdg_check(
    p: f64,
    integrand: Integrand,
    problem: &Problem,
    grid: &TimeGrid,
    vol_spec: &VolatilitySpec,
    controls: &[VolatilityControl],
    n_paths: usize,
    master_seed: u64,
) -> Result<BdgReport> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "moment exponent must be at least 1, got {p}"
        )));
    }
    if controls.is_empty() {
        return Err(Error::InvalidArgument("control family is empty".into()));
    }
    if n_paths < 2 {
        return Err(Error::InvalidArgument("n_paths must be at least 2".into()));
    }
    let with_db = p >= 2.0;
    let t = grid.horizon;
    let sigma_factor = vol_spec.sigma_hi_sq.powf(p);
    let mut per_control = Vec::with_capacity(controls.len());
    for control in controls {
        let rows: Vec<[f64; 4]> = (0..n_paths as u64)
            .into_par_iter()
            .map(|j| {
                let paths =
                    solve_scenario(problem, control, grid, vol_spec, master_seed, j)?;
                let n = grid.n_steps;
                let mut i_qv = 0.0f64;
                let mut i_db = 0.0f64;
                let mut sup_qv = 0.0f64;
                let mut sup_db = 0.0f64;
                let mut right = 0.0f64;
                let mut energy = 0.0f64;
                for m in 0..n {
                    let eta = integrand.value(&paths, m);
                    i_qv += eta * (paths.qv[m + 1] - paths.qv[m]);
                    i_db += eta * (paths.b[m + 1] - paths.b[m]);
                    sup_qv = sup_qv.max(i_qv.abs());
                    sup_db = sup_db.max(i_db.abs());
                    right += eta.abs().powf(p) * grid.dt;
                    energy += eta * eta * grid.dt;
                }
                Ok([
                    sup_qv.powf(p),
                    sigma_factor * t.powf(p - 1.0) * right,
                    sup_db.powf(p),
                    energy,
                ])
            })
            .collect::<Result<_>>()?;
        let col = |i: usize| -> Vec<f64> { rows.iter().map(|r| r[i]).collect() };
        per_control.push(ControlMoments {
            qv_left: mean_se(&col(0)),
            qv_right: mean_se(&col(1)),
            db_left: mean_se(&col(2)),
            energy: mean_se(&col(3)),
        });
    }
    let pick = |f: &dyn Fn(&ControlMoments) -> (f64, f64)| -> (f64, f64) {
        per_control
            .iter()
            .map(f)
            .max_by(|a, b| a.0.partial_cmp(&b.0).unwrap())
            .unwrap()
    };
    let (qv_left, qv_left_se) = pick(&|c| c.qv_left);
    let (qv_right, qv_right_se) = pick(&|c| c.qv_right);
    let pooled = (qv_left_se * qv_left_se + qv_right_se * qv_right_se).sqrt();
    let qv_ratio = if qv_right == 0.0 { 0.0 } else { qv_left / qv_right };
    let (db_left, db_energy_base, fitted_cp) = if with_db {
        let (l, _) = pick(&|c| c.db_left);
        let (e, _) = pick(&|c| c.energy);
        let base = e.powf(p / 2.0);
        let cp = if base == 0.0 { 0.0 } else { l / base };
        (Some(l), Some(base), Some(cp))
    } else {
        (None, None, None)
    };
    Ok(BdgReport {
        p,
        integrand,
        qv_left,
        qv_right,
        qv_pooled_se: pooled,
        qv_ratio,
        qv_holds_within_3se: qv_left <= qv_right + 3.0 * pooled,
        db_left,
        db_energy_base,
        fitted_cp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{CoefficientSet, ObstacleSpec};
    use crate::solver::SolverConfig;
    use proptest::prelude::*;

    fn lip_spec(a: f64, k: f64) -> BihariSpec {
        BihariSpec {
            modulus: ModulusKind::Lipschitz { l: 1.0 },
            kappa: Kappa::Constant(k),
            a,
            t0: None,
        }
    }

    #[test]
    fn zero_initial_bound_gives_zero() {
        for modulus in [
            ModulusKind::Lipschitz { l: 2.0 },
            ModulusKind::LogModulus { c: 1.0 },
        ] {
            let spec = BihariSpec {
                modulus,
                kappa: Kappa::Constant(3.0),
                a: 0.0,
                t0: None,
            };
            let rep = bihari_bound(&spec, 5.0).unwrap();
            assert_eq!(rep.bound_value, 0.0);
            assert_eq!(rep.method, BoundMethod::ClosedForm);
        }
    }

    #[test]
    fn gronwall_matches_exponential_closed_form() {
        for a in [0.1, 0.5, 1.0, 2.0] {
            for k in [0.0, 0.5, 2.0] {
                for t in [0.1, 1.0, 2.0] {
                    let spec = lip_spec(a, k);
                    let rep = bihari_bound(&spec, t).unwrap();
                    let exact = a * (k * t).exp();
                    assert!(
                        (rep.bound_value - exact).abs() <= 1e-8 * (1.0 + exact),
                        "a={a} k={k} t={t}: got {}, want {exact}",
                        rep.bound_value
                    );
                }
            }
        }
    }

    #[test]
    fn log_modulus_matches_power_closed_form() {
        // kappa = ln 2 over [0,1] halves the exponent: bound = a^{1/2}
        let spec = BihariSpec {
            modulus: ModulusKind::LogModulus { c: 1.0 },
            kappa: Kappa::Constant(std::f64::consts::LN_2),
            a: (-1.0f64).exp(),
            t0: None,
        };
        let rep = bihari_bound(&spec, 1.0).unwrap();
        let exact = (-0.5f64).exp();
        assert!(
            (rep.bound_value - exact).abs() <= 1e-6,
            "got {}, want {exact}",
            rep.bound_value
        );
        assert!(
            (bihari_closed_form(&spec, 1.0).unwrap() - exact).abs() <= 1e-12
        );
    }

    #[test]
    fn log_modulus_rejects_initial_bound_at_or_above_one() {
        let spec = BihariSpec {
            modulus: ModulusKind::LogModulus { c: 1.0 },
            kappa: Kappa::Constant(1.0),
            a: 1.0,
            t0: None,
        };
        assert!(matches!(
            bihari_bound(&spec, 1.0),
            Err(Error::UnsupportedModulus(_))
        ));
    }

    #[test]
    fn base_point_choice_is_immaterial() {
        for t0 in [0.1, 0.5, 1.0] {
            let mut spec = lip_spec(0.7, 1.3);
            spec.t0 = Some(t0);
            let rep = bihari_bound(&spec, 1.0).unwrap();
            let exact = 0.7 * 1.3f64.exp();
            assert!(
                (rep.bound_value - exact).abs() <= 1e-8,
                "t0={t0}: got {}, want {exact}",
                rep.bound_value
            );
        }
        for t0 in [0.05, 0.2, 0.4] {
            let mut spec = BihariSpec {
                modulus: ModulusKind::LogModulus { c: 1.0 },
                kappa: Kappa::Constant(std::f64::consts::LN_2),
                a: (-1.0f64).exp(),
                t0: None,
            };
            spec.t0 = Some(t0);
            let rep = bihari_bound(&spec, 1.0).unwrap();
            assert!(((rep.bound_value) - (-0.5f64).exp()).abs() <= 1e-6);
        }
    }

    #[test]
    fn grid_weight_integrates_piecewise() {
        let kappa = Kappa::Grid {
            values: vec![1.0, 2.0, 0.0, 4.0],
            dt: 0.25,
        };
        assert!((kappa.integral(1.0) - 1.75).abs() < 1e-15);
        assert!((kappa.integral(0.375) - 0.5).abs() < 1e-15);
        assert!((kappa.integral(10.0) - 1.75).abs() < 1e-15); // clamps at the grid end
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn bound_is_monotone_in_inputs(
            a in 0.01f64..2.0,
            da in 0.0f64..1.0,
            k in 0.0f64..2.0,
            dk in 0.0f64..1.0,
        ) {
            let base = bihari_bound(&lip_spec(a, k), 1.0).unwrap().bound_value;
            let more_a = bihari_bound(&lip_spec(a + da, k), 1.0).unwrap().bound_value;
            let more_k = bihari_bound(&lip_spec(a, k + dk), 1.0).unwrap().bound_value;
            prop_assert!(more_a >= base - 1e-9);
            prop_assert!(more_k >= base - 1e-9);
        }
    }

    #[test]
    fn a_priori_rhs_basics() {
        assert_eq!(a_priori_rhs(3.0, 0.0, 0.0, 0.0, 17.0).unwrap(), 0.0);
        let one = a_priori_rhs(3.0, 1.0, 0.0, 0.0, 2.0).unwrap();
        let two = a_priori_rhs(3.0, 2.0, 0.0, 0.0, 2.0).unwrap();
        assert!((two / one - 8.0).abs() <= 1e-12);
        assert!(a_priori_rhs(2.0, 1.0, 0.0, 0.0, 1.0).is_err());
        assert!(a_priori_rhs(3.0, 1.0, -1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn fitted_constant_reproduces_bound() {
        let c = fit_a_priori_constant(10.0, 3.0, 1.0, 0.5, 2.0).unwrap();
        let rhs = a_priori_rhs(3.0, 1.0, 0.5, 2.0, c).unwrap();
        assert!((rhs - 10.0).abs() <= 1e-12);
        assert!(fit_a_priori_constant(10.0, 3.0, 0.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn stability_rhs_zero_deltas_and_gronwall_form() {
        let zero = stability_rhs(
            3.0,
            0.0,
            [0.0; 3],
            0.0,
            1.0,
            ModulusKind::Lipschitz { l: 1.0 },
            None,
            5.0,
        )
        .unwrap();
        assert_eq!(zero.bound_value, 0.0);

        let c = 2.0;
        let rep = stability_rhs(
            3.0,
            0.1,
            [0.01, 0.0, 0.02],
            0.05,
            0.5,
            ModulusKind::Lipschitz { l: 1.0 },
            None,
            c,
        )
        .unwrap();
        let a = c * (0.1f64.powf(3.0) + 0.03 + 0.05);
        let exact = a * (c * 0.5f64).exp();
        assert!((rep.bound_value - exact).abs() <= 1e-8 * (1.0 + exact));
    }

    fn trivial_problem() -> Problem {
        Problem {
            coeffs: CoefficientSet::zero(3.0).unwrap(),
            obstacle: ObstacleSpec::constant(-10.0),
            x0: 0.0,
            cfg: SolverConfig::default(),
        }
    }

    #[test]
    fn bdg_equality_witness_unit_integrand() {
        let n = 16;
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        let spec = VolatilitySpec::classical();
        let controls = vec![VolatilityControl::constant(1.0, n, "unit")];
        let rep = bdg_check(
            2.0,
            Integrand::One,
            &trivial_problem(),
            &grid,
            &spec,
            &controls,
            64,
            9,
        )
        .unwrap();
        assert_eq!(rep.qv_left, 1.0);
        assert_eq!(rep.qv_right, 1.0);
        assert_eq!(rep.qv_ratio, 1.0);
        assert!(rep.qv_holds_within_3se);
    }

    #[test]
    fn bdg_zero_integrand_has_zero_ratio() {
        let n = 8;
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        let spec = VolatilitySpec::new(0.25, 1.0).unwrap();
        let controls = vec![VolatilityControl::constant(1.0, n, "hi")];
        let rep = bdg_check(
            3.0,
            Integrand::Zero,
            &trivial_problem(),
            &grid,
            &spec,
            &controls,
            16,
            1,
        )
        .unwrap();
        assert_eq!(rep.qv_ratio, 0.0);
        assert_eq!(rep.fitted_cp, Some(0.0));
    }

    #[test]
    fn bdg_brownian_integrand_holds_within_three_se() {
        let n = 16;
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        let spec = VolatilitySpec::new(0.25, 1.0).unwrap();
        let controls = vec![
            VolatilityControl::constant(0.25, n, "lo"),
            VolatilityControl::constant(1.0, n, "hi"),
        ];
        let rep = bdg_check(
            2.0,
            Integrand::BPath,
            &trivial_problem(),
            &grid,
            &spec,
            &controls,
            1 << 12,
            21,
        )
        .unwrap();
        assert!(
            rep.qv_holds_within_3se,
            "left {} vs right {} (pooled se {})",
            rep.qv_left, rep.qv_right, rep.qv_pooled_se
        );
        assert!(rep.fitted_cp.unwrap() > 0.0);
    }

    #[test]
    fn bdg_exponent_range() {
        let n = 8;
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        let spec = VolatilitySpec::classical();
        let controls = vec![VolatilityControl::constant(1.0, n, "unit")];
        assert!(bdg_check(
            0.5,
            Integrand::One,
            &trivial_problem(),
            &grid,
            &spec,
            &controls,
            8,
            0
        )
        .is_err());
        let rep = bdg_check(
            1.5,
            Integrand::One,
            &trivial_problem(),
            &grid,
            &spec,
            &controls,
            8,
            0,
        )
        .unwrap();
        assert!(rep.db_left.is_none());
        assert!(rep.fitted_cp.is_none());
    }
}
