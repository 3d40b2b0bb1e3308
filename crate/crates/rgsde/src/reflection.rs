//! Discrete Skorokhod map: the minimal nondecreasing pusher K keeping
//! X = Y + K above the obstacle S, via the running-max representation
//! K_i = max_{j<=i} (S_j - Y_j)^+.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reflected pair (X, K) on a grid: X >= S nodewise, K nondecreasing, K_0 = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectedSolution {
    pub x: Vec<f64>,
    pub k: Vec<f64>,
}

/// Running-max Skorokhod map. Requires Y_0 >= S_0.
pub fn skorokhod_map(y: &[f64], s: &[f64]) -> Result<ReflectedSolution> {
    if y.len() != s.len() {
        return Err(Error::InvalidArgument(format!(
            "path length mismatch: Y has {}, S has {}",
            y.len(),
            s.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    if y[0] < s[0] {
        return Err(Error::ObstacleViolation(format!(
            "Y[0] = {} is below S[0] = {}",
            y[0], s[0]
        )));
    }
    let mut k = Vec::with_capacity(y.len());
    let mut x = Vec::with_capacity(y.len());
    let mut running = 0.0f64;
    for i in 0..y.len() {
        let deficit = (s[i] - y[i]).max(0.0);
        running = running.max(deficit);
        k.push(running);
        // in reals y + running >= s always; clamping absorbs the one-ulp
        // rounding of the sum so the obstacle bound holds exactly
        x.push((y[i] + running).max(s[i]));
    }
    Ok(ReflectedSolution { x, k })
}

/// Discrete flatness defect: sum_i (X_i - S_i) * (K_i - K_{i-1}), with
/// (X - S) taken at the node where the K-increment lands. Exactly 0 for
/// running-max output up to rounding.
pub fn flatness_defect(sol: &ReflectedSolution, s: &[f64]) -> f64 {
    let mut defect = 0.0;
    for i in 1..sol.k.len() {
        defect += (sol.x[i] - s[i]) * (sol.k[i] - sol.k[i - 1]);
    }
    defect
}

/// Scale-aware rounding budget for the flatness defect.
pub fn flatness_tolerance(sol: &ReflectedSolution, s: &[f64]) -> f64 {
    let sup_gap = sol
        .x
        .iter()
        .zip(s)
        .map(|(x, s)| (x - s).abs())
        .fold(0.0f64, f64::max);
    let k_terminal = *sol.k.last().unwrap_or(&0.0);
    1e-10 * (1.0 + sup_gap) * k_terminal
}

/// True iff the computed K is dominated nodewise by an admissible candidate
/// pusher (nondecreasing, starting at 0, keeping Y + candidate above S).
pub fn minimality_check(
    sol: &ReflectedSolution,
    y: &[f64],
    s: &[f64],
    candidate_k: &[f64],
) -> Result<bool> {
    if candidate_k.len() != y.len() || s.len() != y.len() {
        return Err(Error::InvalidArgument("path length mismatch".into()));
    }
    if candidate_k.first().copied() != Some(0.0) {
        return Err(Error::InvalidArgument(
            "candidate pusher must start at 0".into(),
        ));
    }
    for i in 1..candidate_k.len() {
        if candidate_k[i] < candidate_k[i - 1] {
            return Err(Error::InvalidArgument(format!(
                "candidate pusher decreases at node {i}"
            )));
        }
    }
    for i in 0..y.len() {
        if y[i] + candidate_k[i] < s[i] {
            return Err(Error::InvalidArgument(format!(
                "candidate pusher leaves the path below the obstacle at node {i}"
            )));
        }
    }
    Ok(sol.k.iter().zip(candidate_k).all(|(k, c)| k <= c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn no_reflection_needed() {
        let y = vec![1.0; 5];
        let s = vec![0.0; 5];
        let sol = skorokhod_map(&y, &s).unwrap();
        assert_eq!(sol.k, vec![0.0; 5]);
        assert_eq!(sol.x, vec![1.0; 5]);
    }

    #[test]
    fn minimal_push_equals_running_deficit() {
        let y = vec![0.0, -0.5, -1.0];
        let s = vec![0.0; 3];
        let sol = skorokhod_map(&y, &s).unwrap();
        assert_eq!(sol.k, vec![0.0, 0.5, 1.0]);
        assert_eq!(sol.x, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn derived_running_max_example() {
        // independent recursion K[i+1] = max(K[i], S[i+1] - Y[i+1]) gives
        // K = {0, 1, 1, 2}, X = {0, 0, 1.5, 0}
        let y = vec![0.0, -1.0, 0.5, -2.0];
        let s = vec![0.0; 4];
        let sol = skorokhod_map(&y, &s).unwrap();
        assert_eq!(sol.k, vec![0.0, 1.0, 1.0, 2.0]);
        assert_eq!(sol.x, vec![0.0, 0.0, 1.5, 0.0]);
        assert_eq!(flatness_defect(&sol, &s), 0.0);
    }

    #[test]
    fn obstacle_violation_at_start() {
        let y = vec![-1.0, 0.0];
        let s = vec![0.0, 0.0];
        assert!(matches!(
            skorokhod_map(&y, &s),
            Err(Error::ObstacleViolation(_))
        ));
    }

    #[test]
    fn flatness_zero_when_k_constant() {
        let sol = ReflectedSolution {
            x: vec![1.0, 2.0, 3.0],
            k: vec![0.0, 0.0, 0.0],
        };
        assert_eq!(flatness_defect(&sol, &[0.0, 0.0, 0.0]), 0.0);
    }

    #[test]
    fn flatness_detects_constructed_violation() {
        let sol = ReflectedSolution {
            x: vec![1.0, 1.0],
            k: vec![0.0, 1.0],
        };
        assert_eq!(flatness_defect(&sol, &[0.0, 0.0]), 1.0);
    }

    #[test]
    fn minimality_reflexive_and_dominated() {
        let y = vec![0.0, -1.0, 0.5, -2.0];
        let s = vec![0.0; 4];
        let sol = skorokhod_map(&y, &s).unwrap();
        assert!(minimality_check(&sol, &y, &s, &sol.k.clone()).unwrap());
        let bigger: Vec<f64> = sol
            .k
            .iter()
            .enumerate()
            .map(|(i, k)| if i == 0 { *k } else { k + 1.0 })
            .collect();
        assert!(minimality_check(&sol, &y, &s, &bigger).unwrap());
    }

    #[test]
    fn minimality_rejects_bad_candidates() {
        let y = vec![0.0, -1.0];
        let s = vec![0.0, 0.0];
        let sol = skorokhod_map(&y, &s).unwrap();
        assert!(minimality_check(&sol, &y, &s, &[0.0, 0.5]).is_err()); // below obstacle
        assert!(minimality_check(&sol, &y, &s, &[0.5, 1.0]).is_err()); // K_0 != 0
        let y2 = vec![0.0, 1.0, 1.0];
        let s2 = vec![0.0; 3];
        let sol2 = skorokhod_map(&y2, &s2).unwrap();
        assert!(minimality_check(&sol2, &y2, &s2, &[0.0, 1.0, 0.5]).is_err()); // decreasing
    }

    #[test]
    fn idempotence() {
        let y = vec![0.0, -1.0, 0.5, -2.0, 3.0];
        let s = vec![0.0; 5];
        let sol = skorokhod_map(&y, &s).unwrap();
        let again = skorokhod_map(&sol.x, &s).unwrap();
        assert_eq!(again.k, vec![0.0; 5]);
        assert_eq!(again.x, sol.x);
    }

    fn path_strategy(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            proptest::collection::vec(-10.0f64..10.0, len),
            proptest::collection::vec(-10.0f64..10.0, len),
        )
            .prop_map(|(mut y, mut s)| {
                // enforce the precondition Y[0] >= S[0]
                if y[0] < s[0] {
                    std::mem::swap(&mut y[0], &mut s[0]);
                }
                (y, s)
            })
    }

    proptest! {
        #[test]
        fn sup_formula_matches_recursion_oracle((y, s) in path_strategy(64)) {
            let sol = skorokhod_map(&y, &s).unwrap();
            // independent recursion oracle
            let mut k = vec![(s[0] - y[0]).max(0.0)];
            for i in 1..y.len() {
                k.push(k[i - 1].max(s[i] - y[i]));
            }
            let k: Vec<f64> = k.into_iter().map(|v| v.max(0.0)).collect();
            for i in 0..y.len() {
                prop_assert!((sol.k[i] - k[i]).abs() <= 1e-12);
                prop_assert!(sol.x[i] >= s[i]);
            }
            prop_assert!(flatness_defect(&sol, &s).abs() <= flatness_tolerance(&sol, &s));
        }

        #[test]
        fn obstacle_monotonicity((y, s) in path_strategy(32), shift in 0.0f64..2.0) {
            let s_lower: Vec<f64> = s.iter().map(|v| v - shift).collect();
            let lo = skorokhod_map(&y, &s_lower).unwrap();
            let hi = skorokhod_map(&y, &s).unwrap();
            for i in 0..y.len() {
                prop_assert!(lo.k[i] <= hi.k[i] + 1e-12);
                prop_assert!(lo.x[i] <= hi.x[i] + 1e-12);
            }
        }

        #[test]
        fn shift_equivariance((y, s) in path_strategy(32), c in -5.0f64..5.0) {
            let y2: Vec<f64> = y.iter().map(|v| v + c).collect();
            let s2: Vec<f64> = s.iter().map(|v| v + c).collect();
            let a = skorokhod_map(&y, &s).unwrap();
            let b = skorokhod_map(&y2, &s2).unwrap();
            for i in 0..y.len() {
                prop_assert!((a.k[i] - b.k[i]).abs() <= 1e-9);
                prop_assert!((a.x[i] + c - b.x[i]).abs() <= 1e-9);
            }
        }

        #[test]
        fn random_admissible_candidates_dominate(
            (y, s) in path_strategy(32),
            bumps in proptest::collection::vec(0.0f64..1.0, 32),
        ) {
            let sol = skorokhod_map(&y, &s).unwrap();
            // candidate = computed K plus nonnegative nondecreasing extras
            let mut candidate = sol.k.clone();
            let mut extra = 0.0;
            for i in 1..candidate.len() {
                extra += bumps[i];
                candidate[i] += extra;
            }
            prop_assert!(minimality_check(&sol, &y, &s, &candidate).unwrap());
        }
    }
}
