use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform time grid on [0, T] with nodes t_i = i*T/n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub horizon: f64,
    pub n_steps: usize,
    pub dt: f64,
    pub nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if n_steps == 0 {
            return Err(Error::InvalidArgument("n_steps must be at least 1".into()));
        }
        let dt = horizon / n_steps as f64;
        let nodes = (0..=n_steps)
            .map(|i| i as f64 * horizon / n_steps as f64)
            .collect();
        Ok(TimeGrid {
            horizon,
            n_steps,
            dt,
            nodes,
        })
    }

    /// Grid with the same horizon and `factor` times as many steps.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        TimeGrid::uniform(self.horizon, self.n_steps * factor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_nodes() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        assert_eq!(g.nodes, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.dt, 0.25);
    }

    #[test]
    fn single_step() {
        let g = TimeGrid::uniform(1.0, 1).unwrap();
        assert_eq!(g.nodes, vec![0.0, 1.0]);
    }

    #[test]
    fn dt_arithmetic() {
        let g = TimeGrid::uniform(2.0, 8).unwrap();
        assert_eq!(g.dt, 0.25);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(TimeGrid::uniform(0.0, 4).is_err());
        assert!(TimeGrid::uniform(-1.0, 4).is_err());
        assert!(TimeGrid::uniform(1.0, 0).is_err());
    }
}
