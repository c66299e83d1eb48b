use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::signal::DisturbanceSignal;
use super::system::{System, Trajectory};
use crate::error::Result;
use crate::set::State;

/// Flows of every `(initial, signal)` pair on a shared time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBatch {
    pub initial: Vec<State>,
    pub signals: Vec<DisturbanceSignal>,
    pub times: Vec<f64>,
    /// `trajectories[i * signals.len() + j]` starts at `initial[i]` under `signals[j]`.
    pub trajectories: Vec<Trajectory>,
}

impl TrajectoryBatch {
    pub fn simulate(
        system: &System,
        initial: Vec<State>,
        signals: Vec<DisturbanceSignal>,
        times: Vec<f64>,
        tol: f64,
    ) -> Result<Self> {
        let ns = signals.len();
        let trajectories = (0..initial.len() * ns)
            .into_par_iter()
            .map(|k| system.trajectory(&initial[k / ns], &signals[k % ns], &times, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrajectoryBatch {
            initial,
            signals,
            times,
            trajectories,
        })
    }

    pub fn get(&self, i: usize, j: usize) -> &Trajectory {
        &self.trajectories[i * self.signals.len() + j]
    }

    /// `(initial, signal, trajectory)` triples.
    pub fn iter(&self) -> impl Iterator<Item = (&State, &DisturbanceSignal, &Trajectory)> {
        let ns = self.signals.len();
        self.trajectories
            .iter()
            .enumerate()
            .map(move |(k, tr)| (&self.initial[k / ns], &self.signals[k % ns], tr))
    }

    pub fn first_blow_up(&self) -> Option<(usize, f64)> {
        self.trajectories
            .iter()
            .enumerate()
            .filter_map(|(k, t)| t.blow_up.map(|b| (k, b)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::builtin::scalar_stable;

    #[test]
    fn first_state_is_the_initial_state() {
        let sys = scalar_stable();
        let sig = vec![DisturbanceSignal::constant(1.0, vec![0.0]); 2];
        let b = TrajectoryBatch::simulate(&sys, vec![vec![1.0], vec![-2.0]], sig, vec![0.0, 0.5, 1.0], 1e-9).unwrap();
        for (x, _, tr) in b.iter() {
            assert_eq!(&tr.states[0], x);
        }
        assert!((b.get(1, 0).states[2][0] + 2.0 * (-1.0f64).exp()).abs() < 1e-9);
        assert!(b.first_blow_up().is_none());
    }
}
