//! Three-valued outcome of a property check.
//!
//! Universally quantified stability properties can be falsified by a single
//! replayable trajectory, but never proved by simulation. A check therefore
//! ends in `Falsified` (with a witness), `SupportedUpTo` (no violation within
//! the declared budget) or `Inconclusive` (budget or resolution too small).

use serde::{Deserialize, Serialize};

use crate::dynamics::signal::{DisturbanceSignal, SignalStrategy};
use crate::set::State;

/// Printed on every report.
pub const SEMANTICS_NOTE: &str = "universally quantified properties are only falsified or supported up to the stated budget, never proved";

/// Printed on every report whose disturbances were sampled.
pub const SIGNAL_FAMILY_NOTE: &str = "disturbances are piecewise constant on a uniform grid; every sup over disturbances is a lower bound on the true sup";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Falsified,
    SupportedUpTo,
    Inconclusive,
}

/// Sampling and integration budget of an analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    /// Initial states drawn per sampled region.
    pub samples: usize,
    /// Disturbance signals paired with every initial state.
    pub signals: usize,
    /// Points of the uniform time grid on `[0, horizon]`.
    pub time_samples: usize,
    pub horizon: f64,
    /// Integrator tolerance.
    pub tol: f64,
    /// Disturbance grid step; `horizon / 64` when unset.
    pub step: Option<f64>,
    pub seed: u64,
    pub strategy: SignalStrategy,
    /// Objective evaluations granted to adversarial stress searches.
    pub stress_evaluations: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            samples: 64,
            signals: 8,
            time_samples: 513,
            horizon: 100.0,
            tol: 1e-9,
            step: None,
            seed: 0,
            strategy: SignalStrategy::Mixed,
            stress_evaluations: 0,
        }
    }
}

impl Budget {
    pub fn step(&self) -> f64 {
        self.step.unwrap_or(self.horizon / 64.0)
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        Budget {
            horizon,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Budget {
            seed,
            ..self.clone()
        }
    }

    pub fn trajectories(&self) -> usize {
        self.samples * self.signals
    }

    /// Uniform time grid `0 = t_0 < … < t_{k-1} = horizon`.
    pub fn time_grid(&self) -> Vec<f64> {
        uniform_grid(self.horizon, self.time_samples.max(2))
    }
}

pub fn uniform_grid(horizon: f64, points: usize) -> Vec<f64> {
    let k = points.max(2);
    (0..k)
        .map(|i| {
            if i + 1 == k {
                horizon
            } else {
                horizon * i as f64 / (k - 1) as f64
            }
        })
        .collect()
}

/// A replayable counterexample: flowing `initial` under `signal` for `time`
/// reproduces the reported `value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub initial: State,
    pub signal: DisturbanceSignal,
    pub time: f64,
    pub value: f64,
    pub what: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    pub budget: Budget,
    pub note: String,
}

impl Verdict {
    pub fn falsified(witness: Witness, budget: &Budget, note: impl Into<String>) -> Self {
        Verdict {
            status: Status::Falsified,
            witness: Some(witness),
            budget: budget.clone(),
            note: note.into(),
        }
    }

    pub fn supported(budget: &Budget, note: impl Into<String>) -> Self {
        Verdict {
            status: Status::SupportedUpTo,
            witness: None,
            budget: budget.clone(),
            note: note.into(),
        }
    }

    pub fn inconclusive(budget: &Budget, reason: impl Into<String>) -> Self {
        Verdict {
            status: Status::Inconclusive,
            witness: None,
            budget: budget.clone(),
            note: reason.into(),
        }
    }

    pub fn is_supported(&self) -> bool {
        self.status == Status::SupportedUpTo
    }

    pub fn is_falsified(&self) -> bool {
        self.status == Status::Falsified
    }

    pub fn with_note(mut self, extra: &str) -> Self {
        if !extra.is_empty() {
            if !self.note.is_empty() {
                self.note.push_str("; ");
            }
            self.note.push_str(extra);
        }
        self
    }
}

/// Conjunction of verdicts: any falsified wins, then any inconclusive.
pub fn conjunction<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>, budget: &Budget) -> Verdict {
    let mut inconclusive = None;
    for v in verdicts {
        match v.status {
            Status::Falsified => return v.clone(),
            Status::Inconclusive if inconclusive.is_none() => inconclusive = Some(v.clone()),
            _ => {}
        }
    }
    inconclusive.unwrap_or_else(|| Verdict::supported(budget, ""))
}
