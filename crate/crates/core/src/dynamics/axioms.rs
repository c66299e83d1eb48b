//! Numerical residuals of the transition-map axioms: identity, causality,
//! continuity and the cocycle property.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::signal::{sample_signals, DisturbanceSignal, SignalStrategy};
use super::system::System;
use crate::error::{Error, Result};
use crate::set::{distance, SetDescriptor};
use crate::verdict::uniform_grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomReport {
    pub samples: usize,
    pub tol: f64,
    pub identity: f64,
    pub cocycle: f64,
    pub causality: f64,
    /// Largest jump between adjacent points of a fine trajectory grid.
    pub continuity: f64,
    /// Samples skipped because the flow crossed the overflow guard.
    pub blown_up: usize,
}

impl AxiomReport {
    pub fn max_violation(&self) -> f64 {
        self.identity.max(self.cocycle).max(self.causality)
    }
}

const STEP: f64 = 0.25;
const MAX_MULTIPLE: usize = 4;
const FINE_POINTS: usize = 201;

/// Residuals over `samples` random triples `(x, d, (t, h))` with `x` in the
/// ball of radius `radius` around the origin and `t, h` grid multiples.
pub fn check_axioms(system: &System, samples: usize, radius: f64, tol: f64, seed: u64) -> Result<AxiomReport> {
    if samples < 10 {
        return Err(Error::invalid("axiom checks need at least 10 samples"));
    }
    let n = system.dim();
    let dbox = system.disturbance();
    let span = 2.0 * STEP * MAX_MULTIPLE as f64;
    let signals = sample_signals(&dbox, STEP, span, 2 * samples, SignalStrategy::Uniform, seed)?;
    let origin = SetDescriptor::origin(n);
    let inits = crate::set::ball_around_set(&origin, radius)?.sample_seeded(samples, seed ^ 0xA5A5);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(17));
    let fine = uniform_grid(span, FINE_POINTS);

    let mut rep = AxiomReport {
        samples,
        tol,
        identity: 0.0,
        cocycle: 0.0,
        causality: 0.0,
        continuity: 0.0,
        blown_up: 0,
    };
    for (i, x) in inits.iter().enumerate() {
        let d = &signals[2 * i];
        let other = &signals[2 * i + 1];
        let kt = rng.random_range(0..=MAX_MULTIPLE);
        let kh = rng.random_range(0..=MAX_MULTIPLE);
        let (t, h) = (kt as f64 * STEP, kh as f64 * STEP);
        let outcome = (|| -> Result<()> {
            let x0 = system.flow(0.0, x, d, tol)?;
            rep.identity = rep.identity.max(distance(&x0, x));

            let direct = system.flow(t + h, x, d, tol)?;
            let mid = system.flow(t, x, d, tol)?;
            let shifted: DisturbanceSignal = d.shift(t)?;
            let composed = system.flow(h, &mid, &shifted, tol)?;
            rep.cocycle = rep.cocycle.max(distance(&direct, &composed));

            let spliced = DisturbanceSignal::concatenate(d, other, kt)?;
            let alt = system.flow(t, x, &spliced, tol)?;
            rep.causality = rep.causality.max(distance(&mid, &alt));

            let traj = system.trajectory(x, d, &fine, tol)?;
            for w in traj.states.windows(2) {
                rep.continuity = rep.continuity.max(distance(&w[0], &w[1]));
            }
            Ok(())
        })();
        match outcome {
            Ok(()) => {}
            Err(Error::BlowUp { .. }) => rep.blown_up += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(rep)
}
