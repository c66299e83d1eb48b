//! Sampling and passage-time helpers shared by the estimators.

use crate::dynamics::{sample_signals, DisturbanceSignal, System, Trajectory, TrajectoryBatch};
use crate::error::Result;
use crate::set::{ball_around_set, SetDescriptor, State};
use crate::verdict::{uniform_grid, Budget, Witness};

/// Resolution of crossing-time refinement.
pub const CROSSING_RESOLUTION: f64 = 1e-6;

/// Derives an independent stream seed (splitmix64 finalizer).
pub fn mix(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Signals for `horizon`, with the grid step from `budget` (or `horizon / 64`).
pub fn signals(system: &System, budget: &Budget, horizon: f64, seed: u64) -> Result<Vec<DisturbanceSignal>> {
    let step = budget.step.unwrap_or(horizon.max(1e-9) / 64.0);
    sample_signals(&system.disturbance(), step, horizon, budget.signals.max(1), budget.strategy, seed)
}

/// Initial states in `B_r(A)`.
pub fn neighborhood(set: &SetDescriptor, r: f64, count: usize, seed: u64) -> Result<Vec<State>> {
    Ok(ball_around_set(set, r)?.sample_seeded(count, seed))
}

/// Budget time grid rescaled to `horizon`.
pub fn grid(budget: &Budget, horizon: f64) -> Vec<f64> {
    uniform_grid(horizon, budget.time_samples.max(2))
}

pub fn batch(system: &System, initial: Vec<State>, budget: &Budget, horizon: f64, seed: u64) -> Result<TrajectoryBatch> {
    let sig = signals(system, budget, horizon, seed)?;
    TrajectoryBatch::simulate(system, initial, sig, grid(budget, horizon), budget.tol)
}

pub fn distances(set: &SetDescriptor, tr: &Trajectory) -> Vec<f64> {
    tr.states.iter().map(|x| set.distance_unchecked(x)).collect()
}

pub fn blow_up_witness(x: &[f64], d: &DisturbanceSignal, time: f64, what: &str) -> Witness {
    Witness {
        initial: x.to_vec(),
        signal: d.clone(),
        time,
        value: crate::dynamics::integrator::BLOW_UP_GUARD,
        what: format!("{what}: state norm crossed the overflow guard"),
    }
}

/// `‖x‖_A < ε`, or membership in `A` when `ε = 0`.
pub fn inside(dist: f64, eps: f64) -> bool {
    if eps > 0.0 {
        dist < eps
    } else {
        dist <= 0.0
    }
}

/// Earliest time in `(t0, t1]` with `‖φ‖_A < ε`, given the state `x0` at
/// `t0` outside and the state at `t1` inside; bisection on the flow.
#[allow(clippy::too_many_arguments)]
pub fn refine_entry(
    system: &System,
    set: &SetDescriptor,
    eps: f64,
    d: &DisturbanceSignal,
    t0: f64,
    x0: &[f64],
    t1: f64,
    tol: f64,
) -> Result<f64> {
    let (mut a, mut b) = (t0, t1);
    let mut xa = x0.to_vec();
    while b - a > CROSSING_RESOLUTION {
        let mid = 0.5 * (a + b);
        let xm = system.flow_between(a, mid, &xa, d, tol)?;
        if inside(set.distance_unchecked(&xm), eps) {
            b = mid;
        } else {
            a = mid;
            xa = xm;
        }
    }
    Ok(b)
}

/// First and last entry into `B_ε(A)` along a sampled trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Passage {
    /// `None` when the trajectory never enters within the horizon.
    pub first_entry: Option<f64>,
    /// Time after which the trajectory stays inside up to the horizon;
    /// `None` when it is outside at the horizon.
    pub last_entry: Option<f64>,
    pub terminal_distance: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn passage(
    system: &System,
    set: &SetDescriptor,
    eps: f64,
    d: &DisturbanceSignal,
    times: &[f64],
    tr: &Trajectory,
    dist: &[f64],
    tol: f64,
) -> Result<Passage> {
    let terminal_distance = *dist.last().unwrap_or(&f64::INFINITY);
    let first = match dist.iter().position(|v| inside(*v, eps)) {
        None => None,
        Some(0) => Some(0.0),
        Some(k) => Some(refine_entry(system, set, eps, d, times[k - 1], &tr.states[k - 1], times[k], tol)?),
    };
    let last = if tr.blow_up.is_some() || !inside(terminal_distance, eps) || dist.len() < times.len() {
        None
    } else {
        match dist.iter().rposition(|v| !inside(*v, eps)) {
            None => Some(0.0),
            Some(k) if Some(k + 1) == dist.iter().position(|v| inside(*v, eps)) => first,
            Some(k) => Some(refine_entry(system, set, eps, d, times[k], &tr.states[k], times[k + 1], tol)?),
        }
    };
    Ok(Passage {
        first_entry: first,
        last_entry: last,
        terminal_distance,
    })
}

/// Grid walk that stops at the first entry into `B_ε(A)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryScan {
    /// Refined entry time.
    pub entry: Option<f64>,
    /// Distances at the grid points visited.
    pub dist: Vec<f64>,
    pub blow_up: Option<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn scan_entry(
    system: &System,
    set: &SetDescriptor,
    eps: f64,
    x: &[f64],
    d: &DisturbanceSignal,
    times: &[f64],
    tol: f64,
) -> Result<EntryScan> {
    let mut y = x.to_vec();
    let mut h = 0.0;
    let mut dist = Vec::with_capacity(times.len());
    let mut prev_t = 0.0;
    let mut prev_y = y.clone();
    for (k, t) in times.iter().enumerate() {
        match system.advance_state(&mut y, prev_t, *t, d, tol, &mut h) {
            Ok(()) => {}
            Err(crate::error::Error::BlowUp { time, .. }) => {
                return Ok(EntryScan {
                    entry: None,
                    dist,
                    blow_up: Some(time),
                })
            }
            Err(e) => return Err(e),
        }
        let dk = set.distance_unchecked(&y);
        dist.push(dk);
        if inside(dk, eps) {
            let entry = if k == 0 {
                0.0
            } else {
                refine_entry(system, set, eps, d, prev_t, &prev_y, *t, tol)?
            };
            return Ok(EntryScan {
                entry: Some(entry),
                dist,
                blow_up: None,
            });
        }
        prev_t = *t;
        prev_y.copy_from_slice(&y);
    }
    Ok(EntryScan {
        entry: None,
        dist,
        blow_up: None,
    })
}

/// Doubling test: the distance at least doubles across each of the three
/// successive halvings `H/8 → H/4 → H/2 → H` of the sampled horizon.
pub fn diverges(times: &[f64], dist: &[f64]) -> bool {
    let n = dist.len();
    if n < 2 {
        return false;
    }
    let h = times[n - 1];
    let at = |f: f64| {
        let k = times[..n].partition_point(|t| *t < f * h).min(n - 1);
        dist[k]
    };
    let (a, b, c, e) = (at(0.125), at(0.25), at(0.5), dist[n - 1]);
    a > 0.0 && b >= 2.0 * a && c >= 2.0 * b && e >= 2.0 * c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::builtin::{scalar_stable, scalar_unstable};

    #[test]
    fn entry_time_refined_to_closed_form() {
        let sys = scalar_stable();
        let d = DisturbanceSignal::constant(1.0, vec![0.0]);
        let times = uniform_grid(10.0, 21);
        let tr = sys.trajectory(&[1.0], &d, &times, 1e-10).unwrap();
        let set = SetDescriptor::origin(1);
        let dist = distances(&set, &tr);
        let p = passage(&sys, &set, 0.1, &d, &times, &tr, &dist, 1e-10).unwrap();
        let expect = 10f64.ln();
        assert!((p.first_entry.unwrap() - expect).abs() < 2e-6);
        assert_eq!(p.first_entry, p.last_entry);
    }

    #[test]
    fn doubling_test_separates_growth_from_decay() {
        let times = uniform_grid(8.0, 33);
        let grow: Vec<f64> = times.iter().map(|t| t.exp()).collect();
        let decay: Vec<f64> = times.iter().map(|t| (-t).exp()).collect();
        assert!(diverges(&times, &grow));
        assert!(!diverges(&times, &decay));
        let sys = scalar_unstable();
        let d = DisturbanceSignal::constant(1.0, vec![0.0]);
        let tr = sys.trajectory(&[1.0], &d, &times, 1e-9).unwrap();
        assert!(diverges(&times, &distances(&SetDescriptor::origin(1), &tr)));
    }

    #[test]
    fn scan_stops_at_entry() {
        let sys = scalar_stable();
        let d = DisturbanceSignal::constant(1.0, vec![0.0]);
        let times = uniform_grid(10.0, 101);
        let ball = SetDescriptor::ball(vec![0.0], 0.5).unwrap();
        let s = scan_entry(&sys, &ball, 0.0, &[2.0], &d, &times, 1e-10).unwrap();
        assert!((s.entry.unwrap() - 4f64.ln()).abs() < 2e-6);
        assert!(s.dist.len() < 20);
        let s = scan_entry(&scalar_unstable(), &ball, 0.0, &[1.0], &d, &times, 1e-10).unwrap();
        assert!(s.entry.is_none() && s.dist.len() == times.len());
    }

    #[test]
    fn mixed_seeds_differ() {
        assert_ne!(mix(1, 2), mix(1, 3));
        assert_eq!(mix(5, 9), mix(5, 9));
    }
}
