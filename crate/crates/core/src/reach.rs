//! Sampled outer approximations of reachable sets `ℛ^T(S)`, the
//! prolongations `𝒜_ε = ℛ(B_ε(𝒜))` and `P₊(𝒜) = ⋂_ε 𝒜_ε`, and the
//! forward-completeness bound `μ`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{DisturbanceSignal, System, TrajectoryBatch};
use crate::error::{Error, Result};
use crate::monotone::{Direction, MonotoneGrid};
use crate::set::{distance, norm, SetDescriptor, State};
use crate::sim;
use crate::verdict::{conjunction, Budget, Verdict, Witness, SIGNAL_FAMILY_NOTE};

/// Default hard cap on the `𝒜_ε` horizon.
pub const HORIZON_CAP: f64 = 100.0;
/// Cells per axis of the occupancy grid.
pub const GRID_CELLS: usize = 64;
/// Occupancy grids are used up to this dimension; beyond it, cloud mode.
pub const GRID_MAX_DIM: usize = 3;

const SPACING_QUERIES: usize = 512;
const PROBE_INITIALS: usize = 64;
const MIN_PROLONGATION_HORIZON: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReachCloud {
    pub points: Vec<State>,
    /// Sample time of each point.
    pub times: Vec<f64>,
    pub bounding_box: SetDescriptor,
    pub horizon: f64,
    pub source: SetDescriptor,
    /// The declared outer approximation is the bounding box grown by this.
    pub inflation: f64,
    /// `ε` of a prolongation, the smallest `ε` of an intersection.
    pub epsilon: Option<f64>,
    pub verdict: Verdict,
}

/// JSON summary without the points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudSummary {
    pub lower: State,
    pub upper: State,
    pub inflation: f64,
    pub horizon: f64,
    pub points: usize,
    pub epsilon: Option<f64>,
    pub budget: Budget,
}

impl ReachCloud {
    pub fn lower(&self) -> &[f64] {
        match &self.bounding_box {
            SetDescriptor::Box { lower, .. } => lower,
            _ => unreachable!("bounding box is a box"),
        }
    }

    pub fn upper(&self) -> &[f64] {
        match &self.bounding_box {
            SetDescriptor::Box { upper, .. } => upper,
            _ => unreachable!("bounding box is a box"),
        }
    }

    /// Whether `x` lies in the box grown by `ρ` on every face.
    pub fn outer_contains(&self, x: &[f64]) -> bool {
        let rho = self.inflation;
        x.iter()
            .zip(self.lower().iter().zip(self.upper()))
            .all(|(v, (l, u))| *v >= l - rho && *v <= u + rho)
    }

    pub fn summary(&self) -> CloudSummary {
        CloudSummary {
            lower: self.lower().to_vec(),
            upper: self.upper().to_vec(),
            inflation: self.inflation,
            horizon: self.horizon,
            points: self.points.len(),
            epsilon: self.epsilon,
            budget: self.verdict.budget.clone(),
        }
    }
}

fn bounding(points: &[State], fallback: &SetDescriptor) -> SetDescriptor {
    if points.is_empty() {
        let (lower, upper) = fallback.bounding_box();
        return SetDescriptor::Box { lower, upper };
    }
    let n = points[0].len();
    let mut lower = vec![f64::INFINITY; n];
    let mut upper = vec![f64::NEG_INFINITY; n];
    for p in points {
        for i in 0..n {
            lower[i] = lower[i].min(p[i]);
            upper[i] = upper[i].max(p[i]);
        }
    }
    SetDescriptor::Box { lower, upper }
}

/// Nearest-neighbour queries by a sweep over points sorted on the first axis.
struct SweepIndex<'a> {
    points: &'a [State],
    order: Vec<usize>,
    keys: Vec<f64>,
}

impl<'a> SweepIndex<'a> {
    fn new(points: &'a [State]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|a, b| points[*a][0].total_cmp(&points[*b][0]));
        let keys = order.iter().map(|i| points[*i][0]).collect();
        SweepIndex { points, order, keys }
    }

    /// Distance from `q` to the nearest point other than index `skip`.
    fn nearest(&self, q: &[f64], skip: Option<usize>) -> f64 {
        let start = self.keys.partition_point(|k| *k < q[0]);
        let mut best = f64::INFINITY;
        let mut hi = start;
        let mut lo = start;
        loop {
            let mut moved = false;
            if hi < self.keys.len() && self.keys[hi] - q[0] < best {
                let idx = self.order[hi];
                if Some(idx) != skip {
                    best = best.min(distance(q, &self.points[idx]));
                }
                hi += 1;
                moved = true;
            }
            if lo > 0 && q[0] - self.keys[lo - 1] < best {
                lo -= 1;
                let idx = self.order[lo];
                if Some(idx) != skip {
                    best = best.min(distance(q, &self.points[idx]));
                }
                moved = true;
            }
            if !moved {
                return best;
            }
        }
    }
}

/// Three times the median nearest-neighbour spacing over a strided subsample.
pub fn inflation_of(points: &[State]) -> f64 {
    if points.len() < 2 {
        return 0.0;
    }
    let index = SweepIndex::new(points);
    let stride = (points.len() / SPACING_QUERIES).max(1);
    let mut nn: Vec<f64> = (0..points.len())
        .step_by(stride)
        .map(|i| index.nearest(&points[i], Some(i)))
        .collect();
    nn.sort_by(f64::total_cmp);
    3.0 * nn[nn.len() / 2]
}

fn cloud_from_batch(
    batch: &TrajectoryBatch,
    horizon: f64,
    budget: &Budget,
    what: &str,
) -> (Vec<State>, Vec<f64>, Verdict) {
    let mut points = Vec::new();
    let mut times = Vec::new();
    for (_, _, tr) in batch.iter() {
        for (k, x) in tr.states.iter().enumerate() {
            points.push(x.clone());
            times.push(batch.times[k]);
        }
    }
    let verdict = match batch.first_blow_up() {
        Some((k, t)) => {
            let ns = batch.signals.len();
            let w = sim::blow_up_witness(&batch.initial[k / ns], &batch.signals[k % ns], t, what);
            Verdict::falsified(w, budget, format!("forward completeness fails before T = {horizon}"))
        }
        None => Verdict::supported(budget, SIGNAL_FAMILY_NOTE),
    };
    (points, times, verdict)
}

fn finish(
    points: Vec<State>,
    times: Vec<f64>,
    source: &SetDescriptor,
    horizon: f64,
    epsilon: Option<f64>,
    verdict: Verdict,
) -> ReachCloud {
    let inflation = inflation_of(&points);
    ReachCloud {
        bounding_box: bounding(&points, source),
        points,
        times,
        horizon,
        source: source.clone(),
        inflation,
        epsilon,
        verdict,
    }
}

/// `ℛ^T(S)` from `budget.samples` states of `S` and `budget.signals` signals.
pub fn reach_set(system: &System, source: &SetDescriptor, horizon: f64, budget: &Budget) -> Result<ReachCloud> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::invalid(format!("horizon {horizon} must be finite and >= 0")));
    }
    source.validate()?;
    if source.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: source.dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sim::mix(budget.seed, 1));
    let initial = source.sample_inside(budget.samples.max(1), &mut rng);
    let batch = sim::batch(system, initial, budget, horizon, sim::mix(budget.seed, 2))?;
    let (points, times, verdict) = cloud_from_batch(&batch, horizon, budget, "reach set");
    Ok(finish(points, times, source, horizon, None, verdict))
}

/// Longest excursion outside `B_ε(A)` that ends inside it; `None` when some
/// probe is still outside at the horizon.
fn longest_excursion(batch: &TrajectoryBatch, set: &SetDescriptor, eps: f64) -> Option<f64> {
    let mut longest: f64 = 0.0;
    for (_, _, tr) in batch.iter() {
        if tr.blow_up.is_some() {
            return None;
        }
        let mut left: Option<f64> = None;
        for (k, x) in tr.states.iter().enumerate() {
            let outside = set.distance_unchecked(x) >= eps;
            match (outside, left) {
                (true, None) => left = Some(if k == 0 { 0.0 } else { batch.times[k - 1] }),
                (false, Some(t0)) => {
                    longest = longest.max(batch.times[k] - t0);
                    left = None;
                }
                _ => {}
            }
        }
        if left.is_some() {
            return None;
        }
    }
    Some(longest)
}

/// `𝒜_ε = ℛ(B_ε(𝒜))`, truncated at twice the estimated return time.
pub fn a_eps(system: &System, set: &SetDescriptor, eps: f64, budget: &Budget) -> Result<ReachCloud> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("ε = {eps} must be > 0")));
    }
    if set.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: set.dim(),
        });
    }
    let cap = budget.horizon.clamp(MIN_PROLONGATION_HORIZON, HORIZON_CAP);
    let probes = sim::neighborhood(set, eps, PROBE_INITIALS.min(budget.samples.max(1)), sim::mix(budget.seed, 3))?;
    let probe = sim::batch(system, probes, budget, cap, sim::mix(budget.seed, 4))?;
    let excursion = longest_excursion(&probe, set, eps);

    let (horizon, returned) = match excursion {
        Some(t) => ((2.0 * t).clamp(MIN_PROLONGATION_HORIZON, cap), true),
        None => (cap, false),
    };
    let mut initial = sim::neighborhood(set, eps, budget.samples.max(1), sim::mix(budget.seed, 5))?;
    let mut rng = ChaCha8Rng::seed_from_u64(sim::mix(budget.seed, 6));
    initial.extend(set.sample_inside(2 * set.dim() + 1, &mut rng));
    let batch = sim::batch(system, initial, budget, horizon, sim::mix(budget.seed, 7))?;
    let (points, times, verdict) = cloud_from_batch(&batch, horizon, budget, "prolongation");
    let note = match excursion {
        Some(t) => format!("horizon {horizon} = 2 x estimated return time {t}"),
        None => String::new(),
    };
    let verdict = if returned {
        verdict.with_note(&note)
    } else {
        Verdict::inconclusive(budget, format!("no return to B_eps(A) within the horizon cap {cap}"))
    };
    Ok(finish(points, times, set, horizon, Some(eps), verdict))
}

/// Occupancy grid over a box; cells are indexed row-major.
struct Occupancy {
    lower: Vec<f64>,
    size: Vec<f64>,
    cells: usize,
    dim: usize,
}

impl Occupancy {
    fn new(lower: &[f64], upper: &[f64], cells: usize) -> Self {
        let size = lower
            .iter()
            .zip(upper)
            .map(|(l, u)| ((u - l) / cells as f64).max(1e-9))
            .collect();
        Occupancy {
            lower: lower.to_vec(),
            size,
            cells,
            dim: lower.len(),
        }
    }

    fn total(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    fn coords(&self, x: &[f64]) -> Vec<usize> {
        x.iter()
            .zip(self.lower.iter().zip(&self.size))
            .map(|(v, (l, s))| (((v - l) / s).floor().max(0.0) as usize).min(self.cells - 1))
            .collect()
    }

    fn flat(&self, c: &[usize]) -> usize {
        c.iter().fold(0, |acc, v| acc * self.cells + v)
    }

    fn unflat(&self, mut k: usize) -> Vec<usize> {
        let mut c = vec![0; self.dim];
        for i in (0..self.dim).rev() {
            c[i] = k % self.cells;
            k /= self.cells;
        }
        c
    }

    fn center(&self, c: &[usize]) -> State {
        c.iter()
            .zip(self.lower.iter().zip(&self.size))
            .map(|(v, (l, s))| l + (*v as f64 + 0.5) * s)
            .collect()
    }

    /// Cells touched by `points`, dilated by `ρ` (at least one cell).
    fn mark(&self, points: &[State], rho: f64) -> Vec<bool> {
        let mut occ = vec![false; self.total()];
        for p in points {
            occ[self.flat(&self.coords(p))] = true;
        }
        let reach: Vec<usize> = self.size.iter().map(|s| ((rho / s).ceil() as usize).max(1)).collect();
        for (axis, r) in reach.iter().enumerate() {
            let stride = self.cells.pow((self.dim - 1 - axis) as u32);
            let src = occ.clone();
            for (k, on) in src.iter().enumerate() {
                if !on {
                    continue;
                }
                let pos = (k / stride) % self.cells;
                let lo = pos.saturating_sub(*r);
                let hi = (pos + r).min(self.cells - 1);
                for q in lo..=hi {
                    occ[k - pos * stride + q * stride] = true;
                }
            }
        }
        occ
    }
}

/// `P₊(𝒜) ≈ ⋂ 𝒜_ε` over a strictly decreasing schedule of at least three `ε`.
pub fn p_plus(system: &System, set: &SetDescriptor, schedule: &[f64], budget: &Budget) -> Result<ReachCloud> {
    if schedule.len() < 3 || schedule.windows(2).any(|w| w[1] >= w[0]) || schedule.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::invalid("ε schedule must be strictly decreasing, positive, with >= 3 entries"));
    }
    let clouds = schedule
        .iter()
        .enumerate()
        .map(|(i, e)| a_eps(system, set, *e, &budget.with_seed(sim::mix(budget.seed, 100 + i as u64))))
        .collect::<Result<Vec<_>>>()?;
    let verdicts: Vec<Verdict> = clouds.iter().map(|c| c.verdict.clone()).collect();
    let smallest = *schedule.last().expect("nonempty schedule");
    let horizon = clouds.iter().map(|c| c.horizon).fold(0.0, f64::max);
    let n = system.dim();

    let (points, inflation) = if n <= GRID_MAX_DIM {
        let mut lower = vec![f64::INFINITY; n];
        let mut upper = vec![f64::NEG_INFINITY; n];
        for c in &clouds {
            for i in 0..n {
                lower[i] = lower[i].min(c.lower()[i] - c.inflation);
                upper[i] = upper[i].max(c.upper()[i] + c.inflation);
            }
        }
        let occ = Occupancy::new(&lower, &upper, GRID_CELLS);
        let mut alive = vec![true; occ.total()];
        for c in &clouds {
            for (a, m) in alive.iter_mut().zip(occ.mark(&c.points, c.inflation)) {
                *a &= m;
            }
        }
        let pts: Vec<State> = alive
            .iter()
            .enumerate()
            .filter(|(_, a)| **a)
            .map(|(k, _)| occ.center(&occ.unflat(k)))
            .collect();
        let half_diag = 0.5 * norm(&occ.size);
        (pts, half_diag)
    } else {
        let last = clouds.last().expect("nonempty schedule");
        let indices: Vec<SweepIndex> = clouds.iter().map(|c| SweepIndex::new(&c.points)).collect();
        let pts: Vec<State> = last
            .points
            .iter()
            .filter(|p| {
                indices
                    .iter()
                    .zip(&clouds)
                    .all(|(ix, c)| ix.nearest(p, None) <= c.inflation.max(1e-12))
            })
            .cloned()
            .collect();
        (pts, last.inflation)
    };

    let base = conjunction(&verdicts, budget);
    let verdict = if points.is_empty() {
        Verdict::inconclusive(
            budget,
            format!("empty intersection at grid resolution {GRID_CELLS} cells per axis"),
        )
    } else {
        base.with_note(&format!("finite schedule, smallest ε = {smallest}"))
    };
    let times = vec![horizon; points.len()];
    let bounding_box = bounding(&points, set);
    Ok(ReachCloud {
        points,
        times,
        bounding_box,
        horizon,
        source: set.clone(),
        inflation,
        epsilon: Some(smallest),
        verdict,
    })
}

/// Outcome of flowing cloud points forward and testing the declared outer box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceCheck {
    pub probes: usize,
    pub inside_fraction: f64,
    pub failures: Vec<Witness>,
}

/// Flows `probes` cloud points by random `(t ≤ horizon, d)` and checks they
/// stay in the inflated box.
pub fn check_cloud_invariance(system: &System, cloud: &ReachCloud, probes: usize, budget: &Budget) -> Result<InvarianceCheck> {
    if cloud.points.is_empty() || probes == 0 {
        return Err(Error::invalid("invariance probes need a nonempty cloud"));
    }
    let horizon = cloud.horizon.max(1e-9);
    let sigs = sim::signals(system, &budget.with_seed(budget.seed), horizon, sim::mix(budget.seed, 9))?;
    let mut rng = ChaCha8Rng::seed_from_u64(sim::mix(budget.seed, 10));
    let mut failures = Vec::new();
    let mut inside = 0usize;
    for _ in 0..probes {
        let x = &cloud.points[rng.random_range(0..cloud.points.len())];
        let d: &DisturbanceSignal = &sigs[rng.random_range(0..sigs.len())];
        let t = rng.random_range(0.0..=horizon);
        match system.flow(t, x, d, budget.tol) {
            Ok(y) if cloud.outer_contains(&y) => inside += 1,
            Ok(y) => failures.push(Witness {
                initial: x.clone(),
                signal: d.clone(),
                time: t,
                value: norm(&y),
                what: "left the inflated cloud box".into(),
            }),
            Err(Error::BlowUp { time, .. }) => failures.push(sim::blow_up_witness(x, d, time, "invariance probe")),
            Err(e) => return Err(e),
        }
    }
    Ok(InvarianceCheck {
        probes,
        inside_fraction: inside as f64 / probes as f64,
        failures,
    })
}

/// `μ(r, t)` with `‖φ(s, x, d)‖ ≤ μ(‖x‖, t)` for `s ≤ t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfcEnvelope {
    /// Nondecreasing in both `r` and `t`.
    pub mu: MonotoneGrid,
    pub verdict: Verdict,
}

pub fn estimate_rfc(system: &System, r_grid: &[f64], t_grid: &[f64], budget: &Budget) -> Result<RfcEnvelope> {
    estimate_rfc_around(system, &SetDescriptor::origin(system.dim()), r_grid, t_grid, budget)
}

/// `μ` measured by `‖·‖_A` from initial states in `B_r(A)`; `r = 0` draws
/// from `A` itself.
pub fn estimate_rfc_around(
    system: &System,
    set: &SetDescriptor,
    r_grid: &[f64],
    t_grid: &[f64],
    budget: &Budget,
) -> Result<RfcEnvelope> {
    let increasing = |g: &[f64]| !g.is_empty() && g.windows(2).all(|w| w[1] > w[0]) && g[0] >= 0.0;
    if !increasing(r_grid) || !increasing(t_grid) {
        return Err(Error::invalid("RFC grids must be nonempty and strictly increasing"));
    }
    if set.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: set.dim(),
        });
    }
    let t_max = *t_grid.last().expect("nonempty");
    let mut times = sim::grid(budget, t_max);
    times.extend_from_slice(t_grid);
    times.sort_by(f64::total_cmp);
    times.dedup();
    let sigs = sim::signals(system, budget, t_max, sim::mix(budget.seed, 11))?;

    let mut values = vec![0.0f64; r_grid.len() * t_grid.len()];
    let mut witness: Option<Witness> = None;
    for (i, r) in r_grid.iter().enumerate() {
        let initial = if *r > 0.0 {
            sim::neighborhood(set, *r, budget.samples.max(1), sim::mix(budget.seed, 12 + i as u64))?
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(sim::mix(budget.seed, 12 + i as u64));
            set.sample_inside(budget.samples.max(1), &mut rng)
        };
        let batch = TrajectoryBatch::simulate(system, initial, sigs.clone(), times.clone(), budget.tol)?;
        for (x, d, tr) in batch.iter() {
            let mut running: f64 = 0.0;
            let mut k = 0;
            for (j, t) in t_grid.iter().enumerate() {
                while k < tr.states.len() && times[k] <= *t {
                    running = running.max(set.distance_unchecked(&tr.states[k]));
                    k += 1;
                }
                let blown = tr.blow_up.is_some_and(|b| b <= *t) || (k < times.len() && times[k] <= *t);
                let v = if blown { crate::dynamics::integrator::BLOW_UP_GUARD } else { running };
                let cell = &mut values[i * t_grid.len() + j];
                *cell = cell.max(v);
            }
            if let (Some(b), None) = (tr.blow_up, &witness) {
                witness = Some(sim::blow_up_witness(x, d, b, "forward completeness"));
            }
        }
    }
    let mu = MonotoneGrid::new(
        r_grid.to_vec(),
        t_grid.to_vec(),
        values,
        Direction::NonDecreasing,
        Direction::NonDecreasing,
    )?;
    let verdict = match witness {
        Some(w) => Verdict::falsified(w, budget, "blow-up observed"),
        None => Verdict::supported(budget, SIGNAL_FAMILY_NOTE),
    };
    Ok(RfcEnvelope { mu, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::builtin::{builtin, scalar_stable, scalar_unstable};

    fn small() -> Budget {
        Budget {
            samples: 32,
            signals: 2,
            time_samples: 65,
            ..Budget::default()
        }
    }

    #[test]
    fn contraction_stays_in_source() {
        let s = SetDescriptor::ball(vec![0.0], 1.0).unwrap();
        let c = reach_set(&scalar_stable(), &s, 1.0, &small()).unwrap();
        assert!(c.lower()[0] >= -1.0 && c.upper()[0] <= 1.0);
        assert!(c.verdict.is_supported());
    }

    #[test]
    fn expansion_reaches_e() {
        let s = SetDescriptor::ball(vec![0.0], 1.0).unwrap();
        let c = reach_set(&scalar_unstable(), &s, 1.0, &small()).unwrap();
        let e = std::f64::consts::E;
        assert!((c.upper()[0] - e).abs() < 0.05 * e && (c.lower()[0] + e).abs() < 0.05 * e);
    }

    #[test]
    fn prolongation_of_invariant_ball() {
        let set = SetDescriptor::origin(1);
        let c = a_eps(&scalar_stable(), &set, 0.5, &small()).unwrap();
        assert!(c.points.iter().all(|p| norm(p) < 0.5 + c.inflation));
        let c = a_eps(&builtin("linear_diag(2)").unwrap(), &SetDescriptor::origin(2), 1.0, &small()).unwrap();
        assert!(c.points.iter().all(|p| norm(p) < 1.0 + c.inflation));
    }

    #[test]
    fn intersection_shrinks_to_origin() {
        let set = SetDescriptor::origin(1);
        let c = p_plus(&scalar_stable(), &set, &[0.5, 0.25, 0.1], &small()).unwrap();
        assert!(!c.points.is_empty());
        // within two cells of the origin
        let cell = (0.5 + 0.5) / GRID_CELLS as f64 + 1e-9;
        assert!(c.points.iter().all(|p| p[0].abs() <= 2.0 * cell + 0.2), "{:?}", c.bounding_box);
        assert!(c.points.iter().any(|p| p[0].abs() <= cell));
    }

    #[test]
    fn divergent_prolongation_is_inconclusive() {
        let set = SetDescriptor::origin(1);
        let b = Budget {
            horizon: 10.0,
            ..small()
        };
        let c = a_eps(&scalar_unstable(), &set, 0.5, &b).unwrap();
        assert_eq!(c.verdict.status, crate::verdict::Status::Inconclusive);
    }

    #[test]
    fn rfc_of_contraction_and_expansion() {
        let env = estimate_rfc(&scalar_stable(), &[0.5, 1.0], &[1.0, 2.0], &small()).unwrap();
        assert!((env.mu.eval(1.0, 2.0) - 1.0).abs() < 1e-6);
        let env = estimate_rfc(&scalar_unstable(), &[1.0], &[1.0, 2.0], &small()).unwrap();
        let e2 = std::f64::consts::E.powi(2);
        assert!((env.mu.eval(1.0, 2.0) - e2).abs() < 0.05 * e2);
        assert!(env.mu.is_monotone());
    }

    #[test]
    fn inflation_tracks_spacing() {
        let pts: Vec<State> = (0..100).map(|k| vec![k as f64 * 0.1]).collect();
        assert!((inflation_of(&pts) - 0.3).abs() < 1e-9);
    }
}
