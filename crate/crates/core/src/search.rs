//! Adversarial search over initial states and disturbance signals.
//!
//! Cross-entropy iterations on Gaussian proposals: the initial state is
//! projected into the region, per-segment disturbance values are clipped to
//! `D`. The best candidate found so far is carried into every generation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::TauTable;
use crate::dynamics::integrator::BLOW_UP_GUARD;
use crate::dynamics::{DisturbanceBox, DisturbanceSignal, System};
use crate::error::{Error, Result};
use crate::monotone::MonotoneTable;
use crate::props::{Certificate, Property, PropertyReport, DELTA_MIN_FRACTION};
use crate::set::{distance, SetDescriptor, State};
use crate::sim;
use crate::verdict::{uniform_grid, Budget, Verdict, Witness};

pub const POPULATION: usize = 32;
pub const ELITE: usize = POPULATION / 4;
pub const RESTARTS: usize = 4;
/// Weight of the new elite statistics in each update.
const SMOOTHING: f64 = 0.7;
/// Proposal spread never shrinks below this fraction of its initial value.
const SPREAD_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// First entry time into `B_ε(A)`; non-entering candidates score
    /// `horizon + terminal distance`. `ε = 0` means membership in `A`.
    MaxEntryTime { set: SetDescriptor, eps: f64 },
    /// `sup_t ‖φ(t, x, d)‖_A`.
    MaxSupNorm { set: SetDescriptor },
}

/// Where initial states are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    Set(SetDescriptor),
    /// The open neighbourhood `B_r(A)`.
    Neighborhood { set: SetDescriptor, radius: f64 },
}

impl From<SetDescriptor> for Region {
    fn from(s: SetDescriptor) -> Self {
        Region::Set(s)
    }
}

impl Region {
    fn dim(&self) -> usize {
        match self {
            Region::Set(s) | Region::Neighborhood { set: s, .. } => s.dim(),
        }
    }

    fn project(&self, z: &mut [f64]) {
        match self {
            Region::Set(s) => {
                if !s.contains(z) {
                    let p = s.nearest_point(z).expect("dimension checked");
                    z.copy_from_slice(&p);
                }
            }
            Region::Neighborhood { set, radius } => {
                let p = set.nearest_point(z).expect("dimension checked");
                let gap = distance(z, &p);
                let limit = radius * (1.0 - 1e-9);
                if gap > limit {
                    let s = limit / gap;
                    for (zi, pi) in z.iter_mut().zip(&p) {
                        *zi = pi + (*zi - pi) * s;
                    }
                }
            }
        }
    }

    /// Centre and per-axis spread of the initial proposal.
    fn proposal(&self) -> (State, State) {
        let (set, grow) = match self {
            Region::Set(s) => (s, 0.0),
            Region::Neighborhood { set, radius } => (set, *radius),
        };
        let (lo, hi) = set.bounding_box();
        let centre = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let spread = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (b - a) + grow).collect();
        (centre, spread)
    }

    /// Points on the region's extent along each axis.
    fn axis_probes(&self) -> Vec<State> {
        let (centre, spread) = self.proposal();
        let mut out = Vec::new();
        for i in 0..centre.len() {
            for s in [1.0, -1.0] {
                let mut z = centre.clone();
                z[i] += s * spread[i];
                self.project(&mut z);
                out.push(z);
            }
        }
        out
    }
}

/// Piecewise-constant signals on `[0, horizon]` with step `step` in `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalTemplate {
    pub step: f64,
    pub horizon: f64,
    pub disturbance: DisturbanceBox,
}

impl SignalTemplate {
    fn segments(&self) -> usize {
        ((self.horizon / self.step).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchProblem {
    pub objective: Objective,
    pub region: Region,
    pub template: SignalTemplate,
    /// Total objective evaluations.
    pub evaluations: usize,
    pub seed: u64,
    pub tol: f64,
    /// Time grid points used for sup and entry detection.
    pub time_samples: usize,
}

impl SearchProblem {
    pub fn generations(&self) -> usize {
        self.evaluations / (POPULATION * RESTARTS)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub initial: State,
    pub signal: DisturbanceSignal,
    pub value: f64,
    /// Time at which `value` is attained.
    pub time: f64,
    /// Best value after each generation, across restarts.
    pub history: Vec<f64>,
    pub evaluations: usize,
}

impl SearchResult {
    pub fn witness(&self, what: impl Into<String>) -> Witness {
        Witness {
            initial: self.initial.clone(),
            signal: self.signal.clone(),
            time: self.time,
            value: self.value,
            what: what.into(),
        }
    }
}

struct Scored {
    x: State,
    d: Vec<f64>,
    value: f64,
    time: f64,
}

struct Evaluator<'a> {
    system: &'a System,
    problem: &'a SearchProblem,
    times: Vec<f64>,
    n: usize,
    m: usize,
}

impl Evaluator<'_> {
    fn signal(&self, flat: &[f64]) -> DisturbanceSignal {
        let values: Vec<Vec<f64>> = flat.chunks(self.m).map(|c| c.to_vec()).collect();
        let tail = values.last().cloned().unwrap_or_default();
        DisturbanceSignal {
            step: self.problem.template.step,
            values,
            tail,
        }
    }

    fn score(&self, x: &[f64], flat: &[f64]) -> Result<(f64, f64)> {
        let d = self.signal(flat);
        let horizon = self.problem.template.horizon;
        let tol = self.problem.tol;
        match &self.problem.objective {
            Objective::MaxEntryTime { set, eps } => {
                let s = sim::scan_entry(self.system, set, *eps, x, &d, &self.times, tol)?;
                Ok(match (s.entry, s.blow_up) {
                    (Some(t), _) => (t, t),
                    (None, Some(b)) => (horizon + BLOW_UP_GUARD, b),
                    (None, None) => (horizon + s.dist.last().copied().unwrap_or(0.0), horizon),
                })
            }
            Objective::MaxSupNorm { set } => {
                let tr = self.system.trajectory(x, &d, &self.times, tol)?;
                if let Some(b) = tr.blow_up {
                    return Ok((BLOW_UP_GUARD, b));
                }
                let mut best = (0.0, 0.0);
                for (k, s) in tr.states.iter().enumerate() {
                    let v = set.distance_unchecked(s);
                    if v > best.0 {
                        best = (v, self.times[k]);
                    }
                }
                Ok(best)
            }
        }
    }
}

fn validate(problem: &SearchProblem, system: &System) -> Result<()> {
    let set = match &problem.objective {
        Objective::MaxEntryTime { set, eps } => {
            if !(*eps >= 0.0) {
                return Err(Error::invalid("entry radius must be >= 0"));
            }
            set
        }
        Objective::MaxSupNorm { set } => set,
    };
    for dim in [set.dim(), problem.region.dim()] {
        if dim != system.dim() {
            return Err(Error::DimensionMismatch {
                expected: system.dim(),
                got: dim,
            });
        }
    }
    if let Region::Neighborhood { radius, .. } = problem.region {
        if !(radius > 0.0) {
            return Err(Error::invalid("search neighbourhood radius must be > 0"));
        }
    }
    let t = &problem.template;
    if !(t.step > 0.0) || !(t.horizon > 0.0) {
        return Err(Error::invalid("signal template needs step > 0 and horizon > 0"));
    }
    if t.disturbance.dim() != system.disturbance().dim() {
        return Err(Error::DimensionMismatch {
            expected: system.disturbance().dim(),
            got: t.disturbance.dim(),
        });
    }
    if problem.generations() == 0 {
        return Err(Error::invalid(format!(
            "search needs at least {} evaluations",
            POPULATION * RESTARTS
        )));
    }
    if problem.time_samples < 2 {
        return Err(Error::invalid("search needs at least 2 time samples"));
    }
    Ok(())
}

pub fn adversarial_search(problem: &SearchProblem, system: &System) -> Result<SearchResult> {
    validate(problem, system)?;
    let dbox = &problem.template.disturbance;
    let segments = problem.template.segments();
    let ev = Evaluator {
        system,
        problem,
        times: uniform_grid(problem.template.horizon, problem.time_samples),
        n: system.dim(),
        m: dbox.dim(),
    };
    let free_d = !dbox.is_degenerate();
    let d_centre: Vec<f64> = dbox.lower.iter().zip(&dbox.upper).map(|(a, b)| 0.5 * (a + b)).collect();
    let d_spread: Vec<f64> = dbox.lower.iter().zip(&dbox.upper).map(|(a, b)| 0.5 * (b - a)).collect();
    let (x_centre, x_spread) = problem.region.proposal();

    let mut rng = ChaCha8Rng::seed_from_u64(problem.seed);
    let mut best: Option<Scored> = None;
    let mut history = Vec::with_capacity(RESTARTS * problem.generations());
    let mut evaluations = 0;

    for restart in 0..RESTARTS {
        let mut x_mean = x_centre.clone();
        let mut x_std = x_spread.clone();
        if restart > 0 {
            for i in 0..ev.n {
                x_mean[i] += 0.5 * gauss(&mut rng) * x_spread[i];
            }
            problem.region.project(&mut x_mean);
        }
        let mut d_mean = Vec::with_capacity(segments * ev.m);
        for _ in 0..segments {
            let v = if restart == 0 { d_centre.clone() } else { dbox.uniform(&mut rng) };
            d_mean.extend(v);
        }
        let mut d_std: Vec<f64> = (0..segments).flat_map(|_| d_spread.iter().copied()).collect();

        for generation in 0..problem.generations() {
            let mut pop: Vec<(State, Vec<f64>)> = (0..POPULATION)
                .map(|_| {
                    let mut x: State = (0..ev.n)
                        .map(|i| x_mean[i] + x_std[i] * gauss(&mut rng))
                        .collect();
                    problem.region.project(&mut x);
                    let mut d: Vec<f64> = (0..d_mean.len())
                        .map(|k| d_mean[k] + d_std[k] * gauss(&mut rng))
                        .collect();
                    for seg in d.chunks_mut(ev.m.max(1)) {
                        dbox.clamp(seg);
                    }
                    (x, d)
                })
                .collect();
            if restart == 0 && generation == 0 {
                seed_probes(&mut pop, &problem.region, dbox, segments);
            }
            if let Some(b) = &best {
                pop[POPULATION - 1] = (b.x.clone(), b.d.clone());
            }
            let scored: Vec<Scored> = pop
                .into_par_iter()
                .map(|(x, d)| {
                    let (value, time) = ev.score(&x, &d)?;
                    Ok(Scored { x, d, value, time })
                })
                .collect::<Result<_>>()?;
            evaluations += scored.len();
            let mut order: Vec<usize> = (0..scored.len()).collect();
            order.sort_by(|a, b| scored[*b].value.total_cmp(&scored[*a].value).then(a.cmp(b)));
            let elite: Vec<&Scored> = order[..ELITE].iter().map(|k| &scored[*k]).collect();
            if best.as_ref().is_none_or(|b| elite[0].value > b.value) {
                let e = elite[0];
                best = Some(Scored {
                    x: e.x.clone(),
                    d: e.d.clone(),
                    value: e.value,
                    time: e.time,
                });
            }
            history.push(best.as_ref().expect("set above").value);
            update(&mut x_mean, &mut x_std, &x_spread, elite.iter().map(|s| s.x.as_slice()));
            if free_d {
                update(&mut d_mean, &mut d_std, &d_spread_full(&d_spread, segments), elite.iter().map(|s| s.d.as_slice()));
            }
        }
    }
    let b = best.expect("at least one generation ran");
    Ok(SearchResult {
        signal: ev.signal(&b.d),
        initial: b.x,
        value: b.value,
        time: b.time,
        history,
        evaluations,
    })
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn d_spread_full(spread: &[f64], segments: usize) -> Vec<f64> {
    (0..segments).flat_map(|_| spread.iter().copied()).collect()
}

/// Replaces the head of the first population with axis extremes of the
/// region paired with constant vertex signals.
fn seed_probes(pop: &mut [(State, Vec<f64>)], region: &Region, dbox: &DisturbanceBox, segments: usize) {
    let probes = region.axis_probes();
    let vertices = if dbox.is_degenerate() { 1 } else { dbox.vertex_count().min(8) };
    let slots = POPULATION / 2;
    let mut k = 0;
    'outer: for x in &probes {
        for v in 0..vertices {
            if k >= slots {
                break 'outer;
            }
            let vert = dbox.vertex(v);
            pop[k] = (x.clone(), (0..segments).flat_map(|_| vert.iter().copied()).collect());
            k += 1;
        }
    }
}

fn update<'a>(mean: &mut [f64], std: &mut [f64], initial: &[f64], elite: impl Iterator<Item = &'a [f64]> + Clone) {
    let count = elite.clone().count() as f64;
    for k in 0..mean.len() {
        let mu = elite.clone().map(|e| e[k]).sum::<f64>() / count;
        let var = elite.clone().map(|e| (e[k] - mu).powi(2)).sum::<f64>() / count;
        mean[k] = SMOOTHING * mu + (1.0 - SMOOTHING) * mean[k];
        std[k] = (SMOOTHING * var.sqrt() + (1.0 - SMOOTHING) * std[k]).max(SPREAD_FLOOR * initial[k]);
    }
}

fn template(system: &System, budget: &Budget, horizon: f64) -> SignalTemplate {
    SignalTemplate {
        step: budget.step.unwrap_or(horizon.max(1e-9) / 64.0),
        horizon,
        disturbance: system.disturbance(),
    }
}

fn problem(system: &System, budget: &Budget, objective: Objective, region: Region, horizon: f64, tag: u64) -> SearchProblem {
    SearchProblem {
        objective,
        region,
        template: template(system, budget, horizon),
        evaluations: budget.stress_evaluations.max(POPULATION * RESTARTS),
        seed: sim::mix(budget.seed, 0x5EA2C4 + tag),
        tol: budget.tol,
        time_samples: budget.time_samples.max(2),
    }
}

fn neighborhood(set: &SetDescriptor, radius: f64) -> Region {
    Region::Neighborhood {
        set: set.clone(),
        radius,
    }
}

/// Re-examines a report with adversarial search and either inflates its
/// certificates to cover what the search found or downgrades the verdict.
pub fn stress_verdict(report: &PropertyReport, system: &System, budget: &Budget) -> Result<PropertyReport> {
    if !report.verdict.is_supported() {
        return Ok(report.clone());
    }
    let mut out = report.clone();
    let set = report.set.clone();
    let horizon = report.verdict.budget.horizon;
    let mut tag = 0;
    let mut next = || {
        tag += 1;
        tag
    };
    let mut downgrade: Option<Verdict> = None;
    let mut inflated = 0usize;
    for cert in out.certificates.iter_mut() {
        match cert {
            Certificate::Tau { table, .. } => {
                stress_tau(system, budget, &set, table, horizon, &mut next, &mut inflated, &mut downgrade)?;
            }
            Certificate::Sigma { sigma, c } => {
                let rs = sigma.breakpoints().to_vec();
                let mut values = sigma.values().to_vec();
                for (k, r) in rs.iter().enumerate() {
                    if *r <= 0.0 {
                        continue;
                    }
                    let p = problem(system, budget, Objective::MaxSupNorm { set: set.clone() }, neighborhood(&set, *r), horizon, next());
                    let res = adversarial_search(&p, system)?;
                    if res.value >= BLOW_UP_GUARD {
                        downgrade = Some(Verdict::falsified(res.witness("stressed sup blew up"), budget, "adversarial search"));
                    } else if res.value > values[k] + *c {
                        values[k] = res.value - *c;
                        inflated += 1;
                    }
                }
                *sigma = MonotoneTable::k_infinity(rs, values)?;
            }
            Certificate::Delta { eps, h, delta } => {
                let hs = if h.is_empty() { vec![horizon] } else { h.clone() };
                for (i, e) in eps.iter().enumerate() {
                    for (j, hh) in hs.iter().enumerate() {
                        let cell = &mut delta[i * hs.len() + j];
                        let floor = e * DELTA_MIN_FRACTION;
                        loop {
                            let p = problem(system, budget, Objective::MaxSupNorm { set: set.clone() }, neighborhood(&set, *cell), *hh, next());
                            let res = adversarial_search(&p, system)?;
                            if res.value <= *e {
                                break;
                            }
                            *cell *= 0.5;
                            inflated += 1;
                            if *cell < floor {
                                downgrade = Some(Verdict::falsified(
                                    res.witness(format!("excursion above ε = {e} from below δ_min")),
                                    budget,
                                    "adversarial search",
                                ));
                                break;
                            }
                        }
                    }
                }
                enforce_delta_monotone(eps.len(), hs.len(), delta);
            }
            Certificate::Recurrence { r, tau } => {
                for (k, rr) in r.iter().enumerate() {
                    let region = Region::Set(SetDescriptor::ball(vec![0.0; system.dim()], *rr)?);
                    let p = problem(system, budget, Objective::MaxEntryTime { set: set.clone(), eps: 0.0 }, region, horizon, next());
                    let res = adversarial_search(&p, system)?;
                    if res.value > horizon {
                        downgrade = Some(non_entry(system, &set, &res, budget, horizon)?);
                    } else if res.value > tau[k] {
                        tau[k] = res.value;
                        inflated += 1;
                    }
                }
                for k in 1..tau.len() {
                    tau[k] = tau[k].max(tau[k - 1]);
                }
            }
            _ => {}
        }
    }
    out.audit.push(format!(
        "stressed with {} evaluations per cell; {inflated} certificate entries adjusted",
        budget.stress_evaluations.max(POPULATION * RESTARTS)
    ));
    if let Some(v) = downgrade {
        out.verdict = v.with_note(&format!("within horizon {horizon}"));
        out.certificates.clear();
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn stress_tau(
    system: &System,
    budget: &Budget,
    set: &SetDescriptor,
    table: &mut TauTable,
    horizon: f64,
    next: &mut impl FnMut() -> u64,
    inflated: &mut usize,
    downgrade: &mut Option<Verdict>,
) -> Result<()> {
    let (eps, rs) = (table.eps.clone(), table.r.clone());
    for (i, e) in eps.iter().enumerate() {
        for (j, r) in rs.iter().enumerate() {
            if *r <= 0.0 {
                continue;
            }
            let p = problem(
                system,
                budget,
                Objective::MaxEntryTime { set: set.clone(), eps: *e },
                neighborhood(set, *r),
                horizon,
                next(),
            );
            let res = adversarial_search(&p, system)?;
            if res.value > horizon {
                *downgrade = Some(non_entry(system, set, &res, budget, horizon)?);
            } else if res.value > table.at(i, j) {
                table.inflate(i, j, res.value)?;
                *inflated += 1;
            }
        }
    }
    Ok(())
}

/// Verdict for a stressed candidate that never entered.
fn non_entry(system: &System, set: &SetDescriptor, res: &SearchResult, budget: &Budget, horizon: f64) -> Result<Verdict> {
    let w = res.witness("no entry within the horizon");
    if res.value >= horizon + BLOW_UP_GUARD {
        return Ok(Verdict::falsified(
            sim::blow_up_witness(&res.initial, &res.signal, res.time, "stressed candidate"),
            budget,
            "adversarial search",
        ));
    }
    let times = uniform_grid(horizon, budget.time_samples.max(2));
    let tr = system.trajectory(&res.initial, &res.signal, &times, budget.tol)?;
    let dist = sim::distances(set, &tr);
    if sim::diverges(&times, &dist) {
        Ok(Verdict::falsified(w, budget, "adversarial search: divergent"))
    } else {
        let mut v = Verdict::inconclusive(budget, "adversarial search found a pair that does not enter within the horizon");
        v.witness = Some(w);
        Ok(v)
    }
}

/// Lowers entries so `δ` is nondecreasing in `ε` and nonincreasing in `h`.
pub(crate) fn enforce_delta_monotone(ne: usize, nh: usize, delta: &mut [f64]) {
    for j in 0..nh {
        for i in (0..ne.saturating_sub(1)).rev() {
            delta[i * nh + j] = delta[i * nh + j].min(delta[(i + 1) * nh + j]);
        }
    }
    for i in 0..ne {
        for j in 1..nh {
            delta[i * nh + j] = delta[i * nh + j].min(delta[i * nh + j - 1]);
        }
    }
}

/// Property whose certificates [`stress_verdict`] knows how to stress.
pub fn stressable(p: Property) -> bool {
    matches!(
        p,
        Property::Lagrange
            | Property::Uls
            | Property::UniformWeakAttractive
            | Property::Ugatt
            | Property::RobustInvariant
            | Property::UniformlyGloballyRecurrent
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::builtin::{scalar_nonuniform, scalar_stable};

    fn entry_problem(system: &System, evaluations: usize, horizon: f64) -> SearchProblem {
        SearchProblem {
            objective: Objective::MaxEntryTime {
                set: SetDescriptor::origin(1),
                eps: 0.1,
            },
            region: Region::Set(SetDescriptor::ball(vec![0.0], 1.0).unwrap()),
            template: SignalTemplate {
                step: horizon / 16.0,
                horizon,
                disturbance: system.disturbance(),
            },
            evaluations,
            seed: 7,
            tol: 1e-9,
            time_samples: 129,
        }
    }

    #[test]
    fn boundary_is_the_worst_start_for_a_contraction() {
        let sys = scalar_stable();
        let r = adversarial_search(&entry_problem(&sys, 256, 10.0), &sys).unwrap();
        assert!((r.value - 10f64.ln()).abs() < 0.02 * 10f64.ln());
        assert!((r.initial[0].abs() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn max_disturbance_slows_the_nonuniform_decay() {
        let sys = scalar_nonuniform(9.0).unwrap();
        let r = adversarial_search(&entry_problem(&sys, 256, 40.0), &sys).unwrap();
        let expect = 10.0 * 10f64.ln();
        assert!((r.value - expect).abs() < 0.02 * expect, "{}", r.value);
        assert!(r.signal.values.iter().all(|v| v[0].abs() > 8.5));
    }

    #[test]
    fn history_is_monotone_and_search_is_deterministic() {
        let sys = scalar_nonuniform(9.0).unwrap();
        let p = entry_problem(&sys, 512, 40.0);
        let a = adversarial_search(&p, &sys).unwrap();
        let b = adversarial_search(&p, &sys).unwrap();
        assert_eq!(a, b);
        assert!(a.history.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(a.evaluations, 512);
    }

    #[test]
    fn too_small_budget_is_rejected() {
        let sys = scalar_stable();
        assert!(adversarial_search(&entry_problem(&sys, 64, 10.0), &sys).is_err());
    }

    #[test]
    fn delta_projection_is_monotone() {
        let mut d = vec![0.5, 0.4, 0.2, 0.3];
        enforce_delta_monotone(2, 2, &mut d);
        assert_eq!(d, vec![0.2, 0.2, 0.2, 0.2]);
    }
}
