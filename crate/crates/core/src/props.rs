//! Checkers for the stability predicates and the equivalence cross-checks.
//!
//! Every check samples initial states from `B_r(A)` and disturbance signals
//! from the budget's signal family, so a `SupportedUpTo` verdict only states
//! that no violation was found within that budget and horizon.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::{kl_envelope, lagrange_sigma, smooth_tau, validate_envelope, TauTable};
use crate::dynamics::{System, TrajectoryBatch};
use crate::error::{Error, Result};
use crate::kl::KLEnvelope;
use crate::monotone::{Direction, MonotoneGrid, MonotoneTable};
use crate::reach::{a_eps, estimate_rfc_around, RfcEnvelope};
use crate::search::{enforce_delta_monotone, stress_verdict};
use crate::set::{SetDescriptor, State};
use crate::sim;
use crate::verdict::{conjunction, Budget, Status, Verdict, Witness, SEMANTICS_NOTE};

/// `δ_min = ε · DELTA_MIN_FRACTION` ends the δ bracketing.
pub const DELTA_MIN_FRACTION: f64 = 1.0 / 65536.0;
/// Entry radius used by recurrence checks on sets without interior.
pub const WRAP_EPS: f64 = 0.1;
/// Smallest candidate bound tried by the ultimate boundedness check.
pub const K_MIN: f64 = 1.0 / 1024.0;
/// Tolerance on `A` staying in `A` in the invariance pre-check.
pub const INVARIANCE_TOL: f64 = 1e-6;
/// Pass fraction at which a fitted envelope counts as validated.
pub const ENVELOPE_PASS: f64 = 0.99;

pub const DEFAULT_EPS: [f64; 3] = [0.1, 0.25, 0.5];
pub const DEFAULT_R: [f64; 4] = [0.5, 1.0, 2.0, 4.0];
pub const DEFAULT_H: [f64; 2] = [1.0, 5.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Property {
    Lagrange,
    #[serde(rename = "ULS")]
    Uls,
    #[serde(rename = "UGS")]
    Ugs,
    #[serde(rename = "UGAS")]
    Ugas,
    #[serde(rename = "pUGAS")]
    PUgas,
    WeakAttractive,
    UniformWeakAttractive,
    #[serde(rename = "UGATT")]
    Ugatt,
    UniformUltimateBounded,
    RobustInvariant,
    GloballyRecurrent,
    UniformlyGloballyRecurrent,
    #[serde(rename = "RFC")]
    Rfc,
}

impl Property {
    pub const ALL: [Property; 13] = [
        Property::Lagrange,
        Property::Uls,
        Property::Ugs,
        Property::Ugas,
        Property::PUgas,
        Property::WeakAttractive,
        Property::UniformWeakAttractive,
        Property::Ugatt,
        Property::UniformUltimateBounded,
        Property::RobustInvariant,
        Property::GloballyRecurrent,
        Property::UniformlyGloballyRecurrent,
        Property::Rfc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Lagrange => "Lagrange",
            Property::Uls => "ULS",
            Property::Ugs => "UGS",
            Property::Ugas => "UGAS",
            Property::PUgas => "pUGAS",
            Property::WeakAttractive => "WeakAttractive",
            Property::UniformWeakAttractive => "UniformWeakAttractive",
            Property::Ugatt => "UGATT",
            Property::UniformUltimateBounded => "UniformUltimateBounded",
            Property::RobustInvariant => "RobustInvariant",
            Property::GloballyRecurrent => "GloballyRecurrent",
            Property::UniformlyGloballyRecurrent => "UniformlyGloballyRecurrent",
            Property::Rfc => "RFC",
        }
    }

    /// Case-insensitive lookup by name.
    pub fn parse(s: &str) -> Result<Property> {
        Property::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown property `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// `sup_t ‖φ‖_A ≤ σ(‖x‖_A) + c`.
    Sigma { sigma: MonotoneTable, c: f64 },
    /// `δ(ε, h)` row-major in `ε`; an empty `h` means the budget horizon.
    Delta { eps: Vec<f64>, h: Vec<f64>, delta: Vec<f64> },
    Tau { table: TauTable, re_exits: usize },
    /// Trajectories from `B_r` stay within `K` after `T(r)`.
    UltimateBound { k: f64, r: Vec<f64>, t: Vec<f64> },
    /// Entry into `A` from `‖x‖ ≤ R` within `τ(R)`.
    Recurrence { r: Vec<f64>, tau: Vec<f64> },
    Entry { eps: f64, r: f64, max_time: f64 },
    Envelope { envelope: KLEnvelope, pass_fraction: f64 },
    Rfc { mu: MonotoneGrid },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: Property,
    #[serde(flatten)]
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<Certificate>,
    pub set: SetDescriptor,
    #[serde(default)]
    pub audit: Vec<String>,
}

impl PropertyReport {
    /// Certificates are dropped unless the verdict is supported.
    pub fn new(property: Property, set: &SetDescriptor, verdict: Verdict, certificates: Vec<Certificate>) -> Self {
        let certificates = if verdict.is_supported() { certificates } else { Vec::new() };
        PropertyReport {
            property,
            verdict,
            certificates,
            set: set.clone(),
            audit: vec![SEMANTICS_NOTE.to_string()],
        }
    }

    pub fn status(&self) -> Status {
        self.verdict.status
    }

    pub fn tau(&self) -> Option<&TauTable> {
        self.certificates.iter().find_map(|c| match c {
            Certificate::Tau { table, .. } => Some(table),
            _ => None,
        })
    }

    pub fn sigma(&self) -> Option<(&MonotoneTable, f64)> {
        self.certificates.iter().find_map(|c| match c {
            Certificate::Sigma { sigma, c } => Some((sigma, *c)),
            _ => None,
        })
    }

    pub fn delta(&self) -> Option<(&[f64], &[f64], &[f64])> {
        self.certificates.iter().find_map(|c| match c {
            Certificate::Delta { eps, h, delta } => Some((eps.as_slice(), h.as_slice(), delta.as_slice())),
            _ => None,
        })
    }

    pub fn envelope(&self) -> Option<(&KLEnvelope, f64)> {
        self.certificates.iter().find_map(|c| match c {
            Certificate::Envelope { envelope, pass_fraction } => Some((envelope, *pass_fraction)),
            _ => None,
        })
    }

    fn audit(mut self, line: impl Into<String>) -> Self {
        self.audit.push(line.into());
        self
    }
}

/// Disturbance scalings applied when checking robustness to large `D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSweep {
    pub factors: Vec<f64>,
    /// `δ` shrinking by at least this factor across the sweep falsifies.
    pub shrink: f64,
}

impl Default for RobustnessSweep {
    fn default() -> Self {
        RobustnessSweep {
            factors: vec![1.0, 10.0, 100.0],
            shrink: 5.0,
        }
    }
}

fn check_grid(g: &[f64], what: &str, allow_zero: bool) -> Result<()> {
    let ok_first = g.first().is_some_and(|v| if allow_zero { *v >= 0.0 } else { *v > 0.0 });
    if !ok_first || g.windows(2).any(|w| !(w[1] > w[0])) || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("{what} grid must be nonempty, positive and strictly increasing")));
    }
    Ok(())
}

fn check_dims(system: &System, set: &SetDescriptor) -> Result<()> {
    if set.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: set.dim(),
        });
    }
    Ok(())
}

fn horizon_note(h: f64) -> String {
    format!("within horizon {h}")
}

/// Witness for a divergent sampled trajectory, evaluated at its last state.
fn divergence_witness(x: &[f64], d: &crate::dynamics::DisturbanceSignal, time: f64, value: f64) -> Witness {
    Witness {
        initial: x.to_vec(),
        signal: d.clone(),
        time,
        value,
        what: "distance to A doubles over each halving of the horizon".into(),
    }
}

/// Batches from `B_r(A)` for every `r`, sharing one signal set.
fn batches(system: &System, set: &SetDescriptor, r_grid: &[f64], budget: &Budget, horizon: f64, tag: u64) -> Result<Vec<TrajectoryBatch>> {
    let sigs = sim::signals(system, budget, horizon, sim::mix(budget.seed, tag))?;
    let times = sim::grid(budget, horizon);
    r_grid
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let initial = initial_states(set, *r, budget.samples.max(1), sim::mix(budget.seed, tag + 1 + i as u64))?;
            TrajectoryBatch::simulate(system, initial, sigs.clone(), times.clone(), budget.tol)
        })
        .collect()
}

/// `B_r(A)` samples, or samples of `A` itself when `r = 0`.
fn initial_states(set: &SetDescriptor, r: f64, count: usize, seed: u64) -> Result<Vec<State>> {
    if r > 0.0 {
        sim::neighborhood(set, r, count, seed)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(set.sample_inside(count, &mut rng))
    }
}

/// Blow-up or doubling divergence in a batch, measured by `‖·‖_A`.
fn divergent(batch: &TrajectoryBatch, set: &SetDescriptor) -> Option<Witness> {
    for (x, d, tr) in batch.iter() {
        if let Some(b) = tr.blow_up {
            return Some(sim::blow_up_witness(x, d, b, "sampled trajectory"));
        }
    }
    for (x, d, tr) in batch.iter() {
        let dist = sim::distances(set, tr);
        if sim::diverges(&batch.times, &dist) {
            let t = *batch.times.last().expect("nonempty grid");
            return Some(divergence_witness(x, d, t, *dist.last().expect("nonempty")));
        }
    }
    None
}

struct EntryStats {
    /// Max first entry, `inf` if some pair never entered; row-major in `ε`.
    first: Vec<f64>,
    /// Max time after which the pair stays inside; `inf` if outside at the horizon.
    last: Vec<f64>,
    re_exits: usize,
    divergent: Option<Witness>,
}

fn entry_stats(
    system: &System,
    set: &SetDescriptor,
    eps_grid: &[f64],
    r_grid: &[f64],
    budget: &Budget,
    tag: u64,
) -> Result<EntryStats> {
    let ne = eps_grid.len();
    let nr = r_grid.len();
    let mut first = vec![0.0f64; ne * nr];
    let mut last = vec![0.0f64; ne * nr];
    let mut re_exits = 0;
    let mut witness = None;
    let all = batches(system, set, r_grid, budget, budget.horizon, tag)?;
    for (j, batch) in all.iter().enumerate() {
        if witness.is_none() {
            witness = divergent(batch, set);
        }
        let per: Vec<Vec<(f64, f64)>> = batch
            .trajectories
            .par_iter()
            .enumerate()
            .map(|(k, tr)| {
                let d = &batch.signals[k % batch.signals.len()];
                let dist = sim::distances(set, tr);
                eps_grid
                    .iter()
                    .map(|e| {
                        let p = sim::passage(system, set, *e, d, &batch.times, tr, &dist, budget.tol)?;
                        Ok((p.first_entry.unwrap_or(f64::INFINITY), p.last_entry.unwrap_or(f64::INFINITY)))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for row in per {
            for (i, (f, l)) in row.into_iter().enumerate() {
                let c = i * nr + j;
                first[c] = first[c].max(f);
                last[c] = last[c].max(l);
                if f.is_finite() && l > f {
                    re_exits += 1;
                }
            }
        }
    }
    Ok(EntryStats {
        first,
        last,
        re_exits,
        divergent: witness,
    })
}

/// Max over sampled pairs of `sup_t ‖φ‖_A`, with the maximizing witness.
fn sup_excursion(system: &System, set: &SetDescriptor, r: f64, horizon: f64, budget: &Budget, tag: u64) -> Result<(f64, Option<Witness>)> {
    let initial = initial_states(set, r, budget.samples.max(1), sim::mix(budget.seed, tag))?;
    let batch = sim::batch(system, initial, budget, horizon, sim::mix(budget.seed, tag + 1))?;
    let mut best = (0.0f64, None);
    for (x, d, tr) in batch.iter() {
        if let Some(b) = tr.blow_up {
            return Ok((f64::INFINITY, Some(sim::blow_up_witness(x, d, b, "excursion"))));
        }
        for (k, s) in tr.states.iter().enumerate() {
            let v = set.distance_unchecked(s);
            if v > best.0 {
                best = (
                    v,
                    Some(Witness {
                        initial: x.clone(),
                        signal: d.clone(),
                        time: batch.times[k],
                        value: v,
                        what: format!("excursion from B_{r}(A)"),
                    }),
                );
            }
        }
    }
    Ok(best)
}

/// Largest bracketed `δ ≤ ε` whose excursions over `[0, horizon]` stay
/// below `ε`; otherwise the violating witness at `δ_min`.
fn largest_delta(
    system: &System,
    set: &SetDescriptor,
    eps: f64,
    horizon: f64,
    budget: &Budget,
    tag: u64,
) -> Result<std::result::Result<f64, Witness>> {
    let floor = eps * DELTA_MIN_FRACTION;
    let mut delta = eps;
    let mut level = 0u64;
    loop {
        let (sup, w) = sup_excursion(system, set, delta, horizon, budget, tag + 2 * level)?;
        if sup <= eps {
            break;
        }
        delta *= 0.5;
        level += 1;
        if delta < floor {
            return Ok(Err(w.expect("an excursion above ε has a witness")));
        }
    }
    if level > 0 {
        for k in (1..4).rev() {
            let cand = delta * 2f64.powf(k as f64 / 4.0);
            let (sup, _) = sup_excursion(system, set, cand, horizon, budget, tag + 1000 + k)?;
            if sup <= eps {
                delta = cand;
                break;
            }
        }
    }
    Ok(Ok(delta))
}

pub fn check_lagrange(system: &System, set: &SetDescriptor, r_grid: &[f64], budget: &Budget) -> Result<PropertyReport> {
    check_grid(r_grid, "r", false)?;
    check_dims(system, set)?;
    let h = budget.horizon;
    let mut rs = vec![0.0];
    rs.extend_from_slice(r_grid);
    let all = batches(system, set, &rs, budget, h, 40)?;
    let mut sups = Vec::with_capacity(rs.len());
    for batch in &all {
        if let Some(w) = divergent(batch, set) {
            let v = Verdict::falsified(w, budget, horizon_note(h));
            return Ok(PropertyReport::new(Property::Lagrange, set, v, vec![]));
        }
        let s = batch
            .trajectories
            .iter()
            .flat_map(|tr| tr.states.iter())
            .map(|x| set.distance_unchecked(x))
            .fold(0.0f64, f64::max);
        sups.push(s);
    }
    let mu = RfcEnvelope {
        mu: MonotoneGrid::new(rs.clone(), vec![h], sups, Direction::NonDecreasing, Direction::NonDecreasing)?,
        verdict: Verdict::supported(budget, ""),
    };
    let eps: Vec<f64> = r_grid.iter().map(|r| r / 2.0).collect();
    let tau = TauTable::from_fn(eps, r_grid.to_vec(), |_, _| h)?;
    let ls = lagrange_sigma(&mu, &tau, r_grid)?;
    let mut report = PropertyReport::new(
        Property::Lagrange,
        set,
        Verdict::supported(budget, horizon_note(h)),
        vec![Certificate::Sigma {
            sigma: ls.sigma,
            c: ls.c,
        }],
    );
    for f in ls.flags {
        report = report.audit(f);
    }
    Ok(report)
}

pub fn check_uls(system: &System, set: &SetDescriptor, eps_grid: &[f64], budget: &Budget) -> Result<PropertyReport> {
    delta_report(Property::Uls, system, set, eps_grid, &[], None, budget)
}

/// ULS with a falsifying sweep over scaled disturbance boxes.
pub fn check_uls_sweep(
    system: &System,
    set: &SetDescriptor,
    eps_grid: &[f64],
    sweep: &RobustnessSweep,
    budget: &Budget,
) -> Result<PropertyReport> {
    delta_report(Property::Uls, system, set, eps_grid, &[], Some(sweep), budget)
}

pub fn check_robust_invariance(
    system: &System,
    set: &SetDescriptor,
    eps_grid: &[f64],
    h_grid: &[f64],
    sweep: Option<&RobustnessSweep>,
    budget: &Budget,
) -> Result<PropertyReport> {
    check_grid(h_grid, "h", false)?;
    check_dims(system, set)?;
    let h_max = *h_grid.last().expect("checked");
    let mut rng = ChaCha8Rng::seed_from_u64(sim::mix(budget.seed, 60));
    let inside = set.sample_inside(budget.samples.clamp(1, 32), &mut rng);
    let batch = sim::batch(system, inside, budget, h_max, sim::mix(budget.seed, 61))?;
    let slack = INVARIANCE_TOL + 2.0 * budget.tol * h_max;
    for tr in &batch.trajectories {
        let escaped = tr.blow_up.is_some() || tr.states.iter().any(|x| set.distance_unchecked(x) > slack);
        if escaped {
            let v = Verdict::inconclusive(budget, "A not invariant");
            return Ok(PropertyReport::new(Property::RobustInvariant, set, v, vec![]));
        }
    }
    delta_report(Property::RobustInvariant, system, set, eps_grid, h_grid, sweep, budget)
}

fn delta_report(
    property: Property,
    system: &System,
    set: &SetDescriptor,
    eps_grid: &[f64],
    h_grid: &[f64],
    sweep: Option<&RobustnessSweep>,
    budget: &Budget,
) -> Result<PropertyReport> {
    check_grid(eps_grid, "ε", false)?;
    check_dims(system, set)?;
    let hs: Vec<f64> = if h_grid.is_empty() { vec![budget.horizon] } else { h_grid.to_vec() };
    let mut delta = vec![0.0; eps_grid.len() * hs.len()];
    let mut audit = Vec::new();
    for (i, e) in eps_grid.iter().enumerate() {
        for (j, h) in hs.iter().enumerate() {
            let tag = 100 + 10_000 * (i * hs.len() + j) as u64;
            match largest_delta(system, set, *e, *h, budget, tag)? {
                Ok(d) => delta[i * hs.len() + j] = d,
                Err(w) => {
                    let v = Verdict::falsified(w, budget, format!("no δ ≥ {} keeps excursions below ε = {e} up to t = {h}", e * DELTA_MIN_FRACTION));
                    return Ok(PropertyReport::new(property, set, v, vec![]));
                }
            }
            if let (Some(sw), false) = (sweep, system.is_linear()) {
                let mut ds = Vec::with_capacity(sw.factors.len());
                let mut worst: Option<(f64, Witness)> = None;
                for (k, f) in sw.factors.iter().enumerate() {
                    let scaled = system.scaled_disturbance(*f)?;
                    let r = largest_delta(&scaled, set, *e, *h, budget, tag + 5000 + 100 * k as u64)?;
                    match r {
                        Ok(d) => ds.push(d),
                        Err(w) => {
                            ds.push(0.0);
                            worst.get_or_insert((*f, w));
                        }
                    }
                }
                audit.push(format!("δ(ε = {e}, h = {h}) across D scalings {:?}: {ds:?}", sw.factors));
                let first = ds[0];
                let min = ds.iter().copied().fold(f64::INFINITY, f64::min);
                if first > 0.0 && first >= sw.shrink * min {
                    let (factor, w) = match worst {
                        Some(fw) => fw,
                        None => {
                            let k = ds.iter().position(|d| *d == min).expect("min is attained");
                            let scaled = system.scaled_disturbance(sw.factors[k])?;
                            let (sup, w) = sup_excursion(&scaled, set, first, *h, budget, tag + 9000)?;
                            if sup <= *e {
                                audit.push(format!("sweep shrink seen but no excursion above ε replays at δ = {first}"));
                                continue;
                            }
                            (sw.factors[k], w.expect("excursion witness"))
                        }
                    };
                    let mut w = w;
                    w.what = format!("{} (disturbance box scaled by {factor})", w.what);
                    let v = Verdict::falsified(
                        w,
                        budget,
                        format!("δ shrinks by ≥ {} as D grows: not robust to large disturbances", sw.shrink),
                    );
                    let mut r = PropertyReport::new(property, set, v, vec![]);
                    r.audit.extend(audit);
                    return Ok(r);
                }
            }
        }
    }
    enforce_delta_monotone(eps_grid.len(), hs.len(), &mut delta);
    let v = Verdict::supported(budget, horizon_note(*hs.last().expect("nonempty")));
    let mut r = PropertyReport::new(
        property,
        set,
        v,
        vec![Certificate::Delta {
            eps: eps_grid.to_vec(),
            h: h_grid.to_vec(),
            delta,
        }],
    );
    r.audit.extend(audit);
    Ok(r)
}

pub fn check_ugs(system: &System, set: &SetDescriptor, budget: &Budget) -> Result<PropertyReport> {
    check_ugs_on(system, set, &DEFAULT_EPS, &DEFAULT_R, None, budget)
}

/// UGS as ULS ∧ Lagrange, with `σ` tightened near zero by the `δ` table.
pub fn check_ugs_on(
    system: &System,
    set: &SetDescriptor,
    eps_grid: &[f64],
    r_grid: &[f64],
    sweep: Option<&RobustnessSweep>,
    budget: &Budget,
) -> Result<PropertyReport> {
    let uls = match sweep {
        Some(s) => check_uls_sweep(system, set, eps_grid, s, budget)?,
        None => check_uls(system, set, eps_grid, budget)?,
    };
    let lag = check_lagrange(system, set, r_grid, budget)?;
    Ok(combine_ugs(set, &uls, &lag, budget))
}

pub(crate) fn combine_ugs(set: &SetDescriptor, uls: &PropertyReport, lag: &PropertyReport, budget: &Budget) -> PropertyReport {
    let verdict = conjunction([&uls.verdict, &lag.verdict], budget);
    let audit = format!(
        "UGS = ULS ∧ Lagrange: ULS {:?}, Lagrange {:?}",
        uls.verdict.status, lag.verdict.status
    );
    let mut certs = Vec::new();
    if let (Some((sigma, c)), Some((eps, _, delta))) = (lag.sigma(), uls.delta()) {
        let nh = delta.len() / eps.len();
        let rs = sigma.breakpoints().to_vec();
        let values = rs
            .iter()
            .map(|r| {
                let from_delta = eps
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| delta[i * nh] >= *r)
                    .map(|(_, e)| *e)
                    .fold(f64::INFINITY, f64::min);
                (sigma.eval(*r) + c).min(from_delta)
            })
            .collect();
        if let Ok(s) = MonotoneTable::k_infinity(rs, values) {
            certs.push(Certificate::Sigma { sigma: s, c: 0.0 });
        }
    }
    let report = PropertyReport::new(Property::Ugs, set, verdict, certs).audit(audit);
    debug_assert!(!report.verdict.is_supported() || (uls.verdict.is_supported() && lag.verdict.is_supported()));
    report
}

/// First entry into `B_ε(A)` from `B_r(A)`; `r` selects the sampled ball.
pub fn check_weak_attractivity(system: &System, set: &SetDescriptor, eps: f64, r: f64, budget: &Budget) -> Result<PropertyReport> {
    if !(eps > 0.0) || !(r > 0.0) {
        return Err(Error::invalid("weak attractivity needs ε > 0 and r > 0"));
    }
    check_dims(system, set)?;
    let h = budget.horizon;
    let (max_time, failure) = entry_scan(system, set, eps, set, r, budget, 20)?;
    let v = match failure {
        None => Verdict::supported(budget, horizon_note(h)),
        Some(f) => f.with_note(&horizon_note(h)),
    };
    Ok(PropertyReport::new(
        Property::WeakAttractive,
        set,
        v,
        vec![Certificate::Entry { eps, r, max_time }],
    ))
}

/// Max entry time over pairs from `B_r(source)`; on a non-entering pair
/// returns Falsified (blow-up or divergence) or Inconclusive.
fn entry_scan(
    system: &System,
    set: &SetDescriptor,
    eps: f64,
    source: &SetDescriptor,
    r: f64,
    budget: &Budget,
    tag: u64,
) -> Result<(f64, Option<Verdict>)> {
    let h = budget.horizon;
    let initial = sim::neighborhood(source, r, budget.samples.max(1), sim::mix(budget.seed, tag))?;
    let sigs = sim::signals(system, budget, h, sim::mix(budget.seed, tag + 1))?;
    let times = sim::grid(budget, h);
    let ns = sigs.len();
    let scans = (0..initial.len() * ns)
        .into_par_iter()
        .map(|k| sim::scan_entry(system, set, eps, &initial[k / ns], &sigs[k % ns], &times, budget.tol))
        .collect::<Result<Vec<_>>>()?;
    let mut max_time = 0.0f64;
    let mut stuck = None;
    for (k, s) in scans.iter().enumerate() {
        let (x, d) = (&initial[k / ns], &sigs[k % ns]);
        match (s.entry, s.blow_up) {
            (Some(t), _) => max_time = max_time.max(t),
            (None, Some(b)) => {
                let w = sim::blow_up_witness(x, d, b, "non-entering pair");
                return Ok((max_time, Some(Verdict::falsified(w, budget, ""))));
            }
            (None, None) => {
                if sim::diverges(&times, &s.dist) {
                    let w = divergence_witness(x, d, h, *s.dist.last().expect("full scan"));
                    return Ok((max_time, Some(Verdict::falsified(w, budget, ""))));
                }
                stuck.get_or_insert(k);
            }
        }
    }
    let failure = stuck.map(|k| {
        Verdict::inconclusive(
            budget,
            format!("pair {k} does not enter B_{eps}(A) within the horizon and is not provably divergent"),
        )
    });
    Ok((max_time, failure))
}

pub fn estimate_tau_uniform_weak(
    system: &System,
    set: &SetDescriptor,
    eps_grid: &[f64],
    r_grid: &[f64],
    budget: &Budget,
) -> Result<PropertyReport> {
    check_grid(eps_grid, "ε", false)?;
    check_grid(r_grid, "r", false)?;
    check_dims(system, set)?;
    let stats = entry_stats(system, set, eps_grid, r_grid, budget, 200)?;
    weak_from_stats(system, set, eps_grid, r_grid, &stats, budget)
}

fn weak_from_stats(
    system: &System,
    set: &SetDescriptor,
    eps_grid: &[f64],
    r_grid: &[f64],
    stats: &EntryStats,
    budget: &Budget,
) -> Result<PropertyReport> {
    let h = budget.horizon;
    if let Some(w) = &stats.divergent {
        let v = Verdict::falsified(w.clone(), budget, horizon_note(h));
        return Ok(PropertyReport::new(Property::UniformWeakAttractive, set, v, vec![]));
    }
    if stats.first.iter().any(|t| !t.is_finite()) {
        let v = Verdict::inconclusive(budget, format!("some sampled pair does not enter within horizon {h}"));
        return Ok(PropertyReport::new(Property::UniformWeakAttractive, set, v, vec![]));
    }
    let table = TauTable::from_raw(eps_grid.to_vec(), r_grid.to_vec(), stats.first.clone())?;
    let report = PropertyReport::new(
        Property::UniformWeakAttractive,
        set,
        Verdict::supported(budget, horizon_note(h)),
        vec![Certificate::Tau { table, re_exits: 0 }],
    );
    if budget.stress_evaluations > 0 {
        stress_verdict(&report, system, budget)
    } else {
        Ok(report)
    }
}

/// `τ(ε, r)` as the max of the last entry and the stressed first entry.
pub fn estimate_tau_ugatt(
    system: &System,
    set: &SetDescriptor,
    eps_grid: &[f64],
    r_grid: &[f64],
    budget: &Budget,
) -> Result<PropertyReport> {
    check_grid(eps_grid, "ε", false)?;
    check_grid(r_grid, "r", false)?;
    check_dims(system, set)?;
    let h = budget.horizon;
    let stats = entry_stats(system, set, eps_grid, r_grid, budget, 200)?;
    let weak = weak_from_stats(system, set, eps_grid, r_grid, &stats, budget)?;
    let cap_note = format!("re-exits after the horizon cap {h} are not observed");
    if !weak.verdict.is_supported() {
        let mut r = PropertyReport::new(Property::Ugatt, set, weak.verdict.clone(), vec![]);
        r.audit.push(cap_note);
        return Ok(r);
    }
    if stats.last.iter().any(|t| !t.is_finite()) {
        let v = Verdict::inconclusive(budget, format!("some sampled pair is outside B_ε(A) at the horizon {h}"));
        return Ok(PropertyReport::new(Property::Ugatt, set, v, vec![]).audit(cap_note));
    }
    let weak_tau = weak.tau().expect("supported weak report has τ");
    let nr = r_grid.len();
    let raw = (0..stats.last.len())
        .map(|c| stats.last[c].max(weak_tau.at(c / nr, c % nr)))
        .collect();
    let table = TauTable::from_raw(eps_grid.to_vec(), r_grid.to_vec(), raw)?;
    let v = Verdict::supported(budget, horizon_note(h));
    Ok(PropertyReport::new(
        Property::Ugatt,
        set,
        v,
        vec![Certificate::Tau {
            table,
            re_exits: stats.re_exits,
        }],
    )
    .audit(format!("{} re-exit events observed", stats.re_exits))
    .audit(cap_note))
}

/// Smallest bracketed `K` such that trajectories from `‖x‖ < r` stay
/// within `K` of the origin after `T(r) ≤ H/2`.
pub fn check_uniform_ultimate_boundedness(system: &System, r_grid: &[f64], budget: &Budget) -> Result<PropertyReport> {
    check_grid(r_grid, "r", false)?;
    let origin = SetDescriptor::origin(system.dim());
    let h = budget.horizon;
    let all = batches(system, &origin, r_grid, budget, h, 300)?;
    for batch in &all {
        if let Some(w) = divergent(batch, &origin) {
            let v = Verdict::falsified(w, budget, horizon_note(h));
            return Ok(PropertyReport::new(Property::UniformUltimateBounded, &origin, v, vec![]));
        }
    }
    let dists: Vec<Vec<Vec<f64>>> = all
        .iter()
        .map(|b| b.trajectories.iter().map(|tr| sim::distances(&origin, tr)).collect())
        .collect();
    let times = &all[0].times;
    let settle = |k: f64| -> Vec<f64> {
        dists
            .iter()
            .map(|rows| {
                rows.iter()
                    .map(|d| match d.iter().rposition(|v| *v > k) {
                        None => 0.0,
                        Some(i) if i + 1 < times.len() => times[i + 1],
                        Some(_) => f64::INFINITY,
                    })
                    .fold(0.0, f64::max)
            })
            .collect()
    };
    let works = |k: f64| settle(k).iter().all(|t| *t <= 0.5 * h);
    let sup = dists.iter().flatten().flatten().copied().fold(0.0f64, f64::max);
    let mut k = 2f64.powi(sup.max(K_MIN).log2().ceil() as i32);
    if !works(k) {
        let v = Verdict::inconclusive(budget, "no candidate bound settles within half the horizon");
        return Ok(PropertyReport::new(Property::UniformUltimateBounded, &origin, v, vec![]));
    }
    while k * 0.5 >= K_MIN && works(k * 0.5) {
        k *= 0.5;
    }
    if k * 0.5 >= K_MIN {
        for j in (1..4).rev() {
            let cand = k * 2f64.powf(-(j as f64) / 4.0);
            if works(cand) {
                k = cand;
                break;
            }
        }
    }
    let t = settle(k);
    let v = Verdict::supported(budget, horizon_note(h));
    Ok(PropertyReport::new(
        Property::UniformUltimateBounded,
        &origin,
        v,
        vec![Certificate::UltimateBound {
            k,
            r: r_grid.to_vec(),
            t,
        }],
    ))
}

/// Entry into `A` itself (membership) from `‖x‖ < R`; sets without
/// interior are replaced by `B_WRAP_EPS(A)`.
pub fn check_recurrence(system: &System, set: &SetDescriptor, uniform: bool, r_grid: &[f64], budget: &Budget) -> Result<PropertyReport> {
    check_grid(r_grid, "R", false)?;
    check_dims(system, set)?;
    let property = if uniform {
        Property::UniformlyGloballyRecurrent
    } else {
        Property::GloballyRecurrent
    };
    let (eps, wrap) = if set.has_interior() { (0.0, None) } else { (WRAP_EPS, Some(WRAP_EPS)) };
    let origin = SetDescriptor::origin(system.dim());
    let mut tau = Vec::with_capacity(r_grid.len());
    for (i, r) in r_grid.iter().enumerate() {
        let (t, failure) = entry_scan(system, set, eps, &origin, *r, budget, 400 + 10 * i as u64)?;
        if let Some(f) = failure {
            let f = f.with_note(&horizon_note(budget.horizon));
            return Ok(PropertyReport::new(property, set, f, vec![]));
        }
        tau.push(t.max(tau.last().copied().unwrap_or(0.0)));
    }
    let mut report = PropertyReport::new(
        property,
        set,
        Verdict::supported(budget, horizon_note(budget.horizon)),
        vec![Certificate::Recurrence { r: r_grid.to_vec(), tau }],
    );
    if let Some(e) = wrap {
        report = report.audit(format!("A has empty interior; entry into B_{e}(A) is detected instead"));
    }
    if uniform && budget.stress_evaluations > 0 {
        report = stress_verdict(&report, system, budget)?;
    }
    Ok(report)
}

/// RFC from the `μ(r, t)` envelope around `A`.
pub fn check_rfc(system: &System, set: &SetDescriptor, r_grid: &[f64], budget: &Budget) -> Result<PropertyReport> {
    check_grid(r_grid, "r", false)?;
    let h = budget.horizon;
    let t_grid = [h / 8.0, h / 4.0, h / 2.0, h];
    let mut rs = vec![0.0];
    rs.extend_from_slice(r_grid);
    let env = estimate_rfc_around(system, set, &rs, &t_grid, budget)?;
    Ok(PropertyReport::new(Property::Rfc, set, env.verdict.clone(), vec![Certificate::Rfc { mu: env.mu }]))
}

/// One item of an equivalence theorem: a conjunction of reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossItem {
    pub label: String,
    pub parts: Vec<Property>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub items: Vec<CrossItem>,
    pub reports: Vec<PropertyReport>,
    pub consistent: bool,
    pub diagnostics: Vec<String>,
}

impl CrossCheck {
    fn assemble(items: Vec<CrossItem>, reports: Vec<PropertyReport>) -> Self {
        let mut diagnostics = Vec::new();
        for a in &items {
            for b in &items {
                if a.verdict.is_supported() && b.verdict.is_falsified() {
                    diagnostics.push(format!(
                        "`{}` is supported while `{}` is falsified ({}); budget or resolution is insufficient",
                        a.label, b.label, b.verdict.note
                    ));
                }
            }
        }
        CrossCheck {
            consistent: diagnostics.is_empty(),
            items,
            reports,
            diagnostics,
        }
    }

    pub fn report(&self, p: Property) -> Option<&PropertyReport> {
        self.reports.iter().find(|r| r.property == p)
    }
}

fn item(label: &str, parts: &[&PropertyReport], budget: &Budget) -> CrossItem {
    CrossItem {
        label: label.into(),
        parts: parts.iter().map(|r| r.property).collect(),
        verdict: conjunction(parts.iter().map(|r| &r.verdict), budget),
    }
}

/// Grids used by the envelope pipeline, scaled to the set.
fn pipeline_grids(set: &SetDescriptor) -> (Vec<f64>, Vec<f64>) {
    let s = set.set_norm().max(1.0);
    let eps = (0..8).map(|k| s * 2f64.powi(k - 6)).collect();
    let r = DEFAULT_R.iter().map(|r| r * s).collect();
    (eps, r)
}

/// `τ → smooth_tau → σ, c → β` followed by validation on a fresh batch.
fn envelope_report(
    property: Property,
    system: &System,
    set: &SetDescriptor,
    ugatt: &PropertyReport,
    sigma: Option<(&MonotoneTable, f64)>,
    budget: &Budget,
) -> Result<PropertyReport> {
    let (_, r_grid) = pipeline_grids(set);
    let Some(tau) = ugatt.tau() else {
        let v = if ugatt.verdict.is_falsified() {
            ugatt.verdict.clone()
        } else {
            Verdict::inconclusive(budget, "no UGATT τ table for A at this budget")
        };
        return Ok(PropertyReport::new(property, set, v, vec![]));
    };
    let smooth = smooth_tau(tau, &tau.eps, &tau.r)?;
    let mut audit = Vec::new();
    let (sigma, c) = match sigma {
        Some((s, c)) => (s.clone(), c),
        None => {
            let h = budget.horizon;
            let mut rs = vec![0.0];
            rs.extend_from_slice(&r_grid);
            let t_grid: Vec<f64> = (0..=8).map(|k| h * 2f64.powi(k - 8)).collect();
            let mu = estimate_rfc_around(system, set, &rs, &t_grid, budget)?;
            if !mu.verdict.is_supported() {
                return Ok(PropertyReport::new(property, set, mu.verdict, vec![]));
            }
            let ls = lagrange_sigma(&mu, &smooth, &r_grid)?;
            audit.extend(ls.flags);
            (ls.sigma, ls.c)
        }
    };
    let env = match kl_envelope(&sigma, c, &smooth, &r_grid) {
        Ok(e) => e,
        Err(e) => {
            let v = Verdict::inconclusive(budget, format!("envelope construction refused: {e}"));
            return Ok(PropertyReport::new(property, set, v, vec![]));
        }
    };
    let fresh = budget.with_seed(sim::mix(budget.seed, 0xFE5));
    let mut pass = 1.0f64;
    for b in batches(system, set, &r_grid, &fresh, budget.horizon, 500)? {
        pass = pass.min(validate_envelope(&env, set, &b, budget.tol));
    }
    let v = if pass >= ENVELOPE_PASS {
        Verdict::supported(budget, format!("envelope pass fraction {pass} on a fresh batch"))
    } else {
        Verdict::inconclusive(budget, format!("envelope pass fraction {pass} below {ENVELOPE_PASS}"))
    };
    let mut r = PropertyReport::new(
        property,
        set,
        v,
        vec![Certificate::Envelope {
            envelope: env,
            pass_fraction: pass,
        }],
    );
    r.audit.extend(audit);
    Ok(r)
}

/// pUGAS envelope for `A` (Supported with the envelope when it validates).
pub fn check_pugas(system: &System, set: &SetDescriptor, budget: &Budget) -> Result<PropertyReport> {
    Ok(check_pugas_detailed(system, set, budget)?.0)
}

/// pUGAS report together with the UGATT report whose `τ` built the envelope.
pub fn check_pugas_detailed(system: &System, set: &SetDescriptor, budget: &Budget) -> Result<(PropertyReport, PropertyReport)> {
    check_dims(system, set)?;
    let (eps, r) = pipeline_grids(set);
    let ugatt = estimate_tau_ugatt(system, set, &eps, &r, budget)?;
    let pugas = envelope_report(Property::PUgas, system, set, &ugatt, None, budget)?;
    Ok((pugas, ugatt))
}

/// UGAS envelope from the UGS `σ` and the UGATT `τ` of `A`, returned with
/// the UGS and UGATT reports it used.
pub fn check_ugas(
    system: &System,
    set: &SetDescriptor,
    sweep: Option<&RobustnessSweep>,
    budget: &Budget,
) -> Result<(PropertyReport, Vec<PropertyReport>)> {
    check_dims(system, set)?;
    let (eps, r) = pipeline_grids(set);
    let s = set.set_norm().max(1.0);
    let delta_eps: Vec<f64> = DEFAULT_EPS.iter().map(|e| e * s).collect();
    let ugs = check_ugs_on(system, set, &delta_eps, &r, sweep, budget)?;
    let ugatt = estimate_tau_ugatt(system, set, &eps, &r, budget)?;
    let ugas = if ugs.verdict.is_supported() {
        envelope_report(Property::Ugas, system, set, &ugatt, ugs.sigma(), budget)?
    } else {
        PropertyReport::new(Property::Ugas, set, ugs.verdict.clone(), vec![])
    };
    Ok((ugas, vec![ugs, ugatt]))
}

/// Runs the items of the pUGAS characterization and checks that no item is
/// supported while another is falsified.
pub fn cross_check_pugas(system: &System, set: &SetDescriptor, budget: &Budget) -> Result<CrossCheck> {
    check_dims(system, set)?;
    let (eps, r) = pipeline_grids(set);
    let rfc = check_rfc(system, set, &r, budget)?;
    let lagrange = check_lagrange(system, set, &r, budget)?;
    let uub = check_uniform_ultimate_boundedness(system, &r, budget)?;
    let ugatt_a = estimate_tau_ugatt(system, set, &eps, &r, budget)?;
    let pugas = envelope_report(Property::PUgas, system, set, &ugatt_a, None, budget)?;

    let eps_c = 0.25 * set.set_norm().max(1.0);
    let cloud = a_eps(system, set, eps_c, budget)?;
    let (candidate, ugatt_c, weak_c) = if cloud.verdict.is_supported() {
        let pad = cloud.inflation;
        let lo = cloud.lower().iter().map(|v| v - pad).collect();
        let hi = cloud.upper().iter().map(|v| v + pad).collect();
        let candidate = SetDescriptor::new_box(lo, hi)?;
        let ce = [0.05, 0.1];
        let cr = [1.0, 2.0];
        let ugatt = estimate_tau_ugatt(system, &candidate, &ce, &cr, budget)?;
        let weak = estimate_tau_uniform_weak(system, &candidate, &ce, &cr, budget)?;
        (candidate, ugatt, weak)
    } else {
        let v = cloud.verdict.clone();
        (
            set.clone(),
            PropertyReport::new(Property::Ugatt, set, v.clone(), vec![]),
            PropertyReport::new(Property::UniformWeakAttractive, set, v, vec![]),
        )
    };
    let ugatt_c = ugatt_c.audit(format!("candidate set {candidate:?} from the prolongation with ε = {eps_c}"));

    let items = vec![
        item("(i) pUGAS", &[&pugas], budget),
        item("(ii) Lagrange stable and a bounded invariant UGATT set", &[&lagrange, &ugatt_c], budget),
        item("(iii) RFC and a bounded invariant UGATT set", &[&rfc, &ugatt_c], budget),
        item("(iv) RFC and uniformly ultimately bounded", &[&rfc, &uub], budget),
        item("(v) RFC and a bounded uniformly globally weakly attractive set", &[&rfc, &weak_c], budget),
    ];
    Ok(CrossCheck::assemble(items, vec![pugas, rfc, lagrange, ugatt_c, uub, weak_c, ugatt_a]))
}

/// Runs the items of the UGAS characterization for `A`.
pub fn cross_check_ugas(system: &System, set: &SetDescriptor, sweep: Option<&RobustnessSweep>, budget: &Budget) -> Result<CrossCheck> {
    check_dims(system, set)?;
    let (eps, r) = pipeline_grids(set);
    let s = set.set_norm().max(1.0);
    let delta_eps: Vec<f64> = DEFAULT_EPS.iter().map(|e| e * s).collect();
    let rfc = check_rfc(system, set, &r, budget)?;
    let uls = match sweep {
        Some(sw) => check_uls_sweep(system, set, &delta_eps, sw, budget)?,
        None => check_uls(system, set, &delta_eps, budget)?,
    };
    let lagrange = check_lagrange(system, set, &r, budget)?;
    let ugs = combine_ugs(set, &uls, &lagrange, budget);
    let ugatt = estimate_tau_ugatt(system, set, &eps, &r, budget)?;
    let weak = estimate_tau_uniform_weak(system, set, &eps, &r, budget)?;
    let robust = check_robust_invariance(system, set, &delta_eps, &DEFAULT_H, sweep, budget)?;
    let ugas = if ugs.verdict.is_supported() {
        envelope_report(Property::Ugas, system, set, &ugatt, ugs.sigma(), budget)?
    } else {
        PropertyReport::new(Property::Ugas, set, ugs.verdict.clone(), vec![])
    };
    let items = vec![
        item("(i) UGAS", &[&ugas], budget),
        item("(ii) RFC and a UGATT robustly invariant set", &[&rfc, &ugatt, &robust], budget),
        item("(iii) RFC, ULS and uniformly globally weakly attractive", &[&rfc, &uls, &weak], budget),
        item("(iv) UGS and uniformly globally weakly attractive", &[&ugs, &weak], budget),
        item("(v) UGS and UGATT", &[&ugs, &ugatt], budget),
    ];
    Ok(CrossCheck::assemble(items, vec![ugas, rfc, uls, lagrange, ugs, ugatt, weak, robust]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::builtin::{linear_diag, scalar_nonuniform, scalar_stable, scalar_unstable};

    fn small() -> Budget {
        Budget {
            samples: 32,
            signals: 4,
            time_samples: 257,
            horizon: 20.0,
            ..Budget::default()
        }
    }

    fn origin() -> SetDescriptor {
        SetDescriptor::origin(1)
    }

    #[test]
    fn property_names_round_trip() {
        for p in Property::ALL {
            assert_eq!(Property::parse(p.name()).unwrap(), p);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.name()));
        }
        assert!(Property::parse("nope").is_err());
    }

    #[test]
    fn lagrange_of_contraction_has_identity_sigma() {
        let r = check_lagrange(&scalar_stable(), &origin(), &[0.5, 1.0, 2.0], &small()).unwrap();
        assert!(r.verdict.is_supported());
        let (sigma, c) = r.sigma().unwrap();
        assert!(c.abs() < 1e-12);
        for x in [0.5, 1.0, 2.0] {
            assert!((sigma.eval(x) - x).abs() < 0.05 * x, "σ({x}) = {}", sigma.eval(x));
        }
    }

    #[test]
    fn lagrange_of_unstable_is_falsified_with_replayable_witness() {
        let sys = scalar_unstable();
        let r = check_lagrange(&sys, &origin(), &[1.0], &Budget::default()).unwrap();
        assert!(r.verdict.is_falsified());
        assert!(r.certificates.is_empty());
        let w = r.verdict.witness.unwrap();
        assert!(sys.flow(w.time, &w.initial, &w.signal, 1e-9).is_err());
    }

    #[test]
    fn uls_of_contraction_keeps_delta_equal_eps() {
        let r = check_uls(&scalar_stable(), &origin(), &[0.1, 0.5], &small()).unwrap();
        let (_, _, delta) = r.delta().unwrap();
        assert_eq!(delta, &[0.1, 0.5]);
    }

    #[test]
    fn weak_attractivity_entry_times() {
        let r = check_weak_attractivity(&scalar_stable(), &origin(), 0.1, 1.0, &small()).unwrap();
        let Certificate::Entry { max_time, .. } = r.certificates[0] else { panic!() };
        assert!((max_time - 10f64.ln()).abs() < 0.05 * 10f64.ln());
        let b = Budget { horizon: 40.0, ..small() };
        let r = check_weak_attractivity(&scalar_nonuniform(9.0).unwrap(), &origin(), 0.1, 1.0, &b).unwrap();
        let Certificate::Entry { max_time, .. } = r.certificates[0] else { panic!() };
        assert!((max_time - 10.0 * 10f64.ln()).abs() < 0.1 * 23.03, "{max_time}");
        let r = check_weak_attractivity(&scalar_unstable(), &origin(), 0.1, 1.0, &small()).unwrap();
        assert!(r.verdict.is_falsified());
    }

    #[test]
    fn weak_tau_is_below_ugatt_tau() {
        let sys = linear_diag(2).unwrap();
        let set = SetDescriptor::origin(2);
        let (e, r) = ([0.1, 0.2], [1.0, 2.0]);
        let w = estimate_tau_uniform_weak(&sys, &set, &e, &r, &small()).unwrap();
        let u = estimate_tau_ugatt(&sys, &set, &e, &r, &small()).unwrap();
        let (tw, tu) = (w.tau().unwrap(), u.tau().unwrap());
        for i in 0..2 {
            for j in 0..2 {
                assert!(tw.at(i, j) <= tu.at(i, j));
            }
        }
    }

    #[test]
    fn uub_of_contraction_reaches_small_k() {
        let r = check_uniform_ultimate_boundedness(&scalar_stable(), &[1.0, 2.0], &small()).unwrap();
        let Certificate::UltimateBound { k, .. } = r.certificates[0] else { panic!() };
        assert!(k <= 2.0 * K_MIN);
        let r = check_uniform_ultimate_boundedness(&scalar_unstable(), &[1.0], &Budget::default()).unwrap();
        assert!(r.verdict.is_falsified());
    }

    #[test]
    fn recurrence_into_a_ball() {
        let ball = SetDescriptor::ball(vec![0.0], 0.5).unwrap();
        let r = check_recurrence(&scalar_stable(), &ball, true, &[1.0, 2.0], &small()).unwrap();
        let Certificate::Recurrence { tau, .. } = &r.certificates[0] else { panic!() };
        assert!((tau[0] - 2f64.ln()).abs() < 0.05);
        assert!((tau[1] - 4f64.ln()).abs() < 0.05);
        let r = check_recurrence(&scalar_unstable(), &ball, false, &[1.0], &Budget::default()).unwrap();
        assert!(r.verdict.is_falsified());
    }

    #[test]
    fn certificates_only_on_support() {
        let v = Verdict::inconclusive(&small(), "x");
        let r = PropertyReport::new(Property::Ugatt, &origin(), v, vec![Certificate::Entry { eps: 1.0, r: 1.0, max_time: 1.0 }]);
        assert!(r.certificates.is_empty());
    }
}
