//! Non-coercive Lyapunov certificates: Dini derivatives along the flow,
//! sampled verification of the decay conditions and the attraction-time
//! bound `τ(ε, r) = (ψ₂(r) + 1) / α(ε)`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::TauTable;
use crate::dynamics::{sample_signals, DisturbanceSignal, SignalStrategy, System};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::monotone::{Direction, Extrapolation, MonotoneTable};
use crate::set::{SetDescriptor, State};
use crate::sim;
use crate::verdict::{uniform_grid, Budget, Status, Verdict, Witness};

/// Points with `‖x‖_A` below this are not sampled.
pub const INNER_SHELL: f64 = 1e-6;
pub const DEFAULT_SCHEDULE: [f64; 3] = [1e-2, 1e-3, 1e-4];
/// Absolute tolerance on both Lyapunov inequalities.
pub const CONDITION_TOL: f64 = 1e-6;
/// Relative gap between the last two difference quotients above which a
/// Dini estimate is flagged.
pub const RICHARDSON_GAP: f64 = 0.1;
/// Integrator tolerance used for the short flows of a difference quotient.
const DINI_TOL: f64 = 1e-12;

type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct LyapunovCandidate {
    pub label: String,
    v: ValueFn,
    /// Upper bound `V(x) ≤ ψ₂(‖x‖_A)`.
    pub psi2: MonotoneTable,
    /// Decay rate `V̇_d(x) ≤ −α(‖x‖_A)`.
    pub alpha: MonotoneTable,
    pub set: SetDescriptor,
    /// Fitted bounds never produce falsifying witnesses.
    pub fitted: bool,
}

impl fmt::Debug for LyapunovCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LyapunovCandidate")
            .field("label", &self.label)
            .field("psi2", &self.psi2)
            .field("alpha", &self.alpha)
            .field("set", &self.set)
            .field("fitted", &self.fitted)
            .finish()
    }
}

fn check_comparison(t: &MonotoneTable, what: &str) -> Result<()> {
    if t.direction() != Direction::NonDecreasing || !t.is_monotone() {
        return Err(Error::invalid(format!("{what} must be nondecreasing")));
    }
    if t.eval(0.0) != 0.0 {
        return Err(Error::invalid(format!("{what}(0) must be 0")));
    }
    Ok(())
}

impl LyapunovCandidate {
    pub fn new(
        label: impl Into<String>,
        v: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        psi2: MonotoneTable,
        alpha: MonotoneTable,
        set: SetDescriptor,
    ) -> Result<Self> {
        check_comparison(&psi2, "ψ₂")?;
        check_comparison(&alpha, "α")?;
        Ok(LyapunovCandidate {
            label: label.into(),
            v: Arc::new(v),
            psi2,
            alpha,
            set,
            fitted: false,
        })
    }

    /// `V` from an expression in `x1, …, xn`.
    pub fn from_expression(src: &str, psi2: MonotoneTable, alpha: MonotoneTable, set: SetDescriptor) -> Result<Self> {
        let names: Vec<String> = (1..=set.dim()).map(|i| format!("x{i}")).collect();
        let vars: Vec<&str> = names.iter().map(String::as_str).collect();
        let e = Expr::parse(src, &vars)?;
        Self::new(src, move |x: &[f64]| e.eval(x), psi2, alpha, set)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.v)(x)
    }

    /// Replaces `ψ₂` and `α` by envelopes of sampled values and marks the
    /// candidate as fitted.
    pub fn fit(mut self, system: &System, radii: &[f64], budget: &Budget) -> Result<Self> {
        let samples = shell_samples(&self, system, radii, budget)?;
        let evals: Vec<(f64, f64, f64)> = samples
            .par_iter()
            .map(|(x, d)| {
                let dini = dini_derivative(&self, system, x, d, &DEFAULT_SCHEDULE)?;
                Ok((self.set.distance_unchecked(x), self.value(x), -dini.value))
            })
            .collect::<Result<_>>()?;
        let mut edges = vec![0.0];
        edges.extend_from_slice(radii);
        // ψ₂ at each edge covers the next bin, α at each edge stays below every
        // sample further out from the previous edge
        let n = edges.len();
        let mut psi = vec![0.0; n];
        let mut alpha = vec![0.0; n];
        for k in 1..n {
            let upper = edges[(k + 1).min(n - 1)];
            psi[k] = evals
                .iter()
                .filter(|(r, _, _)| *r <= upper)
                .map(|(_, v, _)| *v)
                .fold(0.0f64, f64::max);
            alpha[k] = evals
                .iter()
                .filter(|(r, _, _)| *r >= edges[k - 1])
                .map(|(_, _, a)| *a)
                .fold(f64::INFINITY, f64::min)
                .max(0.0);
            if !alpha[k].is_finite() {
                alpha[k] = alpha[k - 1];
            }
        }
        for k in 1..n {
            alpha[k] = alpha[k].max(alpha[k - 1]);
        }
        self.psi2 = MonotoneTable::k_infinity(edges.clone(), psi)?;
        self.alpha = MonotoneTable::new(edges, alpha, Direction::NonDecreasing, Extrapolation::Clamp)?;
        self.fitted = true;
        self.label = format!("{} (fitted)", self.label);
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dini {
    /// Min over the schedule of the forward difference quotients.
    pub value: f64,
    /// The last two quotients differ by more than `RICHARDSON_GAP` relative.
    pub low_confidence: bool,
    /// `|q_last − q_prev|`, added to the decay tolerance.
    pub margin: f64,
}

pub fn dini_derivative(
    cand: &LyapunovCandidate,
    system: &System,
    x: &[f64],
    d: &DisturbanceSignal,
    schedule: &[f64],
) -> Result<Dini> {
    if schedule.is_empty() || schedule.iter().any(|h| !(*h > 0.0)) || schedule.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("h schedule must be positive and strictly decreasing"));
    }
    let v0 = cand.value(x);
    let mut quotients = Vec::with_capacity(schedule.len());
    for h in schedule {
        let y = system.flow(*h, x, d, DINI_TOL)?;
        quotients.push((cand.value(&y) - v0) / h);
    }
    let value = quotients.iter().copied().fold(f64::INFINITY, f64::min);
    let (low_confidence, margin) = match quotients.as_slice() {
        [.., a, b] => {
            let gap = (a - b).abs();
            let scale = a.abs().max(b.abs());
            (scale > 0.0 && gap > RICHARDSON_GAP * scale, gap)
        }
        _ => (false, 0.0),
    };
    Ok(Dini {
        value,
        low_confidence,
        margin,
    })
}

/// Samples `B_r(A)` for each shell radius, dropping the inner shell, and
/// pairs each point with every budget signal.
fn shell_samples(cand: &LyapunovCandidate, system: &System, radii: &[f64], budget: &Budget) -> Result<Vec<(State, DisturbanceSignal)>> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > INNER_SHELL)) {
        return Err(Error::invalid("shell radii must exceed the inner shell"));
    }
    if cand.set.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: cand.set.dim(),
        });
    }
    let sigs = sample_signals(
        &system.disturbance(),
        1.0,
        1.0,
        budget.signals.max(1),
        SignalStrategy::Mixed,
        sim::mix(budget.seed, 0x1A),
    )?;
    let mut out = Vec::new();
    for (i, r) in radii.iter().enumerate() {
        let pts = sim::neighborhood(&cand.set, *r, budget.samples.max(1), sim::mix(budget.seed, 0x1B + i as u64))?;
        for x in pts.into_iter().filter(|x| cand.set.distance_unchecked(x) >= INNER_SHELL) {
            for d in &sigs {
                out.push((x.clone(), d.clone()));
            }
        }
    }
    Ok(out)
}

/// Checks `0 < V(x) ≤ ψ₂(‖x‖_A)` and `V̇_d(x) ≤ −α(‖x‖_A)` on samples.
pub fn verify_noncoercive(cand: &LyapunovCandidate, system: &System, radii: &[f64], budget: &Budget) -> Result<Verdict> {
    let samples = shell_samples(cand, system, radii, budget)?;
    let found: Vec<Option<Witness>> = samples
        .par_iter()
        .map(|(x, d)| {
            let r = cand.set.distance_unchecked(x);
            let v = cand.value(x);
            if !(v > 0.0) || v > cand.psi2.eval(r) + CONDITION_TOL {
                return Ok(Some(Witness {
                    initial: x.clone(),
                    signal: d.clone(),
                    time: 0.0,
                    value: v,
                    what: format!("V(x) = {v} outside (0, ψ₂({r}) = {}]", cand.psi2.eval(r)),
                }));
            }
            let dini = dini_derivative(cand, system, x, d, &DEFAULT_SCHEDULE)?;
            let bound = -cand.alpha.eval(r);
            if dini.value > bound + CONDITION_TOL + dini.margin {
                return Ok(Some(Witness {
                    initial: x.clone(),
                    signal: d.clone(),
                    time: *DEFAULT_SCHEDULE.last().expect("nonempty"),
                    value: dini.value,
                    what: format!("Dini derivative {} above −α({r}) = {bound}", dini.value),
                }));
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    let checked = samples.len();
    match found.into_iter().flatten().next() {
        Some(w) if cand.fitted => Ok(Verdict::inconclusive(
            budget,
            format!("fitted bounds violated at a sample ({}); fitted certificates do not falsify", w.what),
        )),
        Some(w) => Ok(Verdict::falsified(w, budget, format!("{} samples", checked))),
        None => Ok(Verdict::supported(budget, format!("{checked} samples outside the inner shell {INNER_SHELL}"))),
    }
}

pub fn lyapunov_tau_bound(cand: &LyapunovCandidate, eps: f64, r: f64) -> Result<f64> {
    let a = cand.alpha.eval(eps);
    if !(a > 0.0) {
        return Err(Error::invalid(format!("α({eps}) = {a} must be > 0")));
    }
    Ok((cand.psi2.eval(r) + 1.0) / a)
}

/// The bound tabulated on a grid, as a uniform weak attractivity certificate.
pub fn lyapunov_tau_table(cand: &LyapunovCandidate, eps: &[f64], r: &[f64]) -> Result<TauTable> {
    let raw = eps
        .iter()
        .flat_map(|e| r.iter().map(move |rr| (*e, *rr)))
        .map(|(e, rr)| lyapunov_tau_bound(cand, e, rr))
        .collect::<Result<Vec<_>>>()?;
    TauTable::from_raw(eps.to_vec(), r.to_vec(), raw)
}

/// Late entries against the attraction-time bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub eps: f64,
    pub r: f64,
    pub bound: f64,
    pub trajectories: usize,
    pub latest_entry: f64,
    pub violations: Vec<Witness>,
}

/// Flows pairs from `B_r(A)` up to the bound and records those that have not
/// entered `B_ε(A)` by then.
pub fn check_tau_bound(cand: &LyapunovCandidate, system: &System, eps: f64, r: f64, budget: &Budget) -> Result<BoundCheck> {
    let bound = lyapunov_tau_bound(cand, eps, r)?;
    let initial = sim::neighborhood(&cand.set, r, budget.samples.max(1), sim::mix(budget.seed, 0x2A))?;
    let sigs = sim::signals(system, budget, bound, sim::mix(budget.seed, 0x2B))?;
    let times = uniform_grid(bound, budget.time_samples.max(2));
    let ns = sigs.len();
    let scans = (0..initial.len() * ns)
        .into_par_iter()
        .map(|k| sim::scan_entry(system, &cand.set, eps, &initial[k / ns], &sigs[k % ns], &times, budget.tol))
        .collect::<Result<Vec<_>>>()?;
    let mut latest = 0.0f64;
    let mut violations = Vec::new();
    for (k, s) in scans.iter().enumerate() {
        match s.entry {
            Some(t) if t <= bound => latest = latest.max(t),
            _ => violations.push(Witness {
                initial: initial[k / ns].clone(),
                signal: sigs[k % ns].clone(),
                time: bound,
                value: s.dist.last().copied().unwrap_or(f64::INFINITY),
                what: format!("no entry into B_{eps}(A) by the bound {bound}"),
            }),
        }
    }
    Ok(BoundCheck {
        eps,
        r,
        bound,
        trajectories: scans.len(),
        latest_entry: latest,
        violations,
    })
}

/// `∫₀ᵗ α(‖φ(s)‖_A) ds` by the trapezoid rule on `points` samples.
pub fn alpha_integral(
    cand: &LyapunovCandidate,
    system: &System,
    x: &[f64],
    d: &DisturbanceSignal,
    t: f64,
    points: usize,
    tol: f64,
) -> Result<f64> {
    let times = uniform_grid(t, points.max(2));
    let tr = system.trajectory(x, d, &times, tol)?;
    if let Some(time) = tr.blow_up {
        return Err(Error::NonFinite { time });
    }
    let a: Vec<f64> = tr.states.iter().map(|s| cand.alpha.eval(cand.set.distance_unchecked(s))).collect();
    Ok(times.windows(2).zip(a.windows(2)).map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0] + v[1])).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Claim {
    None,
    #[serde(rename = "pUGAS")]
    PUgas,
    #[serde(rename = "UGAS")]
    Ugas,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conclusion {
    pub claim: Claim,
    /// `(premise, verdict)` in the order they were used.
    pub evidence: Vec<(String, Verdict)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    /// Uniform weak attractivity certificate from the attraction-time bound.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<TauTable>,
}

impl Conclusion {
    /// Attaches the attraction-time bound when a claim was made.
    pub fn with_tau_bound(mut self, cand: &LyapunovCandidate, eps: &[f64], r: &[f64]) -> Result<Self> {
        if self.claim != Claim::None {
            self.tau = Some(lyapunov_tau_table(cand, eps, r)?);
        }
        Ok(self)
    }
}

/// Lyapunov function and RFC give pUGAS; a robust equilibrium on top gives
/// UGAS. A falsified robust equilibrium only blocks the UGAS claim.
pub fn conclude(lyapunov: &Verdict, rfc: &Verdict, robust_eq: &Verdict) -> Conclusion {
    let evidence = vec![
        ("non-coercive Lyapunov function".to_string(), lyapunov.clone()),
        ("robust forward completeness".to_string(), rfc.clone()),
        ("robust equilibrium".to_string(), robust_eq.clone()),
    ];
    let witness = evidence.iter().find(|(_, v)| v.status == Status::Falsified).and_then(|(_, v)| v.witness.clone());
    let claim = if lyapunov.is_supported() && rfc.is_supported() {
        if robust_eq.is_supported() {
            Claim::Ugas
        } else {
            Claim::PUgas
        }
    } else {
        Claim::None
    };
    let witness = if claim == Claim::None { witness } else { None };
    Conclusion {
        claim,
        evidence,
        witness,
        tau: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::builtin::{planar_counterexample, scalar_stable};

    fn power(k: f64, p: i32) -> MonotoneTable {
        // geometric breakpoints keep the chord error relative to the value small
        let mut xs: Vec<f64> = (0..=1900).map(|i| 1e-7 * 1.01f64.powi(i)).collect();
        xs.extend([0.0, 0.25, 0.5, 1.0, 2.0]);
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        let ys = xs.iter().map(|x| k * x.powi(p)).collect();
        MonotoneTable::new(xs, ys, Direction::NonDecreasing, Extrapolation::Linear).unwrap()
    }

    fn square(alpha_k: f64) -> LyapunovCandidate {
        LyapunovCandidate::from_expression("x1^2", power(1.0, 2), power(alpha_k, 2), SetDescriptor::origin(1)).unwrap()
    }

    fn zero() -> DisturbanceSignal {
        DisturbanceSignal::constant(1.0, vec![0.0])
    }

    #[test]
    fn dini_of_square_along_decay() {
        let sys = scalar_stable();
        let c = square(2.0);
        let d = dini_derivative(&c, &sys, &[1.0], &zero(), &DEFAULT_SCHEDULE).unwrap();
        assert!((d.value + 2.0).abs() < 1e-3);
        let d = dini_derivative(&c, &sys, &[3.0], &zero(), &DEFAULT_SCHEDULE).unwrap();
        assert!((d.value + 18.0).abs() < 1e-2);
        let abs = LyapunovCandidate::from_expression("abs(x1)", power(1.0, 1), power(1.0, 1), SetDescriptor::origin(1)).unwrap();
        let d = dini_derivative(&abs, &sys, &[0.5], &zero(), &DEFAULT_SCHEDULE).unwrap();
        assert!((d.value + 0.5).abs() < 1e-3);
    }

    #[test]
    fn dini_of_constant_is_zero() {
        let c = LyapunovCandidate::from_expression("3", power(1.0, 1), power(1.0, 1), SetDescriptor::origin(1)).unwrap();
        let d = dini_derivative(&c, &scalar_stable(), &[2.0], &zero(), &DEFAULT_SCHEDULE).unwrap();
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn exact_decay_rate_is_supported_and_a_stronger_one_falsified() {
        let sys = scalar_stable();
        let b = Budget::default();
        assert!(verify_noncoercive(&square(2.0), &sys, &[0.5, 1.0, 2.0], &b).unwrap().is_supported());
        let v = verify_noncoercive(&square(3.0), &sys, &[0.5, 1.0, 2.0], &b).unwrap();
        assert!(v.is_falsified());
        let w = v.witness.unwrap();
        assert!(w.value > -3.0 * w.initial[0].powi(2));
    }

    #[test]
    fn fitted_bounds_on_undisturbed_counterexample() {
        let sys = planar_counterexample(0.0).unwrap();
        let set = SetDescriptor::origin(2);
        let c = LyapunovCandidate::from_expression("x1^2 + x2^2", power(1.0, 2), power(0.0, 1), set).unwrap();
        let b = Budget {
            samples: 48,
            signals: 1,
            ..Budget::default()
        };
        let radii = [0.25, 0.5, 1.0, 2.0];
        let f = c.fit(&sys, &radii, &b).unwrap();
        assert!(f.fitted && f.alpha.eval(1.0) > 0.0);
        assert!(verify_noncoercive(&f, &sys, &radii, &b).unwrap().is_supported());
    }

    #[test]
    fn tau_bound_formula() {
        let c = square(2.0);
        assert!((lyapunov_tau_bound(&c, 0.5, 1.0).unwrap() - 4.0).abs() < 1e-12);
        let lin = LyapunovCandidate::from_expression("abs(x1)", power(1.0, 1), power(1.0, 1), SetDescriptor::origin(1)).unwrap();
        assert!((lyapunov_tau_bound(&lin, 1.0, 1.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(lyapunov_tau_bound(&c, 0.0, 1.0).is_err());
    }

    #[test]
    fn integral_of_decay_is_below_initial_value() {
        let sys = scalar_stable();
        let c = square(2.0);
        for x in [0.5, 1.0, 2.0] {
            let lhs = alpha_integral(&c, &sys, &[x], &zero(), 10.0, 2001, 1e-10).unwrap();
            assert!(lhs <= c.psi2.eval(x) + 1e-4 * (1.0 + x * x), "{lhs} vs {}", x * x);
        }
    }

    #[test]
    fn implication_table() {
        let b = Budget::default();
        let s = Verdict::supported(&b, "");
        let w = Witness {
            initial: vec![1.0],
            signal: zero(),
            time: 1.0,
            value: 1.0,
            what: "x".into(),
        };
        let f = Verdict::falsified(w, &b, "");
        assert_eq!(conclude(&s, &s, &s).claim, Claim::Ugas);
        assert_eq!(conclude(&s, &s, &f).claim, Claim::PUgas);
        let c = conclude(&f, &s, &s);
        assert_eq!(c.claim, Claim::None);
        assert!(c.witness.is_some());
        let c = conclude(&s, &s, &s).with_tau_bound(&square(2.0), &[0.25, 0.5], &[1.0, 2.0]).unwrap();
        assert!((c.tau.unwrap().at(1, 0) - 4.0).abs() < 1e-12);
    }
}
