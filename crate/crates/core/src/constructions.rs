//! Constructive steps behind the practical-UGAS characterization: smoothing
//! of attraction times, the Lagrange bound `σ` with offset `c`, and the
//! tabulated `𝒦ℒ` envelope `β`.

use serde::{Deserialize, Serialize};

use crate::dynamics::TrajectoryBatch;
use crate::error::{Error, Result};
use crate::kl::{KLEnvelope, KnotSeries};
use crate::monotone::{bracket, Direction, MonotoneGrid, MonotoneTable};
use crate::reach::RfcEnvelope;
use crate::set::SetDescriptor;

/// Trapezoid subintervals per axis of the smoothing average.
pub const SMOOTHING_PANELS: usize = 64;
/// Tie-break increment for equal knot times, scaled by the knot index.
pub const KNOT_TIE_STEP: f64 = 1e-6;
const MAX_KNOTS: usize = 60;
const TAIL_POINTS: usize = 4;
const INTERIOR_POINTS: usize = 3;

/// Attraction times `τ(ε, r)` on an `ε × r` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauTable {
    pub eps: Vec<f64>,
    pub r: Vec<f64>,
    /// As estimated, row-major in `ε`; `inf` marks pairs that never entered.
    pub raw: Vec<f64>,
    /// Nonincreasing in `ε`, nondecreasing in `r`, at least `raw`.
    pub table: MonotoneGrid,
    pub smoothed: bool,
}

impl TauTable {
    pub fn from_raw(eps: Vec<f64>, r: Vec<f64>, raw: Vec<f64>) -> Result<Self> {
        if eps.first().is_some_and(|e| *e <= 0.0) || r.first().is_some_and(|v| *v < 0.0) {
            return Err(Error::invalid("τ grids need ε > 0 and r >= 0"));
        }
        if raw.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::invalid("τ values must be nonnegative"));
        }
        let table = MonotoneGrid::new(
            eps.clone(),
            r.clone(),
            raw.clone(),
            Direction::NonIncreasing,
            Direction::NonDecreasing,
        )?;
        Ok(TauTable {
            eps,
            r,
            raw,
            table,
            smoothed: false,
        })
    }

    pub fn from_fn(eps: Vec<f64>, r: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let f = &f;
        let raw = eps
            .iter()
            .flat_map(|e| r.iter().map(move |v| f(*e, *v)))
            .collect();
        Self::from_raw(eps, r, raw)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.table.at(i, j)
    }

    pub fn raw_at(&self, i: usize, j: usize) -> f64 {
        self.raw[i * self.r.len() + j]
    }

    pub fn is_finite(&self) -> bool {
        self.table.values().iter().all(|v| v.is_finite())
    }

    pub fn max(&self) -> f64 {
        self.table.values().iter().copied().fold(0.0, f64::max)
    }

    /// Bilinear inside the grid; `inf` if a contributing node is `inf`.
    fn interp(&self, e: f64, r: f64) -> f64 {
        let (i0, i1, we) = bracket(&self.eps, e);
        let (j0, j1, wr) = bracket(&self.r, r);
        let mut acc = 0.0;
        for (i, wi) in [(i0, 1.0 - we), (i1, we)] {
            for (j, wj) in [(j0, 1.0 - wr), (j1, wr)] {
                let w = wi * wj;
                if w > 0.0 {
                    let v = self.at(i, j);
                    if !v.is_finite() {
                        return f64::INFINITY;
                    }
                    acc += w * v;
                }
            }
        }
        acc
    }

    /// `τ(ε, r)`, extended beyond the grid toward small `ε` and large `r` by
    /// log-log extrapolation of the boundary segment (linear when a boundary
    /// value is zero), and clamped in the other directions.
    pub fn eval(&self, e: f64, r: f64) -> f64 {
        let (ne, nr) = (self.eps.len(), self.r.len());
        let ec = e.clamp(self.eps[0], self.eps[ne - 1]);
        let rc = r.clamp(self.r[0], self.r[nr - 1]);
        let mut v = self.interp(ec, rc);
        if !v.is_finite() {
            return v;
        }
        if e < self.eps[0] && ne >= 2 {
            let (a, b) = (self.interp(self.eps[0], rc), self.interp(self.eps[1], rc));
            v = extrapolate(v, a, b, self.eps[1] / self.eps[0], self.eps[0] / e, self.eps[1] - self.eps[0], self.eps[0] - e);
        }
        if r > self.r[nr - 1] && nr >= 2 {
            let (x0, x1) = (self.r[nr - 2], self.r[nr - 1]);
            let (a, b) = (self.interp(ec, x1), self.interp(ec, x0));
            if x0 > 0.0 {
                v = extrapolate(v, a, b, x1 / x0, r / x1, x1 - x0, r - x1);
            } else {
                v += (a - b).max(0.0) / (x1 - x0) * (r - x1);
            }
        }
        v
    }

    /// Raise the entry at `(i, j)` to at least `value`, keeping the
    /// monotone projection.
    pub fn inflate(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        let k = i * self.r.len() + j;
        if value > self.raw[k] {
            self.raw[k] = value;
            let mut values = self.table.values().to_vec();
            values[k] = values[k].max(value);
            self.table = MonotoneGrid::new(
                self.eps.clone(),
                self.r.clone(),
                values,
                Direction::NonIncreasing,
                Direction::NonDecreasing,
            )?;
        }
        Ok(())
    }
}

/// Growth of `v` from the boundary value `a` (neighbour `b`): power law
/// with exponent `ln(a/b)/ln(ratio)` at `reach`, or linear when undefined.
fn extrapolate(v: f64, a: f64, b: f64, ratio: f64, reach: f64, span: f64, dist: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        let p = ((a / b).ln() / ratio.ln()).max(0.0);
        v * reach.powf(p)
    } else {
        v + (a - b).max(0.0) / span * dist
    }
}

/// `τ(ε, R) = (2/(εR)) ∫_R^{2R} ∫_{ε/2}^{ε} τ̃(ε₁, R₁) dε₁ dR₁` on the
/// query grid, by the trapezoid rule on the regularized raw table.
pub fn smooth_tau(raw: &TauTable, eps_query: &[f64], r_query: &[f64]) -> Result<TauTable> {
    let strictly = |g: &[f64]| !g.is_empty() && g.windows(2).all(|w| w[1] > w[0]);
    if !strictly(eps_query) || !strictly(r_query) || eps_query[0] <= 0.0 || r_query[0] <= 0.0 {
        return Err(Error::invalid("smoothing grids must be positive and strictly increasing"));
    }
    let needs_eps = eps_query[0] / 2.0 < raw.eps[0];
    let needs_r = 2.0 * r_query[r_query.len() - 1] > raw.r[raw.r.len() - 1];
    if (needs_eps && raw.eps.len() < 2) || (needs_r && raw.r.len() < 2) {
        return Err(Error::invalid("raw τ grid cannot be extended to cover [ε/2, ε] × [R, 2R]"));
    }
    // integer trapezoid weights keep constant inputs exact
    let m = SMOOTHING_PANELS;
    let weight = |k: usize| if k == 0 || k == m { 1.0 } else { 2.0 };
    let total = (2 * m * 2 * m) as f64;
    let mut values = Vec::with_capacity(eps_query.len() * r_query.len());
    let mut floor = Vec::with_capacity(values.capacity());
    for e in eps_query {
        for r in r_query {
            let mut acc = 0.0;
            for a in 0..=m {
                let e1 = e / 2.0 + (e / 2.0) * a as f64 / m as f64;
                for b in 0..=m {
                    let r1 = r + r * b as f64 / m as f64;
                    acc += weight(a) * weight(b) * raw.eval(e1, r1);
                }
            }
            let base = raw.eval(*e, *r);
            let avg = acc / total;
            values.push(if avg.is_nan() { f64::INFINITY } else { avg.max(base) });
            floor.push(base);
        }
    }
    let table = MonotoneGrid::new(
        eps_query.to_vec(),
        r_query.to_vec(),
        values,
        Direction::NonIncreasing,
        Direction::NonDecreasing,
    )?;
    Ok(TauTable {
        eps: eps_query.to_vec(),
        r: r_query.to_vec(),
        raw: floor,
        table,
        smoothed: true,
    })
}

/// `σ` and `c` with `‖φ(t, x, d)‖_A ≤ σ(‖x‖_A) + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagrangeSigma {
    pub sigma: MonotoneTable,
    pub c: f64,
    /// `(r, σ̃(r))` on the requested grid.
    pub sigma_tilde: Vec<(f64, f64)>,
    /// Budget or grid problems noticed during the construction.
    pub flags: Vec<String>,
}

/// `σ̃(r) = μ(r, τ(r/2, r))`, `σ = σ̃ − σ̃(0)`, `c = σ̃(0)`. The value at 0
/// reads `μ` at radius 0 and the time of the smallest grid radius.
pub fn lagrange_sigma(mu: &RfcEnvelope, tau: &TauTable, r_grid: &[f64]) -> Result<LagrangeSigma> {
    if r_grid.is_empty() || r_grid[0] <= 0.0 || r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("σ grid must be positive and strictly increasing"));
    }
    let t_max = *mu.mu.ys().last().expect("μ grid is nonempty");
    let mut flags = Vec::new();
    let mut time_for = |r: f64| {
        let t = tau.eval(r / 2.0, r);
        if !t.is_finite() {
            flags.push(format!("τ(r/2, r) is infinite at r = {r}"));
            t_max
        } else {
            if t > t_max {
                flags.push(format!("τ(r/2, r) = {t} beyond the μ time grid at r = {r}"));
            }
            t
        }
    };
    let t0 = time_for(r_grid[0]);
    let c = mu.mu.eval(0.0, t0);
    let mut sigma_tilde = Vec::with_capacity(r_grid.len());
    for r in r_grid {
        let t = time_for(*r);
        let s = mu.mu.eval(*r, t);
        sigma_tilde.push((*r, s));
    }
    for (r, s) in &sigma_tilde {
        if *s < r / 2.0 {
            flags.push(format!("σ̃({r}) = {s} < r/2"));
        }
    }
    let values = sigma_tilde.iter().map(|(_, s)| (s - c).max(0.0)).collect();
    let sigma = MonotoneTable::k_infinity(r_grid.to_vec(), values)?;
    Ok(LagrangeSigma {
        sigma,
        c,
        sigma_tilde,
        flags,
    })
}

/// Knot times `τ_n = τ(ε_n, δ)` made strictly increasing from `τ_0 = 0`.
fn knot_times(levels: &[f64], delta: f64, tau: &TauTable) -> Result<Vec<f64>> {
    let mut times: Vec<f64> = Vec::with_capacity(levels.len() - 1);
    let mut prev = 0.0;
    for (n, eps) in levels.iter().enumerate().skip(1) {
        let t = tau.eval(*eps, delta);
        if !t.is_finite() {
            return Err(Error::invalid(format!(
                "τ({eps}, {delta}) is not finite; no 𝒦ℒ certificate can be built"
            )));
        }
        let mut t_n = t;
        if t_n <= prev {
            t_n = t + n as f64 * KNOT_TIE_STEP;
            if t_n <= prev {
                t_n = prev + KNOT_TIE_STEP;
            }
        }
        times.push(t_n);
        prev = t_n;
    }
    Ok(times)
}

/// `ω(δ, t)` from one knot series: `ε_0` up to `τ_1`, geometric between
/// `(τ_n, ε_{n−1})` and `(τ_{n+1}, ε_n)`, then the last rate down to `ε_N`.
fn omega(k: &KnotSeries, t: f64) -> f64 {
    let (lv, tm) = (&k.levels, &k.times);
    let n_knots = tm.len();
    if t <= tm[0] {
        return lv[0];
    }
    if let Some(n) = (0..n_knots.saturating_sub(1)).find(|n| t <= tm[n + 1]) {
        let frac = (t - tm[n]) / (tm[n + 1] - tm[n]);
        return lv[n] * 0.5f64.powf(frac);
    }
    let last = tm[n_knots - 1];
    let period = if n_knots >= 2 { last - tm[n_knots - 2] } else { last };
    let frac = (t - last) / period;
    (lv[n_knots - 1] * 0.5f64.powf(frac)).max(lv[n_knots])
}

/// `β(r, t) = sup_{s ≤ r} ω(s, t)` over the `δ` grid, with offset `c`.
pub fn kl_envelope(sigma: &MonotoneTable, c: f64, tau: &TauTable, delta_grid: &[f64]) -> Result<KLEnvelope> {
    if delta_grid.is_empty() || delta_grid[0] <= 0.0 || delta_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("δ grid must be positive and strictly increasing"));
    }
    let eps_min = tau.eps[0];
    let mut knots = Vec::with_capacity(delta_grid.len());
    for delta in delta_grid {
        let s = sigma.eval(*delta);
        if !(s > 0.0) {
            return Err(Error::invalid(format!("σ({delta}) must be positive")));
        }
        let n_max = ((s / eps_min).log2().floor() as usize).clamp(1, MAX_KNOTS);
        let levels: Vec<f64> = (0..=n_max).map(|n| s / 2f64.powi(n as i32)).collect();
        let times = knot_times(&levels, *delta, tau)?;
        knots.push(KnotSeries {
            delta: *delta,
            levels,
            times,
        });
    }

    let mut t_axis = vec![0.0];
    for k in &knots {
        let tm = &k.times;
        t_axis.extend_from_slice(tm);
        for w in tm.windows(2) {
            for q in 1..=INTERIOR_POINTS {
                t_axis.push(w[0] + (w[1] - w[0]) * q as f64 / (INTERIOR_POINTS + 1) as f64);
            }
        }
        let last = *tm.last().expect("at least one knot");
        let period = if tm.len() >= 2 { last - tm[tm.len() - 2] } else { last };
        for q in 1..=TAIL_POINTS {
            t_axis.push(last + period * q as f64);
        }
    }
    t_axis.sort_by(f64::total_cmp);
    t_axis.dedup();

    let nt = t_axis.len();
    let mut r_axis = vec![0.0];
    r_axis.extend_from_slice(delta_grid);
    let mut beta = vec![0.0; nt];
    let mut prev = vec![0.0; nt];
    for k in &knots {
        let row: Vec<f64> = t_axis.iter().zip(&prev).map(|(t, p)| omega(k, *t).max(*p)).collect();
        beta.extend_from_slice(&row);
        prev = row;
    }
    let mut env = KLEnvelope::new(r_axis, t_axis, beta, c)?;
    env.knots = knots;
    env.check_monotone()?;
    Ok(env)
}

/// Fraction of `(x, d, t)` samples of `batch` with
/// `‖φ(t, x, d)‖_A ≤ β(‖x‖_A, t) + c + 2·tol·horizon`; states lost to a
/// blow-up count as failures.
pub fn validate_envelope(env: &KLEnvelope, set: &SetDescriptor, batch: &TrajectoryBatch, tol: f64) -> f64 {
    let horizon = batch.times.last().copied().unwrap_or(0.0);
    let slack = 2.0 * tol * horizon;
    let mut pass = 0usize;
    let mut total = 0usize;
    for (x, _, tr) in batch.iter() {
        let r = set.distance_unchecked(x);
        for (k, state) in tr.states.iter().enumerate() {
            if set.distance_unchecked(state) <= env.bound(r, batch.times[k]) + slack {
                pass += 1;
            }
        }
        total += batch.times.len();
    }
    if total == 0 {
        return 1.0;
    }
    pass as f64 / total as f64
}
