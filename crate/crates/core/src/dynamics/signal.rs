//! Piecewise-constant disturbance signals on a uniform time grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Compact box `D = [lower, upper] ⊂ ℝᵐ` of disturbance values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DisturbanceBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::invalid("disturbance box bounds must be nonempty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l <= u)) {
            return Err(Error::invalid("disturbance box must be compact with lower <= upper"));
        }
        Ok(DisturbanceBox { lower, upper })
    }

    /// `[-m, m]`; `m = 0` gives the trivial box `{0}`.
    pub fn symmetric(m: f64) -> Result<Self> {
        Self::new(vec![-m], vec![m])
    }

    pub fn zero() -> Self {
        DisturbanceBox {
            lower: vec![0.0],
            upper: vec![0.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower.iter().zip(&self.upper).all(|(l, u)| l == u)
    }

    pub fn contains(&self, d: &[f64]) -> bool {
        d.len() == self.dim()
            && d
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *l <= *v && *v <= *u)
    }

    pub fn clamp(&self, d: &mut [f64]) {
        for (v, (l, u)) in d.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn vertex_count(&self) -> usize {
        1usize << self.dim().min(20)
    }

    /// Vertex `k` in binary order: bit `i` selects the upper bound of axis `i`.
    pub fn vertex(&self, k: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|i| if (k >> i) & 1 == 1 { self.upper[i] } else { self.lower[i] })
            .collect()
    }

    pub fn uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSignal {
    /// Grid step Δ; segment `k` covers `[kΔ, (k+1)Δ)`.
    pub step: f64,
    pub values: Vec<Vec<f64>>,
    /// Value after the last listed segment.
    pub tail: Vec<f64>,
}

impl DisturbanceSignal {
    pub fn new(step: f64, values: Vec<Vec<f64>>, tail: Vec<f64>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::invalid(format!("signal step {step} must be > 0")));
        }
        if values.iter().any(|v| v.len() != tail.len()) {
            return Err(Error::invalid("signal segment dimensions disagree"));
        }
        Ok(DisturbanceSignal { step, values, tail })
    }

    pub fn constant(step: f64, value: Vec<f64>) -> Self {
        DisturbanceSignal {
            step,
            values: Vec::new(),
            tail: value,
        }
    }

    pub fn dim(&self) -> usize {
        self.tail.len()
    }

    /// Segment index of `t`, snapping values within 1e-9 of a grid point.
    pub fn segment_index(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let q = t / self.step;
        let k = q.round();
        let idx = if (q - k).abs() < 1e-9 { k } else { q.floor() };
        idx as usize
    }

    pub fn segment(&self, k: usize) -> &[f64] {
        self.values.get(k).unwrap_or(&self.tail)
    }

    pub fn value_at(&self, t: f64) -> &[f64] {
        self.segment(self.segment_index(t))
    }

    /// Switching times `kΔ` strictly inside `(t0, t1)`.
    pub fn switch_times(&self, t0: f64, t1: f64) -> Vec<f64> {
        let first = self.segment_index(t0) + 1;
        (first..=self.values.len())
            .map(|k| k as f64 * self.step)
            .take_while(|s| *s < t1 - 1e-12 * t1.abs().max(1.0))
            .filter(|s| *s > t0)
            .collect()
    }

    /// `d(· + kΔ)`.
    pub fn shift_segments(&self, k: usize) -> Self {
        DisturbanceSignal {
            step: self.step,
            values: self.values.iter().skip(k).cloned().collect(),
            tail: self.tail.clone(),
        }
    }

    /// `d(· + t)` for a grid multiple `t`.
    pub fn shift(&self, t: f64) -> Result<Self> {
        Ok(self.shift_segments(self.grid_index(t)?))
    }

    fn grid_index(&self, t: f64) -> Result<usize> {
        let q = t / self.step;
        let k = q.round();
        if t < 0.0 || (q - k).abs() > 1e-9 * q.abs().max(1.0) {
            return Err(Error::invalid(format!(
                "time {t} is not a multiple of the signal step {}",
                self.step
            )));
        }
        Ok(k as usize)
    }

    /// `d₁` on `[0, kΔ)`, then `d₂(· − kΔ)`.
    pub fn concatenate(first: &Self, second: &Self, k: usize) -> Result<Self> {
        if first.step != second.step || first.dim() != second.dim() {
            return Err(Error::invalid("concatenated signals must share step and dimension"));
        }
        let mut values: Vec<Vec<f64>> = (0..k).map(|i| first.segment(i).to_vec()).collect();
        values.extend(second.values.iter().cloned());
        Ok(DisturbanceSignal {
            step: first.step,
            values,
            tail: second.tail.clone(),
        })
    }

    pub fn concatenate_at(first: &Self, second: &Self, t: f64) -> Result<Self> {
        let k = first.grid_index(t)?;
        Self::concatenate(first, second, k)
    }

    pub fn lies_in(&self, d: &DisturbanceBox) -> bool {
        d.contains(&self.tail) && self.values.iter().all(|v| d.contains(v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalStrategy {
    /// Segment values uniform in `D`.
    Uniform,
    /// Segment values drawn from the vertices of `D` (bang-bang).
    Extreme,
    /// Constant signals at uniformly drawn values.
    Constant,
    /// Constant vertex signals first, then extreme, uniform and constant
    /// signals in rotation.
    Mixed,
}

pub fn sample_signals(
    d: &DisturbanceBox,
    step: f64,
    horizon: f64,
    count: usize,
    strategy: SignalStrategy,
    seed: u64,
) -> Result<Vec<DisturbanceSignal>> {
    if count == 0 {
        return Err(Error::invalid("signal count must be >= 1"));
    }
    if !(step > 0.0) || !(horizon >= 0.0) {
        return Err(Error::invalid("signal step must be > 0 and horizon >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let segments = ((horizon / step).ceil() as usize).max(1);
    if d.is_degenerate() {
        return Ok(vec![DisturbanceSignal::constant(step, d.lower.clone()); count]);
    }
    let vertex_signals = d.vertex_count().min((count / 2).max(1));
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let kind = match strategy {
            SignalStrategy::Mixed if i < vertex_signals => {
                out.push(DisturbanceSignal::constant(step, d.vertex(i)));
                continue;
            }
            SignalStrategy::Mixed => match (i - vertex_signals) % 3 {
                0 => SignalStrategy::Extreme,
                1 => SignalStrategy::Uniform,
                _ => SignalStrategy::Constant,
            },
            s => s,
        };
        let sig = match kind {
            SignalStrategy::Uniform => {
                let values = (0..segments).map(|_| d.uniform(&mut rng)).collect();
                DisturbanceSignal::new(step, values, d.uniform(&mut rng))?
            }
            SignalStrategy::Extreme => {
                let nv = d.vertex_count();
                let values = (0..segments)
                    .map(|_| d.vertex(rng.random_range(0..nv)))
                    .collect();
                DisturbanceSignal::new(step, values, d.vertex(rng.random_range(0..nv)))?
            }
            _ => DisturbanceSignal::constant(step, d.uniform(&mut rng)),
        };
        out.push(sig);
    }
    Ok(out)
}
