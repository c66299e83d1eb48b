//! Bounded target sets and the distance `‖x‖_A` to them.
//!
//! All distances are Euclidean. Ball and box distances are closed form; point
//! sets are searched exhaustively.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type State = Vec<f64>;

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetDescriptor {
    PointSet { points: Vec<State> },
    Ball { center: State, radius: f64 },
    Box { lower: State, upper: State },
}

impl SetDescriptor {
    pub fn point(p: State) -> Result<Self> {
        Self::points(vec![p])
    }

    pub fn origin(dim: usize) -> Self {
        SetDescriptor::PointSet {
            points: vec![vec![0.0; dim]],
        }
    }

    pub fn points(points: Vec<State>) -> Result<Self> {
        let s = SetDescriptor::PointSet { points };
        s.validate()?;
        Ok(s)
    }

    pub fn ball(center: State, radius: f64) -> Result<Self> {
        let s = SetDescriptor::Ball { center, radius };
        s.validate()?;
        Ok(s)
    }

    pub fn new_box(lower: State, upper: State) -> Result<Self> {
        let s = SetDescriptor::Box { lower, upper };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SetDescriptor::PointSet { points } => {
                let first = points
                    .first()
                    .ok_or_else(|| Error::invalid("point set must be nonempty"))?;
                if first.is_empty() {
                    return Err(Error::invalid("zero-dimensional point"));
                }
                for p in points {
                    if p.len() != first.len() {
                        return Err(Error::DimensionMismatch {
                            expected: first.len(),
                            got: p.len(),
                        });
                    }
                    if p.iter().any(|v| !v.is_finite()) {
                        return Err(Error::invalid("point set contains non-finite entries"));
                    }
                }
            }
            SetDescriptor::Ball { center, radius } => {
                if center.is_empty() || center.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("ball center must be a finite vector"));
                }
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::invalid(format!("ball radius {radius} must be >= 0")));
                }
            }
            SetDescriptor::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(Error::DimensionMismatch {
                        expected: lower.len(),
                        got: upper.len(),
                    });
                }
                if lower.is_empty() {
                    return Err(Error::invalid("zero-dimensional box"));
                }
                for (l, u) in lower.iter().zip(upper) {
                    if !(l.is_finite() && u.is_finite() && l <= u) {
                        return Err(Error::invalid(format!("box bounds [{l}, {u}] are invalid")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            SetDescriptor::PointSet { points } => points[0].len(),
            SetDescriptor::Ball { center, .. } => center.len(),
            SetDescriptor::Box { lower, .. } => lower.len(),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `‖x‖_A = inf_{y ∈ A} ‖x − y‖`.
    pub fn distance_to(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.distance_unchecked(x))
    }

    pub(crate) fn distance_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            SetDescriptor::PointSet { points } => points
                .iter()
                .map(|p| distance(x, p))
                .fold(f64::INFINITY, f64::min),
            SetDescriptor::Ball { center, radius } => (distance(x, center) - radius).max(0.0),
            SetDescriptor::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| {
                    let d = if v < l {
                        l - v
                    } else if v > u {
                        v - u
                    } else {
                        0.0
                    };
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// A point of `A` realizing the distance to `x`.
    pub fn nearest_point(&self, x: &[f64]) -> Result<State> {
        self.check_dim(x)?;
        Ok(match self {
            SetDescriptor::PointSet { points } => points
                .iter()
                .min_by(|a, b| distance(x, a).total_cmp(&distance(x, b)))
                .cloned()
                .expect("point set is nonempty"),
            SetDescriptor::Ball { center, radius } => {
                let d = distance(x, center);
                if d <= *radius {
                    x.to_vec()
                } else {
                    center
                        .iter()
                        .zip(x)
                        .map(|(c, v)| c + (v - c) * radius / d)
                        .collect()
                }
            }
            SetDescriptor::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| v.clamp(*l, *u))
                .collect(),
        })
    }

    /// `‖A‖ = sup_{y ∈ A} ‖y‖`.
    pub fn set_norm(&self) -> f64 {
        match self {
            SetDescriptor::PointSet { points } => {
                points.iter().map(|p| norm(p)).fold(0.0, f64::max)
            }
            SetDescriptor::Ball { center, radius } => norm(center) + radius,
            SetDescriptor::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| {
                    let m = l.abs().max(u.abs());
                    m * m
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.distance_unchecked(x) == 0.0
    }

    /// Whether the set has nonempty interior.
    pub fn has_interior(&self) -> bool {
        match self {
            SetDescriptor::PointSet { .. } => false,
            SetDescriptor::Ball { radius, .. } => *radius > 0.0,
            SetDescriptor::Box { lower, upper } => lower.iter().zip(upper).all(|(l, u)| u > l),
        }
    }

    pub fn bounding_box(&self) -> (State, State) {
        match self {
            SetDescriptor::PointSet { points } => {
                let n = points[0].len();
                let mut lo = vec![f64::INFINITY; n];
                let mut hi = vec![f64::NEG_INFINITY; n];
                for p in points {
                    for i in 0..n {
                        lo[i] = lo[i].min(p[i]);
                        hi[i] = hi[i].max(p[i]);
                    }
                }
                (lo, hi)
            }
            SetDescriptor::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            SetDescriptor::Box { lower, upper } => (lower.clone(), upper.clone()),
        }
    }

    /// Deterministic-prefix sample of points of `A` itself: every listed
    /// point, box corners or ball poles first, then uniform draws.
    pub fn sample_inside<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<State> {
        let mut out = Vec::with_capacity(count);
        match self {
            SetDescriptor::PointSet { points } => {
                for i in 0..count {
                    if i < points.len() {
                        out.push(points[i].clone());
                    } else {
                        out.push(points[rng.random_range(0..points.len())].clone());
                    }
                }
            }
            SetDescriptor::Ball { center, radius } => {
                let n = center.len();
                for i in 0..count {
                    if i < 2 * n {
                        let mut x = center.clone();
                        x[i / 2] += if i % 2 == 0 { *radius } else { -radius };
                        out.push(x);
                    } else {
                        let u = random_unit(n, rng);
                        let rho = radius * rng.random::<f64>().powf(1.0 / n as f64);
                        out.push(center.iter().zip(&u).map(|(c, v)| c + rho * v).collect());
                    }
                }
            }
            SetDescriptor::Box { lower, upper } => {
                let n = lower.len();
                let corners = if n < 16 { 1usize << n } else { 0 };
                for i in 0..count {
                    if i < corners {
                        out.push(
                            (0..n)
                                .map(|k| if (i >> k) & 1 == 1 { upper[k] } else { lower[k] })
                                .collect(),
                        );
                    } else {
                        out.push(
                            lower
                                .iter()
                                .zip(upper)
                                .map(|(l, u)| l + (u - l) * rng.random::<f64>())
                                .collect(),
                        );
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> State {
    loop {
        let v: State = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let len = norm(&v);
        if len > 1e-12 {
            return v.into_iter().map(|x| x / len).collect();
        }
    }
}

/// Share of sampler draws placed in the boundary shell `[0.9 r, r)`.
const SHELL_FRACTION: f64 = 0.3;

/// Sampler of the open neighborhood `B_r(A) = {x : ‖x‖_A < r}`.
///
/// The first `2n` draws are the axis extremes (the set's anchor pushed just
/// short of distance `r` along `±e_k`), a further share lands in the shell
/// `[0.9 r, r)`, the rest fill the neighborhood.
#[derive(Debug, Clone)]
pub struct BallSampler {
    set: SetDescriptor,
    radius: f64,
}

pub fn ball_around_set(set: &SetDescriptor, radius: f64) -> Result<BallSampler> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!("neighborhood radius {radius} must be > 0")));
    }
    set.validate()?;
    Ok(BallSampler {
        set: set.clone(),
        radius,
    })
}

impl BallSampler {
    pub fn set(&self) -> &SetDescriptor {
        &self.set
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn sample_seeded(&self, count: usize, seed: u64) -> Vec<State> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample(count, &mut rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, count: usize, rng: &mut R) -> Vec<State> {
        let n = self.set.dim();
        let r = self.radius;
        let mut out = Vec::with_capacity(count);
        let axes = (2 * n).min(count);
        for i in 0..axes {
            out.push(self.axis_point(i / 2, i % 2 == 0));
        }
        let rest = count - axes;
        let shell = (rest as f64 * SHELL_FRACTION).ceil() as usize;
        for i in 0..rest {
            let x = if i < shell {
                let rho = r * (0.9 + 0.1 * rng.random::<f64>());
                self.shell_point(rho.min(r * (1.0 - 1e-9)), rng)
            } else {
                self.interior_point(rng)
            };
            out.push(x);
        }
        out
    }

    fn axis_point(&self, k: usize, positive: bool) -> State {
        let r = self.radius * (1.0 - 1e-9);
        let sign = if positive { 1.0 } else { -1.0 };
        match &self.set {
            SetDescriptor::PointSet { points } => {
                let mut x = points[0].clone();
                x[k] += sign * r;
                x
            }
            SetDescriptor::Ball { center, radius } => {
                let mut x = center.clone();
                x[k] += sign * (radius + r);
                x
            }
            SetDescriptor::Box { lower, upper } => {
                let mut x: State = lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)).collect();
                x[k] = if positive { upper[k] + r } else { lower[k] - r };
                x
            }
        }
    }

    /// A point at distance (close to) `rho` from the set.
    fn shell_point<R: Rng + ?Sized>(&self, rho: f64, rng: &mut R) -> State {
        let n = self.set.dim();
        match &self.set {
            SetDescriptor::PointSet { points } => {
                let p = &points[rng.random_range(0..points.len())];
                let u = random_unit(n, rng);
                p.iter().zip(&u).map(|(a, b)| a + rho * b).collect()
            }
            SetDescriptor::Ball { center, radius } => {
                let u = random_unit(n, rng);
                center
                    .iter()
                    .zip(&u)
                    .map(|(c, b)| c + (radius + rho) * b)
                    .collect()
            }
            SetDescriptor::Box { lower, upper } => {
                if rng.random::<bool>() {
                    // face: exact distance rho along the outward normal
                    let mut x: State = lower
                        .iter()
                        .zip(upper)
                        .map(|(l, u)| l + (u - l) * rng.random::<f64>())
                        .collect();
                    let k = rng.random_range(0..n);
                    x[k] = if rng.random::<bool>() {
                        upper[k] + rho
                    } else {
                        lower[k] - rho
                    };
                    x
                } else {
                    // corner: outward orthant direction
                    let u = random_unit(n, rng);
                    (0..n)
                        .map(|k| {
                            if rng.random::<bool>() {
                                upper[k] + rho * u[k].abs()
                            } else {
                                lower[k] - rho * u[k].abs()
                            }
                        })
                        .collect()
                }
            }
        }
    }

    fn interior_point<R: Rng + ?Sized>(&self, rng: &mut R) -> State {
        let n = self.set.dim();
        let r = self.radius;
        match &self.set {
            SetDescriptor::PointSet { points } => {
                let p = &points[rng.random_range(0..points.len())];
                let u = random_unit(n, rng);
                let rho = r * rng.random::<f64>().powf(1.0 / n as f64);
                p.iter().zip(&u).map(|(a, b)| a + rho * b).collect()
            }
            SetDescriptor::Ball { center, radius } => {
                let u = random_unit(n, rng);
                let rho = (radius + r) * rng.random::<f64>().powf(1.0 / n as f64);
                center.iter().zip(&u).map(|(c, b)| c + rho * b).collect()
            }
            SetDescriptor::Box { lower, upper } => {
                for _ in 0..64 {
                    let x: State = lower
                        .iter()
                        .zip(upper)
                        .map(|(l, u)| (l - r) + (u - l + 2.0 * r) * rng.random::<f64>())
                        .collect();
                    if self.set.distance_unchecked(&x) < r {
                        return x;
                    }
                }
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| l + (u - l) * rng.random::<f64>())
                    .collect()
            }
        }
    }
}
