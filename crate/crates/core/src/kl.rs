//! Tabulated class-𝒦ℒ envelope with offset: `‖φ(t,x,d)‖_A ≤ β(‖x‖_A, t) + c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monotone::bracket;

/// Construction knots of one row: `ω(δ, τ_n) = ε_{n-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnotSeries {
    pub delta: f64,
    /// `ε_0 = σ(δ), ε_1, …, ε_N` with `ε_n = σ(δ) / 2^n`.
    pub levels: Vec<f64>,
    /// `τ_1 < … < τ_N`.
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KLEnvelope {
    /// Radius breakpoints, starting at 0.
    pub r: Vec<f64>,
    /// Time breakpoints, starting at 0.
    pub t: Vec<f64>,
    /// `beta[i * t.len() + j] = β(r_i, t_j)`.
    pub beta: Vec<f64>,
    pub offset_c: f64,
    #[serde(default)]
    pub knots: Vec<KnotSeries>,
}

impl KLEnvelope {
    pub fn new(r: Vec<f64>, t: Vec<f64>, beta: Vec<f64>, offset_c: f64) -> Result<Self> {
        if r.is_empty() || t.is_empty() || beta.len() != r.len() * t.len() {
            return Err(Error::invalid("envelope grid shape mismatch"));
        }
        if r[0] != 0.0 || t[0] != 0.0 {
            return Err(Error::invalid("envelope axes must start at 0"));
        }
        if r.windows(2).any(|w| w[1] <= w[0]) || t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("envelope axes must be strictly increasing"));
        }
        if !(offset_c >= 0.0) || beta.iter().any(|b| !(*b >= 0.0)) {
            return Err(Error::invalid("envelope values must be nonnegative"));
        }
        Ok(KLEnvelope {
            r,
            t,
            beta,
            offset_c,
            knots: Vec::new(),
        })
    }

    /// Tabulate a closed-form `β` on the given axes.
    pub fn from_fn(r: Vec<f64>, t: Vec<f64>, offset_c: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let beta = r
            .iter()
            .flat_map(|ri| t.iter().map(move |tj| (*ri, *tj)))
            .map(|(ri, tj)| f(ri, tj))
            .collect();
        Self::new(r, t, beta, offset_c)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.beta[i * self.t.len() + j]
    }

    /// `β(r, t)`: rounded up to the next radius breakpoint, linear in `t`,
    /// held after the last time. Radii beyond the grid scale the last row
    /// proportionally.
    pub fn eval(&self, r: f64, t: f64) -> f64 {
        let nr = self.r.len();
        let (j0, j1, w) = bracket(&self.t, t);
        let row = |i: usize| (1.0 - w) * self.at(i, j0) + w * self.at(i, j1);
        if r <= 0.0 {
            return row(0);
        }
        let last = self.r[nr - 1];
        if r > last {
            return row(nr - 1) * r / last.max(f64::MIN_POSITIVE);
        }
        let i = self.r.partition_point(|ri| *ri < r);
        row(i)
    }

    pub fn bound(&self, r: f64, t: f64) -> f64 {
        self.eval(r, t) + self.offset_c
    }

    /// Cell-by-cell 𝒦ℒ monotonicity: nondecreasing in `r`, nonincreasing in `t`.
    pub fn check_monotone(&self) -> Result<()> {
        let (nr, nt) = (self.r.len(), self.t.len());
        for i in 0..nr {
            for j in 0..nt {
                if i + 1 < nr && self.at(i + 1, j) < self.at(i, j) {
                    return Err(Error::invalid(format!(
                        "β decreases in r at r = {}, t = {}",
                        self.r[i], self.t[j]
                    )));
                }
                if j + 1 < nt && self.at(i, j + 1) > self.at(i, j) {
                    return Err(Error::invalid(format!(
                        "β increases in t at r = {}, t = {}",
                        self.r[i], self.t[j]
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exp_envelope() -> KLEnvelope {
        let r = vec![0.0, 0.5, 1.0, 2.0];
        let t: Vec<f64> = (0..=40).map(|k| k as f64 * 0.25).collect();
        KLEnvelope::from_fn(r, t, 0.0, |r, t| r * (-t).exp()).unwrap()
    }

    #[test]
    fn closed_form_grid_is_monotone() {
        exp_envelope().check_monotone().unwrap();
    }

    #[test]
    fn eval_rounds_radius_up() {
        let env = exp_envelope();
        assert_eq!(env.eval(0.7, 0.0), 1.0);
        assert_eq!(env.eval(1.0, 0.0), 1.0);
        assert_eq!(env.eval(0.0, 1.0), 0.0);
        assert!((env.eval(4.0, 0.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn non_monotone_grid_detected() {
        let env = KLEnvelope::new(vec![0.0, 1.0], vec![0.0, 1.0], vec![0.0, 0.0, 1.0, 2.0], 0.0).unwrap();
        assert!(env.check_monotone().is_err());
    }

    #[test]
    fn axes_must_start_at_zero() {
        assert!(KLEnvelope::new(vec![1.0], vec![0.0], vec![1.0], 0.0).is_err());
    }
}
