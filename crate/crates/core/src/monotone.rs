//! Sampled comparison-type functions.
//!
//! A [`MonotoneTable`] is a piecewise-linear function on strictly increasing
//! nonnegative breakpoints whose values are projected onto the declared
//! direction by the least dominating (upper isotonic) envelope. A
//! [`MonotoneGrid`] is the two-argument analogue with a direction per axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slope floor that makes nondecreasing tables strictly increasing.
pub const K_INFINITY_SLOPE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    NonDecreasing,
    NonIncreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    Clamp,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneTable {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    direction: Direction,
    extrapolation: Extrapolation,
}

fn check_axis(xs: &[f64], what: &str) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::invalid(format!("{what} must be nonempty")));
    }
    if xs.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::invalid(format!("{what} must be finite and nonnegative")));
    }
    if xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid(format!("{what} must be strictly increasing")));
    }
    Ok(())
}

/// In-place least dominating projection onto the given direction.
fn upper_envelope(values: &mut [f64], direction: Direction) {
    match direction {
        Direction::NonDecreasing => {
            for i in 1..values.len() {
                values[i] = values[i].max(values[i - 1]);
            }
        }
        Direction::NonIncreasing => {
            for i in (0..values.len().saturating_sub(1)).rev() {
                values[i] = values[i].max(values[i + 1]);
            }
        }
    }
}

impl MonotoneTable {
    pub fn new(
        breakpoints: Vec<f64>,
        mut values: Vec<f64>,
        direction: Direction,
        extrapolation: Extrapolation,
    ) -> Result<Self> {
        check_axis(&breakpoints, "breakpoints")?;
        if values.len() != breakpoints.len() {
            return Err(Error::DimensionMismatch {
                expected: breakpoints.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::invalid("table values must be nonnegative"));
        }
        upper_envelope(&mut values, direction);
        Ok(MonotoneTable {
            breakpoints,
            values,
            direction,
            extrapolation,
        })
    }

    /// A nondecreasing table with linear extrapolation and the strictness
    /// slope floor, anchored at `(0, 0)` when the breakpoints start above 0.
    pub fn k_infinity(mut breakpoints: Vec<f64>, mut values: Vec<f64>) -> Result<Self> {
        if breakpoints.first().is_some_and(|b| *b > 0.0) {
            breakpoints.insert(0, 0.0);
            values.insert(0, 0.0);
        }
        Ok(Self::new(
            breakpoints,
            values,
            Direction::NonDecreasing,
            Extrapolation::Linear,
        )?
        .with_slope_floor(K_INFINITY_SLOPE_FLOOR))
    }

    /// Samples `f` on `breakpoints`, then projects.
    pub fn from_fn(
        breakpoints: Vec<f64>,
        direction: Direction,
        extrapolation: Extrapolation,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = breakpoints.iter().map(|x| f(*x)).collect();
        Self::new(breakpoints, values, direction, extrapolation)
    }

    /// Raise values so that consecutive increments are at least `floor`
    /// times the breakpoint spacing. No-op for nonincreasing tables.
    pub fn with_slope_floor(mut self, floor: f64) -> Self {
        if self.direction == Direction::NonDecreasing {
            for i in 1..self.values.len() {
                let min = self.values[i - 1] + floor * (self.breakpoints[i] - self.breakpoints[i - 1]);
                if self.values[i] < min {
                    self.values[i] = min;
                }
            }
        }
        self
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn extrapolation(&self) -> Extrapolation {
        self.extrapolation
    }

    pub fn eval(&self, x: f64) -> f64 {
        let b = &self.breakpoints;
        let v = &self.values;
        let k = b.len();
        if k == 1 {
            return v[0];
        }
        let y = if x <= b[0] {
            match self.extrapolation {
                Extrapolation::Clamp => v[0],
                Extrapolation::Linear => v[0] + (v[1] - v[0]) / (b[1] - b[0]) * (x - b[0]),
            }
        } else if x >= b[k - 1] {
            match self.extrapolation {
                Extrapolation::Clamp => v[k - 1],
                Extrapolation::Linear => {
                    let mut slope = (v[k - 1] - v[k - 2]) / (b[k - 1] - b[k - 2]);
                    if self.direction == Direction::NonDecreasing {
                        slope = slope.max(K_INFINITY_SLOPE_FLOOR);
                    }
                    v[k - 1] + slope * (x - b[k - 1])
                }
            }
        } else {
            let j = b.partition_point(|bp| *bp <= x);
            let (x0, x1) = (b[j - 1], b[j]);
            v[j - 1] + (v[j] - v[j - 1]) * (x - x0) / (x1 - x0)
        };
        y.max(0.0)
    }

    pub fn is_monotone(&self) -> bool {
        self.values.windows(2).all(|w| match self.direction {
            Direction::NonDecreasing => w[1] >= w[0],
            Direction::NonIncreasing => w[1] <= w[0],
        })
    }
}

/// Least monotone table of the declared direction dominating every sample.
///
/// Samples sharing an argument are merged by their maximum; the result
/// interpolates the upper isotonic envelope on the sorted arguments.
pub fn fit_monotone_envelope(samples: &[(f64, f64)], direction: Direction) -> Result<MonotoneTable> {
    if samples.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples to fit an envelope, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|(a, v)| !a.is_finite() || v.is_nan()) {
        return Err(Error::invalid("sample arguments must be finite"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut args: Vec<f64> = Vec::with_capacity(sorted.len());
    let mut vals: Vec<f64> = Vec::with_capacity(sorted.len());
    for (a, v) in sorted {
        if args.last() == Some(&a) {
            let last = vals.last_mut().expect("paired with args");
            *last = last.max(v);
        } else {
            args.push(a);
            vals.push(v);
        }
    }
    let vals = vals.into_iter().map(|v| v.max(0.0)).collect();
    MonotoneTable::new(args, vals, direction, Extrapolation::Clamp)
}

/// Two-argument monotone table on a rectangular grid, evaluated bilinearly
/// with clamping outside the grid. Values are stored row-major in `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneGrid {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<f64>,
    x_direction: Direction,
    y_direction: Direction,
}

impl MonotoneGrid {
    pub fn new(
        xs: Vec<f64>,
        ys: Vec<f64>,
        mut values: Vec<f64>,
        x_direction: Direction,
        y_direction: Direction,
    ) -> Result<Self> {
        check_axis(&xs, "grid x axis")?;
        check_axis(&ys, "grid y axis")?;
        if values.len() != xs.len() * ys.len() {
            return Err(Error::DimensionMismatch {
                expected: xs.len() * ys.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("grid values must not be NaN"));
        }
        let (nx, ny) = (xs.len(), ys.len());
        // cumulative max along each axis gives the max over the dominated quadrant
        for j in 0..ny {
            let mut col: Vec<f64> = (0..nx).map(|i| values[i * ny + j]).collect();
            upper_envelope(&mut col, x_direction);
            for i in 0..nx {
                values[i * ny + j] = col[i];
            }
        }
        for i in 0..nx {
            upper_envelope(&mut values[i * ny..(i + 1) * ny], y_direction);
        }
        Ok(MonotoneGrid {
            xs,
            ys,
            values,
            x_direction,
            y_direction,
        })
    }

    pub fn from_fn(
        xs: Vec<f64>,
        ys: Vec<f64>,
        x_direction: Direction,
        y_direction: Direction,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let values = xs
            .iter()
            .flat_map(|x| ys.iter().map(move |y| (*x, *y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(xs, ys, values, x_direction, y_direction)
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn directions(&self) -> (Direction, Direction) {
        (self.x_direction, self.y_direction)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ys.len() + j]
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let (i0, i1, wx) = bracket(&self.xs, x);
        let (j0, j1, wy) = bracket(&self.ys, y);
        let v00 = self.at(i0, j0);
        let v01 = self.at(i0, j1);
        let v10 = self.at(i1, j0);
        let v11 = self.at(i1, j1);
        (1.0 - wx) * ((1.0 - wy) * v00 + wy * v01) + wx * ((1.0 - wy) * v10 + wy * v11)
    }

    pub fn is_monotone(&self) -> bool {
        let ok = |a: f64, b: f64, d: Direction| match d {
            Direction::NonDecreasing => b >= a,
            Direction::NonIncreasing => b <= a,
        };
        let (nx, ny) = (self.xs.len(), self.ys.len());
        for i in 0..nx {
            for j in 0..ny {
                if i + 1 < nx && !ok(self.at(i, j), self.at(i + 1, j), self.x_direction) {
                    return false;
                }
                if j + 1 < ny && !ok(self.at(i, j), self.at(i, j + 1), self.y_direction) {
                    return false;
                }
            }
        }
        true
    }
}

/// Index pair and weight for linear interpolation with clamping.
pub(crate) fn bracket(axis: &[f64], x: f64) -> (usize, usize, f64) {
    let k = axis.len();
    if k == 1 || x <= axis[0] {
        return (0, 0, 0.0);
    }
    if x >= axis[k - 1] {
        return (k - 1, k - 1, 0.0);
    }
    let j = axis.partition_point(|a| *a <= x);
    let w = (x - axis[j - 1]) / (axis[j] - axis[j - 1]);
    (j - 1, j, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_samples_give_identity_table() {
        let t = fit_monotone_envelope(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)], Direction::NonDecreasing)
            .unwrap();
        assert_eq!(t.values(), &[1.0, 2.0, 3.0]);
        assert_eq!(t.eval(2.5), 2.5);
    }

    #[test]
    fn violators_are_pooled_upward() {
        let t = fit_monotone_envelope(&[(1.0, 5.0), (2.0, 3.0), (3.0, 4.0)], Direction::NonDecreasing)
            .unwrap();
        assert_eq!(t.breakpoints(), &[1.0, 2.0, 3.0]);
        assert_eq!(t.values(), &[5.0, 5.0, 5.0]);
    }

    #[test]
    fn nonincreasing_constant() {
        let t = fit_monotone_envelope(&[(1.0, 3.0), (2.0, 3.0)], Direction::NonIncreasing).unwrap();
        assert_eq!(t.values(), &[3.0, 3.0]);
        assert_eq!(t.eval(0.0), 3.0);
        assert_eq!(t.eval(10.0), 3.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(fit_monotone_envelope(&[], Direction::NonDecreasing).is_err());
        assert!(fit_monotone_envelope(&[(1.0, 1.0)], Direction::NonDecreasing).is_err());
    }

    #[test]
    fn k_infinity_table_is_strict_and_anchored() {
        let t = MonotoneTable::k_infinity(vec![1.0, 2.0, 3.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(t.eval(0.0), 0.0);
        for w in t.values().windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(t.eval(10.0) > t.eval(3.0));
    }

    #[test]
    fn grid_projection_is_least_dominating() {
        let g = MonotoneGrid::new(
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0, 0.0, 2.0],
            Direction::NonDecreasing,
            Direction::NonDecreasing,
        )
        .unwrap();
        assert_eq!(g.values(), &[1.0, 1.0, 1.0, 2.0]);
        assert!(g.is_monotone());
        assert_eq!(g.eval(0.5, 0.0), 1.0);
    }

    proptest! {
        #[test]
        fn envelope_dominates_and_is_monotone(
            raw in prop::collection::vec((0.0f64..100.0, 0.0f64..50.0), 2..40),
            up in any::<bool>(),
        ) {
            let dir = if up { Direction::NonDecreasing } else { Direction::NonIncreasing };
            let t = fit_monotone_envelope(&raw, dir).unwrap();
            for (a, v) in &raw {
                prop_assert!(t.eval(*a) >= *v - 1e-12);
            }
            prop_assert!(t.is_monotone());
            // least: every breakpoint value is attained by some sample it must dominate
            for (b, v) in t.breakpoints().iter().zip(t.values()) {
                let witness = raw.iter().any(|(a, s)| {
                    *s == *v && match dir {
                        Direction::NonDecreasing => a <= b,
                        Direction::NonIncreasing => a >= b,
                    }
                });
                prop_assert!(witness);
            }
        }

        #[test]
        fn grid_projection_monotone_and_dominating(
            vals in prop::collection::vec(0.0f64..10.0, 12),
        ) {
            let g = MonotoneGrid::new(
                vec![0.5, 1.0, 2.0],
                vec![0.0, 1.0, 2.0, 3.0],
                vals.clone(),
                Direction::NonIncreasing,
                Direction::NonDecreasing,
            ).unwrap();
            prop_assert!(g.is_monotone());
            for (k, v) in vals.iter().enumerate() {
                prop_assert!(g.values()[k] >= *v);
            }
        }
    }
}
