use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::integrator::{integrate, IntegratorOptions, BLOW_UP_GUARD};
use super::signal::{DisturbanceBox, DisturbanceSignal};
use crate::error::{Error, Result};
use crate::expr::{Expr, Func};
use crate::set::{norm, State};

/// Snap threshold for right-hand sides with non-Lipschitz cube roots.
pub const CUBE_ROOT_CLAMP: f64 = 1e-9;

pub type RhsFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;

/// `ẋ = f(x, d)` with `d` ranging over a compact box.
#[derive(Clone)]
pub struct OdeSystem {
    name: String,
    dim: usize,
    disturbance: DisturbanceBox,
    rhs: Arc<RhsFn>,
    zero_clamp: Option<f64>,
}

impl fmt::Debug for OdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OdeSystem")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("disturbance", &self.disturbance)
            .field("zero_clamp", &self.zero_clamp)
            .finish()
    }
}

impl OdeSystem {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        disturbance: DisturbanceBox,
        rhs: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        OdeSystem {
            name: name.into(),
            dim,
            disturbance,
            rhs: Arc::new(rhs),
            zero_clamp: None,
        }
    }

    pub fn with_zero_clamp(mut self, eps: f64) -> Self {
        self.zero_clamp = Some(eps);
        self
    }

    /// Right-hand side from one expression per state component over the
    /// variables `x1..xn, d1..dm`.
    pub fn from_expressions(
        name: impl Into<String>,
        components: &[String],
        disturbance: DisturbanceBox,
    ) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::invalid("a system needs at least one component"));
        }
        let m = disturbance.dim();
        let names: Vec<String> = (1..=n)
            .map(|i| format!("x{i}"))
            .chain((1..=m).map(|j| format!("d{j}")))
            .collect();
        let vars: Vec<&str> = names.iter().map(String::as_str).collect();
        let exprs = components
            .iter()
            .map(|src| Expr::parse(src, &vars))
            .collect::<Result<Vec<_>>>()?;
        let cube = exprs.iter().any(|e| e.uses(Func::CbrtSigned));
        let sys = OdeSystem::new(name, n, disturbance, move |x, d, out| {
            let mut slots = [0.0f64; 16];
            let slots: &mut [f64] = if n + m <= 16 {
                &mut slots[..n + m]
            } else {
                return eval_heap(&exprs, x, d, out);
            };
            slots[..n].copy_from_slice(x);
            slots[n..].copy_from_slice(d);
            for (o, e) in out.iter_mut().zip(&exprs) {
                *o = e.eval(slots);
            }
        });
        Ok(if cube { sys.with_zero_clamp(CUBE_ROOT_CLAMP) } else { sys })
    }

    pub fn rhs(&self, x: &[f64], d: &[f64], out: &mut [f64]) {
        (self.rhs)(x, d, out)
    }
}

fn eval_heap(exprs: &[Expr], x: &[f64], d: &[f64], out: &mut [f64]) {
    let slots: Vec<f64> = x.iter().chain(d).copied().collect();
    for (o, e) in out.iter_mut().zip(exprs) {
        *o = e.eval(&slots);
    }
}

/// `ẋ = A x`, flowed by the matrix exponential.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub name: String,
    pub matrix: DMatrix<f64>,
}

impl LinearSystem {
    pub fn new(name: impl Into<String>, matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(Error::invalid("system matrix must be square and nonempty"));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("system matrix entries must be finite"));
        }
        Ok(LinearSystem {
            name: name.into(),
            matrix,
        })
    }

    /// `T(t) = e^{At}`.
    pub fn semigroup(&self, t: f64) -> DMatrix<f64> {
        (&self.matrix * t).exp()
    }
}

#[derive(Debug, Clone)]
pub enum System {
    Ode(OdeSystem),
    Linear(LinearSystem),
}

/// Sampled trajectory `t_k ↦ φ(t_k, x, d)`; truncated at a blow-up.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<State>,
    /// Time at which the overflow guard was crossed, if it was.
    pub blow_up: Option<f64>,
}

impl System {
    pub fn name(&self) -> &str {
        match self {
            System::Ode(s) => &s.name,
            System::Linear(s) => &s.name,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            System::Ode(s) => s.dim,
            System::Linear(s) => s.matrix.nrows(),
        }
    }

    pub fn disturbance(&self) -> DisturbanceBox {
        match self {
            System::Ode(s) => s.disturbance.clone(),
            System::Linear(_) => DisturbanceBox::zero(),
        }
    }

    /// The same right-hand side with the disturbance box scaled by `factor`.
    pub fn scaled_disturbance(&self, factor: f64) -> Result<System> {
        match self {
            System::Linear(_) => Ok(self.clone()),
            System::Ode(o) => {
                let d = &o.disturbance;
                let lower = d.lower.iter().map(|v| v * factor).collect();
                let upper = d.upper.iter().map(|v| v * factor).collect();
                let mut scaled = o.clone();
                scaled.disturbance = DisturbanceBox::new(lower, upper)?;
                scaled.name = format!("{} with D x {factor}", o.name);
                Ok(System::Ode(scaled))
            }
        }
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, System::Linear(_))
    }

    fn check(&self, x: &[f64], d: &DisturbanceSignal, tol: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if d.dim() != self.disturbance().dim() {
            return Err(Error::DimensionMismatch {
                expected: self.disturbance().dim(),
                got: d.dim(),
            });
        }
        if !(1e-13..=1e-3).contains(&tol) {
            return Err(Error::invalid(format!("integrator tolerance {tol} outside [1e-12, 1e-3]")));
        }
        Ok(())
    }

    /// `φ(t, x, d)`.
    pub fn flow(&self, t: f64, x: &[f64], d: &DisturbanceSignal, tol: f64) -> Result<State> {
        self.flow_between(0.0, t, x, d, tol)
    }

    /// State at absolute time `t1` given the state `x` at `t0`, with the
    /// signal read at absolute times.
    pub fn flow_between(&self, t0: f64, t1: f64, x: &[f64], d: &DisturbanceSignal, tol: f64) -> Result<State> {
        self.check(x, d, tol)?;
        if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
            return Err(Error::invalid(format!("flow interval [{t0}, {t1}] is invalid")));
        }
        let mut y = x.to_vec();
        let mut h = 0.0;
        self.advance(&mut y, t0, t1, d, tol, &mut h)?;
        Ok(y)
    }

    /// Advances `y` from `t0` to `t1` in place; `h` carries the step size.
    pub(crate) fn advance_state(&self, y: &mut [f64], t0: f64, t1: f64, d: &DisturbanceSignal, tol: f64, h: &mut f64) -> Result<()> {
        self.check(y, d, tol)?;
        self.advance(y, t0, t1, d, tol, h)
    }

    fn advance(&self, y: &mut [f64], t0: f64, t1: f64, d: &DisturbanceSignal, tol: f64, h: &mut f64) -> Result<()> {
        if t1 <= t0 {
            return Ok(());
        }
        match self {
            System::Linear(lin) => {
                let e = lin.semigroup(t1 - t0);
                let v = e * DVector::from_column_slice(y);
                y.copy_from_slice(v.as_slice());
                if norm(y) > BLOW_UP_GUARD {
                    return Err(Error::BlowUp {
                        time: t1,
                        guard: BLOW_UP_GUARD,
                    });
                }
                Ok(())
            }
            System::Ode(ode) => {
                let opts = IntegratorOptions {
                    tol,
                    zero_clamp: ode.zero_clamp,
                };
                let mut a = t0;
                let mut pieces = d.switch_times(t0, t1);
                pieces.push(t1);
                for b in pieces {
                    let dv = d.value_at(a).to_vec();
                    integrate(|x, out| ode.rhs(x, &dv, out), y, a, b, &opts, h)?;
                    a = b;
                }
                Ok(())
            }
        }
    }

    /// States at every time of the increasing grid `times` (starting at 0).
    pub fn trajectory(&self, x: &[f64], d: &DisturbanceSignal, times: &[f64], tol: f64) -> Result<Trajectory> {
        self.check(x, d, tol)?;
        let mut states = Vec::with_capacity(times.len());
        let mut y = x.to_vec();
        let mut prev = 0.0;
        let mut h = 0.0;
        let mut cached: Option<(f64, DMatrix<f64>)> = None;
        for &t in times {
            if t < prev {
                return Err(Error::invalid("trajectory times must be nondecreasing"));
            }
            let res = match self {
                System::Linear(lin) if t > prev => {
                    let dt = t - prev;
                    let e = match &cached {
                        Some((c, m)) if (*c - dt).abs() <= 1e-14 * dt => m.clone(),
                        _ => {
                            let m = lin.semigroup(dt);
                            cached = Some((dt, m.clone()));
                            m
                        }
                    };
                    let v = e * DVector::from_column_slice(&y);
                    y.copy_from_slice(v.as_slice());
                    if norm(&y) > BLOW_UP_GUARD {
                        Err(Error::BlowUp {
                            time: t,
                            guard: BLOW_UP_GUARD,
                        })
                    } else {
                        Ok(())
                    }
                }
                _ => self.advance(&mut y, prev, t, d, tol, &mut h),
            };
            match res {
                Ok(()) => states.push(y.clone()),
                Err(Error::BlowUp { time, .. }) => {
                    return Ok(Trajectory {
                        states,
                        blow_up: Some(time),
                    })
                }
                Err(e) => return Err(e),
            }
            prev = t;
        }
        Ok(Trajectory {
            states,
            blow_up: None,
        })
    }
}
