//! Dormand–Prince 5(4) embedded Runge–Kutta pair with adaptive step size.
//!
//! One call integrates an autonomous right-hand side over `[t0, t1]` with the
//! disturbance held constant; callers restart at every switching time.

use crate::error::{Error, Result};
use crate::set::norm;

/// Overflow guard on the state norm.
pub const BLOW_UP_GUARD: f64 = 1e12;


const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const MAX_STEPS: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Per-step error bound, mixed absolute/relative.
    pub tol: f64,
    /// Components with magnitude below this, or heading through zero within
    /// one step from a small band, are snapped to zero after every accepted step.
    pub zero_clamp: Option<f64>,
}

/// Integrates `y' = f(y)` from `t0` to `t1` in place. `h` carries the step
/// size between calls.
pub fn integrate<F>(f: F, y: &mut [f64], t0: f64, t1: f64, opts: &IntegratorOptions, h: &mut f64) -> Result<()>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y.len();
    if t1 <= t0 {
        return Ok(());
    }
    let tol = opts.tol;
    let span = t1 - t0;
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut y_new = vec![0.0; n];

    f(y, &mut k1);
    if k1.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { time: t0 });
    }
    if !(*h > 0.0) || !h.is_finite() {
        let scale = norm(y) + 1.0;
        let rate = norm(&k1) + 1e-12;
        *h = (0.01 * scale / rate).min(span).max(1e-10 * span);
    }

    let mut t = t0;
    let mut steps = 0usize;
    while t < t1 {
        steps += 1;
        if steps > MAX_STEPS {
            return Err(Error::StepUnderflow { time: t });
        }
        let last = t + *h >= t1;
        let step = if last { t1 - t } else { *h };
        let h_min = 1e-13 * t.abs().max(1.0);

        for i in 0..n {
            tmp[i] = y[i] + step * A21 * k1[i];
        }
        f(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + step * (A31 * k1[i] + A32 * k2[i]);
        }
        f(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(&tmp, &mut k4);
        for i in 0..n {
            tmp[i] = y[i] + step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(&tmp, &mut k5);
        for i in 0..n {
            tmp[i] = y[i]
                + step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(&tmp, &mut k6);
        for i in 0..n {
            y_new[i] = y[i]
                + step * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        f(&y_new, &mut k7);

        let mut err: f64 = 0.0;
        let mut finite = true;
        for i in 0..n {
            let e = step
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            if !(e.is_finite() && y_new[i].is_finite()) {
                finite = false;
            }
            err = err.max(e.abs() / sc);
        }
        if !finite {
            if step <= h_min {
                return Err(Error::NonFinite { time: t });
            }
            *h = step * 0.25;
            continue;
        }

        if err <= 1.0 || step <= h_min {
            t = if last { t1 } else { t + step };
            let mut clamped = false;
            if let Some(eps) = opts.zero_clamp {
                // explicit steps stall a few tol away from a finite-time sink;
                // snap once the local rate would carry the component through zero
                let band = (1e3 * eps).max(10.0 * tol);
                for (v, rate) in y_new.iter_mut().zip(k7.iter()) {
                    let overshoots = *v * *rate < 0.0 && rate.abs() * step > v.abs();
                    if *v != 0.0 && (v.abs() < eps || (v.abs() < band && overshoots)) {
                        *v = 0.0;
                        clamped = true;
                    }
                }
            }
            y.copy_from_slice(&y_new);
            if norm(y) > BLOW_UP_GUARD {
                return Err(Error::BlowUp {
                    time: t,
                    guard: BLOW_UP_GUARD,
                });
            }
            if clamped {
                f(y, &mut k1);
            } else {
                std::mem::swap(&mut k1, &mut k7);
            }
            if k1.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { time: t });
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            // keep the proposal from the last full step when the final step was truncated
            if !last || step >= *h {
                *h = step * factor;
            }
        } else {
            *h = (step * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9)).max(h_min);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(tol: f64) -> IntegratorOptions {
        IntegratorOptions {
            tol,
            zero_clamp: None,
        }
    }

    #[test]
    fn exponential_decay() {
        let mut y = [1.0];
        let mut h = 0.0;
        integrate(|x, out| out[0] = -x[0], &mut y, 0.0, 1.0, &opts(1e-9), &mut h).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_full_period() {
        let mut y = [1.0, 0.0];
        let mut h = 0.0;
        let tau = 2.0 * std::f64::consts::PI;
        integrate(
            |x, out| {
                out[0] = x[1];
                out[1] = -x[0];
            },
            &mut y,
            0.0,
            tau,
            &opts(1e-11),
            &mut h,
        )
        .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9, "{y:?}");
    }

    #[test]
    fn blow_up_is_reported() {
        let mut y = [1.0];
        let mut h = 0.0;
        let err = integrate(|x, out| out[0] = x[0], &mut y, 0.0, 100.0, &opts(1e-9), &mut h).unwrap_err();
        match err {
            Error::BlowUp { time, .. } => assert!((time - 1e12f64.ln()).abs() < 1.0, "{time}"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn non_finite_rhs_is_an_error() {
        let mut y = [1.0];
        let mut h = 0.0;
        let err = integrate(|_, out| out[0] = f64::NAN, &mut y, 0.0, 1.0, &opts(1e-9), &mut h).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn cube_root_sink_converges_in_finite_time() {
        // y' = -cbrt(y) reaches 0 at t = 1.5 y0^(2/3)
        let mut y = [0.5];
        let mut h = 0.0;
        let o = IntegratorOptions {
            tol: 1e-9,
            zero_clamp: Some(1e-9),
        };
        integrate(|x, out| out[0] = -x[0].cbrt(), &mut y, 0.0, 1.0, &o, &mut h).unwrap();
        assert_eq!(y[0], 0.0, "{y:?} h={h}");
    }
}
