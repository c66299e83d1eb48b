//! Named example systems.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::signal::DisturbanceBox;
use super::system::{LinearSystem, OdeSystem, System, CUBE_ROOT_CLAMP};
use crate::error::{Error, Result};

/// Registry entries as `(pattern, description)`.
pub const BUILTINS: &[(&str, &str)] = &[
    (
        "planar_counterexample(M)",
        "x' = |d|(1-x)|y| - x^3 - cbrt(x), y' = -y^3 - cbrt(y), D = [-M, M]",
    ),
    ("scalar_nonuniform(M)", "x' = -x / (|d| + 1), D = [-M, M]"),
    ("scalar_cube", "y' = -y^3 - cbrt(y), D = {0}"),
    ("linear_diag(N)", "x' = diag(-1, -1/2, ..., -1/N) x"),
    ("linear_dense(seed)", "x' = (B - (|B|_F + 0.5) I) x, B random 3x3 from seed"),
    ("scalar_stable", "x' = -x, D = {0}"),
    ("scalar_unstable", "x' = x, D = {0}"),
];

pub fn list_builtins() -> Vec<String> {
    BUILTINS.iter().map(|(n, d)| format!("{n}: {d}")).collect()
}

fn disturbance_bound(m: f64) -> Result<DisturbanceBox> {
    if !(m.is_finite() && m >= 0.0) {
        return Err(Error::invalid(format!("disturbance bound {m} must be finite and >= 0")));
    }
    DisturbanceBox::new(vec![-m], vec![m])
}

pub fn planar_counterexample(m: f64) -> Result<System> {
    let d = disturbance_bound(m)?;
    let sys = OdeSystem::new(format!("planar_counterexample({m})"), 2, d, |s, d, o| {
        let (x, y) = (s[0], s[1]);
        o[0] = d[0].abs() * (1.0 - x) * y.abs() - x * x * x - x.cbrt();
        o[1] = -y * y * y - y.cbrt();
    });
    Ok(System::Ode(sys.with_zero_clamp(CUBE_ROOT_CLAMP)))
}

pub fn scalar_nonuniform(m: f64) -> Result<System> {
    let d = disturbance_bound(m)?;
    Ok(System::Ode(OdeSystem::new(format!("scalar_nonuniform({m})"), 1, d, |x, d, o| {
        o[0] = -x[0] / (d[0].abs() + 1.0)
    })))
}

pub fn scalar_cube() -> System {
    let sys = OdeSystem::new("scalar_cube", 1, DisturbanceBox::zero(), |x, _, o| {
        o[0] = -x[0] * x[0] * x[0] - x[0].cbrt()
    });
    System::Ode(sys.with_zero_clamp(CUBE_ROOT_CLAMP))
}

pub fn linear_diag(n: usize) -> Result<System> {
    if n == 0 {
        return Err(Error::invalid("linear_diag needs N >= 1"));
    }
    let diag = DVector::from_iterator(n, (1..=n).map(|k| -1.0 / k as f64));
    Ok(System::Linear(LinearSystem::new(
        format!("linear_diag({n})"),
        DMatrix::from_diagonal(&diag),
    )?))
}

pub fn linear_dense(seed: u64) -> Result<System> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
    let shift = b.norm() + 0.5;
    let a = b - DMatrix::identity(3, 3) * shift;
    Ok(System::Linear(LinearSystem::new(format!("linear_dense({seed})"), a)?))
}

pub fn scalar_stable() -> System {
    System::Ode(OdeSystem::new("scalar_stable", 1, DisturbanceBox::zero(), |x, _, o| o[0] = -x[0]))
}

pub fn scalar_unstable() -> System {
    System::Ode(OdeSystem::new("scalar_unstable", 1, DisturbanceBox::zero(), |x, _, o| o[0] = x[0]))
}

/// Looks up `name`, e.g. `"linear_diag(4)"` or `"scalar_stable"`.
pub fn builtin(name: &str) -> Result<System> {
    let name = name.trim();
    let (head, arg) = match name.find('(') {
        Some(i) if name.ends_with(')') => (name[..i].trim(), Some(name[i + 1..name.len() - 1].trim())),
        Some(_) => return Err(Error::UnknownSystem(name.to_string())),
        None => (name, None),
    };
    let real = |a: Option<&str>| -> Result<f64> {
        a.ok_or_else(|| Error::invalid(format!("{head} needs an argument")))?
            .parse::<f64>()
            .map_err(|_| Error::invalid(format!("bad argument in {name}")))
    };
    let int = |a: Option<&str>| -> Result<u64> {
        a.ok_or_else(|| Error::invalid(format!("{head} needs an argument")))?
            .parse::<u64>()
            .map_err(|_| Error::invalid(format!("bad argument in {name}")))
    };
    match (head, arg) {
        ("planar_counterexample", a) => planar_counterexample(real(a)?),
        ("scalar_nonuniform", a) => scalar_nonuniform(real(a)?),
        ("scalar_cube", None) => Ok(scalar_cube()),
        ("linear_diag", a) => linear_diag(int(a)? as usize),
        ("linear_dense", a) => linear_dense(int(a)?),
        ("scalar_stable", None) => Ok(scalar_stable()),
        ("scalar_unstable", None) => Ok(scalar_unstable()),
        _ => Err(Error::UnknownSystem(name.to_string())),
    }
}

/// One representative instance per registry entry.
pub fn representative_builtins() -> Vec<System> {
    [
        "planar_counterexample(4)",
        "scalar_nonuniform(9)",
        "scalar_cube",
        "linear_diag(4)",
        "linear_dense(7)",
        "scalar_stable",
        "scalar_unstable",
    ]
    .iter()
    .map(|n| builtin(n).expect("registry entry"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::signal::DisturbanceSignal;

    #[test]
    fn linear_diag_matrix() {
        match builtin("linear_diag(4)").unwrap() {
            System::Linear(l) => {
                let expect = [-1.0, -0.5, -1.0 / 3.0, -0.25];
                for (i, e) in expect.iter().enumerate() {
                    assert_eq!(l.matrix[(i, i)], *e);
                }
                assert_eq!(l.matrix[(0, 1)], 0.0);
            }
            _ => panic!("expected a linear system"),
        }
    }

    #[test]
    fn planar_counterexample_rhs() {
        let sys = builtin("planar_counterexample(2)").unwrap();
        assert_eq!(sys.disturbance().upper, vec![2.0]);
        if let System::Ode(o) = &sys {
            let mut out = [0.0; 2];
            o.rhs(&[0.5, -0.5], &[-2.0], &mut out);
            let ex = 2.0 * 0.5 * 0.5 - 0.125 - 0.5f64.cbrt();
            let ey = 0.125 + 0.5f64.cbrt();
            assert!((out[0] - ex).abs() < 1e-15 && (out[1] - ey).abs() < 1e-15);
            // odd extension of the cube root
            o.rhs(&[-0.5, 0.0], &[0.0], &mut out);
            assert!(out[0] > 0.0);
        }
    }

    #[test]
    fn planar_counterexample_settles_in_finite_time() {
        let sys = builtin("planar_counterexample(4)").unwrap();
        let d = DisturbanceSignal::constant(1.0, vec![0.0]);
        let x = sys.flow(3.0, &[0.5, 0.5], &d, 1e-12).unwrap();
        assert!(x[0].abs() < 1e-6 && x[1].abs() < 1e-6, "{x:?}");
    }

    #[test]
    fn dense_matrix_is_hurwitz() {
        if let System::Linear(l) = builtin("linear_dense(3)").unwrap() {
            let sym = &l.matrix + l.matrix.transpose();
            assert!(sym.symmetric_eigenvalues().iter().all(|v| *v < 0.0));
        }
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(matches!(builtin("pendulum"), Err(Error::UnknownSystem(_))));
        assert!(builtin("linear_diag(x)").is_err());
        assert!(builtin("scalar_stable(1)").is_err());
        assert_eq!(representative_builtins().len(), BUILTINS.len());
    }
}
