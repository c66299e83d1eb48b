use stabcheck::dynamics::{DisturbanceBox, OdeSystem, System};
use stabcheck::props::{estimate_tau_ugatt, estimate_tau_uniform_weak, Certificate};
use stabcheck::set::SetDescriptor;
use stabcheck::verdict::{Budget, Status};

fn spiral() -> System {
    let rhs = ["-0.1*x1 - x2".to_string(), "x1 - 0.1*x2".to_string()];
    System::Ode(OdeSystem::from_expressions("spiral", &rhs, DisturbanceBox::zero()).unwrap())
}

#[test]
fn spiral_reenters_an_offset_ball() {
    let sys = spiral();
    // the origin lies on the boundary, so trajectories cross the ball once per turn
    let a = SetDescriptor::ball(vec![0.5, 0.0], 0.5).unwrap();
    let b = Budget {
        samples: 16,
        signals: 1,
        horizon: 60.0,
        time_samples: 2049,
        seed: 3,
        ..Budget::default()
    };
    let (eps, r) = ([0.05], [1.0]);
    let weak = estimate_tau_uniform_weak(&sys, &a, &eps, &r, &b).unwrap();
    let att = estimate_tau_ugatt(&sys, &a, &eps, &r, &b).unwrap();
    assert_eq!(weak.status(), Status::SupportedUpTo);
    let first = weak.tau().unwrap().raw_at(0, 0);
    let last = att.tau().map(|t| t.raw_at(0, 0)).unwrap_or(f64::INFINITY);
    assert!(first < last, "first entry {first}, last exit {last}");
    let re_exits = att
        .certificates
        .iter()
        .find_map(|c| match c {
            Certificate::Tau { re_exits, .. } => Some(*re_exits),
            _ => None,
        })
        .unwrap_or(0);
    assert!(re_exits > 0 || att.audit.iter().any(|l| l.contains("re-exit")));
}

#[test]
fn contraction_ugatt_matches_weak_attractivity() {
    let sys = stabcheck::dynamics::builtin("scalar_stable").unwrap();
    let a = SetDescriptor::origin(1);
    let b = Budget {
        samples: 16,
        signals: 1,
        horizon: 20.0,
        seed: 4,
        ..Budget::default()
    };
    let (eps, r) = ([0.1, 0.2], [1.0, 2.0]);
    let weak = estimate_tau_uniform_weak(&sys, &a, &eps, &r, &b).unwrap();
    let att = estimate_tau_ugatt(&sys, &a, &eps, &r, &b).unwrap();
    let (tw, ta) = (weak.tau().unwrap(), att.tau().unwrap());
    for i in 0..2 {
        for j in 0..2 {
            assert!((tw.raw_at(i, j) - ta.raw_at(i, j)).abs() < 1e-6);
        }
    }
}
