//! Acceptance suite: one pass/fail line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stabcheck::constructions::{kl_envelope, smooth_tau, TauTable};
use stabcheck::dynamics::axioms::check_axioms;
use stabcheck::dynamics::builtin::{builtin, representative_builtins};
use stabcheck::lyapunov::{check_tau_bound, LyapunovCandidate};
use stabcheck::monotone::{Direction, Extrapolation, MonotoneTable};
use stabcheck::props::{
    check_pugas, check_robust_invariance, check_weak_attractivity, cross_check_pugas, cross_check_ugas,
    estimate_tau_uniform_weak, RobustnessSweep,
};
use stabcheck::reach::{a_eps, p_plus};
use stabcheck::set::{norm, SetDescriptor};
use stabcheck::verdict::{Budget, Status};

/// Outcome of one criterion: pass flag and a one-line detail.
type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn budget(samples: usize, signals: usize, seed: u64) -> Budget {
    Budget {
        samples,
        signals,
        seed,
        ..Budget::default()
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn criterion_1() -> Outcome {
    let sys = builtin("planar_counterexample(4)").unwrap();
    let a = SetDescriptor::origin(2);
    let b = budget(1250, 8, 11);
    let eps = 0.25;
    let cloud = a_eps(&sys, &a, eps, &b).unwrap();
    let (lo, hi) = (cloud.lower().to_vec(), cloud.upper().to_vec());
    let target_lo = [-eps, -eps];
    let target_hi = [1.0, eps];
    let box_err = (0..2)
        .map(|i| (lo[i] - target_lo[i]).abs().max((hi[i] - target_hi[i]).abs()))
        .fold(0.0, f64::max);

    let pp = p_plus(&sys, &a, &[0.4, 0.2, 0.1], &b).unwrap();
    let to_segment = |p: &Vec<f64>| {
        let x = p[0].clamp(0.0, 1.0);
        ((p[0] - x).powi(2) + p[1].powi(2)).sqrt()
    };
    let out = pp.points.iter().map(to_segment).fold(0.0, f64::max);
    let back = (0..=1000)
        .map(|k| {
            let s = [k as f64 / 1000.0, 0.0];
            pp.points
                .iter()
                .map(|p| ((p[0] - s[0]).powi(2) + (p[1] - s[1]).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let hausdorff = out.max(back);
    (
        box_err <= 0.05 && hausdorff <= 0.05,
        format!(
            "a_eps box [{:.3}, {:.3}] x [{:.3}, {:.3}] (max face error {box_err:.3}); p_plus Hausdorff to [0,1]x{{0}} = {hausdorff:.3}",
            lo[0], hi[0], lo[1], hi[1]
        ),
    )
}

fn tau_cells(sys: &str, eps: &[f64], r: &[f64], b: &Budget) -> (TauTable, Status) {
    let sys = builtin(sys).unwrap();
    let rep = estimate_tau_uniform_weak(&sys, &SetDescriptor::origin(sys.dim()), eps, r, b).unwrap();
    (rep.tau().expect("τ certificate").clone(), rep.status())
}

fn criterion_2() -> Outcome {
    let eps = [0.1, 0.2];
    let r = [1.0, 2.0];
    let mut worst: Vec<(String, f64, f64)> = Vec::new();
    let mut check = |label: &str, sys: &str, b: &Budget, k: f64| {
        let (t, _) = tau_cells(sys, &eps, &r, b);
        let mut w = 0.0f64;
        for (i, e) in eps.iter().enumerate() {
            for (j, rr) in r.iter().enumerate() {
                w = w.max(rel(t.raw_at(i, j), k * (rr / e).ln()));
            }
        }
        worst.push((label.to_string(), w, k));
    };
    check("x' = -x", "scalar_stable", &budget(64, 8, 21), 1.0);
    check("nonuniform M=0", "scalar_nonuniform(0)", &budget(64, 8, 22), 1.0);
    check("nonuniform M=9", "scalar_nonuniform(9)", &budget(64, 8, 23), 10.0);
    let stressed = Budget {
        stress_evaluations: 512,
        ..budget(16, 1, 24)
    };
    check("linear_diag(10) stressed", "linear_diag(10)", &stressed, 10.0);
    let pass = worst.iter().all(|(l, w, _)| if l.starts_with("nonuniform") { *w <= 0.10 } else { *w <= 0.05 });
    let detail = worst
        .iter()
        .map(|(l, w, _)| format!("{l}: {:.2}%", 100.0 * w))
        .collect::<Vec<_>>()
        .join(", ");
    (pass, format!("max relative τ error: {detail}"))
}

fn criterion_3() -> Outcome {
    let ns = [2.0, 4.0, 8.0, 16.0];
    let mut taus = Vec::new();
    let mut all_supported = true;
    for n in ns {
        let name = format!("linear_diag({n})");
        let sys = builtin(&name).unwrap();
        let a = SetDescriptor::origin(sys.dim());
        let b = Budget {
            stress_evaluations: 512,
            ..budget(16, 1, 31)
        };
        let weak = check_weak_attractivity(&sys, &a, 0.1, 1.0, &b).unwrap();
        all_supported &= weak.status() == Status::SupportedUpTo;
        let rep = estimate_tau_uniform_weak(&sys, &a, &[0.1], &[1.0], &b).unwrap();
        taus.push(rep.tau().map(|t| t.at(0, 0)).unwrap_or(f64::NAN));
    }
    let mx = ns.iter().sum::<f64>() / 4.0;
    let my = taus.iter().sum::<f64>() / 4.0;
    let sxy: f64 = ns.iter().zip(&taus).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = ns.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = taus.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = sxy * sxy / (sxx * syy);
    let slope = sxy / sxx;
    (
        all_supported && r2 >= 0.99 && slope > 0.0,
        format!("weak attractivity supported for all N: {all_supported}; τ(0.1,1) = {taus:.3?}; slope {slope:.3}, R² = {r2:.4}"),
    )
}

fn delta_at(m: f64) -> f64 {
    let sys = builtin(&format!("planar_counterexample({m})")).unwrap();
    let rep = check_robust_invariance(&sys, &SetDescriptor::origin(2), &[0.5], &[5.0], None, &budget(64, 8, 41)).unwrap();
    rep.delta().map(|(_, _, d)| d[0]).unwrap_or(f64::NAN)
}

fn criterion_4() -> Outcome {
    let (d1, d100) = (delta_at(1.0), delta_at(100.0));
    let factor = d1 / d100;
    (factor >= 5.0, format!("δ(0.5, 5): M=1 {d1:.4}, M=100 {d100:.4}, factor {factor:.2}"))
}

fn exact_table(k: f64) -> MonotoneTable {
    let xs = vec![0.0, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0];
    let ys = xs.iter().map(|x| k * x * x).collect();
    MonotoneTable::new(xs, ys, Direction::NonDecreasing, Extrapolation::Linear).unwrap()
}

fn criterion_5() -> Outcome {
    let sys = builtin("scalar_stable").unwrap();
    let cand = LyapunovCandidate::from_expression("x1^2", exact_table(1.0), exact_table(2.0), SetDescriptor::origin(1)).unwrap();
    let b = budget(1000, 1, 51);
    let mut violations = 0;
    let mut details = Vec::new();
    for eps in [0.25, 0.5] {
        for r in [1.0, 2.0] {
            let c = check_tau_bound(&cand, &sys, eps, r, &b).unwrap();
            let oracle = (r * r + 1.0) / (2.0 * eps * eps);
            assert_eq!(c.bound, oracle);
            assert_eq!(c.trajectories, 1000);
            violations += c.violations.len();
            details.push(format!("({eps},{r}) latest {:.3} ≤ {oracle}", c.latest_entry));
        }
    }
    (violations == 0, format!("{violations} violations; {}", details.join(", ")))
}

fn criterion_6() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, seed, pass_min, c_max) in [("scalar_stable", 61u64, 0.999, 0.01), ("planar_counterexample(4)", 62, 0.99, 1.2)] {
        let sys = builtin(name).unwrap();
        let rep = check_pugas(&sys, &SetDescriptor::origin(sys.dim()), &budget(64, 8, seed)).unwrap();
        match rep.envelope() {
            Some((env, frac)) => {
                pass &= frac >= pass_min && env.offset_c <= c_max;
                lines.push(format!("{name}: pass {frac:.4}, c {:.4}", env.offset_c));
            }
            None => {
                pass = false;
                lines.push(format!("{name}: no envelope ({:?}: {})", rep.status(), rep.verdict.note));
            }
        }
    }
    (pass, lines.join("; "))
}

fn criterion_7() -> Outcome {
    let mut bad = Vec::new();
    let sweep = RobustnessSweep::default();
    for sys in representative_builtins() {
        let a = SetDescriptor::origin(sys.dim());
        let b = budget(64, 8, 71);
        let p = cross_check_pugas(&sys, &a, &b).unwrap();
        let u = cross_check_ugas(&sys, &a, Some(&sweep), &b).unwrap();
        if !p.consistent {
            bad.push(format!("{} pUGAS: {:?}", sys.name(), p.diagnostics));
        }
        if !u.consistent {
            bad.push(format!("{} UGAS: {:?}", sys.name(), u.diagnostics));
        }
    }
    let n = representative_builtins().len();
    (bad.is_empty(), if bad.is_empty() { format!("{n} builtins consistent") } else { bad.join("; ") })
}

fn vector(rng: &mut ChaCha8Rng, n: usize, s: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-s..s)).collect()
}

fn criterion_8() -> Outcome {
    let mut worst = 0.0f64;
    for sys in representative_builtins() {
        let rep = check_axioms(&sys, 50, 2.0, 1e-9, 81).unwrap();
        worst = worst.max(rep.max_violation());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(82);
    let mut lemma = 0.0f64;
    for _ in 0..10_000 {
        let n = rng.random_range(1..=4);
        let x = vector(&mut rng, n, 10.0);
        let set = match rng.random_range(0..3) {
            0 => {
                let k = rng.random_range(1..5);
                SetDescriptor::points((0..k).map(|_| vector(&mut rng, n, 5.0)).collect()).unwrap()
            }
            1 => {
                let c = vector(&mut rng, n, 5.0);
                SetDescriptor::ball(c, rng.random_range(0.0..3.0)).unwrap()
            }
            _ => {
                let a = vector(&mut rng, n, 5.0);
                let b = vector(&mut rng, n, 5.0);
                let lo = a.iter().zip(&b).map(|(p, q)| p.min(*q)).collect();
                let hi = a.iter().zip(&b).map(|(p, q)| p.max(*q)).collect();
                SetDescriptor::new_box(lo, hi).unwrap()
            }
        };
        let (dx, nx, na) = (set.distance_to(&x).unwrap(), norm(&x), set.set_norm());
        lemma = lemma
            .max(nx - na - dx)
            .max(dx - nx - na)
            .max(dx - na - nx)
            .max(nx - dx - na);
    }
    (
        worst <= 1e-6 && lemma <= 1e-12,
        format!("max axiom violation {worst:.2e}; max norm-inequality excess {lemma:.2e}"),
    )
}

fn criterion_9() -> Outcome {
    let raw = TauTable::from_fn(vec![0.05, 0.1, 0.2, 0.4], vec![0.5, 1.0, 2.0, 4.0, 8.0], |_, r| r).unwrap();
    let s = smooth_tau(&raw, &[0.1, 0.2], &[1.0, 2.0, 4.0]).unwrap();
    let mut lin = 0.0f64;
    for i in 0..2 {
        for (j, r) in [1.0, 2.0, 4.0].iter().enumerate() {
            lin = lin.max(rel(s.at(i, j), 1.5 * r));
        }
    }
    let raw = TauTable::from_fn(vec![0.1, 0.2, 0.4], vec![1.0, 2.0, 4.0], |_, _| 5.0).unwrap();
    let c = smooth_tau(&raw, &[0.2, 0.4], &[1.0, 2.0]).unwrap();
    let constant_exact = c.table.values().iter().all(|v| *v == 5.0);

    let eps: Vec<f64> = (0..25).map(|k| (1.0 / 1024.0) * 4096f64.powf(k as f64 / 24.0)).collect();
    let tau = TauTable::from_fn(eps, vec![0.25, 0.5, 1.0, 2.0, 4.0], |e, r| (r / e).ln().max(0.0)).unwrap();
    let sigma = MonotoneTable::k_infinity(vec![1.0, 4.0], vec![1.0, 4.0]).unwrap();
    let env = kl_envelope(&sigma, 0.0, &tau, &[0.5, 1.0, 2.0]).unwrap();
    let mut knots_exact = true;
    for (row, k) in env.knots.iter().enumerate() {
        knots_exact &= k.levels.windows(2).all(|w| w[1] / w[0] == 0.5);
        for (n, t) in k.times.iter().enumerate() {
            let j = env.t.iter().position(|v| v == t).expect("knot time on the axis");
            knots_exact &= env.at(row + 1, j) == k.levels[n];
        }
    }
    (
        lin <= 0.01 && constant_exact && knots_exact,
        format!("smooth_tau(R) relative error {lin:.2e}; constants exact: {constant_exact}; knots halve and hit levels exactly: {knots_exact}"),
    )
}

fn strip_timing(report: &str) -> &str {
    &report[..report.find("\"timing\"").expect("timing block")]
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("det.toml");
    std::fs::write(
        &cfg,
        "properties = [\"pUGAS\", \"RobustInvariant\", \"UGATT\"]\n\
         [system]\nbuiltin = \"planar_counterexample(4)\"\n\
         [budget]\nseed = 1234\nsamples = 32\n\
         [reach]\neps = 0.25\n",
    )
    .unwrap();
    let mut texts = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("run{k}"));
        let st = Command::new(env!("CARGO_BIN_EXE_stabcheck"))
            .arg("run")
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert!(matches!(st.status.code(), Some(0 | 2 | 3)), "{}", String::from_utf8_lossy(&st.stderr));
        texts.push(std::fs::read_to_string(out.join("report.json")).unwrap());
    }
    let same = strip_timing(&texts[0]) == strip_timing(&texts[1]);
    (same, format!("two runs, {} bytes before timing, identical: {same}", strip_timing(&texts[0]).len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("reach sets of the planar counterexample", criterion_1),
        ("closed-form attraction times", criterion_2),
        ("weak versus uniform attractivity gap", criterion_3),
        ("non-robust equilibrium", criterion_4),
        ("Lyapunov attraction-time bound", criterion_5),
        ("KL pipeline soundness", criterion_6),
        ("characterization cross-consistency", criterion_7),
        ("axioms and norm inequalities", criterion_8),
        ("construction identities", criterion_9),
        ("determinism", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let id = format!("criterion_{:02}", k + 1);
        if !filter.is_empty() && !filter.iter().any(|p| id.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        });
        if !pass {
            failed += 1;
        }
        println!(
            "{id} {name}: {} ({:.1}s) {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
