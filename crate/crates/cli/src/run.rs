//! Runs the analyses of a resolved config and assembles the JSON report.

use std::time::Instant;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use stabcheck::dynamics::{DisturbanceBox, SignalStrategy, TrajectoryBatch};
use stabcheck::props::{self, CrossCheck, Property, PropertyReport};
use stabcheck::reach::{self, ReachCloud};
use stabcheck::sim;
use stabcheck::verdict::{Budget, Status};

use crate::config::{AnalysisConfig, Resolved};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub config: AnalysisConfig,
    pub system: SystemInfo,
    pub analyses: Vec<Analysis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cross_checks: Vec<CrossCheck>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reach: Vec<ReachEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories: Option<TrajectoryBatch>,
    pub summary: Summary,
    pub timing: Timing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemInfo {
    pub name: String,
    pub dim: usize,
    pub disturbance: DisturbanceBox,
}

/// One requested property with the reports its verdict was built from.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Analysis {
    pub property: Property,
    pub report: PropertyReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub supporting: Vec<PropertyReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReachEntry {
    pub kind: String,
    pub cloud: ReachCloud,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub supported: usize,
    pub falsified: usize,
    pub inconclusive: usize,
    pub exit_code: i32,
}

/// Wall-clock seconds; the only part of a report that varies between runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Step {
    pub label: String,
    pub seconds: f64,
}

/// 0 when everything is supported, 2 on any falsification, 3 otherwise.
pub fn exit_code(statuses: impl IntoIterator<Item = Status>) -> i32 {
    let mut code = 0;
    for s in statuses {
        match s {
            Status::Falsified => return 2,
            Status::Inconclusive => code = 3,
            Status::SupportedUpTo => {}
        }
    }
    code
}

struct Clock {
    start: Instant,
    steps: Vec<Step>,
}

impl Clock {
    fn time<T>(&mut self, label: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f()?;
        self.steps.push(Step {
            label: label.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        Ok(out)
    }
}

fn analyse(res: &Resolved, p: Property) -> Result<Analysis> {
    let (sys, set, b) = (&res.system, &res.set, &res.budget);
    let sweep = res.sweep.as_ref();
    let single = |report: PropertyReport| Analysis {
        property: p,
        report,
        supporting: Vec::new(),
    };
    let a = match p {
        Property::Rfc => single(props::check_rfc(sys, set, &res.r, b)?),
        Property::Lagrange => single(props::check_lagrange(sys, set, &res.r, b)?),
        Property::Uls => single(match sweep {
            Some(s) => props::check_uls_sweep(sys, set, &res.eps, s, b)?,
            None => props::check_uls(sys, set, &res.eps, b)?,
        }),
        Property::Ugs => single(props::check_ugs_on(sys, set, &res.eps, &res.r, sweep, b)?),
        Property::WeakAttractive => {
            let r = *res.r.last().expect("validated grid");
            single(props::check_weak_attractivity(sys, set, res.eps[0], r, b)?)
        }
        Property::UniformWeakAttractive => single(props::estimate_tau_uniform_weak(sys, set, &res.eps, &res.r, b)?),
        Property::Ugatt => single(props::estimate_tau_ugatt(sys, set, &res.eps, &res.r, b)?),
        Property::UniformUltimateBounded => single(props::check_uniform_ultimate_boundedness(sys, &res.r, b)?),
        Property::RobustInvariant => single(props::check_robust_invariance(sys, set, &res.eps, &res.t, sweep, b)?),
        Property::GloballyRecurrent => single(props::check_recurrence(sys, set, false, &res.r, b)?),
        Property::UniformlyGloballyRecurrent => single(props::check_recurrence(sys, set, true, &res.r, b)?),
        Property::PUgas => {
            let (report, ugatt) = props::check_pugas_detailed(sys, set, b)?;
            Analysis {
                property: p,
                report,
                supporting: vec![ugatt],
            }
        }
        Property::Ugas => {
            let (report, supporting) = props::check_ugas(sys, set, sweep, b)?;
            Analysis {
                property: p,
                report,
                supporting,
            }
        }
    };
    Ok(a)
}

/// Sample trajectories from the largest `B_r(A)` of the grid under one
/// uniformly drawn disturbance.
fn sample_trajectories(res: &Resolved, count: usize) -> Result<Option<TrajectoryBatch>> {
    if count == 0 {
        return Ok(None);
    }
    let b = &res.budget;
    let r = *res.r.last().expect("validated grid");
    let initial = sim::neighborhood(&res.set, r, count, sim::mix(b.seed, 0x7A))?;
    let one = Budget {
        signals: 1,
        strategy: SignalStrategy::Uniform,
        ..b.clone()
    };
    let signals = sim::signals(&res.system, &one, b.horizon, sim::mix(b.seed, 0x7B))?;
    Ok(Some(TrajectoryBatch::simulate(&res.system, initial, signals, b.time_grid(), b.tol)?))
}

pub fn run(res: &Resolved) -> Result<Report> {
    let mut clock = Clock {
        start: Instant::now(),
        steps: Vec::new(),
    };
    let mut analyses = Vec::new();
    for p in &res.properties {
        analyses.push(clock.time(p.name(), || analyse(res, *p))?);
    }

    let mut cross_checks = Vec::new();
    if res.config.output.cross_checks {
        let sweep = res.sweep.as_ref();
        cross_checks.push(clock.time("cross check pUGAS", || {
            Ok(props::cross_check_pugas(&res.system, &res.set, &res.budget)?)
        })?);
        cross_checks.push(clock.time("cross check UGAS", || {
            Ok(props::cross_check_ugas(&res.system, &res.set, sweep, &res.budget)?)
        })?);
    }

    let mut reach_entries = Vec::new();
    if let Some(spec) = &res.config.reach {
        if let Some(e) = spec.eps {
            let cloud = clock.time("a_eps", || Ok(reach::a_eps(&res.system, &res.set, e, &res.budget)?))?;
            reach_entries.push(ReachEntry {
                kind: format!("a_eps({e})"),
                cloud,
            });
        }
        if let Some(s) = &spec.schedule {
            let cloud = clock.time("p_plus", || Ok(reach::p_plus(&res.system, &res.set, s, &res.budget)?))?;
            reach_entries.push(ReachEntry {
                kind: "p_plus".into(),
                cloud,
            });
        }
    }

    let trajectories = clock.time("trajectories", || sample_trajectories(res, res.config.output.trajectories))?;

    let statuses: Vec<Status> = analyses.iter().map(|a| a.report.status()).collect();
    let count = |s: Status| statuses.iter().filter(|x| **x == s).count();
    let summary = Summary {
        supported: count(Status::SupportedUpTo),
        falsified: count(Status::Falsified),
        inconclusive: count(Status::Inconclusive),
        exit_code: exit_code(statuses.iter().copied()),
    };

    let mut config = res.config.clone();
    config.output.dir = None;
    Ok(Report {
        tool: format!("stabcheck {}", env!("CARGO_PKG_VERSION")),
        config,
        system: SystemInfo {
            name: res.system.name().to_string(),
            dim: res.system.dim(),
            disturbance: res.system.disturbance(),
        },
        analyses,
        cross_checks,
        reach: reach_entries,
        trajectories,
        summary,
        timing: Timing {
            total_seconds: clock.start.elapsed().as_secs_f64(),
            steps: clock.steps,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_precedence() {
        use Status::*;
        assert_eq!(exit_code([SupportedUpTo, SupportedUpTo]), 0);
        assert_eq!(exit_code([SupportedUpTo, Inconclusive]), 3);
        assert_eq!(exit_code([Inconclusive, Falsified, SupportedUpTo]), 2);
        assert_eq!(exit_code([]), 0);
    }
}
