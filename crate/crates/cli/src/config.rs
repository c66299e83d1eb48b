//! Analysis configuration: parsing, validation and resolution of defaults.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use stabcheck::dynamics::{builtin, DisturbanceBox, OdeSystem, SignalStrategy, System};
use stabcheck::props::{Property, RobustnessSweep, DEFAULT_EPS, DEFAULT_H, DEFAULT_R};
use stabcheck::set::SetDescriptor;
use stabcheck::verdict::Budget;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub system: SystemSpec,
    /// The set `A`; the origin when absent.
    #[serde(default)]
    pub set: Option<SetDescriptor>,
    pub properties: Vec<String>,
    pub budget: BudgetSpec,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(default)]
    pub reach: Option<ReachSpec>,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Either a builtin name or one expression per state component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default)]
    pub builtin: Option<String>,
    #[serde(default)]
    pub name: Option<String>,
    /// Right-hand sides over `x1..xn, d1..dm`.
    #[serde(default)]
    pub expressions: Option<Vec<String>>,
    #[serde(default)]
    pub disturbance: Option<BoxSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSpec {
    pub seed: Option<u64>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub signals: Option<usize>,
    #[serde(default)]
    pub time_samples: Option<usize>,
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    /// Disturbance grid step Δ.
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub strategy: Option<SignalStrategy>,
    #[serde(default)]
    pub stress_evaluations: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    #[serde(default)]
    pub eps: Option<Vec<f64>>,
    #[serde(default)]
    pub r: Option<Vec<f64>>,
    /// Horizons `h` of the robust invariance table `δ(ε, h)`.
    #[serde(default)]
    pub t: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default)]
    pub factors: Option<Vec<f64>>,
    #[serde(default)]
    pub shrink: Option<f64>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            enabled: true,
            factors: None,
            shrink: None,
        }
    }
}

fn yes() -> bool {
    true
}

/// Reachability clouds stored in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReachSpec {
    /// `ε` of the prolongation `a_ε(A)`.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Decreasing `ε` schedule of the intersection `P₊(A)`.
    #[serde(default)]
    pub schedule: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default = "default_report")]
    pub report: String,
    /// Sample trajectories from the largest `B_r(A)` kept for plotting.
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default)]
    pub cross_checks: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: None,
            report: default_report(),
            trajectories: default_trajectories(),
            cross_checks: false,
        }
    }
}

fn default_report() -> String {
    "report.json".into()
}

fn default_trajectories() -> usize {
    8
}

/// Command-line overrides applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub horizon: Option<f64>,
}

/// A validated configuration with every default filled in.
pub struct Resolved {
    pub config: AnalysisConfig,
    pub system: System,
    pub set: SetDescriptor,
    pub properties: Vec<Property>,
    pub budget: Budget,
    pub eps: Vec<f64>,
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub sweep: Option<RobustnessSweep>,
}

/// Reads TOML, or JSON when the extension is `.json` (a report's config echo).
pub fn load(path: &Path) -> Result<AnalysisConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    parse(&text, path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")))
        .with_context(|| format!("malformed config {}", path.display()))
}

pub fn parse(text: &str, json: bool) -> Result<AnalysisConfig> {
    if json {
        let v: serde_json::Value = serde_json::from_str(text)?;
        // A whole report is accepted too; its echo is the config.
        let v = match v.get("config") {
            Some(c) if v.get("analyses").is_some() => c.clone(),
            _ => v,
        };
        Ok(serde_json::from_value(v)?)
    } else {
        Ok(toml::from_str(text)?)
    }
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> anyhow::Error {
    anyhow!("config field `{field}`: {msg}")
}

fn increasing(field: &str, g: &[f64]) -> Result<()> {
    if g.is_empty() {
        return Err(field_err(field, "must be nonempty"));
    }
    if g.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(field_err(field, "entries must be finite and > 0"));
    }
    if g.windows(2).any(|w| w[1] <= w[0]) {
        return Err(field_err(field, "must be strictly increasing"));
    }
    Ok(())
}

fn build_system(spec: &SystemSpec) -> Result<System> {
    match (&spec.builtin, &spec.expressions) {
        (Some(name), None) => {
            if spec.disturbance.is_some() || spec.name.is_some() {
                return Err(field_err("system", "`name` and `disturbance` only apply to expression systems"));
            }
            builtin(name).map_err(|e| field_err("system.builtin", e))
        }
        (None, Some(exprs)) => {
            let d = match &spec.disturbance {
                Some(b) => DisturbanceBox::new(b.lower.clone(), b.upper.clone()).map_err(|e| field_err("system.disturbance", e))?,
                None => DisturbanceBox::zero(),
            };
            let name = spec.name.clone().unwrap_or_else(|| exprs.join(", "));
            let ode = OdeSystem::from_expressions(name, exprs, d).map_err(|e| field_err("system.expressions", e))?;
            Ok(System::Ode(ode))
        }
        (Some(_), Some(_)) => Err(field_err("system", "give either `builtin` or `expressions`, not both")),
        (None, None) => Err(field_err("system", "needs `builtin` or `expressions`")),
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(field_err(field, format!("{v} must be finite and > 0")))
    }
}

fn at_least_one(field: &str, v: usize) -> Result<usize> {
    if v == 0 {
        Err(field_err(field, "must be >= 1"))
    } else {
        Ok(v)
    }
}

impl AnalysisConfig {
    /// Applies overrides, validates, and fills every default so that the
    /// echoed config reproduces the analysis on its own.
    pub fn resolve(mut self, ov: &Overrides) -> Result<Resolved> {
        if let Some(s) = ov.seed {
            self.budget.seed = Some(s);
        }
        if let Some(t) = ov.tol {
            self.budget.tol = Some(t);
        }
        if let Some(h) = ov.horizon {
            self.budget.horizon = Some(h);
        }
        let system = build_system(&self.system)?;

        let set = self.set.clone().unwrap_or_else(|| SetDescriptor::origin(system.dim()));
        set.validate().map_err(|e| field_err("set", e))?;
        if set.dim() != system.dim() {
            bail!(field_err(
                "set",
                format!("dimension {} does not match the system dimension {}", set.dim(), system.dim())
            ));
        }
        self.set = Some(set.clone());

        if self.properties.is_empty() {
            bail!(field_err("properties", "must list at least one property"));
        }
        let mut properties = Vec::new();
        for (i, p) in self.properties.iter().enumerate() {
            let p = Property::parse(p).map_err(|e| field_err(&format!("properties[{i}]"), e))?;
            if !properties.contains(&p) {
                properties.push(p);
            }
        }
        properties.sort_by_key(|p| rank(*p));
        self.properties = properties.iter().map(|p| p.name().to_string()).collect();

        let def = Budget::default();
        let b = &mut self.budget;
        let seed = b
            .seed
            .ok_or_else(|| field_err("budget.seed", "is required; reproducibility needs an explicit seed"))?;
        let budget = Budget {
            samples: at_least_one("budget.samples", *b.samples.get_or_insert(def.samples))?,
            signals: at_least_one("budget.signals", *b.signals.get_or_insert(def.signals))?,
            time_samples: *b.time_samples.get_or_insert(def.time_samples),
            horizon: positive("budget.horizon", *b.horizon.get_or_insert(def.horizon))?,
            tol: positive("budget.tol", *b.tol.get_or_insert(def.tol))?,
            step: None,
            seed,
            strategy: *b.strategy.get_or_insert(def.strategy),
            stress_evaluations: *b.stress_evaluations.get_or_insert(def.stress_evaluations),
        };
        if budget.time_samples < 2 {
            bail!(field_err("budget.time_samples", "must be >= 2"));
        }
        let step = positive("budget.step", *b.step.get_or_insert(budget.horizon / 64.0))?;
        let budget = Budget {
            step: Some(step),
            ..budget
        };

        let eps = self.grids.eps.get_or_insert_with(|| DEFAULT_EPS.to_vec()).clone();
        let r = self.grids.r.get_or_insert_with(|| DEFAULT_R.to_vec()).clone();
        let t = self.grids.t.get_or_insert_with(|| DEFAULT_H.to_vec()).clone();
        increasing("grids.eps", &eps)?;
        increasing("grids.r", &r)?;
        increasing("grids.t", &t)?;

        let d = RobustnessSweep::default();
        let sw = &mut self.sweep;
        let factors = sw.factors.get_or_insert(d.factors).clone();
        let shrink = *sw.shrink.get_or_insert(d.shrink);
        increasing("sweep.factors", &factors)?;
        positive("sweep.shrink", shrink)?;
        let sweep = sw.enabled.then_some(RobustnessSweep { factors, shrink });

        if let Some(reach) = &self.reach {
            if let Some(e) = reach.eps {
                positive("reach.eps", e)?;
            }
            if let Some(s) = &reach.schedule {
                if s.is_empty() || s.iter().any(|v| !(v.is_finite() && *v > 0.0)) || s.windows(2).any(|w| w[1] >= w[0]) {
                    bail!(field_err("reach.schedule", "must be nonempty, positive and strictly decreasing"));
                }
            }
        }
        if self.output.report.trim().is_empty() {
            bail!(field_err("output.report", "must be a file name"));
        }

        Ok(Resolved {
            config: self,
            system,
            set,
            properties,
            budget,
            eps,
            r,
            t,
            sweep,
        })
    }
}

/// Execution order: RFC and the building blocks before the envelopes.
fn rank(p: Property) -> usize {
    match p {
        Property::Rfc => 0,
        Property::Lagrange => 1,
        Property::Uls => 2,
        Property::Ugs => 3,
        Property::WeakAttractive => 4,
        Property::UniformWeakAttractive => 5,
        Property::Ugatt => 6,
        Property::UniformUltimateBounded => 7,
        Property::RobustInvariant => 8,
        Property::GloballyRecurrent => 9,
        Property::UniformlyGloballyRecurrent => 10,
        Property::PUgas => 11,
        Property::Ugas => 12,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(extra: &str) -> String {
        format!("properties = [\"pUGAS\"]\n[system]\nbuiltin = \"scalar_stable\"\n[budget]\nseed = 3\n{extra}")
    }

    #[test]
    fn defaults_are_filled_in() {
        let r = parse(&minimal(""), false).unwrap().resolve(&Overrides::default()).unwrap();
        assert_eq!(r.config.budget.samples, Some(64));
        assert_eq!(r.config.budget.step, Some(100.0 / 64.0));
        assert_eq!(r.config.grids.eps.as_deref(), Some(&DEFAULT_EPS[..]));
        assert_eq!(r.set, SetDescriptor::origin(1));
        assert!(r.sweep.is_some());
    }

    #[test]
    fn echo_resolves_to_itself() {
        let r = parse(&minimal(""), false).unwrap().resolve(&Overrides::default()).unwrap();
        let echo = serde_json::to_string(&r.config).unwrap();
        let again = parse(&echo, true).unwrap().resolve(&Overrides::default()).unwrap();
        assert_eq!(again.config, r.config);
        assert_eq!(again.budget, r.budget);
    }

    #[test]
    fn missing_seed_names_the_field() {
        let text = "properties = [\"ULS\"]\n[system]\nbuiltin = \"scalar_stable\"\n[budget]\nsamples = 4\n";
        let err = parse(text, false).unwrap().resolve(&Overrides::default()).err().expect("config error");
        assert!(err.to_string().contains("budget.seed"), "{err}");
    }

    #[test]
    fn decreasing_grid_is_rejected() {
        let err = parse(&minimal("[grids]\neps = [0.5, 0.1]\n"), false)
            .unwrap()
            .resolve(&Overrides::default())
            .err()
            .expect("config error");
        assert!(err.to_string().contains("grids.eps"), "{err}");
    }

    #[test]
    fn unknown_builtin_and_property_are_rejected() {
        let text = minimal("").replace("scalar_stable", "no_such_system");
        let err = parse(&text, false).unwrap().resolve(&Overrides::default()).err().expect("config error");
        assert!(err.to_string().contains("system.builtin"), "{err}");
        let text = minimal("").replace("pUGAS", "Stable");
        let err = parse(&text, false).unwrap().resolve(&Overrides::default()).err().expect("config error");
        assert!(err.to_string().contains("properties[0]"), "{err}");
    }

    #[test]
    fn toml_errors_carry_a_line() {
        let err = parse("properties = [\n[system]\n", false).unwrap_err();
        assert!(err.to_string().contains("line"), "{err}");
    }

    #[test]
    fn properties_run_in_dependency_order() {
        let text = minimal("").replace("[\"pUGAS\"]", "[\"pUGAS\", \"rfc\", \"RobustInvariant\", \"RFC\"]");
        let r = parse(&text, false).unwrap().resolve(&Overrides::default()).unwrap();
        assert_eq!(r.properties, vec![Property::Rfc, Property::RobustInvariant, Property::PUgas]);
    }

    #[test]
    fn expression_systems_build() {
        let text = "properties = [\"ULS\"]\n[system]\nexpressions = [\"-x1 + d1\"]\ndisturbance = { lower = [-0.1], upper = [0.1] }\n[budget]\nseed = 1\n";
        let r = parse(text, false).unwrap().resolve(&Overrides { seed: Some(9), ..Default::default() }).unwrap();
        assert_eq!(r.system.dim(), 1);
        assert_eq!(r.budget.seed, 9);
        assert_eq!(r.config.budget.seed, Some(9));
    }
}
