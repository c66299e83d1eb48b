//! CSV export of the plottable parts of a report.

use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde_json::Value;
use stabcheck::constructions::TauTable;
use stabcheck::kl::KLEnvelope;

/// Files written and notices for the ones skipped.
pub struct Exported {
    pub written: Vec<PathBuf>,
    pub notices: Vec<String>,
}

/// Every property report in the report, requested ones first.
fn reports(report: &Value) -> Vec<&Value> {
    let mut out = Vec::new();
    let analyses = report["analyses"].as_array().map(Vec::as_slice).unwrap_or(&[]);
    for a in analyses {
        out.push(&a["report"]);
    }
    for a in analyses {
        out.extend(a["supporting"].as_array().into_iter().flatten());
    }
    out
}

fn certificates<'a>(report: &'a Value, kind: &str) -> Vec<(&'a str, &'a Value)> {
    reports(report)
        .into_iter()
        .flat_map(|r| {
            let name = r["property"].as_str().unwrap_or("");
            r["certificates"]
                .as_array()
                .into_iter()
                .flatten()
                .filter(move |c| c["kind"] == kind)
                .map(move |c| (name, c))
        })
        .collect()
}

fn writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))
}

fn state_header(prefix: &[&str], dim: usize) -> Vec<String> {
    prefix
        .iter()
        .map(|s| s.to_string())
        .chain((1..=dim).map(|i| format!("x{i}")))
        .collect()
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn tau_surface(report: &Value, path: &Path) -> Result<bool> {
    let certs = certificates(report, "tau");
    if certs.is_empty() {
        return Ok(false);
    }
    let mut w = writer(path)?;
    w.write_record(["property", "eps", "r", "tau"])?;
    for (name, c) in certs {
        let t: TauTable = serde_json::from_value(c["table"].clone()).context("malformed tau certificate")?;
        for (i, e) in t.eps.iter().enumerate() {
            for (j, r) in t.r.iter().enumerate() {
                w.write_record([name.to_string(), num(*e), num(*r), num(t.at(i, j))])?;
            }
        }
    }
    w.flush()?;
    Ok(true)
}

fn kl_envelope(report: &Value, path: &Path) -> Result<bool> {
    let certs = certificates(report, "envelope");
    if certs.is_empty() {
        return Ok(false);
    }
    let mut w = writer(path)?;
    w.write_record(["property", "r", "t", "beta", "c"])?;
    for (name, c) in certs {
        let env: KLEnvelope = serde_json::from_value(c["envelope"].clone()).context("malformed envelope certificate")?;
        for (i, r) in env.r.iter().enumerate() {
            for (j, t) in env.t.iter().enumerate() {
                w.write_record([name.to_string(), num(*r), num(*t), num(env.at(i, j)), num(env.offset_c)])?;
            }
        }
    }
    w.flush()?;
    Ok(true)
}

fn reach_cloud(report: &Value, path: &Path) -> Result<bool> {
    let entries = report["reach"].as_array().map(Vec::as_slice).unwrap_or(&[]);
    if entries.is_empty() {
        return Ok(false);
    }
    let dim = report["system"]["dim"].as_u64().unwrap_or(0) as usize;
    let mut w = writer(path)?;
    w.write_record(state_header(&["cloud", "time"], dim))?;
    for e in entries {
        let kind = e["kind"].as_str().unwrap_or("");
        let points: Vec<Vec<f64>> = serde_json::from_value(e["cloud"]["points"].clone()).context("malformed reach cloud")?;
        let times: Vec<Option<f64>> = serde_json::from_value(e["cloud"]["times"].clone()).context("malformed reach cloud")?;
        for (p, t) in points.iter().zip(&times) {
            let mut row = vec![kind.to_string(), t.map(num).unwrap_or_default()];
            row.extend(p.iter().map(|v| num(*v)));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(true)
}

fn trajectories(report: &Value, path: &Path) -> Result<bool> {
    let batch = &report["trajectories"];
    if batch.is_null() {
        return Ok(false);
    }
    let times: Vec<f64> = serde_json::from_value(batch["times"].clone()).context("malformed trajectories")?;
    let trs = batch["trajectories"].as_array().map(Vec::as_slice).unwrap_or(&[]);
    let dim = report["system"]["dim"].as_u64().unwrap_or(0) as usize;
    let mut w = writer(path)?;
    w.write_record(state_header(&["trajectory", "t"], dim))?;
    for (k, tr) in trs.iter().enumerate() {
        let states: Vec<Vec<f64>> = serde_json::from_value(tr["states"].clone()).context("malformed trajectory")?;
        for (s, t) in states.iter().zip(&times) {
            let mut row = vec![k.to_string(), num(*t)];
            row.extend(s.iter().map(|v| num(*v)));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(true)
}

pub fn export(report_path: &Path, out: &Path) -> Result<Exported> {
    let text = std::fs::read_to_string(report_path).with_context(|| format!("cannot read report {}", report_path.display()))?;
    let report: Value = serde_json::from_str(&text).with_context(|| format!("malformed report {}", report_path.display()))?;
    if !report["analyses"].is_array() {
        bail!("{} is not a stabcheck report (no `analyses`)", report_path.display());
    }
    std::fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    type Writer = fn(&Value, &Path) -> Result<bool>;
    let files: [(&str, Writer, &str); 4] = [
        ("tau_surface.csv", tau_surface, "no τ certificate"),
        ("kl_envelope.csv", kl_envelope, "no KL envelope certificate"),
        ("reach_cloud.csv", reach_cloud, "no reach cloud"),
        ("trajectories.csv", trajectories, "no sample trajectories"),
    ];
    let mut done = Exported {
        written: Vec::new(),
        notices: Vec::new(),
    };
    for (name, f, missing) in files {
        let path = out.join(name);
        if f(&report, &path)? {
            done.written.push(path);
        } else {
            done.notices.push(format!("skipping {name}: report has {missing}"));
        }
    }
    Ok(done)
}
