//! Experiment outputs: per-replicate records, aggregate summaries, pass/fail
//! verdicts, and the files that carry them.
//!
//! Output layout is fixed: `records.jsonl` (header line, then one JSON record
//! per line), `summary.json`, and `summary.csv` inside the chosen directory.
//! All serialization goes through sorted-key JSON objects, so equal inputs
//! produce byte-equal files regardless of worker count.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// One checked quantity with its requirement. `lo`/`hi` are inclusive bounds;
/// either may be absent for one-sided checks, both for informational rows.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub id: String,
    pub metric: String,
    pub observed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn check(observed: f64, lo: Option<f64>, hi: Option<f64>) -> bool {
        observed.is_finite()
            && lo.is_none_or(|b| observed >= b)
            && hi.is_none_or(|b| observed <= b)
    }

    pub fn band(
        id: impl Into<String>,
        metric: impl Into<String>,
        observed: f64,
        lo: f64,
        hi: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            metric: metric.into(),
            observed,
            lo: Some(lo),
            hi: Some(hi),
            pass: Self::check(observed, Some(lo), Some(hi)),
            detail: detail.into(),
        }
    }

    pub fn at_most(
        id: impl Into<String>,
        metric: impl Into<String>,
        observed: f64,
        hi: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            metric: metric.into(),
            observed,
            lo: None,
            hi: Some(hi),
            pass: Self::check(observed, None, Some(hi)),
            detail: detail.into(),
        }
    }

    pub fn at_least(
        id: impl Into<String>,
        metric: impl Into<String>,
        observed: f64,
        lo: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            metric: metric.into(),
            observed,
            lo: Some(lo),
            hi: None,
            pass: Self::check(observed, Some(lo), None),
            detail: detail.into(),
        }
    }

    /// A condition that is already a boolean; `observed` records 1 or 0.
    pub fn requirement(
        id: impl Into<String>,
        metric: impl Into<String>,
        pass: bool,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            metric: metric.into(),
            observed: if pass { 1.0 } else { 0.0 },
            lo: None,
            hi: None,
            pass,
            detail: detail.into(),
        }
    }

    /// Reported but never enforced.
    pub fn info(
        id: impl Into<String>,
        metric: impl Into<String>,
        observed: f64,
        detail: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            metric: metric.into(),
            observed,
            lo: None,
            hi: None,
            pass: true,
            detail: detail.into(),
        }
    }
}

/// Everything one experiment run produces.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub kind: String,
    /// Fully resolved configuration (defaults filled in). Worker count is
    /// deliberately not part of it: it cannot change any reported number.
    pub config: Value,
    pub records: Vec<Value>,
    pub aggregates: Value,
    pub verdicts: Vec<Verdict>,
}

impl ExperimentReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.iter().all(|v| v.pass)
    }

    /// Short fingerprint of the resolved config, stable across runs.
    pub fn config_hash(&self) -> String {
        let canonical = self.config.to_string();
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(16);
        for byte in &digest[..8] {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    pub fn header(&self) -> Value {
        json!({
            "artifact_version": env!("CARGO_PKG_VERSION"),
            "experiment": self.kind,
            "config_hash": self.config_hash(),
            "config": self.config,
        })
    }

    pub fn records_jsonl(&self) -> String {
        let mut out = self.header().to_string();
        out.push('\n');
        for record in &self.records {
            out.push_str(&record.to_string());
            out.push('\n');
        }
        out
    }

    pub fn summary_json(&self) -> Value {
        json!({
            "artifact_version": env!("CARGO_PKG_VERSION"),
            "experiment": self.kind,
            "config_hash": self.config_hash(),
            "config": self.config,
            "aggregates": self.aggregates,
            "verdicts": self.verdicts,
            "all_pass": self.all_pass(),
        })
    }

    /// Flat table mirror of the summary: aggregates then verdicts.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("section,id,metric,value,lo,hi,pass,detail\n");
        let mut flat = Vec::new();
        flatten_value("", &self.aggregates, &mut flat);
        for (path, value) in flat {
            out.push_str(&format!(
                "aggregate,{},,{},,,,\n",
                csv_escape(&path),
                csv_escape(&value)
            ));
        }
        for v in &self.verdicts {
            out.push_str(&format!(
                "verdict,{},{},{},{},{},{},{}\n",
                csv_escape(&v.id),
                csv_escape(&v.metric),
                fmt_f64(v.observed),
                v.lo.map(fmt_f64).unwrap_or_default(),
                v.hi.map(fmt_f64).unwrap_or_default(),
                v.pass,
                csv_escape(&v.detail)
            ));
        }
        out
    }

    /// Writes `records.jsonl`, `summary.json`, `summary.csv` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        ensure_finite(&self.header())?;
        for record in &self.records {
            ensure_finite(record)?;
        }
        let summary = self.summary_json();
        ensure_finite(&summary)?;
        std::fs::create_dir_all(dir).map_err(Error::Io)?;
        let targets = [
            (dir.join("records.jsonl"), self.records_jsonl().into_bytes()),
            (
                dir.join("summary.json"),
                (summary.to_string() + "\n").into_bytes(),
            ),
            (dir.join("summary.csv"), self.summary_csv().into_bytes()),
        ];
        let mut written = Vec::new();
        for (path, bytes) in targets {
            atomic_write(&path, &bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Writes via a sibling temp file and rename, so readers never observe a
/// half-written artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| Error::Input(format!("`{}` has no file name", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    std::fs::write(&tmp, bytes).map_err(Error::Io)?;
    std::fs::rename(&tmp, path).map_err(Error::Io)?;
    Ok(())
}

/// Serialized output must not contain nulls: a non-finite float would render
/// as `null`, and downstream parsers treat that as corruption.
fn ensure_finite(value: &Value) -> Result<()> {
    match value {
        Value::Null => Err(Error::Input("refusing to serialize null".into())),
        Value::Number(n) => {
            if n.is_f64() && !n.as_f64().is_some_and(f64::is_finite) {
                Err(Error::Input("refusing to serialize a non-finite number".into()))
            } else {
                Ok(())
            }
        }
        Value::Array(items) => items.iter().try_for_each(ensure_finite),
        Value::Object(map) => map.values().try_for_each(ensure_finite),
        _ => Ok(()),
    }
}

fn flatten_value(prefix: &str, value: &Value, out: &mut Vec<(String, String)>) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let path = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_value(&path, v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_value(&format!("{prefix}[{i}]"), v, out);
            }
        }
        Value::Number(n) => out.push((prefix.to_string(), n.to_string())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::Null => out.push((prefix.to_string(), "null".to_string())),
    }
}

fn fmt_f64(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x:.1}")
    } else {
        format!("{x}")
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> ExperimentReport {
        ExperimentReport {
            kind: "l1".into(),
            config: json!({"experiment": "l1", "replicates": "2"}),
            records: vec![json!({"replicate": 0, "l1": 12}), json!({"replicate": 1, "l1": 15})],
            aggregates: json!({"ratio": {"mean": 1.02, "ci_lo": 0.98}}),
            verdicts: vec![
                Verdict::band("9.ratio", "mean ratio", 1.02, 0.9, 1.1, "within band"),
                Verdict::at_most("5.tail", "tail prob", 0.11, 0.12, ""),
            ],
        }
    }

    #[test]
    fn band_checks_are_inclusive_and_nan_fails() {
        assert!(Verdict::band("a", "m", 1.0, 1.0, 1.0, "").pass);
        assert!(!Verdict::band("a", "m", 1.01, 0.0, 1.0, "").pass);
        assert!(!Verdict::band("a", "m", f64::NAN, 0.0, 1.0, "").pass);
        assert!(Verdict::at_least("a", "m", 0.5, 0.5, "").pass);
        assert!(!Verdict::at_most("a", "m", f64::INFINITY, 1.0, "").pass);
        assert!(Verdict::info("a", "m", 123.0, "").pass);
    }

    #[test]
    fn config_hash_ignores_source_ordering() {
        let mut a = sample_report();
        let mut b = sample_report();
        a.config = json!({"x": "1", "y": "2"});
        b.config = serde_json::from_str(r#"{"y": "2", "x": "1"}"#).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.config_hash().len(), 16);
        b.config = json!({"x": "1", "y": "3"});
        assert_ne!(a.config_hash(), b.config_hash());
    }

    #[test]
    fn jsonl_has_header_plus_records() {
        let report = sample_report();
        let text = report.records_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        let header: Value = serde_json::from_str(lines[0]).unwrap();
        assert_eq!(header["experiment"], "l1");
        assert_eq!(header["config_hash"], Value::String(report.config_hash()));
        let rec: Value = serde_json::from_str(lines[2]).unwrap();
        assert_eq!(rec["l1"], 15);
    }

    #[test]
    fn csv_flattens_aggregates_and_lists_verdicts() {
        let csv = sample_report().summary_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "section,id,metric,value,lo,hi,pass,detail");
        assert!(lines.iter().any(|l| l.starts_with("aggregate,ratio.mean,,1.02")));
        assert!(lines.iter().any(|l| l.contains("verdict,9.ratio,mean ratio,1.02,0.9,1.1,true")));
        assert!(lines.iter().any(|l| l.contains("verdict,5.tail,tail prob,0.11,,0.12,true")));
    }

    #[test]
    fn csv_escaping_round_trips_awkward_fields() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }

    #[test]
    fn writes_all_three_artifacts_atomically() {
        let dir = std::env::temp_dir().join(format!("gnplab-report-{}", std::process::id()));
        let _ = std::fs::remove_dir_all(&dir);
        let report = sample_report();
        let written = report.write_all(&dir).unwrap();
        assert_eq!(written.len(), 3);
        for path in &written {
            assert!(path.exists(), "{}", path.display());
        }
        assert!(!std::fs::read_dir(&dir)
            .unwrap()
            .any(|e| e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
        let summary: Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap())
                .unwrap();
        assert_eq!(summary["all_pass"], Value::Bool(true));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn non_finite_numbers_are_refused() {
        let mut report = sample_report();
        report.aggregates = json!({"bad": f64::NAN});
        let dir = std::env::temp_dir().join(format!("gnplab-nan-{}", std::process::id()));
        let err = report.write_all(&dir).unwrap_err().to_string();
        assert!(err.contains("non-finite") || err.contains("null"), "{err}");
        let _ = std::fs::remove_dir_all(&dir);
    }
}
