//! Versioned JSON reports and their flat CSV form.
//!
//! CSV columns are fixed: `command,metric,value`. Metrics are the scalar
//! fields of `result` (nested keys joined by `.`) followed by
//! `bound.<name>.value`, `bound.<name>.measured` and `bound.<name>.holds`.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use qwalk_core::io::write_atomic;

pub const SCHEMA: &str = "qwalk-report";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Bound {
    pub name: String,
    pub formula: String,
    pub value: f64,
    pub measured: f64,
    pub holds: bool,
}

impl Bound {
    /// A bound of the form `measured ≤ value`.
    pub fn upper(name: &str, formula: &str, value: f64, measured: f64) -> Self {
        Self {
            name: name.to_string(),
            formula: formula.to_string(),
            value,
            measured,
            holds: measured <= value,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub version: u32,
    pub command: String,
    pub config: Value,
    pub result: Value,
    pub bounds: Vec<Bound>,
}

impl Report {
    pub fn new(command: &str, config: Value, result: Value, bounds: Vec<Bound>) -> Self {
        Self {
            schema: SCHEMA,
            version: VERSION,
            command: command.to_string(),
            config,
            result,
            bounds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn to_csv(&self) -> String {
        let mut rows = Vec::new();
        flatten("", &self.result, &mut rows);
        for b in &self.bounds {
            rows.push((format!("bound.{}.value", b.name), format!("{:?}", b.value)));
            rows.push((format!("bound.{}.measured", b.name), format!("{:?}", b.measured)));
            rows.push((format!("bound.{}.holds", b.name), b.holds.to_string()));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["command", "metric", "value"]).expect("in-memory write");
        for (metric, value) in rows {
            w.write_record([self.command.as_str(), &metric, &value]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }

    /// Writes `<path>` as JSON and the same path with extension `csv`.
    pub fn write(&self, path: &Path) -> qwalk_core::Result<()> {
        write_atomic(path, self.to_json().as_bytes())?;
        write_atomic(&path.with_extension("csv"), self.to_csv().as_bytes())
    }
}

/// Scalars only; arrays are skipped to keep the table one value per metric.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, v, out);
            }
        }
        Value::Number(n) => out.push((prefix.to_string(), n.to_string())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null | Value::Array(_) => {}
    }
}

/// `--report` if given, else `$QWALK_OUT_DIR/<command>.json`.
pub fn destination(explicit: Option<&Path>, command: &str) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    std::env::var_os("QWALK_OUT_DIR")
        .filter(|d| !d.is_empty())
        .map(|d| PathBuf::from(d).join(format!("{command}.json")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn csv_flattens_scalars_and_bounds() {
        let r = Report::new(
            "demo",
            json!({}),
            json!({"a": 1.5, "nested": {"b": true}, "list": [1, 2]}),
            vec![Bound::upper("err", "x ≤ y", 0.1, 0.05)],
        );
        let csv = r.to_csv();
        assert!(csv.starts_with("command,metric,value\n"));
        assert!(csv.contains("demo,a,1.5\n"));
        assert!(csv.contains("demo,nested.b,true\n"));
        assert!(csv.contains("demo,bound.err.holds,true\n"));
        assert!(!csv.contains("list"));
    }

    #[test]
    fn upper_bound_holds() {
        assert!(Bound::upper("a", "", 1.0, 1.0).holds);
        assert!(!Bound::upper("a", "", 1.0, 1.1).holds);
    }
}
