//! Schema-versioned JSON reports and atomic artifact writes.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// One named check. Passes iff `residual ≤ tolerance`; non-finite
/// residuals are recorded as `null` and fail.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub residual: Option<f64>,
    pub tolerance: f64,
    pub seed: Option<u64>,
}

impl Check {
    pub fn measured(name: impl Into<String>, residual: f64, tolerance: f64, seed: Option<u64>) -> Self {
        let ok = residual.is_finite() && residual <= tolerance;
        Check {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            residual: residual.is_finite().then_some(residual),
            tolerance,
            seed,
        }
    }

    /// A yes/no check: residual 0 on success, 1 on failure, tolerance 0.
    pub fn boolean(name: impl Into<String>, ok: bool, seed: Option<u64>) -> Self {
        Check::measured(name, if ok { 0.0 } else { 1.0 }, 0.0, seed)
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    /// Canonical text of the model, when one was loaded.
    pub model: Option<String>,
    pub dimensions: Option<serde_json::Value>,
    /// Every numeric flag with the value used, defaults included.
    pub flags: serde_json::Map<String, serde_json::Value>,
    pub checks: Vec<Check>,
    pub artifacts: Vec<String>,
    pub data: serde_json::Value,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            schema: SCHEMA_VERSION,
            command: command.into(),
            model: None,
            dimensions: None,
            flags: serde_json::Map::new(),
            checks: Vec::new(),
            artifacts: Vec::new(),
            data: serde_json::Value::Null,
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Write through a temporary file in the same directory, then rename.
/// Existing targets that are not regular files (devices, pipes) are
/// written in place instead.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    if fs::metadata(path).is_ok_and(|m| !m.is_file()) {
        return fs::write(path, contents);
    }
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report_is_valid_json() {
        let r = Report::new("report");
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], "1");
        assert_eq!(v["checks"].as_array().unwrap().len(), 0);
        assert!(r.all_passed());
    }

    #[test]
    fn failing_check() {
        let c = Check::measured("x", 2e-3, 1e-3, Some(4));
        assert_eq!(c.status, Status::Fail);
        let v = serde_json::to_value(&c).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        assert_eq!(keys, ["name", "residual", "seed", "status", "tolerance"]);
        assert_eq!(v["status"], "fail");
        assert!(!Check::measured("nan", f64::NAN, 1.0, None).passed());
    }

    #[test]
    fn atomic_write() {
        let dir = std::env::temp_dir().join(format!("rockland-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("out.json");
        write_atomic(&p, "{}").unwrap();
        write_atomic(&p, "{\"a\":1}").unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "{\"a\":1}");
        assert!(write_atomic(&dir, "{}").is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
