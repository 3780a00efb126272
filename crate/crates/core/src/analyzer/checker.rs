//! External checker protocol: the configured tool is invoked as
//! `<command> <dir>` where `<dir>` holds the revision-pinned files, and
//! must print a JSON array of `{"path": ..., "cc": ..., ...}` objects to
//! stdout. Metrics the tool does not emit stay absent, never zero.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use serde::{Deserialize, Serialize};

use super::MetricVector;
use crate::error::{Error, Result};

/// How to invoke an external metrics tool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckerCommand {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
}

impl CheckerCommand {
    pub fn display(&self) -> String {
        let mut s = self.program.clone();
        for a in &self.args {
            s.push(' ');
            s.push_str(a);
        }
        s
    }
}

/// Run one checker over a batch of revision-pinned files.
///
/// Contents are materialized in a temporary directory handed to the tool
/// as its final argument; the directory is removed afterwards.
pub fn run_external_checker(
    command: &CheckerCommand,
    files: &[(String, String)],
) -> Result<BTreeMap<String, MetricVector>> {
    let dir = make_temp_dir()?;
    let result = run_in_dir(command, files, &dir);
    let _ = fs::remove_dir_all(&dir);
    result
}

fn run_in_dir(
    command: &CheckerCommand,
    files: &[(String, String)],
    dir: &Path,
) -> Result<BTreeMap<String, MetricVector>> {
    for (path, content) in files {
        let rel = Path::new(path);
        if rel.is_absolute()
            || rel
                .components()
                .any(|c| !matches!(c, std::path::Component::Normal(_)))
        {
            return Err(Error::Config(format!(
                "refusing to materialize non-relative path {path:?} for a checker"
            )));
        }
        let target = dir.join(rel);
        if let Some(parent) = target.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&target, content)?;
    }

    let output = Command::new(&command.program)
        .args(&command.args)
        .arg(dir)
        .output()
        .map_err(|e| Error::CheckerProcessFailure {
            command: command.display(),
            status: -1,
            stderr: e.to_string(),
        })?;
    if !output.status.success() {
        return Err(Error::CheckerProcessFailure {
            command: command.display(),
            status: output.status.code().unwrap_or(-1),
            stderr: String::from_utf8_lossy(&output.stderr).into_owned(),
        });
    }

    let stdout = String::from_utf8_lossy(&output.stdout).into_owned();
    parse_checker_output(&stdout)
}

fn parse_checker_output(payload: &str) -> Result<BTreeMap<String, MetricVector>> {
    let protocol_err = |reason: &str| Error::CheckerProtocolError {
        reason: reason.to_string(),
        payload: payload.chars().take(2000).collect(),
    };

    let value: serde_json::Value =
        serde_json::from_str(payload).map_err(|e| protocol_err(&format!("invalid JSON: {e}")))?;
    let items = value
        .as_array()
        .ok_or_else(|| protocol_err("top-level value is not an array"))?;

    let mut result = BTreeMap::new();
    for item in items {
        let obj = item
            .as_object()
            .ok_or_else(|| protocol_err("array element is not an object"))?;
        let path = obj
            .get("path")
            .and_then(|p| p.as_str())
            .ok_or_else(|| protocol_err("element lacks a string \"path\""))?;
        let vector = MetricVector {
            cc: count_field(obj, "cc", &protocol_err)?,
            hv: float_field(obj, "hv", &protocol_err)?,
            hd: float_field(obj, "hd", &protocol_err)?,
            ca: count_field(obj, "Ca", &protocol_err)?,
            ce: count_field(obj, "Ce", &protocol_err)?,
            sloc: count_field(obj, "sloc", &protocol_err)?,
        };
        result.insert(path.to_string(), vector);
    }
    Ok(result)
}

fn float_field(
    obj: &serde_json::Map<String, serde_json::Value>,
    key: &str,
    err: &impl Fn(&str) -> Error,
) -> Result<Option<f64>> {
    match obj.get(key) {
        None | Some(serde_json::Value::Null) => Ok(None),
        Some(v) => {
            let f = v
                .as_f64()
                .filter(|f| f.is_finite())
                .ok_or_else(|| err(&format!("field {key:?} is not a finite number")))?;
            Ok(Some(f))
        }
    }
}

fn count_field(
    obj: &serde_json::Map<String, serde_json::Value>,
    key: &str,
    err: &impl Fn(&str) -> Error,
) -> Result<Option<u32>> {
    match obj.get(key) {
        None | Some(serde_json::Value::Null) => Ok(None),
        Some(v) => {
            let f = v
                .as_f64()
                .filter(|f| f.is_finite() && *f >= 0.0 && f.fract() == 0.0 && *f <= u32::MAX as f64)
                .ok_or_else(|| err(&format!("field {key:?} is not a non-negative integer")))?;
            Ok(Some(f as u32))
        }
    }
}

fn make_temp_dir() -> Result<std::path::PathBuf> {
    use std::time::{SystemTime, UNIX_EPOCH};
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    let dir = std::env::temp_dir().join(format!("codemine-checker-{}-{nanos}", std::process::id()));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_vectors() {
        let out = parse_checker_output(r#"[{"path":"a.x","cc":2,"hv":80.0,"hd":4.0,"sloc":10}]"#)
            .unwrap();
        let v = &out["a.x"];
        assert_eq!(v.cc, Some(2));
        assert_eq!(v.hv, Some(80.0));
        assert_eq!(v.hd, Some(4.0));
        assert_eq!(v.sloc, Some(10));
        assert_eq!(v.ca, None);
        assert_eq!(v.ce, None);
    }

    #[test]
    fn empty_array_is_an_empty_map() {
        assert!(parse_checker_output("[]").unwrap().is_empty());
    }

    #[test]
    fn malformed_output_keeps_the_payload() {
        let err = parse_checker_output(r#"{"path": "oops"}"#).unwrap_err();
        match err {
            Error::CheckerProtocolError { payload, .. } => {
                assert!(payload.contains("oops"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn fractional_counts_are_rejected() {
        assert!(parse_checker_output(r#"[{"path":"a","cc":2.5}]"#).is_err());
        assert!(parse_checker_output(r#"[{"path":"a","cc":-1}]"#).is_err());
        assert!(parse_checker_output(r#"[{"path":"a","hv":"x"}]"#).is_err());
    }

    #[test]
    fn nonzero_exit_is_a_process_failure() {
        let cmd = CheckerCommand {
            program: "false".into(),
            args: vec![],
        };
        let err = run_external_checker(&cmd, &[("a.c".into(), "int x;".into())]).unwrap_err();
        assert!(matches!(err, Error::CheckerProcessFailure { .. }));
    }

    #[test]
    fn checker_sees_materialized_files() {
        // `ls <dir>` style checker: emit an entry for a fixed path.
        let cmd = CheckerCommand {
            program: "sh".into(),
            args: vec![
                "-c".into(),
                r#"test -f "$1/sub/a.c" && echo '[{"path":"sub/a.c","cc":4}]'"#.into(),
                "checker".into(),
            ],
        };
        let out = run_external_checker(&cmd, &[("sub/a.c".into(), "int x;".into())]).unwrap();
        assert_eq!(out["sub/a.c"].cc, Some(4));
    }
}
