//! Run directories, atomic artifact writes and the manifest.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::config::{hex_digest, RunConfig};

/// Outcome class of a run; maps onto the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    ToleranceFailure,
    InputError,
    NumericalFault,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::ToleranceFailure => 1,
            Status::InputError => 2,
            Status::NumericalFault => 3,
        }
    }
}

/// Rewrites every float in a JSON tree with 17 significant digits.
/// Non-finite floats are already `null` after serialization.
pub fn full_precision(value: Value) -> Value {
    match value {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => match n.as_f64() {
            Some(x) if x.is_finite() => {
                Value::Number(Number::from_str(&format!("{x:.16e}")).expect("formatted float is valid JSON"))
            }
            _ => Value::Null,
        },
        Value::Array(items) => Value::Array(items.into_iter().map(full_precision).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, full_precision(v))).collect()),
        other => other,
    }
}

/// Serializes to pretty JSON with full-precision floats and a final newline.
pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let tree = serde_json::to_value(value).expect("report types serialize");
    let mut bytes = serde_json::to_vec_pretty(&full_precision(tree)).expect("JSON trees serialize");
    bytes.push(b'\n');
    bytes
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "artifact path has no file name"))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

/// Directory of one run: `<out>/<kind>-<first 16 hex digits of the config hash>`.
pub fn run_dir(out: &Path, config: &RunConfig) -> PathBuf {
    out.join(format!("{}-{}", config.kind.name(), &config.hash()[..16]))
}

/// Collects artifacts and writes them with their checksums.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    artifacts: Vec<(String, String)>,
}

impl RunWriter {
    pub fn create(dir: PathBuf) -> io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, artifacts: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.artifacts.retain(|(n, _)| n != name);
        self.artifacts.push((name.to_string(), hex_digest(bytes)));
        Ok(())
    }

    /// Writes `manifest.json` last: the resolved configuration with the
    /// origin of every value, the overrides, artifact checksums and status.
    pub fn finish(self, config: &RunConfig, status: Status, message: Option<&str>) -> io::Result<PathBuf> {
        let mut resolved = Map::new();
        for (k, e) in &config.entries {
            resolved.insert(k.clone(), serde_json::to_value(e).expect("entries serialize"));
        }
        let mut artifacts = Map::new();
        for (name, digest) in &self.artifacts {
            artifacts.insert(name.clone(), Value::String(digest.clone()));
        }
        let manifest = serde_json::json!({
            "kind": config.kind.name(),
            "config_sha256": config.hash(),
            "config": resolved,
            "overrides": config.overrides,
            "artifacts": artifacts,
            "status": status,
            "exit_code": status.exit_code(),
            "message": message,
        });
        let path = self.dir.join("manifest.json");
        write_atomic(&path, &to_json(&manifest))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_carry_seventeen_digits() {
        let v = serde_json::json!({"a": 0.1, "b": [1.0/3.0, 2], "c": f64::NAN});
        let text = String::from_utf8(to_json(&v)).unwrap();
        assert!(text.contains("1.0000000000000001e-1") || text.contains("1.0000000000000000e-1"), "{text}");
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["b"][0].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(back["b"][1].as_i64().unwrap(), 2);
        assert!(back["c"].is_null());
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path();
        let path = dir.join("x.json");
        write_atomic(&path, b"{}").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"{}");
        let names: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }
}
