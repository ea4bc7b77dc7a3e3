//! Serialization of reports and fields.
//!
//! Floats are rounded to 12 significant digits before they are written, so
//! reruns with identical inputs produce byte-identical files.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::ScalarField;

pub const REPORT_FILE: &str = "report.json";
pub const EIGENFIELD_FILE: &str = "eigenfield.csv";
pub const TORSION_FILE: &str = "torsion.csv";
pub const MC_FILE: &str = "mc.json";

pub const SIGNIFICANT_DIGITS: usize = 12;

pub const MODULES: [&str; 6] = [
    "geometry",
    "grid_solver",
    "analytic_oracles",
    "extremum_analysis",
    "brownian_mc",
    "cli_report",
];

/// Rounds `x` to `digits` significant decimal digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", digits.max(1) - 1, x).parse().unwrap_or(x)
}

/// Rounds every float in a JSON tree; integers are left alone.
pub fn round_json(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = round_sig(n.as_f64().unwrap_or(0.0), SIGNIFICANT_DIGITS);
            serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_json).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_json(v))).collect())
        }
        other => other,
    }
}

/// SHA-256 of the compact JSON form of `config`, hex encoded.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config).map_err(|e| Error::Parse {
        context: "config hash".into(),
        message: e.to_string(),
    })?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

pub fn module_versions() -> Map<String, Value> {
    MODULES
        .iter()
        .map(|m| {
            (
                m.to_string(),
                Value::String(env!("CARGO_PKG_VERSION").to_string()),
            )
        })
        .collect()
}

fn to_value<T: Serialize>(context: &str, x: &T) -> Result<Value> {
    serde_json::to_value(x).map_err(|e| Error::Parse {
        context: context.to_string(),
        message: e.to_string(),
    })
}

/// Wraps `body` with the resolved config, its hash and module versions.
pub fn envelope<C: Serialize, B: Serialize>(config: &C, body: &B) -> Result<Value> {
    let mut map = Map::new();
    map.insert("config".into(), to_value("config", config)?);
    map.insert("config_hash".into(), Value::String(config_hash(config)?));
    map.insert("module_versions".into(), Value::Object(module_versions()));
    map.insert("result".into(), to_value("result", body)?);
    Ok(round_json(Value::Object(map)))
}

/// Output directory with fixed file names.
#[derive(Debug, Clone)]
pub struct ReportDir {
    dir: PathBuf,
}

impl ReportDir {
    pub fn create(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(ReportDir { dir })
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn write_json(&self, name: &str, value: &Value) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse {
            context: name.to_string(),
            message: e.to_string(),
        })?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    pub fn write_field(&self, name: &str, field: &ScalarField<'_>) -> Result<PathBuf> {
        let path = self.dir.join(name);
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        field
            .write_csv(BufWriter::new(file))
            .map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

/// Writes a report envelope to `report.json`.
pub fn emit_report<C: Serialize, B: Serialize>(
    dir: &ReportDir,
    config: &C,
    body: &B,
) -> Result<PathBuf> {
    dir.write_json(REPORT_FILE, &envelope(config, body)?)
}

/// Writes a Monte-Carlo envelope to `mc.json`, with the wall-clock time of
/// the run.
pub fn emit_mc<C: Serialize, B: Serialize>(
    dir: &ReportDir,
    config: &C,
    body: &B,
    wall_seconds: f64,
) -> Result<PathBuf> {
    let mut value = envelope(config, body)?;
    if let Value::Object(map) = &mut value {
        map.insert(
            "wall_seconds".into(),
            serde_json::Number::from_f64(round_sig(wall_seconds, 4))
                .map_or(Value::Null, Value::Number),
        );
    }
    dir.write_json(MC_FILE, &value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.0, 12), 0.0);
        assert_eq!(round_sig(1.0 / 3.0, 12), 0.333333333333);
        assert_eq!(round_sig(-123456.7890123456, 12), -123456.789012);
        assert_eq!(round_sig(2.5e-300, 3), 2.5e-300);
        assert!(round_sig(f64::NAN, 12).is_nan());
        assert_eq!(
            round_sig(1.0 / 3.0, 12),
            round_sig(round_sig(1.0 / 3.0, 12), 12)
        );
    }

    #[test]
    fn json_rounding_keeps_integers() {
        let v = round_json(json!({"a": [1.0 / 3.0, 7], "b": {"c": 123456789012345u64}}));
        assert_eq!(
            v,
            json!({"a": [0.333333333333, 7], "b": {"c": 123456789012345u64}})
        );
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&json!({"n": 256})).unwrap();
        assert_eq!(a, config_hash(&json!({"n": 256})).unwrap());
        assert_ne!(a, config_hash(&json!({"n": 128})).unwrap());
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn reports_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let out = ReportDir::create(dir.path().join("x")).unwrap();
        let body = json!({"value": std::f64::consts::PI});
        let p = emit_report(&out, &json!({"n": 1}), &body).unwrap();
        let first = fs::read(&p).unwrap();
        emit_report(&out, &json!({"n": 1}), &body).unwrap();
        assert_eq!(first, fs::read(&p).unwrap());
        let text = String::from_utf8(first).unwrap();
        assert!(text.contains("3.14159265359"));
        assert!(text.contains("config_hash"));
        assert!(text.contains("module_versions"));
    }
}
