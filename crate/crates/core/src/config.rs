//! Experiment configuration files.
//!
//! ```json
//! {
//!   "curve": {"a0": 1.0, "a": [0, 0.49]},
//!   "n": 256,
//!   "mc": {"dt": 0.001, "n_paths": 100000, "seed": 42, "t_final": 1.0},
//!   "out": "out"
//! }
//! ```
//!
//! Every key except `curve` is optional. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::brownian::{Generator, McConfig, Polyline};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, CurveSpec, Point2};
use crate::grid::MIN_RESOLUTION;

pub const DEFAULT_N: usize = 256;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_N_PATHS: usize = 100_000;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_T_FINAL: f64 = 1.0;
pub const DEFAULT_OUT: &str = "out";

fn default_n() -> usize {
    DEFAULT_N
}
fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_n_paths() -> usize {
    DEFAULT_N_PATHS
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_true() -> bool {
    true
}
fn default_t_final() -> f64 {
    DEFAULT_T_FINAL
}
fn default_out() -> PathBuf {
    PathBuf::from(DEFAULT_OUT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_n_paths")]
    pub n_paths: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub bridge_correction: bool,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    #[serde(default)]
    pub generator: Generator,
    /// Starting point; the ground-state maximum when absent.
    #[serde(default)]
    pub x0: Option<Point2>,
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            dt: DEFAULT_DT,
            n_paths: DEFAULT_N_PATHS,
            seed: DEFAULT_SEED,
            bridge_correction: true,
            t_final: DEFAULT_T_FINAL,
            generator: Generator::default(),
            x0: None,
        }
    }
}

impl McSettings {
    pub fn mc_config(&self) -> Result<McConfig> {
        McConfig {
            dt: self.dt,
            n_paths: self.n_paths,
            seed: self.seed,
            bridge_correction: self.bridge_correction,
            t_final: self.t_final,
            generator: self.generator,
        }
        .validated()
        .map_err(|e| match e {
            Error::Config { field, message } => Error::config(format!("mc.{field}"), message),
            other => other,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub curve: CurveSpec,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub mc: McSettings,
    /// CSV file of obstacle vertices, relative to the working directory.
    #[serde(default)]
    pub obstacle: Option<PathBuf>,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    /// Tolerance overrides for preset checks, by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl ExperimentConfig {
    pub fn new(curve: CurveSpec) -> Self {
        ExperimentConfig {
            curve,
            n: DEFAULT_N,
            mc: McSettings::default(),
            obstacle: None,
            preset: None,
            out: default_out(),
            tolerances: BTreeMap::new(),
        }
    }

    /// Checks the constraints of every module the config feeds.
    pub fn validate(&self) -> Result<()> {
        self.boundary_curve()?;
        if self.n < MIN_RESOLUTION {
            return Err(Error::config(
                "n",
                format!("must be at least {MIN_RESOLUTION}, got {}", self.n),
            ));
        }
        self.mc.mc_config()?;
        if let Some(x0) = self.mc.x0 {
            if !x0.is_finite() {
                return Err(Error::config("mc.x0", format!("non-finite point {x0}")));
            }
        }
        if let Some((name, tol)) = self
            .tolerances
            .iter()
            .find(|(_, t)| !(t.is_finite() && **t >= 0.0))
        {
            return Err(Error::config(
                format!("tolerances.{name}"),
                format!("must be finite and ≥ 0, got {tol}"),
            ));
        }
        Ok(())
    }

    pub fn boundary_curve(&self) -> Result<BoundaryCurve> {
        BoundaryCurve::new(self.curve.clone()).map_err(|e| Error::config("curve", e.to_string()))
    }

    pub fn obstacle_polyline(&self) -> Result<Option<Polyline>> {
        match &self.obstacle {
            None => Ok(None),
            Some(path) => {
                let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
                Polyline::from_csv(file).map(Some)
            }
        }
    }

    /// Resolved config as pretty JSON, all defaults filled in.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap_or_default()
    }
}

fn json_error(context: &str, e: serde_json::Error) -> Error {
    Error::Parse {
        context: context.to_string(),
        message: e.to_string(),
    }
}

/// Parses and validates a config from JSON text.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| json_error("config", e))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| json_error(&path.display().to_string(), e))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a curve spec such as `{"a0": 1, "a": [0, 0.49]}` into a validated
/// boundary curve.
pub fn parse_curve_spec(text: &str) -> Result<BoundaryCurve> {
    let spec: CurveSpec = serde_json::from_str(text).map_err(|e| json_error("curve spec", e))?;
    BoundaryCurve::new(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_resolves_defaults() {
        let cfg = parse_config_str(r#"{"curve": {"a0": 1}}"#).unwrap();
        assert_eq!(cfg.curve, CurveSpec::circle(1.0));
        assert_eq!(cfg.n, 256);
        assert_eq!(cfg.mc.dt, 1e-3);
        assert_eq!(cfg.mc.n_paths, 100_000);
        assert_eq!(cfg.mc.seed, 42);
        assert!(cfg.mc.bridge_correction);
        assert_eq!(cfg.mc.generator, Generator::Laplacian);
        assert_eq!(cfg.out, PathBuf::from("out"));
    }

    #[test]
    fn star_shape_violation_is_reported_on_curve() {
        match parse_config_str(r#"{"curve": {"a0": 0.1, "a": [0, 0.49]}}"#) {
            Err(Error::Config { field, message }) => {
                assert_eq!(field, "curve");
                assert!(message.contains("star"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_syntax_errors_carry_locations() {
        let err = parse_config_str("{\"curve\": {\"a0\": 1},\n \"nn\": 3}").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("nn") && text.contains("line 2"), "{text}");
        let err = parse_config_str(r#"{"curve": {"a0": 1, "c": []}}"#).unwrap_err();
        assert!(err.to_string().contains('c'));
        let err = parse_config_str("{\"curve\": {\"a0\": 1},\n\n ").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn constraint_violations_name_the_field() {
        let cases = [
            (r#"{"curve": {"a0": 1}, "n": 8}"#, "n"),
            (
                r#"{"curve": {"a0": 1}, "mc": {"n_paths": 10}}"#,
                "mc.n_paths",
            ),
            (r#"{"curve": {"a0": 1}, "mc": {"dt": -1}}"#, "mc.dt"),
            (
                r#"{"curve": {"a0": 1}, "tolerances": {"x": -1}}"#,
                "tolerances.x",
            ),
        ];
        for (text, expected) in cases {
            match parse_config_str(text) {
                Err(Error::Config { field, .. }) => assert_eq!(field, expected),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let text = r#"{"curve": {"a0": 1, "a": [0.25], "b": [0, 0, 0.4]},
                       "mc": {"x0": {"x": 0.1, "y": -0.2}, "generator": "half_laplacian"},
                       "tolerances": {"lambda1": 0.01}}"#;
        let cfg = parse_config_str(text).unwrap();
        let emitted = cfg.to_json();
        let again = parse_config_str(&emitted).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.to_json(), emitted);
    }

    #[test]
    fn curve_spec_parsing() {
        let c = parse_curve_spec(r#"{"a0": 1, "a": [0, 0.49]}"#).unwrap();
        assert!((c.radius_at(0.0) - 1.49).abs() < 1e-15);
        assert!(parse_curve_spec(r#"{"a0": -1}"#).is_err());
        assert!(parse_curve_spec("[]").is_err());
    }
}
