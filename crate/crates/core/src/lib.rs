//! Locating maxima of solutions of `−Δu = Vu` on star-shaped planar domains.
//!
//! The crate solves torsion and ground-state problems on an embedded
//! Cartesian grid, measures where the solutions peak relative to the
//! boundary, and estimates Brownian hitting probabilities and Feynman–Kac
//! expectations by Monte-Carlo simulation.
//!
//! ```
//! use maxloc::{BoundaryCurve, CurveSpec, EmbeddedGrid};
//!
//! let disk = BoundaryCurve::new(CurveSpec::circle(1.0)).unwrap();
//! let grid = EmbeddedGrid::build(&disk, 64).unwrap();
//! let v = grid.solve_torsion().unwrap();
//! assert!((v.max() - 0.25).abs() < 5e-3);
//! ```

pub mod brownian;
pub mod config;
pub mod error;
pub mod extremum;
pub mod geometry;
pub mod grid;
pub mod oracles;
pub mod presets;
pub mod report;

pub use brownian::{
    advance, bridge_crossing_prob, conjecture_experiment, fk_expectation, hit_probability_domain,
    hit_probability_obstacle, FkEstimate, Generator, HittingEstimate, McConfig, Polyline,
};
pub use config::{parse_config, parse_config_str, parse_curve_spec, ExperimentConfig};
pub use error::{Error, Result};
pub use extremum::{
    barta_sup, constants_report, locate_maximum, trace_gradient_flow, verify_stationarity_bound,
    MaximumReport,
};
pub use geometry::{BoundaryCurve, CurveSpec, Point2};
pub use grid::{EigenResult, EmbeddedGrid, FieldRole, ScalarField};
pub use presets::{run_preset, PresetOptions, PresetOutcome, PRESETS};
