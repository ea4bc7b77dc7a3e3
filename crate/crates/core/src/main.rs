use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use maxloc::brownian::{conjecture_family, domain_hit_record};
use maxloc::config::{parse_config, ExperimentConfig};
use maxloc::geometry::{CurveSpec, Point2};
use maxloc::oracles::{bessel_j0, bessel_j0_zero, bessel_j1, disk_center_survival, square_mode};
use maxloc::presets::{run_preset, PresetOptions, ARC_SEGMENTS, CONJECTURE_BULGES};
use maxloc::report::{emit_mc, emit_report, ReportDir, EIGENFIELD_FILE, REPORT_FILE, TORSION_FILE};
use maxloc::{
    conjecture_experiment, constants_report, hit_probability_obstacle, locate_maximum,
    EmbeddedGrid, Error, Result,
};

#[derive(Parser, Debug)]
#[command(
    name = "maxloc",
    version,
    about = "Maxima of ground states and torsion functions on planar domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Grid resolution (cells per side).
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte-Carlo path count.
    #[arg(long, global = true)]
    paths: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a named experiment with its acceptance checks.
    Preset { name: String },
    /// Solve ground state and torsion, write the constants report and fields.
    Solve,
    /// Estimate a hitting probability for the domain boundary, or for the
    /// config's obstacle when one is given.
    McHit,
    /// Compare hitting probabilities of the segment and bulging arcs.
    McConjecture,
    /// Summarize the reports in the output directory.
    Report,
    /// Print reference values of the analytic oracles as JSON.
    Oracles,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => parse_config(path)?,
        None => ExperimentConfig::new(CurveSpec::circle(1.0)),
    };
    if let Some(n) = cli.n {
        cfg.n = n;
    }
    if let Some(seed) = cli.seed {
        cfg.mc.seed = seed;
    }
    if let Some(paths) = cli.paths {
        cfg.mc.n_paths = paths;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn init_threads() {
    let threads = std::env::var("MAXLOC_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or(1);
    // a pool that is already initialized is left as is
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Preset { name } => {
            let opts = PresetOptions {
                n: cfg.n,
                seed: cfg.mc.seed,
                n_paths: cfg.mc.n_paths,
                out: cfg.out.clone(),
                tolerances: cfg.tolerances.clone(),
            };
            let outcome = run_preset(name, &opts)?;
            for c in &outcome.checks {
                println!(
                    "{} {:<36} {:.6e}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.value
                );
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            Ok(outcome.passed())
        }
        Command::Solve => {
            let curve = cfg.boundary_curve()?;
            let grid = EmbeddedGrid::build(&curve, cfg.n)?;
            let eigen = grid.solve_ground_state()?;
            let torsion = grid.solve_torsion()?;
            let report = constants_report(&curve, &eigen, &torsion)?;
            let dir = ReportDir::create(&cfg.out)?;
            let body = json!({
                "report": report,
                "eigen_iterations": eigen.iterations,
                "eigen_residual": eigen.final_residual,
                "grid": grid.metadata(),
            });
            emit_report(&dir, &cfg, &body)?;
            dir.write_field(EIGENFIELD_FILE, &eigen.field)?;
            dir.write_field(TORSION_FILE, &torsion)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).unwrap_or_default()
            );
            Ok(true)
        }
        Command::McHit => {
            let started = Instant::now();
            let mc = cfg.mc.mc_config()?;
            let dir = ReportDir::create(&cfg.out)?;
            let body = match cfg.obstacle_polyline()? {
                Some(obstacle) => {
                    let x0 = cfg.mc.x0.unwrap_or(Point2::ORIGIN);
                    json!({"x0": x0, "estimate": hit_probability_obstacle(&obstacle, x0, &mc)?})
                }
                None => {
                    let curve = cfg.boundary_curve()?;
                    let x0 = match cfg.mc.x0 {
                        Some(p) => p,
                        None => {
                            let grid = EmbeddedGrid::build(&curve, cfg.n)?;
                            locate_maximum(&grid.solve_ground_state()?.field)?.point
                        }
                    };
                    json!({"x0": x0, "estimate": domain_hit_record(&curve, x0, &mc)?.estimate()})
                }
            };
            emit_mc(&dir, &cfg, &body, started.elapsed().as_secs_f64())?;
            println!(
                "{}",
                serde_json::to_string_pretty(&body).unwrap_or_default()
            );
            Ok(true)
        }
        Command::McConjecture => {
            let started = Instant::now();
            let mc = cfg.mc.mc_config()?;
            let x0 = cfg.mc.x0.unwrap_or(Point2::ORIGIN);
            let family = conjecture_family(&CONJECTURE_BULGES, ARC_SEGMENTS)?;
            let table = conjecture_experiment(&family, x0, &mc)?;
            let dir = ReportDir::create(&cfg.out)?;
            emit_mc(&dir, &cfg, &table, started.elapsed().as_secs_f64())?;
            for (i, row) in table.rows.iter().enumerate() {
                let mark = if i == table.minimizer { "*" } else { " " };
                println!(
                    "{mark} {:<10} p = {:.5} ± {:.5}   gap = {:+.5} ± {:.5}",
                    row.label, row.estimate.p_hat, row.estimate.stderr, row.gap, row.gap_stderr
                );
            }
            Ok(true)
        }
        Command::Report => {
            let path = cfg.out.join(REPORT_FILE);
            let text = std::fs::read_to_string(&path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
                context: path.display().to_string(),
                message: e.to_string(),
            })?;
            let result = &value["result"];
            let mut all_pass = true;
            if let Some(checks) = result["checks"].as_array() {
                for c in checks {
                    let passed = c["passed"].as_bool().unwrap_or(false);
                    all_pass &= passed;
                    println!(
                        "{} {:<36} {}",
                        if passed { "PASS" } else { "FAIL" },
                        c["name"].as_str().unwrap_or("?"),
                        c["value"]
                    );
                }
            }
            if let Some(report) = result.get("report") {
                println!(
                    "{}",
                    serde_json::to_string_pretty(report).unwrap_or_default()
                );
            }
            println!(
                "config_hash {}",
                value["config_hash"].as_str().unwrap_or("?")
            );
            Ok(all_pass)
        }
        Command::Oracles => {
            println!(
                "{}",
                serde_json::to_string_pretty(&oracle_table()?).unwrap_or_default()
            );
            Ok(true)
        }
    }
}

fn oracle_table() -> Result<Value> {
    let zeros: Vec<f64> = (1..=5).map(bessel_j0_zero).collect();
    let xs = [0.5, 1.0, 2.5, 5.0, 10.0, 20.0, 50.0];
    let bessel: Vec<Value> = xs
        .iter()
        .map(|&x| json!({"x": x, "j0": bessel_j0(x), "j1": bessel_j1(x)}))
        .collect();
    let survival: Vec<Value> = [0.05, 0.1, 0.2, 0.5, 1.0]
        .iter()
        .map(|&t| Ok(json!({"t": t, "survival": disk_center_survival(t)?})))
        .collect::<Result<_>>()?;
    let modes: Vec<Value> = (1..=8)
        .map(|n| {
            let m = square_mode(n, 1)?;
            Ok(json!({"n": n, "extremum_distance": m.extremum_distance, "laplacian_ratio": m.laplacian_ratio_bound}))
        })
        .collect::<Result<_>>()?;
    Ok(maxloc::report::round_json(json!({
        "j0_zeros": zeros,
        "bessel": bessel,
        "disk_center_survival": survival,
        "square_modes": modes,
    })))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
