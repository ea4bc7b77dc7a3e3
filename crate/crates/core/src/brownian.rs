//! Monte-Carlo simulation of Brownian motion: hitting probabilities for
//! domain boundaries and open obstacle curves, and Feynman–Kac weighted
//! expectations with an absorbing ("sticky") boundary.
//!
//! Paths are generated from a per-path ChaCha stream keyed by
//! `(seed, path index)`, so estimates depend only on the inputs and never on
//! how paths are scheduled across threads. Increments and bridge draws use
//! separate streams: switching the bridge correction on or off, or changing
//! `t_final`, leaves the trajectories themselves unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, Point2};

/// Bridge draws are skipped when `d1 d2 / (D dt)` exceeds this, i.e. when
/// the crossing probability is below `e^{-40}`.
const BRIDGE_CUTOFF: f64 = 40.0;

/// Within this distance of the last exact evaluation the nearest boundary
/// point is tracked locally instead of rescanning the whole curve.
const TRACKING_RADIUS: f64 = 0.05;

pub const MIN_PATHS: usize = 100;

/// Time normalization of the simulated Brownian motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Generator `Δ` (heat equation `u_t = Δu`): increments of variance
    /// `2 dt` per coordinate.
    #[default]
    Laplacian,
    /// Generator `Δ/2` (standard Brownian motion): variance `dt`.
    HalfLaplacian,
}

impl Generator {
    /// Diffusion coefficient `D` with per-coordinate variance `2 D dt`.
    pub fn diffusivity(self) -> f64 {
        match self {
            Generator::Laplacian => 1.0,
            Generator::HalfLaplacian => 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub bridge_correction: bool,
    pub t_final: f64,
    #[serde(default)]
    pub generator: Generator,
}

impl McConfig {
    pub fn new(
        dt: f64,
        n_paths: usize,
        seed: u64,
        bridge_correction: bool,
        t_final: f64,
    ) -> Result<Self> {
        McConfig {
            dt,
            n_paths,
            seed,
            bridge_correction,
            t_final,
            generator: Generator::Laplacian,
        }
        .validated()
    }

    pub fn with_generator(mut self, generator: Generator) -> Self {
        self.generator = generator;
        self
    }

    /// Checks the invariants and shrinks `dt` so that it divides `t_final`.
    pub fn validated(mut self) -> Result<Self> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(
                "dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        if self.n_paths < MIN_PATHS {
            return Err(Error::config(
                "n_paths",
                format!("must be at least {MIN_PATHS}, got {}", self.n_paths),
            ));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::config(
                "t_final",
                format!("must be ≥ 0, got {}", self.t_final),
            ));
        }
        if self.t_final > 0.0 {
            let ratio = self.t_final / self.dt;
            let steps = (ratio - 1e-9 * ratio.max(1.0)).ceil().max(1.0);
            self.dt = self.t_final / steps;
        }
        Ok(self)
    }

    pub fn steps(&self) -> usize {
        if self.t_final == 0.0 {
            0
        } else {
            (self.t_final / self.dt).round() as usize
        }
    }

    fn diffusion_time(&self) -> f64 {
        self.generator.diffusivity() * self.dt
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingEstimate {
    pub p_hat: f64,
    /// Binomial standard error `sqrt(p̂(1 − p̂)/n)`.
    pub stderr: f64,
    pub hits: usize,
    pub n_paths: usize,
    pub config: McConfig,
}

impl HittingEstimate {
    fn from_hits(hits: usize, config: McConfig) -> Self {
        let n = config.n_paths as f64;
        let p_hat = hits as f64 / n;
        HittingEstimate {
            p_hat,
            stderr: (p_hat * (1.0 - p_hat) / n).sqrt(),
            hits,
            n_paths: config.n_paths,
            config,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FkEstimate {
    /// Mean of `u(ω(t)) exp(∫₀ᵗ V(ω))` over paths, zero for absorbed paths.
    pub mean_weight: f64,
    pub stderr: f64,
    pub n_paths: usize,
    pub config: McConfig,
}

/// Independent random streams of one path.
struct PathStreams {
    increments: ChaCha8Rng,
    bridge: ChaCha8Rng,
    aux_bridge: ChaCha8Rng,
}

impl PathStreams {
    fn new(seed: u64, index: usize) -> Self {
        let base = ChaCha8Rng::seed_from_u64(seed);
        let stream = |k: u64| {
            let mut r = base.clone();
            r.set_stream(3 * index as u64 + k);
            r
        };
        PathStreams {
            increments: stream(0),
            bridge: stream(1),
            aux_bridge: stream(2),
        }
    }
}

/// One Euler step of Brownian motion with generator `Δ`: Gaussian
/// increments of variance `2 dt` per coordinate.
pub fn advance<R: Rng + ?Sized>(position: Point2, dt: f64, rng: &mut R) -> Point2 {
    step_with_diffusivity(position, dt, 1.0, rng)
}

fn step_with_diffusivity<R: Rng + ?Sized>(
    position: Point2,
    dt: f64,
    diffusivity: f64,
    rng: &mut R,
) -> Point2 {
    let sigma = (2.0 * diffusivity * dt).sqrt();
    let dx: f64 = rng.sample(StandardNormal);
    let dy: f64 = rng.sample(StandardNormal);
    Point2::new(position.x + sigma * dx, position.y + sigma * dy)
}

/// Increment for path `index` under `seed`; exposed so reproducibility can
/// be checked path by path.
pub fn path_rng(seed: u64, index: usize) -> impl Rng {
    PathStreams::new(seed, index).increments
}

/// Probability that a one-dimensional Brownian bridge with normal-component
/// variance `2 dt`, starting and ending at distances `d1`, `d2` on the same
/// side of a flat barrier, touches it.
pub fn bridge_crossing_prob(d1: f64, d2: f64, dt: f64) -> f64 {
    (-(d1 * d2) / dt).exp()
}

/// Hit detection against a domain boundary along one path.
struct DomainWalker<'c> {
    curve: &'c BoundaryCurve,
    bridge: bool,
    /// `D dt`
    diffusion_time: f64,
    pos: Point2,
    /// Exact boundary distance of `pos`, if known.
    pos_exact: Option<f64>,
    /// Lower bound on the boundary distance of `pos`.
    pos_lower: f64,
    anchor: Point2,
    anchor_distance: f64,
    anchor_theta: f64,
}

impl<'c> DomainWalker<'c> {
    fn new(curve: &'c BoundaryCurve, start: Point2, diffusion_time: f64, bridge: bool) -> Self {
        let (d, theta) = if bridge {
            curve.boundary_distance_hint(start, start.y.atan2(start.x))
        } else {
            (0.0, 0.0)
        };
        DomainWalker {
            curve,
            bridge,
            diffusion_time,
            pos: start,
            pos_exact: Some(d),
            pos_lower: d,
            anchor: start,
            anchor_distance: d,
            anchor_theta: theta,
        }
    }

    fn exact_distance(&mut self, p: Point2) -> f64 {
        let (d, theta) = if p.distance(self.anchor) < TRACKING_RADIUS {
            self.curve.boundary_distance_hint(p, self.anchor_theta)
        } else {
            self.curve.boundary_distance_hint(p, p.y.atan2(p.x))
        };
        self.anchor = p;
        self.anchor_distance = d;
        self.anchor_theta = theta;
        d
    }

    /// Moves to `q`; returns whether the boundary was hit on the way.
    fn step_to<R: Rng>(&mut self, q: Point2, rng: &mut R) -> bool {
        if !self.curve.contains(q) {
            return true;
        }
        if self.bridge {
            let lower_q = (self.anchor_distance - q.distance(self.anchor)).max(0.0);
            if self.pos_lower * lower_q <= BRIDGE_CUTOFF * self.diffusion_time {
                let d1 = match self.pos_exact {
                    Some(d) => d,
                    None => self.exact_distance(self.pos),
                };
                let d2 = self.exact_distance(q);
                let prob = bridge_crossing_prob(d1, d2, self.diffusion_time);
                if rng.random::<f64>() < prob {
                    return true;
                }
                self.pos_exact = Some(d2);
                self.pos_lower = d2;
            } else {
                self.pos_exact = None;
                self.pos_lower = lower_q;
            }
        }
        self.pos = q;
        false
    }
}

/// First-hit step (1-based) of every path, `None` for survivors.
#[derive(Debug, Clone, PartialEq)]
pub struct HitRecord {
    pub first_hit: Vec<Option<u32>>,
    pub config: McConfig,
}

impl HitRecord {
    pub fn estimate(&self) -> HittingEstimate {
        let hits = self.first_hit.iter().filter(|h| h.is_some()).count();
        HittingEstimate::from_hits(hits, self.config)
    }

    /// Estimate for a shorter horizon from the same paths (nested stopping).
    pub fn estimate_at(&self, t: f64) -> HittingEstimate {
        let steps = (t / self.config.dt + 1e-9).floor() as u32;
        let hits = self
            .first_hit
            .iter()
            .filter(|h| matches!(h, Some(s) if *s <= steps))
            .count();
        let mut config = self.config;
        config.t_final = steps as f64 * config.dt;
        HittingEstimate::from_hits(hits, config)
    }
}

fn check_config(cfg: &McConfig) -> Result<McConfig> {
    cfg.validated()
}

pub fn domain_hit_record(curve: &BoundaryCurve, x0: Point2, cfg: &McConfig) -> Result<HitRecord> {
    let cfg = check_config(cfg)?;
    if !curve.contains(x0) {
        return Err(Error::PointOutside(x0));
    }
    let steps = cfg.steps();
    let d = cfg.generator.diffusivity();
    let first_hit = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = PathStreams::new(cfg.seed, i);
            let mut walker =
                DomainWalker::new(curve, x0, cfg.diffusion_time(), cfg.bridge_correction);
            for step in 1..=steps {
                let q = step_with_diffusivity(walker.pos, cfg.dt, d, &mut rng.increments);
                if walker.step_to(q, &mut rng.bridge) {
                    return Some(step as u32);
                }
            }
            None
        })
        .collect();
    Ok(HitRecord {
        first_hit,
        config: cfg,
    })
}

/// Fraction of paths from `x0` that leave the domain by `t_final`.
pub fn hit_probability_domain(
    curve: &BoundaryCurve,
    x0: Point2,
    cfg: &McConfig,
) -> Result<HittingEstimate> {
    Ok(domain_hit_record(curve, x0, cfg)?.estimate())
}

/// Open polygonal curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    vertices: Vec<Point2>,
}

impl Polyline {
    pub fn new(vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument(
                "an obstacle needs at least two vertices".into(),
            ));
        }
        if let Some(bad) = vertices.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite obstacle vertex {bad}"
            )));
        }
        if let Some(i) = vertices.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::DegenerateObstacle(i));
        }
        Ok(Polyline { vertices })
    }

    pub fn segment(a: Point2, b: Point2) -> Result<Self> {
        Polyline::new(vec![a, b])
    }

    /// Regular polygon with `n` sides inscribed in the circle of radius
    /// `radius`, closed by repeating the first vertex.
    pub fn regular_polygon(n: usize, radius: f64) -> Result<Self> {
        let vertices = (0..=n)
            .map(|k| {
                let t = std::f64::consts::TAU * (k % n) as f64 / n as f64;
                Point2::new(radius * t.cos(), radius * t.sin())
            })
            .collect();
        Polyline::new(vertices)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn translated(&self, offset: Point2) -> Polyline {
        Polyline {
            vertices: self.vertices.iter().map(|v| *v + offset).collect(),
        }
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.vertices.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn distance_to(&self, p: Point2) -> f64 {
        self.segments()
            .map(|(a, b)| point_segment_distance(p, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    /// Reads vertices from CSV rows `x,y`; a leading `x,y` header is
    /// optional.
    pub fn from_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(reader);
        let mut vertices = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse {
                context: format!("obstacle CSV row {}", row + 1),
                message: e.to_string(),
            })?;
            if row == 0 && record.len() == 2 && &record[0] == "x" && &record[1] == "y" {
                continue;
            }
            if record.len() != 2 {
                return Err(Error::Parse {
                    context: format!("obstacle CSV row {}", row + 1),
                    message: format!("expected 2 columns, found {}", record.len()),
                });
            }
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| Error::Parse {
                    context: format!("obstacle CSV row {}", row + 1),
                    message: format!("`{s}`: {e}"),
                })
            };
            vertices.push(Point2::new(parse(&record[0])?, parse(&record[1])?));
        }
        Polyline::new(vertices)
    }
}

fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

/// Closed-segment intersection test, touching included.
fn segments_intersect(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> bool {
    let d1 = (q2 - q1).cross(p1 - q1);
    let d2 = (q2 - q1).cross(p2 - q1);
    let d3 = (p2 - p1).cross(q1 - p1);
    let d4 = (p2 - p1).cross(q2 - p1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point2, b: Point2, c: Point2| {
        c.x >= a.x.min(b.x) && c.x <= a.x.max(b.x) && c.y >= a.y.min(b.y) && c.y <= a.y.max(b.y)
    };
    (d1 == 0.0 && on(q1, q2, p1))
        || (d2 == 0.0 && on(q1, q2, p2))
        || (d3 == 0.0 && on(p1, p2, q1))
        || (d4 == 0.0 && on(p1, p2, q2))
}

/// Hit detection against an obstacle polyline along one path. Steps that
/// stay inside a ball around the last anchor, clear of the obstacle by
/// more than the bridge reach, need no segment tests.
struct ObstacleWalker<'o> {
    obstacle: &'o Polyline,
    bridge: bool,
    diffusion_time: f64,
    reach: f64,
    pos: Point2,
    anchor: Point2,
    clearance: f64,
}

impl<'o> ObstacleWalker<'o> {
    fn new(obstacle: &'o Polyline, start: Point2, dt: f64, diffusivity: f64, bridge: bool) -> Self {
        ObstacleWalker {
            obstacle,
            bridge,
            diffusion_time: diffusivity * dt,
            reach: 4.0 * (2.0 * diffusivity * dt).sqrt(),
            pos: start,
            anchor: start,
            clearance: obstacle.distance_to(start),
        }
    }

    fn in_safe_ball(&self, p: Point2) -> bool {
        p.distance(self.anchor) < self.clearance - self.reach
    }

    fn step_to<R: Rng>(&mut self, q: Point2, rng: &mut R) -> bool {
        let p = self.pos;
        if self.in_safe_ball(p) && self.in_safe_ball(q) {
            self.pos = q;
            return false;
        }
        for (a, b) in self.obstacle.segments() {
            if segments_intersect(p, q, a, b) {
                return true;
            }
        }
        if self.bridge {
            for (a, b) in self.obstacle.segments() {
                if point_segment_distance(p, a, b) > self.reach
                    || point_segment_distance(q, a, b) > self.reach
                {
                    continue;
                }
                let ab = b - a;
                let len = ab.norm();
                let e1 = ab.cross(p - a) / len;
                let e2 = ab.cross(q - a) / len;
                if e1 * e2 <= 0.0 {
                    continue;
                }
                // the bridge, if it touches the line, does so between the
                // endpoints weighted by their distances
                let w = e1.abs() / (e1.abs() + e2.abs());
                let c = p + (q - p) * w;
                let s = (c - a).dot(ab) / (len * len);
                if !(0.0..=1.0).contains(&s) {
                    continue;
                }
                let prob = bridge_crossing_prob(e1.abs(), e2.abs(), self.diffusion_time);
                if rng.random::<f64>() < prob {
                    return true;
                }
            }
        }
        self.pos = q;
        self.anchor = q;
        self.clearance = self.obstacle.distance_to(q);
        false
    }
}

fn obstacle_hits(obstacle: &Polyline, x0: Point2, cfg: &McConfig) -> Vec<bool> {
    let steps = cfg.steps();
    let d = cfg.generator.diffusivity();
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = PathStreams::new(cfg.seed, i);
            let mut walker = ObstacleWalker::new(obstacle, x0, cfg.dt, d, cfg.bridge_correction);
            for _ in 0..steps {
                let q = step_with_diffusivity(walker.pos, cfg.dt, d, &mut rng.increments);
                if walker.step_to(q, &mut rng.bridge) {
                    return true;
                }
            }
            false
        })
        .collect()
}

/// Fraction of paths from `x0` that cross the polyline by `t_final`.
pub fn hit_probability_obstacle(
    obstacle: &Polyline,
    x0: Point2,
    cfg: &McConfig,
) -> Result<HittingEstimate> {
    let cfg = check_config(cfg)?;
    if obstacle.distance_to(x0) == 0.0 {
        return Err(Error::StartOnObstacle);
    }
    let hits = obstacle_hits(obstacle, x0, &cfg)
        .iter()
        .filter(|h| **h)
        .count();
    Ok(HittingEstimate::from_hits(hits, cfg))
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    // shifted by the first value, so identical samples average exactly
    let first = values.first().copied().unwrap_or(0.0);
    let mean = first + values.iter().map(|v| v - first).sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Feynman–Kac weight `u(ω(t)) exp(∫₀ᵗ V(ω(s)) ds)` along one path, the
/// integral by the left-endpoint rule; zero once the path is absorbed.
struct FkPath<'c> {
    walker: DomainWalker<'c>,
    integral: f64,
    absorbed: bool,
}

impl<'c> FkPath<'c> {
    fn new(curve: &'c BoundaryCurve, start: Point2, diffusion_time: f64, bridge: bool) -> Self {
        FkPath {
            walker: DomainWalker::new(curve, start, diffusion_time, bridge),
            integral: 0.0,
            absorbed: false,
        }
    }

    fn step<V, R>(&mut self, q: Point2, dt: f64, potential: &V, rng: &mut R) -> Result<()>
    where
        V: Fn(Point2) -> f64,
        R: Rng,
    {
        if self.absorbed {
            return Ok(());
        }
        let p = self.walker.pos;
        let v = potential(p);
        if !v.is_finite() {
            return Err(Error::UnboundedPotential(p));
        }
        self.integral += v * dt;
        if self.walker.step_to(q, rng) {
            self.absorbed = true;
        }
        Ok(())
    }

    fn weight(&self, u: &impl Fn(Point2) -> f64) -> f64 {
        if self.absorbed {
            0.0
        } else {
            u(self.walker.pos) * self.integral.exp()
        }
    }
}

/// Estimates `E_{x0}[u(ω(t)) exp(∫₀ᵗ V(ω))]` with absorption at the
/// boundary.
pub fn fk_expectation<U, V>(
    u: U,
    potential: V,
    curve: &BoundaryCurve,
    x0: Point2,
    cfg: &McConfig,
) -> Result<FkEstimate>
where
    U: Fn(Point2) -> f64 + Sync,
    V: Fn(Point2) -> f64 + Sync,
{
    let cfg = check_config(cfg)?;
    if !curve.contains(x0) {
        return Err(Error::PointOutside(x0));
    }
    let steps = cfg.steps();
    let d = cfg.generator.diffusivity();
    let weights = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = PathStreams::new(cfg.seed, i);
            let mut path = FkPath::new(curve, x0, cfg.diffusion_time(), cfg.bridge_correction);
            for _ in 0..steps {
                if path.absorbed {
                    break;
                }
                let q = step_with_diffusivity(path.walker.pos, cfg.dt, d, &mut rng.increments);
                path.step(q, cfg.dt, &potential, &mut rng.bridge)?;
            }
            Ok(path.weight(&u))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean_weight, stderr) = mean_and_stderr(&weights);
    Ok(FkEstimate {
        mean_weight,
        stderr,
        n_paths: cfg.n_paths,
        config: cfg,
    })
}

/// Coarse and fine Feynman–Kac estimates driven by the same Brownian
/// paths: the fine run uses `dt / refine`, and every coarse increment is the
/// sum of `refine` fine ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedFk {
    pub coarse: FkEstimate,
    pub fine: FkEstimate,
    /// Mean of fine minus coarse weights.
    pub shift: f64,
    /// Standard error of `shift` over the coupled paths.
    pub shift_stderr: f64,
}

pub fn fk_expectation_refined<U, V>(
    u: U,
    potential: V,
    curve: &BoundaryCurve,
    x0: Point2,
    cfg: &McConfig,
    refine: usize,
) -> Result<RefinedFk>
where
    U: Fn(Point2) -> f64 + Sync,
    V: Fn(Point2) -> f64 + Sync,
{
    let cfg = check_config(cfg)?;
    if refine < 1 {
        return Err(Error::InvalidArgument(
            "refinement factor must be ≥ 1".into(),
        ));
    }
    if !curve.contains(x0) {
        return Err(Error::PointOutside(x0));
    }
    let mut fine_cfg = cfg;
    fine_cfg.dt = cfg.dt / refine as f64;
    let d = cfg.generator.diffusivity();
    let pairs = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = PathStreams::new(cfg.seed, i);
            let mut coarse = FkPath::new(curve, x0, cfg.diffusion_time(), cfg.bridge_correction);
            let mut fine = FkPath::new(curve, x0, fine_cfg.diffusion_time(), cfg.bridge_correction);
            let mut free = x0;
            for _ in 0..cfg.steps() {
                for _ in 0..refine {
                    free = step_with_diffusivity(free, fine_cfg.dt, d, &mut rng.increments);
                    fine.step(free, fine_cfg.dt, &potential, &mut rng.bridge)?;
                }
                coarse.step(free, cfg.dt, &potential, &mut rng.aux_bridge)?;
                if coarse.absorbed && fine.absorbed {
                    break;
                }
            }
            Ok((coarse.weight(&u), fine.weight(&u)))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let coarse_w: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let fine_w: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diff: Vec<f64> = pairs.iter().map(|p| p.1 - p.0).collect();
    let (cm, cs) = mean_and_stderr(&coarse_w);
    let (fm, fs) = mean_and_stderr(&fine_w);
    let (shift, shift_stderr) = mean_and_stderr(&diff);
    Ok(RefinedFk {
        coarse: FkEstimate {
            mean_weight: cm,
            stderr: cs,
            n_paths: cfg.n_paths,
            config: cfg,
        },
        fine: FkEstimate {
            mean_weight: fm,
            stderr: fs,
            n_paths: cfg.n_paths,
            config: fine_cfg,
        },
        shift,
        shift_stderr,
    })
}

/// Circular arc from `(1, 0)` to `(2, 0)` whose midpoint is displaced by
/// `bulge` along `+y`, as a polyline with `segments` pieces; `bulge = 0`
/// gives the straight segment.
pub fn bulge_arc(bulge: f64, segments: usize) -> Result<Polyline> {
    let (a, b) = (Point2::new(1.0, 0.0), Point2::new(2.0, 0.0));
    if bulge == 0.0 {
        let vertices = (0..=segments)
            .map(|k| a + (b - a) * (k as f64 / segments as f64))
            .collect();
        return Polyline::new(vertices);
    }
    let half = 0.5;
    let radius = (half * half + bulge * bulge) / (2.0 * bulge.abs());
    let center = Point2::new(1.5, bulge - bulge.signum() * radius);
    let start = (a - center).y.atan2((a - center).x);
    let mut end = (b - center).y.atan2((b - center).x);
    // sweep through the bulge side
    if bulge > 0.0 {
        while end > start {
            end -= std::f64::consts::TAU;
        }
    } else {
        while end < start {
            end += std::f64::consts::TAU;
        }
    }
    let mut vertices: Vec<Point2> = (0..=segments)
        .map(|k| {
            let t = start + (end - start) * k as f64 / segments as f64;
            center + Point2::new(t.cos(), t.sin()) * radius
        })
        .collect();
    vertices[0] = a;
    vertices[segments] = b;
    Polyline::new(vertices)
}

/// Straight segment followed by arcs with the given bulges.
pub fn conjecture_family(bulges: &[f64], segments: usize) -> Result<Vec<(String, Polyline)>> {
    let mut out = vec![("straight".to_string(), bulge_arc(0.0, segments)?)];
    for &b in bulges {
        out.push((format!("arc{b:+}"), bulge_arc(b, segments)?));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureRow {
    pub label: String,
    pub estimate: HittingEstimate,
    /// `p̂ − p̂_min` against the minimizer.
    pub gap: f64,
    /// Standard error of `gap` over paired paths.
    pub gap_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureTable {
    pub rows: Vec<ConjectureRow>,
    pub minimizer: usize,
    #[serde(skip)]
    indicators: Vec<Vec<bool>>,
}

impl ConjectureTable {
    /// `p̂_i − p̂_j` and its standard error over the common paths.
    pub fn paired_difference(&self, i: usize, j: usize) -> (f64, f64) {
        let diffs: Vec<f64> = self.indicators[i]
            .iter()
            .zip(&self.indicators[j])
            .map(|(a, b)| *a as u8 as f64 - *b as u8 as f64)
            .collect();
        mean_and_stderr(&diffs)
    }
}

const NORMALIZATION_TOL: f64 = 1e-9;

/// Hitting probability of each curve under common random numbers, with the
/// minimizer flagged.
pub fn conjecture_experiment(
    family: &[(String, Polyline)],
    x0: Point2,
    cfg: &McConfig,
) -> Result<ConjectureTable> {
    let cfg = check_config(cfg)?;
    if family.is_empty() {
        return Err(Error::InvalidArgument("empty curve family".into()));
    }
    for (index, (label, curve)) in family.iter().enumerate() {
        let v = curve.vertices();
        let (first, last) = (v[0], v[v.len() - 1]);
        let start_err = ((first - x0).norm() - 1.0).abs();
        let chord_err = ((last - first).norm() - 1.0).abs();
        if start_err > NORMALIZATION_TOL || chord_err > NORMALIZATION_TOL {
            return Err(Error::Normalization {
                index,
                detail: format!(
                    "`{label}`: |γ(0)| − 1 = {start_err:.3e}, |γ(1) − γ(0)| − 1 = {chord_err:.3e}"
                ),
            });
        }
    }
    let indicators: Vec<Vec<bool>> = family
        .iter()
        .map(|(_, curve)| {
            if curve.distance_to(x0) == 0.0 {
                Err(Error::StartOnObstacle)
            } else {
                Ok(obstacle_hits(curve, x0, &cfg))
            }
        })
        .collect::<Result<_>>()?;
    let estimates: Vec<HittingEstimate> = indicators
        .iter()
        .map(|h| HittingEstimate::from_hits(h.iter().filter(|x| **x).count(), cfg))
        .collect();
    let minimizer = estimates
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.p_hat.total_cmp(&b.1.p_hat).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut table = ConjectureTable {
        rows: Vec::new(),
        minimizer,
        indicators,
    };
    for (i, (label, _)) in family.iter().enumerate() {
        let (gap, gap_stderr) = table.paired_difference(i, minimizer);
        table.rows.push(ConjectureRow {
            label: label.clone(),
            estimate: estimates[i],
            gap,
            gap_stderr,
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveSpec;
    use crate::oracles::disk_center_survival;

    fn disk() -> BoundaryCurve {
        BoundaryCurve::new(CurveSpec::circle(1.0)).unwrap()
    }

    #[test]
    fn config_rounds_dt_down() {
        let cfg = McConfig::new(0.3, 100, 1, true, 1.0).unwrap();
        assert_eq!(cfg.steps(), 4);
        assert!((cfg.dt - 0.25).abs() < 1e-15);
        let cfg = McConfig::new(1e-3, 100, 1, true, 1.0).unwrap();
        assert_eq!(cfg.steps(), 1000);
        assert_eq!(McConfig::new(1e-3, 100, 1, true, 0.0).unwrap().steps(), 0);
        assert!(McConfig::new(0.0, 100, 1, true, 1.0).is_err());
        assert!(McConfig::new(1e-3, 99, 1, true, 1.0).is_err());
        assert!(McConfig::new(1e-3, 100, 1, true, -1.0).is_err());
    }

    #[test]
    fn increments_have_variance_two_dt() {
        let mut rng = path_rng(7, 0);
        let n = 1_000_000;
        let dt = 0.01;
        let (mut sx, mut sxx, mut sy, mut syy) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let p = advance(Point2::ORIGIN, dt, &mut rng);
            sx += p.x;
            sxx += p.x * p.x;
            sy += p.y;
            syy += p.y * p.y;
        }
        let nf = n as f64;
        let var_x = (sxx - sx * sx / nf) / (nf - 1.0);
        let var_y = (syy - sy * sy / nf) / (nf - 1.0);
        let se = 0.02 * (2.0 / (nf - 1.0)).sqrt();
        assert!((var_x - 0.02).abs() < 3.0 * se, "{var_x}");
        assert!((var_y - 0.02).abs() < 3.0 * se, "{var_y}");
        // vanishing step
        let mut rng = path_rng(7, 1);
        let p = advance(Point2::ORIGIN, 1e-300, &mut rng);
        assert!(p.norm() < 1e-140);
    }

    #[test]
    fn paths_are_reproducible() {
        let walk = |seed, index| {
            let mut rng = path_rng(seed, index);
            (0..100).fold(Point2::ORIGIN, |p, _| advance(p, 1e-3, &mut rng))
        };
        assert_eq!(walk(42, 17), walk(42, 17));
        assert_ne!(walk(42, 17), walk(42, 18));
        assert_ne!(walk(42, 17), walk(43, 17));
    }

    #[test]
    fn bridge_probabilities() {
        assert_eq!(bridge_crossing_prob(0.0, 0.3, 1e-3), 1.0);
        let dt: f64 = 1e-3;
        assert!((bridge_crossing_prob(dt.sqrt(), dt.sqrt(), dt) - (-1.0f64).exp()).abs() < 1e-15);
        assert!(bridge_crossing_prob(20.0 * dt, 1.0, dt) <= 2.1e-9);
    }

    #[test]
    fn zero_horizon_never_hits() {
        let cfg = McConfig::new(1e-3, 200, 1, true, 0.0).unwrap();
        let est = hit_probability_domain(&disk(), Point2::ORIGIN, &cfg).unwrap();
        assert_eq!(est.p_hat, 0.0);
        assert!(hit_probability_domain(&disk(), Point2::new(1.5, 0.0), &cfg).is_err());
    }

    #[test]
    fn disk_hitting_matches_series() {
        let cfg = McConfig::new(1e-4, 20_000, 11, true, 0.1).unwrap();
        let est = hit_probability_domain(&disk(), Point2::ORIGIN, &cfg).unwrap();
        let exact = 1.0 - disk_center_survival(0.1).unwrap();
        assert!(
            (est.p_hat - exact).abs() < 3.0 * est.stderr,
            "{} vs {exact}",
            est.p_hat
        );
        assert!((est.stderr - (est.p_hat * (1.0 - est.p_hat) / 20_000.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn nested_horizons_and_bridge_monotonicity() {
        let cfg = McConfig::new(1e-3, 5_000, 3, true, 0.2).unwrap();
        let record = domain_hit_record(&disk(), Point2::ORIGIN, &cfg).unwrap();
        let p05 = record.estimate_at(0.05).p_hat;
        let p10 = record.estimate_at(0.1).p_hat;
        let p20 = record.estimate().p_hat;
        assert!(p05 <= p10 && p10 <= p20);
        // a direct run with the shorter horizon sees the same paths
        let short = McConfig::new(1e-3, 5_000, 3, true, 0.1).unwrap();
        assert_eq!(
            hit_probability_domain(&disk(), Point2::ORIGIN, &short)
                .unwrap()
                .p_hat,
            p10
        );

        let plain = McConfig {
            bridge_correction: false,
            ..cfg
        };
        let plain_record = domain_hit_record(&disk(), Point2::ORIGIN, &plain).unwrap();
        for (a, b) in plain_record.first_hit.iter().zip(&record.first_hit) {
            if let Some(s) = a {
                assert!(matches!(b, Some(t) if t <= s));
            }
        }
    }

    #[test]
    fn segment_crossing_geometry() {
        let (a, b) = (Point2::new(1.0, 0.0), Point2::new(2.0, 0.0));
        assert!(segments_intersect(
            Point2::new(1.5, -0.1),
            Point2::new(1.5, 0.1),
            a,
            b
        ));
        assert!(!segments_intersect(
            Point2::new(0.5, -0.1),
            Point2::new(0.5, 0.1),
            a,
            b
        ));
        assert!(segments_intersect(
            Point2::new(1.5, 0.0),
            Point2::new(1.5, 0.1),
            a,
            b
        ));
        assert!(segments_intersect(
            Point2::new(0.5, 0.0),
            Point2::new(1.2, 0.0),
            a,
            b
        ));
        assert!(!segments_intersect(
            Point2::new(2.5, 0.0),
            Point2::new(3.0, 0.0),
            a,
            b
        ));
        assert!((point_segment_distance(Point2::new(0.0, 0.0), a, b) - 1.0).abs() < 1e-15);
        assert!((point_segment_distance(Point2::new(1.5, 0.3), a, b) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn obstacle_validation() {
        let p = Point2::new(1.0, 1.0);
        assert!(matches!(
            Polyline::new(vec![p, p]),
            Err(Error::DegenerateObstacle(0))
        ));
        assert!(Polyline::new(vec![p]).is_err());
        let seg = Polyline::segment(Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)).unwrap();
        let cfg = McConfig::new(1e-3, 100, 1, true, 0.1).unwrap();
        assert!(matches!(
            hit_probability_obstacle(&seg, Point2::ORIGIN, &cfg),
            Err(Error::StartOnObstacle)
        ));
    }

    #[test]
    fn far_obstacle_is_never_hit() {
        let seg = Polyline::segment(Point2::new(1.0, 0.0), Point2::new(2.0, 0.0))
            .unwrap()
            .translated(Point2::new(1e6, 0.0));
        let cfg = McConfig::new(1e-3, 2_000, 5, true, 1.0).unwrap();
        let est = hit_probability_obstacle(&seg, Point2::ORIGIN, &cfg).unwrap();
        assert_eq!(est.hits, 0);
    }

    #[test]
    fn obstacle_csv_parsing() {
        let poly = Polyline::from_csv("x,y\n1,0\n2, 0\n".as_bytes()).unwrap();
        assert_eq!(
            poly.vertices(),
            &[Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)]
        );
        let poly = Polyline::from_csv("# comment\n0,0\n0,1\n1,1\n".as_bytes()).unwrap();
        assert_eq!(poly.vertices().len(), 3);
        assert!(matches!(
            Polyline::from_csv("x,y\n1,abc\n".as_bytes()),
            Err(Error::Parse { .. })
        ));
        assert!(Polyline::from_csv("1,2,3\n".as_bytes()).is_err());
        assert!(matches!(
            Polyline::from_csv("1,1\n1,1\n".as_bytes()),
            Err(Error::DegenerateObstacle(0))
        ));
    }

    #[test]
    fn arcs_are_normalized_and_mirror() {
        for b in [0.0, 0.2, -0.2, 0.4, -0.4] {
            let arc = bulge_arc(b, 64).unwrap();
            let v = arc.vertices();
            assert_eq!(v.len(), 65);
            assert_eq!(v[0], Point2::new(1.0, 0.0));
            assert_eq!(v[64], Point2::new(2.0, 0.0));
            assert!((v[32].y - b).abs() < 1e-12, "{b}: {}", v[32]);
        }
        let up = bulge_arc(0.3, 64).unwrap();
        let down = bulge_arc(-0.3, 64).unwrap();
        for (p, q) in up.vertices().iter().zip(down.vertices()) {
            assert!((p.x - q.x).abs() < 1e-12 && (p.y + q.y).abs() < 1e-12);
        }
    }

    #[test]
    fn conjecture_rejects_bad_normalization() {
        let family = vec![(
            "short".to_string(),
            Polyline::segment(Point2::new(1.0, 0.0), Point2::new(1.5, 0.0)).unwrap(),
        )];
        let cfg = McConfig::new(1e-3, 100, 1, true, 0.1).unwrap();
        match conjecture_experiment(&family, Point2::ORIGIN, &cfg) {
            Err(Error::Normalization { index, detail }) => {
                assert_eq!(index, 0);
                assert!(detail.contains("short"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_curve_family_is_its_own_minimizer() {
        let family = conjecture_family(&[], 64).unwrap();
        let cfg = McConfig::new(1e-3, 500, 1, true, 0.5).unwrap();
        let table = conjecture_experiment(&family, Point2::ORIGIN, &cfg).unwrap();
        assert_eq!(table.minimizer, 0);
        assert_eq!(table.rows[0].gap, 0.0);
    }

    #[test]
    fn fk_zero_horizon_returns_u() {
        let cfg = McConfig::new(1e-3, 100, 1, true, 0.0).unwrap();
        let est =
            fk_expectation(|p| 1.0 + p.x, |_| 3.0, &disk(), Point2::new(0.2, 0.0), &cfg).unwrap();
        assert_eq!(est.mean_weight, 1.2);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn fk_survival_consistency() {
        let cfg = McConfig::new(1e-3, 5_000, 9, true, 0.1).unwrap();
        let fk = fk_expectation(|_| 1.0, |_| 0.0, &disk(), Point2::ORIGIN, &cfg).unwrap();
        let hit = hit_probability_domain(&disk(), Point2::ORIGIN, &cfg).unwrap();
        // identical paths, identical absorption decisions
        assert!((fk.mean_weight - (1.0 - hit.p_hat)).abs() < 1e-12);
    }

    #[test]
    fn fk_rejects_unbounded_potential() {
        let cfg = McConfig::new(1e-3, 100, 1, true, 0.01).unwrap();
        let res = fk_expectation(
            |_| 1.0,
            |p: Point2| 1.0 / p.norm(),
            &disk(),
            Point2::ORIGIN,
            &cfg,
        );
        assert!(matches!(res, Err(Error::UnboundedPotential(_))));
    }
}
