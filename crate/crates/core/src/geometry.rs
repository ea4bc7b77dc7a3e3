//! Star-shaped planar domains whose boundary is the polar graph of a
//! truncated Fourier series
//!
//! ```text
//! r(θ) = a0 + Σ_{k=1..K} (a_k cos kθ + b_k sin kθ),   γ(θ) = r(θ) (cos θ, sin θ)
//! ```
//!
//! Every domain is open: points on the boundary curve are reported as
//! outside, matching the Dirichlet condition `u = 0` on `∂Ω`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 2D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// Fourier coefficients of a boundary radius function, as written in
/// config files: `{"a0": 1.0, "a": [0, 0.49], "b": []}`. Entry `k - 1` of
/// `a`/`b` multiplies `cos kθ`/`sin kθ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub a0: f64,
    #[serde(default)]
    pub a: Vec<f64>,
    #[serde(default)]
    pub b: Vec<f64>,
}

impl CurveSpec {
    pub fn circle(radius: f64) -> Self {
        CurveSpec {
            a0: radius,
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    /// `r = 1 + 0.49 cos 2θ`, two lobes joined by a neck of half-width 0.51.
    pub fn peanut() -> Self {
        CurveSpec {
            a0: 1.0,
            a: vec![0.0, 0.49],
            b: Vec::new(),
        }
    }

    /// `r = 1 + 0.25 cos θ + 0.4 sin 3θ`.
    pub fn random_domain() -> Self {
        CurveSpec {
            a0: 1.0,
            a: vec![0.25],
            b: vec![0.0, 0.0, 0.4],
        }
    }

    /// Centered ellipse with semi-axes `a` (along x) and `b`, written as a
    /// Fourier series of its polar radius `ab / sqrt(b² cos²θ + a² sin²θ)`.
    /// Coefficients are computed by trapezoid quadrature and truncated once
    /// they drop below 1e-16 relative, which for moderate aspect ratios
    /// leaves the curve exact to machine precision.
    pub fn ellipse(a: f64, b: f64) -> Self {
        const QUAD: usize = 2048;
        const MAX_HARMONIC: usize = 256;
        let radius = |t: f64| a * b / (b * b * t.cos().powi(2) + a * a * t.sin().powi(2)).sqrt();
        let samples: Vec<f64> = (0..QUAD)
            .map(|i| radius(TAU * i as f64 / QUAD as f64))
            .collect();
        let a0 = samples.iter().sum::<f64>() / QUAD as f64;
        let mut coeffs = Vec::new();
        for k in 1..=MAX_HARMONIC {
            let c = samples
                .iter()
                .enumerate()
                .map(|(i, r)| r * (TAU * (k * i) as f64 / QUAD as f64).cos())
                .sum::<f64>()
                * 2.0
                / QUAD as f64;
            coeffs.push(c);
        }
        let last = coeffs
            .iter()
            .rposition(|c| c.abs() > 1e-16 * a0)
            .map_or(0, |i| i + 1);
        coeffs.truncate(last);
        // odd harmonics vanish by symmetry; zero the quadrature noise
        for (k, c) in coeffs.iter_mut().enumerate() {
            if (k + 1) % 2 == 1 {
                *c = 0.0;
            }
        }
        CurveSpec {
            a0,
            a: coeffs,
            b: Vec::new(),
        }
    }

    /// Multiply every coefficient by `s`, scaling the domain about the origin.
    pub fn scaled(&self, s: f64) -> Self {
        CurveSpec {
            a0: self.a0 * s,
            a: self.a.iter().map(|c| c * s).collect(),
            b: self.b.iter().map(|c| c * s).collect(),
        }
    }

    pub fn truncation(&self) -> usize {
        self.a.len().max(self.b.len())
    }
}

/// Boundary sampling resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampling {
    /// Positivity check and area quadrature.
    pub validation: usize,
    /// Coarse scan for the nearest boundary point.
    pub distance: usize,
    /// All-pairs scan for the diameter.
    pub diameter: usize,
    /// Side of the interior lattice seeding the inradius search.
    pub lattice: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            validation: 8192,
            distance: 4096,
            diameter: 2048,
            lattice: 64,
        }
    }
}

/// Radius and its first two θ-derivatives.
#[derive(Debug, Clone, Copy)]
struct RadiusJet {
    r: f64,
    dr: f64,
    d2r: f64,
}

#[derive(Debug, Clone)]
pub struct BoundaryCurve {
    spec: CurveSpec,
    sampling: Sampling,
    scan: Vec<Point2>,
    min_radius: f64,
    max_radius: f64,
    max_speed: f64,
    max_accel: f64,
    min_normal_cosine: f64,
}

impl BoundaryCurve {
    pub fn new(spec: CurveSpec) -> Result<Self> {
        Self::with_sampling(spec, Sampling::default())
    }

    pub fn with_sampling(spec: CurveSpec, sampling: Sampling) -> Result<Self> {
        if !spec.a0.is_finite() || spec.a.iter().chain(&spec.b).any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoefficient);
        }
        if sampling.validation < 16
            || sampling.distance < 16
            || sampling.diameter < 16
            || sampling.lattice < 4
        {
            return Err(Error::InvalidArgument(format!(
                "sampling resolutions too small: {sampling:?}"
            )));
        }
        let mut curve = BoundaryCurve {
            spec,
            sampling,
            scan: Vec::new(),
            min_radius: f64::INFINITY,
            max_radius: 0.0,
            max_speed: 0.0,
            max_accel: 0.0,
            min_normal_cosine: 1.0,
        };
        for i in 0..sampling.validation {
            let theta = TAU * i as f64 / sampling.validation as f64;
            let jet = curve.jet(theta.cos(), theta.sin());
            if jet.r <= 0.0 {
                return Err(Error::NotStarShaped {
                    theta,
                    radius: jet.r,
                });
            }
            curve.min_radius = curve.min_radius.min(jet.r);
            curve.max_radius = curve.max_radius.max(jet.r);
            let speed = jet.r.hypot(jet.dr);
            curve.max_speed = curve.max_speed.max(speed);
            curve.min_normal_cosine = curve.min_normal_cosine.min(jet.r / speed);
            // |γ''|² = (r'' − r)² + 4r'²
            curve.max_accel = curve.max_accel.max((jet.d2r - jet.r).hypot(2.0 * jet.dr));
        }
        curve.scan = (0..sampling.distance)
            .map(|i| curve.point_at(TAU * i as f64 / sampling.distance as f64))
            .collect();
        Ok(curve)
    }

    pub fn spec(&self) -> &CurveSpec {
        &self.spec
    }

    pub fn sampling(&self) -> Sampling {
        self.sampling
    }

    /// Smallest sampled radius.
    pub fn min_radius(&self) -> f64 {
        self.min_radius
    }

    /// Largest sampled radius.
    pub fn max_radius(&self) -> f64 {
        self.max_radius
    }

    /// Lower bound (over the validation samples) of the cosine between the
    /// radial direction and the outward normal.
    pub fn min_normal_cosine(&self) -> f64 {
        self.min_normal_cosine
    }

    /// Evaluates r, r', r'' at the angle whose cosine and sine are given,
    /// building cos kθ and sin kθ by complex multiplication.
    fn jet(&self, c: f64, s: f64) -> RadiusJet {
        let mut jet = RadiusJet {
            r: self.spec.a0,
            dr: 0.0,
            d2r: 0.0,
        };
        let (mut ck, mut sk) = (1.0, 0.0);
        for k in 1..=self.spec.truncation() {
            (ck, sk) = (ck * c - sk * s, sk * c + ck * s);
            let ak = self.spec.a.get(k - 1).copied().unwrap_or(0.0);
            let bk = self.spec.b.get(k - 1).copied().unwrap_or(0.0);
            let kf = k as f64;
            let even = ak * ck + bk * sk;
            jet.r += even;
            jet.dr += kf * (bk * ck - ak * sk);
            jet.d2r -= kf * kf * even;
        }
        jet
    }

    fn radius_from_unit(&self, c: f64, s: f64) -> f64 {
        let mut r = self.spec.a0;
        let (mut ck, mut sk) = (1.0, 0.0);
        for k in 1..=self.spec.truncation() {
            (ck, sk) = (ck * c - sk * s, sk * c + ck * s);
            let ak = self.spec.a.get(k - 1).copied().unwrap_or(0.0);
            let bk = self.spec.b.get(k - 1).copied().unwrap_or(0.0);
            r += ak * ck + bk * sk;
        }
        r
    }

    pub fn radius_at(&self, theta: f64) -> f64 {
        self.radius_from_unit(theta.cos(), theta.sin())
    }

    /// Boundary point γ(θ).
    pub fn point_at(&self, theta: f64) -> Point2 {
        let (s, c) = theta.sin_cos();
        let r = self.radius_from_unit(c, s);
        Point2::new(r * c, r * s)
    }

    /// γ(θ), γ'(θ), γ''(θ).
    fn frame(&self, theta: f64) -> (Point2, Point2, Point2) {
        let (s, c) = theta.sin_cos();
        let RadiusJet { r, dr, d2r } = self.jet(c, s);
        let pos = Point2::new(r * c, r * s);
        let vel = Point2::new(dr * c - r * s, dr * s + r * c);
        let acc = Point2::new((d2r - r) * c - 2.0 * dr * s, (d2r - r) * s + 2.0 * dr * c);
        (pos, vel, acc)
    }

    /// `r(θ_p) − |p|`: positive inside, zero on the boundary.
    pub fn radial_gap(&self, p: Point2) -> f64 {
        let rho = p.norm();
        if rho == 0.0 {
            return self.min_radius;
        }
        self.radius_from_unit(p.x / rho, p.y / rho) - rho
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.is_finite() && self.radial_gap(p) > 0.0
    }

    /// Distance from an interior point to the boundary together with the
    /// parameter of a nearest boundary point.
    pub fn boundary_distance(&self, p: Point2) -> Result<(f64, f64)> {
        if !self.contains(p) {
            return Err(Error::PointOutside(p));
        }
        Ok(self.nearest_boundary_point(p))
    }

    fn nearest_boundary_point(&self, p: Point2) -> (f64, f64) {
        self.boundary_feet(p)
            .into_iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map_or((f64::INFINITY, 0.0), |(d, t)| (d, t))
    }

    /// Refined local minima `(distance, θ)` of `|p − γ(θ)|` that can compete
    /// with the global one, at most 16.
    fn boundary_feet(&self, p: Point2) -> Vec<(f64, f64)> {
        let n = self.scan.len();
        let step = TAU / n as f64;
        let d2: Vec<f64> = self.scan.iter().map(|q| (*q - p).norm_sq()).collect();
        let coarse_min = d2.iter().copied().fold(f64::INFINITY, f64::min);
        // Bound on how far the sampled minimum can sit above the true one.
        let reach = p.norm() + self.max_radius;
        let slack = 0.5 * step * step * (self.max_speed * self.max_speed + reach * self.max_accel);
        let mut candidates: Vec<(f64, usize)> = (0..n)
            .filter(|&i| {
                let prev = d2[(i + n - 1) % n];
                let next = d2[(i + 1) % n];
                d2[i] <= prev && d2[i] <= next && d2[i] <= coarse_min + slack
            })
            .map(|i| (d2[i], i))
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        candidates.truncate(16);
        candidates
            .iter()
            .map(|&(_, i)| {
                let theta = step * i as f64;
                let (dsq, t) = self.refine_nearest(p, theta - step, theta + step);
                (dsq.sqrt(), t.rem_euclid(TAU))
            })
            .collect()
    }

    /// Safeguarded Newton on the stationarity condition
    /// `d/dθ |p − γ(θ)|² = 0` inside `[lo, hi]`; falls back to golden
    /// section when the bracket carries no sign change.
    fn refine_nearest(&self, p: Point2, mut lo: f64, mut hi: f64) -> (f64, f64) {
        // half the derivative of the squared distance, and its derivative
        let stationarity = |t: f64| {
            let (pos, vel, acc) = self.frame(t);
            let diff = p - pos;
            (
                -diff.dot(vel),
                vel.norm_sq() - diff.dot(acc),
                diff.norm_sq(),
            )
        };
        let (f_lo, _, d_lo) = stationarity(lo);
        let (f_hi, _, d_hi) = stationarity(hi);
        if !(f_lo <= 0.0 && f_hi >= 0.0) {
            return self.golden_nearest(p, lo, hi).min_by(d_lo, lo, d_hi, hi);
        }
        let mut t = 0.5 * (lo + hi);
        let mut best = if d_lo < d_hi { (d_lo, lo) } else { (d_hi, hi) };
        for _ in 0..200 {
            let (f, df, dsq) = stationarity(t);
            if dsq < best.0 {
                best = (dsq, t);
            }
            if (2.0 * f).abs() <= 1e-12 {
                return (dsq, t);
            }
            if f < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let newton = t - f / df;
            t = if df > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo < 1e-15 {
                break;
            }
        }
        let (_, _, dsq) = stationarity(t);
        if dsq < best.0 {
            (dsq, t)
        } else {
            best
        }
    }

    fn golden_nearest(&self, p: Point2, mut lo: f64, mut hi: f64) -> GoldenResult {
        let g = |t: f64| (self.point_at(t) - p).norm_sq();
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - ratio * (hi - lo);
        let mut x2 = lo + ratio * (hi - lo);
        let (mut f1, mut f2) = (g(x1), g(x2));
        while hi - lo > 1e-13 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = g(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = g(x2);
            }
        }
        let t = 0.5 * (lo + hi);
        GoldenResult {
            dsq: g(t),
            theta: t,
        }
    }

    /// Distance to the boundary for points known to be close to it,
    /// refining around the polar angle of `p`.
    pub fn boundary_distance_near(&self, p: Point2) -> f64 {
        self.boundary_distance_hint(p, p.y.atan2(p.x)).0
    }

    /// Distance and nearest-point parameter, refining in a small bracket
    /// around `theta_hint` and falling back to the full scan when the
    /// bracket does not isolate a minimum. Intended for tracking a moving
    /// point whose previous nearest parameter is known.
    pub fn boundary_distance_hint(&self, p: Point2, theta_hint: f64) -> (f64, f64) {
        const WIDTH: f64 = 0.1;
        let stationarity = |t: f64| {
            let (pos, vel, _) = self.frame(t);
            -(p - pos).dot(vel)
        };
        let (lo, hi) = (theta_hint - WIDTH, theta_hint + WIDTH);
        if stationarity(lo) < 0.0 && stationarity(hi) > 0.0 {
            let (dsq, t) = self.refine_nearest(p, lo, hi);
            (dsq.sqrt(), t.rem_euclid(TAU))
        } else {
            self.nearest_boundary_point(p)
        }
    }

    /// Radius and center of the largest inscribed disk. Ascents start from
    /// the best few local maxima of the distance on a lattice.
    pub fn inradius(&self) -> (f64, Point2) {
        const STARTS: usize = 6;
        let m = self.sampling.lattice;
        let cell = 2.0 * self.max_radius / m as f64;
        let point = |i: usize, j: usize| {
            Point2::new(
                -self.max_radius + (i as f64 + 0.5) * cell,
                -self.max_radius + (j as f64 + 0.5) * cell,
            )
        };
        let mut dist = vec![0.0; m * m];
        for j in 0..m {
            for i in 0..m {
                let p = point(i, j);
                if self.contains(p) {
                    dist[j * m + i] = self.nearest_boundary_point(p).0;
                }
            }
        }
        let mut seeds: Vec<(f64, Point2)> = Vec::new();
        for j in 0..m {
            for i in 0..m {
                let d = dist[j * m + i];
                if d <= 0.0 {
                    continue;
                }
                let neighbors_lower = (j.saturating_sub(1)..(j + 2).min(m)).all(|jj| {
                    (i.saturating_sub(1)..(i + 2).min(m)).all(|ii| dist[jj * m + ii] <= d)
                });
                if neighbors_lower {
                    seeds.push((d, point(i, j)));
                }
            }
        }
        seeds.sort_by(|a, b| b.0.total_cmp(&a.0));
        seeds.truncate(STARTS);
        if seeds.is_empty() {
            // lattice missed the domain entirely; the origin is always inside
            seeds.push((
                self.nearest_boundary_point(Point2::ORIGIN).0,
                Point2::ORIGIN,
            ));
        }
        seeds
            .into_iter()
            .map(|(_, p)| self.ascend_inradius(p, cell))
            .fold((f64::NEG_INFINITY, Point2::ORIGIN), |best, r| {
                if r.0 > best.0 {
                    r
                } else {
                    best
                }
            })
    }

    /// Trust-region ascent of `p ↦ d(p, ∂Ω)`. Each step maximizes the
    /// piecewise-linear model `min_i (d_i + n_i·v)` over `|v| ≤ ρ`, where the
    /// `d_i` are the distances to nearly active boundary feet and the `n_i`
    /// the unit vectors pointing away from them.
    fn ascend_inradius(&self, start: Point2, initial_radius: f64) -> (f64, Point2) {
        let value = |p: Point2| {
            if self.contains(p) {
                self.nearest_boundary_point(p).0
            } else {
                f64::NEG_INFINITY
            }
        };
        let mut p = start;
        let mut fp = value(p);
        let mut rho = initial_radius;
        for _ in 0..500 {
            if rho < 1e-13 {
                break;
            }
            let feet = self.boundary_feet(p);
            let active: Vec<(f64, Point2)> = feet
                .iter()
                .filter(|(d, _)| *d <= fp + 2.0 * rho)
                .map(|&(d, t)| (d, (p - self.point_at(t)) * (1.0 / d)))
                .collect();
            let (model, v) = maximize_min_affine(&active, rho);
            let gain = model - fp;
            if gain <= 1e-15 {
                rho *= 0.5;
                continue;
            }
            let cand = p + v;
            let fc = value(cand);
            if fc > fp {
                if fc - fp >= 0.5 * gain {
                    rho *= 2.0;
                }
                p = cand;
                fp = fc;
            } else {
                rho *= 0.25;
            }
        }
        (fp, p)
    }

    /// ½∮r² dθ by the trapezoid rule on the validation samples.
    pub fn area(&self) -> f64 {
        let n = self.sampling.validation;
        let sum: f64 = (0..n)
            .map(|i| self.radius_at(TAU * i as f64 / n as f64).powi(2))
            .sum();
        0.5 * sum * TAU / n as f64
    }

    pub fn diameter(&self) -> f64 {
        let n = self.sampling.diameter;
        let step = TAU / n as f64;
        let pts: Vec<Point2> = (0..n).map(|i| self.point_at(step * i as f64)).collect();
        let mut best = (0.0, 0, 0);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (pts[i] - pts[j]).norm_sq();
                if d > best.0 {
                    best = (d, i, j);
                }
            }
        }
        let objective = |q: Point2| self.point_at(q.x).distance(self.point_at(q.y));
        let start = Point2::new(step * best.1 as f64, step * best.2 as f64);
        compass_maximize(objective, start, best.0.sqrt(), step, 1e-12).0
    }

    /// Signed curvature of the polar curve, positive where the domain is
    /// locally convex.
    pub fn curvature_at(&self, theta: f64) -> f64 {
        let RadiusJet { r, dr, d2r } = self.jet(theta.cos(), theta.sin());
        (r * r + 2.0 * dr * dr - r * d2r) / (r * r + dr * dr).powf(1.5)
    }
}

struct GoldenResult {
    dsq: f64,
    theta: f64,
}

impl GoldenResult {
    fn min_by(self, d_lo: f64, lo: f64, d_hi: f64, hi: f64) -> (f64, f64) {
        [(self.dsq, self.theta), (d_lo, lo), (d_hi, hi)]
            .into_iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap_or((self.dsq, self.theta))
    }
}

/// Maximizes `min_i (d_i + n_i·v)` over the disk `|v| ≤ ρ` for unit `n_i`.
/// The optimum of a concave piecewise-linear function on a disk lies at
/// one of the enumerated candidates.
fn maximize_min_affine(pieces: &[(f64, Point2)], rho: f64) -> (f64, Point2) {
    let eval = |v: Point2| {
        pieces
            .iter()
            .map(|(d, n)| d + n.dot(v))
            .fold(f64::INFINITY, f64::min)
    };
    let mut cands = vec![Point2::ORIGIN];
    for (i, (di, ni)) in pieces.iter().enumerate() {
        cands.push(*ni * rho);
        for (dj, nj) in &pieces[i + 1..] {
            // d_i + n_i·v = d_j + n_j·v  ⇔  w·v = c
            let w = *ni - *nj;
            let c = dj - di;
            let ww = w.norm_sq();
            if ww < 1e-300 {
                continue;
            }
            let foot = w * (c / ww);
            let rem = rho * rho - foot.norm_sq();
            if rem >= 0.0 {
                let along = Point2::new(-w.y, w.x) * (rem.sqrt() / ww.sqrt());
                cands.push(foot + along);
                cands.push(foot - along);
            }
            for (dk, nk) in pieces.iter().skip(i + 1) {
                let u = *ni - *nk;
                let det = w.cross(u);
                if det.abs() < 1e-14 {
                    continue;
                }
                let e = dk - di;
                let v = Point2::new((c * u.y - e * w.y) / det, (w.x * e - u.x * c) / det);
                if v.norm() <= rho {
                    cands.push(v);
                }
            }
        }
    }
    cands
        .into_iter()
        .map(|v| (eval(v), v))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap_or((eval(Point2::ORIGIN), Point2::ORIGIN))
}

/// Derivative-free compass search over the eight grid directions, halving
/// the step whenever no direction improves.
fn compass_maximize(
    objective: impl Fn(Point2) -> f64,
    start: Point2,
    start_value: f64,
    initial_step: f64,
    min_step: f64,
) -> (f64, Point2) {
    const DIRS: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (
            std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
        ),
        (
            -std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
        ),
        (
            std::f64::consts::FRAC_1_SQRT_2,
            -std::f64::consts::FRAC_1_SQRT_2,
        ),
        (
            -std::f64::consts::FRAC_1_SQRT_2,
            -std::f64::consts::FRAC_1_SQRT_2,
        ),
    ];
    let (mut x, mut fx) = (start, start_value);
    let mut step = initial_step;
    while step >= min_step {
        let mut improved = false;
        for (dx, dy) in DIRS {
            let cand = x + Point2::new(dx, dy) * step;
            let fc = objective(cand);
            if fc > fx {
                x = cand;
                fx = fc;
                improved = true;
                break;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (fx, x)
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t > PI {
        t - TAU
    } else {
        t
    }
}
