//! Finite differences for the Dirichlet Laplacian on an embedded Cartesian
//! grid.
//!
//! Unknowns live on the grid nodes strictly inside the domain. A node whose
//! neighbor lies outside gets a shortened arm ending on the boundary, where
//! the field is zero (Shortley–Weller). The resulting operator `A ≈ −Δ` is
//! an M-matrix but not symmetric, so linear systems are solved with
//! Jacobi-preconditioned BiCGSTAB.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, Point2};

pub const MIN_RESOLUTION: usize = 32;

/// Bounding box half-width as a multiple of the largest boundary radius.
const BOX_MARGIN: f64 = 1.05;
const MIN_ARM: f64 = 1e-10;
const ARM_TOLERANCE: f64 = 1e-12;
const NONE: u32 = u32::MAX;

/// Arm order used throughout: −x, +x, −y, +y.
const DIRECTIONS: [(i64, i64); 4] = [(-1, 0), (1, 0), (0, -1), (0, 1)];

pub const EIGEN_SOLVE_TOL: f64 = 1e-10;
pub const EIGEN_RAYLEIGH_TOL: f64 = 1e-9;
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;
pub const EIGEN_ITERATION_CAP: usize = 500;
pub const TORSION_SOLVE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRole {
    Eigenfunction,
    Torsion,
    Potential,
    Generic,
}

/// Grid geometry as dumped next to field CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMetadata {
    pub origin: Point2,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    pub inside_nodes: usize,
}

#[derive(Debug, Clone)]
pub struct EmbeddedGrid {
    curve: BoundaryCurve,
    n: usize,
    origin: Point2,
    h: f64,
    nx: usize,
    ny: usize,
    /// Dense node-index lookup over the full `nx × ny` lattice.
    node_index: Vec<u32>,
    nodes: Vec<(usize, usize)>,
    arms: Vec<[f64; 4]>,
    neighbors: Vec<[u32; 4]>,
    diag: Vec<f64>,
    offdiag: Vec<[f64; 4]>,
}

impl EmbeddedGrid {
    /// Lays an `(n + 1) × (n + 1)` node lattice over `[−R, R]²`,
    /// `R = 1.05 · max r`, and computes boundary arms by bisection.
    pub fn build(curve: &BoundaryCurve, n: usize) -> Result<Self> {
        if n < MIN_RESOLUTION {
            return Err(Error::ResolutionTooLow {
                n,
                min: MIN_RESOLUTION,
            });
        }
        let half = BOX_MARGIN * curve.max_radius();
        let h = 2.0 * half / n as f64;
        let (nx, ny) = (n + 1, n + 1);
        let origin = Point2::new(-half, -half);
        let point =
            |i: usize, j: usize| Point2::new(origin.x + i as f64 * h, origin.y + j as f64 * h);

        let mut node_index = vec![NONE; nx * ny];
        let mut nodes = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                if curve.contains(point(i, j)) {
                    node_index[j * nx + i] = nodes.len() as u32;
                    nodes.push((i, j));
                }
            }
        }

        let mut arms = Vec::with_capacity(nodes.len());
        let mut neighbors = Vec::with_capacity(nodes.len());
        for &(i, j) in &nodes {
            let p = point(i, j);
            let mut arm = [1.0; 4];
            let mut nbr = [NONE; 4];
            for (d, (di, dj)) in DIRECTIONS.iter().enumerate() {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                let idx = if ni >= 0 && nj >= 0 && (ni as usize) < nx && (nj as usize) < ny {
                    node_index[nj as usize * nx + ni as usize]
                } else {
                    NONE
                };
                if idx != NONE {
                    nbr[d] = idx;
                } else {
                    let dir = Point2::new(*di as f64, *dj as f64) * h;
                    arm[d] = boundary_fraction(curve, p, dir);
                    if arm[d] < MIN_ARM {
                        return Err(Error::GridTooCoarse { i, j, arm: arm[d] });
                    }
                }
            }
            arms.push(arm);
            neighbors.push(nbr);
        }

        let h2 = h * h;
        let mut diag = Vec::with_capacity(nodes.len());
        let mut offdiag = Vec::with_capacity(nodes.len());
        for arm in &arms {
            let [w, e, s, nn] = *arm;
            diag.push(2.0 / (w * e * h2) + 2.0 / (s * nn * h2));
            offdiag.push([
                -2.0 / (w * (w + e) * h2),
                -2.0 / (e * (w + e) * h2),
                -2.0 / (s * (s + nn) * h2),
                -2.0 / (nn * (s + nn) * h2),
            ]);
        }

        Ok(EmbeddedGrid {
            curve: curve.clone(),
            n,
            origin,
            h,
            nx,
            ny,
            node_index,
            nodes,
            arms,
            neighbors,
            diag,
            offdiag,
        })
    }

    pub fn curve(&self) -> &BoundaryCurve {
        &self.curve
    }

    /// Resolution parameter: `h = 2R / n`.
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Number of inside nodes (unknowns).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn metadata(&self) -> GridMetadata {
        GridMetadata {
            origin: self.origin,
            h: self.h,
            nx: self.nx,
            ny: self.ny,
            inside_nodes: self.len(),
        }
    }

    pub fn lattice_point(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + i as f64 * self.h,
            self.origin.y + j as f64 * self.h,
        )
    }

    /// Coordinates of inside node `k`.
    pub fn node_point(&self, k: usize) -> Point2 {
        let (i, j) = self.nodes[k];
        self.lattice_point(i, j)
    }

    pub fn node_lattice(&self, k: usize) -> (usize, usize) {
        self.nodes[k]
    }

    pub fn index_of(&self, i: usize, j: usize) -> Option<usize> {
        if i >= self.nx || j >= self.ny {
            return None;
        }
        match self.node_index[j * self.nx + i] {
            NONE => None,
            k => Some(k as usize),
        }
    }

    /// Arm lengths of node `k` as fractions of `h`, ordered −x, +x, −y, +y.
    pub fn arms(&self, k: usize) -> [f64; 4] {
        self.arms[k]
    }

    pub fn points(&self) -> impl Iterator<Item = Point2> + '_ {
        (0..self.len()).map(|k| self.node_point(k))
    }

    /// `out = A·x` on raw node vectors.
    fn apply_raw(&self, x: &[f64], out: &mut [f64]) {
        for k in 0..self.len() {
            let mut acc = self.diag[k] * x[k];
            let nbr = &self.neighbors[k];
            let off = &self.offdiag[k];
            for d in 0..4 {
                if nbr[d] != NONE {
                    acc += off[d] * x[nbr[d] as usize];
                }
            }
            out[k] = acc;
        }
    }

    fn check<'g>(&'g self, f: &ScalarField<'_>) -> Result<()> {
        if std::ptr::eq(self, f.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Discrete `−Δ_h f` with zero Dirichlet data at the arm endpoints.
    pub fn apply_operator(&self, f: &ScalarField<'_>) -> Result<ScalarField<'_>> {
        self.check(f)?;
        let mut out = vec![0.0; self.len()];
        self.apply_raw(&f.values, &mut out);
        Ok(ScalarField {
            grid: self,
            values: out,
            role: FieldRole::Generic,
        })
    }

    /// Solves `A f = rhs` to relative residual `tol`.
    pub fn solve_linear(&self, rhs: &ScalarField<'_>, tol: f64) -> Result<ScalarField<'_>> {
        self.solve_linear_from(rhs, tol, None)
    }

    /// As [`solve_linear`](Self::solve_linear), starting from `guess`.
    pub fn solve_linear_from(
        &self,
        rhs: &ScalarField<'_>,
        tol: f64,
        guess: Option<&ScalarField<'_>>,
    ) -> Result<ScalarField<'_>> {
        self.check(rhs)?;
        if let Some(g) = guess {
            self.check(g)?;
        }
        if !(tol > 0.0 && tol <= 1e-6) {
            return Err(Error::InvalidArgument(format!(
                "solver tolerance {tol} outside (0, 1e-6]"
            )));
        }
        let x0 = guess.map(|g| g.values.clone());
        let x = self.bicgstab(&rhs.values, x0, tol)?;
        Ok(ScalarField {
            grid: self,
            values: x,
            role: FieldRole::Generic,
        })
    }

    /// Jacobi-preconditioned BiCGSTAB with true-residual verification and
    /// restarts.
    fn bicgstab(&self, b: &[f64], x0: Option<Vec<f64>>, tol: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let max_iter = 50 * self.n;
        let b_norm = norm(b);
        let mut x = x0.unwrap_or_else(|| vec![0.0; n]);
        if b_norm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        let inv_diag: Vec<f64> = self.diag.iter().map(|d| 1.0 / d).collect();
        let mut history = Vec::new();
        let mut iterations = 0;

        let mut r = vec![0.0; n];
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut p_hat = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut s_hat = vec![0.0; n];
        let mut t = vec![0.0; n];

        'restart: loop {
            self.apply_raw(&x, &mut r);
            for k in 0..n {
                r[k] = b[k] - r[k];
            }
            let rel = norm(&r) / b_norm;
            history.push(rel);
            if rel <= tol {
                return Ok(x);
            }
            if iterations >= max_iter {
                return Err(Error::NoConvergence {
                    iterations,
                    history,
                });
            }
            let r_hat = r.clone();
            let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
            v.fill(0.0);
            p.fill(0.0);
            while iterations < max_iter {
                iterations += 1;
                let rho_new = dot(&r_hat, &r);
                if rho_new == 0.0 || !rho_new.is_finite() {
                    continue 'restart;
                }
                let beta = (rho_new / rho) * (alpha / omega);
                rho = rho_new;
                for k in 0..n {
                    p[k] = r[k] + beta * (p[k] - omega * v[k]);
                    p_hat[k] = inv_diag[k] * p[k];
                }
                self.apply_raw(&p_hat, &mut v);
                let denom = dot(&r_hat, &v);
                if denom == 0.0 {
                    continue 'restart;
                }
                alpha = rho / denom;
                for k in 0..n {
                    s[k] = r[k] - alpha * v[k];
                }
                if norm(&s) / b_norm <= tol {
                    for k in 0..n {
                        x[k] += alpha * p_hat[k];
                    }
                    continue 'restart;
                }
                for k in 0..n {
                    s_hat[k] = inv_diag[k] * s[k];
                }
                self.apply_raw(&s_hat, &mut t);
                let tt = dot(&t, &t);
                omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
                for k in 0..n {
                    x[k] += alpha * p_hat[k] + omega * s_hat[k];
                    r[k] = s[k] - omega * t[k];
                }
                let rel = norm(&r) / b_norm;
                history.push(rel);
                if rel <= tol || omega == 0.0 {
                    continue 'restart;
                }
            }
        }
    }

    /// Torsion function: `−Δ_h v = 1`, `v = 0` on the boundary.
    pub fn solve_torsion(&self) -> Result<ScalarField<'_>> {
        let ones = ScalarField::constant(self, 1.0, FieldRole::Generic);
        let mut v = self.solve_linear(&ones, TORSION_SOLVE_TOL)?;
        v.role = FieldRole::Torsion;
        Ok(v)
    }

    /// Ground state by inverse power iteration from the constant field.
    pub fn solve_ground_state(&self) -> Result<EigenResult<'_>> {
        let mut u = ScalarField::constant(self, 1.0, FieldRole::Eigenfunction);
        let mut lambda = self.rayleigh_quotient(&u)?;
        let mut scratch = vec![0.0; self.len()];
        for iteration in 1..=EIGEN_ITERATION_CAP {
            let guess = u.scaled(1.0 / lambda);
            let mut w = self.solve_linear_from(&u, EIGEN_SOLVE_TOL, Some(&guess))?;
            w.normalize_max();
            let next = self.rayleigh_quotient(&w)?;
            self.apply_raw(&w.values, &mut scratch);
            let residual = scratch
                .iter()
                .zip(&w.values)
                .map(|(au, u)| (au - next * u).powi(2))
                .sum::<f64>()
                .sqrt()
                / norm(&w.values);
            let change = (next - lambda).abs() / next;
            w.role = FieldRole::Eigenfunction;
            u = w;
            lambda = next;
            if change < EIGEN_RAYLEIGH_TOL && residual <= EIGEN_RESIDUAL_TOL * lambda {
                return Ok(EigenResult {
                    lambda,
                    field: u,
                    iterations: iteration,
                    final_residual: residual,
                });
            }
        }
        Err(Error::EigenIterationCap(EIGEN_ITERATION_CAP))
    }

    /// `⟨A f, f⟩ / ⟨f, f⟩` with node-wise inner products.
    pub fn rayleigh_quotient(&self, f: &ScalarField<'_>) -> Result<f64> {
        self.check(f)?;
        let ff = dot(&f.values, &f.values);
        if ff == 0.0 {
            return Err(Error::ZeroField);
        }
        let mut af = vec![0.0; self.len()];
        self.apply_raw(&f.values, &mut af);
        Ok(dot(&af, &f.values) / ff)
    }

    /// Value of a node-indexed vector at lattice node `(i, j)`, zero at
    /// lattice nodes outside the domain.
    fn lattice_value(&self, values: &[f64], i: i64, j: i64) -> f64 {
        if i < 0 || j < 0 {
            return 0.0;
        }
        self.index_of(i as usize, j as usize)
            .map_or(0.0, |k| values[k])
    }

    /// Second-order gradient estimate at lattice node `(i, j)`. Inside nodes
    /// use the unequal-arm central difference; outside nodes use plain
    /// central differences of the zero-extended field.
    fn lattice_gradient(&self, values: &[f64], i: i64, j: i64) -> (f64, f64) {
        let h = self.h;
        let inside = if i >= 0 && j >= 0 {
            self.index_of(i as usize, j as usize)
        } else {
            None
        };
        match inside {
            Some(k) => {
                let [w, e, s, n] = self.arms[k];
                let up = values[k];
                let side = |d: usize, di: i64, dj: i64| {
                    if self.neighbors[k][d] == NONE {
                        0.0
                    } else {
                        self.lattice_value(values, i + di, j + dj)
                    }
                };
                let (uw, ue, us, un) =
                    (side(0, -1, 0), side(1, 1, 0), side(2, 0, -1), side(3, 0, 1));
                let gx = (w * w * ue - e * e * uw + (e * e - w * w) * up) / (w * e * (w + e) * h);
                let gy = (s * s * un - n * n * us + (n * n - s * s) * up) / (s * n * (s + n) * h);
                (gx, gy)
            }
            None => {
                let gx = (self.lattice_value(values, i + 1, j)
                    - self.lattice_value(values, i - 1, j))
                    / (2.0 * h);
                let gy = (self.lattice_value(values, i, j + 1)
                    - self.lattice_value(values, i, j - 1))
                    / (2.0 * h);
                (gx, gy)
            }
        }
    }

    /// Cell containing `p` and the local coordinates inside it.
    fn locate(&self, p: Point2) -> (i64, i64, f64, f64) {
        let gx = (p.x - self.origin.x) / self.h;
        let gy = (p.y - self.origin.y) / self.h;
        let (i, j) = (gx.floor(), gy.floor());
        (i as i64, j as i64, gx - i, gy - j)
    }
}

/// Fraction of `dir` travelled from the interior point `p` before leaving
/// the domain, found by bisection on the radial gap.
fn boundary_fraction(curve: &BoundaryCurve, p: Point2, dir: Point2) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > ARM_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if curve.contains(p + dir * mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Node values on an [`EmbeddedGrid`]; implicitly zero on and outside the
/// boundary.
#[derive(Debug, Clone)]
pub struct ScalarField<'g> {
    grid: &'g EmbeddedGrid,
    values: Vec<f64>,
    role: FieldRole,
}

impl<'g> ScalarField<'g> {
    pub fn new(grid: &'g EmbeddedGrid, values: Vec<f64>, role: FieldRole) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("field values must be finite".into()));
        }
        Ok(ScalarField { grid, values, role })
    }

    pub fn constant(grid: &'g EmbeddedGrid, value: f64, role: FieldRole) -> Self {
        ScalarField {
            grid,
            values: vec![value; grid.len()],
            role,
        }
    }

    /// Samples `f` at every inside node.
    pub fn from_fn(grid: &'g EmbeddedGrid, role: FieldRole, f: impl Fn(Point2) -> f64) -> Self {
        ScalarField {
            grid,
            values: grid.points().map(f).collect(),
            role,
        }
    }

    pub fn grid(&self) -> &'g EmbeddedGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn with_role(mut self, role: FieldRole) -> Self {
        self.role = role;
        self
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField<'g> {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
            role: FieldRole::Generic,
        }
    }

    fn scaled(&self, s: f64) -> ScalarField<'g> {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|v| v * s).collect(),
            role: self.role,
        }
    }

    /// Scales to `max |value| = 1` with the extreme value positive.
    fn normalize_max(&mut self) {
        let extreme = self
            .values
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(0.0);
        if extreme != 0.0 {
            for v in &mut self.values {
                *v /= extreme;
            }
        }
    }

    /// Bilinear interpolation, treating lattice nodes outside the domain as
    /// zero.
    pub fn value_at(&self, p: Point2) -> f64 {
        let (i, j, fx, fy) = self.grid.locate(p);
        let g = self.grid;
        let v = |di: i64, dj: i64| g.lattice_value(&self.values, i + di, j + dj);
        (1.0 - fx) * (1.0 - fy) * v(0, 0)
            + fx * (1.0 - fy) * v(1, 0)
            + (1.0 - fx) * fy * v(0, 1)
            + fx * fy * v(1, 1)
    }

    /// Bilinear interpolation of node gradients.
    pub fn gradient_at(&self, p: Point2) -> (f64, f64) {
        let (i, j, fx, fy) = self.grid.locate(p);
        let g = self.grid;
        let corners = [
            ((1.0 - fx) * (1.0 - fy), 0, 0),
            (fx * (1.0 - fy), 1, 0),
            ((1.0 - fx) * fy, 0, 1),
            (fx * fy, 1, 1),
        ];
        corners.iter().fold((0.0, 0.0), |(gx, gy), &(w, di, dj)| {
            if w == 0.0 {
                return (gx, gy);
            }
            let (cx, cy) = g.lattice_gradient(&self.values, i + di, j + dj);
            (gx + w * cx, gy + w * cy)
        })
    }

    /// CSV dump with header `x,y,value`, one row per inside node in node
    /// order, numbers to 12 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "y", "value"])?;
        for (k, v) in self.values.iter().enumerate() {
            let p = self.grid.node_point(k);
            w.write_record([sig12(p.x), sig12(p.y), sig12(*v)])?;
        }
        w.flush()
    }
}

/// Formats with 12 significant digits.
pub fn sig12(x: f64) -> String {
    crate::report::round_sig(x, 12).to_string()
}

#[derive(Debug, Clone)]
pub struct EigenResult<'g> {
    pub lambda: f64,
    /// Ground state normalized to `max |value| = 1`, positive.
    pub field: ScalarField<'g>,
    pub iterations: usize,
    /// `‖A u − λ u‖₂ / ‖u‖₂` at exit.
    pub final_residual: f64,
}

/// Richardson step removing the `O(h²)` term from eigenvalues at spacing
/// `h` and `h/2`.
pub fn extrapolate_eigenvalue(lambda_h: f64, lambda_half_h: f64) -> f64 {
    (4.0 * lambda_half_h - lambda_h) / 3.0
}
