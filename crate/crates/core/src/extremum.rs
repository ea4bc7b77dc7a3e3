//! Where computed fields peak, and how far from the boundary.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BoundaryCurve, Point2};
use crate::grid::{EigenResult, ScalarField};

/// Default fraction of the maximum below which nodes are excluded from the
/// Barta quotient.
pub const BARTA_MARGIN: f64 = 0.1;

/// Nodes within this relative distance of the maximum count as tied.
const TIE_TOLERANCE: f64 = 1e-9;

/// Local maxima within this relative distance of the global one are
/// treated as the same (symmetric) maximum when measuring separation.
const COMPETING_MAXIMUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaximumLocation {
    /// Refined location of `max |u|`.
    pub point: Point2,
    /// `|u|` at `point`: the larger of the node maximum and the local
    /// quadratic fit.
    pub value: f64,
    pub node: usize,
    pub node_point: Point2,
    /// Inside nodes whose `|u|` is within 1e-9 (relative) of the maximum.
    pub near_max_count: usize,
    pub refined: bool,
}

/// Node maximizing `|u|`, refined by a least-squares quadratic through its
/// 3×3 neighborhood.
pub fn locate_maximum(field: &ScalarField<'_>) -> Result<MaximumLocation> {
    let values = field.values();
    let max = field.max_abs();
    if max == 0.0 {
        return Err(Error::ZeroField);
    }
    let grid = field.grid();
    let mut best: Option<(usize, Point2)> = None;
    let mut near_max_count = 0;
    for (k, v) in values.iter().enumerate() {
        if v.abs() >= max * (1.0 - TIE_TOLERANCE) {
            near_max_count += 1;
        }
        if v.abs() == max {
            let p = grid.node_point(k);
            let better = match best {
                None => true,
                Some((_, q)) => (p.x, p.y) < (q.x, q.y),
            };
            if better {
                best = Some((k, p));
            }
        }
    }
    let (node, node_point) = best.ok_or(Error::ZeroField)?;
    let sign = values[node].signum();
    let (point, value, refined) = match refine_quadratic(field, node, sign) {
        Some((p, v)) => (p, v.max(max), true),
        None => (node_point, max, false),
    };
    Ok(MaximumLocation {
        point,
        value,
        node,
        node_point,
        near_max_count,
        refined,
    })
}

/// Fits `c0 + c1 x + c2 y + c3 x² + c4 xy + c5 y²` (cell units) to
/// `sign · u` on the 3×3 block around `node` and returns its critical point
/// when that is a maximum lying within one cell.
fn refine_quadratic(field: &ScalarField<'_>, node: usize, sign: f64) -> Option<(Point2, f64)> {
    let grid = field.grid();
    let (i, j) = grid.node_lattice(node);
    if i == 0 || j == 0 {
        return None;
    }
    let mut design = SMatrix::<f64, 9, 6>::zeros();
    let mut rhs = SVector::<f64, 9>::zeros();
    let mut row = 0;
    for dj in -1i64..=1 {
        for di in -1i64..=1 {
            let k = grid.index_of((i as i64 + di) as usize, (j as i64 + dj) as usize)?;
            let (x, y) = (di as f64, dj as f64);
            design.set_row(
                row,
                &nalgebra::RowSVector::<f64, 6>::from_row_slice(&[1.0, x, y, x * x, x * y, y * y]),
            );
            rhs[row] = sign * field.values()[k];
            row += 1;
        }
    }
    let normal = design.transpose() * design;
    let c = normal.lu().solve(&(design.transpose() * rhs))?;
    let hessian = nalgebra::Matrix2::new(2.0 * c[3], c[4], c[4], 2.0 * c[5]);
    // negative definite
    if !(hessian[(0, 0)] < 0.0 && hessian.determinant() > 0.0) {
        return None;
    }
    let xy = hessian.lu().solve(&nalgebra::Vector2::new(-c[1], -c[2]))?;
    if xy[0].abs() > 1.0 || xy[1].abs() > 1.0 {
        return None;
    }
    let (x, y) = (xy[0], xy[1]);
    let value = c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
    let h = grid.h();
    Some((grid.node_point(node) + Point2::new(x * h, y * h), value))
}

/// Refined locations of every interior local maximum of `u` whose value is
/// within `COMPETING_MAXIMUM_TOLERANCE` of the global maximum.
pub fn competing_maxima(field: &ScalarField<'_>) -> Vec<Point2> {
    let grid = field.grid();
    let values = field.values();
    let max = field.max();
    let mut out = Vec::new();
    for k in 0..values.len() {
        if values[k] < max * (1.0 - COMPETING_MAXIMUM_TOLERANCE) {
            continue;
        }
        let (i, j) = grid.node_lattice(k);
        let is_local_max = (-1i64..=1).all(|dj| {
            (-1i64..=1).all(|di| {
                let (ni, nj) = (i as i64 + di, j as i64 + dj);
                if ni < 0 || nj < 0 {
                    return true;
                }
                grid.index_of(ni as usize, nj as usize)
                    .is_none_or(|m| values[m] <= values[k])
            })
        });
        if is_local_max {
            let p = refine_quadratic(field, k, 1.0).map_or(grid.node_point(k), |(p, _)| p);
            out.push(p);
        }
    }
    out
}

/// Headline quantities for one domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximumReport {
    /// Location of the maximum of the ground state.
    pub x0: Point2,
    pub u_max: f64,
    /// Distance from `x0` to the boundary.
    pub d_boundary: f64,
    pub inradius: f64,
    pub inradius_center: Point2,
    pub lambda1: f64,
    /// `d_boundary · √lambda1`.
    pub c_loc: f64,
    /// Torsion at `x0` over the torsion maximum.
    pub torsion_ratio: f64,
    pub torsion_max: f64,
    pub torsion_max_location: Point2,
    /// Barta quotient supremum of the ground state.
    pub barta_sup: f64,
    /// Distance from `x0` to the nearest torsion maximum.
    pub maxima_separation: f64,
    pub diameter: f64,
    pub eigen_near_max_count: usize,
    pub torsion_near_max_count: usize,
}

impl MaximumReport {
    /// Replaces the eigenvalue (e.g. by a Richardson-extrapolated one) and
    /// recomputes the dependent constant.
    pub fn with_lambda(mut self, lambda1: f64) -> Self {
        self.lambda1 = lambda1;
        self.c_loc = self.d_boundary * lambda1.sqrt();
        self
    }
}

pub fn constants_report(
    curve: &BoundaryCurve,
    eigen: &EigenResult<'_>,
    torsion: &ScalarField<'_>,
) -> Result<MaximumReport> {
    if !std::ptr::eq(eigen.field.grid(), torsion.grid()) {
        return Err(Error::GridMismatch);
    }
    let eig_max = locate_maximum(&eigen.field)?;
    let tor_max = locate_maximum(torsion)?;
    let (d_boundary, _) = curve.boundary_distance(eig_max.point)?;
    let (inradius, inradius_center) = curve.inradius();
    let torsion_ratio = torsion.value_at(eig_max.point) / tor_max.value;
    let maxima_separation = competing_maxima(torsion)
        .into_iter()
        .map(|p| p.distance(eig_max.point))
        .fold(tor_max.point.distance(eig_max.point), f64::min);
    Ok(MaximumReport {
        x0: eig_max.point,
        u_max: eig_max.value,
        d_boundary,
        inradius,
        inradius_center,
        lambda1: eigen.lambda,
        c_loc: d_boundary * eigen.lambda.sqrt(),
        torsion_ratio,
        torsion_max: tor_max.value,
        torsion_max_location: tor_max.point,
        barta_sup: barta_sup(&eigen.field, BARTA_MARGIN)?,
        maxima_separation,
        diameter: curve.diameter(),
        eigen_near_max_count: eig_max.near_max_count,
        torsion_near_max_count: tor_max.near_max_count,
    })
}

/// `max (A f)/f` over inside nodes where `f > margin · max f`.
pub fn barta_sup(field: &ScalarField<'_>, margin: f64) -> Result<f64> {
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Barta margin {margin} outside (0, 1)"
        )));
    }
    let max = field.max();
    if !(max > 0.0) {
        return Err(Error::EmptyMargin { margin });
    }
    let af = field.grid().apply_operator(field)?;
    field
        .values()
        .iter()
        .zip(af.values())
        .filter(|(v, _)| **v > margin * max)
        .map(|(v, a)| a / v)
        .max_by(f64::total_cmp)
        .ok_or(Error::EmptyMargin { margin })
}

/// Checks `(1 − p) e^{t v_max} ≥ 1` up to three propagated standard errors
/// of `p`.
pub fn verify_stationarity_bound(p: f64, t: f64, v_max: f64, p_stderr: f64) -> bool {
    let growth = (t * v_max).exp();
    (1.0 - p) * growth >= 1.0 - 3.0 * p_stderr * growth - 1e-12
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowEnd {
    Boundary,
    CriticalPoint,
    /// The interpolated field stopped decreasing.
    Stalled,
    StepLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowProfile {
    pub start: Point2,
    /// `(arclength, u)` pairs with strictly increasing arclength.
    pub samples: Vec<(f64, f64)>,
    pub end: FlowEnd,
}

impl FlowProfile {
    pub fn length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.0)
    }

    /// `(s, u(s), cos(√v_max s) u(0))` along the profile, the cosine
    /// clamped at zero past its first root.
    pub fn cosine_comparison(&self, v_max: f64) -> Vec<(f64, f64, f64)> {
        let u0 = self.samples.first().map_or(0.0, |s| s.1);
        let freq = v_max.sqrt();
        self.samples
            .iter()
            .map(|&(s, u)| {
                let phase = freq * s;
                let bound = if phase < std::f64::consts::FRAC_PI_2 {
                    phase.cos() * u0
                } else {
                    0.0
                };
                (s, u, bound)
            })
            .collect()
    }
}

/// Arclength-normalized descent `x ← x − step ∇u/|∇u|` from `start` until
/// the boundary or a critical point.
pub fn trace_gradient_flow(
    field: &ScalarField<'_>,
    start: Point2,
    step: f64,
) -> Result<FlowProfile> {
    let grid = field.grid();
    let curve = grid.curve();
    if !curve.contains(start) {
        return Err(Error::PointOutside(start));
    }
    if !(step > 0.0 && step <= 0.5 * grid.h()) {
        return Err(Error::InvalidArgument(format!(
            "flow step {step} must lie in (0, h/2]"
        )));
    }
    let threshold = 1e-8 * field.max_abs();
    let max_steps = (20.0 * curve.max_radius() / step).ceil() as usize;
    let mut x = start;
    let mut u = field.value_at(x);
    let mut s = 0.0;
    let mut samples = vec![(0.0, u)];
    for _ in 0..max_steps {
        let (gx, gy) = field.gradient_at(x);
        let g = gx.hypot(gy);
        if g < threshold {
            return Ok(FlowProfile {
                start,
                samples,
                end: FlowEnd::CriticalPoint,
            });
        }
        let dir = Point2::new(-gx / g, -gy / g);
        let next = x + dir * step;
        if !curve.contains(next) {
            let (mut lo, mut hi) = (0.0, 1.0);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if curve.contains(x + dir * (mid * step)) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if hi * step > 0.0 {
                samples.push((s + hi * step, 0.0));
            }
            return Ok(FlowProfile {
                start,
                samples,
                end: FlowEnd::Boundary,
            });
        }
        let u_next = field.value_at(next);
        if u_next > u {
            return Ok(FlowProfile {
                start,
                samples,
                end: FlowEnd::Stalled,
            });
        }
        s += step;
        x = next;
        u = u_next;
        samples.push((s, u));
    }
    Ok(FlowProfile {
        start,
        samples,
        end: FlowEnd::StepLimit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CurveSpec;
    use crate::grid::{EmbeddedGrid, FieldRole};
    use crate::oracles::{bessel_j0, J0_FIRST_ZERO};

    fn disk_grid(n: usize) -> EmbeddedGrid {
        EmbeddedGrid::build(&BoundaryCurve::new(CurveSpec::circle(1.0)).unwrap(), n).unwrap()
    }

    #[test]
    fn maximum_of_disk_fields_is_central() {
        let grid = disk_grid(128);
        let eig = grid.solve_ground_state().unwrap();
        let loc = locate_maximum(&eig.field).unwrap();
        assert!(loc.point.norm() <= grid.h());
        let v = grid.solve_torsion().unwrap();
        let loc = locate_maximum(&v).unwrap();
        assert!(loc.point.norm() <= grid.h());
        assert!((loc.value - 0.25).abs() < 1e-3);
    }

    #[test]
    fn quadratic_refinement_recovers_off_node_peak() {
        let grid = disk_grid(64);
        let peak = Point2::new(0.0123, -0.0071);
        let f = ScalarField::from_fn(&grid, FieldRole::Generic, |p| 1.0 - (p - peak).norm_sq());
        let loc = locate_maximum(&f).unwrap();
        assert!(loc.refined);
        assert!(loc.point.distance(peak) < 1e-10);
        assert!((loc.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_break_lexicographically() {
        let grid = disk_grid(32);
        let f = ScalarField::constant(&grid, 2.0, FieldRole::Generic);
        let loc = locate_maximum(&f).unwrap();
        assert_eq!(loc.near_max_count, grid.len());
        let smallest = grid
            .points()
            .min_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap())
            .unwrap();
        assert_eq!(loc.node_point, smallest);
        let zero = ScalarField::constant(&grid, 0.0, FieldRole::Generic);
        assert!(matches!(locate_maximum(&zero), Err(Error::ZeroField)));
    }

    #[test]
    fn negative_extremum_is_located() {
        let grid = disk_grid(64);
        let f = ScalarField::from_fn(&grid, FieldRole::Generic, |p| -(1.0 - p.norm_sq()));
        let loc = locate_maximum(&f).unwrap();
        assert!(loc.point.norm() < 1e-9);
        assert!((loc.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn disk_report() {
        let curve = BoundaryCurve::new(CurveSpec::circle(1.0)).unwrap();
        let grid = EmbeddedGrid::build(&curve, 128).unwrap();
        let eig = grid.solve_ground_state().unwrap();
        let v = grid.solve_torsion().unwrap();
        let report = constants_report(&curve, &eig, &v).unwrap();
        assert!((report.c_loc - J0_FIRST_ZERO).abs() / J0_FIRST_ZERO < 0.01);
        assert!((report.torsion_ratio - 1.0).abs() < 1e-3);
        assert!(report.torsion_ratio <= 1.0);
        assert!(report.maxima_separation <= 2.0 * grid.h());
        assert!(report.d_boundary <= report.inradius + 2.0 * grid.h());
    }

    #[test]
    fn barta_on_disk_fields() {
        let grid = disk_grid(256);
        let eig = grid.solve_ground_state().unwrap();
        let b = barta_sup(&eig.field, BARTA_MARGIN).unwrap();
        assert!((b - eig.lambda).abs() / eig.lambda < 0.05);
        let v = grid.solve_torsion().unwrap();
        let b = barta_sup(&v, BARTA_MARGIN).unwrap();
        assert!((b - 40.0).abs() / 40.0 < 0.05, "{b}");
        assert!(barta_sup(&v, 1.5).is_err());
        assert!(barta_sup(&v.map(|x| -x), 0.1).is_err());
    }

    #[test]
    fn stationarity_bound_cases() {
        assert!(verify_stationarity_bound(0.0, 3.0, 7.0, 0.0));
        let (t, v) = (0.37, 2.9);
        assert!(verify_stationarity_bound(
            1.0 - (-t * v as f64).exp(),
            t,
            v,
            0.0
        ));
        assert!(!verify_stationarity_bound(0.99, 0.1, 1.0, 0.0));
        // noise allowance
        assert!(verify_stationarity_bound(0.51, 1.0, 0.69, 0.01));
    }

    #[test]
    fn disk_gradient_flow_reaches_boundary_along_radius() {
        let grid = disk_grid(256);
        let eig = grid.solve_ground_state().unwrap();
        let start = Point2::new(0.05, 0.0);
        let profile = trace_gradient_flow(&eig.field, start, 0.25 * grid.h()).unwrap();
        assert_eq!(profile.end, FlowEnd::Boundary);
        assert!(
            (profile.length() - 0.95).abs() < 0.02,
            "{}",
            profile.length()
        );
        for w in profile.samples.windows(2) {
            assert!(w[1].0 > w[0].0);
            assert!(w[1].1 <= w[0].1);
        }
        for &(s, u) in profile.samples.iter().step_by(20) {
            let exact = bessel_j0(J0_FIRST_ZERO * (0.05 + s));
            assert!((u - exact).abs() < 1e-2, "s={s}: {u} vs {exact}");
        }
        let cmp = profile.cosine_comparison(eig.lambda);
        assert_eq!(cmp.len(), profile.samples.len());
        assert!(trace_gradient_flow(&eig.field, Point2::new(3.0, 0.0), 0.001).is_err());
        assert!(trace_gradient_flow(&eig.field, start, grid.h()).is_err());
    }

    #[test]
    fn gradient_flow_stops_at_critical_point_of_flat_field() {
        let grid = disk_grid(64);
        // interior plateau: zero gradient away from the boundary layer
        let f = ScalarField::constant(&grid, 1.0, FieldRole::Generic);
        let profile = trace_gradient_flow(&f, Point2::ORIGIN, 0.25 * grid.h()).unwrap();
        assert_eq!(profile.end, FlowEnd::CriticalPoint);
        assert_eq!(profile.samples.len(), 1);
    }

    #[test]
    fn square_mode_axis_profile_dominates_cosine() {
        let u = crate::oracles::square_mode(1, 1).unwrap();
        let v = u.laplacian_ratio_bound.unwrap();
        for i in 0..150 {
            let s = i as f64 * 0.01;
            let p = Point2::new(
                std::f64::consts::FRAC_PI_2 - 0.01 - s,
                std::f64::consts::FRAC_PI_2,
            );
            let value = u.eval(p);
            assert!((value - (s + 0.01).cos()).abs() < 1e-12);
            assert!(value >= (v.sqrt() * (s + 0.01)).cos());
        }
    }
}
