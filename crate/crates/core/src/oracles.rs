//! Closed-form reference solutions: separable modes on the square
//! `[0, π]²`, the disk ground state and torsion function, Bessel functions
//! of order 0 and 1, and the survival probability of Brownian motion
//! started at the center of the unit disk.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// First positive zero of `J₀`.
pub const J0_FIRST_ZERO: f64 = 2.404825557695773;

/// Below this argument Bessel functions are summed from their power series.
const SERIES_LIMIT: f64 = 12.0;

#[derive(Clone)]
pub struct AnalyticField {
    pub name: &'static str,
    pub params: Vec<(&'static str, f64)>,
    /// `‖Δu/u‖_∞` where finite.
    pub laplacian_ratio_bound: Option<f64>,
    /// Distance from the extremum set to the boundary, where known.
    pub extremum_distance: Option<f64>,
    /// One point of the extremum set.
    pub extremum: Option<Point2>,
    evaluator: Arc<dyn Fn(Point2) -> f64 + Send + Sync>,
}

impl fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticField")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("laplacian_ratio_bound", &self.laplacian_ratio_bound)
            .field("extremum_distance", &self.extremum_distance)
            .finish()
    }
}

impl AnalyticField {
    pub fn eval(&self, p: Point2) -> f64 {
        (self.evaluator)(p)
    }

    pub fn evaluator(&self) -> impl Fn(Point2) -> f64 + Send + Sync + '_ {
        move |p| (self.evaluator)(p)
    }
}

/// `sin(nx) sin(my)` on `[0, π]²`. The extremum nearest a corner sits at
/// `(π/2n, π/2m)`, at distance `π / (2 max(n, m))` from the boundary, and
/// `Δu/u ≡ −(n² + m²)`.
pub fn square_mode(n: u32, m: u32) -> Result<AnalyticField> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "square mode indices must be ≥ 1, got ({n}, {m})"
        )));
    }
    let (nf, mf) = (n as f64, m as f64);
    Ok(AnalyticField {
        name: "square_mode",
        params: vec![("n", nf), ("m", mf)],
        laplacian_ratio_bound: Some(nf * nf + mf * mf),
        extremum_distance: Some(PI / (2.0 * nf.max(mf))),
        extremum: Some(Point2::new(PI / (2.0 * nf), PI / (2.0 * mf))),
        evaluator: Arc::new(move |p| (nf * p.x).sin() * (mf * p.y).sin()),
    })
}

/// `J₀(j₀ r)` on the unit disk, eigenvalue `j₀²`.
pub fn disk_ground_state() -> AnalyticField {
    AnalyticField {
        name: "disk_ground_state",
        params: Vec::new(),
        laplacian_ratio_bound: Some(J0_FIRST_ZERO * J0_FIRST_ZERO),
        extremum_distance: Some(1.0),
        extremum: Some(Point2::ORIGIN),
        evaluator: Arc::new(|p| bessel_j0(J0_FIRST_ZERO * p.norm())),
    }
}

/// `(1 − r²)/4` on the unit disk.
pub fn disk_torsion() -> AnalyticField {
    AnalyticField {
        name: "disk_torsion",
        params: Vec::new(),
        laplacian_ratio_bound: None,
        extremum_distance: Some(1.0),
        extremum: Some(Point2::ORIGIN),
        evaluator: Arc::new(|p| 0.25 * (1.0 - p.norm_sq())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BesselOrder {
    Zero,
    One,
}

impl BesselOrder {
    fn nu(self) -> u32 {
        match self {
            BesselOrder::Zero => 0,
            BesselOrder::One => 1,
        }
    }
}

/// `J₀` or `J₁`; accurate to about 1e-12 absolute.
pub fn bessel_j(order: BesselOrder, x: f64) -> f64 {
    // J₀ is even and J₁ odd
    let (ax, sign) = match order {
        BesselOrder::Zero => (x.abs(), 1.0),
        BesselOrder::One => (x.abs(), x.signum()),
    };
    let value = if ax <= SERIES_LIMIT {
        bessel_series(order.nu(), ax)
    } else {
        bessel_asymptotic(order.nu(), ax)
    };
    sign * value
}

pub fn bessel_j0(x: f64) -> f64 {
    bessel_j(BesselOrder::Zero, x)
}

pub fn bessel_j1(x: f64) -> f64 {
    bessel_j(BesselOrder::One, x)
}

fn bessel_series(nu: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let q = -half * half;
    // leading term (x/2)^ν / ν!
    let mut term = if nu == 0 { 1.0 } else { half };
    let mut sum = term;
    let mut k = 1.0;
    while term.abs() >= 1e-16 * sum.abs().max(1e-300) || k < 3.0 {
        term *= q / (k * (k + nu as f64));
        sum += term;
        k += 1.0;
        if k > 500.0 {
            break;
        }
    }
    sum
}

/// Hankel expansion `J_ν(x) = sqrt(2/πx) (P cos ω − Q sin ω)`,
/// `ω = x − νπ/2 − π/4`, truncated at the smallest term.
fn bessel_asymptotic(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let (mut p, mut q) = (1.0, 0.0);
    let mut a = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        a *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if a.abs() >= prev || a.abs() < 1e-17 {
            break;
        }
        prev = a.abs();
        // signs cycle +Q, −P, −Q, +P
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
    }
    let omega = x - nu as f64 * FRAC_PI_2 - FRAC_PI_4;
    (2.0 / (PI * x)).sqrt() * (p * omega.cos() - q * omega.sin())
}

/// The `k`-th positive zero of `J₀` (1-based), by bisection around
/// McMahon's estimate `(k − 1/4)π`.
pub fn bessel_j0_zero(k: usize) -> f64 {
    assert!(k >= 1, "zeros are 1-indexed");
    let beta = (k as f64 - 0.25) * PI;
    let (mut lo, mut hi) = (beta - 0.3, beta + 0.3);
    let mut f_lo = bessel_j0(lo);
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        let f_mid = bessel_j0(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid > 0.0) == (f_lo > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Partial sum of the Fourier–Bessel survival series with `terms` terms:
/// `Σ_k 2/(j_k J₁(j_k)) exp(−j_k² t)`.
pub fn disk_survival_partial_sum(t: f64, terms: usize) -> f64 {
    (1..=terms)
        .map(|k| {
            let j = bessel_j0_zero(k);
            2.0 / (j * bessel_j1(j)) * (-j * j * t).exp()
        })
        .sum()
}

const SURVIVAL_TAIL_TOL: f64 = 1e-10;
const SURVIVAL_MAX_TERMS: usize = 100_000;

/// Probability that Brownian motion with generator `Δ` started at the
/// center of the unit disk has not left it by time `t`.
pub fn disk_center_survival(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "survival time must be ≥ 0, got {t}"
        )));
    }
    if t == 0.0 {
        return Ok(1.0);
    }
    let mut sum = 0.0;
    for k in 1..=SURVIVAL_MAX_TERMS {
        let j = bessel_j0_zero(k);
        let decay = (-j * j * t).exp();
        sum += 2.0 / (j * bessel_j1(j)) * decay;
        // |coefficients| ≤ 1.61 and j_{m+1}² − j_m² ≥ 2π j_k beyond k
        let tail = 1.61 * decay / (1.0 - (-2.0 * PI * j * t).exp());
        if tail < SURVIVAL_TAIL_TOL {
            break;
        }
    }
    Ok(sum.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// `J_n(x) = (1/π) ∫₀^π cos(nτ − x sin τ) dτ`; the integrand extends to
    /// a smooth periodic function, so the trapezoid rule converges
    /// geometrically.
    fn bessel_integral(n: u32, x: f64) -> f64 {
        let m = 2000;
        let h = PI / m as f64;
        let f = |t: f64| (n as f64 * t - x * t.sin()).cos();
        let inner: f64 = (1..m).map(|i| f(i as f64 * h)).sum();
        (inner + 0.5 * (f(0.0) + f(PI))) * h / PI
    }

    #[test]
    fn bessel_reference_values() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert_eq!(bessel_j1(0.0), 0.0);
        assert!(bessel_j0(J0_FIRST_ZERO).abs() < 1e-10);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!((bessel_j1(1.0) - 0.440_050_585_744_933_5).abs() < 1e-14);
    }

    #[test]
    fn j1_at_first_zero_matches_long_series() {
        // 200 terms of the series in compensated summation
        let x = J0_FIRST_ZERO;
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        let mut term = 0.5 * x;
        for k in 0..200 {
            if k > 0 {
                term *= -(0.25 * x * x) / (k as f64 * (k + 1) as f64);
            }
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
        }
        assert!((bessel_j1(x) - sum).abs() < 1e-10);
        assert!((bessel_j1(x) - bessel_integral(1, x)).abs() < 1e-10);
    }

    #[test]
    fn bessel_matches_integral_representation() {
        for i in 0..=300 {
            let x = i as f64 * 0.1;
            assert!(
                (bessel_j0(x) - bessel_integral(0, x)).abs() < 1e-10,
                "J0({x})"
            );
            assert!(
                (bessel_j1(x) - bessel_integral(1, x)).abs() < 1e-10,
                "J1({x})"
            );
        }
        // either side of the switch between series and asymptotics
        for x in [11.999, 12.0, 12.001, 40.0, 100.5] {
            assert!((bessel_j0(x) - bessel_integral(0, x)).abs() < 1e-10);
            assert!((bessel_j1(x) - bessel_integral(1, x)).abs() < 1e-10);
        }
    }

    proptest! {
        /// `J₀′ = −J₁`, with the derivative taken termwise from the series
        /// below the switch and by central differences beyond it.
        #[test]
        fn j0_derivative_is_minus_j1(x in 0.0f64..40.0) {
            let derivative = if x <= SERIES_LIMIT - 0.01 {
                let half = 0.5 * x;
                let mut term = 1.0f64;
                let mut sum = 0.0;
                for k in 1..120 {
                    term *= -(half * half) / (k as f64 * k as f64);
                    sum += term * 2.0 * k as f64 / x.max(1e-300);
                }
                sum
            } else {
                let h = 1e-5;
                (bessel_j0(x + h) - bessel_j0(x - h)) / (2.0 * h)
            };
            prop_assert!((derivative + bessel_j1(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn zeros_are_roots() {
        assert!((bessel_j0_zero(1) - J0_FIRST_ZERO).abs() < 1e-14);
        assert!((bessel_j0_zero(2) - 5.520_078_110_286_311).abs() < 1e-12);
        for k in 1..50 {
            assert!(bessel_j0(bessel_j0_zero(k)).abs() < 1e-12);
            assert!(bessel_j0_zero(k + 1) > bessel_j0_zero(k) + 3.0);
        }
    }

    /// The alternating tail at `t = 0` decays like `k^{-1/2}`; repeated
    /// averaging of consecutive partial sums accelerates it enough to
    /// confirm the series sums to one.
    #[test]
    fn survival_series_sums_to_one() {
        let mut partial = Vec::with_capacity(200);
        let mut acc = 0.0;
        for k in 1..=200 {
            let j = bessel_j0_zero(k);
            acc += 2.0 / (j * bessel_j1(j));
            partial.push(acc);
        }
        let mut level: Vec<f64> = partial[partial.len() - 12..].to_vec();
        while level.len() > 1 {
            level = level.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        }
        assert!((level[0] - 1.0).abs() < 1e-6, "{}", level[0]);
        assert!((disk_survival_partial_sum(0.0, 200) - partial[199]).abs() < 1e-12);
        assert_eq!(disk_center_survival(0.0).unwrap(), 1.0);
    }

    #[test]
    fn survival_is_converged_and_monotone() {
        let s = disk_center_survival(0.1).unwrap();
        let doubled = disk_survival_partial_sum(0.1, 2 * 40);
        assert!((s - doubled).abs() < 1e-10);
        assert!(s > 0.0 && s < 1.0);
        assert!(disk_center_survival(0.2).unwrap() < s);
        let mut prev = 1.0;
        for i in 0..50 {
            let t = i as f64 / 49.0;
            let v = disk_center_survival(t).unwrap();
            assert!(v <= prev + 1e-12);
            prev = v;
        }
        assert!(disk_center_survival(-1.0).is_err());
    }

    /// Large-time limit: only the first mode survives.
    #[test]
    fn survival_large_time_asymptotics() {
        let t = 2.0;
        let j = J0_FIRST_ZERO;
        let leading = 2.0 / (j * bessel_j1(j)) * (-j * j * t).exp();
        assert!((disk_center_survival(t).unwrap() - leading).abs() < 1e-12);
    }

    #[test]
    fn square_mode_sharpness_values() {
        let u = square_mode(1, 1).unwrap();
        assert_eq!(u.extremum, Some(Point2::new(FRAC_PI_2, FRAC_PI_2)));
        assert_eq!(u.extremum_distance, Some(FRAC_PI_2));
        assert_eq!(u.laplacian_ratio_bound, Some(2.0));
        for n in 1..=8u32 {
            let u = square_mode(n, 1).unwrap();
            let d = u.extremum_distance.unwrap();
            assert!((d - PI / (2.0 * n as f64)).abs() < 1e-15);
            assert_eq!(u.laplacian_ratio_bound, Some((n * n + 1) as f64));
            assert!((u.eval(u.extremum.unwrap()) - 1.0).abs() < 1e-12);
        }
        let u = square_mode(3, 1).unwrap();
        let product = u.extremum_distance.unwrap() * u.laplacian_ratio_bound.unwrap().sqrt();
        assert!((product - 1.655765).abs() < 1e-6);
        assert!(square_mode(0, 1).is_err());
    }

    #[test]
    fn square_modes_vanish_on_the_boundary() {
        for (n, m) in [(1, 1), (3, 1), (2, 5), (8, 1)] {
            let u = square_mode(n, m).unwrap();
            for i in 0..2500 {
                let s = PI * i as f64 / 2499.0;
                for p in [
                    Point2::new(s, 0.0),
                    Point2::new(s, PI),
                    Point2::new(0.0, s),
                    Point2::new(PI, s),
                ] {
                    assert!(u.eval(p).abs() < 1e-14 * (n.max(m) as f64) * 2.0);
                }
            }
        }
    }

    #[test]
    fn disk_closed_forms() {
        let u = disk_ground_state();
        assert_eq!(u.eval(Point2::ORIGIN), 1.0);
        assert!(u.eval(Point2::new(0.6, 0.8)).abs() < 1e-10);
        let v = disk_torsion();
        assert_eq!(v.eval(Point2::ORIGIN), 0.25);
        assert_eq!(v.eval(Point2::new(1.0, 0.0)), 0.0);
        // Δ(1 − x² − y²)/4 = (−2 − 2)/4 = −1, checked by second differences
        let h = 1e-3;
        let p = Point2::new(0.3, -0.2);
        let lap = (v.eval(p + Point2::new(h, 0.0))
            + v.eval(p - Point2::new(h, 0.0))
            + v.eval(p + Point2::new(0.0, h))
            + v.eval(p - Point2::new(0.0, h))
            - 4.0 * v.eval(p))
            / (h * h);
        assert!((lap + 1.0).abs() < 1e-6);
    }
}
