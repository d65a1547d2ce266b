//! Constant-curvature primitives: `sn_K`, unit ball and sphere constants,
//! radial warped profiles and totally geodesic slices of geodesic balls.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, DEFAULT_ABS_TOL};

/// Below this value of `|K| r²` the trigonometric branches are replaced by
/// their Taylor series.
const TAYLOR_CROSSOVER: f64 = 1e-6;

/// Sectional curvature of a space form (units of 1/length²).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Curvature(pub f64);

impl Curvature {
    pub const FLAT: Curvature = Curvature(0.0);

    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::InvalidInput(format!("curvature must be finite, got {k}")));
        }
        Ok(Curvature(k))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `sqrt(|K|)`, the inverse length scale of the model.
    pub fn scale(self) -> f64 {
        self.0.abs().sqrt()
    }

    /// Largest admissible ball radius, `π / (2√K)` for `K > 0`.
    pub fn max_ball_radius(self) -> Option<f64> {
        (self.0 > 0.0).then(|| PI / (2.0 * self.0.sqrt()))
    }

    pub fn sn(self, r: f64) -> f64 {
        sn(self, r)
    }

    pub fn cs(self, r: f64) -> f64 {
        cs(self, r)
    }
}

impl fmt::Display for Curvature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K={}", self.0)
    }
}

/// The warping function of the space form of curvature `K`.
pub fn sn(k: Curvature, r: f64) -> f64 {
    let kv = k.0;
    if kv == 0.0 {
        return r;
    }
    let x = kv * r * r;
    if x.abs() < TAYLOR_CROSSOVER {
        return r * (1.0 - x / 6.0 + x * x / 120.0);
    }
    let s = kv.abs().sqrt();
    if kv > 0.0 {
        (r * s).sin() / s
    } else {
        (r * s).sinh() / s
    }
}

/// Derivative of [`sn`] in `r`.
pub fn cs(k: Curvature, r: f64) -> f64 {
    let kv = k.0;
    if kv == 0.0 {
        return 1.0;
    }
    let x = kv * r * r;
    if x.abs() < TAYLOR_CROSSOVER {
        return 1.0 - x / 2.0 + x * x / 24.0;
    }
    let s = kv.abs().sqrt();
    if kv > 0.0 {
        (r * s).cos()
    } else {
        (r * s).cosh()
    }
}

/// `α_k`, the volume of the unit Euclidean `k`-ball.
pub fn unit_ball_volume(k: usize) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / k as f64 * unit_ball_volume(k - 2),
    }
}

/// `β_k`, the area of the unit round `k`-sphere.
pub fn unit_sphere_area(k: usize) -> f64 {
    (k + 1) as f64 * unit_ball_volume(k + 1)
}

/// A geodesic ball `B^n_{R;K}` together with the slice dimension `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceFormBall {
    pub n: usize,
    pub k: usize,
    pub radius: f64,
    pub curvature: Curvature,
}

impl SpaceFormBall {
    pub fn new(n: usize, k: usize, radius: f64, curvature: Curvature) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!("ambient dimension must be >= 2, got {n}")));
        }
        if k < 1 || k >= n {
            return Err(Error::InvalidInput(format!("need 1 <= k < n, got k={k}, n={n}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
        }
        if let Some(max) = curvature.max_ball_radius() {
            // allow the hemisphere itself up to rounding
            if radius > max * (1.0 + 1e-14) {
                return Err(Error::InvalidInput(format!(
                    "radius {radius} exceeds pi/(2 sqrt K) = {max} for {curvature}"
                )));
            }
        }
        Ok(Self { n, k, radius, curvature })
    }

    /// The radial profile `sn_K` on `[0, R]`.
    pub fn profile(&self) -> WarpedProfile {
        WarpedProfile::space_form(self.curvature, self.radius).expect("validated ball radius")
    }
}

/// A radial warping function `h` on `[0, R]`.
#[derive(Clone)]
pub struct WarpedProfile {
    name: String,
    radius: f64,
    eval: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl fmt::Debug for WarpedProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WarpedProfile").field("name", &self.name).field("radius", &self.radius).finish()
    }
}

impl WarpedProfile {
    /// Wraps an evaluator. Checks `h(0) = 0` and `h >= 0` on a sample grid;
    /// the smoothness condition at the origin is checked by [`check_dagger`].
    pub fn from_fn<F>(name: impl Into<String>, radius: f64, h: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("profile radius must be positive, got {radius}")));
        }
        let h0 = h(0.0);
        if h0.abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("profile must vanish at the origin, h(0) = {h0}")));
        }
        for i in 0..=256 {
            let r = radius * i as f64 / 256.0;
            let v = h(r);
            if !(v >= -1e-14) {
                return Err(Error::InvalidInput(format!("profile negative or NaN at r={r}: {v}")));
            }
        }
        Ok(Self { name: name.into(), radius, eval: Arc::new(h) })
    }

    /// `sn_K` restricted to `[0, R]`.
    pub fn space_form(k: Curvature, radius: f64) -> Result<Self> {
        if k.0 > 0.0 && radius > PI / k.0.sqrt() {
            return Err(Error::InvalidInput(format!("sn_K changes sign before r = {radius} for {k}")));
        }
        Self::from_fn(format!("sn[{}]", k.0), radius, move |r| sn(k, r))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.eval)(r)
    }

    /// Same evaluator on a different interval.
    pub fn with_radius(&self, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("profile radius must be non-negative, got {radius}")));
        }
        Ok(Self { name: self.name.clone(), radius, eval: Arc::clone(&self.eval) })
    }

    /// Tabulated samples `(r, h(r))` on a uniform grid with `n + 1` nodes.
    pub fn samples(&self, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(1);
        (0..=n)
            .map(|i| {
                let r = self.radius * i as f64 / n as f64;
                (r, self.eval(r))
            })
            .collect()
    }
}

/// Area of the `k`-dimensional warped ball `M^k_{h,R}`:
/// `β_{k-1} ∫_0^R h(r)^{k-1} dr`.
pub fn ball_area(k: usize, profile: &WarpedProfile) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidInput("ball_area needs k >= 1".into()));
    }
    let radius = profile.radius();
    if k == 1 {
        return Ok(2.0 * radius);
    }
    let integral = radial_integral(k, profile, radius)?;
    Ok(unit_sphere_area(k - 1) * integral)
}

/// `∫_0^s h(r)^{k-1} dr` to the default absolute tolerance.
pub fn radial_integral(k: usize, profile: &WarpedProfile, s: f64) -> Result<f64> {
    let e = (k as i32) - 1;
    Ok(quadrature::integrate(|r| profile.eval(r).powi(e), 0.0, s, DEFAULT_ABS_TOL)?.value)
}

/// Outcome of the smoothness-at-the-origin test.
#[derive(Debug, Clone, Serialize)]
pub struct DaggerReport {
    pub pass: bool,
    pub h_at_zero: f64,
    /// `(δ, g''(2δ))` estimates for `g(u) = h(√u)/√u`, halving `δ`.
    pub second_derivative: Vec<(f64, f64)>,
    pub reason: String,
}

/// Tests that `h(0) = 0` and that `g(u) = h(√u)/√u` extends `C²` to `u = 0`.
///
/// Second differences of `g` are taken on the stencil `δ, 2δ, 3δ` for a
/// halving schedule of `δ`. For a `C²` extension (with Lipschitz `g''`) the
/// successive changes shrink geometrically; a non-smooth `g` makes them grow.
pub fn check_dagger(profile: &WarpedProfile) -> Result<DaggerReport> {
    let r_max = profile.radius();
    let h0 = profile.eval(0.0);
    if !h0.is_finite() {
        return Err(Error::InvalidInput("profile evaluation at 0 is not finite".into()));
    }
    if h0.abs() > 1e-12 {
        return Ok(DaggerReport {
            pass: false,
            h_at_zero: h0,
            second_derivative: vec![],
            reason: format!("h(0) = {h0} is not zero"),
        });
    }
    let g = |u: f64| {
        let s = u.sqrt();
        profile.eval(s) / s
    };
    let mut delta = 0.01 * r_max * r_max;
    let mut est = Vec::new();
    for _ in 0..8 {
        let (g1, g2, g3) = (g(delta), g(2.0 * delta), g(3.0 * delta));
        if !(g1.is_finite() && g2.is_finite() && g3.is_finite()) {
            return Err(Error::InvalidInput(format!("profile evaluation failed near 0 (delta = {delta})")));
        }
        est.push((delta, (g3 - 2.0 * g2 + g1) / (delta * delta)));
        delta *= 0.5;
    }
    let first_change = (est[1].1 - est[0].1).abs();
    let last_change = (est[est.len() - 1].1 - est[est.len() - 2].1).abs();
    let noise = 1e-6 * (1.0 + est[0].1.abs());
    let pass = last_change <= 0.5 * first_change + noise;
    let reason = if pass {
        "second differences of h(sqrt u)/sqrt u converge".to_string()
    } else {
        format!("second differences diverge: change {first_change:e} -> {last_change:e}")
    };
    Ok(DaggerReport { pass, h_at_zero: h0, second_derivative: est, reason })
}

/// Radius of the totally geodesic slice orthogonal to a diameter at signed
/// distance `t` from the centre of `B_{R;K}`.
///
/// Uses the half-angle forms of the space-form Pythagorean identities
/// (`cos ρ cos t = cos R` and its hyperbolic analogue), which stay accurate
/// as `K → 0`.
pub fn slice_radius(radius: f64, k: Curvature, t: f64) -> Result<f64> {
    let t = t.abs();
    if t > radius * (1.0 + 1e-15) {
        return Err(Error::InvalidInput(format!("slice offset {t} exceeds ball radius {radius}")));
    }
    if t == 0.0 {
        return Ok(radius);
    }
    if t >= radius {
        return Ok(0.0);
    }
    let kv = k.0;
    if kv == 0.0 {
        return Ok(((radius - t) * (radius + t)).sqrt());
    }
    let s = kv.abs().sqrt();
    let half_sum = 0.5 * (radius + t) * s;
    let half_diff = 0.5 * (radius - t) * s;
    if kv > 0.0 {
        let v = (half_sum.sin() * half_diff.sin() / (t * s).cos()).sqrt();
        Ok(2.0 / s * v.min(1.0).asin())
    } else {
        let v = (half_sum.sinh() * half_diff.sinh() / (t * s).cosh()).sqrt();
        Ok(2.0 / s * v.asinh())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sn_examples() {
        assert_eq!(sn(Curvature(0.0), 1.7), 1.7);
        assert!((sn(Curvature(1.0), PI / 2.0) - 1.0).abs() < 1e-15);
        // series oracle for sinh(1)
        let mut series = 0.0;
        let mut term = 1.0;
        for j in 0..20 {
            series += term;
            term /= ((2 * j + 2) * (2 * j + 3)) as f64;
        }
        assert!((sn(Curvature(-1.0), 1.0) - series).abs() < 1e-14);
        assert!((series - 1.175_201_2).abs() < 1e-7);
    }

    #[test]
    fn sn_branch_agreement_near_flat() {
        for &kv in &[1e-3, -1e-3, 1e-6, -1e-6, 1e-9, -1e-9] {
            for &r in &[0.01, 0.1, 0.5, 1.0, 2.0] {
                let k = Curvature(kv);
                let diff = (sn(k, r) - r).abs();
                assert!(diff <= 0.2 * kv.abs() * r.powi(3) + 1e-16, "K={kv} r={r} diff={diff}");
            }
        }
        // both sides of the Taylor crossover agree with the series to rounding
        for &kv in &[0.999_999e-6, 1.000_001e-6, -0.999_999e-6, -1.000_001e-6] {
            let r: f64 = 1.0;
            let oracle = r - kv * r.powi(3) / 6.0 + kv * kv * r.powi(5) / 120.0;
            assert!((sn(Curvature(kv), r) - oracle).abs() < 1e-15);
        }
    }

    #[test]
    fn constants() {
        assert!((unit_ball_volume(2) - PI).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-15);
        assert_eq!(unit_sphere_area(0), 2.0);
        assert!((unit_sphere_area(1) - 2.0 * PI).abs() < 1e-15);
        assert!((unit_sphere_area(2) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn ball_area_examples() {
        let p = WarpedProfile::space_form(Curvature(0.5), 3.0).unwrap();
        assert_eq!(ball_area(1, &p).unwrap(), 6.0);
        let p = WarpedProfile::space_form(Curvature(1.0), PI / 2.0).unwrap();
        assert!((ball_area(2, &p).unwrap() - 2.0 * PI).abs() < 1e-10);
        let p = WarpedProfile::space_form(Curvature(0.0), 1.0).unwrap();
        assert!((ball_area(3, &p).unwrap() - unit_ball_volume(3)).abs() < 1e-10);
    }

    #[test]
    fn dagger_examples() {
        let sin = WarpedProfile::from_fn("sin", 1.0, f64::sin).unwrap();
        assert!(check_dagger(&sin).unwrap().pass);
        let sinh = WarpedProfile::space_form(Curvature(-1.0), 2.0).unwrap();
        assert!(check_dagger(&sinh).unwrap().pass);
        let sq = WarpedProfile::from_fn("r^2", 1.0, |r| r * r).unwrap();
        let rep = check_dagger(&sq).unwrap();
        assert!(!rep.pass, "{rep:?}");
        let mixed = WarpedProfile::from_fn("r+r^2", 1.0, |r| r + r * r).unwrap();
        assert!(!check_dagger(&mixed).unwrap().pass);
        let cubic = WarpedProfile::from_fn("r+r^3", 1.0, |r| r + r * r * r).unwrap();
        assert!(check_dagger(&cubic).unwrap().pass);
    }

    #[test]
    fn profile_rejects_nonzero_origin() {
        assert!(WarpedProfile::from_fn("shifted", 1.0, |r| r + 0.1).is_err());
        assert!(WarpedProfile::from_fn("negative", 1.0, |r| -r).is_err());
    }

    #[test]
    fn slice_radius_examples() {
        assert_eq!(slice_radius(1.0, Curvature(0.0), 0.0).unwrap(), 1.0);
        assert!((slice_radius(1.0, Curvature(0.0), 0.6).unwrap() - 0.8).abs() < 1e-15);
        let rho = slice_radius(PI / 2.0, Curvature(1.0), PI / 4.0).unwrap();
        assert!((rho - PI / 2.0).abs() < 1e-7, "rho={rho}");
        assert!(slice_radius(1.0, Curvature(-1.0), 1.5).is_err());
    }

    #[test]
    fn slice_radius_endpoints() {
        for &kv in &[-2.0, -1.0, -1e-8, 0.0, 1e-8, 0.5, 1.0] {
            for &r in &[0.1, 0.7, 1.0, 1.5] {
                let k = Curvature(kv);
                if let Some(m) = k.max_ball_radius() {
                    if r > m {
                        continue;
                    }
                }
                assert_eq!(slice_radius(r, k, 0.0).unwrap(), r);
                assert_eq!(slice_radius(r, k, r).unwrap(), 0.0);
            }
        }
    }

    #[test]
    fn ball_validation() {
        assert!(SpaceFormBall::new(3, 3, 1.0, Curvature(0.0)).is_err());
        assert!(SpaceFormBall::new(3, 2, 2.0, Curvature(1.0)).is_err());
        assert!(SpaceFormBall::new(3, 2, PI / 2.0, Curvature(1.0)).is_ok());
        assert!(SpaceFormBall::new(1, 1, 1.0, Curvature(0.0)).is_err());
    }
}
