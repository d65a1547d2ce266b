//! Radial comparison maps between warped balls.
//!
//! For `K ≤ K₁` the map `f` is defined by equality of the radial `k`-area
//! integrals, `∫_0^s sn_K^{k-1} = ∫_0^{f(s)} sn_{K₁}^{k-1}`, equivalently by
//! the ODE `f' = (sn_K(r) / sn_{K₁}(f))^{k-1}` with `f(0) = 0`. The ODE is
//! integrated with an embedded Dormand–Prince pair; the integral identity is
//! then checked independently by quadrature.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, DEFAULT_ABS_TOL};
use crate::spaceform::{ball_area, sn, Curvature, WarpedProfile};

/// Acceptance threshold for the integral-identity residual.
pub const IDENTITY_TOL: f64 = 1e-8;
/// Slack on the one-sided contraction inequalities.
pub const ONE_SIDED_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the integrator step.
    pub max_step: f64,
    /// Number of uniform table intervals on `[0, R₀]`.
    pub grid_intervals: usize,
    /// End of the series segment near the singular origin.
    pub series_end: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-13, max_step: 0.05, grid_intervals: 1024, series_end: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub r: f64,
    pub f: f64,
    pub fp: f64,
}

/// Tabulated comparison map with cubic Hermite interpolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonMap {
    pub k: usize,
    #[serde(rename = "K")]
    pub source: Curvature,
    #[serde(rename = "K1")]
    pub target: Curvature,
    #[serde(rename = "R0")]
    pub r0: f64,
    #[serde(rename = "R1")]
    pub r1: f64,
    pub grid: Vec<GridPoint>,
    /// Max over the grid of `|∫_0^r sn_K^{k-1} - ∫_0^{f(r)} sn_{K₁}^{k-1}|`.
    #[serde(default)]
    pub identity_residual: f64,
}

impl ComparisonMap {
    fn locate(&self, r: f64) -> usize {
        let n = self.grid.len() - 1;
        let h = self.r0 / n as f64;
        ((r / h).floor() as usize).min(n - 1)
    }

    /// Interpolated `f(r)` for `r ∈ [0, R₀]`.
    pub fn eval(&self, r: f64) -> f64 {
        let i = self.locate(r);
        let (a, b) = (&self.grid[i], &self.grid[i + 1]);
        let h = b.r - a.r;
        let t = (r - a.r) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * a.f + h10 * h * a.fp + h01 * b.f + h11 * h * b.fp
    }

    /// Derivative of the Hermite interpolant.
    pub fn deriv(&self, r: f64) -> f64 {
        let i = self.locate(r);
        let (a, b) = (&self.grid[i], &self.grid[i + 1]);
        let h = b.r - a.r;
        let t = (r - a.r) / h;
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * a.f + d10 * a.fp + d01 * b.f + d11 * b.fp
    }

    pub fn min_derivative(&self) -> f64 {
        self.grid.iter().map(|g| g.fp).fold(f64::INFINITY, f64::min)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn radial_power_integral(k: usize, curv: Curvature, a: f64, b: f64) -> Result<f64> {
    let e = k as i32 - 1;
    Ok(quadrature::integrate(|r| sn(curv, r).powi(e), a, b, DEFAULT_ABS_TOL * 0.01)?.value)
}

/// `∫_0^{π/2} sin^{k-1} r dr`.
pub fn sine_power_integral(k: usize) -> Result<f64> {
    radial_power_integral(k, Curvature(1.0), 0.0, PI / 2.0)
}

/// Solves for the comparison map from curvature `K` to `K₁ ≥ K` on `[0, R₀]`.
pub fn solve_f(k: usize, source: Curvature, target: Curvature, r0: f64) -> Result<ComparisonMap> {
    if source.0 > target.0 {
        return Err(Error::InvalidInput(format!(
            "comparison requires K <= K1, got K={} > K1={}",
            source.0, target.0
        )));
    }
    solve_f_with(k, source, target, r0, SolveOptions::default())
}

/// As [`solve_f`] with explicit numerics and without the `K ≤ K₁` check, so
/// that the forbidden direction can be examined.
pub fn solve_f_with(k: usize, source: Curvature, target: Curvature, r0: f64, opts: SolveOptions) -> Result<ComparisonMap> {
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::InvalidInput(format!("R0 must be positive, got {r0}")));
    }
    if let Some(max) = source.max_ball_radius() {
        if r0 > max * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!("R0 = {r0} exceeds pi/(2 sqrt K) = {max}")));
        }
    }
    if let Some(max) = target.max_ball_radius() {
        let needed = radial_power_integral(k, source, 0.0, r0)?;
        let available = radial_power_integral(k, target, 0.0, max)?;
        if needed > available * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::InvalidInput(format!(
                "image radius would exceed the hemisphere of {target}: {needed} > {available}"
            )));
        }
    }

    let km1 = k as i32 - 1;
    let rhs = |r: f64, f: f64| -> f64 {
        if km1 == 0 {
            return 1.0;
        }
        (sn(source, r) / sn(target, f)).powi(km1)
    };
    // f = r (1 + c r² + O(r⁴)) near the origin
    let c = (k as f64 - 1.0) * (target.0 - source.0) / (6.0 * (k as f64 + 2.0));
    let series = |r: f64| (r * (1.0 + c * r * r), 1.0 + 3.0 * c * r * r);

    let n = opts.grid_intervals.max(2);
    let h = r0 / n as f64;
    let series_end = opts.series_end.min(0.25 * h).min(r0);
    let mut grid = Vec::with_capacity(n + 1);
    grid.push(GridPoint { r: 0.0, f: 0.0, fp: 1.0 });

    let (f_start, _) = series(series_end);
    let mut stepper = Dopri5::new(opts);
    let mut r = series_end;
    let mut f = f_start;
    for i in 1..=n {
        let target_r = if i == n { r0 } else { i as f64 * h };
        f = stepper.advance(&rhs, r, f, target_r)?;
        r = target_r;
        let fp = rhs(r, f);
        if !(f.is_finite() && fp.is_finite()) {
            return Err(Error::OdeStep { at: r, reason: "non-finite state".into() });
        }
        grid.push(GridPoint { r, f, fp });
    }

    let mut map = ComparisonMap { k, source, target, r0, r1: f, grid, identity_residual: 0.0 };
    map.identity_residual = identity_residual(&map)?;
    if !(map.identity_residual <= IDENTITY_TOL) {
        return Err(Error::OdeStep {
            at: r0,
            reason: format!("integral identity residual {:e} exceeds {IDENTITY_TOL:e}", map.identity_residual),
        });
    }
    Ok(map)
}

/// Checks the defining integral identity at every grid node by cumulative
/// quadrature on both sides.
pub fn identity_residual(map: &ComparisonMap) -> Result<f64> {
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut worst = 0.0_f64;
    for w in map.grid.windows(2) {
        lhs += radial_power_integral(map.k, map.source, w[0].r, w[1].r)?;
        rhs += radial_power_integral(map.k, map.target, w[0].f, w[1].f)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Curvature `K ∈ (0,1)` whose ball of radius `α/√K` maps onto the unit
/// hemisphere (comparison with `K₁ = 1`).
pub fn case2_curvature(alpha: f64, k: usize) -> Result<Curvature> {
    if !(alpha > 0.0 && alpha < PI / 2.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0, pi/2), got {alpha}")));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    let num = radial_power_integral(k, Curvature(1.0), 0.0, alpha)?;
    let den = sine_power_integral(k)?;
    let kv = (num / den).powf(2.0 / k as f64);
    let curvature = Curvature(kv);
    let map = solve_f(k, curvature, Curvature(1.0), alpha / kv.sqrt())?;
    let miss = (map.r1 - PI / 2.0).abs();
    if miss > 1e-7 {
        return Err(Error::OdeStep { at: map.r0, reason: format!("endpoint misses pi/2 by {miss:e}") });
    }
    Ok(curvature)
}

/// Target curvature `K₁` for which the hyperbolic ball `B_{R;-1}` maps onto
/// the hemisphere of curvature `K₁`.
pub fn case3_curvature(radius: f64, k: usize) -> Result<Curvature> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidInput(format!("R must be positive, got {radius}")));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be >= 1".into()));
    }
    let num = sine_power_integral(k)?;
    let den = radial_power_integral(k, Curvature(-1.0), 0.0, radius)?;
    let k1 = Curvature((num / den).powf(2.0 / k as f64));
    let map = solve_f(k, Curvature(-1.0), k1, radius)?;
    let want = PI / (2.0 * k1.0.sqrt());
    let miss = (map.r1 - want).abs();
    if miss > 1e-7 {
        return Err(Error::OdeStep { at: radius, reason: format!("endpoint misses pi/(2 sqrt K1) by {miss:e}") });
    }
    Ok(k1)
}

/// Euclidean radius `R₀` mapped onto the unit hemisphere: `R₀^k / k = ∫_0^{π/2} sin^{k-1}`.
pub fn case1_radius(k: usize) -> Result<f64> {
    Ok((k as f64 * sine_power_integral(k)?).powf(1.0 / k as f64))
}

/// Result of checking the `k`-area contraction hypotheses along a map.
#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    /// Max of `|f'(r) h₁(f(r))^{k-1} - h₀(r)^{k-1}|`.
    pub max_violation_cond1: f64,
    /// Max of `h₁(f(r)) - h₀(r)`, clipped below at zero.
    pub max_violation_cond2: f64,
    pub min_fprime: f64,
    /// `|area(M^k_{h₀,R₀}) - area(M^k_{h₁,R₁})|`.
    pub area_identity_error: f64,
    pub grid_size: usize,
    pub pass: bool,
}

pub fn verify_contraction(h0: &WarpedProfile, h1: &WarpedProfile, f: &ComparisonMap) -> Result<ContractionReport> {
    let r0 = f.r0;
    if (h0.radius() - r0).abs() > 1e-12 * r0.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "source profile radius {} does not match map domain {r0}",
            h0.radius()
        )));
    }
    if h1.radius() < f.r1 - 1e-9 {
        return Err(Error::InvalidInput(format!(
            "target profile radius {} is shorter than the image radius {}",
            h1.radius(),
            f.r1
        )));
    }
    let km1 = f.k as i32 - 1;
    let mut cond1 = 0.0_f64;
    let mut cond2 = 0.0_f64;
    let mut min_fp = f64::INFINITY;
    let mut count = 0;
    let mut check = |r: f64, fr: f64, fp: f64| {
        let lhs = fp * h1.eval(fr).powi(km1);
        let rhs = h0.eval(r).powi(km1);
        cond1 = cond1.max((lhs - rhs).abs());
        cond2 = cond2.max(h1.eval(fr) - h0.eval(r));
        min_fp = min_fp.min(fp);
        count += 1;
    };
    for w in f.grid.windows(2) {
        check(w[0].r, w[0].f, w[0].fp);
        let mid = 0.5 * (w[0].r + w[1].r);
        check(mid, f.eval(mid), f.deriv(mid));
    }
    let last = f.grid.last().expect("non-empty grid");
    check(last.r, last.f, last.fp);

    let a0 = ball_area(f.k, h0)?;
    let a1 = ball_area(f.k, &h1.with_radius(f.r1)?)?;
    let area_identity_error = (a0 - a1).abs();
    let pass = cond1 <= IDENTITY_TOL
        && cond2 <= ONE_SIDED_SLACK
        && min_fp >= 1.0 - 1e-12
        && area_identity_error <= IDENTITY_TOL;
    Ok(ContractionReport {
        max_violation_cond1: cond1,
        max_violation_cond2: cond2.max(0.0),
        min_fprime: min_fp,
        area_identity_error,
        grid_size: count,
        pass,
    })
}

/// Embedded Dormand–Prince 5(4) pair for a scalar ODE.
struct Dopri5 {
    opts: SolveOptions,
    h: f64,
}

impl Dopri5 {
    fn new(opts: SolveOptions) -> Self {
        Self { opts, h: 1e-4 }
    }

    fn advance<F: Fn(f64, f64) -> f64>(&mut self, rhs: &F, mut t: f64, mut y: f64, t_end: f64) -> Result<f64> {
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
        const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
        const B4: [f64; 7] = [
            5179.0 / 57600.0,
            0.0,
            7571.0 / 16695.0,
            393.0 / 640.0,
            -92097.0 / 339200.0,
            187.0 / 2100.0,
            1.0 / 40.0,
        ];
        let mut rejections = 0;
        while t < t_end {
            let mut h = self.h.min(self.opts.max_step);
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            let mut k = [0.0; 7];
            k[0] = rhs(t, y);
            for s in 0..6 {
                let mut ys = y;
                for j in 0..=s {
                    ys += h * A[s][j] * k[j];
                }
                k[s + 1] = rhs(t + C[s] * h, ys);
            }
            let mut y5 = y;
            let mut y4 = y;
            for j in 0..7 {
                y5 += h * B5[j] * k[j];
                y4 += h * B4[j] * k[j];
            }
            let scale = self.opts.atol + self.opts.rtol * y.abs().max(y5.abs());
            let err = ((y5 - y4) / scale).abs();
            if !err.is_finite() {
                return Err(Error::OdeStep { at: t, reason: "non-finite error estimate".into() });
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                t = if last { t_end } else { t + h };
                y = y5;
                rejections = 0;
                if !last || factor < 1.0 {
                    self.h = h * factor;
                }
            } else {
                self.h = h * factor;
                rejections += 1;
                if rejections > 50 || self.h < 1e-14 * t.abs().max(1.0) {
                    return Err(Error::OdeStep { at: t, reason: "step size underflow".into() });
                }
            }
        }
        Ok(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_when_curvatures_agree() {
        for k in 1..=3 {
            let m = solve_f(k, Curvature(-0.5), Curvature(-0.5), 1.3).unwrap();
            for g in &m.grid {
                assert!((g.f - g.r).abs() < 1e-10, "k={k} {g:?}");
                assert!((g.fp - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn k_equal_one_is_identity() {
        let m = solve_f(1, Curvature(-1.0), Curvature(2.0), 1.0).unwrap();
        assert!(m.grid.iter().all(|g| (g.f - g.r).abs() < 1e-13 && g.fp == 1.0));
    }

    #[test]
    fn closed_form_flat_to_sphere() {
        // s²/2 = 1 - cos f
        let m = solve_f(2, Curvature(0.0), Curvature(1.0), 1.4).unwrap();
        let worst = m
            .grid
            .iter()
            .map(|g| (g.f - (1.0 - g.r * g.r / 2.0).acos()).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "worst = {worst:e}");
        // Hermite interpolation between nodes
        for &s in &[0.0123, 0.777, 1.399] {
            assert!((m.eval(s) - (1.0 - s * s / 2.0).acos()).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_wrong_direction_and_overshoot() {
        assert!(solve_f(2, Curvature(1.0), Curvature(0.0), 1.0).is_err());
        // image would pass the equator of the unit sphere
        assert!(solve_f(2, Curvature(0.0), Curvature(1.0), 1.5).is_err());
    }

    #[test]
    fn case_curvature_examples() {
        let k = case2_curvature(PI / 4.0, 1).unwrap();
        assert!((k.0 - 0.25).abs() < 1e-12);
        let k = case2_curvature(PI / 3.0, 2).unwrap();
        assert!((k.0 - 0.5).abs() < 1e-12);
        let k = case2_curvature(PI / 2.0 - 1e-6, 3).unwrap();
        assert!((k.0 - 1.0).abs() < 1e-5);
        assert!(case2_curvature(PI / 2.0, 2).is_err());

        let k1 = case3_curvature(1.0, 2).unwrap();
        assert!((k1.0 - 1.0 / (1f64.cosh() - 1.0)).abs() < 1e-10);
        assert!((k1.0 - 1.841_347).abs() < 1e-6);
        let k1 = case3_curvature(PI / 2.0, 1).unwrap();
        assert!((k1.0 - 1.0).abs() < 1e-12);
        let k1 = case3_curvature(2.0, 2).unwrap();
        assert!((k1.0 - 1.0 / (2f64.cosh() - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn contraction_identity_map_is_clean() {
        let h = WarpedProfile::space_form(Curvature(-1.0), 1.0).unwrap();
        let m = solve_f(2, Curvature(-1.0), Curvature(-1.0), 1.0).unwrap();
        let rep = verify_contraction(&h, &h, &m).unwrap();
        assert!(rep.pass);
        assert!(rep.max_violation_cond1 < 1e-9 && rep.max_violation_cond2 < 1e-15, "{rep:?}");
    }

    #[test]
    fn contraction_domain_mismatch() {
        let m = solve_f(2, Curvature(-1.0), Curvature(-1.0), 1.0).unwrap();
        let h_short = WarpedProfile::space_form(Curvature(-1.0), 0.5).unwrap();
        let h = WarpedProfile::space_form(Curvature(-1.0), 1.0).unwrap();
        assert!(verify_contraction(&h_short, &h, &m).is_err());
        assert!(verify_contraction(&h, &h_short, &m).is_err());
    }

    #[test]
    fn json_table_round_trip() {
        let m = solve_f(2, Curvature(0.0), Curvature(1.0), 1.0).unwrap();
        let s = m.to_json().unwrap();
        assert!(s.contains("\"K1\"") && s.contains("\"R0\"") && s.contains("\"fp\""));
        let back = ComparisonMap::from_json(&s).unwrap();
        assert_eq!(back.grid, m.grid);
        assert_eq!(back.r1, m.r1);
    }
}
