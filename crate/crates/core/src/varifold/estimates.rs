use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::{brendle_y, pairwise_sum, DiscreteVarifold};
use crate::error::{Error, Result};
use crate::spaceform::unit_ball_volume;

/// Piecewise-linear cutoff: 0 on `[0, r]`, 1 beyond `(1+ε)r`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CutoffProfile {
    pub r: f64,
    pub eps: f64,
}

impl CutoffProfile {
    pub fn new(r: f64, eps: f64) -> Result<Self> {
        if !(r > 0.0 && eps > 0.0) {
            return Err(Error::InvalidInput(format!("cutoff needs r, eps > 0, got r={r}, eps={eps}")));
        }
        Ok(Self { r, eps })
    }

    pub fn eta(&self, t: f64) -> f64 {
        ((t - self.r) / (self.eps * self.r)).clamp(0.0, 1.0)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        if t > self.r && t < (1.0 + self.eps) * self.r {
            1.0 / (self.eps * self.r)
        } else {
            0.0
        }
    }
}

/// Extrapolates `f(r) = f0 + c r` to `r = 0` from two radii.
fn linear_to_zero(r1: f64, f1: f64, r2: f64, f2: f64) -> f64 {
    (f2 * r1 - f1 * r2) / (r1 - r2)
}

#[derive(Debug, Clone, Serialize)]
pub struct DensityReport {
    pub point: Vec<f64>,
    pub radii: Vec<f64>,
    pub ratios: Vec<f64>,
    pub raw: f64,
    pub modified: f64,
    pub boundary: bool,
}

/// Tolerance between successive extrapolated density estimates.
pub const DENSITY_CONVERGENCE_TOL: f64 = 0.1;

/// `Θ^k(‖V‖, x)` from the mass ratios `‖V‖(B_r(x)) / (α_k r^k)` on a
/// decreasing radius schedule, extrapolated linearly to `r = 0`.
pub fn density(v: &DiscreteVarifold, x: &DVector<f64>, radii: &[f64]) -> Result<DensityReport> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(Error::InvalidInput("radius schedule must be positive and strictly decreasing".into()));
    }
    let ak = unit_ball_volume(v.k);
    let ratios: Vec<f64> = radii.iter().map(|&r| v.smoothed_mass_in_ball(x, r) / (ak * r.powi(v.k as i32))).collect();
    let est: Vec<f64> =
        (0..radii.len() - 1).map(|i| linear_to_zero(radii[i], ratios[i], radii[i + 1], ratios[i + 1])).collect();
    let raw = est[est.len() - 1];
    if est.len() >= 2 {
        let prev = est[est.len() - 2];
        if (raw - prev).abs() > DENSITY_CONVERGENCE_TOL {
            return Err(Error::DensityNotConverged(prev, raw));
        }
    }
    let raw = raw.max(0.0);
    let boundary = x.norm() >= 1.0 - 1e-9;
    Ok(DensityReport {
        point: x.iter().copied().collect(),
        radii: radii.to_vec(),
        ratios,
        raw,
        modified: if boundary { 2.0 * raw } else { raw },
        boundary,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityRow {
    pub s: f64,
    pub t: f64,
    pub literal_diff: f64,
    pub weighted_diff: f64,
    pub annulus_integral: f64,
    pub discretisation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityReport {
    pub gamma: f64,
    pub rows: Vec<MonotonicityRow>,
    /// Smallest `weighted_diff − annulus_integral + 2·discretisation`.
    pub min_margin: f64,
    pub pass: bool,
}

/// Boundary monotonicity on consecutive radii `s < t` of `radii`.
///
/// Compares the increment of `e^{γt} ‖V‖(B_t(y)) / t^k` with
/// `∫_{A_{s,t}} |D_S^⊥ρ|² / ((1+γρ)ρ^k) dV`, allowing twice the mass of
/// atoms within one atom scale of either sphere as discretisation error.
/// The unweighted increment is reported alongside.
pub fn monotonicity_check(v: &DiscreteVarifold, y: &DVector<f64>, radii: &[f64], gamma: f64) -> Result<MonotonicityReport> {
    if radii.len() < 2 || radii.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) {
        return Err(Error::InvalidInput("radii must be positive and strictly increasing".into()));
    }
    let k = v.k as i32;
    let h = v.atom_scale();
    let ratio = |t: f64| v.smoothed_mass_in_ball(y, t) / t.powi(k);
    let shell = |t: f64| {
        let m: Vec<f64> = v.atoms.iter().filter(|a| ((&a.x - y).norm() - t).abs() < h).map(|a| a.w).collect();
        (gamma * t).exp() * pairwise_sum(&m) / t.powi(k)
    };
    let mut rows = Vec::new();
    let mut min_margin = f64::INFINITY;
    for w in radii.windows(2) {
        let (s, t) = (w[0], w[1]);
        let (rs, rt) = (ratio(s), ratio(t));
        let terms: Vec<f64> = v
            .atoms
            .iter()
            .filter_map(|a| {
                let z = &a.x - y;
                let rho = z.norm();
                (rho >= s && rho < t).then(|| a.w * a.normal_sq(&z) / (rho * rho) / ((1.0 + gamma * rho) * rho.powi(k)))
            })
            .collect();
        let annulus_integral = pairwise_sum(&terms);
        let weighted_diff = (gamma * t).exp() * rt - (gamma * s).exp() * rs;
        let discretisation = shell(s) + shell(t);
        let margin = weighted_diff - annulus_integral + 2.0 * discretisation;
        min_margin = min_margin.min(margin);
        rows.push(MonotonicityRow {
            s,
            t,
            literal_diff: rt - rs,
            weighted_diff,
            annulus_integral,
            discretisation,
            pass: margin >= 0.0,
        });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(MonotonicityReport { gamma, rows, min_margin, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineOptions {
    /// Cutoff radii, decreasing; the last two drive the extrapolation.
    pub radii: Vec<f64>,
    pub eps: Vec<f64>,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { radii: vec![0.4, 0.2], eps: vec![0.5, 0.25, 0.125] }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineCell {
    pub r: f64,
    pub eps: f64,
    /// `∫ η'(ρ) ρ^{1−k} dV`.
    pub lhs: f64,
    /// `∫ η(ρ) div_S Y dV`.
    pub t1: f64,
    /// `∫ η'(ρ) ρ^{1−k} |D_S^⊥ρ|² dV`.
    pub t2: f64,
    /// `∫ η'(ρ) |Y + Dρ/ρ^{k−1}| dV`.
    pub t3: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub y: Vec<f64>,
    pub k: usize,
    pub mass: f64,
    pub cells: Vec<PipelineCell>,
    /// `r → 0` limits of the left-hand side, one per `ε`.
    pub lhs_by_eps: Vec<(f64, f64)>,
    pub t2_by_eps: Vec<(f64, f64)>,
    pub t3_by_eps: Vec<(f64, f64)>,
    /// `lim_{ε→0} lim_{r→0}` of the left-hand side, i.e. `k α_k Θ`.
    pub lhs_limit: f64,
    pub density: f64,
    /// Implied lower bound `M(V) ≥ 2 α_k Θ`.
    pub implied_bound: f64,
    /// `M(V) − implied_bound`.
    pub slack: f64,
    /// `max (T1 − (k/2) M(V))` over the cells; non-positive when the
    /// divergence bound holds.
    pub t1_excess: f64,
    /// `max (LHS − T1 − T2 − T3)` over the cells.
    pub closure: f64,
    /// Direct density estimate at `y` for cross-checking.
    pub direct_density: DensityReport,
}

struct AtomTerms {
    idx: usize,
    rho: f64,
    w: f64,
    div: f64,
    normal_sq: f64,
    remainder: f64,
}

/// Evaluates the boundary area estimate at `y` on a discrete varifold.
///
/// Every term is computed per cutoff `(r, ε)`; the left-hand side is then
/// extrapolated linearly to `r = 0` from the two smallest radii and by a
/// least-squares line in `ε` to `ε = 0`. The limit equals `k α_k Θ(y)`,
/// giving the bound `M(V) ≥ 2 α_k Θ(y)`.
pub fn fb_estimate_pipeline(v: &DiscreteVarifold, y: &DVector<f64>, opts: &PipelineOptions) -> Result<PipelineReport> {
    let k = v.k;
    if opts.radii.len() < 2 || opts.eps.len() < 2 {
        return Err(Error::InvalidInput("pipeline needs at least two radii and two eps values".into()));
    }
    let rmin = opts.radii.iter().copied().fold(f64::INFINITY, f64::min);
    let mut terms = Vec::with_capacity(v.atoms.len());
    for (idx, a) in v.atoms.iter().enumerate() {
        let z = &a.x - y;
        let rho = z.norm();
        if rho <= 0.5 * rmin {
            continue;
        }
        let f = brendle_y(y, k, &a.x)?;
        let dir = &z / rho;
        let remainder = (&f.value + &z / rho.powi(k as i32)).norm();
        terms.push(AtomTerms { idx, rho, w: a.w, div: a.div(&f.jacobian), normal_sq: a.normal_sq(&dir), remainder });
    }
    let mass = v.mass();
    let mut cells = Vec::new();
    for &eps in &opts.eps {
        for &r in &opts.radii {
            let cut = CutoffProfile::new(r, eps)?;
            let mut lhs = Vec::new();
            let mut t1 = Vec::new();
            let mut t2 = Vec::new();
            let mut t3 = Vec::new();
            for t in &terms {
                // η' is an annulus indicator; integrate it over the atom's disk
                let a = &v.atoms[t.idx];
                let d = (a.ball_fraction(y, (1.0 + eps) * r, k) - a.ball_fraction(y, r, k)) / (eps * r);
                t1.push(t.w * cut.eta(t.rho) * t.div);
                if d > 0.0 {
                    let base = t.w * d * t.rho.powi(1 - k as i32);
                    lhs.push(base);
                    t2.push(base * t.normal_sq);
                    t3.push(t.w * d * t.remainder);
                }
            }
            cells.push(PipelineCell {
                r,
                eps,
                lhs: pairwise_sum(&lhs),
                t1: pairwise_sum(&t1),
                t2: pairwise_sum(&t2),
                t3: pairwise_sum(&t3),
            });
        }
    }
    let nr = opts.radii.len();
    let limit = |pick: fn(&PipelineCell) -> f64| -> Vec<(f64, f64)> {
        opts.eps
            .iter()
            .enumerate()
            .map(|(i, &eps)| {
                let row = &cells[i * nr..(i + 1) * nr];
                let (a, b) = (&row[nr - 2], &row[nr - 1]);
                (eps, linear_to_zero(a.r, pick(a), b.r, pick(b)))
            })
            .collect()
    };
    let lhs_by_eps = limit(|c| c.lhs);
    let t2_by_eps = limit(|c| c.t2);
    let t3_by_eps = limit(|c| c.t3);
    let lhs_limit = least_squares_intercept(&lhs_by_eps);
    let ak = unit_ball_volume(k);
    let density = lhs_limit / (k as f64 * ak);
    let implied_bound = 2.0 * lhs_limit / k as f64;
    let t1_excess = cells.iter().map(|c| c.t1 - 0.5 * k as f64 * mass).fold(f64::NEG_INFINITY, f64::max);
    let closure = cells.iter().map(|c| c.lhs - c.t1 - c.t2 - c.t3).fold(f64::NEG_INFINITY, f64::max);
    let radii: Vec<f64> = opts.radii.clone();
    let direct_density = density_at(v, y, &radii)?;
    if !lhs_limit.is_finite() || (direct_density.raw - density).abs() > DENSITY_CONVERGENCE_TOL {
        return Err(Error::DensityNotConverged(direct_density.raw, density));
    }
    Ok(PipelineReport {
        y: y.iter().copied().collect(),
        k,
        mass,
        cells,
        lhs_by_eps,
        t2_by_eps,
        t3_by_eps,
        lhs_limit,
        density,
        implied_bound,
        slack: mass - implied_bound,
        t1_excess,
        closure,
        direct_density,
    })
}

fn density_at(v: &DiscreteVarifold, y: &DVector<f64>, radii: &[f64]) -> Result<DensityReport> {
    let mut r: Vec<f64> = radii.to_vec();
    r.sort_by(|a, b| b.total_cmp(a));
    r.dedup();
    density(v, y, &r)
}

fn least_squares_intercept(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    my - sxy / sxx * mx
}

/// `∫ |π_S^⊥(x−y)|² / |x−y|^{k+2} dV` over the atoms.
pub fn excess(v: &DiscreteVarifold, y: &DVector<f64>) -> f64 {
    let terms: Vec<f64> = v
        .atoms
        .iter()
        .filter_map(|a| {
            let z = &a.x - y;
            let rho = z.norm();
            (rho > 1e-12).then(|| a.w * a.normal_sq(&z) / rho.powi(v.k as i32 + 2))
        })
        .collect();
    pairwise_sum(&terms)
}

#[derive(Debug, Clone, Serialize)]
pub struct LemmaReport {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    /// `max (div_S Y − k/2 + k|π_S^⊥(x−y)|²/|x−y|^{k+2})`.
    pub max_violation: f64,
    /// The same, divided by `1 + |x−y|^{−k}`.
    pub max_relative_violation: f64,
}

/// Draws a point uniformly from `Bⁿ`.
pub fn random_ball_point<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    let g = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let r: f64 = rng.random::<f64>().powf(1.0 / n as f64);
    g.normalize() * r
}

pub fn random_sphere_point<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal)).normalize()
}

/// Uniformly random orthonormal `k`-frame in `ℝⁿ`.
pub fn random_frame<R: Rng>(n: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// Checks `div_S Y(x) ≤ k/2 − k|π_S^⊥(x−y)|²/|x−y|^{k+2}` at each sample.
pub fn check_lemma_properties(y: &DVector<f64>, k: usize, samples: &[(DVector<f64>, DMatrix<f64>)]) -> Result<LemmaReport> {
    let n = y.len();
    let mut max_violation = f64::NEG_INFINITY;
    let mut max_rel = f64::NEG_INFINITY;
    for (x, frame) in samples {
        let z = x - y;
        let rho = z.norm();
        if rho < 1e-6 {
            return Err(Error::InvalidInput(format!("sample within 1e-6 of the centre: |x-y| = {rho:e}")));
        }
        let f = brendle_y(y, k, x)?;
        let div = (frame.transpose() * &f.jacobian * frame).trace();
        let t = frame.transpose() * &z;
        let nsq = (z.norm_squared() - t.norm_squared()).max(0.0);
        let rhs = 0.5 * k as f64 - k as f64 * nsq / rho.powi(k as i32 + 2);
        let viol = div - rhs;
        max_violation = max_violation.max(viol);
        max_rel = max_rel.max(viol / (1.0 + rho.powi(-(k as i32))));
    }
    Ok(LemmaReport { n, k, samples: samples.len(), max_violation, max_relative_violation: max_rel })
}

/// Random `(x, S)` with `x` uniform in the ball, at distance at least
/// `1e-6` from `y`.
pub fn lemma_samples<R: Rng>(y: &DVector<f64>, k: usize, count: usize, rng: &mut R) -> Vec<(DVector<f64>, DMatrix<f64>)> {
    let n = y.len();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = random_ball_point(n, rng);
        if (&x - y).norm() >= 1e-6 {
            out.push((x, random_frame(n, k, rng)));
        }
    }
    out
}

/// Largest `|⟨Y(x), x⟩|` over random points of the sphere.
pub fn tangency_residual<R: Rng>(y: &DVector<f64>, k: usize, count: usize, rng: &mut R) -> Result<f64> {
    let mut worst = 0.0_f64;
    for _ in 0..count {
        let x = random_sphere_point(y.len(), rng);
        if (&x - y).norm() < 1e-6 {
            continue;
        }
        let v = brendle_y(y, k, &x)?.value;
        worst = worst.max(v.dot(&x).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayTable {
    /// `(t, e(t))`.
    pub rows: Vec<(f64, f64)>,
}

impl DecayTable {
    pub fn at(&self, t: f64) -> Option<f64> {
        self.rows.iter().find(|r| (r.0 - t).abs() < 1e-15).map(|r| r.1)
    }
}

/// The envelope `e(t) = max_{|x−y| ≤ t} |Y(x) + (x−y)/|x−y|^k| · |x−y|^{k−1}`
/// over random points on dyadic shells `2^{−j−1} < |x−y| ≤ 2^{−j}` of the
/// ball, `j = −1, …, depth`.
pub fn decay_table<R: Rng>(y: &DVector<f64>, k: usize, ts: &[f64], per_shell: usize, depth: usize, rng: &mut R) -> Result<DecayTable> {
    let n = y.len();
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for j in -1..=depth as i32 {
        let (lo, hi) = (2f64.powi(-j - 1), 2f64.powi(-j));
        let mut got = 0;
        let mut tries = 0;
        while got < per_shell && tries < 200 * per_shell {
            tries += 1;
            let dir = random_sphere_point(n, rng);
            let r = lo + (hi - lo) * rng.random::<f64>();
            let x = y + dir * r;
            if x.norm() > 1.0 {
                continue;
            }
            let z = &x - y;
            let rho = z.norm();
            let val = brendle_y(y, k, &x)?.value;
            let e = (&val + &z / rho.powi(k as i32)).norm() * rho.powi(k as i32 - 1);
            pts.push((rho, e));
            got += 1;
        }
    }
    let rows = ts.iter().map(|&t| (t, pts.iter().filter(|p| p.0 <= t).map(|p| p.1).fold(0.0, f64::max))).collect();
    Ok(DecayTable { rows })
}
