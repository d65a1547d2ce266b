//! Explicit sweepouts of space-form balls.
//!
//! The equatorial family slices `B^n_{R;K}` by totally geodesic `k`-planes
//! orthogonal to a fixed diameter; its largest slice is the equatorial
//! `k`-ball and certifies the upper bound for the width.
//!
//! For `n = 2, k = 1` the module also tightens discrete families of curves
//! in a geodesic disk. Curves are polylines in the projective chart of the
//! disk (Euclidean, gnomonic for `K > 0`, Beltrami–Klein for `K < 0`), in
//! which chart segments are geodesic segments, so a polyline's length is
//! the sum of exact geodesic distances between consecutive vertices.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spaceform::{ball_area, cs, slice_radius, sn, Curvature, SpaceFormBall, WarpedProfile};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SliceSample {
    pub t: f64,
    pub radius: f64,
    pub area: f64,
}

/// Areas of the totally geodesic slices orthogonal to a diameter.
#[derive(Debug, Clone, Serialize)]
pub struct SliceFamily {
    pub ball: SpaceFormBall,
    pub samples: Vec<SliceSample>,
}

impl SliceFamily {
    pub fn max_area(&self) -> f64 {
        self.samples.iter().map(|s| s.area).fold(0.0, f64::max)
    }

    /// Offset of the largest slice (first one on ties).
    pub fn argmax_t(&self) -> f64 {
        let mut best = &self.samples[0];
        for s in &self.samples {
            if s.area > best.area {
                best = s;
            }
        }
        best.t
    }
}

/// Symmetric offsets `t ∈ [-R, R]`; an odd `count` includes `t = 0`.
pub fn offset_grid(radius: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count).map(|i| radius * (2.0 * i as f64 / (count - 1) as f64 - 1.0)).collect()
}

fn slice_area(ball: &SpaceFormBall, rho: f64) -> Result<f64> {
    if rho <= 0.0 {
        return Ok(0.0);
    }
    ball_area(ball.k, &WarpedProfile::space_form(ball.curvature, rho)?)
}

pub fn equatorial_family(ball: &SpaceFormBall, offsets: &[f64]) -> Result<SliceFamily> {
    let samples = offsets
        .iter()
        .map(|&t| {
            let radius = slice_radius(ball.radius, ball.curvature, t)?;
            Ok(SliceSample { t, radius, area: slice_area(ball, radius)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SliceFamily { ball: *ball, samples })
}

/// Largest slice area of the equatorial family, attained by the central
/// slice: an upper bound for the `k`-width of the ball.
pub fn width_upper_bound(ball: &SpaceFormBall) -> Result<f64> {
    slice_area(ball, slice_radius(ball.radius, ball.curvature, 0.0)?)
}

type P2 = [f64; 2];

/// Geodesic disk `B²_{R;K}` seen through its projective chart.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GeodesicDisk {
    pub curvature: Curvature,
    pub radius: f64,
}

impl GeodesicDisk {
    pub fn new(curvature: Curvature, radius: f64) -> Result<Self> {
        SpaceFormBall::new(2, 1, radius, curvature)?;
        Ok(Self { curvature, radius })
    }

    /// Euclidean radius of the disk in the chart, `sn_K(R) / cs_K(R)`.
    pub fn chart_radius(&self) -> f64 {
        sn(self.curvature, self.radius) / cs(self.curvature, self.radius)
    }

    /// Geodesic distance from the centre of the chart point `x`.
    pub fn radius_of(&self, x: P2) -> f64 {
        let rho = x[0].hypot(x[1]);
        let kv = self.curvature.0;
        if kv == 0.0 {
            rho
        } else {
            let s = kv.abs().sqrt();
            if kv > 0.0 {
                (s * rho).atan() / s
            } else {
                (s * rho).min(1.0 - 1e-16).atanh() / s
            }
        }
    }

    fn lift(&self, x: P2) -> [f64; 3] {
        let kv = self.curvature.0;
        let s = kv.abs().sqrt();
        let a = (1.0 + kv * (x[0] * x[0] + x[1] * x[1])).sqrt();
        [s * x[0] / a, s * x[1] / a, 1.0 / a]
    }

    /// Geodesic distance between chart points.
    pub fn distance(&self, x: P2, y: P2) -> f64 {
        let kv = self.curvature.0;
        if kv == 0.0 {
            return (x[0] - y[0]).hypot(x[1] - y[1]);
        }
        let s = kv.abs().sqrt();
        let (u, v) = (self.lift(x), self.lift(y));
        let d = [u[0] - v[0], u[1] - v[1], u[2] - v[2]];
        if kv > 0.0 {
            let chord = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            2.0 / s * (0.5 * chord).min(1.0).asin()
        } else {
            let chord = (d[0] * d[0] + d[1] * d[1] - d[2] * d[2]).max(0.0).sqrt();
            2.0 / s * (0.5 * chord).asinh()
        }
    }

    /// Gradient of `distance(x, y)` with respect to `x`.
    fn distance_grad(&self, x: P2, y: P2) -> P2 {
        let kv = self.curvature.0;
        let d = self.distance(x, y);
        if d < 1e-14 {
            return [0.0, 0.0];
        }
        if kv == 0.0 {
            return [(x[0] - y[0]) / d, (x[1] - y[1]) / d];
        }
        let a = 1.0 + kv * (x[0] * x[0] + x[1] * x[1]);
        let b = 1.0 + kv * (y[0] * y[0] + y[1] * y[1]);
        let sab = (a * b).sqrt();
        let c = (1.0 + kv * (x[0] * y[0] + x[1] * y[1])) / sab;
        let snd = sn(self.curvature, d);
        [-(y[0] / sab - c * x[0] / a) / snd, -(y[1] / sab - c * x[1] / a) / snd]
    }

    pub fn curve_length(&self, curve: &[P2]) -> f64 {
        curve.windows(2).map(|w| self.distance(w[0], w[1])).sum()
    }

    fn project_to_boundary(&self, x: P2) -> P2 {
        let rho = self.chart_radius();
        let n = x[0].hypot(x[1]);
        [x[0] * rho / n, x[1] * rho / n]
    }
}

/// Discrete one-parameter family of curves in a geodesic disk with both
/// endpoints on the boundary circle.
#[derive(Debug, Clone)]
pub struct PolylineSweepout {
    pub disk: GeodesicDisk,
    /// Family parameter `s ∈ [0, 1]`, increasing.
    pub params: Vec<f64>,
    pub curves: Vec<Vec<P2>>,
}

impl PolylineSweepout {
    pub fn lengths(&self) -> Vec<f64> {
        self.curves.iter().map(|c| self.disk.curve_length(c)).collect()
    }

    pub fn max_length(&self) -> f64 {
        self.lengths().into_iter().fold(0.0, f64::max)
    }

    /// Straight chart chords `x = ρ cos(πs)`: geodesic chords orthogonal to
    /// a diameter.
    pub fn chords(disk: GeodesicDisk, curves: usize, vertices: usize) -> Result<Self> {
        Self::from_generator(disk, curves, vertices, |p, t| {
            let c = (1.0 - p * p).max(0.0).sqrt();
            [p, c * (2.0 * t - 1.0)]
        })
    }

    /// Circular arcs through the chord endpoints bulging in `+x`, with the
    /// central arc of Euclidean length `max_ratio` times the diameter.
    pub fn bulging_arcs(disk: GeodesicDisk, curves: usize, vertices: usize, max_ratio: f64) -> Result<Self> {
        if !(1.0..PI / 2.0).contains(&max_ratio) {
            return Err(Error::InvalidInput(format!("arc length ratio must lie in [1, pi/2), got {max_ratio}")));
        }
        // θ / sin θ = ratio on (0, π/2]
        let (mut lo, mut hi) = (0.0_f64, PI / 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = if mid == 0.0 { 1.0 } else { mid / mid.sin() };
            if v < max_ratio {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let sigma0 = (0.5 * lo).tan();
        Self::from_generator(disk, curves, vertices, move |p, t| {
            let c = (1.0 - p * p).max(0.0).sqrt();
            let sigma = sigma0.min(0.9 * ((1.0 - p) / (1.0 + p)).max(0.0).sqrt());
            if c == 0.0 || sigma == 0.0 {
                return [p, c * (2.0 * t - 1.0)];
            }
            let theta = 2.0 * sigma.atan();
            let rad = c / theta.sin();
            // arc centre sits on the chord's axis, behind the chord
            let centre = p - rad * theta.cos();
            let phi = theta * (2.0 * t - 1.0);
            [centre + rad * phi.cos(), rad * phi.sin()]
        })
    }

    /// Chart chords with a smooth bump of relative amplitude `amplitude`.
    pub fn perturbed_chords(disk: GeodesicDisk, curves: usize, vertices: usize, amplitude: f64) -> Result<Self> {
        Self::from_generator(disk, curves, vertices, move |p, t| {
            let c = (1.0 - p * p).max(0.0).sqrt();
            [p + amplitude * c * c * (PI * t).sin(), c * (2.0 * t - 1.0)]
        })
    }

    /// Builds a family from a generator on the unit chart disk: `g(p, t)`
    /// gives the point at curve parameter `t ∈ [0,1]` of the curve whose
    /// chord sits at `p = cos(πs)`.
    fn from_generator<G: Fn(f64, f64) -> P2>(disk: GeodesicDisk, curves: usize, vertices: usize, g: G) -> Result<Self> {
        if curves < 3 || vertices < 3 {
            return Err(Error::InvalidInput("need at least 3 curves and 3 vertices".into()));
        }
        let rho = disk.chart_radius();
        let mut params = Vec::with_capacity(curves);
        let mut out = Vec::with_capacity(curves);
        for j in 0..curves {
            let s = j as f64 / (curves - 1) as f64;
            let p = (PI * s).cos();
            let mut curve: Vec<P2> = (0..vertices)
                .map(|i| {
                    let q = g(p, i as f64 / (vertices - 1) as f64);
                    [q[0] * rho, q[1] * rho]
                })
                .collect();
            let last = vertices - 1;
            if curve[0][0].hypot(curve[0][1]) > 0.0 {
                curve[0] = disk.project_to_boundary(curve[0]);
                curve[last] = disk.project_to_boundary(curve[last]);
            }
            params.push(s);
            out.push(curve);
        }
        let family = Self { disk, params, curves: out };
        family.validate(&CoveringGrid::default())?;
        Ok(family)
    }

    /// Checks the sweepout invariants: endpoints on the boundary, vertices
    /// in the disk, degenerate first and last curves, covering.
    pub fn validate(&self, grid: &CoveringGrid) -> Result<()> {
        let rho = self.disk.chart_radius();
        if self.curves.len() < 3 || self.curves.len() != self.params.len() {
            return Err(Error::Sweepout("family needs at least 3 curves with parameters".into()));
        }
        for (j, c) in self.curves.iter().enumerate() {
            if c.len() < 2 {
                return Err(Error::Sweepout(format!("curve {j} has fewer than 2 vertices")));
            }
            for end in [c[0], c[c.len() - 1]] {
                let r = end[0].hypot(end[1]);
                if (r - rho).abs() > 1e-10 * rho.max(1.0) {
                    return Err(Error::Sweepout(format!("curve {j} endpoint off the boundary by {:e}", r - rho)));
                }
            }
            if c.iter().any(|x| x[0].hypot(x[1]) > rho * (1.0 + 1e-12)) {
                return Err(Error::Sweepout(format!("curve {j} leaves the disk")));
            }
        }
        let lengths = self.lengths();
        if lengths[0] > 1e-9 || lengths[lengths.len() - 1] > 1e-9 {
            return Err(Error::Sweepout("first and last curves must degenerate to boundary points".into()));
        }
        let cov = grid.coverage(self);
        if cov.uncovered > 0 {
            return Err(Error::Sweepout(format!(
                "family does not cover the disk: {} of {} cells missed",
                cov.uncovered, cov.cells
            )));
        }
        Ok(())
    }

    /// CSV with one row per curve: `s,length,vertices` where vertices are
    /// `x y` pairs separated by `;`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,length,vertices\n");
        for (s, c) in self.params.iter().zip(&self.curves) {
            let verts: Vec<String> = c.iter().map(|x| format!("{:.15e} {:.15e}", x[0], x[1])).collect();
            let _ = writeln!(out, "{:.15e},{:.15e},{}", s, self.disk.curve_length(c), verts.join(";"));
        }
        out
    }
}

/// Polar `N × N` cell grid used as the covering surrogate for the
/// sweepout condition.
#[derive(Debug, Clone, Copy)]
pub struct CoveringGrid {
    pub cells: usize,
}

impl Default for CoveringGrid {
    fn default() -> Self {
        Self { cells: 8 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Coverage {
    pub cells: usize,
    pub uncovered: usize,
}

impl CoveringGrid {
    fn cell_of(&self, disk: &GeodesicDisk, x: P2) -> usize {
        let n = self.cells;
        let r = disk.radius_of(x) / disk.radius;
        let band = ((r * n as f64) as usize).min(n - 1);
        let ang = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
        let sector = ((ang / (2.0 * PI) * n as f64) as usize).min(n - 1);
        band * n + sector
    }

    pub fn coverage(&self, family: &PolylineSweepout) -> Coverage {
        let n = self.cells;
        let disk = &family.disk;
        let rho = disk.chart_radius();
        let base = rho / (4.0 * n as f64);
        let mut hit = vec![false; n * n];
        for c in &family.curves {
            hit[self.cell_of(disk, c[0])] = true;
            for w in c.windows(2) {
                let (a, b) = (w[0], w[1]);
                let d = [b[0] - a[0], b[1] - a[1]];
                let len = d[0].hypot(d[1]);
                if len == 0.0 {
                    continue;
                }
                // closest approach to the centre sets the sampling density
                let t0 = (-(a[0] * d[0] + a[1] * d[1]) / (len * len)).clamp(0.0, 1.0);
                let near = (a[0] + t0 * d[0]).hypot(a[1] + t0 * d[1]);
                let step = base.min(near.max(rho / (2.0 * n as f64)) * (2.0 * PI / n as f64) / 4.0);
                let m = (len / step).ceil() as usize;
                for i in 1..=m {
                    let t = i as f64 / m as f64;
                    hit[self.cell_of(disk, [a[0] + t * d[0], a[1] + t * d[1]])] = true;
                }
            }
        }
        Coverage { cells: n * n, uncovered: hit.iter().filter(|h| !**h).count() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TightenOptions {
    /// Explicit step as a multiple of the squared minimal chart edge length.
    pub cfl: f64,
    pub redistribute_every: usize,
    /// Adjacent curves further apart than this fraction of the chart radius
    /// get a midpoint curve inserted between them.
    pub max_gap: f64,
    pub max_curves: usize,
    pub grid: CoveringGrid,
    /// Stop once the max length drops by less than this (relative) over
    /// `stall_window` steps. Zero disables early stopping.
    pub stall_tol: f64,
    pub stall_window: usize,
}

impl Default for TightenOptions {
    fn default() -> Self {
        Self {
            cfl: 0.25,
            redistribute_every: 10,
            max_gap: 0.04,
            max_curves: 600,
            grid: CoveringGrid::default(),
            stall_tol: 1e-5,
            stall_window: 50,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TightenTrace {
    /// Max curve length before the first step and after every step.
    pub max_length: Vec<f64>,
    pub curve_count: Vec<usize>,
    pub stop: StopReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    StepLimit,
    /// Max length stopped decreasing.
    Stalled,
    /// Keeping the covering would have raised the max length.
    Barrier,
}

impl TightenTrace {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,max_length,curves\n");
        for (i, (m, c)) in self.max_length.iter().zip(&self.curve_count).enumerate() {
            let _ = writeln!(out, "{i},{m:.15e},{c}");
        }
        out
    }

    /// Largest increase between consecutive entries (non-positive when the
    /// trace is monotone).
    pub fn max_increase(&self) -> f64 {
        self.max_length.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// One explicit curve-shortening step with sliding endpoints. Only accepted
/// if it does not increase the length; returns the new length.
fn shorten_step(disk: &GeodesicDisk, curve: &mut Vec<P2>, cfl: f64) -> f64 {
    let old = disk.curve_length(curve);
    let m = curve.len();
    if old < 1e-12 {
        return old;
    }
    let mut grad = vec![[0.0; 2]; m];
    let mut h = vec![0.0; m - 1];
    let mut hmin = f64::INFINITY;
    for i in 0..m - 1 {
        let (a, b) = (curve[i], curve[i + 1]);
        let ga = disk.distance_grad(a, b);
        let gb = disk.distance_grad(b, a);
        grad[i][0] += ga[0];
        grad[i][1] += ga[1];
        grad[i + 1][0] += gb[0];
        grad[i + 1][1] += gb[1];
        h[i] = (a[0] - b[0]).hypot(a[1] - b[1]);
        if h[i] > 0.0 {
            hmin = hmin.min(h[i]);
        }
    }
    if !hmin.is_finite() {
        return old;
    }
    let mass: Vec<f64> = (0..m)
        .map(|i| {
            let left = if i > 0 { h[i - 1] } else { 0.0 };
            let right = if i + 1 < m { h[i] } else { 0.0 };
            (0.5 * (left + right)).max(hmin)
        })
        .collect();
    let mut tau = cfl * hmin * hmin;
    for _ in 0..30 {
        let mut trial = curve.clone();
        for i in 0..m {
            let scale = tau / mass[i];
            if i == 0 || i == m - 1 {
                let x = curve[i];
                let n = x[0].hypot(x[1]);
                let t = [-x[1] / n, x[0] / n];
                let gt = grad[i][0] * t[0] + grad[i][1] * t[1];
                trial[i] = disk.project_to_boundary([x[0] - scale * gt * t[0], x[1] - scale * gt * t[1]]);
            } else {
                trial[i] = [curve[i][0] - scale * grad[i][0], curve[i][1] - scale * grad[i][1]];
            }
        }
        let new = disk.curve_length(&trial);
        if new <= old {
            *curve = trial;
            return new;
        }
        tau *= 0.5;
    }
    old
}

/// Resamples a polyline at equal chart arclength. New vertices lie on the
/// old chart segments, hence on the old geodesic polygon.
fn redistribute(curve: &[P2]) -> Vec<P2> {
    let m = curve.len();
    let mut cum = vec![0.0; m];
    for i in 1..m {
        cum[i] = cum[i - 1] + (curve[i][0] - curve[i - 1][0]).hypot(curve[i][1] - curve[i - 1][1]);
    }
    let total = cum[m - 1];
    if total == 0.0 {
        return curve.to_vec();
    }
    let mut out = Vec::with_capacity(m);
    out.push(curve[0]);
    let mut seg = 0;
    for i in 1..m - 1 {
        let target = total * i as f64 / (m - 1) as f64;
        while seg < m - 2 && cum[seg + 1] < target {
            seg += 1;
        }
        let span = cum[seg + 1] - cum[seg];
        let t = if span > 0.0 { (target - cum[seg]) / span } else { 0.0 };
        let (a, b) = (curve[seg], curve[seg + 1]);
        out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
    }
    out.push(curve[m - 1]);
    out
}

fn vertex_gap(a: &[P2], b: &[P2]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x[0] - y[0]).hypot(x[1] - y[1])).fold(0.0, f64::max)
}

fn midpoint_curve(disk: &GeodesicDisk, a: &[P2], b: &[P2]) -> Vec<P2> {
    let m = a.len();
    let mut out: Vec<P2> = a.iter().zip(b).map(|(x, y)| [0.5 * (x[0] + y[0]), 0.5 * (x[1] + y[1])]).collect();
    for i in [0, m - 1] {
        let x = out[i];
        out[i] = if x[0].hypot(x[1]) > 1e-9 * disk.chart_radius() { disk.project_to_boundary(x) } else { a[i] };
    }
    out
}

/// Tightens every curve of the family by discrete free-boundary curve
/// shortening for at most `steps` iterations.
///
/// Each curve's length is non-increasing per step. Where neighbouring
/// curves drift apart a midpoint curve is inserted, shortened first if
/// needed so that it does not raise the family maximum. The covering
/// surrogate is checked after every step.
pub fn tighten_1sweepout(init: &PolylineSweepout, steps: usize, opts: &TightenOptions) -> Result<(PolylineSweepout, TightenTrace)> {
    init.validate(&opts.grid)?;
    let disk = init.disk;
    let rho = disk.chart_radius();
    let mut family = init.clone();
    let mut lengths = family.lengths();
    let mut trace = TightenTrace {
        max_length: vec![max_of(&lengths)],
        curve_count: vec![family.curves.len()],
        stop: StopReason::StepLimit,
    };

    for step in 1..=steps {
        let previous_max = trace.max_length[step - 1];
        let snapshot = family.clone();
        for (curve, len) in family.curves.iter_mut().zip(lengths.iter_mut()) {
            *len = shorten_step(&disk, curve, opts.cfl);
            if step % opts.redistribute_every == 0 && *len > 1e-12 {
                let resampled = redistribute(curve);
                let l2 = disk.curve_length(&resampled);
                if l2 <= *len {
                    *curve = resampled;
                    *len = l2;
                }
            }
        }
        let mut ok = refine_family(&mut family, &mut lengths, previous_max, opts.max_gap * rho, opts)?;
        let mut cov = opts.grid.coverage(&family);
        let mut gap = opts.max_gap * rho;
        while ok && cov.uncovered > 0 && gap > 1e-4 * rho {
            gap *= 0.5;
            ok = refine_family(&mut family, &mut lengths, previous_max, gap, opts)?;
            cov = opts.grid.coverage(&family);
        }
        if !ok || cov.uncovered > 0 {
            // the family cannot move on without raising its maximum or
            // tearing: keep the last admissible family
            family = snapshot;
            trace.stop = StopReason::Barrier;
            break;
        }
        trace.max_length.push(max_of(&lengths));
        trace.curve_count.push(family.curves.len());
        let w = opts.stall_window;
        if opts.stall_tol > 0.0 && w > 0 && step >= w {
            let old = trace.max_length[step - w];
            if old - trace.max_length[step] <= opts.stall_tol * old {
                trace.stop = StopReason::Stalled;
                break;
            }
        }
    }
    Ok((family, trace))
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

/// Inserts midpoint curves between neighbours further apart than `gap`.
/// Returns `false` if an inserted curve could not be brought under `ceiling`.
fn refine_family(family: &mut PolylineSweepout, lengths: &mut Vec<f64>, ceiling: f64, gap: f64, opts: &TightenOptions) -> Result<bool> {
    let disk = family.disk;
    let mut j = 0;
    while j + 1 < family.curves.len() {
        if vertex_gap(&family.curves[j], &family.curves[j + 1]) <= gap {
            j += 1;
            continue;
        }
        if family.curves.len() >= opts.max_curves {
            return Err(Error::Sweepout(format!("family refinement exceeded {} curves", opts.max_curves)));
        }
        let mut mid = redistribute(&midpoint_curve(&disk, &family.curves[j], &family.curves[j + 1]));
        let mut len = disk.curve_length(&mid);
        let mut guard = 0;
        while len > ceiling && guard < 5000 {
            len = shorten_step(&disk, &mut mid, opts.cfl);
            guard += 1;
        }
        if len > ceiling {
            return Ok(false);
        }
        let s = 0.5 * (family.params[j] + family.params[j + 1]);
        family.curves.insert(j + 1, mid);
        family.params.insert(j + 1, s);
        lengths.insert(j + 1, len);
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn width_bound_matches_ball_area() {
        for &(kv, r) in &[(0.0, 1.0), (-1.0, 1.0), (1.0, PI / 2.0), (0.3, 2.0)] {
            let ball = SpaceFormBall::new(4, 2, r, Curvature(kv)).unwrap();
            let bound = width_upper_bound(&ball).unwrap();
            assert_eq!(bound, ball_area(2, &ball.profile()).unwrap());
            let fam = equatorial_family(&ball, &offset_grid(r, 65)).unwrap();
            assert!(fam.max_area() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn equatorial_examples() {
        let ball = SpaceFormBall::new(3, 2, 1.0, Curvature(0.0)).unwrap();
        let fam = equatorial_family(&ball, &[-1.0, -0.5, 0.0, 0.3, 1.0]).unwrap();
        for s in &fam.samples {
            assert!((s.area - PI * (1.0 - s.t * s.t)).abs() < 1e-10, "{s:?}");
        }
        assert_eq!(fam.samples[0].area, 0.0);
        assert_eq!(fam.argmax_t(), 0.0);

        let ball = SpaceFormBall::new(3, 2, 1.0, Curvature(-1.0)).unwrap();
        let w = width_upper_bound(&ball).unwrap();
        assert!((w - 2.0 * PI * (1f64.cosh() - 1.0)).abs() < 1e-9);

        let ball = SpaceFormBall::new(5, 1, 0.7, Curvature(-3.0)).unwrap();
        assert_eq!(width_upper_bound(&ball).unwrap(), 1.4);
    }

    #[test]
    fn chart_distance_matches_radius() {
        for &kv in &[-1.0, 0.0, 0.5] {
            let disk = GeodesicDisk::new(Curvature(kv), 1.0).unwrap();
            let rho = disk.chart_radius();
            assert!((disk.distance([0.0, 0.0], [rho, 0.0]) - 1.0).abs() < 1e-13);
            assert!((disk.distance([-rho, 0.0], [rho, 0.0]) - 2.0).abs() < 1e-13);
            assert!((disk.radius_of([0.0, rho]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_gradient_matches_finite_differences() {
        for &kv in &[-1.0, 0.0, 0.5] {
            let disk = GeodesicDisk::new(Curvature(kv), 1.0).unwrap();
            let x = [0.2, -0.1];
            let y = [-0.3, 0.35];
            let g = disk.distance_grad(x, y);
            let h = 1e-6;
            for i in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[i] += h;
                xm[i] -= h;
                let fd = (disk.distance(xp, y) - disk.distance(xm, y)) / (2.0 * h);
                assert!((fd - g[i]).abs() < 1e-8, "K={kv} i={i} fd={fd} g={}", g[i]);
            }
        }
    }

    #[test]
    fn initial_families_are_valid() {
        let disk = GeodesicDisk::new(Curvature(0.0), 1.0).unwrap();
        let arcs = PolylineSweepout::bulging_arcs(disk, 41, 33, 1.2).unwrap();
        let mid = arcs.lengths()[20];
        assert!((mid - 2.4).abs() < 2e-3, "mid = {mid}");
        assert!((arcs.max_length() - 2.4).abs() < 2e-3);
        let chords = PolylineSweepout::chords(disk, 41, 17).unwrap();
        assert!((chords.max_length() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_covering_family_rejected() {
        let disk = GeodesicDisk::new(Curvature(0.0), 1.0).unwrap();
        let mut fam = PolylineSweepout::chords(disk, 41, 17).unwrap();
        // drop the middle third of the family
        fam.curves.drain(14..28);
        fam.params.drain(14..28);
        assert!(matches!(fam.validate(&CoveringGrid::default()), Err(Error::Sweepout(_))));
    }

    #[test]
    fn redistribution_never_lengthens() {
        let curve = vec![[0.0, 0.0], [0.1, 0.5], [0.11, 0.52], [0.9, 0.1], [1.0, 1.0]];
        let disk = GeodesicDisk::new(Curvature(-1.0), 2.0).unwrap();
        let before = disk.curve_length(&curve);
        let after = disk.curve_length(&redistribute(&curve));
        assert!(after <= before + 1e-15);
    }
}
