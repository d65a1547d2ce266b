use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{Atom, DiscreteVarifold};
use crate::error::{Error, Result};

/// Cells of the unit `k`-ball (`k ≤ 3`) at resolution `res`: returns
/// `(u, w)` with `u` a representative point and `w` the exact cell volume.
fn ball_cells(k: usize, res: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let n = res as f64;
    let mut out = Vec::new();
    match k {
        1 => {
            for j in 0..2 * res {
                out.push((vec![-1.0 + (j as f64 + 0.5) / n], 1.0 / n));
            }
        }
        2 => {
            for i in 0..res {
                let (r1, r2) = (i as f64 / n, (i + 1) as f64 / n);
                let m = (2.0 * PI * (i as f64 + 0.5)).ceil() as usize;
                let dth = 2.0 * PI / m as f64;
                // area centroid of an annular sector
                let half = 0.5 * dth;
                let rc = 2.0 / 3.0 * (r2.powi(3) - r1.powi(3)) / (r2 * r2 - r1 * r1) * half.sin() / half;
                let w = 0.5 * (r2 * r2 - r1 * r1) * dth;
                for j in 0..m {
                    let th = (j as f64 + 0.5) * dth;
                    out.push((vec![rc * th.cos(), rc * th.sin()], w));
                }
            }
        }
        3 => {
            for i in 0..res {
                let (r1, r2) = (i as f64 / n, (i + 1) as f64 / n);
                let rc = (0.5 * (r1.powi(3) + r2.powi(3))).cbrt();
                let bands = ((PI * (i as f64 + 0.5)).ceil() as usize).max(2);
                for b in 0..bands {
                    let (t1, t2) = (PI * b as f64 / bands as f64, PI * (b + 1) as f64 / bands as f64);
                    let tc = (0.5 * (t1.cos() + t2.cos())).acos();
                    let m = ((2.0 * PI * (i as f64 + 0.5) * tc.sin()).ceil() as usize).max(3);
                    let dph = 2.0 * PI / m as f64;
                    let w = (r2.powi(3) - r1.powi(3)) / 3.0 * (t1.cos() - t2.cos()) * dph;
                    for j in 0..m {
                        let ph = (j as f64 + 0.5) * dph;
                        out.push((vec![rc * tc.sin() * ph.cos(), rc * tc.sin() * ph.sin(), rc * tc.cos()], w));
                    }
                }
            }
        }
        _ => return Err(Error::InvalidInput(format!("flat ball fixtures support k <= 3, got {k}"))),
    }
    Ok(out)
}

/// The flat `k`-ball `Bⁿ ∩ (c + span(frame))`, with `c ⟂ span(frame)`.
pub fn flat_ball(frame: &DMatrix<f64>, center: &DVector<f64>, res: usize) -> Result<DiscreteVarifold> {
    let (n, k) = frame.shape();
    if res == 0 {
        return Err(Error::InvalidInput("resolution must be positive".into()));
    }
    if (frame.transpose() * center).amax() > 1e-12 {
        return Err(Error::InvalidInput("offset must be orthogonal to the plane".into()));
    }
    let rho2 = 1.0 - center.norm_squared();
    if rho2 <= 0.0 {
        return Err(Error::InvalidInput("plane misses the open unit ball".into()));
    }
    let rho = rho2.sqrt();
    let scale = rho.powi(k as i32);
    let atoms = ball_cells(k, res)?
        .into_iter()
        .map(|(u, w)| Atom { x: center + frame * DVector::from_vec(u) * rho, frame: frame.clone(), w: w * scale })
        .collect();
    DiscreteVarifold::new(n, k, atoms)
}

/// Coordinate frame `e_1, …, e_k` in `ℝⁿ`.
pub fn coordinate_frame(n: usize, k: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, k, |i, j| if i == j { 1.0 } else { 0.0 })
}

/// Equatorial `k`-disk `Bⁿ ∩ span(e_1..e_k)`.
pub fn equatorial_disk(n: usize, k: usize, res: usize) -> Result<DiscreteVarifold> {
    if k > n {
        return Err(Error::InvalidInput(format!("k = {k} exceeds n = {n}")));
    }
    flat_ball(&coordinate_frame(n, k), &DVector::zeros(n), res)
}

/// The equatorial disk with multiplicity two.
pub fn doubled_disk(n: usize, k: usize, res: usize) -> Result<DiscreteVarifold> {
    Ok(equatorial_disk(n, k, res)?.scale_weights(2.0))
}

/// The horizontal 2-disk `{x₃ = height} ∩ B³`.
pub fn offcenter_disk(height: f64, res: usize) -> Result<DiscreteVarifold> {
    flat_ball(&coordinate_frame(3, 2), &DVector::from_vec(vec![0.0, 0.0, height]), res)
}

/// Shape parameters of the critical catenoid
/// `(a cosh s cos θ, a cosh s sin θ, a s)`, `|s| ≤ s0`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct CatenoidParams {
    pub s0: f64,
    pub a: f64,
    /// Residual of the orthogonality condition `s0 tanh s0 = 1`.
    pub residual: f64,
}

impl CatenoidParams {
    pub fn area(&self) -> f64 {
        2.0 * PI * self.a * self.a * (self.s0 + self.s0.sinh() * self.s0.cosh())
    }

    pub fn point(&self, s: f64, th: f64) -> DVector<f64> {
        let a = self.a;
        DVector::from_vec(vec![a * s.cosh() * th.cos(), a * s.cosh() * th.sin(), a * s])
    }

    /// Unit tangents `∂_s`, `∂_θ` (already orthogonal).
    pub fn frame(&self, s: f64, th: f64) -> DMatrix<f64> {
        let c = s.cosh();
        let ds = DVector::from_vec(vec![s.sinh() * th.cos(), s.sinh() * th.sin(), 1.0]) / c;
        let dt = DVector::from_vec(vec![-th.sin(), th.cos(), 0.0]);
        DMatrix::from_columns(&[ds, dt])
    }
}

/// Solves `s tanh s = 1` by Newton's method: at `s0` the position vector
/// is parallel to the meridian conormal, so the boundary meets the unit
/// sphere orthogonally.
pub fn critical_catenoid_params() -> CatenoidParams {
    let g = |s: f64| s * s.tanh() - 1.0;
    let mut s = 1.2_f64;
    for _ in 0..50 {
        let d = s.tanh() + s / s.cosh().powi(2);
        let step = g(s) / d;
        s -= step;
        if step.abs() < 1e-16 {
            break;
        }
    }
    let a = 1.0 / (s.cosh().powi(2) + s * s).sqrt();
    CatenoidParams { s0: s, a, residual: g(s).abs() }
}

/// Critical catenoid in `B³` on a grid of `res` cells in `s` and square
/// cells in `θ`, with exact cell areas.
pub fn critical_catenoid(res: usize) -> Result<DiscreteVarifold> {
    if res < 2 {
        return Err(Error::InvalidInput("resolution must be at least 2".into()));
    }
    let p = critical_catenoid_params();
    let ns = res;
    // square cells: dθ = ds
    let nt = ((PI * res as f64 / p.s0).ceil() as usize).max(3);
    let ds = 2.0 * p.s0 / ns as f64;
    let dth = 2.0 * PI / nt as f64;
    let prim = |s: f64| 0.5 * s + 0.25 * (2.0 * s).sinh();
    let mut atoms = Vec::with_capacity(ns * nt);
    for i in 0..ns {
        let (s1, s2) = (-p.s0 + i as f64 * ds, -p.s0 + (i + 1) as f64 * ds);
        let w = p.a * p.a * (prim(s2) - prim(s1)) * dth;
        let s = 0.5 * (s1 + s2);
        for j in 0..nt {
            let th = (j as f64 + 0.5) * dth;
            atoms.push(Atom { x: p.point(s, th), frame: p.frame(s, th), w });
        }
    }
    DiscreteVarifold::new(3, 2, atoms)
}
