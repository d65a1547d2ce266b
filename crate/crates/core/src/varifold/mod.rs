//! Discrete varifolds: finitely many weighted atoms `(x, S, w)` on the
//! Grassmannian bundle of `ℝⁿ`, where `S` is a `k`-plane given by an
//! orthonormal frame and `w` is a `k`-area weight.
//!
//! Every integral against `V` becomes a finite weighted sum over atoms.

mod estimates;
mod fields;
mod fixtures;

pub use estimates::*;
pub use fields::*;
pub use fixtures::*;

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaceform::unit_ball_volume;

const FRAME_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub x: DVector<f64>,
    /// `n × k`, orthonormal columns spanning `S`.
    pub frame: DMatrix<f64>,
    pub w: f64,
}

impl Atom {
    /// `π_S v`.
    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.frame * (self.frame.transpose() * v)
    }

    /// `|π_S^⊥ v|²`.
    pub fn normal_sq(&self, v: &DVector<f64>) -> f64 {
        let t = self.frame.transpose() * v;
        (v.norm_squared() - t.norm_squared()).max(0.0)
    }

    /// Extent of the atom seen as a flat `k`-disk of area `w` in `S`.
    pub fn extent(&self, k: usize) -> f64 {
        (self.w / unit_ball_volume(k)).powf(1.0 / k as f64)
    }

    /// Fraction of the atom's disk inside the open ball `B_t(c)`.
    ///
    /// The ball meets `x + S` in a `k`-disk of radius `√(t² − |π_S^⊥(x−c)|²)`
    /// centred `|π_S(x−c)|` away from `x`, so this is an overlap of two
    /// coplanar disks. Falls back to the point indicator for `k > 3`.
    pub fn ball_fraction(&self, c: &DVector<f64>, t: f64, k: usize) -> f64 {
        let z = &self.x - c;
        if k > 3 || self.w == 0.0 {
            return if z.norm() < t { 1.0 } else { 0.0 };
        }
        let along = (self.frame.transpose() * &z).norm();
        let r2 = t * t - self.normal_sq(&z);
        if r2 <= 0.0 {
            return 0.0;
        }
        let a = self.extent(k);
        disk_overlap(k, a, r2.sqrt(), along) / (unit_ball_volume(k) * a.powi(k as i32))
    }

    /// `div_S` of a field with Jacobian `jac` at this atom: `Σ ⟨eᵢ, DX eᵢ⟩`.
    pub fn div(&self, jac: &DMatrix<f64>) -> f64 {
        (self.frame.transpose() * jac * &self.frame).trace()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteVarifold {
    pub n: usize,
    pub k: usize,
    pub atoms: Vec<Atom>,
}

#[derive(Serialize, Deserialize)]
struct AtomRecord {
    x: Vec<f64>,
    frame: Vec<Vec<f64>>,
    w: f64,
}

impl DiscreteVarifold {
    pub fn new(n: usize, k: usize, atoms: Vec<Atom>) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!("need 1 <= k <= n, got k={k}, n={n}")));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.x.len() != n || a.frame.nrows() != n || a.frame.ncols() != k {
                return Err(Error::InvalidInput(format!("atom {i} has the wrong shape")));
            }
            if !(a.w >= 0.0) {
                return Err(Error::InvalidInput(format!("atom {i} has negative weight {}", a.w)));
            }
            let gram = a.frame.transpose() * &a.frame;
            if (gram - DMatrix::<f64>::identity(k, k)).amax() > FRAME_TOL {
                return Err(Error::InvalidInput(format!("atom {i} frame is not orthonormal")));
            }
        }
        Ok(Self { n, k, atoms })
    }

    pub fn empty(n: usize, k: usize) -> Self {
        Self { n, k, atoms: Vec::new() }
    }

    pub fn mass(&self) -> f64 {
        pairwise_sum(&self.atoms.iter().map(|a| a.w).collect::<Vec<_>>())
    }

    /// `‖V‖(B_r(c))`, open ball.
    pub fn mass_in_ball(&self, c: &DVector<f64>, r: f64) -> f64 {
        pairwise_sum(&self.atoms.iter().filter(|a| (&a.x - c).norm() < r).map(|a| a.w).collect::<Vec<_>>())
    }

    /// `‖V‖(B_r(c))` with each atom spread uniformly over its disk.
    pub fn smoothed_mass_in_ball(&self, c: &DVector<f64>, r: f64) -> f64 {
        let terms: Vec<f64> = self.atoms.iter().map(|a| a.w * a.ball_fraction(c, r, self.k)).collect();
        pairwise_sum(&terms)
    }

    /// `δV(X) = ∫ div_S X dV`.
    pub fn first_variation(&self, field: &AnalyticVectorField) -> f64 {
        let terms: Vec<f64> = self.atoms.iter().map(|a| a.w * a.div(&field.jacobian(&a.x))).collect();
        pairwise_sum(&terms)
    }

    /// Sum of two varifolds (union with multiplicity).
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.k != other.k {
            return Err(Error::InvalidInput("varifold dimensions differ".into()));
        }
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        Ok(Self { n: self.n, k: self.k, atoms })
    }

    pub fn scale_weights(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.atoms.iter_mut().for_each(|a| a.w *= c);
        out
    }

    /// Push-forward under the homothety `x ↦ λx`.
    pub fn dilate(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        let f = lambda.abs().powi(self.k as i32);
        out.atoms.iter_mut().for_each(|a| {
            a.x *= lambda;
            a.w *= f;
        });
        out
    }

    /// Push-forward under an orthogonal map `q`.
    pub fn rotate(&self, q: &DMatrix<f64>) -> Self {
        let mut out = self.clone();
        out.atoms.iter_mut().for_each(|a| {
            a.x = q * &a.x;
            a.frame = q * &a.frame;
        });
        out
    }

    /// Smallest atom scale compatible with the weights: `max w^{1/k}`.
    pub fn atom_scale(&self) -> f64 {
        self.atoms.iter().map(|a| a.w.powf(1.0 / self.k as f64)).fold(0.0, f64::max)
    }

    /// One JSON object per line: `{"x":[..],"frame":[[..],..],"w":..}` with
    /// the frame stored as a list of its `k` column vectors.
    pub fn write_json_lines<W: Write>(&self, mut out: W) -> Result<()> {
        for a in &self.atoms {
            let rec = AtomRecord {
                x: a.x.iter().copied().collect(),
                frame: a.frame.column_iter().map(|c| c.iter().copied().collect()).collect(),
                w: a.w,
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_json_lines<R: BufRead>(input: R, n: usize, k: usize) -> Result<Self> {
        let mut atoms = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: AtomRecord =
                serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, reason: e.to_string() })?;
            if rec.x.len() != n || rec.frame.len() != k || rec.frame.iter().any(|c| c.len() != n) {
                return Err(Error::Parse { line: i + 1, reason: format!("expected n={n}, k={k}") });
            }
            let cols: Vec<DVector<f64>> = rec.frame.into_iter().map(DVector::from_vec).collect();
            atoms.push(Atom { x: DVector::from_vec(rec.x), frame: DMatrix::from_columns(&cols), w: rec.w });
        }
        Self::new(n, k, atoms)
    }
}

/// `k`-volume of the overlap of `k`-disks of radii `a`, `b` whose centres
/// are `d` apart (`k ≤ 3`).
pub(crate) fn disk_overlap(k: usize, a: f64, b: f64, d: f64) -> f64 {
    let (small, big) = if a < b { (a, b) } else { (b, a) };
    if d >= a + b {
        return 0.0;
    }
    if d <= big - small {
        return unit_ball_volume(k) * small.powi(k as i32);
    }
    match k {
        1 => a + b - d,
        2 => {
            let ca = ((d * d + a * a - b * b) / (2.0 * d * a)).clamp(-1.0, 1.0);
            let cb = ((d * d + b * b - a * a) / (2.0 * d * b)).clamp(-1.0, 1.0);
            let tri = 0.5 * ((-d + a + b) * (d + a - b) * (d - a + b) * (d + a + b)).max(0.0).sqrt();
            a * a * ca.acos() + b * b * cb.acos() - tri
        }
        3 => {
            let s = a + b - d;
            PI * s * s * (d * d + 2.0 * d * (a + b) - 3.0 * (a - b).powi(2)) / (12.0 * d)
        }
        _ => unreachable!("disk overlap is only used for k <= 3"),
    }
}

/// Deterministic pairwise summation.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_frames_and_weights() {
        let x = DVector::zeros(3);
        let bad = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.5, 0.5, 0.0]);
        let atom = Atom { x: x.clone(), frame: bad, w: 1.0 };
        assert!(DiscreteVarifold::new(3, 2, vec![atom]).is_err());
        let good = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let atom = Atom { x, frame: good, w: -1.0 };
        assert!(DiscreteVarifold::new(3, 2, vec![atom]).is_err());
    }

    #[test]
    fn disk_overlaps() {
        // half-overlap of equal unit intervals, disks and balls
        assert!((disk_overlap(1, 1.0, 1.0, 1.0) - 1.0).abs() < 1e-15);
        let lens2 = 2.0 * PI / 3.0 - 3f64.sqrt() / 2.0;
        assert!((disk_overlap(2, 1.0, 1.0, 1.0) - lens2).abs() < 1e-14);
        assert!((disk_overlap(3, 1.0, 1.0, 1.0) - 5.0 * PI / 12.0).abs() < 1e-14);
        assert_eq!(disk_overlap(2, 1.0, 3.0, 0.5), PI);
        assert_eq!(disk_overlap(3, 1.0, 1.0, 2.5), 0.0);
    }

    #[test]
    fn smoothed_mass_is_exact_for_whole_atoms() {
        let v = equatorial_disk(3, 2, 20).unwrap();
        let c = DVector::zeros(3);
        assert!((v.smoothed_mass_in_ball(&c, 1.5) - PI).abs() < 1e-12);
        assert_eq!(v.smoothed_mass_in_ball(&DVector::from_vec(vec![0.0, 0.0, 2.0]), 0.5), 0.0);
    }

    #[test]
    fn empty_has_no_mass() {
        assert_eq!(DiscreteVarifold::empty(3, 2).mass(), 0.0);
    }

    #[test]
    fn json_lines_round_trip() {
        let v = equatorial_disk(3, 2, 6).unwrap();
        let mut buf = Vec::new();
        v.write_json_lines(&mut buf).unwrap();
        let back = DiscreteVarifold::read_json_lines(&buf[..], 3, 2).unwrap();
        assert_eq!(back, v);
        let err = DiscreteVarifold::read_json_lines(&b"{\"x\":[1]}\n"[..], 3, 2);
        assert!(matches!(err, Err(Error::Parse { line: 1, .. })));
    }
}
