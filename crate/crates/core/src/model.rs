//! Embedding models of the space forms.
//!
//! * `K = 0`: `ℝⁿ` itself.
//! * `K > 0`: the sphere `⟨p,p⟩ = 1/K` in Euclidean `ℝⁿ⁺¹`.
//! * `K < 0`: the upper sheet of `⟨p,p⟩ = 1/K` in Minkowski `ℝ^{n,1}`, with
//!   the timelike coordinate stored last.
//!
//! All points and tangent vectors are ambient coordinate vectors.

use nalgebra::DVector;

use crate::spaceform::Curvature;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpaceForm {
    /// Intrinsic dimension `n`.
    pub dim: usize,
    pub curvature: Curvature,
}

impl SpaceForm {
    pub fn new(dim: usize, curvature: Curvature) -> Self {
        Self { dim, curvature }
    }

    pub fn ambient_dim(&self) -> usize {
        if self.curvature.0 == 0.0 {
            self.dim
        } else {
            self.dim + 1
        }
    }

    fn s(&self) -> f64 {
        self.curvature.scale()
    }

    /// Ambient bilinear form (Minkowski for `K < 0`).
    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        let d = a.dot(b);
        if self.curvature.0 < 0.0 {
            let last = a.len() - 1;
            d - 2.0 * a[last] * b[last]
        } else {
            d
        }
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// The centre of the model balls.
    pub fn origin(&self) -> DVector<f64> {
        let mut o = DVector::zeros(self.ambient_dim());
        if self.curvature.0 != 0.0 {
            o[self.dim] = 1.0 / self.s();
        }
        o
    }

    /// Coordinate direction `e_i` (`i < dim`) in `T_o M`.
    pub fn axis(&self, i: usize) -> DVector<f64> {
        let mut e = DVector::zeros(self.ambient_dim());
        e[i] = 1.0;
        e
    }

    /// Orthogonal projection of an ambient vector onto `T_p M`.
    pub fn project_tangent(&self, p: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        if self.curvature.0 == 0.0 {
            return v.clone();
        }
        // ⟨p,p⟩ = 1/K in both curved models
        v - p * (self.curvature.0 * self.inner(v, p))
    }

    pub fn exp(&self, p: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let kv = self.curvature.0;
        if kv == 0.0 {
            return p + v;
        }
        let len = self.norm(v);
        if len == 0.0 {
            return p.clone();
        }
        let s = self.s();
        let a = len * s;
        if kv > 0.0 {
            p * a.cos() + v * (a.sin() / a)
        } else {
            p * a.cosh() + v * (a.sinh() / a)
        }
    }

    pub fn distance(&self, p: &DVector<f64>, q: &DVector<f64>) -> f64 {
        let kv = self.curvature.0;
        let diff = q - p;
        if kv == 0.0 {
            return diff.norm();
        }
        let s = self.s();
        let chord = self.norm(&diff);
        if kv > 0.0 {
            2.0 / s * (0.5 * s * chord).min(1.0).asin()
        } else {
            2.0 / s * (0.5 * s * chord).asinh()
        }
    }

    pub fn log(&self, p: &DVector<f64>, q: &DVector<f64>) -> DVector<f64> {
        if self.curvature.0 == 0.0 {
            return q - p;
        }
        let w = self.project_tangent(p, q);
        let wn = self.norm(&w);
        if wn == 0.0 {
            return DVector::zeros(p.len());
        }
        w * (self.distance(p, q) / wn)
    }

    /// Gram–Schmidt in the model inner product, dropping dependent vectors.
    pub fn orthonormalize(&self, vs: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let mut out: Vec<DVector<f64>> = Vec::new();
        for v in vs {
            let mut w = v.clone();
            for e in &out {
                w -= e * self.inner(&w, e);
            }
            let n = self.norm(&w);
            if n > 1e-12 * (1.0 + self.norm(v)) {
                out.push(w / n);
            }
        }
        out
    }

    /// An orthonormal basis of `T_p M`.
    pub fn tangent_basis(&self, p: &DVector<f64>) -> Vec<DVector<f64>> {
        let candidates: Vec<_> = (0..self.ambient_dim())
            .map(|i| {
                let mut e = DVector::zeros(self.ambient_dim());
                e[i] = 1.0;
                self.project_tangent(p, &e)
            })
            .collect();
        let mut b = self.orthonormalize(&candidates);
        b.truncate(self.dim);
        b
    }

    /// Distance from the model origin.
    pub fn radius_of(&self, p: &DVector<f64>) -> f64 {
        self.distance(&self.origin(), p)
    }

    /// Point at geodesic polar coordinates `(r, direction)` about the origin,
    /// where `direction` is a unit vector of `T_o M`.
    pub fn polar_point(&self, r: f64, direction: &DVector<f64>) -> DVector<f64> {
        self.exp(&self.origin(), &(direction * r))
    }

    /// Outward unit radial vector `∂_r` at `p ≠ o`.
    pub fn radial_unit(&self, p: &DVector<f64>) -> DVector<f64> {
        let v = self.log(p, &self.origin());
        let n = self.norm(&v);
        -v / n
    }
}
