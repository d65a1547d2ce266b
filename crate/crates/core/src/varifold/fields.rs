use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature::integrate_vec;

type ValueFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type JacobianFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// Finite-difference step used when no analytic Jacobian is supplied.
pub const FD_STEP: f64 = 1e-5;

/// A vector field on `ℝⁿ` with its Jacobian.
#[derive(Clone)]
pub struct AnalyticVectorField {
    pub name: String,
    /// Tagged tangent to the unit sphere.
    pub tangent: bool,
    value: ValueFn,
    jacobian: Option<JacobianFn>,
}

impl std::fmt::Debug for AnalyticVectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticVectorField").field("name", &self.name).field("tangent", &self.tangent).finish()
    }
}

impl AnalyticVectorField {
    pub fn new<F, J>(name: impl Into<String>, tangent: bool, value: F, jacobian: J) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        Self { name: name.into(), tangent, value: Arc::new(value), jacobian: Some(Arc::new(jacobian)) }
    }

    /// A field whose Jacobian is taken by central differences.
    pub fn without_jacobian<F>(name: impl Into<String>, tangent: bool, value: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
    {
        Self { name: name.into(), tangent, value: Arc::new(value), jacobian: None }
    }

    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.value)(x)
    }

    pub fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        match &self.jacobian {
            Some(j) => j(x),
            None => {
                let n = x.len();
                let mut jac = DMatrix::zeros(n, n);
                for c in 0..n {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[c] += FD_STEP;
                    xm[c] -= FD_STEP;
                    let d = ((self.value)(&xp) - (self.value)(&xm)) / (2.0 * FD_STEP);
                    jac.set_column(c, &d);
                }
                jac
            }
        }
    }

    /// `x ↦ q X(qᵀx)` for orthogonal `q`, the push-forward of the field.
    pub fn conjugate(&self, q: &DMatrix<f64>) -> Self {
        let (v, q1, q2) = (self.clone(), q.clone(), q.clone());
        let j = self.clone();
        Self::new(
            format!("{}∘q", self.name),
            self.tangent,
            move |x| &q1 * v.eval(&(q1.transpose() * x)),
            move |x| &q2 * j.jacobian(&(q2.transpose() * x)) * q2.transpose(),
        )
    }

    /// Largest `|⟨X(x), x⟩|` over the given points of the unit sphere.
    pub fn tangency_residual(&self, sphere_points: &[DVector<f64>]) -> f64 {
        sphere_points.iter().map(|x| self.eval(x).dot(x).abs()).fold(0.0, f64::max)
    }
}

fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut e = DVector::zeros(n);
    e[i] = 1.0;
    e
}

/// Twelve fields on `ℝ³` tangent to the unit sphere: three rotations,
/// three projected translations `a − ⟨a,x⟩x`, three projected quadratic
/// shears and three fields `(1 − |x|²)eᵢ` vanishing on the sphere.
pub fn tangent_test_basis() -> Vec<AnalyticVectorField> {
    let mut out = Vec::with_capacity(12);
    for i in 0..3 {
        let e = unit(3, i);
        // x ↦ e × x, Jacobian [e]_×
        let m = DMatrix::from_row_slice(3, 3, &[0.0, -e[2], e[1], e[2], 0.0, -e[0], -e[1], e[0], 0.0]);
        let m2 = m.clone();
        out.push(AnalyticVectorField::new(format!("rotation-{i}"), true, move |x| &m * x, move |_| m2.clone()));
    }
    for i in 0..3 {
        let (a, a2) = (unit(3, i), unit(3, i));
        out.push(AnalyticVectorField::new(
            format!("translation-{i}"),
            true,
            move |x| &a - x * a.dot(x),
            move |x| -(x * a2.transpose()) - DMatrix::identity(3, 3) * a2.dot(x),
        ));
    }
    for i in 0..3 {
        let (j, l) = ((i + 1) % 3, (i + 2) % 3);
        let q = move |x: &DVector<f64>| {
            let mut v = DVector::zeros(3);
            v[i] = x[j] * x[l];
            v
        };
        out.push(AnalyticVectorField::new(
            format!("shear-{i}"),
            true,
            move |x| {
                let qv = q(x);
                &qv - x * qv.dot(x)
            },
            move |x| {
                // X = Q − (x₀x₁x₂) x
                let p = x[0] * x[1] * x[2];
                let grad_p = DVector::from_vec(vec![x[1] * x[2], x[0] * x[2], x[0] * x[1]]);
                let mut dq = DMatrix::zeros(3, 3);
                dq[(i, j)] = x[l];
                dq[(i, l)] = x[j];
                dq - x * grad_p.transpose() - DMatrix::identity(3, 3) * p
            },
        ));
    }
    for i in 0..3 {
        let (e, e2) = (unit(3, i), unit(3, i));
        out.push(AnalyticVectorField::new(
            format!("bump-{i}"),
            true,
            move |x| &e * (1.0 - x.norm_squared()),
            move |x| -(&e2 * x.transpose()) * 2.0,
        ));
    }
    out
}

/// Value and Jacobian of a field at a point.
#[derive(Debug, Clone)]
pub struct FieldValue {
    pub value: DVector<f64>,
    pub jacobian: DMatrix<f64>,
}

/// `z / |z|^k` and its Jacobian `I/|z|^k − k zzᵀ/|z|^{k+2}`.
fn pole(z: &DVector<f64>, k: usize) -> (DVector<f64>, DMatrix<f64>) {
    let n = z.len();
    let r2 = z.norm_squared();
    let rk = r2.powf(0.5 * k as f64);
    let v = z / rk;
    let j = DMatrix::identity(n, n) / rk - (z * z.transpose()) * (k as f64 / (rk * r2));
    (v, j)
}

/// `∫_0^T (t x − c)/|t x − c|^k dt` with its `x`-Jacobian, by adaptive
/// vector quadrature.
fn ray_integral(x: &DVector<f64>, c: &DVector<f64>, k: usize, upper: f64, scale: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = x.len();
    let (vals, _) = integrate_vec(
        |t, out| {
            let w = x * t - c;
            let (v, j) = pole(&w, k);
            out[..n].copy_from_slice(v.as_slice());
            for (o, jj) in out[n..].iter_mut().zip(j.iter()) {
                *o = t * jj;
            }
        },
        0.0,
        upper,
        n + n * n,
        1e-10 * scale,
    )?;
    Ok((DVector::from_column_slice(&vals[..n]), DMatrix::from_column_slice(n, n, &vals[n..])))
}

/// The boundary field centred at `y ∈ ∂Bⁿ`:
/// `Y(x) = x/2 − (x−y)/|x−y|^k − (k−2)/2 ∫_0^1 (tx−y)/|tx−y|^k dt`.
pub fn brendle_y(y: &DVector<f64>, k: usize, x: &DVector<f64>) -> Result<FieldValue> {
    let n = x.len();
    if (y.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("centre must lie on the unit sphere, |y| = {}", y.norm())));
    }
    let z = x - y;
    let rho = z.norm();
    if rho < 1e-14 {
        return Err(Error::Singular(x.iter().copied().collect()));
    }
    let (pv, pj) = pole(&z, k);
    let mut value = x * 0.5 - pv;
    let mut jacobian = DMatrix::identity(n, n) * 0.5 - pj;
    if k != 2 {
        let c = 0.5 * (k as f64 - 2.0);
        let (iv, ij) = ray_integral(x, y, k, 1.0, 1.0 + rho.powi(-(k as i32)))?;
        value -= iv * c;
        jacobian -= ij * c;
    }
    Ok(FieldValue { value, jacobian })
}

/// The Neumann-type field centred at an interior point `y`:
/// `x/2 − ½(x−y)/|x−y|^k − ½|y|^{2−k}(x−y*)/|x−y*|^k
///  − (k−2)/2 ∫_0^{|y|} (tx−ŷ)/|tx−ŷ|^k dt`, with `y* = y/|y|²`.
pub fn interior_field(y: &DVector<f64>, k: usize, x: &DVector<f64>) -> Result<FieldValue> {
    let n = x.len();
    let ny = y.norm();
    if !(ny > 0.0 && ny < 1.0) {
        return Err(Error::InvalidInput(format!("interior centre needs 0 < |y| < 1, got {ny}")));
    }
    let image = y / (ny * ny);
    let z = x - y;
    let zi = x - &image;
    if z.norm() < 1e-14 || zi.norm() < 1e-14 {
        return Err(Error::Singular(x.iter().copied().collect()));
    }
    let (pv, pj) = pole(&z, k);
    let (iv, ij) = pole(&zi, k);
    let c_img = 0.5 * ny.powi(2 - k as i32);
    let mut value = x * 0.5 - pv * 0.5 - iv * c_img;
    let mut jacobian = DMatrix::identity(n, n) * 0.5 - pj * 0.5 - ij * c_img;
    if k != 2 {
        let c = 0.5 * (k as f64 - 2.0);
        let yhat = y / ny;
        let (rv, rj) = ray_integral(x, &yhat, k, ny, 1.0 + z.norm().powi(-(k as i32)))?;
        value -= rv * c;
        jacobian -= rj * c;
    }
    Ok(FieldValue { value, jacobian })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn basis_is_tangent_and_jacobians_match() {
        let pts: Vec<_> = [[0.6, 0.0, 0.8], [0.0, -1.0, 0.0], [0.48, 0.6, 0.64]].iter().map(|v| p(v)).collect();
        for f in tangent_test_basis() {
            assert!(f.tangency_residual(&pts) < 1e-14, "{}", f.name);
            let fd = AnalyticVectorField::without_jacobian("fd", true, {
                let f = f.clone();
                move |x| f.eval(x)
            });
            let x = p(&[0.3, -0.2, 0.5]);
            assert!((f.jacobian(&x) - fd.jacobian(&x)).amax() < 1e-8, "{}", f.name);
        }
    }

    #[test]
    fn brendle_k2_closed_form() {
        let y = p(&[0.0, 0.0, 1.0]);
        let x = p(&[0.2, 0.1, -0.3]);
        let z = &x - &y;
        let want = &x * 0.5 - &z / z.norm_squared();
        let got = brendle_y(&y, 2, &x).unwrap();
        assert!((got.value - want).amax() < 1e-15);
        assert!(matches!(brendle_y(&y, 2, &y), Err(Error::Singular(_))));
    }

    #[test]
    fn brendle_jacobian_matches_differences() {
        let y = p(&[0.6, 0.8, 0.0, 0.0]);
        let x = p(&[0.1, 0.2, -0.3, 0.4]);
        for k in 1..=3 {
            let a = brendle_y(&y, k, &x).unwrap();
            let h = 1e-6;
            for c in 0..4 {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[c] += h;
                xm[c] -= h;
                let d = (brendle_y(&y, k, &xp).unwrap().value - brendle_y(&y, k, &xm).unwrap().value) / (2.0 * h);
                assert!((d - a.jacobian.column(c)).amax() < 1e-7, "k={k} c={c}");
            }
        }
    }

    #[test]
    fn interior_field_is_tangent() {
        let y = p(&[0.2, -0.3, 0.4]);
        for k in 1..=3 {
            for x in [[0.6, 0.0, 0.8], [0.0, -1.0, 0.0], [-0.48, 0.6, 0.64]] {
                let x = p(&x);
                let v = interior_field(&y, k, &x).unwrap().value;
                assert!(v.dot(&x).abs() < 1e-9, "k={k}");
            }
        }
    }
}
