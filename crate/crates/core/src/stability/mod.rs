//! Second variation of free boundary minimal surfaces in balls of the
//! 3-dimensional space forms, with piecewise-linear elements on
//! triangulated surfaces, and the hyperbolic isoperimetric calibration.

mod mesh;

pub use mesh::*;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SpaceForm;
use crate::spaceform::Curvature;

/// Normal curvature `k^{∂B}(ν,ν)` of the geodesic sphere of radius `R`.
pub fn boundary_curvature(k: Curvature, radius: f64) -> f64 {
    let s = k.scale();
    match k.0 {
        x if x > 0.0 => s / (radius * s).tan(),
        x if x < 0.0 => s / (radius * s).tanh(),
        _ => 1.0 / radius,
    }
}

/// Second fundamental form data at a vertex.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VertexCurvature {
    pub a_sq: f64,
    pub mean: f64,
}

/// Fits a quadratic height function (with cubic terms when the stencil
/// allows) over the 2-ring of each vertex in
/// normal coordinates of the ambient model and returns `|A|²` and `H`.
/// Stores the fitted unit normals on the mesh.
pub fn fit_curvature(mesh: &mut SurfaceMesh) -> Result<Vec<VertexCurvature>> {
    let adj = mesh.adjacency();
    let model = mesh.model;
    let mut out = Vec::with_capacity(mesh.vertices.len());
    let mut normals = Vec::with_capacity(mesh.vertices.len());
    for (i, p) in mesh.vertices.iter().enumerate() {
        let mut ring: Vec<usize> = adj[i].clone();
        for &j in &adj[i] {
            ring.extend_from_slice(&adj[j]);
        }
        ring.sort_unstable();
        ring.dedup();
        ring.retain(|&j| j != i);
        if ring.len() < 6 {
            return Err(Error::DegenerateStencil { vertex: i, reason: format!("only {} stencil points", ring.len()) });
        }
        let basis = model.tangent_basis(p);
        let pts: Vec<nalgebra::Vector3<f64>> = ring
            .iter()
            .map(|&j| {
                let u = model.log(p, &mesh.vertices[j]);
                nalgebra::Vector3::new(model.inner(&u, &basis[0]), model.inner(&u, &basis[1]), model.inner(&u, &basis[2]))
            })
            .collect();
        // plane through p: smallest principal direction of the stencil
        let mut cov = nalgebra::Matrix3::zeros();
        for q in &pts {
            cov += q * q.transpose();
        }
        let eig = SymmetricEigen::new(cov);
        let imin = eig.eigenvalues.imin();
        let nu0 = eig.eigenvectors.column(imin).into_owned();
        let e1 = eig.eigenvectors.column((imin + 1) % 3).into_owned();
        let e2 = nu0.cross(&e1);
        let rows = pts.len();
        // cubic terms soak up the odd part of lopsided stencils
        let cols = if rows >= 12 { 9 } else { 5 };
        let mut a = DMatrix::zeros(rows, cols);
        let mut h = DVector::zeros(rows);
        let scale = pts.iter().map(|q| q.norm()).fold(0.0, f64::max);
        for (r, q) in pts.iter().enumerate() {
            let (u, v) = (q.dot(&e1) / scale, q.dot(&e2) / scale);
            let mono = [u, v, 0.5 * u * u, u * v, 0.5 * v * v, u * u * u, u * u * v, u * v * v, v * v * v];
            a.row_mut(r).copy_from_slice(&mono[..cols]);
            h[r] = q.dot(&nu0) / scale;
        }
        let svd = a.svd(true, true);
        let smin = svd.singular_values.min();
        let smax = svd.singular_values.max();
        if smin < 1e-8 * smax {
            return Err(Error::DegenerateStencil { vertex: i, reason: format!("fit condition number {:.2e}", smax / smin) });
        }
        let c = svd.solve(&h, 1e-14).map_err(|e| Error::DegenerateStencil { vertex: i, reason: e.to_string() })?;
        let (g1, g2) = (c[0], c[1]);
        let w = (1.0 + g1 * g1 + g2 * g2).sqrt();
        let hess = nalgebra::Matrix2::new(c[2], c[3], c[3], c[4]) / (scale * w);
        let metric = nalgebra::Matrix2::new(1.0 + g1 * g1, g1 * g2, g1 * g2, 1.0 + g2 * g2);
        let shape = metric.try_inverse().unwrap() * hess;
        out.push(VertexCurvature { a_sq: (shape * shape).trace(), mean: shape.trace() });
        let nu = (nu0 - e1 * g1 - e2 * g2) / w;
        normals.push(&basis[0] * nu[0] + &basis[1] * nu[1] + &basis[2] * nu[2]);
    }
    mesh.normals = normals;
    Ok(out)
}

/// Largest discrete mean curvature at an interior vertex above which a
/// mesh is treated as non-minimal.
pub const MINIMALITY_TOL: f64 = 1e-3;

/// Largest mesh handed to the dense eigensolver.
pub const MAX_EIGEN_VERTICES: usize = 4000;

#[derive(Debug, Clone, Serialize)]
pub struct MinimalityReport {
    pub max_mean_curvature: f64,
    pub worst_vertex: usize,
}

/// Discrete mean curvature `⟨Δ_Σ x, ν⟩` at every vertex: the cotangent
/// Laplacian of normal coordinates `log_p` about each vertex, divided by
/// its lumped area. Boundary values are not meaningful.
pub fn cotan_mean_curvature(mesh: &SurfaceMesh, forms: &StabilityForms) -> Vec<f64> {
    let model = mesh.model;
    let lumped: Vec<f64> = forms.mass.row_iter().map(|r| r.values().iter().sum()).collect();
    forms
        .stiffness
        .row_iter()
        .enumerate()
        .map(|(i, row)| {
            let p = &mesh.vertices[i];
            let mut hv = DVector::zeros(p.len());
            for (&j, &w) in row.col_indices().iter().zip(row.values()) {
                if j != i {
                    hv += model.log(p, &mesh.vertices[j]) * w;
                }
            }
            -model.inner(&hv, &mesh.normals[i]) / lumped[i]
        })
        .collect()
}

/// Rejects meshes whose discrete mean curvature exceeds `tol` at an
/// interior vertex.
pub fn minimality_gate(mesh: &SurfaceMesh, forms: &StabilityForms, tol: f64) -> Result<MinimalityReport> {
    let h = cotan_mean_curvature(mesh, forms);
    let (mut worst, mut at) = (0.0, 0);
    for (i, v) in h.iter().enumerate() {
        if !mesh.is_boundary[i] && v.abs() > worst {
            worst = v.abs();
            at = i;
        }
    }
    if worst > tol {
        return Err(Error::Mesh(format!("mean curvature {worst:.3e} at vertex {at} exceeds {tol:e}")));
    }
    Ok(MinimalityReport { max_mean_curvature: worst, worst_vertex: at })
}

/// Assembled finite-element matrices for the second variation form.
#[derive(Debug, Clone)]
pub struct StabilityForms {
    /// `∫ ∇φ_i·∇φ_j`.
    pub stiffness: CsrMatrix<f64>,
    /// `∫ φ_i φ_j`.
    pub mass: CsrMatrix<f64>,
    /// `∫ (Ric(ν,ν) + |A|²) φ_i φ_j`.
    pub potential: CsrMatrix<f64>,
    /// `∫_{∂Σ} φ_i φ_j`.
    pub boundary: CsrMatrix<f64>,
    pub boundary_curvature: f64,
    pub curvature: Vec<VertexCurvature>,
}

fn form(m: &CsrMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let mb: DVector<f64> = m * b;
    a.dot(&mb)
}

impl StabilityForms {
    /// The matrix of `Q`.
    pub fn q_matrix(&self) -> CsrMatrix<f64> {
        &(&self.stiffness - &self.potential) - &(&self.boundary * self.boundary_curvature)
    }

    pub fn q(&self, phi: &DVector<f64>) -> f64 {
        form(&self.stiffness, phi, phi) - form(&self.potential, phi, phi) - self.boundary_curvature * form(&self.boundary, phi, phi)
    }

    pub fn l2_sq(&self, phi: &DVector<f64>) -> f64 {
        form(&self.mass, phi, phi)
    }

    /// `Q` after integrating by parts, from nodal values of `φ`, `Δ_Σ φ`
    /// and the conormal derivative `∂_η φ` (read on boundary vertices):
    /// `−∫ φ(Δφ + (Ric + |A|²)φ) + ∫_{∂Σ} φ(∂_η φ − k^{∂B} φ)`.
    pub fn q_by_parts(&self, phi: &DVector<f64>, lap: &DVector<f64>, conormal: &DVector<f64>) -> f64 {
        let interior = -form(&self.mass, phi, lap) - form(&self.potential, phi, phi);
        let bdry = form(&self.boundary, phi, conormal) - self.boundary_curvature * form(&self.boundary, phi, phi);
        interior + bdry
    }
}

/// Assembles the forms of `Q` on a free boundary minimal mesh in
/// `B³_{R;K}`, with `Ric(ν,ν) = 2K` and `|A|²` from the local fit.
pub fn assemble_forms(mesh: &mut SurfaceMesh) -> Result<StabilityForms> {
    let curv = fit_curvature(mesh)?;
    let k = mesh.curvature();
    let ric = 2.0 * k.0;
    let nv = mesh.vertices.len();
    let mut stiffness = CooMatrix::new(nv, nv);
    let mut mass = CooMatrix::new(nv, nv);
    let mut potential = CooMatrix::new(nv, nv);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let l = mesh.edge_lengths(t);
        let area = heron(l);
        if area <= 0.0 {
            return Err(Error::Mesh(format!("triangle {t} has zero area")));
        }
        let vt = ric + tri.iter().map(|&i| curv[i].a_sq).sum::<f64>() / 3.0;
        for i in 0..3 {
            let (j, m) = ((i + 1) % 3, (i + 2) % 3);
            // cotangent of the angle at vertex i, opposite edge l[i]
            let cot = (l[j] * l[j] + l[m] * l[m] - l[i] * l[i]) / (4.0 * area);
            let (a, b) = (tri[j], tri[m]);
            stiffness.push(a, b, -0.5 * cot);
            stiffness.push(b, a, -0.5 * cot);
            stiffness.push(a, a, 0.5 * cot);
            stiffness.push(b, b, 0.5 * cot);
            for jj in 0..3 {
                let w = if i == jj { area / 6.0 } else { area / 12.0 };
                mass.push(tri[i], tri[jj], w);
                potential.push(tri[i], tri[jj], w * vt);
            }
        }
    }
    let mut boundary = CooMatrix::new(nv, nv);
    for e in &mesh.boundary_edges {
        let len = mesh.model.distance(&mesh.vertices[e[0]], &mesh.vertices[e[1]]);
        boundary.push(e[0], e[0], len / 3.0);
        boundary.push(e[1], e[1], len / 3.0);
        boundary.push(e[0], e[1], len / 6.0);
        boundary.push(e[1], e[0], len / 6.0);
    }
    Ok(StabilityForms {
        stiffness: CsrMatrix::from(&stiffness),
        mass: CsrMatrix::from(&mass),
        potential: CsrMatrix::from(&potential),
        boundary: CsrMatrix::from(&boundary),
        boundary_curvature: boundary_curvature(k, mesh.radius),
        curvature: curv,
    })
}

/// `Q(φ,φ)` for nodal values `phi`.
pub fn assemble_q(mesh: &mut SurfaceMesh, phi: &DVector<f64>) -> Result<f64> {
    if phi.len() != mesh.vertices.len() {
        return Err(Error::InvalidInput(format!("φ has {} values for {} vertices", phi.len(), mesh.vertices.len())));
    }
    Ok(assemble_forms(mesh)?.q(phi))
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityData {
    /// Lowest eigenvalues in increasing order.
    pub eigenvalues: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    /// First eigenfunction, `∫φ₁² = 1`, sign fixed so that `Σ φ₁ > 0`.
    pub phi1: Vec<f64>,
    /// `Q(φ₁,φ₁)/∫φ₁²`, equal to `λ₁` up to rounding.
    pub rayleigh: f64,
    pub boundary_curvature: f64,
    pub max_mean_curvature: f64,
    #[serde(skip)]
    pub forms: Option<StabilityForms>,
}

/// Solves `Q(φ,ψ) = λ ∫ φψ` for all `ψ`, i.e. `−L_Σ φ = λφ` with
/// `∂_η φ = k^{∂B} φ` on the boundary.
pub fn robin_eigen(mesh: &mut SurfaceMesh) -> Result<StabilityData> {
    let nv = mesh.vertices.len();
    if nv > MAX_EIGEN_VERTICES {
        return Err(Error::Eigen(format!("{nv} vertices exceed the dense solver limit {MAX_EIGEN_VERTICES}")));
    }
    let forms = assemble_forms(mesh)?;
    let gate = minimality_gate(mesh, &forms, MINIMALITY_TOL)?;
    let q = DMatrix::from(&forms.q_matrix());
    let mass = DMatrix::from(&forms.mass);
    let chol = mass.cholesky().ok_or_else(|| Error::Eigen("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l.solve_lower_triangular(&DMatrix::identity(nv, nv)).ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let mut c = &linv * &q * linv.transpose();
    c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(c, 1e-15, 10_000).ok_or_else(|| Error::Eigen("no convergence".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    if order.len() < 2 {
        return Err(Error::Eigen("need at least two degrees of freedom".into()));
    }
    let eigenvalues: Vec<f64> = order.iter().take(8).map(|&i| eig.eigenvalues[i]).collect();
    let v = eig.eigenvectors.column(order[0]).into_owned();
    let mut phi = linv.transpose() * v;
    let norm = forms.l2_sq(&phi).sqrt();
    phi /= norm;
    if phi.sum() < 0.0 {
        phi = -phi;
    }
    let rayleigh = forms.q(&phi) / forms.l2_sq(&phi);
    Ok(StabilityData {
        lambda1: eigenvalues[0],
        lambda2: eigenvalues[1],
        eigenvalues,
        phi1: phi.iter().copied().collect(),
        rayleigh,
        boundary_curvature: forms.boundary_curvature,
        max_mean_curvature: gate.max_mean_curvature,
        forms: Some(forms),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HessReport {
    pub samples: usize,
    pub step: f64,
    /// Largest entry of `Hess f − |K| f g` in orthonormal normal coordinates,
    /// `f = cosh(√|K| r)`.
    pub max_residual: f64,
}

/// `cosh(√|K| r)` on the hyperboloid, read off the Minkowski product with
/// the origin.
fn cosh_r(model: &SpaceForm, p: &DVector<f64>) -> f64 {
    -model.curvature.0 * model.inner(&model.origin(), p)
}

/// Finite-difference Hessian of `cosh r` in normal coordinates at each
/// point of a hyperbolic model, compared with `(cosh r) g`.
pub fn hess_identity_check(model: &SpaceForm, points: &[DVector<f64>], step: f64) -> Result<HessReport> {
    if model.curvature.0 >= 0.0 {
        return Err(Error::InvalidInput("the Hessian identity is checked in hyperbolic models".into()));
    }
    if !(step > 1e-6 && step < 0.1) {
        return Err(Error::InvalidInput(format!("finite-difference step {step:e} outside (1e-6, 0.1)")));
    }
    let kabs = -model.curvature.0;
    let mut worst = 0.0_f64;
    for p in points {
        let basis = model.tangent_basis(p);
        let f = |x: &[f64]| {
            let v = basis.iter().zip(x).fold(DVector::zeros(p.len()), |acc, (b, c)| acc + b * *c);
            cosh_r(model, &model.exp(p, &v))
        };
        let n = basis.len();
        let f0 = f(&vec![0.0; n]);
        let h = step;
        for i in 0..n {
            for j in i..n {
                let at = |si: f64, sj: f64| {
                    let mut x = vec![0.0; n];
                    x[i] += si * h;
                    x[j] += sj * h;
                    f(&x)
                };
                let d = if i == j {
                    (at(1.0, 0.0) - 2.0 * f0 + at(-1.0, 0.0)) / (h * h)
                } else {
                    (at(1.0, 1.0) - at(1.0, -1.0) - at(-1.0, 1.0) + at(-1.0, -1.0)) / (4.0 * h * h)
                };
                let want = if i == j { kabs * f0 } else { 0.0 };
                worst = worst.max((d - want).abs());
            }
        }
    }
    Ok(HessReport { samples: points.len(), step, max_residual: worst })
}

/// Uniform random points of the geodesic ball `B³_{R;K}` (by volume).
pub fn random_ball_points<R: Rng>(model: &SpaceForm, radius: f64, count: usize, rng: &mut R) -> Vec<DVector<f64>> {
    let k = model.curvature;
    let vol = |r: f64| {
        // ∫_0^r sn² by the trapezoid rule is enough for sampling
        let m = 64;
        (0..m).map(|i| k.sn(r * (i as f64 + 0.5) / m as f64).powi(2)).sum::<f64>() * r / m as f64
    };
    let total = vol(radius);
    (0..count)
        .map(|_| {
            let target = rng.random::<f64>() * total;
            let (mut lo, mut hi) = (0.0, radius);
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if vol(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let g = DVector::from_fn(model.dim, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let mut dir = DVector::zeros(model.ambient_dim());
            dir.rows_mut(0, model.dim).copy_from(&g.normalize());
            model.polar_point(0.5 * (lo + hi), &dir)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct IsoReport {
    pub radius: f64,
    pub area: f64,
    pub boundary_length: f64,
    /// Closed forms `2π(cosh R − 1)` and `2π sinh R` of the totally
    /// geodesic disk.
    pub disk_area: f64,
    pub disk_boundary_length: f64,
    pub phi_r: f64,
    pub min_div: f64,
    pub max_div: f64,
    /// `∫ div_Σ Φ` over the triangles.
    pub div_integral: f64,
    /// `φ(R)|∂Σ| − |Σ|`, non-negative.
    pub equality_slack: f64,
    pub ratio: f64,
    pub disk_ratio: f64,
    /// `ratio / disk_ratio − 1`.
    pub ratio_gap: f64,
    pub max_mean_curvature: f64,
}

/// `φ(r) = (∫_0^r sinh s ds) / sinh r = tanh(r/2)` and `φ'`.
fn iso_profile(r: f64) -> (f64, f64) {
    let t = (0.5 * r).tanh();
    (t, 0.5 * (1.0 - t * t))
}

/// Calibration of a free boundary minimal surface in `B³_{R;−1}` by
/// `Φ = φ(r) ∂_r`: per-triangle `div_Σ Φ`, both sides of
/// `|Σ| ≤ φ(R)|∂Σ|`, and the ratio `|∂Σ|²/|Σ|` against the disk.
pub fn iso_check(mesh: &mut SurfaceMesh) -> Result<IsoReport> {
    if mesh.curvature().0 != -1.0 {
        return Err(Error::InvalidInput(format!("isoperimetric check needs K = -1, got {}", mesh.curvature().0)));
    }
    let forms = assemble_forms(mesh)?;
    let gate = minimality_gate(mesh, &forms, MINIMALITY_TOL)?;
    let model = mesh.model;
    let (mut min_div, mut max_div, mut div_integral) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let sum = tri.iter().fold(DVector::zeros(model.ambient_dim()), |acc, &i| acc + &mesh.vertices[i]);
        // barycentre pushed back onto the hyperboloid
        let c = &sum / (-model.inner(&sum, &sum)).sqrt();
        let r = model.radius_of(&c);
        let logs: Vec<DVector<f64>> = tri.iter().map(|&i| model.log(&c, &mesh.vertices[i])).collect();
        let plane = model.orthonormalize(&[&logs[1] - &logs[0], &logs[2] - &logs[0]]);
        if plane.len() < 2 {
            return Err(Error::Mesh(format!("triangle {t} is degenerate")));
        }
        let (phi, dphi) = iso_profile(r);
        let div = if r < 1e-12 {
            // φ(r) coth r → 1/2 and φ' → 1/2
            1.0
        } else {
            let dr = model.radial_unit(&c);
            let tan_sq: f64 = plane.iter().map(|e| model.inner(&dr, e).powi(2)).sum();
            dphi * tan_sq + phi / r.tanh() * (2.0 - tan_sq)
        };
        min_div = min_div.min(div);
        max_div = max_div.max(div);
        div_integral += div * mesh.triangle_area(t);
    }
    let area = mesh.area();
    let boundary_length = mesh.boundary_length();
    let r = mesh.radius;
    let phi_r = iso_profile(r).0;
    let tau = 2.0 * std::f64::consts::PI;
    let disk_area = tau * (r.cosh() - 1.0);
    let disk_boundary_length = tau * r.sinh();
    let ratio = boundary_length.powi(2) / area;
    let disk_ratio = disk_boundary_length.powi(2) / disk_area;
    Ok(IsoReport {
        radius: r,
        area,
        boundary_length,
        disk_area,
        disk_boundary_length,
        phi_r,
        min_div,
        max_div,
        div_integral,
        equality_slack: phi_r * boundary_length - area,
        ratio,
        disk_ratio,
        ratio_gap: ratio / disk_ratio - 1.0,
        max_mean_curvature: gate.max_mean_curvature,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_curvature_examples() {
        use std::f64::consts::FRAC_PI_2;
        assert!(boundary_curvature(Curvature(1.0), FRAC_PI_2).abs() < 1e-15);
        assert_eq!(boundary_curvature(Curvature(0.0), 2.0), 0.5);
        assert!((boundary_curvature(Curvature(-1.0), 1.0) - 1.313_035_285_499_331).abs() < 1e-12);
        // scaling: k(K, R) = √K k(1, √K R)
        let (kk, r) = (4.0, 0.3);
        assert!((boundary_curvature(Curvature(kk), r) - 2.0 * boundary_curvature(Curvature(1.0), 2.0 * r)).abs() < 1e-12);
    }

    #[test]
    fn iso_profile_solves_its_ode() {
        for r in [0.1, 0.7, 2.0] {
            let (p, dp) = iso_profile(r);
            assert!((dp + p / r.tanh() - 1.0).abs() < 1e-14);
            assert!((p - (r.cosh() - 1.0) / r.sinh()).abs() < 1e-14);
        }
    }

    #[test]
    fn hessian_at_the_centre_is_the_metric() {
        let m = SpaceForm::new(3, Curvature(-1.0));
        let rep = hess_identity_check(&m, &[m.origin()], 1e-3).unwrap();
        assert!(rep.max_residual < 1e-6);
        assert!(hess_identity_check(&m, &[m.origin()], 1e-9).is_err());
    }
}
