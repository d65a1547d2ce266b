use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use widthlab::model::SpaceForm;
use widthlab::stability::*;
use widthlab::varifold::critical_catenoid_params;
use widthlab::{Curvature, Error};

fn disk(kv: f64, r: f64, rings: usize) -> SurfaceMesh {
    geodesic_disk_mesh(Curvature(kv), r, rings).unwrap()
}

/// `φ ≡ 1` for `K ≥ 0`, `φ = cosh r` for `K < 0`.
fn certificate(mesh: &SurfaceMesh) -> DVector<f64> {
    let k = mesh.curvature();
    DVector::from_iterator(
        mesh.vertices.len(),
        mesh.radii().into_iter().map(|r| if k.0 < 0.0 { (k.scale() * r).cosh() } else { 1.0 }),
    )
}

#[test]
fn certificate_values() {
    let cases = [(0.0, 1.0, -2.0 * PI, 0.02), (1.0, FRAC_PI_2, -4.0 * PI, 0.05), (-1.0, 1.0, -2.0 * PI * 1f64.cosh(), 0.05)];
    for (kv, r, want, tol) in cases {
        let mut m = disk(kv, r, 16);
        let phi = certificate(&m);
        let q = assemble_q(&mut m, &phi).unwrap();
        assert!((q - want).abs() < tol, "K={kv}: {q} vs {want}");
    }
}

#[test]
fn disks_are_unstable_with_simple_first_eigenvalue() {
    for (kv, r) in [(0.0, 1.0), (1.0, FRAC_PI_2), (-1.0, 1.0)] {
        let mut m = disk(kv, r, 10);
        let d = robin_eigen(&mut m).unwrap();
        assert!(d.lambda1 < 0.0, "K={kv}: {}", d.lambda1);
        assert!(d.lambda2 - d.lambda1 > 0.0);
        assert!(d.phi1.iter().all(|&v| v > 0.0));
        assert!((d.rayleigh - d.lambda1).abs() < 1e-8);
        assert_eq!(d.max_mean_curvature, 0.0);
    }
}

#[test]
fn hemisphere_first_eigenfunction_is_constant() {
    // Neumann boundary and Ric(ν,ν) = 2: −Δ1 − 2 = −2
    let mut m = disk(1.0, FRAC_PI_2, 8);
    let d = robin_eigen(&mut m).unwrap();
    assert!((d.lambda1 + 2.0).abs() < 1e-9);
    let (lo, hi) = d.phi1.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(hi - lo < 1e-8);
}

#[test]
fn rayleigh_quotients_bound_lambda1() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for (kv, r) in [(0.0, 1.0), (-1.0, 1.0)] {
        let mut m = disk(kv, r, 8);
        let d = robin_eigen(&mut m).unwrap();
        let forms = d.forms.as_ref().unwrap();
        for _ in 0..50 {
            let phi = DVector::from_fn(m.vertices.len(), |_, _| rng.random_range(-1.0..1.0) + 0.3);
            let rq = forms.q(&phi) / forms.l2_sq(&phi);
            assert!(rq - d.lambda1 >= -1e-10, "{rq} < {}", d.lambda1);
        }
        let q1 = forms.q(&certificate(&m));
        assert!(q1 < 0.0);
    }
}

fn bessel_i(n: i32, x: f64) -> f64 {
    let mut term = (0.5 * x).powi(n) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = 0.0;
    for k in 0..60 {
        sum += term;
        term *= (0.5 * x).powi(2) / ((k + 1) as f64 * (k + 1 + n) as f64);
    }
    sum
}

/// Unit disk, `−Δφ = λφ`, `∂_r φ = φ`: `φ = I₀(μr)`, `λ = −μ²` with
/// `μ I₁(μ) = I₀(μ)`.
fn flat_disk_lambda1() -> f64 {
    let (mut lo, mut hi) = (1.0, 2.5);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if m * bessel_i(1, m) < bessel_i(0, m) {
            lo = m;
        } else {
            hi = m;
        }
    }
    -lo * lo
}

#[test]
fn first_eigenvalue_converges() {
    let exact = flat_disk_lambda1();
    assert!((exact + 2.586_562_859).abs() < 1e-8);
    let l: Vec<f64> = [6, 12, 24].iter().map(|&n| robin_eigen(&mut disk(0.0, 1.0, n)).unwrap().lambda1).collect();
    let (d1, d2) = ((l[0] - l[1]).abs(), (l[1] - l[2]).abs());
    assert!(d2 < 0.6 * d1, "{l:?}");
    let err: Vec<f64> = l.iter().map(|v| (v - exact).abs()).collect();
    assert!(err[1] < err[0] && err[2] < err[1] && err[2] < 5e-4, "{err:?}");
}

/// A smooth field on a geodesic disk in polar coordinates with its
/// Laplacian and radial derivative.
struct PolarField {
    c: [f64; 5],
}

impl PolarField {
    /// `(φ, Δφ, ∂_r φ)` for the metric `dr² + sn²(r) dθ²`.
    fn eval(&self, k: Curvature, r: f64, th: f64) -> (f64, f64, f64) {
        let r = r.max(1e-6);
        let (sn, cs) = (k.sn(r), k.cs(r));
        let c = &self.c;
        // terms: 1, r², r cos θ, r² sin 2θ, cos(2r) r sin θ
        let f = [1.0, r * r, r * th.cos(), r * r * (2.0 * th).sin(), (2.0 * r).cos() * r * th.sin()];
        let fr = [0.0, 2.0 * r, th.cos(), 2.0 * r * (2.0 * th).sin(), ((2.0 * r).cos() - 2.0 * r * (2.0 * r).sin()) * th.sin()];
        let frr = [
            0.0,
            2.0,
            0.0,
            2.0 * (2.0 * th).sin(),
            (-4.0 * (2.0 * r).sin() - 4.0 * r * (2.0 * r).cos()) * th.sin(),
        ];
        let ftt = [0.0, 0.0, -r * th.cos(), -4.0 * r * r * (2.0 * th).sin(), -(2.0 * r).cos() * r * th.sin()];
        let mut out = (0.0, 0.0, 0.0);
        for i in 0..5 {
            out.0 += c[i] * f[i];
            out.1 += c[i] * (frr[i] + cs / sn * fr[i] + ftt[i] / (sn * sn));
            out.2 += c[i] * fr[i];
        }
        out
    }
}

#[test]
fn integration_by_parts_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let fields: Vec<PolarField> = (0..5).map(|_| PolarField { c: std::array::from_fn(|_| rng.random_range(-1.0..1.0)) }).collect();
    for (kv, r) in [(0.0, 1.0), (1.0, 1.2), (-1.0, 1.0)] {
        let k = Curvature(kv);
        let mut prev = vec![f64::INFINITY; fields.len()];
        for rings in [4, 8, 16] {
            let mut m = disk(kv, r, rings);
            let forms = assemble_forms(&mut m).unwrap();
            let (rs, ts) = (m.fields["r"].clone(), m.fields["theta"].clone());
            for (fi, f) in fields.iter().enumerate() {
                let vals: Vec<(f64, f64, f64)> = rs.iter().zip(&ts).map(|(&r, &t)| f.eval(k, r, t)).collect();
                let phi = DVector::from_iterator(vals.len(), vals.iter().map(|v| v.0));
                let lap = DVector::from_iterator(vals.len(), vals.iter().map(|v| v.1));
                let dn = DVector::from_iterator(vals.len(), vals.iter().map(|v| v.2));
                let gap = (forms.q(&phi) - forms.q_by_parts(&phi, &lap, &dn)).abs();
                assert!(gap < 0.7 * prev[fi] || gap < 1e-3, "K={kv} rings={rings} field {fi}: {gap} vs {}", prev[fi]);
                prev[fi] = gap;
            }
        }
        assert!(prev.iter().all(|&g| g < 0.05), "K={kv}: {prev:?}");
    }
}

#[test]
fn catenoid_is_unstable() {
    let mut m = catenoid_mesh(64).unwrap();
    let forms = assemble_forms(&mut m).unwrap();
    let gate = minimality_gate(&m, &forms, MINIMALITY_TOL).unwrap();
    assert!(gate.max_mean_curvature < MINIMALITY_TOL);
    let p = critical_catenoid_params();
    // ∫|A|² = 8π tanh s0 and |∂Σ| = 4π a cosh s0
    let exact = -8.0 * PI * p.s0.tanh() - 4.0 * PI * p.a * p.s0.cosh();
    let q = forms.q(&DVector::from_element(m.vertices.len(), 1.0));
    assert!(q < 0.0 && (q / exact - 1.0).abs() < 5e-3, "{q} vs {exact}");
    // the coarse mesh is rejected by the gate
    let mut coarse = catenoid_mesh(16).unwrap();
    assert!(matches!(robin_eigen(&mut coarse), Err(Error::Mesh(_))));
}

#[test]
fn catenoid_curvature_fit() {
    let p = critical_catenoid_params();
    let mut m = catenoid_mesh(48).unwrap();
    let curv = fit_curvature(&mut m).unwrap();
    for (i, (c, s)) in curv.iter().zip(&m.fields["s"]).enumerate() {
        let exact = 2.0 / (p.a * p.a * s.cosh().powi(4));
        let tol = if m.is_boundary[i] { 0.15 } else { 0.02 };
        assert!((c.a_sq - exact).abs() < tol * exact, "vertex {i}: {} vs {exact}", c.a_sq);
        // fitted normal is a unit vector orthogonal to ∂_θ
        let th = m.vertices[i][1].atan2(m.vertices[i][0]);
        let dt = DVector::from_vec(vec![-th.sin(), th.cos(), 0.0]);
        assert!((m.normals[i].norm() - 1.0).abs() < 1e-12 && m.normals[i].dot(&dt).abs() < 1e-2);
    }
}

#[test]
fn hessian_identity_on_random_samples() {
    let model = SpaceForm::new(3, Curvature(-1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts = random_ball_points(&model, 2.0, 1000, &mut rng);
    let rep = hess_identity_check(&model, &pts, 1e-3).unwrap();
    assert!(rep.max_residual <= 1e-6, "{rep:?}");
    assert!(hess_identity_check(&SpaceForm::new(3, Curvature(1.0)), &pts[..1], 1e-3).is_err());
}

#[test]
fn radial_second_derivative_of_cosh() {
    let m = SpaceForm::new(3, Curvature(-1.0));
    let f = |t: f64| -m.inner(&m.origin(), &m.polar_point(t, &m.axis(0)));
    let h = 1e-4;
    let d2 = (f(1.0 + h) - 2.0 * f(1.0) + f(1.0 - h)) / (h * h);
    assert!((d2 - 1f64.cosh()).abs() < 1e-6);
}

#[test]
fn hyperbolic_disk_calibration() {
    let mut m = disk(-1.0, 1.0, 24);
    let rep = iso_check(&mut m).unwrap();
    assert!((rep.min_div - 1.0).abs() <= 1e-6 && (rep.max_div - 1.0).abs() <= 1e-6, "{rep:?}");
    assert!(rep.equality_slack >= 0.0 && rep.equality_slack <= 1e-3);
    assert!((rep.disk_area - 2.0 * PI * (1f64.cosh() - 1.0)).abs() < 1e-14);
    assert!(rep.ratio_gap.abs() < 5e-3);
    assert!((rep.area / rep.disk_area - 1.0).abs() < 1e-3);
    assert!((rep.boundary_length / rep.disk_boundary_length - 1.0).abs() < 1e-3);
}

#[test]
fn calibration_rejects_bad_inputs() {
    assert!(iso_check(&mut disk(0.0, 1.0, 4)).is_err());
    // push the interior off the totally geodesic plane
    let m = disk(-1.0, 1.0, 12);
    let model = m.model;
    let verts: Vec<DVector<f64>> = m
        .vertices
        .iter()
        .zip(&m.fields["r"])
        .map(|(p, &r)| {
            let v = model.project_tangent(p, &model.axis(2)) * (0.2 * (1.0 - r * r));
            model.exp(p, &v)
        })
        .collect();
    let mut bumped = SurfaceMesh::new(model, 1.0, verts, m.triangles.clone()).unwrap();
    assert!(matches!(iso_check(&mut bumped), Err(Error::Mesh(_))));
}

#[test]
fn off_files_round_trip() {
    let m = catenoid_mesh(6).unwrap();
    let mut buf = Vec::new();
    m.write_off(&mut buf).unwrap();
    let back = SurfaceMesh::read_off(buf.as_slice()).unwrap();
    assert_eq!(back.vertices, m.vertices);
    assert_eq!(back.boundary_edges, m.boundary_edges);
}
