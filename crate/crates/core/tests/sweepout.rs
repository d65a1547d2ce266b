use std::f64::consts::PI;

use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use widthlab::model::SpaceForm;
use widthlab::spaceform::{ball_area, slice_radius, unit_sphere_area, Curvature, SpaceFormBall};
use widthlab::sweepout::*;

/// Slice radius measured in the embedding model: walk `t` along a diameter,
/// then bisect along an orthogonal geodesic for the point at distance `R`
/// from the centre.
fn model_slice_radius(radius: f64, kv: f64, t: f64) -> f64 {
    let m = SpaceForm::new(3, Curvature(kv));
    let o = m.origin();
    let q = m.exp(&o, &(m.axis(0) * t));
    let dir = m.project_tangent(&q, &m.axis(1));
    let dir = &dir / m.norm(&dir);
    let dist = |rho: f64| m.distance(&o, &m.exp(&q, &(&dir * rho)));
    let (mut lo, mut hi) = (0.0, radius);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if dist(mid) < radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn slice_radius_matches_embedding_model() {
    for &(kv, r) in &[(1.0, PI / 2.0), (1.0, 1.0), (0.5, 2.0), (0.0, 1.3), (-1.0, 1.0), (-0.3, 2.5)] {
        for &t in &[0.1, 0.4, 0.7, 0.95] {
            let t = t * r;
            let got = slice_radius(r, Curvature(kv), t).unwrap();
            let want = model_slice_radius(r, kv, t);
            assert!((got - want).abs() < 1e-10, "K={kv} R={r} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn flat_slice_area_monte_carlo() {
    // area of {z = t} ∩ B³ by rejection sampling on the bounding square
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let ball = SpaceFormBall::new(3, 2, 1.0, Curvature(0.0)).unwrap();
    for &t in &[0.0, 0.35, 0.8] {
        let n = 200_000;
        let inside = (0..n)
            .filter(|_| {
                let x: f64 = rng.random_range(-1.0..1.0);
                let y: f64 = rng.random_range(-1.0..1.0);
                x * x + y * y + t * t <= 1.0
            })
            .count();
        let mc = 4.0 * inside as f64 / n as f64;
        let fam = equatorial_family(&ball, &[t]).unwrap();
        assert!((fam.samples[0].area - mc).abs() < 0.02, "t={t}: {} vs {mc}", fam.samples[0].area);
    }
}

#[test]
fn width_examples() {
    let b = |n, k, r, kv| SpaceFormBall::new(n, k, r, Curvature(kv)).unwrap();
    assert!((width_upper_bound(&b(3, 2, 1.0, 0.0)).unwrap() - PI).abs() < 1e-12);
    let w = width_upper_bound(&b(3, 2, 1.0, -1.0)).unwrap();
    assert!((w - 2.0 * PI * (1f64.cosh() - 1.0)).abs() < 1e-10);
    for &kv in &[-2.0, 0.0, 0.7] {
        assert_eq!(width_upper_bound(&b(4, 1, 0.9, kv)).unwrap(), 1.8);
    }
    // hemisphere: half of the round k-sphere
    for k in 1..=4 {
        let w = width_upper_bound(&b(k + 1, k, PI / 2.0, 1.0)).unwrap();
        assert!((w - unit_sphere_area(k) / 2.0).abs() < 1e-8);
    }
}

fn flat_disk() -> GeodesicDisk {
    GeodesicDisk::new(Curvature(0.0), 1.0).unwrap()
}

fn assert_monotone(trace: &TightenTrace) {
    for w in trace.max_length.windows(2) {
        assert!(w[1] <= w[0] + 1e-12, "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn diameters_are_already_optimal() {
    let init = PolylineSweepout::chords(flat_disk(), 65, 33).unwrap();
    let (_, trace) = tighten_1sweepout(&init, 400, &TightenOptions::default()).unwrap();
    assert!((trace.max_length[0] - 2.0).abs() < 1e-12);
    for m in &trace.max_length {
        assert!((m - 2.0).abs() < 1e-6, "{m}");
    }
    assert_monotone(&trace);
}

#[test]
fn bulging_arcs_tighten_to_diameter() {
    let init = PolylineSweepout::bulging_arcs(flat_disk(), 65, 33, 1.2).unwrap();
    assert!((init.max_length() - 2.4).abs() < 1e-3);
    let (fam, trace) = tighten_1sweepout(&init, 5000, &TightenOptions::default()).unwrap();
    assert!(trace.max_length.len() <= 5001);
    let last = *trace.max_length.last().unwrap();
    assert!((last - 2.0).abs() < 0.02, "{last}");
    assert_monotone(&trace);
    fam.validate(&CoveringGrid::default()).unwrap();
}

#[test]
fn curved_disks_tighten_to_two_r() {
    for &kv in &[-1.0, 0.5] {
        let disk = GeodesicDisk::new(Curvature(kv), 1.0).unwrap();
        let init = PolylineSweepout::perturbed_chords(disk, 65, 33, 0.3).unwrap();
        assert!(init.max_length() > 2.02);
        let (fam, trace) = tighten_1sweepout(&init, 5000, &TightenOptions::default()).unwrap();
        let last = *trace.max_length.last().unwrap();
        assert!((last - 2.0).abs() < 0.02, "K={kv}: {last}");
        assert_monotone(&trace);
        fam.validate(&CoveringGrid::default()).unwrap();
    }
}

#[test]
fn csv_outputs() {
    let init = PolylineSweepout::chords(flat_disk(), 65, 5).unwrap();
    let csv = init.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("s,length,vertices"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 65);
    assert_eq!(rows[32].split(',').nth(2).unwrap().split(';').count(), 5);
    let (_, trace) = tighten_1sweepout(&init, 3, &TightenOptions::default()).unwrap();
    assert!(trace.to_csv().starts_with("step,max_length,curves\n0,"));
}

#[test]
fn endpoints_off_boundary_rejected() {
    let mut fam = PolylineSweepout::chords(flat_disk(), 65, 9).unwrap();
    fam.curves[30][0][0] *= 0.99;
    assert!(fam.validate(&CoveringGrid::default()).is_err());
}

proptest! {
    #[test]
    fn slice_areas_symmetric_and_peak_at_centre(
        n in 2usize..6, kdelta in 0usize..4, kv in -2.0f64..2.0, rfrac in 0.05f64..1.0,
    ) {
        let k = 1 + kdelta % (n - 1).max(1);
        prop_assume!(k < n);
        let r = if kv > 0.0 { rfrac * PI / (2.0 * kv.sqrt()) } else { 3.0 * rfrac };
        let ball = SpaceFormBall::new(n, k, r, Curvature(kv)).unwrap();
        let grid = offset_grid(r, 21);
        let fam = equatorial_family(&ball, &grid).unwrap();
        for i in 0..grid.len() {
            let a = fam.samples[i].area;
            let b = fam.samples[grid.len() - 1 - i].area;
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
        }
        prop_assert_eq!(fam.samples[0].area, 0.0);
        prop_assert_eq!(fam.argmax_t(), 0.0);
        let bound = width_upper_bound(&ball).unwrap();
        prop_assert_eq!(bound, ball_area(k, &ball.profile()).unwrap());
    }

    #[test]
    fn chord_lengths_match_slice_radius(kv in -1.5f64..1.0, p in -0.95f64..0.95) {
        // a straight chart chord is a 1-dimensional equatorial slice
        let disk = GeodesicDisk::new(Curvature(kv), 1.0).unwrap();
        let rho = disk.chart_radius();
        let x = p * rho;
        let c = (rho * rho - x * x).sqrt();
        let len = disk.distance([x, -c], [x, c]);
        let t = disk.radius_of([x, 0.0]);
        let want = 2.0 * slice_radius(1.0, Curvature(kv), t).unwrap();
        prop_assert!((len - want).abs() < 1e-10, "{} vs {}", len, want);
    }
}

#[test]
fn model_origin_is_on_the_model() {
    let m = SpaceForm::new(2, Curvature(-1.0));
    let o: DVector<f64> = m.origin();
    assert!((m.inner(&o, &o) + 1.0).abs() < 1e-15);
}
