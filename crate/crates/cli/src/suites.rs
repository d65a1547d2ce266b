use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use widthlab::comparison::{case1_radius, case2_curvature, case3_curvature, solve_f, verify_contraction};
use widthlab::model::SpaceForm;
use widthlab::spaceform::{ball_area, unit_ball_volume, unit_sphere_area};
use widthlab::stability::{
    assemble_forms, assemble_q, catenoid_mesh, geodesic_disk_mesh, hess_identity_check, iso_check, minimality_gate,
    random_ball_points, robin_eigen, MINIMALITY_TOL,
};
use widthlab::sweepout::{
    equatorial_family, offset_grid, tighten_1sweepout, width_upper_bound, CoveringGrid, GeodesicDisk,
    PolylineSweepout, TightenOptions,
};
use widthlab::varifold::*;
use widthlab::{Curvature, SpaceFormBall, WarpedProfile};

use crate::config::{RunConfig, Suite};
use crate::report::{Basis, Check, Relation, Report, Table};

/// Report builder that applies the tolerance scale.
struct Run {
    report: Report,
    scale: f64,
}

impl Run {
    fn new(suite: Suite, cfg: &RunConfig) -> Self {
        Self { report: Report::new(suite, cfg), scale: cfg.tolerance_scale }
    }

    #[allow(clippy::too_many_arguments)]
    fn push(&mut self, name: String, anchor: &'static str, basis: Basis, rel: Relation, measured: f64, expected: f64, tol: f64) {
        let tol = tol * self.scale;
        self.report.push(Check::new(name, anchor, basis, rel, measured, expected, tol));
    }

    fn close(&mut self, name: String, anchor: &'static str, basis: Basis, measured: f64, expected: f64, tol: f64) {
        self.push(name, anchor, basis, Relation::Close, measured, expected, tol);
    }

    fn at_most(&mut self, name: String, anchor: &'static str, basis: Basis, measured: f64, expected: f64, tol: f64) {
        self.push(name, anchor, basis, Relation::AtMost, measured, expected, tol);
    }

    fn at_least(&mut self, name: String, anchor: &'static str, basis: Basis, measured: f64, expected: f64, tol: f64) {
        self.push(name, anchor, basis, Relation::AtLeast, measured, expected, tol);
    }

    fn below(&mut self, name: String, anchor: &'static str, basis: Basis, measured: f64, expected: f64) {
        self.push(name, anchor, basis, Relation::Below, measured, expected, 0.0);
    }

    fn above(&mut self, name: String, anchor: &'static str, basis: Basis, measured: f64, expected: f64) {
        self.push(name, anchor, basis, Relation::Above, measured, expected, 0.0);
    }

    /// Unwraps a numerical result, recording a failed check on error.
    fn ok<T>(&mut self, name: impl Into<String>, anchor: &'static str, r: widthlab::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.report.push(Check::errored(name, anchor, e));
                None
            }
        }
    }

    fn table(&mut self, t: Table) {
        self.report.tables.push(t);
    }
}

/// Executes the named suite. Numerical failures become failed checks; the
/// report is never partial silently.
pub fn run_suite(suite: Suite, cfg: &RunConfig) -> Report {
    let mut run = Run::new(suite, cfg);
    match suite {
        Suite::Widths => widths(&mut run, cfg),
        Suite::Comparison => comparison(&mut run),
        Suite::Brendle => brendle(&mut run, cfg),
        Suite::Varifold => varifold(&mut run, cfg),
        Suite::Stability => stability(&mut run, cfg),
        Suite::Isoperimetric => isoperimetric(&mut run, cfg),
        Suite::Sweepout1d => sweepout_1d(&mut run, cfg),
    }
    run.report
}

/// Runs every selected suite, on one thread per suite if `parallel` is set.
/// Reports come back in suite order either way.
pub fn run_all(cfg: &RunConfig) -> Vec<Report> {
    if !cfg.parallel {
        return cfg.suites.iter().map(|&s| run_suite(s, cfg)).collect();
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = cfg.suites.iter().map(|&s| scope.spawn(move || run_suite(s, cfg))).collect();
        handles.into_iter().map(|h| h.join().expect("suite thread panicked")).collect()
    })
}

/// Sample balls `(n, k, R, K)`; the last four are hemispheres `R = π/(2√K)`.
fn sample_balls() -> Vec<(usize, usize, f64, f64)> {
    let mut balls = vec![
        (3, 2, 1.0, 0.0),
        (3, 1, 0.7, 0.0),
        (4, 3, 1.5, 0.0),
        (3, 2, 1.0, -1.0),
        (4, 2, 2.0, -0.5),
        (5, 3, 0.8, -2.0),
        (3, 2, 1.0, 1.0),
        (4, 3, 0.6, 2.0),
    ];
    for (n, k, kv) in [(3, 2, 1.0), (4, 1, 2.0), (5, 4, 0.5), (4, 3, 3.0)] {
        balls.push((n, k, FRAC_PI_2 / f64::sqrt(kv), kv));
    }
    balls
}

fn widths(run: &mut Run, cfg: &RunConfig) {
    let count = cfg.resolution_or(201);
    let mut table = Table::new("slices", &["ball", "n", "k", "radius", "curvature", "t", "area"]);
    for (i, (n, k, r, kv)) in sample_balls().into_iter().enumerate() {
        let label = format!("n={n} k={k} R={r:.6} K={kv}");
        let Some(ball) = run.ok(&label, "width upper bound", SpaceFormBall::new(n, k, r, Curvature(kv))) else {
            continue;
        };
        let Some(fam) = run.ok(&label, "width upper bound", equatorial_family(&ball, &offset_grid(r, count))) else {
            continue;
        };
        let Some(want) = run.ok(&label, "width upper bound", ball_area(k, &ball.profile())) else {
            continue;
        };
        run.close(format!("max slice area {label}"), "width upper bound", Basis::Exact, fam.max_area(), want, 1e-10);
        for s in &fam.samples {
            table.rows.push(vec![i as f64, n as f64, k as f64, r, kv, s.t, s.area]);
        }
    }
    for k in 1..=4 {
        let ball = SpaceFormBall::new(k + 1, k, FRAC_PI_2, Curvature(1.0));
        if let Some(w) = run.ok(format!("hemisphere k={k}"), "hemisphere identity", ball.and_then(|b| width_upper_bound(&b))) {
            let want = unit_sphere_area(k) / 2.0;
            run.close(format!("hemisphere k={k}"), "hemisphere identity", Basis::Exact, w, want, 1e-8);
        }
    }
    run.table(table);
}

/// `(K, K₁, R₀)`.
type Case = (Curvature, Curvature, f64);

fn comparison(run: &mut Run) {
    let mut table = Table::new("maps", &["case", "k", "r", "f", "fp"]);
    let mut cases: Vec<(String, usize, widthlab::Result<Case>)> = Vec::new();
    for k in 1..=3 {
        cases.push((format!("flat to unit sphere k={k}"), k, case1_radius(k).map(|r| (Curvature(0.0), Curvature(1.0), r))));
        for alpha in [PI / 4.0, 1.2] {
            let c = case2_curvature(alpha, k).map(|kv| (kv, Curvature(1.0), alpha / kv.0.sqrt()));
            cases.push((format!("sphere to unit sphere alpha={alpha:.4} k={k}"), k, c));
        }
        for r in [0.5, 1.0, 2.0] {
            let c = case3_curvature(r, k).map(|k1| (Curvature(-1.0), k1, r));
            cases.push((format!("hyperbolic R={r} to sphere k={k}"), k, c));
        }
    }
    for (idx, (label, k, case)) in cases.into_iter().enumerate() {
        let Some((source, target, r0)) = run.ok(&label, "comparison map", case) else {
            continue;
        };
        let Some(map) = run.ok(&label, "comparison map", solve_f(k, source, target, r0)) else {
            continue;
        };
        let want = PI / (2.0 * target.0.sqrt());
        run.at_most(format!("{label}: identity residual"), "comparison map", Basis::Numerical, map.identity_residual, 0.0, 1e-8);
        run.at_least(format!("{label}: min f'"), "comparison map", Basis::Exact, map.min_derivative(), 1.0, 1e-12);
        run.close(format!("{label}: endpoint"), "comparison map", Basis::Exact, map.r1, want, 1e-7);
        let profiles = WarpedProfile::space_form(source, r0).and_then(|h0| Ok((h0, WarpedProfile::space_form(target, want)?)));
        if let Some(rep) = run.ok(&label, "area contraction", profiles.and_then(|(h0, h1)| verify_contraction(&h0, &h1, &map))) {
            run.at_most(format!("{label}: derivative identity"), "area contraction", Basis::Exact, rep.max_violation_cond1, 0.0, 1e-8);
            run.at_most(format!("{label}: warping comparison"), "area contraction", Basis::Exact, rep.max_violation_cond2, 0.0, 1e-10);
            run.at_most(format!("{label}: area identity"), "area contraction", Basis::Exact, rep.area_identity_error, 0.0, 1e-8);
        }
        for g in &map.grid {
            table.rows.push(vec![idx as f64, k as f64, g.r, g.f, g.fp]);
        }
    }
    run.table(table);
}

fn brendle(run: &mut Run, cfg: &RunConfig) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ts = [2.0, 1.0, 0.5, 0.1, 0.05, 0.01];
    let mut table = Table::new("decay", &["n", "k", "t", "e"]);
    for n in [3, 4] {
        for k in 1..=3 {
            let label = format!("n={n} k={k}");
            let y = random_sphere_point(n, &mut rng);
            let samples = lemma_samples(&y, k, cfg.samples, &mut rng);
            if let Some(rep) = run.ok(&label, "divergence bound", check_lemma_properties(&y, k, &samples)) {
                run.at_most(format!("divergence bound {label}"), "divergence bound", Basis::Exact, rep.max_violation, 0.0, 1e-8);
            }
            if let Some(t) = run.ok(&label, "boundary field tangency", tangency_residual(&y, k, 1000, &mut rng)) {
                run.at_most(format!("tangency {label}"), "boundary field tangency", Basis::Exact, t, 0.0, 1e-9);
            }
            if let Some(d) = run.ok(&label, "boundary field decay", decay_table(&y, k, &ts, 50, 12, &mut rng)) {
                let (e1, e2) = (d.at(1.0).unwrap_or(f64::NAN), d.at(0.01).unwrap_or(f64::NAN));
                run.at_most(format!("decay e(0.01) {label}"), "boundary field decay", Basis::Numerical, e2, 0.05 * e1, 0.0);
                for (t, e) in d.rows {
                    table.rows.push(vec![n as f64, k as f64, t, e]);
                }
            }
        }
    }
    run.table(table);
}

fn varifold(run: &mut Run, cfg: &RunConfig) {
    let n_res = cfg.resolution_or(100);
    let basis = tangent_test_basis();
    let max_var = |v: &DiscreteVarifold| basis.iter().map(|f| v.first_variation(f).abs()).fold(0.0, f64::max);

    if let Some(v) = run.ok("equatorial disk", "stationarity", equatorial_disk(3, 2, n_res)) {
        let m = max_var(&v);
        run.at_most(format!("disk first variation N={n_res}"), "stationarity", Basis::Numerical, m, 1.0 / n_res as f64, 0.0);
    }
    if let Some(v) = run.ok("off-centre disk", "stationarity", offcenter_disk(0.5, 60)) {
        run.above("off-centre disk first variation".into(), "stationarity", Basis::Numerical, max_var(&v), 0.1);
    }

    let y = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    let ak = unit_ball_volume(2);
    if let Some(v) = run.ok("equatorial disk", "boundary density", equatorial_disk(3, 2, n_res)) {
        if let Some(d) = run.ok("disk density", "boundary density", density(&v, &y, &[0.4, 0.2, 0.1])) {
            run.close("disk density at boundary point".into(), "boundary density", Basis::Exact, d.raw, 0.5, 0.05);
            run.close("disk modified density".into(), "boundary density", Basis::Exact, d.modified, 1.0, 0.1);
        }
    }

    let radii: Vec<f64> = (1..=10).map(|i| 0.1 * i as f64).collect();
    let p = critical_catenoid_params();
    let mut mono = Table::new("monotonicity", &["fixture", "s", "t", "literal_diff", "weighted_diff", "annulus_integral"]);
    let fixtures = [("disk", equatorial_disk(3, 2, n_res), y.clone()), ("catenoid", critical_catenoid(n_res), p.point(p.s0, 0.0))];
    for (idx, (name, v, at)) in fixtures.into_iter().enumerate() {
        let rep = v.and_then(|v| monotonicity_check(&v, &at, &radii, cfg.gamma));
        if let Some(rep) = run.ok(format!("{name} monotonicity"), "boundary monotonicity", rep) {
            run.at_least(format!("{name} monotonicity margin"), "boundary monotonicity", Basis::Exact, rep.min_margin, 0.0, 0.0);
            for r in &rep.rows {
                mono.rows.push(vec![idx as f64, r.s, r.t, r.literal_diff, r.weighted_diff, r.annulus_integral]);
            }
        }
    }
    run.table(mono);

    let opts = PipelineOptions::default();
    let mut pipe = Table::new("pipeline", &["fixture", "resolution", "density", "implied_bound", "slack"]);
    let mut prev = f64::INFINITY;
    for res in [n_res / 2, n_res, 2 * n_res] {
        let r = equatorial_disk(3, 2, res).and_then(|v| fb_estimate_pipeline(&v, &y, &opts));
        let Some(r) = run.ok(format!("disk pipeline N={res}"), "boundary area estimate", r) else {
            continue;
        };
        run.close(format!("disk pipeline density N={res}"), "boundary area estimate", Basis::Exact, r.density, 0.5, 0.05);
        run.at_least(format!("disk implied bound N={res}"), "boundary area estimate", Basis::Numerical, r.implied_bound, ak, 0.02 * ak);
        run.below(format!("disk |slack| N={res}"), "boundary area estimate", Basis::Numerical, r.slack.abs(), prev);
        prev = r.slack.abs();
        pipe.rows.push(vec![0.0, res as f64, r.density, r.implied_bound, r.slack]);
    }
    let r = doubled_disk(3, 2, n_res).and_then(|v| fb_estimate_pipeline(&v, &y, &opts));
    if let Some(r) = run.ok("doubled disk pipeline", "boundary area estimate", r) {
        run.at_least("doubled disk implied bound".into(), "boundary area estimate", Basis::Numerical, r.implied_bound, 2.0 * ak, 0.04 * ak);
        pipe.rows.push(vec![1.0, n_res as f64, r.density, r.implied_bound, r.slack]);
    }
    let yc = p.point(p.s0, 1.0);
    let r = critical_catenoid(n_res).and_then(|v| fb_estimate_pipeline(&v, &yc, &opts));
    if let Some(r) = run.ok("catenoid pipeline", "boundary area estimate", r) {
        run.above("catenoid slack".into(), "boundary area estimate", Basis::Numerical, r.slack, 0.1);
        run.at_least("catenoid implied bound".into(), "boundary area estimate", Basis::Numerical, r.implied_bound, ak, 0.02 * ak);
        pipe.rows.push(vec![2.0, n_res as f64, r.density, r.implied_bound, r.slack]);
    }
    run.table(pipe);
}

fn stability(run: &mut Run, cfg: &RunConfig) {
    let rings = cfg.resolution_or(16);
    let cases = [
        ("euclidean", 0.0, 1.0, -2.0 * PI, 0.02),
        ("hemisphere", 1.0, FRAC_PI_2, -4.0 * PI, 0.05),
        ("hyperbolic", -1.0, 1.0, -2.0 * PI * 1f64.cosh(), 0.05),
    ];
    let mut table = Table::new("eigenvalues", &["curvature", "index", "eigenvalue"]);
    for (name, kv, r, want, tol) in cases {
        let Some(mut m) = run.ok(format!("{name} disk mesh"), "instability certificate", geodesic_disk_mesh(Curvature(kv), r, rings))
        else {
            continue;
        };
        let phi = DVector::from_iterator(
            m.vertices.len(),
            m.radii().into_iter().map(|r| if kv < 0.0 { r.cosh() } else { 1.0 }),
        );
        if let Some(q) = run.ok(format!("{name} certificate"), "instability certificate", assemble_q(&mut m, &phi)) {
            run.close(format!("{name} disk Q(phi, phi)"), "instability certificate", Basis::Exact, q, want, tol);
        }
        if let Some(d) = run.ok(format!("{name} eigenproblem"), "robin eigenvalue", robin_eigen(&mut m)) {
            run.below(format!("{name} disk lambda1"), "robin eigenvalue", Basis::Exact, d.lambda1, 0.0);
            run.above(format!("{name} disk spectral gap"), "robin eigenvalue", Basis::Numerical, d.lambda2 - d.lambda1, 0.0);
            for (i, e) in d.eigenvalues.iter().enumerate() {
                table.rows.push(vec![kv, i as f64, *e]);
            }
        }
    }
    run.table(table);

    let p = critical_catenoid_params();
    let exact = -8.0 * PI * p.s0.tanh() - 4.0 * PI * p.a * p.s0.cosh();
    let Some(mut m) = run.ok("catenoid mesh", "minimality gate", catenoid_mesh(64)) else {
        return;
    };
    let Some(forms) = run.ok("catenoid forms", "minimality gate", assemble_forms(&mut m)) else {
        return;
    };
    if let Some(g) = run.ok("catenoid gate", "minimality gate", minimality_gate(&m, &forms, f64::INFINITY)) {
        run.at_most("catenoid mean curvature".into(), "minimality gate", Basis::Numerical, g.max_mean_curvature, 0.0, MINIMALITY_TOL);
    }
    let q = forms.q(&DVector::from_element(m.vertices.len(), 1.0));
    run.close("catenoid Q(1, 1)".into(), "instability certificate", Basis::Derived, q, exact, 5e-3 * exact.abs());
}

fn isoperimetric(run: &mut Run, cfg: &RunConfig) {
    let rings = cfg.resolution_or(24);
    let rep = geodesic_disk_mesh(Curvature(-1.0), 1.0, rings).and_then(|mut m| iso_check(&mut m));
    if let Some(rep) = run.ok("hyperbolic disk", "isoperimetric calibration", rep) {
        let a = "isoperimetric calibration";
        run.close("min divergence".into(), a, Basis::Exact, rep.min_div, 1.0, 1e-6);
        run.close("max divergence".into(), a, Basis::Exact, rep.max_div, 1.0, 1e-6);
        run.close("equality slack".into(), a, Basis::Exact, rep.equality_slack, 0.0, 1e-3);
        run.close("ratio gap".into(), a, Basis::Exact, rep.ratio_gap, 0.0, 5e-3);
    }
    let model = SpaceForm::new(3, Curvature(-1.0));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let pts = random_ball_points(&model, 2.0, 1000, &mut rng);
    if let Some(h) = run.ok("hessian samples", "hessian identity", hess_identity_check(&model, &pts, 1e-3)) {
        run.at_most("hessian residual".into(), "hessian identity", Basis::Exact, h.max_residual, 0.0, 1e-6);
    }
}

fn sweepout_1d(run: &mut Run, cfg: &RunConfig) {
    let curves = cfg.resolution_or(65);
    let mut table = Table::new("trace", &["curvature", "step", "max_length"]);
    for kv in [-1.0, 0.0, 0.5] {
        let label = format!("K={kv}");
        let init = GeodesicDisk::new(Curvature(kv), 1.0).and_then(|d| PolylineSweepout::perturbed_chords(d, curves, 33, 0.3));
        let res = init.and_then(|i| tighten_1sweepout(&i, 5000, &TightenOptions::default()));
        let Some((fam, trace)) = run.ok(&label, "one-dimensional width", res) else {
            continue;
        };
        let last = trace.max_length.last().copied().unwrap_or(f64::NAN);
        run.close(format!("tightened max length {label}"), "one-dimensional width", Basis::Exact, last, 2.0, 0.02);
        run.at_most(format!("trace increase {label}"), "one-dimensional width", Basis::Exact, trace.max_increase(), 0.0, 1e-12);
        let covered = fam.validate(&CoveringGrid::default()).is_ok();
        run.push(format!("covering {label}"), "plumbing", Basis::Plumbing, Relation::Close, covered as u8 as f64, 1.0, 0.0);
        for (i, m) in trace.max_length.iter().enumerate() {
            table.rows.push(vec![kv, i as f64, *m]);
        }
    }
    run.table(table);
}
