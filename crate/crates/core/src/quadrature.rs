//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The scalar driver bisects the interval with the largest local error
//! estimate until the summed estimate drops below the absolute tolerance.
//! [`integrate_vec`] does the same for vector-valued integrands, measuring
//! error in the max norm so a single partition serves every component.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Default absolute tolerance used by the radial area integrals.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;

const MAX_INTERVALS: usize = 4000;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Integral> {
    if a == b {
        return Ok(Integral { value: 0.0, error: 0.0, intervals: 0 });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite integration limits [{a}, {b}]")));
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value: v, error: e });
    let mut total = v;
    let mut total_err = e;
    while total_err > tol {
        if heap.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { achieved: total_err, tolerance: tol });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature { achieved: total_err, tolerance: tol });
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Segment { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: worst.b, value: v2, error: e2 });
        if !total.is_finite() {
            return Err(Error::Quadrature { achieved: f64::INFINITY, tolerance: tol });
        }
    }
    // re-sum to shed the drift of the running updates
    let value: f64 = heap.iter().map(|s| s.value).sum();
    let error: f64 = heap.iter().map(|s| s.error).sum();
    Ok(Integral { value, error, intervals: heap.len() })
}

struct VecSegment {
    a: f64,
    b: f64,
    value: Vec<f64>,
    error: f64,
}

fn gk15_vec<F: FnMut(f64, &mut [f64])>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [f64]) -> (Vec<f64>, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = vec![0.0; dim];
    let mut gauss = vec![0.0; dim];
    f(c, buf);
    for i in 0..dim {
        kronrod[i] = WGK[7] * buf[i];
        gauss[i] = WG[3] * buf[i];
    }
    let mut right = vec![0.0; dim];
    for j in 0..7 {
        let dx = h * XGK[j];
        f(c - dx, buf);
        f(c + dx, &mut right);
        for i in 0..dim {
            let s = buf[i] + right[i];
            kronrod[i] += WGK[j] * s;
            if j % 2 == 1 {
                gauss[i] += WG[j / 2] * s;
            }
        }
    }
    let mut err = 0.0_f64;
    for i in 0..dim {
        err = err.max(((kronrod[i] - gauss[i]) * h).abs());
        kronrod[i] *= h;
    }
    (kronrod, err)
}

/// Integrates a vector-valued `f(t, out)` with `out.len() == dim` over `[a, b]`.
///
/// The error estimate is the max-norm over components, summed over segments.
pub fn integrate_vec<F: FnMut(f64, &mut [f64])>(mut f: F, a: f64, b: f64, dim: usize, tol: f64) -> Result<(Vec<f64>, f64)> {
    if a == b {
        return Ok((vec![0.0; dim], 0.0));
    }
    let mut buf = vec![0.0; dim];
    let (v, e) = gk15_vec(&mut f, a, b, dim, &mut buf);
    let mut segments = vec![VecSegment { a, b, value: v, error: e }];
    let mut total_err = e;
    while total_err > tol {
        if segments.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { achieved: total_err, tolerance: tol });
        }
        let (idx, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let worst = segments.swap_remove(idx);
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature { achieved: total_err, tolerance: tol });
        }
        let (v1, e1) = gk15_vec(&mut f, worst.a, mid, dim, &mut buf);
        let (v2, e2) = gk15_vec(&mut f, mid, worst.b, dim, &mut buf);
        total_err += e1 + e2 - worst.error;
        segments.push(VecSegment { a: worst.a, b: mid, value: v1, error: e1 });
        segments.push(VecSegment { a: mid, b: worst.b, value: v2, error: e2 });
    }
    let mut value = vec![0.0; dim];
    let mut error = 0.0;
    for s in &segments {
        for (v, x) in value.iter_mut().zip(&s.value) {
            *v += x;
        }
        error += s.error;
    }
    Ok((value, error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, -1.0, 2.0, 1e-12).unwrap();
        let exact = (64.0 - 1.0) / 6.0 - (8.0 + 1.0);
        assert!((r.value - exact).abs() < 1e-13);
    }

    #[test]
    fn sqrt_endpoint_singularity() {
        let r = integrate(|x: f64| x.sqrt(), 0.0, 1.0, 1e-10).unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-10);
        let r = integrate(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, 1e-8).unwrap();
        assert!((r.value - 2.0).abs() < 1e-8);
    }

    #[test]
    fn peaked_integrand() {
        let eps: f64 = 1e-3;
        let r = integrate(|x| eps / (x * x + eps * eps), -1.0, 1.0, 1e-10).unwrap();
        assert!((r.value - 2.0 * (1.0 / eps).atan()).abs() < 1e-9);
    }

    #[test]
    fn divergent_integral_reports_error() {
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, 1e-10);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn vector_matches_scalar() {
        let (v, _) = integrate_vec(
            |t, out| {
                out[0] = t.sin();
                out[1] = (2.0 * t).cos();
                out[2] = 1.0 / (1.0 + t * t);
            },
            0.0,
            PI,
            3,
            1e-12,
        )
        .unwrap();
        assert!((v[0] - 2.0).abs() < 1e-12);
        assert!(v[1].abs() < 1e-12);
        assert!((v[2] - PI.atan()).abs() < 1e-12);
    }
}
