//! Adaptive Gauss–Legendre quadrature for complex-valued integrands on
//! a finite union of intervals.

use std::sync::OnceLock;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;

const ORDER: usize = 15;
const MAX_DEPTH: u32 = 48;
const MAX_INTERVALS: usize = 200_000;

/// Nodes and weights on [-1, 1], computed once by Newton iteration on P_n.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = ORDER;
        let mut rule = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        rule
    })
}

fn fixed_rule<T: Real, F: Fn(T) -> Complex<T>>(f: &F, a: T, b: T) -> Complex<T> {
    let half = (b - a) / T::lit(2.0);
    let mid = (a + b) / T::lit(2.0);
    let mut acc = Complex::new(T::zero(), T::zero());
    for &(x, w) in gauss_legendre() {
        acc = acc + f(mid + half * T::lit(x)) * T::lit(w);
    }
    acc * half
}

/// Integrates `f` over `[points[0], points[last]]`, treating every interior
/// point as a mandatory split.
///
/// Each panel is bisected until the halves agree with the whole to within
/// the panel's width-proportional share of `tol` (absolute), or to a few
/// ulps of the panel value.
pub fn integrate<T, F>(f: F, points: &[T], tol: T) -> Result<Complex<T>>
where
    T: Real,
    F: Fn(T) -> Complex<T>,
{
    let mut pts: Vec<T> = points.iter().copied().filter(|p| p.is_finite()).collect();
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    pts.dedup();
    if pts.len() < 2 {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    let width = pts[pts.len() - 1] - pts[0];
    let noise = T::epsilon() * T::lit(64.0);

    let mut total = Complex::new(T::zero(), T::zero());
    let mut stack: Vec<(T, T, Complex<T>, u32)> = pts
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| (w[0], w[1], fixed_rule(&f, w[0], w[1]), 0))
        .collect();
    let mut visited = 0usize;

    while let Some((a, b, whole, depth)) = stack.pop() {
        visited += 1;
        let mid = (a + b) / T::lit(2.0);
        let left = fixed_rule(&f, a, mid);
        let right = fixed_rule(&f, mid, b);
        let refined = left + right;
        let err = (refined - whole).norm();
        let budget = tol * (b - a) / width;
        if err <= budget || err <= noise * refined.norm() {
            total = total + refined;
            continue;
        }
        if depth >= MAX_DEPTH || visited >= MAX_INTERVALS || mid <= a || mid >= b {
            return Err(Error::QuadratureFailure {
                tolerance: tol.as_f64(),
                estimate: err.as_f64(),
            });
        }
        stack.push((a, mid, left, depth + 1));
        stack.push((mid, b, right, depth + 1));
    }
    Ok(total)
}
