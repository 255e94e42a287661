//! Dense LU with partial pivoting over real or complex scalars.

use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::real::Real;

/// Pivots below this modulus are treated as exact zeros.
pub const PIVOT_FLOOR: f64 = 1e-14;

pub trait Field:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn modulus(&self) -> f64;
}

impl<T: Real> Field for T {
    fn zero() -> Self {
        T::zero()
    }
    fn one() -> Self {
        T::one()
    }
    fn modulus(&self) -> f64 {
        self.abs().as_f64()
    }
}

impl<T: Real> Field for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn one() -> Self {
        Complex::new(T::one(), T::zero())
    }
    fn modulus(&self) -> f64 {
        self.norm().as_f64()
    }
}

/// Solution of `A x = b` with its max-norm residual `‖Ax − b‖∞`.
#[derive(Debug, Clone)]
pub struct Solved<S> {
    pub x: Vec<S>,
    pub residual: f64,
}

/// Solves the square system `a x = b`.
pub fn solve<S: Field>(a: &[Vec<S>], b: &[S]) -> Result<Solved<S>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|r| r.len() == n), "square system expected");
    let mut m: Vec<Vec<S>> = a.to_vec();
    let mut rhs = b.to_vec();

    for col in 0..n {
        let (piv, best) = (col..n)
            .map(|r| (r, m[r][col].modulus()))
            .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if !(best >= PIVOT_FLOOR) {
            return Err(Error::SingularSystem { pivot: best.max(0.0) });
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f.modulus() == 0.0 {
                continue;
            }
            let (upper, lower) = m.split_at_mut(r);
            for (dst, &p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *dst = *dst - f * p;
            }
            let t = rhs[col];
            rhs[r] = rhs[r] - f * t;
        }
    }

    let mut x = vec![S::zero(); n];
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for k in r + 1..n {
            acc = acc - m[r][k] * x[k];
        }
        x[r] = acc / m[r][r];
    }

    let residual = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| {
            let ax = row.iter().zip(&x).fold(S::zero(), |acc, (&aij, &xj)| acc + aij * xj);
            (ax - bi).modulus()
        })
        .fold(0.0, f64::max);
    Ok(Solved { x, residual })
}
