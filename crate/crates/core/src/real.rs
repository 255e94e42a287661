//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All models, transforms and solvers are generic over [`Real`], which is
//! implemented for `f32` and `f64`. Tolerances quoted throughout the crate
//! assume `f64`; the `f32` instantiation is useful for quick exploration
//! but will not meet them.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Exp1, Open01, StandardNormal};

pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; rounds for narrower types.
    fn lit(x: f64) -> Self;

    fn as_f64(self) -> f64;

    /// Uniform draw on the open interval (0, 1).
    fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Unit-rate exponential draw.
    fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> Self;

    fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            #[inline]
            fn lit(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn sample_open01<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample::<$t, _>(Open01)
            }

            #[inline]
            fn sample_exp1<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample::<$t, _>(Exp1)
            }

            #[inline]
            fn sample_std_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.sample::<$t, _>(StandardNormal)
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// `ln(k!)`, exact summation for small `k` and Stirling-series `ln Γ` above.
pub fn ln_factorial(k: u64) -> f64 {
    if k < 2 {
        0.0
    } else if k <= 256 {
        (2..=k).map(|i| (i as f64).ln()).sum()
    } else {
        statrs::function::gamma::ln_gamma(k as f64 + 1.0)
    }
}
