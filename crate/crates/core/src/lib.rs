//! Lifetime analysis of a cold-standby system with `n` identical elements
//! and a single repair device.
//!
//! One element works while the others wait in reserve. Working times follow
//! a general law `G` with mean `b`; repairs are exponential with rate `μ` and
//! are served one at a time. The system fails when all `n` elements are
//! broken. The crate provides
//!
//! * [`dist`]: the working-time law and its transforms `g`, `g_j`, `γ_j`, `ε(μ)`;
//! * [`model`]: the system configuration and the embedded chain;
//! * [`sim`]: two Monte Carlo engines for the lifetime `τ_j`;
//! * [`lst`]: the linear system for the transforms `φ_j(s) = E e^{-sτ_j}`
//!   and the exact mean lifetimes;
//! * [`invert`]: numerical Laplace inversion of `φ_j` into lifetime CDFs;
//! * [`asym`]: checks of the fast-repair limit, in which `ε(μ)^{n−1} τ_j`
//!   becomes exponential with mean `b`.
//!
//! Everything is generic over the scalar type ([`Real`]); the aliases below
//! fix it to `f64`, which is what the documented tolerances assume.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asym;
pub mod dist;
pub mod error;
pub mod invert;
pub mod linalg;
pub mod lst;
pub mod model;
pub mod quad;
pub mod real;
pub mod sim;

pub use error::{Error, Result};
pub use real::Real;
pub use sim::Engine;

pub use num_complex::Complex;

pub type DistributionSpec = dist::DistributionSpec<f64>;
pub type WorkingTimeModel = dist::WorkingTimeModel<f64>;
pub type SystemConfig = model::SystemConfig<f64>;
pub type AbsorbingChain = model::AbsorbingChain<f64>;
pub type EmpiricalDistribution = sim::EmpiricalDistribution<f64>;
pub type LstSolution = lst::LstSolution<f64>;
pub use invert::InversionSettings;
pub type C64 = Complex<f64>;
