//! Fast-repair asymptotics.
//!
//! As `μ → ∞` the probability `ε(μ)` that a repair outlasts a working period
//! tends to zero, and `ε^{n−1} τ_j` converges in law to an exponential
//! variable with mean `b`, for every start state `j`. Equivalently
//! `φ_j(ε^{n−1} s) → 1/(1 + bs)`. The routines here measure how close a
//! given `μ` is to that limit, by simulation and through the transform
//! solver, and check the first-order expansions that drive the limit.

use num_complex::Complex;

use crate::dist::WorkingTimeModel;
use crate::error::{Error, Result};
use crate::lst::{mean_lifetimes, solve_phis};
use crate::model::SystemConfig;
use crate::real::Real;
use crate::sim::{child_seed, ks_distance, run_batch, EmpiricalDistribution, Engine};

/// CDF `1 − e^{−t/b}` of the limit law.
pub fn exponential_limit_cdf<T: Real>(t: T, b: T) -> T {
    if t <= T::zero() {
        T::zero()
    } else {
        -(-t / b).exp_m1()
    }
}

/// Transform `1/(1 + bs)` of the limit law.
pub fn limit_lst<T: Real>(s: Complex<T>, b: T) -> Complex<T> {
    let one = Complex::new(T::one(), T::zero());
    one / (one + s * b)
}

/// Inputs of [`convergence_sweep`].
#[derive(Debug, Clone)]
pub struct SweepPlan<T> {
    /// Size and working-time law; its repair rate is replaced row by row.
    pub template: SystemConfig<T>,
    pub j: usize,
    /// Strictly increasing, at least two entries.
    pub mu_list: Vec<T>,
    pub sample_count: usize,
    pub seed: u64,
    /// Real transform arguments for the gap to `1/(1 + bs)`.
    pub s_grid: Vec<T>,
    pub engine: Engine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow<T> {
    pub mu: T,
    pub epsilon: T,
    /// KS distance of `ε^{n−1} τ_j` samples to the limit CDF.
    pub ks_scaled: T,
    /// `E τ_j · ε^{n−1} / b`.
    pub scaled_mean_ratio: T,
    /// `max_s |φ_j(ε^{n−1} s) − 1/(1 + bs)|` over the plan's grid.
    pub lst_gap: T,
    pub seed: u64,
    /// The scaled lifetimes.
    pub scaled: EmpiricalDistribution<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport<T> {
    pub rows: Vec<SweepRow<T>>,
    pub n: usize,
    pub b: T,
    pub family: &'static str,
    pub j: usize,
    pub sample_count: usize,
    pub seed: u64,
    pub engine: Engine,
}

/// Runs one row per repair rate in `plan.mu_list`.
///
/// Row `i` simulates with seed `child_seed(plan.seed, i)`.
pub fn convergence_sweep<T: Real>(plan: &SweepPlan<T>) -> Result<AsymptoticReport<T>> {
    if plan.mu_list.len() < 2 {
        return Err(Error::InvalidParameter("a sweep needs at least two repair rates".into()));
    }
    if plan.mu_list.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("mu_list must be strictly increasing".into()));
    }
    if plan.s_grid.is_empty() || plan.s_grid.iter().any(|&s| !(s >= T::zero())) {
        return Err(Error::InvalidParameter("s_grid must be non-empty and nonnegative".into()));
    }
    plan.template.check_state(plan.j)?;
    let n = plan.template.n();
    let b = plan.template.working_time().mean();
    let mut rows = Vec::with_capacity(plan.mu_list.len());
    for (i, &mu) in plan.mu_list.iter().enumerate() {
        let config = plan.template.with_mu(mu)?;
        let epsilon = config.epsilon()?;
        let scale = epsilon.powi(n as i32 - 1);
        let seed = child_seed(plan.seed, i as u64);
        let emp = run_batch(&config, plan.j, plan.sample_count, seed, plan.engine)?;
        let scaled = emp.scaled(scale);
        let ks_scaled = ks_distance(&scaled, |t| exponential_limit_cdf(t, b))?;
        let scaled_mean_ratio = mean_lifetimes(&config)?[plan.j] * scale / b;
        let mut lst_gap = T::zero();
        for &s in &plan.s_grid {
            let phi = solve_phis(&config, Complex::new(scale * s, T::zero()))?.phis[plan.j];
            lst_gap = lst_gap.max((phi - limit_lst(Complex::new(s, T::zero()), b)).norm());
        }
        if let Some(prev) = rows.last().map(|r: &SweepRow<T>| r.epsilon) {
            if !(epsilon < prev) {
                return Err(Error::Domain(format!("epsilon not decreasing at mu = {mu}")));
            }
        }
        rows.push(SweepRow { mu, epsilon, ks_scaled, scaled_mean_ratio, lst_gap, seed, scaled });
    }
    Ok(AsymptoticReport {
        rows,
        n,
        b,
        family: plan.template.working_time().spec().family_name(),
        j: plan.j,
        sample_count: plan.sample_count,
        seed: plan.seed,
        engine: plan.engine,
    })
}

/// First-order expansion ratios at `x = ε^{n−1} s`; each tends to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport<T> {
    pub mu: T,
    pub epsilon: T,
    /// `ε^{n−1} s`.
    pub x: T,
    /// `(1 − g(x)) / (x b)`.
    pub r_g: T,
    /// `r_weighted[j] = (g_j(0) − g_j(x)) / (x γ_j)`; for `j = 0`,
    /// `g_0(0) = ε`.
    pub r_weighted: Vec<T>,
    /// `g_j(0)` for the same indices.
    pub weights_at_zero: Vec<T>,
    /// `γ_j(μ)` for the same indices.
    pub gammas: Vec<T>,
}

impl<T: Real> ExpansionReport<T> {
    pub fn deviation_g(&self) -> T {
        (self.r_g - T::one()).abs()
    }

    pub fn deviations_weighted(&self) -> Vec<T> {
        self.r_weighted.iter().map(|r| (*r - T::one()).abs()).collect()
    }
}

/// Evaluates the expansions of `g`, `g_0`, and `g_j` (`1 ≤ j ≤ n−1`) at
/// `ε^{n−1} s`. Requires `ε^{n−1} s < 0.1`.
pub fn expansion_check<T: Real>(model: &WorkingTimeModel<T>, n: usize, mu: T, s: T) -> Result<ExpansionReport<T>> {
    if n < 2 {
        return Err(Error::Domain(format!("n must be >= 2, got {n}")));
    }
    if !(s > T::zero()) {
        return Err(Error::Domain(format!("s must be > 0, got {s}")));
    }
    let epsilon = model.epsilon(mu)?;
    let x = epsilon.powi(n as i32 - 1) * s;
    if !(x < T::lit(0.1)) {
        return Err(Error::Domain(format!("expansion needs eps^(n-1) s < 0.1, got {x}")));
    }
    let zero = Complex::new(T::zero(), T::zero());
    let xc = Complex::new(x, T::zero());
    let b = model.mean();
    let r_g = (T::one() - model.lst(xc)?.re) / (x * b);
    let mut r_weighted = Vec::with_capacity(n);
    let mut weights_at_zero = Vec::with_capacity(n);
    let mut gammas = Vec::with_capacity(n);
    for j in 0..n as u32 {
        let at_zero = model.weighted_lst(j, zero, mu)?.re;
        let at_x = model.weighted_lst(j, xc, mu)?.re;
        let gamma = model.gamma(j, mu)?;
        r_weighted.push((at_zero - at_x) / (x * gamma));
        weights_at_zero.push(at_zero);
        gammas.push(gamma);
    }
    Ok(ExpansionReport { mu, epsilon, x, r_g, r_weighted, weights_at_zero, gammas })
}

/// `g_1(0)` and `γ_0(μ)` along a grid of repair rates; both vanish as `μ → ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VanishingCoefficients<T> {
    pub mu: T,
    pub g1_at_zero: T,
    pub gamma0: T,
}

pub fn vanishing_coefficients<T: Real>(model: &WorkingTimeModel<T>, mu_list: &[T]) -> Result<Vec<VanishingCoefficients<T>>> {
    let zero = Complex::new(T::zero(), T::zero());
    mu_list
        .iter()
        .map(|&mu| {
            Ok(VanishingCoefficients {
                mu,
                g1_at_zero: model.weighted_lst(1, zero, mu)?.re,
                gamma0: model.gamma(0, mu)?,
            })
        })
        .collect()
}

/// Ratios `φ_k(ε^{n−1}s) / φ_1(ε^{n−1}s)` against their predicted
/// first-order form `1 + ε^{n−k} s b` (`2 ≤ k ≤ n−1`).
#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport<T> {
    pub mu: T,
    pub epsilon: T,
    /// `ratios[k] = φ_k / φ_1` for `k = 0..n`.
    pub ratios: Vec<T>,
    /// `(k, |(ratio_k − 1)/(ε^{n−k} s b) − 1|)` for `k = 2..n−1`.
    pub deviations: Vec<(usize, T)>,
}

impl<T: Real> RatioReport<T> {
    /// `max_k |φ_k/φ_1 − 1|`.
    pub fn max_ratio_gap(&self) -> T {
        self.ratios.iter().map(|r| (*r - T::one()).abs()).fold(T::zero(), T::max)
    }
}

pub fn ratio_recursion_check<T: Real>(config: &SystemConfig<T>, s: T) -> Result<RatioReport<T>> {
    let n = config.n();
    if n < 3 {
        return Err(Error::Domain(format!("ratio recursion needs n >= 3, got {n}")));
    }
    if !(s > T::zero()) {
        return Err(Error::Domain(format!("s must be > 0, got {s}")));
    }
    let epsilon = config.epsilon()?;
    let b = config.working_time().mean();
    let x = epsilon.powi(n as i32 - 1) * s;
    let sol = solve_phis(config, Complex::new(x, T::zero()))?;
    let phi1 = sol.phis[1].re;
    let ratios: Vec<T> = sol.phis.iter().map(|p| p.re / phi1).collect();
    let deviations = (2..n)
        .map(|k| {
            let predicted = epsilon.powi((n - k) as i32) * s * b;
            (k, ((ratios[k] - T::one()) / predicted - T::one()).abs())
        })
        .collect();
    Ok(RatioReport { mu: config.mu(), epsilon, ratios, deviations })
}
