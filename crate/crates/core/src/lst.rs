//! Transform system for the lifetimes `τ_0 … τ_{n−1}`.
//!
//! Writing `φ_j(s) = E e^{-sτ_j}`, `g = g(s)`, `g_k = g_k(s)` and
//! `φ_n ≡ 1` for the absorbed state, taking transforms of the lifetime
//! recursion gives, for `1 ≤ j ≤ n−1`,
//!
//! ```text
//! φ_j = (g − Σ_{k<j} g_k) φ_1 + Σ_{k=0}^{j−1} g_k φ_{j+1−k},
//! φ_0 = g φ_1.
//! ```
//!
//! For `j = n−1` the `k = 0` term is the constant `g_0`, which moves to the
//! right-hand side. The system is dense and small, so it is solved by LU.

use num_complex::Complex;

use crate::dist::check_half_plane;
use crate::error::{Error, Result};
use crate::linalg::{self, Field};
use crate::model::SystemConfig;
use crate::real::Real;

/// Residual bound every accepted solve must meet.
pub const RESIDUAL_BOUND: f64 = 1e-10;

/// `(φ_0(s), …, φ_{n−1}(s))` at one argument.
#[derive(Debug, Clone, PartialEq)]
pub struct LstSolution<T> {
    pub s: Complex<T>,
    pub phis: Vec<Complex<T>>,
    /// Poisson-weight truncation index of the working-time model at this `μ`.
    pub truncation_j: usize,
    /// `‖A x − r‖∞` of the linear solve.
    pub residual: T,
}

impl<T: Real> LstSolution<T> {
    pub fn phi(&self, j: usize) -> Complex<T> {
        self.phis[j]
    }
}

/// Assembles the lifetime recursion in the unknowns `x_1 … x_{n−1}` with the
/// absorbed state carrying 0 and `constant` on every right-hand side.
///
/// `weights` holds `g_0 … g_{n−2}`. With `constant = 1 − g` the unknowns are
/// `1 − φ_j(s)`; with `g = 1` and `constant = b` they are the mean lifetimes.
fn assemble<S: Field>(n: usize, g: S, weights: &[S], constant: S) -> (Vec<Vec<S>>, Vec<S>) {
    let m = n - 1;
    let mut a = vec![vec![S::zero(); m]; m];
    let rhs = vec![constant; m];
    let mut partial = S::zero();
    for j in 1..n {
        let row = j - 1;
        partial = partial + weights[j - 1];
        if j == 1 {
            // 1 − (g − g_0) without cancelling when g_0 is tiny
            a[0][0] = (S::one() - g) + partial;
        } else {
            // identity minus the tail coefficient g − Σ_{k<j} g_k
            a[row][j - 1] = a[row][j - 1] + S::one();
            a[row][0] = a[row][0] - (g - partial);
        }
        for (k, &gk) in weights.iter().enumerate().take(j) {
            let target = j + 1 - k;
            if target < n {
                a[row][target - 1] = a[row][target - 1] - gk;
            }
        }
    }
    (a, rhs)
}

/// Solves the transform system at `s` (`Re s ≥ 0`).
pub fn solve_phis<T: Real>(config: &SystemConfig<T>, s: Complex<T>) -> Result<LstSolution<T>> {
    check_half_plane(s)?;
    let n = config.n();
    let model = config.working_time();
    let mu = config.mu();
    let g = model.lst(s)?;
    let weights = (0..n as u32 - 1)
        .map(|k| model.weighted_lst(k, s, mu))
        .collect::<Result<Vec<_>>>()?;
    // solved for 1 − φ_j, whose right-hand side 1 − g vanishes at s = 0
    let one = Complex::new(T::one(), T::zero());
    let (a, rhs) = assemble(n, g, &weights, one - g);
    let solved = linalg::solve(&a, &rhs)?;
    let mut phis = Vec::with_capacity(n);
    phis.push(g * (one - solved.x[0]));
    phis.extend(solved.x.iter().map(|&x| one - x));
    Ok(LstSolution {
        s,
        phis,
        truncation_j: model.poisson_truncation(mu),
        residual: T::lit(solved.residual),
    })
}

fn require_two(config: &SystemConfig<impl Real>) -> Result<()> {
    if config.n() == 2 {
        Ok(())
    } else {
        Err(Error::Domain(format!("closed form needs n = 2, got n = {}", config.n())))
    }
}

/// `φ_1(s) = g_0(s) / (1 − g(s) + g_0(s))` for a two-element system.
pub fn phi1_two_element<T: Real>(config: &SystemConfig<T>, s: Complex<T>) -> Result<Complex<T>> {
    require_two(config)?;
    check_half_plane(s)?;
    let model = config.working_time();
    let g = model.lst(s)?;
    let g0 = model.weighted_lst(0, s, config.mu())?;
    Ok(g0 / (Complex::new(T::one(), T::zero()) - g + g0))
}

/// `φ_0(s) = g(s) φ_1(s)` for a two-element system.
pub fn phi0_two_element<T: Real>(config: &SystemConfig<T>, s: Complex<T>) -> Result<Complex<T>> {
    let phi1 = phi1_two_element(config, s)?;
    Ok(config.working_time().lst(s)? * phi1)
}

/// Exact `E τ_0 … E τ_{n−1}`.
///
/// Taking expectations of the lifetime recursion gives
/// `E τ_j = b + q_j E τ_1 + Σ_k p_k E τ_{j+1−k}` with `p_k = g_k(0)`,
/// `q_j = 1 − Σ_{k<j} p_k`, and `E τ_0 = b + E τ_1`.
pub fn mean_lifetimes<T: Real>(config: &SystemConfig<T>) -> Result<Vec<T>> {
    let n = config.n();
    let model = config.working_time();
    let zero = Complex::new(T::zero(), T::zero());
    let p = (0..n as u32 - 1)
        .map(|k| model.weighted_lst(k, zero, config.mu()).map(|v| v.re))
        .collect::<Result<Vec<T>>>()?;
    let b = model.mean();
    let (a, rhs) = assemble(n, T::one(), &p, b);
    let solved = linalg::solve(&a, &rhs)?;
    let mut out = Vec::with_capacity(n);
    out.push(b + solved.x[0]);
    out.extend(solved.x);
    Ok(out)
}

/// `−φ_j'(0)` for every `j` by complex-step differentiation of
/// [`solve_phis`].
pub fn complex_step_means<T: Real>(config: &SystemConfig<T>) -> Result<Vec<T>> {
    let h = T::lit(1e-20);
    let sol = solve_phis(config, Complex::new(T::zero(), h))?;
    Ok(sol.phis.iter().map(|p| -p.im / h).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{DistributionSpec, WorkingTimeModel};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn config(n: usize, mu: f64, spec: DistributionSpec<f64>) -> SystemConfig<f64> {
        SystemConfig::new(n, mu, WorkingTimeModel::new(spec).unwrap()).unwrap()
    }
    fn exp1() -> DistributionSpec<f64> {
        DistributionSpec::Exponential { rate: 1.0 }
    }
    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn families() -> Vec<DistributionSpec<f64>> {
        vec![
            exp1(),
            DistributionSpec::Erlang { shape: 2, rate: 2.0 },
            DistributionSpec::Deterministic { value: 1.0 },
            DistributionSpec::Uniform { lo: 0.0, hi: 2.0 },
            DistributionSpec::Weibull { shape: 2.0, scale: 1.0 },
        ]
    }

    #[test]
    fn normalized_at_zero() {
        for spec in families() {
            for n in 2..=5 {
                let sol = solve_phis(&config(n, 2.0, spec.clone()), c(0.0, 0.0)).unwrap();
                for p in &sol.phis {
                    assert!((p - c(1.0, 0.0)).norm() < 1e-8, "{spec:?} n={n}");
                }
                assert!(sol.residual < RESIDUAL_BOUND);
            }
        }
    }

    #[test]
    fn two_element_closed_form() {
        let cfg = config(2, 5.0, exp1());
        for re in [0.1, 1.0, 10.0] {
            for im in [0.0, 1.0, -1.0] {
                let s = c(re, im);
                let sol = solve_phis(&cfg, s).unwrap();
                assert!((sol.phis[1] - phi1_two_element(&cfg, s).unwrap()).norm() < 1e-12);
                assert!((sol.phis[0] - phi0_two_element(&cfg, s).unwrap()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn two_element_hand_values() {
        let cfg = config(2, 1.0, exp1());
        assert_abs_diff_eq!(phi1_two_element(&cfg, c(0.0, 0.0)).unwrap().re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(phi1_two_element(&cfg, c(1.0, 0.0)).unwrap().re, 0.4, epsilon = 1e-15);
        let cfg3 = config(2, 3.0, exp1());
        let h = 1e-20;
        let d = phi1_two_element(&cfg3, c(0.0, h)).unwrap().im / h;
        assert_relative_eq!(-d, 4.0, max_relative = 1e-12);
        assert!(matches!(phi1_two_element(&config(3, 1.0, exp1()), c(1.0, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn wald_identity_two_elements() {
        for spec in families() {
            let cfg = config(2, 1.7, spec);
            let b = cfg.working_time().mean();
            let eps = cfg.epsilon().unwrap();
            let m = mean_lifetimes(&cfg).unwrap();
            assert_relative_eq!(m[1], b / eps, max_relative = 1e-12);
        }
        assert_relative_eq!(mean_lifetimes(&config(2, 1.0, exp1())).unwrap()[1], 2.0, max_relative = 1e-14);
    }

    #[test]
    fn mean_offset_from_zero_state() {
        for spec in families() {
            for n in 2..=5 {
                let cfg = config(n, 3.0, spec.clone());
                let m = mean_lifetimes(&cfg).unwrap();
                assert_abs_diff_eq!(m[0] - m[1], cfg.working_time().mean(), epsilon = 1e-10 * m[1].max(1.0));
            }
        }
    }

    #[test]
    fn means_accurate_when_absorption_is_rare() {
        // reference from 50-digit arithmetic; at this conditioning
        // f64 assembly and elimination cost about 1e-8 relative
        let cfg = config(4, 10.0, DistributionSpec::Deterministic { value: 1.0 });
        let m = mean_lifetimes(&cfg).unwrap();
        assert_relative_eq!(m[1], 10677257345896.773, max_relative = 2e-8);
        assert_relative_eq!(m[3], 10676772378939.557, max_relative = 2e-8);
        let phis = solve_phis(&cfg, c(0.0, 0.0)).unwrap().phis;
        assert!(phis.iter().all(|p| (p - c(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn means_match_complex_step() {
        for spec in families() {
            for n in 2..=5 {
                let cfg = config(n, 2.0, spec.clone());
                let exact = mean_lifetimes(&cfg).unwrap();
                let cs = complex_step_means(&cfg).unwrap();
                for (a, b) in exact.iter().zip(&cs) {
                    assert_relative_eq!(*a, *b, max_relative = 1e-8);
                }
            }
        }
    }

    #[test]
    fn transform_properties_on_grid() {
        for spec in families() {
            let cfg = config(4, 2.0, spec);
            let mut prev: Option<Vec<f64>> = None;
            for re in [0.0, 0.05, 0.2, 1.0, 5.0] {
                for im in [0.0, 0.7, -3.0] {
                    let sol = solve_phis(&cfg, c(re, im)).unwrap();
                    let g = cfg.working_time().lst(c(re, im)).unwrap();
                    assert!((sol.phis[0] - g * sol.phis[1]).norm() < 1e-14);
                    for p in &sol.phis {
                        assert!(p.norm() <= 1.0 + 1e-9);
                    }
                }
                let real: Vec<f64> = solve_phis(&cfg, c(re, 0.0)).unwrap().phis.iter().map(|p| {
                    assert!(p.im.abs() < 1e-12);
                    assert!(p.re > 0.0 && p.re <= 1.0 + 1e-12);
                    p.re
                }).collect();
                if let Some(pv) = &prev {
                    for (a, b) in pv.iter().zip(&real) {
                        assert!(b < a);
                    }
                }
                prev = Some(real);
            }
        }
    }

    #[test]
    fn rejects_left_half_plane() {
        assert!(matches!(solve_phis(&config(3, 1.0, exp1()), c(-0.5, 0.0)), Err(Error::Domain(_))));
    }

    #[test]
    fn f32_solver_runs() {
        let cfg = SystemConfig::<f32>::new(
            3,
            2.0,
            WorkingTimeModel::new(DistributionSpec::Exponential { rate: 1.0 }).unwrap(),
        )
        .unwrap();
        let m = mean_lifetimes(&cfg).unwrap();
        // n = 3, μ = 2, λ = 1: ten working periods from state 1
        assert!((m[1] - 10.0).abs() < 1e-4);
    }
}
