//! System configuration and the embedded chain on broken-element counts.
//!
//! The chain is observed at the start of each working period; its state is
//! the number of broken elements at that instant. During a working period of
//! length `η` the repair device completes `ν ~ Poisson(μη)` repairs (counting
//! the repairs it would complete if the queue never emptied), after which the
//! working element fails.

use rand::Rng;

use crate::dist::{poisson_pmf, DistributionSpec, WorkingTimeModel};
use crate::error::{Error, Result};
use crate::linalg;
use crate::real::{ln_factorial, Real};

/// Inversion-by-search is used for Poisson means up to this value.
pub const POISSON_INVERSION_LIMIT: f64 = 30.0;

/// `(n, μ, G)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig<T> {
    n: usize,
    mu: T,
    working_time: WorkingTimeModel<T>,
}

impl<T: Real> SystemConfig<T> {
    pub fn new(n: usize, mu: T, working_time: WorkingTimeModel<T>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("n must be >= 2, got {n}")));
        }
        if !(mu.is_finite() && mu > T::zero()) {
            return Err(Error::InvalidParameter(format!("mu must be finite and > 0, got {mu}")));
        }
        Ok(Self { n, mu, working_time })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn working_time(&self) -> &WorkingTimeModel<T> {
        &self.working_time
    }

    /// Same law and size at a different repair rate.
    pub fn with_mu(&self, mu: T) -> Result<Self> {
        Self::new(self.n, mu, self.working_time.clone())
    }

    pub fn epsilon(&self) -> Result<T> {
        self.working_time.epsilon(self.mu)
    }

    pub(crate) fn check_state(&self, j: usize) -> Result<()> {
        if j < self.n {
            Ok(())
        } else {
            Err(Error::Domain(format!("state {j} outside [0, {}]", self.n - 1)))
        }
    }
}

/// Broken count at the start of a working period, or absorption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChainState {
    pub broken: usize,
    pub absorbed: bool,
}

impl ChainState {
    pub fn working(broken: usize) -> Self {
        Self { broken, absorbed: false }
    }

    pub fn absorbed(n: usize) -> Self {
        Self { broken: n, absorbed: true }
    }
}

/// `P(ν(η) = k)` for `ν(η) ~ Poisson(μη)`.
pub fn repair_count_pmf<T: Real>(mu: T, eta: T, k: u64) -> T {
    poisson_pmf(mu * eta, k)
}

/// Draws `ν(η) ~ Poisson(μη)`.
///
/// Means up to [`POISSON_INVERSION_LIMIT`] use sequential inversion of the
/// CDF; larger means use Hörmann's transformed rejection with squeeze (PTRS).
pub fn sample_repair_count<T: Real, R: Rng + ?Sized>(rng: &mut R, mu: T, eta: T) -> u64 {
    let m = (mu * eta).as_f64();
    if m <= 0.0 {
        0
    } else if m <= POISSON_INVERSION_LIMIT {
        poisson_inversion(rng, m)
    } else {
        poisson_ptrs(rng, m)
    }
}

/// Draws `min(ν(η), cap)` from a single uniform.
///
/// The embedded chain only distinguishes repair counts below the current
/// broken count, so the inversion search can stop at `cap`.
pub fn sample_repair_count_capped<T: Real, R: Rng + ?Sized>(rng: &mut R, mu: T, eta: T, cap: u64) -> u64 {
    let m = (mu * eta).as_f64();
    let u: f64 = f64::sample_open01(rng);
    if m <= 0.0 {
        return 0;
    }
    let mut k = 0u64;
    let mut p = (-m).exp();
    let mut cdf = p;
    while k < cap && u > cdf {
        k += 1;
        p *= m / k as f64;
        cdf += p;
    }
    k
}

fn poisson_inversion<R: Rng + ?Sized>(rng: &mut R, m: f64) -> u64 {
    let u: f64 = f64::sample_open01(rng);
    let mut k = 0u64;
    let mut p = (-m).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= m / k as f64;
        cdf += p;
        // rounding can leave the accumulated CDF a hair below u near 1
        if p < f64::MIN_POSITIVE && k as f64 > m {
            break;
        }
    }
    k
}

fn poisson_ptrs<R: Rng + ?Sized>(rng: &mut R, m: f64) -> u64 {
    let slam = m.sqrt();
    let loglam = m.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = f64::sample_open01(rng) - 0.5;
        let v = f64::sample_open01(rng);
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + m + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -m + k * loglam - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// Transition of the embedded chain from state `j` after `nu` repairs.
pub fn next_state(j: usize, nu: u64, n: usize) -> Result<ChainState> {
    if n < 2 || j >= n {
        return Err(Error::Domain(format!("state {j} outside [0, {}] for n = {n}", n.max(1) - 1)));
    }
    if j == 0 || nu >= j as u64 {
        return Ok(ChainState::working(1));
    }
    if j == n - 1 && nu == 0 {
        return Ok(ChainState::absorbed(n));
    }
    Ok(ChainState::working(j + 1 - nu as usize))
}

/// Absorbing chain over `{1, …, n−1} ∪ {absorbed}`.
///
/// Row/column `i < n−1` is state `i + 1`; the last index is absorption.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorbingChain<T> {
    n: usize,
    matrix: Vec<Vec<T>>,
}

/// Transition matrix of the embedded chain when `G` is a point mass at `d`.
///
/// Each working period then lasts exactly `d`, so the lifetime is `d` times a
/// discrete phase-type period count.
pub fn deterministic_eta_chain<T: Real>(config: &SystemConfig<T>) -> Result<AbsorbingChain<T>> {
    let d = match config.working_time().spec() {
        DistributionSpec::Deterministic { value } => *value,
        other => {
            return Err(Error::Domain(format!(
                "deterministic chain requires a point-mass law, got {}",
                other.family_name()
            )))
        }
    };
    let n = config.n();
    let size = n;
    let mut matrix = vec![vec![T::zero(); size]; size];
    let index = |s: ChainState| if s.absorbed { size - 1 } else { s.broken - 1 };
    for j in 1..n {
        let row = j - 1;
        let mut explicit = T::zero();
        for nu in 0..(n as u64 - 1) {
            let p = repair_count_pmf(config.mu(), d, nu);
            explicit = explicit + p;
            let to = next_state(j, nu, n)?;
            matrix[row][index(to)] = matrix[row][index(to)] + p;
        }
        // every ν ≥ n−1 ≥ j sends the chain back to state 1
        let tail = (T::one() - explicit).max(T::zero());
        matrix[row][0] = matrix[row][0] + tail;
    }
    matrix[size - 1][size - 1] = T::one();
    Ok(AbsorbingChain { n, matrix })
}

impl<T: Real> AbsorbingChain<T> {
    pub fn matrix(&self) -> &[Vec<T>] {
        &self.matrix
    }

    /// Probability of moving from `from` to `to` in one period.
    pub fn probability(&self, from: ChainState, to: ChainState) -> T {
        self.matrix[self.index(from)][self.index(to)]
    }

    fn index(&self, s: ChainState) -> usize {
        if s.absorbed {
            self.n - 1
        } else {
            s.broken - 1
        }
    }

    /// Expected number of periods to absorption from states `1..n−1`, by
    /// solving `(I − Q) m = 1` on the transient block.
    pub fn expected_periods(&self) -> Result<Vec<T>> {
        let t = self.n - 1;
        // diagonal of I − Q as the total outflow, which avoids 1 − q_ii
        let a: Vec<Vec<T>> = (0..t)
            .map(|i| {
                (0..t)
                    .map(|k| {
                        if i == k {
                            (0..=t).filter(|&l| l != i).map(|l| self.matrix[i][l]).sum()
                        } else {
                            -self.matrix[i][k]
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(linalg::solve(&a, &vec![T::one(); t])?.x)
    }

    /// Expected periods from `j0` (state 0 always moves to state 1 first).
    pub fn expected_periods_from(&self, j0: usize) -> Result<T> {
        if j0 >= self.n {
            return Err(Error::Domain(format!("state {j0} outside [0, {}]", self.n - 1)));
        }
        let m = self.expected_periods()?;
        Ok(if j0 == 0 { T::one() + m[0] } else { m[j0 - 1] })
    }

    /// `P(N = k)` for `k = 1..=max_periods`, `N` the number of working
    /// periods until absorption started from `j0`.
    pub fn period_count_pmf(&self, j0: usize, max_periods: usize) -> Result<Vec<T>> {
        if j0 >= self.n {
            return Err(Error::Domain(format!("state {j0} outside [0, {}]", self.n - 1)));
        }
        if j0 == 0 {
            let mut shifted = vec![T::zero()];
            if max_periods > 1 {
                shifted.extend(self.period_count_pmf(1, max_periods - 1)?);
            }
            shifted.truncate(max_periods);
            return Ok(shifted);
        }
        let t = self.n - 1;
        let mut dist = vec![T::zero(); t];
        dist[j0 - 1] = T::one();
        let mut out = Vec::with_capacity(max_periods);
        for _ in 0..max_periods {
            out.push((0..t).map(|i| dist[i] * self.matrix[i][t]).sum());
            dist = (0..t).map(|k| (0..t).map(|i| dist[i] * self.matrix[i][k]).sum()).collect();
        }
        Ok(out)
    }
}
