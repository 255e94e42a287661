//! Monte Carlo engines for the system lifetime and the empirical
//! distribution machinery used to compare them.
//!
//! Two engines produce the same law by different routes:
//!
//! * [`simulate_lifetime_embedded`] walks the embedded chain, drawing one
//!   working time and one Poisson repair count per period.
//! * [`simulate_lifetime_event_driven`] runs explicit failure and repair
//!   clocks and processes events in time order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{next_state, sample_repair_count_capped, SystemConfig};
use crate::real::Real;

/// Upper bound on working periods per simulated lifetime.
pub const PERIOD_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    EmbeddedChain,
    EventDriven,
}

impl Engine {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::EmbeddedChain => "embedded_chain",
            Engine::EventDriven => "event_driven",
        }
    }
}

/// Random stream of replication `index` in a batch keyed by `seed`.
///
/// The ChaCha key is expanded from `seed`; the replication index selects
/// the 64-bit stream, so replications never overlap and results do not
/// depend on how the batch is scheduled.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// SplitMix64-derived seed for sub-experiment `index` of a run keyed by `seed`.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Lifetime from `j0` broken elements by walking the embedded chain.
pub fn simulate_lifetime_embedded<T: Real, R: rand::Rng + ?Sized>(
    config: &SystemConfig<T>,
    j0: usize,
    rng: &mut R,
) -> Result<T> {
    config.check_state(j0)?;
    let n = config.n();
    let g = config.working_time();
    let mut state = j0;
    let mut elapsed = T::zero();
    for _ in 0..PERIOD_CAP {
        let eta = g.sample(rng);
        // one uniform per period in every state, including state 0
        let nu = sample_repair_count_capped(rng, config.mu(), eta, state.max(1) as u64);
        elapsed = elapsed + eta;
        let next = next_state(state, nu, n)?;
        if next.absorbed {
            return Ok(elapsed);
        }
        state = next.broken;
    }
    Err(Error::SimulationOverrun { limit: PERIOD_CAP })
}

/// Lifetime from `j0` broken elements with explicit failure and repair clocks.
pub fn simulate_lifetime_event_driven<T: Real, R: rand::Rng + ?Sized>(
    config: &SystemConfig<T>,
    j0: usize,
    rng: &mut R,
) -> Result<T> {
    config.check_state(j0)?;
    let n = config.n();
    let mu = config.mu();
    let g = config.working_time();
    let inf = T::infinity();

    let mut broken = j0;
    let mut now;
    let mut failure_at = g.sample(rng);
    let mut repair_at = if broken > 0 { T::sample_exp1(rng) / mu } else { inf };
    let mut periods = 0u64;

    loop {
        if repair_at < failure_at {
            now = repair_at;
            broken -= 1;
            repair_at = if broken > 0 { now + T::sample_exp1(rng) / mu } else { inf };
        } else {
            now = failure_at;
            broken += 1;
            if broken == n {
                return Ok(now);
            }
            periods += 1;
            if periods >= PERIOD_CAP {
                return Err(Error::SimulationOverrun { limit: PERIOD_CAP });
            }
            failure_at = now + g.sample(rng);
            if repair_at == inf {
                repair_at = now + T::sample_exp1(rng) / mu;
            }
        }
    }
}

pub fn simulate_lifetime<T: Real, R: rand::Rng + ?Sized>(
    config: &SystemConfig<T>,
    j0: usize,
    engine: Engine,
    rng: &mut R,
) -> Result<T> {
    match engine {
        Engine::EmbeddedChain => simulate_lifetime_embedded(config, j0, rng),
        Engine::EventDriven => simulate_lifetime_event_driven(config, j0, rng),
    }
}

/// Lifetimes of replications `0..count`, in replication order.
pub fn simulate_replications<T: Real>(
    config: &SystemConfig<T>,
    j0: usize,
    count: usize,
    seed: u64,
    engine: Engine,
) -> Result<Vec<T>> {
    config.check_state(j0)?;
    (0..count as u64)
        .into_par_iter()
        .map(|i| simulate_lifetime(config, j0, engine, &mut replication_rng(seed, i)))
        .collect()
}

/// `count` independent lifetimes gathered into an [`EmpiricalDistribution`].
pub fn run_batch<T: Real>(
    config: &SystemConfig<T>,
    j0: usize,
    count: usize,
    seed: u64,
    engine: Engine,
) -> Result<EmpiricalDistribution<T>> {
    if count == 0 {
        return Err(Error::InvalidParameter("batch count must be >= 1".into()));
    }
    let samples = simulate_replications(config, j0, count, seed, engine)?;
    EmpiricalDistribution::from_samples(samples, seed, engine)
}

/// Sorted lifetime samples with summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution<T> {
    samples: Vec<T>,
    mean: T,
    stderr: T,
    stderr_defined: bool,
    seed: u64,
    engine: Engine,
}

impl<T: Real> EmpiricalDistribution<T> {
    pub fn from_samples(mut samples: Vec<T>, seed: u64, engine: Engine) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidParameter("empirical distribution needs >= 1 sample".into()));
        }
        if samples.iter().any(|x| x.is_nan()) {
            return Err(Error::InvalidParameter("samples contain NaN".into()));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let (mean, stderr) = mean_and_stderr(&samples);
        let stderr_defined = samples.len() > 1;
        Ok(Self { samples, mean, stderr, stderr_defined, seed, engine })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn mean(&self) -> T {
        self.mean
    }

    /// Standard error of the mean; 0 for a single sample (see
    /// [`Self::stderr_defined`]).
    pub fn stderr(&self) -> T {
        self.stderr
    }

    pub fn stderr_defined(&self) -> bool {
        self.stderr_defined
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    /// Fraction of samples `<= t`.
    pub fn ecdf(&self, t: T) -> T {
        let k = self.samples.partition_point(|&x| x <= t);
        T::from_usize(k).unwrap() / T::from_usize(self.count()).unwrap()
    }

    /// Sample quantile with linear interpolation between order statistics.
    pub fn quantile(&self, p: T) -> T {
        let p = p.max(T::zero()).min(T::one());
        let h = p * T::from_usize(self.count() - 1).unwrap();
        let lo = h.floor().to_usize().unwrap();
        let hi = (lo + 1).min(self.count() - 1);
        let frac = h - h.floor();
        self.samples[lo] + (self.samples[hi] - self.samples[lo]) * frac
    }

    /// Every sample multiplied by `factor > 0`.
    pub fn scaled(&self, factor: T) -> Self {
        let samples: Vec<T> = self.samples.iter().map(|&x| x * factor).collect();
        let (mean, stderr) = mean_and_stderr(&samples);
        Self { samples, mean, stderr, ..self.clone() }
    }
}

fn mean_and_stderr<T: Real>(xs: &[T]) -> (T, T) {
    let n = T::from_usize(xs.len()).unwrap();
    let mean = xs.iter().copied().sum::<T>() / n;
    if xs.len() < 2 {
        return (mean, T::zero());
    }
    let ss: T = xs.iter().map(|&x| (x - mean) * (x - mean)).sum();
    let var = ss / (n - T::one());
    (mean, (var / n).sqrt())
}

/// One-sample KS distance `sup |ECDF − F|`.
///
/// At each distinct sample value `v` covering order statistics `i..k` the
/// gaps `k/n − F(v)` and `F(v⁻) − i/n` are taken, with `v⁻` the next float
/// below `v`. For continuous `F` this is the usual two-sided evaluation at
/// every order statistic; for step CDFs it respects the jump at `v`.
pub fn ks_distance<T: Real, F: Fn(T) -> T>(emp: &EmpiricalDistribution<T>, cdf: F) -> Result<T> {
    let xs = emp.samples();
    let n = T::from_usize(xs.len()).unwrap();
    let eval = |x: T| {
        let f = cdf(x);
        if f >= T::zero() && f <= T::one() {
            Ok(f)
        } else {
            Err(Error::Domain(format!("cdf({x}) = {f} is outside [0, 1]")))
        }
    };
    let mut d = T::zero();
    let mut i = 0;
    while i < xs.len() {
        let v = xs[i];
        let mut k = i;
        while k < xs.len() && xs[k] == v {
            k += 1;
        }
        let below = eval(next_below(v))? - T::from_usize(i).unwrap() / n;
        let above = T::from_usize(k).unwrap() / n - eval(v)?;
        d = d.max(above).max(below);
        i = k;
    }
    Ok(d)
}

fn next_below<T: Real>(v: T) -> T {
    if v > T::zero() {
        v - v * T::epsilon() / T::lit(2.0)
    } else if v == T::zero() {
        -T::min_positive_value()
    } else {
        v + v * T::epsilon()
    }
}

/// Two-sample KS distance `sup |ECDF_a − ECDF_b|` by merge scan.
pub fn two_sample_ks<T: Real>(a: &EmpiricalDistribution<T>, b: &EmpiricalDistribution<T>) -> T {
    let (xa, xb) = (a.samples(), b.samples());
    let (na, nb) = (T::from_usize(xa.len()).unwrap(), T::from_usize(xb.len()).unwrap());
    let (mut i, mut k) = (0usize, 0usize);
    let mut d = T::zero();
    while i < xa.len() && k < xb.len() {
        let x = xa[i].min(xb[k]);
        while i < xa.len() && xa[i] <= x {
            i += 1;
        }
        while k < xb.len() && xb[k] <= x {
            k += 1;
        }
        let gap = (T::from_usize(i).unwrap() / na - T::from_usize(k).unwrap() / nb).abs();
        d = d.max(gap);
    }
    d
}

/// Asymptotic 1% critical value `1.63·√((m+n)/(mn))` of the two-sample statistic.
pub fn two_sample_critical_1pct(m: usize, n: usize) -> f64 {
    1.63 * ((m + n) as f64 / (m as f64 * n as f64)).sqrt()
}
