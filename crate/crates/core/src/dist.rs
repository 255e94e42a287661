//! The working-time law `G` of a single element: validation, moments,
//! sampling and every transform the lifetime equations consume.
//!
//! For a law `G` with mean `b` and repair rate `μ` the model exposes
//!
//! * `g(s) = ∫ e^{-sx} dG(x)` ([`WorkingTimeModel::lst`]),
//! * `ε(μ) = g(μ)`, the probability that a repair outlasts a working period,
//! * `g_j(s) = ∫ e^{-(s+μ)x} (μx)^j / j! dG(x)` ([`WorkingTimeModel::weighted_lst`]),
//! * `γ_j(μ) = ∫ x (μx)^j / j! e^{-μx} dG(x) = -g_j'(0)` ([`WorkingTimeModel::gamma`]).
//!
//! Exponential, Erlang, deterministic and hyperexponential laws have closed
//! forms for all of these. The uniform law has a closed-form `g` only.
//! Weibull and lognormal laws are handled entirely by quadrature.

use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::real::{ln_factorial, Real};

/// Absolute tolerance of every quadrature-backed transform.
pub const QUADRATURE_TOLERANCE: f64 = 1e-10;

/// Probability mass beyond the quadrature cutoff quantile.
pub const TAIL_CUTOFF: f64 = 1e-12;

/// Poisson tail mass allowed beyond the weight truncation index.
pub const POISSON_TAIL: f64 = 1e-12;

const SPLIT_TAILS: [f64; 4] = [0.5, 0.1, 0.01, 0.001];

/// Parametric family of the working-time law.
///
/// In configuration files this is written as
/// `{"family": "erlang", "params": {"shape": 3, "rate": 2.0}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "family",
    content = "params",
    rename_all = "snake_case",
    deny_unknown_fields
)]
pub enum DistributionSpec<T> {
    Exponential { rate: T },
    Erlang { shape: u32, rate: T },
    /// Point mass. Not continuous, but it gives an exact discrete oracle.
    Deterministic { value: T },
    Uniform { lo: T, hi: T },
    Hyperexponential { weights: Vec<T>, rates: Vec<T> },
    Weibull { shape: T, scale: T },
    Lognormal { log_mean: T, log_sd: T },
}

fn positive<T: Real>(name: &str, v: T) -> Result<()> {
    if v.is_finite() && v > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be finite and > 0, got {v}")))
    }
}

fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Poisson(m) mass at `k`, evaluated in log space.
pub fn poisson_pmf<T: Real>(m: T, k: u64) -> T {
    if m <= T::zero() {
        return if k == 0 { T::one() } else { T::zero() };
    }
    let kf = T::from_u64(k).expect("count fits");
    (kf * m.ln() - m - T::lit(ln_factorial(k))).exp()
}

impl<T: Real> DistributionSpec<T> {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Exponential { rate } => positive("rate", *rate),
            Self::Erlang { shape, rate } => {
                if *shape == 0 {
                    return Err(Error::InvalidParameter("shape must be >= 1".into()));
                }
                positive("rate", *rate)
            }
            Self::Deterministic { value } => positive("value", *value),
            Self::Uniform { lo, hi } => {
                if !(lo.is_finite() && *lo >= T::zero()) {
                    return Err(Error::InvalidParameter(format!("lo must be >= 0, got {lo}")));
                }
                if !(hi.is_finite() && *hi > *lo) {
                    return Err(Error::InvalidParameter(format!("hi must be > lo, got {hi}")));
                }
                Ok(())
            }
            Self::Hyperexponential { weights, rates } => {
                if weights.is_empty() || weights.len() != rates.len() {
                    return Err(Error::InvalidParameter(
                        "weights and rates must be non-empty and of equal length".into(),
                    ));
                }
                for &w in weights {
                    positive("weights[i]", w)?;
                }
                for &r in rates {
                    positive("rates[i]", r)?;
                }
                let total: T = weights.iter().copied().sum();
                if (total - T::one()).abs() > T::lit(1e-9) {
                    return Err(Error::InvalidParameter(format!(
                        "weights must sum to 1, got {total}"
                    )));
                }
                Ok(())
            }
            Self::Weibull { shape, scale } => {
                positive("shape", *shape)?;
                positive("scale", *scale)
            }
            Self::Lognormal { log_mean, log_sd } => {
                if !log_mean.is_finite() {
                    return Err(Error::InvalidParameter("log_mean must be finite".into()));
                }
                positive("log_sd", *log_sd)
            }
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::Erlang { .. } => "erlang",
            Self::Deterministic { .. } => "deterministic",
            Self::Uniform { .. } => "uniform",
            Self::Hyperexponential { .. } => "hyperexponential",
            Self::Weibull { .. } => "weibull",
            Self::Lognormal { .. } => "lognormal",
        }
    }

    pub fn mean(&self) -> T {
        let two = T::lit(2.0);
        match self {
            Self::Exponential { rate } => rate.recip(),
            Self::Erlang { shape, rate } => T::from_u32(*shape).unwrap() / *rate,
            Self::Deterministic { value } => *value,
            Self::Uniform { lo, hi } => (*lo + *hi) / two,
            Self::Hyperexponential { weights, rates } => {
                weights.iter().zip(rates).map(|(&w, &r)| w / r).sum()
            }
            Self::Weibull { shape, scale } => {
                let g = statrs::function::gamma::gamma(1.0 + shape.recip().as_f64());
                *scale * T::lit(g)
            }
            Self::Lognormal { log_mean, log_sd } => (*log_mean + *log_sd * *log_sd / two).exp(),
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(self, Self::Deterministic { .. })
    }

    /// `g(s)` has an analytic expression.
    pub fn has_closed_form_lst(&self) -> bool {
        !matches!(self, Self::Weibull { .. } | Self::Lognormal { .. })
    }

    /// `g_j(s)` has an analytic expression.
    pub fn has_closed_form_weighted(&self) -> bool {
        self.has_closed_form_lst() && !matches!(self, Self::Uniform { .. })
    }

    /// `P(η > x)`.
    pub fn survival(&self, x: T) -> T {
        if x < T::zero() {
            return T::one();
        }
        match self {
            Self::Exponential { rate } => (-*rate * x).exp(),
            Self::Erlang { shape, rate } => {
                let lx = *rate * x;
                let mut term = T::one();
                let mut acc = T::one();
                for i in 1..*shape {
                    term = term * lx / T::from_u32(i).unwrap();
                    acc = acc + term;
                }
                (-lx).exp() * acc
            }
            Self::Deterministic { value } => {
                if x < *value {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Self::Uniform { lo, hi } => {
                if x <= *lo {
                    T::one()
                } else if x >= *hi {
                    T::zero()
                } else {
                    (*hi - x) / (*hi - *lo)
                }
            }
            Self::Hyperexponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(&w, &r)| w * (-r * x).exp())
                .sum(),
            Self::Weibull { shape, scale } => (-(x / *scale).powf(*shape)).exp(),
            Self::Lognormal { log_mean, log_sd } => {
                if x <= T::zero() {
                    return T::one();
                }
                let z = ((x.ln() - *log_mean) / (*log_sd * T::SQRT_2())).as_f64();
                T::lit(0.5 * statrs::function::erf::erfc(z))
            }
        }
    }

    pub fn cdf(&self, x: T) -> T {
        match self {
            Self::Lognormal { log_mean, log_sd } if x > T::zero() => {
                let z = ((x.ln() - *log_mean) / (*log_sd * T::SQRT_2())).as_f64();
                T::lit(0.5 * statrs::function::erf::erfc(-z))
            }
            _ => T::one() - self.survival(x),
        }
    }

    /// Density, `None` for the point mass.
    pub fn pdf(&self, x: T) -> Option<T> {
        if x < T::zero() {
            return Some(T::zero());
        }
        let v = match self {
            Self::Exponential { rate } => *rate * (-*rate * x).exp(),
            Self::Erlang { shape, rate } => {
                if x == T::zero() {
                    return Some(if *shape == 1 { *rate } else { T::zero() });
                }
                let k = T::from_u32(*shape).unwrap();
                (k * rate.ln() + (k - T::one()) * x.ln() - *rate * x
                    - T::lit(ln_factorial(u64::from(*shape) - 1)))
                .exp()
            }
            Self::Deterministic { .. } => return None,
            Self::Uniform { lo, hi } => {
                if x < *lo || x > *hi {
                    T::zero()
                } else {
                    (*hi - *lo).recip()
                }
            }
            Self::Hyperexponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(&w, &r)| w * r * (-r * x).exp())
                .sum(),
            Self::Weibull { shape, scale } => {
                if x == T::zero() {
                    return Some(if *shape == T::one() { scale.recip() } else { T::zero() });
                }
                let u = x / *scale;
                *shape / *scale * u.powf(*shape - T::one()) * (-u.powf(*shape)).exp()
            }
            Self::Lognormal { log_mean, log_sd } => {
                if x == T::zero() {
                    return Some(T::zero());
                }
                let z = (x.ln() - *log_mean) / *log_sd;
                (-z * z / T::lit(2.0)).exp() / (x * *log_sd * (T::TAU()).sqrt())
            }
        };
        Some(v)
    }

    pub fn support_lower(&self) -> T {
        match self {
            Self::Deterministic { value } => *value,
            Self::Uniform { lo, .. } => *lo,
            _ => T::zero(),
        }
    }

    /// Smallest `x` with `P(η > x) <= tail`.
    pub fn upper_quantile(&self, tail: T) -> T {
        match self {
            Self::Exponential { rate } => -tail.ln() / *rate,
            Self::Deterministic { value } => *value,
            Self::Uniform { lo, hi } => *hi - tail * (*hi - *lo),
            Self::Weibull { shape, scale } => *scale * (-tail.ln()).powf(shape.recip()),
            _ => {
                let mut lo = self.support_lower();
                let mut hi = self.mean().max(T::min_positive_value());
                while self.survival(hi) > tail {
                    lo = hi;
                    hi = hi * T::lit(2.0);
                }
                for _ in 0..200 {
                    let mid = (lo + hi) / T::lit(2.0);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if self.survival(mid) > tail {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        }
    }

    /// Draws one working time.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        match self {
            Self::Exponential { rate } => T::sample_exp1(rng) / *rate,
            Self::Erlang { shape, rate } => {
                (0..*shape).map(|_| T::sample_exp1(rng)).sum::<T>() / *rate
            }
            Self::Deterministic { value } => *value,
            Self::Uniform { lo, hi } => *lo + (*hi - *lo) * T::sample_open01(rng),
            Self::Hyperexponential { weights, rates } => {
                let u = T::sample_open01(rng);
                let mut acc = T::zero();
                let mut branch = rates.len() - 1;
                for (i, &w) in weights.iter().enumerate() {
                    acc = acc + w;
                    if u <= acc {
                        branch = i;
                        break;
                    }
                }
                T::sample_exp1(rng) / rates[branch]
            }
            Self::Weibull { shape, scale } => *scale * T::sample_exp1(rng).powf(shape.recip()),
            Self::Lognormal { log_mean, log_sd } => {
                (*log_mean + *log_sd * T::sample_std_normal(rng)).exp()
            }
        }
    }

    fn closed_lst(&self, s: Complex<T>) -> Option<Complex<T>> {
        let v = match self {
            Self::Exponential { rate } => c(*rate) / (s + *rate),
            Self::Erlang { shape, rate } => (c(*rate) / (s + *rate)).powi(*shape as i32),
            Self::Deterministic { value } => (-s * *value).exp(),
            Self::Uniform { lo, hi } => {
                let w = *hi - *lo;
                let u = s * w;
                // (1 - e^{-u}) / u
                let ratio = if u.norm() < T::lit(1e-3) {
                    let one = c(T::one());
                    one - u / T::lit(2.0) + u * u / T::lit(6.0) - u * u * u / T::lit(24.0)
                        + u * u * u * u / T::lit(120.0)
                } else {
                    (c(T::one()) - (-u).exp()) / u
                };
                (-s * *lo).exp() * ratio
            }
            Self::Hyperexponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(&w, &r)| c(w * r) / (s + r))
                .fold(c(T::zero()), |a, b| a + b),
            Self::Weibull { .. } | Self::Lognormal { .. } => return None,
        };
        Some(v)
    }

    fn closed_weighted(&self, j: u32, s: Complex<T>, mu: T) -> Option<Complex<T>> {
        let z = s + mu;
        let exp_branch = |rate: T| {
            let base = c(T::one()) / (z + rate);
            base * rate * (base * mu).powi(j as i32)
        };
        let v = match self {
            Self::Exponential { rate } => exp_branch(*rate),
            Self::Erlang { shape, rate } => {
                let mut binom = T::one();
                for i in 1..*shape {
                    binom = binom * T::from_u32(j + i).unwrap() / T::from_u32(i).unwrap();
                }
                let base = c(T::one()) / (z + *rate);
                (base * *rate).powi(*shape as i32) * (base * mu).powi(j as i32) * binom
            }
            Self::Deterministic { value } => {
                (-s * *value).exp() * poisson_pmf(mu * *value, u64::from(j))
            }
            Self::Hyperexponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(&w, &r)| exp_branch(r) * w)
                .fold(c(T::zero()), |a, b| a + b),
            _ => return None,
        };
        Some(v)
    }
}

/// How `g` and `g_j` are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformBackend {
    ClosedForm,
    Quadrature,
}

/// A validated working-time law together with its mean and transform backend.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingTimeModel<T> {
    spec: DistributionSpec<T>,
    mean_b: T,
    backend: TransformBackend,
    breakpoints: Vec<T>,
}

impl<T: Real> WorkingTimeModel<T> {
    /// Uses closed forms whenever the family has them.
    pub fn new(spec: DistributionSpec<T>) -> Result<Self> {
        let backend = if spec.has_closed_form_lst() {
            TransformBackend::ClosedForm
        } else {
            TransformBackend::Quadrature
        };
        Self::with_backend(spec, backend)
    }

    pub fn with_backend(spec: DistributionSpec<T>, backend: TransformBackend) -> Result<Self> {
        spec.validate()?;
        if backend == TransformBackend::ClosedForm && !spec.has_closed_form_lst() {
            return Err(Error::InvalidParameter(format!(
                "{} has no closed-form transform",
                spec.family_name()
            )));
        }
        let mut breakpoints = vec![spec.support_lower()];
        breakpoints.extend(SPLIT_TAILS.iter().map(|&q| spec.upper_quantile(T::lit(q))));
        breakpoints.push(spec.upper_quantile(T::lit(TAIL_CUTOFF)));
        breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breakpoints.dedup();
        let mean_b = spec.mean();
        if !(mean_b.is_finite() && mean_b > T::zero()) {
            return Err(Error::InvalidParameter(format!("mean must be finite, got {mean_b}")));
        }
        Ok(Self { spec, mean_b, backend, breakpoints })
    }

    pub fn spec(&self) -> &DistributionSpec<T> {
        &self.spec
    }

    pub fn backend(&self) -> TransformBackend {
        self.backend
    }

    /// `b = E η`.
    pub fn mean(&self) -> T {
        self.mean_b
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> T {
        self.spec.sample(rng)
    }

    /// Right end of the quadrature range (the `1 - 1e-12` quantile).
    pub fn cutoff(&self) -> T {
        *self.breakpoints.last().unwrap()
    }

    /// Integrates `h(x) dG(x)` over the truncated support.
    fn expect<F>(&self, extra: &[T], h: F) -> Result<Complex<T>>
    where
        F: Fn(T) -> Complex<T>,
    {
        if let DistributionSpec::Deterministic { value } = self.spec {
            return Ok(h(value));
        }
        let lo = self.breakpoints[0];
        let hi = self.cutoff();
        let mut points = self.breakpoints.clone();
        points.extend(extra.iter().copied().filter(|&p| p > lo && p < hi));
        let spec = &self.spec;
        quad::integrate(
            |x| h(x) * spec.pdf(x).unwrap_or_else(T::zero),
            &points,
            T::lit(QUADRATURE_TOLERANCE),
        )
    }

    /// Laplace–Stieltjes transform `g(s)`.
    pub fn lst(&self, s: Complex<T>) -> Result<Complex<T>> {
        check_half_plane(s)?;
        if s.re == T::zero() && s.im == T::zero() {
            return Ok(c(T::one()));
        }
        if self.backend == TransformBackend::ClosedForm {
            if let Some(v) = self.spec.closed_lst(s) {
                return Ok(v);
            }
        }
        let scale = s.re.max(T::zero());
        let extra: Vec<T> = if scale > T::zero() {
            [1.0, 10.0, 40.0].iter().map(|&k| T::lit(k) / scale).collect()
        } else {
            Vec::new()
        };
        self.expect(&extra, |x| (-s * x).exp())
    }

    /// `ε(μ) = P(ξ > η)`.
    pub fn epsilon(&self, mu: T) -> Result<T> {
        if !(mu >= T::zero()) {
            return Err(Error::Domain(format!("mu must be >= 0, got {mu}")));
        }
        Ok(self.lst(c(mu))?.re)
    }

    /// Poisson-weighted transform `g_j(s)` at repair rate `mu`.
    pub fn weighted_lst(&self, j: u32, s: Complex<T>, mu: T) -> Result<Complex<T>> {
        check_half_plane(s)?;
        if !(mu >= T::zero()) {
            return Err(Error::Domain(format!("mu must be >= 0, got {mu}")));
        }
        if mu == T::zero() {
            return if j == 0 { self.lst(s) } else { Ok(c(T::zero())) };
        }
        if self.backend == TransformBackend::ClosedForm {
            if let Some(v) = self.spec.closed_weighted(j, s, mu) {
                return Ok(v);
            }
        }
        // The weight peaks near x = j/μ and decays on the scale 1/μ.
        let unit = T::from_u32(j + 1).unwrap() / (mu + s.re.max(T::zero()));
        let extra: Vec<T> = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 32.0]
            .iter()
            .map(|&k| unit * T::lit(k))
            .collect();
        let jj = u64::from(j);
        self.expect(&extra, |x| (-s * x).exp() * poisson_pmf(mu * x, jj))
    }

    /// `γ_j(μ) = ∫ x (μx)^j/j! e^{-μx} dG(x)`, via `γ_j = (j+1)/μ · g_{j+1}(0)`.
    pub fn gamma(&self, j: u32, mu: T) -> Result<T> {
        if !(mu > T::zero()) {
            return Err(Error::Domain(format!("mu must be > 0, got {mu}")));
        }
        let next = self.weighted_lst(j + 1, c(T::zero()), mu)?.re;
        Ok(T::from_u32(j + 1).unwrap() / mu * next)
    }

    /// Smallest `J` with `P(Poisson(μ·x_max) > J) < 1e-12`, where `x_max`
    /// is the quadrature cutoff.
    pub fn poisson_truncation(&self, mu: T) -> usize {
        let m = (mu * self.cutoff()).as_f64();
        if m <= 0.0 {
            return 0;
        }
        let mut pmf = (-m).exp();
        let mut cdf = pmf;
        let mut k = 0usize;
        // Start from the mode when e^{-m} underflows.
        if pmf == 0.0 {
            k = m.floor() as usize;
            pmf = poisson_pmf(m, k as u64);
            cdf = statrs_poisson_cdf(m, k as u64);
        }
        while 1.0 - cdf >= POISSON_TAIL {
            k += 1;
            pmf *= m / k as f64;
            cdf += pmf;
            if pmf == 0.0 && k as f64 > m {
                break;
            }
        }
        k
    }
}

fn statrs_poisson_cdf(m: f64, k: u64) -> f64 {
    use statrs::distribution::{DiscreteCDF, Poisson};
    Poisson::new(m).map(|p| p.cdf(k)).unwrap_or(1.0)
}

pub(crate) fn check_half_plane<T: Real>(s: Complex<T>) -> Result<()> {
    if s.re >= T::zero() && s.im.is_finite() && s.re.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("transform argument must satisfy Re(s) >= 0, got {s}")))
    }
}
