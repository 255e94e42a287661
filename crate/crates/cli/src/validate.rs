//! Built-in oracle suite run by the `validate` subcommand.

use coldstandby::asym::limit_lst;
use coldstandby::invert::{invert_lst, InversionTarget};
use coldstandby::lst::{complex_step_means, mean_lifetimes, phi1_two_element, solve_phis};
use coldstandby::model::deterministic_eta_chain;
use coldstandby::sim::{run_batch, two_sample_critical_1pct, two_sample_ks};
use coldstandby::{Complex, DistributionSpec, Engine, InversionSettings, SystemConfig, WorkingTimeModel};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::output::num;

/// Most working periods one Monte Carlo check may simulate.
const PERIOD_BUDGET: f64 = 2e8;

/// Replications per engine in the cross-check.
const MAX_CROSS_SAMPLES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: String,
    pub status: Status,
}

impl Check {
    fn within(name: &str, value: f64, reference: f64, tolerance: f64) -> Self {
        Self::bounded(name, value, reference, (value - reference).abs(), tolerance)
    }

    fn bounded(name: &str, value: f64, reference: f64, gap: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            reference,
            tolerance: show(tolerance),
            status: if gap <= tolerance { Status::Pass } else { Status::Fail },
        }
    }

    fn skipped(name: &str, why: String) -> Self {
        Self { name: name.into(), value: f64::NAN, reference: f64::NAN, tolerance: why, status: Status::Skip }
    }
}

/// Round-trip text when short, six significant digits otherwise.
fn show(x: f64) -> String {
    let s = num(x);
    if s.len() > 12 {
        format!("{x:.6e}")
    } else {
        s
    }
}

pub fn render(checks: &[Check]) -> String {
    let mut s = format!("{:<28} {:>14} {:>14} {:>14}  status\n", "check", "value", "reference", "tolerance");
    for c in checks {
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        };
        s += &format!(
            "{:<28} {:>14} {:>14} {:>14}  {status}\n",
            c.name,
            show(c.value),
            show(c.reference),
            c.tolerance
        );
    }
    s
}

fn periods_per_lifetime(system: &SystemConfig, j0: usize) -> CliResult<f64> {
    Ok(mean_lifetimes(system)?[j0] / system.working_time().mean())
}

pub fn run(cfg: &RunConfig, system: &SystemConfig) -> CliResult<Vec<Check>> {
    let model = system.working_time();
    let mu = system.mu();
    let b = model.mean();
    let zero = Complex::new(0.0, 0.0);
    let mut checks = Vec::new();

    // transform solver against the two-element closed form
    let two = SystemConfig::new(2, mu, model.clone())?;
    let mut gap = 0.0f64;
    for r in [0.1, 1.0, 10.0] {
        for s in [Complex::new(r, 0.0), Complex::new(0.0, r), Complex::new(0.0, -r)] {
            gap = gap.max((solve_phis(&two, s)?.phis[1] - phi1_two_element(&two, s)?).norm());
        }
    }
    checks.push(Check::bounded("n=2 closed form", gap, 0.0, gap, 1e-10));

    // Wald: E τ_1 = b / ε for two elements
    let wald = mean_lifetimes(&two)?[1];
    let target = b / system.epsilon()?;
    checks.push(Check::bounded("wald mean E tau_1 = b/eps", wald, target, (wald - target).abs(), 1e-10 * target.max(1.0)));

    // Poisson weights
    let truncation = model.poisson_truncation(mu) as u32;
    let mut at_zero = 0.0;
    let mut at_one = Complex::new(0.0, 0.0);
    for j in 0..=truncation {
        at_zero += model.weighted_lst(j, zero, mu)?.re;
        at_one += model.weighted_lst(j, Complex::new(1.0, 0.0), mu)?;
    }
    checks.push(Check::within("sum g_j(0) = 1", at_zero, 1.0, 1e-10));
    let g1 = model.lst(Complex::new(1.0, 0.0))?;
    checks.push(Check::bounded("sum g_j(1) = g(1)", at_one.re, g1.re, (at_one - g1).norm(), 1e-10));

    // exact means against the derivative of the transforms
    let means = mean_lifetimes(system)?;
    let stepped = complex_step_means(system)?;
    let rel = means.iter().zip(&stepped).map(|(m, d)| ((m - d) / m).abs()).fold(0.0, f64::max);
    checks.push(Check::bounded("means = -phi'(0)", means[cfg.j0], stepped[cfg.j0], rel, 1e-8));

    // fundamental matrix of the deterministic chain against the transform system
    let det = SystemConfig::new(system.n(), mu, WorkingTimeModel::new(DistributionSpec::Deterministic { value: b })?)?;
    let chain_mean = deterministic_eta_chain(&det)?.expected_periods_from(cfg.j0)? * b;
    let det_mean = mean_lifetimes(&det)?[cfg.j0];
    checks.push(Check::bounded(
        "deterministic chain mean",
        chain_mean,
        det_mean,
        ((chain_mean - det_mean) / det_mean).abs(),
        1e-8,
    ));

    // the two simulation engines against each other and the exact mean
    let count = cfg.samples.min(MAX_CROSS_SAMPLES);
    let work = periods_per_lifetime(system, cfg.j0)? * count as f64;
    if work > PERIOD_BUDGET {
        let why = format!("{work:.1e} periods");
        checks.push(Check::skipped("engine cross-KS", why.clone()));
        checks.push(Check::skipped("Monte Carlo mean", why));
    } else {
        let a = run_batch(system, cfg.j0, count, cfg.seed, Engine::EmbeddedChain)?;
        let e = run_batch(system, cfg.j0, count, cfg.seed ^ 0x9e37_79b9_7f4a_7c15, Engine::EventDriven)?;
        let critical = two_sample_critical_1pct(count, count);
        let d = two_sample_ks(&a, &e);
        checks.push(Check::bounded("engine cross-KS", d, 0.0, d, critical));
        let se = a.stderr();
        checks.push(Check::bounded("Monte Carlo mean", a.mean(), means[cfg.j0], (a.mean() - means[cfg.j0]).abs(), 4.0 * se));
    }

    // inversion of the exponential pair b/(1 + bs)
    let settings = InversionSettings::euler().with_target(InversionTarget::Tail);
    let mut worst = 0.0f64;
    for x in [0.01, 0.1, 1.0, 3.0, 10.0, 20.0] {
        let tail = invert_lst(|s| Ok(limit_lst(s, b)), x * b, &settings)?;
        worst = worst.max((tail - (-x).exp()).abs());
    }
    checks.push(Check::bounded("inversion self-test", worst, 0.0, worst, 1e-6));
    Ok(checks)
}
