//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits nonzero if any criterion fails.
//!
//! Reference values are computed here from closed forms, independently of
//! the library code paths they check.

use std::process::ExitCode;
use std::time::Instant;

use coldstandby::asym::{
    convergence_sweep, expansion_check, limit_lst, ratio_recursion_check, vanishing_coefficients,
    SweepPlan,
};
use coldstandby::invert::{invert_cdf, invert_lst, InversionTarget};
use coldstandby::lst::{mean_lifetimes, solve_phis};
use coldstandby::model::deterministic_eta_chain;
use coldstandby::sim::{child_seed, run_batch, two_sample_critical_1pct, two_sample_ks};
use coldstandby::{
    Complex, DistributionSpec, Engine, InversionSettings, Result, SystemConfig, WorkingTimeModel, C64,
};

/// Largest number of simulated working periods spent on one engine in one
/// cell of the engine cross-validation matrix.
const PERIOD_BUDGET: f64 = 3e9;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn config(n: usize, mu: f64, spec: DistributionSpec) -> Result<SystemConfig> {
    SystemConfig::new(n, mu, WorkingTimeModel::new(spec)?)
}

fn exp1() -> DistributionSpec {
    DistributionSpec::Exponential { rate: 1.0 }
}

fn det1() -> DistributionSpec {
    DistributionSpec::Deterministic { value: 1.0 }
}

fn uniform02() -> DistributionSpec {
    DistributionSpec::Uniform { lo: 0.0, hi: 2.0 }
}

fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Closed-form `ε(μ) = g(μ)` for the families that have one.
fn epsilon_oracle(spec: &DistributionSpec, mu: f64) -> f64 {
    match spec {
        DistributionSpec::Exponential { rate } => rate / (rate + mu),
        DistributionSpec::Erlang { shape, rate } => (rate / (rate + mu)).powi(*shape as i32),
        DistributionSpec::Deterministic { value } => (-mu * value).exp(),
        DistributionSpec::Uniform { lo, hi } => ((-mu * lo).exp() - (-mu * hi).exp()) / (mu * (hi - lo)),
        DistributionSpec::Hyperexponential { weights, rates } => {
            weights.iter().zip(rates).map(|(w, r)| w * r / (r + mu)).sum()
        }
        _ => unreachable!("no closed form"),
    }
}

fn criterion_1() -> Result<Outcome> {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for spec in [exp1(), det1()] {
        for mu in [1.0, 5.0, 20.0] {
            let cfg = config(2, mu, spec.clone())?;
            for r in [0.1, 1.0, 10.0] {
                for s in [c(r, 0.0), c(0.0, r), c(0.0, -r)] {
                    let (g, g0) = match spec {
                        DistributionSpec::Exponential { .. } => {
                            (c(1.0, 0.0) / (s + 1.0), c(1.0, 0.0) / (s + 1.0 + mu))
                        }
                        _ => ((-s).exp(), (-(s + mu)).exp()),
                    };
                    let want = g0 / (c(1.0, 0.0) - g + g0);
                    let got = solve_phis(&cfg, s)?.phis[1];
                    worst = worst.max((got - want).norm());
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Ok(Outcome::new(
        worst < 1e-10 && secs < 1.0,
        format!("max |dphi_1| = {worst:.2e} (< 1e-10), runtime {secs:.3}s (< 1s)"),
    ))
}

fn criterion_2() -> Result<Outcome> {
    const N: usize = 100_000;
    let critical = two_sample_critical_1pct(N, N);
    let mut pass = true;
    let (mut ran, mut failed, mut skipped) = (0, 0, 0);
    let mut cell = 0u64;
    for n in [2usize, 3, 4] {
        for spec in [exp1(), det1(), uniform02()] {
            for mu in [0.5, 2.0, 10.0] {
                for (i, j0) in [1, n - 1].into_iter().enumerate() {
                    // seeds follow the position in the full matrix
                    cell += 1;
                    if i == 1 && j0 == 1 {
                        continue;
                    }
                    let cfg = config(n, mu, spec.clone())?;
                    let b = cfg.working_time().mean();
                    let exact = mean_lifetimes(&cfg)?[j0];
                    // Wald: E τ = b · E(periods)
                    let periods = exact / b;
                    let work = periods * N as f64;
                    let label = format!("n={n} {} mu={mu} j0={j0}", spec.family_name());
                    if work > PERIOD_BUDGET {
                        pass = false;
                        skipped += 1;
                        println!("    {label}: not run, needs {work:.2e} periods per engine");
                        continue;
                    }
                    let a = run_batch(&cfg, j0, N, child_seed(2, 2 * cell), Engine::EmbeddedChain)?;
                    let e = run_batch(&cfg, j0, N, child_seed(2, 2 * cell + 1), Engine::EventDriven)?;
                    let d = two_sample_ks(&a, &e);
                    ran += 1;
                    if d >= critical {
                        pass = false;
                        failed += 1;
                    }
                    println!(
                        "    {label}: D = {d:.4} {}; means {:.4} and {:.4} vs exact {exact:.4} (z = {:+.2}, {:+.2})",
                        if d < critical { "ok" } else { "REJECT" },
                        a.mean(),
                        e.mean(),
                        (a.mean() - exact) / a.stderr(),
                        (e.mean() - exact) / e.stderr()
                    );
                }
            }
        }
    }
    Ok(Outcome::new(
        pass,
        format!(
            "{ran} cells run, {failed} above critical {critical:.4}; {skipped} cells beyond the \
             {PERIOD_BUDGET:.0e}-period budget"
        ),
    ))
}

fn criterion_3() -> Result<Outcome> {
    let families = [
        exp1(),
        DistributionSpec::Exponential { rate: 2.5 },
        DistributionSpec::Erlang { shape: 3, rate: 2.0 },
        det1(),
        uniform02(),
        DistributionSpec::Hyperexponential { weights: vec![0.3, 0.7], rates: vec![0.5, 4.0] },
    ];
    let mut worst = 0.0f64;
    for spec in &families {
        for mu in [0.5, 1.0, 3.0, 10.0] {
            let cfg = config(2, mu, spec.clone())?;
            let want = spec.mean() / epsilon_oracle(spec, mu);
            let got = mean_lifetimes(&cfg)?[1];
            worst = worst.max((got - want).abs());
        }
    }
    let cfg = config(2, 1.0, exp1())?;
    let exact = mean_lifetimes(&cfg)?[1];
    let emp = run_batch(&cfg, 1, 1_000_000, 3, Engine::EmbeddedChain)?;
    let z = (emp.mean() - exact).abs() / emp.stderr();
    Ok(Outcome::new(
        worst < 1e-10 && z < 3.0 && (exact - 2.0).abs() < 1e-10,
        format!(
            "max |E tau_1 - b/eps| = {worst:.2e} over {} families; Monte Carlo {:.5} vs {exact:.5} \
             ({z:.2} standard errors)",
            families.len(),
            emp.mean()
        ),
    ))
}

fn criterion_4() -> Result<Outcome> {
    const N: usize = 100_000;
    let cfg = config(3, 2.0, det1())?;
    let chain = deterministic_eta_chain(&cfg)?;
    let exact = chain.expected_periods_from(1)?;
    let emp = run_batch(&cfg, 1, N, 4, Engine::EmbeddedChain)?;
    // unit working periods: the lifetime is the period count
    let z = (emp.mean() - exact).abs() / emp.stderr();
    let pmf = chain.period_count_pmf(1, 10)?;
    let mut counts = [0usize; 11];
    for &x in emp.samples() {
        let k = x.round() as usize;
        if k <= 10 {
            counts[k] += 1;
        }
    }
    let mut worst_z = 0.0f64;
    for k in 1..=10 {
        let p = pmf[k - 1];
        let f = counts[k] as f64 / N as f64;
        let sd = (p * (1.0 - p) / N as f64).sqrt();
        worst_z = worst_z.max((f - p).abs() / sd);
    }
    Ok(Outcome::new(
        z < 3.0 && worst_z < 4.0,
        format!(
            "mean periods {exact:.4} vs Monte Carlo {:.4} ({z:.2} standard errors); period counts \
             1..10 within {worst_z:.2} sigma (< 4)",
            emp.mean()
        ),
    ))
}

fn sweep(n: usize, mu_list: &[f64], seed: u64) -> Result<coldstandby::asym::AsymptoticReport<f64>> {
    convergence_sweep(&SweepPlan {
        template: config(n, mu_list[0], exp1())?,
        j: 1,
        mu_list: mu_list.to_vec(),
        sample_count: 100_000,
        seed,
        s_grid: vec![0.25, 1.0, 4.0],
        engine: Engine::EmbeddedChain,
    })
}

fn criterion_5() -> Result<Outcome> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (n, grid) in [(2usize, [5.0, 10.0, 20.0, 40.0]), (3, [3.0, 6.0, 12.0, 24.0])] {
        let report = sweep(n, &grid, 5)?;
        let ks: Vec<f64> = report.rows.iter().map(|r| r.ks_scaled).collect();
        let last = report.rows.last().unwrap();
        let ok = strictly_decreasing(&ks) && last.ks_scaled < 0.05 && (0.9..=1.1).contains(&last.scaled_mean_ratio);
        pass &= ok;
        let shown: Vec<String> = ks.iter().map(|k| format!("{k:.4}")).collect();
        parts.push(format!("n={n}: KS [{}], mean ratio {:.4}", shown.join(", "), last.scaled_mean_ratio));
    }
    Ok(Outcome::new(pass, parts.join("; ")))
}

fn criterion_6() -> Result<Outcome> {
    let mut worst = 0.0f64;
    for (n, mu) in [(2usize, 40.0), (3, 24.0)] {
        let cfg = config(n, mu, exp1())?;
        let b = 1.0;
        let scale = (1.0 / (1.0 + mu)).powi(n as i32 - 1);
        for j in [0, 1, n - 1] {
            for s in [0.25 / b, 1.0 / b, 4.0 / b] {
                let phi = solve_phis(&cfg, c(scale * s, 0.0))?.phis[j];
                worst = worst.max((phi - c(1.0 / (1.0 + b * s), 0.0)).norm());
            }
        }
    }
    Ok(Outcome::new(worst < 0.05, format!("max lst_gap over n in {{2,3}}, j in {{0,1,n-1}} = {worst:.4} (< 0.05)")))
}

fn criterion_7() -> Result<Outcome> {
    let model = WorkingTimeModel::new(exp1())?;
    let mut worst_rg = 0.0f64;
    let mut oracle_gap = 0.0f64;
    for mu in [40.0, 80.0, 160.0] {
        let rep = expansion_check(&model, 3, mu, 1.0)?;
        if rep.x >= 1e-3 {
            return Ok(Outcome::new(false, format!("eps^2 s = {} not below 1e-3 at mu={mu}", rep.x)));
        }
        // r_g = 1/(1 + x) for the unit exponential
        oracle_gap = oracle_gap.max((rep.r_g - 1.0 / (1.0 + rep.x)).abs());
        worst_rg = worst_rg.max(rep.deviation_g());
    }
    let grid = [10.0, 20.0, 40.0, 80.0];
    let coeffs = vanishing_coefficients(&model, &grid)?;
    for v in &coeffs {
        oracle_gap = oracle_gap.max((v.g1_at_zero - v.mu / (1.0 + v.mu).powi(2)).abs());
        oracle_gap = oracle_gap.max((v.gamma0 - 1.0 / (1.0 + v.mu).powi(2)).abs());
    }
    let g1: Vec<f64> = coeffs.iter().map(|v| v.g1_at_zero).collect();
    let gamma0: Vec<f64> = coeffs.iter().map(|v| v.gamma0).collect();
    let g1_ok = strictly_decreasing(&g1) && g1[3] < 1e-3;
    let gamma0_ok = strictly_decreasing(&gamma0) && gamma0[3] < 1e-3;
    let det = vanishing_coefficients(&WorkingTimeModel::new(det1())?, &grid)?;
    Ok(Outcome::new(
        worst_rg < 1e-2 && g1_ok && gamma0_ok && oracle_gap < 1e-9,
        format!(
            "max |r_g - 1| = {worst_rg:.2e}; closed-form gap {oracle_gap:.1e}; exponential g_1(0) at mu=80 = {:.3e}, gamma_0 = {:.3e} \
             (both must be < 1e-3); deterministic g_1(0) at mu=80 = {:.1e} for comparison",
            g1[3], gamma0[3], det[3].g1_at_zero
        ),
    ))
}

fn criterion_8() -> Result<Outcome> {
    let mut reports = Vec::new();
    for mu in [10.0, 40.0, 160.0] {
        reports.push(ratio_recursion_check(&config(4, mu, exp1())?, 1.0)?);
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, &(k, _)) in reports[0].deviations.iter().enumerate() {
        let d: Vec<f64> = reports.iter().map(|r| r.deviations[i].1).collect();
        pass &= strictly_decreasing(&d);
        parts.push(format!("d_{k} = [{:.2e}, {:.2e}, {:.2e}]", d[0], d[1], d[2]));
    }
    let gap = reports[2].max_ratio_gap();
    pass &= gap < 0.02;
    Ok(Outcome::new(pass, format!("{}; max |phi_k/phi_1 - 1| at mu=160 = {gap:.4} (< 0.02)", parts.join(", "))))
}

fn criterion_9() -> Result<Outcome> {
    let cfg = config(3, 2.0, exp1())?;
    let eps = 1.0 / 3.0;
    let b = 1.0;
    let emp = run_batch(&cfg, 1, 1_000_000, 9, Engine::EmbeddedChain)?;
    let settings = InversionSettings::euler();
    let mut worst = 0.0f64;
    for f in [0.5, 1.0, 2.0, 5.0, 10.0] {
        let t = f * b / (eps * eps);
        let v = invert_cdf(&cfg, 1, t, &settings)?;
        worst = worst.max((v - emp.ecdf(t)).abs());
    }
    let mut self_test = 0.0f64;
    let tail = settings.with_target(InversionTarget::Tail);
    for b in [0.5f64, 1.0, 3.0] {
        for x in [0.01f64, 0.1, 1.0, 3.0, 10.0, 20.0] {
            let t = x * b;
            let v = invert_lst(|s| Ok(limit_lst(s, b)), t, &tail)?;
            self_test = self_test.max((v - (-x).exp()).abs());
            let v = invert_lst(|s| Ok(limit_lst(s, b)), t, &settings)?;
            self_test = self_test.max((v + (-x).exp_m1()).abs());
        }
    }
    Ok(Outcome::new(
        worst < 0.01 && self_test < 1e-6,
        format!("max |CDF - ECDF| = {worst:.4} (< 0.01); exponential pair error {self_test:.2e} (< 1e-6)"),
    ))
}

fn criterion_10() -> Result<Outcome> {
    let mut phi_gap = 0.0f64;
    let mut weight_gap = 0.0f64;
    for n in [2usize, 3, 4] {
        for spec in [exp1(), det1(), uniform02()] {
            for mu in [0.5, 2.0, 10.0] {
                let cfg = config(n, mu, spec.clone())?;
                let sol = solve_phis(&cfg, c(0.0, 0.0))?;
                for p in &sol.phis {
                    phi_gap = phi_gap.max((p - c(1.0, 0.0)).norm());
                }
                let model = cfg.working_time();
                let total: f64 = (0..=model.poisson_truncation(mu) as u32)
                    .map(|j| model.weighted_lst(j, c(0.0, 0.0), mu).map(|g| g.re))
                    .sum::<Result<f64>>()?;
                weight_gap = weight_gap.max((total - 1.0).abs());
            }
        }
    }
    let cfg = config(3, 2.0, uniform02())?;
    let a = run_batch(&cfg, 1, 20_000, 10, Engine::EmbeddedChain)?;
    let b = run_batch(&cfg, 1, 20_000, 10, Engine::EmbeddedChain)?;
    let same_batch = a.samples().iter().zip(b.samples()).all(|(x, y)| x.to_bits() == y.to_bits());
    let s1 = sweep(2, &[5.0, 10.0], 11)?;
    let s2 = sweep(2, &[5.0, 10.0], 11)?;
    let same_sweep = s1.rows.iter().zip(&s2.rows).all(|(x, y)| {
        x.ks_scaled.to_bits() == y.ks_scaled.to_bits()
            && x.scaled.samples().iter().zip(y.scaled.samples()).all(|(p, q)| p.to_bits() == q.to_bits())
    });
    Ok(Outcome::new(
        phi_gap < 1e-8 && weight_gap < 1e-10 && same_batch && same_sweep,
        format!(
            "max |phi_j(0) - 1| = {phi_gap:.2e}; max |sum g_j(0) - 1| = {weight_gap:.2e}; \
             repeated batch identical: {same_batch}; repeated sweep identical: {same_sweep}"
        ),
    ))
}

type Criterion = (&'static str, fn() -> Result<Outcome>);

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("n=2 closed-form equivalence", criterion_1),
        ("engine cross-validation", criterion_2),
        ("exact mean identity", criterion_3),
        ("deterministic working-time chain", criterion_4),
        ("scaled lifetime limit law", criterion_5),
        ("transform limit", criterion_6),
        ("expansion checks", criterion_7),
        ("ratio recursions", criterion_8),
        ("inversion fidelity", criterion_9),
        ("normalization and determinism", criterion_10),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        if !outcome.pass {
            failures += 1;
        }
        println!(
            "criterion {id:>2} {}: {name}: {} [{:.1}s]",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {failures} criteria failed");
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
