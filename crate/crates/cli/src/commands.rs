use coldstandby::asym::{convergence_sweep, exponential_limit_cdf, SweepPlan};
use coldstandby::invert::{invert_curve, invert_curve_diagnosed};
use coldstandby::lst::{mean_lifetimes, solve_phis};
use coldstandby::sim::simulate_replications;
use coldstandby::{EmpiricalDistribution, SystemConfig};
use serde::Serialize;

use crate::config::{Format, OscillationPolicy, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{line_chart, num, Reports, Series};

#[derive(Serialize)]
struct Quantiles {
    #[serde(rename = "0.5")]
    median: f64,
    #[serde(rename = "0.9")]
    q90: f64,
    #[serde(rename = "0.99")]
    q99: f64,
}

#[derive(Serialize)]
struct SimulateSummary {
    count: usize,
    mean: f64,
    stderr: Option<f64>,
    quantiles: Quantiles,
    engine: &'static str,
    j0: usize,
    config: serde_json::Value,
}

pub fn simulate(cfg: &RunConfig, system: &SystemConfig, out: &mut Reports) -> CliResult<()> {
    let lifetimes = simulate_replications(system, cfg.j0, cfg.samples, cfg.seed, cfg.engine)?;
    if cfg.output.wants(Format::Csv) {
        let rows: Vec<Vec<String>> =
            lifetimes.iter().enumerate().map(|(i, &x)| vec![i.to_string(), num(x)]).collect();
        out.csv("simulate.csv", &["replication", "lifetime"], &rows)?;
    }
    let emp = EmpiricalDistribution::from_samples(lifetimes, cfg.seed, cfg.engine)?;
    if cfg.output.wants(Format::Json) {
        out.json(
            "simulate.json",
            &SimulateSummary {
                count: emp.count(),
                mean: emp.mean(),
                stderr: emp.stderr_defined().then(|| emp.stderr()),
                quantiles: Quantiles { median: emp.quantile(0.5), q90: emp.quantile(0.9), q99: emp.quantile(0.99) },
                engine: cfg.engine.name(),
                j0: cfg.j0,
                config: cfg.experiment(),
            },
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct LstSummary {
    epsilon: f64,
    truncation_j: usize,
    mean_lifetimes: Vec<f64>,
    config: serde_json::Value,
}

pub fn lst(cfg: &RunConfig, system: &SystemConfig, out: &mut Reports) -> CliResult<()> {
    let grid = cfg.lst.s_grid.as_deref().unwrap_or_default();
    let mut rows = Vec::new();
    let mut truncation_j = 0;
    for point in grid {
        let s = point.value();
        let sol = solve_phis(system, s)?;
        truncation_j = sol.truncation_j;
        for (j, phi) in sol.phis.iter().enumerate() {
            rows.push(vec![num(s.re), num(s.im), j.to_string(), num(phi.re), num(phi.im), num(sol.residual)]);
        }
    }
    if cfg.output.wants(Format::Csv) {
        out.csv("lst.csv", &["re_s", "im_s", "j", "re_phi", "im_phi", "residual"], &rows)?;
    }
    if cfg.output.wants(Format::Json) {
        let summary = LstSummary {
            epsilon: system.epsilon()?,
            truncation_j,
            mean_lifetimes: mean_lifetimes(system)?,
            config: cfg.experiment(),
        };
        out.json("lst.json", &summary)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct InvertSummary {
    j: usize,
    method: &'static str,
    max_overshoot: f64,
    nonmonotone_t: Vec<f64>,
    config: serde_json::Value,
}

pub fn invert(cfg: &RunConfig, system: &SystemConfig, out: &mut Reports) -> CliResult<()> {
    let settings = cfg.inversion.settings();
    let grid = cfg.inversion.t_grid.as_deref().unwrap_or_default();
    let curve = match cfg.inversion.on_oscillation {
        OscillationPolicy::Fail => invert_curve(system, cfg.j0, grid, &settings)?,
        OscillationPolicy::Flag => invert_curve_diagnosed(system, cfg.j0, grid, &settings)?,
    };
    let method = settings.method.name();
    if cfg.output.wants(Format::Csv) {
        let rows: Vec<Vec<String>> = curve
            .points
            .iter()
            .map(|p| vec![num(p.t), cfg.j0.to_string(), num(p.value), method.to_owned(), p.flags()])
            .collect();
        out.csv("invert.csv", &["t", "j", "cdf", "method", "flags"], &rows)?;
    }
    if cfg.output.wants(Format::Json) {
        let summary = InvertSummary {
            j: cfg.j0,
            method,
            max_overshoot: curve.max_overshoot(),
            nonmonotone_t: curve.nonmonotone().into_iter().map(|i| curve.points[i].t).collect(),
            config: cfg.experiment(),
        };
        out.json("invert.json", &summary)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepHeader {
    j: usize,
    sample_count: usize,
    engine: &'static str,
    n: usize,
    b: f64,
    family: &'static str,
    row_seeds: Vec<u64>,
    config: serde_json::Value,
}

/// Points at which scaled ECDFs are drawn.
const CHART_POINTS: usize = 200;

pub fn sweep(cfg: &RunConfig, system: &SystemConfig, out: &mut Reports) -> CliResult<()> {
    let mu_list = cfg
        .sweep
        .mu_list
        .clone()
        .ok_or_else(|| CliError::validation("sweep.mu_list", "required by the sweep subcommand"))?;
    let plan = SweepPlan {
        template: system.clone(),
        j: cfg.j0,
        mu_list,
        sample_count: cfg.samples,
        seed: cfg.seed,
        s_grid: cfg.sweep.s_grid.clone().unwrap_or_default(),
        engine: cfg.engine,
    };
    let report = convergence_sweep(&plan)?;
    if cfg.output.wants(Format::Csv) {
        let rows: Vec<Vec<String>> = report
            .rows
            .iter()
            .map(|r| vec![num(r.mu), num(r.epsilon), num(r.ks_scaled), num(r.scaled_mean_ratio), num(r.lst_gap)])
            .collect();
        out.csv("sweep.csv", &["mu", "epsilon", "ks_scaled", "scaled_mean_ratio", "lst_gap"], &rows)?;
    }
    if cfg.output.wants(Format::Json) {
        let header = SweepHeader {
            j: report.j,
            sample_count: report.sample_count,
            engine: report.engine.name(),
            n: report.n,
            b: report.b,
            family: report.family,
            row_seeds: report.rows.iter().map(|r| r.seed).collect(),
            config: cfg.experiment(),
        };
        out.json("sweep.json", &header)?;
    }
    if cfg.output.wants(Format::Svg) {
        let x_max = 5.0 * report.b;
        let xs: Vec<f64> = (0..=CHART_POINTS).map(|i| x_max * i as f64 / CHART_POINTS as f64).collect();
        let mut series: Vec<Series> = report
            .rows
            .iter()
            .map(|r| Series {
                label: format!("mu = {}", num(r.mu)),
                points: xs.iter().map(|&x| (x, r.scaled.ecdf(x))).collect(),
                dashed: false,
            })
            .collect();
        series.push(Series {
            label: "limit".into(),
            points: xs.iter().map(|&x| (x, exponential_limit_cdf(x, report.b))).collect(),
            dashed: true,
        });
        let title = format!("scaled lifetime ECDF, n = {}, j = {}", report.n, report.j);
        out.svg("sweep.svg", &line_chart(&title, "eps^(n-1) t", x_max, &series))?;
    }
    Ok(())
}
