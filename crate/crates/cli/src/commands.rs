use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use smectic_core::checks::{self, Suite};
use smectic_core::diagnostics::{ansatz_sweep, rate_fit, SweepSettings};
use smectic_core::jump::jump_cost_between;
use smectic_core::minimize::{initial_energy, resolved_samples};
use smectic_core::profile::{min_quad_points, oned_energy_with, AnsatzOptions, DEFAULT_STEP, DEFAULT_THRESHOLD};
use smectic_core::{jump_cost, minimize_energy, solve_profile, CellProblem, Initializer, JumpSpec, OptimizerSettings};

use crate::output::RunDir;
use crate::{plots, UsageError};

pub const EXIT_OK: u8 = 0;
/// Below this the O(h²) error of the discrete energy can exceed the
/// exponentially small gap between the continuum 1D energy and the cost.
const DEFAULT_MIN_SAMPLES: usize = 513;
pub const EXIT_ACCEPTANCE: u8 = 4;

#[derive(Args, Debug, Serialize)]
pub struct Common {
    /// Flat `key = value` file; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; a manifest is written there last.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit 4 when a run finishes but fails its acceptance verdict.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct Pair {
    #[arg(long, allow_hyphen_values = true)]
    pub aminus: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub aplus: f64,
}

impl Pair {
    fn spec(&self) -> Result<JumpSpec> {
        finite("aminus", self.aminus)?;
        finite("aplus", self.aplus)?;
        Ok(JumpSpec::new(self.aminus, self.aplus)?)
    }
}

fn finite(name: &str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        bail!(UsageError(format!("--{name} must be finite, got {v}")));
    }
    Ok(v)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if !(v > 0.0 && v.is_finite()) {
        bail!(UsageError(format!("--{name} must be positive, got {v}")));
    }
    Ok(v)
}

fn eps_values(eps: Option<f64>, list: &[f64]) -> Result<Vec<f64>> {
    let values = match (eps, list.is_empty()) {
        (Some(_), false) => bail!(UsageError("give either --eps or --eps-list, not both".into())),
        (Some(e), true) => vec![e],
        (None, false) => list.to_vec(),
        (None, true) => bail!(UsageError("one of --eps or --eps-list is required".into())),
    };
    for &e in &values {
        positive("eps", e)?;
    }
    Ok(values)
}

/// Writes a line to stdout; a closed pipe (`| head`) is not an error.
pub fn emit(line: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{line}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn print(value: &Value) -> Result<()> {
    emit(&serde_json::to_string_pretty(value)?)
}

fn verdict(strict: bool, flags: &Value) -> u8 {
    let failed = flags.as_object().is_some_and(|m| m.values().any(|v| v == &Value::Bool(false)));
    if strict && failed {
        EXIT_ACCEPTANCE
    } else {
        EXIT_OK
    }
}

// ------------------------------------------------------------- jumpcost

#[derive(Args, Debug, Serialize)]
pub struct JumpcostArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[command(flatten)]
    pub common: Common,
}

pub fn jumpcost(args: &JumpcostArgs) -> Result<u8> {
    let (am, ap) = (finite("aminus", args.pair.aminus)?, finite("aplus", args.pair.aplus)?);
    let c = jump_cost_between(am, ap)?;
    let nu = if c.degenerate { Value::Null } else { json!(JumpSpec::new(am, ap)?.nu) };
    let out = json!({
        "a_minus": am,
        "a_plus": ap,
        "cost": c.cost,
        "first_form": c.first_form,
        "second_form": c.second_form,
        "degenerate": c.degenerate,
        "nu": nu,
    });
    if let Some(dir) = &args.common.out {
        let mut run = RunDir::create(dir)?;
        run.write_json("jumpcost.json", "json", &out)?;
        run.finish("jumpcost", &serde_json::to_value(args)?, &out, &json!({}))?;
    }
    print(&out)?;
    Ok(EXIT_OK)
}

// ------------------------------------------------------------- profile

#[derive(Args, Debug, Serialize)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub eps_list: Vec<f64>,
    /// Half-width of the ODE window; defaults to max(10, 30/|p|).
    #[arg(long)]
    pub horizon: Option<f64>,
    /// ODE step; defaults to 1e-3 scaled with the horizon beyond 10.
    #[arg(long)]
    pub step: Option<f64>,
    /// Core half-width in s where the profile is used verbatim.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Quadrature points for the 1D cell energy (default: the minimum for ε).
    #[arg(long)]
    pub quad_points: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

pub fn profile(args: &ProfileArgs) -> Result<u8> {
    let j = args.pair.spec()?;
    let eps = eps_values(args.eps, &args.eps_list)?;
    let threshold = positive("threshold", args.threshold)?;
    if threshold >= 0.5 {
        bail!(UsageError(format!("--threshold must lie in (0, 1/2), got {threshold}")));
    }
    let horizon = match args.horizon {
        Some(h) => positive("horizon", h)?,
        None => (30.0 / j.p_norm()).clamp(10.0, 1e4),
    };
    let step = match args.step {
        Some(s) => positive("step", s)?,
        None => DEFAULT_STEP * (horizon / 10.0).max(1.0),
    };
    let profile = solve_profile(&j, horizon, step)?;
    let opts = AnsatzOptions { threshold, ode_step: step };
    let cost = jump_cost(&j)?.cost;

    let mut rows = Vec::new();
    let mut table = String::from("eps,r1d,cost,excess,quad_points\n");
    for &e in &eps {
        let q = args.quad_points.unwrap_or_else(|| min_quad_points(e, threshold));
        let r = oned_energy_with(&j, e, q, &opts)?;
        writeln!(table, "{},{},{},{},{}", e, r.total, r.cost, r.excess, r.quad_points)?;
        rows.push(r);
    }
    let excess: Vec<f64> = rows.iter().map(|r| r.excess).collect();
    let fit = if eps.len() >= 3 && excess.iter().all(|&x| x > 0.0) {
        let xs: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
        let ys: Vec<f64> = excess.iter().map(|x| x.ln()).collect();
        Some(rate_fit(&xs, &ys)?)
    } else {
        None
    };
    let results = json!({
        "a_minus": j.a_minus(),
        "a_plus": j.a_plus(),
        "cost": cost,
        "tail": profile.tail,
        "tail_minus": profile.tail_minus,
        "oned": rows,
        "excess_rate": fit,
    });
    let mut order: Vec<usize> = (0..eps.len()).collect();
    order.sort_by(|&a, &b| eps[b].total_cmp(&eps[a]));
    let decreasing = order.windows(2).all(|w| excess[w[1]] < excess[w[0]]);
    let acceptance = json!({
        "excess_positive": excess.iter().all(|&x| x > 0.0),
        "excess_decreasing": decreasing,
        "above_cost": rows.iter().all(|r| r.total >= cost),
    });

    if let Some(dir) = &args.common.out {
        let mut run = RunDir::create(dir)?;
        let mut csv = Vec::new();
        profile.write_csv(&mut csv)?;
        run.write("profile.csv", "csv", &csv)?;
        run.write_json("profile.json", "json", &profile.sidecar())?;
        run.write("oned.csv", "csv", table.as_bytes())?;
        run.write("plot_profile.py", "plot-script", plots::profile_script().as_bytes())?;
        run.finish("profile", &serde_json::to_value(args)?, &results, &acceptance)?;
    }
    print(&json!({ "results": results, "acceptance": acceptance }))?;
    Ok(verdict(args.common.strict, &acceptance))
}

// ------------------------------------------------------------- minimize

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    Ansatz,
    Linear,
    Random,
}

#[derive(Args, Debug, Serialize)]
pub struct MinimizeArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, value_enum, default_value = "ansatz")]
    pub init: InitKind,
    /// Required with `--init random`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.01)]
    pub amplitude: f64,
    /// Samples across the cell normal to the defect (default: 8 per ε, at least 513).
    #[arg(long)]
    pub n_s: Option<usize>,
    #[arg(long, default_value_t = 16)]
    pub n_t: usize,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Finite-difference gradient check every N iterations.
    #[arg(long)]
    pub fd_check_every: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

pub fn minimize(args: &MinimizeArgs) -> Result<u8> {
    let j = args.pair.spec()?;
    let eps = positive("eps", args.eps)?;
    let init = match (args.init, args.seed) {
        (InitKind::Ansatz, _) => Initializer::Ansatz,
        (InitKind::Linear, _) => Initializer::Linear,
        (InitKind::Random, Some(seed)) => Initializer::Random { seed, amplitude: positive("amplitude", args.amplitude)? },
        (InitKind::Random, None) => bail!(UsageError("--init random needs --seed".into())),
    };
    let mut settings = OptimizerSettings::default();
    if let Some(n) = args.max_iterations {
        if n == 0 {
            bail!(UsageError("--max-iterations must be at least 1".into()));
        }
        settings.max_iterations = n;
    }
    if let Some(t) = args.tolerance {
        settings.gradient_tolerance = positive("tolerance", t)?;
    }
    if args.fd_check_every == Some(0) {
        bail!(UsageError("--fd-check-every must be at least 1".into()));
    }
    settings.fd_check_every = args.fd_check_every;
    let n_s = args.n_s.unwrap_or_else(|| resolved_samples(eps).max(DEFAULT_MIN_SAMPLES));
    let cp = CellProblem::new(j, eps, n_s, args.n_t, init)?.with_settings(settings);
    cp.validate()?;

    let r = minimize_energy(&cp)?;
    let cost = jump_cost(&j)?.cost;
    let r1d = oned_energy_with(&j, eps, min_quad_points(eps, DEFAULT_THRESHOLD).max(4096), &AnsatzOptions::default())?;
    let total = r.breakdown.total;
    // the 1D competitor on this grid, with its face rows on the pinned data
    let ansatz_energy = if matches!(init, Initializer::Ansatz) {
        r.initial_energy
    } else {
        let mut probe = cp.clone();
        probe.init = Initializer::Ansatz;
        initial_energy(&probe)?
    };
    let results = json!({
        "total": total,
        "breakdown": r.breakdown,
        "cost": cost,
        "r1d": r1d.total,
        "discrete_ansatz": ansatz_energy,
        "iterations": r.iterations,
        "converged": r.converged,
        "final_gradient_norm": r.final_gradient_norm,
        "stop_reason": r.stop_reason,
        "fd_check_max_error": r.fd_check_max_error,
        "gradient_floor": r.gradient_floor,
    });
    let acceptance = json!({
        "converged": r.converged,
        "sandwich_lower": total >= cost * (1.0 - 0.02),
        "sandwich_upper": total <= r1d.total + 1e-12,
        "below_discrete_ansatz": total <= ansatz_energy,
    });

    if let Some(dir) = &args.common.out {
        let mut run = RunDir::create(dir)?;
        r.save(&cp, run.path(), "u_star")?;
        run.adopt("u_star.field", "field-snapshot")?;
        run.adopt("u_star.json", "json")?;
        let mut hist = String::from("iteration,energy\n");
        for (k, e) in r.history.iter().enumerate() {
            writeln!(hist, "{k},{e}")?;
        }
        run.write("history.csv", "csv", hist.as_bytes())?;
        run.write("plot_minimize.py", "plot-script", plots::minimize_script().as_bytes())?;
        run.finish("minimize", &serde_json::to_value(args)?, &results, &acceptance)?;
    }
    print(&json!({ "results": results, "acceptance": acceptance }))?;
    Ok(verdict(args.common.strict, &acceptance))
}

// ------------------------------------------------------------- sweep

#[derive(Args, Debug, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    pub pair: Pair,
    #[arg(long, value_delimiter = ',', required = true)]
    pub eps_list: Vec<f64>,
    /// Grid samples per ε across the cell.
    #[arg(long, default_value_t = 8.0)]
    pub layers: f64,
    #[arg(long, default_value_t = 16)]
    pub n_t: usize,
    /// Exponents for the ‖∂x u‖ norms; `inf` is allowed.
    #[arg(long, value_delimiter = ',', default_value = "2,6,8,inf")]
    pub p_list: Vec<f64>,
    /// Mass fraction for the concentration radius.
    #[arg(long, default_value_t = 0.95)]
    pub concentration: f64,
    #[command(flatten)]
    pub common: Common,
}

pub fn sweep(args: &SweepArgs) -> Result<u8> {
    let j = args.pair.spec()?;
    let eps = eps_values(None, &args.eps_list)?;
    let settings = SweepSettings {
        layers: positive("layers", args.layers)?,
        n_t: args.n_t,
        p_list: args.p_list.clone(),
        concentration: positive("concentration", args.concentration)?,
    };
    if args.p_list.iter().any(|&p| p.is_nan() || p < 1.0) {
        bail!(UsageError("every --p-list entry must be at least 1".into()));
    }
    let report = ansatz_sweep(&j, &eps, &settings)?;
    let results = report.summary_json();
    let excess: Vec<f64> = report.records.iter().map(|r| r.oned_excess).collect();
    let mut acceptance = json!({
        "excess_positive": excess.iter().all(|&x| x > 0.0),
        "excess_decreasing": excess.windows(2).all(|w| w[1] < w[0]),
    });
    if let Some(fit) = &report.excess_rate {
        acceptance["excess_rate"] = json!(fit.slope < 0.0 && fit.correlation <= -0.99);
    }

    if let Some(dir) = &args.common.out {
        let mut run = RunDir::create(dir)?;
        let mut csv = Vec::new();
        report.write_csv(&mut csv)?;
        run.write("sweep.csv", "csv", &csv)?;
        run.write_json("sweep.json", "json", &report)?;
        run.write("plot_sweep.py", "plot-script", plots::sweep_script().as_bytes())?;
        run.finish("sweep", &serde_json::to_value(args)?, &results, &acceptance)?;
    }
    print(&json!({ "results": results, "acceptance": acceptance }))?;
    Ok(verdict(args.common.strict, &acceptance))
}

// ------------------------------------------------------------- check

#[derive(Args, Debug, Serialize)]
pub struct CheckArgs {
    /// `all`, or a comma-separated list of: core, energy, formulas, profile, minimize, diagnostics.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[command(flatten)]
    pub common: Common,
}

pub fn check(args: &CheckArgs) -> Result<u8> {
    let suites: Vec<Suite> = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        args.suite
            .split(',')
            .map(|s| s.trim().parse::<Suite>().map_err(|e| UsageError(e.to_string())))
            .collect::<std::result::Result<_, _>>()?
    };
    let outcomes: Vec<_> = suites.into_iter().flat_map(checks::run_suite).collect();
    for c in &outcomes {
        emit(&format!("{} {}/{}: {}", if c.passed { "PASS" } else { "FAIL" }, c.suite, c.name, c.detail))?;
    }
    let failed = outcomes.iter().filter(|c| !c.passed).count();
    emit(&format!("{} of {} checks passed", outcomes.len() - failed, outcomes.len()))?;

    if let Some(dir) = &args.common.out {
        let mut run = RunDir::create(dir)?;
        run.write_json("checks.json", "json", &outcomes)?;
        let flags: serde_json::Map<String, Value> =
            outcomes.iter().map(|c| (format!("{}/{}", c.suite, c.name), Value::Bool(c.passed))).collect();
        let results = json!({ "checks": outcomes.len(), "failed": failed });
        run.finish("check", &serde_json::to_value(args)?, &results, &Value::Object(flags))?;
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_ACCEPTANCE })
}
