//! Batch front-end: reads a JSON scenario, runs one analysis and writes a
//! JSON report (plus CSV trajectories when an output directory is given).
//!
//! Exit codes: 0 success, 1 fixture mismatch, 2 invalid input, 3 solver failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::cycles::{self, build_lifted, classify_limit, verify_no_period2, ClassifyOptions, LiftedSystem};
use crate::equilibria::{consistent_equilibria, enumerate_equilibria, existence_conditions, EquilibriumError};
use crate::fixtures;
use crate::intervene::{drive_to_invariant, DriveOptions, InterveneError, VUpdate};
use crate::invariance::{
    finite_determination_index, invariance_report, maximal_invariant_region, region_of_attraction, stabilized_region,
    InvarianceError,
};
use crate::netmodel::{FinancialNetwork, ModelError, OrthantIndex, ShiftedModel, Trajectory};
use crate::numerics::matrix::max_abs_diff;
use crate::numerics::DenseMatrix;
use crate::robust::{robust_report, sandwich_bounds, IntervalNetwork, RobustError, Switching};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(
    name = "finnet",
    version,
    about = "Financial network invariance, cycle and intervention analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Scenario JSON file.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,
    /// Directory for the JSON report and CSV trajectories; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[arg(long, global = true)]
    pub horizon: Option<usize>,
    #[arg(long, global = true)]
    pub hmax: Option<usize>,
    #[arg(long, global = true)]
    pub rho: Option<f64>,
    /// Restrict cash injections to `v ≥ 0`.
    #[arg(long, global = true)]
    pub nonnegative_injection: bool,
    /// `v ← v − x(t)` (default).
    #[arg(long, global = true)]
    pub verbatim_v_update: bool,
    /// `v ← max(v − x(t), 0)`.
    #[arg(long, global = true, conflicts_with = "verbatim_v_update")]
    pub clamped_v_update: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Simulate every initial state.
    Simulate,
    /// Enumerate per-orthant equilibria and the existence conditions.
    Equilibria,
    /// Orthant invariance, maximal invariant regions and regions of attraction.
    Invariance,
    /// Interval-uncertain cross-holdings.
    Robust,
    /// Limit classification and the period-2 check.
    Cycles,
    /// Minimal cash injection and the reallocation loop.
    Intervene,
    /// Run the reference networks end to end and check their reference values.
    Fixtures,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Equilibria => "equilibria",
            Command::Invariance => "invariance",
            Command::Robust => "robust",
            Command::Cycles => "cycles",
            Command::Intervene => "intervene",
            Command::Fixtures => "fixtures",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSpec {
    pub c_lower: DenseMatrix,
    pub c_upper: DenseMatrix,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub network: Option<FinancialNetwork>,
    /// Explicit interval bounds for `robust`.
    #[serde(default)]
    pub interval: Option<IntervalSpec>,
    /// Relative half-width used to build interval bounds around `network.c`.
    #[serde(default)]
    pub interval_relative: Option<f64>,
    #[serde(default)]
    pub initial_states: Vec<Vec<f64>>,
    #[serde(default)]
    pub horizon: Option<usize>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub h_max: Option<usize>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Largest horizon for regions of attraction of intermediate orthants.
    #[serde(default)]
    pub max_tau: Option<usize>,
    #[serde(default)]
    pub trials: Option<usize>,
    #[serde(default)]
    pub switching: Option<Switching>,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Parse(m) => CliError::Parse(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ReportBundle {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub wall_time_ms: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("malformed scenario: {0}")]
    Parse(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("{} fixture check(s) failed", .0.len())]
    FixtureMismatch(Vec<String>),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::FixtureMismatch(_) => 1,
            CliError::Parse(_) | CliError::Validation(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

macro_rules! solver_error {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Solver(e.to_string())
            }
        }
    )*};
}
solver_error!(
    EquilibriumError,
    InvarianceError,
    RobustError,
    InterveneError,
    cycles::CycleError
);

/// Options after merging flags over scenario values over defaults.
#[derive(Debug, Clone, Serialize)]
struct Resolved {
    seed: u64,
    tol: f64,
    horizon: Option<usize>,
    h_max: usize,
    rho: f64,
    epsilon: f64,
    max_tau: usize,
    trials: usize,
    nonnegative_injection: bool,
    v_update: VUpdate,
}

fn resolve(cli: &Cli, sc: &Scenario) -> Resolved {
    Resolved {
        seed: cli.seed.or(sc.seed).unwrap_or(0),
        tol: cli.tol.or(sc.tol).unwrap_or(cycles::DEFAULT_TOL),
        horizon: cli.horizon.or(sc.horizon),
        h_max: cli.hmax.or(sc.h_max).unwrap_or(cycles::DEFAULT_HMAX),
        rho: cli.rho.or(sc.rho).unwrap_or(cycles::DEFAULT_RHO),
        epsilon: sc.epsilon.unwrap_or(crate::numerics::STRICT_MARGIN),
        max_tau: sc.max_tau.unwrap_or(200),
        trials: sc.trials.unwrap_or(100),
        nonnegative_injection: cli.nonnegative_injection,
        v_update: if cli.clamped_v_update {
            VUpdate::Clamped
        } else {
            VUpdate::Verbatim
        },
    }
}

fn validated_model(sc: &Scenario) -> Result<ShiftedModel, CliError> {
    let net = sc
        .network
        .clone()
        .ok_or_else(|| CliError::Validation("scenario has no `network`".into()))?;
    net.check_shapes()?;
    let report = net.validate();
    if !report.is_valid() {
        return Err(CliError::Validation(report.to_string()));
    }
    Ok(ShiftedModel::new(net)?)
}

fn check_states(sc: &Scenario, n: usize) -> Result<(), CliError> {
    if sc.initial_states.is_empty() {
        return Err(CliError::Validation("scenario has no `initial_states`".into()));
    }
    for (i, x) in sc.initial_states.iter().enumerate() {
        if x.len() != n {
            return Err(CliError::Validation(format!(
                "initial_states[{i}] has length {}, expected {n}",
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Validation(format!(
                "initial_states[{i}] has a non-finite entry"
            )));
        }
    }
    Ok(())
}

/// Everything a command produces.
pub struct Outcome {
    pub report: ReportBundle,
    /// `(file name, contents)` written next to the report.
    pub csv: Vec<(String, String)>,
}

fn simulate(model: &ShiftedModel, sc: &Scenario, opts: &Resolved) -> Result<(Value, Vec<(String, String)>), CliError> {
    check_states(sc, model.n())?;
    let horizon = opts.horizon.unwrap_or(100);
    let mut runs = Vec::new();
    let mut csv = Vec::new();
    for (i, x0) in sc.initial_states.iter().enumerate() {
        let traj = model.simulate(x0, horizon);
        csv.push((format!("trajectory_{i}.csv"), traj.to_csv()));
        runs.push(json!({
            "x0": x0,
            "final_state": traj.last(),
            "orthants": traj.orthant_sequence().iter().map(|k| k.k()).collect::<Vec<_>>(),
            "states": traj.states,
        }));
    }
    Ok((json!({ "horizon": horizon, "runs": runs }), csv))
}

fn equilibria(model: &ShiftedModel) -> Result<Value, CliError> {
    let all = enumerate_equilibria(model)?;
    let consistent: Vec<_> = all.iter().filter(|e| e.consistent).collect();
    Ok(json!({
        "consistent_count": consistent.len(),
        "consistent": consistent,
        "candidates": all,
        "existence": existence_conditions(model)?,
    }))
}

fn invariance(model: &ShiftedModel, opts: &Resolved) -> Result<Value, CliError> {
    let n = model.n();
    let net = model.network();
    let report = invariance_report(net, opts.seed, 10)?;
    let mut extremes = Vec::new();
    for k in [OrthantIndex::healthy(n), OrthantIndex::all_failed(n)] {
        let entry = match (
            finite_determination_index(model, &k),
            maximal_invariant_region(model, &k),
        ) {
            (Ok(tau), Ok(region)) => json!({
                "orthant": k,
                "tau": tau,
                "region": region,
                "region_pruned": region.pruned().map_err(InvarianceError::from)?,
            }),
            (Err(e), _) | (_, Err(e)) => json!({ "orthant": k, "error": e.to_string() }),
        };
        extremes.push(entry);
    }
    let mut intermediate = Vec::new();
    if n <= 10 {
        for eq in consistent_equilibria(model)?
            .into_iter()
            .filter(|e| !e.orthant.is_healthy() && !e.orthant.is_all_failed())
        {
            let region = stabilized_region(model, &eq, opts.max_tau)?;
            let bbox = region
                .to_equity(&net.threshold)
                .bounding_box()
                .map_err(InvarianceError::from)?;
            intermediate.push(json!({
                "orthant": eq.orthant,
                "x_bar": eq.x_bar,
                "certified": region.certified,
                "horizon": region.horizon,
                "equity_bounding_box": bbox,
                "region": region,
            }));
        }
    }
    Ok(json!({
        "report": report,
        "extreme_orthants": extremes,
        "intermediate_regions": intermediate,
    }))
}

fn interval_of(sc: &Scenario) -> Result<IntervalNetwork, CliError> {
    if let Some(spec) = &sc.interval {
        return IntervalNetwork::new(spec.c_lower.clone(), spec.c_upper.clone(), spec.r.clone())
            .map_err(|e| CliError::Validation(e.to_string()));
    }
    let net = sc
        .network
        .as_ref()
        .ok_or_else(|| CliError::Validation("robust needs `interval` or `network` with `interval_relative`".into()))?;
    let rel = sc
        .interval_relative
        .ok_or_else(|| CliError::Validation("robust needs `interval_relative` when `interval` is absent".into()))?;
    IntervalNetwork::around(net, rel).map_err(|e| CliError::Validation(e.to_string()))
}

fn robust(sc: &Scenario, opts: &Resolved) -> Result<(Value, Vec<(String, String)>), CliError> {
    let inet = interval_of(sc)?;
    let report = robust_report(&inet)?;
    let horizon = opts.horizon.unwrap_or(200);
    let switching = sc
        .switching
        .clone()
        .unwrap_or(Switching::UniformIid { seed: opts.seed });
    let mut runs = Vec::new();
    let mut csv = Vec::new();
    for (i, x0) in sc.initial_states.iter().enumerate() {
        if x0.len() != inet.n() {
            return Err(CliError::Validation(format!(
                "initial_states[{i}] has the wrong length"
            )));
        }
        let in_robust = report.robust_set.contains(x0);
        let in_last_hope = x0.iter().all(|&v| v >= 0.0) && report.last_hope_set.contains(x0);
        let sandwich = match sandwich_bounds(&inet, x0, horizon, &switching) {
            Ok(s) => {
                let traj = Trajectory {
                    states: s.actual.iter().cloned().map(Into::into).collect(),
                };
                csv.push((format!("trajectory_{i}.csv"), traj.to_csv()));
                json!({
                    "ordering_violation": s.ordering_violation(),
                    "final_lower": s.lower.last(),
                    "final_state": s.actual.last(),
                    "final_upper": s.upper.last(),
                    "trace": s,
                })
            }
            Err(e) => json!({ "error": e.to_string() }),
        };
        runs.push(json!({
            "x0": x0,
            "in_robust_set": in_robust,
            "in_last_hope_set": in_last_hope,
            "sandwich": sandwich,
        }));
    }
    Ok((
        json!({ "interval": inet, "horizon": horizon, "switching": switching, "report": report, "runs": runs }),
        csv,
    ))
}

fn cycles_cmd(model: &ShiftedModel, sc: &Scenario, opts: &Resolved) -> Result<Value, CliError> {
    let copts = ClassifyOptions {
        rho: opts.rho,
        horizon: opts.horizon.unwrap_or(cycles::DEFAULT_HORIZON),
        tol: opts.tol,
        h_max: opts.h_max,
    };
    let mut runs = Vec::new();
    for (i, x0) in sc.initial_states.iter().enumerate() {
        if x0.len() != model.n() {
            return Err(CliError::Validation(format!(
                "initial_states[{i}] has the wrong length"
            )));
        }
        let class = classify_limit(model, x0, &copts);
        let lift_residual = match &class.kind {
            cycles::LimitKind::Cycle { period, orbit } => {
                Some(build_lifted(model, *period)?.residual(&LiftedSystem::stack(orbit)))
            }
            _ => None,
        };
        let period = match &class.kind {
            cycles::LimitKind::Cycle { period, .. } => Some(*period),
            cycles::LimitKind::Equilibrium { .. } => Some(1),
            _ => None,
        };
        runs.push(json!({ "x0": x0, "period": period, "classification": class, "lift_residual": lift_residual }));
    }
    let period2 = verify_no_period2(model, opts.trials, opts.seed, &copts);
    Ok(json!({ "options": copts, "runs": runs, "period2_check": period2 }))
}

fn intervene(model: &ShiftedModel, sc: &Scenario, opts: &Resolved) -> Result<(Value, Vec<(String, String)>), CliError> {
    check_states(sc, model.n())?;
    let dopts = DriveOptions {
        update: opts.v_update,
        epsilon: opts.epsilon,
        nonnegative_injection: opts.nonnegative_injection,
        ..Default::default()
    };
    let mut plans = Vec::new();
    let mut csv = Vec::new();
    for (i, x0) in sc.initial_states.iter().enumerate() {
        let plan = drive_to_invariant(model, x0, &dopts)?;
        csv.push((format!("trajectory_{i}.csv"), plan.trajectory().to_csv()));
        plans.push(plan);
    }
    Ok((json!({ "options": dopts, "plans": plans }), csv))
}

#[derive(Debug, Clone, Serialize)]
pub struct FixtureCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> FixtureCheck {
    FixtureCheck {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// End-to-end runs of the three reference networks against their reference values.
pub fn fixture_checks() -> Result<Vec<FixtureCheck>, CliError> {
    let mut out = Vec::new();

    let m2 = ShiftedModel::new(fixtures::ring4())?;
    let found = consistent_equilibria(&m2)?;
    let matched = fixtures::ring_equilibria()
        .iter()
        .filter(|w| found.iter().any(|e| max_abs_diff(&e.x_bar, &w[..]) < 1e-3))
        .count();
    out.push(check(
        "four-node ring: eight equilibria",
        found.len() == 8 && matched == 8,
        format!(
            "{} consistent, {matched} of 8 reference matched within 1e-3",
            found.len()
        ),
    ));

    let traj = m2.simulate(&fixtures::PERIOD8_ORBIT[0], 200);
    let worst = (0..8)
        .map(|t| max_abs_diff(&traj.states[t], &fixtures::PERIOD8_ORBIT[t]))
        .fold(0.0, f64::max);
    let period = cycles::detect_cycle(&traj, cycles::FIXTURE_TOL, cycles::DEFAULT_HMAX)?.map(|c| c.period);
    out.push(check(
        "four-node ring: period-8 orbit",
        worst < 1e-3 && period == Some(8),
        format!("max row deviation {worst:.2e}, detected period {period:?}"),
    ));

    let m1 = ShiftedModel::new(fixtures::mutual_pair())?;
    let net1 = m1.network();
    let all = enumerate_equilibria(&m1)?;
    let eq_ok = all.iter().all(|e| e.consistent)
        && all
            .iter()
            .zip(fixtures::PAIR_EQUITY_EQUILIBRIA)
            .all(|(e, w)| max_abs_diff(&e.v_bar, &w) < 1e-3);
    out.push(check(
        "two-node pair: quadrant equilibria",
        eq_ok,
        format!("{:?}", all.iter().map(|e| e.v_bar.clone()).collect::<Vec<_>>()),
    ));
    let inv_ok = crate::invariance::orthant0_invariant(net1) && crate::invariance::last_orthant_invariant(net1);
    out.push(check(
        "two-node pair: extreme quadrants invariant",
        inv_ok,
        format!("r = {:?}", m1.r()),
    ));
    let mut box_detail = Vec::new();
    let mut box_ok = true;
    for (k, want) in [(1u64, [(5.0, 6.0), (4.0, 5.0)]), (2, [(4.0, 5.0), (5.0, 6.0)])] {
        let eq = &all[k as usize];
        let region = stabilized_region(&m1, eq, 50)?;
        let bbox = region
            .to_equity(&net1.threshold)
            .bounding_box()
            .map_err(InvarianceError::from)?;
        box_ok &= region.certified
            && bbox
                .iter()
                .zip(want)
                .all(|(g, w)| (g.0 - w.0).abs() < 1e-6 && (g.1 - w.1).abs() < 1e-6);
        box_detail.push(format!("k={k}: {bbox:?} at horizon {}", region.horizon));
    }
    out.push(check(
        "two-node pair: mixed-quadrant boxes",
        box_ok,
        box_detail.join("; "),
    ));

    let mut taus = Vec::new();
    for m in [&m1, &m2] {
        for k in [OrthantIndex::healthy(m.n()), OrthantIndex::all_failed(m.n())] {
            taus.push(finite_determination_index(m, &k)?);
        }
    }
    out.push(check(
        "finite determination index",
        taus.iter().all(|&t| t == 1),
        format!("{taus:?}"),
    ));

    let m3 = ShiftedModel::new(fixtures::uniform10())?;
    let region = maximal_invariant_region(&m3, &OrthantIndex::healthy(10))?;
    let x0 = fixtures::INJECTION_SAMPLE_X0;
    let inj = crate::intervene::minimal_injection(&x0, &region, false)?;
    let flips = fixtures::INJECTION_SAMPLE_FLIPS
        .iter()
        .all(|&i| (inj.v[i] + x0[i]).abs() < 1e-3);
    let surplus = [7usize, 9].iter().all(|&i| inj.v[i] + x0[i] > 0.0);
    out.push(check(
        "ten-node uniform network: injection pattern",
        flips && surplus,
        format!(
            "v = {:?}; reference surplus components {:?}",
            inj.v,
            [fixtures::INJECTION_SAMPLE_V[7], fixtures::INJECTION_SAMPLE_V[9]]
        ),
    ));

    let region0 = region_of_attraction(&m1, &all[0], 0);
    out.push(check(
        "two-node pair: healthy region membership",
        region0.contains(&[0.5, 0.5]),
        "x(0) = (0.5, 0.5)".into(),
    ));
    Ok(out)
}

/// Runs one command. Fixture mismatches still produce a report.
pub fn execute(cli: &Cli) -> Result<Outcome, (CliError, Option<Box<Outcome>>)> {
    let start = Instant::now();
    let scenario = match (&cli.scenario, cli.command) {
        (Some(path), _) => Scenario::load(path).map_err(|e| (e, None))?,
        (None, Command::Fixtures) => Scenario::default(),
        (None, _) => return Err((CliError::Validation("--scenario is required".into()), None)),
    };
    let opts = resolve(cli, &scenario);
    let bundle = |results: Value| ReportBundle {
        tool: "finnet".into(),
        version: VERSION.into(),
        command: cli.command.name().into(),
        inputs: json!({ "scenario": scenario, "options": opts }),
        results,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    let run = || -> Result<(Value, Vec<(String, String)>), CliError> {
        match cli.command {
            Command::Simulate => simulate(&validated_model(&scenario)?, &scenario, &opts),
            Command::Equilibria => Ok((equilibria(&validated_model(&scenario)?)?, vec![])),
            Command::Invariance => Ok((invariance(&validated_model(&scenario)?, &opts)?, vec![])),
            Command::Robust => robust(&scenario, &opts),
            Command::Cycles => Ok((cycles_cmd(&validated_model(&scenario)?, &scenario, &opts)?, vec![])),
            Command::Intervene => intervene(&validated_model(&scenario)?, &scenario, &opts),
            Command::Fixtures => {
                let checks = fixture_checks()?;
                Ok((json!({ "checks": checks }), vec![]))
            }
        }
    };
    let (results, csv) = run().map_err(|e| (e, None))?;
    let failed: Vec<String> = results["checks"]
        .as_array()
        .map(|a| {
            a.iter()
                .filter(|c| c["passed"] == Value::Bool(false))
                .map(|c| c["name"].as_str().unwrap_or_default().to_string())
                .collect()
        })
        .unwrap_or_default();
    let outcome = Outcome {
        report: bundle(results),
        csv,
    };
    if failed.is_empty() {
        Ok(outcome)
    } else {
        Err((CliError::FixtureMismatch(failed), Some(Box::new(outcome))))
    }
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&outcome.report).map_err(|e| CliError::Io(e.to_string()))?;
    match &cli.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            let write = |name: &str, body: &str| {
                let path = dir.join(name);
                fs::write(&path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
            };
            write(&format!("{}.json", outcome.report.command), &text)?;
            for (name, body) in &outcome.csv {
                write(name, body)?;
            }
        }
        None => println!("{text}"),
    }
    Ok(())
}

/// Parses nothing; runs an already-parsed command line and returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    let (err, outcome) = match execute(cli) {
        Ok(outcome) => (None, Some(Box::new(outcome))),
        Err((e, outcome)) => (Some(e), outcome),
    };
    if let Some(outcome) = &outcome {
        if let Err(e) = emit(cli, outcome) {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    }
    match err {
        None => 0,
        Some(e) => {
            eprintln!("error: {e}");
            if let CliError::FixtureMismatch(names) = &e {
                for n in names {
                    eprintln!("  mismatch: {n}");
                }
            }
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_errors_carry_position() {
        let err = Scenario::parse("{\n  \"network\": {\"c\": [[0.0]]}\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line"), "{msg}");
        assert_eq!(err.exit_code(), 2);
        assert!(Scenario::parse("{\"bogus\": 1}").is_err());
    }

    #[test]
    fn scenario_round_trip() {
        let sc = Scenario {
            network: Some(fixtures::ring4()),
            initial_states: vec![fixtures::PERIOD8_ORBIT[0].to_vec()],
            horizon: Some(3),
            ..Default::default()
        };
        let text = serde_json::to_string(&sc).unwrap();
        assert_eq!(Scenario::parse(&text).unwrap(), sc);
    }

    #[test]
    fn report_round_trip() {
        let r = ReportBundle {
            tool: "finnet".into(),
            version: VERSION.into(),
            command: "equilibria".into(),
            inputs: json!({"a": [1.0, 2.5]}),
            results: json!({"k": 0.1}),
            wall_time_ms: 1.25,
        };
        let back: ReportBundle = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn flags_override_scenario() {
        let cli = Cli::parse_from(["finnet", "cycles", "--seed", "9", "--clamped-v-update"]);
        let sc = Scenario {
            seed: Some(3),
            tol: Some(1e-4),
            ..Default::default()
        };
        let r = resolve(&cli, &sc);
        assert_eq!(r.seed, 9);
        assert_eq!(r.tol, 1e-4);
        assert_eq!(r.v_update, VUpdate::Clamped);
        assert!(Cli::try_parse_from(["finnet", "cycles", "--verbatim-v-update", "--clamped-v-update"]).is_err());
    }
}
