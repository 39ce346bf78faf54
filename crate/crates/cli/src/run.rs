//! Command execution and exit codes.

use std::io;
use std::path::PathBuf;

use dnch_core::asymptotics::{
    continuous_dependence_probe, delta_sweep, eps_sweep, AsymptoticsError, Perturbation,
    ReferenceStrategy,
};
use dnch_core::diagnostics::{energy_inequality_check, flux_identity_check, max_principle_report};
use dnch_core::stepper::{solve, RunError, StepError};
use dnch_core::{
    EnergyLedger, ProblemSpec64, RateReport64, SweepConfig, SweepParameter, Trajectory64,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Command, ConfigError, RunConfig};
use crate::graphs::{check_graphs, ORACLE_TOLERANCE};
use crate::output::{
    csv_row, default_snapshots, num, series_csv, trajectory_csv, trajectory_is_finite, Header,
    OutputDir, Record,
};

pub const ENERGY_TOLERANCE: f64 = 1e-8;
pub const FLUX_TOLERANCE: f64 = 1e-12;
pub const PROBE_SPREAD: f64 = 10.0;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot write output: {0}")]
    Io(#[from] io::Error),
    #[error("{0}")]
    NonConvergence(String),
    #[error("non-finite value in {0}")]
    NotFinite(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    /// 1 for configuration problems, 2 for solver failures and NaN, 3 for
    /// failed checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) | Self::Invalid(_) => 1,
            Self::NonConvergence(_) | Self::NotFinite(_) => 2,
            Self::CheckFailed(_) => 3,
        }
    }
}

/// What a successful run produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// One-line human summary.
    pub summary: String,
}

struct Context<'a> {
    cfg: &'a RunConfig,
    out: OutputDir,
    header: Header,
    files: Vec<PathBuf>,
}

impl Context<'_> {
    fn write(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.out.write(name, text)?;
        self.files.push(path);
        Ok(())
    }

    fn write_records(&mut self, name: &str, records: &[Record]) -> Result<(), CliError> {
        if let Some(bad) = records.iter().find(|r| !r.is_finite()) {
            let mut marked = records.to_vec();
            marked.retain(|r| r.is_finite());
            marked.push(failure_record(
                None,
                &format!("non-finite value in {}", bad.to_line()),
            ));
            if self.cfg.emit.jsonl {
                self.out.write_jsonl(name, &marked)?;
            }
            return Err(CliError::NotFinite(name.into()));
        }
        if self.cfg.emit.jsonl {
            let mut all = vec![self.header.record()];
            all.extend_from_slice(records);
            let path = self.out.write_jsonl(name, &all)?;
            self.files.push(path);
        }
        Ok(())
    }

    fn csv(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        if self.cfg.emit.csv {
            self.write(name, text)?;
        }
        Ok(())
    }
}

fn failure_record(step: Option<usize>, message: &str) -> Record {
    let r = Record::new("failure");
    let r = match step {
        Some(k) => r.with("step", k),
        None => r.with("step", serde_json::Value::Null),
    };
    r.with("message", message)
}

fn header_for(cfg: &RunConfig, spec: Option<&ProblemSpec64>) -> Header {
    let mut h = Header::default();
    h.push("command", cfg.command.name());
    h.push("preset", cfg.preset.as_deref().unwrap_or("none"));
    if let Some(s) = spec {
        h.push("epsilon", num(s.epsilon));
        h.push("delta", num(s.delta));
        h.push("lambda", num(s.lambda));
        h.push("tau", num(s.tau));
        h.push("horizon", num(s.horizon));
        h.push("steps", s.steps());
        h.push("length", num(s.grid.length()));
        h.push("cells", s.grid.cells());
        h.push("h", num(s.grid.h()));
        h.push("graph", s.graph.label());
        h.push(
            "potential",
            format!("{}:{}", s.potential.label(), num(s.potential.k())),
        );
        h.push("K", num(s.potential.k()));
        h.push("a", num(s.potential.a()));
        h.push("b", num(s.potential.b()));
        h.push("r0", num(s.potential.r0()));
        h.push("forcing", s.forcing.label());
        h.push("u0", cfg.u0_label());
        h.push("a0", num(s.initial_bounds.0));
        h.push("b0", num(s.initial_bounds.1));
        h.push("solver.tol", num(s.solver.tol));
        h.push("solver.max_newton", s.solver.max_newton);
        h.push("solver.max_halvings", s.solver.max_halvings);
        h.push("solver.fallback_iterations", s.solver.fallback_iterations);
        h.push("solver.relaxation", num(s.solver.relaxation));
        h.push("solver.warm_start", s.solver.warm_start);
    }
    match cfg.command {
        Command::SweepDelta | Command::SweepEps => {
            let values = sweep_values(cfg);
            h.push("sweep.values", join(&values));
            let reference = match cfg.sweep.reference {
                ReferenceStrategy::LimitSolve => "limit",
                ReferenceStrategy::Finest => "finest",
            };
            h.push("sweep.reference", reference);
            h.push("sweep.smooth", cfg.sweep.smooth);
        }
        Command::ProbeDependence => h.push("probe.scales", join(&cfg.probe_scales)),
        Command::Diagnose => {
            h.push("diagnose.corrupt", cfg.corrupt.map_or("none".into(), num));
        }
        Command::CheckGraphs => h.push("graphs.samples", cfg.graph_samples),
        Command::Solve => {}
    }
    h.push("seed", cfg.seed);
    h.push("emit", cfg.emit);
    h
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}

fn sweep_values(cfg: &RunConfig) -> Vec<f64> {
    cfg.sweep
        .values
        .clone()
        .unwrap_or_else(|| match cfg.command {
            Command::SweepEps => vec![1e-1, 1e-2, 1e-3],
            _ => vec![1e-2, 1e-3, 1e-4, 1e-5],
        })
}

/// Executes the configured command and writes its outputs.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let spec = match cfg.command {
        Command::CheckGraphs => None,
        _ => Some(cfg.spec()?),
    };
    let header = header_for(cfg, spec.as_ref());
    let out = OutputDir::create(&cfg.output)?;
    let mut ctx = Context {
        cfg,
        out,
        header,
        files: Vec::new(),
    };
    let header_text = ctx.header.text();
    ctx.write("header.txt", &header_text)?;
    if !cfg.quiet {
        print!("{header_text}");
    }
    let summary = match (cfg.command, spec) {
        (Command::Solve, Some(spec)) => solve_command(&mut ctx, &spec, false)?,
        (Command::Diagnose, Some(spec)) => solve_command(&mut ctx, &spec, true)?,
        (Command::SweepDelta, Some(spec)) => sweep_command(&mut ctx, spec, SweepParameter::Delta)?,
        (Command::SweepEps, Some(spec)) => sweep_command(&mut ctx, spec, SweepParameter::Epsilon)?,
        (Command::ProbeDependence, Some(spec)) => probe_command(&mut ctx, &spec)?,
        (Command::CheckGraphs, _) => graphs_command(&mut ctx)?,
        _ => unreachable!("every solver command has a spec"),
    };
    if !cfg.quiet {
        println!("{summary}");
    }
    Ok(Outcome {
        files: ctx.files,
        summary,
    })
}

fn write_trajectory(ctx: &mut Context<'_>, traj: &Trajectory64) -> Result<(), CliError> {
    let snapshots = ctx
        .cfg
        .snapshots
        .clone()
        .unwrap_or_else(|| default_snapshots(traj.spec.steps()));
    ctx.csv("trajectory.csv", &trajectory_csv(traj, &snapshots))?;
    ctx.csv("series.csv", &series_csv(traj))
}

/// Writes whatever was solved, then a failure marker.
fn flush_failure(
    ctx: &mut Context<'_>,
    traj: &Trajectory64,
    step: usize,
    message: &str,
) -> Result<(), CliError> {
    let marker = format!("# failed at step {step}: {message}\n");
    if ctx.cfg.emit.csv {
        let snapshots = ctx
            .cfg
            .snapshots
            .clone()
            .unwrap_or_else(|| default_snapshots(traj.spec.steps()));
        let finite = trajectory_is_finite(traj);
        let (t, s) = if finite {
            (trajectory_csv(traj, &snapshots), series_csv(traj))
        } else {
            (String::new(), String::new())
        };
        ctx.write("trajectory.csv", &(t + &marker))?;
        ctx.write("series.csv", &(s + &marker))?;
    }
    if ctx.cfg.emit.jsonl {
        let records = vec![ctx.header.record(), failure_record(Some(step), message)];
        let path = ctx.out.write_jsonl("run.jsonl", &records)?;
        ctx.files.push(path);
    }
    Ok(())
}

fn solve_command(
    ctx: &mut Context<'_>,
    spec: &ProblemSpec64,
    diagnose: bool,
) -> Result<String, CliError> {
    let mut traj = match solve(spec) {
        Ok(t) => t,
        Err(RunError::Spec(e)) => return Err(ConfigError::from(e).into()),
        Err(RunError::Solve(e)) => {
            flush_failure(ctx, &e.partial, e.step, &e.source.to_string())?;
            return Err(match e.source {
                StepError::NotFinite => CliError::NotFinite(format!("step {}", e.step)),
                other => CliError::NonConvergence(format!("step {} failed: {other}", e.step)),
            });
        }
    };
    if diagnose {
        if let Some(amplitude) = ctx.cfg.corrupt {
            corrupt(&mut traj, ctx.cfg.seed, amplitude);
        }
    }
    if !trajectory_is_finite(&traj) {
        let step = traj
            .states
            .iter()
            .find(|s| !(s.u.all_finite() && s.mu.all_finite()))
            .map_or(traj.states.len(), |s| s.k);
        flush_failure(ctx, &traj, step, "non-finite value in trajectory")?;
        return Err(CliError::NotFinite(format!("trajectory at step {step}")));
    }
    write_trajectory(ctx, &traj)?;
    let iters: usize = traj.states.iter().map(|s| s.newton_iters).sum();
    let mut run = Record::new(if diagnose { "diagnostics" } else { "run" })
        .with("steps", traj.states.len())
        .with("newton_iters", iters)
        .num(
            "final_free_energy",
            traj.ledger
                .entries
                .last()
                .map_or(traj.ledger.initial_free_energy, |e| e.free_energy),
        )
        .num(
            "final_mass",
            traj.ledger
                .entries
                .last()
                .map_or(traj.ledger.initial_mass, |e| e.mass),
        );
    if !diagnose {
        ctx.write_records("run.jsonl", &[run])?;
        return Ok(format!(
            "solved {} steps ({iters} Newton iterations)",
            traj.states.len()
        ));
    }

    let f0 = traj.ledger.initial_free_energy_reg;
    let energy = energy_inequality_check(&traj);
    let energy_tol = ENERGY_TOLERANCE * f0.max(1.0);
    let flux = flux_identity_check(&traj);
    let energy_pass = energy <= energy_tol;
    let flux_pass = flux <= FLUX_TOLERANCE;
    run = run
        .num("energy_violation", energy)
        .num("energy_tolerance", energy_tol)
        .with("energy_pass", energy_pass)
        .num("flux_violation", flux)
        .num("flux_tolerance", FLUX_TOLERANCE)
        .with("flux_pass", flux_pass);
    let (a, b) = (spec.potential.a(), spec.potential.b());
    let bounds_pass = match max_principle_report(spec, &traj) {
        Ok(r) => {
            let strict = r.min_u > a && r.max_u < b;
            run = run
                .num("M", r.m)
                .num("a_bar", r.a_bar)
                .num("b_bar", r.b_bar)
                .num("a0_prime", r.a0_prime)
                .num("b0_prime", r.b0_prime)
                .num("min_u", r.min_u)
                .num("max_u", r.max_u)
                .with("strictly_inside", strict)
                .with("bounds_pass", r.pass);
            r.pass && strict
        }
        // bounded-derivative potentials have no threshold; reported, not fatal
        Err(e) => {
            run = run
                .with("bounds_pass", serde_json::Value::Null)
                .with("bounds_note", e.to_string());
            true
        }
    };
    let pass = energy_pass && flux_pass && bounds_pass;
    run = run.with("pass", pass);
    ctx.write_records("diagnostics.jsonl", &[run])?;
    let summary = format!(
        "energy violation {energy:e} (tol {energy_tol:e}), flux violation {flux:e} (tol {FLUX_TOLERANCE:e}), bounds {}",
        if bounds_pass { "ok" } else { "violated" }
    );
    if pass {
        Ok(summary)
    } else {
        Err(CliError::CheckFailed(summary))
    }
}

/// Test fixture: shifts `μ` in one seeded cell of one seeded step.
fn corrupt(traj: &mut Trajectory64, seed: u64, amplitude: f64) {
    if traj.states.is_empty() {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.gen_range(0..traj.states.len());
    let n = traj.states[k].mu.len();
    let i = rng.gen_range(0..n);
    traj.states[k].mu[i] += amplitude;
    traj.ledger = EnergyLedger::build(&traj.spec, &traj.initial, &traj.states);
}

fn asymptotics_error(e: AsymptoticsError) -> CliError {
    match e {
        AsymptoticsError::Solve {
            nonconvergence: true,
            ..
        } => CliError::NonConvergence(e.to_string()),
        other => CliError::Invalid(other.to_string()),
    }
}

fn rate_records(report: &RateReport64) -> Vec<Record> {
    let name = report.parameter.name();
    let mut records: Vec<Record> = report
        .points
        .iter()
        .map(|p| {
            Record::new("point")
                .with("parameter", name)
                .num("value", p.value)
                .num("err_mu", p.err_mu)
                .num("err_u", p.err_u)
                .num("error", p.error)
                .num("rhs", p.rhs)
                .num("witness", p.witness)
                .num("u0_discrepancy", p.u0_discrepancy)
                .num("g_discrepancy", p.g_discrepancy)
        })
        .collect();
    records.push(
        Record::new("summary")
            .with("parameter", name)
            .with("reference", report.reference.as_str())
            .opt("slope", report.slope)
            .opt("fit_residual", report.fit_residual)
            .with("points_used", report.points_used)
            .opt("witness_slope", report.witness_slope)
            .opt("constant", report.constant)
            .with("errors_monotone", report.errors_monotone()),
    );
    records
}

fn rate_csv(report: &RateReport64) -> String {
    let mut out =
        String::from("value,err_mu,err_u,error,rhs,witness,u0_discrepancy,g_discrepancy\n");
    for p in &report.points {
        out.push_str(&csv_row(&[
            p.value,
            p.err_mu,
            p.err_u,
            p.error,
            p.rhs,
            p.witness,
            p.u0_discrepancy,
            p.g_discrepancy,
        ]));
    }
    out
}

fn sweep_command(
    ctx: &mut Context<'_>,
    spec: ProblemSpec64,
    parameter: SweepParameter,
) -> Result<String, CliError> {
    let mut cfg = SweepConfig::new(spec, parameter, sweep_values(ctx.cfg));
    cfg.reference = ctx.cfg.sweep.reference;
    cfg.smooth = ctx.cfg.sweep.smooth;
    let result = match parameter {
        SweepParameter::Delta => delta_sweep(&cfg),
        SweepParameter::Epsilon => eps_sweep(&cfg),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            if ctx.cfg.emit.jsonl {
                let records = vec![ctx.header.record(), failure_record(None, &e.to_string())];
                let path = ctx.out.write_jsonl("rates.jsonl", &records)?;
                ctx.files.push(path);
            }
            return Err(asymptotics_error(e));
        }
    };
    ctx.write_records("rates.jsonl", &rate_records(&report))?;
    ctx.csv("rates.csv", &rate_csv(&report))?;
    let slope = report
        .slope
        .map_or("undefined".into(), |s| format!("{s:.4}"));
    let mut summary = format!("{} sweep: slope {slope}", parameter.name());
    if let Some(w) = report.witness_slope {
        summary.push_str(&format!(", witness slope {w:.4}"));
    }
    Ok(summary)
}

fn probe_command(ctx: &mut Context<'_>, spec: &ProblemSpec64) -> Result<String, CliError> {
    let profile = Perturbation::standard(&spec.grid);
    let report = continuous_dependence_probe(spec, &ctx.cfg.probe_scales, &profile)
        .map_err(asymptotics_error)?;
    let mut records: Vec<Record> = report
        .points
        .iter()
        .map(|p| {
            Record::new("point")
                .num("eta", p.eta)
                .num("lhs", p.lhs)
                .num("rhs", p.rhs)
                .num("ratio", p.ratio)
        })
        .collect();
    let pass = report.spread <= PROBE_SPREAD;
    records.push(
        Record::new("summary")
            .num("spread", report.spread)
            .num("spread_limit", PROBE_SPREAD)
            .with("pass", pass),
    );
    ctx.write_records("probe.jsonl", &records)?;
    let mut csv = String::from("eta,lhs,rhs,ratio\n");
    for p in &report.points {
        csv.push_str(&csv_row(&[p.eta, p.lhs, p.rhs, p.ratio]));
    }
    ctx.csv("probe.csv", &csv)?;
    Ok(format!(
        "dependence probe: ratio spread {:.4}",
        report.spread
    ))
}

fn graphs_command(ctx: &mut Context<'_>) -> Result<String, CliError> {
    let checks = check_graphs(ctx.cfg.seed, ctx.cfg.graph_samples);
    let records: Vec<Record> = checks
        .iter()
        .map(|c| {
            Record::new("graph")
                .with("graph", c.name)
                .with("samples", c.samples)
                .num("max_error", c.max_error)
                .num("worst_lambda", c.worst.0)
                .num("worst_r", c.worst.1)
                .num("tolerance", ORACLE_TOLERANCE)
                .with("pass", c.pass)
        })
        .collect();
    ctx.write_records("graphs.jsonl", &records)?;
    let mut csv = String::from("graph,samples,max_error,pass\n");
    for c in &checks {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            c.name,
            c.samples,
            num(c.max_error),
            c.pass
        ));
    }
    ctx.csv("graphs.csv", &csv)?;
    let worst = checks.iter().map(|c| c.max_error).fold(0.0, f64::max);
    let summary = format!("{} graphs, worst resolvent error {worst:e}", checks.len());
    if checks.iter().all(|c| c.pass) {
        Ok(summary)
    } else {
        Err(CliError::CheckFailed(summary))
    }
}
