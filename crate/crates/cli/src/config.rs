//! Line-based run configuration.
//!
//! ```text
//! # comment
//! command = solve
//! preset = quartic-zero
//!
//! [problem]
//! delta = 1e-3
//! ```
//!
//! Top-level keys: `command`, `preset`, `output`, `seed`, `emit`, `quiet`.
//! Sections: `[problem]`, `[solver]`, `[sweep]`, `[probe]`, `[output]`,
//! `[diagnose]`, `[graphs]`. Every key may appear once; unknown keys and
//! sections are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use dnch_core::asymptotics::ReferenceStrategy;
use dnch_core::monotone::{GraphSpec, MonotoneError, PotentialSpec};
use dnch_core::presets::{self, PresetError};
use dnch_core::stepper::{Forcing, ProblemSpec, SpecError};
use dnch_core::{Field, Grid1D};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Preset(#[from] PresetError),
    #[error(transparent)]
    Monotone(#[from] MonotoneError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Solve,
    Diagnose,
    SweepDelta,
    SweepEps,
    ProbeDependence,
    CheckGraphs,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::Solve => "solve",
            Self::Diagnose => "diagnose",
            Self::SweepDelta => "sweep-delta",
            Self::SweepEps => "sweep-eps",
            Self::ProbeDependence => "probe-dependence",
            Self::CheckGraphs => "check-graphs",
        }
    }
}

impl FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        [
            Self::Solve,
            Self::Diagnose,
            Self::SweepDelta,
            Self::SweepEps,
            Self::ProbeDependence,
            Self::CheckGraphs,
        ]
        .into_iter()
        .find(|c| c.name() == s)
        .ok_or_else(|| format!("unknown command {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emit {
    pub csv: bool,
    pub jsonl: bool,
}

impl FromStr for Emit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let mut emit = Emit {
            csv: false,
            jsonl: false,
        };
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            match part {
                "csv" => emit.csv = true,
                "jsonl" => emit.jsonl = true,
                other => {
                    return Err(format!(
                        "unknown emit format {other:?} (expected csv, jsonl)"
                    ))
                }
            }
        }
        Ok(emit)
    }
}

impl fmt::Display for Emit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [(self.csv, "csv"), (self.jsonl, "jsonl")]
            .into_iter()
            .filter_map(|(on, n)| on.then_some(n))
            .collect();
        f.write_str(&parts.join(","))
    }
}

/// Initial datum rule, sampled on the grid.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialRule {
    /// `amplitude·cos(mode·πx/L) + offset`.
    Cosine {
        amplitude: f64,
        mode: f64,
        offset: f64,
    },
    Constant(f64),
    /// The root `r₀` of `γ`.
    Root,
}

impl InitialRule {
    fn sample(&self, grid: &Grid1D<f64>, potential: &PotentialSpec<f64>) -> Field<f64> {
        match *self {
            Self::Cosine {
                amplitude,
                mode,
                offset,
            } => {
                let k = mode * std::f64::consts::PI / grid.length();
                grid.sample(|x| amplitude * (k * x).cos() + offset)
            }
            Self::Constant(c) => grid.constant(c),
            Self::Root => grid.constant(potential.r0()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Cosine {
                amplitude,
                mode,
                offset,
            } => format!("cos:{amplitude}:{mode}:{offset}"),
            Self::Constant(c) => format!("const:{c}"),
            Self::Root => "root".into(),
        }
    }
}

/// `[problem]` entries; `None` means "take it from the preset".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProblemBlock {
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub lambda: Option<f64>,
    pub tau: Option<f64>,
    pub horizon: Option<f64>,
    pub length: Option<f64>,
    pub cells: Option<usize>,
    pub graph: Option<String>,
    pub potential: Option<String>,
    pub forcing: Option<String>,
    pub u0: Option<String>,
    pub a0: Option<f64>,
    pub b0: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverBlock {
    pub tol: Option<f64>,
    pub max_newton: Option<usize>,
    pub max_halvings: Option<usize>,
    pub fallback_iterations: Option<usize>,
    pub relaxation: Option<f64>,
    pub warm_start: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepBlock {
    /// Defaults per command when absent.
    pub values: Option<Vec<f64>>,
    pub reference: ReferenceStrategy,
    pub smooth: bool,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub preset: Option<String>,
    pub problem: ProblemBlock,
    pub solver: SolverBlock,
    pub output: PathBuf,
    pub seed: u64,
    pub emit: Emit,
    pub quiet: bool,
    /// Trajectory CSV snapshot steps; `None` means 9 evenly spaced.
    pub snapshots: Option<Vec<usize>>,
    pub sweep: SweepBlock,
    pub probe_scales: Vec<f64>,
    /// Diagnose mode: perturb the solved trajectory before checking it.
    pub corrupt: Option<f64>,
    pub graph_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Solve,
            preset: None,
            problem: ProblemBlock::default(),
            solver: SolverBlock::default(),
            output: PathBuf::from("out"),
            seed: 0,
            emit: Emit {
                csv: true,
                jsonl: true,
            },
            quiet: false,
            snapshots: None,
            sweep: SweepBlock {
                values: None,
                reference: ReferenceStrategy::LimitSolve,
                smooth: false,
            },
            probe_scales: vec![1e-1, 1e-2, 1e-3, 1e-4],
            corrupt: None,
            graph_samples: 200,
        }
    }
}

fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<T>().map_err(|e| format!("{p:?}: {e}")))
        .collect()
}

fn parse_value<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse::<T>().map_err(|e| format!("{s:?}: {e}"))
}

fn parse_graph(s: &str) -> Result<GraphSpec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = |e: MonotoneError| e.to_string();
    match parts.as_slice() {
        ["zero"] => Ok(GraphSpec::Zero),
        ["sign"] => Ok(GraphSpec::Sign),
        ["power", p, c] => GraphSpec::power(parse_value(p)?, parse_value(c)?).map_err(bad),
        ["piecewise", b, k] => GraphSpec::piecewise_linear(parse_list(b)?, parse_list(k)?).map_err(bad),
        _ => Err(format!(
            "unknown graph {s:?} (expected zero, sign, power:p:coefficient, piecewise:breaks:slopes)"
        )),
    }
}

fn parse_potential(s: &str) -> Result<PotentialSpec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = |e: MonotoneError| e.to_string();
    match parts.as_slice() {
        ["double-well", a, m, k] => {
            PotentialSpec::double_well(parse_value(a)?, parse_value(m)?, parse_value(k)?).map_err(bad)
        }
        ["log", c, c0, k] => {
            PotentialSpec::logarithmic(parse_value(c)?, parse_value(c0)?, parse_value(k)?).map_err(bad)
        }
        ["poly", coeffs, k] => PotentialSpec::polynomial(parse_list(coeffs)?, parse_value(k)?).map_err(bad),
        _ => Err(format!(
            "unknown potential {s:?} (expected double-well:alpha:well:K, log:c:c0:K, poly:c0,c1,...:K)"
        )),
    }
}

fn parse_forcing(s: &str) -> Result<Forcing<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["zero"] => Ok(Forcing::Zero),
        ["const", c] => Ok(Forcing::Constant(parse_value(c)?)),
        ["cos", a, m, r] => Ok(Forcing::Cosine {
            amplitude: parse_value(a)?,
            mode: parse_value(m)?,
            rate: parse_value(r)?,
        }),
        _ => Err(format!(
            "unknown forcing {s:?} (expected zero, const:c, cos:amplitude:mode:rate)"
        )),
    }
}

fn parse_initial(s: &str) -> Result<InitialRule, String> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        ["root"] => Ok(InitialRule::Root),
        ["const", c] => Ok(InitialRule::Constant(parse_value(c)?)),
        ["cos", a, m] => Ok(InitialRule::Cosine {
            amplitude: parse_value(a)?,
            mode: parse_value(m)?,
            offset: 0.0,
        }),
        ["cos", a, m, o] => Ok(InitialRule::Cosine {
            amplitude: parse_value(a)?,
            mode: parse_value(m)?,
            offset: parse_value(o)?,
        }),
        _ => Err(format!(
            "unknown initial datum {s:?} (expected root, const:c, cos:amplitude:mode[:offset])"
        )),
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("{s:?} is not a boolean")),
    }
}

/// Parses and validates a configuration file.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let (mut cfg, command) = parse_raw(text)?;
    cfg.command = command.ok_or_else(|| ConfigError::Invalid("missing `command`".into()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Parses a configuration file without validating it; the `command` key is
/// returned separately since the command line may supply it instead.
pub fn parse_raw(text: &str) -> Result<(RunConfig, Option<Command>), ConfigError> {
    let mut cfg = RunConfig::default();
    let mut command = None;
    let mut section = String::new();
    let mut seen: BTreeMap<(String, String), usize> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| ConfigError::Parse { line, message };
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(format!("malformed section header {body:?}")))?
                .trim();
            if ![
                "problem", "solver", "sweep", "probe", "output", "diagnose", "graphs",
            ]
            .contains(&name)
            {
                return Err(err(format!("unknown section [{name}]")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got {body:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        if let Some(first) = seen.insert((section.clone(), key.to_string()), line) {
            return Err(err(format!(
                "duplicate key `{key}` (first set on line {first})"
            )));
        }
        let p = &mut cfg.problem;
        let s = &mut cfg.solver;
        let result: Result<(), String> = match (section.as_str(), key) {
            ("", "command") => value.parse().map(|c| command = Some(c)),
            ("", "preset") => presets::info(value)
                .map(|_| cfg.preset = Some(value.to_string()))
                .ok_or_else(|| PresetError::Unknown(value.to_string()).to_string()),
            ("", "output") | ("output", "dir") => {
                cfg.output = PathBuf::from(value);
                Ok(())
            }
            ("", "seed") => parse_value(value).map(|v| cfg.seed = v),
            ("", "emit") => value.parse().map(|v| cfg.emit = v),
            ("", "quiet") => parse_bool(value).map(|v| cfg.quiet = v),
            ("problem", "epsilon") => parse_value(value).map(|v| p.epsilon = Some(v)),
            ("problem", "delta") => parse_value(value).map(|v| p.delta = Some(v)),
            ("problem", "lambda") => parse_value(value).map(|v| p.lambda = Some(v)),
            ("problem", "tau") => parse_value(value).map(|v| p.tau = Some(v)),
            ("problem", "horizon") => parse_value(value).map(|v| p.horizon = Some(v)),
            ("problem", "length") => parse_value(value).map(|v| p.length = Some(v)),
            ("problem", "cells") => parse_value(value).map(|v| p.cells = Some(v)),
            ("problem", "a0") => parse_value(value).map(|v| p.a0 = Some(v)),
            ("problem", "b0") => parse_value(value).map(|v| p.b0 = Some(v)),
            ("problem", "graph") => parse_graph(value).map(|_| p.graph = Some(value.to_string())),
            ("problem", "potential") => {
                parse_potential(value).map(|_| p.potential = Some(value.to_string()))
            }
            ("problem", "forcing") => {
                parse_forcing(value).map(|_| p.forcing = Some(value.to_string()))
            }
            ("problem", "u0") => parse_initial(value).map(|_| p.u0 = Some(value.to_string())),
            ("solver", "tol") => parse_value(value).map(|v| s.tol = Some(v)),
            ("solver", "max_newton") => parse_value(value).map(|v| s.max_newton = Some(v)),
            ("solver", "max_halvings") => parse_value(value).map(|v| s.max_halvings = Some(v)),
            ("solver", "fallback_iterations") => {
                parse_value(value).map(|v| s.fallback_iterations = Some(v))
            }
            ("solver", "relaxation") => parse_value(value).map(|v| s.relaxation = Some(v)),
            ("solver", "warm_start") => parse_bool(value).map(|v| s.warm_start = Some(v)),
            ("sweep", "values") => parse_list(value).map(|v| cfg.sweep.values = Some(v)),
            ("sweep", "reference") => match value {
                "limit" => {
                    cfg.sweep.reference = ReferenceStrategy::LimitSolve;
                    Ok(())
                }
                "finest" => {
                    cfg.sweep.reference = ReferenceStrategy::Finest;
                    Ok(())
                }
                _ => Err(format!(
                    "unknown reference {value:?} (expected limit, finest)"
                )),
            },
            ("sweep", "smooth") => parse_bool(value).map(|v| cfg.sweep.smooth = v),
            ("probe", "scales") => parse_list(value).map(|v| cfg.probe_scales = v),
            ("output", "snapshots") => parse_list(value).map(|v| cfg.snapshots = Some(v)),
            ("diagnose", "corrupt") => parse_value(value).map(|v| cfg.corrupt = Some(v)),
            ("graphs", "samples") => parse_value(value).map(|v| cfg.graph_samples = v),
            _ => {
                let place = if section.is_empty() {
                    "at top level".to_string()
                } else {
                    format!("in [{section}]")
                };
                Err(format!("unknown key `{key}` {place}"))
            }
        };
        result.map_err(err)?;
    }
    Ok((cfg, command))
}

impl RunConfig {
    /// Checks everything that does not need the file system.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.command != Command::CheckGraphs {
            self.spec()?;
        }
        if let Some(values) = &self.sweep.values {
            if values.len() < 3 {
                return Err(ConfigError::Invalid(format!(
                    "sweep needs at least 3 values, got {}",
                    values.len()
                )));
            }
        }
        if self.probe_scales.iter().any(|s| !s.is_finite() || *s < 0.0) {
            return Err(ConfigError::Invalid(
                "probe scales must be finite and >= 0".into(),
            ));
        }
        if let Some(c) = self.corrupt {
            if !c.is_finite() || c == 0.0 {
                return Err(ConfigError::Invalid(
                    "corrupt must be a finite nonzero amplitude".into(),
                ));
            }
        }
        Ok(())
    }

    /// Builds the problem from the preset (if any) and the `[problem]`
    /// overrides. Without a preset every problem key except `a0`, `b0` and
    /// `forcing` must be given.
    pub fn spec(&self) -> Result<ProblemSpec<f64>, ConfigError> {
        let p = &self.problem;
        let grid_override = p.length.is_some() || p.cells.is_some();
        let mut spec = match &self.preset {
            Some(name) => {
                let base = presets::preset::<f64>(name)?;
                if grid_override {
                    let grid = Grid1D::new(
                        p.length.unwrap_or(base.grid.length()),
                        p.cells.unwrap_or(base.grid.cells()),
                    )
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                    presets::preset_on(name, grid)?
                } else {
                    base
                }
            }
            None => {
                let missing: Vec<&str> = [
                    ("epsilon", p.epsilon.is_none()),
                    ("delta", p.delta.is_none()),
                    ("lambda", p.lambda.is_none()),
                    ("tau", p.tau.is_none()),
                    ("horizon", p.horizon.is_none()),
                    ("length", p.length.is_none()),
                    ("cells", p.cells.is_none()),
                    ("graph", p.graph.is_none()),
                    ("potential", p.potential.is_none()),
                    ("u0", p.u0.is_none()),
                ]
                .into_iter()
                .filter_map(|(k, m)| m.then_some(k))
                .collect();
                if !missing.is_empty() {
                    return Err(ConfigError::Invalid(format!(
                        "no preset given and [problem] is missing: {}",
                        missing.join(", ")
                    )));
                }
                let grid = Grid1D::new(p.length.unwrap(), p.cells.unwrap())
                    .map_err(|e| ConfigError::Invalid(e.to_string()))?;
                let potential = parse_potential(p.potential.as_deref().unwrap())
                    .map_err(ConfigError::Invalid)?;
                let u0 = grid.constant(potential.r0());
                ProblemSpec {
                    epsilon: p.epsilon.unwrap(),
                    delta: p.delta.unwrap(),
                    lambda: p.lambda.unwrap(),
                    tau: p.tau.unwrap(),
                    horizon: p.horizon.unwrap(),
                    graph: GraphSpec::Zero,
                    initial_bounds: (u0.min(), u0.max()),
                    u0,
                    grid,
                    potential,
                    forcing: Forcing::Zero,
                    solver: Default::default(),
                }
            }
        };
        let invalid = ConfigError::Invalid;
        if let Some(v) = p.epsilon {
            spec.epsilon = v;
        }
        if let Some(v) = p.delta {
            spec.delta = v;
        }
        if let Some(v) = p.lambda {
            spec.lambda = v;
        }
        if let Some(v) = p.tau {
            spec.tau = v;
        }
        if let Some(v) = p.horizon {
            spec.horizon = v;
        }
        if let Some(g) = &p.graph {
            spec.graph = parse_graph(g).map_err(invalid)?;
        }
        if let Some(f) = &p.forcing {
            spec.forcing = parse_forcing(f).map_err(invalid)?;
        }
        let potential_changed = p.potential.is_some();
        if let Some(v) = &p.potential {
            spec.potential = parse_potential(v).map_err(invalid)?;
        }
        if let Some(rule) = &p.u0 {
            spec.u0 = parse_initial(rule)
                .map_err(invalid)?
                .sample(&spec.grid, &spec.potential);
        } else if potential_changed && self.preset.as_deref() == Some("stationary") {
            spec.u0 = InitialRule::Root.sample(&spec.grid, &spec.potential);
        }
        spec.initial_bounds = (
            p.a0.unwrap_or_else(|| spec.u0.min()),
            p.b0.unwrap_or_else(|| spec.u0.max()),
        );
        let s = &self.solver;
        let o = &mut spec.solver;
        o.tol = s.tol.unwrap_or(o.tol);
        o.max_newton = s.max_newton.unwrap_or(o.max_newton);
        o.max_halvings = s.max_halvings.unwrap_or(o.max_halvings);
        o.fallback_iterations = s.fallback_iterations.unwrap_or(o.fallback_iterations);
        o.relaxation = s.relaxation.unwrap_or(o.relaxation);
        o.warm_start = s.warm_start.unwrap_or(o.warm_start);
        if !(o.tol > 0.0) || !(o.relaxation > 0.0 && o.relaxation <= 1.0) {
            return Err(ConfigError::Invalid(
                "solver needs tol > 0 and relaxation in (0, 1]".into(),
            ));
        }
        spec.validate()?;
        Ok(spec)
    }

    /// Label of the initial datum rule, for the run header.
    pub fn u0_label(&self) -> String {
        match (&self.problem.u0, self.preset.as_deref()) {
            (Some(rule), _) => rule.clone(),
            (None, Some("stationary")) => "root".into(),
            (None, Some(_)) => "cos:0.9:1:0".into(),
            (None, None) => "root".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_preset_config_fills_defaults() {
        let cfg = parse_config("command = solve\npreset = quartic-zero\n").unwrap();
        assert_eq!(cfg.command, Command::Solve);
        assert_eq!(cfg.seed, 0);
        assert!(cfg.emit.csv && cfg.emit.jsonl);
        let spec = cfg.spec().unwrap();
        assert_eq!(spec.grid.cells(), 64);
        assert_eq!(spec.steps(), 100);
    }

    #[test]
    fn dual_regularization_is_enforced() {
        let text = "command = solve\npreset = quartic-zero\n[problem]\nepsilon = 0\ndelta = 0\n";
        let err = parse_config(text).unwrap_err();
        assert!(matches!(
            err,
            ConfigError::Spec(SpecError::NoRegularization)
        ));
        assert!(err.to_string().contains("at least one regularization"));
    }

    #[test]
    fn unknown_key_reports_its_line() {
        let text = "command = solve\npreset = quartic-zero\n\n[problem]\nepsilonn = 1\n";
        match parse_config(text).unwrap_err() {
            ConfigError::Parse { line, message } => {
                assert_eq!(line, 5);
                assert!(message.contains("epsilonn"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let cases = [
            ("command = solve\nbogus line\n", 2),
            ("command = solve\n[nope]\n", 2),
            ("command = solve\ncommand = diagnose\n", 2),
            ("command = solve\n[problem]\ngraph = cubic\n", 3),
            ("command = fly\n", 1),
        ];
        for (text, want) in cases {
            match parse_config(text) {
                Err(ConfigError::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn full_problem_block_without_preset() {
        let text = "\
command = solve
[problem]
epsilon = 1
delta = 0.5
lambda = 1e-5
tau = 1e-3
horizon = 0.01
length = 2
cells = 32
graph = power:3:1
potential = log:1:2:2
forcing = cos:1:2:0
u0 = cos:0.5:1:0.1
";
        let spec = parse_config(text).unwrap().spec().unwrap();
        assert_eq!(spec.grid.cells(), 32);
        assert_eq!(spec.grid.length(), 2.0);
        assert_eq!(spec.steps(), 10);
        assert_eq!(spec.graph.label(), "power:3:1");
        assert!((spec.u0.max() - 0.6).abs() < 0.01);
    }

    #[test]
    fn incomplete_problem_block_is_rejected() {
        let err = parse_config("command = solve\n[problem]\nepsilon = 1\n").unwrap_err();
        assert!(err.to_string().contains("missing"));
    }

    #[test]
    fn preset_overrides_resample_the_grid() {
        let text = "command = solve\npreset = logwell-sign\n[problem]\ncells = 128\ntau = 5e-4\n";
        let spec = parse_config(text).unwrap().spec().unwrap();
        assert_eq!(spec.u0.len(), 128);
        assert_eq!(spec.steps(), 200);
    }

    #[test]
    fn comments_and_sections() {
        let text = "# run\ncommand = sweep-delta # trailing\npreset = logwell-sign\nseed = 7\nemit = jsonl\n\n[sweep]\nvalues = 1e-2, 1e-3, 1e-4\nreference = finest\n[output]\nsnapshots = 1, 50, 100\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.command, Command::SweepDelta);
        assert_eq!(cfg.seed, 7);
        assert!(!cfg.emit.csv && cfg.emit.jsonl);
        assert_eq!(cfg.sweep.values.as_deref(), Some(&[1e-2, 1e-3, 1e-4][..]));
        assert_eq!(cfg.sweep.reference, ReferenceStrategy::Finest);
        assert_eq!(cfg.snapshots.as_deref(), Some(&[1, 50, 100][..]));
    }
}
