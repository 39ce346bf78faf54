//! CSV and JSONL emitters. Numbers use shortest round-trip formatting, so
//! identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use dnch_core::Trajectory64;
use serde_json::Value;

/// A JSON object whose keys keep insertion order.
#[derive(Debug, Clone, Default)]
pub struct Record {
    fields: Vec<(String, Value)>,
    nonfinite: bool,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        Self::default().with("record", kind)
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.fields.push((key.into(), value.into()));
        self
    }

    /// A number; non-finite values are remembered, since JSON has no
    /// spelling for them.
    pub fn num(mut self, key: &str, value: f64) -> Self {
        self.nonfinite |= !value.is_finite();
        self.with(key, value)
    }

    /// `None` becomes `null`.
    pub fn opt(self, key: &str, value: Option<f64>) -> Self {
        match value {
            Some(v) => self.num(key, v),
            None => self.with(key, Value::Null),
        }
    }

    pub fn is_finite(&self) -> bool {
        !self.nonfinite
    }

    pub fn to_line(&self) -> String {
        let body: Vec<String> = self
            .fields
            .iter()
            .map(|(k, v)| format!("{}:{}", Value::from(k.as_str()), v))
            .collect();
        format!("{{{}}}", body.join(","))
    }
}

/// Ordered `key = value` pairs echoed at the top of every run.
#[derive(Debug, Clone, Default)]
pub struct Header(pub Vec<(String, String)>);

impl Header {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.into(), value.to_string()));
    }

    pub fn text(&self) -> String {
        self.0.iter().fold(String::new(), |mut s, (k, v)| {
            let _ = writeln!(s, "{k} = {v}");
            s
        })
    }

    pub fn record(&self) -> Record {
        self.0
            .iter()
            .fold(Record::new("header"), |r, (k, v)| r.with(k, v.as_str()))
    }
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> io::Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, contents)?;
        Ok(path)
    }

    pub fn write_jsonl(&self, name: &str, records: &[Record]) -> io::Result<PathBuf> {
        let text = records.iter().fold(String::new(), |mut s, r| {
            s.push_str(&r.to_line());
            s.push('\n');
            s
        });
        self.write(name, &text)
    }
}

/// Snapshot steps: `⌈j·n/9⌉` for `j = 1..9`, deduplicated.
pub fn default_snapshots(n: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (1..=9)
        .map(|j| (j * n).div_ceil(9))
        .filter(|k| *k >= 1)
        .collect();
    steps.dedup();
    steps
}

/// Shortest round-trip text; exponent form outside `[1e-4, 1e15)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 {
        "0".into()
    } else if !a.is_finite() || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(num).collect::<Vec<_>>().join(",")
}

/// One CSV line of numbers, newline included.
pub fn csv_row(values: &[f64]) -> String {
    let mut line = join(values.iter().copied());
    line.push('\n');
    line
}

/// `step, t`, then the `u`, `μ`, `w`, `ξ` blocks per snapshot row.
pub fn trajectory_csv(traj: &Trajectory64, snapshots: &[usize]) -> String {
    let n = traj.spec.grid.cells();
    let mut out = String::from("step,t");
    for block in ["u", "mu", "w", "xi"] {
        for i in 0..n {
            let _ = write!(out, ",{block}_{i}");
        }
    }
    out.push('\n');
    for &k in snapshots {
        let Some(s) = traj.states.get(k.wrapping_sub(1)) else {
            continue;
        };
        let _ = write!(out, "{},{}", s.k, num(s.t));
        for f in [&s.u, &s.mu, &s.w, &s.xi] {
            out.push(',');
            out.push_str(&join(f.iter().copied()));
        }
        out.push('\n');
    }
    out
}

pub const SERIES_COLUMNS: &str =
    "t,F,D_grad,D_visc,D_beta,S,C,mass,flux_left,flux_right,newton_iters,residual,F_reg";

pub fn series_csv(traj: &Trajectory64) -> String {
    let mut out = String::from(SERIES_COLUMNS);
    out.push('\n');
    for e in &traj.ledger.entries {
        out.push_str(&csv_row(&[
            e.t,
            e.free_energy,
            e.d_grad,
            e.d_visc,
            e.d_beta,
            e.source,
            e.correction,
            e.mass,
            e.flux_left,
            e.flux_right,
            e.newton_iters as f64,
            e.residual,
            e.free_energy_reg,
        ]));
    }
    out
}

/// Whether every number that [`trajectory_csv`] and [`series_csv`] would
/// print is finite.
pub fn trajectory_is_finite(traj: &Trajectory64) -> bool {
    let fields_ok = traj
        .states
        .iter()
        .all(|s| s.u.all_finite() && s.mu.all_finite() && s.w.all_finite() && s.xi.all_finite());
    let ledger_ok = traj.ledger.entries.iter().all(|e| {
        [
            e.free_energy,
            e.free_energy_reg,
            e.d_grad,
            e.d_visc,
            e.d_beta,
            e.source,
            e.correction,
            e.mass,
            e.flux_left,
            e.flux_right,
            e.residual,
        ]
        .iter()
        .all(|v| v.is_finite())
    });
    fields_ok && ledger_ok
}
