//! Per-iteration run records and their CSV form.

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certificates::{consensus_error, gradient_sum, lyapunov};
use crate::objectives::{ObjectiveError, ProblemInstance};

pub const CSV_HEADER: &str = "k,V,e,consensus_err,grad_sum_norm,dist_to_opt,wall_ms";

/// Iterate norm beyond which a run is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("trace CSV line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub k: usize,
    #[serde(rename = "V")]
    pub v: f64,
    pub e: f64,
    pub consensus_err: f64,
    pub grad_sum_norm: f64,
    pub dist_to_opt: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    /// Stopping thresholds met.
    Converged,
    /// Ran to `max_iters`.
    Completed,
    Diverged,
    Singular,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algo: String,
    pub records: Vec<TraceRecord>,
    /// Stacked iterate after each recorded iteration, when requested.
    #[serde(skip)]
    pub iterates: Option<Vec<Vec<DVector<f64>>>>,
    /// Vectors sent over links in total.
    pub messages: u64,
    pub status: RunStatus,
    pub detail: Option<String>,
    pub config_hash: Option<String>,
}

impl RunTrace {
    pub fn new(algo: &str) -> Self {
        Self {
            algo: algo.to_string(),
            records: Vec::new(),
            iterates: None,
            messages: 0,
            status: RunStatus::Completed,
            detail: None,
            config_hash: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn v_column(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.v).collect()
    }

    /// CSV with the standard header; `wall_ms` is zeroed when `with_wall_time` is false.
    pub fn to_csv(&self, with_wall_time: bool) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            push_row(&mut out, r, with_wall_time);
        }
        out
    }

    pub fn from_csv(algo: &str, text: &str) -> Result<Self, TraceError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == CSV_HEADER => {}
            Some((i, _)) => return Err(TraceError::Parse { line: i + 1, msg: "unexpected header".into() }),
            None => return Ok(Self::new(algo)),
        }
        let mut trace = Self::new(algo);
        for (i, line) in lines {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 7 {
                return Err(TraceError::Parse { line: i + 1, msg: format!("expected 7 columns, got {}", cols.len()) });
            }
            let f = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| TraceError::Parse { line: i + 1, msg: format!("{s:?}: {e}") })
            };
            let k = cols[0]
                .trim()
                .parse::<usize>()
                .map_err(|e| TraceError::Parse { line: i + 1, msg: format!("k: {e}") })?;
            trace.records.push(TraceRecord {
                k,
                v: f(cols[1])?,
                e: f(cols[2])?,
                consensus_err: f(cols[3])?,
                grad_sum_norm: f(cols[4])?,
                dist_to_opt: f(cols[5])?,
                wall_ms: f(cols[6])?,
            });
        }
        Ok(trace)
    }
}

fn push_row(out: &mut String, r: &TraceRecord, with_wall_time: bool) {
    use std::fmt::Write as _;
    let wall = if with_wall_time { r.wall_ms } else { 0.0 };
    writeln!(
        out,
        "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
        r.k, r.v, r.e, r.consensus_err, r.grad_sum_norm, r.dist_to_opt, wall
    )
    .expect("writing to a String cannot fail");
}

/// Hex SHA-256 of a canonical configuration string.
pub fn config_hash(canonical: &str) -> String {
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Computes the trace columns for successive iterates of one run.
pub struct Recorder<'a> {
    inst: &'a ProblemInstance,
    start: Instant,
    trace: RunTrace,
}

impl<'a> Recorder<'a> {
    pub fn new(inst: &'a ProblemInstance, algo: &str, keep_iterates: bool) -> Self {
        let mut trace = RunTrace::new(algo);
        if keep_iterates {
            trace.iterates = Some(Vec::new());
        }
        Self { inst, start: Instant::now(), trace }
    }

    /// Append the record for iterate `x` at index `k`.
    pub fn record(&mut self, k: usize, x: &[DVector<f64>]) -> Result<TraceRecord, ObjectiveError> {
        let v = lyapunov(x, self.inst)?;
        let consensus_err = consensus_error(x);
        let grad_sum_norm = gradient_sum(x, self.inst)?.norm();
        let opt = self.inst.optimum();
        let dist_to_opt = x.iter().map(|xi| (xi - opt).norm_squared()).sum::<f64>().sqrt();
        let rec = TraceRecord {
            k,
            v,
            e: grad_sum_norm + consensus_err,
            consensus_err,
            grad_sum_norm,
            dist_to_opt,
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        };
        self.trace.records.push(rec);
        if let Some(its) = &mut self.trace.iterates {
            its.push(x.to_vec());
        }
        Ok(rec)
    }

    pub fn add_messages(&mut self, count: u64) {
        self.trace.messages += count;
    }

    pub fn finish(mut self, status: RunStatus, detail: Option<String>) -> RunTrace {
        self.trace.status = status;
        self.trace.detail = detail;
        self.trace
    }
}

/// True when any entry is non-finite or the stacked norm exceeds [`DIVERGENCE_NORM`].
pub fn has_diverged(x: &[DVector<f64>]) -> bool {
    let mut sq = 0.0;
    for xi in x {
        if xi.iter().any(|v| !v.is_finite()) {
            return true;
        }
        sq += xi.norm_squared();
    }
    sq.sqrt() > DIVERGENCE_NORM
}
