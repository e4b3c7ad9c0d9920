//! Convergence traces: best-so-far value against cumulative oracle calls.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "evals,iter,best_f,wall_ms";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    /// Cumulative oracle calls (value plus gradient queries).
    pub evals: u64,
    /// Algorithm-specific iteration index (inner iterations for Solar).
    pub iter: u64,
    pub best_f: f64,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
}

impl Trace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn final_best(&self) -> Option<f64> {
        self.last().map(|r| r.best_f)
    }

    /// Appends a record. A record at the same eval count as the previous one
    /// replaces it, keeping `evals` strictly increasing.
    pub fn push(&mut self, rec: TraceRecord) {
        match self.records.last_mut() {
            Some(last) if last.evals == rec.evals => *last = rec,
            Some(last) => {
                debug_assert!(rec.evals > last.evals, "trace evals went backwards");
                self.records.push(rec);
            }
            None => self.records.push(rec),
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.records.windows(2).all(|w| {
            w[1].evals > w[0].evals && w[1].best_f <= w[0].best_f
        })
    }

    /// Keeps the last record in each `(k-1)*stride, k*stride]` bucket plus
    /// the first record, which preserves piecewise-constant resampling on
    /// multiples of `stride`.
    pub fn thinned(&self, stride: u64) -> Trace {
        if stride <= 1 || self.records.len() <= 2 {
            return self.clone();
        }
        let bucket = |e: u64| e.div_ceil(stride);
        let mut out = Vec::new();
        for (i, r) in self.records.iter().enumerate() {
            let keep = i == 0
                || i + 1 == self.records.len()
                || bucket(self.records[i + 1].evals) != bucket(r.evals);
            if keep {
                out.push(*r);
            }
        }
        Trace { records: out }
    }

    /// Best-so-far value at `evals`, carrying the first record backwards and
    /// the last one forwards.
    pub fn value_at(&self, evals: u64) -> Option<f64> {
        let first = self.records.first()?;
        let idx = self.records.partition_point(|r| r.evals <= evals);
        Some(if idx == 0 {
            first.best_f
        } else {
            self.records[idx - 1].best_f
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(32 * (self.records.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            let _ = writeln!(s, "{},{},{},{}", r.evals, r.iter, r.best_f, r.wall_ms);
        }
        s
    }

    /// The CSV without the wall-clock column; equal for repeated seeded runs.
    pub fn payload_csv(&self) -> String {
        let mut s = String::from("evals,iter,best_f\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{},{}", r.evals, r.iter, r.best_f);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == CSV_HEADER => {}
            other => {
                return Err(Error::MalformedTrace(format!(
                    "expected header `{CSV_HEADER}`, found {other:?}"
                )))
            }
        }
        let mut records = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::MalformedTrace(format!("line {}: {what}", lineno + 2));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            records.push(TraceRecord {
                evals: fields[0].trim().parse().map_err(|_| bad("evals"))?,
                iter: fields[1].trim().parse().map_err(|_| bad("iter"))?,
                best_f: fields[2].trim().parse().map_err(|_| bad("best_f"))?,
                wall_ms: fields[3].trim().parse().map_err(|_| bad("wall_ms"))?,
            });
        }
        Ok(Trace { records })
    }
}

/// Wall-clock helper used by the optimisers when recording traces.
#[derive(Clone, Copy, Debug)]
pub struct Stopwatch(Instant);

impl Stopwatch {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    pub fn ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

impl Default for Stopwatch {
    fn default() -> Self {
        Self::start()
    }
}
