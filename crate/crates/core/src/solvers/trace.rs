use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::oracle::CleanObjective;

/// One traced iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iter: usize,
    /// Cumulative two-point oracle calls after `iter` iterations.
    pub oracle_calls: u64,
    /// Clean objective at the solver output, when a probe is attached.
    pub value: Option<f64>,
    /// `value − f*`, when `f*` is known.
    pub gap: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTrace {
    pub records: Vec<TraceRecord>,
}

impl ConvergenceTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Metrics-only access to the clean objective.
#[derive(Clone, Copy)]
pub struct Metrics<'a> {
    pub objective: &'a dyn CleanObjective,
    pub f_star: Option<f64>,
}

impl<'a> Metrics<'a> {
    pub fn new(objective: &'a dyn CleanObjective) -> Self {
        Self {
            objective,
            f_star: None,
        }
    }

    pub fn with_optimum(objective: &'a dyn CleanObjective, f_star: f64) -> Self {
        Self {
            objective,
            f_star: Some(f_star),
        }
    }

    pub(crate) fn measure(&self, x: &[f64]) -> (f64, Option<f64>) {
        let value = self.objective.clean_value(x);
        (value, self.f_star.map(|f| value - f))
    }
}

/// Recording and stopping options of a solver run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    /// Record every j-th iteration; `0` picks `max(1, N / 2000)`.
    pub record_every: usize,
    /// Stop as soon as the clean gap reaches this level (needs `f*`).
    pub stop_gap: Option<f64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            record_every: 1,
            stop_gap: None,
        }
    }
}

/// Default trace decimation for an `n_iters`-iteration run.
pub fn default_record_every(n_iters: usize) -> usize {
    (n_iters / 2000).max(1)
}

impl RunOptions {
    pub(crate) fn resolved_every(&self, n_iters: usize) -> usize {
        if self.record_every == 0 {
            default_record_every(n_iters)
        } else {
            self.record_every
        }
    }

    pub(crate) fn validate(&self, metrics: Option<&Metrics<'_>>) -> Result<()> {
        if let Some(gap) = self.stop_gap {
            if !metrics.is_some_and(|m| m.f_star.is_some()) {
                return Err(invalid(
                    "stop_gap",
                    "early stopping needs a metrics probe with a known optimum",
                ));
            }
            if !(gap >= 0.0) {
                return Err(invalid(
                    "stop_gap",
                    format!("must be non-negative, got {gap}"),
                ));
            }
        }
        Ok(())
    }
}

pub(crate) struct Recorder<'a> {
    metrics: Option<Metrics<'a>>,
    start: Instant,
    trace: ConvergenceTrace,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(metrics: Option<Metrics<'a>>) -> Self {
        Self {
            metrics,
            start: Instant::now(),
            trace: ConvergenceTrace::default(),
        }
    }

    pub(crate) fn measure(&self, x: &[f64]) -> (Option<f64>, Option<f64>) {
        match &self.metrics {
            Some(m) => {
                let (value, gap) = m.measure(x);
                (Some(value), gap)
            }
            None => (None, None),
        }
    }

    pub(crate) fn push(
        &mut self,
        iter: usize,
        oracle_calls: u64,
        value: Option<f64>,
        gap: Option<f64>,
    ) {
        self.trace.records.push(TraceRecord {
            iter,
            oracle_calls,
            value,
            gap,
            elapsed_s: self.start.elapsed().as_secs_f64(),
        });
    }

    pub(crate) fn finish(self) -> ConvergenceTrace {
        self.trace
    }
}
