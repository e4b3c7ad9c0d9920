//! Objective functions, the feasible box and oracle accounting.
//!
//! Every optimiser in this crate talks to the problem through an [`Objective`],
//! which counts value and gradient queries. The box constraint is handled as
//! an extended-valued indicator: infeasible points score `+inf` and the
//! underlying function is never called for them.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A deterministic function `R^n -> R`, optionally with an analytic gradient.
pub trait Function: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn has_gradient(&self) -> bool {
        false
    }

    /// Analytic gradient, `None` when the function is zeroth-order only.
    fn gradient(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

/// Adapter turning a closure into a zeroth-order [`Function`].
pub struct FnFunction<F> {
    dim: usize,
    f: F,
}

impl<F> FnFunction<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> Function for FnFunction<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// Closed axis-aligned box `lower <= x <= upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidBox("dimension must be at least 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch {
                expected: lower.len(),
                found: upper.len(),
            });
        }
        for (i, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidBox(format!(
                    "coordinate {i}: need finite lower < upper, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^n`.
    pub fn uniform(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; n], vec![hi; n])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn mean_width(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| hi - lo)
            .sum::<f64>()
            / self.dim() as f64
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| 0.5 * (lo + hi))
            .collect()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Membership test; NaN coordinates are never feasible.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    /// Convex indicator: `0` on the box, `+inf` outside.
    pub fn indicator(&self, x: &[f64]) -> Result<ExtendedValue> {
        self.check_dim(x)?;
        Ok(if self.contains(x) {
            ExtendedValue::Finite(0.0)
        } else {
            ExtendedValue::Infinite
        })
    }

    /// Componentwise clamp onto the box.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        Ok(out)
    }

    pub(crate) fn project_in_place(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lower.iter().zip(&self.upper)) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// A real number or `+inf`, totally ordered with `+inf` above every finite value.
#[derive(Clone, Copy, Debug)]
pub enum ExtendedValue {
    Finite(f64),
    Infinite,
}

impl ExtendedValue {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtendedValue::Finite(_))
    }

    /// The value as an `f64`, with `+inf` mapped to `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtendedValue::Finite(v) => v,
            ExtendedValue::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtendedValue::Finite(v) => Some(v),
            ExtendedValue::Infinite => None,
        }
    }
}

impl PartialEq for ExtendedValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ExtendedValue {}

impl PartialOrd for ExtendedValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ExtendedValue {
    fn cmp(&self, other: &Self) -> Ordering {
        use ExtendedValue::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.total_cmp(b),
            (Finite(_), Infinite) => Ordering::Less,
            (Infinite, Finite(_)) => Ordering::Greater,
            (Infinite, Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for ExtendedValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedValue::Finite(v) => write!(f, "{v}"),
            ExtendedValue::Infinite => f.write_str("+inf"),
        }
    }
}

/// Counting wrapper around a [`Function`].
///
/// One instance belongs to one run; the counters are plain integers.
#[derive(Clone)]
pub struct Objective {
    func: Arc<dyn Function>,
    evals: u64,
    grads: u64,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("dim", &self.func.dim())
            .field("evals", &self.evals)
            .field("grads", &self.grads)
            .finish()
    }
}

impl Objective {
    pub fn new(func: Arc<dyn Function>) -> Self {
        Self {
            func,
            evals: 0,
            grads: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.func.dim()
    }

    pub fn has_gradient(&self) -> bool {
        self.func.has_gradient()
    }

    pub fn eval_count(&self) -> u64 {
        self.evals
    }

    pub fn grad_count(&self) -> u64 {
        self.grads
    }

    /// Value and gradient queries together; this is the x-axis of every trace.
    pub fn oracle_calls(&self) -> u64 {
        self.evals + self.grads
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.evals += 1;
        let v = self.func.value(x);
        if v.is_nan() {
            return Err(Error::NonFiniteValue);
        }
        Ok(v)
    }

    pub fn gradient(&mut self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        if !self.func.has_gradient() {
            return Err(Error::GradientUnavailable);
        }
        self.grads += 1;
        self.func.gradient(x).ok_or(Error::GradientUnavailable)
    }

    /// `f(x) + chi(x)`; `f` is not queried when `x` is outside the box.
    pub fn penalised(&mut self, bx: &BoxSet, x: &[f64]) -> Result<ExtendedValue> {
        self.check_dim(x)?;
        if !bx.contains(x) {
            return Ok(ExtendedValue::Infinite);
        }
        self.evaluate(x).map(ExtendedValue::Finite)
    }
}
