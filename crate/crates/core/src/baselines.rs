//! Comparison algorithms sharing the [`Objective`]/[`BoxSet`]/[`Trace`] contracts.
//!
//! Iterate-based methods keep feasibility by projecting onto the box, so no
//! baseline ever queries `f` outside it. Each one stops before an iteration
//! whose worst-case oracle cost would overshoot `max_evals`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner_solver::{nelder_mead, NMConfig};
use crate::oracle::{BoxSet, Objective};
use crate::trace::{Stopwatch, Trace, TraceRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineParams {
    /// Step size `h`; `None` means `1e-2 * mean box width`.
    pub step: Option<f64>,
    /// Smoothing radius `mu` of the two-point estimator.
    pub smoothing: f64,
    /// Momentum coefficient of the three-point method.
    pub momentum: f64,
    pub armijo_c1: f64,
    pub max_backtracks: usize,
    pub backtrack_shrink: f64,
    pub golden_iterations: usize,
    /// Initial temperature; `None` means `|f(x0)|` (or 1 when that is zero).
    pub temperature: Option<f64>,
    /// Geometric cooling ratio, in (0, 1).
    pub cooling: f64,
    /// Jump length; `None` means `0.1 * mean box width`.
    pub jump: Option<f64>,
    /// Local solver used between basin hops.
    pub local_nm: NMConfig,
    pub max_evals: u64,
    pub max_iterations: Option<u64>,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            step: None,
            smoothing: 1e-5,
            momentum: 0.5,
            armijo_c1: 1e-4,
            max_backtracks: 30,
            backtrack_shrink: 0.5,
            golden_iterations: 20,
            temperature: None,
            cooling: 0.995,
            jump: None,
            local_nm: NMConfig {
                max_iterations: 100,
                ..NMConfig::default()
            },
            max_evals: 10_000,
            max_iterations: None,
        }
    }
}

impl BaselineParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.step.is_none_or(|h| h >= 0.0)
            && self.smoothing > 0.0
            && self.momentum >= 0.0
            && self.armijo_c1 > 0.0
            && self.armijo_c1 < 1.0
            && self.backtrack_shrink > 0.0
            && self.backtrack_shrink < 1.0
            && self.temperature.is_none_or(|t| t > 0.0)
            && self.cooling > 0.0
            && self.cooling < 1.0
            && self.jump.is_none_or(|s| s >= 0.0);
        if !ok {
            return Err(Error::InvalidConfig(format!("bad baseline parameters: {self:?}")));
        }
        self.local_nm.validate()
    }

    pub fn step_for(&self, bx: &BoxSet) -> f64 {
        self.step.unwrap_or(1e-2 * bx.mean_width())
    }

    pub fn jump_for(&self, bx: &BoxSet) -> f64 {
        self.jump.unwrap_or(0.1 * bx.mean_width())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CgFormula {
    FletcherReeves,
    PolakRibierePolyak,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CgOptions {
    pub formula: CgFormula,
    pub restarts: bool,
    /// Step from a parabola through `f(x)`, `f'(x; d)` and `f(x + d)`;
    /// exact on quadratics.
    #[serde(default)]
    pub exact_line_search: bool,
}

#[derive(Clone, Debug)]
pub struct BaselineResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub trace: Trace,
    pub iterations: u64,
    /// Accepted moves (SA proposals, MSBH hops); zero for other methods.
    pub accepted: u64,
}

/// Best-so-far bookkeeping shared by all baselines.
struct Recorder {
    trace: Trace,
    clock: Stopwatch,
    best_x: Vec<f64>,
    best_f: f64,
    iterations: u64,
    accepted: u64,
    budget: u64,
    max_iterations: Option<u64>,
}

impl Recorder {
    fn start(obj: &mut Objective, bx: &BoxSet, x0: &[f64], params: &BaselineParams) -> Result<(Self, f64)> {
        params.validate()?;
        if params.max_evals == 0 {
            return Err(Error::ZeroBudget);
        }
        if x0.len() != obj.dim() || bx.dim() != obj.dim() {
            return Err(Error::DimensionMismatch {
                expected: obj.dim(),
                found: x0.len(),
            });
        }
        if !bx.contains(x0) {
            return Err(Error::InfeasibleStart);
        }
        let clock = Stopwatch::start();
        let f0 = obj.evaluate(x0)?;
        let mut rec = Self {
            trace: Trace::new(),
            clock,
            best_x: x0.to_vec(),
            best_f: f0,
            iterations: 0,
            accepted: 0,
            budget: params.max_evals,
            max_iterations: params.max_iterations,
        };
        rec.record(obj);
        Ok((rec, f0))
    }

    fn fits(&self, obj: &Objective, cost: u64) -> bool {
        obj.oracle_calls() + cost <= self.budget
            && self.max_iterations.is_none_or(|m| self.iterations < m)
    }

    fn offer(&mut self, x: &[f64], f: f64) {
        if f < self.best_f {
            self.best_f = f;
            self.best_x.clear();
            self.best_x.extend_from_slice(x);
        }
    }

    fn record(&mut self, obj: &Objective) {
        self.trace.push(TraceRecord {
            evals: obj.oracle_calls(),
            iter: self.iterations,
            best_f: self.best_f,
            wall_ms: self.clock.ms(),
        });
    }

    fn end_iteration(&mut self, obj: &Objective) {
        self.iterations += 1;
        self.record(obj);
    }

    fn finish(self) -> BaselineResult {
        BaselineResult {
            x_best: self.best_x,
            f_best: self.best_f,
            trace: self.trace,
            iterations: self.iterations,
            accepted: self.accepted,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(x: &[f64], alpha: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(a, b)| a + alpha * b).collect()
}

/// Uniform direction on the unit sphere.
pub fn random_unit<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-300 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Two-point sphere-smoothing estimate `n (f(x + mu u) - f(x - mu u)) / (2 mu) u`.
///
/// Probe points are projected onto the box; the difference quotient then uses
/// the projected separation along `u`.
pub fn two_point_estimate(
    obj: &mut Objective,
    bx: &BoxSet,
    x: &[f64],
    mu: f64,
    u: &[f64],
) -> Result<Vec<f64>> {
    let n = x.len() as f64;
    let xp = bx.project(&axpy(x, mu, u))?;
    let xm = bx.project(&axpy(x, -mu, u))?;
    let fp = obj.evaluate(&xp)?;
    let fm = obj.evaluate(&xm)?;
    let sep: f64 = u
        .iter()
        .zip(xp.iter().zip(&xm))
        .map(|(ui, (p, m))| ui * (p - m))
        .sum();
    let unprojected = xp.iter().zip(&xm).zip(x).zip(u).all(|(((p, m), xi), ui)| {
        *p == xi + mu * ui && *m == xi - mu * ui
    });
    let denom = if unprojected { 2.0 * mu } else { sep };
    let scale = if denom > 0.0 { n * (fp - fm) / denom } else { 0.0 };
    Ok(u.iter().map(|ui| scale * ui).collect())
}

/// Zeroth-order gradient descent with two-point feedback and projection.
pub fn zo_gd<R: Rng + ?Sized>(
    obj: &mut Objective,
    bx: &BoxSet,
    x0: &[f64],
    params: &BaselineParams,
    rng: &mut R,
) -> Result<BaselineResult> {
    let (mut rec, _) = Recorder::start(obj, bx, x0, params)?;
    let h = params.step_for(bx);
    let mut x = x0.to_vec();
    while rec.fits(obj, 3) {
        let u = random_unit(x.len(), rng);
        let g = two_point_estimate(obj, bx, &x, params.smoothing, &u)?;
        x = bx.project(&axpy(&x, -h, &g))?;
        let fx = obj.evaluate(&x)?;
        rec.offer(&x, fx);
        rec.end_iteration(obj);
    }
    Ok(rec.finish())
}

/// Golden-section search of `phi` on `[lo, hi]`; returns the best sampled
/// `(t, phi(t))`. Costs `2 + iterations` evaluations.
pub fn golden_section<F>(mut phi: F, lo: f64, hi: f64, iterations: usize) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = phi(c)?;
    let mut fd = phi(d)?;
    for _ in 0..iterations {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = phi(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = phi(d)?;
        }
    }
    Ok(if fc <= fd { (c, fc) } else { (d, fd) })
}

/// Largest `t >= 0` with `x - t g` inside the box.
fn max_feasible_step(bx: &BoxSet, x: &[f64], g: &[f64]) -> f64 {
    let mut t = f64::INFINITY;
    for i in 0..x.len() {
        let gi = g[i];
        if gi > 0.0 {
            t = t.min((x[i] - bx.lower()[i]) / gi);
        } else if gi < 0.0 {
            t = t.min((bx.upper()[i] - x[i]) / -gi);
        }
    }
    t.max(0.0)
}

/// Two-point descent with a golden-section search along the feasible segment.
pub fn zo_gd_linesearch<R: Rng + ?Sized>(
    obj: &mut Objective,
    bx: &BoxSet,
    x0: &[f64],
    params: &BaselineParams,
    rng: &mut R,
) -> Result<BaselineResult> {
    let (mut rec, f0) = Recorder::start(obj, bx, x0, params)?;
    let mut x = x0.to_vec();
    let mut fx = f0;
    let cost = 4 + params.golden_iterations as u64;
    while rec.fits(obj, cost) {
        let u = random_unit(x.len(), rng);
        let g = two_point_estimate(obj, bx, &x, params.smoothing, &u)?;
        let t_max = max_feasible_step(bx, &x, &g);
        if t_max > 0.0 && t_max.is_finite() {
            let (t, ft) = golden_section(
                |t| obj.evaluate(&bx.project(&axpy(&x, -t, &g))?),
                0.0,
                t_max,
                params.golden_iterations,
            )?;
            if ft < fx {
                x = bx.project(&axpy(&x, -t, &g))?;
                fx = ft;
                rec.offer(&x, fx);
            }
        }
        rec.end_iteration(obj);
    }
    Ok(rec.finish())
}

/// Deterministic momentum three-point method: move to the best of the
/// incumbent and two momentum-shifted probes along a random direction.
pub fn momentum_three_point<R: Rng + ?Sized>(
    obj: &mut Objective,
    bx: &BoxSet,
    x0: &[f64],
    params: &BaselineParams,
    rng: &mut R,
) -> Result<BaselineResult> {
    let (mut rec, f0) = Recorder::start(obj, bx, x0, params)?;
    let h = params.step_for(bx);
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut v = vec![0.0; x.len()];
    while rec.fits(obj, 2) {
        let u = random_unit(x.len(), rng);
        let y = axpy(&x, params.momentum, &v);
        let plus = bx.project(&axpy(&y, h, &u))?;
        let minus = bx.project(&axpy(&y, -h, &u))?;
        let fp = obj.evaluate(&plus)?;
        let fm = obj.evaluate(&minus)?;
        let (next, fnext) = if fp < fx && fp <= fm {
            (plus, fp)
        } else if fm < fx {
            (minus, fm)
        } else {
            (x.clone(), fx)
        };
        v = next.iter().zip(&x).map(|(a, b)| a - b).collect();
        x = next;
        fx = fnext;
        rec.offer(&x, fx);
        rec.end_iteration(obj);
    }
    Ok(rec.finish())
}

/// Conjugate-gradient coefficient; PRP is clamped at zero.
pub fn cg_beta(formula: CgFormula, g_new: &[f64], g_old: &[f64]) -> f64 {
    let denom = dot(g_old, g_old);
    if denom == 0.0 {
        return 0.0;
    }
    match formula {
        CgFormula::FletcherReeves => dot(g_new, g_new) / denom,
        CgFormula::PolakRibierePolyak => {
            let num: f64 = g_new
                .iter()
                .zip(g_old)
                .map(|(a, b)| a * (a - b))
                .sum();
            (num / denom).max(0.0)
        }
    }
}

/// Nonlinear conjugate gradients (Fletcher-Reeves or Polak-Ribière-Polyak)
/// with projected Armijo backtracking and optional Powell restarts.
pub fn cg<R: Rng + ?Sized>(
    obj: &mut Objective,
    bx: &BoxSet,
    x0: &[f64],
    params: &BaselineParams,
    opts: &CgOptions,
    _rng: &mut R,
) -> Result<BaselineResult> {
    if !obj.has_gradient() {
        return Err(Error::GradientUnavailable);
    }
    let (mut rec, f0) = Recorder::start(obj, bx, x0, params)?;
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f0;
    if !rec.fits(obj, 1) {
        return Ok(rec.finish());
    }
    let mut g = obj.gradient(&x)?;
    rec.record(obj);
    let mut d: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut steepest = true;
    let mut prev_slope: Option<(f64, f64)> = None; // (alpha, g^T d) of the last step
    let mut since_restart = 0usize;
    let cost = params.max_backtracks as u64 + 2;

    while dot(&g, &g) > 0.0 && rec.fits(obj, cost) {
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
            steepest = true;
        }

        let mut alpha = match prev_slope {
            Some((a, s)) => a * s / slope,
            None => 1.0 / d.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        };
        if opts.exact_line_search {
            let f_unit = obj.evaluate(&bx.project(&axpy(&x, 1.0, &d))?)?;
            let curvature = f_unit - fx - slope;
            if curvature > 0.0 {
                alpha = -slope / (2.0 * curvature);
            }
        }

        let mut accepted = None;
        for _ in 0..params.max_backtracks {
            let trial = bx.project(&axpy(&x, alpha, &d))?;
            let moved: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            if moved.iter().any(|v| *v != 0.0) {
                let ft = obj.evaluate(&trial)?;
                if ft <= fx + params.armijo_c1 * dot(&g, &moved) {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            alpha *= params.backtrack_shrink;
        }

        let Some((x_new, f_new)) = accepted else {
            if steepest {
                // stalled along the anti-gradient
                rec.end_iteration(obj);
                break;
            }
            d = g.iter().map(|v| -v).collect();
            steepest = true;
            prev_slope = None;
            rec.end_iteration(obj);
            continue;
        };

        let g_new = obj.gradient(&x_new)?;
        x = x_new;
        fx = f_new;
        rec.offer(&x, fx);
        prev_slope = Some((alpha, slope));
        since_restart += 1;

        let restart = opts.restarts
            && (since_restart >= n || dot(&g_new, &g).abs() >= 0.2 * dot(&g_new, &g_new));
        if restart {
            d = g_new.iter().map(|v| -v).collect();
            steepest = true;
            since_restart = 0;
        } else {
            let beta = cg_beta(opts.formula, &g_new, &g);
            d = g_new
                .iter()
                .zip(&d)
                .map(|(gn, di)| -gn + beta * di)
                .collect();
            steepest = beta == 0.0;
        }
        g = g_new;
        rec.end_iteration(obj);
    }
    Ok(rec.finish())
}

/// Metropolis rule: always accept improvements, otherwise with
/// probability `exp(-delta / temperature)`.
pub fn metropolis_accept<R: Rng + ?Sized>(delta: f64, temperature: f64, rng: &mut R) -> bool {
    if delta <= 0.0 {
        return true;
    }
    if !(temperature > 0.0) {
        return false;
    }
    rng.random::<f64>() < (-delta / temperature).exp()
}

/// Simulated annealing with Gaussian proposals and geometric cooling.
pub fn simulated_annealing<R: Rng + ?Sized>(
    obj: &mut Objective,
    bx: &BoxSet,
    x0: &[f64],
    params: &BaselineParams,
    rng: &mut R,
) -> Result<BaselineResult> {
    let (mut rec, f0) = Recorder::start(obj, bx, x0, params)?;
    let sigma = params.jump_for(bx);
    let t0 = params
        .temperature
        .unwrap_or(if f0 != 0.0 { f0.abs() } else { 1.0 });
    let mut x = x0.to_vec();
    let mut fx = f0;
    let mut temp = t0;
    while rec.fits(obj, 1) {
        let mut proposal: Vec<f64> = x
            .iter()
            .map(|xi| xi + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        bx.project_in_place(&mut proposal);
        let fp = obj.evaluate(&proposal)?;
        if metropolis_accept(fp - fx, temp, rng) {
            x = proposal;
            fx = fp;
            rec.accepted += 1;
            rec.offer(&x, fx);
        }
        temp *= params.cooling;
        rec.end_iteration(obj);
    }
    Ok(rec.finish())
}

/// Uniform sample from the ball of radius `radius`.
fn uniform_in_ball<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    let dir = random_unit(n, rng);
    let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
    dir.into_iter().map(|v| v * r).collect()
}

/// Monotonic sequence basin hopping: perturb the incumbent, minimise locally
/// with Nelder-Mead, and accept only strict improvements.
pub fn msbh<R: Rng + ?Sized>(
    obj: &mut Objective,
    bx: &BoxSet,
    x0: &[f64],
    params: &BaselineParams,
    rng: &mut R,
) -> Result<BaselineResult> {
    let (mut rec, f0) = Recorder::start(obj, bx, x0, params)?;
    let n = x0.len();
    let sigma = params.jump_for(bx);
    let nm = &params.local_nm;
    let step = nm.step_for(bx);
    let cost = nm.max_evaluations(n);

    let local = |obj: &mut Objective, start: &[f64]| {
        nelder_mead(|x| obj.penalised(bx, x), start, nm, step)
    };

    let (mut x, mut fx) = (x0.to_vec(), f0);
    if rec.fits(obj, cost) {
        let out = local(obj, &x)?;
        if out.f_best < fx {
            x = out.t_best;
            fx = out.f_best;
            rec.offer(&x, fx);
        }
        rec.end_iteration(obj);
    }
    while rec.fits(obj, cost) {
        let mut start: Vec<f64> = x
            .iter()
            .zip(uniform_in_ball(n, sigma, rng))
            .map(|(a, b)| a + b)
            .collect();
        bx.project_in_place(&mut start);
        let out = local(obj, &start)?;
        if out.f_best < fx {
            x = out.t_best;
            fx = out.f_best;
            rec.accepted += 1;
            rec.offer(&x, fx);
        }
        rec.end_iteration(obj);
    }
    Ok(rec.finish())
}
