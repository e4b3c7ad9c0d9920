//! The Solar driver: repeated minimisation over random affine subspaces
//! through the current best points.
//!
//! Each outer iteration fixes a random set of base coordinates; each inner
//! iteration pulls the `p` best points out of the store, draws a ray through
//! the best one, solves the restricted problem with a short Nelder-Mead run
//! and pushes the candidate plus the `p - 1` best probes back. Because the
//! ray passes through the anchor and Nelder-Mead never returns a vertex worse
//! than its start, the record value can only go down.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::best_store::BestStore;
use crate::error::{Error, Result};
use crate::inner_solver::{NMConfig, RestrictedProblem};
use crate::oracle::{BoxSet, Objective};
use crate::subspace::{
    beta_schedule, choose_base, dominant_direction, sample_cone, sample_vanilla, BaseIndexSet,
    BetaMode, ConeParams, RayMap, SamplingVariant, ANGLE_EPS,
};
use crate::trace::{Stopwatch, Trace, TraceRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolarConfig {
    /// `K`: number of base-index draws.
    pub outer_iterations: usize,
    /// `N`: total inner iterations; each outer iteration runs `N / K` of them.
    pub inner_iterations: usize,
    /// `b`: subspace dimension.
    pub base_dim: usize,
    /// `p`: number of best points pulled from the store per inner iteration.
    pub probes: usize,
    pub variant: SamplingVariant,
    /// Initial cone half-angle `a`, radians.
    pub cone_angle: f64,
    pub beta_mode: BetaMode,
    /// Growth factor of the angle multiplier in [`BetaMode::Growing`].
    pub beta_growth: f64,
    pub nm: NMConfig,
    /// Keep the better of the candidate and the dropped probe instead of
    /// always dropping the worst probe.
    pub elitist_reinsert: bool,
    /// Stop before an inner iteration that could exceed this many oracle calls.
    pub max_evals: Option<u64>,
}

impl Default for SolarConfig {
    fn default() -> Self {
        Self {
            outer_iterations: 100,
            inner_iterations: 1000,
            base_dim: 1,
            probes: 1,
            variant: SamplingVariant::Vanilla,
            cone_angle: 0.25,
            beta_mode: BetaMode::Constant,
            beta_growth: 1.0,
            nm: NMConfig::default(),
            elitist_reinsert: false,
            max_evals: None,
        }
    }
}

impl SolarConfig {
    pub fn validate(&self, n: usize) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.outer_iterations < 1 {
            return fail("outer_iterations must be at least 1".into());
        }
        if self.inner_iterations < self.outer_iterations {
            return fail(format!(
                "inner_iterations ({}) must be >= outer_iterations ({})",
                self.inner_iterations, self.outer_iterations
            ));
        }
        if self.base_dim < 1 || self.base_dim >= n {
            return Err(Error::InvalidBase {
                n,
                b: self.base_dim,
            });
        }
        if self.probes < 1 {
            return fail("probes must be at least 1".into());
        }
        if self.variant != SamplingVariant::Vanilla
            && !(self.cone_angle > 0.0 && self.cone_angle < FRAC_PI_2)
        {
            return fail(format!("cone_angle {} outside (0, pi/2)", self.cone_angle));
        }
        if !(self.beta_growth >= 0.0) {
            return fail("beta_growth must be non-negative".into());
        }
        self.nm.validate()
    }

    pub fn inner_per_outer(&self) -> usize {
        self.inner_iterations / self.outer_iterations
    }

    fn worst_case_cost(&self, uses_gradient: bool) -> u64 {
        self.nm.max_evaluations(self.base_dim) + u64::from(uses_gradient)
    }
}

#[derive(Clone, Debug)]
pub struct SolarResult {
    pub x_best: Vec<f64>,
    pub f_best: f64,
    pub trace: Trace,
    pub eval_count: u64,
    pub grad_count: u64,
    pub inner_iterations: u64,
}

/// The candidate produced by one inner iteration.
#[derive(Clone, Debug)]
pub struct Candidate {
    pub value: f64,
    pub point: Vec<f64>,
    /// Whether a cone was used (false when the variant fell back to vanilla).
    pub used_cone: bool,
}

/// Mutable state of one Solar run.
pub struct SolarState<'a> {
    obj: &'a mut Objective,
    bx: &'a BoxSet,
    cfg: &'a SolarConfig,
    store: BestStore,
    trace: Trace,
    clock: Stopwatch,
    iterations: u64,
}

impl<'a> SolarState<'a> {
    /// Evaluates `x0` and seeds the store with it.
    pub fn new(
        obj: &'a mut Objective,
        bx: &'a BoxSet,
        x0: &[f64],
        cfg: &'a SolarConfig,
    ) -> Result<Self> {
        let n = obj.dim();
        if x0.len() != n || bx.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if x0.len() != n { x0.len() } else { bx.dim() },
            });
        }
        cfg.validate(n)?;
        if cfg.variant == SamplingVariant::ConeGradient && !obj.has_gradient() {
            return Err(Error::GradientUnavailable);
        }
        let clock = Stopwatch::start();
        let f0 = obj
            .penalised(bx, x0)?
            .finite()
            .ok_or(Error::InfeasibleStart)?;
        let mut store = BestStore::new(cfg.probes)?;
        store.insert(f0, x0.to_vec())?;
        let mut trace = Trace::new();
        trace.push(TraceRecord {
            evals: obj.oracle_calls(),
            iter: 0,
            best_f: f0,
            wall_ms: clock.ms(),
        });
        Ok(Self {
            obj,
            bx,
            cfg,
            store,
            trace,
            clock,
            iterations: 0,
        })
    }

    pub fn store(&self) -> &BestStore {
        &self.store
    }

    pub fn trace(&self) -> &Trace {
        &self.trace
    }

    pub fn objective(&self) -> &Objective {
        self.obj
    }

    fn uses_gradient(&self) -> bool {
        match self.cfg.variant {
            SamplingVariant::Vanilla => false,
            SamplingVariant::ConeGradient => true,
            SamplingVariant::ConeSecant => self.obj.has_gradient(),
        }
    }

    /// Whether another inner iteration fits in the evaluation budget.
    pub fn within_budget(&self) -> bool {
        match self.cfg.max_evals {
            None => true,
            Some(limit) => {
                self.obj.oracle_calls() + self.cfg.worst_case_cost(self.uses_gradient()) <= limit
            }
        }
    }

    fn direction(&mut self, probes: &[(f64, Vec<f64>)]) -> Result<Option<Vec<f64>>> {
        let mut g = dominant_direction(self.cfg.variant, probes, self.obj)?;
        if g.is_none() && self.cfg.variant == SamplingVariant::ConeSecant && self.obj.has_gradient()
        {
            g = dominant_direction(SamplingVariant::ConeGradient, probes, self.obj)?;
        }
        Ok(g.filter(|g| g.iter().all(|v| v.is_finite()) && g.iter().any(|v| *v != 0.0)))
    }

    /// One inner iteration on base set `base` with angle multiplier `beta`.
    pub fn inner_iteration<R: Rng + ?Sized>(
        &mut self,
        base: &BaseIndexSet,
        beta: f64,
        rng: &mut R,
    ) -> Result<Candidate> {
        let n = self.obj.dim();
        let p = self.cfg.probes;
        let full = self.store.size() == p;
        let take = p.min(self.store.size());
        if take == 0 {
            return Err(Error::EmptyStore);
        }
        let mut probes = Vec::with_capacity(take);
        for _ in 0..take {
            probes.push(self.store.extract_min()?);
        }

        let direction = self.direction(&probes)?;
        let used_cone = direction.is_some();
        let slopes = match direction {
            Some(g) => {
                let cone = ConeParams {
                    half_angle: self.cfg.cone_angle,
                    beta,
                    eps: ANGLE_EPS,
                    direction: g,
                };
                sample_cone(n, base, &cone, rng)?
            }
            None => sample_vanilla(n, base, rng),
        };
        let ray = RayMap::new(probes[0].1.clone(), base.clone(), slopes)?;
        let t0 = ray.anchor_parameter().to_vec();
        let (t_best, f_cand) = RestrictedProblem {
            ray: &ray,
            obj: self.obj,
            bx: self.bx,
        }
        .solve(&t0, &self.cfg.nm)?;
        let x_cand = ray.ray_eval(&t_best)?;
        debug_assert!(self.bx.contains(&x_cand));

        reinsert(
            &mut self.store,
            (f_cand, x_cand.clone()),
            probes,
            full,
            self.cfg.elitist_reinsert,
        )?;

        self.iterations += 1;
        let best = self.store.peek_best()?.0;
        self.trace.push(TraceRecord {
            evals: self.obj.oracle_calls(),
            iter: self.iterations,
            best_f: best,
            wall_ms: self.clock.ms(),
        });
        Ok(Candidate {
            value: f_cand,
            point: x_cand,
            used_cone,
        })
    }

    pub fn finish(self) -> Result<SolarResult> {
        let (f_best, x_best) = self.store.peek_best()?;
        Ok(SolarResult {
            x_best: x_best.to_vec(),
            f_best,
            trace: self.trace,
            eval_count: self.obj.eval_count(),
            grad_count: self.obj.grad_count(),
            inner_iterations: self.iterations,
        })
    }
}

/// Pushes the candidate, then the probes `1..p-1`. When the store was full
/// before extraction the last probe is dropped, unless `elitist` is set, in
/// which case it competes with the candidate under the capacity rule.
pub(crate) fn reinsert(
    store: &mut BestStore,
    candidate: (f64, Vec<f64>),
    probes: Vec<(f64, Vec<f64>)>,
    was_full: bool,
    elitist: bool,
) -> Result<()> {
    let keep = if was_full { probes.len() - 1 } else { probes.len() };
    store.insert(candidate.0, candidate.1)?;
    let mut rest = probes.into_iter();
    for (f, x) in rest.by_ref().take(keep) {
        store.insert(f, x)?;
    }
    if elitist {
        for (f, x) in rest {
            store.insert(f, x)?;
        }
    }
    Ok(())
}

/// Runs the full method from the feasible start `x0`.
pub fn solar_run<R: Rng + ?Sized>(
    obj: &mut Objective,
    bx: &BoxSet,
    x0: &[f64],
    cfg: &SolarConfig,
    rng: &mut R,
) -> Result<SolarResult> {
    let mut state = SolarState::new(obj, bx, x0, cfg)?;
    let n = bx.dim();
    let per_outer = cfg.inner_per_outer();
    let total = cfg.outer_iterations * per_outer;
    'outer: for i in 0..cfg.outer_iterations {
        let base = choose_base(n, cfg.base_dim, rng)?;
        for j in 0..per_outer {
            if !state.within_budget() {
                break 'outer;
            }
            let beta = beta_schedule(cfg.beta_mode, cfg.beta_growth, i * per_outer + j, total);
            state.inner_iteration(&base, beta, rng)?;
        }
    }
    state.finish()
}
