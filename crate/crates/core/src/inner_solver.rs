//! Fixed-budget Nelder-Mead for the low-dimensional restricted problems.
//!
//! Vertices are scored with [`ExtendedValue`], so points outside the box rank
//! worst and the simplex can retreat into the feasible slice without any
//! projection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{BoxSet, ExtendedValue, Objective};
use crate::subspace::RayMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NMConfig {
    /// Number of reflect/expand/contract/shrink cycles.
    pub max_iterations: usize,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Edge length of the initial simplex; `None` means `0.05 * mean box width`.
    pub initial_step: Option<f64>,
}

impl Default for NMConfig {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            initial_step: None,
        }
    }
}

impl NMConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.max_iterations >= 1
            && self.reflection > 0.0
            && self.expansion > self.reflection
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.initial_step.is_none_or(|h| h > 0.0 && h.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("bad Nelder-Mead settings: {self:?}")))
        }
    }

    pub fn step_for(&self, bx: &BoxSet) -> f64 {
        self.initial_step.unwrap_or(0.05 * bx.mean_width())
    }

    /// Upper bound on oracle calls for one solve in dimension `dim`.
    pub fn max_evaluations(&self, dim: usize) -> u64 {
        (1 + dim + self.max_iterations * (dim + 2)) as u64
    }
}

/// Axis-aligned simplex `{t0} ∪ {t0 + h e_j}`, with `t0` first.
pub fn initial_simplex(t0: &[f64], h: f64) -> Vec<Vec<f64>> {
    let mut vertices = Vec::with_capacity(t0.len() + 1);
    vertices.push(t0.to_vec());
    for j in 0..t0.len() {
        let mut v = t0.to_vec();
        v[j] += h;
        vertices.push(v);
    }
    vertices
}

#[derive(Clone, Debug)]
pub struct NMOutcome {
    pub t_best: Vec<f64>,
    pub f_best: f64,
    /// Calls made to the scoring function, feasible or not.
    pub queries: usize,
}

/// Minimises an extended-valued function starting from the simplex around `t0`.
///
/// `t0` must score finite; the returned vertex is never worse than it.
pub fn nelder_mead<F>(mut score: F, t0: &[f64], cfg: &NMConfig, step: f64) -> Result<NMOutcome>
where
    F: FnMut(&[f64]) -> Result<ExtendedValue>,
{
    cfg.validate()?;
    if !(step > 0.0) {
        return Err(Error::InvalidConfig(format!("simplex step must be positive, got {step}")));
    }
    let dim = t0.len();
    let mut queries = 0usize;
    let mut eval = |t: &[f64], queries: &mut usize| {
        *queries += 1;
        score(t)
    };

    let f0 = eval(t0, &mut queries)?;
    if !f0.is_finite() {
        return Err(Error::InfeasibleStart);
    }
    let mut simplex: Vec<(Vec<f64>, ExtendedValue)> = Vec::with_capacity(dim + 1);
    let mut vertices = initial_simplex(t0, step).into_iter();
    simplex.push((vertices.next().expect("t0 vertex"), f0));
    for v in vertices {
        let f = eval(&v, &mut queries)?;
        simplex.push((v, f));
    }

    let lerp = |from: &[f64], to: &[f64], coef: f64| -> Vec<f64> {
        from.iter().zip(to).map(|(a, b)| a + coef * (b - a)).collect()
    };

    for _ in 0..cfg.max_iterations {
        // stable: earlier vertices win ties, so t0 keeps its rank until beaten
        simplex.sort_by(|a, b| a.1.cmp(&b.1));
        let worst = dim;
        let mut centroid = vec![0.0; dim];
        for (v, _) in &simplex[..worst] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= dim as f64);

        let f_best = simplex[0].1;
        let f_second = simplex[worst - 1].1;
        let f_worst = simplex[worst].1;
        let w = simplex[worst].0.clone();

        let xr = lerp(&centroid, &w, -cfg.reflection);
        let fr = eval(&xr, &mut queries)?;

        if fr < f_best {
            let xe = lerp(&centroid, &w, -cfg.reflection * cfg.expansion);
            let fe = eval(&xe, &mut queries)?;
            simplex[worst] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < f_second {
            simplex[worst] = (xr, fr);
            continue;
        }
        let contracted = if fr < f_worst {
            let xc = lerp(&centroid, &xr, cfg.contraction);
            let fc = eval(&xc, &mut queries)?;
            (fc <= fr).then_some((xc, fc))
        } else {
            let xc = lerp(&centroid, &w, cfg.contraction);
            let fc = eval(&xc, &mut queries)?;
            (fc < f_worst).then_some((xc, fc))
        };
        match contracted {
            Some(v) => simplex[worst] = v,
            None => {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x = lerp(&best, &vertex.0, cfg.shrink);
                    let f = eval(&x, &mut queries)?;
                    *vertex = (x, f);
                }
            }
        }
    }

    let (t_best, f_best) = simplex
        .into_iter()
        .min_by(|a, b| a.1.cmp(&b.1))
        .expect("non-empty simplex");
    Ok(NMOutcome {
        t_best,
        f_best: f_best.to_f64(),
        queries,
    })
}

/// `min_t f(r(t)) + chi(r(t))` over a ray.
pub struct RestrictedProblem<'a> {
    pub ray: &'a RayMap,
    pub obj: &'a mut Objective,
    pub bx: &'a BoxSet,
}

impl RestrictedProblem<'_> {
    pub fn value(&mut self, t: &[f64]) -> Result<ExtendedValue> {
        let x = self.ray.ray_eval(t)?;
        self.obj.penalised(self.bx, &x)
    }

    /// Nelder-Mead from `t0`; returns the best parameter and its value.
    pub fn solve(&mut self, t0: &[f64], cfg: &NMConfig) -> Result<(Vec<f64>, f64)> {
        let step = cfg.step_for(self.bx);
        let n = self.ray.anchor().len();
        let mut x = vec![0.0; n];
        let (ray, obj, bx) = (self.ray, &mut *self.obj, self.bx);
        let out = nelder_mead(
            |t| {
                ray.ray_eval_into(t, &mut x)?;
                obj.penalised(bx, &x)
            },
            t0,
            cfg,
            step,
        )?;
        Ok((out.t_best, out.f_best))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite(v: f64) -> Result<ExtendedValue> {
        Ok(ExtendedValue::Finite(v))
    }

    #[test]
    fn simplex_shapes() {
        assert_eq!(
            initial_simplex(&[0.0, 0.0], 1.0),
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]
        );
        assert_eq!(initial_simplex(&[2.0], 0.5), vec![vec![2.0], vec![2.5]]);
    }

    #[test]
    fn one_dimensional_parabola() {
        let cfg = NMConfig::default();
        let out = nelder_mead(|t| finite((t[0] - 3.0).powi(2)), &[0.0], &cfg, 1.0).unwrap();
        assert!((out.t_best[0] - 3.0).abs() < 0.1, "{:?}", out.t_best);
        assert!(out.queries as u64 <= cfg.max_evaluations(1));
    }

    #[test]
    fn constant_function_keeps_start() {
        let cfg = NMConfig::default();
        let out = nelder_mead(|_| finite(4.0), &[1.0, 1.0], &cfg, 0.5).unwrap();
        assert_eq!(out.f_best, 4.0);
        assert_eq!(out.t_best, vec![1.0, 1.0]);
    }

    #[test]
    fn infeasible_start_is_an_error() {
        let cfg = NMConfig::default();
        let r = nelder_mead(|_| Ok(ExtendedValue::Infinite), &[0.0], &cfg, 1.0);
        assert!(matches!(r, Err(Error::InfeasibleStart)));
    }

    #[test]
    fn retreats_from_infeasible_region() {
        // feasible only for t <= 0.1; minimum of (t - 0.05)^2 lies inside
        let cfg = NMConfig::default();
        let out = nelder_mead(
            |t| {
                Ok(if t[0] > 0.1 {
                    ExtendedValue::Infinite
                } else {
                    ExtendedValue::Finite((t[0] - 0.05).powi(2))
                })
            },
            &[-1.0],
            &cfg,
            1.0,
        )
        .unwrap();
        assert!(out.f_best < 1.0);
        assert!(out.t_best[0] <= 0.1);
    }

    #[test]
    fn budget_bound_holds_under_shrinks() {
        let cfg = NMConfig::default();
        let out = nelder_mead(
            |t| {
                Ok(if t.iter().any(|v| *v > 0.0) {
                    ExtendedValue::Infinite
                } else {
                    ExtendedValue::Finite(0.0)
                })
            },
            &[0.0; 4],
            &cfg,
            1.0,
        )
        .unwrap();
        assert!(out.queries as u64 <= cfg.max_evaluations(4));
    }

    #[test]
    fn config_validation() {
        assert!(NMConfig::default().validate().is_ok());
        let bad = NMConfig {
            contraction: 1.5,
            ..NMConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = NMConfig {
            initial_step: Some(0.0),
            ..NMConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
