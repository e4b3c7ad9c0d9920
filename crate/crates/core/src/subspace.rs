//! Random affine subspaces ("rays") through the incumbent.
//!
//! A ray is the affine inclusion `t -> x1 + A (t - x1[B])` from `R^b` into
//! `R^n`, where `B` is a set of `b` base coordinates and the rows of `A`
//! indexed by `B` form the identity. The subspace is therefore the graph of
//! a linear map from the base coordinates to the remaining ones, and its
//! slopes are what gets randomised.

use std::f64::consts::FRAC_PI_2;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::Objective;

/// Clip margin keeping cone angles strictly inside `(-pi/2, pi/2)`.
pub const ANGLE_EPS: f64 = 1e-12;

/// Sorted set of `b` distinct base coordinates out of `n` (0-based).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseIndexSet {
    indices: Vec<usize>,
    n: usize,
}

impl BaseIndexSet {
    pub fn new(n: usize, mut indices: Vec<usize>) -> Result<Self> {
        let b = indices.len();
        if b < 1 || b >= n {
            return Err(Error::InvalidBase { n, b });
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) || indices[b - 1] >= n {
            return Err(Error::InvalidConfig(format!(
                "base indices must be unique and below {n}"
            )));
        }
        Ok(Self { indices, n })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    /// `x[B]`.
    pub fn gather(&self, x: &[f64]) -> Vec<f64> {
        self.indices.iter().map(|&i| x[i]).collect()
    }
}

/// Uniformly random `b`-subset of `{0, .., n-1}`.
pub fn choose_base<R: Rng + ?Sized>(n: usize, b: usize, rng: &mut R) -> Result<BaseIndexSet> {
    if b < 1 || b >= n {
        return Err(Error::InvalidBase { n, b });
    }
    let picked = rand::seq::index::sample(rng, n, b).into_vec();
    BaseIndexSet::new(n, picked)
}

/// Dense row-major `n x b` slope matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SlopeMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SlopeMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn set_identity_rows(&mut self, base: &BaseIndexSet) {
        for (j, &i) in base.indices().iter().enumerate() {
            let row = &mut self.data[i * self.cols..(i + 1) * self.cols];
            row.fill(0.0);
            row[j] = 1.0;
        }
    }
}

/// Row-major draws of `c_ij ~ U(-1, 1)` for all `n x b` entries.
fn uniform_entries<R: Rng + ?Sized>(n: usize, b: usize, rng: &mut R) -> Vec<f64> {
    (0..n * b).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Fully random slopes: `a_ij = tan(pi/2 * c_ij)`.
pub fn sample_vanilla<R: Rng + ?Sized>(n: usize, base: &BaseIndexSet, rng: &mut R) -> SlopeMatrix {
    let b = base.len();
    let data = uniform_entries(n, b, rng)
        .into_iter()
        .map(|c| (FRAC_PI_2 * c).tan())
        .collect();
    let mut a = SlopeMatrix {
        rows: n,
        cols: b,
        data,
    };
    a.set_identity_rows(base);
    a
}

/// Parameters of the cone around a dominant direction.
#[derive(Clone, Debug)]
pub struct ConeParams {
    /// Initial half-angle `a` of the cone, radians.
    pub half_angle: f64,
    /// Angle multiplier from the schedule.
    pub beta: f64,
    pub eps: f64,
    pub direction: Vec<f64>,
}

/// Central angle of coordinate `i` against base coordinate `bj`.
pub fn central_angle(g: &[f64], i: usize, bj: usize, eps: f64) -> f64 {
    let (gi, gb) = (g[i], g[bj]);
    if gb == 0.0 {
        if gi == 0.0 {
            0.0
        } else {
            gi.signum() * (FRAC_PI_2 - eps)
        }
    } else {
        (gi / gb).atan()
    }
}

/// Clipped angle interval `[lo, hi]` for entry `(i, j)` with base index `bj`.
pub fn cone_interval(cone: &ConeParams, i: usize, bj: usize) -> (f64, f64) {
    let alpha = central_angle(&cone.direction, i, bj, cone.eps);
    let spread = cone.beta * cone.half_angle;
    let lo = (alpha - spread).max(-FRAC_PI_2 + cone.eps);
    let hi = (alpha + spread).min(FRAC_PI_2 - cone.eps);
    (lo, hi)
}

/// Slopes whose angles are drawn uniformly from a cone around `g`.
pub fn sample_cone<R: Rng + ?Sized>(
    n: usize,
    base: &BaseIndexSet,
    cone: &ConeParams,
    rng: &mut R,
) -> Result<SlopeMatrix> {
    if cone.direction.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: cone.direction.len(),
        });
    }
    if cone.direction.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroDirection);
    }
    let b = base.len();
    let mut data = uniform_entries(n, b, rng);
    for i in 0..n {
        for (j, &bj) in base.indices().iter().enumerate() {
            let (lo, hi) = cone_interval(cone, i, bj);
            let c = data[i * b + j];
            data[i * b + j] = (0.5 * (hi + lo) + 0.5 * (hi - lo) * c).tan();
        }
    }
    let mut a = SlopeMatrix {
        rows: n,
        cols: b,
        data,
    };
    a.set_identity_rows(base);
    Ok(a)
}

/// The affine inclusion `t -> anchor + A (t - anchor[B])`.
#[derive(Clone, Debug)]
pub struct RayMap {
    anchor: Vec<f64>,
    base: BaseIndexSet,
    slopes: SlopeMatrix,
    anchor_base: Vec<f64>,
}

impl RayMap {
    pub fn new(anchor: Vec<f64>, base: BaseIndexSet, slopes: SlopeMatrix) -> Result<Self> {
        let n = base.ambient_dim();
        if anchor.len() != n || slopes.rows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: if anchor.len() != n {
                    anchor.len()
                } else {
                    slopes.rows()
                },
            });
        }
        if slopes.cols() != base.len() {
            return Err(Error::DimensionMismatch {
                expected: base.len(),
                found: slopes.cols(),
            });
        }
        let anchor_base = base.gather(&anchor);
        Ok(Self {
            anchor,
            base,
            slopes,
            anchor_base,
        })
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn base(&self) -> &BaseIndexSet {
        &self.base
    }

    pub fn slopes(&self) -> &SlopeMatrix {
        &self.slopes
    }

    /// `x1[B]`, the parameter that maps back onto the anchor.
    pub fn anchor_parameter(&self) -> &[f64] {
        &self.anchor_base
    }

    pub fn ray_eval(&self, t: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.anchor.len()];
        self.ray_eval_into(t, &mut out)?;
        Ok(out)
    }

    pub fn ray_eval_into(&self, t: &[f64], out: &mut [f64]) -> Result<()> {
        let b = self.base.len();
        if t.len() != b {
            return Err(Error::DimensionMismatch {
                expected: b,
                found: t.len(),
            });
        }
        let shift: Vec<f64> = t.iter().zip(&self.anchor_base).map(|(a, c)| a - c).collect();
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.slopes.row(i);
            let dot: f64 = row.iter().zip(&shift).map(|(a, s)| a * s).sum();
            *o = self.anchor[i] + dot;
        }
        // A[B] = I, so the base coordinates are t itself; skip the rounding of x1 + (t - x1)
        for (j, &i) in self.base.indices().iter().enumerate() {
            out[i] = t[j];
        }
        Ok(())
    }
}

/// How the slopes of each ray are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingVariant {
    Vanilla,
    /// Cone around the gradient at the best point.
    ConeGradient,
    /// Cone around the segment from the best to the second-best point.
    ConeSecant,
}

impl SamplingVariant {
    pub fn needs_gradient(self) -> bool {
        self == SamplingVariant::ConeGradient
    }
}

/// Growth of the cone angle over the run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BetaMode {
    #[default]
    Constant,
    Growing,
}

/// Angle multiplier at global inner step `step` out of `total` steps.
pub fn beta_schedule(mode: BetaMode, growth: f64, step: usize, total: usize) -> f64 {
    match mode {
        BetaMode::Constant => 1.0,
        BetaMode::Growing => {
            let frac = if total <= 1 {
                0.0
            } else {
                step.min(total - 1) as f64 / (total - 1) as f64
            };
            1.0 + frac * growth
        }
    }
}

/// Dominant direction for the cone variants, `None` when the variant has
/// none or the secant is undefined (fewer than two points).
///
/// `best_points` must be sorted ascending by value.
pub fn dominant_direction(
    variant: SamplingVariant,
    best_points: &[(f64, Vec<f64>)],
    obj: &mut Objective,
) -> Result<Option<Vec<f64>>> {
    let x1 = &best_points
        .first()
        .ok_or(Error::EmptyStore)?
        .1;
    match variant {
        SamplingVariant::Vanilla => Ok(None),
        SamplingVariant::ConeGradient => obj.gradient(x1).map(Some),
        SamplingVariant::ConeSecant => Ok(best_points
            .get(1)
            .map(|(_, x2)| x2.iter().zip(x1).map(|(b, a)| b - a).collect())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::Function;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    #[test]
    fn choose_base_validates() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(choose_base(5, 5, &mut rng).is_err());
        assert!(choose_base(5, 0, &mut rng).is_err());
        let b = choose_base(5, 4, &mut rng).unwrap();
        assert_eq!(b.len(), 4);
        assert!(b.indices().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn choose_base_replays_with_seed() {
        let a = choose_base(50, 7, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = choose_base(50, 7, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn choose_base_two_way_split_is_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 10_000;
        let zeros = (0..draws)
            .filter(|_| choose_base(2, 1, &mut rng).unwrap().indices()[0] == 0)
            .count() as f64;
        let expected = draws as f64 / 2.0;
        let chi2 = 2.0 * (zeros - expected).powi(2) / expected;
        // chi-square, 1 dof, alpha = 0.001
        assert!(chi2 < 10.83, "chi2 = {chi2}");
    }

    #[test]
    fn hand_computed_ray() {
        let base = BaseIndexSet::new(3, vec![1]).unwrap();
        let a = SlopeMatrix::from_row_major(3, 1, vec![2.0, 1.0, 3.0]).unwrap();
        let ray = RayMap::new(vec![0.0; 3], base, a).unwrap();
        assert_eq!(ray.ray_eval(&[1.0]).unwrap(), vec![2.0, 1.0, 3.0]);
        assert!(ray.ray_eval(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn vanilla_zero_draw_gives_zero_slope() {
        assert_eq!((FRAC_PI_2 * 0.0f64).tan(), 0.0);
    }

    #[test]
    fn cone_rejects_zero_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let base = BaseIndexSet::new(3, vec![0]).unwrap();
        let cone = ConeParams {
            half_angle: 0.3,
            beta: 1.0,
            eps: ANGLE_EPS,
            direction: vec![0.0; 3],
        };
        assert!(matches!(
            sample_cone(3, &base, &cone, &mut rng),
            Err(Error::ZeroDirection)
        ));
    }

    #[test]
    fn central_angle_handles_zero_base_component() {
        let g = [0.0, 2.0, -1.0, 0.0];
        assert_eq!(central_angle(&g, 1, 0, ANGLE_EPS), FRAC_PI_2 - ANGLE_EPS);
        assert_eq!(central_angle(&g, 2, 0, ANGLE_EPS), -(FRAC_PI_2 - ANGLE_EPS));
        assert_eq!(central_angle(&g, 3, 0, ANGLE_EPS), 0.0);
        assert!((central_angle(&g, 2, 1, ANGLE_EPS) - (-0.5f64).atan()).abs() < 1e-15);
    }

    #[test]
    fn beta_schedule_endpoints() {
        assert_eq!(beta_schedule(BetaMode::Constant, 1.0, 17, 100), 1.0);
        assert_eq!(beta_schedule(BetaMode::Growing, 1.0, 0, 100), 1.0);
        assert_eq!(beta_schedule(BetaMode::Growing, 1.0, 99, 100), 2.0);
        assert_eq!(beta_schedule(BetaMode::Growing, 3.0, 0, 1), 1.0);
    }

    struct Sq;
    impl Function for Sq {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0] * x[0] + x[1] * x[1]
        }
        fn has_gradient(&self) -> bool {
            true
        }
        fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
            Some(vec![2.0 * x[0], 2.0 * x[1]])
        }
    }

    #[test]
    fn dominant_directions() {
        let mut obj = Objective::new(Arc::new(Sq));
        let pts = vec![(0.0, vec![0.0, 0.0]), (1.0, vec![1.0, 2.0])];
        assert_eq!(
            dominant_direction(SamplingVariant::ConeSecant, &pts, &mut obj).unwrap(),
            Some(vec![1.0, 2.0])
        );
        assert_eq!(
            dominant_direction(SamplingVariant::ConeSecant, &pts[..1], &mut obj).unwrap(),
            None
        );
        assert_eq!(
            dominant_direction(SamplingVariant::Vanilla, &pts, &mut obj).unwrap(),
            None
        );
        let at = vec![(1.0, vec![1.0, 0.0])];
        assert_eq!(
            dominant_direction(SamplingVariant::ConeGradient, &at, &mut obj).unwrap(),
            Some(vec![2.0, 0.0])
        );
        assert_eq!(obj.grad_count(), 1);
    }

    #[test]
    fn gradient_direction_needs_gradient() {
        let f = crate::oracle::FnFunction::new(2, |x: &[f64]| x[0]);
        let mut obj = Objective::new(Arc::new(f));
        let at = vec![(1.0, vec![1.0, 0.0])];
        assert!(matches!(
            dominant_direction(SamplingVariant::ConeGradient, &at, &mut obj),
            Err(Error::GradientUnavailable)
        ));
    }
}
