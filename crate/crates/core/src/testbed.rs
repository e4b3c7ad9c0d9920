//! Benchmark problems: random quadratics, Rosenbrock-Skokov, Rastrigin and
//! DeVilliersGlasser02, plus the fixed catalogue of instances used by the
//! experiments.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{BoxSet, Function, Objective};

/// `f(x) = x^T M x + lin^T x + c` with `M = A A^T`, `A_ij ~ U(0, a)`.
#[derive(Clone, Debug)]
pub struct QuadraticInstance {
    pub n: usize,
    pub scale: f64,
    pub seed: u64,
    /// Row-major `n x n`.
    pub m: Vec<f64>,
    pub lin: Vec<f64>,
    pub c: f64,
    /// `lambda_max(M) / lambda_min(M)`.
    pub kappa: f64,
    /// Unconstrained minimiser `-(2M)^{-1} lin`, if `M` is numerically invertible.
    pub minimiser: Option<Vec<f64>>,
}

pub fn make_quadratic(n: usize, scale: f64, seed: u64) -> Result<QuadraticInstance> {
    if n < 1 || !(scale > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "quadratic needs n >= 1 and a > 0, got n = {n}, a = {scale}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_row_iterator(n, n, (0..n * n).map(|_| rng.random_range(0.0..scale)));
    let lin: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let c = rng.random_range(0.0..1.0);
    let m = &a * a.transpose();

    let eig = m.clone().symmetric_eigenvalues();
    let (lo, hi) = eig
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    let kappa = hi / lo;
    let minimiser = (2.0 * &m)
        .cholesky()
        .map(|ch| (-ch.solve(&DVector::from_column_slice(&lin))).as_slice().to_vec());

    let m_rows = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect();
    Ok(QuadraticInstance {
        n,
        scale,
        seed,
        m: m_rows,
        lin,
        c,
        kappa,
        minimiser,
    })
}

impl QuadraticInstance {
    fn mx(&self, x: &[f64]) -> Vec<f64> {
        self.m
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn min_value(&self) -> Option<f64> {
        self.minimiser.as_ref().map(|x| self.value(x))
    }
}

impl Function for QuadraticInstance {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let mx = self.mx(x);
        let quad: f64 = x.iter().zip(&mx).map(|(a, b)| a * b).sum();
        let lin: f64 = x.iter().zip(&self.lin).map(|(a, b)| a * b).sum();
        quad + lin + self.c
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(
            self.mx(x)
                .iter()
                .zip(&self.lin)
                .map(|(mx, b)| 2.0 * mx + b)
                .collect(),
        )
    }
}

/// `(1 - x_1)^2 + 100 * sum_{i>=2} (x_i - x_{i-1}^2)^2`.
pub fn rosenbrock_skokov(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::Domain("Rosenbrock-Skokov needs at least 2 variables".into()));
    }
    let head = (1.0 - x[0]).powi(2);
    let chain: f64 = x.windows(2).map(|w| (w[1] - w[0] * w[0]).powi(2)).sum();
    Ok(head + 100.0 * chain)
}

pub fn rosenbrock_skokov_gradient(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut g = vec![0.0; n];
    g[0] = -2.0 * (1.0 - x[0]);
    for k in 1..n {
        let r = x[k] - x[k - 1] * x[k - 1];
        g[k] += 200.0 * r;
        g[k - 1] -= 400.0 * x[k - 1] * r;
    }
    g
}

#[derive(Clone, Copy, Debug)]
pub struct RosenbrockSkokov {
    pub n: usize,
}

impl Function for RosenbrockSkokov {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        rosenbrock_skokov(x).unwrap_or(f64::NAN)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(rosenbrock_skokov_gradient(x))
    }
}

/// Classical Rastrigin, `10 n + sum (x_i^2 - 10 cos(2 pi x_i))`.
pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * PI * v).cos())
            .sum::<f64>()
}

#[derive(Clone, Copy, Debug)]
pub struct Rastrigin {
    pub n: usize,
}

impl Function for Rastrigin {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        rastrigin(x)
    }

    fn has_gradient(&self) -> bool {
        true
    }

    fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(
            x.iter()
                .map(|v| 2.0 * v + 20.0 * PI * (2.0 * PI * v).sin())
                .collect(),
        )
    }
}

/// Parameters that generate the DeVilliersGlasser02 data; also its global minimiser.
pub const DVG02_TRUE: [f64; 5] = [53.81, 1.27, 3.012, 2.13, 0.507];

fn dvg02_model(p: &[f64], t: f64) -> f64 {
    p[0] * p[1].powf(t) * (p[2] * t + (p[3] * t).sin()).tanh() * (t * p[4].exp()).cos()
}

/// Sample times `t_i = 0.1 (i - 1)` and targets `y_i`, `i = 1..24`.
pub fn dvg02_data() -> Vec<(f64, f64)> {
    (0..24)
        .map(|i| {
            let t = 0.1 * i as f64;
            (t, dvg02_model(&DVG02_TRUE, t))
        })
        .collect()
}

pub fn devilliers_glasser_02(x: &[f64]) -> Result<f64> {
    if x.len() != 5 {
        return Err(Error::DimensionMismatch {
            expected: 5,
            found: x.len(),
        });
    }
    if !(x[1] > 0.0) {
        return Err(Error::Domain(format!(
            "x_2 = {} must be positive for fractional powers",
            x[1]
        )));
    }
    Ok(dvg02_data()
        .iter()
        .map(|(t, y)| (dvg02_model(x, *t) - y).powi(2))
        .sum())
}

#[derive(Clone, Debug)]
pub struct DeVilliersGlasser02 {
    data: Vec<(f64, f64)>,
}

impl Default for DeVilliersGlasser02 {
    fn default() -> Self {
        Self { data: dvg02_data() }
    }
}

impl Function for DeVilliersGlasser02 {
    fn dim(&self) -> usize {
        5
    }

    fn value(&self, x: &[f64]) -> f64 {
        if !(x[1] > 0.0) {
            return f64::NAN;
        }
        self.data
            .iter()
            .map(|(t, y)| (dvg02_model(x, *t) - y).powi(2))
            .sum()
    }
}

/// A concrete benchmark problem: function, box, start point and known optimum.
#[derive(Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub function: Arc<dyn Function>,
    pub bx: BoxSet,
    pub x0: Vec<f64>,
    pub f_star: Option<f64>,
    pub x_star: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub kappa: Option<f64>,
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.name)
            .field("dim", &self.bx.dim())
            .field("f_star", &self.f_star)
            .finish()
    }
}

impl ProblemInstance {
    pub fn dim(&self) -> usize {
        self.bx.dim()
    }

    /// A fresh counting wrapper for one run.
    pub fn objective(&self) -> Objective {
        Objective::new(self.function.clone())
    }

    pub fn f0(&self) -> f64 {
        self.function.value(&self.x0)
    }

    /// `(f - f*) / (f(x0) - f*)`, or `f` itself when `f*` is unknown.
    pub fn relative_suboptimality(&self, f: f64) -> f64 {
        match self.f_star {
            Some(fs) => (f - fs) / (self.f0() - fs),
            None => f,
        }
    }

    pub fn descriptor(&self) -> InstanceDescriptor {
        InstanceDescriptor {
            name: self.name.clone(),
            dimension: self.dim(),
            lower: self.bx.lower().to_vec(),
            upper: self.bx.upper().to_vec(),
            x0: self.x0.clone(),
            seed: self.seed,
            f_star: self.f_star,
            x_star: self.x_star.clone(),
            kappa: self.kappa,
        }
    }
}

/// JSON view of an instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDescriptor {
    pub name: String,
    pub dimension: usize,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub x0: Vec<f64>,
    pub seed: Option<u64>,
    pub f_star: Option<f64>,
    pub x_star: Option<Vec<f64>>,
    pub kappa: Option<f64>,
}

/// Seeds of the three catalogue quadratics, chosen so that the unconstrained
/// minimiser lies inside the box.
pub const QUADRATIC_SEEDS: [u64; 3] = [0, 0, 0];

/// Quadratic instance on `[-half_width, half_width]^n`. The start point is the
/// box centre plus a seeded uniform perturbation of up to half the half-width.
pub fn quadratic_problem(
    name: &str,
    n: usize,
    scale: f64,
    half_width: f64,
    seed: u64,
) -> Result<ProblemInstance> {
    let q = make_quadratic(n, scale, seed)?;
    let bx = BoxSet::uniform(n, -half_width, half_width)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let raw: Vec<f64> = bx
        .center()
        .iter()
        .map(|c| c + 0.5 * half_width * rng.random_range(-1.0..1.0))
        .collect();
    let x0 = bx.project(&raw)?;
    let (x_star, f_star) = match &q.minimiser {
        Some(x) if bx.contains(x) => (Some(x.clone()), q.min_value()),
        _ => (None, None),
    };
    let kappa = q.kappa;
    Ok(ProblemInstance {
        name: name.to_string(),
        function: Arc::new(q),
        bx,
        x0,
        f_star,
        x_star,
        seed: Some(seed),
        kappa: Some(kappa),
    })
}

pub fn rosenbrock_problem(n: usize) -> Result<ProblemInstance> {
    if n < 2 {
        return Err(Error::Domain("Rosenbrock-Skokov needs at least 2 variables".into()));
    }
    Ok(ProblemInstance {
        name: format!("rosenbrock-skokov-{n}"),
        function: Arc::new(RosenbrockSkokov { n }),
        bx: BoxSet::uniform(n, -3.0, 3.0)?,
        x0: vec![0.1; n],
        f_star: Some(0.0),
        x_star: Some(vec![1.0; n]),
        seed: None,
        kappa: None,
    })
}

pub fn rastrigin_problem(n: usize) -> Result<ProblemInstance> {
    Ok(ProblemInstance {
        name: format!("rastrigin-{n}"),
        function: Arc::new(Rastrigin { n }),
        bx: BoxSet::uniform(n, -5.12, 5.12)?,
        x0: vec![5.0; n],
        f_star: Some(0.0),
        x_star: Some(vec![0.0; n]),
        seed: None,
        kappa: None,
    })
}

pub fn dvg02_problem() -> Result<ProblemInstance> {
    Ok(ProblemInstance {
        name: "dvg02-5".into(),
        function: Arc::new(DeVilliersGlasser02::default()),
        bx: BoxSet::uniform(5, 1.0, 60.0)?,
        x0: vec![30.0; 5],
        f_star: Some(0.0),
        x_star: Some(DVG02_TRUE.to_vec()),
        seed: None,
        kappa: None,
    })
}

pub const CATALOGUE_NAMES: [&str; 6] = [
    "quad-10",
    "quad-25",
    "quad-50",
    "rosenbrock-skokov-100",
    "rastrigin-200",
    "dvg02-5",
];

pub fn instance_by_name(name: &str) -> Result<ProblemInstance> {
    match name {
        "quad-10" => quadratic_problem(name, 10, 1.0, 20.0, QUADRATIC_SEEDS[0]),
        "quad-25" => quadratic_problem(name, 25, 5.0 * 2f64.sqrt(), 5.0, QUADRATIC_SEEDS[1]),
        "quad-50" => quadratic_problem(name, 50, 10f64.sqrt(), 5.0, QUADRATIC_SEEDS[2]),
        "rosenbrock-skokov-100" => rosenbrock_problem(100),
        "rastrigin-200" => rastrigin_problem(200),
        "dvg02-5" => dvg02_problem(),
        other => Err(Error::UnknownInstance(other.to_string())),
    }
}

pub fn catalogue() -> Vec<ProblemInstance> {
    CATALOGUE_NAMES
        .iter()
        .map(|n| instance_by_name(n).expect("catalogue instances are valid"))
        .collect()
}

/// Instance reference in experiment configs: a catalogue name or an inline family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSpec {
    Named(String),
    Inline(InlineInstance),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum InlineInstance {
    Quadratic {
        n: usize,
        scale: f64,
        half_width: f64,
        seed: u64,
    },
    RosenbrockSkokov {
        n: usize,
    },
    Rastrigin {
        n: usize,
    },
    Dvg02,
}

impl InstanceSpec {
    pub fn build(&self) -> Result<ProblemInstance> {
        match self {
            InstanceSpec::Named(name) => instance_by_name(name),
            InstanceSpec::Inline(inline) => match *inline {
                InlineInstance::Quadratic {
                    n,
                    scale,
                    half_width,
                    seed,
                } => quadratic_problem(&format!("quad-{n}-s{seed}"), n, scale, half_width, seed),
                InlineInstance::RosenbrockSkokov { n } => rosenbrock_problem(n),
                InlineInstance::Rastrigin { n } => rastrigin_problem(n),
                InlineInstance::Dvg02 => dvg02_problem(),
            },
        }
    }
}
