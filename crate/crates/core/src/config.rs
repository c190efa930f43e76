//! JSON run configurations and the checked-in presets.
//!
//! ```json
//! {
//!   "mesh": {"kind": "interval", "a": 0, "b": 1, "n": 64},
//!   "b": 1, "c": "1 + tan(1/2)", "q": 0,
//!   "alpha1": {"family": "arctan"}, "alpha2": {"family": "zero"},
//!   "f": 0, "g": {"values": [1, 2]},
//!   "shift": "ground-state"
//! }
//! ```
//!
//! Scalar fields accept a number, an expression string (see [`crate::expr`])
//! or an explicit `{"values": [...]}` list in node order. Loads may also be
//! `{"random": {...}}`, a seeded random cosine series.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::expr::{Expr, Vars};
use crate::geometry::{build_interval_mesh, build_rectangle_mesh, BoundaryPoint, Mesh, ProductVector};
use crate::nonlinearity::Nonlinearity;
use crate::operator::{assemble, WentzellProblem};
use crate::solver::{Gauge, SolveOptions};
use crate::spectral::{smallest_eigenpair, EigenResult};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MeshSpec {
    Interval { a: f64, b: f64, n: usize },
    Rectangle { lx: f64, ly: f64, nx: usize, ny: usize },
}

impl MeshSpec {
    /// Same geometry with `n` cells per direction.
    pub fn with_resolution(&self, n: usize) -> Self {
        match *self {
            MeshSpec::Interval { a, b, .. } => MeshSpec::Interval { a, b, n },
            MeshSpec::Rectangle { lx, ly, .. } => MeshSpec::Rectangle { lx, ly, nx: n, ny: n },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub seed: u64,
    pub amplitude: f64,
    #[serde(default = "default_modes")]
    pub modes: usize,
}

fn default_modes() -> usize {
    6
}

impl RandomSpec {
    /// `Σ_k a_k cos(kπx) cos(kπy)` with `a_k` uniform in `±amplitude`.
    fn function(&self) -> impl Fn(f64, f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let coeffs: Vec<f64> = (0..self.modes)
            .map(|_| rng.gen_range(-1.0..=1.0) * self.amplitude)
            .collect();
        move |x, y| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    let w = k as f64 * std::f64::consts::PI;
                    a * (w * x).cos() * (w * y).cos()
                })
                .sum()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarSpec {
    Number(f64),
    Expr(String),
    Values { values: Vec<f64> },
    Random { random: RandomSpec },
}

impl Default for ScalarSpec {
    fn default() -> Self {
        ScalarSpec::Number(0.0)
    }
}

enum Sampler {
    Const(f64),
    Expr(Expr),
    Values(Vec<f64>),
    Random(Box<dyn Fn(f64, f64) -> f64>),
}

impl Sampler {
    fn at(&self, index: usize, x: f64, y: f64, s: f64, q: f64) -> f64 {
        match self {
            Sampler::Const(v) => *v,
            Sampler::Expr(e) => e.eval(&Vars { x, y, s, q }),
            Sampler::Values(v) => v[index],
            Sampler::Random(f) => f(x, y),
        }
    }
}

impl ScalarSpec {
    fn sampler(&self, expected_len: usize, what: &str) -> Result<Sampler> {
        Ok(match self {
            ScalarSpec::Number(v) => Sampler::Const(*v),
            ScalarSpec::Expr(s) => Sampler::Expr(Expr::parse(s)?),
            ScalarSpec::Values { values } => {
                if values.len() != expected_len {
                    return Err(Error::InvalidArgument(format!(
                        "{what}: expected {expected_len} values, got {}",
                        values.len()
                    )));
                }
                Sampler::Values(values.clone())
            }
            ScalarSpec::Random { random } => Sampler::Random(Box::new(random.function())),
        })
    }

    /// Samples at every grid node (`s = 0`).
    pub fn sample_nodes(&self, mesh: &Mesh, q: f64, what: &str) -> Result<Vec<f64>> {
        let sampler = self.sampler(mesh.num_nodes(), what)?;
        Ok(mesh
            .coords()
            .iter()
            .enumerate()
            .map(|(i, p)| sampler.at(i, p[0], p[1], 0.0, q))
            .collect())
    }

    /// Samples at the boundary nodes in chain order.
    pub fn sample_boundary(&self, mesh: &Mesh, q: f64, what: &str) -> Result<Vec<f64>> {
        let points = mesh.boundary_points();
        self.sample_points(&points, q, what)
    }

    fn sample_points(&self, points: &[BoundaryPoint], q: f64, what: &str) -> Result<Vec<f64>> {
        let sampler = self.sampler(points.len(), what)?;
        Ok(points
            .iter()
            .enumerate()
            .map(|(k, p)| sampler.at(k, p.x, p.y, p.s, q))
            .collect())
    }
}

/// A number or a constant expression such as `"0.5*(2*cos(1/2) - tan(1/2))"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstSpec {
    Number(f64),
    Expr(String),
}

impl Default for ConstSpec {
    fn default() -> Self {
        ConstSpec::Number(0.0)
    }
}

impl ConstSpec {
    pub fn value(&self) -> Result<f64> {
        match self {
            ConstSpec::Number(v) => Ok(*v),
            ConstSpec::Expr(s) => {
                let e = Expr::parse(s)?;
                if !e.is_constant() {
                    return Err(Error::InvalidArgument(format!("`{s}` must be a constant expression")));
                }
                Ok(e.eval(&Vars::default()))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    #[default]
    Zero,
    Arctan,
    Power {
        r: f64,
        p: f64,
    },
    Table {
        points: Vec<(f64, f64)>,
    },
    /// Expression in the variable `x` standing for the argument of `α`.
    Custom {
        name: String,
        expr: String,
    },
}

impl FamilySpec {
    pub fn build(&self) -> Result<Nonlinearity> {
        match self {
            FamilySpec::Zero => Ok(Nonlinearity::zero()),
            FamilySpec::Arctan => Ok(Nonlinearity::arctan()),
            FamilySpec::Power { r, p } => Nonlinearity::power(*r, *p),
            FamilySpec::Table { points } => Nonlinearity::table(points.clone()),
            FamilySpec::Custom { name, expr } => {
                let e = Expr::parse(expr)?;
                Nonlinearity::custom(name.clone(), move |t| {
                    e.eval(&Vars {
                        x: t,
                        ..Vars::default()
                    })
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShiftKeyword {
    /// The smallest eigenvalue of the linear operator.
    GroundState,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShiftSpec {
    Value(f64),
    Keyword(ShiftKeyword),
}

impl Default for ShiftSpec {
    fn default() -> Self {
        ShiftSpec::Value(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_gauge")]
    pub gauge: Gauge,
}

fn default_tol() -> f64 {
    1e-9
}
fn default_max_iter() -> usize {
    200
}
fn default_gauge() -> Gauge {
    Gauge::ZeroMean
}
fn default_one() -> ScalarSpec {
    ScalarSpec::Number(1.0)
}
fn default_scale() -> f64 {
    1.0
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            gauge: default_gauge(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub mesh: MeshSpec,
    #[serde(default = "default_one")]
    pub b: ScalarSpec,
    #[serde(default)]
    pub c: ScalarSpec,
    #[serde(default)]
    pub q: ConstSpec,
    #[serde(default)]
    pub alpha1: FamilySpec,
    #[serde(default)]
    pub alpha2: FamilySpec,
    #[serde(default)]
    pub f: ScalarSpec,
    #[serde(default)]
    pub g: ScalarSpec,
    /// Multiplies both loads.
    #[serde(default = "default_scale")]
    pub load_scale: f64,
    #[serde(default)]
    pub shift: ShiftSpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

/// A problem built from a config, with the eigenpair when one was needed.
#[derive(Clone, Debug)]
pub struct BuiltProblem {
    pub problem: WentzellProblem,
    pub ground_state: Option<EigenResult>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn q_value(&self) -> Result<f64> {
        self.q.value()
    }

    pub fn mesh(&self) -> Result<Mesh> {
        let q = self.q_value()?;
        let unit = |_: BoundaryPoint| 1.0;
        let bare = match self.mesh {
            MeshSpec::Interval { a, b, n } => build_interval_mesh(a, b, n, &unit, &unit)?,
            MeshSpec::Rectangle { lx, ly, nx, ny } => build_rectangle_mesh(lx, ly, nx, ny, &unit, &unit)?,
        };
        let points = bare.boundary_points();
        let b = self.b.sample_points(&points, q, "b")?;
        let c = self.c.sample_points(&points, q, "c")?;
        let index = |p: BoundaryPoint| {
            points
                .iter()
                .position(|o| *o == p)
                .expect("boundary point comes from the same mesh")
        };
        bare.with_coefficients(&|p| b[index(p)], &|p| c[index(p)])
    }

    pub fn load(&self, mesh: &Mesh) -> Result<ProductVector> {
        let q = self.q_value()?;
        let f = self.f.sample_nodes(mesh, q, "f")?;
        let g = self.g.sample_boundary(mesh, q, "g")?;
        let s = self.load_scale;
        Ok(ProductVector::new(
            f.into_iter().map(|v| v * s).collect(),
            g.into_iter().map(|v| v * s).collect(),
        ))
    }

    /// Assembles the problem; a `"ground-state"` shift triggers an
    /// eigensolve whose result is returned alongside.
    pub fn build(&self) -> Result<BuiltProblem> {
        let mesh = self.mesh()?;
        let q = self.q_value()?;
        let load = self.load(&mesh)?;
        let problem = WentzellProblem::new(mesh, q, self.alpha1.build()?, self.alpha2.build()?, load)?;
        let (problem, ground_state) = match self.shift {
            ShiftSpec::Value(s) => (problem.with_shift(s), None),
            ShiftSpec::Keyword(ShiftKeyword::GroundState) => {
                let eig = smallest_eigenpair(&assemble(&problem.mesh, q)?)?;
                (problem.with_shift(eig.eigenvalue), Some(eig))
            }
        };
        Ok(BuiltProblem { problem, ground_state })
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            gauge: self.solver.gauge,
            ..SolveOptions::default()
        }
    }
}

const PRESETS: &[(&str, &str)] = &[
    ("example-2.1", include_str!("../presets/example-2.1.json")),
    ("e4.7-arctan", include_str!("../presets/e4.7-arctan.json")),
    ("P3-arctan", include_str!("../presets/P3-arctan.json")),
    ("P3-power", include_str!("../presets/P3-power.json")),
    ("box-2d", include_str!("../presets/box-2d.json")),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.0).collect()
}

pub fn preset(name: &str) -> Result<RunConfig> {
    let Some((_, text)) = PRESETS.iter().find(|p| p.0 == name) else {
        return Err(Error::InvalidArgument(format!(
            "unknown preset `{name}` (available: {})",
            preset_names().join(", ")
        )));
    };
    RunConfig::from_json(text)
}
