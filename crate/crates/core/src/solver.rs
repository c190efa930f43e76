//! Minimization of the discrete energy
//!
//! ```text
//! E(U) = ½ Uᵀ(K - σM)U + ∫_Ω L₁(u) dx + ∫_Γ L₂(u) dS/b - ⟨F, U⟩
//! ```
//!
//! over trace-coupled vectors. Stationary points of `E` are exactly the
//! discrete weak solutions. Smooth nonlinearities use damped Newton with
//! Armijo backtracking; the others use preconditioned gradient descent.

use serde::{Deserialize, Serialize};

use crate::geometry::ProductVector;
use crate::operator::{dual_norm, residual_nodal, OperatorMatrices, WentzellProblem};
use crate::sparse::{dot, BandedCholesky};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    /// Shift the result to zero `μ`-mean when constants are in the kernel.
    ZeroMean,
    /// Shift the result so that node 0 is zero when constants are in the
    /// kernel.
    PinFirstNode,
    None,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Tolerance on the `M`-dual weak residual.
    pub tol: f64,
    /// Newton iterations.
    pub max_iter: usize,
    /// Iterations for the gradient fallback.
    pub max_gradient_iter: usize,
    pub gauge: Gauge,
    /// `|mean(U)|` beyond which drift along constants counts as divergence.
    pub divergence_threshold: f64,
    /// Starting nodal values; zero when absent.
    pub initial: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 200,
            max_gradient_iter: 20_000,
            gauge: Gauge::ZeroMean,
            divergence_threshold: 1e6,
            initial: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Converged,
    DivergedAlongNullspace,
    MaxIter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Newton,
    GradientDescent,
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub method: SolveMethod,
    /// Final iterate, trace-coupled.
    pub u: ProductVector,
    pub residual: f64,
    pub iterations: usize,
    /// Energy at every accepted iterate, starting with the initial one.
    pub energy_trace: Vec<f64>,
    /// `μ`-mean of the iterates.
    pub mean_trace: Vec<f64>,
    /// Growth of the mean per iteration over the last steps, reported on
    /// divergence.
    pub drift_rate: Option<f64>,
}

fn nodal_energy(problem: &WentzellProblem, ops: &OperatorMatrices, u: &[f64]) -> f64 {
    let ku = ops.coupled_stiffness().matvec(u);
    let mut e = 0.5 * dot(&ku, u) - 0.5 * problem.shift * ops.mass_dot(u, u);
    let f = &problem.load;
    for (i, &v) in u.iter().enumerate() {
        e += ops.bulk_mass()[i] * (problem.alpha1.primitive(v) - f.interior()[i] * v);
    }
    for (k, &node) in ops.boundary_nodes().iter().enumerate() {
        let v = u[node];
        e += ops.surface_mass()[k] * (problem.alpha2.primitive(v) - f.boundary()[k] * v);
    }
    e
}

fn check_ops(problem: &WentzellProblem, ops: &OperatorMatrices) -> Result<()> {
    if ops.num_nodes() != problem.mesh.num_nodes() || ops.num_boundary() != problem.mesh.num_boundary() {
        return Err(Error::shape(problem.mesh.num_nodes(), ops.num_nodes()));
    }
    Ok(())
}

/// Energy of a trace-coupled `U`.
pub fn energy(problem: &WentzellProblem, ops: &OperatorMatrices, u: &ProductVector) -> Result<f64> {
    check_ops(problem, ops)?;
    u.require_coupled(&problem.mesh)?;
    Ok(nodal_energy(problem, ops, u.interior()))
}

/// `M`-representer of the energy derivative at a trace-coupled `U`, so that
/// `⟨gradient(U), V⟩ = E'(U)V` for every coupled `V`.
pub fn gradient(problem: &WentzellProblem, ops: &OperatorMatrices, u: &ProductVector) -> Result<ProductVector> {
    check_ops(problem, ops)?;
    u.require_coupled(&problem.mesh)?;
    let r = residual_nodal(problem, ops, u.interior());
    let g: Vec<f64> = r.iter().zip(ops.coupled_mass()).map(|(r, m)| r / m).collect();
    Ok(ops.prolong(&g))
}

/// Second-derivative diagonal `w α₁'(u) + dS/b α₂'(u)`.
fn hessian_diagonal(problem: &WentzellProblem, ops: &OperatorMatrices, u: &[f64]) -> Vec<f64> {
    let mut d: Vec<f64> = u
        .iter()
        .zip(ops.bulk_mass())
        .zip(ops.coupled_mass())
        .map(|((&v, w), m)| w * problem.alpha1.derivative(v).unwrap_or(0.0) - problem.shift * m)
        .collect();
    for (k, &node) in ops.boundary_nodes().iter().enumerate() {
        d[node] += ops.surface_mass()[k] * problem.alpha2.derivative(u[node]).unwrap_or(0.0);
    }
    d
}

/// Smallest admissible pivot ratio before the Hessian is regularized.
const PIVOT_FLOOR: f64 = 1e-13;

/// Factors `K + diag(d) + τM`, raising `τ` from zero until the factorization
/// succeeds with a reasonable pivot ratio.
fn factor_regularized(ops: &OperatorMatrices, d: &[f64], scale: f64) -> Result<(BandedCholesky, f64)> {
    let mass = ops.coupled_mass();
    let mut tau = 0.0;
    let mut last = None;
    for attempt in 0..12 {
        let shift: Vec<f64> = d.iter().zip(mass).map(|(d, m)| d + tau * m).collect();
        match BandedCholesky::factor(ops.coupled_stiffness().to_banded(Some(&shift))) {
            Ok(ch) if ch.min_pivot_ratio() > PIVOT_FLOOR || attempt == 11 => return Ok((ch, tau)),
            Ok(_) => {}
            Err(e) => last = Some(e),
        }
        tau = if tau == 0.0 { 1e-12 * scale } else { tau * 10.0 };
    }
    Err(last.unwrap_or(Error::NotPositiveDefinite { row: 0, pivot: 0.0 }))
}

fn mean(ops: &OperatorMatrices, u: &[f64]) -> f64 {
    let total: f64 = ops.coupled_mass().iter().sum();
    ops.coupled_mass().iter().zip(u).map(|(m, v)| m * v).sum::<f64>() / total
}

struct Tracker {
    energies: Vec<f64>,
    means: Vec<f64>,
    residuals: Vec<f64>,
}

impl Tracker {
    const WINDOW: usize = 5;

    /// Monotone growth of the mean past the threshold while the residual
    /// fails to decrease.
    fn diverging(&self, threshold: f64) -> Option<f64> {
        let n = self.means.len();
        if n <= Self::WINDOW {
            return None;
        }
        let last = self.means[n - 1];
        if last.abs() < threshold {
            return None;
        }
        let window = &self.means[n - 1 - Self::WINDOW..];
        let sign = last.signum();
        let monotone = window.windows(2).all(|w| sign * (w[1] - w[0]) > 0.0);
        let r = &self.residuals[self.residuals.len() - 1 - Self::WINDOW..];
        let stalled = r[r.len() - 1] > 0.5 * r[0];
        if monotone && stalled {
            Some((window[Self::WINDOW] - window[0]) / Self::WINDOW as f64)
        } else {
            None
        }
    }
}

/// Relative size below which an energy decrease is lost in rounding.
const ENERGY_NOISE: f64 = 1e-11;

/// Backtracking line search along `dir`. Asks for sufficient decrease of
/// `E`, or of the residual once the predicted energy decrease is below
/// rounding. Returns the accepted iterate and its energy, or `None` if no
/// step of length ≥ 2⁻⁶⁰ qualifies.
fn armijo(
    problem: &WentzellProblem,
    ops: &OperatorMatrices,
    u: &[f64],
    e0: f64,
    res0: f64,
    slope: f64,
    dir: &[f64],
) -> Option<(Vec<f64>, f64)> {
    const C1: f64 = 1e-4;
    let flat = -slope <= ENERGY_NOISE * (1.0 + e0.abs());
    let mut t = 1.0;
    for _ in 0..60 {
        let trial: Vec<f64> = u.iter().zip(dir).map(|(a, b)| a + t * b).collect();
        let e = nodal_energy(problem, ops, &trial);
        let accept = if flat {
            dual_norm(ops, &residual_nodal(problem, ops, &trial)) <= (1.0 - C1 * t) * res0
        } else {
            e <= e0 + C1 * t * slope
        };
        if e.is_finite() && accept {
            return Some((trial, e));
        }
        t *= 0.5;
    }
    None
}

/// Minimizes the energy. With `c ≡ 0` and no shift, incompatible loads make
/// the energy unbounded below along constants; that is reported as
/// [`SolveStatus::DivergedAlongNullspace`] rather than as an error.
pub fn solve(problem: &WentzellProblem, ops: &OperatorMatrices, opts: &SolveOptions) -> Result<SolveOutcome> {
    check_ops(problem, ops)?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let n = ops.num_nodes();
    let mut u = match &opts.initial {
        Some(v) if v.len() != n => return Err(Error::shape(n, v.len())),
        Some(v) => v.clone(),
        None => vec![0.0; n],
    };
    let newton = problem.alpha1.is_smooth() && problem.alpha2.is_smooth();
    let method = if newton {
        SolveMethod::Newton
    } else {
        SolveMethod::GradientDescent
    };
    let max_iter = if newton { opts.max_iter } else { opts.max_gradient_iter };
    let nullspace_possible = ops.c_vanishes() && problem.shift == 0.0;
    let scale = crate::spectral::operator_scale(ops);

    // fixed preconditioner for the gradient fallback
    let precond = if newton {
        None
    } else {
        let d: Vec<f64> = ops.coupled_mass().iter().map(|m| (1.0 - problem.shift) * m).collect();
        Some(factor_regularized(ops, &d, scale)?.0)
    };

    let mut r = residual_nodal(problem, ops, &u);
    let mut res = dual_norm(ops, &r);
    let mut e = nodal_energy(problem, ops, &u);
    let mut tracker = Tracker {
        energies: vec![e],
        means: vec![mean(ops, &u)],
        residuals: vec![res],
    };
    let mut status = SolveStatus::MaxIter;
    let mut drift_rate = None;
    let mut iterations = 0;

    while iterations < max_iter {
        if res <= opts.tol {
            status = SolveStatus::Converged;
            break;
        }
        iterations += 1;
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let dir = match &precond {
            Some(p) => p.solve(&neg_r),
            None => {
                let d = hessian_diagonal(problem, ops, &u);
                let (chol, tau) = factor_regularized(ops, &d, scale)?;
                let mut step = chol.solve(&neg_r);
                if tau > 0.0 {
                    // refine towards the unregularized Newton step
                    for _ in 0..3 {
                        let hs = ops.coupled_stiffness().matvec(&step);
                        let defect: Vec<f64> = neg_r
                            .iter()
                            .zip(&hs)
                            .zip(d.iter().zip(&step))
                            .map(|((b, h), (d, s))| b - h - d * s)
                            .collect();
                        let corr = chol.solve(&defect);
                        step.iter_mut().zip(&corr).for_each(|(s, c)| *s += c);
                    }
                }
                step
            }
        };
        let slope = dot(&r, &dir);
        if !(slope < 0.0) {
            break;
        }
        let Some((next, e_next)) = armijo(problem, ops, &u, e, res, slope, &dir) else {
            break;
        };
        u = next;
        e = e_next;
        r = residual_nodal(problem, ops, &u);
        res = dual_norm(ops, &r);
        tracker.energies.push(e);
        tracker.means.push(mean(ops, &u));
        tracker.residuals.push(res);
        if nullspace_possible {
            if let Some(rate) = tracker.diverging(opts.divergence_threshold) {
                status = SolveStatus::DivergedAlongNullspace;
                drift_rate = Some(rate);
                break;
            }
        }
        if !u.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    if status == SolveStatus::MaxIter && res <= opts.tol {
        status = SolveStatus::Converged;
    }

    if status == SolveStatus::Converged && nullspace_possible && problem.is_linear() {
        let offset = match opts.gauge {
            Gauge::ZeroMean => mean(ops, &u),
            Gauge::PinFirstNode => u[0],
            Gauge::None => 0.0,
        };
        u.iter_mut().for_each(|v| *v -= offset);
        res = dual_norm(ops, &residual_nodal(problem, ops, &u));
    }

    Ok(SolveOutcome {
        status,
        method,
        u: ops.prolong(&u),
        residual: res,
        iterations,
        energy_trace: tracker.energies,
        mean_trace: tracker.means,
        drift_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_interval_mesh, build_rectangle_mesh, BoundaryPoint, Mesh};
    use crate::nonlinearity::Nonlinearity;
    use crate::operator::weak_residual;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn one(_: BoundaryPoint) -> f64 {
        1.0
    }
    fn zero(_: BoundaryPoint) -> f64 {
        0.0
    }

    fn problem(mesh: &Mesh, a1: Nonlinearity, a2: Nonlinearity, load: ProductVector) -> WentzellProblem {
        WentzellProblem::new(mesh.clone(), 0.0, a1, a2, load).unwrap()
    }

    #[test]
    fn example_linear_solve_is_exact() {
        let mesh = build_interval_mesh(0.0, 1.0, 64, &one, &one).unwrap();
        let load = ProductVector::new(vec![0.0; mesh.num_nodes()], vec![1.0, 2.0]);
        let p = problem(&mesh, Nonlinearity::zero(), Nonlinearity::zero(), load);
        let ops = p.assemble().unwrap();
        let out = solve(&p, &ops, &SolveOptions::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Converged);
        for (x, u) in mesh.coords().iter().zip(out.u.interior()) {
            assert!((u - (x[0] + 4.0) / 3.0).abs() < 1e-10);
        }
        let g = gradient(&p, &ops, &out.u).unwrap();
        assert!(g.interior().iter().all(|v| v.abs() < 1e-8));
    }

    #[test]
    fn energy_of_power_example() {
        let n = 256;
        let mesh = build_interval_mesh(0.0, 1.0, n, &one, &zero).unwrap();
        let p = problem(
            &mesh,
            Nonlinearity::power(1.0, 1.0).unwrap(),
            Nonlinearity::zero(),
            ProductVector::zeros(&mesh),
        );
        let ops = p.assemble().unwrap();
        let u = ProductVector::from_fn(&mesh, |x, _| x);
        let h = 1.0 / n as f64;
        // trapezoid error of ∫x²/2 is h²/12·(1/2)·[f']₀¹ = h²/12
        assert_relative_eq!(energy(&p, &ops, &u).unwrap(), 2.0 / 3.0 + h * h / 12.0, epsilon = 1e-12);
        assert_eq!(energy(&p, &ops, &ProductVector::zeros(&mesh)).unwrap(), 0.0);
    }

    #[test]
    fn constants_cost_nothing_without_c() {
        let mesh = build_rectangle_mesh(1.0, 1.0, 5, 5, &one, &zero).unwrap();
        let p = problem(
            &mesh,
            Nonlinearity::zero(),
            Nonlinearity::zero(),
            ProductVector::zeros(&mesh),
        );
        let ops = p.assemble().unwrap();
        assert!(energy(&p, &ops, &ProductVector::constant(&mesh, 1.0)).unwrap().abs() < 1e-14);
    }

    fn arctan_problem(t: f64) -> (WentzellProblem, OperatorMatrices) {
        let mesh = build_interval_mesh(0.0, 1.0, 32, &one, &zero).unwrap();
        let load = ProductVector::new(vec![0.0; mesh.num_nodes()], vec![t / 2.0, t / 2.0]);
        let p = problem(&mesh, Nonlinearity::zero(), Nonlinearity::arctan(), load);
        let ops = p.assemble().unwrap();
        (p, ops)
    }

    #[test]
    fn compatible_arctan_load_converges() {
        let (p, ops) = arctan_problem(0.9 * PI);
        let out = solve(&p, &ops, &SolveOptions::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Converged);
        assert!(out.residual <= 1e-9);
        assert!(weak_residual(&p, &ops, &out.u).unwrap() <= 1e-9);
        // u is constant with arctan(u) = 0.45π
        let expected = (0.45 * PI).tan();
        assert!(out.u.interior().iter().all(|v| (v - expected).abs() < 1e-6));
        assert!(out.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn incompatible_arctan_load_diverges() {
        let (p, ops) = arctan_problem(1.1 * PI);
        let out = solve(&p, &ops, &SolveOptions::default()).unwrap();
        assert_eq!(out.status, SolveStatus::DivergedAlongNullspace);
        assert!(out.drift_rate.unwrap() > 0.0);
        assert!(out.energy_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn cubic_power_any_load() {
        let mesh = build_rectangle_mesh(1.0, 1.0, 8, 8, &one, &zero).unwrap();
        let load = ProductVector::from_fn(&mesh, |x, y| 20.0 * (3.0 * x).sin() + 5.0 * y);
        let p = problem(
            &mesh,
            Nonlinearity::power(1.0, 3.0).unwrap(),
            Nonlinearity::zero(),
            load,
        );
        let ops = p.assemble().unwrap();
        let out = solve(&p, &ops, &SolveOptions::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Converged);
        assert_eq!(out.method, SolveMethod::Newton);
    }

    #[test]
    fn table_nonlinearity_uses_gradient_descent() {
        let mesh = build_interval_mesh(0.0, 1.0, 16, &one, &zero).unwrap();
        let table = Nonlinearity::table(vec![(-1.0, -2.0), (0.0, 0.0), (1.0, 2.0)]).unwrap();
        let load = ProductVector::from_fn(&mesh, |x, _| x - 0.2);
        let p = problem(&mesh, table, Nonlinearity::zero(), load);
        let ops = p.assemble().unwrap();
        let out = solve(&p, &ops, &SolveOptions::default()).unwrap();
        assert_eq!(out.method, SolveMethod::GradientDescent);
        assert_eq!(out.status, SolveStatus::Converged);
    }

    #[test]
    fn gauges_differ_by_constant() {
        let mesh = build_rectangle_mesh(1.0, 1.0, 6, 6, &one, &zero).unwrap();
        let load = ProductVector::from_fn(&mesh, |x, y| (PI * x).cos() * (PI * y).cos());
        let p = problem(&mesh, Nonlinearity::zero(), Nonlinearity::zero(), load);
        let ops = p.assemble().unwrap();
        let a = solve(&p, &ops, &SolveOptions::default()).unwrap();
        let b = solve(
            &p,
            &ops,
            &SolveOptions {
                gauge: Gauge::PinFirstNode,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert_eq!(a.status, SolveStatus::Converged);
        assert_eq!(b.status, SolveStatus::Converged);
        assert_eq!(b.u.interior()[0], 0.0);
        let diff: Vec<f64> = a.u.interior().iter().zip(b.u.interior()).map(|(x, y)| x - y).collect();
        assert!(diff.iter().all(|d| (d - diff[0]).abs() < 1e-8));
        assert!(mean(&ops, a.u.interior()).abs() < 1e-12);
    }
}
