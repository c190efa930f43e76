//! Solvability certificates for semilinear Wentzell problems.
//!
//! With `c ≡ 0` the constants span the kernel and solvability is decided by
//! the aggregate load `T = ∫f dx + ∫g dS/b` against
//! `Ĩ = λ₁ R(α₁) + λ₂ R(α₂)`. With `c > 0` somewhere and the problem posed
//! at the ground-state eigenvalue, the load is weighted by the positive
//! ground state `Z` instead.

use std::fmt;

use serde::Serialize;

use crate::geometry::{x2_inner_product, ProductVector};
use crate::nonlinearity::{delta2_check, minkowski_combine, range_of, Nonlinearity, RangeInterval};
use crate::operator::WentzellProblem;
use crate::spectral::EigenResult;
use crate::{Error, Result};

/// Relative margin for strict interval membership.
pub const EPS_REL: f64 = 1e-9;

const DELTA2_T_MAX: f64 = 1e6;
const DELTA2_SAMPLES: usize = 120;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Infeasible,
    NecessaryOnly,
    StrictlyFeasible,
}

impl Verdict {
    /// Process exit code for the verdict.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::StrictlyFeasible => 0,
            Verdict::NecessaryOnly => 2,
            Verdict::Infeasible => 3,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Infeasible => "infeasible",
            Verdict::NecessaryOnly => "necessary-only",
            Verdict::StrictlyFeasible => "strictly-feasible",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    /// Aggregate load against `λ₁R(α₁) + λ₂R(α₂)` (`c ≡ 0`).
    AggregateLoad,
    /// Ground-state weighted load (`c > 0`, resonant shift).
    GroundState,
    /// Linear part strictly positive definite: monotone perturbations of a
    /// coercive operator are onto.
    Coercive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundStateBounds {
    pub eigenvalue: f64,
    /// `⟨F, Z⟩` in the product space.
    pub load_projection: f64,
    /// `⟨Z, 1⟩`.
    pub z_mass: f64,
    pub min_z: f64,
    pub max_z: f64,
    pub nec_lower: f64,
    pub nec_upper: f64,
    pub suf_lower: f64,
    pub suf_upper: f64,
    pub nec_holds: bool,
    pub suf_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolvabilityReport {
    pub certificate: Certificate,
    /// `T = ∫f dx + ∫g dS/b`.
    pub total_load: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// The scalar tested against `interval`: `T` for the aggregate-load
    /// certificate, `⟨F, Z⟩` for the ground-state one.
    pub tested_value: f64,
    pub interval: RangeInterval,
    pub delta2_passes: bool,
    pub verdict: Verdict,
    pub ground_state: Option<GroundStateBounds>,
}

impl SolvabilityReport {
    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }

    /// One-line human summary.
    pub fn summary(&self) -> String {
        match self.certificate {
            Certificate::AggregateLoad => format!(
                "{}: T = {:.6} against {} (Δ₂ {})",
                self.verdict,
                self.total_load,
                self.interval,
                if self.delta2_passes { "holds" } else { "fails" }
            ),
            Certificate::GroundState => format!(
                "{}: <F,Z> = {:.6}, necessary bounds {}, sufficient bounds ({:.6}, {:.6})",
                self.verdict,
                self.tested_value,
                self.interval,
                self.ground_state.as_ref().map_or(f64::NAN, |g| g.suf_lower),
                self.ground_state.as_ref().map_or(f64::NAN, |g| g.suf_upper),
            ),
            Certificate::Coercive => format!("{}: coercive linear part, any load is admissible", self.verdict),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn delta2_passes(alpha: &Nonlinearity) -> Result<bool> {
    Ok(delta2_check(alpha, DELTA2_T_MAX, DELTA2_SAMPLES)?.passes)
}

/// Aggregate-load certificate for `c ≡ 0`.
pub fn certify_mean_zero_c(problem: &WentzellProblem) -> Result<SolvabilityReport> {
    let mesh = &problem.mesh;
    if !mesh.c_vanishes() {
        return Err(Error::WrongCertificate(
            "c does not vanish on the boundary; use the ground-state certificate".into(),
        ));
    }
    if problem.shift != 0.0 {
        return Err(Error::WrongCertificate(format!(
            "aggregate-load certificate needs an unshifted operator, got shift {}",
            problem.shift
        )));
    }
    let measure = mesh.measure();
    let t = problem.total_load();
    let interval = minkowski_combine(
        &range_of(&problem.alpha1),
        measure.interior,
        &range_of(&problem.alpha2),
        measure.boundary,
    )?;
    let d2 = delta2_passes(&problem.alpha1)? && delta2_passes(&problem.alpha2)?;
    let scale = [interval.lower, interval.upper, t]
        .iter()
        .filter(|v| v.is_finite())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let verdict = if !interval.contains_closure(t, EPS_REL * scale) {
        Verdict::Infeasible
    } else if interval.width() == 0.0 {
        // both nonlinearities vanish: the linear Fredholm alternative
        // applies and compatibility is also sufficient
        Verdict::StrictlyFeasible
    } else if interval.contains_interior(t, EPS_REL) && d2 {
        Verdict::StrictlyFeasible
    } else {
        Verdict::NecessaryOnly
    };
    Ok(SolvabilityReport {
        certificate: Certificate::AggregateLoad,
        total_load: t,
        lambda1: measure.interior,
        lambda2: measure.boundary,
        tested_value: t,
        interval,
        delta2_passes: d2,
        verdict,
        ground_state: None,
    })
}

/// `l · a` with `0 · ±∞ = 0`.
fn times(l: f64, a: f64) -> f64 {
    if l == 0.0 {
        0.0
    } else {
        l * a
    }
}

/// Ground-state certificate for `-Δu - λu + α(u) = f` with `c > 0` on part
/// of the boundary and `λ` the smallest eigenvalue.
pub fn certify_ground_state(problem: &WentzellProblem, eigen: &EigenResult) -> Result<SolvabilityReport> {
    let mesh = &problem.mesh;
    if mesh.c_vanishes() {
        return Err(Error::WrongCertificate(
            "c vanishes on the boundary; use the aggregate-load certificate".into(),
        ));
    }
    if !problem.alpha2.is_zero() {
        return Err(Error::WrongCertificate(
            "ground-state certificate needs a single interior nonlinearity (α₂ ≡ 0)".into(),
        ));
    }
    let z: &ProductVector = &eigen.vector;
    z.check_shape(mesh)?;
    let min_z = eigen.min_value();
    let max_z = eigen.max_value();
    if !(min_z > 0.0) {
        return Err(Error::GroundStateSign(min_z));
    }
    let norm = x2_inner_product(z, z, mesh)?.sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::NotNormalized(norm));
    }
    let measure = mesh.measure();
    let projection = x2_inner_product(&problem.load, z, mesh)?;
    let z_mass = x2_inner_product(z, &ProductVector::constant(mesh, 1.0), mesh)?;
    let range = range_of(&problem.alpha1);
    let nec_lower = times(z_mass, range.lower);
    let nec_upper = times(z_mass, range.upper);
    let suf_lower = range.lower / min_z;
    let suf_upper = range.upper / max_z;
    let scale = [nec_lower, nec_upper, projection]
        .iter()
        .filter(|v| v.is_finite())
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let margin = EPS_REL * scale;
    let nec_holds = projection >= nec_lower - margin && projection <= nec_upper + margin;
    let suf_holds = projection > suf_lower + margin && projection < suf_upper - margin;
    let d2 = delta2_passes(&problem.alpha1)?;
    let verdict = if !nec_holds {
        Verdict::Infeasible
    } else if suf_holds && d2 {
        Verdict::StrictlyFeasible
    } else {
        Verdict::NecessaryOnly
    };
    Ok(SolvabilityReport {
        certificate: Certificate::GroundState,
        total_load: problem.total_load(),
        lambda1: measure.interior,
        lambda2: measure.boundary,
        tested_value: projection,
        interval: RangeInterval::new(nec_lower, nec_upper, range.lower_attained, range.upper_attained),
        delta2_passes: d2,
        verdict,
        ground_state: Some(GroundStateBounds {
            eigenvalue: eigen.eigenvalue,
            load_projection: projection,
            z_mass,
            min_z,
            max_z,
            nec_lower,
            nec_upper,
            suf_lower,
            suf_upper,
            nec_holds,
            suf_holds,
        }),
    })
}

/// Report for a problem whose shifted linear part is positive definite.
pub fn certify_coercive(problem: &WentzellProblem) -> SolvabilityReport {
    let measure = problem.mesh.measure();
    let t = problem.total_load();
    SolvabilityReport {
        certificate: Certificate::Coercive,
        total_load: t,
        lambda1: measure.interior,
        lambda2: measure.boundary,
        tested_value: t,
        interval: RangeInterval::real_line(),
        delta2_passes: true,
        verdict: Verdict::StrictlyFeasible,
        ground_state: None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NecessityAudit {
    /// `∫α₁(u)dx + ∫α₂(u)dS/b + ∫c u dS/b - σ⟨U, 1⟩`.
    pub lhs: f64,
    pub total_load: f64,
    pub identity_holds: bool,
    /// `∫α₁(u)dx + ∫α₂(u)dS/b ∈ closure(Ĩ)`; only checked for `c ≡ 0`
    /// without shift, otherwise `None`.
    pub in_closure: Option<bool>,
    pub passes: bool,
}

/// Tests a candidate solution against the constant test function: every
/// weak solution satisfies `lhs = T`, and with `c ≡ 0` the nonlinear part
/// alone equals `T` and lies in the closure of `Ĩ`.
pub fn necessity_audit_report(problem: &WentzellProblem, u: &ProductVector) -> Result<NecessityAudit> {
    let mesh = &problem.mesh;
    u.check_shape(mesh)?;
    let dsb = mesh.boundary_measure_weights();
    let nonlinear: f64 = mesh
        .weights()
        .iter()
        .zip(u.interior())
        .map(|(w, v)| w * problem.alpha1.eval(*v))
        .sum::<f64>()
        + dsb
            .iter()
            .zip(u.boundary())
            .map(|(w, v)| w * problem.alpha2.eval(*v))
            .sum::<f64>();
    let robin: f64 = dsb
        .iter()
        .zip(mesh.c())
        .zip(u.boundary())
        .map(|((w, c), v)| w * c * v)
        .sum();
    let mass = crate::geometry::integral_mu(u, mesh)?;
    let lhs = nonlinear + robin - problem.shift * mass;
    let t = problem.total_load();
    let tol = 1e-6 * (1.0 + t.abs());
    let identity_holds = lhs.is_finite() && (lhs - t).abs() <= tol;
    let in_closure = if mesh.c_vanishes() && problem.shift == 0.0 {
        let measure = mesh.measure();
        let interval = minkowski_combine(
            &range_of(&problem.alpha1),
            measure.interior,
            &range_of(&problem.alpha2),
            measure.boundary,
        )?;
        Some(interval.contains_closure(nonlinear, tol))
    } else {
        None
    };
    Ok(NecessityAudit {
        lhs,
        total_load: t,
        identity_holds,
        in_closure,
        passes: identity_holds && in_closure.unwrap_or(true),
    })
}

pub fn necessity_audit(problem: &WentzellProblem, u: &ProductVector) -> bool {
    necessity_audit_report(problem, u).map(|a| a.passes).unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_interval_mesh, BoundaryPoint, Mesh};
    use crate::operator::assemble;
    use crate::spectral::smallest_eigenpair;
    use std::f64::consts::PI;

    fn one(_: BoundaryPoint) -> f64 {
        1.0
    }
    fn zero(_: BoundaryPoint) -> f64 {
        0.0
    }

    fn arctan_boundary(t: f64) -> WentzellProblem {
        let mesh = build_interval_mesh(0.0, 1.0, 16, &one, &zero).unwrap();
        let n = mesh.num_nodes();
        let load = ProductVector::new(vec![0.0; n], vec![t / 2.0, t / 2.0]);
        WentzellProblem::new(mesh, 0.0, Nonlinearity::zero(), Nonlinearity::arctan(), load).unwrap()
    }

    #[test]
    fn arctan_threshold() {
        let r = certify_mean_zero_c(&arctan_boundary(3.0)).unwrap();
        assert_eq!(r.verdict, Verdict::StrictlyFeasible);
        assert!((r.interval.upper - PI).abs() < 1e-12);
        assert_eq!(
            certify_mean_zero_c(&arctan_boundary(3.2)).unwrap().verdict,
            Verdict::Infeasible
        );
        assert_eq!(certify_mean_zero_c(&arctan_boundary(-3.2)).unwrap().exit_code(), 3);
        assert_eq!(
            certify_mean_zero_c(&arctan_boundary(PI)).unwrap().verdict,
            Verdict::NecessaryOnly
        );
    }

    #[test]
    fn power_range_is_everything() {
        let mut p = arctan_boundary(1e6);
        p.alpha1 = Nonlinearity::power(1.0, 2.0).unwrap();
        assert_eq!(certify_mean_zero_c(&p).unwrap().verdict, Verdict::StrictlyFeasible);
    }

    #[test]
    fn linear_compatibility() {
        let mut p = arctan_boundary(0.0);
        p.alpha2 = Nonlinearity::zero();
        assert_eq!(certify_mean_zero_c(&p).unwrap().verdict, Verdict::StrictlyFeasible);
        p = arctan_boundary(0.5);
        p.alpha2 = Nonlinearity::zero();
        assert_eq!(certify_mean_zero_c(&p).unwrap().verdict, Verdict::Infeasible);
    }

    #[test]
    fn attained_table_endpoint_is_necessary_only() {
        let mut p = arctan_boundary(2.0);
        p.alpha2 = Nonlinearity::table(vec![(-1.0, -1.0), (1.0, 1.0), (2.0, 1.0)]).unwrap();
        let r = certify_mean_zero_c(&p).unwrap();
        assert!(r.interval.upper_attained);
        assert_eq!(r.verdict, Verdict::NecessaryOnly);
    }

    #[test]
    fn positive_c_needs_ground_state() {
        let mesh = build_interval_mesh(0.0, 1.0, 8, &one, &one).unwrap();
        let load = ProductVector::zeros(&mesh);
        let p = WentzellProblem::new(mesh, 0.0, Nonlinearity::arctan(), Nonlinearity::zero(), load).unwrap();
        assert!(matches!(certify_mean_zero_c(&p), Err(Error::WrongCertificate(_))));
    }

    fn p3(mesh: &Mesh, alpha: Nonlinearity, f1: f64) -> (WentzellProblem, EigenResult) {
        let ops = assemble(mesh, 0.0).unwrap();
        let eig = smallest_eigenpair(&ops).unwrap();
        let load = ProductVector::new(vec![f1; mesh.num_nodes()], vec![0.0, 0.0]);
        let p = WentzellProblem::new(mesh.clone(), 0.0, alpha, Nonlinearity::zero(), load)
            .unwrap()
            .with_shift(eig.eigenvalue);
        (p, eig)
    }

    fn p3_mesh() -> Mesh {
        let c = 1.0 + 0.5f64.tan();
        build_interval_mesh(0.0, 1.0, 200, &one, &move |_| c).unwrap()
    }

    #[test]
    fn ground_state_zero_load() {
        let (p, eig) = p3(&p3_mesh(), Nonlinearity::arctan(), 0.0);
        let r = certify_ground_state(&p, &eig).unwrap();
        assert_eq!(r.verdict, Verdict::StrictlyFeasible);
        let g = r.ground_state.unwrap();
        assert!(g.load_projection.abs() < 1e-14);
        // Z = cos(x - 1/2)/‖cos(· - 1/2)‖, so min/max ratio is cos(1/2)
        assert!((g.min_z / g.max_z - 0.5f64.cos()).abs() < 1e-4);
    }

    #[test]
    fn ground_state_constant_load_projection() {
        let (p, eig) = p3(&p3_mesh(), Nonlinearity::arctan(), 2.0);
        let r = certify_ground_state(&p, &eig).unwrap();
        let g = r.ground_state.unwrap();
        let norm = (0.5 + 0.5 * 1f64.sin() + 2.0 * 0.5f64.cos().powi(2)).sqrt();
        let expected = 4.0 * 0.5f64.sin() / norm;
        assert!((g.load_projection - expected).abs() < 1e-4);
        assert!(g.nec_holds);
        assert!(g.suf_holds);
    }

    #[test]
    fn ground_state_power_any_load() {
        let (p, eig) = p3(&p3_mesh(), Nonlinearity::power(1.0, 2.0).unwrap(), -50.0);
        assert_eq!(
            certify_ground_state(&p, &eig).unwrap().verdict,
            Verdict::StrictlyFeasible
        );
    }

    #[test]
    fn ground_state_infeasible() {
        let (p, eig) = p3(&p3_mesh(), Nonlinearity::arctan(), 5.0);
        assert_eq!(certify_ground_state(&p, &eig).unwrap().verdict, Verdict::Infeasible);
    }

    #[test]
    fn audit_trivial_solution() {
        let mut p = arctan_boundary(0.0);
        p.alpha2 = Nonlinearity::zero();
        let u = ProductVector::zeros(&p.mesh);
        let a = necessity_audit_report(&p, &u).unwrap();
        assert_eq!(a.lhs, 0.0);
        assert!(a.passes);
    }

    #[test]
    fn audit_rejects_non_solution() {
        let p = arctan_boundary(1.0);
        assert!(!necessity_audit(&p, &ProductVector::constant(&p.mesh, 5.0)));
        // arctan(u) = 1/2 at both endpoints reproduces T = 1
        assert!(necessity_audit(&p, &ProductVector::constant(&p.mesh, 0.5f64.tan())));
    }
}
