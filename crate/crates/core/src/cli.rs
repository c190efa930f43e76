//! Batch pipelines behind the `wentzell` binary: certify, solve, eigen,
//! half-space sweeps and parameter sweeps, with CSV/JSON emission.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{RunConfig, ShiftSpec};
use crate::geometry::{Dimension, Mesh, ProductVector};
use crate::halfspace::{boundary_symbol, estimate_constants, solve_frequency, zeta_range, FrequencyProblem};
use crate::operator::{assemble, weak_residual, WentzellProblem};
use crate::solvability::{
    certify_coercive, certify_ground_state, certify_mean_zero_c, necessity_audit_report, NecessityAudit,
    SolvabilityReport, Verdict,
};
use crate::solver::{energy, solve, SolveOutcome, SolveStatus};
use crate::spectral::{null_space_dim, smallest_eigenpair, EigenMethod, EigenResult};
use crate::{Error, Result};

/// Exit code when the solver stops without converging or diverging.
pub const EXIT_MAX_ITER: i32 = 4;

/// Relative window for treating a shift as the ground-state eigenvalue.
const RESONANCE_TOL: f64 = 1e-8;

/// Picks the certificate matching the problem: aggregate load for `c ≡ 0`,
/// otherwise the ground-state test at resonance or coercivity below it.
pub fn certify(problem: &WentzellProblem, ground_state: Option<&EigenResult>) -> Result<SolvabilityReport> {
    if problem.mesh.c_vanishes() {
        return certify_mean_zero_c(problem);
    }
    let computed;
    let eig = match ground_state {
        Some(e) => e,
        None => {
            computed = smallest_eigenpair(&assemble(&problem.mesh, problem.q)?)?;
            &computed
        }
    };
    let window = RESONANCE_TOL * eig.eigenvalue.abs().max(1.0);
    if problem.shift < eig.eigenvalue - window {
        Ok(certify_coercive(problem))
    } else if problem.shift <= eig.eigenvalue + window {
        certify_ground_state(problem, eig)
    } else {
        Err(Error::WrongCertificate(format!(
            "shift {} exceeds the smallest eigenvalue {}; no certificate applies",
            problem.shift, eig.eigenvalue
        )))
    }
}

pub fn run_check(config: &RunConfig) -> Result<SolvabilityReport> {
    let built = config.build()?;
    certify(&built.problem, built.ground_state.as_ref())
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveSummary {
    pub status: SolveStatus,
    pub iterations: usize,
    pub residual: f64,
    pub energy: f64,
    pub drift_rate: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SolveRun {
    pub report: Option<SolvabilityReport>,
    /// Set when the certificate is infeasible and the solve was skipped.
    pub refused: bool,
    pub outcome: Option<SolveOutcome>,
    pub audit: Option<NecessityAudit>,
    pub summary: Option<SolveSummary>,
    pub problem: WentzellProblem,
}

impl SolveRun {
    pub fn exit_code(&self) -> i32 {
        if self.refused {
            return Verdict::Infeasible.exit_code();
        }
        match self.outcome.as_ref().map(|o| o.status) {
            Some(SolveStatus::Converged) => 0,
            Some(SolveStatus::DivergedAlongNullspace) => 3,
            _ => EXIT_MAX_ITER,
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            certificate: Option<&'a SolvabilityReport>,
            refused: bool,
            solve: Option<&'a SolveSummary>,
            audit: Option<&'a NecessityAudit>,
        }
        serde_json::to_string_pretty(&View {
            certificate: self.report.as_ref(),
            refused: self.refused,
            solve: self.summary.as_ref(),
            audit: self.audit.as_ref(),
        })
        .expect("solve report serializes")
    }
}

/// Certify, then solve and audit. Without `force` an infeasible certificate
/// stops the pipeline before the solver runs.
pub fn run_solve(config: &RunConfig, force: bool) -> Result<SolveRun> {
    let built = config.build()?;
    let problem = built.problem;
    let report = match certify(&problem, built.ground_state.as_ref()) {
        Ok(r) => Some(r),
        Err(Error::WrongCertificate(_)) => None,
        Err(e) => return Err(e),
    };
    if !force && report.as_ref().is_some_and(|r| r.verdict == Verdict::Infeasible) {
        return Ok(SolveRun {
            report,
            refused: true,
            outcome: None,
            audit: None,
            summary: None,
            problem,
        });
    }
    let ops = problem.assemble()?;
    let outcome = solve(&problem, &ops, &config.solve_options())?;
    let audit = necessity_audit_report(&problem, &outcome.u)?;
    let summary = SolveSummary {
        status: outcome.status,
        iterations: outcome.iterations,
        residual: weak_residual(&problem, &ops, &outcome.u)?,
        energy: energy(&problem, &ops, &outcome.u)?,
        drift_rate: outcome.drift_rate,
    };
    Ok(SolveRun {
        report,
        refused: false,
        outcome: Some(outcome),
        audit: Some(audit),
        summary: Some(summary),
        problem,
    })
}

/// Nodal CSV: `node,x[,y],<column>,boundary`.
pub fn nodal_csv(mesh: &Mesh, values: &ProductVector, column: &str) -> String {
    let two_d = mesh.dimension() == Dimension::Two;
    let flags = mesh.is_boundary_node();
    let mut out = String::new();
    if two_d {
        let _ = writeln!(out, "node,x,y,{column},boundary");
    } else {
        let _ = writeln!(out, "node,x,{column},boundary");
    }
    for (i, (p, v)) in mesh.coords().iter().zip(values.interior()).enumerate() {
        let b = u8::from(flags[i]);
        if two_d {
            let _ = writeln!(out, "{i},{},{},{v:.15e},{b}", p[0], p[1]);
        } else {
            let _ = writeln!(out, "{i},{},{v:.15e},{b}", p[0]);
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenReport {
    pub eigenvalue: f64,
    pub next_eigenvalue: Option<f64>,
    pub gap: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub method: EigenMethod,
    pub min_z: f64,
    pub max_z: f64,
    pub null_space_dim: Option<usize>,
}

pub fn run_eigen(config: &RunConfig) -> Result<(EigenReport, EigenResult, Mesh)> {
    let mesh = config.mesh()?;
    let ops = assemble(&mesh, config.q_value()?)?;
    let eig = smallest_eigenpair(&ops)?;
    let null_dim = if mesh.num_nodes() < 2000 {
        Some(null_space_dim(&ops, 1e-8)?)
    } else {
        None
    };
    let report = EigenReport {
        eigenvalue: eig.eigenvalue,
        next_eigenvalue: eig.next_eigenvalue,
        gap: eig.gap(),
        residual: eig.residual,
        iterations: eig.iterations,
        method: eig.method,
        min_z: eig.min_value(),
        max_z: eig.max_value(),
        null_space_dim: null_dim,
    };
    Ok((report, eig, mesh))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HalfspaceParams {
    pub lambda: f64,
    pub b: f64,
    pub c: f64,
    pub q: f64,
    pub zeta_start: f64,
    pub zeta_end: f64,
    pub zeta_count: usize,
    pub g_hat: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HalfspaceReport {
    pub c_low: f64,
    pub c_high: f64,
    pub spread: f64,
    pub min_symbol: f64,
    pub max_boundary_residual: f64,
    pub max_growing_coefficient: f64,
}

/// Per-frequency sweep with unit boundary data; returns the summary and a
/// CSV with one row per `|ζ|`.
pub fn run_halfspace(p: &HalfspaceParams) -> Result<(HalfspaceReport, String)> {
    let sweep = zeta_range(p.zeta_start, p.zeta_end, p.zeta_count)
        .into_iter()
        .map(|z| Ok(FrequencyProblem::new(z, p.lambda, p.b, p.c, p.q)?.with_boundary_data(p.g_hat)))
        .collect::<Result<Vec<_>>>()?;
    let est = estimate_constants(&sweep)?;
    let mut csv = String::from("zeta,symbol,data_norm,solution_norm,ratio,boundary_residual,growing_coefficient\n");
    let mut min_symbol = f64::INFINITY;
    let mut max_bc: f64 = 0.0;
    let mut max_grow: f64 = 0.0;
    for (fp, r) in sweep.iter().zip(&est.ratios) {
        let sol = solve_frequency(fp)?;
        let sym = boundary_symbol(fp);
        min_symbol = min_symbol.min(sym);
        max_bc = max_bc.max(sol.boundary_residual.abs());
        max_grow = max_grow.max(sol.growing_coefficient);
        let _ = writeln!(
            csv,
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.3e},{:.3e}",
            fp.zeta, sym, r.data_norm, r.solution_norm, r.ratio, sol.boundary_residual, sol.growing_coefficient
        );
    }
    Ok((
        HalfspaceReport {
            c_low: est.c_low,
            c_high: est.c_high,
            spread: est.spread(),
            min_symbol,
            max_boundary_residual: max_bc,
            max_growing_coefficient: max_grow,
        },
        csv,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    LoadScale,
    Q,
    GridN,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "load-scale" => Ok(SweepParam::LoadScale),
            "q" => Ok(SweepParam::Q),
            "grid-n" => Ok(SweepParam::GridN),
            other => Err(Error::InvalidArgument(format!(
                "unknown sweep parameter `{other}` (expected load-scale, q or grid-n)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepTasks {
    pub check: bool,
    pub eigen: bool,
    pub solve: bool,
}

impl SweepTasks {
    /// Certificates for load sweeps, eigenvalues otherwise.
    pub fn default_for(param: SweepParam) -> Self {
        match param {
            SweepParam::LoadScale => SweepTasks {
                check: true,
                ..Self::default()
            },
            SweepParam::Q | SweepParam::GridN => SweepTasks {
                eigen: true,
                ..Self::default()
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub total_load: f64,
    pub verdict: Option<Verdict>,
    pub eigenvalue: Option<f64>,
    pub solve_status: Option<SolveStatus>,
    pub residual: Option<f64>,
    pub energy: Option<f64>,
    pub error: Option<String>,
}

/// Parses `start:end:count`.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidArgument(format!("range must be start:end:count, got `{spec}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let end: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(bad());
    }
    Ok(zeta_range(start, end, count))
}

fn config_for(base: &RunConfig, param: SweepParam, value: f64) -> Result<RunConfig> {
    let mut cfg = base.clone();
    match param {
        SweepParam::LoadScale => cfg.load_scale = value,
        SweepParam::Q => cfg.q = crate::config::ConstSpec::Number(value),
        SweepParam::GridN => {
            if !(value >= 2.0) || value.fract() != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "grid-n must be an integer >= 2, got {value}"
                )));
            }
            cfg.mesh = cfg.mesh.with_resolution(value as usize);
        }
    }
    Ok(cfg)
}

fn sweep_row(base: &RunConfig, param: SweepParam, value: f64, tasks: SweepTasks) -> SweepRow {
    let mut row = SweepRow {
        value,
        total_load: f64::NAN,
        verdict: None,
        eigenvalue: None,
        solve_status: None,
        residual: None,
        energy: None,
        error: None,
    };
    let result = (|| -> Result<()> {
        let cfg = config_for(base, param, value)?;
        let built = cfg.build()?;
        row.total_load = built.problem.total_load();
        let mut ground = built.ground_state.clone();
        if tasks.eigen && ground.is_none() {
            ground = Some(smallest_eigenpair(&built.problem.assemble()?)?);
        }
        row.eigenvalue = ground.as_ref().map(|g| g.eigenvalue);
        if tasks.check {
            row.verdict = Some(certify(&built.problem, ground.as_ref())?.verdict);
        }
        if tasks.solve {
            let ops = built.problem.assemble()?;
            let out = solve(&built.problem, &ops, &cfg.solve_options())?;
            row.solve_status = Some(out.status);
            row.residual = Some(out.residual);
            row.energy = Some(energy(&built.problem, &ops, &out.u)?);
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

fn thread_cap() -> Option<usize> {
    std::env::var("WENTZELL_THREADS")
        .ok()?
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
}

/// One row per parameter value, computed in parallel (capped by
/// `WENTZELL_THREADS`) and returned in input order.
pub fn run_sweep(config: &RunConfig, param: SweepParam, values: &[f64], tasks: SweepTasks) -> Result<Vec<SweepRow>> {
    if let ShiftSpec::Value(s) = config.shift {
        if !s.is_finite() {
            return Err(Error::InvalidArgument("shift must be finite".into()));
        }
    }
    let work = || -> Vec<SweepRow> { values.par_iter().map(|&v| sweep_row(config, param, v, tasks)).collect() };
    match thread_cap() {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|v| v.to_string()).unwrap_or_default()
}

fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Converged => "converged",
        SolveStatus::DivergedAlongNullspace => "diverged-along-nullspace",
        SolveStatus::MaxIter => "max-iter",
    }
}

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let name = match param {
        SweepParam::LoadScale => "load_scale",
        SweepParam::Q => "q",
        SweepParam::GridN => "grid_n",
    };
    let mut out = format!("{name},total_load,verdict,exit_code,eigenvalue,solve_status,residual,energy,error\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.12},{},{},{},{},{},{},{}",
            r.value,
            r.total_load,
            opt(&r.verdict),
            opt(&r.verdict.map(|v| v.exit_code())),
            opt(&r.eigenvalue.map(|v| format!("{v:.15e}"))),
            r.solve_status.map(status_name).unwrap_or_default(),
            opt(&r.residual.map(|v| format!("{v:.3e}"))),
            opt(&r.energy.map(|v| format!("{v:.15e}"))),
            r.error.as_deref().unwrap_or_default().replace(',', ";"),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::preset;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
    }

    #[test]
    fn check_presets() {
        assert_eq!(run_check(&preset("e4.7-arctan").unwrap()).unwrap().exit_code(), 0);
        let mut cfg = preset("e4.7-arctan").unwrap();
        cfg.load_scale = 3.2 / 3.0;
        assert_eq!(run_check(&cfg).unwrap().exit_code(), 3);
    }

    #[test]
    fn linear_compatible_check() {
        let mut cfg = preset("e4.7-arctan").unwrap();
        cfg.alpha2 = crate::config::FamilySpec::Zero;
        cfg.load_scale = 0.0;
        assert_eq!(run_check(&cfg).unwrap().exit_code(), 0);
    }

    #[test]
    fn coercive_problem() {
        let cfg = preset("example-2.1").unwrap();
        let r = run_check(&cfg).unwrap();
        assert_eq!(r.certificate, crate::solvability::Certificate::Coercive);
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn solve_refuses_infeasible() {
        let mut cfg = preset("e4.7-arctan").unwrap();
        cfg.load_scale = 1.1 * std::f64::consts::PI / 3.0;
        let run = run_solve(&cfg, false).unwrap();
        assert!(run.refused);
        assert_eq!(run.exit_code(), 3);
        let forced = run_solve(&cfg, true).unwrap();
        assert_eq!(forced.outcome.unwrap().status, SolveStatus::DivergedAlongNullspace);
        assert!(forced.summary.is_some());
    }

    #[test]
    fn solve_example_csv() {
        let run = run_solve(&preset("example-2.1").unwrap(), false).unwrap();
        assert_eq!(run.exit_code(), 0);
        let out = run.outcome.unwrap();
        let csv = nodal_csv(&run.problem.mesh, &out.u, "u");
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("node,x,u,boundary"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "0");
        assert!((first[2].parse::<f64>().unwrap() - 4.0 / 3.0).abs() < 1e-10);
        assert_eq!(first[3], "1");
        assert!(run.audit.unwrap().passes);
    }

    #[test]
    fn sweep_is_ordered_and_deterministic() {
        let cfg = preset("e4.7-arctan").unwrap();
        let values = parse_range("0.9:1.1:5").unwrap();
        let tasks = SweepTasks::default_for(SweepParam::LoadScale);
        let a = sweep_csv(
            SweepParam::LoadScale,
            &run_sweep(&cfg, SweepParam::LoadScale, &values, tasks).unwrap(),
        );
        let b = sweep_csv(
            SweepParam::LoadScale,
            &run_sweep(&cfg, SweepParam::LoadScale, &values, tasks).unwrap(),
        );
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 6);
        assert!(a.lines().nth(1).unwrap().starts_with("0.9,"));
    }

    #[test]
    fn halfspace_summary() {
        let (rep, csv) = run_halfspace(&HalfspaceParams {
            lambda: 1.0,
            b: 1.0,
            c: 0.0,
            q: 0.0,
            zeta_start: 0.0,
            zeta_end: 100.0,
            zeta_count: 8,
            g_hat: 1.0,
        })
        .unwrap();
        assert!(rep.min_symbol >= 1.0);
        assert_eq!(csv.lines().count(), 9);
    }
}
