use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wentzell::cli::{
    nodal_csv, parse_range, run_check, run_eigen, run_halfspace, run_solve, run_sweep, sweep_csv, HalfspaceParams,
    SweepParam, SweepTasks,
};
use wentzell::config::{preset, preset_names, ConstSpec, RunConfig};
use wentzell::Result;

#[derive(Parser)]
#[command(
    name = "wentzell",
    version,
    about = "Semilinear Wentzell problems: certify, solve, eigen, half-space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Name of a built-in preset.
    #[arg(long)]
    preset: Option<String>,
    /// Multiplies the loads f and g.
    #[arg(long)]
    load_scale: Option<f64>,
    /// Cells per direction, overriding the mesh resolution.
    #[arg(long)]
    grid_n: Option<usize>,
    /// Laplace–Beltrami weight, overriding the config.
    #[arg(long)]
    q: Option<f64>,
}

impl Source {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match (&self.config, &self.preset) {
            (Some(path), _) => RunConfig::from_file(path)?,
            (None, Some(name)) => preset(name)?,
            (None, None) => {
                return Err(wentzell::Error::InvalidArgument(format!(
                    "pass --config FILE or --preset NAME (presets: {})",
                    preset_names().join(", ")
                )))
            }
        };
        if let Some(s) = self.load_scale {
            cfg.load_scale = s;
        }
        if let Some(n) = self.grid_n {
            cfg.mesh = cfg.mesh.with_resolution(n);
        }
        if let Some(q) = self.q {
            cfg.q = ConstSpec::Number(q);
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Solvability certificate; exit 0 strictly feasible, 2 necessary only, 3 infeasible.
    Check {
        #[command(flatten)]
        source: Source,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Certify, solve and audit; writes the solution CSV.
    Solve {
        #[command(flatten)]
        source: Source,
        /// Run the solver even when the certificate says infeasible.
        #[arg(long)]
        force: bool,
        /// Solution CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Smallest eigenpair of the linear operator.
    Eigen {
        #[command(flatten)]
        source: Source,
        /// Eigenvector CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Half-space frequency sweep with unit boundary data.
    Halfspace {
        /// Spectral parameter λ > 0.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        /// Boundary weight b.
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Robin coefficient c.
        #[arg(long, default_value_t = 0.0)]
        c: f64,
        /// Laplace–Beltrami weight.
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        /// Frequencies as start:end:count.
        #[arg(long, default_value = "0:100:64")]
        zeta: String,
        /// Boundary datum amplitude.
        #[arg(long, default_value_t = 1.0)]
        g: f64,
        /// Per-frequency CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One row per parameter value (load-scale, q or grid-n).
    Sweep {
        #[command(flatten)]
        source: Source,
        /// load-scale, q or grid-n.
        #[arg(long)]
        param: String,
        /// Values as start:end:count.
        #[arg(long)]
        range: String,
        /// Certify at each value.
        #[arg(long)]
        check: bool,
        /// Smallest eigenvalue at each value.
        #[arg(long)]
        eigen: bool,
        /// Solve at each value.
        #[arg(long)]
        solve: bool,
        /// CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Check { source, report } => {
            let rep = run_check(&source.load()?)?;
            let json = rep.to_json();
            println!("{json}");
            if let Some(p) = report {
                std::fs::write(p, format!("{json}\n"))?;
            }
            eprintln!("{}", rep.summary());
            Ok(rep.exit_code())
        }
        Command::Solve {
            source,
            force,
            out,
            report,
        } => {
            let run = run_solve(&source.load()?, force)?;
            let json = run.to_json();
            println!("{json}");
            if let Some(p) = report {
                std::fs::write(p, format!("{json}\n"))?;
            }
            if run.refused {
                eprintln!("certificate is infeasible; not solving (use --force to override)");
            } else if let (Some(outcome), Some(p)) = (&run.outcome, out) {
                std::fs::write(p, nodal_csv(&run.problem.mesh, &outcome.u, "u"))?;
            }
            if let Some(s) = &run.summary {
                eprintln!(
                    "{:?} after {} iterations, residual {:.3e}",
                    s.status, s.iterations, s.residual
                );
            }
            Ok(run.exit_code())
        }
        Command::Eigen { source, out } => {
            let (rep, eig, mesh) = run_eigen(&source.load()?)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&rep).expect("eigen report serializes")
            );
            if let Some(p) = out {
                std::fs::write(p, nodal_csv(&mesh, &eig.vector, "z"))?;
            }
            Ok(0)
        }
        Command::Halfspace {
            lambda,
            b,
            c,
            q,
            zeta,
            g,
            out,
        } => {
            let zs = parse_range(&zeta)?;
            let params = HalfspaceParams {
                lambda,
                b,
                c,
                q,
                zeta_start: zs[0],
                zeta_end: *zs.last().unwrap(),
                zeta_count: zs.len(),
                g_hat: g,
            };
            let (rep, csv) = run_halfspace(&params)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&rep).expect("half-space report serializes")
            );
            if let Some(p) = out {
                std::fs::write(p, csv)?;
            }
            Ok(0)
        }
        Command::Sweep {
            source,
            param,
            range,
            check,
            eigen,
            solve,
            out,
        } => {
            let param: SweepParam = param.parse()?;
            let tasks = if check || eigen || solve {
                SweepTasks { check, eigen, solve }
            } else {
                SweepTasks::default_for(param)
            };
            let rows = run_sweep(&source.load()?, param, &parse_range(&range)?, tasks)?;
            write_or_print(out.as_deref(), &sweep_csv(param, &rows))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
