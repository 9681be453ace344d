//! Command-line frontend: analyze problem configs, simulate orbit
//! norms, run reproduction suites, fit admissibility constants and
//! evaluate the hypercyclicity criterion.
//!
//! Exit codes for `analyze`: 0 = Stable, 1 = Unstable,
//! 2 = Inconclusive; config/usage errors exit 3, runtime failures 4.

mod suites;

use std::io::Write;
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use semistab::config::{parse_problem, serialize_problem};
use semistab::error::EngineError;
use semistab::expr::Expr;
use semistab::lasota::{hypercyclicity_check, SequenceSpec};
use semistab::model::{validate_hypotheses, ProblemSpec, SpaceKind};
use semistab::report::{curves_to_csv, format_float, Report, RunMeta};
use semistab::sobolev::{apply_semigroup_sobolev, sobolev_norm, SobolevFunction};
use semistab::stability::{classify, Status};
use semistab::weights::{SampledFunction, WeightEvolution};

#[derive(Parser)]
#[command(
    name = "semistab",
    about = "Weighted composition semigroups: stability analysis and orbit-norm simulation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ToleranceFlags {
    /// Relative ODE tolerance (default 1e-10)
    #[arg(long)]
    tol_ode: Option<f64>,
    /// Absolute ODE tolerance (default 1e-12)
    #[arg(long)]
    tol_ode_abs: Option<f64>,
    /// Relative quadrature tolerance (default 1e-10)
    #[arg(long)]
    tol_quad: Option<f64>,
    /// Equilibrium detection threshold in units of max |F| (default 1e-10)
    #[arg(long)]
    zero_tol: Option<f64>,
    /// Log-curve trend tolerance (default 1e-3)
    #[arg(long)]
    slope_tol: Option<f64>,
    /// Relative decay threshold (default 1e-6)
    #[arg(long)]
    value_tol: Option<f64>,
    /// Late-window rise tolerance for boundedness (default 5e-3)
    #[arg(long)]
    bound_tol: Option<f64>,
    /// Divergence-to-minus-infinity threshold (default 20)
    #[arg(long)]
    divergence_threshold: Option<f64>,
}

impl ToleranceFlags {
    fn apply(&self, spec: &mut ProblemSpec) {
        if let Some(v) = self.tol_ode {
            spec.tol.tol_ode_rel = v;
        }
        if let Some(v) = self.tol_ode_abs {
            spec.tol.tol_ode_abs = v;
        }
        if let Some(v) = self.tol_quad {
            spec.tol.tol_quad = v;
        }
        if let Some(v) = self.zero_tol {
            spec.tol.zero_tol = v;
        }
        if let Some(v) = self.slope_tol {
            spec.tol.slope_tol = v;
        }
        if let Some(v) = self.value_tol {
            spec.tol.value_tol = v;
        }
        if let Some(v) = self.bound_tol {
            spec.tol.bound_tol = v;
        }
        if let Some(v) = self.divergence_threshold {
            spec.tol.divergence_threshold = v;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify stability of the configured problem
    Analyze {
        /// Problem config file
        config: std::path::PathBuf,
        /// Time horizon for the sampled criteria (config default: 20)
        #[arg(long)]
        horizon: Option<f64>,
        /// Emit the structured report as JSON
        #[arg(long)]
        json: bool,
        /// Write the report to a file instead of stdout
        #[arg(long)]
        output: Option<std::path::PathBuf>,
        #[command(flatten)]
        tol: ToleranceFlags,
    },
    /// Simulate the orbit-norm curve t -> ||T(t) f||
    Simulate {
        /// Problem config file
        config: std::path::PathBuf,
        /// Function to transport (expression in x)
        #[arg(long, default_value = "1")]
        f: String,
        /// Power exponent of f at the left endpoint: f ~ (x-a)^(-alpha)
        #[arg(long)]
        f_singularity: Option<f64>,
        /// Simulation horizon
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        /// Number of time steps (rows = steps + 1)
        #[arg(long, default_value_t = 50)]
        steps: usize,
        /// Use the Sobolev norm of the transported function
        #[arg(long)]
        sobolev: bool,
        /// Write the CSV to a file instead of stdout
        #[arg(long)]
        output: Option<std::path::PathBuf>,
        #[command(flatten)]
        tol: ToleranceFlags,
    },
    /// Run a reproduction suite and compare against the predictions
    Reproduce {
        /// One of: lasota_lp, lasota_sobolev, generalized,
        /// hypercyclicity, examples_sec2
        suite: String,
        /// Emit CSV instead of the aligned table
        #[arg(long)]
        csv: bool,
    },
    /// Fit the exponential bound rho_tp <= M e^(omega t) rho
    Admissibility {
        /// Problem config file
        config: std::path::PathBuf,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        tol: ToleranceFlags,
    },
    /// Evaluate the two-sided weight-decay hypercyclicity criterion
    Hypercyclicity {
        /// Problem config file
        config: std::path::PathBuf,
        /// Comma-separated sample points (default: domain midpoint)
        #[arg(long)]
        points: Option<String>,
        /// Sequence increment t_n = n dt
        #[arg(long, default_value_t = 0.5)]
        dt: f64,
        /// Number of sequence terms
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long)]
        json: bool,
        #[command(flatten)]
        tol: ToleranceFlags,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(error_exit_code(&e))
        }
    }
}

fn error_exit_code(e: &EngineError) -> u8 {
    match e {
        EngineError::Parse { .. }
        | EngineError::UnknownFamily(_)
        | EngineError::InvalidExponent(_)
        | EngineError::SobolevUnboundedDomain
        | EngineError::SobolevNonvanishingField(_)
        | EngineError::NotInSpace(_)
        | EngineError::UnknownSuite(_)
        | EngineError::InvalidArgument(_)
        | EngineError::EmptyGrid => 3,
        _ => 4,
    }
}

fn read_config(path: &std::path::Path) -> Result<ProblemSpec, EngineError> {
    let text = std::fs::read_to_string(path).map_err(|e| EngineError::Parse {
        line: 0,
        field: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_problem(&text)
}

fn write_out(path: &Option<std::path::PathBuf>, body: &str) -> Result<(), EngineError> {
    match path {
        None => {
            print!("{}", body);
            Ok(())
        }
        Some(p) => {
            let mut f = std::fs::File::create(p).map_err(|e| EngineError::Parse {
                line: 0,
                field: p.display().to_string(),
                message: e.to_string(),
            })?;
            f.write_all(body.as_bytes())
                .map_err(|e| EngineError::Parse {
                    line: 0,
                    field: p.display().to_string(),
                    message: e.to_string(),
                })
        }
    }
}

fn timestamp_header(kind: &str) -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# semistab {} at unix {}\n", kind, secs)
}

fn run(cli: Cli) -> Result<ExitCode, EngineError> {
    match cli.command {
        Command::Analyze {
            config,
            horizon,
            json,
            output,
            tol,
        } => {
            let started = Instant::now();
            let mut spec = read_config(&config)?;
            tol.apply(&mut spec);
            let horizon = horizon.unwrap_or(spec.sampling.horizon);

            let hypotheses = validate_hypotheses(&spec, horizon.min(10.0));
            let we = WeightEvolution::new(spec.clone());
            let fit = we.admissibility_fit(horizon, &spec.default_grid())?;
            if fit.refuted {
                return Err(EngineError::AdmissibilityRefuted);
            }

            let mut verdicts = Vec::new();
            match spec.space {
                SpaceKind::Lp => {
                    verdicts.push(("Lp".to_string(), classify(&spec, horizon)?));
                }
                SpaceKind::W1pStar => {
                    let (star, _) = semistab::sobolev::classify_stability_sobolev(&spec, horizon)?;
                    verdicts.push(("W1p_star".to_string(), star));
                }
                SpaceKind::W1p => {
                    let (star, full) =
                        semistab::sobolev::classify_stability_sobolev(&spec, horizon)?;
                    verdicts.push(("W1p_star".to_string(), star));
                    verdicts.push(("W1p".to_string(), full));
                }
            }

            let report = Report {
                problem: serialize_problem(&spec).unwrap_or_else(|_| "<unserializable>".into()),
                hypotheses: Some(hypotheses),
                admissibility: Some(fit),
                verdicts,
                meta: RunMeta {
                    horizon,
                    grid_n: spec.sampling.grid_n,
                    time_samples: spec.sampling.time_samples,
                    seed: spec.sampling.seed,
                    wall_ms: started.elapsed().as_millis(),
                },
            };
            let body = if json {
                report.to_json()
            } else {
                report.render_text()
            };
            write_out(&output, &body)?;
            Ok(match report.overall_status() {
                Status::Stable => ExitCode::from(0),
                Status::Unstable => ExitCode::from(1),
                Status::Inconclusive => ExitCode::from(2),
            })
        }

        Command::Simulate {
            config,
            f,
            f_singularity,
            horizon,
            steps,
            sobolev,
            output,
            tol,
        } => {
            let mut spec = read_config(&config)?;
            tol.apply(&mut spec);
            let expr = Expr::parse(&f)?;
            let steps = steps.max(1);
            let ts: Vec<f64> = (0..=steps)
                .map(|k| horizon * k as f64 / steps as f64)
                .collect();
            let we = WeightEvolution::new(spec.clone());

            let mut rows = Vec::new();
            if sobolev {
                let a = spec.left_endpoint();
                let deriv = expr.derivative();
                let e2 = expr.clone();
                let mut func = SobolevFunction::new(
                    f.clone(),
                    move |x| e2.eval(x),
                    move |x| deriv.eval(x),
                    expr.eval(a),
                );
                func.deriv_left_singularity = f_singularity;
                // membership check up front
                sobolev_norm(&spec, &func)?;
                for &t in &ts {
                    let g = apply_semigroup_sobolev(&we, t, &func)?;
                    rows.push(vec![t, sobolev_norm(&spec, &g)?]);
                }
            } else {
                let e2 = expr.clone();
                let func = SampledFunction::new(
                    f.clone(),
                    std::sync::Arc::new(move |x| e2.eval(x)),
                    f_singularity,
                );
                we.lp_norm(&func)?;
                for &t in &ts {
                    rows.push(vec![t, we.lp_norm(&we.apply_semigroup(t, &func))?]);
                }
            }
            let mut body = timestamp_header("simulate");
            body.push_str(&curves_to_csv(&["t", "norm"], &rows));
            write_out(&output, &body)?;
            Ok(ExitCode::from(0))
        }

        Command::Reproduce { suite, csv } => {
            let result = suites::run_suite(&suite)?;
            if csv {
                let mut body = timestamp_header("reproduce");
                body.push_str("case,predicted,engine,agree\n");
                for r in &result.rows {
                    body.push_str(&format!(
                        "{},{},{},{}\n",
                        r.case, r.predicted, r.engine, r.agree
                    ));
                }
                print!("{}", body);
            } else {
                println!("suite: {}", result.name);
                let width = result.rows.iter().map(|r| r.case.len()).max().unwrap_or(4);
                for r in &result.rows {
                    println!(
                        "  {:width$}  predicted {:12}  engine {:12}  {}",
                        r.case,
                        r.predicted,
                        r.engine,
                        if r.agree { "agree" } else { "DISAGREE" },
                        width = width
                    );
                }
                let n_agree = result.rows.iter().filter(|r| r.agree).count();
                println!("{}/{} rows agree", n_agree, result.rows.len());
            }
            Ok(if result.all_agree() {
                ExitCode::from(0)
            } else {
                ExitCode::from(1)
            })
        }

        Command::Admissibility {
            config,
            horizon,
            json,
            tol,
        } => {
            let mut spec = read_config(&config)?;
            tol.apply(&mut spec);
            let horizon = horizon.unwrap_or(spec.sampling.horizon);
            let we = WeightEvolution::new(spec.clone());
            let fit = we.admissibility_fit(horizon, &spec.default_grid())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&fit).unwrap());
            } else {
                println!(
                    "M = {:.6e}, omega = {:.6}, refuted = {}, max_violation = {:.3e} ({} grid points)",
                    fit.m, fit.omega, fit.refuted, fit.max_violation, fit.grid_size
                );
            }
            Ok(ExitCode::from(0))
        }

        Command::Hypercyclicity {
            config,
            points,
            dt,
            count,
            json,
            tol,
        } => {
            let mut spec = read_config(&config)?;
            tol.apply(&mut spec);
            let pts: Vec<f64> = match points {
                Some(s) => s
                    .split(',')
                    .map(|p| {
                        p.trim().parse::<f64>().map_err(|_| EngineError::Parse {
                            line: 0,
                            field: "points".into(),
                            message: format!("bad point `{}`", p),
                        })
                    })
                    .collect::<Result<_, _>>()?,
                None => {
                    let iv = spec.domain.intervals[0].clipped(spec.sampling.window);
                    vec![0.5 * (iv.lo + iv.hi)]
                }
            };
            let we = WeightEvolution::new(spec.clone());
            let evidence = hypercyclicity_check(&we, &pts, SequenceSpec { dt, count })?;
            if json {
                println!("{}", serde_json::to_string_pretty(&evidence).unwrap());
            } else {
                println!(
                    "candidate = {} (omega0 measure zero: {})",
                    evidence.candidate, evidence.omega0_measure_zero
                );
                for (i, &x) in evidence.points.iter().enumerate() {
                    println!(
                        "  x = {}: rho_tp({:.1}) = {}, rho_-tp({:.1}) = {}",
                        x,
                        evidence.t_final,
                        format_float(evidence.final_forward[i]),
                        evidence.t_final,
                        format_float(evidence.final_backward[i]),
                    );
                }
            }
            Ok(ExitCode::from(0))
        }
    }
}
