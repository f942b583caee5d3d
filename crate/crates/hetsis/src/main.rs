use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use hetsis::core::dynamics::{default_horizon, default_step, integrate};
use hetsis::core::equilibrium::{maximal_equilibrium, maximal_equilibrium_ode, verify_equilibrium};
use hetsis::core::stability::check_maximality;
use hetsis::core::strategies::{calibrate_to_r0, cost, equilibrium_strategy, uniform_critical};
use hetsis::core::{
    basic_reproduction_number, effective_reproduction_number, Error, Profile, RadiusMethod,
    SisModel,
};
use hetsis::properties::{run_verify_properties, SuiteSizes, DEFAULT_SEED};
use hetsis::{io, tables};
use serde_json::json;

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_MISSING_DATA: u8 = 4;

#[derive(Parser)]
#[command(
    name = "hetsis",
    version,
    about = "Vaccination strategies for heterogeneous SIS epidemics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Model file (JSON with labels, mu, gamma, k)
    #[arg(long, global = true)]
    model: Option<PathBuf>,

    /// Strategy file (per-type CSV, the eta_equi column is the strategy)
    #[arg(long, global = true)]
    strategy: Option<PathBuf>,

    /// Age contact data (CSV)
    #[arg(long, global = true)]
    contacts: Option<PathBuf>,

    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Symmetrize non-reciprocal contact matrices
    #[arg(long, global = true)]
    reciprocity_fix: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Dense,
    Power,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    FixedPoint,
    Ode,
}

#[derive(Subcommand)]
enum Command {
    /// Basic reproduction number
    R0 {
        #[arg(long, value_enum, default_value_t = Method::Dense)]
        method: Method,
    },
    /// Effective reproduction number of a strategy
    Re {
        #[arg(long, value_enum, default_value_t = Method::Dense)]
        method: Method,
    },
    /// Maximal equilibrium, optionally under a strategy, as label,mu,gamma,g,eta_equi
    Equilibrium {
        #[arg(long, value_enum, default_value_t = Solver::FixedPoint)]
        solver: Solver,
        /// ODE horizon; defaults to 200 / min gamma
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Cost of a strategy, or of the equilibrium and uniform strategies
    Cost,
    /// Rescale the kernel to a target R0 and write the model
    Calibrate {
        #[arg(long)]
        target_r0: f64,
    },
    /// Integrate the dynamics and write the trajectory
    Simulate {
        /// Initial state, the same value for every type
        #[arg(long, default_value_t = 1.0)]
        initial: f64,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Evaluate the five maximality conditions at an equilibrium
    CheckMaximality {
        /// Equilibrium file (the g column); defaults to the maximal equilibrium
        #[arg(long)]
        equilibrium: Option<PathBuf>,
    },
    /// Equilibrium and uniform vaccination costs by population structure
    Table1,
    /// Per-group vaccination fractions at R0 = 2
    Table2,
    /// Run the randomized property suites
    VerifyProperties {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Test hook: flips the sign of the monotonicity perturbation
        #[arg(long, hide = true)]
        perturb: bool,
    },
}

#[derive(Debug)]
struct MissingData(String);

impl std::fmt::Display for MissingData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for MissingData {}

#[derive(Debug)]
struct SuiteFailed;

impl std::fmt::Display for SuiteFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("property suites failed")
    }
}

impl std::error::Error for SuiteFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<MissingData>().is_some() {
        return EXIT_MISSING_DATA;
    }
    if err.downcast_ref::<SuiteFailed>().is_some() {
        return EXIT_FAILURE;
    }
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::PowerIterationNotConverged { .. }
                | Error::EigenSolverFailed
                | Error::StepSizeUnderflow { .. }
                | Error::EquilibriumNotConverged { .. } => EXIT_NOT_CONVERGED,
                _ => EXIT_VALIDATION,
            };
        }
    }
    // unreadable or malformed input
    EXIT_VALIDATION
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            if err.downcast_ref::<SuiteFailed>().is_none() {
                eprintln!("error: {err:#}");
            }
            ExitCode::from(exit_code(&err))
        }
    }
}

fn model(cli: &Cli) -> anyhow::Result<SisModel> {
    let path = cli
        .model
        .as_deref()
        .ok_or_else(|| anyhow!("--model is required"))?;
    io::read_model(path)
}

fn strategy(cli: &Cli, m: &SisModel) -> anyhow::Result<Option<Profile>> {
    cli.strategy
        .as_deref()
        .map(|p| io::read_strategy(p, m))
        .transpose()
}

fn emit(cli: &Cli, text: &str) -> anyhow::Result<()> {
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &cli.out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => Ok(std::io::stdout().write_all(text.as_bytes())?),
    }
}

fn scalar(cli: &Cli, name: &str, value: f64) -> anyhow::Result<()> {
    match cli.format {
        Format::Csv => emit(cli, &format!("{name}\n{value}")),
        Format::Json => emit(cli, &json!({ name: value }).to_string()),
    }
}

fn radius_method(m: Method) -> RadiusMethod {
    match m {
        Method::Dense => RadiusMethod::Dense,
        Method::Power => RadiusMethod::Power,
    }
}

fn contacts(cli: &Cli) -> anyhow::Result<Option<hetsis::core::builders::AgeContactData>> {
    let Some(path) = cli.contacts.as_deref() else {
        return Ok(None);
    };
    if !path.exists() {
        return Err(MissingData(format!("contact data {} not found", path.display())).into());
    }
    let data = io::read_contacts(path)?;
    if !data.is_reciprocal() {
        if cli.reciprocity_fix {
            log::warn!(
                "contact matrix is not reciprocal (defect {:e}); symmetrizing",
                data.reciprocity_defect()
            );
        } else {
            log::warn!(
                "contact matrix is not reciprocal (defect {:e})",
                data.reciprocity_defect()
            );
        }
    }
    Ok(Some(data))
}

fn min_gamma(m: &SisModel) -> f64 {
    m.gamma().iter().copied().fold(f64::INFINITY, f64::min)
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    match &cli.command {
        Command::R0 { method } => {
            let m = model(cli)?;
            let r0 =
                hetsis::core::NextGenMatrix::basic(&m).spectral_radius(radius_method(*method))?;
            scalar(cli, "r0", r0)
        }
        Command::Re { method } => {
            let m = model(cli)?;
            let eta = strategy(cli, &m)?.ok_or_else(|| anyhow!("--strategy is required"))?;
            let re = hetsis::core::NextGenMatrix::new(&m, &eta)?
                .spectral_radius(radius_method(*method))?;
            scalar(cli, "re", re)
        }
        Command::Equilibrium { solver, t_end } => {
            let m = model(cli)?;
            let eta = strategy(cli, &m)?.unwrap_or_else(|| Profile::ones(m.n()));
            let result = match solver {
                Solver::FixedPoint => maximal_equilibrium(&m, &eta)?,
                Solver::Ode => {
                    let t_end = t_end.unwrap_or(200.0 / min_gamma(&m));
                    maximal_equilibrium_ode(&m, &eta, t_end)?
                }
            };
            if result.near_critical {
                log::warn!(
                    "R_e = {} is within the near-critical band",
                    result.reproduction_number
                );
            }
            match cli.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    io::write_equilibrium(&mut buf, &m, &result.g)?;
                    emit(cli, std::str::from_utf8(&buf)?)
                }
                Format::Json => {
                    let residual = verify_equilibrium(&m, &eta, &result.g)?;
                    emit(
                        cli,
                        &serde_json::to_string_pretty(&json!({
                            "labels": m.space().labels(),
                            "g": result.g.values(),
                            "eta_equi": result.g.complement().values(),
                            "prevalence": result.g.integral(m.space())?,
                            "residual_sup": residual.sup,
                            "iterations": result.iterations,
                            "method": format!("{:?}", result.method),
                            "reproduction_number": result.reproduction_number,
                            "near_critical": result.near_critical,
                        }))?,
                    )
                }
            }
        }
        Command::Cost => {
            let m = model(cli)?;
            let rows: Vec<(String, Profile)> = match strategy(cli, &m)? {
                Some(eta) => vec![("strategy".into(), eta)],
                None => vec![
                    ("equilibrium".into(), equilibrium_strategy(&m)?),
                    ("uniform".into(), uniform_critical(&m)?),
                ],
            };
            let mut evaluated = Vec::new();
            for (name, eta) in rows {
                evaluated.push((
                    name,
                    cost(&m, &eta)?,
                    effective_reproduction_number(&m, &eta)?,
                ));
            }
            match cli.format {
                Format::Csv => {
                    let mut s = String::from("strategy,cost,re\n");
                    for (name, c, re) in &evaluated {
                        s += &format!("{name},{c},{re}\n");
                    }
                    emit(cli, &s)
                }
                Format::Json => {
                    let rows: Vec<_> = evaluated
                        .iter()
                        .map(|(name, c, re)| json!({"strategy": name, "cost": c, "re": re}))
                        .collect();
                    emit(cli, &serde_json::to_string_pretty(&rows)?)
                }
            }
        }
        Command::Calibrate { target_r0 } => {
            let m = calibrate_to_r0(&model(cli)?, *target_r0)?;
            log::info!("calibrated R0 = {}", basic_reproduction_number(&m)?);
            match &cli.out {
                Some(path) => io::write_model(path, &m),
                None => emit(cli, &io::model_to_json(&m)),
            }
        }
        Command::Simulate { initial, t_end, dt } => {
            let m = model(cli)?;
            let eta = strategy(cli, &m)?.unwrap_or_else(|| Profile::ones(m.n()));
            let u0 = Profile::constant(m.n(), *initial)?;
            let t_end = t_end.unwrap_or_else(|| default_horizon(&m));
            let dt = dt.unwrap_or_else(|| default_step(&m));
            let traj = integrate(&m, &eta, &u0, t_end, dt)?;
            match cli.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    io::write_trajectory(&mut buf, &m, &traj)?;
                    emit(cli, std::str::from_utf8(&buf)?)
                }
                Format::Json => {
                    let states: Vec<&[f64]> = traj.states().iter().map(Profile::values).collect();
                    emit(
                        cli,
                        &json!({"labels": m.space().labels(), "t": traj.times(), "states": states})
                            .to_string(),
                    )
                }
            }
        }
        Command::CheckMaximality { equilibrium } => {
            let m = model(cli)?;
            let h = match equilibrium.as_deref() {
                Some(path) => io::read_equilibrium(path, &m)?,
                None => maximal_equilibrium(&m, &Profile::ones(m.n()))?.g,
            };
            let report = check_maximality(&m, &h)?;
            if !report.consistent {
                log::warn!("maximality verdicts disagree outside the threshold band");
            }
            emit(cli, &io::maximality_json(&report))
        }
        Command::Table1 => {
            let data = contacts(cli)?;
            let table = tables::run_table1(data.as_ref(), cli.reciprocity_fix)?;
            for notice in &table.notices {
                eprintln!("note: {notice}");
            }
            match cli.format {
                Format::Csv => emit(cli, &table.to_csv()),
                Format::Json => emit(cli, &table.to_json()),
            }
        }
        Command::Table2 => {
            let data = contacts(cli)?
                .ok_or_else(|| MissingData("table2 needs age contact data (--contacts)".into()))?;
            let table = tables::run_table2(&data, cli.reciprocity_fix)?;
            match cli.format {
                Format::Csv => emit(
                    cli,
                    &format!("{}above_50,{}\n", table.to_csv(), table.above_half),
                ),
                Format::Json => emit(cli, &table.to_json()),
            }
        }
        Command::VerifyProperties { seed, perturb } => {
            let report = run_verify_properties(*seed, SuiteSizes::default(), *perturb);
            emit(cli, &report.render())?;
            if report.passed() {
                Ok(())
            } else {
                Err(SuiteFailed.into())
            }
        }
    }
}
