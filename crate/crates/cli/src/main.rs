use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use semiloc::consistency::{solve_consistency, ConsistencyReport, DEFAULT_SOLVER_TOL};
use semiloc::fields::{make_potentials, Couplings};
use semiloc::observables::{density_factor, tilde_closed_form};
use semiloc::report::{run_suite, SuiteConfig, Tolerances, VerificationReport, DEFAULT_EPSILONS};
use semiloc::residual::{
    free_dirac_residual, interacting_dirac_residual, DerivativeMode, GridSpec,
};
use semiloc::state::{radial_psi_sq, uniform_grid, StateParams};
use semiloc::Error;

#[derive(Parser, Debug)]
#[command(
    name = "semiloc",
    version,
    about = "Semi-localized Dirac state: verification, solving and profiles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full check suite and emit a report.
    Verify(VerifyArgs),
    /// Solve the self-consistency conditions at one energy.
    Solve(SolveArgs),
    /// Tabulate radial profiles.
    Profile(ProfileArgs),
    /// Solve over a range of energies.
    Scan(ScanArgs),
    /// Measure the Dirac residual of a state.
    Residual(ResidualArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum CouplingChoice {
    /// alpha_f = 1, ell_z = 1
    Test,
    /// fine-structure alpha_f, ell_z = 1
    Physics,
}

impl CouplingChoice {
    fn couplings(self) -> Couplings {
        match self {
            Self::Test => Couplings::test(),
            Self::Physics => Couplings::physics(1.0).expect("unit ell_z is valid"),
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Free,
    Interacting,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Deriv {
    Analytic,
    Fd,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Column {
    Psi2,
    N,
    Phi,
    Az,
    #[value(name = "I")]
    I,
}

impl Column {
    fn header(self) -> &'static str {
        match self {
            Self::Psi2 => "psi2",
            Self::N => "n",
            Self::Phi => "phi",
            Self::Az => "az",
            Self::I => "I",
        }
    }
}

#[derive(clap::Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_epsilon, default_values_t = DEFAULT_EPSILONS.to_vec())]
    epsilon: Vec<f64>,
    #[arg(long, value_enum, default_value_t = CouplingChoice::Test)]
    couplings: CouplingChoice,
    /// Replace every check tolerance with this value.
    #[arg(long, value_parser = parse_positive)]
    tol: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(clap::Args, Debug)]
struct SolveArgs {
    #[arg(long, value_parser = parse_epsilon)]
    epsilon: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, value_parser = parse_positive, default_value_t = DEFAULT_SOLVER_TOL)]
    solver_tol: f64,
}

#[derive(clap::Args, Debug)]
struct StateArgs {
    #[arg(long, value_parser = parse_epsilon)]
    epsilon: f64,
    /// Defaults to the self-consistent value, as do theta and phi.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
}

impl StateArgs {
    fn params(&self, ell_z: f64) -> Result<StateParams, Failure> {
        let sc = StateParams::self_consistent(self.epsilon, ell_z)
            .map_err(|e| Failure::usage("--epsilon", e))?;
        StateParams::new(
            self.epsilon,
            self.beta.unwrap_or(sc.beta()),
            self.theta.unwrap_or(sc.theta()),
            self.phi.unwrap_or(sc.phi()),
            ell_z,
        )
        .map_err(|e| Failure::usage(state_flag(&e), e))
    }
}

#[derive(clap::Args, Debug)]
struct ProfileArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, value_enum, default_value_t = CouplingChoice::Test)]
    couplings: CouplingChoice,
    #[arg(long, value_parser = parse_positive, default_value_t = 10.0)]
    rho_max: f64,
    /// Defaults to rho_max / (points - 1).
    #[arg(long, value_parser = parse_positive)]
    rho_min: Option<f64>,
    #[arg(long, default_value_t = 101)]
    points: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Column::Psi2, Column::N, Column::Phi, Column::Az, Column::I])]
    columns: Vec<Column>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct ScanArgs {
    #[arg(long, value_parser = parse_epsilon, default_value_t = 1.1)]
    epsilon_min: f64,
    #[arg(long, value_parser = parse_epsilon, default_value_t = 10.0)]
    epsilon_max: f64,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, value_parser = parse_positive, default_value_t = DEFAULT_SOLVER_TOL)]
    solver_tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct ResidualArgs {
    #[command(flatten)]
    state: StateArgs,
    #[arg(long, value_enum, default_value_t = CouplingChoice::Test)]
    couplings: CouplingChoice,
    #[arg(long, value_enum, default_value_t = Mode::Interacting)]
    mode: Mode,
    /// `min,max,points`; defaults to 1e-3 .. 20/q_perp with 2048 points.
    #[arg(long, value_parser = parse_grid)]
    grid: Option<(f64, f64, usize)>,
    #[arg(long, value_enum, default_value_t = Deriv::Analytic)]
    deriv: Deriv,
    /// Also write `rho,residual` as CSV to this path.
    #[arg(long)]
    profile_out: Option<PathBuf>,
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 1.0 {
        Ok(v)
    } else {
        Err("must be a finite number > 1".into())
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err("must be a finite number > 0".into())
    }
}

fn parse_grid(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err("expected min,max,points".into());
    };
    let lo = parse_positive(lo)?;
    let hi = parse_positive(hi)?;
    let n = n.parse::<usize>().map_err(|e| format!("points: {e}"))?;
    if hi <= lo {
        return Err("max must exceed min".into());
    }
    Ok((lo, hi, n))
}

/// How a command failed; maps onto the exit code.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Check(String),
}

impl Failure {
    fn usage(flag: &str, e: impl std::fmt::Display) -> Self {
        Self::Usage(format!("{flag}: {e}"))
    }

    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Check(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::Tolerance { .. } => Self::Check(e.to_string()),
            Error::Domain { .. } | Error::Grid(_) | Error::Config(_) => Self::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self::Usage(format!("output: {e}"))
    }
}

fn state_flag(e: &Error) -> &'static str {
    match e {
        Error::Domain { name: "beta", .. } => "--beta",
        Error::Domain { name: "theta", .. } => "--theta",
        Error::Domain { name: "phi", .. } => "--phi",
        _ => "--epsilon",
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::usage("--out", e)),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn report_csv(report: &VerificationReport) -> String {
    let mut s = String::from("id,anchor,epsilon,status,value,tolerance\n");
    for c in &report.checks {
        let status = serde_json::to_value(c.status).expect("status serializes");
        let _ = writeln!(
            s,
            "{},\"{}\",{},{},{},{}",
            c.id,
            c.anchor,
            opt_num(c.epsilon),
            status.as_str().unwrap_or_default(),
            opt_num(c.value),
            num(c.tolerance)
        );
    }
    s
}

fn verify(args: VerifyArgs) -> Result<(), Failure> {
    let mut config = SuiteConfig {
        epsilons: args.epsilon,
        couplings: args.couplings.couplings(),
        ..SuiteConfig::default()
    };
    if let Some(tol) = args.tol {
        config.tolerances = Tolerances::uniform(tol);
    }
    let report = run_suite(&config)?;
    let text = match args.format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => report_csv(&report),
    };
    emit(args.out.as_ref(), &text)?;
    let failed: Vec<String> = report
        .failures()
        .map(|c| match c.epsilon {
            Some(e) => format!("{} (epsilon = {e})", c.id),
            None => c.id.clone(),
        })
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{} check(s) failed: {}",
            failed.len(),
            failed.join(", ")
        )))
    }
}

const SOLVE_HEADER: &str = "epsilon,theta,phi,beta,q_perp,residual_norm,matched_closed_form";

fn solve_row(r: &ConsistencyReport) -> String {
    format!(
        "{},{},{},{},{},{},{}\n",
        num(r.epsilon),
        num(r.theta_star),
        num(r.phi_star),
        num(r.beta_star),
        num(r.q_perp_star),
        num(r.residual_norm),
        r.matched_closed_form
    )
}

fn solve(args: SolveArgs) -> Result<(), Failure> {
    let report = solve_consistency(args.epsilon, args.solver_tol)?;
    let text = match args.format {
        Format::Csv => format!("{SOLVE_HEADER}\n{}", solve_row(&report)),
        Format::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
    };
    emit(None, &text)
}

fn profile(args: ProfileArgs) -> Result<(), Failure> {
    if args.format != Format::Csv {
        return Err(Failure::usage(
            "--format",
            "profiles are emitted as csv only",
        ));
    }
    if args.points < 2 {
        return Err(Failure::usage("--points", "need at least 2 points"));
    }
    let couplings = args.couplings.couplings();
    let params = args.state.params(couplings.ell_z)?;
    let rho_min = args
        .rho_min
        .unwrap_or(args.rho_max / (args.points - 1) as f64);
    if rho_min >= args.rho_max {
        return Err(Failure::usage("--rho-min", "must be below --rho-max"));
    }
    let grid = uniform_grid(rho_min, args.rho_max, args.points)
        .map_err(|e| Failure::usage("--points", e))?;
    let tilde = tilde_closed_form(&params);
    let n_t = density_factor(&params);
    let pots = make_potentials(&params, &couplings, &tilde);

    let mut s = String::from("rho");
    for c in &args.columns {
        s.push(',');
        s.push_str(c.header());
    }
    s.push('\n');
    for &rho in &grid {
        s.push_str(&num(rho));
        for c in &args.columns {
            let v = match c {
                Column::Psi2 => radial_psi_sq(&params, rho)?,
                Column::N => n_t * radial_psi_sq(&params, rho)?,
                Column::Phi => pots.phi(rho),
                Column::Az => pots.a_z(rho),
                Column::I => pots.integral(rho),
            };
            s.push(',');
            s.push_str(&num(v));
        }
        s.push('\n');
    }
    emit(args.out.as_ref(), &s)
}

fn scan(args: ScanArgs) -> Result<(), Failure> {
    if args.steps < 2 {
        return Err(Failure::usage("--steps", "must be at least 2"));
    }
    if args.epsilon_max <= args.epsilon_min {
        return Err(Failure::usage("--epsilon-max", "must exceed --epsilon-min"));
    }
    let span = args.epsilon_max - args.epsilon_min;
    let mut rows = Vec::with_capacity(args.steps);
    for i in 0..args.steps {
        let eps = if i + 1 == args.steps {
            args.epsilon_max
        } else {
            args.epsilon_min + span * i as f64 / (args.steps - 1) as f64
        };
        let r = solve_consistency(eps, args.solver_tol)?;
        let p = StateParams::new(eps, r.beta_star, r.theta_star, r.phi_star, 1.0)?;
        rows.push((eps, r.beta_star, p.q_z(), r.q_perp_star, r.residual_norm));
    }
    let text = match args.format {
        Format::Csv => {
            let mut s = String::from("epsilon,beta,q_z,q_perp,residual\n");
            for (e, b, qz, qp, res) in rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    num(e),
                    num(b),
                    num(qz),
                    num(qp),
                    num(res)
                );
            }
            s
        }
        Format::Json => {
            let list: Vec<_> = rows
                .into_iter()
                .map(|(e, b, qz, qp, res)| {
                    serde_json::json!({"epsilon": e, "beta": b, "q_z": qz, "q_perp": qp, "residual": res})
                })
                .collect();
            serde_json::to_string_pretty(&list).expect("rows serialize") + "\n"
        }
    };
    emit(args.out.as_ref(), &text)
}

fn residual(args: ResidualArgs) -> Result<(), Failure> {
    let couplings = args.couplings.couplings();
    let params = args.state.params(couplings.ell_z)?;
    let mode = match args.deriv {
        Deriv::Analytic => DerivativeMode::Analytic,
        Deriv::Fd => DerivativeMode::CentralFd,
    };
    let grid = match args.grid {
        Some((lo, hi, n)) => {
            GridSpec::new(lo, hi, n, mode).map_err(|e| Failure::usage("--grid", e))?
        }
        None => GridSpec::default_for(&params, mode),
    };
    let outcome = match args.mode {
        Mode::Free => free_dirac_residual(&params, &grid)?,
        Mode::Interacting => interacting_dirac_residual(&params, &couplings, &grid)?,
    };
    if let Some(path) = &args.profile_out {
        let mut s = String::from("rho,residual\n");
        for (rho, v) in outcome.profile.iter() {
            let _ = writeln!(s, "{},{}", num(rho), num(*v));
        }
        fs::write(path, s).map_err(|e| Failure::usage("--profile-out", e))?;
    }
    emit(None, &format!("{}\n", num(outcome.rel_norm)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => verify(a),
        Command::Solve(a) => solve(a),
        Command::Profile(a) => profile(a),
        Command::Scan(a) => scan(a),
        Command::Residual(a) => residual(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let msg = match &f {
                Failure::Usage(m) | Failure::Check(m) => m,
            };
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
