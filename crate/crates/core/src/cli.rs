//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or validation failure, 2 solver did not
//! converge, 3 exhaustive enumeration over the size cap.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::best_response::{best_response, binomial, curvature, reverse_greedy, BestResponseMode, DEFAULT_ENUMERATION_CAP};
use crate::colgen::{solve_colgen_traced, ColGenConfig, EquilibriumResult};
use crate::error::{Error, Result, ValidationError};
use crate::game::{top_k_sum, DetectorSet, InspectionInstance, MarginalAttackVector, MixedDefenderStrategy};
use crate::io::{
    generate_geometric, instance_to_json, parse_instance, parse_vector, serialize_result, GeometricConfig,
};
use crate::mwu::{solve_mwu_traced, MwuConfig, Schedule};
use crate::projection::{project_linear, project_sorted, PositiveVector};

#[derive(Debug, Parser)]
#[command(name = "inspection-game", version, about = "Solve and certify inspection games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute an (approximate) equilibrium.
    Solve(SolveArgs),
    /// Write a random geometric instance.
    Generate(GenerateArgs),
    /// Evaluate a defender strategy and attacker marginal.
    Certify(CertifyArgs),
    /// Project a positive vector onto the capped simplex.
    Project(ProjectArgs),
    /// Defender best response to an attacker marginal.
    BestResponse(BestResponseArgs),
    /// Solve for several defender budgets and emit CSV.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    CgExact,
    CgFg,
    CgRg,
    MwuFg,
    MwuRg,
    MwuExact,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::CgExact => "cg-exact",
            Method::CgFg => "cg-fg",
            Method::CgRg => "cg-rg",
            Method::MwuFg => "mwu-fg",
            Method::MwuRg => "mwu-rg",
            Method::MwuExact => "mwu-exact",
        }
    }

    fn oracle(self, cap: u128) -> BestResponseMode {
        match self {
            Method::CgExact | Method::MwuExact => BestResponseMode::Exact { cap },
            Method::CgFg | Method::MwuFg => BestResponseMode::ForwardGreedy,
            Method::CgRg | Method::MwuRg => BestResponseMode::ReverseGreedy,
        }
    }

    fn is_mwu(self) -> bool {
        matches!(self, Method::MwuFg | Method::MwuRg | Method::MwuExact)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProjectAlgo {
    Sorted,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BrAlgo {
    Exact,
    Fg,
    Rg,
}

#[derive(Debug, Args)]
struct SolverArgs {
    #[arg(long, value_enum)]
    method: Method,
    /// Additive tolerance; defaults to 0.001 times the number of components.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Iteration cap for column generation, or the exact number of rounds
    /// for multiplicative weights.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Largest number of placements the exact oracle may enumerate.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    exact_br_cap: u128,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    instance: PathBuf,
    /// Result document path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-iteration log.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Record wall-clock time in the result document.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, default_value_t = 20)]
    n: usize,
    /// Target number of components.
    #[arg(long, default_value_t = 60)]
    m: usize,
    #[arg(long, default_value_t = 0.15)]
    radius: f64,
    #[arg(long, default_value_t = 0.5)]
    p_low: f64,
    #[arg(long, default_value_t = 1.0)]
    p_high: f64,
    #[arg(long, default_value_t = 0.02)]
    r_a_fraction: f64,
    #[arg(long, default_value_t = 1)]
    r_d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Document with `sigma_D` and optionally `rho_A`, e.g. a solve result.
    #[arg(long)]
    strategy: PathBuf,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    exact_br_cap: u128,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ProjectArgs {
    #[arg(long)]
    rho_tilde: PathBuf,
    #[arg(long)]
    r_a: usize,
    #[arg(long, value_enum, default_value_t = ProjectAlgo::Linear)]
    algo: ProjectAlgo,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BestResponseArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    rho: PathBuf,
    #[arg(long, value_enum, default_value_t = BrAlgo::Exact)]
    algo: BrAlgo,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    exact_br_cap: u128,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    solver: SolverArgs,
    #[arg(long)]
    instance: PathBuf,
    /// Comma-separated defender budgets.
    #[arg(long, value_delimiter = ',', required = true)]
    r_d: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Diagnostics go to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonConvergence { .. } => 2,
        Error::SizeLimit { .. } => 3,
        _ => 1,
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Solve(args) => solve(args),
        Command::Generate(args) => generate(args),
        Command::Certify(args) => certify_cmd(args),
        Command::Project(args) => project(args),
        Command::BestResponse(args) => best_response_cmd(args),
        Command::Sweep(args) => sweep(args),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    s
}

fn load_instance(path: &Path) -> Result<InspectionInstance> {
    parse_instance(&read(path)?)
}

/// Runs one solver; the trace sink receives one line per iteration.
fn run_solver(instance: &InspectionInstance, args: &SolverArgs, trace: &mut String) -> Result<EquilibriumResult> {
    let epsilon = args.epsilon.unwrap_or(0.001 * instance.m() as f64);
    let oracle = args.method.oracle(args.exact_br_cap);
    if args.method.is_mwu() {
        let schedule = match args.max_iter {
            Some(rounds) => Schedule::Rounds(rounds),
            None => Schedule::Epsilon(epsilon),
        };
        let config = MwuConfig {
            schedule,
            eta: None,
            best_response: oracle,
        };
        let mut coeffs = vec![0.0; instance.m()];
        let mut realized = 0.0;
        solve_mwu_traced(instance, &config, |it| {
            for (c, u) in coeffs.iter_mut().zip(instance.undetection_vector(&it.set)) {
                *c += u;
            }
            realized += it.value;
            let regret = top_k_sum(&coeffs, instance.r_a()) - realized;
            let _ = writeln!(trace, "{} {} {}", it.iteration, it.value, regret);
        })
    } else {
        let mut config = ColGenConfig::new(oracle, epsilon);
        if let Some(cap) = args.max_iter {
            config.max_iterations = cap;
        }
        solve_colgen_traced(instance, &config, |it| {
            let _ = writeln!(trace, "{} {} {}", it.iteration, it.master_value, it.reduced_cost);
        })
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let mut trace = String::new();
    let outcome = run_solver(&instance, &args.solver, &mut trace);
    if let Some(path) = &args.trace {
        fs::write(path, &trace)?;
    }
    let write_result = |mut result: EquilibriumResult| -> Result<()> {
        if !args.timing {
            result.wall_ms = None;
        }
        emit(args.out.as_deref(), &serialize_result(&result, &instance))
    };
    match outcome {
        Ok(result) => write_result(result),
        Err(Error::NonConvergence { iterations, incumbent }) => {
            write_result((*incumbent).clone())?;
            Err(Error::NonConvergence { iterations, incumbent })
        }
        Err(e) => Err(e),
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let config = GeometricConfig {
        n: args.n,
        m_target: args.m,
        radius: args.radius,
        p_low: args.p_low,
        p_high: args.p_high,
        r_a_fraction: args.r_a_fraction,
        r_d: args.r_d,
        seed: args.seed,
    };
    emit(args.out.as_deref(), &instance_to_json(&generate_geometric(&config)?))
}

fn location_ids(instance: &InspectionInstance, names: &Value) -> Result<DetectorSet> {
    let names = names
        .as_array()
        .ok_or_else(|| ValidationError::Schema("\"set\" must be an array of location names".into()))?;
    let mut ids = Vec::with_capacity(names.len());
    for name in names {
        let name = name
            .as_str()
            .ok_or_else(|| ValidationError::Schema("location names must be strings".into()))?;
        let id = instance
            .location_names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ValidationError::UnknownLocationName(name.into()))?;
        ids.push(id);
    }
    Ok(DetectorSet::new(ids))
}

fn parse_strategy(instance: &InspectionInstance, text: &str) -> Result<(MixedDefenderStrategy, Option<MarginalAttackVector>)> {
    let doc: Value = serde_json::from_str(text).map_err(|e| ValidationError::Schema(e.to_string()))?;
    let atoms = doc["sigma_D"]
        .as_array()
        .ok_or_else(|| ValidationError::Schema("missing \"sigma_D\" array".into()))?;
    let mut support = Vec::with_capacity(atoms.len());
    for atom in atoms {
        let set = location_ids(instance, &atom["set"])?;
        let prob = atom["prob"]
            .as_f64()
            .ok_or_else(|| ValidationError::Schema("\"prob\" must be a number".into()))?;
        instance.check_detector_set(&set, true)?;
        support.push((set, prob));
    }
    let sigma = MixedDefenderStrategy::new(support)?;
    let rho = match doc.get("rho_A") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let values: Vec<f64> =
                serde_json::from_value(v.clone()).map_err(|e| ValidationError::Schema(e.to_string()))?;
            if values.len() != instance.m() {
                return Err(ValidationError::LengthMismatch {
                    expected: instance.m(),
                    actual: values.len(),
                }
                .into());
            }
            Some(MarginalAttackVector::new(values, instance.r_a())?)
        }
    };
    Ok((sigma, rho))
}

fn certify_cmd(args: CertifyArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let (sigma, rho) = parse_strategy(&instance, &read(&args.strategy)?)?;
    let (attacker, attack) = instance.worst_case_attack_value(&sigma)?;
    let mut doc = json!({
        "attacker_best_response": attacker,
        "attacker_marginal": attack.values(),
    });
    if let Some(rho) = rho {
        let within_cap = binomial(instance.n(), instance.r_d()) <= args.exact_br_cap;
        let defender = if within_cap {
            let (set, value) = best_response(&instance, rho.values(), BestResponseMode::Exact { cap: args.exact_br_cap })?;
            json!({"value": value, "set": names(&instance, &set), "exact": true})
        } else {
            // Reverse greedy is within 1/(1-c) of optimal, so scaling its value
            // by (1-c) bounds the optimum from below.
            let set = reverse_greedy(&instance, rho.values());
            let c = curvature(&instance, rho.values()).c;
            let value = instance.placement_value(&set, rho.values()) * (1.0 - c);
            json!({"value": value, "set": names(&instance, &set), "exact": false, "note": "bound, not exact"})
        };
        doc["defender_best_response"] = defender;
        doc["value_against_marginal"] = json!(instance.expected_undetection(&sigma, &rho)?);
    }
    emit(args.out.as_deref(), &pretty(&doc))
}

fn names(instance: &InspectionInstance, set: &DetectorSet) -> Vec<String> {
    set.members().iter().map(|&v| instance.location_names()[v].clone()).collect()
}

fn project(args: ProjectArgs) -> Result<()> {
    let tilde = PositiveVector::new(parse_vector(&read(&args.rho_tilde)?)?)?;
    let rho = match args.algo {
        ProjectAlgo::Sorted => project_sorted(&tilde, args.r_a)?,
        ProjectAlgo::Linear => project_linear(&tilde, args.r_a)?,
    };
    emit(args.out.as_deref(), &pretty(&json!(rho.values())))
}

fn best_response_cmd(args: BestResponseArgs) -> Result<()> {
    let instance = load_instance(&args.instance)?;
    let rho = parse_vector(&read(&args.rho)?)?;
    let rho = MarginalAttackVector::new(rho, instance.r_a())?;
    let mode = match args.algo {
        BrAlgo::Exact => BestResponseMode::Exact { cap: args.exact_br_cap },
        BrAlgo::Fg => BestResponseMode::ForwardGreedy,
        BrAlgo::Rg => BestResponseMode::ReverseGreedy,
    };
    let (set, value) = best_response(&instance, rho.values(), mode)?;
    emit(args.out.as_deref(), &pretty(&json!({"set": names(&instance, &set), "value": value})))
}

fn sweep(args: SweepArgs) -> Result<()> {
    let base = load_instance(&args.instance)?;
    let mut csv = String::from("method,r_D,value_estimate,worst_case_attacker,wall_ms\n");
    for &r_d in &args.r_d {
        let instance = base.with_budgets(r_d, base.r_a())?;
        let start = Instant::now();
        let result = run_solver(&instance, &args.solver, &mut String::new())?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;
        let _ = writeln!(
            csv,
            "{},{},{},{},{:.3}",
            args.solver.method.name(),
            r_d,
            result.value,
            result.certificates.attacker_best_response,
            wall_ms
        );
    }
    emit(args.out.as_deref(), &csv)
}
