//! Command-line front end: validate cases, run static solves, track
//! scenarios, print flop formulas, and synthesize scenario streams.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain or validation error,
//! 3 numeric failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use opftrack_core::error::Error;
use opftrack_core::lifted::{eval_metrics, ProblemInstance};
use opftrack_core::network::{parse_case, validate_network, ConstantMatrices, SlackMode};
use opftrack_core::report::{sha256_hex, RunHeader, TrackingReport};
use opftrack_core::scenario::{load_scenario, synth_scenario, write_scenario, SynthSpec};
use opftrack_core::solver::{
    budget_for_error, flop_counts, solve_static, track, BoundInputs, Lipschitz, SolverConfig,
    UpdateMode,
};

#[derive(Parser)]
#[command(name = "opftrack", version, about = "Tracking solver for time-varying AC optimal power flow")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a case file against the schema and model invariants.
    Validate {
        /// Path to the case JSON file.
        case: PathBuf,
    },
    /// Run coordinate descent on the case's static loads and report the
    /// Lagrangian trajectory.
    Solve(SolveArgs),
    /// Replay a scenario against a case and write a tracking report.
    Track(TrackArgs),
    /// Print operation-count formulas and, given bound inputs, the compute
    /// budget between input updates.
    Flops(FlopsArgs),
    /// Synthesize a scenario CSV around a case's static loads.
    Synth(SynthArgs),
}

#[derive(Args, Clone)]
struct CommonSolver {
    /// Case file path.
    #[arg(long)]
    case: PathBuf,
    /// Optional JSON config file; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Penalty weight.
    #[arg(long)]
    mu: Option<f64>,
    /// Update rule: exact | prox.
    #[arg(long)]
    mode: Option<String>,
    /// Coordinate updates per time step.
    #[arg(long)]
    budget: Option<usize>,
    /// RNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Coordinate Lipschitz constant: a number or "auto".
    #[arg(long = "L", value_name = "F|auto")]
    lipschitz: Option<String>,
    /// Slack treatment: embedded | folded.
    #[arg(long)]
    slack_mode: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonSolver,
    /// Total coordinate updates (defaults to 200 epochs).
    #[arg(long)]
    updates: Option<usize>,
    /// Write the iteration trajectory here (CSV `k,L`).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    common: CommonSolver,
    /// Scenario CSV path.
    #[arg(long)]
    scenario: PathBuf,
    /// Solver step rate in Hz (defaults to the scenario data rate).
    #[arg(long)]
    solver_hz: Option<f64>,
    /// Report output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv | json.
    #[arg(long)]
    format: Option<String>,
    /// Comma-separated external bus ids to report voltages for
    /// (default: all buses).
    #[arg(long)]
    report_buses: Option<String>,
}

#[derive(Args)]
struct FlopsArgs {
    /// Regular bus count.
    #[arg(long = "N")]
    n: u64,
    /// Generator count.
    #[arg(long = "NG")]
    n_g: u64,
    /// Maximum admittance row nonzeros.
    #[arg(long = "p")]
    p: u64,
    /// Initial suboptimality gap (budget bound input).
    #[arg(long)]
    sigma_l: Option<f64>,
    /// Conditioning ratio d*L/sigma (budget bound input).
    #[arg(long)]
    sigma_p: Option<f64>,
    /// Per-step drift bound (budget bound input).
    #[arg(long)]
    drift: Option<f64>,
    /// Target expected error (budget bound input).
    #[arg(long)]
    error_target: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    case: PathBuf,
    /// Stream length in seconds.
    #[arg(long, default_value_t = 60.0)]
    duration: f64,
    #[arg(long, default_value_t = 1.0)]
    data_hz: f64,
    /// Relative sinusoidal swing in [0, 1).
    #[arg(long, default_value_t = 0.2)]
    amplitude: f64,
    /// Sinusoid period, seconds.
    #[arg(long, default_value_t = 30.0)]
    period: f64,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
}

/// Config-file schema: same vocabulary as the command-line flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    mu: Option<f64>,
    mode: Option<String>,
    budget: Option<usize>,
    seed: Option<u64>,
    solver_hz: Option<f64>,
    #[serde(rename = "L")]
    lipschitz: Option<String>,
    slack_mode: Option<String>,
    format: Option<String>,
    report_buses: Option<Vec<u32>>,
}

struct Settings {
    config: SolverConfig,
    slack_mode: SlackMode,
    solver_hz: Option<f64>,
    format: String,
    report_buses: Option<Vec<u32>>,
}

fn parse_lipschitz(text: &str) -> Result<Lipschitz, Error> {
    if text == "auto" {
        Ok(Lipschitz::Auto)
    } else {
        let v: f64 = text
            .parse()
            .map_err(|_| Error::Domain(format!("bad Lipschitz value '{text}'")))?;
        Ok(Lipschitz::Fixed(v))
    }
}

fn parse_slack_mode(text: &str) -> Result<SlackMode, Error> {
    match text {
        "embedded" => Ok(SlackMode::Embedded),
        "folded" => Ok(SlackMode::Folded),
        other => Err(Error::Domain(format!("unknown slack mode '{other}'"))),
    }
}

fn resolve_settings(common: &CommonSolver, cli_format: Option<&str>, cli_buses: Option<&str>, cli_solver_hz: Option<f64>) -> Result<Settings, Error> {
    let file: FileConfig = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::io(path.display().to_string(), e))?;
            serde_json::from_str(&text).map_err(|e| {
                Error::parse_at(path.display().to_string(), format!("line {}", e.line()), e.to_string())
            })?
        }
        None => FileConfig::default(),
    };
    let defaults = SolverConfig::default();

    let mode_text = common
        .mode
        .clone()
        .or(file.mode)
        .unwrap_or_else(|| defaults.mode.to_string());
    let mode: UpdateMode = mode_text.parse()?;

    let lipschitz = match common.lipschitz.clone().or(file.lipschitz) {
        Some(text) => parse_lipschitz(&text)?,
        None => defaults.lipschitz,
    };

    let slack_mode = match common.slack_mode.clone().or(file.slack_mode) {
        Some(text) => parse_slack_mode(&text)?,
        None => SlackMode::Embedded,
    };

    let config = SolverConfig {
        mu: common.mu.or(file.mu).unwrap_or(defaults.mu),
        mode,
        budget: common.budget.or(file.budget).unwrap_or(defaults.budget),
        seed: common.seed.or(file.seed).unwrap_or(defaults.seed),
        lipschitz,
        ..defaults
    };
    config.validate()?;

    let format = cli_format
        .map(str::to_string)
        .or(file.format)
        .unwrap_or_else(|| "csv".into());
    if format != "csv" && format != "json" {
        return Err(Error::Domain(format!("unknown output format '{format}'")));
    }

    let report_buses = match cli_buses {
        Some(list) => Some(
            list.split(',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::Domain(format!("bad bus id '{s}' in --report-buses")))
                })
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => file.report_buses,
    };

    Ok(Settings {
        config,
        slack_mode,
        solver_hz: cli_solver_hz.or(file.solver_hz),
        format,
        report_buses,
    })
}

fn file_hash(path: &Path) -> Result<String, Error> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(sha256_hex(&bytes))
}

fn cmd_validate(case: &Path) -> Result<(), Error> {
    let model = parse_case(case)?;
    let violations = validate_network(&model);
    if violations.is_empty() {
        println!(
            "ok: {} buses, {} generators, {} lines",
            model.n(),
            model.n_gens(),
            model.lines.len()
        );
        Ok(())
    } else {
        Err(Error::Validation { violations })
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Error> {
    let settings = resolve_settings(&args.common, None, None, None)?;
    let model = Arc::new(parse_case(&args.common.case)?);
    let matrices = Arc::new(ConstantMatrices::build(&model, settings.slack_mode)?);
    let inst = ProblemInstance::from_static(model.clone(), matrices);
    let layout = inst.layout();
    let updates = args.updates.unwrap_or(200 * layout.dim());

    let run = solve_static(&inst, &settings.config, updates, None)?;
    let metrics = eval_metrics(&run.state, &inst);
    println!(
        "updates: {updates}\nfinal L: {}\ncost: {}\nT: {}\nT': {}\nflops: {}\ncubic roots: {}\ndescent violations: {}",
        run.l_values.last().unwrap(),
        metrics.cost,
        metrics.t,
        metrics.t_prime,
        run.ledger.flops,
        run.ledger.cubic_roots,
        run.descent_violations,
    );
    for (i, v) in metrics.v_mag.iter().enumerate() {
        println!("V_{}: {v}", model.ext_id(i));
    }
    if let Some(out) = &args.out {
        let mut text = String::from("k,L\n");
        for (k, l) in run.l_values.iter().enumerate() {
            text.push_str(&format!("{k},{l}\n"));
        }
        std::fs::write(out, text).map_err(|e| Error::io(out.display().to_string(), e))?;
    }
    Ok(())
}

fn cmd_track(args: &TrackArgs) -> Result<(), Error> {
    let settings = resolve_settings(
        &args.common,
        args.format.as_deref(),
        args.report_buses.as_deref(),
        args.solver_hz,
    )?;
    let model = Arc::new(parse_case(&args.common.case)?);
    let matrices = Arc::new(ConstantMatrices::build(&model, settings.slack_mode)?);
    let scenario = load_scenario(&args.scenario, &model)?;
    let solver_hz = settings.solver_hz.unwrap_or(scenario.data_hz);

    let report_ids: Vec<u32> = match &settings.report_buses {
        Some(ids) => ids.clone(),
        None => model.buses.iter().map(|b| b.ext_id).collect(),
    };
    let mut bus_indices = Vec::with_capacity(report_ids.len());
    for id in &report_ids {
        let idx = model
            .buses
            .iter()
            .position(|b| b.ext_id == *id)
            .ok_or_else(|| Error::Domain(format!("report bus {id} not in case")))?;
        bus_indices.push(idx);
    }

    let run = track(&model, &matrices, &scenario, &settings.config, solver_hz)?;

    let regulated: Vec<&opftrack_core::network::Bus> =
        model.buses.iter().filter(|b| b.regulated).collect();
    let header = RunHeader {
        case_path: args.common.case.display().to_string(),
        case_hash: file_hash(&args.common.case)?,
        scenario_source: scenario.source.clone(),
        scenario_hash: file_hash(&args.scenario)?,
        slack_mode: settings.slack_mode.to_string(),
        mode: settings.config.mode.to_string(),
        mu: settings.config.mu,
        seed: settings.config.seed,
        budget: settings.config.budget,
        solver_hz,
        data_hz: scenario.data_hz,
        lipschitz: settings.config.lipschitz.to_string(),
        n: model.n(),
        n_g: model.n_gens(),
        p: matrices.p(),
        vmin: regulated.iter().map(|b| b.vmin).fold(f64::INFINITY, f64::min),
        vmax: regulated.iter().map(|b| b.vmax).fold(f64::NEG_INFINITY, f64::max),
        report_buses: report_ids,
    };
    let report = TrackingReport::assemble(header, &run.steps, &bus_indices);
    report.check_invariants()?;

    match (&args.out, settings.format.as_str()) {
        (Some(path), "csv") => report.write_csv(path)?,
        (Some(path), "json") => report.write_json(path)?,
        (None, "csv") => print!("{}", report.to_csv_string()),
        (None, "json") => println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(Error::from)?
        ),
        _ => unreachable!(),
    }
    let failures = run.steps.iter().filter(|s| s.error.is_some()).count();
    eprintln!(
        "tracked {} steps ({} failed), final T = {}",
        run.steps.len(),
        failures,
        run.steps.last().map(|s| s.metrics.t).unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_flops(args: &FlopsArgs) -> Result<(), Error> {
    if args.n < args.n_g {
        return Err(Error::Domain(
            "generator count cannot exceed bus count".into(),
        ));
    }
    if args.p < 1 {
        return Err(Error::Domain("p must be at least 1".into()));
    }
    let f = flop_counts(args.n, args.n_g, args.p);
    println!("per_epoch_flops: {}", f.per_epoch_flops);
    println!("per_epoch_cubic_roots: {}", f.per_epoch_cubic_roots);
    println!("per_coordinate_max_flops: {}", f.per_coordinate_max);
    println!("cubic_root_flops: {}", f.cubic_root_flops);

    let bound_inputs = [args.sigma_l, args.sigma_p, args.drift, args.error_target];
    if bound_inputs.iter().all(Option::is_some) {
        let estimate = budget_for_error(&BoundInputs {
            sigma_l: args.sigma_l.unwrap(),
            sigma_p: args.sigma_p.unwrap(),
            drift: args.drift.unwrap(),
            error_target: args.error_target.unwrap(),
            n: args.n,
            n_g: args.n_g,
            p: args.p,
        })?;
        println!("budget_flops: {}", estimate.flops);
        if estimate.non_positive {
            println!("budget_non_positive: true");
        }
    } else if bound_inputs.iter().any(Option::is_some) {
        return Err(Error::Domain(
            "budget bound needs all of --sigma-l, --sigma-p, --drift, --error-target".into(),
        ));
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Error> {
    let model = parse_case(&args.case)?;
    let scenario = synth_scenario(
        &model,
        &SynthSpec {
            duration_s: args.duration,
            data_hz: args.data_hz,
            amplitude: args.amplitude,
            period_s: args.period,
            noise_sigma: args.noise_sigma,
            seed: args.seed,
        },
    )?;
    write_scenario(&args.out, &scenario, &model)?;
    println!(
        "wrote {} samples at {} Hz to {}",
        scenario.len(),
        scenario.data_hz,
        args.out.display()
    );
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::NonFinite { .. } | Error::Unbounded { .. } => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not usage errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Validate { case } => cmd_validate(case),
        Command::Solve(args) => cmd_solve(args),
        Command::Track(args) => cmd_track(args),
        Command::Flops(args) => cmd_flops(args),
        Command::Synth(args) => cmd_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
