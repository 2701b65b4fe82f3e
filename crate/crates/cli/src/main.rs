//! `icm`: income circulation analysis from the command line.
//!
//! Results are JSON on stdout (or `--out`); plot data goes to CSV files
//! named by dedicated flags; failures are one structured JSON object on
//! stderr.  Exit codes: 0 success, 1 domain error (invalid economy,
//! wrong society class, ...), 2 usage error (bad flags, missing or
//! unreadable input files).

use clap::{Args, Parser, Subcommand};
use icm_core::io::{
    read_matrix_json, read_transactions_csv, read_wealth_file, write_edges_csv, write_matrix_json,
    write_support_csv, write_trajectory_csv, write_wealth_json, IoError,
};
use icm_core::{
    average_icm, classify, estimate_icm, evolve_constant, generosity_profile, hoarder_decompose,
    hoarder_limit, hoarder_power_closed_form, perturbed_evolve, support_experiment,
    synthesize_economy, AgentId, CirculationGraph, ClassPartition, ConvergenceBound,
    EconomyProfile, EstimationWindow, IncomeCirculationMatrix, PerturbationSpec,
    SocietyClassification, SupportEvent, SupportOptions, Trajectory, TransactionRecord,
    WealthVector,
};
use serde::Deserialize;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "icm", version, about = "Analyze income circulation economies")]
struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized work (profile synthesis, perturbations).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Suppress notes on stderr.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a circulation matrix from a transaction log or a synthetic profile.
    Build(BuildArgs),
    /// Check a matrix file and report its basic shape.
    Validate(MatrixInput),
    /// Classify the society behind a matrix.
    Classify(ClassifyArgs),
    /// Compute the primitivity exponent (degrees of business separation).
    Exponent(MatrixInput),
    /// Evolve a wealth vector and export the trajectory.
    Simulate(SimulateArgs),
    /// Run the one-shot support experiment, optionally under noise.
    Support(SupportArgs),
    /// Decompose a hoarder economy and check its closed-form powers.
    Hoarder(HoarderArgs),
    /// Emit one composite JSON document for a matrix.
    Report(ReportArgs),
}

#[derive(Args)]
struct MatrixInput {
    /// Circulation matrix JSON file.
    #[arg(long)]
    matrix: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    /// Transaction log CSV (`t,payer,payee,amount`).
    #[arg(long, conflicts_with = "profile", required_unless_present = "profile")]
    transactions: Option<PathBuf>,

    /// Wealth at the start of the estimation window (`agent,wealth` CSV or JSON).
    #[arg(long, conflicts_with = "profile", required_unless_present = "profile")]
    wealth: Option<PathBuf>,

    /// Estimation window `a:b` (inclusive steps); defaults to the log's full span.
    #[arg(long, conflicts_with = "profile")]
    window: Option<String>,

    /// Average the per-step matrices; required when the window has several steps.
    #[arg(long, conflicts_with = "profile")]
    average: bool,

    /// Synthesize instead: one of ring, cohesive-random, two-class, hoarder.
    #[arg(long)]
    profile: Option<String>,

    /// Agent count for --profile.
    #[arg(long, default_value_t = 8)]
    agents: usize,

    /// Also write the synthesized initial wealth JSON here.
    #[arg(long, requires = "profile")]
    wealth_out: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    input: MatrixInput,

    /// Export the circulation graph as an edge-list CSV (`src,dst`).
    #[arg(long)]
    edges_out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    input: MatrixInput,

    /// Wealth state file (JSON, or `agent,wealth` CSV).
    #[arg(long)]
    wealth: PathBuf,

    /// Steps to evolve.
    #[arg(long, default_value_t = 100)]
    steps: usize,

    /// Write the trajectory CSV here.
    #[arg(long)]
    traj_out: Option<PathBuf>,
}

#[derive(Args)]
struct SupportArgs {
    #[command(flatten)]
    input: MatrixInput,

    /// Wealth state file (JSON, or `agent,wealth` CSV).
    #[arg(long)]
    wealth: PathBuf,

    /// Donor agent (0-based); defaults to the wealthiest.
    #[arg(long)]
    h0: Option<usize>,

    /// Recipient agent (0-based); defaults to the poorest.
    #[arg(long)]
    l0: Option<usize>,

    /// Transfer size.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,

    /// Event time; defaults to the wealth file's time index.
    #[arg(long)]
    t0: Option<usize>,

    /// Steps to run; derived from the convergence bound when omitted.
    #[arg(long)]
    horizon: Option<usize>,

    /// Gaussian noise level on matrix entries; enables the perturbed run.
    #[arg(long)]
    sigma: Option<f64>,

    /// Number of noise seeds to run (first one feeds the CSV).
    #[arg(long, default_value_t = 1, requires = "sigma")]
    seeds: u64,

    /// Class split JSON: {"h_frac": .., "l_frac": ..} or {"top": [..], "bottom": [..]}.
    #[arg(long)]
    partition: Option<PathBuf>,

    /// Write the per-step CSV (`k,deviation,bound,h_group_delta,l_group_delta`) here.
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

#[derive(Args)]
struct HoarderArgs {
    #[command(flatten)]
    input: MatrixInput,

    /// Check the closed-form power against direct multiplication at this k.
    #[arg(long)]
    k: Option<usize>,

    /// Also compute the limit of F^k.
    #[arg(long)]
    limit: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    input: MatrixInput,

    /// Wealth state file; enables the support-experiment section.
    #[arg(long)]
    wealth: Option<PathBuf>,

    /// Transfer size for the bound and the experiment.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,

    /// Curve length; defaults to the bound's recovery horizon, capped at 500.
    #[arg(long)]
    horizon: Option<usize>,

    /// Write the `k,bound,measured` CSV here (needs --wealth).
    #[arg(long)]
    csv_out: Option<PathBuf>,
}

enum CliError {
    Domain(icm_core::Error),
    Io(IoError),
    Usage(String),
}

impl From<icm_core::Error> for CliError {
    fn from(e: icm_core::Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Io(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(IoError::Io(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Io(_) | CliError::Usage(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Domain(e) => e.kind(),
            CliError::Io(e) => e.kind(),
            CliError::Usage(_) => "usage",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Domain(e) => e.to_string(),
            CliError::Io(e) => e.to_string(),
            CliError::Usage(m) => m.clone(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                json!({"error": {"kind": e.kind(), "message": e.message()}})
            );
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Build(args) => build(cli, args),
        Command::Validate(args) => validate(cli, args),
        Command::Classify(args) => cmd_classify(cli, args),
        Command::Exponent(args) => exponent(cli, args),
        Command::Simulate(args) => simulate(cli, args),
        Command::Support(args) => support(cli, args),
        Command::Hoarder(args) => hoarder(cli, args),
        Command::Report(args) => report(cli, args),
    }
}

fn note(cli: &Cli, message: impl AsRef<str>) {
    if !cli.quiet {
        eprintln!("note: {}", message.as_ref());
    }
}

fn load_matrix(path: &Path) -> Result<IncomeCirculationMatrix, CliError> {
    Ok(read_matrix_json(path)?.build()?)
}

fn load_wealth(path: &Path) -> Result<WealthVector, CliError> {
    Ok(read_wealth_file(path)?.build()?)
}

/// Writes the JSON document to `--out` or stdout.
fn emit(cli: &Cli, doc: &Value) -> Result<(), CliError> {
    let text = format!("{doc:#}\n");
    emit_bytes(cli, text.as_bytes())
}

fn emit_bytes(cli: &Cli, bytes: &[u8]) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn classification_json(class: &SocietyClassification) -> Value {
    json!({
        "verdict": class.verdict.as_str(),
        "scc_count": class.scc_count,
        "period": class.period,
        "exponent": class.exponent,
        "cohesiveness": class.cohesiveness,
        "nu": class.nu,
        "bounds": {
            "wielandt": class.wielandt_bound(),
            "dulmage": class.diagonal_bound(),
        },
    })
}

fn validate(cli: &Cli, args: &MatrixInput) -> Result<(), CliError> {
    let f = load_matrix(&args.matrix)?;
    emit(
        cli,
        &json!({
            "n": f.n(),
            "nnz": f.nnz(),
            "nu": f.nonzero_diagonal_count(),
            "tolerance": f.tolerance(),
        }),
    )
}

fn cmd_classify(cli: &Cli, args: &ClassifyArgs) -> Result<(), CliError> {
    let f = load_matrix(&args.input.matrix)?;
    let class = classify(&f);
    if let Some(path) = &args.edges_out {
        let file = std::fs::File::create(path)?;
        write_edges_csv(
            std::io::BufWriter::new(file),
            &CirculationGraph::from_matrix(&f),
        )?;
        note(cli, format!("edge list written to {}", path.display()));
    }
    emit(cli, &classification_json(&class))
}

fn exponent(cli: &Cli, args: &MatrixInput) -> Result<(), CliError> {
    let f = load_matrix(&args.matrix)?;
    let graph = CirculationGraph::from_matrix(&f);
    let k0 = graph.exponent()?;
    let class = classify(&f);
    emit(
        cli,
        &json!({
            "exponent": k0,
            "cohesiveness": 1.0 / k0 as f64,
            "bounds": {
                "wielandt": class.wielandt_bound(),
                "dulmage": class.diagonal_bound(),
            },
        }),
    )
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<(), CliError> {
    let f = load_matrix(&args.input.matrix)?;
    let x0 = load_wealth(&args.wealth)?;
    let traj = evolve_constant(&f, &x0, args.steps)?;
    if let Some(path) = &args.traj_out {
        let file = std::fs::File::create(path)?;
        write_trajectory_csv(std::io::BufWriter::new(file), &traj)?;
        note(cli, format!("trajectory written to {}", path.display()));
    }
    let base = x0.monetary_base();
    let drift = traj
        .states()
        .windows(2)
        .map(|w| (w[1].monetary_base() - w[0].monetary_base()).abs() / base)
        .fold(0.0, f64::max);
    emit(
        cli,
        &json!({
            "n": f.n(),
            "steps": args.steps,
            "initial_base": base,
            "final_base": traj.final_state().monetary_base(),
            "max_step_drift": drift,
            "final_state": traj.final_state().values(),
        }),
    )
}

/// Class split from `--partition`, or the default top/bottom deciles.
#[derive(Deserialize)]
#[serde(untagged)]
enum PartitionFile {
    Fractions { h_frac: f64, l_frac: f64 },
    Sets { top: Vec<usize>, bottom: Vec<usize> },
}

fn load_partition(path: Option<&PathBuf>, x: &WealthVector) -> Result<ClassPartition, CliError> {
    let Some(path) = path else {
        return Ok(ClassPartition::by_wealth_fractions(x, 0.1, 0.1)?);
    };
    let file = std::fs::File::open(path).map_err(IoError::from)?;
    let parsed: PartitionFile =
        serde_json::from_reader(std::io::BufReader::new(file)).map_err(IoError::from)?;
    match parsed {
        PartitionFile::Fractions { h_frac, l_frac } => {
            Ok(ClassPartition::by_wealth_fractions(x, h_frac, l_frac)?)
        }
        PartitionFile::Sets { top, bottom } => Ok(ClassPartition::from_sets(
            x.len(),
            top.into_iter().map(AgentId).collect(),
            bottom.into_iter().map(AgentId).collect(),
        )?),
    }
}

fn support(cli: &Cli, args: &SupportArgs) -> Result<(), CliError> {
    let f = load_matrix(&args.input.matrix)?;
    let x = load_wealth(&args.wealth)?;
    let partition = load_partition(args.partition.as_ref(), &x)?;
    let h0 = args.h0.map(AgentId).unwrap_or_else(|| partition.top()[0]);
    let l0 = args
        .l0
        .map(AgentId)
        .unwrap_or_else(|| partition.bottom()[0]);
    let t0 = args.t0.unwrap_or_else(|| x.time_index());
    let event = SupportEvent::new(t0, h0, l0, args.epsilon)?;
    let options = SupportOptions {
        horizon: args.horizon,
        ..SupportOptions::default()
    };

    let Some(sigma) = args.sigma else {
        let result = support_experiment(&f, &x, &event, &options)?;
        let horizon = result.deviation.len() - 1;
        if args.horizon.is_none() {
            note(
                cli,
                format!("derived horizon {horizon} from the convergence bound"),
            );
        }
        if let Some(path) = &args.csv_out {
            let file = std::fs::File::create(path)?;
            write_support_csv(
                std::io::BufWriter::new(file),
                &result,
                partition.top(),
                partition.bottom(),
            )?;
            note(
                cli,
                format!("deviation table written to {}", path.display()),
            );
        }
        let bound = result
            .bound_info
            .as_ref()
            .map(|b| json!({"k0": b.k0, "g": b.g, "beta": b.beta, "gamma0": b.gamma0}));
        return emit(
            cli,
            &json!({
                "h0": h0.0,
                "l0": l0.0,
                "t0": t0,
                "epsilon": args.epsilon,
                "horizon": horizon,
                "recovery_k": result.recovery_step,
                "deviation_final": result.deviation.last(),
                "bound": bound,
                "smallness_warning": result.smallness_warning,
            }),
        );
    };

    let mut recovery: Vec<Option<usize>> = Vec::new();
    let mut horizon = 0;
    for i in 0..args.seeds {
        let noise = PerturbationSpec::new(sigma, cli.seed.wrapping_add(i))?;
        let result = perturbed_evolve(&f, &x, &event, &noise, &options)?;
        horizon = result.deviation.len() - 1;
        if i == 0 {
            if let Some(path) = &args.csv_out {
                let file = std::fs::File::create(path)?;
                write_perturbed_csv(
                    std::io::BufWriter::new(file),
                    &result.deviation,
                    &result.baseline,
                    &result.supported,
                    partition.top(),
                    partition.bottom(),
                )?;
                note(
                    cli,
                    format!("deviation table written to {}", path.display()),
                );
            }
        }
        recovery.push(result.recovery_step);
    }
    let recovered = recovery.iter().filter(|r| r.is_some()).count();
    emit(
        cli,
        &json!({
            "h0": h0.0,
            "l0": l0.0,
            "t0": t0,
            "epsilon": args.epsilon,
            "horizon": horizon,
            "sigma": sigma,
            "seeds": args.seeds,
            "recovery_k": recovery,
            "recovered_count": recovered,
        }),
    )
}

/// Same table as the deterministic run; no envelope applies under noise,
/// so the bound column stays empty.
fn write_perturbed_csv<W: Write>(
    mut w: W,
    deviation: &[f64],
    baseline: &Trajectory,
    supported: &Trajectory,
    h_group: &[AgentId],
    l_group: &[AgentId],
) -> Result<(), IoError> {
    writeln!(w, "k,deviation,bound,h_group_delta,l_group_delta")?;
    for (k, d) in deviation.iter().enumerate() {
        let delta = |group: &[AgentId]| -> f64 {
            group
                .iter()
                .map(|&a| supported.states()[k].get(a) - baseline.states()[k].get(a))
                .sum()
        };
        writeln!(
            w,
            "{k},{d:.11e},,{:.11e},{:.11e}",
            delta(h_group),
            delta(l_group)
        )?;
    }
    Ok(())
}

fn hoarder(cli: &Cli, args: &HoarderArgs) -> Result<(), CliError> {
    let f = load_matrix(&args.input.matrix)?;
    let dec = hoarder_decompose(&f)?;
    let m = dec.n - 1;
    let sub: Vec<&[f64]> = (0..m).map(|i| dec.sub_economy.row(i)).collect();
    let mut doc = json!({
        "n": dec.n,
        "pure_cash_hoarder": dec.is_pure_cash_hoarder(),
        "blocks": {
            "sub_economy": sub,
            "hoarder_spending": dec.hoarder_spending,
            "hoarder_income": dec.hoarder_income,
            "hoarder_savings": dec.hoarder_savings,
        },
    });
    if let Some(k) = args.k {
        let closed = hoarder_power_closed_form(&dec, k)?;
        let direct = f.matrix_power(k)?;
        doc["power_check"] = json!({
            "k": k,
            "max_abs_deviation": closed.max_abs_diff(&direct),
        });
    }
    if args.limit {
        let limit = hoarder_limit(&dec)?;
        doc["limit_bottom_row"] = json!(limit.row(dec.n - 1));
    }
    emit(cli, &doc)
}

fn parse_window(text: &str) -> Result<EstimationWindow, CliError> {
    let (a, b) = match text.split_once(':') {
        Some((a, b)) => (a, b),
        None => (text, text),
    };
    let parse = |s: &str| {
        s.trim().parse::<usize>().map_err(|_| {
            CliError::Usage(format!(
                "invalid --window '{text}', expected 'a:b' with integer steps"
            ))
        })
    };
    Ok(EstimationWindow::new(parse(a)?, parse(b)?)?)
}

fn build(cli: &Cli, args: &BuildArgs) -> Result<(), CliError> {
    if let Some(name) = &args.profile {
        let profile: EconomyProfile = name
            .parse()
            .map_err(|e: icm_core::Error| CliError::Usage(e.to_string()))?;
        let (f, x) = synthesize_economy(args.agents, profile, cli.seed)?;
        if let Some(path) = &args.wealth_out {
            let file = std::fs::File::create(path)?;
            write_wealth_json(std::io::BufWriter::new(file), &x)?;
            note(cli, format!("initial wealth written to {}", path.display()));
        }
        note(
            cli,
            format!(
                "synthesized '{name}' economy with {} agents, seed {}",
                args.agents, cli.seed
            ),
        );
        let mut bytes = Vec::new();
        write_matrix_json(&mut bytes, &f)?;
        return emit_bytes(cli, &bytes);
    }

    let tx_path = args
        .transactions
        .as_ref()
        .expect("clap enforces the mode flags");
    let wealth_path = args.wealth.as_ref().ok_or_else(|| {
        CliError::Usage("--wealth is required when building from --transactions".into())
    })?;
    let records = read_transactions_csv(tx_path)?;
    let initial = load_wealth(wealth_path)?;
    let window = match &args.window {
        Some(text) => parse_window(text)?,
        None => {
            let lo = records
                .iter()
                .map(|r| r.time)
                .min()
                .unwrap_or(initial.time_index());
            let hi = records
                .iter()
                .map(|r| r.time)
                .max()
                .unwrap_or(initial.time_index());
            EstimationWindow::new(lo, hi)?
        }
    };
    if window.step_count() > 1 && !args.average {
        return Err(CliError::Usage(format!(
            "window {}:{} spans {} steps; pass --average to combine them",
            window.t_start(),
            window.t_end(),
            window.step_count()
        )));
    }

    // The wealth file is the state at the window start; later states follow
    // from the estimated steps themselves.
    let mut x = WealthVector::new(initial.values().to_vec(), window.t_start())?;
    let mut per_step = Vec::with_capacity(window.step_count());
    for t in window.steps() {
        let step_records: Vec<TransactionRecord> =
            records.iter().filter(|r| r.time == t).copied().collect();
        let f_t = estimate_icm(&step_records, &x, t)?;
        x = f_t.step(&x)?;
        per_step.push(f_t);
    }
    let result = if per_step.len() == 1 {
        per_step.pop().unwrap()
    } else {
        average_icm(&per_step, &window)?
    };
    note(
        cli,
        format!(
            "estimated {} step(s) over window {}:{}",
            window.step_count(),
            window.t_start(),
            window.t_end()
        ),
    );
    let mut bytes = Vec::new();
    write_matrix_json(&mut bytes, &result)?;
    emit_bytes(cli, &bytes)
}

fn report(cli: &Cli, args: &ReportArgs) -> Result<(), CliError> {
    let f = load_matrix(&args.input.matrix)?;
    let class = classify(&f);
    let mut notices: Vec<String> = Vec::new();
    let mut doc = json!({
        "schema": 1,
        "classification": classification_json(&class),
    });

    if !class.is_cohesive() {
        notices.push(format!(
            "generosity section omitted: society is {}",
            class.verdict.as_str()
        ));
        notices.push("support section omitted: society is not cohesive".into());
        if args.csv_out.is_some() {
            notices.push("bound curve CSV omitted: society is not cohesive".into());
        }
        doc["notices"] = json!(notices);
        return emit(cli, &doc);
    }

    let profile = generosity_profile(&f, &class)?;
    let wealth = args.wealth.as_ref().map(|p| load_wealth(p)).transpose()?;
    let pair = match &wealth {
        Some(x) => {
            let partition = ClassPartition::by_wealth_fractions(x, 0.1, 0.1)?;
            Some((partition.top()[0], partition.bottom()[0]))
        }
        // Without wealth there is no class ranking; any distinct pair
        // yields the same envelope because beta is 2 at r = 0.
        None if f.n() >= 2 => Some((AgentId(0), AgentId(f.n() - 1))),
        None => None,
    };

    let mut generosity = json!({
        "k0": profile.k0,
        "cohesiveness": 1.0 / profile.k0 as f64,
        "alpha": profile.alpha,
        "g": profile.g,
    });
    let mut bound_and_horizon = None;
    if let Some((h0, l0)) = pair {
        let bound = ConvergenceBound::new(&f, &profile, h0, l0, args.epsilon)?;
        let threshold = SupportOptions::default().recovery_threshold * args.epsilon;
        let horizon = args
            .horizon
            .unwrap_or_else(|| bound.horizon_for(threshold).min(500));
        let curve: Vec<(usize, f64)> = bound.curve(horizon).into_iter().enumerate().collect();
        generosity["gamma0"] = json!(bound.gamma0);
        generosity["bound_curve"] = json!(curve);
        bound_and_horizon = Some((h0, l0, horizon));
    } else {
        notices.push("bound curve omitted: a single agent has no transfer pair".into());
    }
    doc["generosity"] = generosity;

    match (&wealth, bound_and_horizon) {
        (Some(x), Some((h0, l0, horizon))) => {
            let event = SupportEvent::new(x.time_index(), h0, l0, args.epsilon)?;
            let options = SupportOptions {
                horizon: Some(horizon),
                ..SupportOptions::default()
            };
            let result = support_experiment(&f, x, &event, &options)?;
            doc["support"] = json!({
                "h0": h0.0,
                "l0": l0.0,
                "epsilon": args.epsilon,
                "horizon": horizon,
                "recovery_k": result.recovery_step,
                "deviation_final": result.deviation.last(),
                "smallness_warning": result.smallness_warning,
            });
            if let Some(path) = &args.csv_out {
                let bound_curve = result.bound.as_ref().expect("cohesive runs carry a bound");
                let file = std::fs::File::create(path)?;
                let mut w = std::io::BufWriter::new(file);
                writeln!(w, "k,bound,measured").map_err(IoError::from)?;
                for (k, (b, d)) in bound_curve.iter().zip(&result.deviation).enumerate() {
                    writeln!(w, "{k},{b:.11e},{d:.11e}").map_err(IoError::from)?;
                }
                note(cli, format!("bound curve written to {}", path.display()));
            }
        }
        _ => {
            notices.push("support section omitted: pass --wealth to run the experiment".into());
            if args.csv_out.is_some() {
                notices.push("bound curve CSV omitted: pass --wealth for measured values".into());
            }
        }
    }

    doc["notices"] = json!(notices);
    emit(cli, &doc)
}
