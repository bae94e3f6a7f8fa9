//! Experiment runner: every library claim behind a reproducible,
//! file-emitting subcommand. Exit 0 when all derived checks pass, 1 when
//! any fails, 2 on usage errors.

mod experiments;
mod report;

use std::path::PathBuf;
use std::process::exit;
use std::time::Instant;

use clap::{Parser, Subcommand};

use experiments::{has_table, Format, Params, EXPERIMENTS};
use report::{ExperimentConfig, ExperimentOutcome, ExperimentReport, OutputSpec};

#[derive(Parser)]
#[command(
    name = "qclock",
    version,
    about = "Clock-synchronization experiments over entangled pairs"
)]
struct Cli {
    /// JSON file with default parameter values; explicit flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    experiment: Experiment,
}

#[derive(Subcommand)]
enum Experiment {
    /// Estimate the clock offset from entangled-pair correlations.
    Qcs(Params),
    /// Estimate the offset by physically transporting qubits.
    Sct(Params),
    /// Estimate the offset from product pairs of unknown age.
    Product(Params),
    /// Entangled-pair run whose receiver half lags: reads t - Delta.
    FlawedPair(Params),
    /// Purify a noisy ensemble with the closed-form recursion.
    DistillAnalytic(Params),
    /// Purify by simulating the two-pair round at the circuit level.
    DistillCircuit(Params),
    /// Contract a coherent phase error by iterated purification.
    SystematicPhase(Params),
    /// Asymptotic yield of entropy-based purification.
    Hashing(Params),
    /// Teleport a qubit over a pair whose halves disagree on time.
    TeleportOffset(Params),
    /// Scan measurement superoperators for superluminal signaling.
    CausalCheck(Params),
    /// Compare the Pauli twirl with complete Bell dephasing.
    Twirl(Params),
    /// Integrate the single-qubit master equation and emit the trajectory.
    MasterEq(Params),
    /// Run one three-qubit repetition-code correction cycle.
    Repetition(Params),
    /// Verify the noise-immune two-qubit encoding.
    Dfs(Params),
    /// Agree on a phase through collective dephasing via encoded carriers.
    PhaseLock(Params),
}

impl Experiment {
    fn name(&self) -> &'static str {
        match self {
            Experiment::Qcs(_) => "qcs",
            Experiment::Sct(_) => "sct",
            Experiment::Product(_) => "product",
            Experiment::FlawedPair(_) => "flawed-pair",
            Experiment::DistillAnalytic(_) => "distill-analytic",
            Experiment::DistillCircuit(_) => "distill-circuit",
            Experiment::SystematicPhase(_) => "systematic-phase",
            Experiment::Hashing(_) => "hashing",
            Experiment::TeleportOffset(_) => "teleport-offset",
            Experiment::CausalCheck(_) => "causal-check",
            Experiment::Twirl(_) => "twirl",
            Experiment::MasterEq(_) => "master-eq",
            Experiment::Repetition(_) => "repetition",
            Experiment::Dfs(_) => "dfs",
            Experiment::PhaseLock(_) => "phase-lock",
        }
    }

    fn params(&self) -> &Params {
        match self {
            Experiment::Qcs(p)
            | Experiment::Sct(p)
            | Experiment::Product(p)
            | Experiment::FlawedPair(p)
            | Experiment::DistillAnalytic(p)
            | Experiment::DistillCircuit(p)
            | Experiment::SystematicPhase(p)
            | Experiment::Hashing(p)
            | Experiment::TeleportOffset(p)
            | Experiment::CausalCheck(p)
            | Experiment::Twirl(p)
            | Experiment::MasterEq(p)
            | Experiment::Repetition(p)
            | Experiment::Dfs(p)
            | Experiment::PhaseLock(p) => p,
        }
    }
}

fn usage_exit(msg: &str) -> ! {
    eprintln!("error: {msg}");
    exit(2);
}

fn parse_or_exit() -> Cli {
    match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.kind() == clap::error::ErrorKind::InvalidSubcommand => {
            let _ = e.print();
            eprintln!("valid experiments: {}", EXPERIMENTS.join(", "));
            exit(2);
        }
        Err(e) => e.exit(),
    }
}

fn load_config(path: &PathBuf) -> Result<Params, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
}

fn format_ext(format: Format) -> &'static str {
    match format {
        Format::Json => "json",
        Format::Csv => "csv",
    }
}

fn output_path(experiment: &str, params: &Params, format: Format) -> PathBuf {
    if let Some(out) = &params.out {
        return out.clone();
    }
    let dir = std::env::var_os("QCLOCK_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."));
    dir.join(format!("{experiment}.{}", format_ext(format)))
}

fn main() {
    let cli = parse_or_exit();
    let name = cli.experiment.name();

    let mut params = cli.experiment.params().clone();
    if let Some(path) = &cli.config {
        match load_config(path) {
            Ok(base) => params = params.overlaid_on(base),
            Err(msg) => usage_exit(&msg),
        }
    }

    let format = params.format.unwrap_or(Format::Json);
    if format == Format::Csv && !has_table(name) {
        usage_exit(&format!(
            "experiment '{name}' produces no tabular block; use --format json"
        ));
    }

    let started = Instant::now();
    let ExperimentOutcome {
        parameters,
        results,
        checks,
        table,
    } = match experiments::run(name, &params) {
        Ok(outcome) => outcome,
        Err(msg) => usage_exit(&msg),
    };

    let path = output_path(name, &params, format);
    let report = ExperimentReport {
        config: ExperimentConfig {
            experiment: name.to_string(),
            parameters,
            output: OutputSpec {
                path: path.display().to_string(),
                format: format_ext(format).to_string(),
            },
        },
        results,
        derived_checks: checks,
        runtime_ms: started.elapsed().as_millis() as u64,
    };

    let bytes = match format {
        Format::Json => report::to_json_bytes(&report),
        Format::Csv => report::to_csv_bytes(
            table
                .as_ref()
                .expect("tabular experiments always produce a table"),
        ),
    };
    if let Err(e) = report::write_atomic(&path, &bytes) {
        usage_exit(&format!("cannot write report to {}: {e}", path.display()));
    }

    for c in &report.derived_checks {
        println!(
            "{} {}: expected {} observed {} tolerance {}",
            if c.pass { "pass" } else { "FAIL" },
            c.claim,
            c.expected,
            c.observed,
            c.tolerance
        );
    }
    println!("report: {}", path.display());

    exit(if report.all_pass() { 0 } else { 1 });
}
