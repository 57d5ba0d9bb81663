//! Command-line front end for the gresilience game solver and the
//! classification-cell simulator.
//!
//! Exit codes: 0 on success, 2 for usage or validation problems, 3 for an
//! internal invariant breach.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use gresilience::game::{self, Confidence, P2ScaleMode, SystemFactors};
use gresilience::metrics::{aggregate, build_report, RunReport};
use gresilience::report::{rows_to_csv, ReportRow, Summary};
use gresilience::scenario::{resolve_policy_spec, ScenarioConfig, ScenarioError, SweepRange};
use gresilience::sim::{run_scenario, SimError};

const EXIT_VALIDATION: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Debug)]
enum CliError {
    /// Bad flags, unreadable files, schema violations.
    Validation(String),
    /// The simulation or metrics pipeline broke one of its own invariants.
    Internal(String),
}

impl CliError {
    fn validation(e: impl std::fmt::Display) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(inner) => CliError::Validation(inner.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "gresilience",
    about = "Green-vs-resilience recovery decisions: equilibrium solver and cell simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScaleArg {
    Complement,
    Same,
    Unit,
}

impl From<ScaleArg> for P2ScaleMode {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Complement => P2ScaleMode::Complement,
            ScaleArg::Same => P2ScaleMode::Same,
            ScaleArg::Unit => P2ScaleMode::Unit,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SolveFormat {
    Table,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EventsFormat {
    /// events.log text records only.
    Text,
    /// events.jsonl structured records only.
    Json,
    /// Both exports.
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a single game: payoff matrix, pure and mixed equilibria.
    Solve {
        /// Classifier confidence, strictly between 0 and 1.
        #[arg(long)]
        eps: f64,
        /// Human classification time score.
        #[arg(long)]
        th: f64,
        /// Arm classification time score.
        #[arg(long)]
        ta: f64,
        /// Human-interaction reduction score.
        #[arg(long)]
        h: f64,
        /// CO2 reduction score.
        #[arg(long)]
        co2: f64,
        /// Scale factor for the green player's payoffs.
        #[arg(long, value_enum, default_value_t = ScaleArg::Complement)]
        scale: ScaleArg,
        #[arg(long, value_enum, default_value_t = SolveFormat::Table)]
        format: SolveFormat,
    },
    /// Run one scenario replication and write report.csv, events.log, and
    /// summary.json.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        /// Overrides the scenario's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the scenario's policy, e.g. `always-robot`,
        /// `threshold:0.6`, `gresilience:0.3:0.7:conditional`.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long, env = "GRESILIENCE_OUT", default_value = "gresilience-out")]
        out: PathBuf,
        /// Event-trace export format.
        #[arg(long, value_enum, default_value_t = EventsFormat::Text)]
        format: EventsFormat,
    },
    /// Sweep one numeric scenario parameter over a range.
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        /// Dotted path of the parameter, e.g. `policy.eps_high`.
        #[arg(long)]
        param: String,
        /// Inclusive range `start:stop:step`.
        #[arg(long)]
        range: String,
        #[arg(long, default_value_t = 1)]
        replications: u32,
        #[arg(long, env = "GRESILIENCE_OUT", default_value = "gresilience-out")]
        out: PathBuf,
    },
    /// Run several policies on the same scenario and seeds.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated policy specs.
        #[arg(long, value_delimiter = ',')]
        policies: Vec<String>,
        #[arg(long, default_value_t = 1)]
        replications: u32,
        #[arg(long, env = "GRESILIENCE_OUT", default_value = "gresilience-out")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve {
            eps,
            th,
            ta,
            h,
            co2,
            scale,
            format,
        } => cmd_solve(eps, th, ta, h, co2, scale.into(), format),
        Command::Run {
            scenario,
            seed,
            policy,
            out,
            format,
        } => cmd_run(&scenario, seed, policy.as_deref(), &out, format),
        Command::Sweep {
            scenario,
            param,
            range,
            replications,
            out,
        } => cmd_sweep(&scenario, &param, &range, replications, &out),
        Command::Compare {
            scenario,
            policies,
            replications,
            out,
        } => cmd_compare(&scenario, &policies, replications, &out),
    }
}

#[derive(Serialize)]
struct SolveOutput {
    eps: f64,
    factors: SystemFactors,
    scale: P2ScaleMode,
    payoffs_p1: [f64; 4],
    payoffs_p2: [f64; 4],
    solution: game::EquilibriumSolution,
}

fn cmd_solve(
    eps: f64,
    th: f64,
    ta: f64,
    h: f64,
    co2: f64,
    scale: P2ScaleMode,
    format: SolveFormat,
) -> Result<(), CliError> {
    let confidence = Confidence::new(eps).map_err(|e| CliError::validation(format!("--eps: {e}")))?;
    let factors = SystemFactors::new(th, ta, h, co2).map_err(|e| {
        let flag = match &e {
            game::GameError::InvalidFactor { field, .. } => match *field {
                "human_time" => "--th",
                "arm_time" => "--ta",
                "interaction_reduction" => "--h",
                _ => "--co2",
            },
            _ => "factors",
        };
        CliError::validation(format!("{flag}: {e}"))
    })?;
    let solution = game::solve(&factors, confidence, scale)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let m = &solution.payoffs;

    match format {
        SolveFormat::Json => {
            let out = SolveOutput {
                eps,
                factors,
                scale,
                payoffs_p1: [m.p1_a(), m.p1_b(), m.p1_c(), m.p1_d()],
                payoffs_p2: [m.p2_a(), m.p2_b(), m.p2_c(), m.p2_d()],
                solution: solution.clone(),
            };
            println!(
                "{}",
                serde_json::to_string_pretty(&out).expect("solve output serializes")
            );
        }
        SolveFormat::Table => {
            println!("Payoff bimatrix (p1 = resilience / rows, p2 = green / columns):");
            println!("{:>14}{:>22}{:>22}", "", "p2: robot", "p2: human");
            let (rr, rh, hr, hh) = (
                m.pair(game::ActionProfile::ALL[0]),
                m.pair(game::ActionProfile::ALL[1]),
                m.pair(game::ActionProfile::ALL[2]),
                m.pair(game::ActionProfile::ALL[3]),
            );
            println!(
                "{:>14}{:>22}{:>22}",
                "p1: robot",
                format!("{:.4} / {:.4}", rr.0, rr.1),
                format!("{:.4} / {:.4}", rh.0, rh.1)
            );
            println!(
                "{:>14}{:>22}{:>22}",
                "p1: human",
                format!("{:.4} / {:.4}", hr.0, hr.1),
                format!("{:.4} / {:.4}", hh.0, hh.1)
            );
            println!(
                "Ordered entries: A={:.4} B={:.4} C={:.4} D={:.4}  a={:.4} b={:.4} c={:.4} d={:.4}",
                m.p1_a(),
                m.p1_b(),
                m.p1_c(),
                m.p1_d(),
                m.p2_a(),
                m.p2_b(),
                m.p2_c(),
                m.p2_d()
            );
            let psne: Vec<String> = solution.psne.iter().map(|p| p.to_string()).collect();
            println!("Pure equilibria: {}", psne.join(", "));
            println!(
                "Mixed equilibrium: P(p1=robot)={:.4}, P(p2=robot)={:.4}",
                solution.msne.p1_robot, solution.msne.p2_robot
            );
            println!(
                "Mixed-equilibrium payoffs: p1={:.4}, p2={:.4}",
                solution.msne_payoff_p1, solution.msne_payoff_p2
            );
        }
    }
    Ok(())
}

fn load_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    Ok(ScenarioConfig::load(path)?)
}

fn one_replication(cfg: &ScenarioConfig) -> Result<(RunReport, gresilience::EventLog), CliError> {
    let out = run_scenario(cfg)?;
    if !out.counters.conserved() {
        return Err(CliError::Internal(format!(
            "object conservation violated: {:?}",
            out.counters
        )));
    }
    let report = build_report(cfg, &out.log).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok((report, out.log))
}

fn write_outputs(
    out_dir: &Path,
    rows: &[ReportRow],
    reports: &[RunReport],
    scenario_id: &str,
) -> Result<(), CliError> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("report.csv"), rows_to_csv(rows))?;
    let summaries = aggregate(reports).map_err(|e| CliError::Internal(e.to_string()))?;
    let summary = Summary::new(scenario_id, reports.len() as u64, summaries);
    std::fs::write(out_dir.join("summary.json"), summary.to_json())?;
    Ok(())
}

fn cmd_run(
    scenario: &Path,
    seed: Option<u64>,
    policy: Option<&str>,
    out_dir: &Path,
    format: EventsFormat,
) -> Result<(), CliError> {
    let mut cfg = load_scenario(scenario)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(spec) = policy {
        cfg.policy = resolve_policy_spec(spec, &cfg.policy)?;
    }
    let (report, log) = one_replication(&cfg)?;

    std::fs::create_dir_all(out_dir)?;
    if matches!(format, EventsFormat::Text | EventsFormat::Both) {
        std::fs::write(out_dir.join("events.log"), log.to_text())?;
    }
    if matches!(format, EventsFormat::Json | EventsFormat::Both) {
        std::fs::write(out_dir.join("events.jsonl"), log.to_json_lines())?;
    }
    let rows = vec![ReportRow::from_report(&report)];
    write_outputs(out_dir, &rows, std::slice::from_ref(&report), &cfg.id)?;

    println!(
        "scenario {} seed {} policy {}: {} objects ({} robot, {} human, {} missed, {} discarded), \
         {} corrections, recovery mean {:.3} s, {:.4} g CO2e, score {:.4}",
        report.scenario_id,
        report.seed,
        report.policy,
        report.counters.objects_total,
        report.counters.robot_placed,
        report.counters.human_placed,
        report.counters.missed,
        report.counters.discarded,
        report.counters.corrections,
        report.recovery.mean_s,
        report.co2e_g,
        report.combined_score
    );
    println!("wrote {}", out_dir.display());
    Ok(())
}

fn cmd_sweep(
    scenario: &Path,
    param: &str,
    range: &str,
    replications: u32,
    out_dir: &Path,
) -> Result<(), CliError> {
    if replications < 1 {
        return Err(CliError::Validation("--replications must be >= 1".into()));
    }
    let base = load_scenario(scenario)?;
    let values = SweepRange::parse(range)?.values();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for value in values {
        let mut cfg = base.with_param(param, value)?;
        cfg.id = format!("{}[{}={}]", base.id, param, value);
        for replication in 0..replications {
            cfg.seed = base.seed + u64::from(replication);
            let (report, _) = one_replication(&cfg)?;
            rows.push(ReportRow::from_report(&report));
            reports.push(report);
        }
    }
    write_outputs(out_dir, &rows, &reports, &base.id)?;
    println!(
        "swept {param} over {range}: {} rows -> {}",
        rows.len(),
        out_dir.display()
    );
    Ok(())
}

fn cmd_compare(
    scenario: &Path,
    policies: &[String],
    replications: u32,
    out_dir: &Path,
) -> Result<(), CliError> {
    if replications < 1 {
        return Err(CliError::Validation("--replications must be >= 1".into()));
    }
    if policies.is_empty() {
        return Err(CliError::Validation("--policies must name at least one policy".into()));
    }
    let base = load_scenario(scenario)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for spec in policies {
        let mut cfg = base.clone();
        cfg.policy = resolve_policy_spec(spec, &base.policy)?;
        for replication in 0..replications {
            cfg.seed = base.seed + u64::from(replication);
            let (report, _) = one_replication(&cfg)?;
            rows.push(ReportRow::from_report(&report));
            reports.push(report);
        }
    }
    write_outputs(out_dir, &rows, &reports, &base.id)?;
    println!(
        "compared {} policies x {replications} replications -> {}",
        policies.len(),
        out_dir.display()
    );
    Ok(())
}
