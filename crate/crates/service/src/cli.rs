//! Command-line interface.

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use ppmlrank_core::ahp::{CR_REPORTING_TIER, DEFAULT_CR_THRESHOLD};
use ppmlrank_core::evaluation::evaluate;
use ppmlrank_core::io::{self, IoError};
use ppmlrank_core::model::{Audience, Scenario};
use ppmlrank_core::report::{export_report, ReportFormat};
use ppmlrank_core::sensitivity::{sensitivity_sweep, Parameter};
use ppmlrank_core::survey::derive_uac_preferences;
use ppmlrank_core::validate::validate_scenario;

use crate::state::{scenario_id, AppState};

#[derive(Debug, Parser)]
#[command(name = "ppmlrank", version, about = "Rank privacy-preserving ML techniques against user acceptance criteria")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scenario file and list every violation.
    Validate(ScenarioArg),
    /// Screen survey responses and derive UAC preferences.
    Ahp(AhpArgs),
    /// Rank the techniques for one audience.
    Rank(RankArgs),
    /// Sweep one parameter and report where the top technique changes.
    Sensitivity(SensitivityArgs),
    /// Write a ranking report to a file.
    Export(ExportArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ScenarioArg {
    #[arg(long)]
    pub scenario: PathBuf,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub scenario: PathBuf,
    /// user or entity
    #[arg(long, default_value = "user", value_parser = parse_audience)]
    pub audience: Audience,
    #[arg(long, default_value_t = DEFAULT_CR_THRESHOLD)]
    pub cr_threshold: f64,
}

#[derive(Debug, Args)]
pub struct AhpArgs {
    #[command(flatten)]
    pub common: Common,
    /// Survey file; defaults to the responses stored in the scenario.
    #[arg(long)]
    pub survey: Option<PathBuf>,
    #[arg(long, default_value = "table", value_parser = parse_format)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub common: Common,
    /// table, csv or structured
    #[arg(long, default_value = "table", value_parser = parse_format)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub common: Common,
    /// uac:ID, characteristic:ID or weight:CHARACTERISTIC/CATEGORY
    #[arg(long)]
    pub parameter: String,
    #[arg(long, default_value_t = -0.1, allow_hyphen_values = true)]
    pub lo: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    pub hi: f64,
    #[arg(long, default_value_t = 20)]
    pub steps: usize,
    #[arg(long, default_value = "table", value_parser = parse_format)]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    pub format: ReportFormat,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Scenario files to serve; the id is the file name without extension.
    #[arg(long)]
    pub scenario: Vec<PathBuf>,
    /// Directory for persisted scenarios and survey responses.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = DEFAULT_CR_THRESHOLD)]
    pub cr_threshold: f64,
}

fn parse_audience(s: &str) -> Result<Audience, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
}

fn load(path: &PathBuf) -> Result<Scenario> {
    io::load(path).with_context(|| format!("loading {}", path.display()))
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Validate(a) => validate(&a.scenario),
        Command::Ahp(a) => {
            print!("{}", ahp(&a)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Rank(a) => {
            print!("{}", rank(&a.common, a.format)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sensitivity(a) => {
            print!("{}", sensitivity(&a)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Export(a) => {
            let out = rank(&a.common, a.format)?;
            std::fs::write(&a.output, out).with_context(|| format!("writing {}", a.output.display()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve(a) => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(serve(a))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn validate(path: &PathBuf) -> Result<ExitCode> {
    let text = io::read_file(path)?;
    let scenario = match io::load_unvalidated(&text) {
        Ok(s) => s,
        Err(e) => {
            println!("{}: {e}", e.code());
            return Ok(ExitCode::FAILURE);
        }
    };
    let report = validate_scenario(&scenario);
    if report.is_empty() {
        println!(
            "valid: {} UACs, {} characteristics ({} hard), {} techniques",
            scenario.uacs.len(),
            scenario.characteristics.len(),
            scenario.characteristics.iter().filter(|c| c.is_hard()).count(),
            scenario.techniques.len()
        );
        Ok(ExitCode::SUCCESS)
    } else {
        print!("{report}");
        Ok(ExitCode::FAILURE)
    }
}

pub fn ahp(a: &AhpArgs) -> Result<String> {
    let scenario = load(&a.common.scenario)?;
    let responses = match &a.survey {
        Some(p) => io::load_survey_str(&scenario, &io::read_file(p)?)?,
        None => scenario.survey.clone(),
    };
    anyhow::ensure!(!responses.is_empty(), "no survey responses; pass --survey");
    let outcome = derive_uac_preferences(&scenario, &responses, a.common.cr_threshold, a.common.audience)?;
    if a.format == ReportFormat::Structured {
        return Ok(io::to_canonical_json(&outcome));
    }
    let mut out = String::new();
    writeln!(out, "CR threshold {}", outcome.screening.threshold)?;
    for (key, m) in &outcome.screening.matrices {
        writeln!(out, "{key}: {} accepted, {} rejected", m.accepted.len(), m.rejected.len())?;
        for r in &m.rejected {
            writeln!(out, "  rejected {} (CR {:.4})", r.participant_id, r.consistency_ratio)?;
        }
    }
    for p in &responses {
        let below = p
            .consistency()?
            .values()
            .filter(|c| c.consistency_ratio <= CR_REPORTING_TIER)
            .count();
        writeln!(out, "{}: {below} matrices with CR <= {CR_REPORTING_TIER}", p.participant_id)?;
    }
    writeln!(out, "group weights ({:?}):", outcome.group_weight_source)?;
    for (g, w) in outcome.group_weights.items.iter().zip(&outcome.group_weights.weights) {
        writeln!(out, "  {g:<4} {w:.6}")?;
    }
    writeln!(out, "UAC preferences:")?;
    for u in &scenario.uacs {
        writeln!(out, "  {:<4} {:.6}  {}", u.id, outcome.preferences.get(&u.id), u.name)?;
    }
    Ok(out)
}

pub fn rank(c: &Common, format: ReportFormat) -> Result<String> {
    let scenario = load(&c.scenario)?;
    let eval = evaluate(&scenario, c.audience, c.cr_threshold)?;
    Ok(export_report(&eval.ranking, &io::provenance_notes(&scenario), format))
}

pub fn sensitivity(a: &SensitivityArgs) -> Result<String> {
    let scenario = load(&a.common.scenario)?;
    let parameter: Parameter = a.parameter.parse()?;
    let report = sensitivity_sweep(
        &scenario,
        a.common.audience,
        &parameter,
        (a.lo, a.hi),
        a.steps,
        a.common.cr_threshold,
    )?;
    if a.format != ReportFormat::Table {
        return Ok(io::to_canonical_json(&report));
    }
    let mut out = String::new();
    writeln!(
        out,
        "{} for {} (baseline {:.6}, ranking {})",
        report.perturbed_parameter,
        report.audience,
        report.baseline_value,
        report.baseline_ordering.join(" > ")
    )?;
    for p in &report.sweep {
        writeln!(out, "{:+.4}  {:.6}  {}", p.delta, p.value, p.ordering.join(" > "))?;
    }
    match report.rank_reversal_threshold {
        Some(t) => writeln!(out, "top technique changes at |delta| = {t:.4}")?,
        None => writeln!(out, "top technique stable across the sweep")?,
    }
    Ok(out)
}

async fn serve(a: ServeArgs) -> Result<()> {
    let state = AppState::new(a.data_dir.clone(), a.cr_threshold);
    if let Some(dir) = &a.data_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let loaded = state.load_data_dir().await.map_err(|e: IoError| anyhow::anyhow!(e))?;
    for path in &a.scenario {
        let scenario = load(path)?;
        state.insert(&scenario_id(path), scenario).await;
    }
    let ids = state.ids().await;
    let addr: SocketAddr = format!("{}:{}", a.host, a.port).parse().context("invalid host or port")?;
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!(
        "serving {} scenario(s) ({} from data dir) on http://{}",
        ids.len(),
        loaded,
        listener.local_addr()?
    );
    axum::serve(listener, crate::api::router(Arc::new(state)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}
