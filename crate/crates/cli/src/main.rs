//! `wardflow`: command line front end for the ward monitoring engine.
//!
//! Subcommands cover the whole pipeline: `validate` checks workflow
//! definitions, `simulate` generates seeded sensor logs, `monitor`
//! replays a log through the workflows and emits alerts, and `trace`,
//! `riskmap` and `stats` run the retrospective analyses.
//!
//! Exit codes: 0 on success, 1 for domain errors (malformed input
//! content, failed validation, engine preconditions), 2 for usage errors
//! (bad flags, missing input files, refusing to overwrite without
//! `--force`). All randomness flows from `--seed`, so equal invocations
//! produce byte-identical outputs.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use wardflow::engine::{load_workflows, process_log, EngineConfig, MonitorOutput};
use wardflow::epi::{build_contact_network, risk_map, trace_patient_zero, trace_routes};
use wardflow::his::{
    build_registry, discharge_markers, escalate_alerts, merge_markers, read_adt_path,
};
use wardflow::hygiene::{
    compliance_stats, hand_hygiene_definition, terminal_cleaning_definition, HygieneParams,
};
use wardflow::ledger::{
    alerts_to_string, log_to_string, pseudonymize, read_log_path, validate_log, SensorEvent,
};
use wardflow::simward::{load_layout, load_policies, simulate};
use wardflow::wfdl::{parse_and_validate, ValidatedWorkflow};

#[derive(Parser)]
#[command(name = "wardflow", version, about = "Workflow-based ward hygiene monitoring")]
struct Cli {
    /// Seed for all randomness; required by `simulate`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Include a per-transition trace in monitor reports.
    #[arg(long, global = true)]
    trace: bool,

    /// Hex-encoded salt; pseudonymizes worker and bed ids before
    /// monitoring.
    #[arg(long, global = true, value_name = "HEX")]
    pseudonymize_salt: Option<String>,

    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check workflow definition files and print diagnostics.
    Validate {
        /// Definition files to check.
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Generate a sensor log from a ward layout and worker policies.
    Simulate {
        /// Ward layout JSON (rooms, beds, sinks, dispensers).
        #[arg(long)]
        layout: PathBuf,
        /// Worker policy JSON array.
        #[arg(long)]
        policies: PathBuf,
        /// Timestamp of the first event, in ms.
        #[arg(long, default_value_t = 0)]
        start_ts: i64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a sensor log through monitoring workflows and emit alerts.
    Monitor {
        /// Sensor event log (JSON Lines).
        #[arg(long)]
        events: PathBuf,
        /// Workflow definition files; the two bundled workflows when
        /// absent. Repeat the flag for several files.
        #[arg(long = "workflows", value_name = "FILE")]
        workflows: Vec<PathBuf>,
        /// ADT feed; injects discharge markers and escalates contact
        /// alerts for elevated-risk patients.
        #[arg(long)]
        adt: Option<PathBuf>,
        /// Alert output file (JSON Lines); stdout when absent.
        #[arg(long)]
        alerts_out: Option<PathBuf>,
        /// Optional JSON run report (engine statistics, compliance
        /// summary, trace when `--trace` is set).
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Rank outbreak origin candidates over the contact network.
    Trace {
        /// Sensor event log (JSON Lines).
        #[arg(long)]
        events: PathBuf,
        /// ADT feed resolving bed occupancy to patients.
        #[arg(long)]
        adt: PathBuf,
        /// Comma-separated infected node ids.
        #[arg(long, value_delimiter = ',', required = true)]
        infected: Vec<String>,
        /// Maximum gap between consecutive contacts on a path, in ms.
        #[arg(long)]
        window: i64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-room contact and violation table.
    Riskmap {
        /// Sensor event log (JSON Lines).
        #[arg(long)]
        events: PathBuf,
        /// Workflow definition files; bundled workflows when absent.
        #[arg(long = "workflows", value_name = "FILE")]
        workflows: Vec<PathBuf>,
        /// ADT feed; includes discharge-driven alerts in the table.
        #[arg(long)]
        adt: Option<PathBuf>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hand-hygiene compliance summary for a log.
    Stats {
        /// Sensor event log (JSON Lines).
        #[arg(long)]
        events: PathBuf,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Failure {
    /// Input content is wrong: exit 1.
    Domain(String),
    /// The invocation is wrong: exit 2.
    Usage(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Validate { files } => cmd_validate(files),
        Command::Simulate { layout, policies, start_ts, out } => {
            cmd_simulate(&cli, layout, policies, *start_ts, out.as_deref())
        }
        Command::Monitor { events, workflows, adt, alerts_out, report_out } => cmd_monitor(
            &cli,
            events,
            workflows,
            adt.as_deref(),
            alerts_out.as_deref(),
            report_out.as_deref(),
        ),
        Command::Trace { events, adt, infected, window, out } => {
            cmd_trace(&cli, events, adt, infected, *window, out.as_deref())
        }
        Command::Riskmap { events, workflows, adt, out } => {
            cmd_riskmap(&cli, events, workflows, adt.as_deref(), out.as_deref())
        }
        Command::Stats { events, out } => cmd_stats(&cli, events, out.as_deref()),
    }
}

/// Missing input files are invocation mistakes, not data errors.
fn require_file(path: &Path) -> Result<(), Failure> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Failure::Usage(format!("{}: no such file", path.display())))
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    require_file(path)?;
    fs::read_to_string(path)
        .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, force: bool, contents: &str) -> Result<(), Failure> {
    let Some(path) = out else {
        print!("{contents}");
        return Ok(());
    };
    if path.exists() && !force {
        return Err(Failure::Usage(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    fs::write(path, contents)
        .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

fn to_pretty_json<T: serde::Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
    text.push('\n');
    text
}

fn cmd_validate(files: &[PathBuf]) -> Result<(), Failure> {
    for file in files {
        require_file(file)?;
    }
    let mut failed = 0usize;
    for file in files {
        let source = read_input(file)?;
        match parse_and_validate(&source) {
            Ok(validated) => {
                for warning in &validated.warnings {
                    eprintln!("{}: warning: {warning}", file.display());
                }
                println!("{}: ok", file.display());
            }
            Err(errors) => {
                failed += 1;
                for error in errors {
                    eprintln!("{}:{error}", file.display());
                }
            }
        }
    }
    if failed > 0 {
        Err(Failure::Domain(format!("{failed} definition(s) failed validation")))
    } else {
        Ok(())
    }
}

fn cmd_simulate(
    cli: &Cli,
    layout_path: &Path,
    policies_path: &Path,
    start_ts: i64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let seed = cli
        .seed
        .ok_or_else(|| Failure::Usage("simulate requires --seed".to_string()))?;
    let layout = load_layout(&read_input(layout_path)?)
        .map_err(|e| Failure::Domain(format!("{}: {e}", layout_path.display())))?;
    let policies = load_policies(&read_input(policies_path)?)
        .map_err(|e| Failure::Domain(format!("{}: {e}", policies_path.display())))?;
    let events = simulate(&layout, &policies, seed, start_ts);
    write_output(out, cli.force, &log_to_string(&events))
}

/// Workflow definitions for a run: the named files, or the two bundled
/// definitions when none are named.
fn load_definitions(paths: &[PathBuf]) -> Result<Vec<ValidatedWorkflow>, Failure> {
    if paths.is_empty() {
        return [hand_hygiene_definition(), terminal_cleaning_definition()]
            .into_iter()
            .map(|source| {
                parse_and_validate(source)
                    .map_err(|e| Failure::Domain(format!("bundled workflow: {:?}", e)))
            })
            .collect();
    }
    let mut defs = Vec::with_capacity(paths.len());
    for path in paths {
        let source = read_input(path)?;
        let validated = parse_and_validate(&source).map_err(|errors| {
            let lines: Vec<String> = errors
                .iter()
                .map(|e| format!("{}:{e}", path.display()))
                .collect();
            Failure::Domain(lines.join("\n"))
        })?;
        defs.push(validated);
    }
    Ok(defs)
}

struct Pipeline {
    /// The monitored stream: input events, pseudonymized if requested,
    /// with discharge markers merged in.
    events: Vec<SensorEvent>,
    output: MonitorOutput,
}

/// The shared monitor pipeline: read, validate, optionally pseudonymize,
/// optionally merge an ADT feed, run the engine, escalate severities.
fn run_pipeline(
    cli: &Cli,
    events_path: &Path,
    workflow_paths: &[PathBuf],
    adt_path: Option<&Path>,
    trace: bool,
) -> Result<Pipeline, Failure> {
    require_file(events_path)?;
    let mut events = read_log_path(events_path)
        .map_err(|e| Failure::Domain(format!("{}: {e}", events_path.display())))?;

    let report = validate_log(&events);
    if !report.is_ok() {
        let mut lines: Vec<String> = report
            .violations
            .iter()
            .take(5)
            .map(|v| format!("event {}: {}", v.seq, v.description))
            .collect();
        if report.violations.len() > 5 {
            lines.push(format!("... and {} more", report.violations.len() - 5));
        }
        return Err(Failure::Domain(format!(
            "{} is not a valid log:\n{}",
            events_path.display(),
            lines.join("\n")
        )));
    }

    if let Some(salt_hex) = &cli.pseudonymize_salt {
        if adt_path.is_some() {
            // The feed carries raw ids; mixing it with a pseudonymized
            // stream would silently disable occupancy lookups.
            return Err(Failure::Usage(
                "--pseudonymize-salt cannot be combined with --adt".to_string(),
            ));
        }
        let salt = hex::decode(salt_hex)
            .map_err(|_| Failure::Usage("--pseudonymize-salt must be hex".to_string()))?;
        events = pseudonymize(&events, &salt)
            .map_err(|e| Failure::Domain(e.to_string()))?;
    }

    let registry = match adt_path {
        None => None,
        Some(path) => {
            require_file(path)?;
            let adt = read_adt_path(path)
                .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
            let registry = build_registry(&adt)
                .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
            events = merge_markers(&events, &discharge_markers(&adt));
            Some(registry)
        }
    };

    let defs = load_definitions(workflow_paths)?;
    let config: EngineConfig =
        load_workflows(&defs).map_err(|e| Failure::Domain(e.to_string()))?;
    let mut output = process_log(&config, &events, trace)
        .map_err(|e| Failure::Domain(e.to_string()))?;
    if let Some(registry) = &registry {
        escalate_alerts(&mut output.alerts, &events, registry);
    }
    Ok(Pipeline { events, output })
}

fn cmd_monitor(
    cli: &Cli,
    events: &Path,
    workflows: &[PathBuf],
    adt: Option<&Path>,
    alerts_out: Option<&Path>,
    report_out: Option<&Path>,
) -> Result<(), Failure> {
    let pipeline = run_pipeline(cli, events, workflows, adt, cli.trace)?;
    write_output(alerts_out, cli.force, &alerts_to_string(&pipeline.output.alerts))?;
    if let Some(report_path) = report_out {
        let compliance = compliance_stats(
            &pipeline.events,
            &pipeline.output.alerts,
            &HygieneParams::default(),
        );
        let mut report = serde_json::Map::new();
        report.insert(
            "engine".to_string(),
            serde_json::to_value(&pipeline.output.stats).expect("stats serialize"),
        );
        report.insert(
            "compliance".to_string(),
            serde_json::to_value(&compliance).expect("stats serialize"),
        );
        if let Some(trace) = &pipeline.output.trace {
            report.insert(
                "trace".to_string(),
                serde_json::to_value(trace).expect("trace serializes"),
            );
        }
        write_output(
            Some(report_path),
            cli.force,
            &to_pretty_json(&serde_json::Value::Object(report)),
        )?;
    }
    Ok(())
}

fn cmd_trace(
    cli: &Cli,
    events_path: &Path,
    adt_path: &Path,
    infected: &[String],
    window: i64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    require_file(events_path)?;
    require_file(adt_path)?;
    let events = read_log_path(events_path)
        .map_err(|e| Failure::Domain(format!("{}: {e}", events_path.display())))?;
    let adt = read_adt_path(adt_path)
        .map_err(|e| Failure::Domain(format!("{}: {e}", adt_path.display())))?;
    let registry = build_registry(&adt)
        .map_err(|e| Failure::Domain(format!("{}: {e}", adt_path.display())))?;
    let graph = build_contact_network(&events, &registry);
    let infected: BTreeSet<String> = infected.iter().cloned().collect();
    let result = trace_patient_zero(&graph, &infected, window)
        .map_err(|e| Failure::Domain(e.to_string()))?;
    let routes = match result.ranked.first() {
        Some(top) => trace_routes(&graph, &top.id, &infected, window)
            .map_err(|e| Failure::Domain(e.to_string()))?,
        None => Vec::new(),
    };
    let output = serde_json::json!({
        "ranked": result.ranked,
        "routes": routes,
    });
    write_output(out, cli.force, &to_pretty_json(&output))
}

fn cmd_riskmap(
    cli: &Cli,
    events: &Path,
    workflows: &[PathBuf],
    adt: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let pipeline = run_pipeline(cli, events, workflows, adt, false)?;
    let rows = risk_map(&pipeline.events, &pipeline.output.alerts);
    write_output(out, cli.force, &to_pretty_json(&rows))
}

fn cmd_stats(cli: &Cli, events: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let pipeline = run_pipeline(cli, events, &[], None, false)?;
    let stats = compliance_stats(
        &pipeline.events,
        &pipeline.output.alerts,
        &HygieneParams::default(),
    );
    write_output(out, cli.force, &to_pretty_json(&stats))
}
