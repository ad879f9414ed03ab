use std::ffi::OsString;
use std::io::Write;
use std::net::{TcpListener, TcpStream};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use vdp_core::agent::AgentMode;
use vdp_core::controller::{export_recording, run_session, ControllerOptions, Script, SessionConfig, SessionRecording};
use vdp_core::footprint::{
    build_memory_report, categorize, comparison_csv, parse_rules, render_comparison, Category, ElfFile,
};
use vdp_core::sensor::{OdrHz, SensorFixture};
use vdp_core::sim::SimTime;

use crate::bridge::{connect_controller, serve_agent};
use crate::history::{history_table, load_history, load_memory_table, replay_iterations, HISTORY_CSV, MEMORY_CSV};
use crate::output::{csv_text, json_text, opt, table_text, us, Format};
use crate::presets::{load_params, preset_names, PRESETS};
use crate::sweep::{default_skew, max_sustainable_odr, run_sweep};
use crate::trace::run_trace;
use crate::BenchError;

const SELF_RULES: &str = include_str!("../rules/self.rules");

#[derive(Debug, Parser)]
#[command(name = "vdp-bench", version, about = "Timing traces, ODR sweeps, sessions and footprint reports")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Fsm,
    Tasks,
}

impl From<ModeArg> for AgentMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Fsm => AgentMode::FsmLoop,
            ModeArg::Tasks => AgentMode::EventTasks,
        }
    }
}

#[derive(Debug, Args)]
struct Common {
    /// Agent architecture.
    #[arg(long, value_enum, default_value = "fsm")]
    mode: ModeArg,
    /// Preset name or path to a timing TOML file.
    #[arg(long)]
    config: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportKind {
    /// Published optimization history points with step deltas.
    History,
    /// ROM/RAM comparison table.
    Memory,
    /// Simulated replay of the throughput-tuning stages.
    Replay,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Per-cycle interval breakdown of a single-sensor stream.
    Trace {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        cycles: usize,
        #[arg(long, default_value_t = 7680)]
        odr: u32,
        /// Emit one row per cycle instead of averages (csv/json only).
        #[arg(long)]
        per_cycle: bool,
    },
    /// Achieved throughput and drops across output data rates.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Comma-separated ODRs; defaults to the whole ladder.
        #[arg(long, value_delimiter = ',')]
        odrs: Vec<u32>,
        #[arg(long, default_value_t = 2_000)]
        cycles: u64,
    },
    /// Runs a command script against a simulated agent and exports CSVs.
    Session {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        timeout_ms: u64,
    },
    /// Serves one simulated agent over TCP until the peer disconnects.
    ServeAgent {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
    },
    /// Drives a served agent with a command script and exports CSVs.
    ConnectController {
        #[arg(long, default_value = "127.0.0.1:7878")]
        connect: String,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1_000)]
        timeout_ms: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Section sizes, memory report and symbol categories of an ELF file.
    Footprint {
        /// ELF path, or `self` for this executable.
        target: String,
        /// `pattern=category` rules; defaults to the rules for this workspace.
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Stack reservation in bytes.
        #[arg(long, default_value_t = 0)]
        stack: u64,
        /// Peak heap use in bytes.
        #[arg(long, default_value_t = 0)]
        heap: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Renders history, memory or tuning-replay tables.
    Report {
        #[arg(value_enum)]
        kind: ReportKind,
        /// Alternative CSV input (history and memory).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, default_value_t = 2_000)]
        cycles: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Lists shipped presets, or prints one.
    Presets { name: Option<String> },
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit status.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn odr(hz: u32) -> Result<OdrHz, BenchError> {
    OdrHz::new(hz).ok_or_else(|| BenchError::Usage(format!("{hz} Hz is not a supported ODR")))
}

fn dispatch(cmd: Cmd, out: &mut dyn Write) -> Result<(), BenchError> {
    let text = match cmd {
        Cmd::Trace { common, cycles, odr: hz, per_cycle } => trace_cmd(common, cycles, odr(hz)?, per_cycle)?,
        Cmd::Sweep { common, odrs, cycles } => sweep_cmd(common, &odrs, cycles)?,
        Cmd::Session { common, script, out: dir, timeout_ms } => {
            let script = read_script(&script)?;
            let mut cfg = SessionConfig::new(common.mode.into());
            cfg.params = load_params(common.config.as_deref())?;
            cfg.controller.timeout_ns = timeout_ms * 1_000_000;
            cfg.time_limit = SimTime::from_ms(3_600_000);
            let rec = run_session(&script, cfg)?;
            export_recording(&rec, &dir)?;
            session_summary(&rec, common.format)?
        }
        Cmd::ServeAgent { common, listen } => {
            let params = load_params(common.config.as_deref())?;
            let listener = TcpListener::bind(&listen)?;
            writeln!(out, "listening on {}", listener.local_addr()?)?;
            out.flush()?;
            let s = serve_agent(&listener, common.mode.into(), &params, &SensorFixture::reference())?;
            format!("served {} bytes in, {} bytes out over {:.3} s\n", s.bytes_in, s.bytes_out, s.sim_ns as f64 / 1e9)
        }
        Cmd::ConnectController { connect, script, out: dir, timeout_ms, format } => {
            let script = read_script(&script)?;
            let stream = TcpStream::connect(&connect)?;
            let opts = ControllerOptions { timeout_ns: timeout_ms * 1_000_000, ..ControllerOptions::default() };
            let rec = connect_controller(stream, SensorFixture::reference().model, &script, opts)?;
            export_recording(&rec, &dir)?;
            session_summary(&rec, format)?
        }
        Cmd::Footprint { target, rules, stack, heap, format } => footprint_cmd(&target, rules.as_deref(), stack, heap, format)?,
        Cmd::Report { kind, data, cycles, format } => report_cmd(kind, data.as_deref(), cycles, format)?,
        Cmd::Presets { name: None } => preset_names().map(|n| format!("{n}\n")).collect(),
        Cmd::Presets { name: Some(n) } => PRESETS
            .iter()
            .find(|(p, _)| *p == n)
            .map(|(_, src)| src.to_string())
            .ok_or_else(|| BenchError::Usage(format!("no preset named `{n}`")))?,
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn read_script(path: &Path) -> Result<Script, BenchError> {
    Ok(Script::parse(&std::fs::read_to_string(path)?)?)
}

fn trace_cmd(common: Common, cycles: usize, odr: OdrHz, per_cycle: bool) -> Result<String, BenchError> {
    let params = load_params(common.config.as_deref())?;
    let r = run_trace(common.mode.into(), &params, odr, cycles)?;
    if per_cycle && common.format != Format::Text {
        return match common.format {
            Format::Json => Ok(json_text(&r.per_cycle)),
            _ => csv_text(
                &["cycle", "p0_ns", "p1_ns", "p2_ns", "p3_ns", "p4_ns", "uart_ns", "log_ns", "status_read_ns", "p5_ns", "p6_ns"],
                r.per_cycle.iter().enumerate().map(|(i, c)| {
                    [i as u64, c.p0, c.p1, c.p2, c.p3, c.p4, c.uart, c.log, c.status_read, c.p5, c.p6]
                        .iter()
                        .map(u64::to_string)
                        .collect()
                }),
            ),
        };
    }
    let rows: Vec<Vec<String>> = r.rows().into_iter().map(|(k, v)| vec![k.to_string(), v.map(us).unwrap_or_default()]).collect();
    Ok(match common.format {
        Format::Json => json_text(&r),
        Format::Csv => csv_text(&["interval", "us"], rows)?,
        Format::Text => format!(
            "mode {}, {} Hz, {} cycles\n{}max closure error: {} ns\n",
            r.mode,
            r.odr_hz,
            r.cycles,
            table_text(&["interval", "us"], &rows),
            r.max_closure_error_ns
        ),
    })
}

fn sweep_cmd(common: Common, odrs: &[u32], cycles: u64) -> Result<String, BenchError> {
    let params = load_params(common.config.as_deref())?;
    let mode: AgentMode = common.mode.into();
    let list: Vec<OdrHz> = if odrs.is_empty() { OdrHz::ladder().collect() } else { odrs.iter().map(|&h| odr(h)).collect::<Result<_, _>>()? };
    let r = run_sweep(mode, &params, &list, cycles)?;
    let rows: Vec<Vec<String>> = r
        .points
        .iter()
        .map(|p| {
            vec![
                p.target_hz.to_string(),
                us(p.period_ns as f64 / 1e3),
                us(p.busy_ns as f64 / 1e3),
                format!("{:.1}", p.achieved_hz),
                p.drops.to_string(),
            ]
        })
        .collect();
    let header = ["target_hz", "period_us", "busy_us", "achieved_hz", "drops"];
    Ok(match common.format {
        Format::Json => json_text(&r),
        Format::Csv => csv_text(&header, rows)?,
        Format::Text => {
            let max = max_sustainable_odr(&params, mode, default_skew());
            format!(
                "mode {}, {} cycles per ODR\n{}max sustainable ODR: {}\n",
                r.mode,
                r.cycles,
                table_text(&header, &rows),
                max.map(|o| format!("{} Hz", o.hz())).unwrap_or_else(|| "none".into())
            )
        }
    })
}

fn session_summary(rec: &SessionRecording, format: Format) -> Result<String, BenchError> {
    let rows: Vec<Vec<String>> = rec
        .channels
        .iter()
        .map(|c| vec![c.channel.to_string(), c.sensor.clone(), c.samples.len().to_string(), c.gaps.to_string()])
        .collect();
    let header = ["channel", "sensor", "samples", "gaps"];
    Ok(match format {
        Format::Json => {
            let v: Vec<_> = rec
                .channels
                .iter()
                .map(|c| serde_json::json!({"channel": c.channel, "sensor": c.sensor, "samples": c.samples.len(), "gaps": c.gaps}))
                .collect();
            json_text(&serde_json::json!({
                "channels": v,
                "commands": rec.transcript.len(),
                "finalized": rec.finalized,
                "protocol_errors": rec.protocol_errors,
            }))
        }
        Format::Csv => csv_text(&header, rows)?,
        Format::Text => format!(
            "{}{} commands answered, finalized: {}, protocol errors: {}\n",
            table_text(&header, &rows),
            rec.transcript.len(),
            rec.finalized,
            rec.protocol_errors
        ),
    })
}

fn footprint_cmd(target: &str, rules: Option<&Path>, stack: u64, heap: u64, format: Format) -> Result<String, BenchError> {
    let path = if target == "self" { std::env::current_exe()? } else { PathBuf::from(target) };
    let bytes = std::fs::read(&path)?;
    let elf = ElfFile::parse(&bytes)?;
    let rules = match rules {
        Some(p) => parse_rules(&std::fs::read_to_string(p)?)?,
        None => parse_rules(SELF_RULES)?,
    };
    let symbols = elf.symbols()?;
    let breakdown = categorize(&symbols, &rules);
    let sections: Vec<_> = elf.sections.iter().filter(|s| s.index != 0).collect();
    let report = build_memory_report(&elf.sections, stack, heap);
    Ok(match format {
        Format::Json => json_text(&serde_json::json!({
            "sections": sections.iter().map(|s| serde_json::json!({"name": s.name, "size": s.size})).collect::<Vec<_>>(),
            "memory": {
                "text": report.text, "rodata": report.rodata, "total_rom": report.total_rom,
                "stack": report.stack, "static_ram": report.static_ram, "heap": report.heap,
                "total_ram": report.total_ram,
            },
            "categories": Category::ALL.iter().map(|c| (c.as_str(), breakdown.get(*c))).collect::<std::collections::BTreeMap<_, _>>(),
            "uncategorized": breakdown.uncategorized,
        })),
        Format::Csv => breakdown.to_csv(),
        Format::Text => {
            let srows: Vec<Vec<String>> = sections.iter().map(|s| vec![s.name.clone(), s.size.to_string()]).collect();
            let mrows: Vec<Vec<String>> = [
                ("text", report.text),
                ("rodata", report.rodata),
                ("total_rom", report.total_rom),
                ("stack", report.stack),
                ("static_ram", report.static_ram),
                ("heap", report.heap),
                ("total_ram", report.total_ram),
            ]
            .iter()
            .map(|(k, v)| vec![k.to_string(), v.to_string()])
            .collect();
            let mut crows: Vec<Vec<String>> = Category::ALL
                .iter()
                .map(|c| vec![c.to_string(), breakdown.get(*c).to_string(), breakdown.symbols[*c as usize].to_string()])
                .collect();
            crows.push(vec!["Uncategorized".into(), breakdown.uncategorized.to_string(), breakdown.uncategorized_symbols.to_string()]);
            format!(
                "{}\n{}\n{}",
                table_text(&["section", "bytes"], &srows),
                table_text(&["metric", "bytes"], &mrows),
                table_text(&["category", "bytes", "symbols"], &crows)
            )
        }
    })
}

fn report_cmd(kind: ReportKind, data: Option<&Path>, cycles: u64, format: Format) -> Result<String, BenchError> {
    let input = |embedded: &str| -> Result<String, BenchError> {
        Ok(match data {
            Some(p) => std::fs::read_to_string(p)?,
            None => embedded.to_owned(),
        })
    };
    match kind {
        ReportKind::History => {
            let rows = history_table(&load_history(&input(HISTORY_CSV)?)?);
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let p = &r.point;
                    vec![p.series.clone(), p.implementation.clone(), p.stage.clone(), p.metric.clone(), p.value.to_string(), opt(r.delta), p.note.clone()]
                })
                .collect();
            let header = ["series", "implementation", "stage", "metric", "value", "delta", "note"];
            Ok(match format {
                Format::Json => json_text(&rows),
                Format::Csv => csv_text(&header, cells)?,
                Format::Text => table_text(&header, &cells),
            })
        }
        ReportKind::Memory => {
            let t = load_memory_table(&input(MEMORY_CSV)?)?;
            let [(an, a), (bn, b)] = <[_; 2]>::try_from(t)
                .map_err(|_| BenchError::Usage("memory table needs exactly two rows".into()))?;
            Ok(match format {
                Format::Json => json_text(&serde_json::json!({
                    an.clone(): memory_json(&a),
                    bn.clone(): memory_json(&b),
                    "delta_total_ram": b.total_ram as i64 - a.total_ram as i64,
                })),
                Format::Csv => comparison_csv(&an, &a, &bn, &b),
                Format::Text => render_comparison(&an, &a, &bn, &b),
            })
        }
        ReportKind::Replay => {
            let rows = replay_iterations(cycles)?;
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.stage.clone(),
                        r.mode.to_string(),
                        us(r.busy_ns as f64 / 1e3),
                        opt(r.max_sustainable_hz),
                        format!("{:.1}", r.plateau_hz),
                        format!("{:.1}", r.simulated_hz),
                        r.drops.to_string(),
                        opt(r.cited_hz),
                    ]
                })
                .collect();
            let header = ["stage", "mode", "busy_us", "max_odr_hz", "plateau_hz", "simulated_hz", "drops", "cited_hz"];
            Ok(match format {
                Format::Json => json_text(&rows),
                Format::Csv => csv_text(&header, cells)?,
                Format::Text => table_text(&header, &cells),
            })
        }
    }
}

fn memory_json(r: &vdp_core::footprint::MemoryReport) -> serde_json::Value {
    serde_json::json!({
        "text": r.text, "rodata": r.rodata, "total_rom": r.total_rom,
        "stack": r.stack, "static_ram": r.static_ram, "heap": r.heap,
        "total_ram": r.total_ram, "stated_total_ram": r.stated_total_ram,
    })
}
