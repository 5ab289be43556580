use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sramdse::calibrate::{calibrate, default_targets, render, Target};
use sramdse::config::{fmt_num, Config};
use sramdse::report::{emit_reports, record_csv_header, record_csv_row, record_json, record_table, summary, whole};
use sramdse::sweep::{run_sweep, SweepResult};
use sramdse_core::eval::evaluate;
use sramdse_core::workload::Phase;

#[derive(Parser)]
#[command(name = "sramdse", version, about = "Latency, energy and roofline sweeps for systolic-array LLM inference")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Evaluate one phase at the configured design point.
    Simulate(Run),
    /// Run the full sweep and write grids, roofline and summary files.
    Sweep(Run),
    /// Print roofline points of the sweep.
    Roofline(Run),
    /// Fit SRAM energy constants to EDP argmin targets.
    Calibrate(CalibrateArgs),
    /// Print argmins and bound transitions of the sweep.
    Report(Run),
}

#[derive(Args)]
struct Common {
    /// Config file of `dotted.key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value`, applied after the config file; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct Run {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    phase: Option<PhaseArg>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    common: Common,
    /// `phase:bw_gbps:s_kb:f_mhz`; repeatable. Defaults to decode:2048:32:600.
    #[arg(long)]
    target: Vec<String>,
    /// File for the fitted constants; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PhaseArg {
    Prefill,
    Decode,
}

impl From<PhaseArg> for Phase {
    fn from(p: PhaseArg) -> Phase {
        match p {
            PhaseArg::Prefill => Phase::Prefill,
            PhaseArg::Decode => Phase::Decode,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_UNREACHED: u8 = 3;

fn load(common: &Common) -> Result<Config, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            Config::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => Config::default(),
    };
    cfg.apply_overrides(&common.overrides).map_err(|e| e.to_string())?;
    cfg.system.validate().map_err(|e| e.to_string())?;
    cfg.sweep.validate()?;
    Ok(cfg)
}

fn sweep_for(cfg: &Config, phase: Option<PhaseArg>, jobs: usize) -> SweepResult {
    let mut spec = cfg.sweep.clone();
    if let Some(p) = phase {
        spec.phases = vec![p.into()];
    }
    run_sweep(&spec, &cfg.system, jobs)
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn simulate(run: &Run, cfg: &Config) -> anyhow::Result<u8> {
    let phase = run.phase.map_or(Phase::Decode, Phase::from);
    let rec = evaluate(&cfg.system, phase)?;
    match run.format {
        Format::Table => {
            println!("decode_mode  {}", cfg.system.decode.label());
            print!("{}", record_table(&rec));
        }
        Format::Json => print_json(&record_json(&rec)),
        Format::Csv => println!("{}\n{}", record_csv_header(), record_csv_row(&rec)),
    }
    Ok(0)
}

fn write_sweep(run: &Run, cfg: &Config) -> anyhow::Result<u8> {
    let t0 = Instant::now();
    let res = sweep_for(cfg, run.phase, run.common.jobs);
    let out = run.out.clone().unwrap_or_else(|| PathBuf::from("sweep-out"));
    let set = emit_reports(&res, &out)?;
    for w in &set.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "{} records ({} failed) in {:.2}s, {} files under {}",
        res.records.len(),
        res.failures(),
        t0.elapsed().as_secs_f64(),
        set.files.len(),
        out.display()
    );
    for rec in res.records.iter().filter(|r| r.outcome.is_err()) {
        if let Err(e) = &rec.outcome {
            eprintln!("failed: {} S={} f={} bw={}: {e}", rec.phase.name(), rec.point.s, rec.point.f, rec.point.bw);
        }
    }
    Ok(if res.failures() == 0 { 0 } else { EXIT_FAILED })
}

fn roofline(run: &Run, cfg: &Config) -> anyhow::Result<u8> {
    let res = sweep_for(cfg, run.phase, run.common.jobs);
    let rows: Vec<_> = res
        .records
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .map(|r| {
            json!({
                "phase": r.phase.name(),
                "bandwidth": whole(r.point.bw),
                "s_bytes": r.point.s,
                "f_hz": whole(r.point.f),
                "oi": r.roofline.oi,
                "peak_flops": r.roofline.peak,
                "attainable_flops": r.roofline.attainable,
                "achieved_flops": r.roofline.achieved,
                "bound": r.roofline.bound.name(),
            })
        })
        .collect();
    match run.format {
        Format::Json => print_json(&Value::Array(rows)),
        Format::Csv => print!("{}", sramdse::report::roofline_csv(&res)),
        Format::Table => {
            println!(
                "{:<8} {:>6} {:>8} {:>6} {:>10} {:>12} {:>12} bound",
                "phase", "bw_GBs", "S_KB", "f_MHz", "oi", "attain_TF", "achieved_TF"
            );
            for r in res.records.iter().filter_map(|r| r.outcome.as_ref().ok()) {
                println!(
                    "{:<8} {:>6} {:>8} {:>6} {:>10.2} {:>12.2} {:>12.2} {}",
                    r.phase.name(),
                    r.point.bw / 1e9,
                    r.point.s / 1024,
                    r.point.f / 1e6,
                    r.roofline.oi,
                    r.roofline.attainable / 1e12,
                    r.roofline.achieved / 1e12,
                    r.roofline.bound.name()
                );
            }
        }
    }
    Ok(if res.failures() == 0 { 0 } else { EXIT_FAILED })
}

fn report(run: &Run, cfg: &Config) -> anyhow::Result<u8> {
    let res = sweep_for(cfg, run.phase, run.common.jobs);
    let s = summary(&res);
    match run.format {
        Format::Json => print_json(&s),
        Format::Table | Format::Csv => {
            println!(
                "decode_mode {}  records {}  failed {}",
                s["decode_mode"].as_str().unwrap_or(""),
                s["records"],
                s["failed"]
            );
            let kb = |v: &Value| v["s_bytes"].as_u64().map_or(0, |b| b / 1024);
            let mhz = |v: &Value| v["f_hz"].as_f64().map_or(0.0, |f| f / 1e6);
            for g in s["grids"].as_array().into_iter().flatten() {
                let bw = g["bandwidth"].as_f64().unwrap_or(0.0) / 1e9;
                let edp = &g["edp_argmin"];
                let en = &g["total_energy_argmin"];
                println!(
                    "{:<8} {:>5} GB/s  edp argmin {:>5} KB {:>5} MHz  energy argmin {:>5} KB {:>5} MHz  energy argmin S by f (KB) {:?}",
                    g["phase"].as_str().unwrap_or(""),
                    bw,
                    kb(edp),
                    mhz(edp),
                    kb(en),
                    mhz(en),
                    g["energy_argmin_s_by_f"]
                        .as_array()
                        .into_iter()
                        .flatten()
                        .map(|v| v.as_u64().unwrap_or(0) / 1024)
                        .collect::<Vec<_>>()
                );
            }
        }
    }
    if let Some(out) = &run.out {
        emit_reports(&res, out)?;
    }
    Ok(if res.failures() == 0 { 0 } else { EXIT_FAILED })
}

fn run_calibrate(args: &CalibrateArgs, cfg: &Config) -> anyhow::Result<u8> {
    let targets = if args.target.is_empty() {
        default_targets()
    } else {
        match args.target.iter().map(|t| Target::parse(t)).collect::<Result<Vec<_>, _>>() {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: {e}");
                return Ok(EXIT_CONFIG);
            }
        }
    };
    let c = calibrate(&cfg.system, &cfg.sweep, &targets)?;
    if c.displacement > 0 {
        eprintln!(
            "error: targets not reached; best displacement {} grid steps at leakage_per_byte={} access_energy_ref={}",
            c.displacement,
            fmt_num(c.leakage_per_byte),
            fmt_num(c.access_energy_ref)
        );
        return Ok(EXIT_UNREACHED);
    }
    let body = render(&c, &targets);
    match &args.out {
        Some(p) => write_file(p, &body)?,
        None => print!("{body}"),
    }
    Ok(0)
}

fn write_file(p: &Path, body: &str) -> anyhow::Result<()> {
    std::fs::write(p, body).with_context(|| format!("writing {}", p.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.verb {
        Verb::Simulate(r) | Verb::Sweep(r) | Verb::Roofline(r) | Verb::Report(r) => &r.common,
        Verb::Calibrate(c) => &c.common,
    };
    let cfg = match load(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let outcome = match &cli.verb {
        Verb::Simulate(r) => simulate(r, &cfg),
        Verb::Sweep(r) => write_sweep(r, &cfg),
        Verb::Roofline(r) => roofline(r, &cfg),
        Verb::Report(r) => report(r, &cfg),
        Verb::Calibrate(c) => run_calibrate(c, &cfg),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}
