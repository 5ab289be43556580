//! CSV grids, roofline table and JSON summary of a sweep.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde_json::{json, Value};

use sramdse_core::analysis::Metric;
use sramdse_core::eval::PointRecord;
use sramdse_core::workload::Phase;

use crate::sweep::SweepResult;

pub const SCHEMA_VERSION: u64 = 1;

fn bound_name(memory: bool) -> &'static str {
    if memory {
        "memory"
    } else {
        "compute"
    }
}

/// Flat, ordered fields of one evaluated point.
pub fn record_fields(r: &PointRecord) -> Vec<(&'static str, Value)> {
    let res = &r.result;
    let t = &res.traffic;
    let e = &r.energy;
    let rf = &r.roofline;
    vec![
        ("phase", json!(r.phase.name())),
        ("s_bytes", json!(r.point.s)),
        ("f_hz", whole(r.point.f)),
        ("bandwidth", whole(r.point.bw)),
        ("bound", json!(bound_name(res.memory_bound()))),
        ("compute_cycles", json!(res.compute_cycles)),
        ("total_cycles", json!(res.total_cycles)),
        ("compute_time_s", json!(res.compute_time)),
        ("memory_time_s", json!(res.memory_time)),
        ("latency_s", json!(res.latency)),
        ("compute_fraction", json!(res.compute_fraction)),
        ("utilization", json!(res.utilization)),
        ("flops", json!(res.flops)),
        ("dram_bytes", json!(t.dram_bytes)),
        ("onchip_bytes", json!(t.onchip_bytes)),
        ("local_reads", json!(t.local_reads)),
        ("local_writes", json!(t.local_writes)),
        ("global_reads", json!(t.global_reads)),
        ("global_writes", json!(t.global_writes)),
        ("static_j", json!(e.static_j)),
        ("dynamic_j", json!(e.dynamic_j)),
        ("total_j", json!(e.total_j)),
        ("dynamic_power_w", json!(e.dynamic_power_w)),
        ("local_static_j", json!(e.local_buffers.static_j)),
        ("local_dynamic_j", json!(e.local_buffers.dynamic_j)),
        ("global_static_j", json!(e.global_buffer.static_j)),
        ("global_dynamic_j", json!(e.global_buffer.dynamic_j)),
        ("array_static_j", json!(e.arrays.static_j)),
        ("array_dynamic_j", json!(e.arrays.dynamic_j)),
        ("edp", json!(r.metric.edp)),
        ("oi", json!(rf.oi)),
        ("peak_flops", json!(rf.peak)),
        ("attainable_flops", json!(rf.attainable)),
        ("achieved_flops", json!(rf.achieved)),
        ("roofline_bound", json!(rf.bound.name())),
    ]
}

/// Integral values print without a fractional part.
pub fn whole(x: f64) -> Value {
    if x.fract() == 0.0 && x.abs() < 9e15 {
        json!(x as i64)
    } else {
        json!(x)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

pub fn record_csv_header() -> String {
    let names: Vec<_> = record_fields(&dummy()).into_iter().map(|(k, _)| k).collect();
    names.join(",")
}

pub fn record_csv_row(r: &PointRecord) -> String {
    record_fields(r).iter().map(|(_, v)| cell(v)).collect::<Vec<_>>().join(",")
}

pub fn record_json(r: &PointRecord) -> Value {
    Value::Object(record_fields(r).into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

pub fn record_table(r: &PointRecord) -> String {
    let fields = record_fields(r);
    let w = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in &fields {
        let _ = writeln!(s, "{k:<w$}  {}", cell(v));
    }
    s
}

fn dummy() -> PointRecord {
    use sramdse_core::analysis::{edp, Bound, RooflinePoint};
    use sramdse_core::eval::DesignPoint;
    use sramdse_core::memory::{PhaseResult, TrafficReport};
    PointRecord {
        phase: Phase::Prefill,
        point: DesignPoint { s: 1, f: 1.0, bw: 1.0 },
        result: PhaseResult {
            compute_cycles: 0,
            compute_time: 0.0,
            memory_time: 0.0,
            latency: 0.0,
            total_cycles: 0.0,
            compute_fraction: 0.0,
            traffic: TrafficReport::default(),
            utilization: 0.0,
            flops: 0,
        },
        energy: Default::default(),
        roofline: RooflinePoint { oi: 0.0, peak: 0.0, attainable: 0.0, achieved: 0.0, bound: Bound::Compute },
        metric: edp(0.0, 0.0),
    }
}

pub fn grid_csv(res: &SweepResult, metric: Metric, phase: Phase, bi: usize) -> Result<String> {
    let g = res.grid(metric, phase, bi)?;
    let mut s = String::new();
    s.push_str("metric,phase,bandwidth\n");
    let _ = writeln!(s, "{},{},{}", metric.name(), phase.name(), whole(res.spec.bw_values[bi]));
    s.push_str("S_bytes,f_hz,value\n");
    for (si, sb) in g.s_axis.iter().enumerate() {
        for (fi, f) in g.f_axis.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", sb, whole(*f), json!(g.get(si, fi)));
        }
    }
    Ok(s)
}

pub fn roofline_csv(res: &SweepResult) -> String {
    let mut s = String::from("phase,bandwidth,S_bytes,f_hz,oi,peak_flops,attainable_flops,achieved_flops,bound\n");
    for rec in &res.records {
        if let Ok(r) = &rec.outcome {
            let rf = &r.roofline;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                rec.phase.name(),
                whole(rec.point.bw),
                rec.point.s,
                whole(rec.point.f),
                json!(rf.oi),
                json!(rf.peak),
                json!(rf.attainable),
                json!(rf.achieved),
                rf.bound.name()
            );
        }
    }
    s
}

pub fn records_csv(res: &SweepResult) -> String {
    let mut s = record_csv_header();
    s.push_str(",status\n");
    for rec in &res.records {
        match &rec.outcome {
            Ok(r) => {
                s.push_str(&record_csv_row(r));
                s.push_str(",ok\n");
            }
            Err(e) => {
                let n = record_fields(&dummy()).len();
                let mut cols = vec![String::new(); n];
                cols[0] = rec.phase.name().to_string();
                cols[1] = rec.point.s.to_string();
                cols[2] = whole(rec.point.f).to_string();
                cols[3] = whole(rec.point.bw).to_string();
                let _ = writeln!(s, "{},\"error: {}\"", cols.join(","), e);
            }
        }
    }
    s
}

pub fn contours_csv(res: &SweepResult) -> Result<String> {
    let mut s = String::from("metric,phase,bandwidth,level,value\n");
    for &phase in &res.spec.phases {
        for (bi, bw) in res.spec.bw_values.iter().enumerate() {
            for metric in Metric::ALL {
                let g = res.grid(metric, phase, bi)?;
                for (i, v) in g.contour_levels().iter().enumerate() {
                    let _ = writeln!(s, "{},{},{},{},{}", metric.name(), phase.name(), whole(*bw), i, json!(v));
                }
            }
        }
    }
    Ok(s)
}

fn point_json(res: &SweepResult, si: usize, fi: usize) -> Value {
    json!({ "s_bytes": res.spec.s_values[si], "f_hz": whole(res.spec.f_values[fi]) })
}

/// Argmins, per-frequency energy argmins over S and bound transitions.
pub fn summary(res: &SweepResult) -> Value {
    let mut grids = Vec::new();
    let mut decode_edp = Vec::new();
    for &phase in &res.spec.phases {
        for (bi, &bw) in res.spec.bw_values.iter().enumerate() {
            let mut entry = serde_json::Map::new();
            entry.insert("phase".into(), json!(phase.name()));
            entry.insert("bandwidth".into(), whole(bw));
            for metric in [Metric::Edp, Metric::TotalEnergy, Metric::Latency] {
                if let Ok(g) = res.grid(metric, phase, bi) {
                    let (si, fi) = g.argmin();
                    entry.insert(format!("{}_argmin", metric.name()), point_json(res, si, fi));
                    if metric == Metric::Edp && phase == Phase::Decode {
                        decode_edp.push(json!({
                            "bandwidth": whole(bw),
                            "s_bytes": res.spec.s_values[si],
                            "f_hz": whole(res.spec.f_values[fi]),
                        }));
                    }
                    if metric == Metric::TotalEnergy {
                        let by_f: Vec<_> = (0..g.f_axis.len()).map(|fi| g.s_axis[g.argmin_over_s(fi)]).collect();
                        entry.insert("energy_argmin_s_by_f".into(), json!(by_f));
                    }
                }
            }
            let transitions: Vec<_> = (0..res.spec.s_values.len())
                .map(|si| {
                    let first_memory = (0..res.spec.f_values.len())
                        .find(|&fi| res.get(phase, bi, si, fi).is_some_and(|r| r.result.memory_bound()))
                        .map(|fi| whole(res.spec.f_values[fi]));
                    json!({ "s_bytes": res.spec.s_values[si], "first_memory_bound_f_hz": first_memory })
                })
                .collect();
            entry.insert("bound_transitions".into(), json!(transitions));
            grids.push(Value::Object(entry));
        }
    }
    let c = &res.config;
    json!({
        "schema_version": SCHEMA_VERSION,
        "decode_mode": c.decode.label(),
        "records": res.records.len(),
        "failed": res.failures(),
        "axes": {
            "s_bytes": res.spec.s_values,
            "f_hz": res.spec.f_values.iter().map(|&f| whole(f)).collect::<Vec<_>>(),
            "bandwidth": res.spec.bw_values.iter().map(|&b| whole(b)).collect::<Vec<_>>(),
            "phases": res.spec.phases.iter().map(|p| p.name()).collect::<Vec<_>>(),
        },
        "calibration": {
            "leakage_per_byte": c.energy.sram.leakage_per_byte,
            "access_energy_ref": c.energy.sram.access_energy_ref,
            "ref_size_bytes": c.energy.sram.ref_size,
            "access_exponent": c.energy.sram.access_exponent,
        },
        "onchip_bandwidth": whole(c.mem.onchip_bandwidth),
        "decode_edp_argmin": decode_edp,
        "grids": grids,
    })
}

pub struct ReportSet {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn write(path: PathBuf, body: &str, files: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    files.push(path);
    Ok(())
}

fn bw_label(bw: f64) -> String {
    format!("{}GBps", whole(bw / 1e9))
}

pub fn emit_reports(res: &SweepResult, out: &Path) -> Result<ReportSet> {
    let mut files = Vec::new();
    if res.spec.phases.is_empty() {
        return Ok(ReportSet { files, warnings: vec!["sweep has no phases; nothing written".to_string()] });
    }
    let grids = out.join("grids");
    fs::create_dir_all(&grids).with_context(|| format!("creating {}", grids.display()))?;
    let mut warnings = Vec::new();
    for &phase in &res.spec.phases {
        for (bi, &bw) in res.spec.bw_values.iter().enumerate() {
            for metric in Metric::ALL {
                match grid_csv(res, metric, phase, bi) {
                    Ok(body) => {
                        let name = format!("{}_{}_{}.csv", metric.name(), phase.name(), bw_label(bw));
                        write(grids.join(name), &body, &mut files)?;
                    }
                    Err(e) => warnings.push(format!("{} {} {}: {e}", metric.name(), phase.name(), bw_label(bw))),
                }
            }
        }
    }
    write(out.join("roofline.csv"), &roofline_csv(res), &mut files)?;
    write(out.join("records.csv"), &records_csv(res), &mut files)?;
    if let Ok(c) = contours_csv(res) {
        write(out.join("contours.csv"), &c, &mut files)?;
    }
    let body = serde_json::to_string_pretty(&summary(res))? + "\n";
    write(out.join("summary.json"), &body, &mut files)?;
    Ok(ReportSet { files, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::{run_sweep, SweepSpec};
    use sramdse_core::eval::SystemConfig;

    #[test]
    fn header_matches_row_width() {
        let res =
            run_sweep(&SweepSpec::single(&SystemConfig::default().point(), Phase::Decode), &SystemConfig::default(), 1);
        let r = res.records[0].outcome.as_ref().unwrap();
        assert_eq!(record_csv_header().split(',').count(), record_csv_row(r).split(',').count());
        assert!(record_table(r).contains("bound"));
    }

    #[test]
    fn grid_csv_layout() {
        let spec = SweepSpec { phases: vec![Phase::Decode], bw_values: vec![2048e9], ..SweepSpec::default() };
        let res = run_sweep(&spec, &SystemConfig::default(), 2);
        let body = grid_csv(&res, Metric::Edp, Phase::Decode, 0).unwrap();
        let lines: Vec<_> = body.lines().collect();
        assert_eq!(lines[0], "metric,phase,bandwidth");
        assert_eq!(lines[1], "edp,decode,2048000000000");
        assert_eq!(lines[2], "S_bytes,f_hz,value");
        assert_eq!(lines.len(), 3 + 49);
        assert_eq!(summary(&res)["schema_version"], json!(1));
    }
}
