//! Line-oriented `dotted.key = value` configuration.

use std::fmt;

use sramdse_core::eval::{DecodeMode, SystemConfig};
use sramdse_core::workload::Phase;
use sramdse_core::KIB;

use crate::sweep::SweepSpec;

const GB: f64 = 1e9;
const MHZ: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub system: SystemConfig,
    pub sweep: SweepSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    /// 1-based line, or `None` for `--override` values.
    pub line: Option<usize>,
    pub key: String,
    pub msg: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) if self.key.is_empty() => write!(f, "line {l}: {}", self.msg),
            Some(l) => write!(f, "line {l}: {}: {}", self.key, self.msg),
            None => write!(f, "override {}: {}", self.key, self.msg),
        }
    }
}

impl std::error::Error for ConfigError {}

fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?} as a number"))
}

fn list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, String> {
    v.split(',').map(|x| num(x.trim())).collect()
}

pub fn parse_phase(v: &str) -> Result<Phase, String> {
    match v.trim() {
        "prefill" => Ok(Phase::Prefill),
        "decode" => Ok(Phase::Decode),
        other => Err(format!("unknown phase {other:?}")),
    }
}

pub const KEYS: &[&str] = &[
    "hw.cores",
    "hw.arrays_per_core",
    "hw.array_rows",
    "hw.array_cols",
    "hw.local_buffer_kb",
    "hw.global_buffer_mb",
    "hw.frequency_mhz",
    "hw.ext_bandwidth_gbps",
    "hw.onchip_bandwidth_gbps",
    "model.d_model",
    "model.n_heads",
    "model.head_dim",
    "model.mlp_ratio",
    "model.bytes_per_element",
    "model.n_layers",
    "request.batch",
    "request.prompt_len",
    "request.gen_tokens",
    "energy.leakage_per_byte",
    "energy.access_energy_ref",
    "energy.ref_size_kb",
    "energy.access_exponent",
    "energy.array_leakage_mw",
    "energy.array_dynamic_w",
    "energy.array_ref_mhz",
    "energy.prefill_gating",
    "energy.decode_gating",
    "run.decode_mode",
    "run.decode_step",
    "sweep.local_buffer_kb",
    "sweep.frequency_mhz",
    "sweep.bandwidth_gbps",
    "sweep.phases",
];

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let s = &mut self.system;
        let v = value.trim();
        match key {
            "hw.cores" => s.fabric.cores = num(v)?,
            "hw.arrays_per_core" => s.fabric.arrays_per_core = num(v)?,
            "hw.array_rows" => s.fabric.array.rows = num(v)?,
            "hw.array_cols" => s.fabric.array.cols = num(v)?,
            "hw.local_buffer_kb" => s.local_capacity = num::<u64>(v)? * KIB,
            "hw.global_buffer_mb" => s.global_capacity = num::<u64>(v)? * KIB * KIB,
            "hw.frequency_mhz" => s.clock.frequency = num::<f64>(v)? * MHZ,
            "hw.ext_bandwidth_gbps" => s.mem.ext_bandwidth = num::<f64>(v)? * GB,
            "hw.onchip_bandwidth_gbps" => s.mem.onchip_bandwidth = num::<f64>(v)? * GB,
            "model.d_model" => s.model.d_model = num(v)?,
            "model.n_heads" => s.model.n_heads = num(v)?,
            "model.head_dim" => s.model.head_dim = num(v)?,
            "model.mlp_ratio" => s.model.mlp_ratio = num(v)?,
            "model.bytes_per_element" => s.model.bytes_per_element = num(v)?,
            "model.n_layers" => s.model.n_layers = num(v)?,
            "request.batch" => s.request.batch = num(v)?,
            "request.prompt_len" => s.request.prompt_len = num(v)?,
            "request.gen_tokens" => s.request.gen_tokens = num(v)?,
            "energy.leakage_per_byte" => s.energy.sram.leakage_per_byte = num(v)?,
            "energy.access_energy_ref" => s.energy.sram.access_energy_ref = num(v)?,
            "energy.ref_size_kb" => s.energy.sram.ref_size = num::<f64>(v)? * KIB as f64,
            "energy.access_exponent" => s.energy.sram.access_exponent = num(v)?,
            "energy.array_leakage_mw" => s.energy.arrays.leakage_w = num::<f64>(v)? * 1e-3,
            "energy.array_dynamic_w" => s.energy.arrays.dynamic_w_ref = num(v)?,
            "energy.array_ref_mhz" => s.energy.arrays.ref_frequency = num::<f64>(v)? * MHZ,
            "energy.prefill_gating" => s.energy.gating.prefill_saving = num(v)?,
            "energy.decode_gating" => s.energy.gating.decode_saving = num(v)?,
            "run.decode_mode" => {
                s.decode = match v {
                    "mean" => DecodeMode::Mean,
                    "step" => match s.decode {
                        DecodeMode::Step(n) => DecodeMode::Step(n),
                        DecodeMode::Mean => DecodeMode::Step(0),
                    },
                    other => return Err(format!("expected step or mean, got {other:?}")),
                }
            }
            "run.decode_step" => s.decode = DecodeMode::Step(num(v)?),
            "sweep.local_buffer_kb" => self.sweep.s_values = list::<u64>(v)?.into_iter().map(|x| x * KIB).collect(),
            "sweep.frequency_mhz" => self.sweep.f_values = list::<f64>(v)?.into_iter().map(|x| x * MHZ).collect(),
            "sweep.bandwidth_gbps" => self.sweep.bw_values = list::<f64>(v)?.into_iter().map(|x| x * GB).collect(),
            "sweep.phases" => {
                self.sweep.phases =
                    if v.is_empty() { Vec::new() } else { v.split(',').map(parse_phase).collect::<Result<_, _>>()? }
            }
            _ => return Err("unknown key".to_string()),
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut c = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError {
                    line: Some(i + 1),
                    key: String::new(),
                    msg: format!("expected `key = value`, got {line:?}"),
                });
            };
            let key = k.trim();
            c.set(key, v).map_err(|msg| ConfigError { line: Some(i + 1), key: key.to_string(), msg })?;
        }
        Ok(c)
    }

    /// Applies `key=value` overrides in order; the last one wins.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<(), ConfigError> {
        for o in overrides {
            let o = o.as_ref();
            let Some((k, v)) = o.split_once('=') else {
                return Err(ConfigError { line: None, key: o.to_string(), msg: "expected key=value".to_string() });
            };
            self.set(k.trim(), v).map_err(|msg| ConfigError { line: None, key: k.trim().to_string(), msg })?;
        }
        Ok(())
    }

    /// Every key with its current value, in a form `parse` reads back.
    pub fn render(&self) -> String {
        let s = &self.system;
        let kb = |b: u64| b / KIB;
        let join_f = |v: &[f64], unit: f64| v.iter().map(|x| fmt_num(x / unit)).collect::<Vec<_>>().join(",");
        let mut out = String::new();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        kv("hw.cores", s.fabric.cores.to_string());
        kv("hw.arrays_per_core", s.fabric.arrays_per_core.to_string());
        kv("hw.array_rows", s.fabric.array.rows.to_string());
        kv("hw.array_cols", s.fabric.array.cols.to_string());
        kv("hw.local_buffer_kb", kb(s.local_capacity).to_string());
        kv("hw.global_buffer_mb", (s.global_capacity / KIB / KIB).to_string());
        kv("hw.frequency_mhz", fmt_num(s.clock.frequency / MHZ));
        kv("hw.ext_bandwidth_gbps", fmt_num(s.mem.ext_bandwidth / GB));
        kv("hw.onchip_bandwidth_gbps", fmt_num(s.mem.onchip_bandwidth / GB));
        kv("model.d_model", s.model.d_model.to_string());
        kv("model.n_heads", s.model.n_heads.to_string());
        kv("model.head_dim", s.model.head_dim.to_string());
        kv("model.mlp_ratio", s.model.mlp_ratio.to_string());
        kv("model.bytes_per_element", s.model.bytes_per_element.to_string());
        kv("model.n_layers", s.model.n_layers.to_string());
        kv("request.batch", s.request.batch.to_string());
        kv("request.prompt_len", s.request.prompt_len.to_string());
        kv("request.gen_tokens", s.request.gen_tokens.to_string());
        kv("energy.leakage_per_byte", fmt_num(s.energy.sram.leakage_per_byte));
        kv("energy.access_energy_ref", fmt_num(s.energy.sram.access_energy_ref));
        kv("energy.ref_size_kb", fmt_num(s.energy.sram.ref_size / KIB as f64));
        kv("energy.access_exponent", fmt_num(s.energy.sram.access_exponent));
        kv("energy.array_leakage_mw", fmt_num(s.energy.arrays.leakage_w * 1e3));
        kv("energy.array_dynamic_w", fmt_num(s.energy.arrays.dynamic_w_ref));
        kv("energy.array_ref_mhz", fmt_num(s.energy.arrays.ref_frequency / MHZ));
        kv("energy.prefill_gating", fmt_num(s.energy.gating.prefill_saving));
        kv("energy.decode_gating", fmt_num(s.energy.gating.decode_saving));
        match s.decode {
            DecodeMode::Step(n) => {
                kv("run.decode_mode", "step".to_string());
                kv("run.decode_step", n.to_string());
            }
            DecodeMode::Mean => kv("run.decode_mode", "mean".to_string()),
        }
        let sw = &self.sweep;
        kv("sweep.local_buffer_kb", sw.s_values.iter().map(|&b| kb(b).to_string()).collect::<Vec<_>>().join(","));
        kv("sweep.frequency_mhz", join_f(&sw.f_values, MHZ));
        kv("sweep.bandwidth_gbps", join_f(&sw.bw_values, GB));
        kv("sweep.phases", sw.phases.iter().map(|p| p.name()).collect::<Vec<_>>().join(","));
        out
    }
}

/// Shortest representation that parses back to the same value.
/// Shortest round-tripping form; exponent notation for tiny or huge values.
pub fn fmt_num(x: f64) -> String {
    if x != 0.0 && (x.abs() < 1e-4 || x.abs() >= 1e16) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}
