//! Evaluation of one phase at one design point.

use alloc::vec::Vec;

use crate::analysis::{edp, peak_flops, roofline, MetricPoint, RooflinePoint};
use crate::dataflow::FabricSpec;
use crate::energy::{EnergyBreakdown, EnergyModel};
use crate::memory::{
    phase_result, BufferSpec, ClockSpec, MemorySpec, PhaseResult, TrafficReport, DEFAULT_GLOBAL, DEFAULT_LOCAL,
};
use crate::workload::{build_decode_trace, build_prefill_trace, InferenceRequest, ModelSpec, Phase, PhaseTrace};
use crate::Error;

/// Which decode trace stands for "decode".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeMode {
    Step(u64),
    /// Mean over every step of `gen_tokens`.
    Mean,
}

impl DecodeMode {
    pub fn label(self) -> alloc::string::String {
        match self {
            DecodeMode::Step(s) => alloc::format!("step:{s}"),
            DecodeMode::Mean => alloc::string::String::from("mean"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub model: ModelSpec,
    pub request: InferenceRequest,
    pub fabric: FabricSpec,
    pub local_capacity: u64,
    pub global_capacity: u64,
    pub mem: MemorySpec,
    pub clock: ClockSpec,
    pub energy: EnergyModel,
    pub decode: DecodeMode,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            model: ModelSpec::gpt3(),
            request: InferenceRequest::default(),
            fabric: FabricSpec::default(),
            local_capacity: DEFAULT_LOCAL,
            global_capacity: DEFAULT_GLOBAL,
            mem: MemorySpec::default(),
            clock: ClockSpec { frequency: 600e6 },
            energy: EnergyModel::default(),
            decode: DecodeMode::Step(0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignPoint {
    /// Local buffer bytes per core.
    pub s: u64,
    /// Hz.
    pub f: f64,
    /// External bandwidth, bytes/s.
    pub bw: f64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), Error> {
        self.model.validate()?;
        self.request.validate()?;
        self.fabric.validate()?;
        let positive = [
            self.mem.ext_bandwidth,
            self.mem.onchip_bandwidth,
            self.clock.frequency,
            self.energy.sram.leakage_per_byte,
            self.energy.sram.access_energy_ref,
            self.energy.sram.ref_size,
            self.energy.sram.access_exponent,
            self.energy.arrays.ref_frequency,
        ];
        if positive.iter().any(|v| *v <= 0.0 || !v.is_finite()) {
            return Err(Error::InvalidHardware("bandwidths, frequency and energy constants must be positive"));
        }
        if self.local_capacity == 0 || self.global_capacity == 0 {
            return Err(Error::InvalidHardware("buffer capacities must be positive"));
        }
        let g = &self.energy.gating;
        if !(0.0..1.0).contains(&g.prefill_saving) || !(0.0..1.0).contains(&g.decode_saving) {
            return Err(Error::InvalidHardware("gating savings must lie in [0, 1)"));
        }
        if self.decode == DecodeMode::Mean && self.request.gen_tokens == 0 {
            return Err(Error::InvalidRequest("mean decode needs gen_tokens >= 1"));
        }
        Ok(())
    }

    pub fn at(&self, p: &DesignPoint) -> SystemConfig {
        let mut c = *self;
        c.local_capacity = p.s;
        c.clock.frequency = p.f;
        c.mem.ext_bandwidth = p.bw;
        c
    }

    pub fn point(&self) -> DesignPoint {
        DesignPoint { s: self.local_capacity, f: self.clock.frequency, bw: self.mem.ext_bandwidth }
    }

    pub fn traces(&self, phase: Phase) -> Result<Vec<PhaseTrace>, Error> {
        match (phase, self.decode) {
            (Phase::Prefill, _) => Ok(alloc::vec![build_prefill_trace(&self.model, &self.request)?]),
            (Phase::Decode, DecodeMode::Step(s)) => Ok(alloc::vec![build_decode_trace(&self.model, &self.request, s)?]),
            (Phase::Decode, DecodeMode::Mean) => {
                (0..self.request.gen_tokens).map(|s| build_decode_trace(&self.model, &self.request, s)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointRecord {
    pub phase: Phase,
    pub point: DesignPoint,
    pub result: PhaseResult,
    pub energy: EnergyBreakdown,
    pub roofline: RooflinePoint,
    pub metric: MetricPoint,
}

impl PointRecord {
    pub fn energy_j(&self) -> f64 {
        self.energy.total_j
    }
}

fn mean_result(rs: &[PhaseResult], frequency: f64) -> PhaseResult {
    let n = rs.len() as u64;
    let nf = n as f64;
    let mut t = TrafficReport::default();
    for r in rs {
        t.add(&r.traffic);
    }
    let avg = |x: u64| x / n;
    let t = TrafficReport {
        dram_bytes: avg(t.dram_bytes),
        onchip_bytes: avg(t.onchip_bytes),
        local_reads: avg(t.local_reads),
        local_writes: avg(t.local_writes),
        global_reads: avg(t.global_reads),
        global_writes: avg(t.global_writes),
    };
    let sum = |g: fn(&PhaseResult) -> f64| rs.iter().map(g).sum::<f64>() / nf;
    let cycles = avg(rs.iter().map(|r| r.compute_cycles).sum());
    let macs = rs.iter().map(|r| r.utilization * r.compute_cycles as f64).sum::<f64>() / nf;
    let compute_time = sum(|r| r.compute_time);
    let latency = sum(|r| r.latency);
    PhaseResult {
        compute_cycles: cycles,
        compute_time,
        memory_time: sum(|r| r.memory_time),
        latency,
        total_cycles: latency * frequency,
        compute_fraction: compute_time / latency,
        traffic: t,
        utilization: macs / cycles as f64,
        flops: avg(rs.iter().map(|r| r.flops).sum()),
    }
}

/// Latency, traffic, energy and roofline of `phase` at the config's own point.
pub fn evaluate(cfg: &SystemConfig, phase: Phase) -> Result<PointRecord, Error> {
    cfg.validate()?;
    let local = BufferSpec::local(cfg.local_capacity);
    let b = cfg.model.bytes_per_element;
    let results = cfg
        .traces(phase)?
        .iter()
        .map(|t| phase_result(t, &cfg.fabric, &local, &cfg.mem, &cfg.clock, b))
        .collect::<Result<Vec<_>, _>>()?;
    let result = if results.len() == 1 { results[0] } else { mean_result(&results, cfg.clock.frequency) };
    let energy = cfg.energy.breakdown(phase, &result, &cfg.fabric, cfg.local_capacity, cfg.global_capacity);
    let roofline = roofline(&result, peak_flops(&cfg.fabric, cfg.clock.frequency), cfg.mem.ext_bandwidth)?;
    Ok(PointRecord { phase, point: cfg.point(), result, energy, roofline, metric: edp(energy.total_j, result.latency) })
}
