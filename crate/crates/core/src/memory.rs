//! Local-buffer tiling, traffic per level, and phase latency.

use crate::ceil_div;
use crate::dataflow::{accesses, analytic_cycles, utilization, FabricSpec};
use crate::workload::{MatmulDims, PhaseTrace};
use crate::{Error, KIB, MIB};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferLevel {
    Local,
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferSpec {
    pub level: BufferLevel,
    pub capacity: u64,
}

impl BufferSpec {
    pub const fn local(capacity: u64) -> Self {
        BufferSpec { level: BufferLevel::Local, capacity }
    }

    pub const fn global(capacity: u64) -> Self {
        BufferSpec { level: BufferLevel::Global, capacity }
    }
}

pub const DEFAULT_LOCAL: u64 = 32 * KIB;
pub const DEFAULT_GLOBAL: u64 = 40 * MIB;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemorySpec {
    /// External memory bandwidth, bytes/s.
    pub ext_bandwidth: f64,
    /// Aggregate global-to-local link bandwidth, bytes/s.
    pub onchip_bandwidth: f64,
}

impl Default for MemorySpec {
    fn default() -> Self {
        MemorySpec { ext_bandwidth: 2048e9, onchip_bandwidth: 10240e9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockSpec {
    pub frequency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TilingPlan {
    pub tile_m: u64,
    pub tile_k: u64,
    pub tile_n: u64,
    pub double_buffered: bool,
}

impl TilingPlan {
    /// One weight tile plus double-buffered input and output tiles.
    pub fn footprint(&self, bytes_per_element: u64) -> u64 {
        let b = bytes_per_element;
        b * (self.tile_k * self.tile_n + 2 * self.tile_m * self.tile_k + 2 * self.tile_m * self.tile_n)
    }
}

/// Powers of two below `x`, then `x` itself.
pub fn tile_candidates(x: u64) -> impl DoubleEndedIterator<Item = u64> + Clone {
    let below = if x <= 1 { 0 } else { 64 - (x - 1).leading_zeros() };
    (0..below).map(|e| 1u64 << e).filter(move |&p| p < x).chain(core::iter::once(x))
}

/// Elements moved over DRAM plus the global-to-local link for one matmul.
///
/// Input tiles are shared by the cores that work on neighbouring N tiles, so
/// they cross each level once per group of `cores` N tiles.
pub fn movement(m: &MatmulDims, tile_k: u64, tile_n: u64, cores: u64) -> u64 {
    let nb = ceil_div(m.n, tile_n * cores);
    let nk = ceil_div(m.k, tile_k);
    2 * m.k * m.n + 2 * m.m * m.k * nb + 2 * m.m * m.n * nk
}

/// Picks the feasible tile with the least data movement, then the largest
/// weight tile, then the largest M and N extents.
///
/// Tiles at least as tall as the array are preferred; shorter ones are only
/// considered when nothing else fits.
pub fn plan_tiling(
    m: &MatmulDims,
    local: &BufferSpec,
    bytes_per_element: u64,
    fabric: &FabricSpec,
) -> Result<TilingPlan, Error> {
    let floor = m.m.min(fabric.array.rows);
    search(m, local.capacity, bytes_per_element, fabric.cores, floor)
        .or_else(|| search(m, local.capacity, bytes_per_element, fabric.cores, 1))
        .ok_or(Error::InfeasibleTiling { capacity: local.capacity, m: m.m, k: m.k, n: m.n })
}

fn search(m: &MatmulDims, cap: u64, b: u64, cores: u64, tm_floor: u64) -> Option<TilingPlan> {
    let mut best: Option<((u64, u64, u64, u64), TilingPlan)> = None;
    for tk in tile_candidates(m.k) {
        for tn in tile_candidates(m.n) {
            let Some(tm) = tile_candidates(m.m).rev().filter(|&tm| tm >= tm_floor).find(|&tm| {
                TilingPlan { tile_m: tm, tile_k: tk, tile_n: tn, double_buffered: true }.footprint(b) <= cap
            }) else {
                continue;
            };
            // Smaller key wins.
            let key = (movement(m, tk, tn, cores), u64::MAX - tk * tn, u64::MAX - tm, u64::MAX - tn);
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, TilingPlan { tile_m: tm, tile_k: tk, tile_n: tn, double_buffered: true }));
            }
        }
    }
    best.map(|(_, p)| p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrafficReport {
    pub dram_bytes: u64,
    pub onchip_bytes: u64,
    pub local_reads: u64,
    pub local_writes: u64,
    pub global_reads: u64,
    pub global_writes: u64,
}

impl TrafficReport {
    pub fn scaled(&self, count: u64) -> Self {
        TrafficReport {
            dram_bytes: self.dram_bytes * count,
            onchip_bytes: self.onchip_bytes * count,
            local_reads: self.local_reads * count,
            local_writes: self.local_writes * count,
            global_reads: self.global_reads * count,
            global_writes: self.global_writes * count,
        }
    }

    pub fn add(&mut self, o: &TrafficReport) {
        self.dram_bytes += o.dram_bytes;
        self.onchip_bytes += o.onchip_bytes;
        self.local_reads += o.local_reads;
        self.local_writes += o.local_writes;
        self.global_reads += o.global_reads;
        self.global_writes += o.global_writes;
    }

    pub fn local_accesses(&self) -> u64 {
        self.local_reads + self.local_writes
    }

    pub fn global_accesses(&self) -> u64 {
        self.global_reads + self.global_writes
    }
}

/// Weight-stationary schedule: each weight tile is fetched once; an input
/// tile is multicast to the cores holding neighbouring N tiles; partial
/// output tiles go back to the global buffer between K tiles.
pub fn traffic(m: &MatmulDims, plan: &TilingPlan, bytes_per_element: u64, fabric: &FabricSpec) -> TrafficReport {
    let b = bytes_per_element;
    let (mm, k, n) = (m.m, m.k, m.n);
    let nk = ceil_div(k, plan.tile_k);
    let nn = ceil_div(n, plan.tile_n);
    let nb = ceil_div(n, plan.tile_n * fabric.cores);
    let arr = accesses(m, &fabric.array);

    let weights = k * n;
    let inputs = mm * k * nb;
    let outputs = mm * n;
    let psum_in = mm * n * (nk - 1);
    let psum_out = mm * n * nk;

    TrafficReport {
        dram_bytes: (weights + inputs + outputs) * b,
        onchip_bytes: (weights + inputs + psum_in + psum_out) * b,
        local_reads: arr.reads() + psum_out,
        local_writes: arr.writes() + weights + mm * k * nn + psum_in,
        global_reads: weights + inputs + psum_in + outputs,
        global_writes: weights + inputs + psum_out,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseResult {
    pub compute_cycles: u64,
    pub compute_time: f64,
    pub memory_time: f64,
    pub latency: f64,
    pub total_cycles: f64,
    pub compute_fraction: f64,
    pub traffic: TrafficReport,
    pub utilization: f64,
    pub flops: u64,
}

impl PhaseResult {
    pub fn memory_bound(&self) -> bool {
        self.memory_time > self.compute_time
    }
}

pub fn phase_result(
    trace: &PhaseTrace,
    fabric: &FabricSpec,
    local: &BufferSpec,
    mem: &MemorySpec,
    clock: &ClockSpec,
    bytes_per_element: u64,
) -> Result<PhaseResult, Error> {
    let mut cycles = 0u64;
    let mut t = TrafficReport::default();
    for g in &trace.groups {
        cycles += analytic_cycles(&g.dims, fabric).compute_cycles * g.count;
        let plan = plan_tiling(&g.dims, local, bytes_per_element, fabric)?;
        t.add(&traffic(&g.dims, &plan, bytes_per_element, fabric).scaled(g.count));
    }
    let f = clock.frequency;
    let compute_time = cycles as f64 / f;
    let memory_time = t.dram_bytes as f64 / mem.ext_bandwidth + t.onchip_bytes as f64 / mem.onchip_bandwidth;
    let latency = compute_time.max(memory_time);
    let total_cycles = if memory_time > compute_time { latency * f } else { cycles as f64 };
    Ok(PhaseResult {
        compute_cycles: cycles,
        compute_time,
        memory_time,
        latency,
        total_cycles,
        compute_fraction: compute_time / latency,
        traffic: t,
        utilization: utilization(trace.macs(), fabric.total_arrays(), fabric.array.pes(), cycles),
        flops: trace.flops(),
    })
}
