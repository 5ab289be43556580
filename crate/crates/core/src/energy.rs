//! SRAM and array power models and per-phase energy.

use crate::dataflow::FabricSpec;
use crate::memory::PhaseResult;
use crate::workload::Phase;
use crate::KIB;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SramEnergyModel {
    /// W per byte of capacity.
    pub leakage_per_byte: f64,
    /// J per access of an SRAM of `ref_size` bytes.
    pub access_energy_ref: f64,
    pub ref_size: f64,
    pub access_exponent: f64,
}

impl SramEnergyModel {
    pub fn leakage(&self, size: u64) -> f64 {
        self.leakage_per_byte * size as f64
    }

    pub fn access_energy(&self, size: u64) -> f64 {
        self.access_energy_ref * libm::pow(size as f64 / self.ref_size, self.access_exponent)
    }
}

impl Default for SramEnergyModel {
    fn default() -> Self {
        SramEnergyModel {
            leakage_per_byte: 3e-8,
            access_energy_ref: 1e-13,
            ref_size: (16 * KIB) as f64,
            access_exponent: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayPower {
    pub leakage_w: f64,
    pub dynamic_w_ref: f64,
    pub ref_frequency: f64,
}

impl ArrayPower {
    pub fn dynamic_power(&self, frequency: f64, utilization: f64) -> f64 {
        self.dynamic_w_ref * (frequency / self.ref_frequency) * utilization
    }
}

impl Default for ArrayPower {
    fn default() -> Self {
        ArrayPower { leakage_w: 9.31e-3, dynamic_w_ref: 1.25, ref_frequency: 1e9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GatingPolicy {
    pub prefill_saving: f64,
    pub decode_saving: f64,
}

impl GatingPolicy {
    pub fn saving(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Prefill => self.prefill_saving,
            Phase::Decode => self.decode_saving,
        }
    }
}

impl Default for GatingPolicy {
    fn default() -> Self {
        GatingPolicy { prefill_saving: 0.04, decode_saving: 0.20 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentEnergy {
    pub static_j: f64,
    pub dynamic_j: f64,
}

impl ComponentEnergy {
    pub fn total(&self) -> f64 {
        self.static_j + self.dynamic_j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyBreakdown {
    pub static_j: f64,
    pub dynamic_j: f64,
    pub total_j: f64,
    pub dynamic_power_w: f64,
    pub local_buffers: ComponentEnergy,
    pub global_buffer: ComponentEnergy,
    pub arrays: ComponentEnergy,
}

pub fn static_energy(latency: f64, leakage_sum: f64, gating: f64) -> f64 {
    latency * leakage_sum * (1.0 - gating)
}

/// Arrays draw dynamic power only while computing.
/// Equal to `dynamic_power(f, u) * compute_time`, written in cycles so it is
/// bit-identical across frequencies.
pub fn array_dynamic_energy(arrays: &ArrayPower, count: u64, result: &PhaseResult) -> f64 {
    count as f64 * arrays.dynamic_w_ref * result.utilization * result.compute_cycles as f64 / arrays.ref_frequency
}

pub fn total_energy(static_j: f64, dynamic_j: f64, latency: f64) -> EnergyBreakdown {
    EnergyBreakdown {
        static_j,
        dynamic_j,
        total_j: static_j + dynamic_j,
        dynamic_power_w: if latency > 0.0 { dynamic_j / latency } else { 0.0 },
        ..EnergyBreakdown::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyModel {
    pub sram: SramEnergyModel,
    pub arrays: ArrayPower,
    pub gating: GatingPolicy,
}

impl EnergyModel {
    /// Leakage of every local buffer, the global buffer and every array, in W.
    pub fn leakage_sum(&self, fabric: &FabricSpec, local: u64, global: u64) -> f64 {
        let (l, g, a) = self.leakages(fabric, local, global);
        l + g + a
    }

    fn leakages(&self, fabric: &FabricSpec, local: u64, global: u64) -> (f64, f64, f64) {
        (
            fabric.cores as f64 * self.sram.leakage(local),
            self.sram.leakage(global),
            fabric.total_arrays() as f64 * self.arrays.leakage_w,
        )
    }

    pub fn dynamic_energy(&self, result: &PhaseResult, fabric: &FabricSpec, local: u64, global: u64) -> f64 {
        let (l, g, a) = self.dynamic_parts(result, fabric, local, global);
        l + g + a
    }

    fn dynamic_parts(&self, result: &PhaseResult, fabric: &FabricSpec, local: u64, global: u64) -> (f64, f64, f64) {
        let t = &result.traffic;
        (
            t.local_accesses() as f64 * self.sram.access_energy(local),
            t.global_accesses() as f64 * self.sram.access_energy(global),
            array_dynamic_energy(&self.arrays, fabric.total_arrays(), result),
        )
    }

    pub fn breakdown(
        &self,
        phase: Phase,
        result: &PhaseResult,
        fabric: &FabricSpec,
        local: u64,
        global: u64,
    ) -> EnergyBreakdown {
        let gating = self.gating.saving(phase);
        let (ll, gl, al) = self.leakages(fabric, local, global);
        let (ld, gd, ad) = self.dynamic_parts(result, fabric, local, global);
        let st = static_energy(result.latency, ll + gl + al, gating);
        let mut e = total_energy(st, ld + gd + ad, result.latency);
        let part = |leak: f64, dynamic_j: f64| ComponentEnergy {
            static_j: static_energy(result.latency, leak, gating),
            dynamic_j,
        };
        e.local_buffers = part(ll, ld);
        e.global_buffer = part(gl, gd);
        e.arrays = part(al, ad);
        e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::TrafficReport;

    #[test]
    fn static_examples() {
        assert!((static_energy(1.0, 10e-3, 0.20) - 8e-3).abs() < 1e-18);
        assert_eq!(static_energy(3.0, 0.5, 0.0), 1.5);
        assert_eq!(static_energy(2.0, 0.5, 0.1), 2.0 * static_energy(1.0, 0.5, 0.1));
    }

    #[test]
    fn power_law() {
        let s = SramEnergyModel::default();
        let r = s.access_energy(64 * KIB) / s.access_energy(16 * KIB);
        assert!((r - 2.0).abs() < 1e-12);
        assert_eq!(s.leakage(2 * 4096), 2.0 * s.leakage(4096));
    }

    fn result(compute_time: f64, utilization: f64, t: TrafficReport) -> PhaseResult {
        PhaseResult {
            compute_cycles: (compute_time * 1e9) as u64,
            compute_time,
            memory_time: 0.0,
            latency: compute_time,
            total_cycles: 0.0,
            compute_fraction: 1.0,
            traffic: t,
            utilization,
            flops: 0,
        }
    }

    #[test]
    fn array_power_at_reference() {
        let a = ArrayPower::default();
        let r = result(1.0, 1.0, TrafficReport::default());
        let e = array_dynamic_energy(&a, 1, &r);
        assert!((e - 1.25).abs() < 1e-12);
    }

    #[test]
    fn zero_activity_no_dynamic() {
        let m = EnergyModel::default();
        let r = result(0.0, 0.0, TrafficReport::default());
        let d = m.dynamic_energy(&r, &FabricSpec::default(), 32 * KIB, 40 * crate::MIB);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn totals() {
        let e = total_energy(2.0, 3.0, 1.0);
        assert_eq!(e.total_j, 5.0);
        assert_eq!(total_energy(2.0, 0.0, 1.0).total_j, 2.0);
        assert_eq!(total_energy(0.0, 3.0, 2.0).dynamic_power_w, 1.5);
    }

    #[test]
    fn components_sum() {
        let m = EnergyModel::default();
        let t = TrafficReport {
            local_reads: 1000,
            local_writes: 300,
            global_reads: 50,
            global_writes: 20,
            ..TrafficReport::default()
        };
        let r = result(1e-3, 0.5, t);
        let f = FabricSpec::default();
        let e = m.breakdown(Phase::Decode, &r, &f, 32 * KIB, 40 * crate::MIB);
        let parts = e.local_buffers.total() + e.global_buffer.total() + e.arrays.total();
        assert!((parts - e.total_j).abs() <= 1e-12 * e.total_j);
    }
}
