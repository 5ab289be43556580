//! Roofline points, EDP and S x f metric grids.

use alloc::vec::Vec;

use crate::dataflow::FabricSpec;
use crate::memory::PhaseResult;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Compute,
    Memory,
}

impl Bound {
    pub fn name(self) -> &'static str {
        match self {
            Bound::Compute => "compute",
            Bound::Memory => "memory",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RooflinePoint {
    pub oi: f64,
    pub peak: f64,
    pub attainable: f64,
    pub achieved: f64,
    pub bound: Bound,
}

pub fn peak_flops(fabric: &FabricSpec, frequency: f64) -> f64 {
    fabric.total_arrays() as f64 * fabric.array.pes() as f64 * 2.0 * frequency
}

pub fn roofline(point: &PhaseResult, peak: f64, bw: f64) -> Result<RooflinePoint, Error> {
    let bytes = point.traffic.dram_bytes;
    if bytes == 0 {
        return Err(Error::ZeroTraffic);
    }
    let oi = point.flops as f64 / bytes as f64;
    Ok(RooflinePoint {
        oi,
        peak,
        attainable: peak.min(bw * oi),
        achieved: point.flops as f64 / point.latency,
        bound: if oi < peak / bw { Bound::Memory } else { Bound::Compute },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricPoint {
    pub latency: f64,
    pub energy: f64,
    pub edp: f64,
    pub edp_normalized: f64,
}

/// Normalisation happens grid-wide, so `edp_normalized` starts at 1.
pub fn edp(energy: f64, latency: f64) -> MetricPoint {
    MetricPoint { latency, energy, edp: energy * latency, edp_normalized: 1.0 }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    Latency,
    TotalEnergy,
    Edp,
    Cycles,
    ComputeFraction,
    DynamicPower,
    DynamicEnergy,
    StaticEnergy,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Latency,
        Metric::TotalEnergy,
        Metric::Edp,
        Metric::Cycles,
        Metric::ComputeFraction,
        Metric::DynamicPower,
        Metric::DynamicEnergy,
        Metric::StaticEnergy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Latency => "latency",
            Metric::TotalEnergy => "total_energy",
            Metric::Edp => "edp",
            Metric::Cycles => "cycles",
            Metric::ComputeFraction => "compute_fraction",
            Metric::DynamicPower => "dynamic_power",
            Metric::DynamicEnergy => "dynamic_energy",
            Metric::StaticEnergy => "static_energy",
        }
    }
}

/// Dense grid, row-major by S then f.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGrid {
    pub metric: Metric,
    pub s_axis: Vec<u64>,
    pub f_axis: Vec<f64>,
    pub values: Vec<f64>,
}

pub const CONTOUR_LEVELS: usize = 10;

impl MetricGrid {
    pub fn get(&self, si: usize, fi: usize) -> f64 {
        self.values[si * self.f_axis.len() + fi]
    }

    fn pick(&self, better: impl Fn(f64, f64) -> bool) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if better(v, self.values[best]) {
                best = i;
            }
        }
        (best / self.f_axis.len(), best % self.f_axis.len())
    }

    /// Ties go to the smallest S, then the smallest f.
    pub fn argmin(&self) -> (usize, usize) {
        self.pick(|v, b| v < b)
    }

    pub fn argmax(&self) -> (usize, usize) {
        self.pick(|v, b| v > b)
    }

    pub fn min(&self) -> f64 {
        let (s, f) = self.argmin();
        self.get(s, f)
    }

    pub fn max(&self) -> f64 {
        let (s, f) = self.argmax();
        self.get(s, f)
    }

    /// Index of the smallest value in row `si`.
    pub fn argmin_over_f(&self, si: usize) -> usize {
        let row = &self.values[si * self.f_axis.len()..(si + 1) * self.f_axis.len()];
        first_min(row.iter().copied())
    }

    /// Index of the smallest value in column `fi`.
    pub fn argmin_over_s(&self, fi: usize) -> usize {
        first_min((0..self.s_axis.len()).map(|si| self.get(si, fi)))
    }

    /// Evenly spaced levels from the grid minimum to its maximum.
    pub fn contour_levels(&self) -> Vec<f64> {
        let (lo, hi) = (self.min(), self.max());
        (0..CONTOUR_LEVELS).map(|i| lo + (hi - lo) * i as f64 / (CONTOUR_LEVELS - 1) as f64).collect()
    }

    /// Divides every cell by the grid minimum.
    pub fn normalized(&self) -> MetricGrid {
        let lo = self.min();
        MetricGrid { values: self.values.iter().map(|v| v / lo).collect(), ..self.clone() }
    }
}

fn first_min(it: impl Iterator<Item = f64>) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, v) in it.enumerate() {
        if v < best.1 {
            best = (i, v);
        }
    }
    best.0
}

pub fn build_grid(
    metric: Metric,
    s_axis: &[u64],
    f_axis: &[f64],
    mut cell: impl FnMut(usize, usize) -> Option<f64>,
) -> Result<MetricGrid, Error> {
    if s_axis.is_empty() || f_axis.is_empty() {
        return Err(Error::EmptyAxis);
    }
    let mut values = Vec::with_capacity(s_axis.len() * f_axis.len());
    for (si, &s) in s_axis.iter().enumerate() {
        for (fi, &f) in f_axis.iter().enumerate() {
            values.push(cell(si, fi).ok_or(Error::MissingPoint { s, f: f as u64 })?);
        }
    }
    Ok(MetricGrid { metric, s_axis: s_axis.to_vec(), f_axis: f_axis.to_vec(), values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::memory::TrafficReport;

    fn point(flops: u64, dram: u64, latency: f64) -> PhaseResult {
        PhaseResult {
            compute_cycles: 1,
            compute_time: latency,
            memory_time: 0.0,
            latency,
            total_cycles: 1.0,
            compute_fraction: 1.0,
            traffic: TrafficReport { dram_bytes: dram, ..TrafficReport::default() },
            utilization: 1.0,
            flops,
        }
    }

    #[test]
    fn min_law() {
        let r = roofline(&point(50, 10, 1.0), 100e9, 10e9).unwrap();
        assert_eq!(r.oi, 5.0);
        assert_eq!(r.attainable, 50e9);
        assert_eq!(r.bound, Bound::Memory);
        let r = roofline(&point(500, 10, 1.0), 100e9, 10e9).unwrap();
        assert_eq!(r.attainable, 100e9);
        assert_eq!(r.bound, Bound::Compute);
        let a = roofline(&point(50, 10, 1.0), 1e15, 10e9).unwrap();
        let b = roofline(&point(50, 10, 1.0), 1e15, 20e9).unwrap();
        assert_eq!(b.attainable, 2.0 * a.attainable);
        assert_eq!(roofline(&point(1, 0, 1.0), 1.0, 1.0), Err(Error::ZeroTraffic));
    }

    #[test]
    fn edp_examples() {
        assert_eq!(edp(2.0, 3.0).edp, 6.0);
        assert_eq!(edp(0.0, 7.0).edp, 0.0);
    }

    #[test]
    fn grid_queries() {
        let s = [1u64, 2, 3];
        let f = [10.0, 20.0];
        let g = build_grid(Metric::Edp, &s, &f, |i, j| Some((i as f64 - 1.0).powi(2) + j as f64 + 1.0)).unwrap();
        assert_eq!(g.values.len(), 6);
        assert_eq!(g.argmin(), (1, 0));
        assert_eq!(g.get(1, 0), 1.0);
        let n = g.normalized();
        assert_eq!(n.min(), 1.0);
        assert_eq!(n.values.iter().filter(|&&v| v == 1.0).count(), 1);
        let c = g.contour_levels();
        assert_eq!(c.len(), 10);
        assert_eq!((c[0], c[9]), (g.min(), g.max()));
    }

    #[test]
    fn constant_grid_ties() {
        let g = build_grid(Metric::Latency, &[1, 2], &[1.0, 2.0], |_, _| Some(4.0)).unwrap();
        assert_eq!(g.argmin(), (0, 0));
        assert_eq!(g.argmin_over_s(1), 0);
    }

    #[test]
    fn missing_cell() {
        let g = build_grid(Metric::Latency, &[1, 2], &[5.0], |i, _| (i == 0).then_some(1.0));
        assert_eq!(g, Err(Error::MissingPoint { s: 2, f: 5 }));
        assert_eq!(build_grid(Metric::Latency, &[], &[5.0], |_, _| Some(1.0)), Err(Error::EmptyAxis));
    }

    #[test]
    fn peak() {
        assert_eq!(peak_flops(&FabricSpec::default(), 1e9), 432.0 * 256.0 * 2.0 * 1e9);
    }
}
