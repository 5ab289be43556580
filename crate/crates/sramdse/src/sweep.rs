//! Cartesian sweep over local-buffer size, frequency and bandwidth.

use rayon::prelude::*;

use sramdse_core::analysis::{build_grid, Metric, MetricGrid};
use sramdse_core::eval::{evaluate, DesignPoint, PointRecord, SystemConfig};
use sramdse_core::workload::Phase;
use sramdse_core::{Error, KIB};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub s_values: Vec<u64>,
    pub f_values: Vec<f64>,
    pub bw_values: Vec<f64>,
    pub phases: Vec<Phase>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            s_values: [16, 32, 64, 128, 256, 512, 1024].iter().map(|k| k * KIB).collect(),
            f_values: (1..=7).map(|i| i as f64 * 200e6).collect(),
            bw_values: vec![2048e9, 4096e9, 8192e9],
            phases: Phase::ALL.to_vec(),
        }
    }
}

impl SweepSpec {
    pub fn single(p: &DesignPoint, phase: Phase) -> Self {
        SweepSpec { s_values: vec![p.s], f_values: vec![p.f], bw_values: vec![p.bw], phases: vec![phase] }
    }

    /// Sorted, duplicate-free axes.
    pub fn canonical(&self) -> SweepSpec {
        let mut s = self.clone();
        s.s_values.sort_unstable();
        s.s_values.dedup();
        s.f_values.sort_by(f64::total_cmp);
        s.f_values.dedup();
        s.bw_values.sort_by(f64::total_cmp);
        s.bw_values.dedup();
        s.phases.sort();
        s.phases.dedup();
        s
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.s_values.is_empty() || self.f_values.is_empty() || self.bw_values.is_empty() {
            return Err("sweep axes must be non-empty".into());
        }
        if self.s_values.contains(&0) || self.f_values.iter().chain(&self.bw_values).any(|v| v.is_nan() || *v <= 0.0) {
            return Err("sweep values must be positive".into());
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.phases.len() * self.bw_values.len() * self.s_values.len() * self.f_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every (phase, point) in record order: phase, bandwidth, S, f.
    pub fn points(&self) -> Vec<(Phase, DesignPoint)> {
        let mut v = Vec::with_capacity(self.len());
        for &phase in &self.phases {
            for &bw in &self.bw_values {
                for &s in &self.s_values {
                    for &f in &self.f_values {
                        v.push((phase, DesignPoint { s, f, bw }));
                    }
                }
            }
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub phase: Phase,
    pub point: DesignPoint,
    pub outcome: Result<PointRecord, Error>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub config: SystemConfig,
    pub records: Vec<SweepRecord>,
}

/// Evaluates every point of the canonical spec; `jobs = 0` uses every core.
pub fn run_sweep(spec: &SweepSpec, config: &SystemConfig, jobs: usize) -> SweepResult {
    let spec = spec.canonical();
    let points = spec.points();
    let eval = |&(phase, point): &(Phase, DesignPoint)| SweepRecord {
        phase,
        point,
        outcome: evaluate(&config.at(&point), phase),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool");
    let records = pool.install(|| points.par_iter().map(eval).collect());
    SweepResult { spec, config: *config, records }
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.outcome.is_err()).count()
    }

    fn index(&self, phase: Phase, bi: usize, si: usize, fi: usize) -> Option<usize> {
        let p = self.spec.phases.iter().position(|&q| q == phase)?;
        let (nb, ns, nf) = (self.spec.bw_values.len(), self.spec.s_values.len(), self.spec.f_values.len());
        Some(((p * nb + bi) * ns + si) * nf + fi)
    }

    pub fn get(&self, phase: Phase, bi: usize, si: usize, fi: usize) -> Option<&PointRecord> {
        self.records.get(self.index(phase, bi, si, fi)?)?.outcome.as_ref().ok()
    }

    /// S x f grid of `metric`; the EDP grid is normalised to its minimum.
    pub fn grid(&self, metric: Metric, phase: Phase, bi: usize) -> Result<MetricGrid, Error> {
        let g = build_grid(metric, &self.spec.s_values, &self.spec.f_values, |si, fi| {
            self.get(phase, bi, si, fi).map(|r| metric_value(r, metric))
        })?;
        Ok(if metric == Metric::Edp { g.normalized() } else { g })
    }
}

pub fn metric_value(r: &PointRecord, metric: Metric) -> f64 {
    match metric {
        Metric::Latency => r.result.latency,
        Metric::TotalEnergy => r.energy.total_j,
        Metric::Edp => r.metric.edp,
        Metric::Cycles => r.result.total_cycles,
        Metric::ComputeFraction => r.result.compute_fraction,
        Metric::DynamicPower => r.energy.dynamic_power_w,
        Metric::DynamicEnergy => r.energy.dynamic_j,
        Metric::StaticEnergy => r.energy.static_j,
    }
}
