//! Fits the SRAM leakage and access-energy constants to EDP argmin targets.

use std::fmt;

use sramdse_core::eval::{evaluate, DesignPoint, SystemConfig};
use sramdse_core::memory::PhaseResult;
use sramdse_core::workload::Phase;
use sramdse_core::{Error, KIB};

use crate::config::{fmt_num, parse_phase};
use crate::sweep::SweepSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub phase: Phase,
    pub bw: f64,
    pub s: u64,
    pub f: f64,
}

impl Target {
    /// `phase:bandwidth_gbps:s_kb:f_mhz`, e.g. `decode:2048:32:600`.
    pub fn parse(text: &str) -> Result<Target, String> {
        let parts: Vec<_> = text.split(':').collect();
        let [phase, bw, s, f] = parts[..] else {
            return Err(format!("target {text:?} is not phase:bw_gbps:s_kb:f_mhz"));
        };
        let n = |v: &str| v.parse::<f64>().map_err(|_| format!("bad number {v:?} in target {text:?}"));
        Ok(Target { phase: parse_phase(phase)?, bw: n(bw)? * 1e9, s: n(s)? as u64 * KIB, f: n(f)? * 1e6 })
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}GB/s -> {}KB/{}MHz", self.phase.name(), self.bw / 1e9, self.s / KIB, self.f / 1e6)
    }
}

pub fn default_targets() -> Vec<Target> {
    vec![Target { phase: Phase::Decode, bw: 2048e9, s: 32 * KIB, f: 600e6 }]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub leakage_per_byte: f64,
    pub access_energy_ref: f64,
    /// Sum over targets of |dS| + |df| in grid steps.
    pub displacement: usize,
    pub evaluations: usize,
}

/// Phase results of one target's S x f grid; they do not depend on the
/// energy constants, so they are computed once.
struct TargetGrid {
    phase: Phase,
    want: (usize, usize),
    cells: Vec<(DesignPoint, PhaseResult)>,
    nf: usize,
}

struct Problem {
    base: SystemConfig,
    grids: Vec<TargetGrid>,
}

impl Problem {
    fn displacement(&self, leak: f64, acc: f64) -> usize {
        let mut energy = self.base.energy;
        energy.sram.leakage_per_byte = leak;
        energy.sram.access_energy_ref = acc;
        let mut total = 0;
        for g in &self.grids {
            let mut best = (0, f64::INFINITY);
            for (i, (p, r)) in g.cells.iter().enumerate() {
                let cfg = self.base.at(p);
                let e = energy.breakdown(g.phase, r, &cfg.fabric, p.s, cfg.global_capacity);
                let edp = e.total_j * r.latency;
                if edp < best.1 {
                    best = (i, edp);
                }
            }
            let (si, fi) = (best.0 / g.nf, best.0 % g.nf);
            total += si.abs_diff(g.want.0) + fi.abs_diff(g.want.1);
        }
        total
    }
}

fn round_sig(x: f64, digits: i32) -> f64 {
    let mag = 10f64.powi(digits - 1 - x.abs().log10().floor() as i32);
    (x * mag).round() / mag
}

/// Coordinate search in log space starting at the configured constants,
/// followed by a fixed log grid scan if the local search stalls.
pub fn calibrate(base: &SystemConfig, spec: &SweepSpec, targets: &[Target]) -> Result<Calibration, Error> {
    let spec = spec.canonical();
    let mut grids = Vec::new();
    for t in targets {
        let si = spec.s_values.iter().position(|&s| s == t.s).ok_or(Error::MissingPoint { s: t.s, f: t.f as u64 })?;
        let fi = spec.f_values.iter().position(|&f| f == t.f).ok_or(Error::MissingPoint { s: t.s, f: t.f as u64 })?;
        let mut cells = Vec::new();
        for &s in &spec.s_values {
            for &f in &spec.f_values {
                let p = DesignPoint { s, f, bw: t.bw };
                cells.push((p, evaluate(&base.at(&p), t.phase)?.result));
            }
        }
        grids.push(TargetGrid { phase: t.phase, want: (si, fi), cells, nf: spec.f_values.len() });
    }
    let prob = Problem { base: *base, grids };
    let mut evals = 0;
    let mut disp = |x: (f64, f64)| {
        evals += 1;
        prob.displacement(10f64.powf(x.0), 10f64.powf(x.1))
    };

    let sram = &base.energy.sram;
    let start = (sram.leakage_per_byte.log10(), sram.access_energy_ref.log10());
    let mut best = (start, disp(start));
    for step in [1.0, 0.5, 0.25, 0.125, 0.0625] {
        if best.1 == 0 {
            break;
        }
        'improve: loop {
            for (dx, dy) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let c = (best.0 .0 + dx, best.0 .1 + dy);
                let d = disp(c);
                if d < best.1 {
                    best = (c, d);
                    continue 'improve;
                }
            }
            break;
        }
    }
    if best.1 > 0 {
        for i in 0..=32 {
            for j in 0..=24 {
                let c = (-12.0 + 0.25 * i as f64, -16.0 + 0.25 * j as f64);
                let d = disp(c);
                if d < best.1 {
                    best = (c, d);
                }
            }
        }
    }

    let (mut leak, mut acc) = (10f64.powf(best.0 .0), 10f64.powf(best.0 .1));
    if best.0 == start {
        (leak, acc) = (sram.leakage_per_byte, sram.access_energy_ref);
    } else {
        let (rl, ra) = (round_sig(leak, 3), round_sig(acc, 3));
        if prob.displacement(rl, ra) == best.1 {
            (leak, acc) = (rl, ra);
        }
    }
    Ok(Calibration { leakage_per_byte: leak, access_energy_ref: acc, displacement: best.1, evaluations: evals })
}

/// Config fragment carrying the fitted constants.
pub fn render(c: &Calibration, targets: &[Target]) -> String {
    let mut s = String::from("# SRAM energy constants fitted by `sramdse calibrate`\n");
    for t in targets {
        s.push_str(&format!("# EDP argmin target: {t}\n"));
    }
    s.push_str(&format!("# displacement: {} grid steps after {} evaluations\n", c.displacement, c.evaluations));
    s.push_str(&format!("energy.leakage_per_byte = {}\n", fmt_num(c.leakage_per_byte)));
    s.push_str(&format!("energy.access_energy_ref = {}\n", fmt_num(c.access_energy_ref)));
    s
}
