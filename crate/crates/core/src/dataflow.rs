//! Compute cycles of weight-stationary systolic arrays.
//!
//! `analytic_cycles` is the closed form used by the model; `simulate_cycles`
//! steps every PE register of one array and is the reference it is tested
//! against.

use alloc::vec;
use alloc::vec::Vec;

use crate::ceil_div;
use crate::workload::{MatmulDims, PhaseTrace};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dataflow {
    #[default]
    WeightStationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArraySpec {
    pub rows: u64,
    pub cols: u64,
    pub dataflow: Dataflow,
}

impl ArraySpec {
    pub const fn new(rows: u64, cols: u64) -> Self {
        ArraySpec { rows, cols, dataflow: Dataflow::WeightStationary }
    }

    pub fn pes(&self) -> u64 {
        self.rows * self.cols
    }

    pub fn folds(&self, m: &MatmulDims) -> u64 {
        ceil_div(m.k, self.rows) * ceil_div(m.n, self.cols)
    }

    /// Preload, stream and drain of one weight tile.
    pub fn fold_cycles(&self, m: u64) -> u64 {
        self.rows + m + self.rows + self.cols - 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FabricSpec {
    pub cores: u64,
    pub arrays_per_core: u64,
    pub array: ArraySpec,
}

impl FabricSpec {
    pub fn total_arrays(&self) -> u64 {
        self.cores * self.arrays_per_core
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.array.rows == 0 || self.array.cols == 0 {
            return Err(Error::InvalidHardware("array dims must be positive"));
        }
        if self.total_arrays() == 0 {
            return Err(Error::InvalidHardware("fabric has no arrays"));
        }
        Ok(())
    }
}

impl Default for FabricSpec {
    fn default() -> Self {
        FabricSpec { cores: 108, arrays_per_core: 4, array: ArraySpec::new(16, 16) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleEstimate {
    pub compute_cycles: u64,
    pub folds: u64,
    pub utilization: f64,
}

pub fn utilization(macs: u64, arrays: u64, pes: u64, cycles: u64) -> f64 {
    macs as f64 / (arrays as f64 * pes as f64 * cycles as f64)
}

/// Folds go round-robin over every array; M is never split.
pub fn analytic_cycles(m: &MatmulDims, fabric: &FabricSpec) -> CycleEstimate {
    let a = &fabric.array;
    let folds = a.folds(m);
    let waves = ceil_div(folds, fabric.total_arrays());
    let cycles = waves * a.fold_cycles(m.m);
    CycleEstimate {
        compute_cycles: cycles,
        folds,
        utilization: utilization(m.macs(), fabric.total_arrays(), a.pes(), cycles),
    }
}

pub const SIM_GUARD_MACS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CycleIo {
    pub reads: u32,
    pub writes: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub estimate: CycleEstimate,
    pub weight_reads: u64,
    pub input_reads: u64,
    pub psum_reads: u64,
    pub output_writes: u64,
    /// SRAM traffic of every simulated cycle.
    pub per_cycle: Vec<CycleIo>,
    /// Row-major M x N result of multiplying the simulator's operands.
    pub output: Vec<i64>,
}

/// Deterministic operand values so the simulated product can be checked.
pub fn sim_input(i: u64, j: u64) -> i64 {
    ((i * 7 + j * 3) % 11) as i64 - 5
}

pub fn sim_weight(j: u64, n: u64) -> i64 {
    ((j * 5 + n * 13) % 7) as i64 - 3
}

/// Activation in flight through one PE; `row < 0` marks an empty slot, and a
/// partial sum travels with every activation.
#[derive(Clone, Copy)]
struct Pe {
    row: i32,
    input: i32,
    psum: i64,
}

const EMPTY: Pe = Pe { row: -1, input: 0, psum: 0 };

#[inline(always)]
fn mac(incoming: Pe, above: i64, weight: i64) -> Pe {
    Pe { psum: above + incoming.input as i64 * weight, ..incoming }
}

/// Cycle-accurate run of one array over every fold of `m`, one fold at a time.
///
/// Each fold shifts `rows` weight rows in from the top, then streams the
/// skewed input rows left to right while partial sums flow down; the fold ends
/// when the last partial sum leaves the bottom-right PE.
pub fn simulate_cycles(m: &MatmulDims, array: &ArraySpec) -> Result<SimReport, Error> {
    if m.macs() > SIM_GUARD_MACS {
        return Err(Error::SimulationGuard { macs: m.macs() });
    }
    let (rows, cols) = (array.rows as usize, array.cols as usize);
    let (mm, kk, nn) = (m.m as usize, m.k as usize, m.n as usize);
    let mut out = vec![0i64; mm * nn];
    let mut per_cycle = Vec::new();
    let (mut wr, mut ir, mut pr, mut ow) = (0u64, 0u64, 0u64, 0u64);
    let mut weights = vec![0i64; rows * cols];
    let mut grid = vec![EMPTY; rows * cols];
    let mut next = grid.clone();
    let k_folds = ceil_div(m.k, array.rows) as usize;
    let n_folds = ceil_div(m.n, array.cols) as usize;

    for nf in 0..n_folds {
        for kf in 0..k_folds {
            let k0 = kf * rows;
            let n0 = nf * cols;
            let kr = rows.min(kk - k0);
            let nc = cols.min(nn - n0);

            // Preload: one row per cycle enters at the top and shifts down.
            grid.fill(EMPTY);
            weights.fill(0);
            for t in 0..rows {
                weights.copy_within(0..(rows - 1) * cols, cols);
                // After `rows` shifts row `r` holds the weight row entered at t = rows-1-r.
                let src = rows - 1 - t;
                let mut io = CycleIo::default();
                for (c, w) in weights[..cols].iter_mut().enumerate() {
                    *w = if src < kr && c < nc {
                        io.reads += 1;
                        sim_weight((k0 + src) as u64, (n0 + c) as u64)
                    } else {
                        0
                    };
                }
                wr += io.reads as u64;
                per_cycle.push(io);
            }

            // Stream and drain: the fold ends once every column has retired
            // every input row out of the bottom of the array.
            let target = mm * cols;
            let mut retired = 0usize;
            let mut t = 0usize;
            while retired < target {
                let mut io = CycleIo::default();
                for r in 0..rows {
                    let base = r * cols;
                    // Row r sees input row i at cycle i + r.
                    let incoming = if t >= r && t - r < mm {
                        let i = t - r;
                        let v = if r < kr {
                            io.reads += 1;
                            ir += 1;
                            sim_input(i as u64, (k0 + r) as u64)
                        } else {
                            0
                        };
                        Pe { row: i as i32, input: v as i32, psum: 0 }
                    } else {
                        EMPTY
                    };
                    let dst = &mut next[base..base + cols];
                    let here = &grid[base..base + cols];
                    let w = &weights[base..base + cols];
                    // Column 0 takes the injected value; column c the value left of it.
                    let mut inc = incoming;
                    if r == 0 {
                        for c in 0..cols {
                            dst[c] = if inc.row < 0 { EMPTY } else { mac(inc, 0, w[c]) };
                            inc = here[c];
                        }
                    } else {
                        let up = &grid[base - cols..base];
                        for c in 0..cols {
                            dst[c] = if inc.row < 0 {
                                EMPTY
                            } else {
                                assert!(up[c].row == inc.row, "partial sum arrives with its input");
                                mac(inc, up[c].psum, w[c])
                            };
                            inc = here[c];
                        }
                    }
                }
                // Partial sums leaving the bottom row are retired.
                let bottom = &next[(rows - 1) * cols..];
                for c in 0..cols {
                    let pe = bottom[c];
                    if pe.row >= 0 {
                        retired += 1;
                        if c < nc {
                            if kf > 0 {
                                io.reads += 1;
                                pr += 1;
                            }
                            out[pe.row as usize * nn + n0 + c] += pe.psum;
                            io.writes += 1;
                            ow += 1;
                        }
                    }
                }
                per_cycle.push(io);
                core::mem::swap(&mut grid, &mut next);
                t += 1;
            }
        }
    }
    let cycles = per_cycle.len() as u64;
    Ok(SimReport {
        estimate: CycleEstimate {
            compute_cycles: cycles,
            folds: array.folds(m),
            utilization: utilization(m.macs(), 1, array.pes(), cycles),
        },
        weight_reads: wr,
        input_reads: ir,
        psum_reads: pr,
        output_writes: ow,
        per_cycle,
        output: out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Accesses {
    pub weight_reads: u64,
    pub input_reads: u64,
    pub psum_reads: u64,
    pub output_writes: u64,
}

impl Accesses {
    pub fn reads(&self) -> u64 {
        self.weight_reads + self.input_reads + self.psum_reads
    }

    pub fn writes(&self) -> u64 {
        self.output_writes
    }
}

/// Local-buffer reads and writes made by the arrays for one matmul.
pub fn accesses(m: &MatmulDims, array: &ArraySpec) -> Accesses {
    let kf = ceil_div(m.k, array.rows);
    Accesses {
        weight_reads: m.k * m.n,
        input_reads: m.m * m.k * ceil_div(m.n, array.cols),
        psum_reads: m.m * m.n * (kf - 1),
        output_writes: m.m * m.n * kf,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PhaseAccesses {
    pub local_reads: u64,
    pub local_writes: u64,
}

pub fn accesses_per_phase(trace: &PhaseTrace, fabric: &FabricSpec) -> PhaseAccesses {
    let mut acc = PhaseAccesses::default();
    for g in &trace.groups {
        let a = accesses(&g.dims, &fabric.array);
        acc.local_reads += a.reads() * g.count;
        acc.local_writes += a.writes() * g.count;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(r: u64, c: u64) -> FabricSpec {
        FabricSpec { cores: 1, arrays_per_core: 1, array: ArraySpec::new(r, c) }
    }

    #[test]
    fn analytic_examples() {
        let e = analytic_cycles(&MatmulDims::new(4, 4, 4, true), &one(4, 4));
        assert_eq!((e.compute_cycles, e.folds), (14, 1));
        let e = analytic_cycles(&MatmulDims::new(16, 16, 16, true), &one(16, 16));
        assert_eq!(e.compute_cycles, 62);
        let e = analytic_cycles(&MatmulDims::new(3, 32, 32, true), &one(16, 16));
        assert_eq!(e.folds, 4);
    }

    #[test]
    fn simulate_smallest() {
        let s = simulate_cycles(&MatmulDims::new(1, 1, 1, true), &ArraySpec::new(1, 1)).unwrap();
        assert_eq!(s.estimate.compute_cycles, 2);
        assert_eq!((s.weight_reads, s.input_reads, s.output_writes), (1, 1, 1));
        assert_eq!(s.output, [sim_input(0, 0) * sim_weight(0, 0)]);
    }

    #[test]
    fn simulate_4x4() {
        let s = simulate_cycles(&MatmulDims::new(4, 4, 4, true), &ArraySpec::new(4, 4)).unwrap();
        assert_eq!(s.estimate.compute_cycles, 14);
        assert_eq!((s.weight_reads, s.input_reads, s.output_writes), (16, 16, 16));
        let a = accesses(&MatmulDims::new(4, 4, 4, true), &ArraySpec::new(4, 4));
        assert_eq!((a.weight_reads, a.input_reads, a.output_writes), (16, 16, 16));
    }

    #[test]
    fn simulated_product_is_correct() {
        let d = MatmulDims::new(5, 7, 9, true);
        let s = simulate_cycles(&d, &ArraySpec::new(3, 2)).unwrap();
        for i in 0..5 {
            for n in 0..9 {
                let want: i64 = (0..7).map(|j| sim_input(i, j) * sim_weight(j, n)).sum();
                assert_eq!(s.output[(i * 9 + n) as usize], want);
            }
        }
    }

    #[test]
    fn per_cycle_io_sums_to_counts() {
        let d = MatmulDims::new(6, 10, 5, true);
        let s = simulate_cycles(&d, &ArraySpec::new(4, 4)).unwrap();
        let reads: u64 = s.per_cycle.iter().map(|c| c.reads as u64).sum();
        let writes: u64 = s.per_cycle.iter().map(|c| c.writes as u64).sum();
        let a = accesses(&d, &ArraySpec::new(4, 4));
        assert_eq!(reads, a.reads());
        assert_eq!(writes, a.writes());
        assert_eq!(s.psum_reads, a.psum_reads);
        assert_eq!(s.input_reads, a.input_reads);
    }

    #[test]
    fn guard() {
        let d = MatmulDims::new(101, 100, 100, true);
        assert!(matches!(simulate_cycles(&d, &ArraySpec::new(4, 4)), Err(Error::SimulationGuard { .. })));
    }

    #[test]
    fn doubling_n() {
        let a = ArraySpec::new(4, 4);
        let x = accesses(&MatmulDims::new(5, 8, 8, true), &a);
        let y = accesses(&MatmulDims::new(5, 8, 16, true), &a);
        assert_eq!(y.weight_reads, 2 * x.weight_reads);
        assert_eq!(y.input_reads / ceil_div(16, 4), x.input_reads / ceil_div(8, 4));
    }

    #[test]
    fn single_fold_utilization() {
        let e = analytic_cycles(&MatmulDims::new(100, 16, 16, true), &one(16, 16));
        let want = (100.0 * 256.0) / (256.0 * (100.0 + 32.0 + 16.0 - 2.0));
        assert!((e.utilization - want).abs() < 1e-15);
    }
}
