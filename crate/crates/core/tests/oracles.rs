use proptest::prelude::*;

use sramdse_core::dataflow::{accesses, analytic_cycles, simulate_cycles, ArraySpec, FabricSpec};
use sramdse_core::memory::{plan_tiling, traffic, BufferSpec, TilingPlan, TrafficReport};
use sramdse_core::workload::MatmulDims;

fn single(rows: u64, cols: u64) -> FabricSpec {
    FabricSpec { cores: 1, arrays_per_core: 1, array: ArraySpec::new(rows, cols) }
}

fn div_up(a: u64, b: u64) -> u64 {
    a.div_ceil(b)
}

fn pow2_or_full(t: u64, dim: u64) -> bool {
    t == dim || (t.is_power_of_two() && t < dim)
}

type Key = (u64, i64, i64, i64);

/// Every integer triple, filtered to the allowed tile shapes.
fn brute_force_plan(m: &MatmulDims, cap: u64, b: u64, rows: u64, cores: u64) -> Option<(u64, u64, u64)> {
    let pick = |floor: u64| {
        let mut best: Option<(Key, (u64, u64, u64))> = None;
        for tm in 1..=m.m {
            for tk in 1..=m.k {
                for tn in 1..=m.n {
                    if !(pow2_or_full(tm, m.m) && pow2_or_full(tk, m.k) && pow2_or_full(tn, m.n)) || tm < floor {
                        continue;
                    }
                    if b * (tk * tn + 2 * tm * tk + 2 * tm * tn) > cap {
                        continue;
                    }
                    // DRAM elements plus link elements of the schedule.
                    let groups = div_up(m.n, tn * cores);
                    let ktiles = div_up(m.k, tk);
                    let dram = m.k * m.n + m.m * m.k * groups + m.m * m.n;
                    let link = m.k * m.n + m.m * m.k * groups + m.m * m.n * (2 * ktiles - 1);
                    let key = (dram + link, -((tk * tn) as i64), -(tm as i64), -(tn as i64));
                    if best.is_none_or(|(k, _)| key < k) {
                        best = Some((key, (tm, tk, tn)));
                    }
                }
            }
        }
        best.map(|(_, p)| p)
    };
    pick(m.m.min(rows)).or_else(|| pick(1))
}

/// Walks the weight-stationary loop nest tile by tile and counts every
/// element moved.
fn tile_walk(m: &MatmulDims, p: &TilingPlan, b: u64, fabric: &FabricSpec) -> TrafficReport {
    let cores = fabric.cores;
    let mut t = TrafficReport::default();
    let n_tiles: Vec<(u64, u64)> = (0..m.n).step_by(p.tile_n as usize).map(|n0| (n0, p.tile_n.min(m.n - n0))).collect();
    let k_tiles: Vec<(u64, u64)> = (0..m.k).step_by(p.tile_k as usize).map(|k0| (k0, p.tile_k.min(m.k - k0))).collect();
    let m_tiles: Vec<u64> = (0..m.m).step_by(p.tile_m as usize).map(|m0| p.tile_m.min(m.m - m0)).collect();
    let (mut dram, mut link) = (0u64, 0u64);
    for group in n_tiles.chunks(cores as usize) {
        for (ki, &(_, kw)) in k_tiles.iter().enumerate() {
            for &(_, nw) in group {
                // Weight tile: DRAM -> global -> this core.
                dram += kw * nw;
                link += kw * nw;
                t.global_writes += kw * nw;
                t.global_reads += kw * nw;
                t.local_writes += kw * nw;
            }
            for &mw in &m_tiles {
                // One DRAM fetch and one multicast per group.
                dram += mw * kw;
                link += mw * kw;
                t.global_writes += mw * kw;
                t.global_reads += mw * kw;
                for &(_, nw) in group {
                    t.local_writes += mw * kw;
                    if ki > 0 {
                        link += mw * nw;
                        t.global_reads += mw * nw;
                        t.local_writes += mw * nw;
                    }
                    link += mw * nw;
                    t.local_reads += mw * nw;
                    t.global_writes += mw * nw;
                }
            }
        }
    }
    // Finished outputs leave through DRAM.
    dram += m.m * m.n;
    t.global_reads += m.m * m.n;
    let arr = accesses(m, &fabric.array);
    t.local_reads += arr.reads();
    t.local_writes += arr.writes();
    t.dram_bytes = dram * b;
    t.onchip_bytes = link * b;
    t
}

#[test]
fn eight_cube_plan_from_exhaustive_search() {
    let d = MatmulDims::new(8, 8, 8, true);
    let f = FabricSpec::default();
    let want = brute_force_plan(&d, 256, 2, 16, f.cores).unwrap();
    assert_eq!(want, (8, 4, 2));
    let p = plan_tiling(&d, &BufferSpec::local(256), 2, &f).unwrap();
    assert_eq!((p.tile_m, p.tile_k, p.tile_n), want);
    assert!(p.double_buffered);
}

#[test]
fn eight_cube_traffic_from_tile_walk() {
    let d = MatmulDims::new(8, 8, 8, true);
    let f = FabricSpec::default();
    let p = plan_tiling(&d, &BufferSpec::local(256), 2, &f).unwrap();
    let t = traffic(&d, &p, 2, &f);
    assert_eq!(t, tile_walk(&d, &p, 2, &f));
    // 64 weights, 64 inputs (one multicast group), 64 outputs.
    assert_eq!(t.dram_bytes, 3 * 64 * 2);
}

#[test]
fn simulator_fixed_cases() {
    for (d, a, cycles) in [
        (MatmulDims::new(1, 1, 1, true), ArraySpec::new(1, 1), 2),
        (MatmulDims::new(4, 4, 4, true), ArraySpec::new(4, 4), 14),
        (MatmulDims::new(16, 16, 16, true), ArraySpec::new(16, 16), 62),
    ] {
        let s = simulate_cycles(&d, &a).unwrap();
        assert_eq!(s.estimate.compute_cycles, cycles);
        assert_eq!(analytic_cycles(&d, &single(a.rows, a.cols)).compute_cycles, cycles);
    }
}

proptest! {
    #[test]
    fn plan_matches_exhaustive_search(
        m in 1u64..12, k in 1u64..12, n in 1u64..12,
        cap in 10u64..700, b in 1u64..3, rows in 1u64..6, cores in 1u64..4,
    ) {
        let d = MatmulDims::new(m, k, n, true);
        let f = FabricSpec { cores, arrays_per_core: 1, array: ArraySpec::new(rows, rows) };
        let got = plan_tiling(&d, &BufferSpec::local(cap), b, &f).ok().map(|p| (p.tile_m, p.tile_k, p.tile_n));
        prop_assert_eq!(got, brute_force_plan(&d, cap, b, rows, cores));
    }

    #[test]
    fn traffic_matches_tile_walk(
        m in 1u64..40, k in 1u64..40, n in 1u64..40,
        cap in 10u64..4000, b in 1u64..3, rows in 1u64..9, cores in 1u64..5,
    ) {
        let d = MatmulDims::new(m, k, n, true);
        let f = FabricSpec { cores, arrays_per_core: 1, array: ArraySpec::new(rows, rows) };
        if let Ok(p) = plan_tiling(&d, &BufferSpec::local(cap), b, &f) {
            prop_assert!(p.footprint(b) <= cap);
            prop_assert_eq!(traffic(&d, &p, b, &f), tile_walk(&d, &p, b, &f));
        }
    }

    #[test]
    fn simulator_counts_and_cycles(m in 1u64..20, k in 1u64..20, n in 1u64..20, r in 1u64..6, c in 1u64..6) {
        let d = MatmulDims::new(m, k, n, true);
        let a = ArraySpec::new(r, c);
        let s = simulate_cycles(&d, &a).unwrap();
        let acc = accesses(&d, &a);
        prop_assert_eq!(s.estimate.compute_cycles, analytic_cycles(&d, &single(r, c)).compute_cycles);
        prop_assert_eq!(s.weight_reads, acc.weight_reads);
        prop_assert_eq!(s.input_reads, acc.input_reads);
        prop_assert_eq!(s.psum_reads, acc.psum_reads);
        prop_assert_eq!(s.output_writes, acc.output_writes);
        prop_assert!(s.estimate.utilization <= 1.0);
        for i in 0..m {
            for j in 0..n {
                let want: i64 = (0..k).map(|x| sramdse_core::dataflow::sim_input(i, x) * sramdse_core::dataflow::sim_weight(x, j)).sum();
                prop_assert_eq!(s.output[(i * n + j) as usize], want);
            }
        }
    }
}
