use proptest::prelude::*;

use sramdse::sweep::{run_sweep, SweepSpec};
use sramdse_core::eval::{evaluate, SystemConfig};
use sramdse_core::workload::Phase;
use sramdse_core::KIB;

fn spec() -> impl Strategy<Value = SweepSpec> {
    (
        prop::collection::vec(prop::sample::select(vec![16u64, 32, 64, 256, 1024]), 1..4),
        prop::collection::vec(prop::sample::select(vec![200e6, 600e6, 1000e6, 1400e6]), 1..4),
        prop::collection::vec(prop::sample::select(vec![1024e9, 2048e9, 8192e9]), 1..3),
        prop::collection::vec(prop::sample::select(Phase::ALL.to_vec()), 1..3),
    )
        .prop_map(|(s, f, bw, phases)| SweepSpec {
            s_values: s.into_iter().map(|k| k * KIB).collect(),
            f_values: f,
            bw_values: bw,
            phases,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn records_are_pure_and_order_free(spec in spec(), jobs in 0usize..4) {
        let cfg = SystemConfig::default();
        let a = run_sweep(&spec, &cfg, jobs);
        let mut rev = spec.clone();
        rev.s_values.reverse();
        rev.f_values.reverse();
        rev.bw_values.reverse();
        rev.phases.reverse();
        let b = run_sweep(&rev, &cfg, 1);
        prop_assert_eq!(&a.records, &b.records);
        prop_assert_eq!(a.records.len(), spec.canonical().len());
        for r in &a.records {
            prop_assert_eq!(&r.outcome, &evaluate(&cfg.at(&r.point), r.phase));
        }
    }
}
