use condforest::coding::{cyclic_shift, height_of_shift_check};
use condforest::conditioned::{sample_bridge_batch, ConditionedForestSpec};
use condforest::invariance::*;
use condforest::law::OffspringLaw;

#[test]
fn passage_time_is_uniform_when_every_vertex_is_a_root() {
    let spec = ConditionedForestSpec::new(OffspringLaw::critical_geometric(), 12, 12).unwrap();
    let counts = passage_time_counts(&spec, 13_000, 1).unwrap();
    assert_eq!(counts.len(), 13);
    let r = uniform_passage_check(&spec, 13_000, 1).unwrap();
    assert!(r.p_value > 1e-3, "{r:?}");
}

#[test]
fn passage_time_of_level_zero_is_zero() {
    // T(0) = 0 always, so P(T(u) = 0) >= 1 / (k + 1)
    let spec = ConditionedForestSpec::new(OffspringLaw::binary(), 4, 40).unwrap();
    let counts = passage_time_counts(&spec, 5000, 2).unwrap();
    let zero = counts[0] as f64 / 5000.0;
    assert!(zero > 0.18, "{zero}");
}

#[test]
fn cyclic_shift_preserves_marginals() {
    let spec = ConditionedForestSpec::new(OffspringLaw::critical_geometric(), 10, 400).unwrap();
    let rows = shift_exchangeability(&spec, 20.0, 3000, &MARGINAL_TIMES, 5).unwrap();
    for r in rows {
        assert!(r.walk_p > 1e-3 && r.height_p > 1e-3, "{r:?}");
    }
}

#[test]
fn shift_commutes_with_height_on_conditioned_paths() {
    let spec = ConditionedForestSpec::new(OffspringLaw::binary(), 6, 200).unwrap();
    for (i, p) in sample_bridge_batch(&spec, 300, 3).unwrap().iter().enumerate() {
        let level = i as u64 % 7;
        assert!(height_of_shift_check(p, level).unwrap());
        let q = cyclic_shift(p, level).unwrap();
        assert!(q.is_first_passage_bridge());
        assert_eq!(q.terminal(), p.terminal());
    }
}
