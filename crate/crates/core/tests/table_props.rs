use dac_core::{index_of, Assignment, CombineOp, DenseTable, QuestionId, Reducer, Scope};
use proptest::prelude::*;

fn scope_strategy(max_vars: usize) -> impl Strategy<Value = Scope> {
    prop::collection::btree_map(0u32..8, 2usize..4, 0..=max_vars)
        .prop_map(|m| Scope::new(m.into_iter().map(|(q, c)| (QuestionId(q), c))).unwrap())
}

fn table_strategy(max_vars: usize) -> impl Strategy<Value = DenseTable<i64>> {
    scope_strategy(max_vars).prop_flat_map(|s| {
        prop::collection::vec(-100i64..100, s.size())
            .prop_map(move |v| DenseTable::new(s.clone(), v).unwrap())
    })
}

/// Random subset of a scope's variables, chosen by bitmask.
fn sub_scope(scope: &Scope, mask: u32) -> Scope {
    let keep: Vec<QuestionId> = scope
        .vars()
        .iter()
        .enumerate()
        .filter(|(i, _)| mask & (1 << i) != 0)
        .map(|(_, &q)| q)
        .collect();
    scope.without(|q| !keep.contains(&q))
}

proptest! {
    #[test]
    fn index_of_is_a_bijection(scope in scope_strategy(4)) {
        let mut seen = vec![false; scope.size()];
        for a in scope.assignments() {
            let i = index_of(&scope, &a).unwrap();
            prop_assert!(!seen[i]);
            seen[i] = true;
        }
        prop_assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn slice_reads_the_extended_cell(t in table_strategy(4), mask in 0u32..16, pick in 0usize..64) {
        let ev_scope = sub_scope(t.scope(), mask);
        let evidence = ev_scope.assignment_of(pick % ev_scope.size());
        let sliced = t.slice(&evidence).unwrap();
        for a in sliced.scope().assignments() {
            prop_assert_eq!(sliced.get(&a).unwrap(), t.get(&a.merged(&evidence)).unwrap());
        }
    }

    #[test]
    fn projection_composes(t in table_strategy(4), outer in 0u32..16, inner in 0u32..16) {
        let mid = sub_scope(t.scope(), outer);
        let small = sub_scope(&mid, inner);
        for reducer in [Reducer::Sum, Reducer::Min] {
            let two_step = t.project(&mid, reducer).unwrap().project(&small, reducer).unwrap();
            prop_assert_eq!(two_step, t.project(&small, reducer).unwrap());
        }
    }

    #[test]
    fn combine_identities(t in table_strategy(4), mask in 0u32..16) {
        let sub = sub_scope(t.scope(), mask);
        prop_assert_eq!(&t.combine(&DenseTable::zeros(sub.clone()), CombineOp::Add).unwrap(), &t);
        prop_assert_eq!(&t.combine(&DenseTable::filled(sub, 1), CombineOp::Mul).unwrap(), &t);
    }

    #[test]
    fn serialization_is_lossless(
        scope in scope_strategy(3),
        seed in prop::collection::vec(-1e6f64..1e6, 81),
    ) {
        let t = DenseTable::new(scope.clone(), seed[..scope.size()].to_vec()).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        let back: DenseTable<f64> = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, t);
    }
}

#[test]
fn evidence_outside_scope_is_rejected() {
    let t = DenseTable::<i64>::zeros(Scope::new([(QuestionId(0), 2)]).unwrap());
    assert!(t.slice(&Assignment::new().with(QuestionId(1), 0)).is_err());
}
