mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use pureheap::trace::{format_trace, parse_trace};
use pureheap::{
    extract_min, AlgorithmKind, Delta, KeyValue, NodeId, Operation, PureHeap, RankParams, Recording, RecordItem,
    Suboperation, VmError, Workload, DEFAULT_RHO,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
enum Step {
    Insert(i64),
    /// Decrease-key on the `i`-th live node (mod count).
    Decrease(usize, i64),
    Extract,
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        4 => (-20i64..20).prop_map(Step::Insert),
        2 => (any::<usize>(), 0i64..6).prop_map(|(i, d)| Step::Decrease(i, d)),
        2 => Just(Step::Extract),
    ]
}

fn algorithm() -> impl Strategy<Value = AlgorithmKind> {
    prop_oneof![Just(AlgorithmKind::TwoPass), Just(AlgorithmKind::Multipass)]
}

fn params() -> impl Strategy<Value = RankParams> {
    (1u32..=3, 1u32..=2, 0u32..=4).prop_map(|(d, window, a)| {
        RankParams::from_exponent(d, window, a, pureheap::ThresholdBase::W).unwrap()
    })
}

fn subop(rho: usize) -> impl Strategy<Value = Suboperation> {
    use Suboperation::*;
    let r = 0..=rho + 1;
    prop_oneof![
        1 => r.clone().prop_map(HasParent),
        1 => r.clone().prop_map(HasLeftSibling),
        1 => r.clone().prop_map(HasRightSibling),
        1 => r.clone().prop_map(HasChildren),
        1 => (r.clone(), r.clone()).prop_map(|(i, j)| Compare(i, j)),
        3 => (r.clone(), r.clone()).prop_map(|(i, j)| Pair(i, j)),
        1 => r.clone().prop_map(Unpair),
        1 => (r.clone(), r.clone()).prop_map(|(i, j)| Set(i, j)),
        1 => (r.clone(), r.clone()).prop_map(|(i, j)| Swap(i, j)),
        1 => r.clone().prop_map(MoveToParent),
        1 => r.clone().prop_map(MoveToLeftmostChild),
        2 => r.clone().prop_map(MoveToRightSibling),
        1 => r.clone().prop_map(MoveToLeftSibling),
        1 => Just(End),
    ]
}

fn live(heap: &PureHeap) -> Vec<NodeId> {
    heap.forest().live_ids().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn incremental_rank_matches_oracle(p in params(), alg in algorithm(), steps in prop::collection::vec(step(), 1..120)) {
        let mut heap = PureHeap::new(p, DEFAULT_RHO);
        let mut program = alg.program();
        for s in steps {
            match s {
                Step::Insert(v) => { heap.insert(v).unwrap(); }
                Step::Decrease(i, d) if !heap.is_empty() => {
                    let ids = live(&heap);
                    heap.decrease_key(ids[i % ids.len()], Delta::Finite(d)).unwrap();
                }
                Step::Extract if !heap.is_empty() => { extract_min(&mut heap, program.as_mut()).unwrap(); }
                _ => {}
            }
            prop_assert_eq!(common::oracle_mismatches(&heap), Vec::<NodeId>::new());
            prop_assert!(heap.forest().check_consistency().is_ok());
        }
    }

    #[test]
    fn extract_min_matches_sorted_multiset(alg in algorithm(), steps in prop::collection::vec(step(), 1..200)) {
        let mut heap = PureHeap::new(RankParams::default(), DEFAULT_RHO);
        let mut program = alg.program();
        let mut keys: BTreeMap<NodeId, i64> = BTreeMap::new();
        for s in steps {
            match s {
                Step::Insert(v) => { keys.insert(heap.insert(v).unwrap(), v); }
                Step::Decrease(i, d) if !keys.is_empty() => {
                    let h = *keys.keys().nth(i % keys.len()).unwrap();
                    heap.decrease_key(h, Delta::Finite(d)).unwrap();
                    *keys.get_mut(&h).unwrap() -= d;
                }
                Step::Extract if !keys.is_empty() => {
                    let roots = heap.forest().root_count();
                    let out = extract_min(&mut heap, program.as_mut()).unwrap();
                    let min = *keys.values().min().unwrap();
                    prop_assert_eq!(out.key.value, KeyValue::Finite(min));
                    prop_assert_eq!(keys.remove(&out.node), Some(min));
                    let pairs = out.trace.iter().filter(|e| matches!(e.subop, Suboperation::Pair(..))).count();
                    prop_assert_eq!(pairs, roots - 1);
                    prop_assert_eq!(heap.forest().node_count(), keys.len());
                }
                _ => {}
            }
        }
    }

    #[test]
    fn rejected_subops_leave_state_unchanged(seed in any::<u64>(), subops in prop::collection::vec(subop(DEFAULT_RHO), 1..300)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut heap = common::random_heap(&mut rng, 24, RankParams::default());
        heap.begin_extract_min().unwrap();
        for s in subops {
            let before = heap.fingerprint();
            match heap.apply(s) {
                Ok(_) => {}
                Err(e) => {
                    prop_assert!(matches!(
                        e,
                        VmError::PreconditionViolated { .. }
                            | VmError::PreconditionNotVerified { .. }
                            | VmError::PointerOutOfRange { .. }
                            | VmError::SessionEnded
                    ), "unexpected error {e}");
                    prop_assert_eq!(heap.fingerprint(), before);
                }
            }
            prop_assert!(heap.forest().check_consistency().is_ok());
        }
    }

    #[test]
    fn certified_programs_never_fail(seed in any::<u64>(), len in 1usize..300) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut heap = common::random_heap(&mut rng, 64, RankParams::default());
        heap.begin_extract_min().unwrap();
        let res = common::random_valid_program(&mut heap, &mut rng, len);
        prop_assert!(res.is_ok(), "{}", res.unwrap_err());
    }

    #[test]
    fn trace_text_round_trips(seed in any::<u64>(), len in 1usize..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut heap = common::random_heap(&mut rng, 32, RankParams::default());
        heap.begin_extract_min().unwrap();
        common::random_valid_program(&mut heap, &mut rng, len).unwrap();
        let trace = heap.session().unwrap().trace().clone();
        let text = format_trace(&trace);
        prop_assert_eq!(parse_trace(&text).unwrap(), trace);
    }

    #[test]
    fn recordings_round_trip_and_replay(alg in algorithm(), seed in any::<u64>(), n in 1usize..40) {
        let w = pureheap::algorithms::dijkstra_workload(n, seed);
        let (_, rec) = pureheap::run_workload(alg, RankParams::default(), DEFAULT_RHO, &w, true).unwrap();
        let rec = rec.unwrap();
        let parsed: Recording = rec.to_string().parse().unwrap();
        prop_assert_eq!(&parsed, &rec);
        let heap = parsed.replay().unwrap();
        let code = heap.forest().structure_code();
        prop_assert_eq!(Some(code.as_str()), rec.last_snapshot());
        let text = w.to_string();
        prop_assert_eq!(text.parse::<Workload>().unwrap().to_string(), text);
    }

    #[test]
    fn same_trace_on_equal_structures_is_deterministic(alg in algorithm(), keys in prop::collection::vec(-30i64..30, 1..40)) {
        let build = || {
            let mut h = PureHeap::new(RankParams::default(), DEFAULT_RHO);
            for &k in &keys {
                h.insert(k).unwrap();
            }
            h
        };
        let (mut a, mut b) = (build(), build());
        let out = extract_min(&mut a, alg.program().as_mut()).unwrap();
        b.begin_extract_min().unwrap();
        for e in &out.trace {
            prop_assert_eq!(b.apply(e.subop).unwrap(), e.ret);
        }
        b.finish_extract_min().unwrap();
        prop_assert_eq!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn positions_survive_left_insertion(keys in prop::collection::vec(-30i64..30, 2..40), extra in 1usize..5) {
        let mut h = PureHeap::new(RankParams::default(), DEFAULT_RHO);
        for &k in &keys {
            h.insert(k).unwrap();
        }
        extract_min(&mut h, AlgorithmKind::TwoPass.program().as_mut()).unwrap();
        let before: Vec<_> = live(&h).into_iter().map(|x| (x, h.forest().position_of(x))).collect();
        for _ in 0..extra {
            h.insert(0).unwrap();
        }
        for (x, pos) in before {
            prop_assert_eq!(h.forest().position_of(x), pos.clone());
            prop_assert_eq!(h.forest().resolve(&pos), Some(x));
        }
    }

    #[test]
    fn cost_is_conserved(alg in algorithm(), seed in any::<u64>(), n in 1usize..60) {
        let w = pureheap::algorithms::dijkstra_workload(n, seed);
        let (report, rec) = pureheap::run_workload(alg, RankParams::default(), DEFAULT_RHO, &w, true).unwrap();
        let c = &report.cost;
        prop_assert_eq!(c.total(), c.inserts + c.decrease_keys + c.extractmin_subops);
        prop_assert_eq!(c.per_operation.iter().sum::<u64>(), c.total());
        let traced: u64 = rec
            .unwrap()
            .items
            .iter()
            .map(|i| if let RecordItem::ExtractMin(t) = i { t.len() as u64 } else { 0 })
            .sum();
        prop_assert_eq!(traced, c.extractmin_subops);
    }

    #[test]
    fn monotone_sequences_never_lower_ranks(alg in algorithm(), p in params(), seed in any::<u64>(), n in 1usize..32) {
        let ops = pureheap::rank::monotone::random_monotone_sequence(n, 3 * n + 4, alg, p, seed).unwrap();
        prop_assert!(ops.iter().all(|o| !matches!(o, Operation::Insert(v) if *v > 0)));
        let mut heap = PureHeap::new(p, DEFAULT_RHO);
        let mut program = alg.program();
        let report = pureheap::rank::monotone::check_monotone_rank(&mut heap, &ops, |h| {
            extract_min(h, program.as_mut()).map(|_| ())
        })
        .unwrap();
        prop_assert!(report.is_clean(), "{:?}", report.decreases);
    }
}
