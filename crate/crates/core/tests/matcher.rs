use std::collections::HashMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use relgraph_core::fixtures;
use relgraph_core::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use relgraph_core::matcher::{
    brute_force_mine, match_pattern, mine, motif_ternary_count, spmm_count, ternary_hyperedges, MatchOptions,
    OccurrenceClass,
};
use relgraph_core::vocabulary::{builtin_pattern, builtin_vocabulary, MatchMode, Vocabulary};

fn named(g: &KnowledgeGraph, classes: &[OccurrenceClass]) -> Vec<(String, String, String, u64)> {
    classes
        .iter()
        .map(|c| {
            (
                c.pattern.clone(),
                g.relation_name(c.r1).to_owned(),
                g.relation_name(c.r2).to_owned(),
                c.weight,
            )
        })
        .collect()
}

fn row(p: &str, a: &str, b: &str, w: u64) -> (String, String, String, u64) {
    (p.into(), a.into(), b.into(), w)
}

#[test]
fn ikg_classes_for_two_and_three_paths() {
    let g = fixtures::ikg();
    let v = Vocabulary::from_pattern_names(&["ff_o", "fff_o"]).unwrap();
    let got = named(&g, &mine(&g, &v, MatchOptions::default()).unwrap());
    let want = vec![
        row("ffo", "r1", "r2", 1),
        row("ffo", "r1", "r4", 1),
        row("ffo", "r1", "r5", 1),
        row("ffo", "r2", "r3", 1),
        row("ffo", "r4", "r3", 1),
        row("ffo", "r5", "r3", 1),
        row("fffo", "r1", "r3", 3),
    ];
    assert_eq!(got, want);
}

#[test]
fn cyclic_closed_three_path() {
    let g = fixtures::cyclic();
    let v = Vocabulary::from_pattern_names(&["fff_c"]).unwrap();
    let got = named(&g, &mine(&g, &v, MatchOptions::default()).unwrap());
    assert_eq!(
        got,
        vec![
            row("fffc", "r1", "r3", 1),
            row("fffc", "r2", "r1", 1),
            row("fffc", "r3", "r2", 1)
        ]
    );
}

#[test]
fn closed_patterns_vanish_on_ikg() {
    let g = fixtures::ikg();
    let v = builtin_vocabulary("V3").unwrap();
    for c in mine(&g, &v, MatchOptions::default()).unwrap() {
        let p = v.pattern(&c.pattern).unwrap();
        assert!(!p.closed(), "closed class {c:?} on an acyclic graph");
    }
}

#[test]
fn oracle_agrees_on_ikg_v2() {
    let g = fixtures::ikg();
    let v = builtin_vocabulary("V2").unwrap();
    let opts = MatchOptions::default();
    assert_eq!(mine(&g, &v, opts).unwrap(), brute_force_mine(&g, &v, opts).unwrap());
}

#[test]
fn single_triple_has_no_injective_classes() {
    let g = KnowledgeGraph::from_named_triples([("a", "r", "b")]);
    let v = builtin_vocabulary("V2").unwrap();
    assert!(mine(&g, &v, MatchOptions::default()).unwrap().is_empty());
    assert!(brute_force_mine(&g, &v, MatchOptions::default()).unwrap().is_empty());
}

#[test]
fn oracle_refuses_large_graphs() {
    let triples: Vec<_> = (0..13).map(|i| (format!("e{i}"), format!("e{}", i + 1))).collect();
    let g = KnowledgeGraph::from_named_triples(triples.iter().map(|(a, b)| (a.as_str(), "r", b.as_str())));
    let v = builtin_vocabulary("V2").unwrap();
    assert!(brute_force_mine(&g, &v, MatchOptions::default()).is_err());
}

#[test]
fn permissive_mode_allows_equal_anchors() {
    let g = KnowledgeGraph::from_named_triples([("a", "r", "b"), ("b", "r", "c")]);
    let v = Vocabulary::from_pattern_names(&["ffo"]).unwrap();
    assert!(mine(&g, &v, MatchOptions::default()).unwrap().is_empty());
    let loose = mine(&g, &v, MatchOptions::permissive()).unwrap();
    assert_eq!(loose.len(), 1);
    assert_eq!(loose, brute_force_mine(&g, &v, MatchOptions::permissive()).unwrap());
}

#[test]
fn ikg_ternary_counts() {
    let g = fixtures::ikg();
    let p = builtin_pattern("fffo").unwrap();
    let r = |n: &str| g.relation_id(n).unwrap();
    assert_eq!(motif_ternary_count(&g, &p, r("r1"), r("r2"), r("r3")).unwrap(), 1);
    assert_eq!(motif_ternary_count(&g, &p, r("r1"), r("r4"), r("r3")).unwrap(), 1);
    assert_eq!(motif_ternary_count(&g, &p, r("r1"), r("r5"), r("r3")).unwrap(), 1);
    assert_eq!(motif_ternary_count(&g, &p, r("r1"), r("r1"), r("r3")).unwrap(), 0);
}

#[test]
fn strict_filters_never_add_classes() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let v = builtin_vocabulary("M4'").unwrap();
    let strict = v.clone().with_filters(relgraph_core::vocabulary::FilterMode::Strict);
    for _ in 0..30 {
        let g = fixtures::random_kg(&mut rng, 7, 3, 0.25);
        let loose: HashMap<_, _> = mine(&g, &v, MatchOptions::default())
            .unwrap()
            .into_iter()
            .map(|c| ((c.pattern, c.r1, c.r2), c.weight))
            .collect();
        for c in mine(&g, &strict, MatchOptions::default()).unwrap() {
            assert!(c.weight <= loose[&(c.pattern, c.r1, c.r2)]);
        }
    }
}

fn small_graph() -> impl Strategy<Value = KnowledgeGraph> {
    (1usize..=6, 1usize..=3).prop_flat_map(|(n, m)| {
        proptest::collection::vec((0..n as u32, 0..m as u32, 0..n as u32), 0..=14).prop_map(move |ts| {
            let triples: Vec<Triple> = ts
                .into_iter()
                .map(|(h, r, t)| Triple::new(EntityId(h), RelationId(r), EntityId(t)))
                .collect();
            KnowledgeGraph::from_id_triples(n, m, triples).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mine_matches_oracle(g in small_graph()) {
        let v = builtin_vocabulary("V3+").unwrap();
        for opts in [MatchOptions::default(), MatchOptions::permissive()] {
            prop_assert_eq!(mine(&g, &v, opts).unwrap(), brute_force_mine(&g, &v, opts).unwrap());
        }
    }

    #[test]
    fn existence_is_clamped_count(g in small_graph()) {
        let v = builtin_vocabulary("V3").unwrap();
        let counts = mine(&g, &v, MatchOptions::default()).unwrap();
        let exists = mine(&g, &v.clone().with_mode(MatchMode::Existence), MatchOptions::default()).unwrap();
        prop_assert_eq!(counts.len(), exists.len());
        for (c, e) in counts.iter().zip(&exists) {
            prop_assert_eq!(e.weight, c.weight.min(1));
        }
    }

    #[test]
    fn spmm_matches_matcher(g in small_graph()) {
        let v = builtin_vocabulary("V2").unwrap();
        for p in v.patterns() {
            for r1 in g.relation_ids() {
                for r2 in g.relation_ids().filter(|&r| r != r1) {
                    let a = spmm_count(&g, p, r1, r2).unwrap();
                    let b = match_pattern(&g, p, r1, r2, MatchMode::Count, MatchOptions::default()).unwrap();
                    prop_assert_eq!(a, b, "{} {} {}", p.name(), r1, r2);
                }
            }
        }
    }

    #[test]
    fn binary_weight_is_sum_of_ternary(g in small_graph()) {
        let v = builtin_vocabulary("V3").unwrap();
        for p in v.patterns().iter().filter(|p| p.has_wildcard()) {
            for r1 in g.relation_ids() {
                for r3 in g.relation_ids().filter(|&r| r != r1) {
                    let binary = match_pattern(&g, p, r1, r3, MatchMode::Count, MatchOptions::default()).unwrap();
                    let mut total = 0;
                    for r2 in g.relation_ids() {
                        let t = motif_ternary_count(&g, p, r1, r2, r3).unwrap();
                        prop_assert!(t <= binary);
                        total += t;
                    }
                    prop_assert_eq!(total, binary);
                }
            }
            let edges = ternary_hyperedges(&g, p, true).unwrap();
            for e in edges {
                let binary = match_pattern(&g, p, e.rels[0], e.rels[2], MatchMode::Count, MatchOptions::default()).unwrap();
                prop_assert!(binary >= e.weight);
            }
        }
    }

    #[test]
    fn adding_a_triple_never_lowers_weights(g in small_graph(), extra in (0u32..6, 0u32..3, 0u32..6)) {
        let (h, r, t) = extra;
        prop_assume!((h as usize) < g.num_entities() && (t as usize) < g.num_entities() && (r as usize) < g.num_relations());
        let mut triples = g.triples().to_vec();
        triples.push(Triple::new(EntityId(h), RelationId(r), EntityId(t)));
        let bigger = KnowledgeGraph::from_id_triples(g.num_entities(), g.num_relations(), triples).unwrap();
        let v = builtin_vocabulary("V3+").unwrap();
        let after: HashMap<_, _> = mine(&bigger, &v, MatchOptions::default())
            .unwrap()
            .into_iter()
            .map(|c| ((c.pattern, c.r1, c.r2), c.weight))
            .collect();
        for c in mine(&g, &v, MatchOptions::default()).unwrap() {
            let w = after.get(&(c.pattern.clone(), c.r1, c.r2)).copied().unwrap_or(0);
            prop_assert!(w >= c.weight, "{:?} dropped to {}", c, w);
        }
    }
}
