//! Bundled toy graphs and small synthetic generators used by tests, the
//! `verify` suites and the acceptance harness.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::kg::{parse_tsv, EntityId, GraphBuilder, KnowledgeGraph, RelationId, Triple};

pub const IKG_TSV: &str = include_str!("../fixtures/ikg.tsv");
pub const CYCLIC_TSV: &str = include_str!("../fixtures/cyclic.tsv");
pub const FAMILY_TSV: &str = include_str!("../fixtures/family.tsv");
pub const CORPORATE_TSV: &str = include_str!("../fixtures/corporate.tsv");
pub const SCHOLARLY_TSV: &str = include_str!("../fixtures/scholarly.tsv");

fn parse_bundled(text: &str) -> KnowledgeGraph {
    parse_tsv(text).expect("bundled fixture parses")
}

/// Seven entities, five relations, eight triples; acyclic.
pub fn ikg() -> KnowledgeGraph {
    parse_bundled(IKG_TSV)
}

/// Three-relation directed triangle `x -r1-> y -r2-> z -r3-> x`.
pub fn cyclic() -> KnowledgeGraph {
    parse_bundled(CYCLIC_TSV)
}

pub fn family() -> KnowledgeGraph {
    parse_bundled(FAMILY_TSV)
}

pub fn corporate() -> KnowledgeGraph {
    parse_bundled(CORPORATE_TSV)
}

pub fn scholarly() -> KnowledgeGraph {
    parse_bundled(SCHOLARLY_TSV)
}

/// Uniform random graph over `1..=max_entities` entities and
/// `1..=max_relations` relations; each candidate edge is kept with
/// probability `density`.
pub fn random_kg<R: Rng>(rng: &mut R, max_entities: usize, max_relations: usize, density: f64) -> KnowledgeGraph {
    let n = rng.gen_range(1..=max_entities.max(1));
    let m = rng.gen_range(1..=max_relations.max(1));
    let mut triples = Vec::new();
    for r in 0..m {
        for h in 0..n {
            for t in 0..n {
                if rng.gen_bool(density) {
                    triples.push(Triple::new(
                        EntityId(h as u32),
                        RelationId(r as u32),
                        EntityId(t as u32),
                    ));
                }
            }
        }
    }
    KnowledgeGraph::from_id_triples(n, m, triples).expect("ids in range")
}

/// Renames every entity and relation and shuffles triple order, yielding an
/// isomorphic graph whose interned ids differ from the source.
pub fn relabel<R: Rng>(g: &KnowledgeGraph, rng: &mut R, prefix: &str) -> Relabeled {
    let mut ent_perm: Vec<usize> = (0..g.num_entities()).collect();
    let mut rel_perm: Vec<usize> = (0..g.num_relations()).collect();
    ent_perm.shuffle(rng);
    rel_perm.shuffle(rng);
    let ent_name = |e: EntityId| format!("{prefix}E{}", ent_perm[e.index()]);
    let rel_name = |r: RelationId| format!("{prefix}R{}", rel_perm[r.index()]);
    let mut order: Vec<Triple> = g.triples().to_vec();
    order.shuffle(rng);
    let mut b = GraphBuilder::new();
    // isolated entities must survive the relabeling too
    let mut isolated: Vec<EntityId> = g.entity_ids().collect();
    isolated.shuffle(rng);
    for t in &order {
        b.add(&ent_name(t.head), &rel_name(t.relation), &ent_name(t.tail));
    }
    for e in isolated {
        b.intern_entity(&ent_name(e));
    }
    let mut rels: Vec<RelationId> = g.relation_ids().collect();
    rels.shuffle(rng);
    for r in rels {
        b.intern_relation(&rel_name(r));
    }
    let graph = b.build();
    let entity_map = g
        .entity_ids()
        .map(|e| graph.entity_id(&ent_name(e)).expect("entity interned"))
        .collect();
    let relation_map = g
        .relation_ids()
        .map(|r| graph.relation_id(&rel_name(r)).expect("relation interned"))
        .collect();
    Relabeled {
        graph,
        entity_map,
        relation_map,
    }
}

/// Output of [`relabel`]: the new graph plus the old-id to new-id maps.
#[derive(Clone, Debug)]
pub struct Relabeled {
    pub graph: KnowledgeGraph,
    pub entity_map: Vec<EntityId>,
    pub relation_map: Vec<RelationId>,
}

impl Relabeled {
    pub fn map_triple(&self, t: &Triple) -> Triple {
        Triple::new(
            self.entity_map[t.head.index()],
            self.relation_map[t.relation.index()],
            self.entity_map[t.tail.index()],
        )
    }
}

/// A small family graph generated from two rules:
///
/// * `married(x, y) ∧ parent(x, z) ⇒ parent(y, z)`
/// * `parent(x, a) ∧ parent(x, b) ∧ a ≠ b ⇒ sibling(a, b)`
///
/// `held_out` holds one rule-implied triple per family whose rule body
/// remains in `graph`.
#[derive(Clone, Debug)]
pub struct FamilyDataset {
    pub graph: KnowledgeGraph,
    pub held_out: Vec<Triple>,
}

/// Generates `families` households with 2 or 3 children each.
pub fn family_rules<R: Rng>(rng: &mut R, families: usize) -> FamilyDataset {
    let mut b = GraphBuilder::new();
    let married = b.intern_relation("married");
    let parent = b.intern_relation("parent");
    let sibling = b.intern_relation("sibling");
    let mut all = Vec::new();
    let mut held_out = Vec::new();
    for f in 0..families {
        let father = b.intern_entity(&format!("father{f}"));
        let mother = b.intern_entity(&format!("mother{f}"));
        let kids = rng.gen_range(2..=3);
        let children: Vec<EntityId> = (0..kids).map(|c| b.intern_entity(&format!("child{f}_{c}"))).collect();
        all.push(Triple::new(father, married, mother));
        for &c in &children {
            all.push(Triple::new(father, parent, c));
            all.push(Triple::new(mother, parent, c));
        }
        for &a in &children {
            for &c in &children {
                if a != c {
                    all.push(Triple::new(a, sibling, c));
                }
            }
        }
        if f % 2 == 0 {
            held_out.push(Triple::new(mother, parent, children[0]));
        } else {
            held_out.push(Triple::new(children[0], sibling, children[1]));
        }
    }
    let mut graph_builder = b;
    for t in &all {
        if !held_out.contains(t) {
            graph_builder.add_ids(*t).expect("ids interned");
        }
    }
    FamilyDataset {
        graph: graph_builder.build(),
        held_out,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn relabel_is_isomorphic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_kg(&mut rng, 6, 3, 0.2);
        let r = relabel(&g, &mut rng, "x");
        assert_eq!(r.graph.num_triples(), g.num_triples());
        assert_eq!(r.graph.num_entities(), g.num_entities());
        for t in g.triples() {
            assert!(r.graph.contains_triple(&r.map_triple(t)));
        }
    }

    #[test]
    fn family_holdout_is_implied() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ds = family_rules(&mut rng, 8);
        assert_eq!(ds.held_out.len(), 8);
        for t in &ds.held_out {
            assert!(!ds.graph.contains_triple(t));
        }
        assert!((50..=80).contains(&ds.graph.num_triples()));
    }
}
