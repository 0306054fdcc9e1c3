//! Exhaustive reference miner: tries every entity assignment.

use std::collections::BTreeMap;

use super::{MatchOptions, OccurrenceClass};
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, RelationId};
use crate::vocabulary::{MatchMode, Slot, Vocabulary};

/// Entity bound past which the oracle refuses to run.
pub const BRUTE_FORCE_MAX_ENTITIES: usize = 12;
const MAX_RELATIONS: usize = 64;
const MAX_ASSIGNMENTS: u128 = 50_000_000;

/// Reference implementation of [`super::mine`]: for every assignment of
/// entities to pattern variables, the admissible relations of each slot are
/// the intersection of the edge-label sets on that slot's edges.
pub fn brute_force_mine(g: &KnowledgeGraph, v: &Vocabulary, opts: MatchOptions) -> Result<Vec<OccurrenceClass>> {
    let n = g.num_entities();
    if n > BRUTE_FORCE_MAX_ENTITIES {
        return Err(Error::TooLarge(format!(
            "{n} entities exceeds {BRUTE_FORCE_MAX_ENTITIES}; use `mine` for larger graphs"
        )));
    }
    if g.num_relations() > MAX_RELATIONS {
        return Err(Error::TooLarge(format!(
            "{} relations exceeds {MAX_RELATIONS}; use `mine` for larger graphs",
            g.num_relations()
        )));
    }
    // adj[a][b] has bit r set iff r(a, b) is a triple
    let mut adj = vec![vec![0u64; n]; n];
    for t in g.triples() {
        adj[t.head.index()][t.tail.index()] |= 1u64 << t.relation.0;
    }
    let all_rels = if g.num_relations() == 64 {
        u64::MAX
    } else {
        (1u64 << g.num_relations()) - 1
    };

    let mut out = Vec::new();
    for p in v.patterns() {
        let k = p.num_vars();
        if (n as u128).pow(k as u32) > MAX_ASSIGNMENTS {
            return Err(Error::TooLarge(format!(
                "{n}^{k} assignments for pattern `{}`",
                p.name()
            )));
        }
        let mut tally: BTreeMap<(u32, u32), u64> = BTreeMap::new();
        let mut assignment = vec![0usize; k];
        let total = n.pow(k as u32);
        for code in 0..total {
            let mut c = code;
            for slot in assignment.iter_mut() {
                *slot = c % n;
                c /= n;
            }
            if p.distinct_pairs().iter().any(|&(a, b)| assignment[a] == assignment[b]) {
                continue;
            }
            let mut masks = [all_rels; 3];
            for e in p.edges() {
                masks[e.slot.index()] &= adj[assignment[e.src]][assignment[e.dst]];
            }
            let wild = if p.has_wildcard() {
                u64::from(masks[Slot::Wildcard.index()].count_ones())
            } else {
                1
            };
            if wild == 0 {
                continue;
            }
            for r1 in bits(masks[Slot::Rel1.index()]) {
                for r2 in bits(masks[Slot::Rel2.index()]) {
                    if opts.injective && r1 == r2 {
                        continue;
                    }
                    let w = tally.entry((r1, r2)).or_insert(0);
                    *w = w
                        .checked_add(wild)
                        .ok_or_else(|| Error::Overflow(p.name().to_owned()))?;
                }
            }
        }
        for ((r1, r2), w) in tally {
            out.push(OccurrenceClass {
                pattern: p.name().to_owned(),
                r1: RelationId(r1),
                r2: RelationId(r2),
                weight: match v.mode() {
                    MatchMode::Count => w,
                    MatchMode::Existence => 1,
                },
            });
        }
    }
    Ok(out)
}

fn bits(mut mask: u64) -> impl Iterator<Item = u32> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let b = mask.trailing_zeros();
            mask &= mask - 1;
            Some(b)
        }
    })
}
