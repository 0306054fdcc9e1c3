//! Ternary (three-relation) path counts, as used by hypergraph baselines
//! that keep the middle relation of a 3-path.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::vocabulary::GraphletPattern;

/// Hyperedge type names of the ternary baseline and the 3-path pattern each
/// corresponds to.
pub const MOTIF_NAMES: &[(&str, &str)] = &[("tfh", "fffo"), ("tft", "ffro"), ("hfh", "frfo"), ("hft", "rffo")];

/// Motif-style name for a 3-path pattern, when it has one.
pub fn motif_name(pattern: &str) -> Option<&'static str> {
    let key: String = pattern.chars().filter(|&c| c != '_').collect();
    MOTIF_NAMES.iter().find(|(_, p)| *p == key).map(|(m, _)| *m)
}

/// A relation triple `(r1, r2, r3)` joined by a ternary pattern occurrence.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TernaryEdge {
    pub pattern: String,
    pub rels: [RelationId; 3],
    pub weight: u64,
}

struct PathShape {
    forward: [bool; 3],
    closed: bool,
    /// Filters rewritten over path positions 0..=3.
    filters: Vec<(usize, usize)>,
}

fn shape(p: &GraphletPattern) -> Result<PathShape> {
    let unsupported = || {
        Error::Unsupported(format!(
            "ternary counting covers the sixteen 3-path patterns, not `{}`",
            p.name()
        ))
    };
    let name: Vec<u8> = p.name().bytes().filter(|&b| b != b'_').collect();
    if name.len() != 4 || !name[..3].iter().all(|b| matches!(b, b'f' | b'r')) || !matches!(name[3], b'o' | b'c') {
        return Err(unsupported());
    }
    let closed = name[3] == b'c';
    // The path visits ?e0, ?e1, ?e2 and then ?e3 (open) or back to ?e0.
    let position = |var: &str| -> Result<usize> {
        match var {
            "e0" => Ok(0),
            "e1" => Ok(1),
            "e2" => Ok(2),
            "e3" if !closed => Ok(3),
            _ => Err(unsupported()),
        }
    };
    let vars = p.entity_vars();
    let filters = p
        .distinct_pairs()
        .iter()
        .map(|&(a, b)| Ok((position(&vars[a])?, position(&vars[b])?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PathShape {
        forward: [name[0] == b'f', name[1] == b'f', name[2] == b'f'],
        closed,
        filters,
    })
}

/// Pairs `(from, to)` walked along relation `r` in the given direction.
fn steps(g: &KnowledgeGraph, r: RelationId, forward: bool, from: EntityId) -> &[EntityId] {
    if forward {
        g.tails(r, from)
    } else {
        g.heads(r, from)
    }
}

fn walk(g: &KnowledgeGraph, s: &PathShape, rels: [Option<RelationId>; 3], mut emit: impl FnMut([RelationId; 3])) {
    let candidates = |slot: usize| -> Vec<RelationId> {
        match rels[slot] {
            Some(r) => vec![r],
            None => g.relation_ids().collect(),
        }
    };
    let ok = |path: &[EntityId; 4]| s.filters.iter().all(|&(a, b)| path[a] != path[b]);
    for r1 in candidates(0) {
        for &(h, t) in g.relation_pairs(r1) {
            let (e0, e1) = if s.forward[0] { (h, t) } else { (t, h) };
            for r2 in candidates(1) {
                for &e2 in steps(g, r2, s.forward[1], e1) {
                    for r3 in candidates(2) {
                        for &e3 in steps(g, r3, s.forward[2], e2) {
                            if s.closed && e3 != e0 {
                                continue;
                            }
                            if ok(&[e0, e1, e2, e3]) {
                                emit([r1, r2, r3]);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Occurrences of the 3-path `p3` whose relations are exactly `(r1, r2, r3)`,
/// i.e. the middle slot pinned to `r2`.
pub fn motif_ternary_count(
    g: &KnowledgeGraph,
    p3: &GraphletPattern,
    r1: RelationId,
    r2: RelationId,
    r3: RelationId,
) -> Result<u64> {
    for r in [r1, r2, r3] {
        g.check_relation(r)?;
    }
    let s = shape(p3)?;
    let mut count: u64 = 0;
    let mut overflow = false;
    walk(g, &s, [Some(r1), Some(r2), Some(r3)], |_| match count.checked_add(1) {
        Some(c) => count = c,
        None => overflow = true,
    });
    if overflow {
        return Err(Error::Overflow(p3.name().to_owned()));
    }
    Ok(count)
}

/// Every nonzero ternary class of `p3`, sorted by relation triple. With
/// `injective` the outer relations must differ.
pub fn ternary_hyperedges(g: &KnowledgeGraph, p3: &GraphletPattern, injective: bool) -> Result<Vec<TernaryEdge>> {
    let s = shape(p3)?;
    let mut tally: BTreeMap<[RelationId; 3], u64> = BTreeMap::new();
    let mut overflow = false;
    walk(g, &s, [None, None, None], |rels| {
        if injective && rels[0] == rels[2] {
            return;
        }
        let w = tally.entry(rels).or_insert(0);
        match w.checked_add(1) {
            Some(v) => *w = v,
            None => overflow = true,
        }
    });
    if overflow {
        return Err(Error::Overflow(p3.name().to_owned()));
    }
    Ok(tally
        .into_iter()
        .map(|(rels, weight)| TernaryEdge {
            pattern: p3.name().to_owned(),
            rels,
            weight,
        })
        .collect())
}
