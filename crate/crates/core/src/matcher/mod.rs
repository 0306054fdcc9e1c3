//! Graphlet occurrence mining: an index-join matcher, an exhaustive oracle,
//! a sparse masked-product counter and ternary path counts.

mod engine;
mod motif;
mod oracle;
mod spmm;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, RelationId};
use crate::vocabulary::{GraphletPattern, MatchMode, Vocabulary};

pub use motif::{motif_name, motif_ternary_count, ternary_hyperedges, TernaryEdge, MOTIF_NAMES};
pub use oracle::{brute_force_mine, BRUTE_FORCE_MAX_ENTITIES};
pub use spmm::{adjacency, spmm_count};

/// Options shared by the miners.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOptions {
    /// Require the two anchored relations to differ.
    pub injective: bool,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions { injective: true }
    }
}

impl MatchOptions {
    /// Allows `r1 == r2` classes (self-loop meta edges).
    pub fn permissive() -> Self {
        MatchOptions { injective: false }
    }
}

/// The equivalence class of occurrences of `pattern` whose anchors bind
/// `(r1, r2)`, with its weight.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OccurrenceClass {
    pub pattern: String,
    pub r1: RelationId,
    pub r2: RelationId,
    pub weight: u64,
}

fn apply_mode(count: u64, mode: MatchMode) -> u64 {
    match mode {
        MatchMode::Count => count,
        MatchMode::Existence => count.min(1),
    }
}

/// Weight of the class `(r1, r2)` of `p`: the number of bindings of all
/// pattern variables (entities and the wildcard relation) in count mode,
/// 0 or 1 in existence mode.
pub fn match_pattern(
    g: &KnowledgeGraph,
    p: &GraphletPattern,
    r1: RelationId,
    r2: RelationId,
    mode: MatchMode,
    opts: MatchOptions,
) -> Result<u64> {
    g.check_relation(r1)?;
    g.check_relation(r2)?;
    if opts.injective && r1 == r2 {
        return Err(Error::NonInjective(r1.index()));
    }
    let plan = engine::Plan::new(p, true);
    let tally = engine::count_by_rel2(g, &plan, r1, Some(r2), opts.injective, p.name())?;
    Ok(apply_mode(tally[r2.index()], mode))
}

/// Mines every nonzero class of every pattern of `v`, ordered by pattern
/// (vocabulary order), then `r1`, then `r2`.
pub fn mine(g: &KnowledgeGraph, v: &Vocabulary, opts: MatchOptions) -> Result<Vec<OccurrenceClass>> {
    let plans: Vec<engine::Plan> = v.patterns().iter().map(|p| engine::Plan::new(p, false)).collect();
    let tasks: Vec<(usize, RelationId)> = (0..v.len())
        .flat_map(|pi| g.relation_ids().map(move |r| (pi, r)))
        .collect();
    let chunks: Vec<Result<Vec<OccurrenceClass>>> = tasks
        .par_iter()
        .map(|&(pi, r1)| {
            let p = &v.patterns()[pi];
            let tally = engine::count_by_rel2(g, &plans[pi], r1, None, opts.injective, p.name())?;
            Ok(tally
                .into_iter()
                .enumerate()
                .filter(|&(_, w)| w > 0)
                .map(|(r2, w)| OccurrenceClass {
                    pattern: p.name().to_owned(),
                    r1,
                    r2: RelationId(r2 as u32),
                    weight: apply_mode(w, v.mode()),
                })
                .collect())
        })
        .collect();
    let mut out = Vec::new();
    for chunk in chunks {
        out.extend(chunk?);
    }
    Ok(out)
}

/// Writes classes as `pattern\tr1\tr2\tweight` lines using relation names.
pub fn write_occurrences_tsv<W: Write>(
    g: &KnowledgeGraph,
    classes: &[OccurrenceClass],
    mut w: W,
) -> std::io::Result<()> {
    for c in classes {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            c.pattern,
            g.relation_name(c.r1),
            g.relation_name(c.r2),
            c.weight
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::vocabulary::builtin_pattern;

    fn rel(g: &KnowledgeGraph, name: &str) -> RelationId {
        g.relation_id(name).unwrap()
    }

    #[test]
    fn ikg_two_path_counts() {
        let g = fixtures::ikg();
        let ffo = builtin_pattern("ff_o").unwrap();
        let ffc = builtin_pattern("ff_c").unwrap();
        let (r1, r2, r3, r5) = (rel(&g, "r1"), rel(&g, "r2"), rel(&g, "r3"), rel(&g, "r5"));
        let opts = MatchOptions::default();
        assert_eq!(match_pattern(&g, &ffo, r1, r2, MatchMode::Count, opts).unwrap(), 1);
        assert_eq!(match_pattern(&g, &ffo, r5, r3, MatchMode::Count, opts).unwrap(), 1);
        assert_eq!(match_pattern(&g, &ffc, r1, r2, MatchMode::Count, opts).unwrap(), 0);
    }

    #[test]
    fn ikg_three_path_weight() {
        let g = fixtures::ikg();
        let p = builtin_pattern("fff_o").unwrap();
        let (r1, r3) = (rel(&g, "r1"), rel(&g, "r3"));
        let opts = MatchOptions::default();
        assert_eq!(match_pattern(&g, &p, r1, r3, MatchMode::Count, opts).unwrap(), 3);
        assert_eq!(match_pattern(&g, &p, r1, r3, MatchMode::Existence, opts).unwrap(), 1);
    }

    #[test]
    fn equal_anchors_rejected_when_injective() {
        let g = fixtures::ikg();
        let p = builtin_pattern("ffo").unwrap();
        let r1 = rel(&g, "r1");
        assert!(matches!(
            match_pattern(&g, &p, r1, r1, MatchMode::Count, MatchOptions::default()),
            Err(Error::NonInjective(_))
        ));
        assert!(match_pattern(&g, &p, r1, r1, MatchMode::Count, MatchOptions::permissive()).is_ok());
    }

    #[test]
    fn empty_graph_mines_nothing() {
        let g = KnowledgeGraph::default();
        let v = crate::vocabulary::builtin_vocabulary("V3+").unwrap();
        assert!(mine(&g, &v, MatchOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn tsv_uses_relation_names() {
        let g = fixtures::ikg();
        let v = Vocabulary::from_pattern_names(&["ffo"]).unwrap();
        let classes = mine(&g, &v, MatchOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_occurrences_tsv(&g, &classes, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("ffo\tr1\tr2\t1\n"), "{text}");
    }

    #[test]
    fn motif_names() {
        assert_eq!(motif_name("fff_o"), Some("tfh"));
        assert_eq!(motif_name("rffo"), Some("hft"));
        assert_eq!(motif_name("rrro"), None);
    }
}
