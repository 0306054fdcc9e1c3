//! Relation encoding over a ternary hypergraph, in the style of motif-based
//! baselines: every member of a hyperedge receives the other members'
//! states times a meta embedding shared by the hyperedge type.

use super::{query_indicator, update, RelationLayer};
use crate::autodiff::{Matrix, Tape};
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, RelationId};
use crate::matcher::{ternary_hyperedges, TernaryEdge};
use crate::vocabulary::GraphletPattern;

/// Typed 3-ary hyperedges over the relations of a graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MotifHypergraph {
    pub num_relations: usize,
    pub types: Vec<String>,
    /// `(type index, members)`.
    pub edges: Vec<(usize, [RelationId; 3])>,
}

impl MotifHypergraph {
    /// Hyperedges from ternary counts; weights only decide existence.
    pub fn from_ternary(num_relations: usize, ternary: &[TernaryEdge]) -> Self {
        let mut types: Vec<String> = Vec::new();
        let mut edges = Vec::with_capacity(ternary.len());
        for e in ternary.iter().filter(|e| e.weight > 0) {
            let ty = match types.iter().position(|t| *t == e.pattern) {
                Some(i) => i,
                None => {
                    types.push(e.pattern.clone());
                    types.len() - 1
                }
            };
            edges.push((ty, e.rels));
        }
        MotifHypergraph {
            num_relations,
            types,
            edges,
        }
    }

    /// Counts every 3-path pattern in `patterns` over `g`.
    pub fn build(g: &KnowledgeGraph, patterns: &[GraphletPattern], injective: bool) -> Result<Self> {
        let mut all = Vec::new();
        for p in patterns {
            all.extend(ternary_hyperedges(g, p, injective)?);
        }
        Ok(MotifHypergraph::from_ternary(g.num_relations(), &all))
    }

    /// `(type, neighbor)` pairs reaching each relation, one per co-member
    /// position, sorted so that the summation order depends only on values.
    fn neighbors(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out = vec![Vec::new(); self.num_relations];
        for &(ty, rels) in &self.edges {
            for i in 0..3 {
                for j in (0..3).filter(|&j| j != i) {
                    out[rels[i].index()].push((ty, rels[j].index()));
                }
            }
        }
        for list in &mut out {
            list.sort_unstable();
        }
        out
    }
}

/// Layer-by-layer relation states conditioned on `q`; entry 0 is the
/// one-hot initialization. `layers[t].meta` holds one row per hyperedge type.
pub fn motif_baseline_encode(
    hg: &MotifHypergraph,
    q: RelationId,
    layers: &[RelationLayer<Matrix>],
    dim: usize,
) -> Result<Vec<Matrix>> {
    if q.index() >= hg.num_relations {
        return Err(Error::InvalidId {
            kind: "relation",
            id: q.index(),
            len: hg.num_relations,
        });
    }
    for l in layers {
        if l.meta.rows() != hg.types.len() || l.meta.cols() != dim {
            return Err(Error::InvalidArgument(format!(
                "meta embeddings are {}x{}, expected {}x{dim}",
                l.meta.rows(),
                l.meta.cols(),
                hg.types.len()
            )));
        }
    }
    let neighbors = hg.neighbors();
    let mut states = vec![query_indicator(hg.num_relations, dim, q)];
    for l in layers {
        let prev = states.last().expect("initial state");
        let mut agg = Matrix::zeros(hg.num_relations, dim);
        for (r, list) in neighbors.iter().enumerate() {
            let row = agg.row_mut(r);
            for &(ty, nb) in list {
                for ((o, x), m) in row.iter_mut().zip(prev.row(nb)).zip(l.meta.row(ty)) {
                    *o += x * m;
                }
            }
        }
        let mut tape = Tape::new();
        let s = tape.leaf(prev.clone());
        let a = tape.leaf(agg);
        let (ws, wa, b, gn) = (
            tape.leaf(l.w_self.clone()),
            tape.leaf(l.w_agg.clone()),
            tape.leaf(l.bias.clone()),
            tape.leaf(l.gain.clone()),
        );
        let out = update(&mut tape, s, a, ws, wa, b, gn);
        states.push(tape.value(out).clone());
    }
    Ok(states)
}
