//! Backtracking index-join matcher for anchored graphlet patterns.

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId};
use crate::vocabulary::{GraphletPattern, Slot};

const NO_REL: u32 = u32::MAX;

/// One edge of the join plan with everything resolvable before the search.
#[derive(Clone, Debug)]
struct Step {
    src: usize,
    dst: usize,
    slot: usize,
    src_bound: bool,
    dst_bound: bool,
    slot_bound: bool,
    /// Filters that become checkable once this step has bound its variables.
    checks: Vec<(usize, usize)>,
}

/// A join plan for one pattern, seeded from a `Rel1` edge.
#[derive(Clone, Debug)]
pub(crate) struct Plan {
    steps: Vec<Step>,
    num_vars: usize,
}

impl Plan {
    /// `rel2_fixed` marks the `Rel2` slot as bound before the search starts.
    pub(crate) fn new(p: &GraphletPattern, rel2_fixed: bool) -> Plan {
        let n = p.num_vars();
        let edges = p.edges();
        let mut var_bound = vec![false; n];
        let mut slot_bound = [true, rel2_fixed, false];
        let mut used = vec![false; edges.len()];
        let mut pending: Vec<(usize, usize)> = p.distinct_pairs().to_vec();
        let mut steps = Vec::with_capacity(edges.len());

        let seed = edges
            .iter()
            .position(|e| e.slot == Slot::Rel1)
            .expect("validated patterns contain a rel1 edge");
        let mut next = Some(seed);
        while let Some(i) = next {
            let e = edges[i];
            let slot = e.slot.index();
            let step_src_bound = var_bound[e.src];
            let step_dst_bound = var_bound[e.dst];
            let step_slot_bound = slot_bound[slot];
            var_bound[e.src] = true;
            var_bound[e.dst] = true;
            slot_bound[slot] = true;
            used[i] = true;
            let (ready, rest): (Vec<_>, Vec<_>) = pending.into_iter().partition(|&(a, b)| var_bound[a] && var_bound[b]);
            pending = rest;
            steps.push(Step {
                src: e.src,
                dst: e.dst,
                slot,
                src_bound: step_src_bound,
                dst_bound: step_dst_bound,
                slot_bound: step_slot_bound,
                checks: ready,
            });
            // Prefer edges closing a cycle, then edges with a bound relation,
            // then anything touching the bound part; wildcard edges go last.
            next = (0..edges.len())
                .filter(|&j| !used[j] && (var_bound[edges[j].src] || var_bound[edges[j].dst]))
                .min_by_key(|&j| {
                    let ej = edges[j];
                    let both = var_bound[ej.src] && var_bound[ej.dst];
                    let rel = slot_bound[ej.slot.index()];
                    (!both, !rel, ej.slot == Slot::Wildcard, j)
                });
        }
        debug_assert!(used.iter().all(|&u| u), "pattern graphs are connected");
        debug_assert!(pending.is_empty());
        Plan { steps, num_vars: n }
    }
}

struct Search<'a> {
    g: &'a KnowledgeGraph,
    plan: &'a Plan,
    vars: Vec<EntityId>,
    rels: [u32; 3],
    forbid_rel2: u32,
    tally: &'a mut [u64],
    overflow: bool,
}

impl Search<'_> {
    fn run(&mut self, depth: usize) {
        if self.overflow {
            return;
        }
        if depth == self.plan.steps.len() {
            let slot = &mut self.tally[self.rels[1] as usize];
            match slot.checked_add(1) {
                Some(v) => *slot = v,
                None => self.overflow = true,
            }
            return;
        }
        let step = &self.plan.steps[depth];
        let g = self.g;
        if step.slot_bound {
            let r = RelationId(self.rels[step.slot]);
            match (step.src_bound, step.dst_bound) {
                (true, true) => {
                    if g.contains(self.vars[step.src], r, self.vars[step.dst]) {
                        self.descend(depth, None, None);
                    }
                }
                (true, false) => {
                    for &t in g.tails(r, self.vars[step.src]) {
                        self.descend(depth, None, Some((step.dst, t)));
                    }
                }
                (false, true) => {
                    for &h in g.heads(r, self.vars[step.dst]) {
                        self.descend(depth, None, Some((step.src, h)));
                    }
                }
                (false, false) => {
                    for &(h, t) in g.relation_pairs(r) {
                        if step.src == step.dst && h != t {
                            continue;
                        }
                        self.vars[step.src] = h;
                        self.descend(depth, None, Some((step.dst, t)));
                    }
                }
            }
        } else if step.src_bound {
            let src = self.vars[step.src];
            for &(r, t) in g.outgoing(src) {
                if step.slot == 1 && r.0 == self.forbid_rel2 {
                    continue;
                }
                if step.dst_bound {
                    if self.vars[step.dst] == t {
                        self.descend(depth, Some(r), None);
                    }
                } else {
                    self.descend(depth, Some(r), Some((step.dst, t)));
                }
            }
        } else {
            debug_assert!(step.dst_bound);
            let dst = self.vars[step.dst];
            for &(r, h) in g.incoming(dst) {
                if step.slot == 1 && r.0 == self.forbid_rel2 {
                    continue;
                }
                self.descend(depth, Some(r), Some((step.src, h)));
            }
        }
    }

    fn descend(&mut self, depth: usize, rel: Option<RelationId>, var: Option<(usize, EntityId)>) {
        let step = &self.plan.steps[depth];
        if let Some((v, e)) = var {
            self.vars[v] = e;
        }
        if step.checks.iter().any(|&(a, b)| self.vars[a] == self.vars[b]) {
            return;
        }
        let saved = self.rels[step.slot];
        if let Some(r) = rel {
            self.rels[step.slot] = r.0;
        }
        self.run(depth + 1);
        self.rels[step.slot] = saved;
    }
}

/// Counts bindings of `p` with `Rel1 = r1`, tallied by the relation bound to
/// `Rel2`. With `r2 = Some(..)` only that entry can become nonzero.
pub(crate) fn count_by_rel2(
    g: &KnowledgeGraph,
    plan: &Plan,
    r1: RelationId,
    r2: Option<RelationId>,
    injective: bool,
    pattern_name: &str,
) -> Result<Vec<u64>> {
    let mut tally = vec![0u64; g.num_relations()];
    let mut search = Search {
        g,
        plan,
        vars: vec![EntityId(0); plan.num_vars],
        rels: [r1.0, r2.map_or(NO_REL, |r| r.0), NO_REL],
        forbid_rel2: if injective { r1.0 } else { NO_REL },
        tally: &mut tally,
        overflow: false,
    };
    search.run(0);
    if search.overflow {
        return Err(Error::Overflow(pattern_name.to_owned()));
    }
    Ok(tally)
}
