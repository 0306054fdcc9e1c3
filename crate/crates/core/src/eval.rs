//! Filtered ranking metrics and inductive splits.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::Model;
use crate::error::{Error, Result};
use crate::kg::{EntityId, GraphBuilder, KnowledgeGraph, RelationId, Triple};
use crate::relation_graph::RelationGraph;

/// Anything that scores every candidate tail of a query `(h, r, ?)`.
pub trait TailScorer {
    fn num_entities(&self) -> usize;
    fn score_tails(&self, head: EntityId, relation: RelationId) -> Result<Vec<f64>>;
}

/// A model bound to the graph it reasons over.
pub struct ModelScorer<'a> {
    pub model: &'a Model,
    pub graph: &'a KnowledgeGraph,
    pub relation_graph: &'a RelationGraph,
}

impl TailScorer for ModelScorer<'_> {
    fn num_entities(&self) -> usize {
        self.graph.num_entities()
    }

    fn score_tails(&self, head: EntityId, relation: RelationId) -> Result<Vec<f64>> {
        self.model.score_tails(self.graph, self.relation_graph, head, relation)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    #[default]
    Transductive,
    /// New entities, known relations.
    IndE,
    /// New entities and new relations.
    IndEr,
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "transductive" => Ok(Setting::Transductive),
            "ind_e" => Ok(Setting::IndE),
            "ind_er" => Ok(Setting::IndEr),
            other => Err(Error::InvalidArgument(format!("unknown setting `{other}`"))),
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Setting::Transductive => "transductive",
            Setting::IndE => "ind_e",
            Setting::IndEr => "ind_er",
        })
    }
}

/// Known true tails per `(head, relation)`, excluded from ranking.
#[derive(Clone, Debug, Default)]
pub struct FilterSet {
    known: HashMap<(EntityId, RelationId), HashSet<EntityId>>,
}

impl FilterSet {
    pub fn new() -> Self {
        FilterSet::default()
    }

    pub fn from_triples<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> Self {
        let mut f = FilterSet::new();
        f.extend(triples);
        f
    }

    pub fn extend<'a>(&mut self, triples: impl IntoIterator<Item = &'a Triple>) {
        for t in triples {
            self.insert(*t);
        }
    }

    pub fn insert(&mut self, t: Triple) {
        self.known.entry((t.head, t.relation)).or_default().insert(t.tail);
    }

    pub fn tails(&self, head: EntityId, relation: RelationId) -> Option<&HashSet<EntityId>> {
        self.known.get(&(head, relation))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub setting: Setting,
    /// Remove known true tails other than the target before ranking.
    pub filtered: bool,
    pub hits_at: Vec<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            setting: Setting::Transductive,
            filtered: true,
            hits_at: vec![1, 3, 10],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub setting: Setting,
    pub mrr: f64,
    pub hits: BTreeMap<usize, f64>,
    pub num_queries: usize,
    pub filtered: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Mid-rank of `scores[target]`: `1 + #greater + (#equal - 1) / 2`, where
/// `#equal` counts the target itself and candidates for which `skip` holds
/// are ignored.
pub fn mid_rank(scores: &[f64], target: usize, skip: impl Fn(usize) -> bool) -> f64 {
    let s = scores[target];
    let (mut greater, mut equal) = (0usize, 0usize);
    for (i, &x) in scores.iter().enumerate() {
        if i != target && skip(i) {
            continue;
        }
        if x > s {
            greater += 1;
        } else if x == s {
            equal += 1;
        }
    }
    1.0 + greater as f64 + (equal as f64 - 1.0) / 2.0
}

/// Ranks each test triple's tail against all entities and aggregates MRR
/// and Hits@n. Queries run in parallel; ranks are combined in input order.
pub fn evaluate<S: TailScorer + Sync>(
    scorer: &S,
    test: &[Triple],
    filter: &FilterSet,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("no test triples to evaluate".into()));
    }
    let n = scorer.num_entities();
    for t in test {
        for e in [t.head, t.tail] {
            if e.index() >= n {
                return Err(Error::InvalidId {
                    kind: "entity",
                    id: e.index(),
                    len: n,
                });
            }
        }
    }
    let ranks: Vec<f64> = test
        .par_iter()
        .map(|t| {
            let scores = scorer.score_tails(t.head, t.relation)?;
            if scores.len() != n {
                return Err(Error::InvalidArgument(format!(
                    "scorer returned {} scores for {n} entities",
                    scores.len()
                )));
            }
            let known = if opts.filtered {
                filter.tails(t.head, t.relation)
            } else {
                None
            };
            Ok(mid_rank(&scores, t.tail.index(), |i| {
                known.is_some_and(|k| k.contains(&EntityId(i as u32)))
            }))
        })
        .collect::<Result<_>>()?;
    Ok(report_from_ranks(&ranks, opts))
}

/// Aggregates ranks into a report.
pub fn report_from_ranks(ranks: &[f64], opts: &EvalOptions) -> EvalReport {
    let q = ranks.len() as f64;
    let mrr = ranks.iter().map(|r| 1.0 / r).sum::<f64>() / q;
    let hits = opts
        .hits_at
        .iter()
        .map(|&k| (k, ranks.iter().filter(|&&r| r <= k as f64).count() as f64 / q))
        .collect();
    EvalReport {
        setting: opts.setting,
        mrr,
        hits,
        num_queries: ranks.len(),
        filtered: opts.filtered,
        config_hash: None,
    }
}

/// Adds the inverse query `(t, r⁻¹, h)` of every triple; `g` supplies the
/// inverse pairing and must be inverse-augmented.
pub fn with_inverse_queries(g: &KnowledgeGraph, test: &[Triple]) -> Result<Vec<Triple>> {
    if !g.inverse_augmented() {
        return Err(Error::InvalidArgument(
            "head queries need an inverse-augmented graph".into(),
        ));
    }
    let mut out = Vec::with_capacity(test.len() * 2);
    for t in test {
        out.push(*t);
        let inv = g.inverse_of(t.relation).expect("augmented graph pairs every relation");
        out.push(Triple::new(t.tail, inv, t.head));
    }
    Ok(out)
}

/// Fractions used by [`split_inductive`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    /// Share of entities (and, for `ind_er`, relations) given to the
    /// inference graph.
    pub inference: f64,
    /// Share of inference triples held out as test queries.
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            inference: 0.5,
            test: 0.2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct InductiveSplit {
    pub train: KnowledgeGraph,
    pub inference: KnowledgeGraph,
    /// Held-out triples in the inference graph's ids.
    pub test: Vec<Triple>,
}

/// Splits a raw (non-augmented) graph into a training graph and a disjoint
/// inference graph. Entities are partitioned at random; with `ind_er`
/// relations are partitioned too. Triples crossing the partition are
/// dropped.
pub fn split_inductive(
    g: &KnowledgeGraph,
    mode: Setting,
    fractions: SplitFractions,
    seed: u64,
) -> Result<InductiveSplit> {
    if g.inverse_augmented() {
        return Err(Error::InvalidArgument(
            "split the raw graph, then augment each side".into(),
        ));
    }
    for (name, f) in [("inference", fractions.inference), ("test", fractions.test)] {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidArgument(format!("{name} fraction {f} outside [0, 1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ents: Vec<EntityId> = g.entity_ids().collect();
    ents.shuffle(&mut rng);
    let cut = (ents.len() as f64 * fractions.inference).round() as usize;
    let mut inference_side = vec![false; g.num_entities()];
    for e in &ents[..cut] {
        inference_side[e.index()] = true;
    }
    let mut rel_inference = vec![true; g.num_relations()];
    let mut rel_train = vec![true; g.num_relations()];
    match mode {
        Setting::IndE => {}
        Setting::IndEr => {
            let mut rels: Vec<RelationId> = g.relation_ids().collect();
            rels.shuffle(&mut rng);
            let rcut = (rels.len() as f64 * fractions.inference).round() as usize;
            rel_train.fill(false);
            rel_inference.fill(false);
            for (i, r) in rels.iter().enumerate() {
                if i < rcut {
                    rel_inference[r.index()] = true;
                } else {
                    rel_train[r.index()] = true;
                }
            }
        }
        Setting::Transductive => {
            return Err(Error::InvalidArgument("split mode must be ind_e or ind_er".into()));
        }
    }

    let side = |on_inference: bool, rel_ok: &[bool]| {
        let mut b = GraphBuilder::new();
        for e in g.entity_ids().filter(|e| inference_side[e.index()] == on_inference) {
            b.intern_entity(g.entity_name(e));
        }
        for r in g.relation_ids().filter(|r| rel_ok[r.index()]) {
            b.intern_relation(g.relation_name(r));
        }
        let mut triples = Vec::new();
        for t in g.triples() {
            if inference_side[t.head.index()] == on_inference
                && inference_side[t.tail.index()] == on_inference
                && rel_ok[t.relation.index()]
            {
                triples.push((
                    g.entity_name(t.head),
                    g.relation_name(t.relation),
                    g.entity_name(t.tail),
                ));
            }
        }
        (b, triples)
    };

    let (mut train_b, train_triples) = side(false, &rel_train);
    for (h, r, t) in &train_triples {
        train_b.add(h, r, t);
    }
    let (mut inf_b, mut inf_triples) = side(true, &rel_inference);
    if train_triples.is_empty() || inf_triples.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "graph too small for a {mode} split: {} training and {} inference triples",
            train_triples.len(),
            inf_triples.len()
        )));
    }
    inf_triples.shuffle(&mut rng);
    let n_test = (inf_triples.len() as f64 * fractions.test).round() as usize;
    let (held, kept) = inf_triples.split_at(n_test.min(inf_triples.len()));
    for (h, r, t) in kept {
        inf_b.add(h, r, t);
    }
    let inference = inf_b.build();
    let test = held
        .iter()
        .map(|(h, r, t)| {
            Triple::new(
                inference.entity_id(h).expect("interned"),
                inference.relation_id(r).expect("interned"),
                inference.entity_id(t).expect("interned"),
            )
        })
        .collect();
    Ok(InductiveSplit {
        train: train_b.build(),
        inference,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<f64>);

    impl TailScorer for Fixed {
        fn num_entities(&self) -> usize {
            self.0.len()
        }
        fn score_tails(&self, _: EntityId, _: RelationId) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
    }

    fn t(h: u32, r: u32, e: u32) -> Triple {
        Triple::new(EntityId(h), RelationId(r), EntityId(e))
    }

    #[test]
    fn mid_rank_of_ties() {
        assert_eq!(mid_rank(&[1.0, 1.0, 1.0, 1.0], 2, |_| false), 2.5);
        assert_eq!(mid_rank(&[3.0, 1.0, 2.0], 2, |_| false), 2.0);
        assert_eq!(mid_rank(&[3.0, 1.0, 2.0], 2, |i| i == 0), 1.0);
    }

    #[test]
    fn hand_ranked_three_entities() {
        let scorer = Fixed(vec![0.3, 0.9, 0.5]);
        let test = [t(0, 0, 2), t(0, 0, 1), t(0, 0, 0)];
        let opts = EvalOptions {
            filtered: false,
            ..EvalOptions::default()
        };
        let r = evaluate(&scorer, &test, &FilterSet::new(), &opts).unwrap();
        assert!((r.mrr - (0.5 + 1.0 + 1.0 / 3.0) / 3.0).abs() < 1e-15);
        assert_eq!(r.hits[&1], 1.0 / 3.0);
        assert_eq!(r.hits[&3], 1.0);
    }

    #[test]
    fn filtering_removes_other_true_tails() {
        let scorer = Fixed(vec![0.3, 0.9, 0.5]);
        let test = [t(0, 0, 2)];
        let filter = FilterSet::from_triples(&[t(0, 0, 1), t(0, 0, 2)]);
        let r = evaluate(&scorer, &test, &filter, &EvalOptions::default()).unwrap();
        assert_eq!(r.mrr, 1.0);
    }

    #[test]
    fn empty_test_refused() {
        assert!(evaluate(&Fixed(vec![0.0]), &[], &FilterSet::new(), &EvalOptions::default()).is_err());
    }

    fn grid() -> KnowledgeGraph {
        let mut b = GraphBuilder::new();
        for i in 0..12 {
            for (j, r) in [(1, "next"), (3, "skip"), (5, "far")] {
                b.add(&format!("n{i}"), r, &format!("n{}", (i + j) % 12));
            }
        }
        b.build()
    }

    #[test]
    fn inductive_entity_split() {
        let g = grid();
        let s = split_inductive(&g, Setting::IndE, SplitFractions::default(), 4).unwrap();
        let train: HashSet<&String> = s.train.entity_names().iter().collect();
        assert!(s.inference.entity_names().iter().all(|n| !train.contains(n)));
        assert_eq!(s.train.relation_names(), s.inference.relation_names());
        for t in &s.test {
            assert!(!s.inference.contains_triple(t));
        }
    }

    #[test]
    fn inductive_relation_split() {
        let g = grid();
        let fr = SplitFractions {
            inference: 0.5,
            test: 0.0,
        };
        match split_inductive(&g, Setting::IndEr, fr, 9) {
            Ok(s) => {
                let train: HashSet<&String> = s.train.relation_names().iter().collect();
                assert!(s.inference.relation_names().iter().all(|n| !train.contains(n)));
                assert!(s.test.is_empty());
            }
            Err(e) => assert!(e.to_string().contains("too small"), "{e}"),
        }
    }
}
