//! Conditional two-level message passing: a relation encoder over the
//! relation graph, an entity encoder over the knowledge graph, and a scoring
//! head, trained with binary cross-entropy against corrupted tails.

mod checkpoint;
mod motif;
mod params;
mod train;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Matrix, Tape, Var};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, RelationId, Triple};
use crate::relation_graph::RelationGraph;
use crate::vocabulary::Vocabulary;

pub use checkpoint::CHECKPOINT_VERSION;
pub use motif::{motif_baseline_encode, MotifHypergraph};
pub use params::{Dims, EntityLayer, Head, Params, RelationLayer};
pub use train::{
    batch_loss, bce_loss, loss_and_gradients, sample_negatives, train, AdamW, ScoredQuery, StepMetrics, TrainingExample,
};

/// How neighbor states are combined with edge-type vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    #[default]
    ElementwiseProduct,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    #[default]
    LayerNormalization,
}

/// Which relation vector feeds the entity-level transform `f^t`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityMessage {
    /// `f^t` of the edge's own relation row of `R|q`.
    #[default]
    PerRelationRow,
    /// `f^t` of the query row, shared by every edge.
    QueryRow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub dim: usize,
    pub relation_layers: usize,
    pub entity_layers: usize,
    /// Negatives per positive.
    pub negatives: usize,
    pub batch_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    /// Weight negatives by a detached softmax of their scores.
    pub self_adversarial: bool,
    pub adversarial_temperature: f64,
    pub seed: u64,
    pub message_kind: MessageKind,
    pub norm_kind: NormKind,
    pub entity_message: EntityMessage,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 64,
            relation_layers: 6,
            entity_layers: 6,
            negatives: 32,
            batch_size: 8,
            steps: 200,
            learning_rate: 5e-4,
            weight_decay: 0.0,
            self_adversarial: false,
            adversarial_temperature: 1.0,
            seed: 0,
            message_kind: MessageKind::ElementwiseProduct,
            norm_kind: NormKind::LayerNormalization,
            entity_message: EntityMessage::PerRelationRow,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("relation_layers", self.relation_layers),
            ("entity_layers", self.entity_layers),
            ("negatives", self.negatives),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
            }
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bad learning rate {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bad weight decay {}",
                self.weight_decay
            )));
        }
        Ok(())
    }

    pub fn dims(&self, patterns: usize) -> Dims {
        Dims {
            dim: self.dim,
            patterns,
            relation_layers: self.relation_layers,
            entity_layers: self.entity_layers,
        }
    }
}

/// Relation embeddings conditioned on a query relation; `layers[0]` is the
/// one-hot initialization and the last entry is `R|q`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalRelationEmbedding {
    pub query: RelationId,
    pub layers: Vec<Matrix>,
}

impl ConditionalRelationEmbedding {
    pub fn matrix(&self) -> &Matrix {
        self.layers.last().expect("at least the initial layer")
    }
}

/// Relation-graph edges as index arrays.
struct MetaEdges {
    src: Vec<usize>,
    dst: Vec<usize>,
    ty: Vec<usize>,
    nodes: usize,
}

impl MetaEdges {
    fn new(rg: &RelationGraph) -> Self {
        let e = rg.edges();
        MetaEdges {
            src: e.iter().map(|m| m.src.index()).collect(),
            dst: e.iter().map(|m| m.dst.index()).collect(),
            ty: e.iter().map(|m| m.edge_type).collect(),
            nodes: rg.num_nodes(),
        }
    }
}

/// Knowledge-graph triples as index arrays, optionally minus some triples.
pub(crate) struct FactEdges {
    heads: Vec<usize>,
    rels: Vec<usize>,
    tails: Vec<usize>,
    entities: usize,
}

impl FactEdges {
    pub(crate) fn new(g: &KnowledgeGraph, removed: &HashSet<Triple>) -> Self {
        let kept = g.triples().iter().filter(|t| !removed.contains(t));
        let (mut heads, mut rels, mut tails) = (Vec::new(), Vec::new(), Vec::new());
        for t in kept {
            heads.push(t.head.index());
            rels.push(t.relation.index());
            tails.push(t.tail.index());
        }
        FactEdges {
            heads,
            rels,
            tails,
            entities: g.num_entities(),
        }
    }
}

/// One relation-level update over existing tape values.
fn relation_layer(tape: &mut Tape, layer: &RelationLayer<Var>, state: Var, e: &MetaEdges) -> Var {
    let from = tape.gather(state, e.src.clone());
    let kind = tape.gather(layer.meta, e.ty.clone());
    let msg = tape.mul(from, kind);
    let agg = tape.scatter_add(msg, e.dst.clone(), e.nodes);
    update(tape, state, agg, layer.w_self, layer.w_agg, layer.bias, layer.gain)
}

/// `LN(state W_self + agg W_agg + bias) * gain`.
fn update(tape: &mut Tape, state: Var, agg: Var, w_self: Var, w_agg: Var, bias: Var, gain: Var) -> Var {
    let a = tape.matmul(state, w_self);
    let b = tape.matmul(agg, w_agg);
    let s = tape.add(a, b);
    let pre = tape.add_row(s, bias);
    tape.layer_norm(pre, gain)
}

/// Row `q` all ones, all other rows zero.
fn query_indicator(nodes: usize, dim: usize, q: RelationId) -> Matrix {
    let mut m = Matrix::zeros(nodes, dim);
    m.row_mut(q.index()).fill(1.0);
    m
}

/// Relation encoder on a tape; returns the handle of every layer output.
fn relation_forward(tape: &mut Tape, p: &Params<Var>, e: &MetaEdges, q: RelationId, dim: usize) -> Vec<Var> {
    let mut states = vec![tape.leaf(query_indicator(e.nodes, dim, q))];
    for layer in &p.relation {
        let prev = *states.last().expect("initial state");
        states.push(relation_layer(tape, layer, prev, e));
    }
    states
}

/// Entity encoder on a tape, from relation embeddings `rel` (|R| x d).
fn entity_forward(
    tape: &mut Tape,
    p: &Params<Var>,
    f: &FactEdges,
    rel: Var,
    q: RelationId,
    h: EntityId,
    mode: EntityMessage,
) -> Var {
    let qrow = tape.gather(rel, vec![q.index()]);
    let mut state = tape.scatter_add(qrow, vec![h.index()], f.entities);
    for layer in &p.entity {
        let source = match mode {
            EntityMessage::PerRelationRow => rel,
            EntityMessage::QueryRow => qrow,
        };
        let x = tape.matmul(source, layer.w1);
        let x = tape.add_row(x, layer.b1);
        let x = tape.relu(x);
        let x = tape.matmul(x, layer.w2);
        let transformed = tape.add_row(x, layer.b2);
        let rel_idx = match mode {
            EntityMessage::PerRelationRow => f.rels.clone(),
            EntityMessage::QueryRow => vec![0; f.rels.len()],
        };
        let from = tape.gather(state, f.heads.clone());
        let edge = tape.gather(transformed, rel_idx);
        let msg = tape.mul(from, edge);
        let agg = tape.scatter_add(msg, f.tails.clone(), f.entities);
        state = update(tape, state, agg, layer.w_self, layer.w_agg, layer.bias, layer.gain);
    }
    state
}

/// Logits for every candidate tail: `(H W + b) v + b0`, one row per entity.
fn head_forward(tape: &mut Tape, p: &Params<Var>, state: Var) -> Var {
    let x = tape.matmul(state, p.head.w);
    let x = tape.add_row(x, p.head.b);
    let s = tape.matmul(x, p.head.v);
    tape.add_row(s, p.head.b0)
}

/// A trained or freshly initialized model, tied to a vocabulary by name and
/// pattern list.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub vocabulary: String,
    pub patterns: Vec<String>,
    pub params: Params,
}

impl Model {
    /// Initializes parameters from `config.seed`.
    pub fn new(config: ModelConfig, vocabulary: &Vocabulary) -> Result<Self> {
        use rand::SeedableRng;
        config.validate()?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
        let params = Params::init(config.dims(vocabulary.len()), &mut rng);
        Ok(Model {
            config,
            vocabulary: vocabulary.name().to_owned(),
            patterns: vocabulary.pattern_names().into_iter().map(str::to_owned).collect(),
            params,
        })
    }

    /// Errors unless `v` has the vocabulary name and patterns this model was
    /// built for.
    pub fn check_vocabulary(&self, v: &Vocabulary) -> Result<()> {
        let names: Vec<&str> = v.pattern_names();
        if v.name() != self.vocabulary || names != self.patterns {
            return Err(Error::Checkpoint(format!(
                "model expects vocabulary `{}` with patterns [{}], got `{}` with [{}]",
                self.vocabulary,
                self.patterns.join(", "),
                v.name(),
                names.join(", ")
            )));
        }
        Ok(())
    }

    fn check_graphs(&self, g: &KnowledgeGraph, rg: &RelationGraph) -> Result<()> {
        if rg.edge_types() != self.patterns.as_slice() {
            return Err(Error::Checkpoint(format!(
                "relation graph edge types [{}] differ from the model's patterns [{}]",
                rg.edge_types().join(", "),
                self.patterns.join(", ")
            )));
        }
        if rg.nodes() != g.relation_names() {
            return Err(Error::InvalidArgument(
                "relation graph nodes do not match the knowledge graph's relations".into(),
            ));
        }
        Ok(())
    }

    /// Every relation-encoder layer output conditioned on `q`.
    pub fn encode_relations(&self, rg: &RelationGraph, q: RelationId) -> Result<ConditionalRelationEmbedding> {
        encode_relations(rg, q, &self.params, &self.config)
    }

    /// Final entity states for the query `(h, q, ?)` on `g`.
    pub fn encode_entities(
        &self,
        g: &KnowledgeGraph,
        rel: &ConditionalRelationEmbedding,
        h: EntityId,
    ) -> Result<Matrix> {
        encode_entities(g, rel, h, &self.params, &self.config)
    }

    /// Logits `π(h, q, e)` for every entity `e` of `g`.
    pub fn score_tails(&self, g: &KnowledgeGraph, rg: &RelationGraph, h: EntityId, q: RelationId) -> Result<Vec<f64>> {
        self.check_graphs(g, rg)?;
        g.check_entity(h)?;
        g.check_relation(q)?;
        let mut tape = Tape::new();
        let p = self.params.leaves(&mut tape);
        let rel = *relation_forward(&mut tape, &p, &MetaEdges::new(rg), q, self.config.dim)
            .last()
            .expect("initial state");
        let facts = FactEdges::new(g, &HashSet::new());
        let state = entity_forward(&mut tape, &p, &facts, rel, q, h, self.config.entity_message);
        let s = head_forward(&mut tape, &p, state);
        Ok(tape.value(s).data().to_vec())
    }

    pub fn score(
        &self,
        g: &KnowledgeGraph,
        rg: &RelationGraph,
        h: EntityId,
        q: RelationId,
        e: EntityId,
    ) -> Result<f64> {
        g.check_entity(e)?;
        Ok(self.score_tails(g, rg, h, q)?[e.index()])
    }
}

fn check_params(params: &Params, rg: &RelationGraph, cfg: &ModelConfig) -> Result<()> {
    let dims = params.dims();
    if dims.dim != cfg.dim || dims.patterns != rg.edge_types().len() {
        return Err(Error::InvalidArgument(format!(
            "parameters have width {} and {} meta embeddings; relation graph has {} edge types at width {}",
            dims.dim,
            dims.patterns,
            rg.edge_types().len(),
            cfg.dim
        )));
    }
    Ok(())
}

/// Relation embeddings of every node of `rg` conditioned on `q`.
pub fn encode_relations(
    rg: &RelationGraph,
    q: RelationId,
    params: &Params,
    cfg: &ModelConfig,
) -> Result<ConditionalRelationEmbedding> {
    if q.index() >= rg.num_nodes() {
        return Err(Error::InvalidId {
            kind: "relation",
            id: q.index(),
            len: rg.num_nodes(),
        });
    }
    check_params(params, rg, cfg)?;
    let mut tape = Tape::new();
    let p = params.leaves(&mut tape);
    let states = relation_forward(&mut tape, &p, &MetaEdges::new(rg), q, cfg.dim);
    Ok(ConditionalRelationEmbedding {
        query: q,
        layers: states.iter().map(|&s| tape.value(s).clone()).collect(),
    })
}

/// Entity states for the query `(h, rel.query, ?)`.
pub fn encode_entities(
    g: &KnowledgeGraph,
    rel: &ConditionalRelationEmbedding,
    h: EntityId,
    params: &Params,
    cfg: &ModelConfig,
) -> Result<Matrix> {
    g.check_entity(h)?;
    let r = rel.matrix();
    if r.rows() != g.num_relations() || r.cols() != cfg.dim {
        return Err(Error::InvalidArgument(format!(
            "relation embeddings are {}x{}, graph has {} relations at width {}",
            r.rows(),
            r.cols(),
            g.num_relations(),
            cfg.dim
        )));
    }
    let mut tape = Tape::new();
    let p = params.leaves(&mut tape);
    let rv = tape.leaf(r.clone());
    let facts = FactEdges::new(g, &HashSet::new());
    let state = entity_forward(&mut tape, &p, &facts, rv, rel.query, h, cfg.entity_message);
    Ok(tape.value(state).clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::matcher::MatchOptions;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_cfg() -> ModelConfig {
        ModelConfig {
            dim: 6,
            relation_layers: 2,
            entity_layers: 2,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn cyclic_first_layer_follows_the_closed_path() {
        let g = fixtures::cyclic();
        let v = Vocabulary::from_pattern_names(&["fffc"]).unwrap();
        let rg = RelationGraph::build(&g, &v, 1, MatchOptions::default()).unwrap();
        let cfg = small_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let params = Params::random(cfg.dims(1), &mut rng);
        let enc = encode_relations(&rg, RelationId(0), &params, &cfg).unwrap();
        let l1 = &enc.layers[1];
        let p = &params.relation[0];
        // r2 receives nothing, so it sits at LN(bias) * gain.
        let mut t = Tape::new();
        let (b, gn) = (t.leaf(p.bias.clone()), t.leaf(p.gain.clone()));
        let idle = t.layer_norm(b, gn);
        assert_eq!(l1.row(1), t.value(idle).row(0));
        assert_ne!(l1.row(2), l1.row(1));
    }

    #[test]
    fn no_edges_keeps_non_query_rows_equal() {
        let g = KnowledgeGraph::from_named_triples([("a", "p", "b"), ("c", "q", "d"), ("e", "s", "f")]);
        let v = Vocabulary::from_pattern_names(&["ffo"]).unwrap();
        let rg = RelationGraph::build(&g, &v, 1, MatchOptions::default()).unwrap();
        assert_eq!(rg.num_edges(), 0);
        let cfg = small_cfg();
        let params = Params::random(cfg.dims(1), &mut ChaCha8Rng::seed_from_u64(1));
        let m = encode_relations(&rg, RelationId(1), &params, &cfg).unwrap();
        let r = m.matrix();
        assert_eq!(r.row(0), r.row(2));
        assert_ne!(r.row(0), r.row(1));
    }

    #[test]
    fn single_triple_reachability() {
        let g = KnowledgeGraph::from_named_triples([("h", "q", "t")])
            .augment_inverses()
            .unwrap();
        let g = {
            // add an unrelated isolated pair of entities
            let mut b = crate::kg::GraphBuilder::new();
            for t in g.triples() {
                b.add(
                    g.entity_name(t.head),
                    g.relation_name(t.relation),
                    g.entity_name(t.tail),
                );
            }
            b.intern_entity("x");
            b.intern_entity("y");
            b.build()
        };
        let v = Vocabulary::from_pattern_names(&["ffo"]).unwrap();
        let rg = RelationGraph::build(&g, &v, 1, MatchOptions::default()).unwrap();
        let cfg = ModelConfig {
            entity_layers: 1,
            ..small_cfg()
        };
        let params = Params::random(cfg.dims(1), &mut ChaCha8Rng::seed_from_u64(2));
        let rel = encode_relations(&rg, RelationId(0), &params, &cfg).unwrap();
        let h = encode_entities(&g, &rel, g.entity_id("h").unwrap(), &params, &cfg).unwrap();
        let (x, y, t) = (
            g.entity_id("x").unwrap().index(),
            g.entity_id("y").unwrap().index(),
            g.entity_id("t").unwrap().index(),
        );
        assert_eq!(h.row(x), h.row(y));
        assert_ne!(h.row(t), h.row(x));
    }

    #[test]
    fn scoring_is_deterministic() {
        let g = fixtures::family().augment_inverses().unwrap();
        let v = crate::vocabulary::builtin_vocabulary("V2").unwrap();
        let rg = RelationGraph::build(&g, &v, 1, MatchOptions::default()).unwrap();
        let model = Model::new(small_cfg(), &v).unwrap();
        let a = model.score_tails(&g, &rg, EntityId(0), RelationId(0)).unwrap();
        let b = model.score_tails(&g, &rg, EntityId(0), RelationId(0)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn vocabulary_mismatch_detected() {
        let v2 = crate::vocabulary::builtin_vocabulary("V2").unwrap();
        let v3 = crate::vocabulary::builtin_vocabulary("V3").unwrap();
        let model = Model::new(small_cfg(), &v2).unwrap();
        assert!(model.check_vocabulary(&v2).is_ok());
        assert!(matches!(model.check_vocabulary(&v3), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn zero_width_rejected() {
        let cfg = ModelConfig { dim: 0, ..small_cfg() };
        assert!(cfg.validate().is_err());
    }
}
