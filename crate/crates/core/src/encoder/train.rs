use std::collections::{HashMap, HashSet};

use log::debug;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{entity_forward, head_forward, relation_forward, FactEdges, MetaEdges, Model, ModelConfig, Params};
use crate::autodiff::{softplus, Matrix, Tape, Var};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::relation_graph::RelationGraph;
use crate::vocabulary::Vocabulary;

/// Logits of one positive and its corruptions.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredQuery {
    pub positive: f64,
    pub negatives: Vec<f64>,
}

/// Mean over positives of `-log σ(s⁺) - (1/n) Σ log(1 - σ(s⁻))`, computed
/// from logits as `softplus(-s⁺) + (1/n) Σ softplus(s⁻)`.
pub fn bce_loss(batch: &[ScoredQuery]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("loss needs at least one positive".into()));
    }
    let mut total = 0.0;
    for q in batch {
        if q.negatives.is_empty() {
            return Err(Error::InvalidArgument(
                "every positive needs at least one negative".into(),
            ));
        }
        let neg: f64 = q.negatives.iter().map(|&s| softplus(s)).sum::<f64>() / q.negatives.len() as f64;
        total += softplus(-q.positive) + neg;
    }
    Ok(total / batch.len() as f64)
}

/// A positive triple with the tails used as its corruptions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingExample {
    pub triple: Triple,
    pub negatives: Vec<EntityId>,
}

/// Uniform tail corruptions `(h, r, e)` that are not triples of `g`, drawn
/// with replacement. Empty when every entity is a true tail.
pub fn sample_negatives<R: Rng>(g: &KnowledgeGraph, t: &Triple, n: usize, rng: &mut R) -> Vec<EntityId> {
    let candidates: Vec<EntityId> = g.entity_ids().filter(|&e| !g.contains(t.head, t.relation, e)).collect();
    if candidates.is_empty() {
        return Vec::new();
    }
    (0..n).map(|_| candidates[rng.gen_range(0..candidates.len())]).collect()
}

/// The query triple and its inverse, hidden from message passing while the
/// triple is being predicted.
fn hidden(g: &KnowledgeGraph, t: &Triple) -> HashSet<Triple> {
    let mut out = HashSet::from([*t]);
    if let Some(inv) = g.inverse_of(t.relation) {
        out.insert(Triple::new(t.tail, inv, t.head));
    }
    out
}

fn batch_forward(
    tape: &mut Tape,
    p: &Params<Var>,
    g: &KnowledgeGraph,
    rg: &RelationGraph,
    cfg: &ModelConfig,
    batch: &[TrainingExample],
) -> Result<Var> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("loss needs at least one positive".into()));
    }
    let meta = MetaEdges::new(rg);
    let mut rel_cache: HashMap<usize, Var> = HashMap::new();
    let mut total: Option<Var> = None;
    for ex in batch {
        let t = ex.triple;
        g.check_entity(t.head)?;
        g.check_entity(t.tail)?;
        g.check_relation(t.relation)?;
        if ex.negatives.is_empty() {
            return Err(Error::InvalidArgument(
                "every positive needs at least one negative".into(),
            ));
        }
        for &e in &ex.negatives {
            g.check_entity(e)?;
        }
        let rel = match rel_cache.get(&t.relation.index()) {
            Some(&v) => v,
            None => {
                let v = *relation_forward(tape, p, &meta, t.relation, cfg.dim)
                    .last()
                    .expect("initial state");
                rel_cache.insert(t.relation.index(), v);
                v
            }
        };
        let facts = FactEdges::new(g, &hidden(g, &t));
        let state = entity_forward(tape, p, &facts, rel, t.relation, t.head, cfg.entity_message);
        let scores = head_forward(tape, p, state);

        let pos = tape.gather(scores, vec![t.tail.index()]);
        let pos = tape.scale(pos, -1.0);
        let pos = tape.softplus(pos);
        let pos = tape.sum(pos);

        let neg_idx: Vec<usize> = ex.negatives.iter().map(|e| e.index()).collect();
        let neg = tape.gather(scores, neg_idx);
        let weights = negative_weights(tape.value(neg), cfg);
        let w = tape.leaf(weights);
        let neg = tape.softplus(neg);
        let neg = tape.mul(neg, w);
        let neg = tape.sum(neg);

        let term = tape.add(pos, neg);
        total = Some(match total {
            Some(acc) => tape.add(acc, term),
            None => term,
        });
    }
    let total = total.expect("non-empty batch");
    Ok(tape.scale(total, 1.0 / batch.len() as f64))
}

/// Uniform `1/n`, or a softmax of the scaled negative logits when
/// self-adversarial weighting is on. Treated as constants.
fn negative_weights(neg: &Matrix, cfg: &ModelConfig) -> Matrix {
    let n = neg.rows();
    if !cfg.self_adversarial {
        return Matrix::filled(n, 1, 1.0 / n as f64);
    }
    let z: Vec<f64> = neg.data().iter().map(|s| s * cfg.adversarial_temperature).collect();
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    Matrix::from_vec(n, 1, e.into_iter().map(|x| x / sum).collect())
}

/// Batch loss and its gradient with respect to every parameter.
pub fn loss_and_gradients(
    params: &Params,
    g: &KnowledgeGraph,
    rg: &RelationGraph,
    cfg: &ModelConfig,
    batch: &[TrainingExample],
) -> Result<(f64, Params)> {
    super::check_params(params, rg, cfg)?;
    let mut tape = Tape::new();
    let p = params.leaves(&mut tape);
    let loss = batch_forward(&mut tape, &p, g, rg, cfg, batch)?;
    let value = tape.value(loss).get(0, 0);
    let grads = tape.backward(loss);
    Ok((value, p.map(&mut |&v| grads.get(&tape, v))))
}

/// Batch loss only.
pub fn batch_loss(
    params: &Params,
    g: &KnowledgeGraph,
    rg: &RelationGraph,
    cfg: &ModelConfig,
    batch: &[TrainingExample],
) -> Result<f64> {
    super::check_params(params, rg, cfg)?;
    let mut tape = Tape::new();
    let p = params.leaves(&mut tape);
    let loss = batch_forward(&mut tape, &p, g, rg, cfg, batch)?;
    Ok(tape.value(loss).get(0, 0))
}

/// Adam with decoupled weight decay.
#[derive(Clone, Debug)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    step: i32,
    m: Params,
    v: Params,
}

impl AdamW {
    pub fn new(params: &Params, lr: f64, weight_decay: f64) -> Self {
        let zeros = params.map(&mut |m| Matrix::zeros(m.rows(), m.cols()));
        AdamW {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn step(&mut self, params: &mut Params, grads: &Params) {
        self.step += 1;
        let (lr, b1, b2, eps, wd) = (self.lr, self.beta1, self.beta2, self.eps, self.weight_decay);
        let c1 = 1.0 - b1.powi(self.step);
        let c2 = 1.0 - b2.powi(self.step);
        let mut gs: Vec<&Matrix> = Vec::new();
        grads.visit(&mut |_, g| gs.push(g));
        let mut ms: Vec<&mut Matrix> = Vec::new();
        self.m.visit_mut(&mut |_, m| ms.push(m));
        let mut vs: Vec<&mut Matrix> = Vec::new();
        self.v.visit_mut(&mut |_, v| vs.push(v));
        let mut k = 0;
        params.visit_mut(&mut |_, p| {
            let g = gs[k].data();
            let m = ms[k].data_mut();
            let v = vs[k].data_mut();
            k += 1;
            for (i, x) in p.data_mut().iter_mut().enumerate() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                *x -= lr * (m_hat / (v_hat.sqrt() + eps) + wd * *x);
            }
        });
    }
}

/// Per-step training record, also the metrics-log line format.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: usize,
    pub loss: f64,
}

/// Trains a fresh model on `g` (expected to be inverse-augmented) with the
/// relation graph `rg` mined from it. Single-threaded and deterministic for a
/// fixed `cfg.seed`.
pub fn train(
    g: &KnowledgeGraph,
    rg: &RelationGraph,
    vocabulary: &Vocabulary,
    cfg: &ModelConfig,
    mut on_step: impl FnMut(&StepMetrics),
) -> Result<Model> {
    let mut model = Model::new(cfg.clone(), vocabulary)?;
    model.check_graphs(g, rg)?;
    if g.is_empty() {
        return Err(Error::InvalidArgument("cannot train on an empty graph".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut opt = AdamW::new(&model.params, cfg.learning_rate, cfg.weight_decay);
    let triples = g.triples();
    for step in 0..cfg.steps {
        let mut batch = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size {
            let t = *triples.choose(&mut rng).expect("non-empty graph");
            let negatives = sample_negatives(g, &t, cfg.negatives, &mut rng);
            if !negatives.is_empty() {
                batch.push(TrainingExample { triple: t, negatives });
            }
        }
        if batch.is_empty() {
            debug!("step {step}: no corruptible positives sampled");
            continue;
        }
        let (loss, grads) = loss_and_gradients(&model.params, g, rg, cfg, &batch)?;
        if !loss.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        opt.step(&mut model.params, &grads);
        if !model.params.is_finite() {
            return Err(Error::Diverged { step, loss });
        }
        on_step(&StepMetrics { step, loss });
    }
    Ok(model)
}
