use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::autodiff::{Matrix, Tape, Var};

/// One relation-level message-passing layer: a `d`-vector per pattern
/// (`meta`, one row each) plus the linear update and normalization gain.
#[derive(Clone, Debug, PartialEq)]
pub struct RelationLayer<T> {
    pub meta: T,
    pub w_self: T,
    pub w_agg: T,
    pub bias: T,
    pub gain: T,
}

/// One entity-level layer: the relation transform `W2 ReLU(W1 r + b1) + b2`
/// plus the linear update and normalization gain.
#[derive(Clone, Debug, PartialEq)]
pub struct EntityLayer<T> {
    pub w1: T,
    pub b1: T,
    pub w2: T,
    pub b2: T,
    pub w_self: T,
    pub w_agg: T,
    pub bias: T,
    pub gain: T,
}

/// Scoring head `w^T (W x + b) + b0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Head<T> {
    pub w: T,
    pub b: T,
    pub v: T,
    pub b0: T,
}

/// All trainable tensors. `Params<Matrix>` holds values; the same layout
/// over [`Var`] holds their tape handles, and over gradients or optimizer
/// moments holds those.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<T = Matrix> {
    pub relation: Vec<RelationLayer<T>>,
    pub entity: Vec<EntityLayer<T>>,
    pub head: Head<T>,
}

impl<T> Params<T> {
    /// Visits every tensor with a stable dotted name, in a fixed order.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(String, &'a T)) {
        for (i, l) in self.relation.iter().enumerate() {
            f(format!("relation.{i}.meta"), &l.meta);
            f(format!("relation.{i}.w_self"), &l.w_self);
            f(format!("relation.{i}.w_agg"), &l.w_agg);
            f(format!("relation.{i}.bias"), &l.bias);
            f(format!("relation.{i}.gain"), &l.gain);
        }
        for (i, l) in self.entity.iter().enumerate() {
            f(format!("entity.{i}.w1"), &l.w1);
            f(format!("entity.{i}.b1"), &l.b1);
            f(format!("entity.{i}.w2"), &l.w2);
            f(format!("entity.{i}.b2"), &l.b2);
            f(format!("entity.{i}.w_self"), &l.w_self);
            f(format!("entity.{i}.w_agg"), &l.w_agg);
            f(format!("entity.{i}.bias"), &l.bias);
            f(format!("entity.{i}.gain"), &l.gain);
        }
        f("head.w".into(), &self.head.w);
        f("head.b".into(), &self.head.b);
        f("head.v".into(), &self.head.v);
        f("head.b0".into(), &self.head.b0);
    }

    /// Mutable counterpart of [`Params::visit`], same order.
    pub fn visit_mut<'a>(&'a mut self, f: &mut dyn FnMut(String, &'a mut T)) {
        for (i, l) in self.relation.iter_mut().enumerate() {
            f(format!("relation.{i}.meta"), &mut l.meta);
            f(format!("relation.{i}.w_self"), &mut l.w_self);
            f(format!("relation.{i}.w_agg"), &mut l.w_agg);
            f(format!("relation.{i}.bias"), &mut l.bias);
            f(format!("relation.{i}.gain"), &mut l.gain);
        }
        for (i, l) in self.entity.iter_mut().enumerate() {
            f(format!("entity.{i}.w1"), &mut l.w1);
            f(format!("entity.{i}.b1"), &mut l.b1);
            f(format!("entity.{i}.w2"), &mut l.w2);
            f(format!("entity.{i}.b2"), &mut l.b2);
            f(format!("entity.{i}.w_self"), &mut l.w_self);
            f(format!("entity.{i}.w_agg"), &mut l.w_agg);
            f(format!("entity.{i}.bias"), &mut l.bias);
            f(format!("entity.{i}.gain"), &mut l.gain);
        }
        f("head.w".into(), &mut self.head.w);
        f("head.b".into(), &mut self.head.b);
        f("head.v".into(), &mut self.head.v);
        f("head.b0".into(), &mut self.head.b0);
    }

    pub fn map<U>(&self, f: &mut dyn FnMut(&T) -> U) -> Params<U> {
        Params {
            relation: self
                .relation
                .iter()
                .map(|l| RelationLayer {
                    meta: f(&l.meta),
                    w_self: f(&l.w_self),
                    w_agg: f(&l.w_agg),
                    bias: f(&l.bias),
                    gain: f(&l.gain),
                })
                .collect(),
            entity: self
                .entity
                .iter()
                .map(|l| EntityLayer {
                    w1: f(&l.w1),
                    b1: f(&l.b1),
                    w2: f(&l.w2),
                    b2: f(&l.b2),
                    w_self: f(&l.w_self),
                    w_agg: f(&l.w_agg),
                    bias: f(&l.bias),
                    gain: f(&l.gain),
                })
                .collect(),
            head: Head {
                w: f(&self.head.w),
                b: f(&self.head.b),
                v: f(&self.head.v),
                b0: f(&self.head.b0),
            },
        }
    }

    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.visit(&mut |n, _| out.push(n));
        out
    }
}

/// Shape of a parameter set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub dim: usize,
    pub patterns: usize,
    pub relation_layers: usize,
    pub entity_layers: usize,
}

impl Params<Matrix> {
    /// Zero biases, unit gains, scaled Gaussian weights and meta embeddings.
    pub fn init<R: Rng>(dims: Dims, rng: &mut R) -> Self {
        Self::draw(dims, rng, false)
    }

    /// Every entry drawn from a continuous distribution, biases and gains
    /// included.
    pub fn random<R: Rng>(dims: Dims, rng: &mut R) -> Self {
        Self::draw(dims, rng, true)
    }

    fn draw<R: Rng>(dims: Dims, rng: &mut R, generic: bool) -> Self {
        let d = dims.dim;
        let std = (1.0 / d as f64).sqrt();
        let mut s = Sampler { rng, generic };
        let relation = (0..dims.relation_layers)
            .map(|_| RelationLayer {
                meta: s.gauss(dims.patterns, d, 1.0),
                w_self: s.gauss(d, d, std),
                w_agg: s.gauss(d, d, std),
                bias: s.around(1, d, 0.0),
                gain: s.around(1, d, 1.0),
            })
            .collect();
        let entity = (0..dims.entity_layers)
            .map(|_| EntityLayer {
                w1: s.gauss(d, d, std),
                b1: s.around(1, d, 0.0),
                w2: s.gauss(d, d, std),
                b2: s.around(1, d, 0.0),
                w_self: s.gauss(d, d, std),
                w_agg: s.gauss(d, d, std),
                bias: s.around(1, d, 0.0),
                gain: s.around(1, d, 1.0),
            })
            .collect();
        let head = Head {
            w: s.gauss(d, d, std),
            b: s.around(1, d, 0.0),
            v: s.gauss(d, 1, std),
            b0: s.around(1, 1, 0.0),
        };
        Params { relation, entity, head }
    }

    pub fn dims(&self) -> Dims {
        Dims {
            dim: self.head.w.rows(),
            patterns: self.relation.first().map_or(0, |l| l.meta.rows()),
            relation_layers: self.relation.len(),
            entity_layers: self.entity.len(),
        }
    }

    /// Registers every tensor as a tape leaf.
    pub fn leaves(&self, tape: &mut Tape) -> Params<Var> {
        self.map(&mut |m| tape.leaf(m.clone()))
    }

    pub fn is_finite(&self) -> bool {
        let mut ok = true;
        self.visit(&mut |_, m| ok &= m.is_finite());
        ok
    }

    pub fn num_scalars(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_, m| n += m.data().len());
        n
    }
}

struct Sampler<'a, R> {
    rng: &'a mut R,
    generic: bool,
}

impl<R: Rng> Sampler<'_, R> {
    fn gauss(&mut self, rows: usize, cols: usize, std: f64) -> Matrix {
        let n = Normal::new(0.0, std).expect("positive std");
        Matrix::from_fn(rows, cols, |_, _| n.sample(self.rng))
    }

    /// The constant `center`, jittered when drawing generic parameters.
    fn around(&mut self, rows: usize, cols: usize, center: f64) -> Matrix {
        if self.generic {
            let mut m = self.gauss(rows, cols, 0.1);
            m.data_mut().iter_mut().for_each(|x| *x += center);
            m
        } else {
            Matrix::filled(rows, cols, center)
        }
    }
}
