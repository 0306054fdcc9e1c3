//! Dense row-major matrices and a small tape-based reverse-mode
//! differentiator covering the operations the encoders need.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Dense row-major `f64` matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix({}x{}) {:?}", self.rows, self.cols, self.data)
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// # Panics
    /// When `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Matrix { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows, "matmul shapes");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    fn add_assign(&mut self, other: &Matrix) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    fn zip_map(&self, other: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
        assert_eq!(self.shape(), other.shape(), "elementwise shapes");
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }
}

/// Numerically stable `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x == f64::INFINITY {
        return x;
    }
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Variance floor of [`Tape::layer_norm`].
pub const LAYER_NORM_EPS: f64 = 1e-5;

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Relu(Var),
    Softplus(Var),
    Scale(Var, f64),
    Gather(Var, Vec<usize>),
    ScatterAdd(Var, Vec<usize>),
    LayerNorm {
        x: Var,
        gain: Var,
        normalized: Matrix,
        inv_std: Vec<f64>,
    },
    Sum(Var),
}

struct Node {
    value: Matrix,
    op: Op,
}

/// Records a computation for reverse-mode differentiation.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        self.push(v, Op::Add(a, b))
    }

    /// Adds the `1 x cols` row `r` to every row of `a`.
    pub fn add_row(&mut self, a: Var, r: Var) -> Var {
        let (av, rv) = (self.value(a), self.value(r));
        assert_eq!((1, av.cols), rv.shape(), "add_row shapes");
        let mut v = av.clone();
        for i in 0..v.rows {
            for (x, b) in v.row_mut(i).iter_mut().zip(&rv.data) {
                *x += b;
            }
        }
        self.push(v, Op::AddRow(a, r))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        self.push(v, Op::Mul(a, b))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x.max(0.0));
        self.push(v, Op::Relu(a))
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        let v = self.value(a).map(softplus);
        self.push(v, Op::Softplus(a))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a).map(|x| x * s);
        self.push(v, Op::Scale(a, s))
    }

    /// Row `i` of the result is row `idx[i]` of `a`.
    pub fn gather(&mut self, a: Var, idx: Vec<usize>) -> Var {
        let av = self.value(a);
        let mut v = Matrix::zeros(idx.len(), av.cols);
        for (i, &j) in idx.iter().enumerate() {
            v.row_mut(i).copy_from_slice(av.row(j));
        }
        self.push(v, Op::Gather(a, idx))
    }

    /// Row `idx[i]` of the `rows`-row result accumulates row `i` of `a`, in
    /// increasing `i`.
    pub fn scatter_add(&mut self, a: Var, idx: Vec<usize>, rows: usize) -> Var {
        let av = self.value(a);
        assert_eq!(av.rows, idx.len(), "scatter_add index length");
        let mut v = Matrix::zeros(rows, av.cols);
        for (i, &j) in idx.iter().enumerate() {
            for (o, x) in v.row_mut(j).iter_mut().zip(av.row(i)) {
                *o += x;
            }
        }
        self.push(v, Op::ScatterAdd(a, idx))
    }

    /// Row-wise layer normalization scaled by the `1 x cols` gain.
    pub fn layer_norm(&mut self, x: Var, gain: Var) -> Var {
        let xv = self.value(x);
        let gv = self.value(gain);
        assert_eq!((1, xv.cols), gv.shape(), "layer_norm gain shape");
        let d = xv.cols as f64;
        let mut normalized = Matrix::zeros(xv.rows, xv.cols);
        let mut inv_std = Vec::with_capacity(xv.rows);
        for i in 0..xv.rows {
            let row = xv.row(i);
            let mean = row.iter().sum::<f64>() / d;
            let var = row.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / d;
            let s = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            inv_std.push(s);
            for (o, a) in normalized.row_mut(i).iter_mut().zip(row) {
                *o = (a - mean) * s;
            }
        }
        let mut out = normalized.clone();
        for i in 0..out.rows {
            for (o, g) in out.row_mut(i).iter_mut().zip(&gv.data) {
                *o *= g;
            }
        }
        self.push(
            out,
            Op::LayerNorm {
                x,
                gain,
                normalized,
                inv_std,
            },
        )
    }

    /// Sum of all entries as a `1 x 1` matrix.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data.iter().sum();
        self.push(Matrix::from_vec(1, 1, vec![s]), Op::Sum(a))
    }

    /// Gradients of the `1 x 1` output `out` with respect to every node.
    pub fn backward(&self, out: Var) -> Gradients {
        assert_eq!(self.value(out).shape(), (1, 1), "backward needs a scalar output");
        let mut grads: Vec<Option<Matrix>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[out.0] = Some(Matrix::filled(1, 1, 1.0));
        for i in (0..=out.0).rev() {
            let Some(g) = grads[i].take() else {
                continue;
            };
            let node = &self.nodes[i];
            let mut acc = |v: Var, delta: Matrix| match &mut grads[v.0] {
                Some(existing) => existing.add_assign(&delta),
                slot @ None => *slot = Some(delta),
            };
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    acc(*a, g.matmul(&bv.transpose()));
                    acc(*b, av.transpose().matmul(&g));
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone());
                    acc(*b, g.clone());
                }
                Op::AddRow(a, r) => {
                    let mut gr = Matrix::zeros(1, g.cols);
                    for k in 0..g.rows {
                        for (o, x) in gr.data.iter_mut().zip(g.row(k)) {
                            *o += x;
                        }
                    }
                    acc(*r, gr);
                    acc(*a, g.clone());
                }
                Op::Mul(a, b) => {
                    acc(*a, g.zip_map(self.value(*b), |x, y| x * y));
                    acc(*b, g.zip_map(self.value(*a), |x, y| x * y));
                }
                Op::Relu(a) => {
                    acc(*a, g.zip_map(self.value(*a), |x, y| if y > 0.0 { x } else { 0.0 }));
                }
                Op::Softplus(a) => {
                    acc(*a, g.zip_map(self.value(*a), |x, y| x * sigmoid(y)));
                }
                Op::Scale(a, s) => {
                    acc(*a, g.map(|x| x * s));
                }
                Op::Gather(a, idx) => {
                    let av = self.value(*a);
                    let mut ga = Matrix::zeros(av.rows, av.cols);
                    for (k, &j) in idx.iter().enumerate() {
                        for (o, x) in ga.row_mut(j).iter_mut().zip(g.row(k)) {
                            *o += x;
                        }
                    }
                    acc(*a, ga);
                }
                Op::ScatterAdd(a, idx) => {
                    let mut ga = Matrix::zeros(idx.len(), g.cols);
                    for (k, &j) in idx.iter().enumerate() {
                        ga.row_mut(k).copy_from_slice(g.row(j));
                    }
                    acc(*a, ga);
                }
                Op::LayerNorm {
                    x,
                    gain,
                    normalized,
                    inv_std,
                } => {
                    let gv = self.value(*gain);
                    let cols = g.cols;
                    let d = cols as f64;
                    let mut ggain = Matrix::zeros(1, cols);
                    let mut gx = Matrix::zeros(g.rows, cols);
                    for (k, &inv) in inv_std.iter().enumerate() {
                        let gy = g.row(k);
                        let xh = normalized.row(k);
                        let dxh: Vec<f64> = gy.iter().zip(&gv.data).map(|(a, b)| a * b).collect();
                        for j in 0..cols {
                            ggain.data[j] += gy[j] * xh[j];
                        }
                        let mean_d = dxh.iter().sum::<f64>() / d;
                        let mean_dx = dxh.iter().zip(xh).map(|(a, b)| a * b).sum::<f64>() / d;
                        for (j, o) in gx.row_mut(k).iter_mut().enumerate() {
                            *o = inv * (dxh[j] - mean_d - xh[j] * mean_dx);
                        }
                    }
                    acc(*x, gx);
                    acc(*gain, ggain);
                }
                Op::Sum(a) => {
                    let av = self.value(*a);
                    acc(*a, Matrix::filled(av.rows, av.cols, g.data[0]));
                }
            }
            grads[i] = Some(g);
        }
        Gradients { grads }
    }
}

/// Output of [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient for `v`; a zero matrix of the right shape when `v` does not
    /// influence the output.
    pub fn get(&self, tape: &Tape, v: Var) -> Matrix {
        match &self.grads[v.0] {
            Some(g) => g.clone(),
            None => {
                let (r, c) = tape.value(v).shape();
                Matrix::zeros(r, c)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric(f: impl Fn(&Matrix) -> f64, x: &Matrix) -> Matrix {
        let h = 1e-6;
        let mut g = Matrix::zeros(x.rows(), x.cols());
        for k in 0..x.data().len() {
            let mut plus = x.clone();
            plus.data_mut()[k] += h;
            let mut minus = x.clone();
            minus.data_mut()[k] -= h;
            g.data_mut()[k] = (f(&plus) - f(&minus)) / (2.0 * h);
        }
        g
    }

    fn close(a: &Matrix, b: &Matrix) {
        let diff = a.zip_map(b, |x, y| x - y).norm();
        let scale = a.norm().max(b.norm()).max(1e-12);
        assert!(diff / scale < 1e-6, "{a:?} vs {b:?}");
    }

    fn sample(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut s = seed;
        Matrix::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn matmul_small() {
        let a = Matrix::from_vec(2, 2, vec![1.0, 2.0, 3.0, 4.0]);
        let b = Matrix::from_vec(2, 1, vec![1.0, -1.0]);
        assert_eq!(a.matmul(&b).data(), &[-1.0, -1.0]);
    }

    #[test]
    fn layer_norm_gradient() {
        let x0 = sample(3, 4, 1);
        let gain = sample(1, 4, 2);
        let w = sample(3, 4, 3);
        let run = |x: &Matrix, gn: &Matrix| {
            let mut t = Tape::new();
            let (xv, gv, wv) = (t.leaf(x.clone()), t.leaf(gn.clone()), t.leaf(w.clone()));
            let y = t.layer_norm(xv, gv);
            let z = t.mul(y, wv);
            let s = t.sum(z);
            (t, xv, gv, s)
        };
        let (t, xv, gv, s) = run(&x0, &gain);
        let grads = t.backward(s);
        let f_x = |x: &Matrix| {
            let (t, _, _, s) = run(x, &gain);
            t.value(s).get(0, 0)
        };
        let f_g = |g: &Matrix| {
            let (t, _, _, s) = run(&x0, g);
            t.value(s).get(0, 0)
        };
        close(&grads.get(&t, xv), &numeric(f_x, &x0));
        close(&grads.get(&t, gv), &numeric(f_g, &gain));
    }

    #[test]
    fn gather_scatter_matmul_gradient() {
        let a0 = sample(3, 2, 4);
        let b = sample(2, 3, 5);
        let run = |a: &Matrix| {
            let mut t = Tape::new();
            let av = t.leaf(a.clone());
            let bv = t.leaf(b.clone());
            let g = t.gather(av, vec![2, 0, 2]);
            let s = t.scatter_add(g, vec![1, 1, 0], 2);
            let m = t.matmul(s, bv);
            let sp = t.softplus(m);
            let r = t.relu(sp);
            let sc = t.scale(r, -0.5);
            let out = t.sum(sc);
            (t, av, out)
        };
        let (t, av, out) = run(&a0);
        let grads = t.backward(out);
        close(
            &grads.get(&t, av),
            &numeric(
                |a| {
                    let (t, _, o) = run(a);
                    t.value(o).get(0, 0)
                },
                &a0,
            ),
        );
    }

    #[test]
    fn unused_leaf_has_zero_gradient() {
        let mut t = Tape::new();
        let a = t.leaf(Matrix::filled(2, 2, 1.0));
        let b = t.leaf(Matrix::filled(1, 3, 1.0));
        let s = t.sum(a);
        let g = t.backward(s);
        assert_eq!(g.get(&t, b), Matrix::zeros(1, 3));
        assert_eq!(g.get(&t, a), Matrix::filled(2, 2, 1.0));
    }

    #[test]
    fn softplus_limits() {
        assert_eq!(softplus(f64::NEG_INFINITY), 0.0);
        assert!((softplus(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(softplus(f64::INFINITY), f64::INFINITY);
        assert!((softplus(800.0) - 800.0).abs() < 1e-12);
    }
}
