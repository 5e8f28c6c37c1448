//! Reverse-mode differentiation over dense `f64` vectors.
//!
//! A [`Tape`] records every operation of one forward computation. Parameters
//! live outside the tape in a slice of [`Tensor`]s; [`Tape::backward`] adds
//! their gradients into a [`Gradients`] buffer of the same layout.

use serde::{Deserialize, Serialize};

use crate::lattice::Lattice;

pub type NodeId = usize;

/// A named row-major parameter matrix (vectors have `cols == 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Tensor {
    pub fn zeros(name: &str, rows: usize, cols: usize) -> Self {
        Tensor {
            name: name.to_string(),
            rows,
            cols,
            values: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// One gradient buffer per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &[Tensor]) -> Self {
        Gradients {
            tensors: params.iter().map(|p| vec![0.0; p.values.len()]).collect(),
        }
    }

    pub fn clear(&mut self) {
        for t in &mut self.tensors {
            t.fill(0.0);
        }
    }

    pub fn norm(&self) -> f64 {
        self.tensors.iter().flatten().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Rescales to global norm `max_norm` when it is exceeded; returns the
    /// norm before clipping.
    pub fn clip(&mut self, max_norm: f64) -> f64 {
        let norm = self.norm();
        if norm > max_norm {
            let factor = max_norm / norm;
            for g in self.tensors.iter_mut().flatten() {
                *g *= factor;
            }
        }
        norm
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Input,
    Param(usize),
    Row(usize, usize),
    Linear(usize, NodeId),
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Concat(Vec<NodeId>),
    Slice(NodeId, usize),
    Mask(NodeId, Vec<f64>),
    CrfNll {
        scores: Vec<NodeId>,
        transitions: usize,
        gold: Vec<usize>,
        nodes: Vec<f64>,
        expected: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
struct Node {
    value: Vec<f64>,
    op: Op,
}

pub struct Tape<'p> {
    params: &'p [Tensor],
    nodes: Vec<Node>,
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, len: usize) -> &mut Vec<f64> {
    slot.get_or_insert_with(|| vec![0.0; len])
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p [Tensor]) -> Self {
        Tape {
            params,
            nodes: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id].value
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    /// A constant; receives no gradient.
    pub fn input(&mut self, value: Vec<f64>) -> NodeId {
        self.push(value, Op::Input)
    }

    /// Whole parameter tensor as a flat vector.
    pub fn param(&mut self, p: usize) -> NodeId {
        let value = self.params[p].values.clone();
        self.push(value, Op::Param(p))
    }

    /// One row of a parameter matrix (embedding lookup).
    pub fn row(&mut self, p: usize, r: usize) -> NodeId {
        let value = self.params[p].row(r).to_vec();
        self.push(value, Op::Row(p, r))
    }

    /// Matrix-vector product `W x` with `W` a parameter.
    pub fn linear(&mut self, p: usize, x: NodeId) -> NodeId {
        let w = &self.params[p];
        let input = &self.nodes[x].value;
        debug_assert_eq!(input.len(), w.cols, "{}", w.name);
        let value = (0..w.rows)
            .map(|r| w.row(r).iter().zip(input).map(|(a, b)| a * b).sum())
            .collect();
        self.push(value, Op::Linear(p, x))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.nodes[a]
            .value
            .iter()
            .zip(&self.nodes[b].value)
            .map(|(x, y)| x + y)
            .collect();
        self.push(value, Op::Add(a, b))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value = self.nodes[a]
            .value
            .iter()
            .zip(&self.nodes[b].value)
            .map(|(x, y)| x * y)
            .collect();
        self.push(value, Op::Mul(a, b))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let value = self.nodes[a].value.iter().map(|&x| sigmoid(x)).collect();
        self.push(value, Op::Sigmoid(a))
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let value = self.nodes[a].value.iter().map(|x| x.tanh()).collect();
        self.push(value, Op::Tanh(a))
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let value = parts
            .iter()
            .flat_map(|&p| self.nodes[p].value.iter().copied())
            .collect();
        self.push(value, Op::Concat(parts.to_vec()))
    }

    pub fn slice(&mut self, a: NodeId, start: usize, len: usize) -> NodeId {
        let value = self.nodes[a].value[start..start + len].to_vec();
        self.push(value, Op::Slice(a, start))
    }

    /// Elementwise product with a constant mask (dropout).
    pub fn mask(&mut self, a: NodeId, mask: Vec<f64>) -> NodeId {
        let value = self.nodes[a]
            .value
            .iter()
            .zip(&mask)
            .map(|(x, m)| x * m)
            .collect();
        self.push(value, Op::Mask(a, mask))
    }

    /// Negative log-likelihood of `gold` under a linear-chain CRF whose
    /// per-position scores are `scores` and whose transition matrix is the
    /// parameter `transitions` (laid out as in [`Lattice`]).
    pub fn crf_nll(&mut self, scores: &[NodeId], transitions: usize, gold: &[usize]) -> NodeId {
        let labels = self.nodes[scores[0]].value.len();
        let unary: Vec<f64> = scores
            .iter()
            .flat_map(|&s| self.nodes[s].value.iter().copied())
            .collect();
        let trans = &self.params[transitions].values;
        let lattice = Lattice::new(&unary, trans, labels);
        let marginals = lattice.marginals();
        let value = marginals.log_z - lattice.path_score(gold);
        self.push(
            vec![value],
            Op::CrfNll {
                scores: scores.to_vec(),
                transitions,
                gold: gold.to_vec(),
                nodes: marginals.nodes,
                expected: marginals.transitions,
            },
        )
    }

    /// Backpropagates from the scalar node `output`, adding parameter
    /// gradients into `grads`.
    pub fn backward(&self, output: NodeId, grads: &mut Gradients) {
        let mut adjoint: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        adjoint[output] = Some(vec![1.0; self.nodes[output].value.len()]);
        for id in (0..=output).rev() {
            let Some(g) = adjoint[id].take() else {
                continue;
            };
            let node = &self.nodes[id];
            match &node.op {
                Op::Input => {}
                Op::Param(p) => {
                    for (t, v) in grads.tensors[*p].iter_mut().zip(&g) {
                        *t += v;
                    }
                }
                Op::Row(p, r) => {
                    let cols = self.params[*p].cols;
                    let row = &mut grads.tensors[*p][r * cols..(r + 1) * cols];
                    for (t, v) in row.iter_mut().zip(&g) {
                        *t += v;
                    }
                }
                Op::Linear(p, x) => {
                    let w = &self.params[*p];
                    let input = &self.nodes[*x].value;
                    let gw = &mut grads.tensors[*p];
                    for (r, gr) in g.iter().enumerate() {
                        if *gr == 0.0 {
                            continue;
                        }
                        let row = &mut gw[r * w.cols..(r + 1) * w.cols];
                        for (t, xi) in row.iter_mut().zip(input) {
                            *t += gr * xi;
                        }
                    }
                    let gx = accumulate(&mut adjoint[*x], w.cols);
                    for (r, gr) in g.iter().enumerate() {
                        if *gr == 0.0 {
                            continue;
                        }
                        for (t, wi) in gx.iter_mut().zip(w.row(r)) {
                            *t += gr * wi;
                        }
                    }
                }
                Op::Add(a, b) => {
                    for &k in [a, b] {
                        let slot = accumulate(&mut adjoint[k], g.len());
                        for (t, v) in slot.iter_mut().zip(&g) {
                            *t += v;
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (&self.nodes[*a].value, &self.nodes[*b].value);
                    let slot = accumulate(&mut adjoint[*a], g.len());
                    for ((t, v), o) in slot.iter_mut().zip(&g).zip(vb) {
                        *t += v * o;
                    }
                    let slot = accumulate(&mut adjoint[*b], g.len());
                    for ((t, v), o) in slot.iter_mut().zip(&g).zip(va) {
                        *t += v * o;
                    }
                }
                Op::Sigmoid(a) => {
                    let slot = accumulate(&mut adjoint[*a], g.len());
                    for ((t, v), y) in slot.iter_mut().zip(&g).zip(&node.value) {
                        *t += v * y * (1.0 - y);
                    }
                }
                Op::Tanh(a) => {
                    let slot = accumulate(&mut adjoint[*a], g.len());
                    for ((t, v), y) in slot.iter_mut().zip(&g).zip(&node.value) {
                        *t += v * (1.0 - y * y);
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let len = self.nodes[p].value.len();
                        let slot = accumulate(&mut adjoint[p], len);
                        for (t, v) in slot.iter_mut().zip(&g[offset..offset + len]) {
                            *t += v;
                        }
                        offset += len;
                    }
                }
                Op::Slice(a, start) => {
                    let len = self.nodes[*a].value.len();
                    let slot = accumulate(&mut adjoint[*a], len);
                    for (t, v) in slot[*start..*start + g.len()].iter_mut().zip(&g) {
                        *t += v;
                    }
                }
                Op::Mask(a, mask) => {
                    let slot = accumulate(&mut adjoint[*a], g.len());
                    for ((t, v), m) in slot.iter_mut().zip(&g).zip(mask) {
                        *t += v * m;
                    }
                }
                Op::CrfNll {
                    scores,
                    transitions,
                    gold,
                    nodes,
                    expected,
                } => {
                    let upstream = g[0];
                    let labels = self.nodes[scores[0]].value.len();
                    for (i, &s) in scores.iter().enumerate() {
                        let slot = accumulate(&mut adjoint[s], labels);
                        for (y, t) in slot.iter_mut().enumerate() {
                            let empirical = if gold[i] == y { 1.0 } else { 0.0 };
                            *t += upstream * (nodes[i * labels + y] - empirical);
                        }
                    }
                    let gt = &mut grads.tensors[*transitions];
                    for (t, e) in gt.iter_mut().zip(expected) {
                        *t += upstream * e;
                    }
                    let stride = labels + 1;
                    let mut prev = labels;
                    for &y in gold {
                        gt[prev * stride + y] -= upstream;
                        prev = y;
                    }
                    gt[prev * stride + labels] -= upstream;
                }
            }
        }
    }
}
