//! Reverse-mode differentiation over a small vector-valued primitive set.
//!
//! A [`Tape`] records every operation applied to its variables; calling
//! [`Tape::gradient`] on a scalar output replays the record backwards and
//! accumulates exact adjoints for every recorded variable. Control flow is
//! free: branches taken while recording simply determine which primitives
//! land on the tape, which is what the clamped segment-distance and
//! orthogonalisation routines rely on.
//!
//! Values are plain `f64` vectors; 3×3 matrices travel as row-major
//! 9-vectors.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::mlp::{Mlp, MlpTrace};

/// Handle to a recorded value. Cheap to copy; tied to one recording
/// generation of one tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var {
    index: u32,
    stamp: u32,
}

#[derive(Debug)]
enum Op {
    Input,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Div(Var, Var),
    Neg(Var),
    Scale(Var, f64),
    AddConst(Var, f64),
    Relu(Var),
    ClampMin(Var, f64),
    Clamp(Var, f64, f64),
    Max(Var, Var),
    Min(Var, Var),
    MulScalar { vec: Var, scalar: Var },
    DivScalar { vec: Var, scalar: Var },
    Dot(Var, Var),
    Sum(Var),
    Norm(Var),
    Sqrt(Var),
    Cross(Var, Var),
    MatMul3(Var, Var),
    MatVec3(Var, Var),
    Mat3FromCols(Var, Var, Var),
    Slice { src: Var, start: usize },
    Concat(Box<[Var]>),
    Affine { weights: Var, bias: Var, input: Var },
    Mlp { net: Arc<Mlp>, input: Var, trace: Box<MlpTrace> },
}

struct Node {
    op: Op,
    value: Box<[f64]>,
}

pub struct Tape {
    nodes: Vec<Node>,
    stamp: u32,
}

impl Default for Tape {
    fn default() -> Self {
        Tape::new()
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: Vec::new(),
            stamp: 0,
        }
    }

    /// Forget all recorded nodes. Handles from before the clear are
    /// rejected by [`Gradients::lookup`] and panic in arithmetic.
    pub fn clear(&mut self) {
        self.nodes.clear();
        self.stamp = self.stamp.wrapping_add(1);
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> Var {
        let index = u32::try_from(self.nodes.len()).expect("tape node count fits u32");
        self.nodes.push(Node {
            op,
            value: value.into_boxed_slice(),
        });
        Var {
            index,
            stamp: self.stamp,
        }
    }

    #[inline]
    fn check(&self, v: Var) -> usize {
        assert_eq!(v.stamp, self.stamp, "variable from a cleared tape");
        v.index as usize
    }

    /// Current value of a recorded variable.
    pub fn value(&self, v: Var) -> &[f64] {
        &self.nodes[self.check(v)].value
    }

    /// Value of a length-1 variable.
    pub fn value1(&self, v: Var) -> f64 {
        let val = self.value(v);
        debug_assert_eq!(val.len(), 1);
        val[0]
    }

    pub fn input(&mut self, value: &[f64]) -> Var {
        self.push(Op::Input, value.to_vec())
    }

    pub fn scalar(&mut self, value: f64) -> Var {
        self.push(Op::Input, vec![value])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v: Vec<f64> = zip_same(self.value(a), self.value(b), |x, y| x + y);
        self.push(Op::Add(a, b), v)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let v = zip_same(self.value(a), self.value(b), |x, y| x - y);
        self.push(Op::Sub(a, b), v)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = zip_same(self.value(a), self.value(b), |x, y| x * y);
        self.push(Op::Mul(a, b), v)
    }

    pub fn div(&mut self, a: Var, b: Var) -> Var {
        let v = zip_same(self.value(a), self.value(b), |x, y| x / y);
        self.push(Op::Div(a, b), v)
    }

    pub fn neg(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| -x).collect();
        self.push(Op::Neg(a), v)
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).iter().map(|x| c * x).collect();
        self.push(Op::Scale(a, c), v)
    }

    pub fn add_const(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).iter().map(|x| x + c).collect();
        self.push(Op::AddConst(a, c), v)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| x.max(0.0)).collect();
        self.push(Op::Relu(a), v)
    }

    pub fn clamp_min(&mut self, a: Var, lo: f64) -> Var {
        let v = self.value(a).iter().map(|x| x.max(lo)).collect();
        self.push(Op::ClampMin(a, lo), v)
    }

    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        let v = self.value(a).iter().map(|x| x.clamp(lo, hi)).collect();
        self.push(Op::Clamp(a, lo, hi), v)
    }

    pub fn max(&mut self, a: Var, b: Var) -> Var {
        let v = zip_same(self.value(a), self.value(b), f64::max);
        self.push(Op::Max(a, b), v)
    }

    pub fn min(&mut self, a: Var, b: Var) -> Var {
        let v = zip_same(self.value(a), self.value(b), f64::min);
        self.push(Op::Min(a, b), v)
    }

    /// `vec · s` where `s` is a length-1 variable.
    pub fn mul_scalar(&mut self, vec: Var, scalar: Var) -> Var {
        let s = self.value1(scalar);
        let v = self.value(vec).iter().map(|x| x * s).collect();
        self.push(Op::MulScalar { vec, scalar }, v)
    }

    pub fn div_scalar(&mut self, vec: Var, scalar: Var) -> Var {
        let s = self.value1(scalar);
        let v = self.value(vec).iter().map(|x| x / s).collect();
        self.push(Op::DivScalar { vec, scalar }, v)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let v = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x * y)
            .sum();
        self.push(Op::Dot(a, b), vec![v])
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().sum();
        self.push(Op::Sum(a), vec![v])
    }

    pub fn norm(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| x * x).sum::<f64>().sqrt();
        self.push(Op::Norm(a), vec![v])
    }

    pub fn sqrt(&mut self, a: Var) -> Var {
        let v = self.value(a).iter().map(|x| x.sqrt()).collect();
        self.push(Op::Sqrt(a), v)
    }

    /// Cross product of two 3-vectors.
    pub fn cross(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        debug_assert!(x.len() == 3 && y.len() == 3);
        let v = vec![
            x[1] * y[2] - x[2] * y[1],
            x[2] * y[0] - x[0] * y[2],
            x[0] * y[1] - x[1] * y[0],
        ];
        self.push(Op::Cross(a, b), v)
    }

    /// Product of two 3×3 matrices stored as row-major 9-vectors.
    pub fn matmul3(&mut self, a: Var, b: Var) -> Var {
        let (x, y) = (self.value(a), self.value(b));
        debug_assert!(x.len() == 9 && y.len() == 9);
        let mut v = vec![0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += x[3 * i + k] * y[3 * k + j];
                }
                v[3 * i + j] = acc;
            }
        }
        self.push(Op::MatMul3(a, b), v)
    }

    /// `m · v` for a row-major 9-vector matrix and a 3-vector.
    pub fn matvec3(&mut self, m: Var, x: Var) -> Var {
        let (mm, xx) = (self.value(m), self.value(x));
        debug_assert!(mm.len() == 9 && xx.len() == 3);
        let v = (0..3)
            .map(|i| mm[3 * i] * xx[0] + mm[3 * i + 1] * xx[1] + mm[3 * i + 2] * xx[2])
            .collect();
        self.push(Op::MatVec3(m, x), v)
    }

    /// Assemble a row-major 3×3 matrix from its three column vectors.
    pub fn mat3_from_cols(&mut self, c1: Var, c2: Var, c3: Var) -> Var {
        let (a, b, c) = (self.value(c1), self.value(c2), self.value(c3));
        let v = vec![a[0], b[0], c[0], a[1], b[1], c[1], a[2], b[2], c[2]];
        self.push(Op::Mat3FromCols(c1, c2, c3), v)
    }

    pub fn slice(&mut self, src: Var, start: usize, len: usize) -> Var {
        let v = self.value(src)[start..start + len].to_vec();
        self.push(Op::Slice { src, start }, v)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut v = Vec::new();
        for &p in parts {
            v.extend_from_slice(self.value(p));
        }
        self.push(Op::Concat(parts.into()), v)
    }

    /// `W·x + b` with `W` a row-major `out×in` flat variable.
    pub fn affine(&mut self, weights: Var, bias: Var, input: Var) -> Var {
        let (w, b, x) = (self.value(weights), self.value(bias), self.value(input));
        let rows = b.len();
        let cols = x.len();
        assert_eq!(w.len(), rows * cols, "affine weight shape");
        let v = (0..rows)
            .map(|i| {
                let row = &w[i * cols..(i + 1) * cols];
                row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b[i]
            })
            .collect();
        self.push(Op::Affine { weights, bias, input }, v)
    }

    /// Run a whole MLP as one node. Gradients flow to the input only; the
    /// network weights are treated as constants.
    pub fn apply_mlp(&mut self, net: &Arc<Mlp>, input: Var) -> Result<Var> {
        let trace = net.forward_traced(self.value(input))?;
        let value = trace.output().to_vec();
        Ok(self.push(
            Op::Mlp {
                net: Arc::clone(net),
                input,
                trace: Box::new(trace),
            },
            value,
        ))
    }

    /// Reverse sweep from a scalar output.
    ///
    /// Variables that do not influence the output keep a zero adjoint;
    /// handles from a cleared tape are reported as absent by
    /// [`Gradients::lookup`].
    pub fn gradient(&self, output: Var) -> Result<Gradients> {
        let out_idx = self.check(output);
        if self.nodes[out_idx].value.len() != 1 {
            return Err(Error::Shape {
                context: "Tape::gradient output must be scalar",
                expected: 1,
                got: self.nodes[out_idx].value.len(),
            });
        }
        let mut adj: Vec<Box<[f64]>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.len()].into_boxed_slice())
            .collect();
        adj[out_idx][0] = 1.0;
        for idx in (0..=out_idx).rev() {
            // take this node's adjoint out so parents can be written
            let g = std::mem::replace(&mut adj[idx], Box::new([]));
            if g.iter().all(|&x| x == 0.0) {
                adj[idx] = g;
                continue;
            }
            self.backprop_node(idx, &g, &mut adj);
            adj[idx] = g;
        }
        Ok(Gradients {
            adj,
            stamp: self.stamp,
        })
    }

    fn backprop_node(&self, idx: usize, g: &[f64], adj: &mut [Box<[f64]>]) {
        let node = &self.nodes[idx];
        let val = |v: Var| -> &[f64] { &self.nodes[v.index as usize].value };
        match &node.op {
            Op::Input => {}
            Op::Add(a, b) => {
                axpy(&mut adj[a.index as usize], g, 1.0);
                axpy(&mut adj[b.index as usize], g, 1.0);
            }
            Op::Sub(a, b) => {
                axpy(&mut adj[a.index as usize], g, 1.0);
                axpy(&mut adj[b.index as usize], g, -1.0);
            }
            Op::Mul(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                for (i, gi) in g.iter().enumerate() {
                    adj[a.index as usize][i] += gi * vb[i];
                    adj[b.index as usize][i] += gi * va[i];
                }
            }
            Op::Div(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                for (i, gi) in g.iter().enumerate() {
                    adj[a.index as usize][i] += gi / vb[i];
                    adj[b.index as usize][i] -= gi * va[i] / (vb[i] * vb[i]);
                }
            }
            Op::Neg(a) => axpy(&mut adj[a.index as usize], g, -1.0),
            Op::Scale(a, c) => axpy(&mut adj[a.index as usize], g, *c),
            Op::AddConst(a, _offset) => axpy(&mut adj[a.index as usize], g, 1.0),
            Op::Relu(a) => {
                let va = val(*a);
                for (i, gi) in g.iter().enumerate() {
                    if va[i] > 0.0 {
                        adj[a.index as usize][i] += gi;
                    }
                }
            }
            Op::ClampMin(a, lo) => {
                let va = val(*a);
                for (i, gi) in g.iter().enumerate() {
                    if va[i] > *lo {
                        adj[a.index as usize][i] += gi;
                    }
                }
            }
            Op::Clamp(a, lo, hi) => {
                let va = val(*a);
                for (i, gi) in g.iter().enumerate() {
                    if va[i] > *lo && va[i] < *hi {
                        adj[a.index as usize][i] += gi;
                    }
                }
            }
            Op::Max(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                for (i, gi) in g.iter().enumerate() {
                    if va[i] >= vb[i] {
                        adj[a.index as usize][i] += gi;
                    } else {
                        adj[b.index as usize][i] += gi;
                    }
                }
            }
            Op::Min(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                for (i, gi) in g.iter().enumerate() {
                    if va[i] <= vb[i] {
                        adj[a.index as usize][i] += gi;
                    } else {
                        adj[b.index as usize][i] += gi;
                    }
                }
            }
            Op::MulScalar { vec, scalar } => {
                let (vv, s) = (val(*vec), val(*scalar)[0]);
                let mut sdot = 0.0;
                for (i, gi) in g.iter().enumerate() {
                    adj[vec.index as usize][i] += gi * s;
                    sdot += gi * vv[i];
                }
                adj[scalar.index as usize][0] += sdot;
            }
            Op::DivScalar { vec, scalar } => {
                let (vv, s) = (val(*vec), val(*scalar)[0]);
                let mut sdot = 0.0;
                for (i, gi) in g.iter().enumerate() {
                    adj[vec.index as usize][i] += gi / s;
                    sdot += gi * vv[i];
                }
                adj[scalar.index as usize][0] -= sdot / (s * s);
            }
            Op::Dot(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                let g0 = g[0];
                for i in 0..va.len() {
                    adj[a.index as usize][i] += g0 * vb[i];
                    adj[b.index as usize][i] += g0 * va[i];
                }
            }
            Op::Sum(a) => {
                let g0 = g[0];
                for x in adj[a.index as usize].iter_mut() {
                    *x += g0;
                }
            }
            Op::Norm(a) => {
                let va = val(*a);
                let n = node.value[0];
                if n > 1e-300 {
                    let c = g[0] / n;
                    for (i, x) in va.iter().enumerate() {
                        adj[a.index as usize][i] += c * x;
                    }
                }
            }
            Op::Sqrt(a) => {
                for (i, gi) in g.iter().enumerate() {
                    let y = node.value[i];
                    if y > 1e-300 {
                        adj[a.index as usize][i] += gi / (2.0 * y);
                    }
                }
            }
            Op::Cross(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                // ∂(a×b): ā += b×g, b̄ += g×a
                let bg = cross3(vb, g);
                let ga = cross3(g, va);
                for i in 0..3 {
                    adj[a.index as usize][i] += bg[i];
                    adj[b.index as usize][i] += ga[i];
                }
            }
            Op::MatMul3(a, b) => {
                let (va, vb) = (val(*a), val(*b));
                // Ā += G·Bᵀ, B̄ += Aᵀ·G
                for i in 0..3 {
                    for j in 0..3 {
                        let gij = g[3 * i + j];
                        if gij == 0.0 {
                            continue;
                        }
                        for k in 0..3 {
                            adj[a.index as usize][3 * i + k] += gij * vb[3 * k + j];
                            adj[b.index as usize][3 * k + j] += va[3 * i + k] * gij;
                        }
                    }
                }
            }
            Op::MatVec3(m, x) => {
                let (vm, vx) = (val(*m), val(*x));
                for i in 0..3 {
                    let gi = g[i];
                    for j in 0..3 {
                        adj[m.index as usize][3 * i + j] += gi * vx[j];
                        adj[x.index as usize][j] += vm[3 * i + j] * gi;
                    }
                }
            }
            Op::Mat3FromCols(c1, c2, c3) => {
                for (col, v) in [c1, c2, c3].into_iter().enumerate() {
                    for row in 0..3 {
                        adj[v.index as usize][row] += g[3 * row + col];
                    }
                }
            }
            Op::Slice { src, start } => {
                let dst = &mut adj[src.index as usize];
                for (i, gi) in g.iter().enumerate() {
                    dst[start + i] += gi;
                }
            }
            Op::Concat(parts) => {
                let mut off = 0;
                for &p in parts.iter() {
                    let len = self.nodes[p.index as usize].value.len();
                    let dst = &mut adj[p.index as usize];
                    for i in 0..len {
                        dst[i] += g[off + i];
                    }
                    off += len;
                }
            }
            Op::Affine { weights, bias, input } => {
                let (vw, vx) = (val(*weights), val(*input));
                let rows = g.len();
                let cols = vx.len();
                for i in 0..rows {
                    let gi = g[i];
                    adj[bias.index as usize][i] += gi;
                    if gi == 0.0 {
                        continue;
                    }
                    for j in 0..cols {
                        adj[weights.index as usize][i * cols + j] += gi * vx[j];
                        adj[input.index as usize][j] += vw[i * cols + j] * gi;
                    }
                }
            }
            Op::Mlp { net, input, trace } => {
                let dx = net.backward_input(trace, g);
                axpy(&mut adj[input.index as usize], &dx, 1.0);
            }
        }
    }
}

#[inline]
fn axpy(dst: &mut [f64], src: &[f64], c: f64) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += c * s;
    }
}

fn cross3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn zip_same(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "elementwise operands must match");
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

/// Adjoints produced by [`Tape::gradient`].
pub struct Gradients {
    adj: Vec<Box<[f64]>>,
    stamp: u32,
}

impl Gradients {
    /// Gradient of the swept output with respect to `v`.
    ///
    /// Returns `None` — the "not on this tape" flag — for handles minted
    /// before the last [`Tape::clear`]; callers treat that as a zero
    /// gradient. Recorded variables that simply do not influence the
    /// output return genuine zeros.
    pub fn lookup(&self, v: Var) -> Option<&[f64]> {
        if v.stamp != self.stamp {
            return None;
        }
        self.adj.get(v.index as usize).map(|b| &**b)
    }

    /// Like [`Gradients::lookup`] but panics on stale handles.
    pub fn of(&self, v: Var) -> &[f64] {
        self.lookup(v).expect("variable from a cleared tape")
    }
}
