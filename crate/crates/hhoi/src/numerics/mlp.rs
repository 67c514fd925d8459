//! Dense layers and multi-layer perceptrons.
//!
//! Layers hold an `out×in` weight matrix, a bias and an activation. Batched
//! forward/backward passes are expressed as GEMMs so training stays fast;
//! the tape in [`crate::numerics::tape`] provides the same math one sample
//! at a time for composition inside guidance losses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::linalg::{gemm, gemm_tn, Matrix};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative evaluated at the pre-activation value.
    #[inline]
    fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// A dense affine layer `y = activation(W·x + b)` with `W: out×in`.
#[derive(Debug, Clone)]
pub struct DenseLayer {
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Matrix, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if weights.rows() != bias.len() {
            return Err(Error::Shape {
                context: "DenseLayer::new bias",
                expected: weights.rows(),
                got: bias.len(),
            });
        }
        Ok(DenseLayer {
            weights,
            bias,
            activation,
        })
    }

    /// He-uniform initialization, the usual choice for ReLU stacks.
    pub fn init(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut Rng) -> Self {
        let bound = (6.0 / in_dim as f64).sqrt();
        let data: Vec<f64> = (0..in_dim * out_dim)
            .map(|_| rng.uniform_in(-bound, bound))
            .collect();
        DenseLayer {
            weights: Matrix::from_vec(out_dim, in_dim, data).expect("sized above"),
            bias: vec![0.0; out_dim],
            activation,
        }
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim() {
            return Err(Error::Shape {
                context: "DenseLayer::forward",
                expected: self.in_dim(),
                got: x.len(),
            });
        }
        let mut y = self.weights.matvec(x);
        for (v, b) in y.iter_mut().zip(&self.bias) {
            *v = self.activation.apply(*v + b);
        }
        Ok(y)
    }

    pub fn param_count(&self) -> usize {
        self.weights.rows() * self.weights.cols() + self.bias.len()
    }
}

/// Evaluate a layer stack on one input vector.
pub fn mlp_forward(layers: &[DenseLayer], input: &[f64]) -> Result<Vec<f64>> {
    let mut x = input.to_vec();
    for layer in layers {
        x = layer.forward(&x)?;
    }
    Ok(x)
}

/// A stack of dense layers.
#[derive(Debug, Clone)]
pub struct Mlp {
    layers: Vec<DenseLayer>,
}

/// Per-layer records kept by [`Mlp::forward_batch`] for the backward pass.
pub struct MlpActivations {
    /// `inputs[l]` is the batch input to layer `l`; `inputs[L]` is the output.
    pub inputs: Vec<Matrix>,
    /// Pre-activation values per layer.
    pub pre: Vec<Matrix>,
}

/// Parameter gradients in [`Mlp::flatten_params`] order.
pub struct MlpGradients {
    pub weights: Vec<Matrix>,
    pub bias: Vec<Vec<f64>>,
}

/// Single-sample forward record (see [`Mlp::forward_traced`]).
#[derive(Debug, Clone)]
pub struct MlpTrace {
    pub inputs: Vec<Vec<f64>>,
    pub pre: Vec<Vec<f64>>,
}

impl MlpTrace {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().expect("trace holds the output")
    }
}

impl Mlp {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        for pair in layers.windows(2) {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::Shape {
                    context: "Mlp::new layer chain",
                    expected: pair[0].out_dim(),
                    got: pair[1].in_dim(),
                });
            }
        }
        Ok(Mlp { layers })
    }

    /// Build `dims[0] → dims[1] → …` with ReLU on hidden layers and an
    /// identity output layer.
    pub fn init(dims: &[usize], rng: &mut Rng) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least one layer");
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(i, d)| {
                let act = if i + 2 == dims.len() {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                DenseLayer::init(d[0], d[1], act, rng)
            })
            .collect();
        Mlp { layers }
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, DenseLayer::in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::out_dim)
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        mlp_forward(&self.layers, x)
    }

    /// Batched forward pass; rows of `x` are samples.
    pub fn forward_batch(&self, x: &Matrix, threads: usize) -> MlpActivations {
        assert_eq!(x.cols(), self.in_dim(), "forward_batch input width");
        let batch = x.rows();
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        inputs.push(x.clone());
        for layer in &self.layers {
            let cur = inputs.last().expect("seeded with x");
            // z = cur · Wᵀ + b
            let wt = layer.weights.transpose();
            let mut z = Matrix::zeros(batch, layer.out_dim());
            gemm(cur, &wt, &mut z, threads);
            for i in 0..batch {
                let row = z.row_mut(i);
                for (v, b) in row.iter_mut().zip(&layer.bias) {
                    *v += b;
                }
            }
            let mut out = z.clone();
            for v in out.data_mut() {
                *v = layer.activation.apply(*v);
            }
            pre.push(z);
            inputs.push(out);
        }
        MlpActivations { inputs, pre }
    }

    pub fn output_of(acts: &MlpActivations) -> &Matrix {
        acts.inputs.last().expect("forward_batch pushes output")
    }

    /// Batched backward pass.
    ///
    /// `dy` is ∂loss/∂output (same shape as the output batch). Returns the
    /// input gradient and per-layer parameter gradients.
    pub fn backward_batch(
        &self,
        acts: &MlpActivations,
        dy: &Matrix,
        threads: usize,
    ) -> (Matrix, MlpGradients) {
        let batch = dy.rows();
        let mut delta = dy.clone();
        let mut weights = vec![Matrix::zeros(0, 0); self.layers.len()];
        let mut bias = vec![Vec::new(); self.layers.len()];
        for (l, layer) in self.layers.iter().enumerate().rev() {
            // through the activation
            let pre = &acts.pre[l];
            for i in 0..batch {
                let drow = delta.row_mut(i);
                let prow = pre.row(i);
                for (d, p) in drow.iter_mut().zip(prow) {
                    *d *= layer.activation.derivative(*p);
                }
            }
            // dW = deltaᵀ · input  (out×in), db = column sums of delta
            let mut dw = Matrix::zeros(layer.out_dim(), layer.in_dim());
            gemm_tn(&delta, &acts.inputs[l], &mut dw, threads);
            let mut db = vec![0.0; layer.out_dim()];
            for i in 0..batch {
                for (acc, d) in db.iter_mut().zip(delta.row(i)) {
                    *acc += d;
                }
            }
            // dx = delta · W
            let mut dx = Matrix::zeros(batch, layer.in_dim());
            gemm(&delta, &layer.weights, &mut dx, threads);
            weights[l] = dw;
            bias[l] = db;
            delta = dx;
        }
        (delta, MlpGradients { weights, bias })
    }

    /// Single-sample forward pass keeping the per-layer values needed to
    /// backpropagate later. Used by the tape's MLP primitive.
    pub fn forward_traced(&self, x: &[f64]) -> Result<MlpTrace> {
        let mut inputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        inputs.push(x.to_vec());
        for layer in &self.layers {
            let cur = inputs.last().expect("seeded with x");
            if cur.len() != layer.in_dim() {
                return Err(Error::Shape {
                    context: "Mlp::forward_traced",
                    expected: layer.in_dim(),
                    got: cur.len(),
                });
            }
            let mut z = layer.weights.matvec(cur);
            for (v, b) in z.iter_mut().zip(&layer.bias) {
                *v += b;
            }
            let out = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(z);
            inputs.push(out);
        }
        Ok(MlpTrace { inputs, pre })
    }

    /// ∂(dy·output)/∂input for a traced single-sample pass.
    pub fn backward_input(&self, trace: &MlpTrace, dy: &[f64]) -> Vec<f64> {
        let mut delta = dy.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            for (d, p) in delta.iter_mut().zip(&trace.pre[l]) {
                *d *= layer.activation.derivative(*p);
            }
            delta = layer.weights.matvec_t(&delta);
        }
        delta
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }

    /// Append all parameters (weights row-major, then bias, per layer).
    pub fn flatten_params(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            out.extend_from_slice(layer.weights.data());
            out.extend_from_slice(&layer.bias);
        }
    }

    /// Inverse of [`Mlp::flatten_params`]; returns the slice consumed.
    pub fn unflatten_params(&mut self, data: &[f64]) -> usize {
        let mut off = 0;
        for layer in &mut self.layers {
            let w = layer.weights.data_mut();
            w.copy_from_slice(&data[off..off + w.len()]);
            off += w.len();
            let blen = layer.bias.len();
            layer.bias.copy_from_slice(&data[off..off + blen]);
            off += blen;
        }
        off
    }
}

impl MlpGradients {
    pub fn flatten(&self, out: &mut Vec<f64>) {
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w.data());
            out.extend_from_slice(b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layer(weights: &[Vec<f64>], bias: &[f64], act: Activation) -> DenseLayer {
        DenseLayer::new(Matrix::from_rows(weights).unwrap(), bias.to_vec(), act).unwrap()
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let l = layer(
            &[vec![1.0, 0.0], vec![0.0, 1.0]],
            &[0.0, 0.0],
            Activation::Identity,
        );
        assert_eq!(mlp_forward(&[l], &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn zero_net_maps_anything_to_zero() {
        let l1 = layer(
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
            &[0.0, 0.0],
            Activation::Relu,
        );
        let l2 = layer(&[vec![0.0, 0.0]], &[0.0], Activation::Identity);
        assert_eq!(
            mlp_forward(&[l1, l2], &[3.5, -2.0]).unwrap(),
            vec![0.0]
        );
    }

    #[test]
    fn two_layer_relu_matches_hand_evaluation() {
        // straight-line evaluation done by hand:
        //   h = relu(W1·(1,-1) + b1), W1 = [[1,2],[3,4]], b1 = (0.5, -0.5)
        //     = relu((1-2+0.5, 3-4-0.5)) = relu((-0.5, -1.5)) = (0, 0)
        //   y = W2·h + b2, W2 = [[1,-1]], b2 = (0.25,) → 0.25
        let l1 = layer(
            &[vec![1.0, 2.0], vec![3.0, 4.0]],
            &[0.5, -0.5],
            Activation::Relu,
        );
        let l2 = layer(&[vec![1.0, -1.0]], &[0.25], Activation::Identity);
        assert_eq!(mlp_forward(&[l1, l2], &[1.0, -1.0]).unwrap(), vec![0.25]);

        // a second input that activates the hidden units:
        //   h = relu((1+2+0.5, 3+4-0.5)) = (3.5, 6.5); y = 3.5-6.5+0.25 = -2.75
        let l1 = layer(
            &[vec![1.0, 2.0], vec![3.0, 4.0]],
            &[0.5, -0.5],
            Activation::Relu,
        );
        let l2 = layer(&[vec![1.0, -1.0]], &[0.25], Activation::Identity);
        assert_eq!(mlp_forward(&[l1, l2], &[1.0, 1.0]).unwrap(), vec![-2.75]);
    }

    #[test]
    fn forward_is_deterministic() {
        let mut rng = Rng::seed_from(5);
        let net = Mlp::init(&[4, 8, 3], &mut rng);
        let x = [0.3, -0.1, 2.0, 0.7];
        let a = net.forward(&x).unwrap();
        let b = net.forward(&x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dimension_mismatch_is_a_shape_error() {
        let l = layer(&[vec![1.0, 0.0]], &[0.0], Activation::Identity);
        let err = mlp_forward(&[l], &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, Error::Shape { .. }));
    }

    #[test]
    fn batch_forward_matches_single() {
        let mut rng = Rng::seed_from(6);
        let net = Mlp::init(&[5, 16, 7, 2], &mut rng);
        let rows: Vec<Vec<f64>> = (0..9).map(|_| rng.normal_vec(5)).collect();
        let batch = Matrix::from_rows(&rows).unwrap();
        let acts = net.forward_batch(&batch, 1);
        let out = Mlp::output_of(&acts);
        for (i, row) in rows.iter().enumerate() {
            let single = net.forward(row).unwrap();
            for (a, b) in out.row(i).iter().zip(&single) {
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn batch_backward_matches_finite_differences() {
        let mut rng = Rng::seed_from(7);
        let mut net = Mlp::init(&[3, 6, 2], &mut rng);
        let rows: Vec<Vec<f64>> = (0..4).map(|_| rng.normal_vec(3)).collect();
        let batch = Matrix::from_rows(&rows).unwrap();

        // loss = 0.5 Σ y²  → dy = y
        let loss = |net: &Mlp| {
            let acts = net.forward_batch(&batch, 1);
            Mlp::output_of(&acts)
                .data()
                .iter()
                .map(|v| 0.5 * v * v)
                .sum::<f64>()
        };

        let acts = net.forward_batch(&batch, 1);
        let dy = Mlp::output_of(&acts).clone();
        let (_, grads) = net.backward_batch(&acts, &dy, 1);
        let mut flat_grads = Vec::new();
        grads.flatten(&mut flat_grads);

        let mut params = Vec::new();
        net.flatten_params(&mut params);
        let h = 1e-6;
        for k in (0..params.len()).step_by(7) {
            let orig = params[k];
            params[k] = orig + h;
            net.unflatten_params(&params);
            let up = loss(&net);
            params[k] = orig - h;
            net.unflatten_params(&params);
            let down = loss(&net);
            params[k] = orig;
            net.unflatten_params(&params);
            let fd = (up - down) / (2.0 * h);
            let ad = flat_grads[k];
            assert!(
                (fd - ad).abs() <= 1e-6 * (1.0 + fd.abs()),
                "param {k}: fd {fd} vs ad {ad}"
            );
        }
    }
}
