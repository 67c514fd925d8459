//! Denoising-score-matching training.
//!
//! Per batch element: draw `t ~ U(ε, 1)`, perturb `φ_t = φ + σ(t)·η`, and
//! regress the σ-scaled network output onto `−η`. That objective equals
//! the variance-weighted DSM loss `λ_t‖Ψ − (φ−φ_t)/σ²‖²` with
//! `λ_t = σ(t)²`, reported per coordinate so an untrained (zero) network
//! sits at a loss of 1.

use crate::diffusion::score_net::time_feature_vec;
use crate::diffusion::{ConditionEmbedding, ScoreNet, ScoreNetConfig};
use crate::error::{Error, Result};
use crate::numerics::linalg::Matrix;
use crate::numerics::{AdamConfig, AdamState};
use crate::rng::Rng;

/// One training example: a clean sample vector plus one or more candidate
/// condition embeddings (paraphrase augmentation picks one per visit).
#[derive(Debug, Clone)]
pub struct ScoreExample {
    pub sample: Vec<f64>,
    pub conds: Vec<ConditionEmbedding>,
}

impl ScoreExample {
    pub fn new(sample: Vec<f64>, cond: ConditionEmbedding) -> Self {
        ScoreExample {
            sample,
            conds: vec![cond],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScoreTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for ScoreTrainConfig {
    fn default() -> Self {
        ScoreTrainConfig {
            epochs: 20_000,
            batch_size: 500,
            seed: 0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScoreEpochReport {
    pub epoch: usize,
    pub loss: f64,
    pub learning_rate: f64,
}

/// Loss contribution and parameter gradients of a row block, normalized
/// by the full batch's `norm` so the blocks sum to the batch result.
fn half_loss_grads(
    net: &ScoreNet,
    phi_t: &Matrix,
    time_feats: &Matrix,
    cond: &Matrix,
    neg_eta: &Matrix,
    norm: f64,
) -> (f64, Vec<f64>) {
    let acts = net.forward_batch(phi_t, time_feats, cond, 1);
    let (rows, dim) = (phi_t.rows(), phi_t.cols());
    let mut loss = 0.0;
    let mut d_out = Matrix::zeros(rows, dim);
    for i in 0..rows {
        for j in 0..dim {
            let r = acts.output.get(i, j) - neg_eta.get(i, j);
            loss += r * r / norm;
            d_out.set(i, j, 2.0 * r / norm);
        }
    }
    let grads = net.backward_batch(&acts, &d_out, 1);
    (loss, grads)
}

/// Train one score network on `(sample, condition)` examples.
pub fn train_score(
    examples: &[ScoreExample],
    net_config: ScoreNetConfig,
    config: &ScoreTrainConfig,
) -> Result<(ScoreNet, Vec<ScoreEpochReport>)> {
    if examples.is_empty() {
        return Err(Error::validation("train_score needs a non-empty dataset"));
    }
    let dim = net_config.sample_dim();
    for (i, ex) in examples.iter().enumerate() {
        if ex.sample.len() != dim {
            return Err(Error::Shape {
                context: "train_score example",
                expected: dim,
                got: ex.sample.len(),
            });
        }
        if ex.conds.is_empty() {
            return Err(Error::validation(format!(
                "example {i} has no condition embedding"
            )));
        }
        for c in &ex.conds {
            if c.dim() != net_config.cond_dim {
                return Err(Error::Shape {
                    context: "train_score condition",
                    expected: net_config.cond_dim,
                    got: c.dim(),
                });
            }
        }
    }

    let mut rng = Rng::seed_from(config.seed);
    let mut net = ScoreNet::init(net_config, &mut rng);
    let sched = *net.schedule();
    let mut params = net.params_flat();
    let mut adam = AdamState::new(params.len(), AdamConfig::default());

    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut reports = Vec::with_capacity(config.epochs);
    let frequencies = net.config().fourier_frequencies;

    for epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let b = chunk.len();
            let mut phi_t = Matrix::zeros(b, dim);
            let mut neg_eta = Matrix::zeros(b, dim);
            let mut time_feats = Matrix::zeros(b, 2 * frequencies);
            let mut cond = Matrix::zeros(b, net.config().cond_dim);
            for (row, &idx) in chunk.iter().enumerate() {
                let ex = &examples[idx];
                let t = rng.uniform_in(sched.epsilon, 1.0);
                let sigma = sched.sigma(t)?;
                for (j, x) in ex.sample.iter().enumerate() {
                    let eta = rng.normal();
                    phi_t.set(row, j, x + sigma * eta);
                    neg_eta.set(row, j, -eta);
                }
                time_feats
                    .row_mut(row)
                    .copy_from_slice(&time_feature_vec(t, frequencies));
                let pick = if ex.conds.len() == 1 {
                    0
                } else {
                    rng.index(ex.conds.len())
                };
                cond.row_mut(row).copy_from_slice(&ex.conds[pick].0);
            }

            let norm = (b * dim) as f64;
            // batch-split data parallelism: each worker runs the full
            // forward/backward on half the rows; halves are reduced in a
            // fixed order, so the result is deterministic per thread count
            let (loss, grads) = if config.threads >= 2 && b >= 64 {
                let mid = b / 2;
                let lo = |m: &Matrix| m.rows_slice(0..mid);
                let hi = |m: &Matrix| m.rows_slice(mid..b);
                let (first, second) = std::thread::scope(|scope| {
                    let handle = scope.spawn(|| {
                        half_loss_grads(&net, &lo(&phi_t), &lo(&time_feats), &lo(&cond), &lo(&neg_eta), norm)
                    });
                    let second =
                        half_loss_grads(&net, &hi(&phi_t), &hi(&time_feats), &hi(&cond), &hi(&neg_eta), norm);
                    (handle.join().expect("training worker panicked"), second)
                });
                let (l1, mut g1) = first;
                let (l2, g2) = second;
                for (a, b) in g1.iter_mut().zip(&g2) {
                    *a += b;
                }
                (l1 + l2, g1)
            } else {
                half_loss_grads(&net, &phi_t, &time_feats, &cond, &neg_eta, norm)
            };
            if !loss.is_finite() {
                return Err(Error::NonFiniteTraining { epoch, step });
            }
            adam.step(&mut params, &grads).map_err(|e| match e {
                Error::NonFiniteTraining { .. } => Error::NonFiniteTraining { epoch, step },
                other => other,
            })?;
            net.set_params_flat(&params);
            epoch_loss += loss;
            batches += 1;
        }
        reports.push(ScoreEpochReport {
            epoch,
            loss: epoch_loss / batches.max(1) as f64,
            learning_rate: adam.learning_rate(),
        });
    }
    Ok((net, reports))
}
