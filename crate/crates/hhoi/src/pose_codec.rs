//! The body-pose embedding: a 126D→10D encoder and 10D→126D decoder pair
//! trained by reconstruction.
//!
//! Downstream components never diffuse raw 126D poses; they operate on the
//! 10D latent this codec provides, so everything here is sized and seeded
//! for reproducibility. Encoder and decoder are 4-layer MLPs
//! (126→256→256→64→10 and 10→64→256→256→126) with ReLU hidden layers.
//! The training loss is mean squared error over the 126 pose values plus a
//! small `1e-4 · ‖embedding‖²` regularizer that keeps the latent scale
//! comparable to the unit-scale components it is diffused alongside.

use std::path::Path;
use std::sync::Arc;

use crate::checkpoint::{Checkpoint, CheckpointWriter};
use crate::error::{Error, Result};
use crate::numerics::linalg::Matrix;
use crate::numerics::{AdamConfig, AdamState, Mlp};
use crate::rng::Rng;
use crate::skeleton::{BodyPose, POSE_DIM};

pub const EMBEDDING_DIM: usize = 10;
pub const LATENT_REGULARIZER: f64 = 1e-4;

const ENCODER_DIMS: [usize; 5] = [POSE_DIM, 256, 256, 64, EMBEDDING_DIM];
const DECODER_DIMS: [usize; 5] = [EMBEDDING_DIM, 64, 256, 256, POSE_DIM];

/// A 10-dimensional pose latent.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PoseEmbedding(pub [f64; EMBEDDING_DIM]);

impl PoseEmbedding {
    pub fn from_slice(s: &[f64]) -> Self {
        let mut v = [0.0; EMBEDDING_DIM];
        v.copy_from_slice(&s[..EMBEDDING_DIM]);
        PoseEmbedding(v)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

/// Encoder/decoder parameter pair.
#[derive(Debug, Clone)]
pub struct CodecParams {
    encoder: Arc<Mlp>,
    decoder: Arc<Mlp>,
}

impl CodecParams {
    pub fn new(encoder: Mlp, decoder: Mlp) -> Result<Self> {
        let check = |net: &Mlp, dims: &[usize], what: &str| -> Result<()> {
            let got: Vec<usize> = std::iter::once(net.in_dim())
                .chain(net.layers().iter().map(|l| l.out_dim()))
                .collect();
            if got != dims {
                return Err(Error::validation(format!(
                    "{what} layer shapes {got:?} do not match the declared {dims:?}"
                )));
            }
            Ok(())
        };
        check(&encoder, &ENCODER_DIMS, "encoder")?;
        check(&decoder, &DECODER_DIMS, "decoder")?;
        Ok(CodecParams {
            encoder: Arc::new(encoder),
            decoder: Arc::new(decoder),
        })
    }

    pub fn init(rng: &mut Rng) -> Self {
        CodecParams {
            encoder: Arc::new(Mlp::init(&ENCODER_DIMS, rng)),
            decoder: Arc::new(Mlp::init(&DECODER_DIMS, rng)),
        }
    }

    pub fn encoder(&self) -> &Arc<Mlp> {
        &self.encoder
    }

    pub fn decoder(&self) -> &Arc<Mlp> {
        &self.decoder
    }

    /// Deterministic 126D → 10D embedding.
    pub fn encode(&self, pose: &BodyPose) -> PoseEmbedding {
        let out = self
            .encoder
            .forward(&pose.to_flat())
            .expect("codec dims are fixed");
        PoseEmbedding::from_slice(&out)
    }

    pub fn encode_flat(&self, pose126: &[f64]) -> Result<PoseEmbedding> {
        if pose126.len() != POSE_DIM {
            return Err(Error::Shape {
                context: "CodecParams::encode_flat",
                expected: POSE_DIM,
                got: pose126.len(),
            });
        }
        Ok(PoseEmbedding::from_slice(&self.encoder.forward(pose126)?))
    }

    /// 10D → 126 raw values, reinterpreted as 21 6D rotations.
    ///
    /// Degenerate 6D blocks are *not* repaired here; samplers regularize
    /// them at the point of use.
    pub fn decode(&self, emb: &PoseEmbedding) -> BodyPose {
        let flat = self.decode_flat(emb);
        BodyPose::from_flat(&flat).expect("decoder emits exactly 126 values")
    }

    pub fn decode_flat(&self, emb: &PoseEmbedding) -> Vec<f64> {
        self.decoder.forward(&emb.0).expect("codec dims are fixed")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.save_with_meta(path, &[])
    }

    /// Save with extra metadata entries (e.g. the resolved run config).
    pub fn save_with_meta(
        &self,
        path: impl AsRef<Path>,
        extra: &[(&str, serde_json::Value)],
    ) -> Result<()> {
        let mut w = CheckpointWriter::new();
        w.set_meta("kind", "pose_codec")?;
        w.set_meta("embedding_dim", EMBEDDING_DIM)?;
        w.set_meta("pose_dim", POSE_DIM)?;
        for (key, value) in extra {
            w.set_meta(key, value)?;
        }
        write_mlp(&mut w, "encoder", &self.encoder)?;
        write_mlp(&mut w, "decoder", &self.decoder)?;
        w.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let ck = Checkpoint::load(path)?;
        let kind: String = ck.meta_value("kind")?;
        if kind != "pose_codec" {
            return Err(Error::Checkpoint(format!(
                "expected a pose_codec checkpoint, found kind {kind:?}"
            )));
        }
        CodecParams::new(
            read_mlp(&ck, "encoder", &ENCODER_DIMS)?,
            read_mlp(&ck, "decoder", &DECODER_DIMS)?,
        )
    }

    fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.encoder.flatten_params(&mut out);
        self.decoder.flatten_params(&mut out);
        out
    }

    fn set_params_flat(&mut self, flat: &[f64]) {
        let enc = Arc::make_mut(&mut self.encoder);
        let used = enc.unflatten_params(flat);
        let dec = Arc::make_mut(&mut self.decoder);
        dec.unflatten_params(&flat[used..]);
    }
}

pub(crate) fn write_mlp(w: &mut CheckpointWriter, prefix: &str, net: &Mlp) -> Result<()> {
    for (i, layer) in net.layers().iter().enumerate() {
        w.add_tensor(
            &format!("{prefix}.{i}.weight"),
            &[layer.out_dim(), layer.in_dim()],
            layer.weights.data(),
        )?;
        w.add_tensor(&format!("{prefix}.{i}.bias"), &[layer.out_dim()], &layer.bias)?;
    }
    Ok(())
}

pub(crate) fn read_mlp(ck: &Checkpoint, prefix: &str, dims: &[usize]) -> Result<Mlp> {
    use crate::numerics::{Activation, DenseLayer};
    let mut layers = Vec::new();
    for i in 0..dims.len() - 1 {
        let (wshape, wdata) = ck.tensor(&format!("{prefix}.{i}.weight"))?;
        if wshape != [dims[i + 1], dims[i]] {
            return Err(Error::Checkpoint(format!(
                "{prefix}.{i}.weight has shape {wshape:?}, expected [{}, {}]",
                dims[i + 1],
                dims[i]
            )));
        }
        let (_, bdata) = ck.tensor(&format!("{prefix}.{i}.bias"))?;
        let act = if i + 2 == dims.len() {
            Activation::Identity
        } else {
            Activation::Relu
        };
        layers.push(DenseLayer::new(
            Matrix::from_vec(dims[i + 1], dims[i], wdata)?,
            bdata,
            act,
        )?);
    }
    Mlp::new(layers)
}

#[derive(Debug, Clone, Copy)]
pub struct CodecTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Fraction of the input poses held out for the per-epoch report.
    pub holdout_fraction: f64,
    pub seed: u64,
    pub threads: usize,
}

impl Default for CodecTrainConfig {
    fn default() -> Self {
        CodecTrainConfig {
            epochs: 300,
            batch_size: 500,
            holdout_fraction: 0.1,
            seed: 0,
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CodecEpochReport {
    pub epoch: usize,
    pub train_loss: f64,
    pub holdout_loss: f64,
    pub learning_rate: f64,
}

/// Train the codec by reconstruction.
///
/// Needs at least 1000 poses. Returns the trained parameters and one
/// report per epoch (training loss is the running mean over the epoch's
/// batches; the held-out loss is evaluated after the epoch).
pub fn train_codec(
    poses: &[BodyPose],
    config: &CodecTrainConfig,
) -> Result<(CodecParams, Vec<CodecEpochReport>)> {
    if poses.len() < 1000 {
        return Err(Error::validation(format!(
            "train_codec needs at least 1000 poses, got {}",
            poses.len()
        )));
    }
    let mut rng = Rng::seed_from(config.seed);
    let mut codec = CodecParams::init(&mut rng);

    let flat: Vec<Vec<f64>> = poses.iter().map(BodyPose::to_flat).collect();
    let mut indices: Vec<usize> = (0..poses.len()).collect();
    rng.shuffle(&mut indices);
    let holdout_len = ((poses.len() as f64) * config.holdout_fraction).round() as usize;
    let (holdout_idx, train_idx) = indices.split_at(holdout_len);
    let holdout_idx = holdout_idx.to_vec();
    let mut train_idx = train_idx.to_vec();

    let mut params = codec.params_flat();
    let mut adam = AdamState::new(params.len(), AdamConfig::default());
    let mut reports = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        rng.shuffle(&mut train_idx);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (step_in_epoch, chunk) in train_idx.chunks(config.batch_size).enumerate() {
            let x = Matrix::from_rows(&chunk.iter().map(|&i| flat[i].clone()).collect::<Vec<_>>())?;
            // batch-split data parallelism with a fixed reduction order
            let (loss, grads) = if config.threads >= 2 && x.rows() >= 64 {
                let mid = x.rows() / 2;
                let batch = x.rows() as f64;
                let (first, second) = std::thread::scope(|scope| {
                    let handle =
                        scope.spawn(|| codec_loss_and_grads(&codec, &x.rows_slice(0..mid), batch));
                    let second = codec_loss_and_grads(&codec, &x.rows_slice(mid..x.rows()), batch);
                    (handle.join().expect("codec worker panicked"), second)
                });
                let (l1, mut g1) = first;
                let (l2, g2) = second;
                for (a, b) in g1.iter_mut().zip(&g2) {
                    *a += b;
                }
                (l1 + l2, g1)
            } else {
                codec_loss_and_grads(&codec, &x, x.rows() as f64)
            };
            if !loss.is_finite() {
                return Err(Error::NonFiniteTraining {
                    epoch,
                    step: step_in_epoch,
                });
            }
            epoch_loss += loss;
            batches += 1;
            adam.step(&mut params, &grads).map_err(|e| match e {
                Error::NonFiniteTraining { step, .. } => Error::NonFiniteTraining { epoch, step },
                other => other,
            })?;
            codec.set_params_flat(&params);
        }
        let holdout_loss = if holdout_idx.is_empty() {
            f64::NAN
        } else {
            let x = Matrix::from_rows(
                &holdout_idx
                    .iter()
                    .map(|&i| flat[i].clone())
                    .collect::<Vec<_>>(),
            )?;
            codec_loss(&codec, &x, config.threads)
        };
        reports.push(CodecEpochReport {
            epoch,
            train_loss: epoch_loss / batches.max(1) as f64,
            holdout_loss,
            learning_rate: adam.learning_rate(),
        });
    }
    Ok((codec, reports))
}

/// Loss only (used for held-out evaluation).
fn codec_loss(codec: &CodecParams, x: &Matrix, threads: usize) -> f64 {
    let enc_acts = codec.encoder.forward_batch(x, threads);
    let z = Mlp::output_of(&enc_acts);
    let dec_acts = codec.decoder.forward_batch(z, threads);
    let recon = Mlp::output_of(&dec_acts);
    let batch = x.rows() as f64;
    let mse: f64 = recon
        .data()
        .iter()
        .zip(x.data())
        .map(|(r, t)| (r - t) * (r - t))
        .sum::<f64>()
        / (batch * POSE_DIM as f64);
    let reg: f64 = z.data().iter().map(|v| v * v).sum::<f64>() / batch;
    mse + LATENT_REGULARIZER * reg
}

/// Loss contribution and gradients of a row block; `batch` is the full
/// batch size so blocks sum exactly to the whole-batch result.
fn codec_loss_and_grads(codec: &CodecParams, x: &Matrix, batch: f64) -> (f64, Vec<f64>) {
    let enc_acts = codec.encoder.forward_batch(x, 1);
    let z = Mlp::output_of(&enc_acts).clone();
    let dec_acts = codec.decoder.forward_batch(&z, 1);
    let recon = Mlp::output_of(&dec_acts);

    let mse: f64 = recon
        .data()
        .iter()
        .zip(x.data())
        .map(|(r, t)| (r - t) * (r - t))
        .sum::<f64>()
        / (batch * POSE_DIM as f64);
    let reg: f64 = z.data().iter().map(|v| v * v).sum::<f64>() / batch;
    let loss = mse + LATENT_REGULARIZER * reg;

    let mut d_recon = Matrix::zeros(recon.rows(), recon.cols());
    for (d, (r, t)) in d_recon
        .data_mut()
        .iter_mut()
        .zip(recon.data().iter().zip(x.data()))
    {
        *d = 2.0 * (r - t) / (batch * POSE_DIM as f64);
    }
    let (mut dz, dec_grads) = codec.decoder.backward_batch(&dec_acts, &d_recon, 1);
    for (d, v) in dz.data_mut().iter_mut().zip(z.data()) {
        *d += 2.0 * LATENT_REGULARIZER * v / batch;
    }
    let (_, enc_grads) = codec.encoder.backward_batch(&enc_acts, &dz, 1);

    let mut flat = Vec::with_capacity(codec.encoder.param_count() + codec.decoder.param_count());
    enc_grads.flatten(&mut flat);
    dec_grads.flatten(&mut flat);
    (loss, flat)
}
