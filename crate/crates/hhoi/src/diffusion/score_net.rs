//! The mode-specific score network.
//!
//! Three MLP feature extractors (noised sample → 256, condition → 128,
//! sinusoidal time features → 128) feed a fused trunk over their 512-wide
//! concatenation; one small MLP head per sample component emits that
//! component's slice of the score, with each 6D rotation split into two
//! 3-vector heads. Heads are concatenated in a fixed, versioned layout
//! order.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checkpoint::{Checkpoint, CheckpointWriter};
use crate::diffusion::{ConditionEmbedding, NoiseSchedule, HHI_DIM, HOI_DIM};
use crate::error::{Error, Result};
use crate::numerics::linalg::Matrix;
use crate::numerics::mlp::MlpActivations;
use crate::numerics::Mlp;
use crate::pose_codec::read_mlp as read_mlp_ck;
use crate::pose_codec::write_mlp as write_mlp_ck;
use crate::rng::Rng;

/// Default conditioning dimension.
pub const COND_DIM: usize = 64;

pub const LAYOUT_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Hoi,
    Hhi,
}

impl Mode {
    pub fn sample_dim(self) -> usize {
        match self {
            Mode::Hoi => HOI_DIM,
            Mode::Hhi => HHI_DIM,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Mode::Hoi => "hoi",
            Mode::Hhi => "hhi",
        }
    }
}

/// Ordered `(component name, width)` pairs; the concatenated head outputs
/// follow this order exactly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeadLayout {
    pub parts: Vec<(String, usize)>,
}

impl HeadLayout {
    pub fn hoi() -> Self {
        HeadLayout {
            parts: vec![
                ("rotation_a".into(), 3),
                ("rotation_b".into(), 3),
                ("translation".into(), 3),
                ("scale".into(), 1),
                ("pose".into(), 10),
            ],
        }
    }

    pub fn hhi() -> Self {
        HeadLayout {
            parts: vec![
                ("pose_ref".into(), 10),
                ("rotation_a".into(), 3),
                ("rotation_b".into(), 3),
                ("translation".into(), 3),
                ("pose_other".into(), 10),
            ],
        }
    }

    pub fn for_mode(mode: Mode) -> Self {
        match mode {
            Mode::Hoi => HeadLayout::hoi(),
            Mode::Hhi => HeadLayout::hhi(),
        }
    }

    /// A single unnamed component, for low-dimensional experiments.
    pub fn flat(dim: usize) -> Self {
        HeadLayout {
            parts: vec![("value".into(), dim)],
        }
    }

    pub fn total(&self) -> usize {
        self.parts.iter().map(|(_, w)| w).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreNetConfig {
    pub mode: Mode,
    pub layout: HeadLayout,
    pub cond_dim: usize,
    pub sample_features: usize,
    pub cond_features: usize,
    pub time_features: usize,
    pub trunk_hidden: usize,
    pub trunk_out: usize,
    pub head_hidden: usize,
    /// Sinusoidal frequency count; the time extractor input is twice this.
    pub fourier_frequencies: usize,
    pub schedule: NoiseSchedule,
}

impl ScoreNetConfig {
    /// Full-size architecture.
    pub fn new(mode: Mode) -> Self {
        ScoreNetConfig {
            mode,
            layout: HeadLayout::for_mode(mode),
            cond_dim: COND_DIM,
            sample_features: 256,
            cond_features: 128,
            time_features: 128,
            trunk_hidden: 512,
            trunk_out: 256,
            head_hidden: 64,
            fourier_frequencies: 8,
            schedule: NoiseSchedule::default(),
        }
    }

    /// Half-width variant for desk-scale runs.
    pub fn toy(mode: Mode) -> Self {
        ScoreNetConfig {
            sample_features: 128,
            cond_features: 64,
            time_features: 64,
            trunk_hidden: 256,
            trunk_out: 128,
            head_hidden: 32,
            ..ScoreNetConfig::new(mode)
        }
    }

    pub fn with_layout(mut self, layout: HeadLayout) -> Self {
        self.layout = layout;
        self
    }

    pub fn with_schedule(mut self, schedule: NoiseSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn sample_dim(&self) -> usize {
        self.layout.total()
    }

    fn concat_dim(&self) -> usize {
        self.sample_features + self.cond_features + self.time_features
    }
}

/// One trained (or training) score network.
#[derive(Debug, Clone)]
pub struct ScoreNet {
    config: ScoreNetConfig,
    sample_extractor: Mlp,
    cond_extractor: Mlp,
    time_extractor: Mlp,
    trunk: Mlp,
    heads: Vec<Mlp>,
}

/// Batched forward records for backpropagation.
pub struct ScoreNetActs {
    pub sample: MlpActivations,
    pub cond: MlpActivations,
    pub time: MlpActivations,
    pub trunk: MlpActivations,
    pub heads: Vec<MlpActivations>,
    pub output: Matrix,
}

pub(crate) fn time_feature_vec(t: f64, frequencies: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * frequencies);
    for k in 1..=frequencies {
        let phase = std::f64::consts::TAU * k as f64 * t;
        out.push(phase.sin());
        out.push(phase.cos());
    }
    out
}

impl ScoreNet {
    pub fn init(config: ScoreNetConfig, rng: &mut Rng) -> Self {
        let sd = config.sample_dim();
        let sample_extractor = Mlp::init(
            &[sd, config.sample_features, config.sample_features],
            rng,
        );
        let cond_extractor = Mlp::init(
            &[config.cond_dim, config.cond_features, config.cond_features],
            rng,
        );
        let time_extractor = Mlp::init(
            &[
                2 * config.fourier_frequencies,
                config.time_features,
                config.time_features,
            ],
            rng,
        );
        let trunk = Mlp::init(
            &[config.concat_dim(), config.trunk_hidden, config.trunk_out],
            rng,
        );
        let heads = config
            .layout
            .parts
            .iter()
            .map(|(_, width)| Mlp::init(&[config.trunk_out, config.head_hidden, *width], rng))
            .collect();
        ScoreNet {
            config,
            sample_extractor,
            cond_extractor,
            time_extractor,
            trunk,
            heads,
        }
    }

    pub fn config(&self) -> &ScoreNetConfig {
        &self.config
    }

    pub fn mode(&self) -> Mode {
        self.config.mode
    }

    pub fn schedule(&self) -> &NoiseSchedule {
        &self.config.schedule
    }

    fn check_inputs(&self, phi_t: &[f64], cond: &ConditionEmbedding) -> Result<()> {
        if phi_t.len() != self.config.sample_dim() {
            return Err(Error::Shape {
                context: "ScoreNet sample input",
                expected: self.config.sample_dim(),
                got: phi_t.len(),
            });
        }
        if cond.dim() != self.config.cond_dim {
            return Err(Error::Shape {
                context: "ScoreNet condition input",
                expected: self.config.cond_dim,
                got: cond.dim(),
            });
        }
        Ok(())
    }

    /// Raw head output: the σ-scaled score `σ(t)·Ψ`.
    pub fn scaled_score(&self, phi_t: &[f64], t: f64, cond: &ConditionEmbedding) -> Result<Vec<f64>> {
        self.check_inputs(phi_t, cond)?;
        self.config.schedule.sigma(t)?;
        let fs = self.sample_extractor.forward(phi_t)?;
        let fc = self.cond_extractor.forward(&cond.0)?;
        let ft = self
            .time_extractor
            .forward(&time_feature_vec(t, self.config.fourier_frequencies))?;
        let mut fused = Vec::with_capacity(self.config.concat_dim());
        fused.extend_from_slice(&fs);
        fused.extend_from_slice(&fc);
        fused.extend_from_slice(&ft);
        let trunk_out = self.trunk.forward(&fused)?;
        let mut out = Vec::with_capacity(self.config.sample_dim());
        for head in &self.heads {
            out.extend_from_slice(&head.forward(&trunk_out)?);
        }
        Ok(out)
    }

    /// The estimated score `Ψ(φ_t, t | c)`.
    pub fn score(&self, phi_t: &[f64], t: f64, cond: &ConditionEmbedding) -> Result<Vec<f64>> {
        let sigma = self.config.schedule.sigma(t)?;
        let mut out = self.scaled_score(phi_t, t, cond)?;
        for v in out.iter_mut() {
            *v /= sigma;
        }
        Ok(out)
    }

    /// Vector-Jacobian product: `∂(adjoint · score)/∂φ_t`.
    pub fn score_input_gradient(
        &self,
        phi_t: &[f64],
        t: f64,
        cond: &ConditionEmbedding,
        adjoint: &[f64],
    ) -> Result<Vec<f64>> {
        self.check_inputs(phi_t, cond)?;
        let sigma = self.config.schedule.sigma(t)?;
        let sample_trace = self.sample_extractor.forward_traced(phi_t)?;
        let fc = self.cond_extractor.forward(&cond.0)?;
        let ft = self
            .time_extractor
            .forward(&time_feature_vec(t, self.config.fourier_frequencies))?;
        let mut fused = Vec::with_capacity(self.config.concat_dim());
        fused.extend_from_slice(sample_trace.output());
        fused.extend_from_slice(&fc);
        fused.extend_from_slice(&ft);
        let trunk_trace = self.trunk.forward_traced(&fused)?;

        let mut trunk_adjoint = vec![0.0; self.config.trunk_out];
        let mut offset = 0;
        for ((_, width), head) in self.config.layout.parts.iter().zip(&self.heads) {
            let head_trace = head.forward_traced(trunk_trace.output())?;
            let dy: Vec<f64> = adjoint[offset..offset + width]
                .iter()
                .map(|g| g / sigma)
                .collect();
            let dtrunk = head.backward_input(&head_trace, &dy);
            for (a, d) in trunk_adjoint.iter_mut().zip(&dtrunk) {
                *a += d;
            }
            offset += width;
        }
        let dfused = self.trunk.backward_input(&trunk_trace, &trunk_adjoint);
        Ok(self
            .sample_extractor
            .backward_input(&sample_trace, &dfused[..self.config.sample_features]))
    }

    /// Batched σ-scaled forward pass. `time_feats` rows are
    /// [`time_feature_vec`] rows; `cond` rows are condition embeddings.
    pub fn forward_batch(
        &self,
        phi_t: &Matrix,
        time_feats: &Matrix,
        cond: &Matrix,
        threads: usize,
    ) -> ScoreNetActs {
        let batch = phi_t.rows();
        let sample = self.sample_extractor.forward_batch(phi_t, threads);
        let cond_acts = self.cond_extractor.forward_batch(cond, threads);
        let time = self.time_extractor.forward_batch(time_feats, threads);
        let mut fused = Matrix::zeros(batch, self.config.concat_dim());
        for i in 0..batch {
            let row = fused.row_mut(i);
            let (sf, cf) = (self.config.sample_features, self.config.cond_features);
            row[..sf].copy_from_slice(Mlp::output_of(&sample).row(i));
            row[sf..sf + cf].copy_from_slice(Mlp::output_of(&cond_acts).row(i));
            row[sf + cf..].copy_from_slice(Mlp::output_of(&time).row(i));
        }
        let trunk = self.trunk.forward_batch(&fused, threads);
        let mut output = Matrix::zeros(batch, self.config.sample_dim());
        let mut heads = Vec::with_capacity(self.heads.len());
        let mut offset = 0;
        for ((_, width), head) in self.config.layout.parts.iter().zip(&self.heads) {
            let acts = head.forward_batch(Mlp::output_of(&trunk), threads);
            let out = Mlp::output_of(&acts);
            for i in 0..batch {
                output.row_mut(i)[offset..offset + width].copy_from_slice(out.row(i));
            }
            heads.push(acts);
            offset += width;
        }
        ScoreNetActs {
            sample,
            cond: cond_acts,
            time,
            trunk,
            heads,
            output,
        }
    }

    /// Backpropagate `d_output` (∂loss/∂ σ-scaled output) and return flat
    /// parameter gradients in [`ScoreNet::params_flat`] order.
    pub fn backward_batch(&self, acts: &ScoreNetActs, d_output: &Matrix, threads: usize) -> Vec<f64> {
        let batch = d_output.rows();
        let mut d_trunk_out = Matrix::zeros(batch, self.config.trunk_out);
        let mut head_grads = Vec::with_capacity(self.heads.len());
        let mut offset = 0;
        for ((_, width), (head, head_acts)) in self
            .config
            .layout
            .parts
            .iter()
            .zip(self.heads.iter().zip(&acts.heads))
        {
            let mut dy = Matrix::zeros(batch, *width);
            for i in 0..batch {
                dy.row_mut(i)
                    .copy_from_slice(&d_output.row(i)[offset..offset + width]);
            }
            let (dx, grads) = head.backward_batch(head_acts, &dy, threads);
            for i in 0..batch {
                for (a, d) in d_trunk_out.row_mut(i).iter_mut().zip(dx.row(i)) {
                    *a += d;
                }
            }
            head_grads.push(grads);
            offset += width;
        }
        let (d_fused, trunk_grads) = self.trunk.backward_batch(&acts.trunk, &d_trunk_out, threads);
        let (sf, cf) = (self.config.sample_features, self.config.cond_features);
        let slice_cols = |lo: usize, hi: usize| {
            let mut m = Matrix::zeros(batch, hi - lo);
            for i in 0..batch {
                m.row_mut(i).copy_from_slice(&d_fused.row(i)[lo..hi]);
            }
            m
        };
        let d_sample = slice_cols(0, sf);
        let d_cond = slice_cols(sf, sf + cf);
        let d_time = slice_cols(sf + cf, self.config.concat_dim());
        let (_, sample_grads) = self
            .sample_extractor
            .backward_batch(&acts.sample, &d_sample, threads);
        let (_, cond_grads) = self.cond_extractor.backward_batch(&acts.cond, &d_cond, threads);
        let (_, time_grads) = self.time_extractor.backward_batch(&acts.time, &d_time, threads);

        let mut flat = Vec::with_capacity(self.param_count());
        sample_grads.flatten(&mut flat);
        cond_grads.flatten(&mut flat);
        time_grads.flatten(&mut flat);
        trunk_grads.flatten(&mut flat);
        for g in &head_grads {
            g.flatten(&mut flat);
        }
        flat
    }

    pub fn param_count(&self) -> usize {
        self.components().iter().map(|m| m.param_count()).sum()
    }

    fn components(&self) -> Vec<&Mlp> {
        let mut v = vec![
            &self.sample_extractor,
            &self.cond_extractor,
            &self.time_extractor,
            &self.trunk,
        ];
        v.extend(self.heads.iter());
        v
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for m in self.components() {
            m.flatten_params(&mut out);
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) {
        let mut off = 0;
        off += self.sample_extractor.unflatten_params(&flat[off..]);
        off += self.cond_extractor.unflatten_params(&flat[off..]);
        off += self.time_extractor.unflatten_params(&flat[off..]);
        off += self.trunk.unflatten_params(&flat[off..]);
        for head in &mut self.heads {
            off += head.unflatten_params(&flat[off..]);
        }
        debug_assert_eq!(off, flat.len());
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
        for (key, value) in extra {
            w.set_meta(key, value)?;
        }
        w.set_meta("kind", "score_net")?;
        w.set_meta("mode", self.config.mode.tag())?;
        w.set_meta("layout_version", LAYOUT_VERSION)?;
        w.set_meta("cond_dim", self.config.cond_dim)?;
        w.set_meta("config", &self.config)?;
        write_mlp_ck(&mut w, "sample_extractor", &self.sample_extractor)?;
        write_mlp_ck(&mut w, "cond_extractor", &self.cond_extractor)?;
        write_mlp_ck(&mut w, "time_extractor", &self.time_extractor)?;
        write_mlp_ck(&mut w, "trunk", &self.trunk)?;
        for (i, head) in self.heads.iter().enumerate() {
            write_mlp_ck(&mut w, &format!("heads.{i}"), head)?;
        }
        w.save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let ck = Checkpoint::load(path)?;
        let kind: String = ck.meta_value("kind")?;
        if kind != "score_net" {
            return Err(Error::Checkpoint(format!(
                "expected a score_net checkpoint, found kind {kind:?}"
            )));
        }
        let version: String = ck.meta_value("layout_version")?;
        if version != LAYOUT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported layout version {version:?}"
            )));
        }
        let config: ScoreNetConfig = ck.meta_value("config")?;
        let sd = config.sample_dim();
        let sample_extractor = read_mlp_ck(
            &ck,
            "sample_extractor",
            &[sd, config.sample_features, config.sample_features],
        )?;
        let cond_extractor = read_mlp_ck(
            &ck,
            "cond_extractor",
            &[config.cond_dim, config.cond_features, config.cond_features],
        )?;
        let time_extractor = read_mlp_ck(
            &ck,
            "time_extractor",
            &[
                2 * config.fourier_frequencies,
                config.time_features,
                config.time_features,
            ],
        )?;
        let trunk = read_mlp_ck(
            &ck,
            "trunk",
            &[config.concat_dim(), config.trunk_hidden, config.trunk_out],
        )?;
        let mut heads = Vec::new();
        for (i, (_, width)) in config.layout.parts.iter().enumerate() {
            heads.push(read_mlp_ck(
                &ck,
                &format!("heads.{i}"),
                &[config.trunk_out, config.head_hidden, *width],
            )?);
        }
        Ok(ScoreNet {
            config,
            sample_extractor,
            cond_extractor,
            time_extractor,
            trunk,
            heads,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeroed(mut net: ScoreNet) -> ScoreNet {
        let zeros = vec![0.0; net.param_count()];
        net.set_params_flat(&zeros);
        net
    }

    #[test]
    fn output_length_matches_mode() {
        let mut rng = Rng::seed_from(1);
        let cond = ConditionEmbedding::zeros(COND_DIM);
        for (mode, dim) in [(Mode::Hoi, 20), (Mode::Hhi, 29)] {
            let net = ScoreNet::init(ScoreNetConfig::toy(mode), &mut rng);
            let out = net.score(&vec![0.1; dim], 0.5, &cond).unwrap();
            assert_eq!(out.len(), dim);
        }
    }

    #[test]
    fn zero_weight_network_scores_zero() {
        let mut rng = Rng::seed_from(2);
        let net = zeroed(ScoreNet::init(ScoreNetConfig::toy(Mode::Hoi), &mut rng));
        let out = net
            .score(&vec![1.0; 20], 0.3, &ConditionEmbedding::zeros(COND_DIM))
            .unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let mut rng = Rng::seed_from(3);
        let net = ScoreNet::init(ScoreNetConfig::toy(Mode::Hoi), &mut rng);
        assert!(net
            .score(&vec![0.0; 29], 0.5, &ConditionEmbedding::zeros(COND_DIM))
            .is_err());
        assert!(net
            .score(&vec![0.0; 20], 0.5, &ConditionEmbedding::zeros(10))
            .is_err());
        // time outside the schedule
        assert!(net
            .score(&vec![0.0; 20], 1.5, &ConditionEmbedding::zeros(COND_DIM))
            .is_err());
    }

    #[test]
    fn score_is_scaled_score_over_sigma() {
        let mut rng = Rng::seed_from(4);
        let net = ScoreNet::init(ScoreNetConfig::toy(Mode::Hhi), &mut rng);
        let phi = rng.normal_vec(29);
        let cond = ConditionEmbedding(rng.normal_vec(COND_DIM));
        let t = 0.7;
        let sigma = net.schedule().sigma(t).unwrap();
        let raw = net.scaled_score(&phi, t, &cond).unwrap();
        let score = net.score(&phi, t, &cond).unwrap();
        for (r, s) in raw.iter().zip(&score) {
            assert!((r / sigma - s).abs() < 1e-15);
        }
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = Rng::seed_from(5);
        let net = ScoreNet::init(ScoreNetConfig::toy(Mode::Hoi), &mut rng);
        let phi = rng.normal_vec(20);
        let cond = ConditionEmbedding(rng.normal_vec(COND_DIM));
        let t = 0.42;

        // ∇ ‖Ψ‖² = VJP with adjoint 2Ψ
        let score = net.score(&phi, t, &cond).unwrap();
        let adjoint: Vec<f64> = score.iter().map(|s| 2.0 * s).collect();
        let analytic = net.score_input_gradient(&phi, t, &cond, &adjoint).unwrap();

        let h = 1e-6;
        let mut worst: f64 = 0.0;
        for i in 0..20 {
            let mut up = phi.clone();
            up[i] += h;
            let mut down = phi.clone();
            down[i] -= h;
            let f = |p: &[f64]| {
                net.score(p, t, &cond)
                    .unwrap()
                    .iter()
                    .map(|v| v * v)
                    .sum::<f64>()
            };
            let fd = (f(&up) - f(&down)) / (2.0 * h);
            let denom = fd.abs().max(analytic[i].abs()).max(1e-8);
            worst = worst.max((fd - analytic[i]).abs() / denom);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn batched_forward_matches_single_sample_path() {
        let mut rng = Rng::seed_from(6);
        let net = ScoreNet::init(ScoreNetConfig::toy(Mode::Hoi), &mut rng);
        let times = [0.1, 0.4, 0.9];
        let phis: Vec<Vec<f64>> = (0..3).map(|_| rng.normal_vec(20)).collect();
        let conds: Vec<Vec<f64>> = (0..3).map(|_| rng.normal_vec(COND_DIM)).collect();

        let phi_m = Matrix::from_rows(&phis).unwrap();
        let tf_m = Matrix::from_rows(
            &times
                .iter()
                .map(|&t| time_feature_vec(t, net.config().fourier_frequencies))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let cond_m = Matrix::from_rows(&conds).unwrap();
        let acts = net.forward_batch(&phi_m, &tf_m, &cond_m, 1);
        for i in 0..3 {
            let single = net
                .scaled_score(&phis[i], times[i], &ConditionEmbedding(conds[i].clone()))
                .unwrap();
            for (a, b) in acts.output.row(i).iter().zip(&single) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn checkpoint_roundtrip_preserves_behavior_and_bytes() {
        let mut rng = Rng::seed_from(7);
        let net = ScoreNet::init(
            ScoreNetConfig::toy(Mode::Hhi).with_schedule(NoiseSchedule::new(0.02, 5.0, 1e-3).unwrap()),
            &mut rng,
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("score.ckpt");
        net.save(&path).unwrap();
        let loaded = ScoreNet::load(&path).unwrap();
        assert_eq!(loaded.mode(), Mode::Hhi);
        assert_eq!(loaded.schedule(), net.schedule());

        let phi = rng.normal_vec(29);
        let cond = ConditionEmbedding(rng.normal_vec(COND_DIM));
        assert_eq!(
            net.score(&phi, 0.5, &cond).unwrap(),
            loaded.score(&phi, 0.5, &cond).unwrap()
        );

        let path2 = dir.path().join("score2.ckpt");
        loaded.save(&path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn custom_flat_layout_supports_one_dimension() {
        let mut rng = Rng::seed_from(8);
        let config = ScoreNetConfig::toy(Mode::Hoi).with_layout(HeadLayout::flat(1));
        let net = ScoreNet::init(config, &mut rng);
        let out = net
            .score(&[0.5], 0.5, &ConditionEmbedding::zeros(COND_DIM))
            .unwrap();
        assert_eq!(out.len(), 1);
    }
}
