//! Score-model machinery: sample vectors, the noise schedule, the two
//! mode-specific score networks and denoising-score-matching training.
//!
//! Two relation modes exist and never share parameters:
//!
//! * **HOI** — one human tied to the object frame, a 20-vector
//!   `[rotation6d, translation3, scale1, pose10]`;
//! * **HHI** — a second human tied to a reference human, a 29-vector
//!   `[pose_ref10, rotation6d, translation3, pose_other10]`.
//!
//! The networks regress the *σ-scaled* score: the heads output
//! `σ(t)·∇log p`, and [`ScoreNet::score`] divides by `σ(t)`. With the
//! variance weighting `λ_t = σ(t)²` the DSM objective then reduces to
//! `‖head_output − (−η)‖²` for perturbation noise `η`, which keeps losses
//! comparable across all noise levels.

mod sample;
mod schedule;
mod score_net;
mod train;

pub use sample::{HhiSample, HoiSample, HHI_DIM, HOI_DIM};
pub use schedule::{dsm_target, perturb, NoiseSchedule};
pub use score_net::{HeadLayout, Mode, ScoreNet, ScoreNetConfig, COND_DIM};
pub use train::{train_score, ScoreEpochReport, ScoreExample, ScoreTrainConfig};

use serde::{Deserialize, Serialize};

/// A conditioning vector (fixed dimension per trained model, recorded in
/// checkpoints).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEmbedding(pub Vec<f64>);

impl ConditionEmbedding {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn zeros(dim: usize) -> Self {
        ConditionEmbedding(vec![0.0; dim])
    }
}
