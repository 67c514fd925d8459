//! Evaluation suite: Fréchet distances on pose embeddings and
//! interpersonal distances, capsule-based penetration ratios, contact
//! distance and success rate.

mod eval;
mod frechet;

pub use eval::{
    body_pose_fd, contact_distance, distance_fd, penetration_ratio, scene_is_success,
    success_rate, ContactKind, DistanceFdVariant, MetricReport, PenetrationReport,
};
pub use frechet::{frechet_distance, GaussianFit};
