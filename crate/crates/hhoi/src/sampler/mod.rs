//! Reverse-time probability-flow sampling and guided composition.
//!
//! A scene with `N` humans and `M` pairwise relations is sampled by
//! integrating all `N` HOI vectors and `M` HHI vectors jointly from
//! `t = 1` down to `t = ε` with fixed-step RK4. Above `t_guide` each
//! sample follows its own score drift; at and below it, gradients of the
//! inconsistency and collision losses couple the samples so the redundant
//! per-human estimates agree and unrelated humans keep clear of each
//! other.

mod graph;
mod guided;
mod losses;
mod ode;
mod scene;

pub use graph::{validate_hhi_graph, HhiEdge, HhiGraph};
pub use guided::{guided_sample, sample_noise_stream, GuidanceConfig, GuidedModels};
pub use losses::{
    collision_loss, collision_loss_node, inconsistency_loss, inconsistency_loss_node,
    record_draft, DraftVars, GuidanceContext, SceneDraft,
};
pub use ode::{pf_ode_sample, pf_ode_sample_with_net, rk4_integrate};
pub use scene::{
    human_world_geometry, reconstruct_scene, EdgeRequest, ResidualDiag, Scene, SceneCapsule,
    SceneHuman, SceneRequest,
};
