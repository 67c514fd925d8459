//! Final scene assembly and the request/output JSON formats.
//!
//! A converged draft becomes a scene by taking each human from its *HOI*
//! sample — relations act only through guidance during sampling — while
//! the per-edge disagreement between the HOI-derived placement and each
//! HHI-derived estimate is reported as residual diagnostics, making the
//! consensus choice auditable.

use serde::{Deserialize, Serialize};

use crate::diffusion::{HhiSample, HoiSample};
use crate::error::Result;
use crate::geometry::{rot6d_to_matrix_regularized, Capsule, Mat3, Segment, Vec3};
use crate::pose_codec::PoseEmbedding;
use crate::sampler::graph::{HhiEdge, HhiGraph};
use crate::sampler::losses::{GuidanceContext, SceneDraft};
use crate::skeleton::{HAND_LENGTH, HEAD_LENGTH, JOINT_COUNT};

/// A scene request file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRequest {
    /// Path to the object mesh (OBJ), relative to the request file.
    pub object: String,
    pub humans: usize,
    pub hoi_prompts: Vec<String>,
    #[serde(default)]
    pub edges: Vec<EdgeRequest>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub config: Option<crate::sampler::guided::GuidanceConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRequest {
    pub from: usize,
    pub to: usize,
    pub prompt: String,
}

impl SceneRequest {
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn to_graph(&self) -> HhiGraph {
        HhiGraph::new(
            self.humans,
            self.hoi_prompts.clone(),
            self.edges
                .iter()
                .map(|e| HhiEdge {
                    from: e.from,
                    to: e.to,
                    prompt: e.prompt.clone(),
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneCapsule {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub radius: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneHuman {
    /// Row-major world rotation.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    /// Post-clamp scale.
    pub scale: f64,
    pub scale_clamped: bool,
    /// Decoded 126-value body pose (21 × 6D).
    pub pose126: Vec<f64>,
    /// World-frame joint positions.
    pub joints22: Vec<[f64; 3]>,
    /// World-frame collision capsules.
    pub capsules24: Vec<SceneCapsule>,
}

/// Disagreement between a human's HOI placement and one HHI-derived
/// estimate of the same human.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualDiag {
    pub edge: usize,
    pub subject: usize,
    pub reference: usize,
    /// Frobenius distance between the two rotation estimates.
    pub rotation: f64,
    /// Euclidean distance between the two translation estimates (m).
    pub translation: f64,
    /// L2 gap between the edge's subject pose embedding and the subject's
    /// own.
    pub pose_subject: f64,
    pub pose_reference: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scene {
    pub object_mesh: String,
    pub humans: Vec<SceneHuman>,
    pub residuals: Vec<ResidualDiag>,
    pub inconsistency_loss: f64,
    pub collision_loss: f64,
    pub seed: u64,
    /// The exact configuration the run used.
    pub config: serde_json::Value,
}

impl Scene {
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        Ok(std::fs::write(
            path.as_ref(),
            serde_json::to_string_pretty(self)?,
        )?)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// World-frame geometry of one human from its HOI sample: joints,
/// capsules and whether the scale clamp fired.
pub fn human_world_geometry(
    sample: &HoiSample,
    ctx: &GuidanceContext,
) -> Result<(Vec<f64>, Vec<Vec3>, Vec<Capsule>, f64, bool)> {
    let decoded = ctx.decoder.forward(&sample.pose.0)?;
    // forward kinematics with regularized 6D blocks (a raw decoder output
    // may contain degenerate blocks)
    let template = &ctx.template;
    let mut pos = vec![Vec3::ZERO; JOINT_COUNT];
    let mut acc = vec![Mat3::identity(); JOINT_COUNT];
    for j in 1..JOINT_COUNT {
        let parent = template.parent(j).expect("non-root");
        let six = crate::geometry::Rotation6D::from_slice(&decoded[(j - 1) * 6..j * 6]);
        let local = rot6d_to_matrix_regularized(&six);
        acc[j] = acc[parent] * local;
        pos[j] = pos[parent] + acc[parent] * template.rest_offset(j);
    }
    // canonical capsule axes
    let mut axes: Vec<Segment> = (1..JOINT_COUNT)
        .map(|j| Segment::new(pos[j], pos[template.parent(j).expect("non-root")]))
        .collect();
    let reach = |from: usize, to: usize, len: f64| {
        let dir = (pos[to] - pos[from]).normalized();
        Segment::new(pos[to], pos[to] + dir * len)
    };
    axes.push(reach(
        template.joint_index("left_elbow").expect("fixed"),
        template.joint_index("left_wrist").expect("fixed"),
        HAND_LENGTH,
    ));
    axes.push(reach(
        template.joint_index("right_elbow").expect("fixed"),
        template.joint_index("right_wrist").expect("fixed"),
        HAND_LENGTH,
    ));
    axes.push(reach(
        template.joint_index("neck").expect("fixed"),
        template.joint_index("head").expect("fixed"),
        HEAD_LENGTH,
    ));

    let clamped = sample.scale < ctx.scale_floor;
    let scale = sample.scale.max(ctx.scale_floor);
    let rot = rot6d_to_matrix_regularized(&sample.rotation);
    let world = |p: Vec3| rot * p * scale + sample.translation;
    let joints_world: Vec<Vec3> = pos.iter().map(|&p| world(p)).collect();
    let capsules: Vec<Capsule> = axes
        .iter()
        .zip(ctx.radii.0.iter())
        .map(|(seg, &r)| Capsule::new(Segment::new(world(seg.a), world(seg.b)), r * scale))
        .collect();
    Ok((decoded, joints_world, capsules, scale, clamped))
}

/// Assemble the final scene from a converged draft.
///
/// Scale clamping is reported per human (`scale_clamped`), not treated as
/// an error.
pub fn reconstruct_scene(
    draft: &SceneDraft,
    graph: &HhiGraph,
    ctx: &GuidanceContext,
    object_mesh: &str,
    seed: u64,
    config: serde_json::Value,
) -> Result<Scene> {
    let hoi: Vec<HoiSample> = draft
        .hoi
        .iter()
        .map(|v| HoiSample::from_flat(v))
        .collect::<Result<_>>()?;
    let hhi: Vec<HhiSample> = draft
        .hhi
        .iter()
        .map(|v| HhiSample::from_flat(v))
        .collect::<Result<_>>()?;

    let mut humans = Vec::with_capacity(hoi.len());
    for sample in &hoi {
        let (pose126, joints, capsules, scale, clamped) = human_world_geometry(sample, ctx)?;
        humans.push(SceneHuman {
            rotation: rot6d_to_matrix_regularized(&sample.rotation).rows(),
            translation: sample.translation.to_array(),
            scale,
            scale_clamped: clamped,
            pose126,
            joints22: joints.iter().map(|p| p.to_array()).collect(),
            capsules24: capsules
                .iter()
                .map(|c| SceneCapsule {
                    a: c.axis.a.to_array(),
                    b: c.axis.b.to_array(),
                    radius: c.radius,
                })
                .collect(),
        });
    }

    // per-edge disagreement between the HOI placement and the HHI-derived
    // estimate of the subject human
    let mut residuals = Vec::with_capacity(hhi.len());
    for (e_idx, edge) in graph.edges.iter().enumerate() {
        let subject = &hoi[edge.from];
        let reference = &hoi[edge.to];
        let rel = &hhi[e_idx];
        let r_ref = rot6d_to_matrix_regularized(&reference.rotation);
        let r_rel = rot6d_to_matrix_regularized(&rel.rotation_rel);
        let r_est = r_ref * r_rel;
        let r_own = rot6d_to_matrix_regularized(&subject.rotation);
        let rotation = frobenius_distance(&r_est, &r_own);
        let t_est =
            r_ref * rel.translation_rel * reference.scale.max(ctx.scale_floor) + reference.translation;
        let translation = (t_est - subject.translation).norm();
        residuals.push(ResidualDiag {
            edge: e_idx,
            subject: edge.from,
            reference: edge.to,
            rotation,
            translation,
            pose_subject: embedding_distance(&rel.pose_other, &subject.pose),
            pose_reference: embedding_distance(&rel.pose_ref, &reference.pose),
        });
    }

    let inconsistency = crate::sampler::losses::inconsistency_loss(draft, graph);
    let collision = crate::sampler::losses::collision_loss(draft, graph, ctx)?;
    Ok(Scene {
        object_mesh: object_mesh.to_string(),
        humans,
        residuals,
        inconsistency_loss: inconsistency,
        collision_loss: collision,
        seed,
        config,
    })
}

fn frobenius_distance(a: &Mat3, b: &Mat3) -> f64 {
    a.to_flat()
        .iter()
        .zip(b.to_flat().iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn embedding_distance(a: &PoseEmbedding, b: &PoseEmbedding) -> f64 {
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
