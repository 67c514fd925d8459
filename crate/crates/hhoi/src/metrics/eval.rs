//! The concrete metrics over scenes and capsule-proxy humans.
//!
//! Humans are represented by their world-frame capsule sets (no skinned
//! mesh exists in this artifact), so "mesh vertices" become seeded capsule
//! surface samples: 200 per capsule for penetration, 10 per human from
//! the contact-relevant capsules for contact distance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_capsule_surface, Capsule, TriangleMesh, Vec3};
use crate::metrics::frechet::{frechet_distance, GaussianFit};
use crate::pose_codec::CodecParams;
use crate::rng::Rng;
use crate::sampler::Scene;
use crate::skeleton::{BodyPose, HAND_CAPSULES, HIP_CAPSULES};

/// Fixed base seed: metric values are deterministic functions of their
/// inputs.
const METRIC_SEED: u64 = 0x4d45_5452;

pub const PENETRATION_SAMPLES_PER_CAPSULE: usize = 200;
pub const CONTACT_SAMPLES_PER_HUMAN: usize = 10;

/// Fréchet distance between encoded pose distributions (10-D latents).
///
/// Needs at least `dim + 1 = 11` poses on each side.
pub fn body_pose_fd(
    generated: &[BodyPose],
    reference: &[BodyPose],
    codec: &CodecParams,
) -> Result<f64> {
    let min = crate::pose_codec::EMBEDDING_DIM + 1;
    if generated.len() < min || reference.len() < min {
        return Err(Error::validation(format!(
            "body_pose_fd needs at least {min} poses per side, got {} and {}",
            generated.len(),
            reference.len()
        )));
    }
    let embed = |poses: &[BodyPose]| -> Vec<Vec<f64>> {
        poses.iter().map(|p| codec.encode(p).0.to_vec()).collect()
    };
    frechet_distance(
        &GaussianFit::fit(&embed(generated))?,
        &GaussianFit::fit(&embed(reference))?,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceFdVariant {
    /// 3-D pairwise translation difference vectors (default).
    Vector,
    /// Scalar pairwise distances.
    Norm,
}

/// Fréchet distance between interpersonal-distance distributions.
///
/// Per scene, every human pair `i < j` contributes `t_i − t_j` (or its
/// norm under [`DistanceFdVariant::Norm`]). Single-human scenes are
/// skipped; the skip counts `(generated, reference)` come back with the
/// value.
pub fn distance_fd(
    generated: &[Vec<Vec3>],
    reference: &[Vec<Vec3>],
    variant: DistanceFdVariant,
) -> Result<(f64, (usize, usize))> {
    let collect = |scenes: &[Vec<Vec3>]| -> (Vec<Vec<f64>>, usize) {
        let mut diffs = Vec::new();
        let mut skipped = 0;
        for humans in scenes {
            if humans.len() < 2 {
                skipped += 1;
                continue;
            }
            for i in 0..humans.len() {
                for j in i + 1..humans.len() {
                    let d = humans[i] - humans[j];
                    match variant {
                        DistanceFdVariant::Vector => diffs.push(vec![d.x, d.y, d.z]),
                        DistanceFdVariant::Norm => diffs.push(vec![d.norm()]),
                    }
                }
            }
        }
        (diffs, skipped)
    };
    let (gen_diffs, gen_skipped) = collect(generated);
    let (ref_diffs, ref_skipped) = collect(reference);
    let dim = match variant {
        DistanceFdVariant::Vector => 3,
        DistanceFdVariant::Norm => 1,
    };
    if gen_diffs.len() <= dim || ref_diffs.len() <= dim {
        return Err(Error::validation(
            "distance_fd: not enough multi-human scenes",
        ));
    }
    let fd = frechet_distance(&GaussianFit::fit(&gen_diffs)?, &GaussianFit::fit(&ref_diffs)?)?;
    Ok((fd, (gen_skipped, ref_skipped)))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PenetrationReport {
    /// Fraction of human surface points inside another human, ×1000.
    pub human_human: f64,
    /// Fraction inside the object mesh, ×1000; absent when the object
    /// mesh is not watertight.
    pub human_object: Option<f64>,
}

/// Seeded penetration ratios for one scene's capsule humans.
///
/// Each human contributes 200 surface samples per capsule; a point counts
/// as penetrating when it lies inside any *other* human's capsule set
/// (point-to-axis distance below that capsule's radius) or inside the
/// object mesh.
pub fn penetration_ratio(
    humans: &[Vec<Capsule>],
    object: Option<&TriangleMesh>,
) -> PenetrationReport {
    let object_ok = object.map(|m| m.check_watertight().is_ok());
    let mut total = 0usize;
    let mut inside_human = 0usize;
    let mut inside_object = 0usize;
    for (h, capsules) in humans.iter().enumerate() {
        let mut rng = Rng::stream(METRIC_SEED, h as u64);
        for capsule in capsules {
            for p in sample_capsule_surface(capsule, PENETRATION_SAMPLES_PER_CAPSULE, &mut rng) {
                total += 1;
                let pierced = humans
                    .iter()
                    .enumerate()
                    .filter(|(other, _)| *other != h)
                    .any(|(_, set)| set.iter().any(|c| c.contains(p)));
                if pierced {
                    inside_human += 1;
                }
                if object_ok == Some(true) {
                    if let Some(mesh) = object {
                        if mesh.contains_point_unchecked(p) {
                            inside_object += 1;
                        }
                    }
                }
            }
        }
    }
    let scale = 1000.0 / total.max(1) as f64;
    PenetrationReport {
        human_human: inside_human as f64 * scale,
        human_object: match object_ok {
            Some(true) => Some(inside_object as f64 * scale),
            _ => None,
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContactKind {
    /// Hand capsules (ids 21–22).
    Hand,
    /// Root-adjacent bone capsules (ids 0–2).
    Hip,
}

impl ContactKind {
    pub fn capsule_ids(self) -> &'static [usize] {
        match self {
            ContactKind::Hand => &HAND_CAPSULES,
            ContactKind::Hip => &HIP_CAPSULES,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "hand" => Some(ContactKind::Hand),
            "hip" => Some(ContactKind::Hip),
            _ => None,
        }
    }
}

/// Mean distance from contact-relevant body parts to the object surface,
/// averaged over humans: 10 seeded surface points per human, drawn from
/// the kind's capsules.
pub fn contact_distance(
    humans: &[Vec<Capsule>],
    object: &TriangleMesh,
    kind: ContactKind,
) -> Result<f64> {
    if humans.is_empty() {
        return Err(Error::validation("contact_distance: no humans"));
    }
    let ids = kind.capsule_ids();
    let mut per_human = Vec::with_capacity(humans.len());
    for (h, capsules) in humans.iter().enumerate() {
        let mut rng = Rng::stream(METRIC_SEED ^ 0xc0ac, h as u64);
        let mut acc = 0.0;
        for _ in 0..CONTACT_SAMPLES_PER_HUMAN {
            let capsule = &capsules[ids[rng.index(ids.len())]];
            let p = sample_capsule_surface(capsule, 1, &mut rng)[0];
            acc += object.distance_to_point(p)?;
        }
        per_human.push(acc / CONTACT_SAMPLES_PER_HUMAN as f64);
    }
    Ok(per_human.iter().sum::<f64>() / per_human.len() as f64)
}

/// A run succeeds when it produced exactly the requested number of humans,
/// every parameter is finite, every rotation is a valid rotation matrix,
/// every scale cleared the clamp floor, and at most one human needed
/// clamping.
pub fn scene_is_success(scene: &Scene, n_target: usize) -> bool {
    if scene.humans.len() != n_target {
        return false;
    }
    let mut clamped = 0;
    for h in &scene.humans {
        let rot = crate::geometry::Mat3::from_rows(h.rotation);
        if !rot.is_finite() || !rot.is_rotation(1e-6) {
            return false;
        }
        if !h.translation.iter().all(|v| v.is_finite())
            || !h.scale.is_finite()
            || !h.pose126.iter().all(|v| v.is_finite())
        {
            return false;
        }
        if !(h.scale > 0.05 - 1e-12) {
            return false;
        }
        if h.scale_clamped {
            clamped += 1;
        }
    }
    clamped <= 1
}

/// Fraction of runs that produced a valid `n_target`-human scene. Failed
/// runs (sampler errors) enter as `None`.
pub fn success_rate(runs: &[Option<Scene>], n_target: usize) -> f64 {
    assert!(!runs.is_empty(), "success_rate needs at least one run");
    let ok = runs
        .iter()
        .filter(|r| r.as_ref().is_some_and(|s| scene_is_success(s, n_target)))
        .count();
    ok as f64 / runs.len() as f64
}

/// The full evaluation report, serializable as JSON and printable as an
/// aligned table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    /// Squared Fréchet distance between encoded pose distributions.
    pub body_pose_fd: f64,
    /// Squared Fréchet distance between interpersonal-distance
    /// distributions.
    pub distance_fd: f64,
    pub distance_fd_variant: DistanceFdVariant,
    pub distance_fd_skipped_scenes: (usize, usize),
    pub penetration: PenetrationReport,
    pub contact_distance_m: Option<f64>,
    pub contact_kind: Option<ContactKind>,
    pub success_rate: f64,
    pub scenes_evaluated: usize,
    pub reference_frames: usize,
    /// Exact resolved configuration of the evaluation run.
    pub config: serde_json::Value,
}

impl MetricReport {
    /// Aligned plain-text rendering.
    pub fn to_text_table(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            (
                "body pose FD (squared)".into(),
                format!("{:.6}", self.body_pose_fd),
            ),
            (
                format!("distance FD (squared, {:?})", self.distance_fd_variant),
                format!("{:.6}", self.distance_fd),
            ),
            (
                "human-human penetration (x1000)".into(),
                format!("{:.3}", self.penetration.human_human),
            ),
        ];
        match self.penetration.human_object {
            Some(v) => rows.push(("human-object penetration (x1000)".into(), format!("{v:.3}"))),
            None => rows.push((
                "human-object penetration (x1000)".into(),
                "skipped (object not watertight)".into(),
            )),
        }
        if let (Some(d), Some(kind)) = (self.contact_distance_m, self.contact_kind) {
            rows.push((format!("contact distance ({kind:?}, m)"), format!("{d:.4}")));
        }
        rows.push(("success rate".into(), format!("{:.3}", self.success_rate)));
        rows.push((
            "scenes / reference frames".into(),
            format!("{} / {}", self.scenes_evaluated, self.reference_frames),
        ));
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            out.push_str(&format!("{k:<width$}  {v}\n"));
        }
        out
    }
}
