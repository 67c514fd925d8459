//! The canonical articulated human: a fixed 22-joint hierarchy, forward
//! kinematics from a 21×6D body pose, and a 24-capsule collision proxy.
//!
//! The skeleton is a license-free stand-in for a full parametric body
//! model: a pelvis-rooted tree (three spine links, neck, head, two
//! four-link legs, two four-link arms) with rest offsets sized for a
//! ≈1.7 m figure. The canonical frame is Z-up with the figure facing +X
//! and the left side on +Y; the root sits at the origin.
//!
//! Joint order (index: name ← parent):
//!
//! ```text
//!  0: pelvis        ← root        11: right_foot    ← 8
//!  1: left_hip      ← 0           12: neck          ← 9
//!  2: right_hip     ← 0           13: left_collar   ← 9
//!  3: spine1        ← 0           14: right_collar  ← 9
//!  4: left_knee     ← 1           15: head          ← 12
//!  5: right_knee    ← 2           16: left_shoulder ← 13
//!  6: spine2        ← 3           17: right_shoulder← 14
//!  7: left_ankle    ← 4           18: left_elbow    ← 16
//!  8: right_ankle   ← 5           19: right_elbow   ← 17
//!  9: spine3        ← 6           20: left_wrist    ← 18
//! 10: left_foot     ← 7           21: right_wrist   ← 19
//! ```
//!
//! A body pose carries one 6D rotation per non-root joint (21 × 6 = 126
//! numbers); rotation `k` is the local rotation of joint `k + 1`. A local
//! rotation turns the subtree *below* its joint, so leaf rotations (feet,
//! wrists, head) do not move any joint position.

mod fit;
mod proxy;

pub use fit::{fit_radii, load_xyz, symmetric_chamfer_sq, FitConfig};
pub use proxy::{
    build_capsule_proxy, CapsuleProxy, CapsuleRadii, CAPSULE_COUNT, HAND_CAPSULES, HAND_LENGTH,
    HEAD_LENGTH, HIP_CAPSULES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{rot6d_to_matrix, Mat3, Rotation6D, Vec3};

pub const JOINT_COUNT: usize = 22;
pub const POSE_JOINTS: usize = 21;
pub const POSE_DIM: usize = POSE_JOINTS * 6;

/// Fixed joint hierarchy plus rest-pose offsets (meters, T-pose).
#[derive(Debug, Clone)]
pub struct SkeletonTemplate {
    names: [&'static str; JOINT_COUNT],
    parents: [i8; JOINT_COUNT],
    offsets: [Vec3; JOINT_COUNT],
}

#[rustfmt::skip]
const JOINT_TABLE: [(&str, i8, [f64; 3]); JOINT_COUNT] = [
    ("pelvis",         -1, [0.0,   0.0,   0.0 ]),
    ("left_hip",        0, [0.0,   0.09, -0.06]),
    ("right_hip",       0, [0.0,  -0.09, -0.06]),
    ("spine1",          0, [0.0,   0.0,   0.11]),
    ("left_knee",       1, [0.0,   0.0,  -0.42]),
    ("right_knee",      2, [0.0,   0.0,  -0.42]),
    ("spine2",          3, [0.0,   0.0,   0.12]),
    ("left_ankle",      4, [0.0,   0.0,  -0.41]),
    ("right_ankle",     5, [0.0,   0.0,  -0.41]),
    ("spine3",          6, [0.0,   0.0,   0.13]),
    ("left_foot",       7, [0.13,  0.0,  -0.06]),
    ("right_foot",      8, [0.13,  0.0,  -0.06]),
    ("neck",            9, [0.0,   0.0,   0.14]),
    ("left_collar",     9, [0.0,   0.06,  0.09]),
    ("right_collar",    9, [0.0,  -0.06,  0.09]),
    ("head",           12, [0.0,   0.0,   0.11]),
    ("left_shoulder",  13, [0.0,   0.11,  0.02]),
    ("right_shoulder", 14, [0.0,  -0.11,  0.02]),
    ("left_elbow",     16, [0.0,   0.27,  0.0 ]),
    ("right_elbow",    17, [0.0,  -0.27,  0.0 ]),
    ("left_wrist",     18, [0.0,   0.25,  0.0 ]),
    ("right_wrist",    19, [0.0,  -0.25,  0.0 ]),
];

impl Default for SkeletonTemplate {
    fn default() -> Self {
        Self::canonical()
    }
}

impl SkeletonTemplate {
    /// The shipped constant template.
    pub fn canonical() -> Self {
        let mut names = [""; JOINT_COUNT];
        let mut parents = [0i8; JOINT_COUNT];
        let mut offsets = [Vec3::ZERO; JOINT_COUNT];
        for (i, (name, parent, off)) in JOINT_TABLE.iter().enumerate() {
            names[i] = name;
            parents[i] = *parent;
            offsets[i] = Vec3::new(off[0], off[1], off[2]);
        }
        SkeletonTemplate {
            names,
            parents,
            offsets,
        }
    }

    pub fn joint_name(&self, i: usize) -> &'static str {
        self.names[i]
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| *n == name)
    }

    /// Parent index, or `None` for the root.
    pub fn parent(&self, i: usize) -> Option<usize> {
        let p = self.parents[i];
        (p >= 0).then_some(p as usize)
    }

    pub fn rest_offset(&self, i: usize) -> Vec3 {
        self.offsets[i]
    }
}

/// 21 local joint rotations in 6D representation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BodyPose {
    pub rotations: [Rotation6D; POSE_JOINTS],
}

impl BodyPose {
    /// T-pose: every local rotation is the identity.
    pub fn identity() -> Self {
        BodyPose {
            rotations: [Rotation6D::identity(); POSE_JOINTS],
        }
    }

    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() != POSE_DIM {
            return Err(Error::Shape {
                context: "BodyPose::from_flat",
                expected: POSE_DIM,
                got: values.len(),
            });
        }
        let mut rotations = [Rotation6D::identity(); POSE_JOINTS];
        for (k, rot) in rotations.iter_mut().enumerate() {
            *rot = Rotation6D::from_slice(&values[k * 6..(k + 1) * 6]);
        }
        Ok(BodyPose { rotations })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(POSE_DIM);
        for r in &self.rotations {
            out.extend_from_slice(&r.0);
        }
        out
    }
}

/// Joint positions in the canonical frame, root at the origin.
///
/// `position(j) = position(parent) + accumulated_rotation(parent) · offset(j)`
/// with the accumulated rotation gathering local rotations down the chain.
/// Degenerate joint rotations propagate as errors naming the joint.
pub fn forward_kinematics(
    pose: &BodyPose,
    template: &SkeletonTemplate,
) -> Result<[Vec3; JOINT_COUNT]> {
    let mut positions = [Vec3::ZERO; JOINT_COUNT];
    let mut accumulated = [Mat3::identity(); JOINT_COUNT];
    for j in 1..JOINT_COUNT {
        let parent = template.parent(j).expect("non-root joints have parents");
        let local = rot6d_to_matrix(&pose.rotations[j - 1]).map_err(|e| match e {
            Error::DegenerateRotation { angle } => Error::validation(format!(
                "degenerate rotation at joint {j} ({}): separation angle {angle:.3e}",
                template.joint_name(j)
            )),
            other => other,
        })?;
        accumulated[j] = accumulated[parent] * local;
        positions[j] = positions[parent] + accumulated[parent] * template.rest_offset(j);
    }
    Ok(positions)
}
