//! The 24-capsule body proxy.
//!
//! Capsules 0–20 wrap the 21 bones (capsule `k` covers the bone from joint
//! `k + 1` to its parent). Capsule 21/22 extend each wrist along the
//! forearm direction by [`HAND_LENGTH`]; capsule 23 extends the head joint
//! along the neck→head direction by [`HEAD_LENGTH`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Capsule, Segment, Vec3};
use crate::skeleton::{SkeletonTemplate, JOINT_COUNT};

pub const CAPSULE_COUNT: usize = 24;
pub const HAND_LENGTH: f64 = 0.18;
pub const HEAD_LENGTH: f64 = 0.20;

pub const LEFT_HAND_CAPSULE: usize = 21;
pub const RIGHT_HAND_CAPSULE: usize = 22;
pub const HEAD_CAPSULE: usize = 23;

/// Hip-contact capsules: the three bones that attach to the pelvis.
pub const HIP_CAPSULES: [usize; 3] = [0, 1, 2];
pub const HAND_CAPSULES: [usize; 2] = [LEFT_HAND_CAPSULE, RIGHT_HAND_CAPSULE];

const RADIUS_MIN: f64 = 0.005;
const RADIUS_MAX: f64 = 0.5;

/// Per-capsule radii in meters, all within `(0.005, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapsuleRadii(pub [f64; CAPSULE_COUNT]);

#[rustfmt::skip]
const DEFAULT_RADII: [f64; CAPSULE_COUNT] = [
    // bones 0..=20 in joint order: hips, spine1, thighs, spine2, shins,
    // spine3, feet, neck, collars, head-bone, shoulders, upper arms,
    // forearms — then the two hands and the head sphere.
    0.09, 0.09, 0.11,
    0.07, 0.07, 0.11,
    0.05, 0.05, 0.11,
    0.04, 0.04,
    0.06, 0.07, 0.07,
    0.08, 0.06, 0.06,
    0.05, 0.05,
    0.04, 0.04,
    0.04, 0.04,
    0.10,
];

impl Default for CapsuleRadii {
    /// The shipped table used when no fitting data exists: ≈0.11 m around
    /// the torso, ≈0.05 m limbs, 0.10 m head.
    fn default() -> Self {
        CapsuleRadii(DEFAULT_RADII)
    }
}

impl CapsuleRadii {
    pub fn new(radii: [f64; CAPSULE_COUNT]) -> Result<Self> {
        for (i, r) in radii.iter().enumerate() {
            if !(*r > RADIUS_MIN && *r < RADIUS_MAX) {
                return Err(Error::validation(format!(
                    "capsule {i} radius {r} outside ({RADIUS_MIN}, {RADIUS_MAX})"
                )));
            }
        }
        Ok(CapsuleRadii(radii))
    }

    pub fn bounds() -> (f64, f64) {
        (RADIUS_MIN, RADIUS_MAX)
    }
}

/// 24 capsules in fixed id order, all derived from one pose.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CapsuleProxy(pub Vec<Capsule>);

impl CapsuleProxy {
    pub fn capsules(&self) -> &[Capsule] {
        &self.0
    }
}

/// Capsule axis endpoints for the given joints, without radii.
///
/// Separated from radius application so the radius fitter can reuse the
/// axes while it optimizes.
pub fn capsule_axes(
    joints: &[Vec3; JOINT_COUNT],
    template: &SkeletonTemplate,
) -> [Segment; CAPSULE_COUNT] {
    let mut axes = [Segment::new(Vec3::ZERO, Vec3::ZERO); CAPSULE_COUNT];
    for j in 1..JOINT_COUNT {
        let parent = template.parent(j).expect("non-root");
        axes[j - 1] = Segment::new(joints[j], joints[parent]);
    }

    let dir_or = |from: Vec3, to: Vec3, fallback: Vec3| {
        let d = to - from;
        if d.norm() > 1e-12 {
            d.normalized()
        } else {
            fallback
        }
    };

    let left_wrist = template.joint_index("left_wrist").expect("fixed name");
    let left_elbow = template.joint_index("left_elbow").expect("fixed name");
    let forearm_l = dir_or(joints[left_elbow], joints[left_wrist], Vec3::new(0.0, 1.0, 0.0));
    axes[LEFT_HAND_CAPSULE] = Segment::new(
        joints[left_wrist],
        joints[left_wrist] + forearm_l * HAND_LENGTH,
    );

    let right_wrist = template.joint_index("right_wrist").expect("fixed name");
    let right_elbow = template.joint_index("right_elbow").expect("fixed name");
    let forearm_r = dir_or(
        joints[right_elbow],
        joints[right_wrist],
        Vec3::new(0.0, -1.0, 0.0),
    );
    axes[RIGHT_HAND_CAPSULE] = Segment::new(
        joints[right_wrist],
        joints[right_wrist] + forearm_r * HAND_LENGTH,
    );

    let head = template.joint_index("head").expect("fixed name");
    let neck = template.joint_index("neck").expect("fixed name");
    let up = dir_or(joints[neck], joints[head], Vec3::new(0.0, 0.0, 1.0));
    axes[HEAD_CAPSULE] = Segment::new(joints[head], joints[head] + up * HEAD_LENGTH);

    axes
}

/// Assemble the 24-capsule proxy for one set of joints.
pub fn build_capsule_proxy(
    joints: &[Vec3; JOINT_COUNT],
    radii: &CapsuleRadii,
    template: &SkeletonTemplate,
) -> CapsuleProxy {
    let axes = capsule_axes(joints, template);
    CapsuleProxy(
        axes.iter()
            .zip(radii.0.iter())
            .map(|(axis, &radius)| Capsule::new(*axis, radius))
            .collect(),
    )
}
