//! The two relation sample vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Rotation6D, Vec3};
use crate::pose_codec::{PoseEmbedding, EMBEDDING_DIM};

pub const HOI_DIM: usize = 6 + 3 + 1 + EMBEDDING_DIM;
pub const HHI_DIM: usize = EMBEDDING_DIM + 6 + 3 + EMBEDDING_DIM;

/// One human tied to the object frame: `[rotation6d, translation, scale,
/// pose embedding]`, 20 numbers.
///
/// Scale positivity is *not* an invariant here — the value diffuses as a
/// raw real and is only clamped when a scene human is constructed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HoiSample {
    pub rotation: Rotation6D,
    pub translation: Vec3,
    pub scale: f64,
    pub pose: PoseEmbedding,
}

impl HoiSample {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(HOI_DIM);
        v.extend_from_slice(&self.rotation.0);
        v.extend_from_slice(&self.translation.to_array());
        v.push(self.scale);
        v.extend_from_slice(&self.pose.0);
        v
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() != HOI_DIM {
            return Err(Error::Shape {
                context: "HoiSample::from_flat",
                expected: HOI_DIM,
                got: flat.len(),
            });
        }
        Ok(HoiSample {
            rotation: Rotation6D::from_slice(&flat[0..6]),
            translation: Vec3::from_slice(&flat[6..9]),
            scale: flat[9],
            pose: PoseEmbedding::from_slice(&flat[10..20]),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

/// A second human tied to a reference human: `[pose_ref, rotation6d,
/// translation, pose_other]`, 29 numbers. The transform takes the other
/// human's canonical frame into the reference human's frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HhiSample {
    pub pose_ref: PoseEmbedding,
    pub rotation_rel: Rotation6D,
    pub translation_rel: Vec3,
    pub pose_other: PoseEmbedding,
}

impl HhiSample {
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(HHI_DIM);
        v.extend_from_slice(&self.pose_ref.0);
        v.extend_from_slice(&self.rotation_rel.0);
        v.extend_from_slice(&self.translation_rel.to_array());
        v.extend_from_slice(&self.pose_other.0);
        v
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() != HHI_DIM {
            return Err(Error::Shape {
                context: "HhiSample::from_flat",
                expected: HHI_DIM,
                got: flat.len(),
            });
        }
        Ok(HhiSample {
            pose_ref: PoseEmbedding::from_slice(&flat[0..10]),
            rotation_rel: Rotation6D::from_slice(&flat[10..16]),
            translation_rel: Vec3::from_slice(&flat[16..19]),
            pose_other: PoseEmbedding::from_slice(&flat[19..29]),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    #[test]
    fn dims_are_twenty_and_twenty_nine() {
        assert_eq!(HOI_DIM, 20);
        assert_eq!(HHI_DIM, 29);
    }

    proptest! {
        #[test]
        fn hoi_flat_roundtrip(seed in 0u64..5000) {
            let mut rng = Rng::seed_from(seed);
            let flat = rng.normal_vec(HOI_DIM);
            let sample = HoiSample::from_flat(&flat).unwrap();
            prop_assert_eq!(sample.to_flat(), flat);
        }

        #[test]
        fn hhi_flat_roundtrip(seed in 0u64..5000) {
            let mut rng = Rng::seed_from(seed);
            let flat = rng.normal_vec(HHI_DIM);
            let sample = HhiSample::from_flat(&flat).unwrap();
            prop_assert_eq!(sample.to_flat(), flat);
        }
    }

    #[test]
    fn wrong_length_is_a_shape_error() {
        assert!(HoiSample::from_flat(&[0.0; 19]).is_err());
        assert!(HhiSample::from_flat(&[0.0; 30]).is_err());
    }
}
