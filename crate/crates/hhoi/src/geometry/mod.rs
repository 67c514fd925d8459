//! Rotation representations, rigid/similarity transforms, segment and
//! capsule primitives, and triangle-mesh queries.
//!
//! Everything here is a pure function over immutable values; all distances
//! are metric (meters).

mod mesh;
mod rotation;
mod segment;
mod vec3;

pub use mesh::TriangleMesh;
pub(crate) use rotation::orthogonal_complement;
pub use rotation::{matrix_to_rot6d, rot6d_to_matrix, rot6d_to_matrix_regularized, Rotation6D};
pub use segment::{
    capsule_overlap, sample_capsule_surface, segment_segment_distance, Capsule, Segment,
};
pub use vec3::{Mat3, Vec3};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A similarity transform `x ↦ scale · rotation · x + translation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTransform {
    pub rotation: Mat3,
    pub translation: Vec3,
    pub scale: f64,
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        SimilarityTransform {
            rotation: Mat3::identity(),
            translation: Vec3::ZERO,
            scale: 1.0,
        }
    }

    /// Validates orthonormality (`‖RᵀR−I‖∞ < 1e-9`), positive determinant
    /// and positive scale.
    pub fn new(rotation: Mat3, translation: Vec3, scale: f64) -> Result<Self> {
        if !rotation.is_rotation(1e-9) {
            return Err(Error::validation(
                "similarity transform rotation is not orthonormal with det +1",
            ));
        }
        if !(scale > 0.0) {
            return Err(Error::validation(format!(
                "similarity transform scale must be positive, got {scale}"
            )));
        }
        Ok(SimilarityTransform {
            rotation,
            translation,
            scale,
        })
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation * p * self.scale + self.translation
    }

    /// Composition: `(self ∘ other)(x) = self(other(x))`.
    pub fn compose(&self, other: &SimilarityTransform) -> SimilarityTransform {
        SimilarityTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation * self.scale + self.translation,
            scale: self.scale * other.scale,
        }
    }

    pub fn inverse(&self) -> SimilarityTransform {
        let rot_inv = self.rotation.transpose();
        SimilarityTransform {
            rotation: rot_inv,
            translation: rot_inv * (-self.translation) * (1.0 / self.scale),
            scale: 1.0 / self.scale,
        }
    }
}
