//! The 6D rotation representation.
//!
//! A rotation is carried as the first two columns of its matrix; the full
//! matrix is recovered by Gram–Schmidt: normalize the first vector,
//! orthogonalize the second against it, complete with a cross product.
//! The map is continuous in the representation, which is why regression
//! targets and diffusion states use it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::vec3::{Mat3, Vec3};

/// Two stacked 3-vectors: the un-orthogonalized first and second columns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation6D(pub [f64; 6]);

impl Rotation6D {
    pub fn from_slice(s: &[f64]) -> Self {
        let mut v = [0.0; 6];
        v.copy_from_slice(&s[..6]);
        Rotation6D(v)
    }

    pub fn first(&self) -> Vec3 {
        Vec3::new(self.0[0], self.0[1], self.0[2])
    }

    pub fn second(&self) -> Vec3 {
        Vec3::new(self.0[3], self.0[4], self.0[5])
    }

    pub fn identity() -> Self {
        Rotation6D([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    }
}

/// Minimum separation angle (radians) below which the two embedded
/// vectors count as parallel and the strict conversion fails.
pub const DEGENERATE_ANGLE: f64 = 1e-7;

fn separation_angle(a: Vec3, b: Vec3) -> f64 {
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let cos = (a.dot(b) / (na * nb)).clamp(-1.0, 1.0);
    let angle = cos.acos();
    // parallel and anti-parallel are both degenerate
    angle.min(std::f64::consts::PI - angle)
}

/// Gram–Schmidt conversion to a proper rotation matrix.
///
/// Errors when the embedded vectors are zero or within
/// [`DEGENERATE_ANGLE`] of parallel.
pub fn rot6d_to_matrix(r: &Rotation6D) -> Result<Mat3> {
    let a1 = r.first();
    let a2 = r.second();
    let angle = separation_angle(a1, a2);
    if a1.norm() == 0.0 || a2.norm() == 0.0 || angle <= DEGENERATE_ANGLE {
        return Err(Error::DegenerateRotation { angle });
    }
    Ok(gram_schmidt(a1, a2))
}

fn gram_schmidt(a1: Vec3, a2: Vec3) -> Mat3 {
    let b1 = a1.normalized();
    let u2 = a2 - b1 * b1.dot(a2);
    let b2 = u2.normalized();
    let b3 = b1.cross(b2);
    Mat3::from_cols(b1, b2, b3)
}

/// Conversion that survives degenerate inputs.
///
/// Near-parallel or near-zero blocks are nudged by `1e-6` along an
/// orthogonal complement before Gram–Schmidt, keeping drift well-defined
/// while a sampler passes through high-noise states. Non-degenerate input
/// converts exactly as [`rot6d_to_matrix`].
pub fn rot6d_to_matrix_regularized(r: &Rotation6D) -> Mat3 {
    let mut a1 = r.first();
    if a1.norm() < 1e-8 {
        a1 = a1 + Vec3::new(1e-6, 0.0, 0.0);
    }
    let mut a2 = r.second();
    if a2.norm() < 1e-8 {
        a2 = a2 + Vec3::new(0.0, 1e-6, 0.0);
    }
    let b1 = a1.normalized();
    let rejection = a2 - b1 * b1.dot(a2);
    if rejection.norm() < 1e-8 * a2.norm().max(1.0) {
        a2 = a2 + orthogonal_complement(b1) * 1e-6;
    }
    gram_schmidt(a1, a2)
}

/// Any unit vector orthogonal to `v` (assumed unit).
pub(crate) fn orthogonal_complement(v: Vec3) -> Vec3 {
    // axis least aligned with v gives a stable cross product
    let probe = if v.x.abs() <= v.y.abs() && v.x.abs() <= v.z.abs() {
        Vec3::new(1.0, 0.0, 0.0)
    } else if v.y.abs() <= v.z.abs() {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    v.cross(probe).normalized()
}

/// Take the first two columns of a validated rotation matrix.
pub fn matrix_to_rot6d(m: &Mat3) -> Result<Rotation6D> {
    if !m.is_rotation(1e-6) {
        return Err(Error::validation(
            "matrix_to_rot6d: input is not orthonormal with det +1",
        ));
    }
    let c0 = m.col(0);
    let c1 = m.col(1);
    Ok(Rotation6D([c0.x, c0.y, c0.z, c1.x, c1.y, c1.z]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random_rotation(rng: &mut Rng) -> Mat3 {
        // uniform axis, uniform angle: a valid rotation either way
        let axis = loop {
            let v = Vec3::new(rng.normal(), rng.normal(), rng.normal());
            if v.norm() > 1e-6 {
                break v.normalized();
            }
        };
        Mat3::from_axis_angle(axis, rng.uniform_in(-std::f64::consts::PI, std::f64::consts::PI))
    }

    #[test]
    fn canonical_frame_is_identity() {
        let m = rot6d_to_matrix(&Rotation6D([1.0, 0.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
        assert_eq!(m, Mat3::identity());
    }

    #[test]
    fn conversion_ignores_vector_lengths() {
        let m = rot6d_to_matrix(&Rotation6D([2.0, 0.0, 0.0, 0.0, 3.0, 0.0])).unwrap();
        assert_eq!(m, Mat3::identity());
    }

    #[test]
    fn hand_computed_gram_schmidt_case() {
        // (1,1,0) and (0,1,0):
        //   b1 = (1/√2, 1/√2, 0)
        //   u2 = (0,1,0) − (1/√2)·b1 = (−1/2, 1/2, 0) → b2 = (−1/√2, 1/√2, 0)
        //   b3 = b1 × b2 = (0, 0, 1)
        let m = rot6d_to_matrix(&Rotation6D([1.0, 1.0, 0.0, 0.0, 1.0, 0.0])).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let expect = Mat3::from_cols(
            Vec3::new(s, s, 0.0),
            Vec3::new(-s, s, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        );
        for i in 0..3 {
            for j in 0..3 {
                assert!((m.get(i, j) - expect.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn parallel_input_is_degenerate() {
        let err = rot6d_to_matrix(&Rotation6D([1.0, 0.0, 0.0, 2.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::DegenerateRotation { .. }));
        let err = rot6d_to_matrix(&Rotation6D([1.0, 0.0, 0.0, -3.0, 0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::DegenerateRotation { .. }));
        let err = rot6d_to_matrix(&Rotation6D([0.0; 6])).unwrap_err();
        assert!(matches!(err, Error::DegenerateRotation { .. }));
    }

    #[test]
    fn identity_maps_to_canonical_six() {
        let r = matrix_to_rot6d(&Mat3::identity()).unwrap();
        assert_eq!(r.0, [1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn z_quarter_turn_columns() {
        // Rz(90°) columns: (0,1,0) and (−1,0,0)
        let r = matrix_to_rot6d(&Mat3::rotation_z(std::f64::consts::FRAC_PI_2)).unwrap();
        let expect = [0.0, 1.0, 0.0, -1.0, 0.0, 0.0];
        for (a, b) in r.0.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn roundtrip_on_random_rotations() {
        let mut rng = Rng::seed_from(17);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let m = random_rotation(&mut rng);
            let r = matrix_to_rot6d(&m).unwrap();
            let back = rot6d_to_matrix(&r).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    worst = worst.max((m.get(i, j) - back.get(i, j)).abs());
                }
            }
        }
        assert!(worst < 1e-12, "max roundtrip error {worst}");
    }

    #[test]
    fn outputs_are_orthonormal_with_unit_det() {
        let mut rng = Rng::seed_from(18);
        for _ in 0..500 {
            let r = Rotation6D([
                rng.normal(),
                rng.normal(),
                rng.normal(),
                rng.normal(),
                rng.normal(),
                rng.normal(),
            ]);
            let Ok(m) = rot6d_to_matrix(&r) else {
                continue;
            };
            assert!(m.is_rotation(1e-10));
            assert!((m.det() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn regularized_conversion_handles_degenerate_blocks() {
        for bad in [
            Rotation6D([0.0; 6]),
            Rotation6D([1.0, 0.0, 0.0, 2.0, 0.0, 0.0]),
            Rotation6D([0.0, 0.0, 0.0, 1.0, 1.0, 0.0]),
        ] {
            let m = rot6d_to_matrix_regularized(&bad);
            assert!(m.is_rotation(1e-6), "failed for {bad:?}");
        }
        // non-degenerate inputs convert exactly as the strict path
        let good = Rotation6D([0.3, -0.7, 0.1, 0.9, 0.2, -0.4]);
        assert_eq!(
            rot6d_to_matrix(&good).unwrap(),
            rot6d_to_matrix_regularized(&good)
        );
    }
}
