//! Capsule-radius fitting.
//!
//! Given posed skeletons and reference surface point clouds, the fitter
//! searches per-capsule radii minimizing the mean symmetric Chamfer
//! distance (squared) between points sampled on the capsule proxy and the
//! reference cloud. Radii are optimized in log space with Adam so they
//! stay positive; after every step they are clamped to the legal radius
//! interval.
//!
//! The surface pattern (capsule choice, axial position, radial direction)
//! is drawn once per fit from the config seed and held fixed; each sample
//! point moves as `base + direction · radius`, so the objective is a
//! deterministic function of the radii and Adam converges cleanly.
//!
//! The reverse direction (cloud → proxy) is evaluated against the exact
//! capsule surfaces, `min_c |dist(q, axis_c) − r_c|`, rather than against
//! the sampled points: the analytic form has no point-discreteness bias,
//! which matters because the finite-sample nearest-neighbor distance
//! otherwise shrinks every radius by a few percent.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Segment, Vec3};
use crate::numerics::{AdamConfig, AdamState};
use crate::rng::Rng;
use crate::skeleton::proxy::{capsule_axes, CapsuleRadii, CAPSULE_COUNT};
use crate::skeleton::{forward_kinematics, BodyPose, SkeletonTemplate};

#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    /// Adam steps over the log-radii.
    pub steps: usize,
    /// Points sampled on the proxy surface per pose per step.
    pub surface_samples: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            steps: 500,
            surface_samples: 5000,
            seed: 0,
        }
    }
}

/// One sampled proxy-surface point, kept decomposed so the radius
/// derivative is explicit: `point = base + normal · radius`.
struct SurfaceSample {
    capsule: usize,
    base: Vec3,
    normal: Vec3,
}

fn sample_proxy_surface(
    axes: &[Segment; CAPSULE_COUNT],
    radii: &[f64; CAPSULE_COUNT],
    n: usize,
    rng: &mut Rng,
) -> Vec<SurfaceSample> {
    // area-proportional allocation over capsules
    let areas: Vec<f64> = axes
        .iter()
        .zip(radii)
        .map(|(axis, &r)| {
            let h = axis.length();
            std::f64::consts::TAU * r * h + 4.0 * std::f64::consts::PI * r * r
        })
        .collect();
    let total: f64 = areas.iter().sum();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut pick = rng.uniform() * total;
        let mut capsule = CAPSULE_COUNT - 1;
        for (c, a) in areas.iter().enumerate() {
            if pick < *a {
                capsule = c;
                break;
            }
            pick -= a;
        }
        let axis = &axes[capsule];
        let r = radii[capsule];
        let d = axis.b - axis.a;
        let h = d.norm();
        let dir = if h > 1e-15 { d / h } else { Vec3::new(0.0, 0.0, 1.0) };
        let probe = if dir.x.abs() <= dir.y.abs() && dir.x.abs() <= dir.z.abs() {
            Vec3::new(1.0, 0.0, 0.0)
        } else if dir.y.abs() <= dir.z.abs() {
            Vec3::new(0.0, 1.0, 0.0)
        } else {
            Vec3::new(0.0, 0.0, 1.0)
        };
        let e1 = dir.cross(probe).normalized();
        let e2 = dir.cross(e1);

        let cyl_area = std::f64::consts::TAU * r * h;
        let frac = cyl_area / areas[capsule];
        let (base, normal) = if rng.uniform() < frac {
            let along = rng.uniform() * h;
            let theta = rng.uniform() * std::f64::consts::TAU;
            (
                axis.a + dir * along,
                e1 * theta.cos() + e2 * theta.sin(),
            )
        } else {
            let v = loop {
                let v = Vec3::new(rng.normal(), rng.normal(), rng.normal());
                if v.norm() > 1e-9 {
                    break v.normalized();
                }
            };
            let center = if v.dot(dir) >= 0.0 { axis.b } else { axis.a };
            (center, v)
        };
        out.push(SurfaceSample {
            capsule,
            base,
            normal,
        });
    }
    out
}

fn nearest_sq(p: Vec3, cloud: &[Vec3]) -> (usize, f64) {
    let mut best = (0usize, f64::INFINITY);
    for (i, q) in cloud.iter().enumerate() {
        let d = (p - *q).norm_sq();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// Mean symmetric squared Chamfer distance between two point sets.
pub fn symmetric_chamfer_sq(a: &[Vec3], b: &[Vec3]) -> f64 {
    let fwd: f64 = a.iter().map(|&p| nearest_sq(p, b).1).sum::<f64>() / a.len() as f64;
    let rev: f64 = b.iter().map(|&q| nearest_sq(q, a).1).sum::<f64>() / b.len() as f64;
    fwd + rev
}

/// Fit per-capsule radii to reference surface clouds.
///
/// `poses[i]` pairs with `reference_clouds[i]`. Deterministic for a fixed
/// `config.seed`.
pub fn fit_radii(
    poses: &[BodyPose],
    reference_clouds: &[Vec<Vec3>],
    template: &SkeletonTemplate,
    config: &FitConfig,
) -> Result<CapsuleRadii> {
    if poses.is_empty() || poses.len() != reference_clouds.len() {
        return Err(Error::validation(format!(
            "fit_radii needs matched poses and clouds, got {} poses and {} clouds",
            poses.len(),
            reference_clouds.len()
        )));
    }
    for (i, cloud) in reference_clouds.iter().enumerate() {
        if cloud.is_empty() {
            return Err(Error::validation(format!("reference cloud {i} is empty")));
        }
    }

    let axes_per_pose: Vec<[Segment; CAPSULE_COUNT]> = poses
        .iter()
        .map(|pose| Ok(capsule_axes(&forward_kinematics(pose, template)?, template)))
        .collect::<Result<_>>()?;

    // fixed sampling pattern, allocated with the initial radii
    let initial = CapsuleRadii::default().0;
    let mut rng = Rng::seed_from(config.seed);
    let patterns: Vec<Vec<SurfaceSample>> = axes_per_pose
        .iter()
        .map(|axes| sample_proxy_surface(axes, &initial, config.surface_samples, &mut rng))
        .collect();

    let (r_min, r_max) = CapsuleRadii::bounds();
    let log_lo = (r_min * 1.02).ln();
    let log_hi = (r_max * 0.98).ln();
    let mut log_r: Vec<f64> = initial.iter().map(|r| r.ln()).collect();
    let mut adam = AdamState::new(CAPSULE_COUNT, AdamConfig::default());

    for step in 0..config.steps {
        let mut radii = [0.0; CAPSULE_COUNT];
        for (r, lr) in radii.iter_mut().zip(&log_r) {
            *r = lr.exp();
        }
        let mut grad_r = [0.0; CAPSULE_COUNT];

        for (pose_idx, (samples, cloud)) in patterns.iter().zip(reference_clouds).enumerate() {
            let points: Vec<Vec3> = samples
                .iter()
                .map(|s| s.base + s.normal * radii[s.capsule])
                .collect();

            // forward: proxy point → nearest reference point
            let fw = 1.0 / (points.len() as f64 * patterns.len() as f64);
            for (s, p) in samples.iter().zip(&points) {
                let (j, _) = nearest_sq(*p, cloud);
                grad_r[s.capsule] += 2.0 * (*p - cloud[j]).dot(s.normal) * fw;
            }
            // reverse: reference point → nearest exact capsule surface
            let rw = 1.0 / (cloud.len() as f64 * patterns.len() as f64);
            let axes = &axes_per_pose[pose_idx];
            for q in cloud {
                let mut best = (0usize, f64::INFINITY, 0.0);
                for (c, axis) in axes.iter().enumerate() {
                    let d = axis.distance_to_point(*q);
                    let gap = (d - radii[c]).abs();
                    if gap < best.1 {
                        best = (c, gap, d);
                    }
                }
                grad_r[best.0] += 2.0 * (radii[best.0] - best.2) * rw;
            }
        }

        // chain through the log parameterization
        let grads: Vec<f64> = grad_r
            .iter()
            .zip(&log_r)
            .map(|(g, lr)| g * lr.exp())
            .collect();
        adam.step(&mut log_r, &grads).map_err(|e| match e {
            Error::NonFiniteTraining { .. } => Error::NonFiniteTraining { epoch: 0, step },
            other => other,
        })?;
        for lr in log_r.iter_mut() {
            *lr = lr.clamp(log_lo, log_hi);
        }
    }

    let mut out = [0.0; CAPSULE_COUNT];
    for (r, lr) in out.iter_mut().zip(&log_r) {
        *r = lr.exp();
    }
    CapsuleRadii::new(out)
}

/// Load a whitespace-separated XYZ point file (meters, one point per line).
pub fn load_xyz(path: impl AsRef<Path>) -> Result<Vec<Vec3>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_xyz(&text)
}

pub fn parse_xyz(text: &str) -> Result<Vec<Vec3>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| {
                    Error::validation(format!(
                        "xyz line {}: bad coordinate {tok:?}",
                        lineno + 1
                    ))
                })
            })
            .collect::<Result<_>>()?;
        if coords.len() != 3 {
            return Err(Error::validation(format!(
                "xyz line {}: expected 3 coordinates, got {}",
                lineno + 1,
                coords.len()
            )));
        }
        out.push(Vec3::new(coords[0], coords[1], coords[2]));
    }
    Ok(out)
}
