//! Segments, capsules and the distance/overlap/sampling routines on them.

use serde::{Deserialize, Serialize};

use crate::geometry::vec3::Vec3;
use crate::rng::Rng;

/// A line segment between two points; zero length degenerates to a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub a: Vec3,
    pub b: Vec3,
}

impl Segment {
    pub fn new(a: Vec3, b: Vec3) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// Closest distance from a point to this segment.
    pub fn distance_to_point(&self, p: Vec3) -> f64 {
        let d = self.b - self.a;
        let len_sq = d.norm_sq();
        if len_sq <= f64::EPSILON {
            return (p - self.a).norm();
        }
        let t = ((p - self.a).dot(d) / len_sq).clamp(0.0, 1.0);
        (p - (self.a + d * t)).norm()
    }
}

/// A capsule: all points within `radius` of `axis`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capsule {
    pub axis: Segment,
    pub radius: f64,
}

impl Capsule {
    pub fn new(axis: Segment, radius: f64) -> Self {
        debug_assert!(radius > 0.0, "capsule radius must be positive");
        Capsule { axis, radius }
    }

    pub fn contains(&self, p: Vec3) -> bool {
        self.axis.distance_to_point(p) < self.radius
    }
}

const PARALLEL_EPS: f64 = 1e-12;

/// Minimum distance between two segments.
///
/// Clamped closed-form quadratic solution with the usual fallbacks for
/// parallel and degenerate (point-like) segments.
pub fn segment_segment_distance(s1: &Segment, s2: &Segment) -> f64 {
    let d1 = s1.b - s1.a;
    let d2 = s2.b - s2.a;
    let r = s1.a - s2.a;
    let a = d1.norm_sq();
    let e = d2.norm_sq();
    let f = d2.dot(r);

    let (s, t);
    if a <= PARALLEL_EPS && e <= PARALLEL_EPS {
        return r.norm();
    }
    if a <= PARALLEL_EPS {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(r);
        if e <= PARALLEL_EPS {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(d2);
            let denom = a * e - b * b;
            let s0 = if denom > PARALLEL_EPS * a * e {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            } else {
                t = t0;
                s = s0;
            }
        }
    }
    let c1 = s1.a + d1 * s;
    let c2 = s2.a + d2 * t;
    (c1 - c2).norm()
}

/// `max(0, r1 + r2 − distance(axis1, axis2))`: the penetration depth of two
/// capsules, zero when they are disjoint or tangent.
pub fn capsule_overlap(c1: &Capsule, c2: &Capsule) -> f64 {
    let d = segment_segment_distance(&c1.axis, &c2.axis);
    (c1.radius + c2.radius - d).max(0.0)
}

/// Area-uniform points on a capsule surface (cylinder body plus the two
/// hemispherical caps).
pub fn sample_capsule_surface(c: &Capsule, n: usize, rng: &mut Rng) -> Vec<Vec3> {
    assert!(n >= 1, "need at least one sample");
    let axis = c.axis.b - c.axis.a;
    let height = axis.norm();
    let dir = if height > 1e-15 {
        axis / height
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    // local frame perpendicular to dir
    let probe = if dir.x.abs() <= dir.y.abs() && dir.x.abs() <= dir.z.abs() {
        Vec3::new(1.0, 0.0, 0.0)
    } else if dir.y.abs() <= dir.z.abs() {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    let e1 = dir.cross(probe).normalized();
    let e2 = dir.cross(e1);

    let cylinder_area = std::f64::consts::TAU * c.radius * height;
    let cap_area = 4.0 * std::f64::consts::PI * c.radius * c.radius;
    let cylinder_frac = cylinder_area / (cylinder_area + cap_area);

    (0..n)
        .map(|_| {
            if rng.uniform() < cylinder_frac {
                let h = rng.uniform() * height;
                let theta = rng.uniform() * std::f64::consts::TAU;
                let radial = e1 * theta.cos() + e2 * theta.sin();
                c.axis.a + dir * h + radial * c.radius
            } else {
                // uniform direction on the sphere, attached to the cap it
                // points away from
                let v = loop {
                    let v = Vec3::new(rng.normal(), rng.normal(), rng.normal());
                    if v.norm() > 1e-9 {
                        break v.normalized();
                    }
                };
                let center = if v.dot(dir) >= 0.0 { c.axis.b } else { c.axis.a };
                center + v * c.radius
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(ax: f64, ay: f64, az: f64, bx: f64, by: f64, bz: f64) -> Segment {
        Segment::new(Vec3::new(ax, ay, az), Vec3::new(bx, by, bz))
    }

    #[test]
    fn parallel_offset_segments() {
        let s1 = seg(0.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let s2 = seg(0.0, 1.0, 0.0, 1.0, 1.0, 0.0);
        assert!((segment_segment_distance(&s1, &s2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn perpendicular_crossing_with_height_offset() {
        let s1 = seg(-1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
        let s2 = seg(0.0, -1.0, 1.0, 0.0, 1.0, 1.0);
        assert!((segment_segment_distance(&s1, &s2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_segments_fall_back_to_points() {
        let p = seg(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let q = seg(3.0, 4.0, 0.0, 3.0, 4.0, 0.0);
        assert!((segment_segment_distance(&p, &q) - 5.0).abs() < 1e-15);
        let s = seg(-1.0, 2.0, 0.0, 1.0, 2.0, 0.0);
        assert!((segment_segment_distance(&p, &s) - 2.0).abs() < 1e-15);
        // symmetric
        assert!((segment_segment_distance(&s, &p) - 2.0).abs() < 1e-15);
    }

    /// Brute-force oracle: dense 200×200 grid over both parameters.
    fn grid_distance(s1: &Segment, s2: &Segment) -> f64 {
        let mut best = f64::INFINITY;
        let n = 200;
        for i in 0..=n {
            let u = i as f64 / n as f64;
            let p = s1.a + (s1.b - s1.a) * u;
            for j in 0..=n {
                let v = j as f64 / n as f64;
                let q = s2.a + (s2.b - s2.a) * v;
                best = best.min((p - q).norm());
            }
        }
        best
    }

    #[test]
    fn matches_dense_grid_oracle() {
        let mut rng = crate::rng::Rng::seed_from(23);
        for _ in 0..200 {
            let v = rng.normal_vec(12);
            let s1 = seg(v[0], v[1], v[2], v[3], v[4], v[5]);
            let s2 = seg(v[6], v[7], v[8], v[9], v[10], v[11]);
            let exact = segment_segment_distance(&s1, &s2);
            let grid = grid_distance(&s1, &s2);
            // the grid over-estimates by at most the grid spacing
            assert!(
                exact <= grid + 1e-12 && grid - exact < 1e-3 * (1.0 + grid),
                "exact {exact} grid {grid}"
            );
            // symmetry
            let swapped = segment_segment_distance(&s2, &s1);
            assert!((exact - swapped).abs() < 1e-12);
        }
    }

    #[test]
    fn overlap_clips_to_zero_when_disjoint() {
        let c1 = Capsule::new(seg(0.0, 0.0, 0.0, 1.0, 0.0, 0.0), 0.3);
        let c2 = Capsule::new(seg(0.0, 1.0, 0.0, 1.0, 1.0, 0.0), 0.3);
        assert_eq!(capsule_overlap(&c1, &c2), 0.0);
    }

    #[test]
    fn overlap_arithmetic() {
        let c1 = Capsule::new(seg(0.0, 0.0, 0.0, 1.0, 0.0, 0.0), 0.3);
        let c2 = Capsule::new(seg(0.0, 0.4, 0.0, 1.0, 0.4, 0.0), 0.3);
        assert!((capsule_overlap(&c1, &c2) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn coincident_axes_overlap_is_radius_sum() {
        let c1 = Capsule::new(seg(0.0, 0.0, 0.0, 1.0, 0.0, 0.0), 0.1);
        let c2 = Capsule::new(seg(0.0, 0.0, 0.0, 1.0, 0.0, 0.0), 0.2);
        assert!((capsule_overlap(&c1, &c2) - 0.3).abs() < 1e-15);
    }

    #[test]
    fn surface_samples_sit_on_the_surface() {
        let mut rng = crate::rng::Rng::seed_from(29);
        let c = Capsule::new(seg(0.1, -0.2, 0.3, 0.4, 0.5, -0.6), 0.17);
        for p in sample_capsule_surface(&c, 2000, &mut rng) {
            let d = c.axis.distance_to_point(p);
            assert!((d - c.radius).abs() < 1e-9, "off-surface by {}", d - c.radius);
        }
    }

    #[test]
    fn cylinder_to_cap_ratio_matches_areas() {
        let mut rng = crate::rng::Rng::seed_from(31);
        let c = Capsule::new(seg(0.0, 0.0, 0.0, 0.0, 0.0, 0.8), 0.25);
        let n = 100_000;
        let pts = sample_capsule_surface(&c, n, &mut rng);
        // classify: within the axial extent → cylinder, else cap
        let on_cylinder = pts
            .iter()
            .filter(|p| p.z > 0.0 && p.z < 0.8)
            .count() as f64;
        let cyl_area = std::f64::consts::TAU * 0.25 * 0.8;
        let cap_area = 4.0 * std::f64::consts::PI * 0.25 * 0.25;
        let expect = cyl_area / (cyl_area + cap_area);
        let got = on_cylinder / n as f64;
        assert!(
            (got - expect).abs() < 0.02 * expect.max(1.0 - expect) + 0.01,
            "got {got}, expected {expect}"
        );
    }

    #[test]
    fn single_sample_works() {
        let mut rng = crate::rng::Rng::seed_from(37);
        let c = Capsule::new(seg(0.0, 0.0, 0.0, 0.0, 0.0, 1.0), 0.1);
        assert_eq!(sample_capsule_surface(&c, 1, &mut rng).len(), 1);
    }

    #[test]
    fn distance_never_exceeds_any_point_pair() {
        let mut rng = crate::rng::Rng::seed_from(41);
        for _ in 0..100 {
            let v = rng.normal_vec(12);
            let s1 = seg(v[0], v[1], v[2], v[3], v[4], v[5]);
            let s2 = seg(v[6], v[7], v[8], v[9], v[10], v[11]);
            let d = segment_segment_distance(&s1, &s2);
            for _ in 0..20 {
                let u = rng.uniform();
                let w = rng.uniform();
                let p = s1.a + (s1.b - s1.a) * u;
                let q = s2.a + (s2.b - s2.a) * w;
                assert!(d <= (p - q).norm() + 1e-12);
            }
        }
    }
}
