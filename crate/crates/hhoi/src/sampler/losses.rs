//! The inconsistency and collision losses, recorded on the reverse-mode
//! tape so guided sampling can take their gradients with respect to every
//! sample coordinate.
//!
//! **Inconsistency** sums four weighted variances over the redundant
//! estimates each human accumulates across samples: scale (over all HOI
//! scales), pose embedding (every occurrence of the human), rotation
//! (own rotation vs. reference·relative, compared elementwise as 3×3
//! matrices) and translation (own vs. `s_ref·R_ref·t_rel + t_ref`).
//! `Var({x}) = (1/n)Σ‖x − x̄‖²`.
//!
//! **Collision** covers every *non-adjacent* human pair: each human is
//! rebuilt as its 24-capsule proxy (decode pose → forward kinematics →
//! capsules, then the human's similarity transform), and overlaps
//! `max(0, r_a + r_b − d)` are averaged over the 24×24 capsule pairs.
//!
//! Both losses are evaluated on the tape even when only values are
//! needed; the wrappers below hide the bookkeeping.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{orthogonal_complement, Vec3};
use crate::numerics::{Mlp, Tape, Var};
use crate::pose_codec::CodecParams;
use crate::sampler::graph::HhiGraph;
use crate::skeleton::{CapsuleRadii, SkeletonTemplate, HAND_LENGTH, HEAD_LENGTH, JOINT_COUNT};

/// The joint state of a scene being sampled: `N` HOI vectors and `M` HHI
/// vectors at one diffusion time.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneDraft {
    pub hoi: Vec<Vec<f64>>,
    pub hhi: Vec<Vec<f64>>,
    pub t: f64,
}

impl SceneDraft {
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for h in &self.hoi {
            out.extend_from_slice(h);
        }
        for h in &self.hhi {
            out.extend_from_slice(h);
        }
        out
    }

    pub fn unflatten(flat: &[f64], n_hoi: usize, n_hhi: usize, t: f64) -> Result<Self> {
        let expected = n_hoi * crate::diffusion::HOI_DIM + n_hhi * crate::diffusion::HHI_DIM;
        if flat.len() != expected {
            return Err(Error::Shape {
                context: "SceneDraft::unflatten",
                expected,
                got: flat.len(),
            });
        }
        let mut hoi = Vec::with_capacity(n_hoi);
        let mut off = 0;
        for _ in 0..n_hoi {
            hoi.push(flat[off..off + crate::diffusion::HOI_DIM].to_vec());
            off += crate::diffusion::HOI_DIM;
        }
        let mut hhi = Vec::with_capacity(n_hhi);
        for _ in 0..n_hhi {
            hhi.push(flat[off..off + crate::diffusion::HHI_DIM].to_vec());
            off += crate::diffusion::HHI_DIM;
        }
        Ok(SceneDraft { hoi, hhi, t })
    }
}

/// Everything the collision loss needs besides the draft itself.
#[derive(Clone)]
pub struct GuidanceContext {
    pub decoder: Arc<Mlp>,
    pub template: SkeletonTemplate,
    pub radii: CapsuleRadii,
    /// Scale floor applied when constructing scene humans.
    pub scale_floor: f64,
}

impl GuidanceContext {
    pub fn new(codec: &CodecParams, template: SkeletonTemplate, radii: CapsuleRadii) -> Self {
        GuidanceContext {
            decoder: Arc::clone(codec.decoder()),
            template,
            radii,
            scale_floor: 0.05,
        }
    }
}

/// Tape handles for every sample vector of a draft.
pub struct DraftVars {
    pub hoi: Vec<Var>,
    pub hhi: Vec<Var>,
}

pub fn record_draft(tape: &mut Tape, draft: &SceneDraft) -> DraftVars {
    DraftVars {
        hoi: draft.hoi.iter().map(|v| tape.input(v)).collect(),
        hhi: draft.hhi.iter().map(|v| tape.input(v)).collect(),
    }
}

/// Gram–Schmidt 6D→matrix on the tape, with the sampler's regularization
/// policy for degenerate blocks: value-equal to
/// [`crate::geometry::rot6d_to_matrix_regularized`].
fn gs_node(tape: &mut Tape, six: Var) -> Var {
    let mut a1 = tape.slice(six, 0, 3);
    if norm3(tape.value(a1)) < 1e-8 {
        let bump = tape.input(&[1e-6, 0.0, 0.0]);
        a1 = tape.add(a1, bump);
    }
    let mut a2 = tape.slice(six, 3, 3);
    if norm3(tape.value(a2)) < 1e-8 {
        let bump = tape.input(&[0.0, 1e-6, 0.0]);
        a2 = tape.add(a2, bump);
    }
    // rejection check against the normalized first vector
    {
        let a1v = Vec3::from_slice(tape.value(a1));
        let a2v = Vec3::from_slice(tape.value(a2));
        let b1v = a1v.normalized();
        let rejection = a2v - b1v * b1v.dot(a2v);
        if rejection.norm() < 1e-8 * a2v.norm().max(1.0) {
            let w = orthogonal_complement(b1v) * 1e-6;
            let bump = tape.input(&w.to_array());
            a2 = tape.add(a2, bump);
        }
    }
    let n1 = tape.norm(a1);
    let b1 = tape.div_scalar(a1, n1);
    let d = tape.dot(b1, a2);
    let proj = tape.mul_scalar(b1, d);
    let u2 = tape.sub(a2, proj);
    let n2 = tape.norm(u2);
    let b2 = tape.div_scalar(u2, n2);
    let b3 = tape.cross(b1, b2);
    tape.mat3_from_cols(b1, b2, b3)
}

fn norm3(v: &[f64]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// `(1/n)Σ‖x_k − x̄‖²` over equally sized vector variables.
fn variance_node(tape: &mut Tape, items: &[Var]) -> Var {
    let k = items.len();
    debug_assert!(k >= 1);
    let mut sum = items[0];
    for &x in &items[1..] {
        sum = tape.add(sum, x);
    }
    let mean = tape.scale(sum, 1.0 / k as f64);
    let mut total: Option<Var> = None;
    for &x in items {
        let d = tape.sub(x, mean);
        let sq = tape.dot(d, d);
        total = Some(match total {
            Some(t) => tape.add(t, sq),
            None => sq,
        });
    }
    tape.scale(total.expect("k >= 1"), 1.0 / k as f64)
}

/// Record `L_inc` for a draft; returns the scalar loss variable.
pub fn inconsistency_loss_node(tape: &mut Tape, vars: &DraftVars, graph: &HhiGraph) -> Var {
    let n = vars.hoi.len();
    let mut terms: Vec<Var> = Vec::new();

    // scale: N · Var over all HOI scales
    if n >= 1 {
        let scales: Vec<Var> = vars.hoi.iter().map(|&h| tape.slice(h, 9, 1)).collect();
        let var = variance_node(tape, &scales);
        terms.push(tape.scale(var, n as f64));
    }

    // rotations of every HOI sample and relative rotations of every edge,
    // converted once and shared below
    let hoi_rot: Vec<Var> = vars
        .hoi
        .iter()
        .map(|&h| {
            let six = tape.slice(h, 0, 6);
            gs_node(tape, six)
        })
        .collect();
    let edge_rot: Vec<Var> = vars
        .hhi
        .iter()
        .map(|&e| {
            let six = tape.slice(e, 10, 6);
            gs_node(tape, six)
        })
        .collect();

    for i in 0..n {
        // pose embedding occurrences: own HOI plus every edge touching i
        let mut poses: Vec<Var> = vec![tape.slice(vars.hoi[i], 10, 10)];
        for (e_idx, edge) in graph.edges.iter().enumerate() {
            if edge.to == i {
                poses.push(tape.slice(vars.hhi[e_idx], 0, 10));
            }
            if edge.from == i {
                poses.push(tape.slice(vars.hhi[e_idx], 19, 10));
            }
        }
        if poses.len() >= 2 {
            let var = variance_node(tape, &poses);
            terms.push(tape.scale(var, poses.len() as f64));
        }

        // rotation and translation candidates: the human's own estimate
        // plus one composed estimate per edge where it is the subject
        let mut rotations = vec![hoi_rot[i]];
        let mut translations = vec![tape.slice(vars.hoi[i], 6, 3)];
        for (e_idx, edge) in graph.edges.iter().enumerate() {
            if edge.from != i {
                continue;
            }
            let j = edge.to;
            rotations.push(tape.matmul3(hoi_rot[j], edge_rot[e_idx]));
            let t_rel = tape.slice(vars.hhi[e_idx], 16, 3);
            let rotated = tape.matvec3(hoi_rot[j], t_rel);
            let s_j = tape.slice(vars.hoi[j], 9, 1);
            let scaled = tape.mul_scalar(rotated, s_j);
            let t_j = tape.slice(vars.hoi[j], 6, 3);
            translations.push(tape.add(scaled, t_j));
        }
        let subject_count = rotations.len() - 1;
        if subject_count >= 1 {
            let var_r = variance_node(tape, &rotations);
            terms.push(tape.scale(var_r, subject_count as f64));
            let var_t = variance_node(tape, &translations);
            terms.push(tape.scale(var_t, subject_count as f64));
        }
    }

    terms
        .into_iter()
        .reduce(|a, b| tape.add(a, b))
        .unwrap_or_else(|| tape.scalar(0.0))
}

/// World-frame capsule endpoints and radii of one human, on the tape.
struct TapeProxy {
    endpoints: Vec<(Var, Var)>,
    radii: Vec<Var>,
}

fn build_tape_proxy(
    tape: &mut Tape,
    hoi: Var,
    ctx: &GuidanceContext,
) -> Result<TapeProxy> {
    let template = &ctx.template;
    let pose_emb = tape.slice(hoi, 10, 10);
    let decoded = tape.apply_mlp(&ctx.decoder, pose_emb)?;

    // forward kinematics
    let origin = tape.input(&[0.0; 3]);
    let identity9 = tape.input(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    let mut positions: Vec<Var> = vec![origin; JOINT_COUNT];
    let mut accumulated: Vec<Var> = vec![identity9; JOINT_COUNT];
    for j in 1..JOINT_COUNT {
        let parent = template.parent(j).expect("non-root");
        let six = tape.slice(decoded, (j - 1) * 6, 6);
        let local = gs_node(tape, six);
        accumulated[j] = tape.matmul3(accumulated[parent], local);
        let offset = tape.input(&template.rest_offset(j).to_array());
        let moved = tape.matvec3(accumulated[parent], offset);
        positions[j] = tape.add(positions[parent], moved);
    }

    // canonical capsule endpoints: 21 bones, two hands, head
    let mut canonical: Vec<(Var, Var)> = Vec::with_capacity(24);
    for j in 1..JOINT_COUNT {
        let parent = template.parent(j).expect("non-root");
        canonical.push((positions[j], positions[parent]));
    }
    let extend = |tape: &mut Tape, from: usize, toward: usize, length: f64| {
        let d = tape.sub(positions[toward], positions[from]);
        let n = tape.norm(d);
        let dir = tape.div_scalar(d, n);
        let step = tape.scale(dir, length);
        (positions[toward], tape.add(positions[toward], step))
    };
    let lw = template.joint_index("left_wrist").expect("fixed");
    let le = template.joint_index("left_elbow").expect("fixed");
    let rw = template.joint_index("right_wrist").expect("fixed");
    let re = template.joint_index("right_elbow").expect("fixed");
    let head = template.joint_index("head").expect("fixed");
    let neck = template.joint_index("neck").expect("fixed");
    canonical.push(extend(tape, le, lw, HAND_LENGTH));
    canonical.push(extend(tape, re, rw, HAND_LENGTH));
    canonical.push(extend(tape, neck, head, HEAD_LENGTH));

    // similarity transform from the HOI sample
    let rot_six = tape.slice(hoi, 0, 6);
    let world_rot = gs_node(tape, rot_six);
    let raw_scale = tape.slice(hoi, 9, 1);
    let scale = tape.clamp_min(raw_scale, ctx.scale_floor);
    let translation = tape.slice(hoi, 6, 3);
    let world = |tape: &mut Tape, p: Var| {
        let rotated = tape.matvec3(world_rot, p);
        let scaled = tape.mul_scalar(rotated, scale);
        tape.add(scaled, translation)
    };
    let endpoints: Vec<(Var, Var)> = canonical
        .iter()
        .map(|&(a, b)| (world(tape, a), world(tape, b)))
        .collect();
    let radii = ctx
        .radii
        .0
        .iter()
        .map(|&r| {
            let base = tape.input(&[r]);
            tape.mul(scale, base)
        })
        .collect();
    Ok(TapeProxy { endpoints, radii })
}

/// Segment-segment distance on the tape: the clamped closed-form solution
/// with host-side branching on recorded values (value-equal to
/// [`crate::geometry::segment_segment_distance`]).
fn segment_distance_node(tape: &mut Tape, p1: Var, q1: Var, p2: Var, q2: Var) -> Var {
    const EPS: f64 = 1e-12;
    let d1 = tape.sub(q1, p1);
    let d2 = tape.sub(q2, p2);
    let r = tape.sub(p1, p2);
    let a = tape.dot(d1, d1);
    let e = tape.dot(d2, d2);
    let f = tape.dot(d2, r);
    let a_v = tape.value1(a);
    let e_v = tape.value1(e);

    if a_v <= EPS && e_v <= EPS {
        return tape.norm(r);
    }
    let (s, t) = if a_v <= EPS {
        let t_raw = tape.div(f, e);
        (tape.scalar(0.0), tape.clamp(t_raw, 0.0, 1.0))
    } else {
        let c = tape.dot(d1, r);
        if e_v <= EPS {
            let negc = tape.neg(c);
            let s_raw = tape.div(negc, a);
            (tape.clamp(s_raw, 0.0, 1.0), tape.scalar(0.0))
        } else {
            let b = tape.dot(d1, d2);
            let ae = tape.mul(a, e);
            let bb = tape.mul(b, b);
            let denom = tape.sub(ae, bb);
            let denom_v = tape.value1(denom);
            let s0 = if denom_v > EPS * a_v * e_v {
                let bf = tape.mul(b, f);
                let ce = tape.mul(c, e);
                let num = tape.sub(bf, ce);
                let s_raw = tape.div(num, denom);
                tape.clamp(s_raw, 0.0, 1.0)
            } else {
                tape.scalar(0.0)
            };
            let bs = tape.mul(b, s0);
            let bsf = tape.add(bs, f);
            let t0 = tape.div(bsf, e);
            let t0_v = tape.value1(t0);
            if t0_v < 0.0 {
                let negc = tape.neg(c);
                let s_raw = tape.div(negc, a);
                (tape.clamp(s_raw, 0.0, 1.0), tape.scalar(0.0))
            } else if t0_v > 1.0 {
                let bc = tape.sub(b, c);
                let s_raw = tape.div(bc, a);
                (tape.clamp(s_raw, 0.0, 1.0), tape.scalar(1.0))
            } else {
                (s0, t0)
            }
        }
    };
    let move1 = tape.mul_scalar(d1, s);
    let c1 = tape.add(p1, move1);
    let move2 = tape.mul_scalar(d2, t);
    let c2 = tape.add(p2, move2);
    let diff = tape.sub(c1, c2);
    tape.norm(diff)
}

/// Record `L_col` for a draft; returns the scalar loss variable.
pub fn collision_loss_node(
    tape: &mut Tape,
    vars: &DraftVars,
    graph: &HhiGraph,
    ctx: &GuidanceContext,
) -> Result<Var> {
    let pairs = graph.non_adjacent_pairs();
    if pairs.is_empty() {
        return Ok(tape.scalar(0.0));
    }
    let mut proxies: Vec<Option<TapeProxy>> = (0..vars.hoi.len()).map(|_| None).collect();
    for &(i, j) in &pairs {
        for idx in [i, j] {
            if proxies[idx].is_none() {
                proxies[idx] = Some(build_tape_proxy(tape, vars.hoi[idx], ctx)?);
            }
        }
    }
    let mut pair_losses = Vec::with_capacity(pairs.len());
    for &(i, j) in &pairs {
        let (pi, pj) = (
            proxies[i].as_ref().expect("built above"),
            proxies[j].as_ref().expect("built above"),
        );
        let mut overlaps = Vec::with_capacity(576);
        for a in 0..24 {
            for b in 0..24 {
                let d = segment_distance_node(
                    tape,
                    pi.endpoints[a].0,
                    pi.endpoints[a].1,
                    pj.endpoints[b].0,
                    pj.endpoints[b].1,
                );
                let sum_r = tape.add(pi.radii[a], pj.radii[b]);
                let diff = tape.sub(sum_r, d);
                overlaps.push(tape.relu(diff));
            }
        }
        let stacked = tape.concat(&overlaps);
        let total = tape.sum(stacked);
        pair_losses.push(tape.scale(total, 1.0 / (24.0 * 24.0)));
    }
    Ok(pair_losses
        .into_iter()
        .reduce(|x, y| tape.add(x, y))
        .expect("at least one pair"))
}

/// Value of the inconsistency loss.
pub fn inconsistency_loss(draft: &SceneDraft, graph: &HhiGraph) -> f64 {
    let mut tape = Tape::new();
    let vars = record_draft(&mut tape, draft);
    let node = inconsistency_loss_node(&mut tape, &vars, graph);
    tape.value1(node)
}

/// Value of the collision loss.
pub fn collision_loss(draft: &SceneDraft, graph: &HhiGraph, ctx: &GuidanceContext) -> Result<f64> {
    let mut tape = Tape::new();
    let vars = record_draft(&mut tape, draft);
    let node = collision_loss_node(&mut tape, &vars, graph, ctx)?;
    Ok(tape.value1(node))
}
