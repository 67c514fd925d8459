//! Compositional score-based generation of multi-human-plus-object scenes.
//!
//! The library trains one score model per *relation* — human↔object
//! ([`diffusion::Mode::Hoi`]) and human↔human ([`diffusion::Mode::Hhi`]) —
//! and fuses any number of them at sampling time. A scene with `N` humans
//! around one object is sampled by integrating a guided probability-flow
//! ODE over the joint state of `N` HOI samples and `M` HHI samples, with
//! two extra drift terms:
//!
//! * an **inconsistency loss** that penalises disagreement between the
//!   redundant estimates of each human's scale, pose, rotation and
//!   translation, and
//! * a **collision loss** that keeps humans without an explicit pairwise
//!   relation from interpenetrating, measured on a 24-capsule body proxy.
//!
//! Both gradients are obtained with the reverse-mode tape in [`numerics`],
//! which differentiates through the 6D-rotation orthogonalisation, the pose
//! decoder, forward kinematics and capsule distances.
//!
//! The accompanying book (`book/` in the repository root) walks through
//! each subsystem with runnable snippets; the snippets double as doc-tests.
//!
//! # Module map
//!
//! | module | contents |
//! |--------|----------|
//! | [`numerics`] | dense linear algebra, MLPs, reverse-mode tape, Adam |
//! | [`geometry`] | 6D rotations, segments, capsules, triangle meshes |
//! | [`skeleton`] | 22-joint template, forward kinematics, capsule proxy |
//! | [`pose_codec`] | 126D↔10D body-pose encoder/decoder |
//! | [`diffusion`] | noise schedule, score networks, DSM training |
//! | [`sampler`] | PF-ODE sampling, guided composition, scene assembly |
//! | [`dataio`] | dataset records, normalisation, toy generators, prompts |
//! | [`metrics`] | Fréchet distances, penetration, contact, success rate |
//! | [`checkpoint`] | the `HHOI-CKPT-1` tensor container |

pub mod checkpoint;
pub mod dataio;
pub mod diffusion;
pub mod error;
pub mod geometry;
pub mod metrics;
pub mod numerics;
pub mod pose_codec;
pub mod rng;
pub mod sampler;
pub mod skeleton;

mod book;

pub use error::{Error, Result};
