//! Scene records and the HOI/HHI extraction (normalization) operations.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diffusion::{HhiSample, HoiSample};
use crate::error::{Error, Result};
use crate::geometry::{matrix_to_rot6d, Mat3, Vec3};
use crate::pose_codec::CodecParams;
use crate::skeleton::POSE_DIM;

/// Object placement within one captured frame. The mesh path is relative
/// to the dataset file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub category: String,
    /// Row-major rotation.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub mesh: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HumanRecord {
    pub id: u64,
    /// Row-major rotation.
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub scale: f64,
    /// 126 values: 21 joint rotations in 6D representation.
    pub pose126: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FramePrompts {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hoi: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hhi: Option<String>,
}

/// One captured or generated scene frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HhoiRecord {
    pub frame_id: u64,
    pub object: ObjectRecord,
    pub humans: Vec<HumanRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompts: Option<FramePrompts>,
}

impl HumanRecord {
    pub fn rotation_mat(&self) -> Mat3 {
        Mat3::from_rows(self.rotation)
    }

    pub fn translation_vec(&self) -> Vec3 {
        Vec3::new(self.translation[0], self.translation[1], self.translation[2])
    }
}

impl ObjectRecord {
    pub fn rotation_mat(&self) -> Mat3 {
        Mat3::from_rows(self.rotation)
    }

    pub fn translation_vec(&self) -> Vec3 {
        Vec3::new(self.translation[0], self.translation[1], self.translation[2])
    }
}

const ROTATION_TOL: f64 = 1e-6;

/// Record-level validation: at least one human, orthonormal rotations,
/// finite values, 126-length poses.
pub fn validate_record(record: &HhoiRecord) -> Result<()> {
    if record.humans.is_empty() {
        return Err(Error::validation(format!(
            "frame {}: no humans",
            record.frame_id
        )));
    }
    let check_rot = |m: &Mat3, what: &str| -> Result<()> {
        if !m.is_finite() {
            return Err(Error::validation(format!(
                "frame {}: {what} rotation has non-finite entries",
                record.frame_id
            )));
        }
        if !m.is_rotation(ROTATION_TOL) {
            return Err(Error::validation(format!(
                "frame {}: {what} rotation is not orthonormal within {ROTATION_TOL}",
                record.frame_id
            )));
        }
        Ok(())
    };
    check_rot(&record.object.rotation_mat(), "object")?;
    for h in &record.humans {
        check_rot(&h.rotation_mat(), &format!("human {}", h.id))?;
        if h.pose126.len() != POSE_DIM {
            return Err(Error::validation(format!(
                "frame {}: human {} pose has {} values, expected {POSE_DIM}",
                record.frame_id,
                h.id,
                h.pose126.len()
            )));
        }
        if !h.scale.is_finite()
            || !h.translation_vec().is_finite()
            || h.pose126.iter().any(|v| !v.is_finite())
        {
            return Err(Error::validation(format!(
                "frame {}: human {} has non-finite values",
                record.frame_id, h.id
            )));
        }
    }
    Ok(())
}

/// Load and validate a JSONL dataset. Any malformed line aborts the load
/// with its line number; there is no partial acceptance.
pub fn load_hhoi_jsonl(path: impl AsRef<Path>) -> Result<Vec<HhoiRecord>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: HhoiRecord = serde_json::from_str(line).map_err(|e| {
            Error::validation(format!("line {}: {e}", lineno + 1))
        })?;
        validate_record(&record)
            .map_err(|e| Error::validation(format!("line {}: {e}", lineno + 1)))?;
        records.push(record);
    }
    Ok(records)
}

pub fn save_hhoi_jsonl(path: impl AsRef<Path>, records: &[HhoiRecord]) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        writeln!(out)?;
    }
    Ok(())
}

/// Express every human of a frame in the object's canonical frame and
/// encode its pose: one 20-vector HOI sample per human, plus the frame's
/// HOI prompt.
pub fn extract_hoi(
    record: &HhoiRecord,
    codec: &CodecParams,
) -> Result<Vec<(HoiSample, Option<String>)>> {
    validate_record(record)?;
    let rot_obj = record.object.rotation_mat();
    let t_obj = record.object.translation_vec();
    let rot_obj_inv = rot_obj.transpose();
    let prompt = record.prompts.as_ref().and_then(|p| p.hoi.clone());
    record
        .humans
        .iter()
        .map(|h| {
            let rotation = matrix_to_rot6d(&(rot_obj_inv * h.rotation_mat()))?;
            let translation = rot_obj_inv * (h.translation_vec() - t_obj);
            let pose = codec.encode_flat(&h.pose126)?;
            Ok((
                HoiSample {
                    rotation,
                    translation,
                    scale: h.scale,
                    pose,
                },
                prompt.clone(),
            ))
        })
        .collect()
}

/// Relative human-human samples: for every ordered pair, normalize the
/// reference human to the origin/identity and express the other human
/// relative to it. A frame with two humans yields exactly two samples;
/// frames with fewer than two humans yield none.
pub fn extract_hhi(
    record: &HhoiRecord,
    codec: &CodecParams,
) -> Result<Vec<(HhiSample, Option<String>)>> {
    validate_record(record)?;
    if record.humans.len() < 2 {
        return Ok(Vec::new());
    }
    let prompt = record.prompts.as_ref().and_then(|p| p.hhi.clone());
    let mut out = Vec::new();
    for (j, reference) in record.humans.iter().enumerate() {
        for (k, other) in record.humans.iter().enumerate() {
            if j == k {
                continue;
            }
            let rot_ref_inv = reference.rotation_mat().transpose();
            let rotation_rel = matrix_to_rot6d(&(rot_ref_inv * other.rotation_mat()))?;
            let translation_rel = rot_ref_inv
                * (other.translation_vec() - reference.translation_vec())
                * (1.0 / reference.scale);
            out.push((
                HhiSample {
                    pose_ref: codec.encode_flat(&reference.pose126)?,
                    rotation_rel,
                    translation_rel,
                    pose_other: codec.encode_flat(&other.pose126)?,
                },
                prompt.clone(),
            ));
        }
    }
    Ok(out)
}
