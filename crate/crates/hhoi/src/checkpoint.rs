//! The `HHOI-CKPT-1` tensor container.
//!
//! A checkpoint file is, in order:
//!
//! 1. the magic line `HHOI-CKPT-1`,
//! 2. a single-line JSON manifest listing tensor names, shapes and byte
//!    offsets plus free-form metadata,
//! 3. one binary blob of little-endian 64-bit floats.
//!
//! Offsets are in bytes relative to the start of the blob. Writing is
//! fully deterministic: tensors serialize in insertion order and metadata
//! keys are sorted, so identical contents produce identical bytes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &str = "HHOI-CKPT-1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Byte offset into the blob.
    pub offset: u64,
    /// Element count (product of `shape`).
    pub len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Manifest {
    tensors: Vec<TensorEntry>,
    meta: BTreeMap<String, serde_json::Value>,
}

/// Incrementally built checkpoint.
#[derive(Debug, Default)]
pub struct CheckpointWriter {
    tensors: Vec<TensorEntry>,
    blob: Vec<u8>,
    meta: BTreeMap<String, serde_json::Value>,
}

impl CheckpointWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_tensor(&mut self, name: &str, shape: &[usize], data: &[f64]) -> Result<()> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::Shape {
                context: "CheckpointWriter::add_tensor",
                expected,
                got: data.len(),
            });
        }
        if self.tensors.iter().any(|t| t.name == name) {
            return Err(Error::Checkpoint(format!("duplicate tensor name {name:?}")));
        }
        let offset = self.blob.len() as u64;
        for v in data {
            self.blob.extend_from_slice(&v.to_le_bytes());
        }
        self.tensors.push(TensorEntry {
            name: name.to_string(),
            shape: shape.to_vec(),
            offset,
            len: data.len(),
        });
        Ok(())
    }

    pub fn set_meta(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.meta
            .insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let manifest = Manifest {
            tensors: self.tensors.clone(),
            meta: self.meta.clone(),
        };
        writeln!(w, "{MAGIC}")?;
        serde_json::to_writer(&mut w, &manifest)?;
        writeln!(w)?;
        w.write_all(&self.blob)?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        let mut buf = BufWriter::new(file);
        self.write_to(&mut buf)?;
        buf.flush()?;
        Ok(())
    }
}

/// A loaded checkpoint.
#[derive(Debug)]
pub struct Checkpoint {
    tensors: Vec<TensorEntry>,
    meta: BTreeMap<String, serde_json::Value>,
    blob: Vec<u8>,
}

impl Checkpoint {
    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        let magic_end = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| Error::Checkpoint("missing magic line".into()))?;
        let magic = std::str::from_utf8(&bytes[..magic_end])
            .map_err(|_| Error::Checkpoint("magic line is not UTF-8".into()))?;
        if magic != MAGIC {
            return Err(Error::Checkpoint(format!(
                "bad magic {magic:?}, expected {MAGIC:?}"
            )));
        }
        let manifest_start = magic_end + 1;
        let manifest_end = bytes[manifest_start..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| manifest_start + p)
            .ok_or_else(|| Error::Checkpoint("missing manifest line".into()))?;
        let manifest: Manifest = serde_json::from_slice(&bytes[manifest_start..manifest_end])?;
        let blob = bytes[manifest_end + 1..].to_vec();
        for t in &manifest.tensors {
            let end = t.offset as usize + t.len * 8;
            if end > blob.len() {
                return Err(Error::Checkpoint(format!(
                    "tensor {:?} extends past the blob ({} > {})",
                    t.name,
                    end,
                    blob.len()
                )));
            }
            if t.shape.iter().product::<usize>() != t.len {
                return Err(Error::Checkpoint(format!(
                    "tensor {:?} shape/len mismatch",
                    t.name
                )));
            }
        }
        Ok(Checkpoint {
            tensors: manifest.tensors,
            meta: manifest.meta,
            blob,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = File::open(path.as_ref())?;
        Self::read_from(BufReader::new(file))
    }

    pub fn tensor_names(&self) -> impl Iterator<Item = &str> {
        self.tensors.iter().map(|t| t.name.as_str())
    }

    pub fn entry(&self, name: &str) -> Option<&TensorEntry> {
        self.tensors.iter().find(|t| t.name == name)
    }

    /// Decode a named tensor to `(shape, values)`.
    pub fn tensor(&self, name: &str) -> Result<(Vec<usize>, Vec<f64>)> {
        let entry = self
            .entry(name)
            .ok_or_else(|| Error::Checkpoint(format!("no tensor named {name:?}")))?;
        let start = entry.offset as usize;
        let mut values = Vec::with_capacity(entry.len);
        for i in 0..entry.len {
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&self.blob[start + i * 8..start + (i + 1) * 8]);
            values.push(f64::from_le_bytes(buf));
        }
        Ok((entry.shape.clone(), values))
    }

    pub fn meta(&self) -> &BTreeMap<String, serde_json::Value> {
        &self.meta
    }

    pub fn meta_value<T: serde::de::DeserializeOwned>(&self, key: &str) -> Result<T> {
        let value = self
            .meta
            .get(key)
            .ok_or_else(|| Error::Checkpoint(format!("no metadata key {key:?}")))?;
        Ok(serde_json::from_value(value.clone())?)
    }
}
