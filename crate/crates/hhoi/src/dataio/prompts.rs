//! Prompt tables and condition embeddings.
//!
//! A [`PromptTable`] maps scenario keys to paraphrase lists (the
//! training-time augmentation hook) and can optionally carry external
//! embeddings per string. Strings without an external embedding get a
//! deterministic hash-seeded pseudo-embedding: unit-norm, fixed per
//! string, so the conditioning pathway is exercised end to end without an
//! external text encoder.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diffusion::{ConditionEmbedding, COND_DIM};
use crate::error::{Error, Result};
use crate::rng::{fnv1a64, Rng};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PromptTable {
    /// scenario key → paraphrases (each key needs at least one).
    pub scenarios: BTreeMap<String, Vec<String>>,
    /// Optional external embeddings, uniform dimension.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub embeddings: BTreeMap<String, Vec<f64>>,
}

impl PromptTable {
    pub fn validate(&self) -> Result<()> {
        for (key, paraphrases) in &self.scenarios {
            if paraphrases.is_empty() {
                return Err(Error::validation(format!(
                    "prompt key {key:?} has no paraphrases"
                )));
            }
        }
        let mut dims = self.embeddings.values().map(Vec::len);
        if let Some(first) = dims.next() {
            if dims.any(|d| d != first) {
                return Err(Error::validation(
                    "external embeddings have mixed dimensions",
                ));
            }
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        let table: PromptTable = serde_json::from_str(&text)?;
        table.validate()?;
        Ok(table)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(std::fs::write(
            path.as_ref(),
            serde_json::to_string_pretty(self)?,
        )?)
    }

    /// Embedding dimension this table produces.
    pub fn embedding_dim(&self) -> usize {
        self.embeddings
            .values()
            .next()
            .map_or(COND_DIM, Vec::len)
    }

    /// Embedding for a literal string: the external table if present,
    /// otherwise the hash-based pseudo-embedding.
    pub fn embed(&self, text: &str) -> ConditionEmbedding {
        if let Some(v) = self.embeddings.get(text) {
            return ConditionEmbedding(v.clone());
        }
        hash_embedding(text, self.embedding_dim())
    }

    /// All paraphrase embeddings for a key (falls back to the key itself
    /// when it is not in the table).
    pub fn embed_all(&self, key: &str) -> Vec<ConditionEmbedding> {
        match self.scenarios.get(key) {
            Some(paraphrases) => paraphrases.iter().map(|p| self.embed(p)).collect(),
            None => vec![self.embed(key)],
        }
    }
}

/// Deterministic unit-norm pseudo-embedding seeded from the string.
pub fn hash_embedding(text: &str, dim: usize) -> ConditionEmbedding {
    let mut rng = Rng::seed_from(fnv1a64(text.as_bytes()));
    let mut v = rng.normal_vec(dim);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    ConditionEmbedding(v)
}

/// Draw a paraphrase for `key` and return it with its embedding.
pub fn sample_prompt(
    table: &PromptTable,
    key: &str,
    rng: &mut Rng,
) -> Result<(String, ConditionEmbedding)> {
    let paraphrases = table
        .scenarios
        .get(key)
        .ok_or_else(|| Error::validation(format!("unknown prompt key {key:?}")))?;
    if paraphrases.is_empty() {
        return Err(Error::validation(format!(
            "prompt key {key:?} has no paraphrases"
        )));
    }
    let pick = if paraphrases.len() == 1 {
        0
    } else {
        rng.index(paraphrases.len())
    };
    let text = paraphrases[pick].clone();
    let embedding = table.embed(&text);
    Ok((text, embedding))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> PromptTable {
        let mut scenarios = BTreeMap::new();
        scenarios.insert("bench".to_string(), vec!["sitting on a bench".to_string()]);
        scenarios.insert(
            "board".to_string(),
            vec![
                "standing at a whiteboard".to_string(),
                "writing on a whiteboard".to_string(),
                "discussing at the board".to_string(),
                "pointing at a whiteboard".to_string(),
            ],
        );
        PromptTable {
            scenarios,
            embeddings: BTreeMap::new(),
        }
    }

    #[test]
    fn single_paraphrase_key_is_constant() {
        let t = table();
        let mut rng = Rng::seed_from(1);
        for _ in 0..10 {
            let (text, _) = sample_prompt(&t, "bench", &mut rng).unwrap();
            assert_eq!(text, "sitting on a bench");
        }
    }

    #[test]
    fn unknown_key_is_a_validation_error() {
        let t = table();
        let mut rng = Rng::seed_from(2);
        assert!(sample_prompt(&t, "nope", &mut rng).is_err());
    }

    #[test]
    fn hash_embedding_is_unit_norm_and_deterministic() {
        let a = hash_embedding("carry the box", COND_DIM);
        let b = hash_embedding("carry the box", COND_DIM);
        assert_eq!(a, b);
        assert_eq!(a.dim(), COND_DIM);
        let norm: f64 = a.0.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-12);
        let c = hash_embedding("carry the boX", COND_DIM);
        assert_ne!(a, c);
    }

    #[test]
    fn four_paraphrases_draw_uniformly() {
        let t = table();
        let mut rng = Rng::seed_from(3);
        let n = 10_000;
        let mut counts = BTreeMap::new();
        for _ in 0..n {
            let (text, _) = sample_prompt(&t, "board", &mut rng).unwrap();
            *counts.entry(text).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 4);
        // 3σ binomial bound around 0.25
        let sigma = (0.25 * 0.75 / n as f64).sqrt();
        for (text, count) in counts {
            let freq = count as f64 / n as f64;
            assert!(
                (freq - 0.25).abs() < 3.0 * sigma,
                "{text}: frequency {freq}"
            );
        }
    }

    #[test]
    fn external_embeddings_win_over_hashes() {
        let mut t = table();
        t.embeddings
            .insert("sitting on a bench".to_string(), vec![1.0, 2.0, 3.0]);
        t.validate().unwrap();
        assert_eq!(t.embedding_dim(), 3);
        let e = t.embed("sitting on a bench");
        assert_eq!(e.0, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn json_roundtrip() {
        let t = table();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prompts.json");
        t.save(&path).unwrap();
        let loaded = PromptTable::load(&path).unwrap();
        assert_eq!(loaded.scenarios.len(), 2);
    }
}
