//! Dataset records, object/human-frame normalization, train/test
//! splitting, toy-scene and toy-pose generation, and prompt handling.
//!
//! The on-disk dataset format is JSON Lines: one scene record per line,
//! rotations as row-major 3×3 arrays, everything in meters. Loaders
//! reject malformed records with line-numbered diagnostics rather than
//! silently skipping them.

mod prompts;
mod records;
mod toy;

pub use prompts::{hash_embedding, sample_prompt, PromptTable};
pub use records::{
    extract_hhi, extract_hoi, load_hhoi_jsonl, save_hhoi_jsonl, validate_record, HhoiRecord,
    HumanRecord, ObjectRecord,
};
pub use toy::{
    gen_toy_dataset, gen_toy_poses, toy_object_mesh, toy_prompt_table, ToyScenario,
};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Deterministic seeded split into `(train, test)`.
///
/// `test_fraction` defaults to 0.1 elsewhere (the 9:1 convention); the
/// test side gets `round(test_fraction · n)` elements. The two sides are
/// disjoint and exhaustive.
pub fn split_dataset<T: Clone>(
    samples: &[T],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if samples.len() < 10 {
        return Err(Error::validation(format!(
            "split_dataset needs at least 10 samples, got {}",
            samples.len()
        )));
    }
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::validation(format!(
            "test fraction {test_fraction} outside [0, 1)"
        )));
    }
    let mut indices: Vec<usize> = (0..samples.len()).collect();
    let mut rng = Rng::seed_from(seed);
    rng.shuffle(&mut indices);
    let test_len = (test_fraction * samples.len() as f64).round() as usize;
    let (test_idx, train_idx) = indices.split_at(test_len);
    let test = test_idx.iter().map(|&i| samples[i].clone()).collect();
    let train = train_idx.iter().map(|&i| samples[i].clone()).collect();
    Ok((train, test))
}
