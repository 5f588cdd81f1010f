//! Rewrites the bundled toy files under `data/` from their generators.

use std::fs;
use std::path::Path;

use kgqa_core::toy::{aligned_benchmark, separable_kg_tsv, ToyBenchmarkConfig, ToyKgConfig};

fn main() -> std::io::Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    fs::write(data.join("toy_kg.tsv"), separable_kg_tsv(&ToyKgConfig::default()))?;
    fs::write(data.join("toy_benchmark.jsonl"), aligned_benchmark(&ToyBenchmarkConfig::default()).to_jsonl_string())?;
    Ok(())
}
