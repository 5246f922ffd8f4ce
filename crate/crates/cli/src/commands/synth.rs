//! `strawkit synth <kind>`

use std::path::PathBuf;

use strawkit::synth::{generate_synthetic, SynthKind};

use crate::output::{emit, to_json};

pub fn run(kind: SynthKind, seed: u64, out_dir: &PathBuf) -> anyhow::Result<u8> {
    let metadata = generate_synthetic(kind, seed, out_dir)?;
    emit(None, &to_json(&metadata)?)?;
    Ok(0)
}
