//! `strawkit validate <dir>`

use std::path::PathBuf;

use strawkit::io::validate_dataset;

use crate::output::{emit, to_json};

pub fn run(dir: &PathBuf, out: Option<&PathBuf>) -> anyhow::Result<u8> {
    let report = validate_dataset(dir);
    emit(out, &to_json(&report)?)?;
    Ok(0)
}
