//! `strawkit skeletonize <scan> --method {sp|som}`

use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use strawkit::cloud::{split_instances, SemanticClass};
use strawkit::io::{write_skeleton_ply, PlyEncoding};
use strawkit::skeletor::{shortest_path_skeleton, som_skeleton, SkeletonParams};
use strawkit::{Cloud, StemSkeleton};

use super::load_scan;
use crate::output::{emit, to_json};

#[derive(Clone, Copy, PartialEq, Eq, Debug, clap::ValueEnum)]
pub enum SkeletonMethod {
    Sp,
    Som,
}

impl SkeletonMethod {
    pub fn name(self) -> &'static str {
        match self {
            SkeletonMethod::Sp => "sp",
            SkeletonMethod::Som => "som",
        }
    }
}

impl std::fmt::Display for SkeletonMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SkeletonMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sp" => Ok(Self::Sp),
            "som" => Ok(Self::Som),
            other => Err(format!("unknown method {other:?} (sp|som)")),
        }
    }
}

pub fn estimate(
    stem: &Cloud,
    method: SkeletonMethod,
    params: &SkeletonParams,
) -> strawkit::Result<StemSkeleton> {
    match method {
        SkeletonMethod::Sp => shortest_path_skeleton(stem, params),
        SkeletonMethod::Som => som_skeleton(stem, params),
    }
}

#[derive(Serialize)]
struct StemSummary {
    instance: u32,
    file: String,
    points: usize,
    vertices: usize,
    n_end: usize,
    n_seg: usize,
    total_length_mm: f64,
    longest_path_mm: f64,
    disconnected_input: bool,
}

#[derive(Serialize)]
struct SkeletonizeSummary {
    scan: String,
    method: String,
    class: u8,
    seed: u64,
    stems: Vec<StemSummary>,
    failures: Vec<String>,
}

#[allow(clippy::too_many_arguments)]
pub fn run(
    scan: &PathBuf,
    class: SemanticClass,
    method: SkeletonMethod,
    params: &SkeletonParams,
    out_dir: &PathBuf,
    summary_out: Option<&PathBuf>,
) -> anyhow::Result<u8> {
    let cloud = load_scan(scan)?;
    let stems = split_instances(&cloud, class)?;
    let stem_name = scan
        .file_stem()
        .and_then(|s| s.to_str())
        .ok_or_else(|| anyhow::anyhow!("scan path has no file name"))?
        .to_string();
    std::fs::create_dir_all(out_dir)?;

    let mut jobs: Vec<(u32, Cloud)> = stems.into_iter().collect();
    jobs.sort_by_key(|(id, _)| *id);
    let results: Vec<(u32, usize, strawkit::Result<StemSkeleton>)> = jobs
        .par_iter()
        .map(|(id, stem)| (*id, stem.len(), estimate(stem, method, params)))
        .collect();

    let mut summaries = Vec::new();
    let mut failures = Vec::new();
    for (id, points, result) in results {
        match result {
            Ok(skeleton) => {
                let file = format!("{stem_name}_stem_{id}.ply");
                write_skeleton_ply(&out_dir.join(&file), &skeleton, PlyEncoding::Ascii)?;
                let longest = skeleton.longest_path().map(|(l, _)| l).unwrap_or(0.0);
                summaries.push(StemSummary {
                    instance: id,
                    file,
                    points,
                    vertices: skeleton.vertex_count(),
                    n_end: skeleton.endpoints().len(),
                    n_seg: skeleton.segment_count(),
                    total_length_mm: skeleton.total_length(),
                    longest_path_mm: longest,
                    disconnected_input: skeleton.segment_count() > 1,
                });
            }
            Err(e) => failures.push(format!("stem {id}: {e}")),
        }
    }

    let failed = !failures.is_empty();
    let summary = SkeletonizeSummary {
        scan: stem_name,
        method: method.name().to_string(),
        class: class.code(),
        seed: params.rng_seed,
        stems: summaries,
        failures,
    };
    emit(summary_out, &to_json(&summary)?)?;
    if failed {
        for f in &summary.failures {
            eprintln!("skeletonize: {f}");
        }
        Ok(1)
    } else {
        Ok(0)
    }
}
