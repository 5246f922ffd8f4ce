//! `strawkit eval-skeleton --gt DIR --est DIR`

use std::collections::BTreeMap;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;
use strawkit::io::load_skeleton;
use strawkit::skelmatch::{densify, match_graphs, matched_length_fraction, MatchParams, MatchReport};

use crate::output::{emit, fmt_f64, mean_std, to_json, Csv};

/// Which skeleton's length sits in the denominator of the matched-length
/// fraction.
#[derive(Clone, Copy, PartialEq, Eq, Debug, clap::ValueEnum)]
pub enum LMatchedDenom {
    Gt,
    Est,
}

impl std::fmt::Display for LMatchedDenom {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LMatchedDenom::Gt => "gt",
            LMatchedDenom::Est => "est",
        })
    }
}

impl std::str::FromStr for LMatchedDenom {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gt" => Ok(Self::Gt),
            "est" => Ok(Self::Est),
            other => Err(format!("unknown denominator {other:?} (gt|est)")),
        }
    }
}

#[derive(Serialize)]
struct ColumnStats {
    mean: f64,
    std: f64,
}

#[derive(Serialize)]
struct EvalSummary {
    pairs: usize,
    s_dense: f64,
    t_match: f64,
    t_line: f64,
    l_matched_denominator: String,
    missing_est: Vec<String>,
    missing_gt: Vec<String>,
    failures: Vec<String>,
    metrics: BTreeMap<String, ColumnStats>,
}

fn stem_key(path: &PathBuf) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

pub fn run(
    gt_dir: &PathBuf,
    est_dir: &PathBuf,
    params: &MatchParams<f64>,
    denom: LMatchedDenom,
    out_csv: Option<&PathBuf>,
    out_json: Option<&PathBuf>,
) -> anyhow::Result<u8> {
    let gt_files: BTreeMap<String, PathBuf> = crate::output::files_with_ext(gt_dir, &["ply"])?
        .into_iter()
        .map(|p| (stem_key(&p), p))
        .collect();
    let est_files: BTreeMap<String, PathBuf> = crate::output::files_with_ext(est_dir, &["ply"])?
        .into_iter()
        .map(|p| (stem_key(&p), p))
        .collect();

    let missing_est: Vec<String> =
        gt_files.keys().filter(|k| !est_files.contains_key(*k)).cloned().collect();
    let missing_gt: Vec<String> =
        est_files.keys().filter(|k| !gt_files.contains_key(*k)).cloned().collect();

    let pairs: Vec<(String, PathBuf, PathBuf)> = gt_files
        .iter()
        .filter_map(|(k, gt)| est_files.get(k).map(|est| (k.clone(), gt.clone(), est.clone())))
        .collect();

    let results: Vec<(String, anyhow::Result<(MatchReport<f64>, f64)>)> = pairs
        .par_iter()
        .map(|(key, gt_path, est_path)| {
            let result = (|| {
                let (gt, _) = load_skeleton(gt_path)?;
                let (est, _) = load_skeleton(est_path)?;
                let report = match_graphs(&gt, &est, params)?;
                let l_matched = match denom {
                    LMatchedDenom::Gt => report.l_matched,
                    LMatchedDenom::Est => {
                        // Estimate-side coverage: fraction of the estimate's
                        // dense length whose edge endpoints were matched.
                        let est_dense = densify(&est, params.s_dense);
                        let mut est_matched = vec![None; est_dense.vertex_count()];
                        for gt_vertex in report.match_map.iter().flatten() {
                            est_matched[*gt_vertex as usize] = Some(0u32);
                        }
                        matched_length_fraction(&est_dense, &est_matched)
                    }
                };
                Ok((report, l_matched))
            })();
            (key.clone(), result)
        })
        .collect();

    let mut csv = Csv::new(&[
        "stem", "precision", "recall", "f1", "l_matched", "ape", "n_end", "n_seg",
    ]);
    let mut columns: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut failures = Vec::new();
    for (key, result) in &results {
        match result {
            Ok((report, l_matched)) => {
                csv.row(&[
                    key.clone(),
                    fmt_f64(report.precision),
                    fmt_f64(report.recall),
                    fmt_f64(report.f1),
                    fmt_f64(*l_matched),
                    fmt_f64(report.length_ape),
                    report.n_end.to_string(),
                    report.n_seg.to_string(),
                ]);
                for (name, value) in [
                    ("precision", report.precision),
                    ("recall", report.recall),
                    ("f1", report.f1),
                    ("l_matched", *l_matched),
                    ("ape", report.length_ape),
                    ("n_end", report.n_end as f64),
                    ("n_seg", report.n_seg as f64),
                ] {
                    columns.entry(name).or_default().push(value);
                }
            }
            Err(e) => failures.push(format!("{key}: {e}")),
        }
    }

    emit(out_csv, &csv.into_string())?;

    let metrics = columns
        .into_iter()
        .map(|(name, values)| {
            let (mean, std) = mean_std(&values);
            (name.to_string(), ColumnStats { mean, std })
        })
        .collect();
    let summary = EvalSummary {
        pairs: pairs.len(),
        s_dense: params.s_dense,
        t_match: params.t_match,
        t_line: params.t_line,
        l_matched_denominator: denom.to_string(),
        missing_est: missing_est.clone(),
        missing_gt: missing_gt.clone(),
        failures: failures.clone(),
        metrics,
    };
    emit(out_json, &to_json(&summary)?)?;

    if !missing_est.is_empty() || !missing_gt.is_empty() || !failures.is_empty() {
        for k in &missing_est {
            eprintln!("eval-skeleton: no estimate for {k}");
        }
        for k in &missing_gt {
            eprintln!("eval-skeleton: no ground truth for {k}");
        }
        for f in &failures {
            eprintln!("eval-skeleton: {f}");
        }
        return Ok(1);
    }
    Ok(0)
}
