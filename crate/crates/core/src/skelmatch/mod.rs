//! Quantitative comparison of an estimated skeleton against a ground truth.
//!
//! Both graphs are densified to a maximum edge length, vertices are matched
//! one-to-one by thresholded minimum-cost assignment, estimate vertices that
//! land between matched ground-truth vertices are rescued by line-segment
//! distance, and the six summary metrics are derived from the result.

mod hungarian;

pub use hungarian::{hungarian, Assignment, CostMatrix};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::point_segment_distance;
use crate::scalar::{real, real_from_usize, Real};
use crate::skeleton::Skeleton;

/// Matching thresholds, all in millimetres.
///
/// The defaults pin the match and line thresholds to an eighth of a typical
/// stem diameter (3.17 mm) and the dense edge length to 0.3 mm.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MatchParams<T = f64> {
    /// Maximum edge length after densification.
    pub s_dense: T,
    /// Maximum vertex-to-vertex distance that still counts as a match.
    pub t_match: T,
    /// Maximum vertex-to-segment distance for the rescue pass.
    pub t_line: T,
    /// Cost placed on pairs beyond `t_match`; must exceed `t_match`.
    pub unmatched_cost: T,
}

impl<T: Real> Default for MatchParams<T> {
    fn default() -> Self {
        Self {
            s_dense: real(0.3),
            t_match: real(0.396),
            t_line: real(0.396),
            unmatched_cost: real(1000.0),
        }
    }
}

impl<T: Real> MatchParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.s_dense > T::zero() && self.t_match > T::zero() && self.t_line > T::zero()) {
            return Err(Error::InvalidParams("matching thresholds must be positive".into()));
        }
        if self.unmatched_cost <= self.t_match {
            return Err(Error::InvalidParams("unmatched_cost must exceed t_match".into()));
        }
        Ok(())
    }
}

/// Outcome of [`match_graphs`].
#[derive(Clone, Debug, Serialize)]
pub struct MatchReport<T = f64> {
    /// Estimate vertices matched to ground-truth vertices.
    pub true_positives: usize,
    /// Estimate vertices neither matched nor near a ground-truth segment.
    pub false_positives: usize,
    /// Ground-truth vertices left unmatched.
    pub false_negatives: usize,
    /// Estimate vertices rescued by segment distance: positive, but counted
    /// neither as TP nor FP.
    pub line_positives: usize,
    /// Dense ground-truth vertex index -> dense estimate vertex index.
    #[serde(skip)]
    pub match_map: Vec<Option<u32>>,
    pub precision: T,
    pub recall: T,
    pub f1: T,
    /// Branch endpoints of the raw (pre-densify) estimate.
    pub n_end: usize,
    /// Connected components of the raw estimate.
    pub n_seg: usize,
    /// Fraction of ground-truth length covered by matched vertices.
    pub l_matched: T,
    pub longest_path_est: T,
    pub longest_path_gt: T,
    /// |L* - L| / L* with L* the ground-truth longest path and L the
    /// estimate's longest path. Ground-truth stems are simple paths, so L*
    /// equals their total length; on branched ground truth this definition
    /// keeps a self-match at zero error.
    pub length_ape: T,
}

/// Splits every edge longer than `s_dense` into equal collinear sub-edges.
///
/// Original vertices keep their indices; inserted vertices are appended in
/// edge order. Total length, endpoint degrees, and component structure are
/// preserved.
pub fn densify<T: Real>(skel: &Skeleton<T>, s_dense: T) -> Skeleton<T> {
    assert!(s_dense > T::zero(), "s_dense must be positive");
    let mut vertices = skel.vertices().to_vec();
    let mut edges = Vec::with_capacity(skel.edge_count());
    for &(a, b) in skel.edges() {
        let pa = skel.vertices()[a as usize];
        let pb = skel.vertices()[b as usize];
        let len = pa.distance(pb);
        let pieces = (len / s_dense).ceil().to_usize().unwrap_or(1).max(1);
        if pieces == 1 {
            edges.push((a, b));
            continue;
        }
        let step = (pb - pa) / real_from_usize(pieces);
        let mut prev = a;
        for k in 1..pieces {
            let v = vertices.len() as u32;
            vertices.push(pa + step * real_from_usize(k));
            edges.push((prev, v));
            prev = v;
        }
        edges.push((prev, b));
    }
    Skeleton::new(vertices, edges).expect("densification preserves graph validity")
}

/// Precision, recall and F1 with the zero-denominator convention of
/// returning 0 whenever TP is 0 and the denominator vanishes.
pub fn prf<T: Real>(tp: usize, fp: usize, fn_: usize) -> (T, T, T) {
    let tp_t = real_from_usize::<T>(tp);
    let precision =
        if tp + fp > 0 { tp_t / real_from_usize(tp + fp) } else { T::zero() };
    let recall = if tp + fn_ > 0 { tp_t / real_from_usize(tp + fn_) } else { T::zero() };
    let f1 = if precision + recall > T::zero() {
        real::<T>(2.0) * precision * recall / (precision + recall)
    } else {
        T::zero()
    };
    (precision, recall, f1)
}

/// Fraction of `gt_dense` length whose edges have both endpoints matched.
///
/// A skeleton without edges has no measurable length; the fraction is then
/// defined as 1 so that a fully matched degenerate input does not read as a
/// coverage failure.
pub fn matched_length_fraction<T: Real>(gt_dense: &Skeleton<T>, match_map: &[Option<u32>]) -> T {
    let total = gt_dense.total_length();
    if total <= T::zero() {
        return T::one();
    }
    let mut covered = T::zero();
    for &(a, b) in gt_dense.edges() {
        if match_map[a as usize].is_some() && match_map[b as usize].is_some() {
            covered += gt_dense.edge_length((a, b));
        }
    }
    covered / total
}

/// Mean absolute percentage error between ground-truth stem lengths and
/// estimate longest paths.
///
/// The ground-truth length is the total skeleton length (ground-truth stems
/// are simple paths); the estimate length is its longest path, or 0 for an
/// edgeless estimate.
pub fn length_mape<T: Real>(gts: &[Skeleton<T>], ests: &[Skeleton<T>]) -> Result<T> {
    if gts.len() != ests.len() {
        return Err(Error::LengthMismatch { left: gts.len(), right: ests.len() });
    }
    if gts.is_empty() {
        return Err(Error::EmptyInput("length_mape needs at least one pair"));
    }
    let mut sum = T::zero();
    for (i, (gt, est)) in gts.iter().zip(ests).enumerate() {
        let l_star = gt.total_length();
        if l_star <= T::zero() {
            return Err(Error::ZeroGroundTruth { index: i });
        }
        let l = est.longest_path().map(|(len, _)| len).unwrap_or(T::zero());
        sum += ((l_star - l) / l_star).abs();
    }
    Ok(sum / real_from_usize(gts.len()))
}

/// Runs the full matching pipeline between a ground-truth and an estimated
/// skeleton.
pub fn match_graphs<T: Real>(
    gt: &Skeleton<T>,
    est: &Skeleton<T>,
    params: &MatchParams<T>,
) -> Result<MatchReport<T>> {
    params.validate()?;
    if gt.is_empty() || est.is_empty() {
        return Err(Error::EmptySkeleton);
    }

    let gt_dense = densify(gt, params.s_dense);
    let est_dense = densify(est, params.s_dense);
    let n_g = gt_dense.vertex_count();
    let n_e = est_dense.vertex_count();

    // Square cost matrix, padded with the unmatched cost so surplus vertices
    // on either side absorb dummy assignments.
    let side = n_g.max(n_e);
    let cost = CostMatrix::from_fn(side, side, |r, c| {
        if r < n_g && c < n_e {
            let d = gt_dense.vertices()[r].distance(est_dense.vertices()[c]);
            if d <= params.t_match {
                d
            } else {
                params.unmatched_cost
            }
        } else {
            params.unmatched_cost
        }
    });
    let assignment = hungarian(&cost)?;

    // Validity gate: an assigned pair only counts when its cost stays below
    // the match threshold.
    let mut match_map = vec![None; n_g];
    let mut est_matched = vec![false; n_e];
    for (r, entry) in match_map.iter_mut().enumerate() {
        if let Some(c) = assignment.row_to_col[r] {
            if c < n_e && cost.get(r, c) <= params.t_match {
                *entry = Some(c as u32);
                est_matched[c] = true;
            }
        }
    }

    let true_positives = match_map.iter().flatten().count();
    let false_negatives = n_g - true_positives;

    // Rescue pass: an unmatched estimate vertex near any ground-truth
    // segment is positive without entering the TP count. Isolated
    // ground-truth vertices act as zero-length segments.
    let gt_segments: Vec<(usize, usize)> = if gt.edge_count() > 0 {
        gt.edges().iter().map(|&(a, b)| (a as usize, b as usize)).collect()
    } else {
        (0..gt.vertex_count()).map(|i| (i, i)).collect()
    };
    let mut line_positives = 0usize;
    for (c, matched) in est_matched.iter().enumerate() {
        if *matched {
            continue;
        }
        let p = est_dense.vertices()[c];
        let near = gt_segments.iter().any(|&(a, b)| {
            point_segment_distance(p, gt.vertices()[a], gt.vertices()[b]) <= params.t_line
        });
        if near {
            line_positives += 1;
        }
    }
    let false_positives = n_e - true_positives - line_positives;

    let (precision, recall, f1) = prf(true_positives, false_positives, false_negatives);
    let l_matched = matched_length_fraction(&gt_dense, &match_map);

    let longest_path_est = est.longest_path().map(|(l, _)| l).unwrap_or(T::zero());
    let longest_path_gt = gt.longest_path().map(|(l, _)| l).unwrap_or(T::zero());
    let length_ape = if longest_path_gt > T::zero() {
        ((longest_path_gt - longest_path_est) / longest_path_gt).abs()
    } else {
        T::zero()
    };

    Ok(MatchReport {
        true_positives,
        false_positives,
        false_negatives,
        line_positives,
        match_map,
        precision,
        recall,
        f1,
        n_end: est.endpoints().len(),
        n_seg: est.segment_count(),
        l_matched,
        longest_path_est,
        longest_path_gt,
        length_ape,
    })
}
