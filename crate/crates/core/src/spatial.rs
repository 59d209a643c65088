//! Image-to-image distance by aligning the local features of two images.
//!
//! The default mode is adaptive DTW: the diagonal step is weighted by
//! `a = sqrt(1 + sigma * |I - c|)` where `c` is the central position and `I`
//! the position in `Y` closest to the central feature of `X`. With `a = 1`
//! the recurrence is plain DTW, which is how [`AlignMode::Vanilla`] runs.

use crate::dtw::CumulativeTable;
use crate::error::{Error, Result};
use crate::model::{
    cosine_from_parts, dot, AlignConfig, AlignMode, AlignmentResult, DistanceMatrix,
    FeatureSequence,
};

/// Diagonal weight for one image pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveWeight {
    pub a: f64,
    /// Zero-based column of `Y` closest to the central feature of `X`.
    pub best_index: usize,
}

/// Zero-based index of the central position, `ceil(W / 2) - 1`.
pub fn central_index(width: usize) -> usize {
    width.div_ceil(2) - 1
}

/// Cosine distance between every pair of local features.
///
/// With `restricted` set, cells with `|i - j| >= xi` are `+inf` and their
/// distances are never computed.
pub fn build_distance_matrix(
    x: &FeatureSequence,
    y: &FeatureSequence,
    restricted: bool,
    xi: usize,
) -> Result<DistanceMatrix> {
    x.ensure_same_shape(y)?;
    let w = x.width();
    if restricted && (xi < 1 || xi > w) {
        return Err(Error::InvalidConfig(format!(
            "xi must lie in [1, {w}], got {xi}"
        )));
    }
    let mut cells = Vec::with_capacity(w * w);
    for i in 0..w {
        for j in 0..w {
            if restricted && i.abs_diff(j) >= xi {
                cells.push(f64::INFINITY);
            } else {
                cells.push(cosine_from_parts(
                    dot(x.local(i), y.local(j)),
                    x.sq_norm(i),
                    y.sq_norm(j),
                ));
            }
        }
    }
    DistanceMatrix::new(w, w, cells)
}

/// Adaptive weight from the central row of a square distance matrix.
///
/// The argmin runs over finite cells only; ties go to the smallest column.
pub fn adaptive_weight(d: &DistanceMatrix, sigma: f64) -> Result<AdaptiveWeight> {
    let w = d.rows();
    if w == 0 || d.cols() != w {
        return Err(Error::InvalidConfig(format!(
            "adaptive weight needs a non-empty square matrix, got {}x{}",
            d.rows(),
            d.cols()
        )));
    }
    let centre = central_index(w);
    let mut best: Option<(usize, f64)> = None;
    for (j, &v) in d.row(centre).iter().enumerate() {
        if v.is_finite() && best.is_none_or(|(_, b)| v < b) {
            best = Some((j, v));
        }
    }
    let (best_index, _) = best.ok_or_else(|| {
        Error::InvalidConfig("central row of the distance matrix has no finite cell".into())
    })?;
    let offset = best_index.abs_diff(centre) as f64;
    Ok(AdaptiveWeight {
        a: (1.0 + sigma * offset).sqrt(),
        best_index,
    })
}

/// Aligns `x` (query) against `y` (reference) and returns the normalised distance.
pub fn align(
    x: &FeatureSequence,
    y: &FeatureSequence,
    cfg: &AlignConfig,
) -> Result<AlignmentResult> {
    align_inner(x, y, cfg, true)
}

/// Same value as `align(..).distance` without back-tracing the path.
pub fn image_distance(x: &FeatureSequence, y: &FeatureSequence, cfg: &AlignConfig) -> Result<f64> {
    align_inner(x, y, cfg, false).map(|r| r.distance)
}

fn align_inner(
    x: &FeatureSequence,
    y: &FeatureSequence,
    cfg: &AlignConfig,
    with_path: bool,
) -> Result<AlignmentResult> {
    x.ensure_same_shape(y)?;
    cfg.validate(x.width())?;
    match cfg.mode {
        AlignMode::HolisticCosine => Ok(flat_result(holistic_distance(x, y))),
        AlignMode::SlidingWindow => Ok(flat_result(sliding_window_distance(x, y, cfg.window_size))),
        AlignMode::Adaptive | AlignMode::Vanilla => {
            let d = build_distance_matrix(x, y, cfg.restricted, cfg.xi)?;
            let weight = match cfg.mode {
                AlignMode::Adaptive => adaptive_weight(&d, cfg.sigma)?.a,
                _ => 1.0,
            };
            let table = CumulativeTable::fill(&d, weight);
            let end = x.width() - 1;
            let cumulative = table.cumulative(end, end);
            let total_cost = table.cost(end, end);
            Ok(AlignmentResult {
                distance: cumulative / total_cost,
                path: with_path.then(|| table.path_to(end, end)),
                cumulative,
                total_cost,
                weight,
            })
        }
    }
}

fn flat_result(distance: f64) -> AlignmentResult {
    AlignmentResult {
        distance,
        path: None,
        cumulative: distance,
        total_cost: 1.0,
        weight: 1.0,
    }
}

/// Plain cosine distance between the flattened holistic features.
pub fn holistic_distance(x: &FeatureSequence, y: &FeatureSequence) -> f64 {
    cosine_from_parts(dot(x.flat(), y.flat()), x.flat_sq_norm(), y.flat_sq_norm())
}

/// Horizontal sliding-window baseline: for each column offset `o` with at
/// least `window` overlapping positions, the mean of `d(x_i, y_{i+o})`; the
/// smallest mean wins.
pub fn sliding_window_distance(x: &FeatureSequence, y: &FeatureSequence, window: usize) -> f64 {
    let w = x.width() as isize;
    let reach = w - window as isize;
    let mut best = f64::INFINITY;
    for o in -reach..=reach {
        let lo = 0.max(-o);
        let hi = w.min(w - o);
        let mut sum = 0.0;
        for i in lo..hi {
            let (i, j) = (i as usize, (i + o) as usize);
            sum += cosine_from_parts(dot(x.local(i), y.local(j)), x.sq_norm(i), y.sq_norm(j));
        }
        best = best.min(sum / (hi - lo) as f64);
    }
    best
}
