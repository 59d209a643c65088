//! Shared data types and the cosine point metric.
//!
//! Indices are zero-based throughout: the first local feature of an image is
//! position 0 and the central one is `(W + 1) / 2 - 1`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Dot product with eight independent accumulators so the compiler can
/// vectorise the loop. Summation order is fixed, so results are reproducible.
#[inline]
pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = [0.0f64; 8];
    let xc = x.chunks_exact(8);
    let yc = y.chunks_exact(8);
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for k in 0..8 {
            acc[k] += a[k] * b[k];
        }
    }
    let mut tail = 0.0;
    for (a, b) in xr.iter().zip(yr) {
        tail += a * b;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// Takes squared norms: for `x == y` the dot product equals both of them
/// bit for bit and `sqrt(n * n) == n`, so self-distance is exactly zero.
#[inline]
pub(crate) fn cosine_from_parts(dot: f64, sq_norm_x: f64, sq_norm_y: f64) -> f64 {
    match (sq_norm_x == 0.0, sq_norm_y == 0.0) {
        (true, true) => 0.0,
        (true, false) | (false, true) => 1.0,
        // Rounding can push the ratio just past +-1; keep the range exact.
        _ => (1.0 - dot / (sq_norm_x * sq_norm_y).sqrt()).clamp(0.0, 2.0),
    }
}

/// Cosine distance `1 - x.y / (|x| |y|)`.
///
/// Two zero vectors are at distance 0; a zero vector and a non-zero vector
/// are at distance 1.
pub fn point_distance(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(Error::Empty(
            "point_distance needs vectors of dimension >= 1",
        ));
    }
    Ok(cosine_from_parts(dot(x, y), dot(x, x), dot(y, y)))
}

/// One image described as `width` local feature vectors of dimension `dim`.
///
/// Storage is a shared flat buffer (position-major, then channel), so cloning
/// is cheap. Squared norms are computed once at construction.
#[derive(Clone, PartialEq)]
pub struct FeatureSequence {
    image_id: u64,
    width: usize,
    dim: usize,
    data: Arc<[f64]>,
    sq_norms: Arc<[f64]>,
    flat_sq_norm: f64,
}

impl fmt::Debug for FeatureSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FeatureSequence")
            .field("image_id", &self.image_id)
            .field("width", &self.width)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl FeatureSequence {
    pub fn from_flat(image_id: u64, width: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || dim == 0 {
            return Err(Error::Empty("feature sequence needs W >= 1 and D >= 1"));
        }
        if data.len() != width * dim {
            return Err(Error::LengthMismatch(data.len(), width * dim));
        }
        let sq_norms: Vec<f64> = data.chunks_exact(dim).map(|v| dot(v, v)).collect();
        let flat_sq_norm = dot(&data, &data);
        Ok(Self {
            image_id,
            width,
            dim,
            data: data.into(),
            sq_norms: sq_norms.into(),
            flat_sq_norm,
        })
    }

    pub fn from_vectors(image_id: u64, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let width = vectors.len();
        let dim = vectors.first().map_or(0, Vec::len);
        if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::LengthMismatch(bad.len(), dim));
        }
        Self::from_flat(image_id, width, dim, vectors.concat())
    }

    pub fn image_id(&self) -> u64 {
        self.image_id
    }

    pub fn with_image_id(mut self, image_id: u64) -> Self {
        self.image_id = image_id;
        self
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.dim)
    }

    pub fn local(&self, position: usize) -> &[f64] {
        &self.data[position * self.dim..(position + 1) * self.dim]
    }

    pub fn locals(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }

    pub(crate) fn sq_norm(&self, position: usize) -> f64 {
        self.sq_norms[position]
    }

    /// The holistic feature: all local vectors concatenated.
    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn flat_sq_norm(&self) -> f64 {
        self.flat_sq_norm
    }

    pub fn is_non_negative(&self) -> bool {
        self.data.iter().all(|&v| v >= 0.0)
    }

    pub(crate) fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() == other.shape() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                left_width: self.width,
                left_dim: self.dim,
                right_width: other.width,
                right_dim: other.dim,
            })
        }
    }
}

/// An ordered run of frames sharing one `(W, D)` shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    frames: Vec<FeatureSequence>,
    ground_truth: Option<Vec<Option<usize>>>,
}

impl Trajectory {
    pub fn new(frames: Vec<FeatureSequence>) -> Result<Self> {
        if let Some(first) = frames.first() {
            for f in &frames[1..] {
                first.ensure_same_shape(f)?;
            }
        }
        Ok(Self {
            frames,
            ground_truth: None,
        })
    }

    pub fn with_ground_truth(mut self, truth: Vec<Option<usize>>) -> Result<Self> {
        if truth.len() != self.frames.len() {
            return Err(Error::LengthMismatch(truth.len(), self.frames.len()));
        }
        self.ground_truth = Some(truth);
        Ok(self)
    }

    pub fn frames(&self) -> &[FeatureSequence] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(W, D)` of the frames, or `None` for an empty trajectory.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.frames.first().map(FeatureSequence::shape)
    }

    pub fn ground_truth(&self) -> Option<&[Option<usize>]> {
        self.ground_truth.as_deref()
    }

    /// Frames `[start, start + len)` as a new trajectory (ground truth follows).
    pub fn slice(&self, start: usize, len: usize) -> Self {
        let end = (start + len).min(self.frames.len());
        Self {
            frames: self.frames[start..end].to_vec(),
            ground_truth: self.ground_truth.as_ref().map(|g| g[start..end].to_vec()),
        }
    }
}

/// Dense row-major grid of distances; `f64::INFINITY` marks excluded cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    rows: usize,
    cols: usize,
    cells: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(rows: usize, cols: usize, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != rows * cols {
            return Err(Error::LengthMismatch(cells.len(), rows * cols));
        }
        Ok(Self { rows, cols, cells })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::LengthMismatch(bad.len(), cols));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.cells[i * self.cols..(i + 1) * self.cols]
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    /// Rows `[start, start + len)` as a new matrix.
    pub fn row_block(&self, start: usize, len: usize) -> Self {
        Self {
            rows: len,
            cols: self.cols,
            cells: self.cells[start * self.cols..(start + len) * self.cols].to_vec(),
        }
    }

    pub fn sentinel_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_infinite()).count()
    }
}

/// Monotone, continuous path through a grid with the cost charged at each point.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpingPath {
    pub points: Vec<(usize, usize)>,
    pub costs: Vec<f64>,
}

impl WarpingPath {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_cost(&self) -> f64 {
        self.costs.iter().sum()
    }

    pub fn end(&self) -> Option<(usize, usize)> {
        self.points.last().copied()
    }

    /// Checks start at the origin, unit steps, and `max(rows, cols) <= K <= rows + cols - 1`
    /// for a path ending at `(rows - 1, cols - 1)`.
    pub fn is_valid(&self, rows: usize, cols: usize) -> bool {
        let k = self.points.len();
        if k == 0 || self.costs.len() != k {
            return false;
        }
        if self.points[0] != (0, 0) || self.points[k - 1] != (rows - 1, cols - 1) {
            return false;
        }
        if k < rows.max(cols) || k > rows + cols - 1 {
            return false;
        }
        self.points.windows(2).all(|w| {
            let (di, dj) = (w[1].0.wrapping_sub(w[0].0), w[1].1.wrapping_sub(w[0].1));
            matches!((di, dj), (1, 0) | (0, 1) | (1, 1))
        })
    }
}

/// Image-to-image distance and the alignment that produced it.
///
/// `path` is `None` for the holistic-cosine and sliding-window modes, which
/// do not warp; for those `cumulative == distance` and `total_cost == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub distance: f64,
    pub path: Option<WarpingPath>,
    pub cumulative: f64,
    pub total_cost: f64,
    /// Diagonal weight in effect (1 outside adaptive mode).
    pub weight: f64,
}

/// How two images are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum AlignMode {
    #[default]
    Adaptive,
    Vanilla,
    HolisticCosine,
    SlidingWindow,
}

impl AlignMode {
    pub const ALL: [AlignMode; 4] = [
        AlignMode::HolisticCosine,
        AlignMode::SlidingWindow,
        AlignMode::Vanilla,
        AlignMode::Adaptive,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlignMode::Adaptive => "adaptive",
            AlignMode::Vanilla => "vanilla",
            AlignMode::HolisticCosine => "holistic",
            AlignMode::SlidingWindow => "sliding",
        }
    }
}

impl fmt::Display for AlignMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlignMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adaptive" => Ok(AlignMode::Adaptive),
            "vanilla" => Ok(AlignMode::Vanilla),
            "holistic" | "holistic-cosine" | "cosine" => Ok(AlignMode::HolisticCosine),
            "sliding" | "sliding-window" => Ok(AlignMode::SlidingWindow),
            other => Err(Error::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }
}

/// Image-level alignment settings. Defaults: sigma 1, xi 3, window 4, unrestricted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignConfig {
    pub sigma: f64,
    pub xi: usize,
    pub mode: AlignMode,
    pub window_size: usize,
    pub restricted: bool,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            xi: 3,
            mode: AlignMode::Adaptive,
            window_size: 4,
            restricted: false,
        }
    }
}

impl AlignConfig {
    pub fn with_mode(mut self, mode: AlignMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn restricted(mut self, xi: usize) -> Self {
        self.restricted = true;
        self.xi = xi;
        self
    }

    /// Validates the settings against a sequence width `W`.
    pub fn validate(&self, width: usize) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        if self.restricted && (self.xi < 1 || self.xi > width) {
            return Err(Error::InvalidConfig(format!(
                "xi must lie in [1, {width}], got {}",
                self.xi
            )));
        }
        if self.mode == AlignMode::SlidingWindow
            && (self.window_size < 1 || self.window_size > width)
        {
            return Err(Error::InvalidConfig(format!(
                "window size must lie in [1, {width}], got {}",
                self.window_size
            )));
        }
        Ok(())
    }
}
