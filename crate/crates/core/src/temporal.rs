//! Subsequence retrieval in a history trajectory with relaxed-endpoint DTW.
//!
//! For a query of `l` frames, every history frame is tried as the start of a
//! candidate window of `k = ceil(beta * l)` frames. Inside a window the DTW
//! runs with unit diagonal weight, and the best end column `x` is the one
//! minimising `s[l][x] / C[l][x]`. Work per start is fixed at `l * k` cells,
//! so a full scan is linear in the history length.
//!
//! Windows that run past the end of the history are padded with `+inf`
//! columns; the padded columns can never be selected, so the result is the
//! same as aligning against the `n - start` frames that remain.

use crate::dtw::{ColumnWindow, CumulativeTable, Grid};
use crate::error::{Error, Result};
use crate::model::{AlignConfig, DistanceMatrix, FeatureSequence, Trajectory, WarpingPath};
use crate::par::Execution;
use crate::spatial::image_distance;

/// Sequence-level settings. Defaults: `l = 20`, `beta = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalConfig {
    pub seq_len: usize,
    pub beta: f64,
    /// Acceptance cut on sequence distance, used by reporting and evaluation.
    pub threshold: f64,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            seq_len: 20,
            beta: 2.0,
            threshold: f64::INFINITY,
        }
    }
}

impl RetrievalConfig {
    /// Candidate window length `ceil(beta * l)`.
    pub fn window(&self) -> usize {
        (self.beta * self.seq_len as f64).ceil() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.seq_len < 2 {
            return Err(Error::InvalidConfig(format!(
                "query length must be >= 2, got {}",
                self.seq_len
            )));
        }
        if !(self.beta.is_finite() && self.beta > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "beta must be > 1, got {}",
                self.beta
            )));
        }
        Ok(())
    }
}

/// Outcome of relaxed-endpoint DTW on one window.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMatch {
    /// Matched length `m` (number of window columns used).
    pub length: usize,
    pub distance: f64,
    pub path: WarpingPath,
    /// DP cells updated.
    pub cells: usize,
}

/// Best match for one start frame.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceMatch {
    /// Zero-based history index of the first matched frame.
    pub start: usize,
    pub length: usize,
    pub distance: f64,
    /// Path in window coordinates, from `(0, 0)` to `(l - 1, length - 1)`.
    pub path: WarpingPath,
}

impl SequenceMatch {
    /// `(query frame, history frame)` pairs along the path.
    pub fn frame_pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.path
            .points
            .iter()
            .map(move |&(i, j)| (i, self.start + j))
    }

    /// History index at the middle of the matched subsequence.
    pub fn midpoint(&self) -> usize {
        self.start + self.length / 2
    }
}

/// Ranked matches for one query plus the DP work it took.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub matches: Vec<SequenceMatch>,
    pub cells: usize,
}

impl SearchOutcome {
    pub fn best(&self) -> Option<&SequenceMatch> {
        self.matches.first()
    }
}

/// Relaxed-endpoint DTW over a precomputed `l x k` distance grid.
pub fn lm_dtw_on<G: Grid + ?Sized>(grid: &G) -> Result<LocalMatch> {
    if grid.rows() < 2 {
        return Err(Error::InvalidConfig(format!(
            "query length must be >= 2, got {}",
            grid.rows()
        )));
    }
    if grid.cols() == 0 {
        return Err(Error::Empty("candidate window has no frames"));
    }
    let table = CumulativeTable::fill(grid, 1.0);
    let last = grid.rows() - 1;
    let mut best = (0, table.normalized(last, 0));
    for x in 1..grid.cols() {
        let v = table.normalized(last, x);
        if v < best.1 {
            best = (x, v);
        }
    }
    let (x, distance) = best;
    Ok(LocalMatch {
        length: x + 1,
        distance,
        path: table.path_to(last, x),
        cells: table.cells(),
    })
}

/// Locates the prefix of `candidate` that best matches `query`.
pub fn lm_dtw(query: &Trajectory, candidate: &Trajectory, cfg: &AlignConfig) -> Result<LocalMatch> {
    if query.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "query length must be >= 2, got {}",
            query.len()
        )));
    }
    if candidate.is_empty() {
        return Err(Error::Empty("candidate window has no frames"));
    }
    let d = image_distance_matrix(
        query.frames(),
        candidate.frames(),
        cfg,
        Execution::Sequential,
    )?;
    lm_dtw_on(&d)
}

/// Image distances between every query frame (rows) and reference frame (columns).
pub fn image_distance_matrix(
    queries: &[FeatureSequence],
    references: &[FeatureSequence],
    cfg: &AlignConfig,
    exec: Execution,
) -> Result<DistanceMatrix> {
    if let (Some(q), Some(r)) = (queries.first(), references.first()) {
        q.ensure_same_shape(r)?;
        cfg.validate(q.width())?;
    }
    let cols = references.len();
    let cells = exec.try_map(queries.len() * cols, |idx| {
        image_distance(&queries[idx / cols], &references[idx % cols], cfg)
    })?;
    DistanceMatrix::new(queries.len(), cols, cells)
}

/// Runs relaxed-endpoint DTW from every start column of a precomputed
/// query-by-history matrix and ranks the results.
pub fn retrieve(
    d_ch: &DistanceMatrix,
    rcfg: &RetrievalConfig,
    exec: Execution,
) -> Result<SearchOutcome> {
    rcfg.validate()?;
    if d_ch.rows() != rcfg.seq_len {
        return Err(Error::InvalidConfig(format!(
            "distance matrix has {} rows but the query length is {}",
            d_ch.rows(),
            rcfg.seq_len
        )));
    }
    if d_ch.cols() == 0 {
        return Err(Error::Empty("history has no frames"));
    }
    let k = rcfg.window();
    let runs = exec.try_map(d_ch.cols(), |start| {
        lm_dtw_on(&ColumnWindow::new(d_ch, start, k)).map(|m| (start, m))
    })?;
    let cells = runs.iter().map(|(_, m)| m.cells).sum();
    let mut matches: Vec<SequenceMatch> = runs
        .into_iter()
        .map(|(start, m)| SequenceMatch {
            start,
            length: m.length,
            distance: m.distance,
            path: m.path,
        })
        .collect();
    rank(&mut matches);
    Ok(SearchOutcome { matches, cells })
}

/// Sorts by ascending distance, then by start frame.
pub fn rank(matches: &mut [SequenceMatch]) {
    matches.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.start.cmp(&b.start))
    });
}

/// Full search: builds the query-by-history distance matrix, then retrieves.
pub fn search(
    query: &Trajectory,
    history: &Trajectory,
    rcfg: &RetrievalConfig,
    cfg: &AlignConfig,
) -> Result<SearchOutcome> {
    search_with(query, history, rcfg, cfg, Execution::default())
}

pub fn search_with(
    query: &Trajectory,
    history: &Trajectory,
    rcfg: &RetrievalConfig,
    cfg: &AlignConfig,
    exec: Execution,
) -> Result<SearchOutcome> {
    if history.is_empty() {
        return Err(Error::Empty("history has no frames"));
    }
    if query.len() != rcfg.seq_len {
        return Err(Error::InvalidConfig(format!(
            "query has {} frames but the configured length is {}",
            query.len(),
            rcfg.seq_len
        )));
    }
    rcfg.validate()?;
    let d_ch = image_distance_matrix(query.frames(), history.frames(), cfg, exec)?;
    retrieve(&d_ch, rcfg, exec)
}
