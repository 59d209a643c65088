//! Weighted DTW recurrence shared by spatial and temporal alignment.
//!
//! Interior cells take `min(a*d + s[i-1][j-1], d + s[i-1][j], d + s[i][j-1])`
//! with candidates tried in that order and the first minimum kept. The path
//! cost runs forward alongside: a step charges `a` only when the diagonal
//! candidate is strictly smaller than both others, otherwise 1.

use crate::model::{DistanceMatrix, WarpingPath};

/// Read-only access to a grid of local distances.
pub trait Grid {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn at(&self, i: usize, j: usize) -> f64;
}

impl Grid for DistanceMatrix {
    fn rows(&self) -> usize {
        DistanceMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        DistanceMatrix::cols(self)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.get(i, j)
    }
}

/// A fixed-width column window of a wider matrix. Columns past the right
/// edge of the source read as `+inf`.
#[derive(Debug, Clone, Copy)]
pub struct ColumnWindow<'a> {
    source: &'a DistanceMatrix,
    start: usize,
    width: usize,
}

impl<'a> ColumnWindow<'a> {
    pub fn new(source: &'a DistanceMatrix, start: usize, width: usize) -> Self {
        Self {
            source,
            start,
            width,
        }
    }

    /// Number of columns that fall inside the source.
    pub fn available(&self) -> usize {
        self.source
            .cols()
            .saturating_sub(self.start)
            .min(self.width)
    }
}

impl Grid for ColumnWindow<'_> {
    fn rows(&self) -> usize {
        self.source.rows()
    }

    fn cols(&self) -> usize {
        self.width
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        let col = self.start + j;
        if col < self.source.cols() {
            self.source.get(i, col)
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Step {
    Start,
    Diagonal,
    Vertical,
    Horizontal,
}

/// Cumulative distance `S`, running path cost `C`, and back-pointers.
#[derive(Debug, Clone)]
pub struct CumulativeTable {
    rows: usize,
    cols: usize,
    cum: Vec<f64>,
    cost: Vec<f64>,
    charge: Vec<f64>,
    step: Vec<Step>,
}

impl CumulativeTable {
    /// Fills the tables for diagonal weight `weight` (`1` gives plain DTW).
    pub fn fill<G: Grid + ?Sized>(grid: &G, weight: f64) -> Self {
        let (rows, cols) = (grid.rows(), grid.cols());
        let n = rows * cols;
        let mut cum = vec![0.0; n];
        let mut cost = vec![0.0; n];
        let mut charge = vec![1.0; n];
        let mut step = vec![Step::Start; n];

        for i in 0..rows {
            for j in 0..cols {
                let idx = i * cols + j;
                let d = grid.at(i, j);
                match (i, j) {
                    (0, 0) => {
                        cum[idx] = d;
                        cost[idx] = 1.0;
                    }
                    (0, _) => {
                        cum[idx] = d + cum[idx - 1];
                        cost[idx] = cost[idx - 1] + 1.0;
                        step[idx] = Step::Horizontal;
                    }
                    (_, 0) => {
                        cum[idx] = d + cum[idx - cols];
                        cost[idx] = cost[idx - cols] + 1.0;
                        step[idx] = Step::Vertical;
                    }
                    _ => {
                        let diag = weight * d + cum[idx - cols - 1];
                        let up = d + cum[idx - cols];
                        let left = d + cum[idx - 1];
                        let (value, chosen, prev) = if diag <= up && diag <= left {
                            (diag, Step::Diagonal, idx - cols - 1)
                        } else if up <= left {
                            (up, Step::Vertical, idx - cols)
                        } else {
                            (left, Step::Horizontal, idx - 1)
                        };
                        let c = if diag < up.min(left) { weight } else { 1.0 };
                        cum[idx] = value;
                        cost[idx] = cost[prev] + c;
                        charge[idx] = c;
                        step[idx] = chosen;
                    }
                }
            }
        }

        Self {
            rows,
            cols,
            cum,
            cost,
            charge,
            step,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn cumulative(&self, i: usize, j: usize) -> f64 {
        self.cum[i * self.cols + j]
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.cols + j]
    }

    pub fn normalized(&self, i: usize, j: usize) -> f64 {
        self.cumulative(i, j) / self.cost(i, j)
    }

    /// Number of cells the recurrence updated.
    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    /// Back-traces the committed transitions from `(i, j)` to the origin.
    pub fn path_to(&self, i: usize, j: usize) -> WarpingPath {
        let mut points = Vec::with_capacity(i + j + 1);
        let mut costs = Vec::with_capacity(i + j + 1);
        let (mut r, mut c) = (i, j);
        loop {
            let idx = r * self.cols + c;
            points.push((r, c));
            costs.push(self.charge[idx]);
            match self.step[idx] {
                Step::Start => break,
                Step::Diagonal => {
                    r -= 1;
                    c -= 1;
                }
                Step::Vertical => r -= 1,
                Step::Horizontal => c -= 1,
            }
        }
        points.reverse();
        costs.reverse();
        WarpingPath { points, costs }
    }
}
