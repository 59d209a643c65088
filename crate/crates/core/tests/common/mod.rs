//! Reference computations for tests. Nothing here calls into the DP code
//! under test; they are deliberately slow and literal.
#![allow(dead_code)]

use placealign::FeatureSequence;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Minimum weighted score over every monotone, continuous path from the
/// origin to the far corner: the first cell counts once, a cell entered
/// diagonally counts `a` times, any other cell once.
pub fn brute_force_min_path(d: &[Vec<f64>], a: f64) -> f64 {
    fn walk(d: &[Vec<f64>], a: f64, i: usize, j: usize, acc: f64, best: &mut f64) {
        let (r, c) = (d.len() - 1, d[0].len() - 1);
        if (i, j) == (r, c) {
            *best = best.min(acc);
            return;
        }
        if i < r && j < c {
            walk(d, a, i + 1, j + 1, acc + a * d[i + 1][j + 1], best);
        }
        if i < r {
            walk(d, a, i + 1, j, acc + d[i + 1][j], best);
        }
        if j < c {
            walk(d, a, i, j + 1, acc + d[i][j + 1], best);
        }
    }
    let mut best = f64::INFINITY;
    walk(d, a, 0, 0, d[0][0], &mut best);
    best
}

/// Every monotone path from the origin to `(rows-1, cols-1)`, as point lists.
pub fn all_paths(rows: usize, cols: usize) -> Vec<Vec<(usize, usize)>> {
    fn walk(r: usize, c: usize, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        let (i, j) = *cur.last().unwrap();
        if (i, j) == (r, c) {
            out.push(cur.clone());
            return;
        }
        for (di, dj) in [(1, 1), (1, 0), (0, 1)] {
            if i + di <= r && j + dj <= c {
                cur.push((i + di, j + dj));
                walk(r, c, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(rows - 1, cols - 1, &mut vec![(0, 0)], &mut out);
    out
}

/// Plain unit-weight DTW from the origin to `(rows-1, end)` with the
/// candidate order diagonal, vertical, horizontal. Returns the cumulative
/// distance and the number of points on the chosen path.
pub fn naive_dtw_to(d: &[Vec<f64>], end: usize) -> (f64, usize) {
    let rows = d.len();
    let cols = end + 1;
    let mut s = vec![vec![(f64::INFINITY, 0usize); cols]; rows];
    for i in 0..rows {
        for j in 0..cols {
            let here = d[i][j];
            s[i][j] = if i == 0 && j == 0 {
                (here, 1)
            } else if i == 0 {
                (here + s[0][j - 1].0, s[0][j - 1].1 + 1)
            } else if j == 0 {
                (here + s[i - 1][0].0, s[i - 1][0].1 + 1)
            } else {
                let cands = [s[i - 1][j - 1], s[i - 1][j], s[i][j - 1]];
                let mut pick = cands[0];
                for c in &cands[1..] {
                    if here + c.0 < here + pick.0 {
                        pick = *c;
                    }
                }
                (here + pick.0, pick.1 + 1)
            };
        }
    }
    s[rows - 1][cols - 1]
}

/// Exhaustive endpoint scan: the end column minimising mean path distance
/// (smallest column on ties), returned as `(length, distance)`.
pub fn exhaustive_endpoint(d: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for x in 0..d[0].len() {
        let (s, k) = naive_dtw_to(d, x);
        let v = s / k as f64;
        if v < best.1 {
            best = (x + 1, v);
        }
    }
    best
}

pub fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny: f64 = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    1.0 - dot / (nx * ny)
}

pub fn random_nonneg(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random::<f64>()).collect()
}

pub fn random_sequence(rng: &mut ChaCha8Rng, width: usize, dim: usize) -> FeatureSequence {
    FeatureSequence::from_flat(0, width, dim, random_nonneg(rng, width * dim)).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| random_nonneg(rng, cols)).collect()
}

/// Copy of `x` with local features moved `shift` places left and fresh
/// random vectors in the vacated slots.
pub fn shifted_copy(rng: &mut ChaCha8Rng, x: &FeatureSequence, shift: usize) -> FeatureSequence {
    let (w, d) = x.shape();
    let mut data = Vec::with_capacity(w * d);
    for i in 0..w {
        if i + shift < w {
            data.extend_from_slice(x.local(i + shift));
        } else {
            data.extend(random_nonneg(rng, d));
        }
    }
    FeatureSequence::from_flat(0, w, d, data).unwrap()
}
