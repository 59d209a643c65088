//! Gaussian random projection of local features.
//!
//! The projection matrix is `target x source` with i.i.d. standard normal
//! entries scaled by `1 / sqrt(target)`. Entries come from a counter-based
//! generator so the matrix depends only on `(source, target, seed)` and can be
//! rebuilt bit-for-bit by another implementation:
//!
//! * entry `e = row * source + col` draws the SplitMix64 outputs for counters
//!   `2e` and `2e + 1` (state `seed + (counter + 1) * 0x9E3779B97F4A7C15`);
//! * each output becomes a uniform in `(0, 1]` as `((z >> 11) + 1) * 2^-53`;
//! * Box-Muller: `sqrt(-2 ln u1) * cos(2 pi u2)`.
//!
//! One matrix serves every position of the sequence.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::model::{dot, FeatureSequence, Trajectory};
use crate::par::Execution;

pub const DEFAULT_TARGET_DIM: usize = 512;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(seed: u64, counter: u64) -> u64 {
    let mut z = seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit_open_closed(z: u64) -> f64 {
    ((z >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Standard normal draw number `index` of the stream for `seed`.
pub fn normal_at(seed: u64, index: u64) -> f64 {
    let u1 = unit_open_closed(splitmix64(seed, 2 * index));
    let u2 = unit_open_closed(splitmix64(seed, 2 * index + 1));
    (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionSpec {
    pub source_dim: usize,
    pub target_dim: usize,
    pub seed: u64,
    /// Pass vectors through unchanged (requires `target_dim == source_dim`).
    pub identity: bool,
}

impl ProjectionSpec {
    pub fn new(source_dim: usize, target_dim: usize, seed: u64) -> Self {
        Self {
            source_dim,
            target_dim,
            seed,
            identity: false,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            source_dim: dim,
            target_dim: dim,
            seed: 0,
            identity: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.target_dim == 0 || self.target_dim > self.source_dim {
            return Err(Error::InvalidConfig(format!(
                "target dimension must lie in [1, {}], got {}",
                self.source_dim, self.target_dim
            )));
        }
        if self.identity && self.target_dim != self.source_dim {
            return Err(Error::InvalidConfig(
                "identity projection needs equal source and target dimensions".into(),
            ));
        }
        Ok(())
    }
}

/// A materialised projection matrix.
#[derive(Debug, Clone)]
pub struct GaussianProjection {
    spec: ProjectionSpec,
    /// Row-major `target x source`; empty for the identity.
    matrix: Vec<f64>,
}

impl GaussianProjection {
    pub fn new(spec: ProjectionSpec) -> Result<Self> {
        spec.validate()?;
        if spec.identity {
            return Ok(Self {
                spec,
                matrix: Vec::new(),
            });
        }
        let src = spec.source_dim;
        let scale = 1.0 / (spec.target_dim as f64).sqrt();
        let rows = Execution::default().map(spec.target_dim, |r| {
            (0..src)
                .map(|c| normal_at(spec.seed, (r * src + c) as u64) * scale)
                .collect::<Vec<f64>>()
        });
        Ok(Self {
            spec,
            matrix: rows.concat(),
        })
    }

    pub fn spec(&self) -> &ProjectionSpec {
        &self.spec
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        if self.spec.identity {
            f64::from(u8::from(row == col))
        } else {
            self.matrix[row * self.spec.source_dim + col]
        }
    }

    pub fn project_vector(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.spec.source_dim {
            return Err(Error::LengthMismatch(v.len(), self.spec.source_dim));
        }
        if self.spec.identity {
            return Ok(v.to_vec());
        }
        Ok(self
            .matrix
            .chunks_exact(self.spec.source_dim)
            .map(|row| dot(row, v))
            .collect())
    }

    pub fn project(&self, seq: &FeatureSequence) -> Result<FeatureSequence> {
        if seq.dim() != self.spec.source_dim {
            return Err(Error::LengthMismatch(seq.dim(), self.spec.source_dim));
        }
        let mut out = Vec::with_capacity(seq.width() * self.spec.target_dim);
        for local in seq.locals() {
            out.extend(self.project_vector(local)?);
        }
        FeatureSequence::from_flat(seq.image_id(), seq.width(), self.spec.target_dim, out)
    }

    pub fn project_trajectory(&self, traj: &Trajectory, exec: Execution) -> Result<Trajectory> {
        let frames = exec.try_map(traj.len(), |i| self.project(&traj.frames()[i]))?;
        let out = Trajectory::new(frames)?;
        match traj.ground_truth() {
            Some(g) => out.with_ground_truth(g.to_vec()),
            None => Ok(out),
        }
    }
}

/// One-shot projection of a single sequence.
pub fn project(seq: &FeatureSequence, spec: ProjectionSpec) -> Result<FeatureSequence> {
    GaussianProjection::new(spec)?.project(seq)
}
