//! Synthetic feature trajectories with known correspondences.
//!
//! Reference frames come from a latent Gaussian field that follows an AR(1)
//! process over time with blend factor 0.7 (`g_t = 0.7 g_{t-1} + sqrt(1 - 0.49) e_t`),
//! rectified at zero so features look like post-ReLU activations. Query frame
//! `t'` revisits reference frame `round(t' * speed_ratio)` with its local
//! features moved `shift` positions to the left, fresh vectors in the vacated
//! slots, and multiplicative noise `x * (1 + noise * e)` clamped at zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{FeatureSequence, Trajectory};
use crate::spatial::holistic_distance;

pub const TEMPORAL_BLEND: f64 = 0.7;

const ALIAS_JITTER: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    /// Reference length.
    pub n_frames: usize,
    pub width: usize,
    pub dim: usize,
    pub shift: usize,
    pub noise: f64,
    pub speed_ratio: f64,
    pub aliasing_pairs: usize,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_frames: 200,
            width: 7,
            dim: 64,
            shift: 0,
            noise: 0.0,
            speed_ratio: 1.0,
            aliasing_pairs: 0,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_frames == 0 || self.width == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig(
                "frames, W and D must all be >= 1".into(),
            ));
        }
        if self.shift >= self.width {
            return Err(Error::InvalidConfig(format!(
                "shift {} must be smaller than W = {}",
                self.shift, self.width
            )));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "noise must be >= 0, got {}",
                self.noise
            )));
        }
        if !(self.speed_ratio.is_finite() && self.speed_ratio > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "speed ratio must be > 0, got {}",
                self.speed_ratio
            )));
        }
        if self.aliasing_pairs > 0 && self.n_frames < 8 {
            return Err(Error::InvalidConfig(
                "aliasing needs at least 8 frames".into(),
            ));
        }
        Ok(())
    }

    /// Number of query frames: the query covers the whole reference route.
    pub fn query_len(&self) -> usize {
        ((self.n_frames - 1) as f64 / self.speed_ratio).floor() as usize + 1
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub reference: Trajectory,
    pub query: Trajectory,
    /// Reference index for each query frame.
    pub ground_truth: Vec<Option<usize>>,
    /// `(overwritten, source)` reference index pairs.
    pub aliases: Vec<(usize, usize)>,
    /// Mean holistic cosine distance between consecutive reference frames.
    pub adjacent_distance: f64,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let len = spec.width * spec.dim;
    let innovation = (1.0 - TEMPORAL_BLEND * TEMPORAL_BLEND).sqrt();

    let mut latent: Vec<f64> = (0..len).map(|_| normal(&mut rng)).collect();
    let mut reference: Vec<Vec<f64>> = Vec::with_capacity(spec.n_frames);
    for t in 0..spec.n_frames {
        if t > 0 {
            for g in latent.iter_mut() {
                *g = TEMPORAL_BLEND * *g + innovation * normal(&mut rng);
            }
        }
        reference.push(latent.iter().map(|&g| g.max(0.0)).collect());
    }

    let mut aliases = Vec::with_capacity(spec.aliasing_pairs);
    let min_gap = spec.n_frames / 4;
    for _ in 0..spec.aliasing_pairs {
        let target = rng.random_range(0..spec.n_frames);
        let source = loop {
            let s = rng.random_range(0..spec.n_frames);
            if s.abs_diff(target) >= min_gap.max(1) {
                break s;
            }
        };
        let copy = reference[source]
            .iter()
            .map(|&v| (v * (1.0 + ALIAS_JITTER * normal(&mut rng))).max(0.0))
            .collect();
        reference[target] = copy;
        aliases.push((target, source));
    }

    let nq = spec.query_len();
    let mut ground_truth = Vec::with_capacity(nq);
    let mut query = Vec::with_capacity(nq);
    let keep = (spec.width - spec.shift) * spec.dim;
    for tq in 0..nq {
        let t = ((tq as f64 * spec.speed_ratio).round() as usize).min(spec.n_frames - 1);
        ground_truth.push(Some(t));
        let src = &reference[t];
        let mut frame = Vec::with_capacity(len);
        frame.extend_from_slice(&src[spec.shift * spec.dim..]);
        frame.extend((keep..len).map(|_| normal(&mut rng).max(0.0)));
        if spec.noise > 0.0 {
            for v in frame.iter_mut() {
                *v = (*v * (1.0 + spec.noise * normal(&mut rng))).max(0.0);
            }
        }
        query.push(frame);
    }

    let to_traj = |frames: Vec<Vec<f64>>| -> Result<Trajectory> {
        let seqs = frames
            .into_iter()
            .enumerate()
            .map(|(i, f)| FeatureSequence::from_flat(i as u64, spec.width, spec.dim, f))
            .collect::<Result<Vec<_>>>()?;
        Trajectory::new(seqs)
    };
    let reference = to_traj(reference)?;
    let query = to_traj(query)?.with_ground_truth(ground_truth.clone())?;

    let adjacent_distance = if reference.len() > 1 {
        let f = reference.frames();
        f.windows(2)
            .map(|w| holistic_distance(&w[0], &w[1]))
            .sum::<f64>()
            / (f.len() - 1) as f64
    } else {
        0.0
    };

    Ok(SynthData {
        reference,
        query,
        ground_truth,
        aliases,
        adjacent_distance,
    })
}
