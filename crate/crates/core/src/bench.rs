//! Runtime measurement of the two retrieval stages: building the
//! query-by-history distance matrix, and the relaxed-endpoint scan over it.

use std::fmt;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{AlignConfig, FeatureSequence, Trajectory};
use crate::par::Execution;
use crate::projection::{GaussianProjection, ProjectionSpec};
use crate::temporal::{image_distance_matrix, retrieve, RetrievalConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Raw features, full distance matrix.
    Original,
    /// Projected features, full distance matrix.
    Grp,
    /// Projected features, banded distance matrix.
    GrpRa,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Original, Variant::Grp, Variant::GrpRa];
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Original => "original",
            Variant::Grp => "grp",
            Variant::GrpRa => "grp+ra",
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub history_lengths: Vec<usize>,
    pub seq_len: usize,
    pub beta: f64,
    pub repetitions: usize,
    pub width: usize,
    pub dim: usize,
    pub target_dim: usize,
    pub xi: usize,
    /// Distinct frames generated; longer histories cycle through them.
    pub pool: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            history_lengths: vec![1000, 2000],
            seq_len: 20,
            beta: 2.0,
            repetitions: 3,
            width: 7,
            dim: 10416,
            target_dim: 512,
            xi: 3,
            pool: 64,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub history: usize,
    pub variant: Variant,
    /// Median over repetitions.
    pub matrix_time: Duration,
    pub retrieval_time: Duration,
    /// DP cells updated by one retrieval; identical across repetitions.
    pub cells: usize,
}

/// Rectified-Gaussian frames drawn from a fixed pool of `pool` distinct images.
pub fn pooled_trajectory(
    len: usize,
    pool: usize,
    width: usize,
    dim: usize,
    seed: u64,
) -> Result<Trajectory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let distinct: Vec<FeatureSequence> = (0..pool.clamp(1, len.max(1)))
        .map(|i| {
            let data = (0..width * dim)
                .map(|_| {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    v.max(0.0)
                })
                .collect();
            FeatureSequence::from_flat(i as u64, width, dim, data)
        })
        .collect::<Result<_>>()?;
    Trajectory::new(
        (0..len)
            .map(|i| distinct[i % distinct.len()].clone().with_image_id(i as u64))
            .collect(),
    )
}

fn median(mut v: Vec<Duration>) -> Duration {
    v.sort();
    v[v.len() / 2]
}

pub fn run(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    if cfg.repetitions == 0 {
        return Err(Error::InvalidConfig(
            "at least one repetition is needed".into(),
        ));
    }
    let rcfg = RetrievalConfig {
        seq_len: cfg.seq_len,
        beta: cfg.beta,
        ..RetrievalConfig::default()
    };
    rcfg.validate()?;
    let max_n = cfg.history_lengths.iter().copied().max().unwrap_or(0);
    let history_all = pooled_trajectory(max_n, cfg.pool, cfg.width, cfg.dim, cfg.seed)?;
    let query = pooled_trajectory(
        cfg.seq_len,
        cfg.seq_len,
        cfg.width,
        cfg.dim,
        cfg.seed ^ 0x5eed,
    )?;
    let projection =
        GaussianProjection::new(ProjectionSpec::new(cfg.dim, cfg.target_dim, cfg.seed))?;
    let query_p = projection.project_trajectory(&query, cfg.exec)?;
    let history_all_p = {
        // Project the pool once and cycle, as the raw history does.
        let pool = cfg.pool.clamp(1, max_n.max(1));
        let projected = projection.project_trajectory(&history_all.slice(0, pool), cfg.exec)?;
        Trajectory::new(
            (0..max_n)
                .map(|i| projected.frames()[i % pool].clone().with_image_id(i as u64))
                .collect(),
        )?
    };

    let mut rows = Vec::new();
    for &n in &cfg.history_lengths {
        for variant in Variant::ALL {
            let (q, h, align) = match variant {
                Variant::Original => (&query, history_all.slice(0, n), AlignConfig::default()),
                Variant::Grp => (&query_p, history_all_p.slice(0, n), AlignConfig::default()),
                Variant::GrpRa => (
                    &query_p,
                    history_all_p.slice(0, n),
                    AlignConfig::default().restricted(cfg.xi),
                ),
            };
            let mut matrix_times = Vec::with_capacity(cfg.repetitions);
            let mut retrieval_times = Vec::with_capacity(cfg.repetitions);
            let mut cells = None;
            for _ in 0..cfg.repetitions {
                let t0 = Instant::now();
                let d = image_distance_matrix(q.frames(), h.frames(), &align, cfg.exec)?;
                matrix_times.push(t0.elapsed());
                let t1 = Instant::now();
                let out = retrieve(&d, &rcfg, cfg.exec)?;
                retrieval_times.push(t1.elapsed());
                match cells {
                    None => cells = Some(out.cells),
                    Some(c) if c != out.cells => {
                        return Err(Error::InvalidConfig(format!(
                            "cell count changed between repetitions: {c} vs {}",
                            out.cells
                        )))
                    }
                    Some(_) => {}
                }
            }
            rows.push(BenchRow {
                history: n,
                variant,
                matrix_time: median(matrix_times),
                retrieval_time: median(retrieval_times),
                cells: cells.unwrap_or(0),
            });
        }
    }
    Ok(rows)
}

pub fn to_tsv(rows: &[BenchRow]) -> String {
    let mut s = String::from("history\tvariant\tmatrix_s\tretrieval_s\tcells\n");
    for r in rows {
        s.push_str(&format!(
            "{}\t{}\t{:.6}\t{:.6}\t{}\n",
            r.history,
            r.variant,
            r.matrix_time.as_secs_f64(),
            r.retrieval_time.as_secs_f64(),
            r.cells
        ));
    }
    s
}
