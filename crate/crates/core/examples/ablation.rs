//! Prints the max-F1 of every ablation pipeline on seeded synthetic shift data.
//!
//! cargo run --release -p placealign --example ablation -- [dim] [aliasing] [tolerance] [seeds]
//!
//! `-- 8 0 3 10` reproduces the per-seed numbers behind the acceptance margins.

use placealign::eval::ablation_matrix;
use placealign::{generate, AlignConfig, Execution, RetrievalConfig, SynthSpec};

fn main() -> placealign::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg =
        |i: usize, default: usize| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(default);
    let (dim, aliasing, tolerance, seeds) = (arg(0, 64), arg(1, 0), arg(2, 3), arg(3, 10));
    for seed in 0..seeds as u64 {
        let data = generate(&SynthSpec {
            n_frames: 200,
            dim,
            shift: 2,
            noise: 0.2,
            aliasing_pairs: aliasing,
            seed,
            ..SynthSpec::default()
        })?;
        let rows = ablation_matrix(
            &data.reference,
            &data.query,
            &data.ground_truth,
            tolerance,
            &AlignConfig::default(),
            &RetrievalConfig::default(),
            Execution::default(),
        )?;
        let line: Vec<String> = rows
            .iter()
            .map(|r| format!("{}={:.3}", r.pipeline, r.curve.max_f1()))
            .collect();
        println!("seed {seed}: {}", line.join(" "));
    }
    Ok(())
}
