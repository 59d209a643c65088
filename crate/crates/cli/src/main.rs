//! `placealign`: synthesise, project, match, evaluate and benchmark feature bundles.
//!
//! Every report starts with `#` lines echoing the command's configuration and
//! seeds, so an output file is enough to rerun what produced it.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use placealign::bench::{self, BenchConfig};
use placealign::bundle::save_ground_truth;
use placealign::eval::{ablation_matrix, f1_sweep, run_pipeline, EvalProtocol, Pipeline, Temporal};
use placealign::temporal::image_distance_matrix;
use placealign::{
    bundle, generate, retrieve, AlignConfig, AlignMode, Execution, FeatureBundle,
    GaussianProjection, ProjectionSpec, RetrievalConfig, SynthSpec,
};

#[derive(Parser)]
#[command(
    name = "placealign",
    version,
    about = "Spatial and temporal DTW place recognition"
)]
struct Cli {
    /// Run every batch loop on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a reference/query bundle pair with ground truth.
    Synth(SynthArgs),
    /// Apply a seeded Gaussian random projection to a bundle.
    Project(ProjectArgs),
    /// Rank history start frames for every query window.
    Match(MatchArgs),
    /// Precision/recall sweep against a ground-truth table.
    Eval(EvalArgs),
    /// Time distance-matrix construction and retrieval.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct AlignArgs {
    /// adaptive, vanilla, holistic or sliding.
    #[arg(long, default_value = "adaptive")]
    mode: AlignMode,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Band half-width used with --restricted.
    #[arg(long, default_value_t = 3)]
    xi: usize,
    #[arg(long)]
    restricted: bool,
}

impl AlignArgs {
    fn config(&self) -> AlignConfig {
        AlignConfig {
            mode: self.mode,
            sigma: self.sigma,
            xi: self.xi,
            restricted: self.restricted,
            ..AlignConfig::default()
        }
    }

    fn echo(&self) -> String {
        format!(
            "mode={} sigma={} xi={} restricted={}",
            self.mode, self.sigma, self.xi, self.restricted
        )
    }
}

#[derive(Args, Clone)]
struct SeqArgs {
    #[arg(long, default_value_t = 20)]
    seq_len: usize,
    #[arg(long, default_value_t = 2.0)]
    beta: f64,
}

impl SeqArgs {
    fn config(&self) -> RetrievalConfig {
        RetrievalConfig {
            seq_len: self.seq_len,
            beta: self.beta,
            ..RetrievalConfig::default()
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    /// Directory receiving reference.stab, query.stab and truth.csv.
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long, default_value_t = 200)]
    frames: usize,
    #[arg(long, default_value_t = 7)]
    width: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    shift: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 1.0)]
    speed_ratio: f64,
    #[arg(long, default_value_t = 0)]
    aliasing: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ProjectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = placealign::projection::DEFAULT_TARGET_DIM)]
    target_dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct MatchArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    query: PathBuf,
    #[command(flatten)]
    align: AlignArgs,
    #[command(flatten)]
    seq: SeqArgs,
    /// Matches at or above this distance are reported as rejected.
    #[arg(long, default_value_t = f64::INFINITY)]
    threshold: f64,
    #[arg(long, default_value_t = 1)]
    top_k: usize,
    /// Expected projection seed of both bundles.
    #[arg(long)]
    seed: Option<u64>,
    /// Only the window starting at this query frame.
    #[arg(long)]
    query_start: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TemporalArg {
    Single,
    Sequence,
}

impl From<TemporalArg> for Temporal {
    fn from(t: TemporalArg) -> Self {
        match t {
            TemporalArg::Single => Temporal::SingleImage,
            TemporalArg::Sequence => Temporal::Sequence,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    query: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    #[command(flatten)]
    align: AlignArgs,
    #[command(flatten)]
    seq: SeqArgs,
    #[arg(long, value_enum, default_value = "sequence")]
    temporal: TemporalArg,
    /// Frames of slack when comparing a prediction with the truth.
    #[arg(long, default_value_t = 3)]
    tolerance: usize,
    /// Judge at this one threshold instead of sweeping every operating point.
    #[arg(long)]
    threshold: Option<f64>,
    /// Evaluate every mode x {single, sequence} and print max-F1 per pipeline.
    #[arg(long)]
    ablation: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Comma-separated history lengths.
    #[arg(long, value_delimiter = ',', default_value = "1000,2000")]
    history: Vec<usize>,
    #[command(flatten)]
    seq: SeqArgs,
    #[arg(long, default_value_t = 7)]
    width: usize,
    #[arg(long, default_value_t = 10416)]
    dim: usize,
    #[arg(long, default_value_t = placealign::projection::DEFAULT_TARGET_DIM)]
    target_dim: usize,
    #[arg(long, default_value_t = 3)]
    xi: usize,
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Distinct frames generated; longer histories cycle through them.
    #[arg(long, default_value_t = 64)]
    pool: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn header(command: &str, lines: &[String]) -> String {
    let mut s = format!("# placealign {command} {}\n", env!("CARGO_PKG_VERSION"));
    for l in lines {
        writeln!(s, "# {l}").unwrap();
    }
    s
}

fn emit(report: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => {
            fs::write(path, report).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().lock().write_all(report.as_bytes())?;
            Ok(())
        }
    }
}

fn seed_text(seed: Option<u64>) -> String {
    seed.map_or_else(|| "none".to_string(), |s| s.to_string())
}

/// Loads both bundles and refuses to go on unless they share a projection
/// seed (and `expected`, when given) and a feature shape.
fn load_pair(
    reference: &Path,
    query: &Path,
    expected: Option<u64>,
) -> Result<(FeatureBundle, FeatureBundle)> {
    let r = FeatureBundle::load(reference)
        .with_context(|| format!("loading {}", reference.display()))?;
    let q = FeatureBundle::load(query).with_context(|| format!("loading {}", query.display()))?;
    r.ensure_compatible(&q)?;
    if let Some(seed) = expected {
        if r.projection_seed != Some(seed) {
            bail!(
                "projection seed mismatch: bundles carry seed {}, --seed {seed} was given",
                seed_text(r.projection_seed)
            );
        }
    }
    if r.trajectory.is_empty() || q.trajectory.is_empty() {
        bail!("bundles must hold at least one frame");
    }
    Ok((r, q))
}

fn synth(args: &SynthArgs) -> Result<()> {
    let spec = SynthSpec {
        n_frames: args.frames,
        width: args.width,
        dim: args.dim,
        shift: args.shift,
        noise: args.noise,
        speed_ratio: args.speed_ratio,
        aliasing_pairs: args.aliasing,
        seed: args.seed,
    };
    let data = generate(&spec)?;
    fs::create_dir_all(&args.output_dir)?;
    let config = vec![
        format!(
            "frames={} width={} dim={} shift={} noise={} speed_ratio={} aliasing={}",
            spec.n_frames,
            spec.width,
            spec.dim,
            spec.shift,
            spec.noise,
            spec.speed_ratio,
            spec.aliasing_pairs
        ),
        format!("seed={}", spec.seed),
        format!("adjacent_distance={:.6}", data.adjacent_distance),
    ];
    let reference = args.output_dir.join("reference.stab");
    let query = args.output_dir.join("query.stab");
    let truth = args.output_dir.join("truth.csv");
    FeatureBundle::raw(data.reference).save(&reference)?;
    FeatureBundle::raw(data.query).save(&query)?;
    save_ground_truth(&truth, &data.ground_truth, &config)?;
    let mut report = header("synth", &config);
    for p in [&reference, &query, &truth] {
        writeln!(report, "{}", p.display())?;
    }
    emit(&report, None)
}

fn project(args: &ProjectArgs, exec: Execution) -> Result<()> {
    let input = FeatureBundle::load(&args.input)
        .with_context(|| format!("loading {}", args.input.display()))?;
    if let Some(seed) = input.projection_seed {
        bail!(
            "{} is already projected (seed {seed})",
            args.input.display()
        );
    }
    let (_, dim) = input.trajectory.shape().context("bundle holds no frames")?;
    let projection = GaussianProjection::new(ProjectionSpec::new(dim, args.target_dim, args.seed))?;
    let out = FeatureBundle {
        trajectory: projection.project_trajectory(&input.trajectory, exec)?,
        projection_seed: Some(args.seed),
    };
    out.save(&args.output)?;
    let report = header(
        "project",
        &[
            format!(
                "source_dim={dim} target_dim={} seed={}",
                args.target_dim, args.seed
            ),
            format!("frames={}", out.trajectory.len()),
        ],
    );
    emit(&format!("{report}{}\n", args.output.display()), None)
}

fn run_match(args: &MatchArgs, exec: Execution) -> Result<()> {
    let (reference, query) = load_pair(&args.reference, &args.query, args.seed)?;
    let cfg = args.align.config();
    let rcfg = RetrievalConfig {
        threshold: args.threshold,
        ..args.seq.config()
    };
    rcfg.validate()?;
    if args.top_k == 0 {
        bail!("--top-k must be at least 1");
    }
    let l = rcfg.seq_len;
    let nq = query.trajectory.len();
    if nq < l {
        bail!("query has {nq} frames, fewer than --seq-len {l}");
    }
    let starts: Vec<usize> = match args.query_start {
        Some(s) if s + l > nq => bail!("--query-start {s} leaves fewer than {l} query frames"),
        Some(s) => vec![s],
        None => (0..=nq - l).collect(),
    };
    let d = image_distance_matrix(
        query.trajectory.frames(),
        reference.trajectory.frames(),
        &cfg,
        exec,
    )?;

    let mut report = header(
        "match",
        &[
            format!(
                "{} seq_len={} beta={} threshold={} top_k={}",
                args.align.echo(),
                l,
                rcfg.beta,
                rcfg.threshold,
                args.top_k
            ),
            format!("projection_seed={}", seed_text(reference.projection_seed)),
            format!(
                "reference_frames={} query_frames={nq}",
                reference.trajectory.len()
            ),
        ],
    );
    report.push_str("query_start\trank\tstart\tlength\tdistance\taccepted\n");
    for s in starts {
        let outcome = retrieve(&d.row_block(s, l), &rcfg, exec)?;
        for (rank, m) in outcome.matches.iter().take(args.top_k).enumerate() {
            writeln!(
                report,
                "{s}\t{rank}\t{}\t{}\t{:.9}\t{}",
                m.start,
                m.length,
                m.distance,
                u8::from(m.distance < rcfg.threshold)
            )?;
        }
    }
    emit(&report, args.output.as_deref())
}

fn eval(args: &EvalArgs, exec: Execution) -> Result<()> {
    let (reference, query) = load_pair(&args.reference, &args.query, args.seed)?;
    let truths = bundle::load_ground_truth(&args.truth)
        .with_context(|| format!("loading {}", args.truth.display()))?;
    if truths.len() != query.trajectory.len() {
        bail!(
            "ground truth has {} rows but the query has {} frames",
            truths.len(),
            query.trajectory.len()
        );
    }
    let base = args.align.config();
    let rcfg = args.seq.config();
    let mut lines = vec![
        format!(
            "{} seq_len={} beta={} tolerance={}",
            args.align.echo(),
            rcfg.seq_len,
            rcfg.beta,
            args.tolerance
        ),
        format!("projection_seed={}", seed_text(reference.projection_seed)),
        "boundary frames: nearest window's path, extrapolated one-for-one (local convention)"
            .to_string(),
    ];
    let report = if args.ablation {
        let rows = ablation_matrix(
            &reference.trajectory,
            &query.trajectory,
            &truths,
            args.tolerance,
            &base,
            &rcfg,
            exec,
        )?;
        let mut r = header("eval", &lines);
        r.push_str("pipeline\tmax_f1\tprecision\trecall\tthreshold\n");
        for row in rows {
            let p = row.curve.best_point();
            writeln!(
                r,
                "{}\t{:.6}\t{:.6}\t{:.6}\t{}",
                row.pipeline, p.f1, p.precision, p.recall, p.threshold
            )?;
        }
        r
    } else {
        let pipeline = Pipeline {
            mode: base.mode,
            temporal: args.temporal.into(),
        };
        let preds = run_pipeline(
            &reference.trajectory,
            &query.trajectory,
            pipeline,
            &base,
            &rcfg,
            exec,
        )?;
        let protocol = match args.threshold {
            Some(t) => EvalProtocol::new(args.tolerance, vec![t])?,
            None => EvalProtocol::adaptive(args.tolerance, &preds),
        };
        let curve = f1_sweep(&preds, &truths, &protocol)?;
        lines.push(format!("pipeline={pipeline}"));
        lines.push(format!("max_f1={:.6}", curve.max_f1()));
        format!("{}{}", header("eval", &lines), curve.to_tsv())
    };
    emit(&report, args.output.as_deref())
}

fn run_bench(args: &BenchArgs, exec: Execution) -> Result<()> {
    let cfg = BenchConfig {
        history_lengths: args.history.clone(),
        seq_len: args.seq.seq_len,
        beta: args.seq.beta,
        repetitions: args.reps,
        width: args.width,
        dim: args.dim,
        target_dim: args.target_dim,
        xi: args.xi,
        pool: args.pool,
        seed: args.seed,
        exec,
    };
    let rows = bench::run(&cfg)?;
    let report = header(
        "bench",
        &[
            format!(
                "history={:?} seq_len={} beta={} width={} dim={} target_dim={} xi={} reps={} pool={}",
                cfg.history_lengths, cfg.seq_len, cfg.beta, cfg.width, cfg.dim, cfg.target_dim, cfg.xi, cfg.repetitions, cfg.pool
            ),
            format!("seed={} execution={:?}", cfg.seed, cfg.exec),
            "times are medians; cells are DP updates per retrieval".to_string(),
        ],
    );
    emit(
        &format!("{report}{}", bench::to_tsv(&rows)),
        args.output.as_deref(),
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let result = match &cli.command {
        Command::Synth(a) => synth(a),
        Command::Project(a) => project(a, exec),
        Command::Match(a) => run_match(a, exec),
        Command::Eval(a) => eval(a, exec),
        Command::Bench(a) => run_bench(a, exec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
