//! Evaluation harness: tolerance-based judging, precision-recall sweeps, the
//! boundary compensation rule and the ablation pipelines.
//!
//! A query frame is judged on one prediction. It is a positive when the
//! prediction's distance is below the threshold; a positive is a true positive
//! when the predicted reference index lies within `tolerance` frames of the
//! ground truth. Sequence pipelines predict the midpoint of the matched
//! subsequence for the midpoint of each query window.
//!
//! Boundary compensation (a local convention): the first and last `l / 2`
//! query frames have no centred window, so they borrow the nearest centred
//! window's match and read off the reference frame aligned with them along
//! its warping path, extrapolating one-for-one past the path's ends.

use std::fmt;

use log::warn;

use crate::error::{Error, Result};
use crate::model::{AlignConfig, AlignMode, DistanceMatrix, Trajectory};
use crate::par::Execution;
use crate::temporal::{image_distance_matrix, retrieve, RetrievalConfig, SequenceMatch};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    TruePositive,
    FalsePositive,
    FalseNegative,
    TrueNegative,
}

/// One query frame's answer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub query: usize,
    pub reference: usize,
    pub distance: f64,
    /// Filled in by boundary compensation rather than by its own window.
    pub compensated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalProtocol {
    pub tolerance: usize,
    /// Ascending acceptance thresholds.
    pub thresholds: Vec<f64>,
}

impl EvalProtocol {
    pub fn new(tolerance: usize, thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.windows(2).any(|w| w[0] > w[1]) || thresholds.iter().any(|t| t.is_nan()) {
            return Err(Error::InvalidConfig(
                "thresholds must be sorted ascending".into(),
            ));
        }
        Ok(Self {
            tolerance,
            thresholds,
        })
    }

    /// Thresholds that realise every distinct operating point of `predictions`:
    /// zero, then just above each observed distance.
    pub fn adaptive(tolerance: usize, predictions: &[Option<Prediction>]) -> Self {
        let mut t: Vec<f64> = predictions
            .iter()
            .flatten()
            .map(|p| p.distance.next_up())
            .filter(|d| !d.is_nan())
            .collect();
        t.push(0.0);
        t.sort_by(f64::total_cmp);
        t.dedup();
        Self {
            tolerance,
            thresholds: t,
        }
    }
}

pub fn judge_prediction(
    prediction: Option<&Prediction>,
    truth: Option<usize>,
    tolerance: usize,
    threshold: f64,
) -> Outcome {
    match prediction.filter(|p| p.distance < threshold) {
        Some(p) => match truth {
            Some(t) if p.reference.abs_diff(t) <= tolerance => Outcome::TruePositive,
            _ => Outcome::FalsePositive,
        },
        None if truth.is_some() => Outcome::FalseNegative,
        None => Outcome::TrueNegative,
    }
}

/// Judges a sequence match by its midpoint against the query midpoint's truth.
pub fn judge(
    m: &SequenceMatch,
    query_mid_truth: Option<usize>,
    tolerance: usize,
    threshold: f64,
) -> Outcome {
    let p = Prediction {
        query: 0,
        reference: m.midpoint(),
        distance: m.distance,
        compensated: false,
    };
    judge_prediction(Some(&p), query_mid_truth, tolerance, threshold)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrPoint {
    pub fn judged(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub best: usize,
}

impl PrCurve {
    pub fn best_point(&self) -> &PrPoint {
        &self.points[self.best]
    }

    pub fn max_f1(&self) -> f64 {
        self.best_point().f1
    }

    /// Tab-separated table with a header row.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from("threshold\ttp\tfp\tfn\ttn\tprecision\trecall\tf1\n");
        for p in &self.points {
            s.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}\n",
                p.threshold, p.tp, p.fp, p.fn_, p.tn, p.precision, p.recall, p.f1
            ));
        }
        s
    }
}

/// Precision, recall and F1 at every threshold of `protocol`.
///
/// `predictions[q]` is the answer for query frame `q` (`None`: no answer).
/// Queries without a ground-truth row are left out and logged. Precision is 1
/// when nothing is predicted positive.
pub fn f1_sweep(
    predictions: &[Option<Prediction>],
    truths: &[Option<usize>],
    protocol: &EvalProtocol,
) -> Result<PrCurve> {
    if protocol.thresholds.is_empty() {
        return Err(Error::InvalidConfig("no thresholds to sweep".into()));
    }
    if predictions.len() > truths.len() {
        warn!(
            "{} query frames have no ground truth and are not counted",
            predictions.len() - truths.len()
        );
    }
    let judged = predictions.len().min(truths.len());
    let points: Vec<PrPoint> = protocol
        .thresholds
        .iter()
        .map(|&threshold| {
            let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
            for q in 0..judged {
                match judge_prediction(
                    predictions[q].as_ref(),
                    truths[q],
                    protocol.tolerance,
                    threshold,
                ) {
                    Outcome::TruePositive => tp += 1,
                    Outcome::FalsePositive => fp += 1,
                    Outcome::FalseNegative => fn_ += 1,
                    Outcome::TrueNegative => tn += 1,
                }
            }
            let precision = if tp + fp == 0 {
                1.0
            } else {
                tp as f64 / (tp + fp) as f64
            };
            let recall = if tp + fn_ == 0 {
                0.0
            } else {
                tp as f64 / (tp + fn_) as f64
            };
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            PrPoint {
                threshold,
                tp,
                fp,
                fn_,
                tn,
                precision,
                recall,
                f1,
            }
        })
        .collect();
    let best = points.iter().enumerate().fold(
        0,
        |best, (i, p)| if p.f1 > points[best].f1 { i } else { best },
    );
    Ok(PrCurve { points, best })
}

/// Best match for the query window starting at `query_start`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowMatch {
    pub query_start: usize,
    pub best: SequenceMatch,
}

/// Range of query frames that own a centred window: `[l/2, n - l/2)`.
pub fn interior_range(n_query: usize, seq_len: usize) -> std::ops::Range<usize> {
    let h = seq_len / 2;
    h..n_query.saturating_sub(h).max(h)
}

/// Fills the boundary frames of `predictions` from the nearest window.
///
/// Entries that already hold a prediction are left alone.
pub fn compensate_boundaries(
    predictions: &[Option<Prediction>],
    windows: &[WindowMatch],
    seq_len: usize,
) -> Vec<Option<Prediction>> {
    let mut out = predictions.to_vec();
    if windows.is_empty() {
        warn!("no full query window available; boundary compensation skipped");
        return out;
    }
    let h = seq_len / 2;
    for (q, slot) in out.iter_mut().enumerate() {
        if slot.is_some() {
            continue;
        }
        let nearest = windows
            .iter()
            .min_by_key(|w| (w.query_start + h).abs_diff(q))
            .expect("windows is not empty");
        let m = &nearest.best;
        let offset = q as isize - nearest.query_start as isize;
        let (first, last) = (m.path.points[0], *m.path.points.last().unwrap());
        let reference = if offset < first.0 as isize {
            (m.start + first.1).saturating_sub((first.0 as isize - offset) as usize)
        } else if offset > last.0 as isize {
            m.start + last.1 + (offset - last.0 as isize) as usize
        } else {
            let i = offset as usize;
            m.path
                .points
                .iter()
                .find(|p| p.0 == i)
                .map(|p| m.start + p.1)
                .expect("path covers every query row")
        };
        *slot = Some(Prediction {
            query: q,
            reference,
            distance: m.distance,
            compensated: true,
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Temporal {
    SingleImage,
    Sequence,
}

impl fmt::Display for Temporal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Temporal::SingleImage => "single",
            Temporal::Sequence => "sequence",
        })
    }
}

/// One cell of the ablation matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pipeline {
    pub mode: AlignMode,
    pub temporal: Temporal,
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.mode, self.temporal)
    }
}

impl Pipeline {
    pub fn all() -> Vec<Pipeline> {
        AlignMode::ALL
            .iter()
            .flat_map(|&mode| {
                [Temporal::SingleImage, Temporal::Sequence]
                    .map(|temporal| Pipeline { mode, temporal })
            })
            .collect()
    }
}

/// Per-frame predictions of single-image matching: nearest reference per row.
pub fn single_image_predictions(d: &DistanceMatrix) -> Vec<Option<Prediction>> {
    (0..d.rows())
        .map(|q| {
            let row = d.row(q);
            let (reference, &distance) = row
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))?;
            Some(Prediction {
                query: q,
                reference,
                distance,
                compensated: false,
            })
        })
        .collect()
}

/// Sequence matching over a precomputed query-by-reference matrix.
///
/// Returns uncompensated predictions (boundary frames are `None`) and the
/// window matches they came from.
pub fn sequence_predictions(
    d: &DistanceMatrix,
    rcfg: &RetrievalConfig,
    exec: Execution,
) -> Result<(Vec<Option<Prediction>>, Vec<WindowMatch>)> {
    let n_query = d.rows();
    let l = rcfg.seq_len;
    let h = l / 2;
    let mut predictions = vec![None; n_query];
    let mut windows = Vec::new();
    if n_query < l {
        return Ok((predictions, windows));
    }
    for q in interior_range(n_query, l) {
        let query_start = q - h;
        let block = d.row_block(query_start, l);
        let outcome = retrieve(&block, rcfg, exec)?;
        let best = outcome
            .matches
            .into_iter()
            .next()
            .expect("history is not empty");
        predictions[q] = Some(Prediction {
            query: q,
            reference: best.midpoint(),
            distance: best.distance,
            compensated: false,
        });
        windows.push(WindowMatch { query_start, best });
    }
    Ok((predictions, windows))
}

/// Runs one ablation pipeline end to end.
///
/// Every pipeline is the same code with the image mode swapped into `base`.
pub fn run_pipeline(
    reference: &Trajectory,
    query: &Trajectory,
    pipeline: Pipeline,
    base: &AlignConfig,
    rcfg: &RetrievalConfig,
    exec: Execution,
) -> Result<Vec<Option<Prediction>>> {
    let cfg = base.with_mode(pipeline.mode);
    let d = image_distance_matrix(query.frames(), reference.frames(), &cfg, exec)?;
    predictions_from_matrix(&d, pipeline.temporal, rcfg, exec)
}

pub fn predictions_from_matrix(
    d: &DistanceMatrix,
    temporal: Temporal,
    rcfg: &RetrievalConfig,
    exec: Execution,
) -> Result<Vec<Option<Prediction>>> {
    match temporal {
        Temporal::SingleImage => Ok(single_image_predictions(d)),
        Temporal::Sequence => {
            let (preds, windows) = sequence_predictions(d, rcfg, exec)?;
            Ok(compensate_boundaries(&preds, &windows, rcfg.seq_len))
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub pipeline: Pipeline,
    pub curve: PrCurve,
}

/// Max-F1 curves for every mode x {single, sequence}. Each image mode's
/// distance matrix is computed once and shared by both temporal variants.
pub fn ablation_matrix(
    reference: &Trajectory,
    query: &Trajectory,
    truths: &[Option<usize>],
    tolerance: usize,
    base: &AlignConfig,
    rcfg: &RetrievalConfig,
    exec: Execution,
) -> Result<Vec<AblationRow>> {
    let mut rows = Vec::new();
    for mode in AlignMode::ALL {
        let cfg = base.with_mode(mode);
        let d = image_distance_matrix(query.frames(), reference.frames(), &cfg, exec)?;
        for temporal in [Temporal::SingleImage, Temporal::Sequence] {
            let preds = predictions_from_matrix(&d, temporal, rcfg, exec)?;
            let protocol = EvalProtocol::adaptive(tolerance, &preds);
            rows.push(AblationRow {
                pipeline: Pipeline { mode, temporal },
                curve: f1_sweep(&preds, truths, &protocol)?,
            });
        }
    }
    Ok(rows)
}
