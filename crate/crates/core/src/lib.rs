//! Place recognition by aligning local image features in space and image
//! sequences in time.
//!
//! An image is a [`FeatureSequence`]: `W` local feature vectors cut from a
//! mid-layer CNN activation map. Two images are compared with an adaptive DTW
//! over their local features ([`spatial::align`]); a query sequence is located
//! in a history with relaxed-endpoint DTW started from every history frame
//! ([`temporal::search`]).
//!
//! Batch loops (distance matrices, per-start scans, projections) run on rayon
//! when the default `parallel` feature is on. Every entry point that fans out
//! also has a variant taking an explicit [`Execution`].

pub mod bench;
pub mod bundle;
pub mod dtw;
pub mod error;
pub mod eval;
pub mod model;
pub mod par;
pub mod projection;
pub mod spatial;
pub mod synth;
pub mod temporal;

pub use bundle::FeatureBundle;
pub use error::{Error, Result};
pub use model::{
    point_distance, AlignConfig, AlignMode, AlignmentResult, DistanceMatrix, FeatureSequence,
    Trajectory, WarpingPath,
};
pub use par::Execution;
pub use projection::{GaussianProjection, ProjectionSpec};
pub use spatial::{adaptive_weight, align, build_distance_matrix, AdaptiveWeight};
pub use synth::{generate, SynthData, SynthSpec};
pub use temporal::{lm_dtw, retrieve, search, RetrievalConfig, SearchOutcome, SequenceMatch};
