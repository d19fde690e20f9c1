//! k-nearest-neighbour density estimation, plug-in entropy, and distribution
//! distances for anomaly detection in sensor telemetry.
//!
//! The usual flow is: split a [`Dataset`] into reference and evaluation
//! halves, estimate the density at the evaluation points, turn that into an
//! entropy score per time instant, and threshold the scores against a normal
//! period. [`divergence`] covers the cases where entropy is blind (a pure
//! mean shift leaves entropy unchanged).

pub mod cli;
pub mod config;
pub mod dataset;
pub mod density;
pub mod detection;
pub mod divergence;
pub mod entropy;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod io;
pub mod special;
pub mod synthetic;

pub use dataset::{split_dataset, Dataset, SplitDataset};
pub use density::{boundary_correct, default_k, estimate_density, renormalize, DensityEstimate, SupportBounds};
pub use detection::{detect_series, threshold_from_training, DetectionReport, Threshold};
pub use divergence::{bhattacharyya, kl_divergence, windowed_bhattacharyya, DistanceProfile, GaussianSummary};
pub use entropy::{bias_correction, EntropyEstimate, EntropyPipeline, EstimateEnsemble};
pub use error::{Error, Result};
pub use evaluation::{convergence_sweep, qq_against_normal, roc_curve, RocCurve};
pub use ingest::{synchronize, MeasurementMatrix, RawRecord};
pub use synthetic::{inject_anomalies, AnomalyKind, AnomalySpec, GeneratorSpec};
