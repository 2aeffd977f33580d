//! Marginal feature screening for high-dimensional data.
//!
//! Each candidate column is scored against one outcome by mutual information
//! (FFT kernel density, adaptive binning or nearest neighbours) or by
//! absolute Pearson correlation. Simulation and AUROC evaluation utilities
//! measure how well a screen recovers a known support.

pub mod bench;
pub mod error;
pub mod evaluation;
pub mod fft;
pub mod io;
pub mod kde;
pub mod mi;
pub(crate) mod rng;
pub mod screening;
pub mod simulation;
pub mod stats;

pub use error::{HdmiError, Result};
pub use evaluation::{auroc, selection_confusion, LabeledScores};
pub use io::{open_binary, open_dataset, read_csv, DatasetHandle};
pub use kde::{Bandwidth, BandwidthRule, Kernel};
pub use mi::{MiEstimate, Method, OutcomeKind, OutcomeRef};
pub use rng::derive_seed;
pub use screening::{screen, screen_external, top_k, FeatureScore, ScoreFlag, ScreeningConfig, ScreeningReport};
pub use simulation::{simulate, SimulatedDataset, SimulationSpec};
