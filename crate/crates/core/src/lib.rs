//! Detection of right whale up-calls in 2 kHz hydrophone audio.
//!
//! Each 2-second clip goes through a fixed chain:
//!
//! 1. [`spectrogram`]: Hann-windowed STFT magnitude (256 samples, 50% overlap).
//! 2. [`preprocess`]: adaptive Wiener denoising, per-band zero-meaning and
//!    hard-limit equalization.
//! 3. [`regions`]: binarization, Moore-Neighbor boundary tracing, region
//!    measurement and shape filtering; survivors form a region-of-interest
//!    spectrogram.
//! 4. [`features`]: 6×6 grid means, diagonal and sliding-mask features.
//! 5. [`classifier`]: a small sigmoid MLP trained by backpropagation.
//!
//! [`evaluate`] computes ROC curves and operating points, [`synth`] builds a
//! labeled synthetic benchmark, and [`pipeline`] ties the stages together.

pub mod audio;
pub mod classifier;
pub mod config;
pub mod error;
pub mod evaluate;
pub mod features;
pub mod pipeline;
pub mod preprocess;
pub mod regions;
pub mod spectrogram;
pub mod synth;

pub use audio::{AudioClip, Label, LabeledClip, Manifest};
pub use classifier::{Network, TrainConfig};
pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use features::{FeatureMode, FeatureVector};
pub use regions::{Region, RegionCriteria};
pub use spectrogram::Spectrogram;
