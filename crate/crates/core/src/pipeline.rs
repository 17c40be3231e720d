//! Per-clip detection pipeline from samples to features.

use rayon::prelude::*;

use crate::audio::{AudioClip, LabeledClip};
use crate::classifier::{train, TrainOutcome};
use crate::config::PipelineConfig;
use crate::error::Result;
use crate::features::{features_from_grid, grid_means, FeatureMode, FeatureVector, GridMeans};
use crate::preprocess::preprocess;
use crate::regions::{binarize, roi_spectrogram, trace_regions, Axes, BinaryImage, Criterion, Region};
use crate::spectrogram::{stft_spectrogram, Spectrogram};

/// Every intermediate stage for one clip.
#[derive(Debug, Clone)]
pub struct ClipAnalysis {
    pub raw: Spectrogram,
    pub conditioned: Spectrogram,
    pub binary: BinaryImage,
    pub regions: Vec<Region>,
    /// First failing criterion per region; `None` means kept.
    pub verdicts: Vec<Option<Criterion>>,
    pub roi: Spectrogram,
    pub grid: GridMeans,
}

impl ClipAnalysis {
    pub fn kept(&self) -> impl Iterator<Item = &Region> {
        self.regions
            .iter()
            .zip(&self.verdicts)
            .filter(|(_, v)| v.is_none())
            .map(|(r, _)| r)
    }

    pub fn kept_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.is_none()).count()
    }

    pub fn features(&self, mode: FeatureMode) -> FeatureVector {
        features_from_grid(&self.grid, mode)
    }
}

pub fn analyze_spectrogram(raw: Spectrogram, cfg: &PipelineConfig) -> Result<ClipAnalysis> {
    let conditioned = preprocess(&raw, &cfg.preprocess)?;
    let binary = binarize(&conditioned, cfg.binarize_fraction);
    let regions = trace_regions(&binary, cfg.connectivity, Axes::of(&conditioned));
    let verdicts: Vec<_> = regions.iter().map(|r| cfg.criteria.first_failure(r)).collect();
    let kept: Vec<Region> = regions
        .iter()
        .zip(&verdicts)
        .filter(|(_, v)| v.is_none())
        .map(|(r, _)| r.clone())
        .collect();
    let roi = roi_spectrogram(&conditioned, &kept);
    let grid = grid_means(&roi, cfg.band)?;
    Ok(ClipAnalysis {
        raw,
        conditioned,
        binary,
        regions,
        verdicts,
        roi,
        grid,
    })
}

/// Runs the whole pipeline on one clip.
pub fn analyze(clip: &AudioClip, cfg: &PipelineConfig) -> Result<ClipAnalysis> {
    analyze_spectrogram(stft_spectrogram(clip, &cfg.stft)?, cfg)
}

pub fn clip_features(clip: &AudioClip, cfg: &PipelineConfig, mode: FeatureMode) -> Result<FeatureVector> {
    Ok(analyze(clip, cfg)?.features(mode))
}

/// Features for many clips in parallel; results keep the input order.
pub fn featurize_clips(clips: &[LabeledClip], cfg: &PipelineConfig) -> Vec<Result<FeatureVector>> {
    clips
        .par_iter()
        .map(|lc| clip_features(&lc.clip, cfg, cfg.features))
        .collect()
}

/// Featurizes labeled clips, trains a network on them and records `cfg` in
/// the model. Any clip failure aborts training.
pub fn train_model(clips: &[LabeledClip], cfg: &PipelineConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let data = featurize_clips(clips, cfg)
        .into_iter()
        .zip(clips)
        .map(|(f, lc)| Ok((f?.values, lc.label.target())))
        .collect::<Result<Vec<_>>>()?;
    let mut out = train(&data, &cfg.train)?;
    embed_config(&mut out.network, cfg, None);
    Ok(out)
}

/// Metadata key holding a deployment score threshold, when one was chosen.
pub const OPERATING_THRESHOLD_KEY: &str = "operating_threshold";

/// Stores the pipeline configuration in a network's metadata.
pub fn embed_config(net: &mut crate::classifier::Network, cfg: &PipelineConfig, threshold: Option<f64>) {
    net.metadata = cfg.to_pairs();
    if let Some(t) = threshold {
        net.metadata.push((OPERATING_THRESHOLD_KEY.to_string(), t.to_string()));
    }
}

/// Rebuilds the pipeline configuration a model was trained with, checking
/// that its input width matches the recorded feature mode.
pub fn config_from_model(net: &crate::classifier::Network) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    cfg.apply_pairs(
        net.metadata
            .iter()
            .filter(|(k, _)| k != OPERATING_THRESHOLD_KEY)
            .map(|(k, v)| (k.as_str(), v.as_str())),
    )?;
    cfg.validate()?;
    if cfg.features.len() != net.n_inputs() {
        return Err(crate::error::Error::ShapeMismatch {
            expected: net.n_inputs(),
            found: cfg.features.len(),
        });
    }
    Ok(cfg)
}

/// Stored operating threshold, or 0.5.
pub fn operating_threshold(net: &crate::classifier::Network) -> f64 {
    net.meta(OPERATING_THRESHOLD_KEY)
        .and_then(|v| v.parse().ok())
        .unwrap_or(0.5)
}
