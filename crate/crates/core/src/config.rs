//! Whole-pipeline configuration and its `key=value` text form.
//!
//! The same text form is embedded in model files, so a model always carries
//! the exact settings it was trained under.

use std::fs;
use std::path::Path;

use crate::classifier::{Activation, BatchMode, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{FeatureMode, GridBand};
use crate::preprocess::PreprocessConfig;
use crate::regions::{Bounds, Connectivity, Criterion, RegionCriteria};
use crate::spectrogram::StftConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub stft: StftConfig,
    pub preprocess: PreprocessConfig,
    pub binarize_fraction: f64,
    pub connectivity: Connectivity,
    pub criteria: RegionCriteria,
    pub band: GridBand,
    pub features: FeatureMode,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stft: StftConfig::default(),
            preprocess: PreprocessConfig::default(),
            binarize_fraction: 0.10,
            connectivity: Connectivity::Eight,
            criteria: RegionCriteria::default(),
            band: GridBand::default(),
            features: FeatureMode::Combined20,
            train: TrainConfig::default(),
        }
    }
}

fn criterion_key(c: Criterion) -> &'static str {
    match c {
        Criterion::Perimeter => "perimeter_px",
        Criterion::Area => "area_px",
        Criterion::HeightHz => "height_hz",
        Criterion::WidthS => "width_s",
        Criterion::OrientationDeg => "orientation_deg",
        Criterion::HeightWidthRatio => "hw_ratio",
        Criterion::FrequencyHz => "freq_hz",
        Criterion::AxesRatio => "axes_ratio",
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), |x| x.to_string())
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Config(format!("{key}: expected a number, got `{value}`")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got `{value}`")))
}

fn parse_opt(key: &str, value: &str) -> Result<Option<f64>> {
    if value == "none" {
        Ok(None)
    } else {
        parse_f64(key, value).map(Some)
    }
}

impl PipelineConfig {
    /// Every setting as ordered `key=value` pairs.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));
        put("window_len", self.stft.window_len.to_string());
        put("hop", self.stft.hop.to_string());
        put("spectrum_scale", self.stft.scale.to_string());
        put("wiener_window", self.preprocess.wiener_window.to_string());
        put("s_floor", self.preprocess.s_floor.to_string());
        put("s_ceiling", self.preprocess.s_ceiling.to_string());
        put("bound_units", self.preprocess.units.to_string());
        put("binarize_fraction", self.binarize_fraction.to_string());
        put("connectivity", self.connectivity.to_string());
        for c in Criterion::ALL {
            let b = self.criteria.bounds(c);
            put(&format!("min_{}", criterion_key(c)), fmt_opt(b.min));
            put(&format!("max_{}", criterion_key(c)), fmt_opt(b.max));
        }
        put("grid_lo_hz", self.band.lo_hz.to_string());
        put("grid_hi_hz", self.band.hi_hz.to_string());
        put("features", self.features.to_string());
        put("epochs", self.train.epochs.to_string());
        put("learning_rate", self.train.learning_rate.to_string());
        put("seed", self.train.seed.to_string());
        put("batch", self.train.batch.to_string());
        put(
            "hidden",
            self.train
                .hidden
                .iter()
                .map(|h| h.to_string())
                .collect::<Vec<_>>()
                .join(","),
        );
        put("hidden_activation", self.train.hidden_activation.to_string());
        out
    }

    /// Applies one setting. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "window_len" => self.stft.window_len = parse_usize(key, value)?,
            "hop" => self.stft.hop = parse_usize(key, value)?,
            "spectrum_scale" => self.stft.scale = value.parse()?,
            "wiener_window" => self.preprocess.wiener_window = parse_usize(key, value)?,
            "s_floor" => self.preprocess.s_floor = parse_f64(key, value)?,
            "s_ceiling" => self.preprocess.s_ceiling = parse_f64(key, value)?,
            "bound_units" => self.preprocess.units = value.parse()?,
            "binarize_fraction" => self.binarize_fraction = parse_f64(key, value)?,
            "connectivity" => self.connectivity = value.parse()?,
            "grid_lo_hz" => self.band.lo_hz = parse_f64(key, value)?,
            "grid_hi_hz" => self.band.hi_hz = parse_f64(key, value)?,
            "features" => self.features = value.parse()?,
            "epochs" => self.train.epochs = parse_usize(key, value)?,
            "learning_rate" => self.train.learning_rate = parse_f64(key, value)?,
            "seed" => {
                self.train.seed = value
                    .parse()
                    .map_err(|_| Error::Config(format!("seed: expected an integer, got `{value}`")))?
            }
            "batch" => self.train.batch = value.parse::<BatchMode>()?,
            "hidden" => {
                self.train.hidden = value
                    .split(',')
                    .map(|h| parse_usize(key, h.trim()))
                    .collect::<Result<_>>()?
            }
            "hidden_activation" => self.train.hidden_activation = value.parse::<Activation>()?,
            _ => {
                let crit = Criterion::ALL.into_iter().find_map(|c| {
                    let name = criterion_key(c);
                    if key.strip_prefix("min_") == Some(name) {
                        Some((c, true))
                    } else if key.strip_prefix("max_") == Some(name) {
                        Some((c, false))
                    } else {
                        None
                    }
                });
                let Some((c, is_min)) = crit else {
                    return Err(Error::Config(format!("unknown configuration key `{key}`")));
                };
                let v = parse_opt(key, value)?;
                let b: &mut Bounds = self.criteria.bounds_mut(c);
                if is_min {
                    b.min = v;
                } else {
                    b.max = v;
                }
            }
        }
        Ok(())
    }

    pub fn apply_pairs<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<()> {
        for (k, v) in pairs {
            self.set(k, v)?;
        }
        Ok(())
    }

    /// Parses `key = value` lines on top of the current settings; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PipelineConfig::from_text(&text)
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.stft.validate()?;
        self.preprocess.validate()?;
        if !(self.binarize_fraction > 0.0 && self.binarize_fraction.is_finite()) {
            return Err(Error::Config(format!(
                "binarize_fraction must be positive, got {}",
                self.binarize_fraction
            )));
        }
        self.criteria.validate()?;
        self.band.validate()?;
        self.train.validate()
    }
}
