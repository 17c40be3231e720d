//! Python bindings. Audio goes in as sequences of floats at 2000 Hz, matrices
//! come back as nested lists indexed `[bin][frame]`, and configurations are
//! the same `key=value` text the command line reads.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use upcall_core::evaluate as ev;
use upcall_core::pipeline::{self, ClipAnalysis};
use upcall_core::regions::Criterion;
use upcall_core::synth::{self, SynthSpec};
use upcall_core::{audio, preprocess as pre, spectrogram as sg};
use upcall_core::{AudioClip, FeatureMode, Label, LabeledClip, PipelineConfig};

fn py_err(e: upcall_core::Error) -> PyErr {
    match e {
        upcall_core::Error::Io { .. } | upcall_core::Error::Wav { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn config(text: Option<&str>) -> PyResult<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(t) = text {
        cfg.apply_text(t).map_err(py_err)?;
    }
    cfg.validate().map_err(py_err)?;
    Ok(cfg)
}

fn clip(samples: &[f64]) -> PyResult<AudioClip> {
    AudioClip::new(samples, "python", 0.0).map_err(py_err)
}

fn mode(name: &str) -> PyResult<FeatureMode> {
    name.parse().map_err(py_err)
}

/// Time-frequency matrix with its axes.
#[pyclass(name = "Spectrogram", module = "upcall", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PySpectrogram {
    inner: sg::Spectrogram,
}

#[pymethods]
impl PySpectrogram {
    #[getter]
    fn values(&self) -> Vec<Vec<f64>> {
        self.inner.values.rows().into_iter().map(|r| r.to_vec()).collect()
    }
    #[getter]
    fn bin_hz(&self) -> f64 {
        self.inner.bin_hz
    }
    #[getter]
    fn frame_s(&self) -> f64 {
        self.inner.frame_s
    }
    #[getter]
    fn n_bins(&self) -> usize {
        self.inner.n_bins()
    }
    #[getter]
    fn n_frames(&self) -> usize {
        self.inner.n_frames()
    }
    /// Binary PGM image, low frequencies at the bottom.
    fn to_pgm<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_pgm())
    }
    fn __repr__(&self) -> String {
        format!("Spectrogram({} bins x {} frames)", self.inner.n_bins(), self.inner.n_frames())
    }
}

/// A traced continuous region and the first criterion it failed, if any.
#[pyclass(name = "Region", module = "upcall", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
pub struct PyRegion {
    area_px: usize,
    perimeter_px: usize,
    height_hz: f64,
    width_s: f64,
    orientation_deg: f64,
    hw_ratio: f64,
    axes_ratio: f64,
    freq_min_hz: f64,
    freq_max_hz: f64,
    /// `(row_min, row_max, col_min, col_max)`
    bbox: (usize, usize, usize, usize),
    kept: bool,
    failed: Option<String>,
}

#[pymethods]
impl PyRegion {
    fn __repr__(&self) -> String {
        format!(
            "Region(area={}, perimeter={}, {:.0}-{:.0} Hz, {:.2} s, kept={})",
            self.area_px, self.perimeter_px, self.freq_min_hz, self.freq_max_hz, self.width_s, self.kept
        )
    }
}

fn regions_of(a: &ClipAnalysis) -> Vec<PyRegion> {
    a.regions
        .iter()
        .zip(&a.verdicts)
        .map(|(r, v): (_, &Option<Criterion>)| PyRegion {
            area_px: r.area_px,
            perimeter_px: r.perimeter_px,
            height_hz: r.height_hz,
            width_s: r.width_s,
            orientation_deg: r.orientation_deg,
            hw_ratio: r.height_width_ratio(),
            axes_ratio: r.axes_ratio,
            freq_min_hz: r.freq_min_hz,
            freq_max_hz: r.freq_max_hz,
            bbox: (r.bbox.row_min, r.bbox.row_max, r.bbox.col_min, r.bbox.col_max),
            kept: v.is_none(),
            failed: v.map(|c| c.to_string()),
        })
        .collect()
}

/// Trained classifier with the pipeline settings it was trained under.
#[pyclass(name = "Network", module = "upcall", frozen, skip_from_py_object)]
pub struct PyNetwork {
    inner: upcall_core::Network,
    cfg: PipelineConfig,
}

impl PyNetwork {
    fn wrap(inner: upcall_core::Network) -> PyResult<Self> {
        let cfg = pipeline::config_from_model(&inner).map_err(py_err)?;
        Ok(PyNetwork { inner, cfg })
    }
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Self::wrap(upcall_core::Network::load(&path).map_err(py_err)?)
    }
    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.inner.save(&path).map_err(py_err)
    }
    #[getter]
    fn features(&self) -> String {
        self.cfg.features.to_string()
    }
    #[getter]
    fn layer_sizes(&self) -> Vec<usize> {
        self.inner.layer_sizes()
    }
    #[getter]
    fn threshold(&self) -> f64 {
        pipeline::operating_threshold(&self.inner)
    }
    /// Score of a raw feature vector.
    fn forward(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.forward(&x).map_err(py_err)
    }
    /// Score of a 2 s clip, run through the stored pipeline.
    fn score(&self, samples: Vec<f64>) -> PyResult<f64> {
        let f = pipeline::clip_features(&clip(&samples)?, &self.cfg, self.cfg.features).map_err(py_err)?;
        self.inner.forward(&f.values).map_err(py_err)
    }
    /// Pipeline configuration as `key=value` text.
    fn config(&self) -> String {
        self.cfg.to_text()
    }
    fn __repr__(&self) -> String {
        format!("Network({}, layers={:?})", self.cfg.features, self.inner.layer_sizes())
    }
}

/// Spectrogram of one 2 s clip.
#[pyfunction]
#[pyo3(signature = (samples, config=None))]
fn stft(samples: Vec<f64>, config: Option<&str>) -> PyResult<PySpectrogram> {
    let cfg = self::config(config)?;
    let inner = sg::stft_spectrogram(&clip(&samples)?, &cfg.stft).map_err(py_err)?;
    Ok(PySpectrogram { inner })
}

/// Denoise, zero-mean and hard-limit a spectrogram.
#[pyfunction]
#[pyo3(signature = (spec, config=None))]
fn preprocess(spec: &PySpectrogram, config: Option<&str>) -> PyResult<PySpectrogram> {
    let cfg = self::config(config)?;
    let inner = pre::preprocess(&spec.inner, &cfg.preprocess).map_err(py_err)?;
    Ok(PySpectrogram { inner })
}

/// Every traced region of a clip, kept or not.
#[pyfunction]
#[pyo3(signature = (samples, config=None))]
fn detect(samples: Vec<f64>, config: Option<&str>) -> PyResult<Vec<PyRegion>> {
    let a = pipeline::analyze(&clip(&samples)?, &self::config(config)?).map_err(py_err)?;
    Ok(regions_of(&a))
}

/// Feature vector of a clip; `mode` is diagonal5, mask15 or combined20.
#[pyfunction]
#[pyo3(signature = (samples, mode="combined20", config=None))]
fn features(samples: Vec<f64>, mode: &str, config: Option<&str>) -> PyResult<Vec<f64>> {
    let f = pipeline::clip_features(&clip(&samples)?, &self::config(config)?, self::mode(mode)?).map_err(py_err)?;
    Ok(f.values)
}

#[pyfunction]
fn feature_names(mode: &str) -> PyResult<Vec<String>> {
    Ok(self::mode(mode)?.feature_names())
}

fn scored(scores: &[f64], labels: &[bool]) -> PyResult<Vec<(f64, bool)>> {
    if scores.len() != labels.len() {
        return Err(PyValueError::new_err(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    Ok(scores.iter().copied().zip(labels.iter().copied()).collect())
}

/// ROC points `(threshold, tpr, fpr)` and the area under the curve.
#[pyfunction]
fn roc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<(Vec<(f64, f64, f64)>, f64)> {
    let c = ev::roc(&scored(&scores, &labels)?).map_err(py_err)?;
    Ok((c.points.iter().map(|p| (p.threshold, p.tpr, p.fpr)).collect(), c.auc))
}

#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<f64> {
    Ok(ev::roc(&scored(&scores, &labels)?).map_err(py_err)?.auc)
}

/// `(fpr, tpr, threshold)` at the lowest false-positive rate reaching `tpr`.
#[pyfunction]
#[pyo3(signature = (scores, labels, tpr=0.9))]
fn fpr_at_tpr(scores: Vec<f64>, labels: Vec<bool>, tpr: f64) -> PyResult<(f64, f64, f64)> {
    let c = ev::roc(&scored(&scores, &labels)?).map_err(py_err)?;
    let op = ev::fpr_at_tpr(&c, tpr).map_err(py_err)?;
    Ok((op.fpr, op.tpr, op.threshold))
}

/// Labeled synthetic clips as `(samples, is_upcall)` pairs.
#[pyfunction]
#[pyo3(signature = (spec=None, seed=None))]
fn synthesize(spec: Option<&str>, seed: Option<u64>) -> PyResult<Vec<(Vec<f64>, bool)>> {
    let mut s = match spec {
        Some(t) => SynthSpec::from_text(t).map_err(py_err)?,
        None => SynthSpec::default(),
    };
    if let Some(seed) = seed {
        s.seed = seed;
    }
    let clips = synth::generate(&s).map_err(py_err)?;
    Ok(clips.iter().map(|c| (c.samples(), c.label.is_positive())).collect())
}

/// Every 2 s clip of a WAV file.
#[pyfunction]
fn read_audio(path: PathBuf) -> PyResult<Vec<Vec<f64>>> {
    let clips = audio::read_audio(&path).map_err(py_err)?;
    Ok(clips.into_iter().map(|c| c.samples).collect())
}

/// Trains a network on labeled clips.
#[pyfunction]
#[pyo3(signature = (clips, labels, config=None))]
fn train(clips: Vec<Vec<f64>>, labels: Vec<bool>, config: Option<&str>) -> PyResult<PyNetwork> {
    if clips.len() != labels.len() {
        return Err(PyValueError::new_err(format!("{} clips but {} labels", clips.len(), labels.len())));
    }
    let cfg = self::config(config)?;
    let data = clips
        .iter()
        .zip(&labels)
        .enumerate()
        .map(|(i, (s, &pos))| {
            let clip = AudioClip::new(s, format!("python{i}"), 0.0).map_err(py_err)?;
            let label = if pos { Label::Upcall } else { Label::Noise };
            Ok(LabeledClip { clip, label })
        })
        .collect::<PyResult<Vec<_>>>()?;
    let out = pipeline::train_model(&data, &cfg).map_err(py_err)?;
    PyNetwork::wrap(out.network)
}

#[pymodule]
fn upcall(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpectrogram>()?;
    m.add_class::<PyRegion>()?;
    m.add_class::<PyNetwork>()?;
    m.add_function(wrap_pyfunction!(stft, m)?)?;
    m.add_function(wrap_pyfunction!(preprocess, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(features, m)?)?;
    m.add_function(wrap_pyfunction!(feature_names, m)?)?;
    m.add_function(wrap_pyfunction!(roc, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(fpr_at_tpr, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(read_audio, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    m.add("SAMPLE_RATE_HZ", audio::SAMPLE_RATE_HZ)?;
    m.add("CLIP_SAMPLES", audio::CLIP_SAMPLES)?;
    Ok(())
}
