//! Hann-windowed short-time Fourier magnitude spectrograms.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::AudioClip;
use crate::error::{Error, Result};

/// Time-frequency matrix with axis calibration.
///
/// `values` is indexed `[bin, frame]`: row 0 is the lowest frequency and
/// column 0 the earliest frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Array2<f64>,
    pub bin_hz: f64,
    pub frame_s: f64,
    pub f0_hz: f64,
}

impl Spectrogram {
    pub fn n_bins(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_frames(&self) -> usize {
        self.values.ncols()
    }

    /// Same axes, new values.
    pub fn with_values(&self, values: Array2<f64>) -> Spectrogram {
        debug_assert_eq!(values.dim(), self.values.dim());
        Spectrogram {
            values,
            bin_hz: self.bin_hz,
            frame_s: self.frame_s,
            f0_hz: self.f0_hz,
        }
    }

    pub fn bin_freq_hz(&self, bin: usize) -> f64 {
        self.f0_hz + bin as f64 * self.bin_hz
    }

    /// Portable graymap (binary P5), min-max scaled to 0..=255, time left to
    /// right and low frequencies on the bottom row.
    pub fn to_pgm(&self) -> Vec<u8> {
        let (rows, cols) = self.values.dim();
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
        for r in (0..rows).rev() {
            for c in 0..cols {
                let v = self.values[[r, c]];
                let g = if span > 0.0 {
                    ((v - lo) / span * 255.0).round()
                } else {
                    0.0
                };
                out.push(g as u8);
            }
        }
        out
    }
}

/// How each STFT coefficient is turned into a spectrogram value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SpectrumScale {
    #[default]
    Magnitude,
    Power,
    /// `ln(1 + |X|)`; stays nonnegative.
    Log,
}

impl fmt::Display for SpectrumScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpectrumScale::Magnitude => "magnitude",
            SpectrumScale::Power => "power",
            SpectrumScale::Log => "log",
        })
    }
}

impl FromStr for SpectrumScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnitude" => Ok(SpectrumScale::Magnitude),
            "power" => Ok(SpectrumScale::Power),
            "log" => Ok(SpectrumScale::Log),
            other => Err(Error::Config(format!(
                "unknown spectrum scale `{other}` (expected magnitude, power or log)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub scale: SpectrumScale,
}

impl Default for StftConfig {
    fn default() -> Self {
        StftConfig {
            window_len: 256,
            hop: 128,
            scale: SpectrumScale::Magnitude,
        }
    }
}

impl StftConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_len < 2 || self.window_len % 2 != 0 {
            return Err(Error::Config(format!(
                "window length must be even and ≥ 2, got {}",
                self.window_len
            )));
        }
        if self.hop == 0 {
            return Err(Error::Config("hop must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Symmetric Hann window, `0.5 (1 - cos(2πn / (L - 1)))`.
pub fn hann_window(len: usize) -> Vec<f64> {
    if len == 1 {
        return vec![1.0];
    }
    let denom = (len - 1) as f64;
    (0..len)
        .map(|n| 0.5 * (1.0 - (2.0 * PI * n as f64 / denom).cos()))
        .collect()
}

/// Computes the spectrogram of one clip. Frames tile from sample 0 with no
/// padding, so there are `floor((N - window) / hop) + 1` of them.
pub fn stft_spectrogram(clip: &AudioClip, cfg: &StftConfig) -> Result<Spectrogram> {
    stft_samples(&clip.samples, clip.sample_rate_hz, cfg)
}

pub fn stft_samples(samples: &[f64], sample_rate_hz: u32, cfg: &StftConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let n = samples.len();
    let win_len = cfg.window_len;
    if n < win_len {
        return Err(Error::ClipTooShort {
            len: n,
            window: win_len,
        });
    }
    let n_frames = (n - win_len) / cfg.hop + 1;
    let n_bins = win_len / 2 + 1;
    let window = hann_window(win_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(win_len);

    let mut values = Array2::<f64>::zeros((n_bins, n_frames));
    let mut buf = vec![Complex::new(0.0, 0.0); win_len];
    for frame in 0..n_frames {
        let start = frame * cfg.hop;
        for (slot, (&x, &w)) in buf
            .iter_mut()
            .zip(samples[start..start + win_len].iter().zip(&window))
        {
            *slot = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        for (bin, c) in buf[..n_bins].iter().enumerate() {
            let mag = c.norm();
            values[[bin, frame]] = match cfg.scale {
                SpectrumScale::Magnitude => mag,
                SpectrumScale::Power => mag * mag,
                SpectrumScale::Log => mag.ln_1p(),
            };
        }
    }

    let rate = sample_rate_hz as f64;
    Ok(Spectrogram {
        values,
        bin_hz: rate / win_len as f64,
        frame_s: cfg.hop as f64 / rate,
        f0_hz: 0.0,
    })
}
