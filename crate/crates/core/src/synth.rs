//! Deterministic synthetic up-call benchmark.
//!
//! Positives are linear up-sweeps with a Hann amplitude envelope buried in
//! white Gaussian noise at a drawn in-band SNR. Negatives are noise alone.
//! Either class may additionally carry one distractor: a steady tonal, a
//! short broadband burst, or a short down-sweep in the call band.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::audio::{write_wav, AudioClip, Label, LabeledClip, Manifest, ManifestEntry, CLIP_SAMPLES, SAMPLE_RATE_HZ};
use crate::error::{Error, Result};

/// Half-width added on each side of a sweep's frequency span when measuring
/// in-band noise (two bins of the default spectrogram).
pub const BAND_MARGIN_HZ: f64 = 15.625;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub n_clips: usize,
    pub positive_fraction: f64,
    pub snr_db: (f64, f64),
    pub f_start_hz: (f64, f64),
    pub f_end_hz: (f64, f64),
    pub duration_s: (f64, f64),
    pub p_tonal: f64,
    pub p_burst: f64,
    pub p_downsweep: f64,
    /// Standard deviation of the ambient noise, full scale = 1.
    pub noise_rms: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_clips: 2000,
            positive_fraction: 4473.0 / 20000.0,
            snr_db: (0.0, 15.0),
            f_start_hz: (50.0, 150.0),
            f_end_hz: (150.0, 250.0),
            duration_s: (0.5, 1.5),
            p_tonal: 0.2,
            p_burst: 0.15,
            p_downsweep: 0.1,
            noise_rms: 0.02,
            seed: 20130601,
        }
    }
}

/// Size of the held-out set paired with a training spec.
pub const HELD_OUT_CLIPS: usize = 1000;

fn range_ok(r: (f64, f64)) -> bool {
    r.0.is_finite() && r.1.is_finite() && r.0 <= r.1
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synth spec: {m}")));
        if self.n_clips == 0 {
            return bad("n_clips must be ≥ 1");
        }
        if !(0.0..=1.0).contains(&self.positive_fraction) {
            return bad("positive_fraction must be in [0, 1]");
        }
        for (name, r) in [
            ("snr_db", self.snr_db),
            ("f_start_hz", self.f_start_hz),
            ("f_end_hz", self.f_end_hz),
            ("duration_s", self.duration_s),
        ] {
            if !range_ok(r) {
                return bad(&format!("{name} range is not ordered"));
            }
        }
        if self.f_start_hz.1 > self.f_end_hz.0 {
            return bad("start frequencies must lie below end frequencies");
        }
        if self.f_start_hz.0 <= 0.0 || self.f_end_hz.1 >= SAMPLE_RATE_HZ as f64 / 2.0 {
            return bad("sweep frequencies must lie inside (0, Nyquist)");
        }
        if self.duration_s.0 <= 0.0 || self.duration_s.1 > CLIP_SAMPLES as f64 / SAMPLE_RATE_HZ as f64 {
            return bad("call duration must fit in the clip");
        }
        let probs = [self.p_tonal, self.p_burst, self.p_downsweep];
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) || probs.iter().sum::<f64>() > 1.0 + 1e-12 {
            return bad("distractor probabilities must be in [0, 1] and sum to ≤ 1");
        }
        if !(self.noise_rms > 0.0 && self.noise_rms.is_finite()) {
            return bad("noise_rms must be positive");
        }
        Ok(())
    }

    /// Companion test spec: same distribution, next seed, [`HELD_OUT_CLIPS`] clips.
    pub fn held_out(&self) -> SynthSpec {
        SynthSpec {
            n_clips: HELD_OUT_CLIPS,
            seed: self.seed.wrapping_add(1),
            ..self.clone()
        }
    }

    pub fn n_positives(&self) -> usize {
        (self.n_clips as f64 * self.positive_fraction).round() as usize
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = || {
            value
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{key}: expected a number, got `{value}`")))
        };
        let int = || {
            value
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::Config(format!("{key}: expected an integer, got `{value}`")))
        };
        match key {
            "n_clips" => self.n_clips = int()? as usize,
            "positive_fraction" => self.positive_fraction = num()?,
            "snr_db_low" => self.snr_db.0 = num()?,
            "snr_db_high" => self.snr_db.1 = num()?,
            "f_start_low_hz" => self.f_start_hz.0 = num()?,
            "f_start_high_hz" => self.f_start_hz.1 = num()?,
            "f_end_low_hz" => self.f_end_hz.0 = num()?,
            "f_end_high_hz" => self.f_end_hz.1 = num()?,
            "duration_low_s" => self.duration_s.0 = num()?,
            "duration_high_s" => self.duration_s.1 = num()?,
            "p_tonal" => self.p_tonal = num()?,
            "p_burst" => self.p_burst = num()?,
            "p_downsweep" => self.p_downsweep = num()?,
            "noise_rms" => self.noise_rms = num()?,
            "seed" => self.seed = int()?,
            other => return Err(Error::Config(format!("unknown synth key `{other}`"))),
        }
        Ok(())
    }

    /// `key=value` lines accepted by [`SynthSpec::from_text`].
    pub fn to_text(&self) -> String {
        let pairs: [(&str, String); 15] = [
            ("n_clips", self.n_clips.to_string()),
            ("positive_fraction", self.positive_fraction.to_string()),
            ("snr_db_low", self.snr_db.0.to_string()),
            ("snr_db_high", self.snr_db.1.to_string()),
            ("f_start_low_hz", self.f_start_hz.0.to_string()),
            ("f_start_high_hz", self.f_start_hz.1.to_string()),
            ("f_end_low_hz", self.f_end_hz.0.to_string()),
            ("f_end_high_hz", self.f_end_hz.1.to_string()),
            ("duration_low_s", self.duration_s.0.to_string()),
            ("duration_high_s", self.duration_s.1.to_string()),
            ("p_tonal", self.p_tonal.to_string()),
            ("p_burst", self.p_burst.to_string()),
            ("p_downsweep", self.p_downsweep.to_string()),
            ("noise_rms", self.noise_rms.to_string()),
            ("seed", self.seed.to_string()),
        ];
        pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Parses `key = value` lines over the defaults.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut spec = SynthSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", i + 1)))?;
            spec.set(k.trim(), v)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub f_start_hz: f64,
    pub f_end_hz: f64,
    pub onset_s: f64,
    pub duration_s: f64,
    pub snr_db: f64,
}

impl Sweep {
    /// Frequency span widened by [`BAND_MARGIN_HZ`] on both sides.
    pub fn band_hz(&self) -> (f64, f64) {
        let lo = self.f_start_hz.min(self.f_end_hz) - BAND_MARGIN_HZ;
        let hi = self.f_start_hz.max(self.f_end_hz) + BAND_MARGIN_HZ;
        (lo.max(0.0), hi)
    }

    /// Sample range the sweep occupies.
    pub fn span(&self) -> std::ops::Range<usize> {
        let rate = SAMPLE_RATE_HZ as f64;
        let start = (self.onset_s * rate).round() as usize;
        let len = (self.duration_s * rate).round() as usize;
        start..(start + len).min(CLIP_SAMPLES)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distractor {
    Tonal { freq_hz: f64 },
    Burst { onset_s: f64, duration_s: f64 },
    DownSweep(Sweep),
}

/// One generated clip with its components kept apart.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthClip {
    pub index: usize,
    pub label: Label,
    pub call: Option<Sweep>,
    pub distractor: Option<Distractor>,
    pub signal: Vec<f64>,
    pub noise: Vec<f64>,
    pub clutter: Vec<f64>,
}

impl SynthClip {
    pub fn samples(&self) -> Vec<f64> {
        self.signal
            .iter()
            .zip(&self.noise)
            .zip(&self.clutter)
            .map(|((s, n), c)| s + n + c)
            .collect()
    }

    pub fn file_name(&self) -> String {
        format!("clip_{:05}.wav", self.index)
    }

    pub fn to_labeled(&self) -> LabeledClip {
        LabeledClip {
            clip: AudioClip::new(&self.samples(), self.file_name(), 0.0).expect("fixed-length finite clip"),
            label: self.label,
        }
    }
}

/// Mean power of the part of `x` with frequency in `[lo_hz, hi_hz]`.
pub fn band_power(x: &[f64], lo_hz: f64, hi_hz: f64) -> f64 {
    let n = x.len();
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let df = SAMPLE_RATE_HZ as f64 / n as f64;
    let mut total = 0.0;
    for (k, c) in buf.iter().enumerate().take(n / 2 + 1) {
        let f = k as f64 * df;
        if f < lo_hz || f > hi_hz {
            continue;
        }
        // one-sided: count the mirrored bin too, except DC and Nyquist
        let weight = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
        total += weight * c.norm_sqr();
    }
    total / (n as f64 * n as f64)
}

/// Mean power over a sample range.
pub fn span_power(x: &[f64], span: std::ops::Range<usize>) -> f64 {
    let len = span.len().max(1) as f64;
    x[span].iter().map(|v| v * v).sum::<f64>() / len
}

/// Unit-amplitude Hann-enveloped linear sweep, added into `out`.
fn render_sweep(out: &mut [f64], sweep: &Sweep, amplitude: f64, phase: f64) {
    let rate = SAMPLE_RATE_HZ as f64;
    let span = sweep.span();
    let len = span.len() as f64;
    let slope = (sweep.f_end_hz - sweep.f_start_hz) / sweep.duration_s;
    for (j, i) in span.enumerate() {
        let tau = j as f64 / rate;
        let env = (PI * j as f64 / len).sin().powi(2);
        let arg = 2.0 * PI * (sweep.f_start_hz * tau + 0.5 * slope * tau * tau) + phase;
        out[i] += amplitude * env * arg.sin();
    }
}

/// Renders a sweep scaled so its power over its own span is `snr` times the
/// in-band power of `noise`.
fn calibrated_sweep(noise: &[f64], sweep: &Sweep, phase: f64) -> Vec<f64> {
    let mut unit = vec![0.0; CLIP_SAMPLES];
    render_sweep(&mut unit, sweep, 1.0, phase);
    let (lo, hi) = sweep.band_hz();
    let noise_power = band_power(noise, lo, hi);
    let unit_power = span_power(&unit, sweep.span());
    let target = noise_power * 10f64.powf(sweep.snr_db / 10.0);
    let amp = (target / unit_power).sqrt();
    unit.iter_mut().for_each(|v| *v *= amp);
    unit
}

fn draw(rng: &mut ChaCha8Rng, r: (f64, f64)) -> f64 {
    if r.0 == r.1 {
        r.0
    } else {
        rng.random_range(r.0..r.1)
    }
}

/// Generates the benchmark. The same spec always yields the same clips.
pub fn generate(spec: &SynthSpec) -> Result<Vec<SynthClip>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut order: Vec<usize> = (0..spec.n_clips).collect();
    order.shuffle(&mut rng);
    let mut positive = vec![false; spec.n_clips];
    for &i in &order[..spec.n_positives()] {
        positive[i] = true;
    }

    let noise_dist = Normal::new(0.0, spec.noise_rms).expect("positive noise rms");
    let clip_s = CLIP_SAMPLES as f64 / SAMPLE_RATE_HZ as f64;
    let mut clips = Vec::with_capacity(spec.n_clips);
    for (index, &is_pos) in positive.iter().enumerate() {
        let noise: Vec<f64> = (0..CLIP_SAMPLES).map(|_| noise_dist.sample(&mut rng)).collect();

        let (call, signal) = if is_pos {
            let duration_s = draw(&mut rng, spec.duration_s);
            let sweep = Sweep {
                f_start_hz: draw(&mut rng, spec.f_start_hz),
                f_end_hz: draw(&mut rng, spec.f_end_hz),
                onset_s: rng.random_range(0.0..=clip_s - duration_s),
                duration_s,
                snr_db: draw(&mut rng, spec.snr_db),
            };
            let phase = rng.random_range(0.0..2.0 * PI);
            (Some(sweep), calibrated_sweep(&noise, &sweep, phase))
        } else {
            (None, vec![0.0; CLIP_SAMPLES])
        };

        let mut clutter = vec![0.0; CLIP_SAMPLES];
        let u: f64 = rng.random();
        let distractor = if u < spec.p_tonal {
            let freq_hz = rng.random_range(40.0..450.0);
            let amp = spec.noise_rms * rng.random_range(1.0..4.0);
            let phase = rng.random_range(0.0..2.0 * PI);
            for (i, c) in clutter.iter_mut().enumerate() {
                *c = amp * (2.0 * PI * freq_hz * i as f64 / SAMPLE_RATE_HZ as f64 + phase).sin();
            }
            Some(Distractor::Tonal { freq_hz })
        } else if u < spec.p_tonal + spec.p_burst {
            let duration_s = rng.random_range(0.03..0.1);
            let onset_s = rng.random_range(0.0..clip_s - duration_s);
            let std = spec.noise_rms * rng.random_range(2.0..5.0);
            let burst = Normal::new(0.0, std).expect("positive burst std");
            let start = (onset_s * SAMPLE_RATE_HZ as f64) as usize;
            let len = (duration_s * SAMPLE_RATE_HZ as f64) as usize;
            for j in 0..len {
                let env = (PI * j as f64 / len as f64).sin().powi(2);
                clutter[start + j] = env * burst.sample(&mut rng);
            }
            Some(Distractor::Burst { onset_s, duration_s })
        } else if u < spec.p_tonal + spec.p_burst + spec.p_downsweep {
            let duration_s = rng.random_range(0.3..0.8);
            let sweep = Sweep {
                f_start_hz: draw(&mut rng, spec.f_end_hz),
                f_end_hz: draw(&mut rng, spec.f_start_hz),
                onset_s: rng.random_range(0.0..=clip_s - duration_s),
                duration_s,
                snr_db: draw(&mut rng, spec.snr_db),
            };
            let phase = rng.random_range(0.0..2.0 * PI);
            clutter = calibrated_sweep(&noise, &sweep, phase);
            Some(Distractor::DownSweep(sweep))
        } else {
            None
        };

        clips.push(SynthClip {
            index,
            label: if is_pos { Label::Upcall } else { Label::Noise },
            call,
            distractor,
            signal,
            noise,
            clutter,
        });
    }
    Ok(clips)
}

pub const MANIFEST_NAME: &str = "manifest.csv";

/// Writes one 16-bit WAV per clip plus `manifest.csv` into `dir`; returns the
/// manifest path.
pub fn write_dataset(dir: &Path, clips: &[SynthClip]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = Manifest::default();
    for c in clips {
        write_wav(&dir.join(c.file_name()), &c.samples(), SAMPLE_RATE_HZ)?;
        manifest.entries.push(ManifestEntry {
            path: c.file_name().into(),
            label: c.label,
            offset_s: None,
        });
    }
    let path = dir.join(MANIFEST_NAME);
    fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
