//! PCM audio ingest, fixed 2-second slicing and labeled manifests.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};

/// Sample rate the whole pipeline is calibrated for.
pub const SAMPLE_RATE_HZ: u32 = 2000;
/// Samples per clip (2 s at 2 kHz).
pub const CLIP_SAMPLES: usize = 4000;

/// One fixed-length mono slice of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate_hz: u32,
    pub source_id: String,
    pub offset_s: f64,
    /// Number of trailing zeros appended to fill the clip.
    pub padding: usize,
}

impl AudioClip {
    /// Builds a clip from at most [`CLIP_SAMPLES`] samples, zero-padding the tail.
    pub fn new(samples: &[f64], source_id: impl Into<String>, offset_s: f64) -> Result<Self> {
        if samples.len() > CLIP_SAMPLES {
            return Err(Error::Config(format!(
                "clip holds at most {CLIP_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("audio samples"));
        }
        let padding = CLIP_SAMPLES - samples.len();
        let mut buf = Vec::with_capacity(CLIP_SAMPLES);
        buf.extend_from_slice(samples);
        buf.resize(CLIP_SAMPLES, 0.0);
        Ok(AudioClip {
            samples: buf,
            sample_rate_hz: SAMPLE_RATE_HZ,
            source_id: source_id.into(),
            offset_s,
            padding,
        })
    }

    pub fn is_padded(&self) -> bool {
        self.padding > 0
    }

    /// Stable identifier of the form `source@offset`.
    pub fn id(&self) -> String {
        format!("{}@{:.3}", self.source_id, self.offset_s)
    }

    /// Samples that came from the source, without the padding tail.
    pub fn source_samples(&self) -> &[f64] {
        &self.samples[..CLIP_SAMPLES - self.padding]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Upcall,
    Noise,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Upcall
    }

    pub fn target(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            0.0
        }
    }

    pub fn parse(token: &str) -> Option<Self> {
        match token {
            "upcall" => Some(Label::Upcall),
            "noise" => Some(Label::Noise),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Upcall => "upcall",
            Label::Noise => "noise",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledClip {
    pub clip: AudioClip,
    pub label: Label,
}

/// Reads a WAV file as normalized mono samples (channel 0) plus its sample rate.
pub fn read_samples(path: &Path) -> Result<(Vec<f64>, u32)> {
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let reader = WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;

    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, bits @ (8 | 16 | 24)) => {
            let full_scale = (1u32 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| v as f64 / full_scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?
        }
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (format, bits) => {
            return Err(Error::UnsupportedEncoding(format!(
                "{bits}-bit {format:?} samples"
            )))
        }
    };

    let mono = interleaved.into_iter().step_by(channels).collect::<Vec<_>>();
    if mono.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("audio samples"));
    }
    Ok((mono, spec.sample_rate))
}

/// Partitions a sample sequence into consecutive clips; the last one is zero-padded.
pub fn slice_clips(samples: &[f64], source_id: &str) -> Result<Vec<AudioClip>> {
    samples
        .chunks(CLIP_SAMPLES)
        .enumerate()
        .map(|(i, chunk)| {
            let offset_s = (i * CLIP_SAMPLES) as f64 / SAMPLE_RATE_HZ as f64;
            AudioClip::new(chunk, source_id, offset_s)
        })
        .collect()
}

fn check_rate(rate: u32) -> Result<()> {
    if rate != SAMPLE_RATE_HZ {
        return Err(Error::SampleRate { found: rate });
    }
    Ok(())
}

/// Reads a PCM file and slices it into 2-second clips in source order.
pub fn read_audio(path: &Path) -> Result<Vec<AudioClip>> {
    let (samples, rate) = read_samples(path)?;
    check_rate(rate)?;
    slice_clips(&samples, &path.display().to_string())
}

/// Reads the single clip starting at `offset_s` seconds into a file.
pub fn read_clip_at(path: &Path, offset_s: f64) -> Result<AudioClip> {
    let (samples, rate) = read_samples(path)?;
    check_rate(rate)?;
    if !(offset_s >= 0.0) {
        return Err(Error::Config(format!("negative clip offset {offset_s}")));
    }
    let start = (offset_s * SAMPLE_RATE_HZ as f64).round() as usize;
    if start >= samples.len() {
        return Err(Error::Config(format!(
            "offset {offset_s} s is past the end of {}",
            path.display()
        )));
    }
    let end = (start + CLIP_SAMPLES).min(samples.len());
    AudioClip::new(&samples[start..end], path.display().to_string(), offset_s)
}

/// Writes mono samples as 16-bit PCM, clamping to [-1, 1].
pub fn write_wav(path: &Path, samples: &[f64], sample_rate_hz: u32) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: sample_rate_hz,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let wav_err = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut writer = WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in samples {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Label,
    pub offset_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |message: String| Error::Manifest {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(bad(format!(
                    "expected `path,label[,offset_s]`, got {} fields",
                    fields.len()
                )));
            }
            if fields[0].is_empty() {
                return Err(bad("empty path".into()));
            }
            let label = Label::parse(fields[1])
                .ok_or_else(|| bad(format!("unknown label `{}`", fields[1])))?;
            let offset_s = match fields.get(2) {
                None => None,
                Some(tok) => {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| bad(format!("bad offset `{tok}`")))?;
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(bad(format!("bad offset `{tok}`")));
                    }
                    Some(v)
                }
            };
            entries.push(ManifestEntry {
                path: PathBuf::from(fields[0]),
                label,
                offset_s,
            });
        }
        Ok(Manifest { entries })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&e.path.display().to_string());
            out.push(',');
            out.push_str(&e.label.to_string());
            if let Some(off) = e.offset_s {
                out.push_str(&format!(",{off}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Manifest::parse(&text)
}

/// Loads every clip a manifest refers to. Relative paths resolve against `base_dir`.
///
/// An entry with an offset yields the one clip starting there; an entry without
/// an offset yields every 2-second slice of the file, all carrying its label.
pub fn load_labeled_clips(manifest: &Manifest, base_dir: &Path) -> Result<Vec<LabeledClip>> {
    let mut out = Vec::new();
    for entry in &manifest.entries {
        let path = base_dir.join(&entry.path);
        let mut clips = match entry.offset_s {
            Some(off) => vec![read_clip_at(&path, off)?],
            None => read_audio(&path)?,
        };
        let source = entry.path.display().to_string();
        for clip in &mut clips {
            clip.source_id.clone_from(&source);
        }
        out.extend(clips.into_iter().map(|clip| LabeledClip {
            clip,
            label: entry.label,
        }));
    }
    Ok(out)
}
