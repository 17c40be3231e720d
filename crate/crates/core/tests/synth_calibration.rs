use std::f64::consts::PI;

use sha2::{Digest, Sha256};

use upcall_core::audio::SAMPLE_RATE_HZ;
use upcall_core::synth::{generate, SynthSpec, BAND_MARGIN_HZ};

/// One-sided energy of `x` between `lo` and `hi` Hz by a direct O(N²) DFT.
fn dft_band_energy(x: &[f64], lo: f64, hi: f64) -> f64 {
    let n = x.len();
    let df = SAMPLE_RATE_HZ as f64 / n as f64;
    let mut energy = 0.0;
    for k in 0..=n / 2 {
        let f = k as f64 * df;
        if f < lo || f > hi {
            continue;
        }
        let (mut re, mut im) = (0.0, 0.0);
        for (t, &v) in x.iter().enumerate() {
            let a = -2.0 * PI * (k * t % n) as f64 / n as f64;
            re += v * a.cos();
            im += v * a.sin();
        }
        let w = if k == 0 || 2 * k == n { 1.0 } else { 2.0 };
        energy += w * (re * re + im * im) / n as f64;
    }
    energy
}

#[test]
fn in_band_snr_matches_the_draw() {
    let spec = SynthSpec {
        n_clips: 40,
        positive_fraction: 0.5,
        seed: 77,
        ..SynthSpec::default()
    };
    let mut checked = 0;
    for c in generate(&spec).unwrap().iter().filter(|c| c.label.is_positive()) {
        let sweep = c.call.unwrap();
        let lo = sweep.f_start_hz - BAND_MARGIN_HZ;
        let hi = sweep.f_end_hz + BAND_MARGIN_HZ;
        // signal power averaged over the call's own duration, noise over the clip
        let signal = dft_band_energy(&c.signal, lo, hi) / sweep.span().len() as f64;
        let noise = dft_band_energy(&c.noise, lo, hi) / c.noise.len() as f64;
        let measured = 10.0 * (signal / noise).log10();
        assert!(
            (measured - sweep.snr_db).abs() <= 0.5,
            "clip {}: drew {:.2} dB, measured {:.2} dB",
            c.index,
            sweep.snr_db,
            measured
        );
        checked += 1;
    }
    assert!(checked >= 15);
}

#[test]
fn default_benchmark_is_byte_stable() {
    let clips = generate(&SynthSpec::default()).unwrap();
    let mut h = Sha256::new();
    for c in &clips {
        h.update([c.label.is_positive() as u8]);
        for s in c.samples() {
            h.update(s.to_le_bytes());
        }
    }
    let digest: String = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    assert_eq!(digest, "3d8cd9c7d2abab1baac0cd9b5175e6bc14bf780ec65a017e33e0ab77881e9e11");
}

// Calls under about 0.7 s span ten frames or fewer; their ridges can stay below
// the 15-pixel perimeter minimum however loud they are, so they are counted
// separately.
#[test]
fn loud_calls_leave_a_kept_region() {
    let spec = SynthSpec {
        n_clips: 200,
        positive_fraction: 1.0,
        snr_db: (10.0, 15.0),
        seed: 4,
        ..SynthSpec::default()
    };
    let cfg = upcall_core::PipelineConfig::default();
    let clips = generate(&spec).unwrap();
    let missed: Vec<(usize, f64)> = clips
        .iter()
        .filter(|c| upcall_core::pipeline::analyze(&c.to_labeled().clip, &cfg).unwrap().kept_count() == 0)
        .map(|c| (c.index, c.call.unwrap().duration_s))
        .collect();
    assert!(missed.iter().all(|m| m.1 < 0.75), "missed long calls: {missed:?}");
    assert!(missed.len() * 20 <= clips.len(), "missed {missed:?}");
}
