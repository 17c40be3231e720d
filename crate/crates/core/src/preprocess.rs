//! Spectrogram conditioning: adaptive Wiener denoising, per-band zero-meaning
//! and hard-limit equalization.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spectrogram::Spectrogram;

/// Units in which the hard-limit floor and ceiling are given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundUnits {
    /// Multiples of the standard deviation of the zero-meaned matrix, per clip.
    #[default]
    StdDev,
    /// Raw spectrogram units.
    Absolute,
}

impl fmt::Display for BoundUnits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundUnits::StdDev => "std",
            BoundUnits::Absolute => "absolute",
        })
    }
}

impl FromStr for BoundUnits {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "std" => Ok(BoundUnits::StdDev),
            "absolute" => Ok(BoundUnits::Absolute),
            other => Err(Error::Config(format!(
                "unknown bound units `{other}` (expected std or absolute)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreprocessConfig {
    pub wiener_window: usize,
    pub s_floor: f64,
    pub s_ceiling: f64,
    pub units: BoundUnits,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            wiener_window: 5,
            s_floor: DEFAULT_FLOOR_STD,
            s_ceiling: 3.0,
            units: BoundUnits::StdDev,
        }
    }
}

/// Default floor, in standard deviations of the zero-meaned spectrogram.
/// Speckle from smoothed noise rarely clears 2.5 sigma, so at this level the
/// binary image holds call ridges and little else.
pub const DEFAULT_FLOOR_STD: f64 = 2.5;

impl PreprocessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.wiener_window < 3 || self.wiener_window % 2 == 0 {
            return Err(Error::Config(format!(
                "wiener window must be odd and ≥ 3, got {}",
                self.wiener_window
            )));
        }
        if !(self.s_floor.is_finite() && self.s_ceiling.is_finite()) {
            return Err(Error::Config("hard-limit bounds must be finite".into()));
        }
        if self.s_ceiling <= self.s_floor {
            return Err(Error::Config(format!(
                "s_ceiling ({}) must exceed s_floor ({})",
                self.s_ceiling, self.s_floor
            )));
        }
        Ok(())
    }

    /// Resolves the bounds to absolute values against a zero-meaned matrix.
    pub fn resolve_bounds(&self, zero_meaned: &Array2<f64>) -> (f64, f64) {
        match self.units {
            BoundUnits::Absolute => (self.s_floor, self.s_ceiling),
            BoundUnits::StdDev => {
                let sd = std_dev(zero_meaned);
                (self.s_floor * sd, self.s_ceiling * sd)
            }
        }
    }
}

fn std_dev(values: &Array2<f64>) -> f64 {
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    let mean = values.sum() / n as f64;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    var.sqrt()
}

/// Adaptive 2-D Wiener filter over `window × window` neighborhoods.
///
/// Neighborhoods are truncated at the edges. The noise power is the mean of
/// all local variances; each pixel becomes
/// `μ + max(σ² - ν², 0) / max(σ², ν²) · (x - μ)`.
pub fn wiener_denoise(spec: &Spectrogram, window: usize) -> Result<Spectrogram> {
    if window < 3 || window % 2 == 0 {
        return Err(Error::Config(format!(
            "wiener window must be odd and ≥ 3, got {window}"
        )));
    }
    let x = &spec.values;
    let (rows, cols) = x.dim();
    let half = window / 2;
    let mut mean = Array2::<f64>::zeros((rows, cols));
    let mut var = Array2::<f64>::zeros((rows, cols));

    for r in 0..rows {
        let (r0, r1) = (r.saturating_sub(half), (r + half + 1).min(rows));
        for c in 0..cols {
            let (c0, c1) = (c.saturating_sub(half), (c + half + 1).min(cols));
            let patch = x.slice(ndarray::s![r0..r1, c0..c1]);
            // Row by row with shifted means: every row segment holds the same
            // number of pixels, so this equals the plain patch statistics,
            // and a row that is constant in time yields the same numbers at
            // every column, edges included.
            let n_rows = (r1 - r0) as f64;
            let mu = patch.rows().into_iter().map(shifted_mean).sum::<f64>() / n_rows;
            let v = patch
                .rows()
                .into_iter()
                .map(|row| shifted_mean(row.mapv(|p| (p - mu) * (p - mu)).view()))
                .sum::<f64>()
                / n_rows;
            mean[[r, c]] = mu;
            var[[r, c]] = v;
        }
    }

    let noise = if var.is_empty() {
        0.0
    } else {
        var.sum() / var.len() as f64
    };

    let mut out = Array2::<f64>::zeros((rows, cols));
    ndarray::Zip::from(&mut out)
        .and(x)
        .and(&mean)
        .and(&var)
        .for_each(|o, &xv, &mu, &v| {
            let denom = v.max(noise);
            let gain = if denom > 0.0 {
                (v - noise).max(0.0) / denom
            } else {
                0.0
            };
            *o = mu + gain * (xv - mu);
        });
    Ok(spec.with_values(out))
}

/// Mean taken relative to the first element, which makes it exact for a
/// constant sequence.
fn shifted_mean(row: ndarray::ArrayView1<f64>) -> f64 {
    let Some(&first) = row.first() else { return 0.0 };
    first + row.iter().map(|&v| v - first).sum::<f64>() / row.len() as f64
}

/// Subtracts each frequency row's temporal mean.
pub fn zero_mean_bands(spec: &Spectrogram) -> Spectrogram {
    let mut out = spec.values.clone();
    for mut row in out.rows_mut() {
        let mean = shifted_mean(row.view());
        row.mapv_inplace(|v| v - mean);
    }
    spec.with_values(out)
}

/// `max(floor, min(ceiling, x)) - floor` elementwise, bounds in absolute units.
pub fn hard_limit(spec: &Spectrogram, floor: f64, ceiling: f64) -> Spectrogram {
    spec.with_values(spec.values.mapv(|v| v.min(ceiling).max(floor) - floor))
}

/// Zero-meaning followed by hard-limiting with bounds resolved for this matrix.
pub fn normalize_and_limit(denoised: &Spectrogram, cfg: &PreprocessConfig) -> Spectrogram {
    let zm = zero_mean_bands(denoised);
    let (floor, ceiling) = cfg.resolve_bounds(&zm.values);
    hard_limit(&zm, floor, ceiling)
}

/// Full conditioning chain: Wiener denoise, zero-mean per band, hard-limit.
pub fn preprocess(spec: &Spectrogram, cfg: &PreprocessConfig) -> Result<Spectrogram> {
    cfg.validate()?;
    let denoised = wiener_denoise(spec, cfg.wiener_window)?;
    Ok(normalize_and_limit(&denoised, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(values: Array2<f64>) -> Spectrogram {
        Spectrogram {
            values,
            bin_hz: 7.8125,
            frame_s: 0.064,
            f0_hz: 0.0,
        }
    }

    #[test]
    fn wiener_constant_is_fixed_point() {
        let s = spec(Array2::from_elem((9, 7), 3.25));
        let out = wiener_denoise(&s, 5).unwrap();
        assert_eq!(out.values, s.values);
    }

    #[test]
    fn wiener_single_spike_hand_evaluated() {
        let mut v = Array2::<f64>::zeros((9, 9));
        v[[4, 4]] = 1.0;
        let out = wiener_denoise(&spec(v), 5).unwrap();

        // Every 5×5 neighborhood containing the spike: hand-count those pixels
        // and their window sizes to get ν².
        let mut noise = 0.0;
        for r in 0..9i32 {
            for c in 0..9i32 {
                let rows = (r + 2).min(8) - (r - 2).max(0) + 1;
                let cols = (c + 2).min(8) - (c - 2).max(0) + 1;
                let n = (rows * cols) as f64;
                if (r - 4).abs() <= 2 && (c - 4).abs() <= 2 {
                    let mu = 1.0 / n;
                    noise += mu - mu * mu;
                }
            }
        }
        noise /= 81.0;
        let (mu, var) = (1.0 / 25.0, 1.0 / 25.0 - 1.0 / 625.0);
        let expected = mu + (var - noise) / var * (1.0 - mu);
        let got = out.values[[4, 4]];
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
        assert!(got > 0.0 && got < 1.0);
    }

    #[test]
    fn wiener_reduces_noise_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let v = Array2::from_shape_fn((120, 100), |_| rng.random::<f64>());
        let out = wiener_denoise(&spec(v.clone()), 5).unwrap();
        assert!(out.values.len() >= 10_000);
        assert!(std_dev(&out.values) < std_dev(&v));
    }

    #[test]
    fn wiener_rejects_bad_window() {
        let s = spec(Array2::zeros((4, 4)));
        assert!(wiener_denoise(&s, 4).is_err());
        assert!(wiener_denoise(&s, 1).is_err());
    }

    #[test]
    fn zero_mean_rows() {
        let s = spec(array![[4.2, 4.2, 4.2], [1.0, 3.0, 2.0]]);
        let z = zero_mean_bands(&s);
        assert_eq!(z.values.row(0).to_vec(), vec![0.0; 3]);
        assert_eq!(z.values.row(1).to_vec(), vec![-1.0, 1.0, 0.0]);

        let z = zero_mean_bands(&spec(array![[1.0, 3.0]]));
        assert_eq!(z.values, array![[-1.0, 1.0]]);
    }

    #[test]
    fn zero_mean_keeps_transient_contrast() {
        let s = spec(array![[5.0, 5.0, 5.0, 5.0], [0.0, 0.0, 8.0, 0.0]]);
        let z = zero_mean_bands(&s);
        assert!(z.values.row(0).iter().all(|&v| v == 0.0));
        assert_eq!(z.values.row(1).to_vec(), vec![-2.0, -2.0, 6.0, -2.0]);
    }

    #[test]
    fn hard_limit_cases() {
        let s = spec(array![[1.3, 7.0, -5.0]]);
        let h = hard_limit(&s, 0.0, 2.0);
        assert_eq!(h.values, array![[1.3, 2.0, 0.0]]);
        let h = hard_limit(&s, 1.0, 2.0);
        assert!((h.values[[0, 0]] - 0.3).abs() < 1e-15);
        assert_eq!(h.values[[0, 1]], 1.0);
        assert_eq!(h.values[[0, 2]], 0.0);
    }

    #[test]
    fn preprocess_degenerate_inputs_are_zero() {
        let cfg = PreprocessConfig::default();
        let zeros = preprocess(&spec(Array2::zeros((20, 10))), &cfg).unwrap();
        assert!(zeros.values.iter().all(|&v| v == 0.0));
        let flat = preprocess(&spec(Array2::from_elem((20, 10), 2.5)), &cfg).unwrap();
        assert!(flat.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn config_validation() {
        let mut cfg = PreprocessConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.wiener_window = 4;
        assert!(cfg.validate().is_err());
        cfg = PreprocessConfig {
            s_ceiling: cfg.s_floor,
            ..PreprocessConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
