//! Grid-mask features on a region-of-interest spectrogram.
//!
//! The gridded band is split into a 6×6 grid of cell means. Cells are
//! addressed `(x, y)` with `x` the time column (0 = earliest) and `y` the
//! frequency row (0 = lowest band). Two feature families are read off the
//! grid:
//!
//! * diagonal features: the mean over each diagonal band `x - y = const`,
//!   the direction a rising sweep runs. The two single-cell corner bands are
//!   dropped, leaving nine, numbered 1..=9 from the late/low-frequency corner
//!   (`x - y = 4`) to the early/high-frequency corner (`x - y = -4`).
//! * mask features: at each anchor, the largest of three small mask averages
//!   (`M1`: right, up and up-right neighbors; `M2`: right and up; `M3`: the
//!   anchor and the cell above). Anchors span columns 1..=3 and rows 0..=4.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::spectrogram::Spectrogram;

pub const GRID: usize = 6;
pub const N_DIAGONALS: usize = 2 * GRID - 3;
const MASK_COLUMNS: std::ops::RangeInclusive<usize> = 1..=GRID - 3;
const MASK_ROWS: std::ops::Range<usize> = 0..GRID - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum FeatureMode {
    Diagonal5,
    Mask15,
    #[default]
    Combined20,
}

impl FeatureMode {
    /// Report order: all features first, then each family alone.
    pub const ALL: [FeatureMode; 3] = [
        FeatureMode::Combined20,
        FeatureMode::Diagonal5,
        FeatureMode::Mask15,
    ];

    pub fn len(self) -> usize {
        match self {
            FeatureMode::Diagonal5 => 5,
            FeatureMode::Mask15 => 15,
            FeatureMode::Combined20 => 20,
        }
    }

    pub fn from_len(n: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.len() == n)
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureMode::Diagonal5 => "diagonal5",
            FeatureMode::Mask15 => "mask15",
            FeatureMode::Combined20 => "combined20",
        }
    }

    /// Column names in vector order: `d1..d5`, then `m_x_y` (1-based).
    pub fn feature_names(self) -> Vec<String> {
        let diag = (1..=5).map(|k| format!("d{k}"));
        let mask = MASK_COLUMNS
            .flat_map(|x| MASK_ROWS.map(move |y| format!("m_{}_{}", x + 1, y + 1)));
        match self {
            FeatureMode::Diagonal5 => diag.collect(),
            FeatureMode::Mask15 => mask.collect(),
            FeatureMode::Combined20 => diag.chain(mask).collect(),
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown feature mode `{s}` (expected diagonal5, mask15 or combined20)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub mode: FeatureMode,
    pub values: Vec<f64>,
}

/// Frequency range covered by the grid, `[lo_hz, hi_hz)` on bin centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridBand {
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl Default for GridBand {
    fn default() -> Self {
        GridBand {
            lo_hz: 0.0,
            hi_hz: 500.0,
        }
    }
}

impl GridBand {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo_hz.is_finite() && self.hi_hz.is_finite() && self.lo_hz < self.hi_hz) {
            return Err(Error::Config(format!(
                "grid band {}..{} Hz is not a valid range",
                self.lo_hz, self.hi_hz
            )));
        }
        Ok(())
    }

    fn rows(&self, spec: &Spectrogram) -> std::ops::Range<usize> {
        let inside = |b: usize| {
            let f = spec.bin_freq_hz(b);
            f >= self.lo_hz && f < self.hi_hz
        };
        let first = (0..spec.n_bins()).find(|&b| inside(b));
        match first {
            None => 0..0,
            Some(a) => a..(a..spec.n_bins()).take_while(|&b| inside(b)).last().unwrap() + 1,
        }
    }
}

/// 6×6 cell means, indexed `[x][y]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMeans {
    pub cells: [[f64; GRID]; GRID],
}

impl GridMeans {
    pub fn mean(&self, x: usize, y: usize) -> f64 {
        self.cells[x][y]
    }

    pub fn transposed(&self) -> GridMeans {
        let mut cells = [[0.0; GRID]; GRID];
        for (x, col) in cells.iter_mut().enumerate() {
            for (y, v) in col.iter_mut().enumerate() {
                *v = self.cells[y][x];
            }
        }
        GridMeans { cells }
    }
}

/// Splits `n` into `parts` consecutive group sizes; the last group takes the remainder.
pub fn partition(n: usize, parts: usize) -> Vec<usize> {
    let base = n / parts;
    let mut sizes = vec![base; parts];
    sizes[parts - 1] = n - base * (parts - 1);
    sizes
}

/// Cell means over the full clip duration and the configured frequency band.
pub fn grid_means(spec: &Spectrogram, band: GridBand) -> Result<GridMeans> {
    band.validate()?;
    let rows = band.rows(spec);
    if rows.len() < GRID {
        return Err(Error::EmptyBand {
            lo_hz: band.lo_hz,
            hi_hz: band.hi_hz,
        });
    }
    if spec.n_frames() < GRID {
        return Err(Error::Config(format!(
            "spectrogram has {} frames, need at least {GRID}",
            spec.n_frames()
        )));
    }

    let row_sizes = partition(rows.len(), GRID);
    let col_sizes = partition(spec.n_frames(), GRID);
    let mut cells = [[0.0; GRID]; GRID];
    let mut c0 = 0;
    for (x, &cw) in col_sizes.iter().enumerate() {
        let mut r0 = rows.start;
        for (y, &rh) in row_sizes.iter().enumerate() {
            let block = spec
                .values
                .slice(ndarray::s![r0..r0 + rh, c0..c0 + cw]);
            cells[x][y] = block.sum() / (rh * cw) as f64;
            r0 += rh;
        }
        c0 += cw;
    }
    Ok(GridMeans { cells })
}

/// Cells on diagonal `k` (1-based, see module docs).
pub fn diagonal_cells(k: usize) -> Vec<(usize, usize)> {
    assert!((1..=N_DIAGONALS).contains(&k), "diagonal index {k} out of range");
    let offset = (GRID as isize - 1) - k as isize; // x - y
    (0..GRID)
        .filter_map(|x| {
            let y = x as isize - offset;
            (0..GRID as isize).contains(&y).then_some((x, y as usize))
        })
        .collect()
}

/// Means over diagonals `1..=count`.
pub fn diagonal_features(g: &GridMeans, count: usize) -> Result<Vec<f64>> {
    if !(1..=N_DIAGONALS).contains(&count) {
        return Err(Error::Config(format!(
            "diagonal count must be in 1..={N_DIAGONALS}, got {count}"
        )));
    }
    Ok((1..=count)
        .map(|k| {
            let cells = diagonal_cells(k);
            cells.iter().map(|&(x, y)| g.mean(x, y)).sum::<f64>() / cells.len() as f64
        })
        .collect())
}

/// The three mask averages at anchor `(x, y)`.
pub fn mask_responses(g: &GridMeans, x: usize, y: usize) -> [f64; 3] {
    let m1 = (g.mean(x + 1, y) + g.mean(x, y + 1) + g.mean(x + 1, y + 1)) / 3.0;
    let m2 = (g.mean(x + 1, y) + g.mean(x, y + 1)) / 2.0;
    let m3 = (g.mean(x, y) + g.mean(x, y + 1)) / 2.0;
    [m1, m2, m3]
}

/// Fifteen mask features, anchors column-major (x ascending, then y).
pub fn mask_features(g: &GridMeans) -> Vec<f64> {
    MASK_COLUMNS
        .flat_map(|x| MASK_ROWS.map(move |y| (x, y)))
        .map(|(x, y)| {
            let [m1, m2, m3] = mask_responses(g, x, y);
            m1.max(m2).max(m3)
        })
        .collect()
}

pub fn features_from_grid(g: &GridMeans, mode: FeatureMode) -> FeatureVector {
    let values = match mode {
        FeatureMode::Diagonal5 => diagonal_features(g, 5).expect("5 is a valid count"),
        FeatureMode::Mask15 => mask_features(g),
        FeatureMode::Combined20 => {
            let mut v = diagonal_features(g, 5).expect("5 is a valid count");
            v.extend(mask_features(g));
            v
        }
    };
    FeatureVector { mode, values }
}

/// Grid the ROI spectrogram over `band` and compute the selected feature set.
pub fn extract_features(spec: &Spectrogram, band: GridBand, mode: FeatureMode) -> Result<FeatureVector> {
    Ok(features_from_grid(&grid_means(spec, band)?, mode))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn spec(values: Array2<f64>) -> Spectrogram {
        Spectrogram {
            values,
            bin_hz: 7.8125,
            frame_s: 0.064,
            f0_hz: 0.0,
        }
    }

    fn grid(f: impl Fn(usize, usize) -> f64) -> GridMeans {
        let mut cells = [[0.0; GRID]; GRID];
        for (x, col) in cells.iter_mut().enumerate() {
            for (y, v) in col.iter_mut().enumerate() {
                *v = f(x, y);
            }
        }
        GridMeans { cells }
    }

    #[test]
    fn partition_sizes() {
        assert_eq!(partition(30, 6), vec![5; 6]);
        assert_eq!(partition(64, 6), vec![10, 10, 10, 10, 10, 14]);
    }

    #[test]
    fn default_band_is_64_rows() {
        let s = spec(Array2::zeros((129, 30)));
        assert_eq!(GridBand::default().rows(&s), 0..64);
    }

    #[test]
    fn uniform_spectrogram_uniform_grid() {
        let g = grid_means(&spec(Array2::from_elem((129, 30), 1.75)), GridBand::default()).unwrap();
        assert!(g.cells.iter().flatten().all(|&v| v == 1.75));
        let f = features_from_grid(&g, FeatureMode::Combined20);
        assert!(f.values.iter().all(|&v| v == 1.75));
    }

    #[test]
    fn single_cell_locality() {
        // earliest frames, highest band rows (54..64)
        let mut v = Array2::zeros((129, 30));
        v[[60, 2]] = 7.0;
        let g = grid_means(&spec(v), GridBand::default()).unwrap();
        let nonzero: Vec<_> = (0..GRID)
            .flat_map(|x| (0..GRID).map(move |y| (x, y)))
            .filter(|&(x, y)| g.mean(x, y) != 0.0)
            .collect();
        assert_eq!(nonzero, vec![(0, 5)]);
        assert_eq!(g.mean(0, 5), 7.0 / 70.0);
    }

    #[test]
    fn band_errors() {
        let s = spec(Array2::zeros((129, 30)));
        let narrow = GridBand {
            lo_hz: 100.0,
            hi_hz: 120.0,
        };
        assert!(matches!(grid_means(&s, narrow), Err(Error::EmptyBand { .. })));
        let outside = GridBand {
            lo_hz: 2000.0,
            hi_hz: 3000.0,
        };
        assert!(grid_means(&s, outside).is_err());
    }

    #[test]
    fn diagonal_enumeration_covers_non_corner_cells_once() {
        let mut count = [[0; GRID]; GRID];
        for k in 1..=N_DIAGONALS {
            for (x, y) in diagonal_cells(k) {
                count[x][y] += 1;
            }
        }
        let total: usize = count.iter().flatten().sum();
        assert_eq!(total, 34);
        assert_eq!(count[GRID - 1][0], 0);
        assert_eq!(count[0][GRID - 1], 0);
        assert!(count.iter().flatten().all(|&c| c <= 1));
        assert_eq!(diagonal_cells(1), vec![(4, 0), (5, 1)]);
        assert_eq!(diagonal_cells(5).len(), 6);
    }

    #[test]
    fn indicator_on_diagonal_three() {
        let on = diagonal_cells(3);
        let g = grid(|x, y| if on.contains(&(x, y)) { 1.0 } else { 0.0 });
        let d = diagonal_features(&g, N_DIAGONALS).unwrap();
        assert_eq!(d[2], 1.0);
        assert!(d.iter().enumerate().all(|(i, &v)| i == 2 || v < 1.0));
        assert!(diagonal_features(&g, 0).is_err());
        assert!(diagonal_features(&g, 10).is_err());
    }

    #[test]
    fn mask_hand_example() {
        let g = grid(|x, y| match (x, y) {
            (2, 1) => 3.0,
            (1, 2) => 6.0,
            _ => 0.0,
        });
        let [m1, m2, m3] = mask_responses(&g, 1, 1);
        assert_eq!((m1, m2, m3), (3.0, 4.5, 3.0));
        assert_eq!(mask_features(&g)[1], 4.5);
    }

    #[test]
    fn mask_uniform_and_zero() {
        assert!(mask_features(&grid(|_, _| 2.5)).iter().all(|&v| v == 2.5));
        assert_eq!(mask_features(&grid(|_, _| 0.0)), vec![0.0; 15]);
    }

    #[test]
    fn lengths_and_names() {
        let g = grid(|x, y| (x * 6 + y) as f64);
        for mode in FeatureMode::ALL {
            let f = features_from_grid(&g, mode);
            assert_eq!(f.values.len(), mode.len());
            assert_eq!(mode.feature_names().len(), mode.len());
            assert_eq!(mode.name().parse::<FeatureMode>().unwrap(), mode);
        }
        let names = FeatureMode::Combined20.feature_names();
        assert_eq!(names[0], "d1");
        assert_eq!(names[5], "m_2_1");
        assert_eq!(names[19], "m_4_5");
        assert!("bogus".parse::<FeatureMode>().is_err());
    }

    #[test]
    fn transpose_breaks_mask_asymmetry() {
        let g = grid(|x, y| ((x * 37 + y * 11) % 13) as f64 + 0.1 * x as f64);
        assert_ne!(mask_features(&g), mask_features(&g.transposed()));
    }

    #[test]
    fn rising_ridge_lights_one_diagonal() {
        // 64-row band, 30 frames; ridge along x - y = 2 in grid units
        let mut v = Array2::zeros((129, 30));
        for c in 10..30 {
            let r = (c - 10) * 64 / 30;
            v[[r, c]] = 1.0;
        }
        let f = extract_features(&spec(v), GridBand::default(), FeatureMode::Diagonal5).unwrap();
        let mut sorted = f.values.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[2];
        assert!(sorted[4] >= 2.0 * median, "{:?}", f.values);
    }

    #[test]
    fn zero_roi_gives_zero_features() {
        let f = extract_features(&spec(Array2::zeros((129, 30))), GridBand::default(), FeatureMode::Combined20)
            .unwrap();
        assert_eq!(f.values, vec![0.0; 20]);
    }
}
