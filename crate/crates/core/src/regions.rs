//! Continuous-region extraction on a conditioned spectrogram.
//!
//! The spectrogram is binarized at a small fraction of its mean, connected
//! objects are labeled and their outer boundaries traced with Moore-Neighbor
//! tracing (Jacob's stopping criterion). Each object is measured and checked
//! against a set of shape and frequency bounds; survivors are cut back out of
//! the non-binary spectrogram.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::spectrogram::Spectrogram;

/// `(row, col)` = `(frequency bin, time frame)`.
pub type Pixel = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub pixels: Array2<bool>,
}

impl BinaryImage {
    pub fn new(pixels: Array2<bool>) -> Self {
        BinaryImage { pixels }
    }

    pub fn dim(&self) -> (usize, usize) {
        self.pixels.dim()
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    /// Renders as a 0/1 spectrogram for display.
    pub fn to_spectrogram(&self, like: &Spectrogram) -> Spectrogram {
        like.with_values(self.pixels.mapv(|p| if p { 1.0 } else { 0.0 }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Connectivity {
    Four,
    #[default]
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
            Connectivity::Eight => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        }
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Connectivity::Four => "4",
            Connectivity::Eight => "8",
        })
    }
}

impl FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "4" => Ok(Connectivity::Four),
            "8" => Ok(Connectivity::Eight),
            other => Err(Error::Config(format!(
                "connectivity must be 4 or 8, got `{other}`"
            ))),
        }
    }
}

/// Physical calibration of the pixel grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axes {
    pub bin_hz: f64,
    pub frame_s: f64,
    pub f0_hz: f64,
}

impl Axes {
    pub fn of(spec: &Spectrogram) -> Self {
        Axes {
            bin_hz: spec.bin_hz,
            frame_s: spec.frame_s,
            f0_hz: spec.f0_hz,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub row_min: usize,
    pub row_max: usize,
    pub col_min: usize,
    pub col_max: usize,
}

impl BoundingBox {
    pub fn rows(&self) -> usize {
        self.row_max - self.row_min + 1
    }

    pub fn cols(&self) -> usize {
        self.col_max - self.col_min + 1
    }
}

/// One traced continuous object and its measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Sorted row-major.
    pub pixels: Vec<Pixel>,
    /// Outer boundary in tracing order, each pixel listed once.
    pub boundary: Vec<Pixel>,
    pub perimeter_px: usize,
    pub area_px: usize,
    pub bbox: BoundingBox,
    pub height_hz: f64,
    pub width_s: f64,
    /// Absolute angle of the moment ellipse's major axis from the time axis.
    pub orientation_deg: f64,
    /// Major over minor axis length, ≥ 1.
    pub axes_ratio: f64,
    pub freq_min_hz: f64,
    pub freq_max_hz: f64,
}

impl Region {
    /// Bounding-box height over width, in pixels.
    pub fn height_width_ratio(&self) -> f64 {
        self.bbox.rows() as f64 / self.bbox.cols() as f64
    }
}

/// Marks pixels strictly above `fraction` times the image mean.
pub fn binarize(spec: &Spectrogram, fraction: f64) -> BinaryImage {
    let n = spec.values.len().max(1) as f64;
    let threshold = fraction * spec.values.sum() / n;
    BinaryImage::new(spec.values.mapv(|v| v > threshold))
}

/// Labels connected components by flood fill, in row-major order of their
/// first pixel. Returned pixel lists are sorted.
pub fn label_components(img: &BinaryImage, connectivity: Connectivity) -> Vec<Vec<Pixel>> {
    let (rows, cols) = img.dim();
    let mut seen = Array2::<bool>::from_elem((rows, cols), false);
    let mut components = Vec::new();
    let mut queue = VecDeque::new();

    for r in 0..rows {
        for c in 0..cols {
            if !img.pixels[[r, c]] || seen[[r, c]] {
                continue;
            }
            let mut comp = Vec::new();
            seen[[r, c]] = true;
            queue.push_back((r, c));
            while let Some((pr, pc)) = queue.pop_front() {
                comp.push((pr, pc));
                for &(dr, dc) in connectivity.offsets() {
                    let (nr, nc) = (pr as isize + dr, pc as isize + dc);
                    if nr < 0 || nc < 0 || nr >= rows as isize || nc >= cols as isize {
                        continue;
                    }
                    let (nr, nc) = (nr as usize, nc as usize);
                    if img.pixels[[nr, nc]] && !seen[[nr, nc]] {
                        seen[[nr, nc]] = true;
                        queue.push_back((nr, nc));
                    }
                }
            }
            comp.sort_unstable();
            components.push(comp);
        }
    }
    components
}

// Clockwise on screen (row axis pointing down), starting west.
const MOORE: [(isize, isize); 8] = [
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
];

/// Moore-Neighbor trace of the outer boundary of the object containing
/// `start`, which must be its first pixel in row-major order.
///
/// Tracing stops when the start pixel is re-entered with the same backtrack
/// pixel it began with (Jacob's criterion). Repeat visits are dropped, so the
/// result lists each boundary pixel once, in first-visit order.
pub fn moore_trace(mask: &Array2<bool>, start: Pixel) -> Vec<Pixel> {
    let (rows, cols) = mask.dim();
    let fg = |r: isize, c: isize| {
        r >= 0 && c >= 0 && r < rows as isize && c < cols as isize && mask[[r as usize, c as usize]]
    };

    let s = (start.0 as isize, start.1 as isize);
    let start_back = (s.0, s.1 - 1);
    let mut cur = s;
    let mut back = start_back;
    let mut visited = Array2::<bool>::from_elem((rows, cols), false);
    let mut boundary = vec![start];
    visited[[start.0, start.1]] = true;

    let area = mask.iter().filter(|&&p| p).count();
    let max_steps = 8 * area + 8;
    for _ in 0..max_steps {
        let from = (back.0 - cur.0, back.1 - cur.1);
        let Some(k0) = MOORE.iter().position(|&d| d == from) else {
            break;
        };
        let mut next = None;
        for k in 1..=8 {
            let (dr, dc) = MOORE[(k0 + k) % 8];
            let cand = (cur.0 + dr, cur.1 + dc);
            if fg(cand.0, cand.1) {
                let (br, bc) = MOORE[(k0 + k - 1) % 8];
                next = Some((cand, (cur.0 + br, cur.1 + bc)));
                break;
            }
        }
        let Some((cand, new_back)) = next else {
            break; // isolated pixel
        };
        if cand == s && new_back == start_back {
            break;
        }
        cur = cand;
        back = new_back;
        let (ur, uc) = (cur.0 as usize, cur.1 as usize);
        if !visited[[ur, uc]] {
            visited[[ur, uc]] = true;
            boundary.push((ur, uc));
        }
    }
    boundary
}

/// Measures a connected pixel set: bounding box, traced perimeter and the
/// second-moment ellipse.
pub fn measure_region(pixels: &[Pixel], axes: Axes) -> Result<Region> {
    if pixels.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut sorted = pixels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let bbox = BoundingBox {
        row_min: sorted.iter().map(|p| p.0).min().unwrap(),
        row_max: sorted.iter().map(|p| p.0).max().unwrap(),
        col_min: sorted.iter().map(|p| p.1).min().unwrap(),
        col_max: sorted.iter().map(|p| p.1).max().unwrap(),
    };

    let mut local = Array2::<bool>::from_elem((bbox.rows(), bbox.cols()), false);
    for &(r, c) in &sorted {
        local[[r - bbox.row_min, c - bbox.col_min]] = true;
    }
    let first = sorted[0];
    let boundary: Vec<Pixel> = moore_trace(&local, (first.0 - bbox.row_min, first.1 - bbox.col_min))
        .into_iter()
        .map(|(r, c)| (r + bbox.row_min, c + bbox.col_min))
        .collect();

    let (orientation_deg, axes_ratio) = moment_ellipse(&sorted);

    Ok(Region {
        perimeter_px: boundary.len(),
        area_px: sorted.len(),
        height_hz: bbox.rows() as f64 * axes.bin_hz,
        width_s: bbox.cols() as f64 * axes.frame_s,
        freq_min_hz: axes.f0_hz + bbox.row_min as f64 * axes.bin_hz,
        freq_max_hz: axes.f0_hz + bbox.row_max as f64 * axes.bin_hz,
        orientation_deg,
        axes_ratio,
        bbox,
        boundary,
        pixels: sorted,
    })
}

/// Inertia of a unit pixel about its own center.
const PIXEL_MOMENT: f64 = 1.0 / 12.0;

/// Orientation (degrees in [0, 90] from the time axis) and major/minor axis
/// ratio of the ellipse with the same central second moments.
fn moment_ellipse(pixels: &[Pixel]) -> (f64, f64) {
    let n = pixels.len() as f64;
    // x = time (column), y = frequency (row, increasing upward)
    let xm = pixels.iter().map(|p| p.1 as f64).sum::<f64>() / n;
    let ym = pixels.iter().map(|p| p.0 as f64).sum::<f64>() / n;
    let (mut m20, mut m02, mut m11) = (0.0, 0.0, 0.0);
    for &(r, c) in pixels {
        let dx = c as f64 - xm;
        let dy = r as f64 - ym;
        m20 += dx * dx;
        m02 += dy * dy;
        m11 += dx * dy;
    }
    m20 /= n;
    m02 /= n;
    m11 /= n;

    let theta = 0.5 * (2.0 * m11).atan2(m20 - m02);
    let orientation = theta.to_degrees().abs().min(90.0);

    let mid = 0.5 * (m20 + m02);
    let rad = (0.25 * (m20 - m02).powi(2) + m11 * m11).sqrt();
    let major = (mid + rad).max(PIXEL_MOMENT);
    let minor = (mid - rad).max(PIXEL_MOMENT);
    (orientation, (major / minor).sqrt())
}

/// Labels, traces and measures every connected object of `img`.
pub fn trace_regions(img: &BinaryImage, connectivity: Connectivity, axes: Axes) -> Vec<Region> {
    label_components(img, connectivity)
        .iter()
        .map(|comp| measure_region(comp, axes).expect("components are non-empty"))
        .collect()
}

/// Optional inclusive lower and upper bounds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Bounds {
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl Bounds {
    pub const fn new(min: Option<f64>, max: Option<f64>) -> Self {
        Bounds { min, max }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.min.is_none_or(|m| v >= m) && self.max.is_none_or(|m| v <= m)
    }

    fn is_valid(&self) -> bool {
        match (self.min, self.max) {
            (Some(a), Some(b)) => a <= b,
            _ => true,
        }
    }
}

/// Row of the region filter table; also names the first failing check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Perimeter,
    Area,
    HeightHz,
    WidthS,
    OrientationDeg,
    HeightWidthRatio,
    FrequencyHz,
    AxesRatio,
}

impl Criterion {
    pub const ALL: [Criterion; 8] = [
        Criterion::Perimeter,
        Criterion::Area,
        Criterion::HeightHz,
        Criterion::WidthS,
        Criterion::OrientationDeg,
        Criterion::HeightWidthRatio,
        Criterion::FrequencyHz,
        Criterion::AxesRatio,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Perimeter => "perimeter",
            Criterion::Area => "area",
            Criterion::HeightHz => "height_hz",
            Criterion::WidthS => "width_s",
            Criterion::OrientationDeg => "orientation_deg",
            Criterion::HeightWidthRatio => "hw_ratio",
            Criterion::FrequencyHz => "freq_hz",
            Criterion::AxesRatio => "axes_ratio",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Acceptance bounds for candidate up-call regions.
///
/// `frequency_hz.min` applies to the region's lowest row and
/// `frequency_hz.max` to its highest; the height/width ratio is taken in
/// pixel units of the bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionCriteria {
    pub perimeter: Bounds,
    pub area: Bounds,
    pub height_hz: Bounds,
    pub width_s: Bounds,
    pub orientation_deg: Bounds,
    pub height_width_ratio: Bounds,
    pub frequency_hz: Bounds,
    pub axes_ratio: Bounds,
}

/// Axes-ratio ceiling used by default. Linear sweeps seen through a 256-point
/// window form ridges two to three pixels thick, whose moment ellipses run
/// from 5:1 to 10:1, so the published 3.5 rejects nearly every call.
pub const DEFAULT_MAX_AXES_RATIO: f64 = 12.0;

impl Default for RegionCriteria {
    fn default() -> Self {
        RegionCriteria {
            axes_ratio: Bounds::new(None, Some(DEFAULT_MAX_AXES_RATIO)),
            ..RegionCriteria::published()
        }
    }
}

impl RegionCriteria {
    /// The published threshold table, unmodified.
    pub fn published() -> Self {
        RegionCriteria {
            perimeter: Bounds::new(Some(15.0), None),
            area: Bounds::new(Some(15.0), None),
            height_hz: Bounds::new(Some(14.0), Some(250.0)),
            width_s: Bounds::new(Some(0.1), Some(2.0)),
            orientation_deg: Bounds::new(Some(1.0), Some(88.0)),
            height_width_ratio: Bounds::new(Some(0.05), Some(3.0)),
            frequency_hz: Bounds::new(Some(50.0), Some(400.0)),
            axes_ratio: Bounds::new(None, Some(3.5)),
        }
    }

    pub fn bounds(&self, c: Criterion) -> &Bounds {
        match c {
            Criterion::Perimeter => &self.perimeter,
            Criterion::Area => &self.area,
            Criterion::HeightHz => &self.height_hz,
            Criterion::WidthS => &self.width_s,
            Criterion::OrientationDeg => &self.orientation_deg,
            Criterion::HeightWidthRatio => &self.height_width_ratio,
            Criterion::FrequencyHz => &self.frequency_hz,
            Criterion::AxesRatio => &self.axes_ratio,
        }
    }

    pub fn bounds_mut(&mut self, c: Criterion) -> &mut Bounds {
        match c {
            Criterion::Perimeter => &mut self.perimeter,
            Criterion::Area => &mut self.area,
            Criterion::HeightHz => &mut self.height_hz,
            Criterion::WidthS => &mut self.width_s,
            Criterion::OrientationDeg => &mut self.orientation_deg,
            Criterion::HeightWidthRatio => &mut self.height_width_ratio,
            Criterion::FrequencyHz => &mut self.frequency_hz,
            Criterion::AxesRatio => &mut self.axes_ratio,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for c in Criterion::ALL {
            if !self.bounds(c).is_valid() {
                return Err(Error::Config(format!("criterion {c}: min exceeds max")));
            }
        }
        Ok(())
    }

    /// First criterion the region violates, in table order.
    pub fn first_failure(&self, region: &Region) -> Option<Criterion> {
        Criterion::ALL.into_iter().find(|&c| {
            let b = self.bounds(c);
            match c {
                Criterion::Perimeter => !b.contains(region.perimeter_px as f64),
                Criterion::Area => !b.contains(region.area_px as f64),
                Criterion::HeightHz => !b.contains(region.height_hz),
                Criterion::WidthS => !b.contains(region.width_s),
                Criterion::OrientationDeg => !b.contains(region.orientation_deg),
                Criterion::HeightWidthRatio => !b.contains(region.height_width_ratio()),
                Criterion::FrequencyHz => {
                    b.min.is_some_and(|m| region.freq_min_hz < m)
                        || b.max.is_some_and(|m| region.freq_max_hz > m)
                }
                Criterion::AxesRatio => !b.contains(region.axes_ratio),
            }
        })
    }

    pub fn accepts(&self, region: &Region) -> bool {
        self.first_failure(region).is_none()
    }
}

/// Keeps the regions that satisfy every bound, preserving order.
pub fn filter_regions(regions: Vec<Region>, criteria: &RegionCriteria) -> Vec<Region> {
    regions.into_iter().filter(|r| criteria.accepts(r)).collect()
}

/// Spectrogram values on the kept regions' pixels, zero elsewhere.
pub fn roi_spectrogram(spec: &Spectrogram, kept: &[Region]) -> Spectrogram {
    let mut out = Array2::<f64>::zeros(spec.values.dim());
    for region in kept {
        for &(r, c) in &region.pixels {
            out[[r, c]] = spec.values[[r, c]];
        }
    }
    spec.with_values(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const AXES: Axes = Axes {
        bin_hz: 7.8125,
        frame_s: 0.064,
        f0_hz: 0.0,
    };

    fn image(rows: usize, cols: usize, on: &[Pixel]) -> BinaryImage {
        let mut px = Array2::from_elem((rows, cols), false);
        for &(r, c) in on {
            px[[r, c]] = true;
        }
        BinaryImage::new(px)
    }

    #[test]
    fn binarize_threshold() {
        let spec = Spectrogram {
            values: ndarray::array![[0.5, 1.0, 1.5], [2.0, 20.0, 35.0]],
            bin_hz: 1.0,
            frame_s: 1.0,
            f0_hz: 0.0,
        };
        // mean 10 → threshold 1
        let b = binarize(&spec, 0.1);
        assert_eq!(
            b.pixels,
            ndarray::array![[false, false, true], [true, true, true]]
        );
        let zeros = spec.with_values(Array2::zeros((2, 3)));
        assert_eq!(binarize(&zeros, 0.1).count(), 0);
        let flat = spec.with_values(Array2::from_elem((2, 3), 5.0));
        assert_eq!(binarize(&flat, 0.1).count(), 6);
    }

    #[test]
    fn single_pixel_region() {
        let regions = trace_regions(&image(5, 5, &[(2, 3)]), Connectivity::Eight, AXES);
        assert_eq!(regions.len(), 1);
        let r = &regions[0];
        assert_eq!((r.area_px, r.perimeter_px), (1, 1));
        assert_eq!(r.orientation_deg, 0.0);
        assert_eq!(r.axes_ratio, 1.0);
    }

    #[test]
    fn solid_block_boundary() {
        let on: Vec<Pixel> = (1..4).flat_map(|r| (1..4).map(move |c| (r, c))).collect();
        let regions = trace_regions(&image(5, 5, &on), Connectivity::Eight, AXES);
        assert_eq!(regions.len(), 1);
        let r = &regions[0];
        assert_eq!(r.area_px, 9);
        assert_eq!(r.perimeter_px, 8);
        assert_eq!(
            r.boundary,
            vec![(1, 1), (1, 2), (1, 3), (2, 3), (3, 3), (3, 2), (3, 1), (2, 1)]
        );
    }

    #[test]
    fn diagonal_neighbors_join_under_8_connectivity() {
        let img = image(4, 4, &[(1, 1), (2, 2)]);
        let eight = trace_regions(&img, Connectivity::Eight, AXES);
        assert_eq!(eight.len(), 1);
        assert_eq!(eight[0].area_px, 2);
        assert_eq!(trace_regions(&img, Connectivity::Four, AXES).len(), 2);
    }

    #[test]
    fn ring_traces_outer_boundary_only() {
        let mut on = Vec::new();
        for r in 0..5 {
            for c in 0..5 {
                if r == 0 || r == 4 || c == 0 || c == 4 {
                    on.push((r, c));
                }
            }
        }
        let regions = trace_regions(&image(5, 5, &on), Connectivity::Eight, AXES);
        assert_eq!(regions.len(), 1);
        assert_eq!(regions[0].perimeter_px, 16);
    }

    #[test]
    fn horizontal_line_measurements() {
        let on: Vec<Pixel> = (0..10).map(|c| (4, c)).collect();
        let r = measure_region(&on, AXES).unwrap();
        assert_eq!(r.orientation_deg, 0.0);
        assert_eq!(r.height_hz, 7.8125);
        assert_eq!(r.perimeter_px, 10);
        assert!((r.width_s - 0.64).abs() < 1e-12);
        // (99/12) / (1/12) under the pixel-moment floor
        assert!((r.axes_ratio - 99f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn staircase_is_45_degrees() {
        let on: Vec<Pixel> = (0..10).map(|i| (i, i)).collect();
        let r = measure_region(&on, AXES).unwrap();
        assert!((r.orientation_deg - 45.0).abs() < 1.0);
        // falling staircase has the same absolute orientation
        let down: Vec<Pixel> = (0..10).map(|i| (9 - i, i)).collect();
        let r = measure_region(&down, AXES).unwrap();
        assert!((r.orientation_deg - 45.0).abs() < 1.0);
    }

    #[test]
    fn vertical_line_is_90_degrees() {
        let on: Vec<Pixel> = (0..6).map(|r| (r, 2)).collect();
        let r = measure_region(&on, AXES).unwrap();
        assert_eq!(r.orientation_deg, 90.0);
    }

    #[test]
    fn square_is_round() {
        let on: Vec<Pixel> = (0..5).flat_map(|r| (0..5).map(move |c| (r, c))).collect();
        let r = measure_region(&on, AXES).unwrap();
        assert!((r.axes_ratio - 1.0).abs() < 1e-9);
    }

    #[test]
    fn empty_region_rejected() {
        assert!(matches!(measure_region(&[], AXES), Err(Error::EmptyRegion)));
    }

    /// Thick rising band: rows 11..=24 (≈86–188 Hz) by 14 frames (0.9 s).
    fn upcall_like() -> Region {
        let mut on = Vec::new();
        for i in 0..14usize {
            for d in 0..=3usize {
                let c = i + 3;
                if i + d < 14 {
                    on.push((11 + i + d, c));
                }
                if i >= d {
                    on.push((11 + i - d, c));
                }
            }
        }
        measure_region(&on, AXES).unwrap()
    }

    #[test]
    fn upcall_shaped_region_is_kept() {
        let r = upcall_like();
        assert!(r.area_px >= 40);
        assert!((r.orientation_deg - 45.0).abs() < 1.0, "{}", r.orientation_deg);
        assert!(r.freq_min_hz >= 80.0 && r.freq_max_hz <= 200.0);
        assert_eq!(RegionCriteria::default().first_failure(&r), None);
    }

    #[test]
    fn published_table_needs_a_compact_shape() {
        // the thin band is too elongated for the published ceiling
        let thin = upcall_like();
        assert!(thin.axes_ratio > 3.5);
        assert_eq!(RegionCriteria::published().first_failure(&thin), Some(Criterion::AxesRatio));

        // a filled 45° ellipse with semi-axes 8 and 3 pixels passes every row
        let mut on = Vec::new();
        for r in 0..40usize {
            for c in 0..30usize {
                let (dx, dy) = (c as f64 - 12.0, r as f64 - 18.0);
                let (u, v) = ((dx + dy) / 2f64.sqrt(), (dy - dx) / 2f64.sqrt());
                if (u / 8.0).powi(2) + (v / 3.0).powi(2) <= 1.0 {
                    on.push((r, c));
                }
            }
        }
        let r = measure_region(&on, AXES).unwrap();
        assert!(r.area_px >= 40 && r.axes_ratio < 3.5, "{r:?}");
        assert!((r.orientation_deg - 45.0).abs() < 1.0);
        assert!(r.freq_min_hz >= 80.0 && r.freq_max_hz <= 200.0, "{r:?}");
        assert_eq!(RegionCriteria::published().first_failure(&r), None);
    }

    #[test]
    fn filter_rejections() {
        let crit = RegionCriteria::default();
        let on: Vec<Pixel> = (0..2).flat_map(|r| (0..3).map(move |c| (r + 10, c + 2))).collect();
        let small = measure_region(&on, AXES).unwrap();
        assert!(small.perimeter_px < 15);
        assert_eq!(crit.first_failure(&small), Some(Criterion::Perimeter));

        // same shape shifted down to 30–60 Hz: only the frequency floor fails
        let mut low = upcall_like();
        let shift = low.bbox.row_min - 4;
        let moved: Vec<Pixel> = low.pixels.iter().map(|&(r, c)| (r - shift, c)).collect();
        low = measure_region(&moved, AXES).unwrap();
        assert!(low.freq_min_hz < 50.0);
        assert_eq!(crit.first_failure(&low), Some(Criterion::FrequencyHz));

        let kept = filter_regions(vec![small, upcall_like(), low], &crit);
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn roi_masks_to_kept_pixels() {
        let spec = Spectrogram {
            values: Array2::from_elem((40, 30), 2.0),
            bin_hz: 7.8125,
            frame_s: 0.064,
            f0_hz: 0.0,
        };
        assert!(roi_spectrogram(&spec, &[]).values.iter().all(|&v| v == 0.0));
        let region = upcall_like();
        let roi = roi_spectrogram(&spec, std::slice::from_ref(&region));
        let nonzero: Vec<Pixel> = roi
            .values
            .indexed_iter()
            .filter(|(_, &v)| v != 0.0)
            .map(|(p, _)| p)
            .collect();
        assert_eq!(nonzero, region.pixels);
        assert_eq!(roi_spectrogram(&roi, &[region]).values, roi.values);
    }

    #[test]
    fn criteria_validation() {
        let mut c = RegionCriteria::default();
        assert!(c.validate().is_ok());
        c.width_s = Bounds::new(Some(3.0), Some(1.0));
        assert!(c.validate().is_err());
    }
}
