//! Hyperspectral data model and pseudo-RGB projection.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// An `H x W x C` reflectance volume.
///
/// Samples are stored band-interleaved-by-pixel, i.e. the value for
/// `(row, col, band)` lives at `(row * width + col) * bands + band`, so the
/// spectrum of a pixel is a contiguous slice.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    height: usize,
    width: usize,
    bands: usize,
    data: Vec<f64>,
    wavelengths: Option<Vec<f64>>,
}

impl HyperCube {
    pub fn new(height: usize, width: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || bands == 0 {
            return Err(Error::InvalidDimensions(format!(
                "cube dimensions must be positive, got {height}x{width}x{bands}"
            )));
        }
        let expected = height * width * bands;
        if data.len() != expected {
            return Err(Error::LengthMismatch(expected, data.len()));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            height,
            width,
            bands,
            data,
            wavelengths: None,
        })
    }

    /// Builds a cube from a closure evaluated at every `(row, col, band)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        bands: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * bands);
        for r in 0..height {
            for c in 0..width {
                for b in 0..bands {
                    data.push(f(r, c, b));
                }
            }
        }
        Self::new(height, width, bands, data)
    }

    pub fn with_wavelengths(mut self, wavelengths: Vec<f64>) -> Result<Self> {
        if wavelengths.len() != self.bands {
            return Err(Error::LengthMismatch(self.bands, wavelengths.len()));
        }
        self.wavelengths = Some(wavelengths);
        Ok(self)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn wavelengths(&self) -> Option<&[f64]> {
        self.wavelengths.as_deref()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, band: usize) -> f64 {
        self.data[(row * self.width + col) * self.bands + band]
    }

    /// Spectrum of the pixel with flat (row-major) index `idx`.
    #[inline]
    pub fn pixel(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.bands..(idx + 1) * self.bands]
    }

    pub fn check_bounds(&self, row: usize, col: usize) -> Result<()> {
        if row >= self.height || col >= self.width {
            return Err(Error::OutOfBounds {
                row,
                col,
                height: self.height,
                width: self.width,
            });
        }
        Ok(())
    }

    /// Reference spectrum at `(row, col)`.
    pub fn spectrum_at(&self, row: usize, col: usize) -> Result<Spectrum> {
        self.check_bounds(row, col)?;
        Ok(Spectrum(self.pixel(row * self.width + col).to_vec()))
    }

    /// One band as a row-major `H x W` plane.
    pub fn band_plane(&self, band: usize) -> Result<Vec<f64>> {
        if band >= self.bands {
            return Err(Error::BandOutOfRange {
                index: band,
                bands: self.bands,
            });
        }
        Ok(self
            .data
            .iter()
            .skip(band)
            .step_by(self.bands)
            .copied()
            .collect())
    }
}

/// Per-pixel spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Spectrum(pub Vec<f64>);

impl Spectrum {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for Spectrum {
    fn from(v: Vec<f64>) -> Self {
        Spectrum(v)
    }
}

/// `H x W` class map with an ignore sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    labels: Vec<u32>,
    ignore_index: u32,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, labels: Vec<u32>, ignore_index: u32) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions(format!(
                "label map dimensions must be positive, got {height}x{width}"
            )));
        }
        if labels.len() != height * width {
            return Err(Error::LengthMismatch(height * width, labels.len()));
        }
        Ok(Self {
            height,
            width,
            labels,
            ignore_index,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn ignore_index(&self) -> u32 {
        self.ignore_index
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Classes present in the map, ascending, excluding the ignore index.
    pub fn valid_classes(&self) -> BTreeSet<u32> {
        self.labels
            .iter()
            .copied()
            .filter(|&l| l != self.ignore_index)
            .collect()
    }

    /// Checks that the map can be paired with `cube`.
    pub fn validate_against(&self, cube: &HyperCube) -> Result<()> {
        if self.dims() != cube.dims() {
            return Err(Error::DimensionMismatch {
                expected: cube.dims(),
                actual: self.dims(),
            });
        }
        Ok(())
    }
}

/// Three band indices selecting the red, green and blue channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandTriple {
    pub r: usize,
    pub g: usize,
    pub b: usize,
}

impl BandTriple {
    pub fn new(r: usize, g: usize, b: usize) -> Self {
        Self { r, g, b }
    }

    /// Bands at 3/4, 1/2 and 1/4 of the spectral range, used when nothing
    /// else is configured.
    pub fn spread(bands: usize) -> Self {
        let pick = |num: usize| (bands.saturating_sub(1) * num) / 4;
        Self::new(pick(3), pick(2), pick(1))
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.r, self.g, self.b]
    }

    pub fn validate(&self, bands: usize) -> Result<()> {
        for index in self.as_array() {
            if index >= bands {
                return Err(Error::BandOutOfRange { index, bands });
            }
        }
        Ok(())
    }
}

impl FromStr for BandTriple {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!(
                "expected three comma-separated band indices, got {s:?}"
            ));
        }
        let mut idx = [0usize; 3];
        for (slot, p) in idx.iter_mut().zip(&parts) {
            *slot = p.parse().map_err(|_| format!("invalid band index {p:?}"))?;
        }
        Ok(Self::new(idx[0], idx[1], idx[2]))
    }
}

impl fmt::Display for BandTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.r, self.g, self.b)
    }
}

/// How selected bands are mapped into `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Values are used as-is and must already lie in `[0, 1]`.
    None,
    /// Each channel is stretched by its own min and max.
    PerBandMinmax,
    /// All three channels share the min and max of the selected bands.
    GlobalMinmax,
}

/// `H x W x 3` image with values in `[0, 1]`, pixel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoRgb {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl PseudoRgb {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width * 3 {
            return Err(Error::LengthMismatch(height * width * 3, data.len()));
        }
        for (index, &value) in data.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFinite(index));
            }
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::OutOfUnitRange { index, value });
            }
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize, channel: usize) -> f64 {
        self.data[(row * self.width + col) * 3 + channel]
    }

    /// 8-bit RGB bytes, `round(v * 255)` per channel.
    pub fn to_rgb8(&self) -> Vec<u8> {
        self.data
            .iter()
            .map(|v| (v * 255.0).round() as u8)
            .collect()
    }
}

fn minmax(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        })
}

fn stretch(v: f64, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        // constant band
        0.0
    }
}

/// Projects `cube` to three channels by fixed band selection.
pub fn pseudo_rgb(
    cube: &HyperCube,
    bands: BandTriple,
    normalize: Normalization,
) -> Result<PseudoRgb> {
    bands.validate(cube.bands())?;
    let planes = bands
        .as_array()
        .map(|b| cube.band_plane(b).expect("validated band index"));
    let n = cube.pixel_count();
    let ranges: [(f64, f64); 3] = match normalize {
        Normalization::None => {
            for (ch, plane) in planes.iter().enumerate() {
                if let Some((i, &value)) = plane
                    .iter()
                    .enumerate()
                    .find(|(_, v)| !(0.0..=1.0).contains(*v))
                {
                    return Err(Error::OutOfUnitRange {
                        index: i * 3 + ch,
                        value,
                    });
                }
            }
            [(0.0, 1.0); 3]
        }
        Normalization::PerBandMinmax => planes.each_ref().map(|p| minmax(p.iter().copied())),
        Normalization::GlobalMinmax => {
            let g = minmax(planes.iter().flat_map(|p| p.iter().copied()));
            [g; 3]
        }
    };
    let mut data = Vec::with_capacity(n * 3);
    for i in 0..n {
        for (plane, &(lo, hi)) in planes.iter().zip(&ranges) {
            let v = plane[i];
            data.push(match normalize {
                Normalization::None => v,
                _ => stretch(v, lo, hi),
            });
        }
    }
    PseudoRgb::new(cube.height(), cube.width(), data)
}

/// Free-function form of [`HyperCube::spectrum_at`].
pub fn spectrum_at(cube: &HyperCube, row: usize, col: usize) -> Result<Spectrum> {
    cube.spectrum_at(row, col)
}
