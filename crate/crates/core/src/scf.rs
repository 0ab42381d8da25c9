//! Spectral comparison functions and click-aggregated score maps.
//!
//! Each click contributes a per-pixel similarity map against the spectrum at
//! the clicked location; maps from several clicks are merged with a
//! pixel-wise maximum.
//!
//! * `Sa`: `1 - theta / pi`, with `theta` the spectral angle.
//! * `Pcc`: Pearson correlation remapped to `(rho + 1) / 2`.
//! * `SaEqualized`: the aggregated `Sa` map after histogram equalization.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hsi::{HyperCube, Spectrum};
use crate::imgproc::{self, BinaryMask};
use crate::{Error, Result};

/// `(row, col)` pixel coordinate.
pub type Pixel = (usize, usize);

/// Ordered, duplicate-free list of clicked pixels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Pixel>", into = "Vec<Pixel>")]
pub struct ClickSet {
    points: Vec<Pixel>,
}

impl ClickSet {
    pub fn new(points: Vec<Pixel>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(points.len());
        for &(r, c) in &points {
            if !seen.insert((r, c)) {
                return Err(Error::DuplicateClick(r, c));
            }
        }
        Ok(Self { points })
    }

    /// Builds a click set and checks every point against `height x width`.
    pub fn within(points: Vec<Pixel>, height: usize, width: usize) -> Result<Self> {
        let set = Self::new(points)?;
        set.check_bounds(height, width)?;
        Ok(set)
    }

    pub fn single(row: usize, col: usize) -> Self {
        Self {
            points: vec![(row, col)],
        }
    }

    pub fn push(&mut self, p: Pixel) -> Result<()> {
        if self.contains(p) {
            return Err(Error::DuplicateClick(p.0, p.1));
        }
        self.points.push(p);
        Ok(())
    }

    pub fn points(&self) -> &[Pixel] {
        &self.points
    }

    pub fn contains(&self, p: Pixel) -> bool {
        self.points.contains(&p)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<Pixel> {
        self.points.last().copied()
    }

    pub fn check_bounds(&self, height: usize, width: usize) -> Result<()> {
        for &(row, col) in &self.points {
            if row >= height || col >= width {
                return Err(Error::OutOfBounds {
                    row,
                    col,
                    height,
                    width,
                });
            }
        }
        Ok(())
    }
}

impl TryFrom<Vec<Pixel>> for ClickSet {
    type Error = Error;

    fn try_from(points: Vec<Pixel>) -> Result<Self> {
        Self::new(points)
    }
}

impl From<ClickSet> for Vec<Pixel> {
    fn from(c: ClickSet) -> Self {
        c.points
    }
}

/// `H x W` map of scores in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMap {
    height: usize,
    width: usize,
    scores: Vec<f64>,
}

impl ScoreMap {
    pub fn new(height: usize, width: usize, scores: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::InvalidDimensions(format!(
                "score map dimensions must be positive, got {height}x{width}"
            )));
        }
        if scores.len() != height * width {
            return Err(Error::LengthMismatch(height * width, scores.len()));
        }
        for (index, &value) in scores.iter().enumerate() {
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
            scores,
        })
    }

    /// Caller guarantees the range contract.
    pub(crate) fn from_raw(height: usize, width: usize, scores: Vec<f64>) -> Self {
        debug_assert_eq!(scores.len(), height * width);
        debug_assert!(scores.iter().all(|v| (0.0..=1.0).contains(v)));
        Self {
            height,
            width,
            scores,
        }
    }

    pub fn constant(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
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

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn into_scores(self) -> Vec<f64> {
        self.scores
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.scores[row * self.width + col]
    }

    /// Binary prediction `{score > tau}`.
    pub fn threshold(&self, tau: f64) -> BinaryMask {
        BinaryMask::from_raw(
            self.height,
            self.width,
            self.scores.iter().map(|&s| s > tau).collect(),
        )
    }

    /// Pixel-wise maximum of two maps of equal size.
    pub fn max_with(&self, other: &ScoreMap) -> Result<ScoreMap> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(Self::from_raw(
            self.height,
            self.width,
            self.scores
                .iter()
                .zip(&other.scores)
                .map(|(a, b)| a.max(*b))
                .collect(),
        ))
    }
}

/// Which spectral comparison function produces a score map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScfKind {
    #[serde(rename = "pcc")]
    Pcc,
    #[serde(rename = "sa")]
    Sa,
    #[serde(rename = "sa-eq")]
    SaEqualized,
}

impl ScfKind {
    pub const ALL: [ScfKind; 3] = [ScfKind::Pcc, ScfKind::Sa, ScfKind::SaEqualized];

    pub fn id(&self) -> &'static str {
        match self {
            ScfKind::Pcc => "pcc",
            ScfKind::Sa => "sa",
            ScfKind::SaEqualized => "sa-eq",
        }
    }
}

impl fmt::Display for ScfKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ScfKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pcc" => Ok(ScfKind::Pcc),
            "sa" => Ok(ScfKind::Sa),
            "sa-eq" | "sa_eq" | "sa-equalized" => Ok(ScfKind::SaEqualized),
            other => Err(format!(
                "unknown spectral method {other:?} (expected pcc, sa or sa-eq)"
            )),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Angle between unit vector `u` and `x / x_norm`.
///
/// Uses `2 * atan2(|u - v|, |u + v|)`, which equals `acos(<u, v>)` but keeps
/// full precision near 0 and pi where `acos` loses half the digits.
#[inline]
fn angle_to_unit(u: &[f64], x: &[f64], x_norm: f64) -> f64 {
    let (mut diff, mut sum) = (0.0, 0.0);
    for (&ui, &xi) in u.iter().zip(x) {
        let vi = xi / x_norm;
        diff += (ui - vi) * (ui - vi);
        sum += (ui + vi) * (ui + vi);
    }
    (2.0 * diff.sqrt().atan2(sum.sqrt())).clamp(0.0, PI)
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// Spectral angle in radians, in `[0, pi]`.
pub fn spectral_angle(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    let (a, b) = (a.values(), b.values());
    check_lengths(a, b)?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let u: Vec<f64> = a.iter().map(|x| x / na).collect();
    Ok(angle_to_unit(&u, b, nb))
}

/// Mean-centred copy and its Euclidean norm.
fn centered(v: &[f64]) -> (Vec<f64>, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let c: Vec<f64> = v.iter().map(|x| x - mean).collect();
    let n = norm(&c);
    (c, n)
}

#[inline]
fn correlation(ref_centered: &[f64], ref_norm: f64, x: &[f64]) -> Option<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let (mut dot, mut sq) = (0.0, 0.0);
    for (&r, &xi) in ref_centered.iter().zip(x) {
        let d = xi - mean;
        dot += r * d;
        sq += d * d;
    }
    if sq == 0.0 {
        return None;
    }
    Some((dot / (ref_norm * sq.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation coefficient in `[-1, 1]`.
pub fn pcc(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    let (a, b) = (a.values(), b.values());
    check_lengths(a, b)?;
    if a.len() < 2 {
        return Err(Error::SpectrumTooShort(a.len()));
    }
    let (ca, na) = centered(a);
    if na == 0.0 {
        return Err(Error::ZeroVariance);
    }
    correlation(&ca, na, b).ok_or(Error::ZeroVariance)
}

/// Equalization bin count used by [`ScfKind::SaEqualized`] unless configured.
pub const DEFAULT_EQUALIZATION_BINS: usize = 256;

/// Click-aggregated similarity map.
pub fn scf_map(cube: &HyperCube, clicks: &ClickSet, kind: ScfKind) -> Result<ScoreMap> {
    scf_map_with_bins(cube, clicks, kind, DEFAULT_EQUALIZATION_BINS)
}

pub fn scf_map_with_bins(
    cube: &HyperCube,
    clicks: &ClickSet,
    kind: ScfKind,
    bins: usize,
) -> Result<ScoreMap> {
    if clicks.is_empty() {
        return Err(Error::EmptyClicks);
    }
    clicks.check_bounds(cube.height(), cube.width())?;
    match kind {
        ScfKind::Sa => sa_map(cube, clicks),
        ScfKind::Pcc => pcc_map(cube, clicks),
        ScfKind::SaEqualized => {
            let sa = sa_map(cube, clicks)?;
            Ok(imgproc::histogram_equalize(&sa, bins))
        }
    }
}

fn reference(cube: &HyperCube, (r, c): Pixel) -> &[f64] {
    cube.pixel(r * cube.width() + c)
}

fn sa_map(cube: &HyperCube, clicks: &ClickSet) -> Result<ScoreMap> {
    let refs = clicks
        .points()
        .iter()
        .map(|&p| {
            let s = reference(cube, p);
            let n = norm(s);
            if n == 0.0 {
                return Err(Error::ZeroNorm);
            }
            Ok(s.iter().map(|x| x / n).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let scores = (0..cube.pixel_count())
        .into_par_iter()
        .map(|i| {
            let x = cube.pixel(i);
            let nx = norm(x);
            if nx == 0.0 {
                // dead pixel: maximally dissimilar
                return 0.0;
            }
            refs.iter()
                .map(|u| 1.0 - angle_to_unit(u, x, nx) / PI)
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(ScoreMap::from_raw(cube.height(), cube.width(), scores))
}

fn pcc_map(cube: &HyperCube, clicks: &ClickSet) -> Result<ScoreMap> {
    if cube.bands() < 2 {
        return Err(Error::SpectrumTooShort(cube.bands()));
    }
    let refs = clicks
        .points()
        .iter()
        .map(|&p| {
            let (c, n) = centered(reference(cube, p));
            if n == 0.0 {
                return Err(Error::ZeroVariance);
            }
            Ok((c, n))
        })
        .collect::<Result<Vec<_>>>()?;
    let scores = (0..cube.pixel_count())
        .into_par_iter()
        .map(|i| {
            let x = cube.pixel(i);
            refs.iter()
                .map(|(c, n)| {
                    // constant pixel spectra are uncorrelated with anything
                    let rho = correlation(c, *n, x).unwrap_or(0.0);
                    ((rho + 1.0) / 2.0).clamp(0.0, 1.0)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    Ok(ScoreMap::from_raw(cube.height(), cube.width(), scores))
}
