//! Deterministic synthetic hyperspectral scenes with ground truth.
//!
//! Each material has a base spectrum built from 1 to 3 Gaussian bumps on a
//! small positive baseline; base spectra are redrawn until every pair is at
//! least [`MIN_PAIRWISE_ANGLE`] radians apart. Pixels are assigned to
//! materials by nearest seed site, then receive the base spectrum scaled by
//! a brightness factor in `[0.5, 1.5]` plus Gaussian noise, clamped at 0.
//!
//! Random streams (see [`crate::rng`]): stream 0 draws spectra, stream 1
//! draws seed sites, and pixel `i` uses stream `2 + i`.

use serde::{Deserialize, Serialize};

use crate::hsi::{HyperCube, LabelMap};
use crate::rng::CounterRng;
use crate::{Error, Result};

pub const MIN_PAIRWISE_ANGLE: f64 = 0.15;
const BASELINE: f64 = 0.02;
const MAX_SPECTRUM_ATTEMPTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum RegionStyle {
    /// One Voronoi cell per material.
    #[default]
    Voronoi,
    /// Three Voronoi sites per material, giving fragmented regions.
    Blobs,
}

impl std::str::FromStr for RegionStyle {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "voronoi" => Ok(RegionStyle::Voronoi),
            "blobs" => Ok(RegionStyle::Blobs),
            other => Err(format!(
                "unknown region style {other:?} (expected voronoi or blobs)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub n_materials: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    #[serde(default)]
    pub region_style: RegionStyle,
    #[serde(default = "default_true")]
    pub brightness_jitter: bool,
}

fn default_true() -> bool {
    true
}

impl Default for PhantomSpec {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            bands: 32,
            n_materials: 3,
            noise_sigma: 0.01,
            seed: 0,
            region_style: RegionStyle::Voronoi,
            brightness_jitter: true,
        }
    }
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.height == 0 || self.width == 0 {
            return bad(format!(
                "phantom size must be positive, got {}x{}",
                self.height, self.width
            ));
        }
        if self.bands < 2 {
            return bad(format!(
                "phantom needs at least 2 bands, got {}",
                self.bands
            ));
        }
        if self.n_materials < 2 {
            return bad(format!(
                "phantom needs at least 2 materials, got {}",
                self.n_materials
            ));
        }
        if self.n_materials > self.height * self.width {
            return bad(format!(
                "{} materials do not fit in {} pixels",
                self.n_materials,
                self.height * self.width
            ));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return bad(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.noise_sigma
            ));
        }
        Ok(())
    }
}

fn angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot / (na * nb)).clamp(-1.0, 1.0).acos()
}

fn draw_spectrum(rng: &mut CounterRng, bands: usize) -> Vec<f64> {
    let n_bumps = 1 + rng.below(3);
    let mut s = vec![BASELINE; bands];
    for _ in 0..n_bumps {
        let center = rng.uniform(0.0, (bands - 1) as f64);
        let width = bands as f64 * rng.uniform(0.05, 0.25) + 0.5;
        let amp = rng.uniform(0.2, 1.0);
        for (b, v) in s.iter_mut().enumerate() {
            let d = b as f64 - center;
            *v += amp * (-d * d / (2.0 * width * width)).exp();
        }
    }
    s
}

/// Base spectra, one per material, pairwise at least
/// [`MIN_PAIRWISE_ANGLE`] apart.
pub fn base_spectra(spec: &PhantomSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let mut rng = CounterRng::new(spec.seed, 0);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(spec.n_materials);
    while out.len() < spec.n_materials {
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > MAX_SPECTRUM_ATTEMPTS {
                return Err(Error::InvalidParameter(format!(
                    "could not draw {} spectra {} rad apart with {} bands",
                    spec.n_materials, MIN_PAIRWISE_ANGLE, spec.bands
                )));
            }
            let s = draw_spectrum(&mut rng, spec.bands);
            if out.iter().all(|o| angle(o, &s) >= MIN_PAIRWISE_ANGLE) {
                out.push(s);
                break;
            }
        }
    }
    Ok(out)
}

fn regions(spec: &PhantomSpec) -> Vec<u32> {
    let (h, w, n) = (spec.height, spec.width, spec.n_materials);
    let n_sites = match spec.region_style {
        RegionStyle::Voronoi => n,
        RegionStyle::Blobs => (3 * n).min(h * w),
    };
    let mut rng = CounterRng::new(spec.seed, 1);
    let mut sites: Vec<(usize, usize)> = Vec::with_capacity(n_sites);
    while sites.len() < n_sites {
        let p = (rng.below(h), rng.below(w));
        if !sites.contains(&p) {
            sites.push(p);
        }
    }
    let mut labels = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let (mut best, mut best_d) = (0, usize::MAX);
            for (k, &(sr, sc)) in sites.iter().enumerate() {
                let d = r.abs_diff(sr).pow(2) + c.abs_diff(sc).pow(2);
                if d < best_d {
                    best = k;
                    best_d = d;
                }
            }
            labels.push((best % n) as u32);
        }
    }
    labels
}

/// Generates the cube and its label map.
pub fn generate(spec: &PhantomSpec) -> Result<(HyperCube, LabelMap)> {
    let spectra = base_spectra(spec)?;
    let labels = regions(spec);
    let bands = spec.bands;
    let mut data = Vec::with_capacity(labels.len() * bands);
    for (i, &l) in labels.iter().enumerate() {
        let mut rng = CounterRng::new(spec.seed, 2 + i as u64);
        let brightness = if spec.brightness_jitter {
            rng.uniform(0.5, 1.5)
        } else {
            1.0
        };
        for &base in &spectra[l as usize] {
            let noise = if spec.noise_sigma > 0.0 {
                spec.noise_sigma * rng.normal()
            } else {
                0.0
            };
            data.push((base * brightness + noise).max(0.0));
        }
    }
    let cube = HyperCube::new(spec.height, spec.width, bands, data)?;
    let labels = LabelMap::new(spec.height, spec.width, labels, u32::MAX)?;
    Ok((cube, labels))
}
