//! Segmentation backends.
//!
//! A backend maps `(cube, pseudo-RGB, clicks)` to a [`ScoreMap`] with the
//! cube's spatial dimensions. The built-in [`ScfBackend`] evaluates a
//! spectral comparison function; [`RemoteBackend`] forwards a
//! [`FusionInput`] to an HTTP service hosting a learned model.

pub mod mock;
mod remote;
pub mod wire;

pub use remote::{RemoteBackend, RemoteError};

use crate::hsi::{HyperCube, PseudoRgb};
use crate::imgproc::{histogram_equalize, resize_bilinear};
use crate::scf::{
    scf_map_with_bins, ClickSet, Pixel, ScfKind, ScoreMap, DEFAULT_EQUALIZATION_BINS,
};
use crate::{Error, Result};

/// Anything that turns clicks into a per-pixel foreground score.
///
/// Implementations must return a map with the cube's dimensions and values
/// in `[0, 1]`, and must be deterministic for fixed inputs.
pub trait SegmentationBackend: Send + Sync {
    fn name(&self) -> String;

    fn segment(&self, cube: &HyperCube, rgb: &PseudoRgb, clicks: &ClickSet) -> Result<ScoreMap>;
}

/// Spectral comparison function as a backend. Ignores the RGB input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScfBackend {
    pub kind: ScfKind,
    pub bins: usize,
}

impl ScfBackend {
    pub fn new(kind: ScfKind) -> Self {
        Self {
            kind,
            bins: DEFAULT_EQUALIZATION_BINS,
        }
    }
}

/// Shorthand for [`ScfBackend::new`].
pub fn scf_backend(kind: ScfKind) -> ScfBackend {
    ScfBackend::new(kind)
}

impl SegmentationBackend for ScfBackend {
    fn name(&self) -> String {
        self.kind.id().to_string()
    }

    fn segment(&self, cube: &HyperCube, _rgb: &PseudoRgb, clicks: &ClickSet) -> Result<ScoreMap> {
        scf_map_with_bins(cube, clicks, self.kind, self.bins)
    }
}

/// Input for a learned backend: the pseudo-RGB image, the equalized
/// spectral-angle prompt at RGB resolution, and the clicks in RGB
/// coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionInput {
    pub rgb: PseudoRgb,
    pub spectral_prompt: ScoreMap,
    pub clicks: ClickSet,
}

/// Maps a pixel between grids by corner-aligned proportional scaling,
/// rounded to the nearest pixel.
pub fn rescale_click(p: Pixel, from: (usize, usize), to: (usize, usize)) -> Pixel {
    let axis = |x: usize, n_from: usize, n_to: usize| -> usize {
        if n_from <= 1 || n_to <= 1 {
            return 0;
        }
        let y = (x as f64 * (n_to - 1) as f64 / (n_from - 1) as f64).round() as usize;
        y.min(n_to - 1)
    };
    (axis(p.0, from.0, to.0), axis(p.1, from.1, to.1))
}

pub fn build_fusion_input(
    cube: &HyperCube,
    rgb: &PseudoRgb,
    clicks: &ClickSet,
) -> Result<FusionInput> {
    if clicks.is_empty() {
        return Err(Error::EmptyClicks);
    }
    let sa = scf_map_with_bins(cube, clicks, ScfKind::Sa, DEFAULT_EQUALIZATION_BINS)?;
    let equalized = histogram_equalize(&sa, DEFAULT_EQUALIZATION_BINS);
    let spectral_prompt = resize_bilinear(&equalized, rgb.height(), rgb.width())?;
    let mut scaled = ClickSet::default();
    for &p in clicks.points() {
        let q = rescale_click(p, cube.dims(), rgb.dims());
        // downscaling can merge clicks; keep the first
        if !scaled.contains(q) {
            scaled.push(q)?;
        }
    }
    Ok(FusionInput {
        rgb: rgb.clone(),
        spectral_prompt,
        clicks: scaled,
    })
}
