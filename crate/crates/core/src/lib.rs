//! Interactive segmentation toolkit for hyperspectral images.
//!
//! The crate is organised around a handful of data types ([`HyperCube`],
//! [`LabelMap`], [`ClickSet`], [`ScoreMap`]) and the operations that connect
//! them:
//!
//! * [`envi`] reads and writes ENVI rasters (bsq/bil/bip).
//! * [`scf`] computes click-conditioned spectral similarity maps
//!   (spectral angle, Pearson correlation, equalized spectral angle).
//! * [`imgproc`] holds the image kernels the rest of the crate leans on:
//!   histogram equalization, connected components, exact Euclidean distance
//!   transform and bilinear resizing.
//! * [`eval`] implements Dice metrics and the simulated-user click protocol.
//! * [`losses`] exposes the soft Dice / BCE training objective as pure
//!   functions.
//! * [`backends`] defines the [`SegmentationBackend`] contract, the built-in
//!   spectral backends, the fusion-input builder and the remote HTTP backend.
//! * [`phantom`] generates deterministic synthetic scenes with ground truth.

pub mod backends;
pub mod envi;
mod error;
pub mod eval;
pub mod hsi;
pub mod imgproc;
pub mod losses;
pub mod phantom;
pub mod rng;
pub mod scf;

pub use backends::{build_fusion_input, FusionInput, ScfBackend, SegmentationBackend};
pub use error::{Error, Result};
pub use eval::{EvalConfig, EvalReport, StepRecord};
pub use hsi::{BandTriple, HyperCube, LabelMap, Normalization, PseudoRgb, Spectrum};
pub use imgproc::{BinaryMask, ComponentLabeling, Connectivity};
pub use scf::{ClickSet, Pixel, ScfKind, ScoreMap};
