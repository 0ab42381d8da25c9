//! Dataset directories: `<id>.hdr` cubes with optional `<id>_labels.hdr`
//! label rasters next to them.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use hsiseg::envi::{load_envi, load_labels_for};
use hsiseg::eval::DatasetItem;
use hsiseg::hsi::pseudo_rgb;
use hsiseg::phantom::{generate, PhantomSpec};
use hsiseg::{BandTriple, HyperCube, Normalization, PseudoRgb};

pub const LABEL_SUFFIX: &str = "_labels";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub id: String,
    pub cube_path: PathBuf,
    pub labels_path: Option<PathBuf>,
}

/// Lists cube headers in `dir`, sorted by id.
pub fn scan(dir: &Path) -> io::Result<Vec<DatasetEntry>> {
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("hdr") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if stem.ends_with(LABEL_SUFFIX) {
            continue;
        }
        let labels = dir.join(format!("{stem}{LABEL_SUFFIX}.hdr"));
        entries.push(DatasetEntry {
            id: stem.to_string(),
            cube_path: path.clone(),
            labels_path: labels.is_file().then_some(labels),
        });
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(entries)
}

pub fn render_rgb(cube: &HyperCube, bands: Option<BandTriple>) -> hsiseg::Result<PseudoRgb> {
    let bands = bands.unwrap_or_else(|| BandTriple::spread(cube.bands()));
    pseudo_rgb(cube, bands, Normalization::PerBandMinmax)
}

/// Loads every labeled cube in `dir`. Cubes without labels are skipped.
pub fn load_labeled(
    dir: &Path,
    bands: Option<BandTriple>,
    ignore_index: u32,
) -> anyhow::Result<Vec<DatasetItem>> {
    let entries =
        scan(dir).with_context(|| format!("cannot read dataset directory {}", dir.display()))?;
    let mut items = Vec::new();
    for e in entries {
        let Some(labels_path) = &e.labels_path else {
            log::warn!("skipping {}: no {LABEL_SUFFIX}.hdr label raster", e.id);
            continue;
        };
        let cube = load_envi(&e.cube_path)
            .with_context(|| format!("loading {}", e.cube_path.display()))?;
        let labels = load_labels_for(labels_path, ignore_index, &cube)
            .with_context(|| format!("loading {}", labels_path.display()))?;
        let rgb = render_rgb(&cube, bands).with_context(|| format!("pseudo-RGB for {}", e.id))?;
        items.push(DatasetItem {
            id: e.id,
            cube,
            labels,
            rgb,
        });
    }
    if items.is_empty() {
        bail!("no labeled cubes found in {}", dir.display());
    }
    Ok(items)
}

/// Nominal wavelengths, evenly spaced over 400-1000 nm.
pub fn nominal_wavelengths(bands: usize) -> Vec<f64> {
    let step = if bands > 1 {
        600.0 / (bands - 1) as f64
    } else {
        0.0
    };
    (0..bands).map(|i| 400.0 + step * i as f64).collect()
}

/// `count` default phantoms with seeds `seed, seed + 1, ...`.
pub fn phantom_suite(
    count: usize,
    seed: u64,
    bands: Option<BandTriple>,
) -> anyhow::Result<Vec<DatasetItem>> {
    (0..count)
        .map(|i| {
            let spec = PhantomSpec {
                seed: seed + i as u64,
                ..PhantomSpec::default()
            };
            let (cube, labels) = generate(&spec)?;
            let rgb = render_rgb(&cube, bands)?;
            Ok(DatasetItem {
                id: format!("phantom_{i:03}"),
                cube,
                labels,
                rgb,
            })
        })
        .collect()
}
