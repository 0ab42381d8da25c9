//! Image kernels: histogram equalization, connected components, exact
//! Euclidean distance transform and bilinear resizing.

use serde::{Deserialize, Serialize};

use crate::scf::{Pixel, ScoreMap};
use crate::{Error, Result};

/// `H x W` boolean mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize, values: Vec<bool>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::LengthMismatch(height * width, values.len()));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub(crate) fn from_raw(height: usize, width: usize, values: Vec<bool>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        Self {
            height,
            width,
            values,
        }
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Self {
        Self::from_raw(height, width, vec![value; height * width])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut values = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                values.push(f(r, c));
            }
        }
        Self::from_raw(height, width, values)
    }

    pub fn from_pixels(height: usize, width: usize, pixels: &[Pixel]) -> Result<Self> {
        let mut m = Self::filled(height, width, false);
        for &(r, c) in pixels {
            if r >= height || c >= width {
                return Err(Error::OutOfBounds {
                    row: r,
                    col: c,
                    height,
                    width,
                });
            }
            m.values[r * width + c] = true;
        }
        Ok(m)
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

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.values[row * self.width + col]
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn any(&self) -> bool {
        self.values.iter().any(|&v| v)
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.check_same(other)?;
        Ok(Self::from_raw(
            self.height,
            self.width,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a && *b)
                .collect(),
        ))
    }

    pub fn check_same(&self, other: &BinaryMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Connectivity {
    #[default]
    #[serde(rename = "4")]
    Four,
    #[serde(rename = "8")]
    Eight,
}

impl Connectivity {
    /// Neighbours already visited in a row-major scan.
    fn backward_offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &[(-1, 0), (0, -1)],
            Connectivity::Eight => &[(-1, -1), (-1, 0), (-1, 1), (0, -1)],
        }
    }
}

/// Connected components of a mask. Label 0 is background; components are
/// numbered from 1 in order of first encounter in a row-major scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentLabeling {
    pub height: usize,
    pub width: usize,
    pub labels: Vec<u32>,
    /// `sizes[k]` is the pixel count of component `k + 1`.
    pub sizes: Vec<usize>,
}

impl ComponentLabeling {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }

    pub fn label_at(&self, row: usize, col: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    /// Largest component label; ties go to the smaller label.
    pub fn largest(&self) -> Option<u32> {
        let mut best: Option<(usize, u32)> = None;
        for (i, &s) in self.sizes.iter().enumerate() {
            if best.is_none_or(|(bs, _)| s > bs) {
                best = Some((s, i as u32 + 1));
            }
        }
        best.map(|(_, l)| l)
    }

    pub fn component_mask(&self, label: u32) -> BinaryMask {
        BinaryMask::from_raw(
            self.height,
            self.width,
            self.labels.iter().map(|&l| l == label).collect(),
        )
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Two-pass union-find labeling.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> ComponentLabeling {
    let (h, w) = mask.dims();
    let mut provisional = vec![0usize; h * w];
    // parent[0] is unused so provisional labels start at 1
    let mut parent: Vec<usize> = vec![0];
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) {
                continue;
            }
            let mut current = 0usize;
            for &(dr, dc) in connectivity.backward_offsets() {
                let (nr, nc) = (r as isize + dr, c as isize + dc);
                if nr < 0 || nc < 0 || nc >= w as isize {
                    continue;
                }
                let n = provisional[nr as usize * w + nc as usize];
                if n == 0 {
                    continue;
                }
                if current == 0 {
                    current = find(&mut parent, n);
                } else {
                    let (a, b) = (find(&mut parent, current), find(&mut parent, n));
                    if a != b {
                        let (lo, hi) = (a.min(b), a.max(b));
                        parent[hi] = lo;
                        current = lo;
                    }
                }
            }
            if current == 0 {
                current = parent.len();
                parent.push(current);
            }
            provisional[r * w + c] = current;
        }
    }

    let mut remap = vec![0u32; parent.len()];
    let mut labels = vec![0u32; h * w];
    let mut sizes = Vec::new();
    for (i, &p) in provisional.iter().enumerate() {
        if p == 0 {
            continue;
        }
        let root = find(&mut parent, p);
        if remap[root] == 0 {
            sizes.push(0);
            remap[root] = sizes.len() as u32;
        }
        let l = remap[root];
        labels[i] = l;
        sizes[l as usize - 1] += 1;
    }
    ComponentLabeling {
        height: h,
        width: w,
        labels,
        sizes,
    }
}

/// Lower envelope of parabolas rooted at `(q, f[q])`; writes
/// `min_q (i - q)^2 + f[q]` into `out`. Infinite samples are skipped.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    let n = f.len();
    v.clear();
    z.clear();
    for q in 0..n {
        if !f[q].is_finite() {
            continue;
        }
        let fq = f[q] + (q * q) as f64;
        loop {
            match v.last() {
                None => {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
                Some(&p) => {
                    let s = (fq - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
                    if s <= *z.last().unwrap() {
                        v.pop();
                        z.pop();
                    } else {
                        v.push(q);
                        z.push(s);
                        break;
                    }
                }
            }
        }
    }
    if v.is_empty() {
        out.fill(f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (i, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < i as f64 {
            k += 1;
        }
        let d = i as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance from each true pixel to the nearest false
/// pixel, with everything outside the image treated as false.
pub fn squared_distance_transform(mask: &BinaryMask) -> Vec<f64> {
    let (h, w) = mask.dims();
    let (ph, pw) = (h + 2, w + 2);
    let mut grid = vec![0.0f64; ph * pw];
    for r in 0..h {
        for c in 0..w {
            if mask.get(r, c) {
                grid[(r + 1) * pw + c + 1] = f64::INFINITY;
            }
        }
    }
    let (mut v, mut z) = (Vec::new(), Vec::new());
    let mut col_in = vec![0.0; ph];
    let mut col_out = vec![0.0; ph];
    for c in 0..pw {
        for r in 0..ph {
            col_in[r] = grid[r * pw + c];
        }
        edt_1d(&col_in, &mut col_out, &mut v, &mut z);
        for r in 0..ph {
            grid[r * pw + c] = col_out[r];
        }
    }
    let mut row_out = vec![0.0; pw];
    let mut out = Vec::with_capacity(h * w);
    for r in 1..=h {
        let row = &grid[r * pw..(r + 1) * pw];
        edt_1d(row, &mut row_out, &mut v, &mut z);
        out.extend_from_slice(&row_out[1..=w]);
    }
    out
}

/// Exact Euclidean distance transform; false pixels map to 0.
pub fn distance_transform(mask: &BinaryMask) -> Vec<f64> {
    squared_distance_transform(mask)
        .into_iter()
        .map(f64::sqrt)
        .collect()
}

/// Interior-most pixel of the largest connected component.
///
/// The largest component is chosen by size (ties: lowest label); within it
/// the pixel furthest from the component boundary wins, ties broken by
/// smallest row, then column.
pub fn largest_component_center(mask: &BinaryMask, connectivity: Connectivity) -> Result<Pixel> {
    let labeling = connected_components(mask, connectivity);
    let label = labeling.largest().ok_or(Error::EmptyMask)?;
    let component = labeling.component_mask(label);
    let dist = squared_distance_transform(&component);
    let mut best: Option<(f64, usize)> = None;
    for (i, &d) in dist.iter().enumerate() {
        if !component.values()[i] {
            continue;
        }
        if best.is_none_or(|(bd, _)| d > bd) {
            best = Some((d, i));
        }
    }
    let (_, i) = best.expect("largest component is non-empty");
    Ok((i / mask.width(), i % mask.width()))
}

/// Histogram equalization over `bins` uniform bins spanning the map's
/// `[min, max]`. Constant maps are returned unchanged.
pub fn histogram_equalize(map: &ScoreMap, bins: usize) -> ScoreMap {
    let bins = bins.max(1);
    let scores = map.scores();
    let (lo, hi) = scores
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if hi <= lo {
        return map.clone();
    }
    let bin_of = |v: f64| (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1);
    let mut cdf = vec![0usize; bins];
    for &v in scores {
        cdf[bin_of(v)] += 1;
    }
    for i in 1..bins {
        cdf[i] += cdf[i - 1];
    }
    let n = scores.len();
    let cdf_min = cdf.iter().copied().find(|&c| c > 0).unwrap_or(0);
    if n == cdf_min {
        return map.clone();
    }
    let denom = (n - cdf_min) as f64;
    let out = scores
        .iter()
        .map(|&v| (cdf[bin_of(v)] - cdf_min) as f64 / denom)
        .collect();
    ScoreMap::from_raw(map.height(), map.width(), out)
}

/// Bilinear resize with corner-aligned sampling.
pub fn resize_bilinear(map: &ScoreMap, out_h: usize, out_w: usize) -> Result<ScoreMap> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidDimensions(format!(
            "resize target must be positive, got {out_h}x{out_w}"
        )));
    }
    let (h, w) = map.dims();
    if (h, w) == (out_h, out_w) {
        return Ok(map.clone());
    }
    let coord = |i: usize, n_in: usize, n_out: usize| -> (usize, usize, f64) {
        if n_out == 1 || n_in == 1 {
            return (0, 0, 0.0);
        }
        let x = i as f64 * (n_in - 1) as f64 / (n_out - 1) as f64;
        let i0 = (x.floor() as usize).min(n_in - 1);
        let i1 = (i0 + 1).min(n_in - 1);
        (i0, i1, x - i0 as f64)
    };
    let mut out = Vec::with_capacity(out_h * out_w);
    for r in 0..out_h {
        let (r0, r1, ty) = coord(r, h, out_h);
        for c in 0..out_w {
            let (c0, c1, tx) = coord(c, w, out_w);
            let (a, b, cc, d) = (
                map.get(r0, c0),
                map.get(r0, c1),
                map.get(r1, c0),
                map.get(r1, c1),
            );
            let top = a * (1.0 - tx) + b * tx;
            let bottom = cc * (1.0 - tx) + d * tx;
            let v = top * (1.0 - ty) + bottom * ty;
            let lo = a.min(b).min(cc).min(d);
            let hi = a.max(b).max(cc).max(d);
            out.push(v.clamp(lo, hi));
        }
    }
    Ok(ScoreMap::from_raw(out_h, out_w, out))
}
