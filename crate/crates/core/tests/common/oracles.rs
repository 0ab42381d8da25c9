//! Reference implementations used to cross-check the library. They are
//! deliberately naive and share no code with the paths they check.
#![allow(dead_code)]

use std::collections::VecDeque;

use hsiseg::eval::dice;
use hsiseg::rng::CounterRng;
use hsiseg::{BinaryMask, Connectivity, ScoreMap};

pub fn random_mask(rng: &mut CounterRng, h: usize, w: usize, p_true: f64) -> BinaryMask {
    BinaryMask::from_fn(h, w, |_, _| rng.next_f64() < p_true)
}

/// BFS flood fill, numbering components by first encounter in a
/// row-major scan.
pub fn flood_fill(mask: &BinaryMask, conn: Connectivity) -> (Vec<u32>, Vec<usize>) {
    let (h, w) = mask.dims();
    let offsets: &[(isize, isize)] = match conn {
        Connectivity::Four => &[(-1, 0), (1, 0), (0, -1), (0, 1)],
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
    };
    let mut labels = vec![0u32; h * w];
    let mut sizes = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) || labels[r * w + c] != 0 {
                continue;
            }
            sizes.push(0);
            let id = sizes.len() as u32;
            let mut queue = VecDeque::from([(r, c)]);
            labels[r * w + c] = id;
            while let Some((y, x)) = queue.pop_front() {
                sizes[id as usize - 1] += 1;
                for &(dy, dx) in offsets {
                    let (ny, nx) = (y as isize + dy, x as isize + dx);
                    if ny < 0 || nx < 0 || ny >= h as isize || nx >= w as isize {
                        continue;
                    }
                    let (ny, nx) = (ny as usize, nx as usize);
                    if mask.get(ny, nx) && labels[ny * w + nx] == 0 {
                        labels[ny * w + nx] = id;
                        queue.push_back((ny, nx));
                    }
                }
            }
        }
    }
    (labels, sizes)
}

/// Squared distance to the nearest false pixel, scanning every false pixel
/// and the nearest point outside the image.
pub fn brute_force_sq_edt(mask: &BinaryMask) -> Vec<f64> {
    let (h, w) = mask.dims();
    let mut out = vec![0.0; h * w];
    for r in 0..h {
        for c in 0..w {
            if !mask.get(r, c) {
                continue;
            }
            let mut best = [
                (r + 1).pow(2),
                (h - r).pow(2),
                (c + 1).pow(2),
                (w - c).pow(2),
            ]
            .into_iter()
            .min()
            .unwrap();
            for y in 0..h {
                for x in 0..w {
                    if !mask.get(y, x) {
                        best = best.min(r.abs_diff(y).pow(2) + c.abs_diff(x).pow(2));
                    }
                }
            }
            out[r * w + c] = best as f64;
        }
    }
    out
}

/// Max Dice over tau in {0, 1/255, ..., 1} united with every score value.
pub fn grid_dice_at_max(scores: &ScoreMap, gt: &BinaryMask, valid: &BinaryMask) -> f64 {
    let mut taus: Vec<f64> = (0..=255).map(|k| k as f64 / 255.0).collect();
    taus.extend_from_slice(scores.scores());
    taus.into_iter()
        .map(|t| dice(&scores.threshold(t), gt, valid).unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn random_scores(rng: &mut CounterRng, h: usize, w: usize) -> ScoreMap {
    // coarse quantization forces ties
    let levels = 1 + rng.below(40);
    ScoreMap::new(
        h,
        w,
        (0..h * w)
            .map(|_| rng.below(levels + 1) as f64 / levels as f64)
            .collect(),
    )
    .unwrap()
}
