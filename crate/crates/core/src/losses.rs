//! Interactive training objective as pure functions: soft Dice, binary
//! cross-entropy, their convex combination, and the mean over the steps of
//! a click session. All reductions are over valid pixels only.

use serde::{Deserialize, Serialize};

use crate::imgproc::BinaryMask;
use crate::scf::ScoreMap;
use crate::{Error, Result};

pub const DEFAULT_DICE_EPSILON: f64 = 1.0;
pub const DEFAULT_BCE_CLAMP: f64 = 1e-7;
pub const DEFAULT_LAMBDA: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub dice_loss: f64,
    pub bce_loss: f64,
    pub combined: f64,
    pub lambda: f64,
}

fn check(probs: &ScoreMap, target: &BinaryMask, valid: &BinaryMask) -> Result<()> {
    target.check_same(valid)?;
    if probs.dims() != target.dims() {
        return Err(Error::DimensionMismatch {
            expected: target.dims(),
            actual: probs.dims(),
        });
    }
    Ok(())
}

fn valid_pairs<'a>(
    probs: &'a ScoreMap,
    target: &'a BinaryMask,
    valid: &'a BinaryMask,
) -> impl Iterator<Item = (f64, f64)> + 'a {
    probs
        .scores()
        .iter()
        .zip(target.values())
        .zip(valid.values())
        .filter(|(_, &v)| v)
        .map(|((&p, &g), _)| (p, if g { 1.0 } else { 0.0 }))
}

/// `1 - (2 sum(p g) + eps) / (sum(p) + sum(g) + eps)`.
pub fn soft_dice_loss(
    probs: &ScoreMap,
    target: &BinaryMask,
    valid: &BinaryMask,
    epsilon: f64,
) -> Result<f64> {
    check(probs, target, valid)?;
    let (mut inter, mut sp, mut sg) = (0.0, 0.0, 0.0);
    for (p, g) in valid_pairs(probs, target, valid) {
        inter += p * g;
        sp += p;
        sg += g;
    }
    Ok(1.0 - (2.0 * inter + epsilon) / (sp + sg + epsilon))
}

/// Mean binary cross-entropy with probabilities clamped to
/// `[clamp, 1 - clamp]`. An empty valid set yields 0.
pub fn bce_loss(
    probs: &ScoreMap,
    target: &BinaryMask,
    valid: &BinaryMask,
    clamp: f64,
) -> Result<f64> {
    check(probs, target, valid)?;
    let (mut sum, mut n) = (0.0, 0usize);
    for (p, g) in valid_pairs(probs, target, valid) {
        let p = p.clamp(clamp, 1.0 - clamp);
        sum -= g * p.ln() + (1.0 - g) * (1.0 - p).ln();
        n += 1;
    }
    Ok(if n == 0 { 0.0 } else { sum / n as f64 })
}

pub fn combine(dice_loss: f64, bce_loss: f64, lambda: f64) -> Result<LossBreakdown> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda {lambda} outside [0, 1]"
        )));
    }
    Ok(LossBreakdown {
        dice_loss,
        bce_loss,
        combined: lambda * dice_loss + (1.0 - lambda) * bce_loss,
        lambda,
    })
}

/// `lambda * dice + (1 - lambda) * bce` with the default smoothing and clamp.
pub fn combined_loss(
    probs: &ScoreMap,
    target: &BinaryMask,
    valid: &BinaryMask,
    lambda: f64,
) -> Result<LossBreakdown> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda {lambda} outside [0, 1]"
        )));
    }
    let d = soft_dice_loss(probs, target, valid, DEFAULT_DICE_EPSILON)?;
    let b = bce_loss(probs, target, valid, DEFAULT_BCE_CLAMP)?;
    combine(d, b, lambda)
}

/// Mean combined loss over the steps of one session.
pub fn session_mean_loss(per_step: &[LossBreakdown]) -> Result<f64> {
    if per_step.is_empty() {
        return Err(Error::Empty("per-step losses"));
    }
    Ok(per_step.iter().map(|l| l.combined).sum::<f64>() / per_step.len() as f64)
}
