//! Dice metrics and the simulated-user interactive evaluation protocol.
//!
//! For every `(image, class)` pair the simulated user places a first click
//! at the interior-most pixel of the largest connected component of the
//! class mask `F`, then repeatedly clicks the foreground pixel the backend
//! scores lowest. Each step records Dice at a fixed threshold and the best
//! Dice over all thresholds.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backends::SegmentationBackend;
use crate::hsi::{HyperCube, LabelMap, PseudoRgb};
use crate::imgproc::{largest_component_center, BinaryMask, Connectivity};
use crate::scf::{ClickSet, Pixel, ScoreMap};
use crate::{Error, Result};

/// How DICE@Max searches thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSweep {
    /// Every distinct score is tried as a cut point.
    #[default]
    Exact,
    /// `tau` in `{0, 1/n, ..., 1}`.
    Grid(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub max_clicks: usize,
    pub threshold: f64,
    pub ignore_index: u32,
    pub threshold_sweep: ThresholdSweep,
    pub connectivity: Connectivity,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            max_clicks: 5,
            threshold: 0.5,
            ignore_index: 255,
            threshold_sweep: ThresholdSweep::Exact,
            connectivity: Connectivity::Four,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_clicks == 0 {
            return Err(Error::InvalidParameter(
                "max_clicks must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidParameter(format!(
                "threshold {} outside [0, 1]",
                self.threshold
            )));
        }
        if self.threshold_sweep == ThresholdSweep::Grid(0) {
            return Err(Error::InvalidParameter(
                "threshold grid needs at least 1 step".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of one interaction step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub dice_at_tau: f64,
    pub dice_at_max: f64,
    pub best_tau: f64,
    /// Click added at this step; `None` once every foreground pixel has been
    /// clicked.
    pub click: Option<Pixel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn dice(&self) -> f64 {
        dice_from_counts(self.tp, self.fp, self.fn_)
    }
}

/// `2TP / (2TP + FP + FN)`, with the empty/empty case defined as 1.
pub fn dice_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        return 1.0;
    }
    (2 * tp) as f64 / denom as f64
}

fn check_dims(a: &BinaryMask, b: &BinaryMask, valid: &BinaryMask) -> Result<()> {
    a.check_same(b)?;
    a.check_same(valid)
}

pub fn confusion(pred: &BinaryMask, gt: &BinaryMask, valid: &BinaryMask) -> Result<Confusion> {
    check_dims(pred, gt, valid)?;
    let mut c = Confusion::default();
    for ((&p, &g), &v) in pred.values().iter().zip(gt.values()).zip(valid.values()) {
        if !v {
            continue;
        }
        match (p, g) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(c)
}

/// Dice over valid pixels; 1.0 when both masks are empty there.
pub fn dice(pred: &BinaryMask, gt: &BinaryMask, valid: &BinaryMask) -> Result<f64> {
    Ok(confusion(pred, gt, valid)?.dice())
}

/// Dice via set overlap and F1 via precision/recall, computed independently.
pub fn dice_f1_check(pred: &BinaryMask, gt: &BinaryMask, valid: &BinaryMask) -> Result<(f64, f64)> {
    check_dims(pred, gt, valid)?;
    let p = pred.and(valid)?;
    let g = gt.and(valid)?;
    let (np, ng) = (p.count(), g.count());
    let overlap = p.and(&g)?.count();
    let dice = if np + ng == 0 {
        1.0
    } else {
        2.0 * overlap as f64 / (np + ng) as f64
    };

    let c = confusion(pred, gt, valid)?;
    let f1 = if c.tp == 0 {
        if c.fp + c.fn_ == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        let precision = c.tp as f64 / (c.tp + c.fp) as f64;
        let recall = c.tp as f64 / (c.tp + c.fn_) as f64;
        2.0 * precision * recall / (precision + recall)
    };
    Ok((dice, f1))
}

fn check_scores(scores: &ScoreMap, gt: &BinaryMask, valid: &BinaryMask) -> Result<()> {
    gt.check_same(valid)?;
    if scores.dims() != gt.dims() {
        return Err(Error::DimensionMismatch {
            expected: gt.dims(),
            actual: scores.dims(),
        });
    }
    Ok(())
}

/// Maximum over `tau` of `dice({scores > tau}, gt, valid)`.
///
/// Valid pixels are sorted by descending score and every distinct score is
/// tried as a cut point, plus `tau = 0`. Returns `(dice, best_tau)` where
/// `best_tau` is the largest candidate reaching the maximum.
pub fn dice_at_max(scores: &ScoreMap, gt: &BinaryMask, valid: &BinaryMask) -> Result<(f64, f64)> {
    check_scores(scores, gt, valid)?;
    let mut px: Vec<(f64, bool)> = scores
        .scores()
        .iter()
        .zip(gt.values())
        .zip(valid.values())
        .filter(|(_, &v)| v)
        .map(|((&s, &g), _)| (s, g))
        .collect();
    px.sort_by(|a, b| b.0.total_cmp(&a.0));
    let positives = px.iter().filter(|(_, g)| *g).count();

    let mut best = (f64::NEG_INFINITY, 0.0);
    let mut consider = |d: f64, tau: f64| {
        if d > best.0 || (d == best.0 && tau > best.1) {
            best = (d, tau);
        }
    };

    // tau = 0 keeps every strictly positive score
    if px.last().is_none_or(|&(s, _)| s > 0.0) {
        consider(dice_from_counts(positives, px.len() - positives, 0), 0.0);
    }

    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < px.len() {
        let value = px[i].0;
        // prediction {s > value} = everything before this group
        consider(dice_from_counts(tp, fp, positives - tp), value);
        while i < px.len() && px[i].0 == value {
            if px[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
    }
    Ok(best)
}

/// DICE@Max restricted to `tau` in `{0, 1/steps, ..., 1}`.
pub fn dice_at_max_grid(
    scores: &ScoreMap,
    gt: &BinaryMask,
    valid: &BinaryMask,
    steps: u32,
) -> Result<(f64, f64)> {
    check_scores(scores, gt, valid)?;
    let steps = steps.max(1);
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=steps {
        let tau = k as f64 / steps as f64;
        let d = dice(&scores.threshold(tau), gt, valid)?;
        if d > best.0 || (d == best.0 && tau > best.1) {
            best = (d, tau);
        }
    }
    Ok(best)
}

/// Lowest-scoring foreground pixel not yet clicked (ties: row, then col).
pub fn next_click(scores: &ScoreMap, fg: &BinaryMask, clicks: &ClickSet) -> Result<Pixel> {
    if scores.dims() != fg.dims() {
        return Err(Error::DimensionMismatch {
            expected: fg.dims(),
            actual: scores.dims(),
        });
    }
    let w = fg.width();
    let mut best: Option<(f64, usize)> = None;
    for (i, (&s, &f)) in scores.scores().iter().zip(fg.values()).enumerate() {
        if !f || clicks.contains((i / w, i % w)) {
            continue;
        }
        if best.is_none_or(|(bs, _)| s.total_cmp(&bs) == Ordering::Less) {
            best = Some((s, i));
        }
    }
    best.map(|(_, i)| (i / w, i % w))
        .ok_or(Error::ForegroundExhausted)
}

fn step_metrics(
    scores: &ScoreMap,
    fg: &BinaryMask,
    valid: &BinaryMask,
    config: &EvalConfig,
) -> Result<(f64, f64, f64)> {
    let at_tau = dice(&scores.threshold(config.threshold), fg, valid)?;
    let (at_max, best_tau) = match config.threshold_sweep {
        ThresholdSweep::Exact => dice_at_max(scores, fg, valid)?,
        ThresholdSweep::Grid(n) => dice_at_max_grid(scores, fg, valid, n)?,
    };
    Ok((at_tau, at_max, best_tau))
}

/// Runs one simulated interactive session of `config.max_clicks` steps.
pub fn simulate_session(
    backend: &dyn SegmentationBackend,
    cube: &HyperCube,
    rgb: &PseudoRgb,
    fg: &BinaryMask,
    valid: &BinaryMask,
    config: &EvalConfig,
) -> Result<Vec<StepRecord>> {
    config.validate()?;
    fg.check_same(valid)?;
    if fg.dims() != cube.dims() {
        return Err(Error::DimensionMismatch {
            expected: cube.dims(),
            actual: fg.dims(),
        });
    }
    if !fg.and(valid)?.any() {
        return Err(Error::EmptyMask);
    }

    let first = largest_component_center(fg, config.connectivity)?;
    let mut clicks = ClickSet::single(first.0, first.1);
    let mut added = Some(first);
    let mut records = Vec::with_capacity(config.max_clicks);
    for step in 1..=config.max_clicks {
        let scores = backend
            .segment(cube, rgb, &clicks)
            .and_then(|s| {
                if s.dims() != fg.dims() {
                    return Err(Error::DimensionMismatch {
                        expected: fg.dims(),
                        actual: s.dims(),
                    });
                }
                Ok(s)
            })
            .map_err(|e| Error::Backend {
                step,
                source: Box::new(e),
            })?;
        let (dice_at_tau, dice_at_max, best_tau) = step_metrics(&scores, fg, valid, config)?;
        records.push(StepRecord {
            step,
            dice_at_tau,
            dice_at_max,
            best_tau,
            click: added,
        });
        if step < config.max_clicks {
            added = match next_click(&scores, fg, &clicks) {
                Ok(p) => {
                    clicks.push(p)?;
                    Some(p)
                }
                Err(Error::ForegroundExhausted) => None,
                Err(e) => return Err(e),
            };
        }
    }
    Ok(records)
}

/// One image of an evaluation dataset.
#[derive(Debug, Clone)]
pub struct DatasetItem {
    pub id: String,
    pub cube: HyperCube,
    pub labels: LabelMap,
    pub rgb: PseudoRgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub image: String,
    pub class: u32,
    pub foreground_pixels: usize,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepAggregate {
    pub step: usize,
    pub mean_dice_at_tau: f64,
    pub mean_dice_at_max: f64,
    pub n_tasks: usize,
}

/// Headline numbers: Dice at the configured threshold after 1 and 5
/// clicks and DICE@Max after 1 click.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub method: String,
    pub dataset: String,
    pub dice_at_tau_1c: f64,
    pub dice_at_max_1c: f64,
    pub dice_at_tau_5c: Option<f64>,
    pub n_tasks: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub dataset: String,
    pub config: EvalConfig,
    pub aggregates: Vec<StepAggregate>,
    pub tasks: Vec<TaskRecord>,
}

impl EvalReport {
    /// Builds aggregates from task records. Tasks are sorted by
    /// `(image, class)` first so the result does not depend on the order
    /// they were produced in.
    pub fn from_tasks(
        method: impl Into<String>,
        dataset: impl Into<String>,
        config: EvalConfig,
        mut tasks: Vec<TaskRecord>,
    ) -> Self {
        tasks.sort_by(|a, b| a.image.cmp(&b.image).then(a.class.cmp(&b.class)));
        let max_steps = tasks.iter().map(|t| t.steps.len()).max().unwrap_or(0);
        let aggregates = (0..max_steps)
            .map(|k| {
                let (mut tau_sum, mut max_sum, mut n) = (0.0, 0.0, 0usize);
                for t in &tasks {
                    if let Some(r) = t.steps.get(k) {
                        tau_sum += r.dice_at_tau;
                        max_sum += r.dice_at_max;
                        n += 1;
                    }
                }
                StepAggregate {
                    step: k + 1,
                    mean_dice_at_tau: tau_sum / n as f64,
                    mean_dice_at_max: max_sum / n as f64,
                    n_tasks: n,
                }
            })
            .collect();
        Self {
            method: method.into(),
            dataset: dataset.into(),
            config,
            aggregates,
            tasks,
        }
    }

    pub fn step(&self, k: usize) -> Option<&StepAggregate> {
        self.aggregates.get(k.checked_sub(1)?)
    }

    pub fn summary(&self) -> SummaryRow {
        SummaryRow {
            method: self.method.clone(),
            dataset: self.dataset.clone(),
            dice_at_tau_1c: self.step(1).map_or(f64::NAN, |s| s.mean_dice_at_tau),
            dice_at_max_1c: self.step(1).map_or(f64::NAN, |s| s.mean_dice_at_max),
            dice_at_tau_5c: self.step(5).map(|s| s.mean_dice_at_tau),
            n_tasks: self.tasks.len(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Summary as CSV with columns
    /// `method,dataset,dice@0.5_1c,dice@max_1c,dice@0.5_5c,n_tasks`.
    pub fn to_csv(&self) -> String {
        summary_csv(std::slice::from_ref(&self.summary()))
    }
}

pub const CSV_HEADER: [&str; 6] = [
    "method",
    "dataset",
    "dice@0.5_1c",
    "dice@max_1c",
    "dice@0.5_5c",
    "n_tasks",
];

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.dataset.clone(),
            format!("{:.5}", r.dice_at_tau_1c),
            format!("{:.5}", r.dice_at_max_1c),
            r.dice_at_tau_5c
                .map(|v| format!("{v:.5}"))
                .unwrap_or_default(),
            r.n_tasks.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
}

struct Task<'a> {
    item: &'a DatasetItem,
    class: u32,
    fg: BinaryMask,
    valid: BinaryMask,
}

/// Runs one session per `(image, class)` pair with at least one labeled
/// foreground pixel, using up to `jobs` worker threads.
pub fn evaluate_dataset(
    backend: &dyn SegmentationBackend,
    dataset: &[DatasetItem],
    dataset_name: &str,
    config: &EvalConfig,
    jobs: usize,
) -> Result<EvalReport> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut tasks = Vec::new();
    for item in dataset {
        item.labels.validate_against(&item.cube)?;
        let (h, w) = item.labels.dims();
        let labels = item.labels.labels();
        let valid = BinaryMask::new(
            h,
            w,
            labels.iter().map(|&l| l != config.ignore_index).collect(),
        )?;
        let classes: std::collections::BTreeSet<u32> = labels
            .iter()
            .copied()
            .filter(|&l| l != config.ignore_index)
            .collect();
        for class in classes {
            let fg = BinaryMask::new(h, w, labels.iter().map(|&l| l == class).collect())?;
            tasks.push(Task {
                item,
                class,
                fg,
                valid: valid.clone(),
            });
        }
    }
    if tasks.is_empty() {
        return Err(Error::NoTasks);
    }

    let run = |t: &Task| -> Result<TaskRecord> {
        let steps = simulate_session(backend, &t.item.cube, &t.item.rgb, &t.fg, &t.valid, config)
            .map_err(|e| Error::Task {
            image: t.item.id.clone(),
            class: t.class,
            source: Box::new(e),
        })?;
        Ok(TaskRecord {
            image: t.item.id.clone(),
            class: t.class,
            foreground_pixels: t.fg.count(),
            steps,
        })
    };
    let results: Vec<Result<TaskRecord>> = if jobs <= 1 {
        tasks.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
        pool.install(|| tasks.par_iter().map(run).collect())
    };
    let records = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(EvalReport::from_tasks(
        backend.name(),
        dataset_name,
        *config,
        records,
    ))
}
