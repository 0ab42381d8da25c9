//! Acceptance suite: one check per headline property of the toolkit.
//! Each check prints a PASS/FAIL line; the test fails if any check fails.

#[path = "../../core/tests/common/oracles.rs"]
mod oracles;

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use hsiseg::backends::mock::{MockMode, MockServer};
use hsiseg::backends::{build_fusion_input, RemoteBackend, RemoteError};
use hsiseg::envi::{self, ByteOrder, DataType, Interleave, WriteOptions};
use hsiseg::eval::{dice, dice_at_max, dice_f1_check, evaluate_dataset, DatasetItem};
use hsiseg::hsi::pseudo_rgb;
use hsiseg::imgproc::{connected_components, squared_distance_transform};
use hsiseg::losses::{
    bce_loss, combine, combined_loss, soft_dice_loss, DEFAULT_BCE_CLAMP, DEFAULT_DICE_EPSILON,
    DEFAULT_LAMBDA,
};
use hsiseg::phantom::{generate, PhantomSpec, RegionStyle};
use hsiseg::rng::CounterRng;
use hsiseg::scf::{pcc, spectral_angle};
use hsiseg::{
    BandTriple, ClickSet, Connectivity, Error, EvalConfig, HyperCube, Normalization, PseudoRgb,
    ScfBackend, ScfKind, ScoreMap, SegmentationBackend, Spectrum,
};

type Check = Result<String, String>;
type Call = (Vec<(usize, usize)>, ScoreMap);
type Criterion = (&'static str, fn() -> Check);
type ErrorKindCheck = fn(&RemoteError) -> bool;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn report(n: usize, name: &str, outcome: &Check, elapsed: Duration) {
    let line = match outcome {
        Ok(detail) => format!("criterion {n:>2} PASS  {name}: {detail} [{:.2?}]", elapsed),
        Err(why) => format!("criterion {n:>2} FAIL  {name}: {why} [{:.2?}]", elapsed),
    };
    // written to the raw handle so it shows without --nocapture
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn spectral_identities() -> Check {
    let start = Instant::now();
    let mut rng = CounterRng::new(1001, 0);
    let (mut worst_sa, mut worst_pcc) = (0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let bands = 3 + rng.below(62);
        let x: Vec<f64> = (0..bands).map(|_| rng.uniform(0.0, 1.0)).collect();
        let c = rng.uniform(0.1, 10.0);
        let alpha = rng.uniform(0.1, 10.0);
        let beta = rng.uniform(-5.0, 5.0);
        let sx = Spectrum(x.clone());
        let sa = spectral_angle(&sx, &Spectrum(x.iter().map(|v| c * v).collect()))
            .map_err(|e| e.to_string())?;
        let r = pcc(&sx, &Spectrum(x.iter().map(|v| alpha * v + beta).collect()))
            .map_err(|e| e.to_string())?;
        worst_sa = worst_sa.max(sa.abs());
        worst_pcc = worst_pcc.max((r - 1.0).abs());
    }
    let elapsed = start.elapsed();
    ensure(worst_sa <= 1e-9, || {
        format!("max |SA(x, cx)| = {worst_sa:e}")
    })?;
    ensure(worst_pcc <= 1e-9, || {
        format!("max |PCC(x, ax+b) - 1| = {worst_pcc:e}")
    })?;
    ensure(elapsed < Duration::from_secs(5), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "10000 pairs, max SA {worst_sa:.1e} rad, max PCC error {worst_pcc:.1e}"
    ))
}

fn dice_at_max_oracle() -> Check {
    let mut rng = CounterRng::new(1002, 0);
    for i in 0..500 {
        let scores = oracles::random_scores(&mut rng, 16, 16);
        let p = rng.uniform(0.05, 0.7);
        let gt = oracles::random_mask(&mut rng, 16, 16, p);
        let valid = oracles::random_mask(&mut rng, 16, 16, 0.85);
        let (exact, _) = dice_at_max(&scores, &gt, &valid).map_err(|e| e.to_string())?;
        let brute = oracles::grid_dice_at_max(&scores, &gt, &valid);
        ensure(exact == brute, || {
            format!("case {i}: exact {exact} != brute force {brute}")
        })?;
        let at_half = dice(&scores.threshold(0.5), &gt, &valid).map_err(|e| e.to_string())?;
        ensure(exact >= at_half, || {
            format!("case {i}: max {exact} < dice@0.5 {at_half}")
        })?;
    }
    Ok("500 maps, exact sweep == brute force, max >= dice@0.5".into())
}

fn dice_equals_f1() -> Check {
    let mut rng = CounterRng::new(1003, 0);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (h, w) = (1 + rng.below(20), 1 + rng.below(20));
        let pp = rng.next_f64();
        let pred = oracles::random_mask(&mut rng, h, w, pp);
        let pg = rng.next_f64();
        let gt = oracles::random_mask(&mut rng, h, w, pg);
        let valid = oracles::random_mask(&mut rng, h, w, 0.8);
        let (d, f1) = dice_f1_check(&pred, &gt, &valid).map_err(|e| e.to_string())?;
        let lib = dice(&pred, &gt, &valid).map_err(|e| e.to_string())?;
        worst = worst.max((d - f1).abs()).max((lib - f1).abs());
    }
    ensure(worst <= 1e-12, || format!("max |Dice - F1| = {worst:e}"))?;
    Ok(format!("1000 pairs, max |Dice - F1| = {worst:.1e}"))
}

fn edt_ccl_oracles() -> Check {
    let mut rng = CounterRng::new(1004, 0);
    for i in 0..200 {
        let (h, w) = (1 + rng.below(12), 1 + rng.below(12));
        let p = rng.next_f64();
        let mask = oracles::random_mask(&mut rng, h, w, p);
        let edt = squared_distance_transform(&mask);
        ensure(edt == oracles::brute_force_sq_edt(&mask), || {
            format!("mask {i}: EDT differs")
        })?;
        for conn in [Connectivity::Four, Connectivity::Eight] {
            let lab = connected_components(&mask, conn);
            let (labels, sizes) = oracles::flood_fill(&mask, conn);
            ensure(lab.labels == labels && lab.sizes == sizes, || {
                format!("mask {i}: {conn:?} components differ")
            })?;
        }
    }
    Ok("200 masks, EDT and 4/8-connected labels identical".into())
}

fn criterion_phantom(seed: u64) -> PhantomSpec {
    PhantomSpec {
        height: 64,
        width: 64,
        bands: 32,
        n_materials: 3,
        noise_sigma: 0.01,
        seed,
        region_style: RegionStyle::Voronoi,
        brightness_jitter: true,
    }
}

fn phantom_items() -> Vec<DatasetItem> {
    (0..20)
        .map(|seed| {
            let (cube, labels) = generate(&criterion_phantom(seed)).unwrap();
            let rgb =
                pseudo_rgb(&cube, BandTriple::spread(32), Normalization::PerBandMinmax).unwrap();
            DatasetItem {
                id: format!("phantom_{seed:03}"),
                cube,
                labels,
                rgb,
            }
        })
        .collect()
}

fn phantom_quantitative() -> Check {
    let start = Instant::now();
    let items = phantom_items();
    let config = EvalConfig {
        max_clicks: 1,
        ..EvalConfig::default()
    };
    let run = |kind| {
        evaluate_dataset(&ScfBackend::new(kind), &items, "phantom", &config, 4)
            .map(|r| r.step(1).unwrap().clone())
            .map_err(|e| e.to_string())
    };
    let sa = run(ScfKind::Sa)?;
    let eq = run(ScfKind::SaEqualized)?;
    let elapsed = start.elapsed();
    ensure(sa.mean_dice_at_max >= 0.95, || {
        format!("SA DICE@Max@1 = {:.4} < 0.95", sa.mean_dice_at_max)
    })?;
    ensure(eq.mean_dice_at_tau >= sa.mean_dice_at_tau, || {
        format!(
            "SA-eq DICE@0.5@1 = {:.4} < SA {:.4}",
            eq.mean_dice_at_tau, sa.mean_dice_at_tau
        )
    })?;
    ensure(elapsed < Duration::from_secs(60), || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{} tasks, SA DICE@Max@1 = {:.4}, DICE@0.5@1 SA-eq {:.4} >= SA {:.4}",
        sa.n_tasks, sa.mean_dice_at_max, eq.mean_dice_at_tau, sa.mean_dice_at_tau
    ))
}

/// Passes calls through and keeps every `(clicks, map)` pair.
struct Recorder {
    inner: ScfBackend,
    calls: Mutex<Vec<Call>>,
}

impl SegmentationBackend for Recorder {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn segment(
        &self,
        cube: &HyperCube,
        rgb: &PseudoRgb,
        clicks: &ClickSet,
    ) -> hsiseg::Result<ScoreMap> {
        let map = self.inner.segment(cube, rgb, clicks)?;
        self.calls
            .lock()
            .unwrap()
            .push((clicks.points().to_vec(), map.clone()));
        Ok(map)
    }
}

fn click_monotonicity() -> Check {
    let items = phantom_items();
    let config = EvalConfig::default();
    let mut compared = 0;
    for kind in [ScfKind::Sa, ScfKind::Pcc] {
        let rec = Recorder {
            inner: ScfBackend::new(kind),
            calls: Mutex::new(Vec::new()),
        };
        // one job keeps each session's calls adjacent
        evaluate_dataset(&rec, &items, "phantom", &config, 1).map_err(|e| e.to_string())?;
        let calls = rec.calls.into_inner().unwrap();
        for pair in calls.windows(2) {
            let ((prev_clicks, prev), (clicks, map)) = (&pair[0], &pair[1]);
            if clicks.len() < prev_clicks.len() || !clicks.starts_with(prev_clicks) {
                continue;
            }
            if clicks.len() == 1 && prev_clicks.len() == 1 {
                continue;
            }
            compared += 1;
            let decreased = prev
                .scores()
                .iter()
                .zip(map.scores())
                .position(|(a, b)| b < a);
            if let Some(i) = decreased {
                return Err(format!(
                    "{kind:?}: score at pixel {i} decreased after clicks {clicks:?}"
                ));
            }
        }
    }
    ensure(compared >= 2 * 60 * 4, || {
        format!("only {compared} consecutive steps compared")
    })?;
    Ok(format!(
        "{compared} consecutive session steps non-decreasing (SA, PCC)"
    ))
}

fn run_eval(dir: &Path, jobs: &str, out: &str) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_hsiseg"))
        .args([
            "eval",
            "--phantoms",
            "20",
            "--seed",
            "0",
            "--method",
            "sa",
            "--max-clicks",
            "5",
        ])
        .args(["--jobs", jobs, "--out", out])
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(o.status.success(), || {
        format!(
            "eval --jobs {jobs} failed: {}",
            String::from_utf8_lossy(&o.stderr)
        )
    })
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_eval(dir.path(), "1", "j1")?;
    run_eval(dir.path(), "8", "j8")?;
    let mut bytes = 0;
    for f in ["report.json", "report.csv"] {
        let a = std::fs::read(dir.path().join("j1").join(f)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dir.path().join("j8").join(f)).map_err(|e| e.to_string())?;
        ensure(a == b, || {
            format!("{f} differs between --jobs 1 and --jobs 8")
        })?;
        bytes += a.len();
    }
    Ok(format!(
        "report.json and report.csv identical ({bytes} bytes)"
    ))
}

fn envi_round_trip() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = CounterRng::new(1008, 0);
    let mut combos = 0;
    for dtype in DataType::ALL {
        let cube = HyperCube::from_fn(4, 5, 3, |_, _, _| match dtype {
            DataType::U8 => rng.below(256) as f64,
            DataType::U16 => rng.below(65536) as f64,
            DataType::I16 => rng.below(65536) as f64 - 32768.0,
            DataType::I32 => (rng.next_u64() as u32 as i32) as f64,
            DataType::F32 => (rng.uniform(-1e6, 1e6) as f32) as f64,
            DataType::F64 => rng.uniform(-1e12, 1e12),
        })
        .map_err(|e| e.to_string())?;
        for interleave in Interleave::ALL {
            for byte_order in [ByteOrder::Little, ByteOrder::Big] {
                let path = dir
                    .path()
                    .join(format!("{dtype:?}_{interleave}_{byte_order:?}.hdr"));
                let opts = WriteOptions {
                    interleave,
                    data_type: dtype,
                    byte_order,
                };
                envi::write_envi(&path, &cube, opts).map_err(|e| e.to_string())?;
                let back = envi::load_envi(&path).map_err(|e| e.to_string())?;
                let exact = back.dims() == cube.dims()
                    && back
                        .data()
                        .iter()
                        .zip(cube.data())
                        .all(|(a, b)| a.to_bits() == b.to_bits());
                ensure(exact, || {
                    format!("{dtype:?} {interleave} {byte_order:?} not bit-exact")
                })?;
                let again = dir.path().join("again.hdr");
                envi::write_envi(&again, &back, opts).map_err(|e| e.to_string())?;
                let same_bytes = std::fs::read(envi::data_path_for(&path)).ok()
                    == std::fs::read(envi::data_path_for(&again)).ok();
                ensure(same_bytes, || {
                    format!("{dtype:?} {interleave} {byte_order:?} bytes changed")
                })?;
                combos += 1;
            }
        }
    }
    ensure(combos == 36, || format!("{combos} combinations"))?;
    Ok("36 dtype/interleave/byte-order combinations bit-exact".into())
}

fn loss_spot_values() -> Check {
    let err = |e: Error| e.to_string();
    let mut rng = CounterRng::new(1009, 0);
    let (h, w) = (6, 7);
    let target = oracles::random_mask(&mut rng, h, w, 0.4);
    let valid = oracles::random_mask(&mut rng, h, w, 0.9);
    let half = ScoreMap::constant(h, w, 0.5).map_err(err)?;
    let bce = bce_loss(&half, &target, &valid, DEFAULT_BCE_CLAMP).map_err(err)?;
    ensure((bce - std::f64::consts::LN_2).abs() <= 1e-9, || {
        format!("BCE(0.5) = {bce}")
    })?;

    let exact = ScoreMap::new(
        h,
        w,
        target
            .values()
            .iter()
            .map(|&t| if t { 1.0 } else { 0.0 })
            .collect(),
    )
    .map_err(err)?;
    let sd = soft_dice_loss(&exact, &target, &valid, DEFAULT_DICE_EPSILON).map_err(err)?;
    ensure(sd == 0.0, || {
        format!("soft Dice of exact prediction = {sd}")
    })?;

    let mut worst = 0.0f64;
    for _ in 0..200 {
        let probs =
            ScoreMap::new(h, w, (0..h * w).map(|_| rng.next_f64()).collect()).map_err(err)?;
        let lambda = rng.next_f64();
        let d = soft_dice_loss(&probs, &target, &valid, DEFAULT_DICE_EPSILON).map_err(err)?;
        let b = bce_loss(&probs, &target, &valid, DEFAULT_BCE_CLAMP).map_err(err)?;
        let c = combine(d, b, lambda).map_err(err)?;
        worst = worst.max((c.combined - (lambda * d + (1.0 - lambda) * b)).abs());
    }
    ensure(worst <= 1e-12, || {
        format!("combined identity off by {worst:e}")
    })?;

    ensure(DEFAULT_LAMBDA == 0.5, || {
        format!("default lambda {DEFAULT_LAMBDA}")
    })?;
    let probs = ScoreMap::new(h, w, (0..h * w).map(|_| rng.next_f64()).collect()).map_err(err)?;
    let dflt = combined_loss(&probs, &target, &valid, DEFAULT_LAMBDA).map_err(err)?;
    ensure(
        dflt.lambda == 0.5
            && (dflt.combined - 0.5 * (dflt.dice_loss + dflt.bce_loss)).abs() <= 1e-12,
        || format!("default combination {dflt:?}"),
    )?;
    Ok(format!("BCE(0.5) = ln 2 (err {:.1e}), exact soft Dice 0, combined identity err {worst:.1e}, lambda 0.5", (bce - std::f64::consts::LN_2).abs()))
}

fn remote_conformance() -> Check {
    let (cube, _) = generate(&PhantomSpec {
        height: 16,
        width: 12,
        bands: 10,
        seed: 7,
        ..PhantomSpec::default()
    })
    .map_err(|e| e.to_string())?;
    let rgb = pseudo_rgb(&cube, BandTriple::spread(10), Normalization::PerBandMinmax)
        .map_err(|e| e.to_string())?;
    let clicks = ClickSet::new(vec![(3, 3), (12, 8)]).map_err(|e| e.to_string())?;
    let timeout = Duration::from_secs(10);

    let echo = MockServer::start(MockMode::Echo).map_err(|e| e.to_string())?;
    let got = RemoteBackend::new(echo.url(), timeout)
        .segment(&cube, &rgb, &clicks)
        .map_err(|e| e.to_string())?;
    let prompt = build_fusion_input(&cube, &rgb, &clicks)
        .map_err(|e| e.to_string())?
        .spectral_prompt;
    let bit_exact = got.dims() == prompt.dims()
        && got
            .scores()
            .iter()
            .zip(prompt.scores())
            .all(|(g, p)| g.to_bits() == (*p as f32 as f64).to_bits());
    ensure(bit_exact, || {
        "echoed map differs from the spectral prompt".into()
    })?;

    let cases: [(MockMode, ErrorKindCheck); 5] = [
        (MockMode::WrongShape, |e| {
            matches!(e, RemoteError::ShapeMismatch { .. })
        }),
        (MockMode::BadValue(1.5), |e| {
            matches!(e, RemoteError::ScoreOutOfRange { .. })
        }),
        (MockMode::Garbage, |e| {
            matches!(e, RemoteError::Malformed(_))
        }),
        (MockMode::Status(500), |e| {
            matches!(e, RemoteError::Status { status: 500, .. })
        }),
        (MockMode::WrongId, |e| {
            matches!(e, RemoteError::CorrelationMismatch { .. })
        }),
    ];
    for (mode, expected) in cases {
        let server = MockServer::start(mode).map_err(|e| e.to_string())?;
        match RemoteBackend::new(server.url(), timeout).segment(&cube, &rgb, &clicks) {
            Err(Error::Remote(e)) if expected(&e) => {}
            Err(e) => return Err(format!("{mode:?}: unexpected error {e}")),
            Ok(_) => return Err(format!("{mode:?}: returned a score map")),
        }
    }
    Ok("echo bit-exact; shape, range, body, status and id violations typed".into())
}

#[test]
fn acceptance() {
    let checks: [Criterion; 10] = [
        ("spectral identities", spectral_identities),
        ("DICE@Max oracle equivalence", dice_at_max_oracle),
        ("Dice equals F1 under ignore mask", dice_equals_f1),
        ("EDT and CCL oracles", edt_ccl_oracles),
        ("phantom quantitative check", phantom_quantitative),
        ("click monotonicity", click_monotonicity),
        ("eval determinism across --jobs", determinism),
        ("ENVI round-trip", envi_round_trip),
        ("loss spot values", loss_spot_values),
        ("remote protocol conformance", remote_conformance),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in checks.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        report(i + 1, name, &outcome, start.elapsed());
        if outcome.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
