use std::fs;
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};

use hsiseg::envi::load_envi;
use hsiseg::{EvalReport, ScfKind, ScoreMap};

fn hsiseg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsiseg"))
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstdout: {}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn synth(dir: &Path, count: &str) {
    ok(&hsiseg(
        &[
            "synth",
            "--out-dir",
            "data",
            "--count",
            count,
            "--height",
            "20",
            "--width",
            "18",
            "--bands",
            "10",
        ],
        dir,
    ));
}

#[test]
fn synth_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth(a.path(), "2");
    synth(b.path(), "2");
    let mut names: Vec<_> = fs::read_dir(a.path().join("data"))
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 10);
    for n in names {
        let x = fs::read(a.path().join("data").join(&n)).unwrap();
        let y = fs::read(b.path().join("data").join(&n)).unwrap();
        assert_eq!(x, y, "{n:?}");
    }
    let spec: serde_json::Value =
        serde_json::from_slice(&fs::read(a.path().join("data/phantom_001.json")).unwrap()).unwrap();
    assert_eq!(spec["seed"], 1);
    assert_eq!(spec["bands"], 10);
}

#[test]
fn eval_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "2");
    let out = hsiseg(
        &[
            "eval",
            "--data-dir",
            "data",
            "--method",
            "sa",
            "--max-clicks",
            "5",
            "--out",
            "rep",
            "--jobs",
            "2",
        ],
        dir.path(),
    );
    ok(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(
        stdout.starts_with("method,dataset,dice@0.5_1c,dice@max_1c,dice@0.5_5c,n_tasks\nsa,data,")
    );

    let report: EvalReport =
        serde_json::from_slice(&fs::read(dir.path().join("rep/report.json")).unwrap()).unwrap();
    assert_eq!(report.method, "sa");
    assert_eq!(report.aggregates.len(), 5);
    assert!(!report.tasks.is_empty());
    for t in &report.tasks {
        assert_eq!(t.steps.len(), 5);
    }
    for a in &report.aggregates {
        assert!((0.0..=1.0).contains(&a.mean_dice_at_tau));
        assert!((0.0..=1.0).contains(&a.mean_dice_at_max));
    }
    let csv = fs::read_to_string(dir.path().join("rep/report.csv")).unwrap();
    assert_eq!(csv, stdout);
}

#[test]
fn eval_manifest_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.json"),
        r#"{"phantoms": 1, "method": "pcc", "config": {"max_clicks": 2}, "out": "from-manifest", "jobs": 1}"#,
    )
    .unwrap();
    ok(&hsiseg(
        &["eval", "--manifest", "run.json", "--max-clicks", "3"],
        dir.path(),
    ));
    let report: EvalReport =
        serde_json::from_slice(&fs::read(dir.path().join("from-manifest/report.json")).unwrap())
            .unwrap();
    assert_eq!(report.method, "pcc");
    assert_eq!(report.config.max_clicks, 3);
    assert_eq!(report.dataset, "phantom");

    fs::write(dir.path().join("bad.json"), r#"{"phantom": 1}"#).unwrap();
    let out = hsiseg(&["eval", "--manifest", "bad.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_method_lists_valid_ones() {
    let dir = tempfile::tempdir().unwrap();
    let out = hsiseg(&["eval", "--phantoms", "1", "--method", "unet"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown method `unet`"), "{err}");
    assert!(err.contains("pcc, sa, sa-eq, remote:<url>"), "{err}");
}

#[test]
fn missing_dataset_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = hsiseg(&["eval", "--data-dir", "nope"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = hsiseg(&["eval"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn segment_writes_raster_and_preview() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1");
    ok(&hsiseg(
        &[
            "segment",
            "--cube",
            "data/phantom_000.hdr",
            "--clicks",
            "5,7",
            "--method",
            "sa",
            "--out",
            "seg/sa",
        ],
        dir.path(),
    ));
    let scores = load_envi(dir.path().join("seg/sa.hdr")).unwrap();
    assert_eq!(
        (scores.height(), scores.width(), scores.bands()),
        (20, 18, 1)
    );
    assert_eq!(scores.get(5, 7, 0), 1.0);

    let cube = load_envi(dir.path().join("data/phantom_000.hdr")).unwrap();
    let expected =
        hsiseg::scf::scf_map(&cube, &hsiseg::ClickSet::single(5, 7), ScfKind::Sa).unwrap();
    let as_f32: Vec<f64> = expected.scores().iter().map(|&v| v as f32 as f64).collect();
    assert_eq!(scores.data(), as_f32.as_slice());

    let decoder = png::Decoder::new(std::io::Cursor::new(
        fs::read(dir.path().join("seg/sa.png")).unwrap(),
    ));
    let mut reader = decoder.read_info().unwrap();
    let mut buf = vec![0; reader.output_buffer_size().unwrap()];
    let info = reader.next_frame(&mut buf).unwrap();
    assert_eq!((info.width, info.height), (18, 20));
    assert_eq!(info.color_type, png::ColorType::Grayscale);
    assert_eq!(buf[5 * 18 + 7], 255);
    let expected = ScoreMap::new(20, 18, expected.into_scores()).unwrap();
    for (i, &g) in buf[..20 * 18].iter().enumerate() {
        assert_eq!(g, (expected.scores()[i] * 255.0).round() as u8);
    }
}

#[test]
fn segment_rejects_bad_clicks() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1");
    let out = hsiseg(
        &[
            "segment",
            "--cube",
            "data/phantom_000.hdr",
            "--clicks",
            "5;7",
            "--out",
            "x",
        ],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(2),
        "malformed clicks are a usage error"
    );
    let out = hsiseg(
        &[
            "segment",
            "--cube",
            "data/phantom_000.hdr",
            "--clicks",
            "50,7",
            "--out",
            "x",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
    let out = hsiseg(
        &[
            "segment",
            "--cube",
            "missing.hdr",
            "--clicks",
            "1,1",
            "--out",
            "x",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn convert_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "1");
    ok(&hsiseg(
        &[
            "convert",
            "--input",
            "data/phantom_000.hdr",
            "--output",
            "c/bip.hdr",
            "--interleave",
            "bip",
        ],
        dir.path(),
    ));
    ok(&hsiseg(
        &[
            "convert",
            "--input",
            "c/bip.hdr",
            "--output",
            "c/bsq.hdr",
            "--interleave",
            "bsq",
        ],
        dir.path(),
    ));
    let original = fs::read(dir.path().join("data/phantom_000.raw")).unwrap();
    assert_ne!(fs::read(dir.path().join("c/bip.raw")).unwrap(), original);
    assert_eq!(fs::read(dir.path().join("c/bsq.raw")).unwrap(), original);
    assert_eq!(
        fs::read_to_string(dir.path().join("c/bsq.hdr")).unwrap(),
        fs::read_to_string(dir.path().join("data/phantom_000.hdr")).unwrap()
    );
}

#[test]
fn serve_on_occupied_port_fails() {
    let dir = tempfile::tempdir().unwrap();
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let out = hsiseg(&["serve", "--bind", &addr, "--data-dir", "."], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bind error"), "{err}");
}
