use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::Context;
use hsiseg::envi::{read_raster, write_envi, write_labels, WriteOptions};
use hsiseg::eval::evaluate_dataset;
use hsiseg::phantom::{generate, PhantomSpec};
use hsiseg::{EvalReport, HyperCube};

use crate::args::{Cli, Command, ConvertArgs, EvalArgs, SegmentArgs, ServeArgs, SynthArgs};
use crate::dataset::{load_labeled, nominal_wavelengths, phantom_suite, render_rgb};
use crate::manifest::{EvalPlan, Source};
use crate::method::Method;
use crate::preview::score_png;
use crate::service::{self, ServiceConfig};

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Eval(a) => cmd_eval(&a).map(|_| ()),
        Command::Segment(a) => cmd_segment(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Convert(a) => cmd_convert(&a),
        Command::Serve(a) => cmd_serve(a),
    }
}

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn create_parent(path: &Path) -> anyhow::Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => create_dir(dir),
        _ => Ok(()),
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn seconds(s: f64) -> anyhow::Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| anyhow::anyhow!("invalid timeout {s}"))
}

pub fn cmd_eval(args: &EvalArgs) -> anyhow::Result<EvalReport> {
    let plan = EvalPlan::resolve(args)?;
    let items = match &plan.source {
        Source::Directory(dir) => load_labeled(dir, plan.bands, plan.config.ignore_index)?,
        Source::Phantoms { count, seed } => phantom_suite(*count, *seed, plan.bands)?,
    };
    let backend = plan.method.backend(seconds(plan.timeout)?);
    log::info!(
        "evaluating {} on {} images with {} job(s)",
        plan.method,
        items.len(),
        plan.jobs
    );
    let report = evaluate_dataset(
        backend.as_ref(),
        &items,
        &plan.dataset_name,
        &plan.config,
        plan.jobs,
    )?;

    create_dir(&plan.out)?;
    write_file(&plan.out.join("report.json"), report.to_json())?;
    let csv = report.to_csv();
    write_file(&plan.out.join("report.csv"), &csv)?;
    print!("{csv}");
    Ok(report)
}

fn header_path(p: &Path) -> PathBuf {
    if p.extension().is_some_and(|e| e == "hdr") {
        p.to_path_buf()
    } else {
        let mut s = p.as_os_str().to_owned();
        s.push(".hdr");
        PathBuf::from(s)
    }
}

pub fn cmd_segment(args: &SegmentArgs) -> anyhow::Result<()> {
    let method: Method = args.method.parse()?;
    let (_, cube) =
        read_raster(&args.cube).with_context(|| format!("loading {}", args.cube.display()))?;
    args.clicks.check_bounds(cube.height(), cube.width())?;
    let rgb = render_rgb(&cube, args.bands)?;
    let scores = method
        .backend(seconds(args.timeout)?)
        .segment(&cube, &rgb, &args.clicks)?;

    let out = header_path(&args.out);
    create_parent(&out)?;
    let plane = HyperCube::new(scores.height(), scores.width(), 1, scores.scores().to_vec())?;
    write_envi(&out, &plane, WriteOptions::default())
        .with_context(|| format!("writing {}", out.display()))?;
    let preview = out.with_extension("png");
    write_file(&preview, score_png(&scores))?;
    println!("{}", out.display());
    println!("{}", preview.display());
    Ok(())
}

pub fn cmd_synth(args: &SynthArgs) -> anyhow::Result<()> {
    create_dir(&args.out_dir)?;
    let opts = WriteOptions {
        interleave: args.interleave.into(),
        ..WriteOptions::default()
    };
    for i in 0..args.count {
        let spec = PhantomSpec {
            height: args.height,
            width: args.width,
            bands: args.bands,
            n_materials: args.materials,
            noise_sigma: args.noise,
            seed: args.seed + i as u64,
            region_style: args.style.into(),
            brightness_jitter: !args.no_jitter,
        };
        let (cube, labels) = generate(&spec)?;
        let cube = cube.with_wavelengths(nominal_wavelengths(spec.bands))?;
        let stem = format!("{}_{i:03}", args.name);
        let dir = &args.out_dir;
        write_envi(dir.join(format!("{stem}.hdr")), &cube, opts)?;
        write_labels(dir.join(format!("{stem}_labels.hdr")), &labels)?;
        let json = serde_json::to_string_pretty(&spec).expect("spec serializes");
        write_file(&dir.join(format!("{stem}.json")), json + "\n")?;
        println!("{}", dir.join(format!("{stem}.hdr")).display());
    }
    Ok(())
}

pub fn cmd_convert(args: &ConvertArgs) -> anyhow::Result<()> {
    let (header, cube) =
        read_raster(&args.input).with_context(|| format!("loading {}", args.input.display()))?;
    let opts = WriteOptions {
        interleave: args.interleave.into(),
        data_type: header.data_type,
        byte_order: header.byte_order,
    };
    let out = header_path(&args.output);
    create_parent(&out)?;
    write_envi(&out, &cube, opts).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

pub fn cmd_serve(args: ServeArgs) -> anyhow::Result<()> {
    let config = ServiceConfig {
        data_dir: args.data_dir,
        remote: args.remote,
        cors: args.cors,
        static_dir: args.static_dir,
        max_in_flight: args.max_in_flight.max(1),
        ignore_index: args.ignore_index,
        timeout: seconds(args.timeout)?,
    };
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .context("starting async runtime")?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(args.bind)
            .await
            .with_context(|| format!("bind error: cannot listen on {}", args.bind))?;
        let app = service::router(service::load_state(&config)?, &config)?;
        log::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
            .context("server error")
    })
}
