//! HTTP API over a dataset directory.
//!
//! | Route | Result |
//! |---|---|
//! | `GET /api/images` | `[{id, height, width, bands, has_labels}]` |
//! | `GET /api/images/{id}/preview?bands=r,g,b` | 8-bit RGB PNG |
//! | `POST /api/images/{id}/segment` | `{height, width, scores_b64, dice?}` |
//! | `GET /api/images/{id}/spectrum?row=&col=` | `{wavelengths?, values}` |
//!
//! Cubes are loaded once at startup and shared read-only. Segmentation is
//! stateless: every request carries the full click list. Errors are JSON
//! `{error}` bodies.

use std::collections::{BTreeMap, HashMap};
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, Method as HttpMethod, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use hsiseg::backends::wire::{encode_f32le, ErrorBody};
use hsiseg::backends::RemoteBackend;
use hsiseg::envi::{load_envi, load_labels_for};
use hsiseg::eval::{dice, dice_at_max};
use hsiseg::hsi::pseudo_rgb;
use hsiseg::{
    BandTriple, BinaryMask, ClickSet, Error, HyperCube, LabelMap, Normalization, PseudoRgb,
    ScfBackend, ScfKind, ScoreMap, SegmentationBackend,
};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;
use tower_http::cors::{AllowOrigin, CorsLayer};
use tower_http::services::ServeDir;

use crate::dataset::{render_rgb, scan};
use crate::preview::rgb_png;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub remote: Option<String>,
    pub cors: Option<String>,
    pub static_dir: Option<PathBuf>,
    pub max_in_flight: usize,
    pub ignore_index: u32,
    pub timeout: Duration,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        Self {
            data_dir: data_dir.into(),
            remote: None,
            cors: None,
            static_dir: None,
            max_in_flight: 4,
            ignore_index: 255,
            timeout: Duration::from_secs(30),
        }
    }
}

pub struct Image {
    pub cube: HyperCube,
    pub labels: Option<LabelMap>,
    pub rgb: PseudoRgb,
}

#[derive(Clone)]
pub struct AppState {
    images: Arc<BTreeMap<String, Arc<Image>>>,
    remote: Option<Arc<RemoteBackend>>,
    limiter: Arc<Semaphore>,
    ignore_index: u32,
}

impl AppState {
    pub fn image_ids(&self) -> Vec<String> {
        self.images.keys().cloned().collect()
    }
}

/// Loads every readable cube in the data directory. Unreadable cubes or
/// label rasters are skipped with a warning.
pub fn load_state(config: &ServiceConfig) -> anyhow::Result<AppState> {
    let entries = scan(&config.data_dir)
        .with_context(|| format!("cannot scan data directory {}", config.data_dir.display()))?;
    let mut images = BTreeMap::new();
    for e in entries {
        let loaded = load_envi(&e.cube_path)
            .map_err(Error::from)
            .and_then(|cube| {
                let labels = e
                    .labels_path
                    .as_ref()
                    .map(|p| load_labels_for(p, config.ignore_index, &cube))
                    .transpose()?;
                let rgb = render_rgb(&cube, None)?;
                Ok(Image { cube, labels, rgb })
            });
        match loaded {
            Ok(img) => {
                images.insert(e.id, Arc::new(img));
            }
            Err(err) => log::warn!("skipping {}: {err}", e.cube_path.display()),
        }
    }
    log::info!(
        "loaded {} image(s) from {}",
        images.len(),
        config.data_dir.display()
    );
    Ok(AppState {
        images: Arc::new(images),
        remote: config
            .remote
            .as_ref()
            .map(|url| Arc::new(RemoteBackend::new(url.clone(), config.timeout))),
        limiter: Arc::new(Semaphore::new(config.max_in_flight.max(1))),
        ignore_index: config.ignore_index,
    })
}

pub fn router(state: AppState, config: &ServiceConfig) -> anyhow::Result<Router> {
    let api = Router::new()
        .route("/api/images", get(list_images))
        .route("/api/images/{id}/preview", get(preview))
        .route("/api/images/{id}/segment", post(segment))
        .route("/api/images/{id}/spectrum", get(spectrum))
        .with_state(state);
    let mut app = match &config.static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not found") }),
    };
    if let Some(origin) = &config.cors {
        let allow = if origin == "*" {
            AllowOrigin::any()
        } else {
            AllowOrigin::exact(HeaderValue::from_str(origin).context("invalid --cors origin")?)
        };
        app = app.layer(
            CorsLayer::new()
                .allow_origin(allow)
                .allow_methods([HttpMethod::GET, HttpMethod::POST])
                .allow_headers([header::CONTENT_TYPE]),
        );
    }
    Ok(app)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message)
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Remote(_) => StatusCode::BAD_GATEWAY,
            Error::OutOfBounds { .. }
            | Error::EmptyClicks
            | Error::DuplicateClick(..)
            | Error::ZeroNorm
            | Error::ZeroVariance
            | Error::BandOutOfRange { .. }
            | Error::InvalidParameter(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut message = e.to_string();
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            message.push_str(": ");
            message.push_str(&s.to_string());
            source = s.source();
        }
        Self::new(status, message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(ErrorBody {
                error: self.message,
            }),
        )
            .into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn lookup(state: &AppState, id: &str) -> ApiResult<Arc<Image>> {
    state
        .images
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown image `{id}`")))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageInfo {
    pub id: String,
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub has_labels: bool,
}

async fn list_images(State(state): State<AppState>) -> Json<Vec<ImageInfo>> {
    Json(
        state
            .images
            .iter()
            .map(|(id, img)| ImageInfo {
                id: id.clone(),
                height: img.cube.height(),
                width: img.cube.width(),
                bands: img.cube.bands(),
                has_labels: img.labels.is_some(),
            })
            .collect(),
    )
}

async fn preview(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Response> {
    let img = lookup(&state, &id)?;
    let bands = match q.get("bands") {
        Some(s) => s.parse::<BandTriple>().map_err(ApiError::bad_request)?,
        None => BandTriple::spread(img.cube.bands()),
    };
    let rgb = pseudo_rgb(&img.cube, bands, Normalization::PerBandMinmax)?;
    let png = rgb_png(rgb.width(), rgb.height(), &rgb.to_rgb8());
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentBody {
    pub method: String,
    pub clicks: Vec<[i64; 2]>,
    #[serde(default)]
    pub class_id: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiveDice {
    pub at_05: f64,
    pub at_max: f64,
    pub best_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReply {
    pub height: usize,
    pub width: usize,
    pub scores_b64: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dice: Option<LiveDice>,
}

fn parse_clicks(raw: &[[i64; 2]], height: usize, width: usize) -> ApiResult<ClickSet> {
    if raw.is_empty() {
        return Err(ApiError::bad_request("at least one click is required"));
    }
    let points = raw
        .iter()
        .map(|&[r, c]| {
            if r < 0 || c < 0 {
                Err(ApiError::bad_request(format!(
                    "click ({r}, {c}) is outside the {height}x{width} image"
                )))
            } else {
                Ok((r as usize, c as usize))
            }
        })
        .collect::<ApiResult<Vec<_>>>()?;
    Ok(ClickSet::within(points, height, width)?)
}

fn live_dice(
    labels: &LabelMap,
    class: u32,
    ignore_index: u32,
    scores: &ScoreMap,
) -> hsiseg::Result<LiveDice> {
    let (h, w) = labels.dims();
    let fg = BinaryMask::new(h, w, labels.labels().iter().map(|&l| l == class).collect())?;
    let valid = BinaryMask::new(
        h,
        w,
        labels.labels().iter().map(|&l| l != ignore_index).collect(),
    )?;
    let at_05 = dice(&scores.threshold(0.5), &fg, &valid)?;
    let (at_max, best_tau) = dice_at_max(scores, &fg, &valid)?;
    Ok(LiveDice {
        at_05,
        at_max,
        best_tau,
    })
}

async fn segment(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<SegmentBody>, JsonRejection>,
) -> ApiResult<Json<SegmentReply>> {
    let img = lookup(&state, &id)?;
    let Json(body) = body.map_err(|e| ApiError::bad_request(e.body_text()))?;
    let clicks = parse_clicks(&body.clicks, img.cube.height(), img.cube.width())?;
    let backend: Arc<dyn SegmentationBackend> = match body.method.as_str() {
        "remote" => state
            .remote
            .clone()
            .ok_or_else(|| ApiError::bad_request("no remote backend configured"))?,
        other => Arc::new(ScfBackend::new(other.parse::<ScfKind>().map_err(|_| {
            ApiError::bad_request(format!(
                "unknown method `{other}`; valid methods: pcc, sa, sa-eq, remote"
            ))
        })?)),
    };
    let _permit = if body.method == "remote" {
        Some(
            state
                .limiter
                .clone()
                .acquire_owned()
                .await
                .expect("semaphore is never closed"),
        )
    } else {
        None
    };
    let job_img = img.clone();
    let scores =
        tokio::task::spawn_blocking(move || backend.segment(&job_img.cube, &job_img.rgb, &clicks))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;

    let dice = match (body.class_id, &img.labels) {
        (Some(class), Some(labels)) => Some(live_dice(labels, class, state.ignore_index, &scores)?),
        _ => None,
    };
    Ok(Json(SegmentReply {
        height: scores.height(),
        width: scores.width(),
        scores_b64: encode_f32le(scores.scores()),
        dice,
    }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReply {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavelengths: Option<Vec<f64>>,
    pub values: Vec<f64>,
}

async fn spectrum(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<HashMap<String, String>>,
) -> ApiResult<Json<SpectrumReply>> {
    let img = lookup(&state, &id)?;
    let coord = |name: &str| -> ApiResult<usize> {
        let raw = q
            .get(name)
            .ok_or_else(|| ApiError::bad_request(format!("missing query parameter `{name}`")))?;
        raw.parse::<usize>().map_err(|_| {
            ApiError::bad_request(format!(
                "`{name}` must be a non-negative integer, got `{raw}`"
            ))
        })
    };
    let (row, col) = (coord("row")?, coord("col")?);
    let values = img.cube.spectrum_at(row, col)?;
    Ok(Json(SpectrumReply {
        wavelengths: img.cube.wavelengths().map(<[f64]>::to_vec),
        values: values.0,
    }))
}
