//! Evaluation run manifests (JSON). Precedence is flags, then manifest,
//! then built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use hsiseg::eval::ThresholdSweep;
use hsiseg::{BandTriple, EvalConfig};
use serde::{Deserialize, Serialize};

use crate::args::EvalArgs;
use crate::method::Method;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub data_dir: Option<PathBuf>,
    pub phantoms: Option<usize>,
    pub method: Option<String>,
    pub dataset_name: Option<String>,
    pub config: Option<EvalConfig>,
    pub bands: Option<String>,
    pub jobs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub timeout: Option<f64>,
}

impl RunManifest {
    /// Reads a manifest; relative paths are taken relative to its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        let mut m: RunManifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing manifest {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        m.data_dir = m.data_dir.map(|p| base.join(p));
        m.out = m.out.map(|p| base.join(p));
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Directory(PathBuf),
    Phantoms { count: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalPlan {
    pub source: Source,
    pub method: Method,
    pub dataset_name: String,
    pub config: EvalConfig,
    pub bands: Option<BandTriple>,
    pub jobs: usize,
    pub out: PathBuf,
    pub timeout: f64,
}

pub const DEFAULT_OUT: &str = "eval-report";

impl EvalPlan {
    pub fn resolve(args: &EvalArgs) -> anyhow::Result<Self> {
        let m = match &args.manifest {
            Some(p) => RunManifest::load(p)?,
            None => RunManifest::default(),
        };
        let method: Method = args
            .method
            .clone()
            .or(m.method)
            .unwrap_or_else(|| "sa".into())
            .parse()?;
        let seed = args.seed.or(m.seed).unwrap_or(0);

        let source = match (&args.data_dir, args.phantoms) {
            (Some(d), _) => Source::Directory(d.clone()),
            (None, Some(n)) => Source::Phantoms { count: n, seed },
            (None, None) => match (m.data_dir, m.phantoms) {
                (Some(d), _) => Source::Directory(d),
                (None, Some(n)) => Source::Phantoms { count: n, seed },
                (None, None) => {
                    bail!("no dataset: pass --data-dir or --phantoms (or set one in the manifest)")
                }
            },
        };
        match &source {
            Source::Directory(d) if !d.is_dir() => {
                bail!("dataset directory {} does not exist", d.display())
            }
            Source::Phantoms { count: 0, .. } => bail!("--phantoms must be at least 1"),
            _ => {}
        }

        let mut config = m.config.unwrap_or_default();
        if let Some(k) = args.max_clicks {
            config.max_clicks = k;
        }
        if let Some(t) = args.threshold {
            config.threshold = t;
        }
        if let Some(i) = args.ignore_index {
            config.ignore_index = i;
        }
        if let Some(n) = args.grid {
            config.threshold_sweep = ThresholdSweep::Grid(n);
        }
        if let Some(c) = args.connectivity {
            config.connectivity = c.into();
        }
        config.validate()?;

        let bands = match (args.bands, m.bands) {
            (Some(b), _) => Some(b),
            (None, Some(s)) => Some(s.parse::<BandTriple>().map_err(anyhow::Error::msg)?),
            (None, None) => None,
        };
        let dataset_name = args
            .dataset_name
            .clone()
            .or(m.dataset_name)
            .unwrap_or_else(|| match &source {
                Source::Directory(d) => d
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "dataset".into()),
                Source::Phantoms { .. } => "phantom".into(),
            });
        let jobs = args
            .jobs
            .or(m.jobs)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1);
        let timeout = args.timeout.or(m.timeout).unwrap_or(30.0);
        if !(timeout.is_finite() && timeout > 0.0) {
            bail!("timeout must be a positive number of seconds");
        }
        Ok(Self {
            source,
            method,
            dataset_name,
            config,
            bands,
            jobs,
            out: args
                .out
                .clone()
                .or(m.out)
                .unwrap_or_else(|| DEFAULT_OUT.into()),
            timeout,
        })
    }
}
