use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hsiseg::envi::Interleave;
use hsiseg::phantom::RegionStyle;
use hsiseg::{BandTriple, ClickSet, Pixel};

#[derive(Debug, Parser)]
#[command(
    name = "hsiseg",
    version,
    about = "Interactive segmentation tools for hyperspectral images"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the simulated-click evaluation over a dataset and write reports
    Eval(EvalArgs),
    /// Segment one cube from a list of clicks
    Segment(SegmentArgs),
    /// Generate synthetic cubes with ground-truth labels
    Synth(SynthArgs),
    /// Rewrite an ENVI raster with a different interleave
    Convert(ConvertArgs),
    /// Serve a dataset directory over HTTP
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConnectivityArg {
    #[value(name = "4")]
    Four,
    #[value(name = "8")]
    Eight,
}

impl From<ConnectivityArg> for hsiseg::Connectivity {
    fn from(c: ConnectivityArg) -> Self {
        match c {
            ConnectivityArg::Four => hsiseg::Connectivity::Four,
            ConnectivityArg::Eight => hsiseg::Connectivity::Eight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterleaveArg {
    Bsq,
    Bil,
    Bip,
}

impl From<InterleaveArg> for Interleave {
    fn from(i: InterleaveArg) -> Self {
        match i {
            InterleaveArg::Bsq => Interleave::Bsq,
            InterleaveArg::Bil => Interleave::Bil,
            InterleaveArg::Bip => Interleave::Bip,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StyleArg {
    Voronoi,
    Blobs,
}

impl From<StyleArg> for RegionStyle {
    fn from(s: StyleArg) -> Self {
        match s {
            StyleArg::Voronoi => RegionStyle::Voronoi,
            StyleArg::Blobs => RegionStyle::Blobs,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// JSON run manifest; flags given here override its fields
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Dataset directory of `<id>.hdr` cubes and `<id>_labels.hdr` labels
    #[arg(long, value_name = "DIR", conflicts_with = "phantoms")]
    pub data_dir: Option<PathBuf>,
    /// Evaluate on N generated phantoms (seeds from --seed) instead of a directory
    #[arg(long, value_name = "N")]
    pub phantoms: Option<usize>,
    /// Backend: pcc, sa, sa-eq or remote:<url> [default: sa]
    #[arg(long)]
    pub method: Option<String>,
    /// Dataset name recorded in the report [default: directory name]
    #[arg(long)]
    pub dataset_name: Option<String>,
    /// Clicks per session [default: 5]
    #[arg(long, value_name = "K")]
    pub max_clicks: Option<usize>,
    /// Binarization threshold for Dice@tau [default: 0.5]
    #[arg(long, value_name = "TAU")]
    pub threshold: Option<f64>,
    /// Label value excluded from scoring [default: 255]
    #[arg(long, value_name = "LABEL")]
    pub ignore_index: Option<u32>,
    /// Evaluate Dice@Max on a grid of N+1 thresholds instead of exactly
    #[arg(long, value_name = "N")]
    pub grid: Option<u32>,
    /// Pixel connectivity for the first click [default: 4]
    #[arg(long, value_enum)]
    pub connectivity: Option<ConnectivityArg>,
    /// Pseudo-RGB bands as r,g,b [default: spread over the spectrum]
    #[arg(long, value_name = "R,G,B")]
    pub bands: Option<BandTriple>,
    /// Worker threads; results do not depend on it [default: all cores]
    #[arg(long, value_name = "N")]
    pub jobs: Option<usize>,
    /// Seed for generated phantoms [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory for report.json and report.csv [default: eval-report]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Remote backend timeout in seconds [default: 30]
    #[arg(long, value_name = "SECS")]
    pub timeout: Option<f64>,
}

/// Parses `r,c;r,c;...` into a click set.
pub fn parse_clicks(s: &str) -> Result<ClickSet, String> {
    let points = s
        .split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let (r, c) = p
                .split_once(',')
                .ok_or_else(|| format!("click `{p}` is not `row,col`"))?;
            let parse = |v: &str| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| format!("click `{p}` has a non-integer coordinate"))
            };
            Ok::<Pixel, String>((parse(r)?, parse(c)?))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if points.is_empty() {
        return Err("at least one click is required".into());
    }
    ClickSet::new(points).map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// ENVI header of the cube
    #[arg(long, value_name = "HDR")]
    pub cube: PathBuf,
    /// Clicks as row,col pairs separated by semicolons, e.g. "3,4;10,2"
    #[arg(long, value_parser = parse_clicks)]
    pub clicks: ClickSet,
    /// Backend: pcc, sa, sa-eq or remote:<url>
    #[arg(long, default_value = "sa")]
    pub method: String,
    /// Pseudo-RGB bands as r,g,b [default: spread over the spectrum]
    #[arg(long, value_name = "R,G,B")]
    pub bands: Option<BandTriple>,
    /// Output header path; the PNG preview is written next to it
    #[arg(long, value_name = "HDR")]
    pub out: PathBuf,
    /// Remote backend timeout in seconds
    #[arg(long, value_name = "SECS", default_value_t = 30.0)]
    pub timeout: f64,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    /// File name prefix; files are <name>_<index>
    #[arg(long, default_value = "phantom")]
    pub name: String,
    /// Number of scenes; scene i uses seed + i
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Rows per scene
    #[arg(long, default_value_t = 64)]
    pub height: usize,
    /// Columns per scene
    #[arg(long, default_value_t = 64)]
    pub width: usize,
    /// Spectral bands per pixel
    #[arg(long, default_value_t = 32)]
    pub bands: usize,
    /// Number of materials (label classes)
    #[arg(long, default_value_t = 3)]
    pub materials: usize,
    /// Standard deviation of additive Gaussian noise
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    /// Seed of the first scene
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Region layout
    #[arg(long, value_enum, default_value = "voronoi")]
    pub style: StyleArg,
    /// Disable per-pixel brightness jitter
    #[arg(long)]
    pub no_jitter: bool,
    /// Interleave of the written cubes
    #[arg(long, value_enum, default_value = "bsq")]
    pub interleave: InterleaveArg,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Input ENVI header
    #[arg(long, value_name = "HDR")]
    pub input: PathBuf,
    /// Output ENVI header; data type and byte order are preserved
    #[arg(long, value_name = "HDR")]
    pub output: PathBuf,
    /// Target interleave
    #[arg(long, value_enum)]
    pub interleave: InterleaveArg,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Address to listen on
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Dataset directory, scanned once at startup
    #[arg(long, value_name = "DIR")]
    pub data_dir: PathBuf,
    /// Endpoint of a remote model backend, enabling method "remote"
    #[arg(long, value_name = "URL")]
    pub remote: Option<String>,
    /// Allowed CORS origin, or "*"
    #[arg(long, value_name = "ORIGIN")]
    pub cors: Option<String>,
    /// Directory of static UI assets served at /
    #[arg(long, value_name = "DIR")]
    pub static_dir: Option<PathBuf>,
    /// Maximum concurrent remote backend calls
    #[arg(long, value_name = "N", default_value_t = 4)]
    pub max_in_flight: usize,
    /// Label value excluded from live Dice
    #[arg(long, value_name = "LABEL", default_value_t = 255)]
    pub ignore_index: u32,
    /// Remote backend timeout in seconds
    #[arg(long, value_name = "SECS", default_value_t = 30.0)]
    pub timeout: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn click_strings() {
        assert_eq!(parse_clicks("1,2").unwrap().points(), &[(1, 2)]);
        assert_eq!(
            parse_clicks(" 1, 2 ; 3,4;").unwrap().points(),
            &[(1, 2), (3, 4)]
        );
        for bad in ["", "1", "1,x", "-1,2", "1,2;1,2", "1;2"] {
            assert!(parse_clicks(bad).is_err(), "{bad:?}");
        }
    }
}
