//! ENVI raster reader and writer.
//!
//! A raster is a plain-text `.hdr` header plus a companion raw binary. The
//! header is a list of `key = value` lines; keys are case-insensitive and
//! values may be `{...}` lists spanning several lines. Only the keys needed
//! to decode the binary (and `wavelength`) are interpreted.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hsi::{HyperCube, LabelMap};

#[derive(Debug, Error)]
pub enum EnviError {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing required header field `{0}`")]
    MissingField(&'static str),
    #[error("invalid value {value:?} for header field `{key}`")]
    InvalidField { key: String, value: String },
    #[error("unknown interleave {0:?} (expected bsq, bil or bip)")]
    UnknownInterleave(String),
    #[error("unknown data type code {0} (supported: 1, 2, 3, 4, 5, 12)")]
    UnknownDataType(i64),
    #[error("unknown byte order {0} (expected 0 or 1)")]
    UnknownByteOrder(i64),
    #[error("binary size mismatch: header declares {expected} bytes, file has {actual}")]
    SizeMismatch { expected: u64, actual: u64 },
    #[error("non-finite sample at element {0}")]
    NonFinite(usize),
    #[error("no companion binary found for header {0}")]
    MissingDataFile(PathBuf),
    #[error("label raster must have exactly 1 band, found {0}")]
    NotSingleBand(usize),
    #[error("label raster must use an integer data type, found {0}")]
    NotIntegerType(DataType),
    #[error("negative label value {0}")]
    NegativeLabel(f64),
    #[error("value {value} is not representable as {dtype}")]
    Unrepresentable { value: f64, dtype: DataType },
    #[error("invalid raster: {0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, EnviError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Interleave {
    Bsq,
    Bil,
    Bip,
}

impl Interleave {
    pub const ALL: [Interleave; 3] = [Interleave::Bsq, Interleave::Bil, Interleave::Bip];

    pub fn as_str(&self) -> &'static str {
        match self {
            Interleave::Bsq => "bsq",
            Interleave::Bil => "bil",
            Interleave::Bip => "bip",
        }
    }

    /// Element offset of `(row, col, band)` in a file with this layout.
    #[inline]
    fn file_index(self, dims: (usize, usize, usize), row: usize, col: usize, band: usize) -> usize {
        let (h, w, c) = dims;
        match self {
            Interleave::Bsq => (band * h + row) * w + col,
            Interleave::Bil => (row * c + band) * w + col,
            Interleave::Bip => (row * w + col) * c + band,
        }
    }
}

impl FromStr for Interleave {
    type Err = EnviError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bsq" => Ok(Interleave::Bsq),
            "bil" => Ok(Interleave::Bil),
            "bip" => Ok(Interleave::Bip),
            other => Err(EnviError::UnknownInterleave(other.to_string())),
        }
    }
}

impl fmt::Display for Interleave {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// ENVI `data type` codes supported by this reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataType {
    U8,
    I16,
    I32,
    F32,
    F64,
    U16,
}

impl DataType {
    pub const ALL: [DataType; 6] = [
        DataType::U8,
        DataType::I16,
        DataType::I32,
        DataType::F32,
        DataType::F64,
        DataType::U16,
    ];

    pub fn code(self) -> i64 {
        match self {
            DataType::U8 => 1,
            DataType::I16 => 2,
            DataType::I32 => 3,
            DataType::F32 => 4,
            DataType::F64 => 5,
            DataType::U16 => 12,
        }
    }

    pub fn from_code(code: i64) -> Result<Self> {
        Ok(match code {
            1 => DataType::U8,
            2 => DataType::I16,
            3 => DataType::I32,
            4 => DataType::F32,
            5 => DataType::F64,
            12 => DataType::U16,
            other => return Err(EnviError::UnknownDataType(other)),
        })
    }

    pub fn size(self) -> usize {
        match self {
            DataType::U8 => 1,
            DataType::I16 | DataType::U16 => 2,
            DataType::I32 | DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }

    pub fn is_integer(self) -> bool {
        !matches!(self, DataType::F32 | DataType::F64)
    }

    fn decode(self, bytes: &[u8], order: ByteOrder) -> f64 {
        macro_rules! read {
            ($t:ty, $n:literal) => {{
                let arr: [u8; $n] = bytes.try_into().unwrap();
                match order {
                    ByteOrder::Little => <$t>::from_le_bytes(arr) as f64,
                    ByteOrder::Big => <$t>::from_be_bytes(arr) as f64,
                }
            }};
        }
        match self {
            DataType::U8 => bytes[0] as f64,
            DataType::I16 => read!(i16, 2),
            DataType::U16 => read!(u16, 2),
            DataType::I32 => read!(i32, 4),
            DataType::F32 => read!(f32, 4),
            DataType::F64 => read!(f64, 8),
        }
    }

    fn encode(self, value: f64, order: ByteOrder, out: &mut Vec<u8>) -> Result<()> {
        macro_rules! int {
            ($t:ty) => {{
                if value.fract() != 0.0 || value < <$t>::MIN as f64 || value > <$t>::MAX as f64 {
                    return Err(EnviError::Unrepresentable { value, dtype: self });
                }
                let v = value as $t;
                match order {
                    ByteOrder::Little => out.extend_from_slice(&v.to_le_bytes()),
                    ByteOrder::Big => out.extend_from_slice(&v.to_be_bytes()),
                }
            }};
        }
        match self {
            DataType::U8 => int!(u8),
            DataType::I16 => int!(i16),
            DataType::U16 => int!(u16),
            DataType::I32 => int!(i32),
            DataType::F32 => {
                let v = value as f32;
                match order {
                    ByteOrder::Little => out.extend_from_slice(&v.to_le_bytes()),
                    ByteOrder::Big => out.extend_from_slice(&v.to_be_bytes()),
                }
            }
            DataType::F64 => match order {
                ByteOrder::Little => out.extend_from_slice(&value.to_le_bytes()),
                ByteOrder::Big => out.extend_from_slice(&value.to_be_bytes()),
            },
        }
        Ok(())
    }
}

impl fmt::Display for DataType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DataType::U8 => "u8",
            DataType::I16 => "i16",
            DataType::I32 => "i32",
            DataType::F32 => "f32",
            DataType::F64 => "f64",
            DataType::U16 => "u16",
        };
        write!(f, "{name} (code {})", self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ByteOrder {
    Little,
    Big,
}

impl ByteOrder {
    pub fn code(self) -> i64 {
        match self {
            ByteOrder::Little => 0,
            ByteOrder::Big => 1,
        }
    }
}

/// The subset of an ENVI header this crate interprets.
#[derive(Debug, Clone, PartialEq)]
pub struct EnviHeader {
    pub samples: usize,
    pub lines: usize,
    pub bands: usize,
    pub interleave: Interleave,
    pub data_type: DataType,
    pub byte_order: ByteOrder,
    pub header_offset: usize,
    pub wavelengths: Option<Vec<f64>>,
}

impl EnviHeader {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.lines, self.samples, self.bands)
    }

    pub fn data_len(&self) -> usize {
        self.samples * self.lines * self.bands * self.data_type.size()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let fields = parse_fields(text);
        let get = |key: &'static str| -> Option<&str> {
            fields
                .iter()
                .rev()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
        };
        let require = |key: &'static str| get(key).ok_or(EnviError::MissingField(key));
        let int = |key: &'static str, v: &str| -> Result<i64> {
            v.trim()
                .parse::<i64>()
                .map_err(|_| EnviError::InvalidField {
                    key: key.to_string(),
                    value: v.to_string(),
                })
        };
        let positive = |key: &'static str| -> Result<usize> {
            let v = int(key, require(key)?)?;
            if v <= 0 {
                return Err(EnviError::InvalidField {
                    key: key.to_string(),
                    value: v.to_string(),
                });
            }
            Ok(v as usize)
        };

        let samples = positive("samples")?;
        let lines = positive("lines")?;
        let bands = positive("bands")?;
        let interleave: Interleave = require("interleave")?.parse()?;
        let data_type = DataType::from_code(int("data type", require("data type")?)?)?;
        let byte_order = match get("byte order") {
            None => ByteOrder::Little,
            Some(v) => match int("byte order", v)? {
                0 => ByteOrder::Little,
                1 => ByteOrder::Big,
                other => return Err(EnviError::UnknownByteOrder(other)),
            },
        };
        let header_offset = match get("header offset") {
            None => 0,
            Some(v) => {
                let off = int("header offset", v)?;
                usize::try_from(off).map_err(|_| EnviError::InvalidField {
                    key: "header offset".into(),
                    value: v.to_string(),
                })?
            }
        };
        let wavelengths = match get("wavelength") {
            None => None,
            Some(v) => {
                let list = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>().map_err(|_| EnviError::InvalidField {
                            key: "wavelength".into(),
                            value: s.to_string(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if list.len() != bands {
                    return Err(EnviError::InvalidField {
                        key: "wavelength".into(),
                        value: format!("{} entries for {} bands", list.len(), bands),
                    });
                }
                Some(list)
            }
        };
        Ok(Self {
            samples,
            lines,
            bands,
            interleave,
            data_type,
            byte_order,
            header_offset,
            wavelengths,
        })
    }

    pub fn render(&self) -> String {
        let mut s = String::from("ENVI\n");
        s.push_str(&format!("samples = {}\n", self.samples));
        s.push_str(&format!("lines = {}\n", self.lines));
        s.push_str(&format!("bands = {}\n", self.bands));
        s.push_str(&format!("header offset = {}\n", self.header_offset));
        s.push_str("file type = ENVI Standard\n");
        s.push_str(&format!("data type = {}\n", self.data_type.code()));
        s.push_str(&format!("interleave = {}\n", self.interleave));
        s.push_str(&format!("byte order = {}\n", self.byte_order.code()));
        if let Some(wl) = &self.wavelengths {
            let items: Vec<String> = wl.iter().map(|w| format!("{w}")).collect();
            s.push_str(&format!("wavelength = {{{}}}\n", items.join(", ")));
        }
        s
    }
}

/// Splits header text into lowercase `(key, value)` pairs. Brace values may
/// span lines and are returned without their braces.
fn parse_fields(text: &str) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut lines = text.lines();
    while let Some(line) = lines.next() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let key = key
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ")
            .to_ascii_lowercase();
        let mut value = value.trim().to_string();
        if value.starts_with('{') {
            while !value.contains('}') {
                match lines.next() {
                    Some(next) => {
                        value.push(' ');
                        value.push_str(next.trim());
                    }
                    None => break,
                }
            }
            let inner = value.trim_start_matches('{');
            let inner = inner.split('}').next().unwrap_or("");
            value = inner.trim().to_string();
        }
        out.push((key, value));
    }
    out
}

/// Decodes a raw sample buffer into a cube (pixel-interleaved internally).
pub fn decode(header: &EnviHeader, bytes: &[u8]) -> Result<HyperCube> {
    let expected = header.data_len() as u64;
    if bytes.len() as u64 != expected {
        return Err(EnviError::SizeMismatch {
            expected,
            actual: bytes.len() as u64,
        });
    }
    let dims = header.dims();
    let (h, w, c) = dims;
    let size = header.data_type.size();
    let mut data = vec![0.0; h * w * c];
    for r in 0..h {
        for col in 0..w {
            for b in 0..c {
                let fi = header.interleave.file_index(dims, r, col, b);
                let v = header
                    .data_type
                    .decode(&bytes[fi * size..(fi + 1) * size], header.byte_order);
                if !v.is_finite() {
                    return Err(EnviError::NonFinite(fi));
                }
                data[(r * w + col) * c + b] = v;
            }
        }
    }
    let cube = HyperCube::new(h, w, c, data).map_err(|e| EnviError::Invalid(e.to_string()))?;
    match &header.wavelengths {
        Some(wl) => cube
            .with_wavelengths(wl.clone())
            .map_err(|e| EnviError::Invalid(e.to_string())),
        None => Ok(cube),
    }
}

/// Encodes `cube` in the given layout. Integer types require integral,
/// in-range values; `F32` rounds to nearest.
pub fn encode(
    cube: &HyperCube,
    interleave: Interleave,
    data_type: DataType,
    byte_order: ByteOrder,
) -> Result<Vec<u8>> {
    let (h, w, c) = (cube.height(), cube.width(), cube.bands());
    let n = h * w * c;
    // order of file elements -> internal index
    let mut order = vec![0usize; n];
    for r in 0..h {
        for col in 0..w {
            for b in 0..c {
                order[interleave.file_index((h, w, c), r, col, b)] = (r * w + col) * c + b;
            }
        }
    }
    let mut out = Vec::with_capacity(n * data_type.size());
    for idx in order {
        data_type.encode(cube.data()[idx], byte_order, &mut out)?;
    }
    Ok(out)
}

/// Storage options for [`write_envi`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteOptions {
    pub interleave: Interleave,
    pub data_type: DataType,
    pub byte_order: ByteOrder,
}

impl Default for WriteOptions {
    fn default() -> Self {
        Self {
            interleave: Interleave::Bsq,
            data_type: DataType::F32,
            byte_order: ByteOrder::Little,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EnviError + '_ {
    move |source| EnviError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Path of the binary written next to `header_path`.
pub fn data_path_for(header_path: &Path) -> PathBuf {
    header_path.with_extension("raw")
}

fn find_data_file(header_path: &Path) -> Result<PathBuf> {
    let stem = header_path.with_extension("");
    let mut candidates = vec![stem.clone()];
    for ext in ["raw", "img", "dat", "bsq", "bil", "bip"] {
        candidates.push(stem.with_extension(ext));
    }
    candidates
        .into_iter()
        .find(|p| p.is_file() && p != header_path)
        .ok_or_else(|| EnviError::MissingDataFile(header_path.to_path_buf()))
}

/// Reads the header and binary, returning both.
pub fn read_raster(header_path: impl AsRef<Path>) -> Result<(EnviHeader, HyperCube)> {
    let header_path = header_path.as_ref();
    let text = fs::read_to_string(header_path).map_err(io_err(header_path))?;
    let header = EnviHeader::parse(&text)?;
    let data_path = find_data_file(header_path)?;
    let bytes = fs::read(&data_path).map_err(io_err(&data_path))?;
    let offset = header.header_offset.min(bytes.len());
    let cube = decode(&header, &bytes[offset..])?;
    Ok((header, cube))
}

pub fn load_envi(header_path: impl AsRef<Path>) -> Result<HyperCube> {
    read_raster(header_path).map(|(_, cube)| cube)
}

/// Loads a single-band integer raster as a label map.
pub fn load_labels(header_path: impl AsRef<Path>, ignore_index: u32) -> Result<LabelMap> {
    let (header, cube) = read_raster(header_path)?;
    if header.bands != 1 {
        return Err(EnviError::NotSingleBand(header.bands));
    }
    if !header.data_type.is_integer() {
        return Err(EnviError::NotIntegerType(header.data_type));
    }
    let labels = cube
        .data()
        .iter()
        .map(|&v| {
            if v < 0.0 {
                Err(EnviError::NegativeLabel(v))
            } else {
                Ok(v as u32)
            }
        })
        .collect::<Result<Vec<u32>>>()?;
    LabelMap::new(header.lines, header.samples, labels, ignore_index)
        .map_err(|e| EnviError::Invalid(e.to_string()))
}

/// Loads labels and checks they pair with `cube`.
pub fn load_labels_for(
    header_path: impl AsRef<Path>,
    ignore_index: u32,
    cube: &HyperCube,
) -> crate::Result<LabelMap> {
    let labels = load_labels(header_path, ignore_index)?;
    labels.validate_against(cube)?;
    Ok(labels)
}

/// Writes `cube` as `header_path` plus `<stem>.raw`.
pub fn write_envi(
    header_path: impl AsRef<Path>,
    cube: &HyperCube,
    opts: WriteOptions,
) -> Result<()> {
    let header_path = header_path.as_ref();
    let header = EnviHeader {
        samples: cube.width(),
        lines: cube.height(),
        bands: cube.bands(),
        interleave: opts.interleave,
        data_type: opts.data_type,
        byte_order: opts.byte_order,
        header_offset: 0,
        wavelengths: cube.wavelengths().map(<[f64]>::to_vec),
    };
    let bytes = encode(cube, opts.interleave, opts.data_type, opts.byte_order)?;
    let data_path = data_path_for(header_path);
    fs::write(&data_path, bytes).map_err(io_err(&data_path))?;
    fs::write(header_path, header.render()).map_err(io_err(header_path))?;
    Ok(())
}

/// Writes a label map as a single-band u8 raster (u16 when labels exceed 255).
pub fn write_labels(header_path: impl AsRef<Path>, labels: &LabelMap) -> Result<()> {
    let max = labels.labels().iter().copied().max().unwrap_or(0);
    let data_type = if max <= u8::MAX as u32 {
        DataType::U8
    } else if max <= u16::MAX as u32 {
        DataType::U16
    } else {
        DataType::I32
    };
    let cube = HyperCube::new(
        labels.height(),
        labels.width(),
        1,
        labels.labels().iter().map(|&l| l as f64).collect(),
    )
    .map_err(|e| EnviError::Invalid(e.to_string()))?;
    write_envi(
        header_path,
        &cube,
        WriteOptions {
            interleave: Interleave::Bsq,
            data_type,
            byte_order: ByteOrder::Little,
        },
    )
}
