use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use hsiseg::backends::RemoteBackend;
use hsiseg::{ScfBackend, ScfKind, SegmentationBackend};

pub const VALID_METHODS: &str = "pcc, sa, sa-eq, remote:<url>";

/// A backend selector as written on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Method {
    Scf(ScfKind),
    Remote(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMethod(pub String);

impl fmt::Display for UnknownMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown method `{}`; valid methods: {VALID_METHODS}",
            self.0
        )
    }
}

impl std::error::Error for UnknownMethod {}

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(url) = s.strip_prefix("remote:") {
            if url.starts_with("http://") || url.starts_with("https://") {
                return Ok(Method::Remote(url.to_string()));
            }
            return Err(UnknownMethod(s.to_string()));
        }
        s.parse::<ScfKind>()
            .map(Method::Scf)
            .map_err(|_| UnknownMethod(s.to_string()))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Scf(k) => f.write_str(k.id()),
            Method::Remote(url) => write!(f, "remote:{url}"),
        }
    }
}

impl Method {
    pub fn backend(&self, timeout: Duration) -> Box<dyn SegmentationBackend> {
        match self {
            Method::Scf(kind) => Box::new(ScfBackend::new(*kind)),
            Method::Remote(url) => Box::new(RemoteBackend::new(url.clone(), timeout)),
        }
    }
}
