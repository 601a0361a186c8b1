use std::fmt;
use std::str::FromStr;

use super::{Detector, Endpoint, ExternalOracle};
use crate::error::{Error, Result};
use crate::synthetic;

/// `builtin:<name>` | `exec:<command line>` | `tcp:<host>:<port>`
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSpec {
    Builtin(String),
    External(Endpoint),
}

impl FromStr for OracleSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("oracle spec {s:?} lacks a kind prefix")))?;
        if rest.trim().is_empty() {
            return Err(Error::Config(format!("oracle spec {s:?} is missing its target")));
        }
        match kind {
            "builtin" => Ok(Self::Builtin(rest.to_string())),
            "exec" => Ok(Self::External(Endpoint::Exec(rest.to_string()))),
            "tcp" => Ok(Self::External(Endpoint::Tcp(rest.to_string()))),
            other => Err(Error::Config(format!("unknown oracle kind {other:?}"))),
        }
    }
}

impl fmt::Display for OracleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Builtin(n) => write!(f, "builtin:{n}"),
            Self::External(Endpoint::Exec(c)) => write!(f, "exec:{c}"),
            Self::External(Endpoint::Tcp(a)) => write!(f, "tcp:{a}"),
        }
    }
}

pub fn open_oracle(spec: &OracleSpec) -> Result<Box<dyn Detector>> {
    match spec {
        OracleSpec::Builtin(name) => Ok(Box::new(synthetic::builtin_detector(name)?)),
        OracleSpec::External(endpoint) => Ok(Box::new(ExternalOracle::connect(endpoint)?)),
    }
}
