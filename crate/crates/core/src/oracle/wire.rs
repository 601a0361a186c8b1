//! Newline-delimited JSON protocol spoken with external detectors.
//!
//! ```text
//! -> {"op":"hello","version":1}
//! <- {"op":"hello","version":1,"name":..,"default_threshold":..,"classes":[..]}
//! -> {"op":"detect","id":7,"points":[[x,y,z,i],..]}
//! <- {"op":"detections","id":7,"detections":[{"label":..,"score":..,"box":{..}}]}
//! -> {"op":"shutdown"}
//! ```
//! Unknown ops are answered with `{"op":"error","message":..}`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Detection, DetectorInfo};
use crate::pointcloud::BoundingBox;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Request {
    Hello { version: u32 },
    Detect { id: u64, points: Vec<[f64; 4]> },
    Shutdown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase")]
pub enum Response {
    Hello {
        version: u32,
        name: String,
        default_threshold: f64,
        classes: Vec<String>,
    },
    Detections {
        id: u64,
        detections: Vec<Detection>,
    },
    Error {
        message: String,
    },
}

/// Serializes one message as a single line (no trailing newline).
pub fn to_line<T: Serialize>(msg: &T) -> String {
    serde_json::to_string(msg).expect("wire messages always serialize")
}

/// Behaviour switches for [`serve_stub`].
#[derive(Debug, Clone, Copy, Default)]
pub struct StubOptions {
    /// Answer detect requests with `id + 1`, for negative conformance tests.
    pub corrupt_ids: bool,
}

pub fn stub_info() -> DetectorInfo {
    DetectorInfo {
        name: "stub".into(),
        default_threshold: 0.5,
        classes: super::CLASSES.iter().map(|s| s.to_string()).collect(),
    }
}

/// Scripted detections: nothing for an empty cloud, otherwise one `Car` at
/// the centroid with score 0.75.
pub fn stub_detections(points: &[[f64; 4]]) -> Vec<Detection> {
    if points.is_empty() {
        return Vec::new();
    }
    let n = points.len() as f64;
    let mut c = [0.0; 3];
    for p in points {
        for k in 0..3 {
            c[k] += p[k];
        }
    }
    vec![Detection {
        label: "Car".into(),
        score: 0.75,
        bbox: BoundingBox {
            center: c.map(|v| v / n),
            half_extents: [2.0, 1.0, 0.75],
            yaw: 0.0,
        },
    }]
}

/// Answers one request line; `None` means shut down.
pub fn stub_respond(line: &str, opts: StubOptions) -> Option<Response> {
    let value: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => {
            return Some(Response::Error {
                message: format!("malformed request: {e}"),
            })
        }
    };
    let op = value.get("op").and_then(Value::as_str).unwrap_or("").to_string();
    match serde_json::from_value::<Request>(value) {
        Ok(Request::Hello { version }) if version == PROTOCOL_VERSION => {
            let info = stub_info();
            Some(Response::Hello {
                version: PROTOCOL_VERSION,
                name: info.name,
                default_threshold: info.default_threshold,
                classes: info.classes,
            })
        }
        Ok(Request::Hello { version }) => Some(Response::Error {
            message: format!("unsupported protocol version {version}"),
        }),
        Ok(Request::Detect { id, points }) => Some(Response::Detections {
            id: if opts.corrupt_ids { id + 1 } else { id },
            detections: stub_detections(&points),
        }),
        Ok(Request::Shutdown) => None,
        Err(_) => Some(Response::Error {
            message: format!("unknown op {op:?}"),
        }),
    }
}

/// Dependency-free scripted peer used by tests and the conformance check.
pub fn serve_stub<R: BufRead, W: Write>(input: R, mut output: W, opts: StubOptions) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match stub_respond(&line, opts) {
            Some(resp) => {
                writeln!(output, "{}", to_line(&resp))?;
                output.flush()?;
            }
            None => break,
        }
    }
    Ok(())
}

/// The transcript every conforming peer must reproduce.
pub const GOLDEN_STUB_TRANSCRIPT: &str = include_str!("../../data/golden_stub.ndjson");

/// One step of a recorded exchange.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TranscriptStep {
    /// A line to send verbatim.
    Send(Value),
    /// The response the peer must produce.
    Expect(Value),
    /// The peer must close its output after the previous request.
    Eof(bool),
}

pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptStep>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("transcript line {}: {e}", i + 1)))
        .collect()
}

/// Checks a response line against the expected message.
///
/// The line must be a single compact JSON document. Values are compared
/// structurally; numbers compare equal within a relative 1e-9, so peers may
/// format floats differently.
pub fn conforms(line: &str, expected: &Value) -> Result<(), String> {
    let got: Value = serde_json::from_str(line).map_err(|e| format!("response is not JSON: {e}"))?;
    if line.contains('\n') || line.trim() != line {
        return Err("response is not a single trimmed line".into());
    }
    // error texts are free-form; only the shape is fixed
    if expected.get("op").and_then(Value::as_str) == Some("error") {
        return match (got.get("op").and_then(Value::as_str), got.get("message")) {
            (Some("error"), Some(Value::String(_))) => Ok(()),
            _ => Err(format!("expected an error response, got {got}")),
        };
    }
    if json_close(&got, expected) {
        Ok(())
    } else {
        Err(format!("expected {expected}, got {got}"))
    }
}

fn json_close(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            if let (Some(x), Some(y)) = (x.as_u64(), y.as_u64()) {
                return x == y;
            }
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            x == y || (x - y).abs() <= 1e-9 * x.abs().max(y.abs())
        }
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(p, q)| json_close(p, q))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len()
                && x
                    .iter()
                    .all(|(k, v)| y.get(k).is_some_and(|w| json_close(v, w)))
        }
        _ => a == b,
    }
}
