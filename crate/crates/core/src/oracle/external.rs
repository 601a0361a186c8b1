use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use super::wire::{self, Request, Response, TranscriptStep, PROTOCOL_VERSION};
use super::{Detection, Detector, DetectorInfo};
use crate::error::{Error, Result};
use crate::pointcloud::PointCloud;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

/// Where an external detector lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// Command line of a subprocess speaking the protocol on stdio.
    /// Arguments are split on whitespace; no shell is involved.
    Exec(String),
    /// `host:port` of a TCP peer.
    Tcp(String),
}

/// A live line-oriented connection to a peer.
pub struct Connection {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    child: Option<Child>,
    timeout: Duration,
}

impl Connection {
    pub fn open(endpoint: &Endpoint, timeout: Duration) -> Result<Self> {
        match endpoint {
            Endpoint::Exec(cmdline) => {
                let mut parts = cmdline.split_whitespace();
                let program = parts
                    .next()
                    .ok_or_else(|| Error::Transport("empty oracle command".into()))?;
                let mut child = Command::new(program)
                    .args(parts)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(|e| Error::Transport(format!("cannot spawn {program}: {e}")))?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Ok(Self {
                    writer: Box::new(stdin),
                    lines: spawn_reader(stdout),
                    child: Some(child),
                    timeout,
                })
            }
            Endpoint::Tcp(addr) => {
                let addrs: Vec<_> = addr
                    .to_socket_addrs()
                    .map_err(|e| Error::Transport(format!("cannot resolve {addr}: {e}")))?
                    .collect();
                let mut last = None;
                for a in addrs {
                    match TcpStream::connect_timeout(&a, timeout) {
                        Ok(stream) => {
                            let _ = stream.set_nodelay(true);
                            let reader = stream
                                .try_clone()
                                .map_err(|e| Error::Transport(e.to_string()))?;
                            return Ok(Self {
                                writer: Box::new(stream),
                                lines: spawn_reader(reader),
                                child: None,
                                timeout,
                            });
                        }
                        Err(e) => last = Some(e),
                    }
                }
                Err(Error::Transport(format!(
                    "cannot connect to {addr}: {}",
                    last.map_or("no addresses".to_string(), |e| e.to_string())
                )))
            }
        }
    }

    pub fn send_line(&mut self, line: &str) -> Result<()> {
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.write_all(b"\n"))
            .and_then(|_| self.writer.flush())
            .map_err(|e| Error::Transport(format!("write failed: {e}")))
    }

    /// Next line from the peer; `Ok(None)` on orderly end of stream.
    pub fn recv_line(&mut self) -> Result<Option<String>> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(Some(line)),
            Ok(Err(e)) => Err(Error::Transport(format!("read failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(Error::Transport(format!(
                "no response within {:.1} s",
                self.timeout.as_secs_f64()
            ))),
            Err(RecvTimeoutError::Disconnected) => Ok(None),
        }
    }

    fn close(&mut self) {
        if let Some(mut child) = self.child.take() {
            for _ in 0..50 {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(10));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl Drop for Connection {
    fn drop(&mut self) {
        self.close();
    }
}

fn spawn_reader<R: std::io::Read + Send + 'static>(r: R) -> Receiver<std::io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let mut reader = BufReader::new(r);
        loop {
            let mut line = String::new();
            match reader.read_line(&mut line) {
                Ok(0) => break,
                Ok(_) => {
                    while line.ends_with('\n') || line.ends_with('\r') {
                        line.pop();
                    }
                    if tx.send(Ok(line)).is_err() {
                        break;
                    }
                }
                Err(e) => {
                    let _ = tx.send(Err(e));
                    break;
                }
            }
        }
    });
    rx
}

/// Replays a recorded exchange against a fresh connection and checks every
/// response. Returns the number of responses checked.
///
/// Mismatches are protocol errors carrying the offending line; a silent or
/// vanished peer is a transport error.
pub fn check_conformance(endpoint: &Endpoint, steps: &[TranscriptStep], timeout: Duration) -> Result<usize> {
    let mut conn = Connection::open(endpoint, timeout)?;
    let mut checked = 0;
    for (i, step) in steps.iter().enumerate() {
        match step {
            TranscriptStep::Send(v) => conn.send_line(&v.to_string())?,
            TranscriptStep::Expect(v) => {
                let line = conn
                    .recv_line()?
                    .ok_or_else(|| Error::Transport(format!("peer closed before step {}", i + 1)))?;
                wire::conforms(&line, v).map_err(|m| Error::protocol(format!("step {}: {m}", i + 1), line))?;
                checked += 1;
            }
            TranscriptStep::Eof(true) => {
                if let Some(line) = conn.recv_line()? {
                    return Err(Error::protocol(format!("step {}: expected end of stream", i + 1), line));
                }
            }
            TranscriptStep::Eof(false) => {}
        }
    }
    Ok(checked)
}

/// Detector behind the wire protocol. Requests on one handle are serialized.
pub struct ExternalOracle {
    info: DetectorInfo,
    conn: Mutex<Connection>,
    next_id: AtomicU64,
}

impl ExternalOracle {
    pub fn connect(endpoint: &Endpoint) -> Result<Self> {
        Self::connect_with_timeout(endpoint, DEFAULT_TIMEOUT)
    }

    /// Opens the connection and performs the `hello` handshake.
    pub fn connect_with_timeout(endpoint: &Endpoint, timeout: Duration) -> Result<Self> {
        let mut conn = Connection::open(endpoint, timeout)?;
        conn.send_line(&wire::to_line(&Request::Hello {
            version: PROTOCOL_VERSION,
        }))?;
        let line = conn
            .recv_line()?
            .ok_or_else(|| Error::Transport("peer closed during handshake".into()))?;
        let info = match serde_json::from_str::<Response>(&line) {
            Ok(Response::Hello {
                version,
                name,
                default_threshold,
                classes,
            }) => {
                if version != PROTOCOL_VERSION {
                    return Err(Error::protocol(
                        format!("peer speaks protocol version {version}, expected {PROTOCOL_VERSION}"),
                        line,
                    ));
                }
                if !(default_threshold > 0.0 && default_threshold < 1.0) {
                    return Err(Error::protocol("default_threshold outside (0, 1)", line));
                }
                DetectorInfo {
                    name,
                    default_threshold,
                    classes,
                }
            }
            Ok(Response::Error { message }) => {
                return Err(Error::protocol(format!("handshake refused: {message}"), line))
            }
            Ok(_) => return Err(Error::protocol("expected a hello response", line)),
            Err(e) => return Err(Error::protocol(format!("unparseable handshake: {e}"), line)),
        };
        Ok(Self {
            info,
            conn: Mutex::new(conn),
            next_id: AtomicU64::new(1),
        })
    }

    /// Sends `shutdown` and closes the connection.
    pub fn shutdown(self) {
        drop(self)
    }
}

impl Detector for ExternalOracle {
    fn info(&self) -> &DetectorInfo {
        &self.info
    }

    fn detect(&self, cloud: &PointCloud) -> Result<Vec<Detection>> {
        let mut conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        let id = self.next_id.fetch_add(1, Ordering::SeqCst);
        let points = cloud.iter().map(|p| [p.x, p.y, p.z, p.intensity]).collect();
        conn.send_line(&wire::to_line(&Request::Detect { id, points }))?;
        let line = conn
            .recv_line()?
            .ok_or_else(|| Error::Transport("peer closed the connection".into()))?;
        match serde_json::from_str::<Response>(&line) {
            Ok(Response::Detections { id: got, detections }) => {
                if got != id {
                    return Err(Error::protocol(format!("response id {got} does not match request id {id}"), line));
                }
                for d in &detections {
                    d.validate().map_err(|m| Error::protocol(m, line.clone()))?;
                }
                Ok(detections)
            }
            Ok(Response::Error { message }) => Err(Error::protocol(format!("peer error: {message}"), line)),
            Ok(Response::Hello { .. }) => Err(Error::protocol("unexpected hello response", line)),
            Err(e) => Err(Error::protocol(format!("unparseable response: {e}"), line)),
        }
    }
}

impl Drop for ExternalOracle {
    fn drop(&mut self) {
        if let Ok(conn) = self.conn.get_mut() {
            let _ = conn.send_line(&wire::to_line(&Request::Shutdown));
        }
    }
}
