//! Client for an external predictor process speaking line protocol v1 over
//! its standard streams.
//!
//! ```text
//! -> HELLO PUN 1
//! <- OK PUN 1
//! -> PREDICT <elev_deg> <azim_deg> <radius> <absolute-ppm-path>
//! <- UMAP <v1> ... <v48>        or   ERR <message>
//! ```

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use tempfile::TempDir;

use crate::error::{Error, Result};
use crate::geometry::{anchors_for_view, Viewpoint, ANCHOR_N_SIDE, N_ANCHORS};
use crate::image::Image;
use crate::predictor::{require_image, Predictor};
use crate::umap::{UMap, UncertaintyKind};

pub const HELLO: &str = "HELLO PUN 1";
pub const HELLO_REPLY: &str = "OK PUN 1";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(10);

pub struct ExternalPredictor {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    scratch: TempDir,
    requests: usize,
}

impl std::fmt::Debug for ExternalPredictor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalPredictor").field("pid", &self.child.id()).finish()
    }
}

impl ExternalPredictor {
    /// Spawns `program args...` and performs the handshake.
    pub fn spawn(program: &str, args: &[String], timeout: Duration) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Peer(format!("cannot spawn `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        let scratch = tempfile::tempdir().map_err(|e| Error::Peer(format!("scratch directory: {e}")))?;
        let mut p = ExternalPredictor { child, stdin, lines: rx, timeout, scratch, requests: 0 };
        let reply = p.exchange(HELLO)?;
        if reply.trim_end() != HELLO_REPLY {
            return Err(Error::Protocol { line: reply, message: format!("expected `{HELLO_REPLY}`") });
        }
        Ok(p)
    }

    fn exchange(&mut self, request: &str) -> Result<String> {
        writeln!(self.stdin, "{request}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| Error::Peer(format!("write to peer failed: {e}")))?;
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(Error::Peer(format!("read from peer failed: {e}"))),
            Err(RecvTimeoutError::Timeout) => Err(Error::Peer(format!("no reply within {:?}", self.timeout))),
            Err(RecvTimeoutError::Disconnected) => Err(Error::Peer("peer closed its output".into())),
        }
    }

    /// One `PREDICT` round trip for an image already on disk.
    pub fn request_values(&mut self, image_path: &Path, view: &Viewpoint) -> Result<Vec<f64>> {
        let abs = std::path::absolute(image_path).map_err(|e| Error::io(image_path, e))?;
        let path = abs.to_str().ok_or_else(|| Error::InvalidArgument("image path is not UTF-8".into()))?;
        if path.contains(['\n', '\r']) {
            return Err(Error::InvalidArgument("image path contains a line break".into()));
        }
        let request = format!("PREDICT {:?} {:?} {:?} {path}", view.elevation_deg, view.azimuth_deg, view.radius);
        let reply = self.exchange(&request)?;
        parse_reply(&reply)
    }
}

/// Validates a reply line: `UMAP` plus 48 finite values in `[0, 1]`.
pub fn parse_reply(line: &str) -> Result<Vec<f64>> {
    let line = line.trim_end_matches(['\r', '\n']);
    if let Some(msg) = line.strip_prefix("ERR") {
        if msg.is_empty() || msg.starts_with(' ') {
            return Err(Error::Peer(format!("peer reported: {}", msg.trim_start())));
        }
    }
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("UMAP") {
        return Err(Error::Protocol { line: line.to_string(), message: "expected `UMAP` or `ERR`".into() });
    }
    let mut values = Vec::with_capacity(N_ANCHORS);
    for tok in tokens {
        let v: f64 = tok.parse().map_err(|_| Error::Protocol {
            line: line.to_string(),
            message: format!("`{tok}` is not a number"),
        })?;
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Protocol { line: line.to_string(), message: format!("value {tok} outside [0, 1]") });
        }
        values.push(v);
    }
    if values.len() != N_ANCHORS {
        return Err(Error::Protocol {
            line: line.to_string(),
            message: format!("expected {N_ANCHORS} values, got {}", values.len()),
        });
    }
    Ok(values)
}

impl Predictor for ExternalPredictor {
    fn predict(&mut self, image: Option<&Image>, view: &Viewpoint, kind: UncertaintyKind) -> Result<UMap> {
        let image = require_image(image, "external")?;
        let path = self.scratch.path().join(format!("request_{:05}.ppm", self.requests));
        self.requests += 1;
        image.write_ppm(&path)?;
        let values = self.request_values(&path, view)?;
        UMap::new(values, anchors_for_view(view, ANCHOR_N_SIDE)?, *view, kind, 0)
    }
}

impl Drop for ExternalPredictor {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
