//! Minimal in-process HTTP server speaking the remote-backend protocol.
//!
//! In [`MockMode::Echo`] it answers every `POST /segment` with the request's
//! spectral prompt as the score map, which makes the remote path checkable
//! end to end without a learned model. The other modes produce specific
//! protocol violations.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::Duration;

use super::wire::{
    decode_f32le, encode_f32le, ErrorBody, SegmentRequest, SegmentResponse, REQUEST_ID_HEADER,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MockMode {
    /// Return the spectral prompt unchanged.
    Echo,
    /// Return a map one row taller than requested.
    WrongShape,
    /// Return the prompt with its first value replaced.
    BadValue(f32),
    /// Reply with this status and an `{error}` body.
    Status(u16),
    /// Reply 200 with a body that is not JSON.
    Garbage,
    /// Echo a different correlation id.
    WrongId,
    /// Sleep before echoing.
    Delay(Duration),
}

pub struct MockServer {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    served: Arc<AtomicUsize>,
    handle: Option<JoinHandle<()>>,
}

impl MockServer {
    pub fn start(mode: MockMode) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let served = Arc::new(AtomicUsize::new(0));
        let (stop2, served2) = (stop.clone(), served.clone());
        let handle = thread::spawn(move || {
            for stream in listener.incoming() {
                if stop2.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let served = served2.clone();
                thread::spawn(move || {
                    if handle_connection(stream, mode).is_ok() {
                        served.fetch_add(1, Ordering::SeqCst);
                    }
                });
            }
        });
        Ok(Self {
            addr,
            stop,
            served,
            handle: Some(handle),
        })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests_served(&self) -> usize {
        self.served.load(Ordering::SeqCst)
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the accept loop
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn respond(
    stream: &mut TcpStream,
    status: u16,
    request_id: &str,
    body: &str,
) -> std::io::Result<()> {
    let reason = match status {
        200 => "OK",
        400 => "Bad Request",
        404 => "Not Found",
        _ => "Error",
    };
    write!(
        stream,
        "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\n{REQUEST_ID_HEADER}: {request_id}\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
        body.len()
    )?;
    stream.flush()
}

fn error_body(msg: &str) -> String {
    serde_json::to_string(&ErrorBody { error: msg.into() }).unwrap()
}

fn handle_connection(mut stream: TcpStream, mode: MockMode) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut content_length = 0usize;
    let mut request_id = String::new();
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line)? == 0 {
            break;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            let k = k.trim().to_ascii_lowercase();
            if k == "content-length" {
                content_length = v.trim().parse().unwrap_or(0);
            } else if k == REQUEST_ID_HEADER {
                request_id = v.trim().to_string();
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;

    let mut parts = request_line.split_whitespace();
    let (method, path) = (parts.next().unwrap_or(""), parts.next().unwrap_or(""));
    if method != "POST" || path != "/segment" {
        return respond(&mut stream, 404, &request_id, &error_body("not found"));
    }
    let req: SegmentRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return respond(&mut stream, 400, &request_id, &error_body(&e.to_string())),
    };
    let prompt = match decode_f32le(&req.prompt_b64) {
        Ok(p) => p,
        Err(e) => return respond(&mut stream, 400, &request_id, &error_body(&e)),
    };
    let mut values: Vec<f64> = prompt.into_iter().map(f64::from).collect();
    let mut height = req.height;
    let mut id = request_id.clone();
    match mode {
        MockMode::Echo => {}
        MockMode::WrongShape => {
            height += 1;
            values.extend(std::iter::repeat_n(0.0, req.width));
        }
        MockMode::BadValue(v) => {
            if let Some(first) = values.first_mut() {
                *first = v as f64;
            }
        }
        MockMode::Status(code) => {
            return respond(
                &mut stream,
                code,
                &request_id,
                &error_body("model unavailable"),
            );
        }
        MockMode::Garbage => {
            return respond(&mut stream, 200, &request_id, "<html>not json</html>")
        }
        MockMode::WrongId => id = format!("{request_id}-other"),
        MockMode::Delay(d) => thread::sleep(d),
    }
    let resp = SegmentResponse {
        height,
        width: req.width,
        scores_b64: encode_f32le(&values),
    };
    respond(
        &mut stream,
        200,
        &id,
        &serde_json::to_string(&resp).unwrap(),
    )
}
