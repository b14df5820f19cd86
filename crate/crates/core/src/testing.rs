//! Minimal HTTP/1.1 server standing in for a chat backend in tests and
//! offline smoke runs. Each request body is recorded and answered by a
//! caller-supplied handler.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

type Handler = dyn Fn(&str) -> (u16, String) + Send + Sync;

pub struct StubServer {
    addr: SocketAddr,
    requests: Arc<Mutex<Vec<String>>>,
    stop: Arc<AtomicBool>,
    worker: Option<JoinHandle<()>>,
}

impl StubServer {
    /// Serves `handler(request_body) -> (status, response_body)`.
    pub fn start<F>(handler: F) -> std::io::Result<Self>
    where
        F: Fn(&str) -> (u16, String) + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let requests = Arc::new(Mutex::new(Vec::new()));
        let stop = Arc::new(AtomicBool::new(false));
        let handler: Arc<Handler> = Arc::new(handler);
        let (reqs, halt) = (Arc::clone(&requests), Arc::clone(&stop));
        let worker = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if halt.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(stream) = stream {
                    let _ = serve(stream, &*handler, &reqs);
                }
            }
        });
        Ok(Self { addr, requests, stop, worker: Some(worker) })
    }

    /// Replies with the scripted `(status, body)` pairs in order, repeating
    /// the last one once the script runs out.
    pub fn scripted(responses: Vec<(u16, String)>) -> std::io::Result<Self> {
        let script = Mutex::new((responses, 0usize));
        Self::start(move |_| {
            let mut guard = script.lock().unwrap_or_else(|e| e.into_inner());
            let (list, next) = &mut *guard;
            let i = (*next).min(list.len().saturating_sub(1));
            *next += 1;
            list.get(i).cloned().unwrap_or((500, "no script".into()))
        })
    }

    /// Wraps `content` in a chat response body.
    pub fn chat_reply(content: &str) -> String {
        serde_json::json!({"message": {"role": "assistant", "content": content}, "done": true}).to_string()
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn requests(&self) -> Vec<String> {
        self.requests.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn request_count(&self) -> usize {
        self.requests.lock().unwrap_or_else(|e| e.into_inner()).len()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn serve(stream: TcpStream, handler: &Handler, requests: &Mutex<Vec<String>>) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    let mut content_length = 0usize;
    reader.read_line(&mut line)?;
    if line.is_empty() {
        return Ok(());
    }
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.trim().eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let body = String::from_utf8_lossy(&body).into_owned();
    requests.lock().unwrap_or_else(|e| e.into_inner()).push(body.clone());
    let (status, reply) = handler(&body);
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {status} {}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
        if status < 400 { "OK" } else { "Error" },
        reply.len()
    )?;
    stream.flush()
}
