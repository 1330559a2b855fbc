use std::collections::HashMap;
use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::Deserialize;
use tiny_http::{Header, Method, Request, Response, Server};

use super::{PROTO_HEADER, PROTO_VERSION};

const WORKERS: usize = 4;

#[derive(Deserialize)]
struct MockRequest {
    question: String,
}

/// A running mock model server; stops when dropped.
pub struct MockServer {
    server: Arc<Server>,
    workers: Vec<JoinHandle<()>>,
    addr: SocketAddr,
}

impl MockServer {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server is stopped from another thread.
    pub fn join(mut self) {
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        for _ in &self.workers {
            self.server.unblock();
        }
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn json_header() -> Header {
    Header::from_bytes("Content-Type", "application/json").expect("static header")
}

fn proto_header() -> Header {
    Header::from_bytes(PROTO_HEADER, PROTO_VERSION).expect("static header")
}

fn respond(request: Request, status: u16, body: String) {
    let response =
        Response::from_string(body).with_status_code(status).with_header(json_header()).with_header(proto_header());
    let _ = request.respond(response);
}

fn error_body(message: &str) -> String {
    serde_json::json!({ "error": message }).to_string()
}

fn handle(mut request: Request, canned: &HashMap<String, String>, default: Option<&str>) {
    if request.method() != &Method::Post || request.url().split('?').next() != Some("/translate") {
        return respond(request, 404, error_body("not found"));
    }
    let mut body = String::new();
    if request.as_reader().read_to_string(&mut body).is_err() {
        return respond(request, 400, error_body("unreadable body"));
    }
    let question = match serde_json::from_str::<MockRequest>(&body) {
        Ok(r) => r.question,
        Err(e) => return respond(request, 400, error_body(&e.to_string())),
    };
    match canned.get(&question).map(String::as_str).or(default) {
        Some(sql) => {
            let body = serde_json::json!({ "sql": sql }).to_string();
            respond(request, 200, body)
        }
        None => respond(request, 404, error_body("unknown question")),
    }
}

/// Serves the translation protocol from a question -> SQL table. Unknown
/// questions get `default`, or 404 without one. Port 0 picks a free port.
pub fn serve_mock(port: u16, canned: HashMap<String, String>, default: Option<String>) -> io::Result<MockServer> {
    let server = Server::http(("127.0.0.1", port)).map_err(io::Error::other)?;
    let addr = server.server_addr().to_ip().ok_or_else(|| io::Error::other("not an IP listener"))?;
    let server = Arc::new(server);
    let table = Arc::new((canned, default));
    let workers = (0..WORKERS)
        .map(|_| {
            let server = Arc::clone(&server);
            let table = Arc::clone(&table);
            std::thread::spawn(move || {
                while let Ok(request) = server.recv() {
                    handle(request, &table.0, table.1.as_deref());
                }
            })
        })
        .collect();
    Ok(MockServer { server, workers, addr })
}
