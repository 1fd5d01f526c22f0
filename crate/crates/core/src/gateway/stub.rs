//! Local stub endpoint speaking the generation protocol, for tests and smoke runs.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::Value;
use tiny_http::{Header, Response, Server};

use super::remote::{WireRequest, WireResponse};

#[derive(Debug, Clone)]
pub enum StubReply {
    /// Every completion is this text followed by ` #<index>`.
    Fixed(String),
    /// Every completion is the request prompt.
    EchoPrompt,
}

#[derive(Debug, Clone)]
pub struct StubConfig {
    /// The first `fail_first` requests are answered with `fail_status`.
    pub fail_first: usize,
    pub fail_status: u16,
    pub reply: StubReply,
}

impl Default for StubConfig {
    fn default() -> Self {
        Self {
            fail_first: 0,
            fail_status: 503,
            reply: StubReply::Fixed("stub completion".into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapturedRequest {
    pub url: String,
    pub body: Value,
    pub authorization: Option<String>,
    pub status: u16,
}

/// Runs on a background thread; stopped when dropped.
pub struct StubServer {
    addr: SocketAddr,
    server: Arc<Server>,
    log: Arc<Mutex<Vec<CapturedRequest>>>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(config: StubConfig) -> std::io::Result<Self> {
        Self::bind("127.0.0.1:0", config)
    }

    pub fn bind(addr: &str, config: StubConfig) -> std::io::Result<Self> {
        let server = Arc::new(Server::http(addr).map_err(std::io::Error::other)?);
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("stub bound to a non-IP address"))?;
        let log = Arc::new(Mutex::new(Vec::new()));
        let handle = {
            let server = server.clone();
            let log = log.clone();
            std::thread::spawn(move || serve(&server, &config, &log))
        };
        Ok(Self {
            addr,
            server,
            log,
            handle: Some(handle),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}/generate", self.addr)
    }

    pub fn requests(&self) -> Vec<CapturedRequest> {
        self.log.lock().expect("stub log poisoned").clone()
    }

    pub fn request_count(&self) -> usize {
        self.log.lock().expect("stub log poisoned").len()
    }

    /// Blocks serving requests until the process exits.
    pub fn join(mut self) {
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn serve(server: &Server, config: &StubConfig, log: &Mutex<Vec<CapturedRequest>>) {
    for mut request in server.incoming_requests() {
        let mut raw = String::new();
        let _ = request.as_reader().read_to_string(&mut raw);
        let authorization = request
            .headers()
            .iter()
            .find(|h| h.field.equiv("Authorization"))
            .map(|h| h.value.to_string());
        let body: Value = serde_json::from_str(&raw).unwrap_or(Value::Null);
        let seen = log.lock().expect("stub log poisoned").len();

        let (status, payload) = if seen < config.fail_first {
            (config.fail_status, r#"{"error": "injected failure"}"#.to_string())
        } else {
            match serde_json::from_value::<WireRequest>(body.clone()) {
                Ok(wire) => {
                    let completions = (0..wire.n)
                        .map(|i| match &config.reply {
                            StubReply::Fixed(text) => format!("{text} #{i}"),
                            StubReply::EchoPrompt => wire.prompt.clone(),
                        })
                        .collect();
                    let reply = WireResponse { completions };
                    (200, serde_json::to_string(&reply).expect("serializable"))
                }
                Err(e) => (400, serde_json::json!({ "error": e.to_string() }).to_string()),
            }
        };
        log.lock().expect("stub log poisoned").push(CapturedRequest {
            url: request.url().to_string(),
            body,
            authorization,
            status,
        });
        let header = Header::from_bytes("Content-Type", "application/json").expect("static header");
        let _ = request.respond(Response::from_string(payload).with_status_code(status).with_header(header));
    }
}
