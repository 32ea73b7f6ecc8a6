//! A local HTTP server speaking the remote provider protocol, for tests.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use tiny_http::{Header, Response, Server};

use crate::provider::{LogitRequest, LogitResponse};
use crate::LevelLogits;

/// What the stub sends back for one attempt.
#[derive(Debug, Clone)]
pub enum StubReply {
    Logits(LevelLogits),
    Status(u16),
    /// Raw JSON body, sent with status 200.
    Body(String),
    Delayed(Duration, Box<StubReply>),
}

type Responder = dyn Fn(&LogitRequest, u32) -> StubReply + Send + Sync;

#[derive(Default)]
struct Stats {
    attempts: Mutex<HashMap<String, u32>>,
    inflight: AtomicUsize,
    peak: AtomicUsize,
    total: AtomicUsize,
}

/// Serves until dropped. The responder receives the request and its 1-based attempt number.
pub struct StubServer {
    server: Arc<Server>,
    stats: Arc<Stats>,
    worker: Option<JoinHandle<()>>,
    url: String,
}

impl StubServer {
    pub fn start<F>(responder: F) -> Self
    where
        F: Fn(&LogitRequest, u32) -> StubReply + Send + Sync + 'static,
    {
        let server = Arc::new(Server::http("127.0.0.1:0").expect("bind stub server"));
        let url = format!("http://{}/logits", server.server_addr().to_ip().expect("tcp address"));
        let stats = Arc::new(Stats::default());
        let responder: Arc<Responder> = Arc::new(responder);
        let worker = {
            let server = Arc::clone(&server);
            let stats = Arc::clone(&stats);
            thread::spawn(move || {
                for mut request in server.incoming_requests() {
                    let stats = Arc::clone(&stats);
                    let responder = Arc::clone(&responder);
                    thread::spawn(move || {
                        let now = stats.inflight.fetch_add(1, Ordering::SeqCst) + 1;
                        stats.peak.fetch_max(now, Ordering::SeqCst);
                        stats.total.fetch_add(1, Ordering::SeqCst);
                        let mut body = String::new();
                        let _ = request.as_reader().read_to_string(&mut body);
                        let reply = match serde_json::from_str::<LogitRequest>(&body) {
                            Ok(req) => {
                                let attempt = {
                                    let mut attempts = stats.attempts.lock().unwrap();
                                    let n = attempts.entry(req.id.clone()).or_insert(0);
                                    *n += 1;
                                    *n
                                };
                                let reply = responder(&req, attempt);
                                Some((req, reply))
                            }
                            Err(_) => None,
                        };
                        let response = match reply {
                            Some((req, reply)) => render(&req, reply),
                            None => Response::from_string("bad request").with_status_code(400),
                        };
                        stats.inflight.fetch_sub(1, Ordering::SeqCst);
                        let _ = request.respond(response);
                    });
                }
            })
        };
        Self { server, stats, worker: Some(worker), url }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    /// Attempts seen for `id` so far.
    pub fn attempts(&self, id: &str) -> u32 {
        self.stats.attempts.lock().unwrap().get(id).copied().unwrap_or(0)
    }

    pub fn total_requests(&self) -> usize {
        self.stats.total.load(Ordering::SeqCst)
    }

    /// Largest number of requests handled at the same time.
    pub fn peak_inflight(&self) -> usize {
        self.stats.peak.load(Ordering::SeqCst)
    }
}

fn render(request: &LogitRequest, reply: StubReply) -> Response<std::io::Cursor<Vec<u8>>> {
    let json = Header::from_bytes("Content-Type", "application/json").expect("static header");
    match reply {
        StubReply::Logits(logits) => {
            let body = LogitResponse { id: request.id.clone(), logits }.to_json().to_string();
            Response::from_string(body).with_header(json)
        }
        StubReply::Status(code) => Response::from_string("unavailable").with_status_code(code),
        StubReply::Body(body) => Response::from_string(body).with_header(json),
        StubReply::Delayed(delay, inner) => {
            thread::sleep(delay);
            render(request, *inner)
        }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(worker) = self.worker.take() {
            let _ = worker.join();
        }
    }
}
