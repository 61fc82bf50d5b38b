use std::collections::HashMap;
use std::io;
use std::net::SocketAddr;
use std::thread::JoinHandle;

use axum::extract::{Path, RawQuery, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use logiciot::engine::runtime::{EngineHandle, EnqueueError};
use logiciot::engine::EventKind;
use logiciot::Value;
use serde_json::json;
use tokio::sync::oneshot;
use tracing::{error, info};

use crate::rows::read_json;

fn failure(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

/// Matches query parameters to `names`: each exactly once, nothing else.
fn named_params(what: &str, names: &[String], query: Option<&str>) -> Result<Vec<Value>, String> {
    let mut given: HashMap<String, String> = HashMap::new();
    for (k, v) in url::form_urlencoded::parse(query.unwrap_or("").as_bytes()) {
        if !names.iter().any(|n| *n == k) {
            return Err(format!("{what}: unexpected parameter `{k}`"));
        }
        if given.insert(k.to_string(), v.into_owned()).is_some() {
            return Err(format!("{what}: duplicate parameter `{k}`"));
        }
    }
    names
        .iter()
        .map(|n| {
            given
                .get(n)
                .map(|raw| Value::from_query_text(raw))
                .ok_or_else(|| format!("{what}: missing parameter `{n}`"))
        })
        .collect()
}

fn queued(handle: &EngineHandle, kind: EventKind) -> Response {
    match handle.enqueue(kind) {
        Ok(seq) => (StatusCode::ACCEPTED, Json(json!({ "queued": true, "seq": seq }))).into_response(),
        Err(e @ (EnqueueError::Full | EnqueueError::Closed)) => {
            failure(StatusCode::SERVICE_UNAVAILABLE, e.to_string())
        }
    }
}

async fn insert(State(h): State<EngineHandle>, Path(name): Path<String>, RawQuery(q): RawQuery) -> Response {
    let Some(decl) = h.program().relation(&name) else {
        return failure(StatusCode::NOT_FOUND, format!("unknown relation `{name}`"));
    };
    match named_params(&name, &decl.fields, q.as_deref()) {
        Ok(values) => queued(&h, EventKind::ExternalInsert { relation: name, values }),
        Err(e) => failure(StatusCode::BAD_REQUEST, e),
    }
}

async fn read(State(h): State<EngineHandle>, Path(name): Path<String>, RawQuery(q): RawQuery) -> Response {
    if h.program().relation(&name).is_none() {
        return failure(StatusCode::NOT_FOUND, format!("unknown relation `{name}`"));
    }
    let mut limit = 1usize;
    for (k, v) in url::form_urlencoded::parse(q.as_deref().unwrap_or("").as_bytes()) {
        if k != "limit" {
            return failure(StatusCode::BAD_REQUEST, format!("unexpected parameter `{k}`"));
        }
        limit = match v.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => return failure(StatusCode::BAD_REQUEST, "limit must be a positive integer"),
        };
    }
    let store = h.store().read();
    let limit = limit.min(store.window(&name).map(|w| w.capacity()).unwrap_or(1));
    match read_json(&store, &name, limit) {
        Ok(body) => ([(header::CONTENT_TYPE, "application/json")], body).into_response(),
        Err(e) => failure(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn endpoint(State(h): State<EngineHandle>, Path(name): Path<String>, RawQuery(q): RawQuery) -> Response {
    let Some(decl) = h.program().endpoint(&name) else {
        return failure(StatusCode::NOT_FOUND, format!("unknown endpoint `{name}`"));
    };
    match named_params(&name, &decl.params, q.as_deref()) {
        Ok(args) => queued(&h, EventKind::EndpointCall { name, args }),
        Err(e) => failure(StatusCode::BAD_REQUEST, e),
    }
}

async fn healthz() -> Json<serde_json::Value> {
    Json(json!({ "ok": true }))
}

/// Routes for every relation and endpoint of the handle's program.
pub fn router(handle: EngineHandle) -> Router {
    Router::new()
        .route("/rel/{name}/insert", get(insert))
        .route("/rel/{name}/read", get(read))
        .route("/endpoint/{name}", get(endpoint))
        .route("/healthz", get(healthz))
        .fallback(|| async { failure(StatusCode::NOT_FOUND, "no such route") })
        .with_state(handle)
}

/// The gateway on its own thread with its own async runtime.
pub struct Server {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl Server {
    /// Serves on an already bound listener, so callers can report a busy
    /// port before loading anything.
    pub fn start(listener: std::net::TcpListener, handle: EngineHandle) -> io::Result<Server> {
        listener.set_nonblocking(true)?;
        let addr = listener.local_addr()?;
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .thread_name("logiciot-http")
            .enable_io()
            .build()?;
        let (stop, stopped) = oneshot::channel::<()>();
        let app = router(handle);
        let thread = std::thread::Builder::new()
            .name("logiciot-gateway".into())
            .spawn(move || {
                runtime.block_on(async move {
                    let listener = tokio::net::TcpListener::from_std(listener)?;
                    info!(%addr, "gateway listening");
                    axum::serve(listener, app)
                        .with_graceful_shutdown(async {
                            let _ = stopped.await;
                        })
                        .await
                })
            })?;
        Ok(Server {
            addr,
            stop: Some(stop),
            thread: Some(thread),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting requests and waits for in-flight ones.
    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        if let Some(t) = self.thread.take() {
            match t.join() {
                Ok(Err(e)) => error!(error = %e, "gateway stopped with an error"),
                Err(_) => error!("gateway thread panicked"),
                Ok(Ok(())) => {}
            }
        }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.shutdown();
    }
}
