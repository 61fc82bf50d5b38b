use std::collections::BTreeMap;
use std::io::Read;
use std::thread::JoinHandle;
use std::time::Duration;

use crossbeam_channel::{bounded, Sender, TrySendError};
use logiciot::dsl::{RelationDecl, TIMESTAMP_FIELD};
use logiciot::engine::{CallMode, Outbound, OutboundBinding, OutboundError};
use logiciot::store::Record;
use logiciot::Value;
use tracing::{debug, warn};
use url::Url;

/// Largest response body read from a module or backend.
pub const MAX_BODY_BYTES: u64 = 1 << 20;

#[derive(Debug, Clone)]
pub struct OutboundOptions {
    /// Base for relative MAP targets such as `module2.jsp`.
    pub module_base: Option<Url>,
    /// Threads delivering webhooks and asynchronous calls.
    pub workers: usize,
    /// Pending deliveries before new ones are dropped.
    pub queue: usize,
}

impl Default for OutboundOptions {
    fn default() -> Self {
        OutboundOptions {
            module_base: None,
            workers: 4,
            queue: 1024,
        }
    }
}

struct Job {
    url: Url,
    timeout: Duration,
    what: String,
}

/// Blocking HTTP transport for the engine. Synchronous calls run on the
/// caller's thread; webhooks and `ACALL`s go to a worker pool.
pub struct HttpOutbound {
    client: reqwest::blocking::Client,
    base: Option<Url>,
    jobs: Option<Sender<Job>>,
    workers: Vec<JoinHandle<()>>,
}

fn transport(e: reqwest::Error) -> OutboundError {
    if e.is_timeout() {
        OutboundError::Timeout
    } else {
        OutboundError::Transport(e.to_string())
    }
}

impl HttpOutbound {
    pub fn new(options: OutboundOptions) -> Result<HttpOutbound, OutboundError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(None)
            .build()
            .map_err(|e| OutboundError::Transport(e.to_string()))?;
        let (tx, rx) = bounded::<Job>(options.queue.max(1));
        let workers = (0..options.workers.max(1))
            .map(|i| {
                let rx = rx.clone();
                let client = client.clone();
                std::thread::Builder::new()
                    .name(format!("logiciot-outbound-{i}"))
                    .spawn(move || {
                        for job in rx {
                            match Self::get(&client, job.url.clone(), job.timeout) {
                                Ok((status, _)) if (200..300).contains(&status) => {
                                    debug!(what = %job.what, url = %job.url, "delivered")
                                }
                                Ok((status, _)) => {
                                    warn!(what = %job.what, url = %job.url, status, "delivery rejected")
                                }
                                Err(e) => warn!(what = %job.what, url = %job.url, error = %e, "delivery failed"),
                            }
                        }
                    })
                    .expect("spawn outbound worker")
            })
            .collect();
        Ok(HttpOutbound {
            client,
            base: options.module_base,
            jobs: Some(tx),
            workers,
        })
    }

    fn resolve(&self, target: &str) -> Result<Url, OutboundError> {
        match Url::parse(target) {
            Ok(url) => Ok(url),
            Err(url::ParseError::RelativeUrlWithoutBase) => match &self.base {
                Some(base) => base
                    .join(target)
                    .map_err(|e| OutboundError::Unavailable(format!("bad target `{target}`: {e}"))),
                None => Err(OutboundError::Unavailable(format!(
                    "relative target `{target}` needs a module base URL"
                ))),
            },
            Err(e) => Err(OutboundError::Unavailable(format!("bad target `{target}`: {e}"))),
        }
    }

    /// GET with a deadline, returning the status and at most
    /// [`MAX_BODY_BYTES`] of body.
    fn get(client: &reqwest::blocking::Client, url: Url, timeout: Duration) -> Result<(u16, Vec<u8>), OutboundError> {
        let resp = client.get(url).timeout(timeout).send().map_err(transport)?;
        let status = resp.status().as_u16();
        let mut body = Vec::new();
        resp.take(MAX_BODY_BYTES + 1).read_to_end(&mut body).map_err(|e| {
            if e.kind() == std::io::ErrorKind::TimedOut || e.to_string().contains("timed out") {
                OutboundError::Timeout
            } else {
                OutboundError::Transport(e.to_string())
            }
        })?;
        if body.len() as u64 > MAX_BODY_BYTES {
            return Err(OutboundError::MalformedBody("response exceeds 1 MiB".into()));
        }
        Ok((status, body))
    }

    fn enqueue(&self, job: Job) {
        let Some(tx) = &self.jobs else { return };
        match tx.try_send(job) {
            Ok(()) => {}
            Err(TrySendError::Full(job)) => warn!(what = %job.what, "outbound queue full, dropped"),
            Err(TrySendError::Disconnected(job)) => warn!(what = %job.what, "outbound pool stopped, dropped"),
        }
    }
}

fn timeout_of(binding: &OutboundBinding) -> Duration {
    Duration::from_millis(binding.timeout_ms)
}

fn parse_outputs(body: &[u8], outputs: &[String]) -> Result<BTreeMap<String, Value>, OutboundError> {
    if outputs.is_empty() {
        return Ok(BTreeMap::new());
    }
    let json: serde_json::Value =
        serde_json::from_slice(body).map_err(|e| OutboundError::MalformedBody(e.to_string()))?;
    let serde_json::Value::Object(obj) = json else {
        return Err(OutboundError::MalformedBody("expected a JSON object".into()));
    };
    outputs
        .iter()
        .map(|name| {
            let raw = obj
                .get(name)
                .ok_or_else(|| OutboundError::MissingOutput(name.clone()))?;
            let v = Value::from_json(raw).ok_or_else(|| {
                OutboundError::MalformedBody(format!("output `{name}` is not a scalar"))
            })?;
            Ok((name.clone(), v))
        })
        .collect()
}

impl Outbound for HttpOutbound {
    fn invoke_module(
        &self,
        binding: &OutboundBinding,
        outputs: &[String],
        args: &[Value],
        mode: CallMode,
    ) -> Result<BTreeMap<String, Value>, OutboundError> {
        let mut url = self.resolve(&binding.target)?;
        if !args.is_empty() {
            let mut q = url.query_pairs_mut();
            for (i, a) in args.iter().enumerate() {
                q.append_pair(&format!("p{}", i + 1), &a.to_query_text());
            }
        }
        match mode {
            CallMode::Async => {
                self.enqueue(Job {
                    url,
                    timeout: timeout_of(binding),
                    what: format!("ACALL {}", binding.name),
                });
                Ok(BTreeMap::new())
            }
            CallMode::Sync => {
                let (status, body) = Self::get(&self.client, url, timeout_of(binding))?;
                if status != 200 {
                    return Err(OutboundError::Status(status));
                }
                parse_outputs(&body, outputs)
            }
        }
    }

    fn forward_insert(
        &self,
        binding: &OutboundBinding,
        relation: &RelationDecl,
        values: &[Value],
    ) -> Result<(), OutboundError> {
        let mut url = self.resolve(&binding.target)?;
        let path = format!("{}/insert", url.path().trim_end_matches('/'));
        url.set_path(&path);
        {
            let mut q = url.query_pairs_mut();
            for (f, v) in relation.fields.iter().zip(values) {
                q.append_pair(f, &v.to_query_text());
            }
        }
        let (status, _) = Self::get(&self.client, url, timeout_of(binding))?;
        if (200..300).contains(&status) {
            Ok(())
        } else {
            Err(OutboundError::Status(status))
        }
    }

    fn fire_trigger_webhook(&self, binding: &OutboundBinding, relation: &RelationDecl, record: &Record) {
        let mut url = match self.resolve(&binding.target) {
            Ok(u) => u,
            Err(e) => {
                warn!(relation = %relation.name, error = %e, "webhook target unusable");
                return;
            }
        };
        {
            let mut q = url.query_pairs_mut();
            q.append_pair(TIMESTAMP_FIELD, &record.t.to_string());
            for (f, v) in relation.fields.iter().zip(&record.values) {
                q.append_pair(f, &v.to_query_text());
            }
        }
        self.enqueue(Job {
            url,
            timeout: timeout_of(binding),
            what: format!("webhook {}", relation.name),
        });
    }
}

impl Drop for HttpOutbound {
    /// Delivers what is already queued, then stops the workers.
    fn drop(&mut self) {
        self.jobs.take();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}
