//! Seeded sensor simulator: a reproducible stream of GET requests against
//! a running gateway.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use logiciot::Value;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use url::Url;

/// Value generator for one query parameter.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldGen {
    /// `const:V`
    Const(Value),
    /// `uniform:MIN:MAX` with integer bounds; inclusive.
    UniformInt(i64, i64),
    /// `uniform:MIN:MAX` with a fractional bound; half-open.
    UniformFloat(f64, f64),
    /// `choice:a|b|c`
    Choice(Vec<Value>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad generator `{spec}`: {message}")]
pub struct GenError {
    pub spec: String,
    pub message: String,
}

impl FromStr for FieldGen {
    type Err = GenError;

    fn from_str(spec: &str) -> Result<FieldGen, GenError> {
        let err = |m: &str| GenError { spec: spec.into(), message: m.into() };
        let (kind, rest) = spec.split_once(':').ok_or_else(|| err("expected KIND:ARGS"))?;
        match kind {
            "const" => Ok(FieldGen::Const(Value::from_query_text(rest))),
            "choice" => Ok(FieldGen::Choice(rest.split('|').map(Value::from_query_text).collect())),
            "uniform" => {
                // a leading '-' belongs to the bound, so split on the last ':'
                let (lo, hi) = rest.rsplit_once(':').ok_or_else(|| err("expected uniform:MIN:MAX"))?;
                if let (Ok(a), Ok(b)) = (lo.parse::<i64>(), hi.parse::<i64>()) {
                    return if a <= b { Ok(FieldGen::UniformInt(a, b)) } else { Err(err("MIN > MAX")) };
                }
                let a: f64 = lo.parse().map_err(|_| err("MIN is not a number"))?;
                let b: f64 = hi.parse().map_err(|_| err("MAX is not a number"))?;
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(err("need finite MIN < MAX"));
                }
                Ok(FieldGen::UniformFloat(a, b))
            }
            _ => Err(err("kind must be const, uniform or choice")),
        }
    }
}

impl FieldGen {
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Value {
        match self {
            FieldGen::Const(v) => v.clone(),
            FieldGen::UniformInt(a, b) => Value::Number(rng.random_range(*a..=*b) as f64),
            FieldGen::UniformFloat(a, b) => Value::Number(rng.random_range(*a..*b)),
            FieldGen::Choice(options) => options[rng.random_range(0..options.len())].clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimTarget {
    Relation(String),
    Endpoint(String),
}

#[derive(Debug, Clone)]
pub struct SimProfile {
    /// Gateway base URL, e.g. `http://127.0.0.1:8080`.
    pub target: Url,
    pub kind: SimTarget,
    pub count: usize,
    pub period_ms: u64,
    pub seed: u64,
    pub gens: Vec<(String, FieldGen)>,
}

impl SimProfile {
    /// Generated values, one row per request, fields in `gens` order.
    pub fn values(&self) -> Vec<Vec<Value>> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.count)
            .map(|_| self.gens.iter().map(|(_, g)| g.sample(&mut rng)).collect())
            .collect()
    }

    /// The exact request sequence.
    pub fn requests(&self) -> Vec<Url> {
        let path = match &self.kind {
            SimTarget::Relation(r) => format!("rel/{r}/insert"),
            SimTarget::Endpoint(e) => format!("endpoint/{e}"),
        };
        let mut base = self.target.clone();
        if !base.path().ends_with('/') {
            let p = format!("{}/", base.path());
            base.set_path(&p);
        }
        let endpoint = base.join(&path).expect("relative path joins");
        self.values()
            .into_iter()
            .map(|row| {
                let mut url = endpoint.clone();
                if !row.is_empty() {
                    let mut q = url.query_pairs_mut();
                    for ((name, _), v) in self.gens.iter().zip(row) {
                        q.append_pair(name, &v.to_query_text());
                    }
                }
                url
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimReport {
    pub sent: usize,
    pub ok: usize,
    pub err: usize,
}

impl fmt::Display for SimReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "sent={} ok={} err={}", self.sent, self.ok, self.err)
    }
}

/// Sends every request on a fixed schedule; non-2xx and transport
/// failures count as errors.
pub fn run(profile: &SimProfile) -> SimReport {
    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(5))
        .build()
        .expect("http client");
    let start = Instant::now();
    let mut report = SimReport::default();
    for (i, url) in profile.requests().into_iter().enumerate() {
        let due = start + Duration::from_millis(profile.period_ms.saturating_mul(i as u64));
        if let Some(wait) = due.checked_duration_since(Instant::now()) {
            std::thread::sleep(wait);
        }
        report.sent += 1;
        match client.get(url).send() {
            Ok(r) if r.status().is_success() => report.ok += 1,
            Ok(r) => {
                tracing::warn!(status = r.status().as_u16(), "request rejected");
                report.err += 1;
            }
            Err(e) => {
                tracing::warn!(error = %e, "request failed");
                report.err += 1;
            }
        }
    }
    report
}
