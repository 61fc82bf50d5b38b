//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on
//! any failure. Time limits are checked alongside the functional result.

mod support;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use logiciot::dsl::parse_expression;
use logiciot::engine::oracle::naive_oracle;
use logiciot::engine::{
    run_steps, CallMode, Clock, Engine, EngineConfig, EventKind, FiringKind, NullOutbound, Outbound,
    OutboundBinding, OutboundError, RuntimeError,
};
use logiciot::eval::{eval, EvalError, Scope};
use logiciot::randgen::{self, ProgramShape};
use logiciot::store::{Record, Store};
use logiciot::dsl::RelationDecl;
use logiciot::{parse_program, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::*;

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

const TAGS: &str = include_str!("../../../programs/wireless_tags.liot");
const TAGS_FULL: &str = include_str!("../../../programs/wireless_tags_full.liot");

/// Accepts every outbound request; module calls return 0 for each output.
struct AcceptAll;

impl Outbound for AcceptAll {
    fn invoke_module(
        &self,
        _: &OutboundBinding,
        outputs: &[String],
        _: &[Value],
        _: CallMode,
    ) -> Result<BTreeMap<String, Value>, OutboundError> {
        Ok(outputs.iter().map(|o| (o.clone(), Value::Number(0.0))).collect())
    }

    fn forward_insert(&self, _: &OutboundBinding, _: &RelationDecl, _: &[Value]) -> Result<(), OutboundError> {
        Ok(())
    }

    fn fire_trigger_webhook(&self, _: &OutboundBinding, _: &RelationDecl, _: &Record) {}
}

fn listing_snippets() -> Result<String, String> {
    let listings = [
        "RELATION R (MAC, RSSI)",
        "RELATION R (MAC, RSSI)\nTRIGGER (R)\n{\n}",
        "RELATION R (MAC, RSSI)\nENDPOINT NEW_RECORD (M, RS)\n{\n    R(M, RS)\n}",
        "TIMER TM (1000)\n{\n}",
        "RELATION R (MAC, RSSI)\nRULE R1 R.RSSI < -60\n{\n}",
        "MODULE COUNTER (count)",
        "RELATION R (MAC, RSSI)\nR (\"38:E7:D8:D3:18:68\", -87)",
        "TIMER TM (1000) {}\nSTOP (TM)",
        "RELATION R (MAC, RSSI)\nRULE R1 R.RSSI < -60 {}\nDEACTIVATE (R1)",
        "RELATION R (MAC, RSSI)\nRULE R1 R.RSSI < -60 {}\nCHECK (R1)",
        "MODULE COUNTER (count)\nENDPOINT E (index) { CALL COUNTER (index, 2) }",
        "MODULE COUNTER (count)\nENDPOINT E (name) { ACALL COUNTER (name, \"test\") }",
        "RELATION R (MAC, RSSI)\nMAP RELATION R : module1.jsp",
        "MODULE CHECK (status)\nMAP MODULE CHECK : module2.jsp",
        "MODULE COUNTER (count)\nMAP MODULE COUNTER : \"module2.jsp\"",
    ];
    for src in listings {
        let p = parse_program(src).map_err(|e| format!("{src:?}: {e}"))?;
        Engine::load(p, EngineConfig::default(), Clock::virtual_at(0), Arc::new(AcceptAll))
            .map_err(|e| format!("{src:?}: {e}"))?;
    }
    let composite = parse_program(TAGS).map_err(|e| e.to_string())?;
    let counts = [
        composite.relations.len(),
        composite.triggers.len(),
        composite.endpoints.len(),
        composite.timers.len(),
        composite.rules.len(),
        composite.modules.len(),
        composite.mappings.len(),
    ];
    ensure!(counts == [1; 7], "composite counts {counts:?}");
    let e = Engine::load(composite, EngineConfig::default(), Clock::virtual_at(0), Arc::new(NullOutbound))
        .map_err(|e| e.to_string())?;
    ensure!(e.dependents("R") == ["R1"], "index {:?}", e.dependents("R"));
    let full = parse_program(TAGS_FULL).map_err(|e| e.to_string())?;
    let e = Engine::load(full, EngineConfig::default(), Clock::virtual_at(0), Arc::new(AcceptAll))
        .map_err(|e| e.to_string())?;
    ensure!(e.store().read().total_records() == 1, "insert statement not applied");
    Ok(format!("{} listings + 2 composite programs", listings.len()))
}

fn window_semantics() -> Result<String, String> {
    let decl = RelationDecl { name: "R".into(), fields: vec!["MAC".into(), "RSSI".into()] };
    let fill = |w: usize| {
        let mut s = Store::new([&decl], |_| w);
        for v in 1..=100 {
            s.insert_next("R", vec![Value::text("m"), Value::Number(v as f64)], v).unwrap();
        }
        s
    };
    let at = |s: &Store, k: i64| {
        let src = if k == 0 { "R.RSSI".to_string() } else { format!("R.RSSI[-{k}]") };
        eval(&parse_expression(&src).unwrap(), s, &Scope::new())
    };
    let big = fill(1024);
    for k in 0..100 {
        let got = at(&big, k);
        ensure!(got == Ok(Value::Number((100 - k) as f64)), "k={k}: {got:?}");
    }
    ensure!(matches!(at(&big, 100), Err(EvalError::HistoryUnavailable(_))), "k=100 available");
    let small = fill(10);
    ensure!(matches!(at(&small, 10), Err(EvalError::HistoryUnavailable(_))), "W=10, k=10 available");
    ensure!(at(&small, 9) == Ok(Value::Number(91.0)), "W=10, k=9 wrong");
    Ok("100 offsets exact, k=100 and W=10/k=10 unavailable".into())
}

fn oracle_equivalence() -> Result<String, String> {
    let shape = ProgramShape::default();
    let (mut firings, mut events) = (0, 0);
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1_000 + seed);
        let program = randgen::program(&mut rng, &shape);
        let steps = randgen::steps(&mut rng, &program, 1000);
        let a = run_steps(&program, EngineConfig::default(), &steps).map_err(|e| e.to_string())?;
        let b = naive_oracle(&program, EngineConfig::default(), &steps).map_err(|e| e.to_string())?;
        ensure!(a.firing_log_jsonl() == b.firing_log_jsonl(), "seed {seed}: logs differ");
        firings += a.firings.len();
        events += steps.len();
    }
    Ok(format!("200 programs, {events} events, {firings} firings, logs byte-equal"))
}

fn end_to_end_rule_firing() -> Result<String, String> {
    let served = Served::start(&programs().join("rssi_alarm.liot"), &[]);
    let out = exec(&[
        "simulate", "--target", &served.base, "--relation", "R", "--count", "500", "--seed", "42",
        "--gen", "MAC=const:38:E7:D8:D3:18:68", "--gen", "RSSI=uniform:-90:-30",
    ]);
    let summary = String::from_utf8_lossy(&out.stdout).trim().to_string();
    ensure!(summary == "sent=500 ok=500 err=0", "simulator: {summary}");
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let expected = (0..500).filter(|_| rng.random_range(-90i64..=-30) < -60).count();
    let count = |path: &str| served.get(path).1.matches("\"T\"").count();
    served.poll("/rel/R/read?limit=1024", Duration::from_secs(20), |b| b.matches("\"T\"").count() == 500);
    let readings = count("/rel/R/read?limit=1024");
    let alarms = count("/rel/ALARMS/read?limit=1024");
    ensure!(readings == 500, "R holds {readings}");
    ensure!(alarms == expected, "ALARMS holds {alarms}, expected {expected}");
    Ok(format!("{alarms} alarms of 500 readings (independent count {expected})"))
}

fn trigger_per_row() -> Result<String, String> {
    let hook = Hook::start();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let program = dir.path().join("rows.liot");
    std::fs::write(
        &program,
        "RELATION R (A)\nRELATION SEEN (A)\nTRIGGER (R) { SEEN(R.A) }\nENDPOINT E () {\n    R(1)\n    R(2)\n    R(3)\n}\n",
    )
    .map_err(|e| e.to_string())?;
    let served = Served::start(&program, &["--webhook", &format!("R={}", hook.url("/hook"))]);
    ensure!(served.get("/endpoint/E").0 == 202, "endpoint not accepted");
    let seen = served.poll("/rel/SEEN/read?limit=10", Duration::from_secs(5), |b| b.matches("\"T\"").count() >= 3);
    ensure!(seen.matches("\"T\"").count() == 3, "trigger ran {} times", seen.matches("\"T\"").count());
    hook.wait(3, Duration::from_secs(5));
    std::thread::sleep(Duration::from_millis(300));
    let hits = hook.hits.lock().unwrap().clone();
    ensure!(hits.len() == 3, "webhook received {} GETs", hits.len());
    let triggers = served.stdout.lock().unwrap().matches("\"kind\":\"trigger\"").count();
    ensure!(triggers == 3, "firing log has {triggers} trigger entries");
    Ok("3 trigger runs, 3 webhook GETs".into())
}

fn cascade_guard() -> Result<String, String> {
    let program = parse_program("RELATION C (N)\nTRIGGER (C) { C(C.N + 1) }").map_err(|e| e.to_string())?;
    let mut e = Engine::load(program, EngineConfig::default(), Clock::virtual_at(0), Arc::new(NullOutbound))
        .map_err(|e| e.to_string())?;
    let out = e.submit(EventKind::ExternalInsert { relation: "C".into(), values: vec![Value::Number(0.0)] });
    ensure!(
        matches!(out.error, Some(RuntimeError::CascadeExceeded { limit: 64, .. })),
        "error {:?}",
        out.error
    );
    let store = e.store();
    let store = store.read();
    let n = store.window("C").unwrap().len();
    ensure!(n == 65, "store holds {n} records");
    let last = store.latest("C", "N", 0).unwrap();
    ensure!(last == Value::Number(64.0), "last cascade value {last:?}");
    Ok("initial + 64 cascade records, then CascadeExceeded".into())
}

fn timer_determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let program = dir.path().join("timer.liot");
    std::fs::write(&program, "RELATION TICKS (N)\nTIMER TM (1000)\n{\n    TICKS(1)\n}\n").map_err(|e| e.to_string())?;
    let script = dir.path().join("advance.jsonl");
    std::fs::write(&script, "{\"at\": 0, \"advance\": 10000}\n").map_err(|e| e.to_string())?;
    let args = ["script", program.to_str().unwrap(), script.to_str().unwrap()];
    let first = exec(&args);
    ensure!(first.status.success(), "script failed: {}", String::from_utf8_lossy(&first.stderr));
    let text = String::from_utf8_lossy(&first.stdout).to_string();
    let ticks = text.lines().filter(|l| l.contains("\"kind\":\"timer\"")).count();
    ensure!(ticks == 10, "{ticks} timer firings");
    for run in 2..=5 {
        ensure!(exec(&args).stdout == first.stdout, "run {run} differs");
    }
    Ok("10 ticks, 5 byte-identical runs".into())
}

fn persistence_replay() -> Result<String, String> {
    let shape = ProgramShape::default();
    let mut records = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(5_000 + seed);
        let program = randgen::program(&mut rng, &shape);
        let steps = randgen::steps(&mut rng, &program, 600);
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let config = EngineConfig { journal: Some(dir.path().join("log.jsonl")), ..Default::default() };
        let mut live = Engine::load(program.clone(), config.clone(), Clock::virtual_at(0), Arc::new(NullOutbound))
            .map_err(|e| e.to_string())?;
        for step in &steps {
            match step {
                logiciot::engine::Step::Event(kind) => {
                    live.submit(kind.clone());
                }
                logiciot::engine::Step::AdvanceTo(t) => {
                    live.advance_to(*t);
                }
            }
        }
        live.flush().map_err(|e| e.to_string())?;
        let before = live.store().read().clone();
        drop(live);
        let restored = Engine::load(program.clone(), config, Clock::virtual_at(0), Arc::new(NullOutbound))
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let after = restored.store().read().clone();
        ensure!(after == before, "seed {seed}: store differs after replay");
        ensure!(restored.startup_firings().is_empty(), "seed {seed}: replay fired");
        let evaluated: u64 = program.rules.iter().map(|r| restored.evaluations(&r.name)).sum();
        ensure!(evaluated == 0, "seed {seed}: replay evaluated rules");
        records += before.total_records();
    }
    Ok(format!("20 runs, {records} windowed records restored, 0 firings on replay"))
}

fn read_bit_stability() -> Result<String, String> {
    let served = Served::start(&programs().join("wireless_tags.liot"), &[]);
    let now = || SystemTime::now().duration_since(UNIX_EPOCH).unwrap().as_millis() as u64;
    let before = now();
    let (status, body) = served.get("/rel/R/insert?MAC=38:E7:D8:D3:18:68&RSSI=-87");
    ensure!(status == 202 && body == r#"{"queued":true,"seq":1}"#, "ingest: {status} {body}");
    let first = served.poll("/rel/R/read", Duration::from_secs(5), |b| b != "[]");
    let after = now();
    let v: serde_json::Value = serde_json::from_str(&first).map_err(|e| e.to_string())?;
    let t = v[0]["T"].as_u64().ok_or("no T")?;
    ensure!((before..=after).contains(&t), "T={t} outside [{before}, {after}]");
    let expected = format!(r#"[{{"T":{t},"MAC":"38:E7:D8:D3:18:68","RSSI":-87}}]"#);
    ensure!(first == expected, "read body {first}");
    for _ in 0..20 {
        ensure!(served.get("/rel/R/read").1 == first, "read bytes changed");
    }
    Ok("202 on ingest, exact JSON, 20 identical reads".into())
}

fn throughput() -> Result<String, String> {
    let mut src = String::from("RELATION R (MAC, RSSI)\nRELATION ALARMS (MAC, RSSI)\n");
    for i in 0..10 {
        src.push_str(&format!(
            "RULE X{i} R.RSSI < {} AND R.RSSI[-1] >= -100\n{{\n    ALARMS(R.MAC, R.RSSI)\n}}\n",
            -35 - 5 * i
        ));
    }
    let program = parse_program(&src).map_err(|e| e.to_string())?;
    let mut e = Engine::load(program, EngineConfig::default(), Clock::virtual_at(0), Arc::new(NullOutbound))
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    let start = Instant::now();
    let mut fired = 0;
    for _ in 0..10_000 {
        let rssi = rng.random_range(-90..=-30) as f64;
        let out = e.submit(EventKind::ExternalInsert {
            relation: "R".into(),
            values: vec![Value::text("38:E7:D8:D3:18:68"), Value::Number(rssi)],
        });
        ensure!(out.error.is_none(), "{:?}", out.error);
        fired += out.firings.iter().filter(|f| f.kind == FiringKind::Rule).count();
    }
    let elapsed = start.elapsed();
    Ok(format!("10000 inserts x 10 rules, {fired} firings in {:.3} s", elapsed.as_secs_f64()))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, u64, Check); 10] = [
        (1, "listing fidelity", 1, listing_snippets),
        (2, "window semantics", 1, window_semantics),
        (3, "oracle equivalence", 60, oracle_equivalence),
        (4, "end-to-end rule firing", 30, end_to_end_rule_firing),
        (5, "trigger per-row semantics", 5, trigger_per_row),
        (6, "cascade guard", 1, cascade_guard),
        (7, "timer determinism", 5, timer_determinism),
        (8, "persistence replay", 30, persistence_replay),
        (9, "HTTP read bit-stability", 5, read_bit_stability),
        (10, "throughput sanity", 5, throughput),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (id, name, limit_s, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || *f == id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let result = match result {
            Ok(detail) if secs > limit_s as f64 => Err(format!("{detail}; over time limit")),
            other => other,
        };
        let (verdict, detail) = match &result {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        println!("{verdict} [{id:>2}] {name}: {detail} ({secs:.2} s, limit {limit_s} s)");
        failed += result.is_err() as u32;
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
