mod support;

use std::time::Duration;

use support::*;

fn code(out: &std::process::Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = exec(&["check", programs().join("wireless_tags.liot").to_str().unwrap()]);
    assert_eq!(code(&ok), 0);
    let dup = dir.path().join("dup.liot");
    std::fs::write(&dup, "RELATION R (A)\nRELATION R (B)\n").unwrap();
    let out = exec(&["check", dup.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("duplicate relation `R`") && stderr.contains(":2:1:"), "{stderr}");
    let empty = dir.path().join("empty.liot");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(code(&exec(&["check", empty.to_str().unwrap()])), 0);
    assert_eq!(code(&exec(&["check", "/definitely/missing.liot"])), 1);
    assert_eq!(code(&exec(&["check"])), 2);
    assert_eq!(code(&exec(&["frobnicate"])), 2);
    assert_eq!(code(&exec(&["simulate", "--target", "http://x"])), 2);
}

#[test]
fn script_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("s.jsonl");
    std::fs::write(
        &script,
        "{\"at\":0,\"advance\":10000}\n{\"at\":10000,\"insert\":{\"rel\":\"R\",\"values\":{\"MAC\":\"38:E7:D8:D3:18:68\",\"RSSI\":-87}}}\n",
    )
    .unwrap();
    let program = programs().join("wireless_tags.liot");
    let args = ["script", program.to_str().unwrap(), script.to_str().unwrap()];
    let first = exec(&args);
    assert_eq!(code(&first), 0);
    let text = String::from_utf8(first.stdout.clone()).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains("\"timer\"")).count(), 10);
    assert!(text.ends_with("{\"seq\":1,\"kind\":\"rule\",\"name\":\"R1\",\"t\":10000}\n"));
    for _ in 0..3 {
        assert_eq!(exec(&args).stdout, first.stdout);
    }
}

#[test]
fn script_errors() {
    let dir = tempfile::tempdir().unwrap();
    let program = programs().join("wireless_tags.liot");
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"insert\":{\"rel\":\"NOPE\",\"values\":{}}}\n").unwrap();
    let out = exec(&["script", program.to_str().unwrap(), bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));

    let looping = dir.path().join("loop.liot");
    std::fs::write(&looping, "RELATION C (N)\nTRIGGER (C) { C(C.N + 1) }\n").unwrap();
    let s = dir.path().join("one.jsonl");
    std::fs::write(&s, "{\"insert\":{\"rel\":\"C\",\"values\":{\"N\":0}}}\n").unwrap();
    let out = exec(&["script", looping.to_str().unwrap(), s.to_str().unwrap(), "--cascade", "5"]);
    assert_eq!(code(&out), 1);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 6);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cascade depth limit 5"));
}

#[test]
fn run_rejects_busy_port() {
    let holder = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let port = holder.local_addr().unwrap().port().to_string();
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    let program = programs().join("wireless_tags.liot");
    let out = exec(&["run", program.to_str().unwrap(), "--port", &port, "--log", log.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot listen"));
    assert!(!log.exists());
}

#[test]
fn run_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("c.conf");
    std::fs::write(&conf, "window = 0\n").unwrap();
    let program = programs().join("wireless_tags.liot");
    let out = exec(&["run", program.to_str().unwrap(), "--config", conf.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let out = exec(&["run", program.to_str().unwrap(), "--webhook", "Q=http://x/"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn served_alarm_program_and_restart() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.jsonl");
    let program = programs().join("rssi_alarm.liot");
    let served = Served::start(&program, &["--log", log.to_str().unwrap()]);
    assert_eq!(served.get("/healthz"), (200, r#"{"ok":true}"#.to_string()));
    assert_eq!(served.get("/rel/R/insert?MAC=38:E7:D8:D3:18:68&RSSI=-87").0, 202);
    assert_eq!(served.get("/rel/R/insert?MAC=aa&RSSI=-50").0, 202);
    let alarms = served.poll("/rel/ALARMS/read?limit=10", Duration::from_secs(5), |b| b != "[]");
    let alarms: serde_json::Value = serde_json::from_str(&alarms).unwrap();
    assert_eq!(alarms.as_array().unwrap().len(), 1);
    assert_eq!(alarms[0]["MAC"], "38:E7:D8:D3:18:68");
    assert_eq!(alarms[0]["RSSI"], -87);
    let before = served.get("/rel/R/read?limit=10").1;
    let status = served.interrupt();
    assert!(status.success(), "{status:?}");

    let again = Served::start(&program, &["--log", log.to_str().unwrap()]);
    assert_eq!(again.get("/rel/R/read?limit=10").1, before);
    assert_eq!(again.get("/rel/ALARMS/read?limit=10").1.matches("\"T\"").count(), 1);
    assert!(again.stdout.lock().unwrap().is_empty());
}

#[test]
fn simulate_against_down_target() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let out = exec(&[
        "simulate",
        "--target",
        &format!("http://127.0.0.1:{port}"),
        "--relation",
        "R",
        "--count",
        "3",
        "--gen",
        "RSSI=const:1",
    ]);
    assert_eq!(code(&out), 1);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "sent=3 ok=0 err=3");
    let out = exec(&["simulate", "--target", "http://127.0.0.1:9", "--relation", "R", "--count", "0"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "sent=0 ok=0 err=0");
}

#[test]
fn simulate_endpoint_calls() {
    let program = programs().join("rssi_alarm.liot");
    let served = Served::start(&program, &[]);
    let out = exec(&[
        "simulate",
        "--target",
        &served.base,
        "--endpoint",
        "NEW_RECORD",
        "--count",
        "20",
        "--period",
        "1",
        "--seed",
        "3",
        "--gen",
        "M=choice:aa|bb",
        "--gen",
        "RS=uniform:-90:-30",
    ]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "sent=20 ok=20 err=0");
    let body = served.poll("/rel/R/read?limit=50", Duration::from_secs(5), |b| b.matches("\"T\"").count() == 20);
    assert_eq!(body.matches("\"T\"").count(), 20);
}
