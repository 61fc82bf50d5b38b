use std::io::Write;
use std::net::{SocketAddr, TcpListener};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use logiciot::engine::runtime::Runtime;
use logiciot::engine::{Clock, Engine, EngineConfig, EventOutcome};
use logiciot::script::run_script;
use logiciot::{parse_program, Program};
use logiciot_cli::config::RunConfig;
use logiciot_cli::sim::{self, FieldGen, SimProfile, SimTarget};
use logiciot_gateway::{HttpOutbound, OutboundOptions, Server};
use url::Url;

#[derive(Parser)]
#[command(name = "logiciot", version, about = "Run LogicIoT programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a program.
    Check { file: PathBuf },
    /// Serve a program over HTTP until interrupted.
    Run(RunArgs),
    /// Send seeded synthetic readings to a running gateway.
    Simulate(SimArgs),
    /// Run a program against a timed action script under a virtual clock
    /// and print the firing log.
    Script {
        file: PathBuf,
        script: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        cascade: Option<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    /// Flat `key = value` config file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    listen: Option<String>,
    #[arg(long)]
    port: Option<String>,
    /// Persistence log (JSON Lines); replayed at startup.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    window: Option<String>,
    /// Per-relation window, `REL=N`.
    #[arg(long = "window-for", value_name = "REL=N")]
    window_for: Vec<String>,
    #[arg(long)]
    cascade: Option<String>,
    /// Module call timeout in milliseconds.
    #[arg(long = "call-timeout")]
    call_timeout: Option<String>,
    /// Per-record webhook, `REL=URL`.
    #[arg(long, value_name = "REL=URL")]
    webhook: Vec<String>,
    /// Base URL for relative MAP targets.
    #[arg(long = "module-base")]
    module_base: Option<String>,
    #[arg(long)]
    queue: Option<String>,
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("dest").required(true).args(["relation", "endpoint"])))]
struct SimArgs {
    /// Gateway base URL.
    #[arg(long)]
    target: Url,
    #[arg(long)]
    relation: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Milliseconds between requests.
    #[arg(long, default_value_t = 0)]
    period: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Value generator, `FIELD=const:V | uniform:MIN:MAX | choice:a|b`.
    #[arg(long = "gen", value_name = "FIELD=SPEC", value_parser = parse_gen)]
    gens: Vec<(String, FieldGen)>,
}

fn parse_gen(raw: &str) -> Result<(String, FieldGen), String> {
    let (field, spec) = raw.split_once('=').ok_or("expected FIELD=SPEC")?;
    Ok((field.to_string(), spec.parse().map_err(|e: sim::GenError| e.to_string())?))
}

fn fail(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(1)
}

fn load_program(path: &Path) -> Result<Program, ExitCode> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| fail(format_args!("cannot read {}: {e}", path.display())))?;
    parse_program(&src).map_err(|e| {
        eprintln!("{}", e.render(&path.display().to_string()));
        ExitCode::from(1)
    })
}

fn check(file: &Path) -> ExitCode {
    match load_program(file) {
        Ok(p) => {
            println!(
                "{}: ok ({} relations, {} rules, {} timers, {} endpoints, {} modules)",
                file.display(),
                p.relations.len(),
                p.rules.len(),
                p.timers.len(),
                p.endpoints.len(),
                p.modules.len()
            );
            ExitCode::SUCCESS
        }
        Err(code) => code,
    }
}

fn run_config(args: &RunArgs) -> Result<RunConfig, String> {
    let mut config = RunConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        config.apply_file(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    }
    let pairs = |list: &[String], prefix: &str| -> Result<Vec<(String, String)>, String> {
        list.iter()
            .map(|item| {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| format!("expected REL=VALUE, got `{item}`"))?;
                Ok((format!("{prefix}.{k}"), v.to_string()))
            })
            .collect()
    };
    let mut flags: Vec<(String, String)> = [
        ("listen", &args.listen),
        ("port", &args.port),
        ("window", &args.window),
        ("cascade", &args.cascade),
        ("call_timeout", &args.call_timeout),
        ("module_base", &args.module_base),
        ("queue", &args.queue),
    ]
    .into_iter()
    .filter_map(|(k, v)| v.as_ref().map(|v| (k.to_string(), v.clone())))
    .collect();
    if let Some(log) = &args.log {
        flags.push(("log".into(), log.display().to_string()));
    }
    flags.extend(pairs(&args.window_for, "window")?);
    flags.extend(pairs(&args.webhook, "webhook")?);
    for (k, v) in flags {
        config.set(&k, &v).map_err(|e| e.to_string())?;
    }
    Ok(config)
}

fn print_firings(outcome: &EventOutcome) {
    let mut out = std::io::stdout().lock();
    for f in &outcome.firings {
        let _ = writeln!(out, "{}", f.to_json_line());
    }
    let _ = out.flush();
}

fn run(args: RunArgs) -> ExitCode {
    let program = match load_program(&args.file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let config = match run_config(&args) {
        Ok(c) => c,
        Err(e) => return fail(e),
    };
    let addr = SocketAddr::new(config.listen, config.port);
    let listener = match TcpListener::bind(addr) {
        Ok(l) => l,
        Err(e) => return fail(format_args!("cannot listen on {addr}: {e}")),
    };
    let outbound = match HttpOutbound::new(OutboundOptions {
        module_base: config.module_base.clone(),
        ..Default::default()
    }) {
        Ok(o) => Arc::new(o),
        Err(e) => return fail(e),
    };
    let engine = match Engine::load(program, config.engine_config(), Clock::Wall, outbound) {
        Ok(e) => e,
        Err(e) => return fail(format_args!("cannot load {}: {e}", args.file.display())),
    };
    for f in engine.startup_firings() {
        println!("{}", f.to_json_line());
    }
    let runtime = Runtime::spawn(engine, config.queue, Some(Box::new(|o: &EventOutcome| print_firings(o))));
    let server = match Server::start(listener, runtime.handle()) {
        Ok(s) => s,
        Err(e) => return fail(format_args!("cannot start gateway: {e}")),
    };
    eprintln!("listening on {}", server.local_addr());

    let signals = tokio::runtime::Builder::new_current_thread()
        .enable_io()
        .build()
        .expect("signal runtime");
    if let Err(e) = signals.block_on(tokio::signal::ctrl_c()) {
        eprintln!("error: waiting for interrupt: {e}");
    }
    eprintln!("shutting down");
    server.stop();
    let mut engine = runtime.shutdown();
    if let Err(e) = engine.flush() {
        return fail(e);
    }
    ExitCode::SUCCESS
}

fn simulate(args: SimArgs) -> ExitCode {
    let kind = match (args.relation, args.endpoint) {
        (Some(r), None) => SimTarget::Relation(r),
        (None, Some(e)) => SimTarget::Endpoint(e),
        _ => unreachable!("clap enforces exactly one destination"),
    };
    let profile = SimProfile {
        target: args.target,
        kind,
        count: args.count,
        period_ms: args.period,
        seed: args.seed,
        gens: args.gens,
    };
    let report = sim::run(&profile);
    println!("{report}");
    if report.err > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn script(file: &Path, script: &Path, window: Option<usize>, cascade: Option<usize>) -> ExitCode {
    let program = match load_program(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let text = match std::fs::read_to_string(script) {
        Ok(t) => t,
        Err(e) => return fail(format_args!("cannot read {}: {e}", script.display())),
    };
    let mut config = EngineConfig::default();
    if let Some(w) = window {
        config.default_window = w;
    }
    if let Some(c) = cascade {
        config.max_cascade = c;
    }
    let transcript = match run_script(&program, config, &text) {
        Ok(t) => t,
        Err(e) => return fail(format_args!("{}: {e}", script.display())),
    };
    print!("{}", transcript.firing_log_jsonl());
    for (seq, e) in &transcript.errors {
        if *seq == 0 {
            eprintln!("error: timer: {e}");
        } else {
            eprintln!("error: event {seq}: {e}");
        }
    }
    if transcript.errors.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn")),
        )
        .init();
    match cli.command {
        Command::Check { file } => check(&file),
        Command::Run(args) => run(args),
        Command::Simulate(args) => simulate(args),
        Command::Script {
            file,
            script: path,
            window,
            cascade,
        } => script(&file, &path, window, cascade),
    }
}
