//! The serialized rule engine.
//!
//! Every unit of work arrives as an [`Event`] and runs to completion before
//! the next one starts. An insert appends to the store, runs the relation's
//! trigger once for that row, then evaluates the rules whose condition
//! mentions the relation, in declaration order. Rule conditions only read
//! the latest window values, so the matching network is the alpha layer of
//! a Rete net: a relation -> dependent-rules index built at load time.

mod clock;
mod firing;
pub mod oracle;
mod outbound;
pub mod runtime;

use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;
use std::sync::Arc;

use parking_lot::RwLock;
use tracing::warn;

pub use clock::{Clock, VirtualClock};
pub use firing::{export_jsonl, Firing, FiringKind};
pub use outbound::{
    BindingKind, CallMode, NullOutbound, Outbound, OutboundBinding, OutboundError,
    DEFAULT_CALL_TIMEOUT_MS,
};

use crate::dsl::{self, Expr, MapKind, ParseError, Program, RelationDecl, Statement};
use crate::eval::{eval, eval_condition, Condition, EvalError, Scope};
use crate::journal::{replay_log, Journal, JournalError};
use crate::store::{Store, StoreError, DEFAULT_WINDOW};
use crate::value::Value;

/// Default nesting limit for insert and `CHECK` cascades.
pub const DEFAULT_MAX_CASCADE: usize = 64;

/// Store handle shared between the engine (sole writer) and readers.
pub type SharedStore = Arc<RwLock<Store>>;

/// How rules are selected after an insert.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Propagation {
    /// Only rules listed in the dependency index for the relation.
    #[default]
    Indexed,
    /// Every active rule is evaluated after every insert; see [`oracle`].
    Naive,
}

#[derive(Debug, Clone)]
pub struct EngineConfig {
    pub default_window: usize,
    pub windows: HashMap<String, usize>,
    pub max_cascade: usize,
    pub call_timeout_ms: u64,
    /// Relation name -> URL receiving one GET per inserted record.
    pub webhooks: HashMap<String, String>,
    pub journal: Option<PathBuf>,
    pub propagation: Propagation,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            default_window: DEFAULT_WINDOW,
            windows: HashMap::new(),
            max_cascade: DEFAULT_MAX_CASCADE,
            call_timeout_ms: DEFAULT_CALL_TIMEOUT_MS,
            webhooks: HashMap::new(),
            journal: None,
            propagation: Propagation::Indexed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    ExternalInsert { relation: String, values: Vec<Value> },
    EndpointCall { name: String, args: Vec<Value> },
    TimerTick(String),
    Shutdown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub arrival_seq: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("cascade depth limit {limit} exceeded while inserting into `{relation}`")]
    CascadeExceeded { limit: usize, relation: String },
    #[error("cascade depth limit {limit} exceeded while checking rule `{rule}`")]
    CheckCascadeExceeded { limit: usize, rule: String },
    #[error("module `{0}` is not mapped")]
    NotMapped(String),
    #[error("call to module `{module}` failed: {source}")]
    Module {
        module: String,
        #[source]
        source: OutboundError,
    },
    #[error("forwarding insert to `{relation}` backend failed: {source}")]
    Forward {
        relation: String,
        #[source]
        source: OutboundError,
    },
    #[error("persistence: {0}")]
    Journal(String),
    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },
    #[error("endpoint `{name}` takes {expected} argument(s), {found} given")]
    ArgumentCount {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("event {arrival_seq} arrived out of order (last was {last})")]
    OutOfOrder { arrival_seq: u64, last: u64 },
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error(transparent)]
    Program(#[from] ParseError),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error("top-level statement failed: {0}")]
    Statement(RuntimeError),
}

/// Result of one event: every firing it produced and, if it was aborted,
/// why. Effects applied before an error are kept.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventOutcome {
    pub arrival_seq: u64,
    pub firings: Vec<Firing>,
    pub error: Option<RuntimeError>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleState {
    pub name: String,
    pub active: bool,
    /// Relations mentioned anywhere in the condition.
    pub depends_on: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimerState {
    pub name: String,
    pub interval_ms: u64,
    pub running: bool,
    pub next_fire: u64,
}

/// Relations referenced by a rule condition, from a static scan of the AST.
pub fn condition_relations(condition: &Expr) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    condition.walk(&mut |e| {
        if let Expr::Field { relation, .. } = e {
            out.insert(relation.clone());
        }
    });
    out
}

pub struct Engine {
    program: Arc<Program>,
    config: EngineConfig,
    store: SharedStore,
    clock: Clock,
    outbound: Arc<dyn Outbound>,
    journal: Option<Journal>,
    rules: Vec<RuleState>,
    rule_ids: HashMap<String, usize>,
    timers: Vec<TimerState>,
    timer_ids: HashMap<String, usize>,
    triggers: HashMap<String, usize>,
    dependents: HashMap<String, Arc<[usize]>>,
    modules: HashMap<String, OutboundBinding>,
    backends: HashMap<String, OutboundBinding>,
    webhooks: HashMap<String, OutboundBinding>,
    evaluations: Vec<u64>,
    last_arrival: u64,
    startup: EventOutcome,
}

/// Mutable state threaded through one event.
struct Run {
    firings: Vec<Firing>,
}

impl Engine {
    /// Registers relations, builds the dependency index, replays the
    /// persistence log (without firing anything), starts every timer and
    /// finally executes the top-level statements once, in order.
    pub fn load(
        program: Program,
        config: EngineConfig,
        clock: Clock,
        outbound: Arc<dyn Outbound>,
    ) -> Result<Engine, LoadError> {
        dsl::validate(&program)?;
        check_config(&program, &config)?;

        let mut store = Store::new(&program.relations, |name| {
            config.windows.get(name).copied().unwrap_or(config.default_window)
        });
        let journal = match &config.journal {
            Some(path) => {
                replay_log(path, &mut store)?;
                Some(Journal::open(path)?)
            }
            None => None,
        };

        let rules: Vec<RuleState> = program
            .rules
            .iter()
            .map(|r| RuleState {
                name: r.name.clone(),
                active: true,
                depends_on: condition_relations(&r.condition),
            })
            .collect();
        let mut dependents: HashMap<String, Vec<usize>> = HashMap::new();
        for (id, rule) in rules.iter().enumerate() {
            for rel in &rule.depends_on {
                dependents.entry(rel.clone()).or_default().push(id);
            }
        }

        let now = clock.now_ms();
        let timers = program
            .timers
            .iter()
            .map(|t| TimerState {
                name: t.name.clone(),
                interval_ms: t.interval_ms,
                running: true,
                next_fire: now.saturating_add(t.interval_ms),
            })
            .collect::<Vec<_>>();

        let binding = |name: &str, target: &str, kind| OutboundBinding {
            name: name.to_string(),
            target: target.to_string(),
            kind,
            timeout_ms: config.call_timeout_ms,
        };
        let mut modules = HashMap::new();
        let mut backends = HashMap::new();
        for m in &program.mappings {
            match m.kind {
                MapKind::Module => {
                    modules.insert(m.name.clone(), binding(&m.name, &m.target, BindingKind::Module));
                }
                MapKind::Relation => {
                    backends.insert(
                        m.name.clone(),
                        binding(&m.name, &m.target, BindingKind::RelationBackend),
                    );
                }
            }
        }
        let webhooks = config
            .webhooks
            .iter()
            .map(|(rel, url)| (rel.clone(), binding(rel, url, BindingKind::TriggerWebhook)))
            .collect();

        let mut engine = Engine {
            rule_ids: rules.iter().enumerate().map(|(i, r)| (r.name.clone(), i)).collect(),
            timer_ids: timers.iter().enumerate().map(|(i, t)| (t.name.clone(), i)).collect(),
            triggers: program
                .triggers
                .iter()
                .enumerate()
                .map(|(i, t)| (t.relation.clone(), i))
                .collect(),
            evaluations: vec![0; rules.len()],
            dependents: dependents.into_iter().map(|(k, v)| (k, v.into())).collect(),
            rules,
            timers,
            modules,
            backends,
            webhooks,
            program: Arc::new(program),
            config,
            store: Arc::new(RwLock::new(store)),
            clock,
            outbound,
            journal,
            last_arrival: 0,
            startup: EventOutcome::default(),
        };

        let program = Arc::clone(&engine.program);
        let mut run = Run { firings: Vec::new() };
        let mut scope = Scope::new();
        for stmt in &program.top_level_statements {
            if let Err(e) = engine.execute_statement(stmt, &mut scope, 0, &mut run) {
                return Err(LoadError::Statement(e));
            }
        }
        engine.startup.firings = run.firings;
        Ok(engine)
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    pub fn shared_program(&self) -> Arc<Program> {
        Arc::clone(&self.program)
    }

    pub fn store(&self) -> SharedStore {
        Arc::clone(&self.store)
    }

    pub fn clock(&self) -> &Clock {
        &self.clock
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    /// Firings produced by the top-level statements during load.
    pub fn startup_firings(&self) -> &[Firing] {
        &self.startup.firings
    }

    pub fn rules(&self) -> &[RuleState] {
        &self.rules
    }

    pub fn rule(&self, name: &str) -> Option<&RuleState> {
        self.rule_ids.get(name).map(|&i| &self.rules[i])
    }

    pub fn timers(&self) -> &[TimerState] {
        &self.timers
    }

    pub fn timer(&self, name: &str) -> Option<&TimerState> {
        self.timer_ids.get(name).map(|&i| &self.timers[i])
    }

    /// Rules whose condition mentions `relation`, in declaration order.
    pub fn dependents(&self, relation: &str) -> Vec<&str> {
        self.dependents
            .get(relation)
            .map(|ids| ids.iter().map(|&i| self.rules[i].name.as_str()).collect())
            .unwrap_or_default()
    }

    /// How many times the rule's condition has been evaluated.
    pub fn evaluations(&self, rule: &str) -> u64 {
        self.rule_ids.get(rule).map_or(0, |&i| self.evaluations[i])
    }

    pub fn last_arrival(&self) -> u64 {
        self.last_arrival
    }

    /// Processes an event with the next arrival number.
    pub fn submit(&mut self, kind: EventKind) -> EventOutcome {
        let arrival_seq = self.last_arrival + 1;
        self.process_event(Event { kind, arrival_seq })
    }

    pub fn process_event(&mut self, ev: Event) -> EventOutcome {
        if ev.arrival_seq <= self.last_arrival {
            return EventOutcome {
                arrival_seq: ev.arrival_seq,
                firings: Vec::new(),
                error: Some(RuntimeError::OutOfOrder {
                    arrival_seq: ev.arrival_seq,
                    last: self.last_arrival,
                }),
            };
        }
        self.last_arrival = ev.arrival_seq;
        let mut run = Run { firings: Vec::new() };
        let result = match ev.kind {
            EventKind::ExternalInsert { relation, values } => {
                self.insert(&relation, values, 0, &mut run)
            }
            EventKind::EndpointCall { name, args } => self.call_endpoint(&name, args, &mut run),
            EventKind::TimerTick(name) => self.tick(&name, &mut run),
            EventKind::Shutdown => self.flush(),
        };
        if let Err(e) = &result {
            warn!(arrival_seq = ev.arrival_seq, error = %e, "event aborted");
        }
        EventOutcome {
            arrival_seq: ev.arrival_seq,
            firings: run.firings,
            error: result.err(),
        }
    }

    /// Earliest pending timer deadline.
    pub fn next_timer_due(&self) -> Option<u64> {
        self.timers.iter().filter(|t| t.running).map(|t| t.next_fire).min()
    }

    /// Fires every running timer due at or before `now`, earliest first,
    /// ties broken by declaration order. Ticks are internal events and do
    /// not consume arrival numbers; their outcomes carry `arrival_seq` 0. Under a virtual clock, time is
    /// moved to each deadline before its tick runs.
    pub fn run_due_timers(&mut self, now: u64) -> Vec<EventOutcome> {
        let mut outcomes = Vec::new();
        loop {
            let due = self
                .timers
                .iter()
                .enumerate()
                .filter(|(_, t)| t.running && t.next_fire <= now)
                .min_by_key(|(i, t)| (t.next_fire, *i))
                .map(|(i, t)| (i, t.next_fire));
            let Some((id, at)) = due else { break };
            self.clock.advance_to(at);
            let timer = &mut self.timers[id];
            timer.next_fire = at.saturating_add(timer.interval_ms);
            let name = timer.name.clone();
            let mut run = Run { firings: Vec::new() };
            let result = self.tick(&name, &mut run);
            if let Err(e) = &result {
                warn!(timer = %name, error = %e, "timer tick aborted");
            }
            outcomes.push(EventOutcome {
                arrival_seq: 0,
                firings: run.firings,
                error: result.err(),
            });
        }
        outcomes
    }

    /// Virtual clock only: runs every tick due up to `target`, then sets
    /// the clock to `target`.
    pub fn advance_to(&mut self, target: u64) -> Vec<EventOutcome> {
        let outcomes = self.run_due_timers(target);
        self.clock.advance_to(target);
        outcomes
    }

    /// Flushes and syncs the persistence log.
    pub fn flush(&mut self) -> Result<(), RuntimeError> {
        if let Some(j) = self.journal.as_mut() {
            j.sync().map_err(|e| RuntimeError::Journal(e.to_string()))?;
        }
        Ok(())
    }

    fn call_endpoint(&mut self, name: &str, args: Vec<Value>, run: &mut Run) -> Result<(), RuntimeError> {
        let program = Arc::clone(&self.program);
        let endpoint = program.endpoint(name).ok_or_else(|| RuntimeError::Unknown {
            kind: "endpoint",
            name: name.to_string(),
        })?;
        if endpoint.params.len() != args.len() {
            return Err(RuntimeError::ArgumentCount {
                name: name.to_string(),
                expected: endpoint.params.len(),
                found: args.len(),
            });
        }
        let mut scope = Scope::new();
        for (p, v) in endpoint.params.iter().zip(args) {
            scope.bind(p.clone(), v);
        }
        self.exec_block(&endpoint.body, &mut scope, 0, run)
    }

    fn tick(&mut self, name: &str, run: &mut Run) -> Result<(), RuntimeError> {
        let id = *self.timer_ids.get(name).ok_or_else(|| RuntimeError::Unknown {
            kind: "timer",
            name: name.to_string(),
        })?;
        if !self.timers[id].running {
            return Ok(());
        }
        run.firings.push(Firing {
            seq: 0,
            kind: FiringKind::Timer,
            name: name.to_string(),
            t: self.clock.now_ms(),
        });
        let program = Arc::clone(&self.program);
        self.exec_block(&program.timers[id].body, &mut Scope::new(), 0, run)
    }

    fn exec_block(
        &mut self,
        body: &[Statement],
        scope: &mut Scope,
        depth: usize,
        run: &mut Run,
    ) -> Result<(), RuntimeError> {
        for stmt in body {
            self.execute_statement(stmt, scope, depth, run)?;
        }
        Ok(())
    }

    fn eval_args(&self, args: &[Expr], scope: &Scope) -> Result<Vec<Value>, RuntimeError> {
        let store = self.store.read();
        args.iter()
            .map(|a| eval(a, &store, scope).map_err(RuntimeError::from))
            .collect()
    }

    /// Executes one statement of a block running at cascade `depth`.
    fn execute_statement(
        &mut self,
        stmt: &Statement,
        scope: &mut Scope,
        depth: usize,
        run: &mut Run,
    ) -> Result<(), RuntimeError> {
        match stmt {
            Statement::Insert { relation, args } => {
                let values = self.eval_args(args, scope)?;
                self.insert(relation, values, depth + 1, run)
            }
            Statement::StartTimer(name) => {
                let now = self.clock.now_ms();
                let t = self.timer_mut(name)?;
                if !t.running {
                    t.running = true;
                    t.next_fire = now.saturating_add(t.interval_ms);
                }
                Ok(())
            }
            Statement::StopTimer(name) => {
                self.timer_mut(name)?.running = false;
                Ok(())
            }
            Statement::Activate(name) => {
                self.rule_mut(name)?.active = true;
                Ok(())
            }
            Statement::Deactivate(name) => {
                self.rule_mut(name)?.active = false;
                Ok(())
            }
            Statement::Check(name) => {
                let id = *self.rule_ids.get(name).ok_or_else(|| RuntimeError::Unknown {
                    kind: "rule",
                    name: name.clone(),
                })?;
                if depth + 1 > self.config.max_cascade {
                    return Err(RuntimeError::CheckCascadeExceeded {
                        limit: self.config.max_cascade,
                        rule: name.clone(),
                    });
                }
                if self.evaluate_rule(id)?.holds() {
                    self.fire_rule(id, 0, depth + 1, run)?;
                }
                Ok(())
            }
            Statement::CallModule { module, args } => {
                let values = self.eval_args(args, scope)?;
                let binding = self
                    .modules
                    .get(module)
                    .ok_or_else(|| RuntimeError::NotMapped(module.clone()))?;
                let decl = self.program.module(module).expect("validated module");
                let outputs = self
                    .outbound
                    .invoke_module(binding, &decl.outputs, &values, CallMode::Sync)
                    .map_err(|source| RuntimeError::Module {
                        module: module.clone(),
                        source,
                    })?;
                for out in &decl.outputs {
                    let v = outputs.get(out).cloned().ok_or_else(|| RuntimeError::Module {
                        module: module.clone(),
                        source: OutboundError::MissingOutput(out.clone()),
                    })?;
                    scope.bind_output(module, out, v);
                }
                Ok(())
            }
            Statement::AcallModule { module, args } => {
                let values = self.eval_args(args, scope)?;
                match self.modules.get(module) {
                    None => warn!(module = %module, "ACALL to unmapped module ignored"),
                    Some(binding) => {
                        let decl = self.program.module(module).expect("validated module");
                        if let Err(e) =
                            self.outbound
                                .invoke_module(binding, &decl.outputs, &values, CallMode::Async)
                        {
                            warn!(module = %module, error = %e, "asynchronous module call failed");
                        }
                    }
                }
                Ok(())
            }
        }
    }

    fn timer_mut(&mut self, name: &str) -> Result<&mut TimerState, RuntimeError> {
        match self.timer_ids.get(name) {
            Some(&i) => Ok(&mut self.timers[i]),
            None => Err(RuntimeError::Unknown {
                kind: "timer",
                name: name.to_string(),
            }),
        }
    }

    fn rule_mut(&mut self, name: &str) -> Result<&mut RuleState, RuntimeError> {
        match self.rule_ids.get(name) {
            Some(&i) => Ok(&mut self.rules[i]),
            None => Err(RuntimeError::Unknown {
                kind: "rule",
                name: name.to_string(),
            }),
        }
    }

    /// Inserts a record produced at cascade `depth` (0 for external
    /// inserts), then runs the trigger and the dependent rules.
    fn insert(
        &mut self,
        relation: &str,
        values: Vec<Value>,
        depth: usize,
        run: &mut Run,
    ) -> Result<(), RuntimeError> {
        if depth > self.config.max_cascade {
            return Err(RuntimeError::CascadeExceeded {
                limit: self.config.max_cascade,
                relation: relation.to_string(),
            });
        }
        let decl: RelationDecl = self
            .program
            .relation(relation)
            .cloned()
            .ok_or_else(|| RuntimeError::Unknown {
                kind: "relation",
                name: relation.to_string(),
            })?;
        if let Some(binding) = self.backends.get(relation) {
            self.outbound
                .forward_insert(binding, &decl, &values)
                .map_err(|source| RuntimeError::Forward {
                    relation: relation.to_string(),
                    source,
                })?;
        }
        let t = self.clock.now_ms();
        let record = self.store.write().insert_next(relation, values, t)?.clone();
        if let Some(j) = self.journal.as_mut() {
            j.append(relation, &record)
                .map_err(|e| RuntimeError::Journal(e.to_string()))?;
        }
        if let Some(hook) = self.webhooks.get(relation) {
            self.outbound.fire_trigger_webhook(hook, &decl, &record);
        }

        if let Some(&tid) = self.triggers.get(relation) {
            run.firings.push(Firing {
                seq: record.seq,
                kind: FiringKind::Trigger,
                name: relation.to_string(),
                t,
            });
            let program = Arc::clone(&self.program);
            self.exec_block(&program.triggers[tid].body, &mut Scope::new(), depth, run)?;
        }

        match self.config.propagation {
            Propagation::Indexed => {
                let Some(ids) = self.dependents.get(relation).cloned() else {
                    return Ok(());
                };
                for &id in ids.iter() {
                    if !self.rules[id].active {
                        continue;
                    }
                    if self.evaluate_rule(id)?.holds() {
                        self.fire_rule(id, record.seq, depth, run)?;
                    }
                }
            }
            Propagation::Naive => {
                let program = Arc::clone(&self.program);
                for id in 0..self.rules.len() {
                    if !self.rules[id].active {
                        continue;
                    }
                    let result = self.evaluate_rule(id);
                    if !oracle::mentions_relation(&program.rules[id].condition, relation) {
                        continue;
                    }
                    if result?.holds() {
                        self.fire_rule(id, record.seq, depth, run)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn evaluate_rule(&mut self, id: usize) -> Result<Condition, RuntimeError> {
        self.evaluations[id] += 1;
        let store = self.store.read();
        Ok(eval_condition(&self.program.rules[id].condition, &store, &Scope::new())?)
    }

    fn fire_rule(&mut self, id: usize, seq: u64, depth: usize, run: &mut Run) -> Result<(), RuntimeError> {
        run.firings.push(Firing {
            seq,
            kind: FiringKind::Rule,
            name: self.rules[id].name.clone(),
            t: self.clock.now_ms(),
        });
        let program = Arc::clone(&self.program);
        self.exec_block(&program.rules[id].body, &mut Scope::new(), depth, run)
    }
}

fn check_config(program: &Program, config: &EngineConfig) -> Result<(), LoadError> {
    if config.default_window == 0 {
        return Err(LoadError::Config("window size must be positive".into()));
    }
    if config.max_cascade == 0 {
        return Err(LoadError::Config("cascade limit must be positive".into()));
    }
    if config.call_timeout_ms == 0 {
        return Err(LoadError::Config("call timeout must be positive".into()));
    }
    for (rel, size) in &config.windows {
        if program.relation(rel).is_none() {
            return Err(LoadError::Config(format!("window override for unknown relation `{rel}`")));
        }
        if *size == 0 {
            return Err(LoadError::Config(format!("window for `{rel}` must be positive")));
        }
    }
    for rel in config.webhooks.keys() {
        if program.relation(rel).is_none() {
            return Err(LoadError::Config(format!("webhook for unknown relation `{rel}`")));
        }
    }
    Ok(())
}

/// One step of a deterministic run: an event, or virtual time moving to
/// an absolute instant (running every timer due on the way).
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Event(EventKind),
    AdvanceTo(u64),
}

/// Everything a deterministic run produced.
#[derive(Debug, Clone)]
pub struct Transcript {
    pub firings: Vec<Firing>,
    pub errors: Vec<(u64, RuntimeError)>,
    pub store: Store,
}

impl Transcript {
    pub fn firing_log_jsonl(&self) -> String {
        export_jsonl(&self.firings)
    }
}

/// Loads `program` under a virtual clock starting at 0 with no network,
/// and feeds it `steps`.
pub fn run_steps(program: &Program, config: EngineConfig, steps: &[Step]) -> Result<Transcript, LoadError> {
    let mut engine = Engine::load(
        program.clone(),
        config,
        Clock::virtual_at(0),
        Arc::new(NullOutbound),
    )?;
    let mut firings = engine.startup_firings().to_vec();
    let mut errors = Vec::new();
    let mut absorb = |o: EventOutcome| {
        firings.extend(o.firings);
        if let Some(e) = o.error {
            errors.push((o.arrival_seq, e));
        }
    };
    for step in steps {
        match step {
            Step::Event(kind) => absorb(engine.submit(kind.clone())),
            Step::AdvanceTo(t) => engine.advance_to(*t).into_iter().for_each(&mut absorb),
        }
    }
    let store = engine.store().read().clone();
    Ok(Transcript {
        firings,
        errors,
        store,
    })
}
