//! Seeded generators for random programs and event streams, used by the
//! property tests, the acceptance suite and the benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};

use crate::dsl::*;
use crate::engine::{EventKind, Step};
use crate::value::Value;

#[derive(Debug, Clone)]
pub struct ProgramShape {
    pub max_relations: usize,
    pub max_fields: usize,
    pub max_rules: usize,
    pub max_timers: usize,
    pub max_endpoints: usize,
    pub max_modules: usize,
    pub max_body: usize,
    pub max_expr_depth: u32,
    /// Only emit programs that load and run against an engine with no
    /// outbound network: no relation backends, no synchronous calls and
    /// no top-level inserts.
    pub runnable: bool,
}

impl Default for ProgramShape {
    fn default() -> Self {
        ProgramShape {
            max_relations: 10,
            max_fields: 4,
            max_rules: 20,
            max_timers: 3,
            max_endpoints: 3,
            max_modules: 3,
            max_body: 3,
            max_expr_depth: 3,
            runnable: true,
        }
    }
}

struct Gen<'a, R: RngCore> {
    rng: &'a mut R,
    shape: &'a ProgramShape,
    relations: Vec<RelationDecl>,
    modules: Vec<ModuleDecl>,
    rules: Vec<String>,
    timers: Vec<String>,
}

const TEXTS: [&str; 6] = ["", "a", "38:E7:D8:D3:18:68", "say \"hi\"", "back\\slash", "tab\tnew\nline"];

impl<R: RngCore> Gen<'_, R> {
    fn number(&mut self) -> f64 {
        match self.rng.random_range(0..4) {
            0 => self.rng.random_range(-100..=100) as f64,
            1 => self.rng.random_range(-10..=10) as f64,
            2 => self.rng.random_range(-400..=400) as f64 / 4.0,
            _ => self.rng.random_range(-90..=-30) as f64,
        }
    }

    fn literal(&mut self) -> Value {
        match self.rng.random_range(0..10) {
            0 => Value::text(*TEXTS.choose(self.rng).unwrap()),
            1 => Value::Bool(self.rng.random_bool(0.5)),
            2 if !self.shape.runnable => Value::Null,
            _ => Value::Number(self.number()),
        }
    }

    fn field_ref(&mut self) -> Expr {
        let rel = self.relations.choose(self.rng).unwrap();
        let field = if self.rng.random_bool(0.1) {
            TIMESTAMP_FIELD.to_string()
        } else {
            rel.fields.choose(self.rng).unwrap().clone()
        };
        let offset = if self.rng.random_bool(0.7) { 0 } else { -self.rng.random_range(1..=3) };
        Expr::Field {
            relation: rel.name.clone(),
            field,
            offset,
        }
    }

    /// A leaf for a numeric position. `vars` are names in scope.
    fn num_leaf(&mut self, vars: &[String]) -> Expr {
        match self.rng.random_range(0..10) {
            0..=4 => self.field_ref(),
            5 if !vars.is_empty() => Expr::Var(vars.choose(self.rng).unwrap().clone()),
            _ => Expr::num(self.number()),
        }
    }

    fn num_expr(&mut self, depth: u32, vars: &[String]) -> Expr {
        if depth == 0 || self.rng.random_bool(0.4) {
            return self.num_leaf(vars);
        }
        if self.rng.random_bool(0.1) {
            return Expr::unary(UnaryOp::Neg, self.num_expr(depth - 1, vars));
        }
        let op = *[BinaryOp::Add, BinaryOp::Sub, BinaryOp::Mul, BinaryOp::Div]
            .choose(self.rng)
            .unwrap();
        Expr::binary(op, self.num_expr(depth - 1, vars), self.num_expr(depth - 1, vars))
    }

    fn bool_expr(&mut self, depth: u32, vars: &[String]) -> Expr {
        let roll = self.rng.random_range(0..10);
        if depth == 0 || roll < 5 {
            let op = *[
                BinaryOp::Lt,
                BinaryOp::Le,
                BinaryOp::Gt,
                BinaryOp::Ge,
                BinaryOp::Eq,
                BinaryOp::Ne,
            ]
            .choose(self.rng)
            .unwrap();
            let d = depth.saturating_sub(1);
            let rhs = if self.rng.random_bool(0.1) {
                Expr::Literal(self.literal())
            } else {
                self.num_expr(d, vars)
            };
            return Expr::binary(op, self.num_expr(d, vars), rhs);
        }
        match roll {
            5 => Expr::unary(UnaryOp::Not, self.bool_expr(depth - 1, vars)),
            6 => Expr::Literal(Value::Bool(self.rng.random_bool(0.5))),
            _ => {
                let op = if self.rng.random_bool(0.5) { BinaryOp::And } else { BinaryOp::Or };
                Expr::binary(op, self.bool_expr(depth - 1, vars), self.bool_expr(depth - 1, vars))
            }
        }
    }

    fn arg(&mut self, vars: &[String], outputs: &[(String, String)]) -> Expr {
        if !outputs.is_empty() && self.rng.random_bool(0.2) {
            let (module, output) = outputs.choose(self.rng).unwrap().clone();
            return Expr::ModuleOutput { module, output };
        }
        match self.rng.random_range(0..10) {
            0 => Expr::Literal(self.literal()),
            1 => self.bool_expr(1, vars),
            _ => self.num_expr(self.shape.max_expr_depth.min(2), vars),
        }
    }

    fn statement(&mut self, vars: &[String], outputs: &mut Vec<(String, String)>) -> Statement {
        loop {
            match self.rng.random_range(0..12) {
                0..=5 => {
                    let rel = self.relations.choose(self.rng).unwrap().clone();
                    let args = rel.fields.iter().map(|_| self.arg(vars, outputs)).collect();
                    return Statement::Insert {
                        relation: rel.name,
                        args,
                    };
                }
                6 if !self.timers.is_empty() => {
                    let t = self.timers.choose(self.rng).unwrap().clone();
                    return if self.rng.random_bool(0.5) {
                        Statement::StartTimer(t)
                    } else {
                        Statement::StopTimer(t)
                    };
                }
                7 if !self.rules.is_empty() => {
                    return Statement::Activate(self.rules.choose(self.rng).unwrap().clone())
                }
                8 if !self.rules.is_empty() => {
                    return Statement::Deactivate(self.rules.choose(self.rng).unwrap().clone())
                }
                9 if !self.rules.is_empty() => {
                    return Statement::Check(self.rules.choose(self.rng).unwrap().clone())
                }
                10 | 11 if !self.modules.is_empty() => {
                    let m = self.modules.choose(self.rng).unwrap().clone();
                    let n = self.rng.random_range(0..3);
                    let args = (0..n).map(|_| self.arg(vars, outputs)).collect();
                    if self.shape.runnable || self.rng.random_bool(0.5) {
                        return Statement::AcallModule { module: m.name, args };
                    }
                    outputs.extend(m.outputs.iter().map(|o| (m.name.clone(), o.clone())));
                    return Statement::CallModule { module: m.name, args };
                }
                _ => {}
            }
        }
    }

    fn block(&mut self, vars: &[String]) -> Block {
        let n = self.rng.random_range(0..=self.shape.max_body);
        let mut outputs = Vec::new();
        (0..n).map(|_| self.statement(vars, &mut outputs)).collect()
    }

    fn program(&mut self) -> Program {
        let mut p = Program::default();
        let nrel = self.rng.random_range(1..=self.shape.max_relations.max(1));
        for i in 0..nrel {
            let nf = self.rng.random_range(1..=self.shape.max_fields.max(1));
            self.relations.push(RelationDecl {
                name: format!("R{i}"),
                fields: (0..nf).map(|j| format!("f{j}")).collect(),
            });
        }
        p.relations = self.relations.clone();
        let nmod = self.rng.random_range(0..=self.shape.max_modules);
        for i in 0..nmod {
            let no = self.rng.random_range(0..3);
            self.modules.push(ModuleDecl {
                name: format!("M{i}"),
                outputs: (0..no).map(|j| format!("out{j}")).collect(),
            });
        }
        p.modules = self.modules.clone();
        let nrules = self.rng.random_range(0..=self.shape.max_rules);
        self.rules = (0..nrules).map(|i| format!("X{i}")).collect();
        let ntimers = self.rng.random_range(0..=self.shape.max_timers);
        self.timers = (0..ntimers).map(|i| format!("TM{i}")).collect();

        for m in &self.modules.clone() {
            if self.rng.random_bool(0.5) {
                p.mappings.push(MapDecl {
                    kind: MapKind::Module,
                    name: m.name.clone(),
                    target: format!("{}.jsp", m.name.to_lowercase()),
                });
            }
        }
        if !self.shape.runnable {
            for r in &self.relations.clone() {
                if self.rng.random_bool(0.2) {
                    p.mappings.push(MapDecl {
                        kind: MapKind::Relation,
                        name: r.name.clone(),
                        target: format!("http://store.example/{}", r.name),
                    });
                }
            }
        }
        for r in &self.relations.clone() {
            if self.rng.random_bool(0.4) {
                let body = self.block(&[]);
                p.triggers.push(TriggerDecl {
                    relation: r.name.clone(),
                    body,
                });
            }
        }
        let neps = self.rng.random_range(0..=self.shape.max_endpoints);
        for i in 0..neps {
            let params: Vec<String> = (0..self.rng.random_range(0..3)).map(|j| format!("p{j}")).collect();
            let body = self.block(&params);
            p.endpoints.push(EndpointDecl {
                name: format!("E{i}"),
                params,
                body,
            });
        }
        for name in self.timers.clone() {
            let interval_ms = self.rng.random_range(1..=50) * 100;
            let body = self.block(&[]);
            p.timers.push(TimerDecl {
                name,
                interval_ms,
                body,
            });
        }
        for name in self.rules.clone() {
            let condition = self.bool_expr(self.shape.max_expr_depth, &[]);
            let body = self.block(&[]);
            p.rules.push(RuleDecl {
                name,
                condition,
                body,
            });
        }
        let ntop = self.rng.random_range(0..3);
        for _ in 0..ntop {
            let s = self.statement(&[], &mut Vec::new());
            let keep = !self.shape.runnable
                || matches!(
                    s,
                    Statement::StartTimer(_)
                        | Statement::StopTimer(_)
                        | Statement::Activate(_)
                        | Statement::Deactivate(_)
                );
            if keep {
                p.top_level_statements.push(s);
            }
        }
        p
    }
}

/// A random program that passes validation.
pub fn program<R: RngCore>(rng: &mut R, shape: &ProgramShape) -> Program {
    let mut g = Gen {
        rng,
        shape,
        relations: Vec::new(),
        modules: Vec::new(),
        rules: Vec::new(),
        timers: Vec::new(),
    };
    let p = g.program();
    debug_assert!(validate(&p).is_ok(), "{:?}", validate(&p));
    p
}

/// A random condition-style expression over `program`'s relations.
pub fn condition<R: RngCore>(rng: &mut R, program: &Program, depth: u32) -> Expr {
    let shape = ProgramShape::default();
    let mut g = Gen {
        rng,
        shape: &shape,
        relations: program.relations.clone(),
        modules: Vec::new(),
        rules: Vec::new(),
        timers: Vec::new(),
    };
    g.bool_expr(depth, &[])
}

/// Up to `max_events` steps: external inserts (mostly numeric), endpoint
/// calls and virtual-time advances, in nondecreasing time order.
pub fn steps<R: RngCore>(rng: &mut R, program: &Program, max_events: usize) -> Vec<Step> {
    let n = rng.random_range(0..=max_events);
    let mut now = 0u64;
    let mut out = Vec::with_capacity(n);
    let value = |rng: &mut R| match rng.random_range(0..20) {
        0 => Value::text("x"),
        1 => Value::Bool(rng.random_bool(0.5)),
        _ => Value::Number(rng.random_range(-100..=100) as f64),
    };
    for _ in 0..n {
        match rng.random_range(0..10) {
            0 => {
                now += rng.random_range(0..=3000);
                out.push(Step::AdvanceTo(now));
            }
            1 if !program.endpoints.is_empty() => {
                let ep = program.endpoints.choose(rng).unwrap();
                let args = ep.params.iter().map(|_| value(rng)).collect();
                out.push(Step::Event(EventKind::EndpointCall {
                    name: ep.name.clone(),
                    args,
                }));
            }
            _ => {
                let rel = program.relations.choose(rng).unwrap();
                let values = rel.fields.iter().map(|_| value(rng)).collect();
                out.push(Step::Event(EventKind::ExternalInsert {
                    relation: rel.name.clone(),
                    values,
                }));
            }
        }
    }
    out
}
