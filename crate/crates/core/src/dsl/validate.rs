//! Post-parse checks: name uniqueness, reference resolution, arity.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::error::{ParseError, Pos, SemanticError};
use crate::value::Value;

/// Source positions of each declaration, parallel to the [`Program`] lists.
#[derive(Debug, Default, Clone)]
pub struct DeclSpans {
    pub relations: Vec<Pos>,
    pub triggers: Vec<Pos>,
    pub endpoints: Vec<Pos>,
    pub timers: Vec<Pos>,
    pub rules: Vec<Pos>,
    pub modules: Vec<Pos>,
    pub mappings: Vec<Pos>,
    pub statements: Vec<Pos>,
}

fn at(list: Option<&Vec<Pos>>, i: usize) -> Option<Pos> {
    list.and_then(|l| l.get(i).copied())
}

/// Checks every invariant of a [`Program`]; used for ASTs built in code.
pub fn validate(program: &Program) -> Result<(), ParseError> {
    validate_with_spans(program, None)
}

/// Rewrites `M.out` field references whose prefix names a module (and not a
/// relation) into [`Expr::ModuleOutput`].
pub(crate) fn resolve_module_outputs(
    program: &mut Program,
    spans: Option<&DeclSpans>,
) -> Result<(), ParseError> {
    let relations: HashSet<String> = program.relations.iter().map(|r| r.name.clone()).collect();
    let modules: HashSet<String> = program.modules.iter().map(|m| m.name.clone()).collect();

    fn fix(
        e: &mut Expr,
        relations: &HashSet<String>,
        modules: &HashSet<String>,
    ) -> Result<(), SemanticError> {
        match e {
            Expr::Field {
                relation,
                field,
                offset,
            } if !relations.contains(relation.as_str()) && modules.contains(relation.as_str()) => {
                if *offset != 0 {
                    return Err(SemanticError::OffsetOnModuleOutput(format!("{relation}.{field}")));
                }
                *e = Expr::ModuleOutput {
                    module: std::mem::take(relation),
                    output: std::mem::take(field),
                };
                Ok(())
            }
            Expr::Unary(_, inner) => fix(inner, relations, modules),
            Expr::Binary(_, l, r) => {
                fix(l, relations, modules)?;
                fix(r, relations, modules)
            }
            _ => Ok(()),
        }
    }

    let fix_block = |block: &mut Block| -> Result<(), SemanticError> {
        for stmt in block {
            match stmt {
                Statement::Insert { args, .. }
                | Statement::CallModule { args, .. }
                | Statement::AcallModule { args, .. } => {
                    for a in args {
                        fix(a, &relations, &modules)?;
                    }
                }
                _ => {}
            }
        }
        Ok(())
    };

    let sem = |decl: String, pos: Option<Pos>| {
        move |error| ParseError::Semantic { pos, decl, error }
    };

    for (i, t) in program.triggers.iter_mut().enumerate() {
        let d = format!("TRIGGER ({})", t.relation);
        fix_block(&mut t.body).map_err(sem(d, at(spans.map(|s| &s.triggers), i)))?;
    }
    for (i, e) in program.endpoints.iter_mut().enumerate() {
        let d = format!("ENDPOINT {}", e.name);
        fix_block(&mut e.body).map_err(sem(d, at(spans.map(|s| &s.endpoints), i)))?;
    }
    for (i, t) in program.timers.iter_mut().enumerate() {
        let d = format!("TIMER {}", t.name);
        fix_block(&mut t.body).map_err(sem(d, at(spans.map(|s| &s.timers), i)))?;
    }
    for (i, r) in program.rules.iter_mut().enumerate() {
        let d = format!("RULE {}", r.name);
        let pos = at(spans.map(|s| &s.rules), i);
        fix(&mut r.condition, &relations, &modules).map_err(sem(d.clone(), pos))?;
        fix_block(&mut r.body).map_err(sem(d, pos))?;
    }
    fix_block(&mut program.top_level_statements).map_err(sem("top-level statement".into(), None))?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum StaticType {
    Bool,
    Number,
    Text,
    Null,
    Unknown,
}

fn static_type(e: &Expr) -> StaticType {
    match e {
        Expr::Literal(Value::Bool(_)) => StaticType::Bool,
        Expr::Literal(Value::Number(_)) => StaticType::Number,
        Expr::Literal(Value::Text(_)) => StaticType::Text,
        Expr::Literal(Value::Null) => StaticType::Null,
        Expr::Field { .. } | Expr::ModuleOutput { .. } | Expr::Var(_) => StaticType::Unknown,
        Expr::Unary(UnaryOp::Not, _) => StaticType::Bool,
        Expr::Unary(UnaryOp::Neg, _) => StaticType::Number,
        Expr::Binary(op, _, _) => match op {
            BinaryOp::Add | BinaryOp::Sub | BinaryOp::Mul | BinaryOp::Div => StaticType::Number,
            _ => StaticType::Bool,
        },
    }
}

struct Checker<'p> {
    relations: HashMap<&'p str, &'p RelationDecl>,
    modules: HashMap<&'p str, &'p ModuleDecl>,
    timers: HashSet<&'p str>,
    rules: HashSet<&'p str>,
}

impl<'p> Checker<'p> {
    fn expr(&self, e: &Expr, scope: &[String], in_condition: bool) -> Result<(), SemanticError> {
        let mut result = Ok(());
        e.walk(&mut |node| {
            if result.is_err() {
                return;
            }
            result = match node {
                Expr::Field {
                    relation,
                    field,
                    offset,
                } => match self.relations.get(relation.as_str()) {
                    None => Err(SemanticError::UnknownRelation(relation.clone())),
                    Some(r) if field != TIMESTAMP_FIELD && r.field_index(field).is_none() => {
                        Err(SemanticError::UnknownField {
                            relation: relation.clone(),
                            field: field.clone(),
                        })
                    }
                    // only reachable for hand-built trees
                    Some(_) if *offset > 0 => Err(SemanticError::UnknownField {
                        relation: relation.clone(),
                        field: format!("{field}[{offset}]"),
                    }),
                    Some(_) => Ok(()),
                },
                Expr::ModuleOutput { module, output } => {
                    if in_condition {
                        Err(SemanticError::NotAllowedInCondition(format!("{module}.{output}")))
                    } else {
                        match self.modules.get(module.as_str()) {
                            None => Err(SemanticError::UnknownModule(module.clone())),
                            Some(m) if !m.outputs.contains(output) => {
                                Err(SemanticError::UnknownOutput {
                                    module: module.clone(),
                                    output: output.clone(),
                                })
                            }
                            Some(_) => Ok(()),
                        }
                    }
                }
                Expr::Var(name) if in_condition => {
                    Err(SemanticError::NotAllowedInCondition(name.clone()))
                }
                Expr::Var(name) if !scope.contains(name) => {
                    Err(SemanticError::UnknownName(name.clone()))
                }
                Expr::Literal(Value::Number(n)) if !n.is_finite() => {
                    Err(SemanticError::NonFiniteLiteral)
                }
                _ => Ok(()),
            };
        });
        result
    }

    fn block(&self, block: &[Statement], scope: &[String]) -> Result<(), SemanticError> {
        for stmt in block {
            for a in stmt.args() {
                self.expr(a, scope, false)?;
            }
            match stmt {
                Statement::Insert { relation, args } => match self.relations.get(relation.as_str()) {
                    None => return Err(SemanticError::UnknownRelation(relation.clone())),
                    Some(r) if r.arity() != args.len() => {
                        return Err(SemanticError::ArityMismatch {
                            relation: relation.clone(),
                            expected: r.arity(),
                            found: args.len(),
                        })
                    }
                    Some(_) => {}
                },
                Statement::StartTimer(t) | Statement::StopTimer(t) => {
                    if !self.timers.contains(t.as_str()) {
                        return Err(SemanticError::UnknownTimer(t.clone()));
                    }
                }
                Statement::Activate(r) | Statement::Deactivate(r) | Statement::Check(r) => {
                    if !self.rules.contains(r.as_str()) {
                        return Err(SemanticError::UnknownRule(r.clone()));
                    }
                }
                Statement::CallModule { module, .. } | Statement::AcallModule { module, .. } => {
                    if !self.modules.contains_key(module.as_str()) {
                        return Err(SemanticError::UnknownModule(module.clone()));
                    }
                }
            }
        }
        Ok(())
    }
}

fn unique<'a>(
    kind: &'static str,
    names: impl Iterator<Item = &'a str>,
) -> Result<(), (usize, SemanticError)> {
    let mut seen = HashSet::new();
    for (i, n) in names.enumerate() {
        if !seen.insert(n) {
            return Err((
                i,
                SemanticError::DuplicateName {
                    kind,
                    name: n.to_string(),
                },
            ));
        }
    }
    Ok(())
}

fn unique_list(names: &[String]) -> Result<(), SemanticError> {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n.as_str()) {
            return Err(SemanticError::DuplicateField { name: n.clone() });
        }
    }
    Ok(())
}

fn valid_target(target: &str) -> bool {
    if target.is_empty() || target.chars().any(char::is_whitespace) {
        return false;
    }
    if url::Url::parse(target).is_ok() {
        return true;
    }
    let base = url::Url::parse("http://localhost/").expect("static base URL");
    base.join(target).is_ok()
}

pub fn validate_with_spans(program: &Program, spans: Option<&DeclSpans>) -> Result<(), ParseError> {
    let err = |decl: String, pos: Option<Pos>, error: SemanticError| ParseError::Semantic {
        pos,
        decl,
        error,
    };

    unique("relation", program.relations.iter().map(|r| r.name.as_str())).map_err(|(i, e)| {
        err(
            format!("RELATION {}", program.relations[i].name),
            at(spans.map(|s| &s.relations), i),
            e,
        )
    })?;
    unique("endpoint", program.endpoints.iter().map(|x| x.name.as_str())).map_err(|(i, e)| {
        err(
            format!("ENDPOINT {}", program.endpoints[i].name),
            at(spans.map(|s| &s.endpoints), i),
            e,
        )
    })?;
    unique("timer", program.timers.iter().map(|x| x.name.as_str())).map_err(|(i, e)| {
        err(
            format!("TIMER {}", program.timers[i].name),
            at(spans.map(|s| &s.timers), i),
            e,
        )
    })?;
    unique("rule", program.rules.iter().map(|x| x.name.as_str())).map_err(|(i, e)| {
        err(
            format!("RULE {}", program.rules[i].name),
            at(spans.map(|s| &s.rules), i),
            e,
        )
    })?;
    unique("module", program.modules.iter().map(|x| x.name.as_str())).map_err(|(i, e)| {
        err(
            format!("MODULE {}", program.modules[i].name),
            at(spans.map(|s| &s.modules), i),
            e,
        )
    })?;

    let checker = Checker {
        relations: program.relations.iter().map(|r| (r.name.as_str(), r)).collect(),
        modules: program.modules.iter().map(|m| (m.name.as_str(), m)).collect(),
        timers: program.timers.iter().map(|t| t.name.as_str()).collect(),
        rules: program.rules.iter().map(|r| r.name.as_str()).collect(),
    };

    for (i, r) in program.relations.iter().enumerate() {
        let decl = || format!("RELATION {}", r.name);
        let pos = at(spans.map(|s| &s.relations), i);
        if r.fields.is_empty() {
            return Err(err(decl(), pos, SemanticError::EmptyFieldList));
        }
        if r.fields.iter().any(|f| f == TIMESTAMP_FIELD) {
            return Err(err(decl(), pos, SemanticError::ReservedField));
        }
        unique_list(&r.fields).map_err(|e| err(decl(), pos, e))?;
        if checker.modules.contains_key(r.name.as_str()) {
            return Err(err(decl(), pos, SemanticError::NameCollision(r.name.clone())));
        }
    }

    for (i, m) in program.modules.iter().enumerate() {
        let pos = at(spans.map(|s| &s.modules), i);
        unique_list(&m.outputs).map_err(|e| err(format!("MODULE {}", m.name), pos, e))?;
    }

    let mut triggered = HashSet::new();
    for (i, t) in program.triggers.iter().enumerate() {
        let decl = || format!("TRIGGER ({})", t.relation);
        let pos = at(spans.map(|s| &s.triggers), i);
        if !checker.relations.contains_key(t.relation.as_str()) {
            return Err(err(decl(), pos, SemanticError::UnknownRelation(t.relation.clone())));
        }
        if !triggered.insert(t.relation.as_str()) {
            return Err(err(decl(), pos, SemanticError::DuplicateTrigger(t.relation.clone())));
        }
        checker.block(&t.body, &[]).map_err(|e| err(decl(), pos, e))?;
    }

    for (i, e) in program.endpoints.iter().enumerate() {
        let decl = || format!("ENDPOINT {}", e.name);
        let pos = at(spans.map(|s| &s.endpoints), i);
        unique_list(&e.params).map_err(|x| err(decl(), pos, x))?;
        if let Some(p) = e.params.iter().find(|p| checker.relations.contains_key(p.as_str())) {
            return Err(err(decl(), pos, SemanticError::ShadowsRelation(p.clone())));
        }
        checker.block(&e.body, &e.params).map_err(|x| err(decl(), pos, x))?;
    }

    for (i, t) in program.timers.iter().enumerate() {
        let decl = || format!("TIMER {}", t.name);
        let pos = at(spans.map(|s| &s.timers), i);
        if t.interval_ms == 0 {
            return Err(err(decl(), pos, SemanticError::ZeroInterval));
        }
        checker.block(&t.body, &[]).map_err(|x| err(decl(), pos, x))?;
    }

    for (i, r) in program.rules.iter().enumerate() {
        let decl = || format!("RULE {}", r.name);
        let pos = at(spans.map(|s| &s.rules), i);
        checker.expr(&r.condition, &[], true).map_err(|x| err(decl(), pos, x))?;
        if !matches!(static_type(&r.condition), StaticType::Bool | StaticType::Unknown) {
            return Err(err(decl(), pos, SemanticError::NonBooleanCondition));
        }
        checker.block(&r.body, &[]).map_err(|x| err(decl(), pos, x))?;
    }

    let mut mapped = HashSet::new();
    for (i, m) in program.mappings.iter().enumerate() {
        let decl = || format!("MAP {} {}", m.kind.keyword(), m.name);
        let pos = at(spans.map(|s| &s.mappings), i);
        let known = match m.kind {
            MapKind::Relation => checker.relations.contains_key(m.name.as_str()),
            MapKind::Module => checker.modules.contains_key(m.name.as_str()),
        };
        if !known {
            let e = match m.kind {
                MapKind::Relation => SemanticError::UnknownRelation(m.name.clone()),
                MapKind::Module => SemanticError::UnknownModule(m.name.clone()),
            };
            return Err(err(decl(), pos, e));
        }
        if !mapped.insert((m.kind, m.name.as_str())) {
            return Err(err(
                decl(),
                pos,
                SemanticError::DuplicateName {
                    kind: "mapping",
                    name: m.name.clone(),
                },
            ));
        }
        if !valid_target(&m.target) {
            return Err(err(decl(), pos, SemanticError::InvalidTarget(m.target.clone())));
        }
    }

    for (i, s) in program.top_level_statements.iter().enumerate() {
        let pos = at(spans.map(|s| &s.statements), i);
        checker
            .block(std::slice::from_ref(s), &[])
            .map_err(|x| err("top-level statement".into(), pos, x))?;
    }

    Ok(())
}
