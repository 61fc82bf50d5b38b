//! Canonical pretty-printer. `parse_program(&format_program(p)) == p` for
//! every valid program.

use std::fmt::Write;

use super::ast::*;
use crate::value::{format_number, Value};

const INDENT: &str = "    ";

pub fn format_program(p: &Program) -> String {
    let mut out = String::new();
    for r in &p.relations {
        let _ = writeln!(out, "RELATION {} ({})", r.name, r.fields.join(", "));
    }
    for m in &p.modules {
        let _ = writeln!(out, "MODULE {} ({})", m.name, m.outputs.join(", "));
    }
    for m in &p.mappings {
        let _ = writeln!(
            out,
            "MAP {} {} : {}",
            m.kind.keyword(),
            m.name,
            quote(&m.target)
        );
    }
    for t in &p.triggers {
        let _ = write!(out, "TRIGGER ({}) ", t.relation);
        block(&mut out, &t.body);
    }
    for e in &p.endpoints {
        let _ = write!(out, "ENDPOINT {} ({}) ", e.name, e.params.join(", "));
        block(&mut out, &e.body);
    }
    for t in &p.timers {
        let _ = write!(out, "TIMER {} ({}) ", t.name, t.interval_ms);
        block(&mut out, &t.body);
    }
    for r in &p.rules {
        let _ = write!(out, "RULE {} {} ", r.name, format_expr(&r.condition));
        block(&mut out, &r.body);
    }
    for s in &p.top_level_statements {
        out.push_str(&format_statement(s));
        out.push('\n');
    }
    out
}

fn block(out: &mut String, body: &Block) {
    if body.is_empty() {
        out.push_str("{}\n");
        return;
    }
    out.push_str("{\n");
    for s in body {
        out.push_str(INDENT);
        out.push_str(&format_statement(s));
        out.push('\n');
    }
    out.push_str("}\n");
}

fn args(list: &[Expr]) -> String {
    list.iter().map(format_expr).collect::<Vec<_>>().join(", ")
}

pub fn format_statement(s: &Statement) -> String {
    match s {
        Statement::Insert { relation, args: a } => format!("{relation}({})", args(a)),
        Statement::StartTimer(n) => format!("START ({n})"),
        Statement::StopTimer(n) => format!("STOP ({n})"),
        Statement::Activate(n) => format!("ACTIVATE ({n})"),
        Statement::Deactivate(n) => format!("DEACTIVATE ({n})"),
        Statement::Check(n) => format!("CHECK ({n})"),
        Statement::CallModule { module, args: a } => format!("CALL {module} ({})", args(a)),
        Statement::AcallModule { module, args: a } => format!("ACALL {module} ({})", args(a)),
    }
}

pub fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

const NOT_PREC: u8 = 3;
const NEG_PREC: u8 = 7;
const ATOM_PREC: u8 = 8;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, _, _) => op.precedence(),
        Expr::Unary(UnaryOp::Not, _) => NOT_PREC,
        Expr::Unary(UnaryOp::Neg, _) => NEG_PREC,
        _ => ATOM_PREC,
    }
}

pub fn format_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    let wrap = precedence(e) < min_prec;
    if wrap {
        out.push('(');
    }
    match e {
        Expr::Literal(v) => match v {
            Value::Text(s) => out.push_str(&quote(s)),
            Value::Number(n) => out.push_str(&format_number(*n)),
            Value::Bool(true) => out.push_str("TRUE"),
            Value::Bool(false) => out.push_str("FALSE"),
            Value::Null => out.push_str("NULL"),
        },
        Expr::Field {
            relation,
            field,
            offset,
        } => {
            let _ = write!(out, "{relation}.{field}");
            if *offset != 0 {
                let _ = write!(out, "[{offset}]");
            }
        }
        Expr::ModuleOutput { module, output } => {
            let _ = write!(out, "{module}.{output}");
        }
        Expr::Var(name) => out.push_str(name),
        Expr::Unary(UnaryOp::Not, inner) => {
            out.push_str("NOT ");
            write_expr(out, inner, NOT_PREC);
        }
        // always parenthesised so `-(5)` is not re-read as the literal -5
        Expr::Unary(UnaryOp::Neg, inner) => {
            out.push_str("-(");
            write_expr(out, inner, 0);
            out.push(')');
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let (lp, rp) = if op.is_comparison() { (p + 1, p + 1) } else { (p, p + 1) };
            write_expr(out, l, lp);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, r, rp);
        }
    }
    if wrap {
        out.push(')');
    }
}
