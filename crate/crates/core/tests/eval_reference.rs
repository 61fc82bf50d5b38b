//! The evaluator against a separately written tree walker that reads from a
//! plain full-history list instead of the ring-buffer store.

use std::collections::HashMap;

use logiciot::dsl::{BinaryOp, Expr, RelationDecl, UnaryOp};
use logiciot::eval::{eval, EvalErrorKind, Scope};
use logiciot::store::Store;
use logiciot::Value;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct History {
    fields: Vec<&'static str>,
    window: usize,
    rows: Vec<(u64, Vec<Value>)>,
}

struct World {
    relations: HashMap<&'static str, History>,
    vars: HashMap<String, Value>,
}

type Ref = Result<Value, EvalErrorKind>;

fn number(n: f64) -> Ref {
    if n.is_finite() {
        Ok(Value::Number(n))
    } else {
        Err(EvalErrorKind::NonFinite)
    }
}

fn reference(e: &Expr, w: &World) -> Ref {
    use EvalErrorKind as K;
    match e {
        Expr::Literal(v) => Ok(v.clone()),
        Expr::Var(name) => w.vars.get(name).cloned().ok_or(K::Unbound),
        Expr::ModuleOutput { .. } => Err(K::Unbound),
        Expr::Field { relation, field, offset } => {
            let h = &w.relations[relation.as_str()];
            let visible = h.rows.len().min(h.window);
            let back = (-offset) as usize;
            if back >= visible {
                return Err(K::HistoryUnavailable);
            }
            let (t, values) = &h.rows[h.rows.len() - 1 - back];
            if field == "T" {
                return Ok(Value::Number(*t as f64));
            }
            let col = h.fields.iter().position(|f| f == field).unwrap();
            Ok(values[col].clone())
        }
        Expr::Unary(UnaryOp::Neg, x) => match reference(x, w)? {
            Value::Number(n) => Ok(Value::Number(-n)),
            _ => Err(K::Type),
        },
        Expr::Unary(UnaryOp::Not, x) => match reference(x, w)? {
            Value::Bool(b) => Ok(Value::Bool(!b)),
            _ => Err(K::Type),
        },
        Expr::Binary(op @ (BinaryOp::And | BinaryOp::Or), l, r) => {
            let Value::Bool(a) = reference(l, w)? else {
                return Err(K::Type);
            };
            let decided = if *op == BinaryOp::And { !a } else { a };
            if decided {
                return Ok(Value::Bool(a));
            }
            match reference(r, w)? {
                Value::Bool(b) => Ok(Value::Bool(b)),
                _ => Err(K::Type),
            }
        }
        Expr::Binary(op, l, r) => {
            let a = reference(l, w)?;
            let b = reference(r, w)?;
            let same = |a: &Value, b: &Value| match (a, b) {
                (Value::Number(x), Value::Number(y)) => x == y,
                (Value::Text(x), Value::Text(y)) => x == y,
                (Value::Bool(x), Value::Bool(y)) => x == y,
                (Value::Null, Value::Null) => true,
                _ => false,
            };
            match op {
                BinaryOp::Eq => return Ok(Value::Bool(same(&a, &b))),
                BinaryOp::Ne => return Ok(Value::Bool(!same(&a, &b))),
                _ => {}
            }
            if let (Value::Number(x), Value::Number(y)) = (&a, &b) {
                let (x, y) = (*x, *y);
                return match op {
                    BinaryOp::Add => number(x + y),
                    BinaryOp::Sub => number(x - y),
                    BinaryOp::Mul => number(x * y),
                    BinaryOp::Div if y == 0.0 => Err(K::DivisionByZero),
                    BinaryOp::Div => number(x / y),
                    BinaryOp::Lt => Ok(Value::Bool(x < y)),
                    BinaryOp::Le => Ok(Value::Bool(x <= y)),
                    BinaryOp::Gt => Ok(Value::Bool(x > y)),
                    BinaryOp::Ge => Ok(Value::Bool(x >= y)),
                    _ => unreachable!(),
                };
            }
            // text compares by code point, booleans with false < true
            let rank = match (&a, &b) {
                (Value::Text(x), Value::Text(y)) => Some(x.as_str().cmp(y.as_str())),
                (Value::Bool(x), Value::Bool(y)) => Some((*x as u8).cmp(&(*y as u8))),
                _ => None,
            };
            match (op, rank) {
                (BinaryOp::Lt, Some(o)) => Ok(Value::Bool(o.is_lt())),
                (BinaryOp::Le, Some(o)) => Ok(Value::Bool(o.is_le())),
                (BinaryOp::Gt, Some(o)) => Ok(Value::Bool(o.is_gt())),
                (BinaryOp::Ge, Some(o)) => Ok(Value::Bool(o.is_ge())),
                _ => Err(K::Type),
            }
        }
    }
}

fn random_value(rng: &mut ChaCha8Rng) -> Value {
    match rng.random_range(0..12) {
        0 => Value::text(*["", "a", "b", "ab"].choose(rng).unwrap()),
        1 => Value::Bool(rng.random_bool(0.5)),
        2 => Value::Null,
        3 => Value::Number(1e308),
        4 => Value::Number(0.0),
        _ => Value::Number(rng.random_range(-20..=20) as f64 / 2.0),
    }
}

const RELS: [(&str, &[&str], usize); 3] = [("A", &["x", "y"], 1024), ("B", &["z"], 3), ("C", &["w"], 2)];

fn random_tree(rng: &mut ChaCha8Rng, depth: u32) -> Expr {
    if depth == 0 || rng.random_bool(0.3) {
        return match rng.random_range(0..6) {
            0 | 1 => Expr::Literal(random_value(rng)),
            2 => Expr::Var(["p", "q", "unbound"].choose(rng).unwrap().to_string()),
            _ => {
                let (name, fields, _) = RELS.choose(rng).unwrap();
                let field = if rng.random_bool(0.15) { "T" } else { fields.choose(rng).unwrap() };
                Expr::field(name, field, -rng.random_range(0..4))
            }
        };
    }
    if rng.random_bool(0.15) {
        let op = if rng.random_bool(0.5) { UnaryOp::Neg } else { UnaryOp::Not };
        return Expr::unary(op, random_tree(rng, depth - 1));
    }
    let op = *BinaryOp::ALL.choose(rng).unwrap();
    Expr::binary(op, random_tree(rng, depth - 1), random_tree(rng, depth - 1))
}

fn random_world(rng: &mut ChaCha8Rng) -> (World, Store, Scope) {
    let decls: Vec<RelationDecl> = RELS
        .iter()
        .map(|(n, f, _)| RelationDecl {
            name: n.to_string(),
            fields: f.iter().map(|s| s.to_string()).collect(),
        })
        .collect();
    let mut store = Store::new(&decls, |n| RELS.iter().find(|r| r.0 == n).unwrap().2);
    let mut relations = HashMap::new();
    for (name, fields, window) in RELS {
        relations.insert(name, History { fields: fields.to_vec(), window, rows: Vec::new() });
    }
    let mut t = 0;
    for _ in 0..rng.random_range(0..10) {
        let (name, fields, _) = RELS.choose(rng).unwrap();
        t += rng.random_range(0..1000);
        let mut values: Vec<Value> = fields.iter().map(|_| random_value(rng)).collect();
        if rng.random_bool(0.5) {
            // keep most data numeric so arithmetic paths get exercised
            values.iter_mut().for_each(|v| *v = Value::Number(rng.random_range(-9..=9) as f64));
        }
        store.insert_next(name, values.clone(), t).unwrap();
        relations.get_mut(name).unwrap().rows.push((t, values));
    }
    let mut vars = HashMap::new();
    let mut scope = Scope::new();
    for name in ["p", "q"] {
        let v = random_value(rng);
        vars.insert(name.to_string(), v.clone());
        scope.bind(name, v);
    }
    (World { relations, vars }, store, scope)
}

#[test]
fn evaluator_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut cases = 0;
    let mut ok_values = 0;
    for tree_no in 0..500 {
        let depth = rng.random_range(1..6);
        let tree = random_tree(&mut rng, depth);
        for _ in 0..24 {
            let (world, store, scope) = random_world(&mut rng);
            let expected = reference(&tree, &world);
            let actual = eval(&tree, &store, &scope).map_err(|e| e.kind());
            let agree = match (&expected, &actual) {
                (Ok(Value::Number(a)), Ok(Value::Number(b))) => a.to_bits() == b.to_bits() || a == b,
                _ => expected == actual,
            };
            assert!(agree, "tree {tree_no}: {tree:?}\nexpected {expected:?}\nactual {actual:?}");
            cases += 1;
            ok_values += expected.is_ok() as usize;
        }
    }
    assert!(cases >= 10_000);
    // make sure the comparison is not dominated by errors
    assert!(ok_values * 5 > cases, "{ok_values} of {cases}");
}
