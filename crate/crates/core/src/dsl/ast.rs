//! Syntax tree for LogicIoT programs.
//!
//! Nodes carry no source positions, so two programs compare equal exactly
//! when they are structurally identical. Positions of declarations are kept
//! on the side by the parser for diagnostics.

use crate::value::Value;

/// Name of the automatic timestamp field present on every relation.
pub const TIMESTAMP_FIELD: &str = "T";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub relations: Vec<RelationDecl>,
    pub triggers: Vec<TriggerDecl>,
    pub endpoints: Vec<EndpointDecl>,
    pub timers: Vec<TimerDecl>,
    pub rules: Vec<RuleDecl>,
    pub modules: Vec<ModuleDecl>,
    pub mappings: Vec<MapDecl>,
    pub top_level_statements: Vec<Statement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationDecl {
    pub name: String,
    pub fields: Vec<String>,
}

impl RelationDecl {
    pub fn field_index(&self, field: &str) -> Option<usize> {
        self.fields.iter().position(|f| f == field)
    }

    pub fn arity(&self) -> usize {
        self.fields.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriggerDecl {
    pub relation: String,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EndpointDecl {
    pub name: String,
    pub params: Vec<String>,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimerDecl {
    pub name: String,
    pub interval_ms: u64,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleDecl {
    pub name: String,
    pub condition: Expr,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleDecl {
    pub name: String,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MapKind {
    Relation,
    Module,
}

impl MapKind {
    pub fn keyword(self) -> &'static str {
        match self {
            MapKind::Relation => "RELATION",
            MapKind::Module => "MODULE",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapDecl {
    pub kind: MapKind,
    pub name: String,
    pub target: String,
}

pub type Block = Vec<Statement>;

#[derive(Debug, Clone, PartialEq)]
pub enum Statement {
    Insert { relation: String, args: Vec<Expr> },
    StartTimer(String),
    StopTimer(String),
    Activate(String),
    Deactivate(String),
    Check(String),
    CallModule { module: String, args: Vec<Expr> },
    AcallModule { module: String, args: Vec<Expr> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinaryOp {
    pub const ALL: [BinaryOp; 12] = [
        BinaryOp::Add,
        BinaryOp::Sub,
        BinaryOp::Mul,
        BinaryOp::Div,
        BinaryOp::Lt,
        BinaryOp::Le,
        BinaryOp::Gt,
        BinaryOp::Ge,
        BinaryOp::Eq,
        BinaryOp::Ne,
        BinaryOp::And,
        BinaryOp::Or,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => "+",
            BinaryOp::Sub => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::Lt => "<",
            BinaryOp::Le => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::Ge => ">=",
            BinaryOp::Eq => "==",
            BinaryOp::Ne => "!=",
            BinaryOp::And => "AND",
            BinaryOp::Or => "OR",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinaryOp::Or => 1,
            BinaryOp::And => 2,
            // NOT sits at 3
            BinaryOp::Lt
            | BinaryOp::Le
            | BinaryOp::Gt
            | BinaryOp::Ge
            | BinaryOp::Eq
            | BinaryOp::Ne => 4,
            BinaryOp::Add | BinaryOp::Sub => 5,
            BinaryOp::Mul | BinaryOp::Div => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        self.precedence() == 4
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Literal(Value),
    /// `R.F` (offset 0) or `R.F[-k]` (offset -k).
    Field {
        relation: String,
        field: String,
        offset: i64,
    },
    /// `M.out`, a module output bound by an earlier `CALL M (...)`.
    ModuleOutput { module: String, output: String },
    /// Bare identifier bound in the enclosing block scope.
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn field(relation: &str, field: &str, offset: i64) -> Expr {
        Expr::Field {
            relation: relation.to_string(),
            field: field.to_string(),
            offset,
        }
    }

    pub fn num(n: f64) -> Expr {
        Expr::Literal(Value::Number(n))
    }

    pub fn unary(op: UnaryOp, e: Expr) -> Expr {
        Expr::Unary(op, Box::new(e))
    }

    pub fn binary(op: BinaryOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Visits every node, parents before children, left to right.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Unary(_, e) => e.walk(f),
            Expr::Binary(_, l, r) => {
                l.walk(f);
                r.walk(f);
            }
            _ => {}
        }
    }
}

impl Statement {
    pub fn args(&self) -> &[Expr] {
        match self {
            Statement::Insert { args, .. }
            | Statement::CallModule { args, .. }
            | Statement::AcallModule { args, .. } => args,
            _ => &[],
        }
    }
}

impl Program {
    pub fn relation(&self, name: &str) -> Option<&RelationDecl> {
        self.relations.iter().find(|r| r.name == name)
    }

    pub fn module(&self, name: &str) -> Option<&ModuleDecl> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn endpoint(&self, name: &str) -> Option<&EndpointDecl> {
        self.endpoints.iter().find(|e| e.name == name)
    }
}
