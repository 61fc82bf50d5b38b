//! Reference propagation used to check the dependency index.
//!
//! The naive strategy evaluates every active rule after every insert and
//! keeps a result only when the rule's condition mentions the inserted
//! relation, found by walking the AST on the spot instead of consulting
//! the precomputed index.

use crate::dsl::{Expr, Program};

use super::{run_steps, EngineConfig, LoadError, Propagation, Step, Transcript};

/// Whether `relation` appears in a field reference anywhere in `expr`.
pub fn mentions_relation(expr: &Expr, relation: &str) -> bool {
    match expr {
        Expr::Field { relation: r, .. } => r == relation,
        Expr::Unary(_, e) => mentions_relation(e, relation),
        Expr::Binary(_, l, r) => mentions_relation(l, relation) || mentions_relation(r, relation),
        Expr::Literal(_) | Expr::ModuleOutput { .. } | Expr::Var(_) => false,
    }
}

/// [`run_steps`] with naive propagation.
pub fn naive_oracle(
    program: &Program,
    mut config: EngineConfig,
    steps: &[Step],
) -> Result<Transcript, LoadError> {
    config.propagation = Propagation::Naive;
    run_steps(program, config, steps)
}
