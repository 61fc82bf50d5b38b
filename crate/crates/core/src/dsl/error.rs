use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// What went wrong semantically; the offending declaration is named in
/// [`ParseError::Semantic`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SemanticError {
    DuplicateName { kind: &'static str, name: String },
    DuplicateField { name: String },
    ReservedField,
    EmptyFieldList,
    UnknownRelation(String),
    UnknownField { relation: String, field: String },
    UnknownModule(String),
    UnknownOutput { module: String, output: String },
    UnknownTimer(String),
    UnknownRule(String),
    UnknownName(String),
    DuplicateTrigger(String),
    ArityMismatch { relation: String, expected: usize, found: usize },
    ZeroInterval,
    InvalidTarget(String),
    ShadowsRelation(String),
    NameCollision(String),
    NotAllowedInCondition(String),
    OffsetOnModuleOutput(String),
    NonBooleanCondition,
    NonFiniteLiteral,
}

impl fmt::Display for SemanticError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemanticError::DuplicateName { kind, name } => {
                write!(f, "duplicate {kind} `{name}`")
            }
            SemanticError::DuplicateField { name } => write!(f, "duplicate name `{name}`"),
            SemanticError::ReservedField => {
                write!(f, "field name `T` is reserved for the timestamp")
            }
            SemanticError::EmptyFieldList => f.write_str("a relation needs at least one field"),
            SemanticError::UnknownRelation(r) => write!(f, "unknown relation `{r}`"),
            SemanticError::UnknownField { relation, field } => {
                write!(f, "relation `{relation}` has no field `{field}`")
            }
            SemanticError::UnknownModule(m) => write!(f, "unknown module `{m}`"),
            SemanticError::UnknownOutput { module, output } => {
                write!(f, "module `{module}` has no output `{output}`")
            }
            SemanticError::UnknownTimer(t) => write!(f, "unknown timer `{t}`"),
            SemanticError::UnknownRule(r) => write!(f, "unknown rule `{r}`"),
            SemanticError::UnknownName(n) => write!(f, "unknown name `{n}`"),
            SemanticError::DuplicateTrigger(r) => {
                write!(f, "relation `{r}` already has a trigger")
            }
            SemanticError::ArityMismatch {
                relation,
                expected,
                found,
            } => write!(
                f,
                "relation `{relation}` takes {expected} value(s), {found} given"
            ),
            SemanticError::ZeroInterval => f.write_str("timer interval must be at least 1 ms"),
            SemanticError::InvalidTarget(t) => write!(f, "invalid mapping target `{t}`"),
            SemanticError::ShadowsRelation(n) => {
                write!(f, "parameter `{n}` shadows a relation")
            }
            SemanticError::NameCollision(n) => {
                write!(f, "`{n}` is declared both as a relation and a module")
            }
            SemanticError::NotAllowedInCondition(n) => {
                write!(f, "`{n}` cannot be used in a rule condition")
            }
            SemanticError::OffsetOnModuleOutput(n) => {
                write!(f, "module output `{n}` has no history")
            }
            SemanticError::NonBooleanCondition => f.write_str("rule condition is not boolean"),
            SemanticError::NonFiniteLiteral => f.write_str("number literal is not finite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("{pos}: {message}")]
    Lex { pos: Pos, message: String },
    #[error("{pos}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        pos: Pos,
        expected: Vec<String>,
        found: String,
    },
    #[error("{}{decl}: {error}", pos.map(|p| format!("{p}: ")).unwrap_or_default())]
    Semantic {
        pos: Option<Pos>,
        /// The offending declaration, e.g. `RELATION R`.
        decl: String,
        error: SemanticError,
    },
}

impl ParseError {
    pub(crate) fn lex(pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError::Lex {
            pos,
            message: message.into(),
        }
    }

    pub fn pos(&self) -> Option<Pos> {
        match self {
            ParseError::Lex { pos, .. } | ParseError::Syntax { pos, .. } => Some(*pos),
            ParseError::Semantic { pos, .. } => *pos,
        }
    }

    pub fn semantic(&self) -> Option<&SemanticError> {
        match self {
            ParseError::Semantic { error, .. } => Some(error),
            _ => None,
        }
    }

    /// `file:line:col: message`, the shape diagnostics take on stderr.
    pub fn render(&self, file: &str) -> String {
        match self {
            ParseError::Lex { message, .. } => format!("{file}:{}: {message}", self.pos_or_zero()),
            ParseError::Syntax {
                expected, found, ..
            } => format!(
                "{file}:{}: expected {}, found {found}",
                self.pos_or_zero(),
                expected.join(" or ")
            ),
            ParseError::Semantic { decl, error, .. } => {
                format!("{file}:{}: {decl}: {error}", self.pos_or_zero())
            }
        }
    }

    fn pos_or_zero(&self) -> Pos {
        self.pos().unwrap_or(Pos { line: 0, col: 0 })
    }
}
