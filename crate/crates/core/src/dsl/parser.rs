//! Recursive descent parser producing a [`Program`].
//!
//! Newlines separate declarations and statements but are otherwise
//! insignificant, so a block's `{` may sit on the line after its header.

use super::ast::*;
use super::error::{ParseError, Pos};
use super::lexer::{tokenize, Keyword, Token, TokenKind};
use super::validate::{self, DeclSpans};
use crate::value::Value;

/// Parses and validates a whole program.
pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser::new(tokens);
    let mut spans = DeclSpans::default();
    let mut program = parser.program(&mut spans)?;
    validate::resolve_module_outputs(&mut program, Some(&spans))?;
    validate::validate_with_spans(&program, Some(&spans))?;
    Ok(program)
}

/// Parses a single expression. No name resolution is performed.
pub fn parse_expression(source: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser::new(tokens);
    let expr = parser.expr()?;
    parser.skip_newlines();
    if let Some(tok) = parser.tokens.get(parser.at) {
        return Err(ParseError::Syntax {
            pos: tok.pos,
            expected: vec!["end of expression".into()],
            found: tok.kind.to_string(),
        });
    }
    Ok(expr)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    eof: Pos,
}

impl Parser {
    fn new(tokens: Vec<Token>) -> Parser {
        let eof = tokens
            .last()
            .map(|t| Pos {
                line: t.pos.line,
                col: t.pos.col + 1,
            })
            .unwrap_or(Pos { line: 1, col: 1 });
        Parser { tokens, at: 0, eof }
    }

    fn skip_newlines(&mut self) {
        self.at = self.next_index();
    }

    /// Index of the next token that is not a newline.
    fn next_index(&self) -> usize {
        let mut i = self.at;
        while matches!(self.tokens.get(i), Some(t) if t.kind == TokenKind::Newline) {
            i += 1;
        }
        i
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.next_index())
    }

    fn peek_kind(&self) -> Option<&TokenKind> {
        self.peek().map(|t| &t.kind)
    }

    fn peek_second(&self) -> Option<&TokenKind> {
        self.tokens[(self.next_index() + 1).min(self.tokens.len())..]
            .iter()
            .map(|t| &t.kind)
            .find(|k| **k != TokenKind::Newline)
    }

    fn pos(&self) -> Pos {
        self.peek().map(|t| t.pos).unwrap_or(self.eof)
    }

    fn advance(&mut self) {
        self.at = self.next_index() + 1;
    }

    fn error<T>(&self, expected: &[&str]) -> Result<T, ParseError> {
        let pos = self.pos();
        let found = self
            .peek()
            .map(|t| t.kind.to_string())
            .unwrap_or_else(|| "end of input".to_string());
        Err(ParseError::Syntax {
            pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found,
        })
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.peek_kind() == Some(kind) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        if self.eat(&kind) {
            Ok(())
        } else {
            self.error(&[&kind.to_string()])
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::Ident(s)) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }

    /// Module names may reuse statement keywords (`MAP MODULE CHECK : ...`).
    fn module_name(&mut self) -> Result<String, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::Ident(s)) => {
                let s = s.clone();
                self.advance();
                Ok(s)
            }
            Some(TokenKind::Keyword(k)) if !k.is_operator_or_literal() => {
                let s = k.as_str().to_string();
                self.advance();
                Ok(s)
            }
            _ => self.error(&["module name"]),
        }
    }

    fn ident_list(&mut self, allow_empty: bool) -> Result<Vec<String>, ParseError> {
        self.expect(TokenKind::LParen)?;
        let mut out = Vec::new();
        if allow_empty && self.eat(&TokenKind::RParen) {
            return Ok(out);
        }
        loop {
            out.push(self.ident()?);
            if self.eat(&TokenKind::RParen) {
                return Ok(out);
            }
            if !self.eat(&TokenKind::Comma) {
                return self.error(&["`,`", "`)`"]);
            }
        }
    }

    /// After an item: a newline, `;`, closing `}` or end of input.
    fn separator(&mut self) -> Result<(), ParseError> {
        match self.tokens.get(self.at).map(|t| &t.kind) {
            None | Some(TokenKind::Newline) => Ok(()),
            Some(TokenKind::Semi) => {
                self.advance();
                Ok(())
            }
            Some(TokenKind::RBrace) => Ok(()),
            Some(_) => self.error(&["end of line", "`;`"]),
        }
    }

    fn skip_separators(&mut self) {
        while matches!(
            self.tokens.get(self.at).map(|t| &t.kind),
            Some(TokenKind::Newline | TokenKind::Semi)
        ) {
            self.at += 1;
        }
    }

    fn program(&mut self, spans: &mut DeclSpans) -> Result<Program, ParseError> {
        let mut p = Program::default();
        loop {
            self.skip_separators();
            let Some(tok) = self.tokens.get(self.at).cloned() else {
                return Ok(p);
            };
            let pos = tok.pos;
            match tok.kind {
                TokenKind::Keyword(Keyword::Relation) => {
                    self.advance();
                    let name = self.ident()?;
                    let fields = self.ident_list(false)?;
                    p.relations.push(RelationDecl { name, fields });
                    spans.relations.push(pos);
                }
                TokenKind::Keyword(Keyword::Trigger) => {
                    self.advance();
                    self.expect(TokenKind::LParen)?;
                    let relation = self.ident()?;
                    self.expect(TokenKind::RParen)?;
                    let body = self.block()?;
                    p.triggers.push(TriggerDecl { relation, body });
                    spans.triggers.push(pos);
                }
                TokenKind::Keyword(Keyword::Endpoint) => {
                    self.advance();
                    let name = self.ident()?;
                    let params = self.ident_list(true)?;
                    let body = self.block()?;
                    p.endpoints.push(EndpointDecl { name, params, body });
                    spans.endpoints.push(pos);
                }
                TokenKind::Keyword(Keyword::Timer) => {
                    self.advance();
                    let name = self.ident()?;
                    self.expect(TokenKind::LParen)?;
                    let interval_ms = self.interval()?;
                    self.expect(TokenKind::RParen)?;
                    let body = self.block()?;
                    p.timers.push(TimerDecl {
                        name,
                        interval_ms,
                        body,
                    });
                    spans.timers.push(pos);
                }
                TokenKind::Keyword(Keyword::Rule) => {
                    self.advance();
                    let name = self.ident()?;
                    let condition = self.expr()?;
                    let body = self.block()?;
                    p.rules.push(RuleDecl {
                        name,
                        condition,
                        body,
                    });
                    spans.rules.push(pos);
                }
                TokenKind::Keyword(Keyword::Module) => {
                    self.advance();
                    let name = self.module_name()?;
                    let outputs = if self.peek_kind() == Some(&TokenKind::LParen) {
                        self.ident_list(true)?
                    } else {
                        Vec::new()
                    };
                    p.modules.push(ModuleDecl { name, outputs });
                    spans.modules.push(pos);
                }
                TokenKind::Keyword(Keyword::Map) => {
                    self.advance();
                    p.mappings.push(self.mapping()?);
                    spans.mappings.push(pos);
                }
                _ => {
                    p.top_level_statements.push(self.statement()?);
                    spans.statements.push(pos);
                }
            }
            self.separator()?;
        }
    }

    fn interval(&mut self) -> Result<u64, ParseError> {
        match self.peek_kind() {
            Some(TokenKind::Number(n)) if n.fract() == 0.0 && *n >= 0.0 && *n <= u64::MAX as f64 => {
                let n = *n as u64;
                self.advance();
                Ok(n)
            }
            _ => self.error(&["interval in milliseconds"]),
        }
    }

    fn mapping(&mut self) -> Result<MapDecl, ParseError> {
        let kind = match self.peek_kind() {
            Some(TokenKind::Keyword(Keyword::Relation)) => MapKind::Relation,
            Some(TokenKind::Keyword(Keyword::Module)) => MapKind::Module,
            _ => return self.error(&["RELATION", "MODULE"]),
        };
        self.advance();
        let name = match kind {
            MapKind::Relation => self.ident()?,
            MapKind::Module => self.module_name()?,
        };
        self.expect(TokenKind::Colon)?;
        let target = match self.peek_kind() {
            Some(TokenKind::Text(s) | TokenKind::RawTarget(s)) => s.clone(),
            _ => return self.error(&["mapping target"]),
        };
        self.advance();
        Ok(MapDecl { kind, name, target })
    }

    fn block(&mut self) -> Result<Block, ParseError> {
        self.expect(TokenKind::LBrace)?;
        let mut body = Vec::new();
        loop {
            self.skip_separators();
            match self.tokens.get(self.at).map(|t| &t.kind) {
                Some(TokenKind::RBrace) => {
                    self.advance();
                    return Ok(body);
                }
                None => return self.error(&["statement", "`}`"]),
                Some(_) => {
                    body.push(self.statement()?);
                    self.separator()?;
                }
            }
        }
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let kind = self.peek_kind().cloned();
        match kind {
            Some(TokenKind::Ident(relation)) => {
                self.advance();
                let args = self.args()?;
                Ok(Statement::Insert { relation, args })
            }
            Some(TokenKind::Keyword(
                k @ (Keyword::Start
                | Keyword::Stop
                | Keyword::Activate
                | Keyword::Deactivate
                | Keyword::Check),
            )) => {
                self.advance();
                self.expect(TokenKind::LParen)?;
                let name = self.ident()?;
                self.expect(TokenKind::RParen)?;
                Ok(match k {
                    Keyword::Start => Statement::StartTimer(name),
                    Keyword::Stop => Statement::StopTimer(name),
                    Keyword::Activate => Statement::Activate(name),
                    Keyword::Deactivate => Statement::Deactivate(name),
                    _ => Statement::Check(name),
                })
            }
            Some(TokenKind::Keyword(k @ (Keyword::Call | Keyword::Acall))) => {
                self.advance();
                let module = self.module_name()?;
                let args = self.args()?;
                Ok(if k == Keyword::Call {
                    Statement::CallModule { module, args }
                } else {
                    Statement::AcallModule { module, args }
                })
            }
            _ => self.error(&["declaration", "statement"]),
        }
    }

    fn args(&mut self) -> Result<Vec<Expr>, ParseError> {
        self.expect(TokenKind::LParen)?;
        let mut out = Vec::new();
        if self.eat(&TokenKind::RParen) {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat(&TokenKind::RParen) {
                return Ok(out);
            }
            if !self.eat(&TokenKind::Comma) {
                return self.error(&["`,`", "`)`"]);
            }
        }
    }

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_expr()?;
        while self.eat(&TokenKind::Keyword(Keyword::Or)) {
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinaryOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.not_expr()?;
        while self.eat(&TokenKind::Keyword(Keyword::And)) {
            let rhs = self.not_expr()?;
            lhs = Expr::binary(BinaryOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&TokenKind::Keyword(Keyword::Not)) {
            let inner = self.not_expr()?;
            return Ok(Expr::unary(UnaryOp::Not, inner));
        }
        self.comparison()
    }

    fn comparison_op(&mut self) -> Option<BinaryOp> {
        Some(match self.peek_kind()? {
            TokenKind::Lt => BinaryOp::Lt,
            TokenKind::Le => BinaryOp::Le,
            TokenKind::Gt => BinaryOp::Gt,
            TokenKind::Ge => BinaryOp::Ge,
            TokenKind::EqEq => BinaryOp::Eq,
            TokenKind::Ne => BinaryOp::Ne,
            _ => return None,
        })
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.additive()?;
        let Some(op) = self.comparison_op() else {
            return Ok(lhs);
        };
        self.advance();
        let rhs = self.additive()?;
        if self.comparison_op().is_some() {
            return self.error(&["AND", "OR", "end of comparison (comparisons do not chain)"]);
        }
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn additive(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Plus) => BinaryOp::Add,
                Some(TokenKind::Minus) => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek_kind() {
                Some(TokenKind::Star) => BinaryOp::Mul,
                Some(TokenKind::Slash) => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        // `-8` right after an identifier lexes as minus + 8; in operand
        // position it is still the literal
        let at = self.next_index();
        if let (Some(minus), Some(num)) = (self.tokens.get(at), self.tokens.get(at + 1)) {
            if let (TokenKind::Minus, TokenKind::Number(n)) = (&minus.kind, &num.kind) {
                if *n >= 0.0 && num.pos.line == minus.pos.line && num.pos.col == minus.pos.col + 1 {
                    let n = -*n;
                    self.advance();
                    self.advance();
                    return Ok(Expr::Literal(Value::Number(n)));
                }
            }
        }
        if self.eat(&TokenKind::Minus) {
            let inner = self.unary()?;
            return Ok(Expr::unary(UnaryOp::Neg, inner));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let Some(kind) = self.peek_kind().cloned() else {
            return self.error(&["expression"]);
        };
        match kind {
            TokenKind::Number(n) => {
                self.advance();
                Ok(Expr::Literal(Value::Number(n)))
            }
            TokenKind::Text(s) => {
                self.advance();
                Ok(Expr::Literal(Value::Text(s)))
            }
            TokenKind::Keyword(Keyword::True) => {
                self.advance();
                Ok(Expr::Literal(Value::Bool(true)))
            }
            TokenKind::Keyword(Keyword::False) => {
                self.advance();
                Ok(Expr::Literal(Value::Bool(false)))
            }
            TokenKind::Keyword(Keyword::Null) => {
                self.advance();
                Ok(Expr::Literal(Value::Null))
            }
            TokenKind::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                self.advance();
                if !self.eat(&TokenKind::Dot) {
                    return Ok(Expr::Var(name));
                }
                let field = self.ident()?;
                let offset = self.offset()?;
                Ok(Expr::Field {
                    relation: name,
                    field,
                    offset,
                })
            }
            TokenKind::Keyword(k)
                if !k.is_operator_or_literal() && self.peek_second() == Some(&TokenKind::Dot) =>
            {
                self.advance();
                self.expect(TokenKind::Dot)?;
                let output = self.ident()?;
                Ok(Expr::ModuleOutput {
                    module: k.as_str().to_string(),
                    output,
                })
            }
            _ => self.error(&["expression"]),
        }
    }

    fn offset(&mut self) -> Result<i64, ParseError> {
        if !self.eat(&TokenKind::LBracket) {
            return Ok(0);
        }
        let k = match self.peek_kind() {
            Some(TokenKind::Number(n)) if n.fract() == 0.0 && *n <= -1.0 && *n >= i64::MIN as f64 => {
                *n as i64
            }
            _ => return self.error(&["negative history offset such as `-1`"]),
        };
        self.advance();
        self.expect(TokenKind::RBracket)?;
        Ok(k)
    }
}
