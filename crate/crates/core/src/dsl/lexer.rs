//! Tokenizer for LogicIoT source text.

use std::fmt;

use super::error::{ParseError, Pos};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Relation,
    Trigger,
    Endpoint,
    Timer,
    Rule,
    Module,
    Map,
    Start,
    Stop,
    Activate,
    Deactivate,
    Check,
    Call,
    Acall,
    And,
    Or,
    Not,
    True,
    False,
    Null,
}

impl Keyword {
    pub const ALL: [Keyword; 20] = [
        Keyword::Relation,
        Keyword::Trigger,
        Keyword::Endpoint,
        Keyword::Timer,
        Keyword::Rule,
        Keyword::Module,
        Keyword::Map,
        Keyword::Start,
        Keyword::Stop,
        Keyword::Activate,
        Keyword::Deactivate,
        Keyword::Check,
        Keyword::Call,
        Keyword::Acall,
        Keyword::And,
        Keyword::Or,
        Keyword::Not,
        Keyword::True,
        Keyword::False,
        Keyword::Null,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Relation => "RELATION",
            Keyword::Trigger => "TRIGGER",
            Keyword::Endpoint => "ENDPOINT",
            Keyword::Timer => "TIMER",
            Keyword::Rule => "RULE",
            Keyword::Module => "MODULE",
            Keyword::Map => "MAP",
            Keyword::Start => "START",
            Keyword::Stop => "STOP",
            Keyword::Activate => "ACTIVATE",
            Keyword::Deactivate => "DEACTIVATE",
            Keyword::Check => "CHECK",
            Keyword::Call => "CALL",
            Keyword::Acall => "ACALL",
            Keyword::And => "AND",
            Keyword::Or => "OR",
            Keyword::Not => "NOT",
            Keyword::True => "TRUE",
            Keyword::False => "FALSE",
            Keyword::Null => "NULL",
        }
    }

    pub fn lookup(word: &str) -> Option<Keyword> {
        Keyword::ALL.into_iter().find(|k| k.as_str() == word)
    }

    /// Keywords that can never stand in for a module name.
    pub fn is_operator_or_literal(self) -> bool {
        matches!(
            self,
            Keyword::And | Keyword::Or | Keyword::Not | Keyword::True | Keyword::False | Keyword::Null
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Ident(String),
    Number(f64),
    Text(String),
    /// Unquoted `MAP ... :` target, taken verbatim up to whitespace or `;`.
    RawTarget(String),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Dot,
    Semi,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Newline,
}

impl TokenKind {
    /// Tokens after which a `-` is a binary operator rather than a sign.
    fn ends_operand(&self) -> bool {
        matches!(
            self,
            TokenKind::Ident(_)
                | TokenKind::Number(_)
                | TokenKind::Text(_)
                | TokenKind::RParen
                | TokenKind::RBracket
                | TokenKind::Keyword(Keyword::True | Keyword::False | Keyword::Null)
        )
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenKind::Keyword(k) => f.write_str(k.as_str()),
            TokenKind::Ident(s) => write!(f, "identifier `{s}`"),
            TokenKind::Number(n) => write!(f, "number {n}"),
            TokenKind::Text(s) => write!(f, "text {s:?}"),
            TokenKind::RawTarget(s) => write!(f, "target `{s}`"),
            TokenKind::LParen => f.write_str("`(`"),
            TokenKind::RParen => f.write_str("`)`"),
            TokenKind::LBrace => f.write_str("`{`"),
            TokenKind::RBrace => f.write_str("`}`"),
            TokenKind::LBracket => f.write_str("`[`"),
            TokenKind::RBracket => f.write_str("`]`"),
            TokenKind::Comma => f.write_str("`,`"),
            TokenKind::Colon => f.write_str("`:`"),
            TokenKind::Dot => f.write_str("`.`"),
            TokenKind::Semi => f.write_str("`;`"),
            TokenKind::Plus => f.write_str("`+`"),
            TokenKind::Minus => f.write_str("`-`"),
            TokenKind::Star => f.write_str("`*`"),
            TokenKind::Slash => f.write_str("`/`"),
            TokenKind::Lt => f.write_str("`<`"),
            TokenKind::Le => f.write_str("`<=`"),
            TokenKind::Gt => f.write_str("`>`"),
            TokenKind::Ge => f.write_str("`>=`"),
            TokenKind::EqEq => f.write_str("`==`"),
            TokenKind::Ne => f.write_str("`!=`"),
            TokenKind::Newline => f.write_str("end of line"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

struct Lexer<'a> {
    src: &'a str,
    at: usize,
    line: usize,
    col: usize,
    out: Vec<Token>,
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer {
        src: source,
        at: 0,
        line: 1,
        col: 1,
        out: Vec::new(),
    };
    lx.run()?;
    Ok(lx.out)
}

impl<'a> Lexer<'a> {
    fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            col: self.col,
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.at..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.at..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.at += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn push(&mut self, kind: TokenKind, pos: Pos) {
        self.out.push(Token { kind, pos });
    }

    fn last_significant(&self) -> Option<&TokenKind> {
        self.out
            .iter()
            .rev()
            .map(|t| &t.kind)
            .find(|k| **k != TokenKind::Newline)
    }

    /// True right after `MAP RELATION|MODULE <name> :`.
    fn at_map_target(&self) -> bool {
        let sig: Vec<&TokenKind> = self
            .out
            .iter()
            .rev()
            .map(|t| &t.kind)
            .filter(|k| **k != TokenKind::Newline)
            .take(4)
            .collect();
        matches!(
            sig.as_slice(),
            [
                TokenKind::Colon,
                TokenKind::Ident(_) | TokenKind::Keyword(_),
                TokenKind::Keyword(Keyword::Relation | Keyword::Module),
                TokenKind::Keyword(Keyword::Map),
            ]
        )
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while let Some(c) = self.peek() {
            let pos = self.pos();
            match c {
                '\n' => {
                    self.bump();
                    self.push(TokenKind::Newline, pos);
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '#' => {
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                '"' => {
                    let s = self.text_literal()?;
                    self.push(TokenKind::Text(s), pos);
                }
                c if c.is_ascii_digit() => {
                    let n = self.number(false);
                    self.push(TokenKind::Number(n), pos);
                }
                '-' if self.peek2().is_some_and(|d| d.is_ascii_digit())
                    && !self.last_significant().is_some_and(TokenKind::ends_operand) =>
                {
                    self.bump();
                    let n = self.number(true);
                    self.push(TokenKind::Number(n), pos);
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = self.at;
                    while self
                        .peek()
                        .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
                    {
                        self.bump();
                    }
                    let word = &self.src[start..self.at];
                    let kind = match Keyword::lookup(word) {
                        Some(k) => TokenKind::Keyword(k),
                        None => TokenKind::Ident(word.to_string()),
                    };
                    self.push(kind, pos);
                }
                _ => self.punct(c, pos)?,
            }
        }
        Ok(())
    }

    fn punct(&mut self, c: char, pos: Pos) -> Result<(), ParseError> {
        self.bump();
        let two = |lx: &mut Self, next: char, yes: TokenKind, no: TokenKind| {
            if lx.peek() == Some(next) {
                lx.bump();
                yes
            } else {
                no
            }
        };
        let kind = match c {
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            '{' => TokenKind::LBrace,
            '}' => TokenKind::RBrace,
            '[' => TokenKind::LBracket,
            ']' => TokenKind::RBracket,
            ',' => TokenKind::Comma,
            '.' => TokenKind::Dot,
            ';' => TokenKind::Semi,
            '+' => TokenKind::Plus,
            '-' => TokenKind::Minus,
            '*' => TokenKind::Star,
            '/' => TokenKind::Slash,
            '<' => two(self, '=', TokenKind::Le, TokenKind::Lt),
            '>' => two(self, '=', TokenKind::Ge, TokenKind::Gt),
            '=' if self.peek() == Some('=') => {
                self.bump();
                TokenKind::EqEq
            }
            '!' if self.peek() == Some('=') => {
                self.bump();
                TokenKind::Ne
            }
            ':' => {
                self.push(TokenKind::Colon, pos);
                if self.at_map_target() {
                    self.raw_target();
                }
                return Ok(());
            }
            other => {
                return Err(ParseError::lex(pos, format!("illegal character {other:?}")));
            }
        };
        self.push(kind, pos);
        Ok(())
    }

    fn raw_target(&mut self) {
        while self.peek().is_some_and(|c| c == ' ' || c == '\t' || c == '\r') {
            self.bump();
        }
        if matches!(self.peek(), None | Some('"') | Some('\n') | Some(';')) {
            return;
        }
        let pos = self.pos();
        let start = self.at;
        while self.peek().is_some_and(|c| !c.is_whitespace() && c != ';') {
            self.bump();
        }
        let raw = self.src[start..self.at].to_string();
        self.push(TokenKind::RawTarget(raw), pos);
    }

    fn number(&mut self, negative: bool) -> f64 {
        let start = self.at;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
        }
        if self.peek() == Some('.') && self.peek2().is_some_and(|c| c.is_ascii_digit()) {
            self.bump();
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.bump();
            }
        }
        // digits only, so the parse cannot fail; overlong literals round
        let n: f64 = self.src[start..self.at].parse().unwrap_or(f64::MAX);
        if negative {
            -n
        } else {
            n
        }
    }

    fn text_literal(&mut self) -> Result<String, ParseError> {
        let open = self.pos();
        self.bump();
        let mut s = String::new();
        loop {
            let pos = self.pos();
            match self.bump() {
                None | Some('\n') => {
                    return Err(ParseError::lex(open, "unterminated text literal"));
                }
                Some('"') => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some('n') => s.push('\n'),
                    Some('t') => s.push('\t'),
                    Some('r') => s.push('\r'),
                    None | Some('\n') => {
                        return Err(ParseError::lex(open, "unterminated text literal"));
                    }
                    Some(other) => {
                        return Err(ParseError::lex(pos, format!("unknown escape `\\{other}`")));
                    }
                },
                Some(c) => s.push(c),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    fn ident(s: &str) -> TokenKind {
        TokenKind::Ident(s.to_string())
    }

    #[test]
    fn relation_declaration() {
        assert_eq!(
            kinds("RELATION R (MAC, RSSI)"),
            vec![
                TokenKind::Keyword(Keyword::Relation),
                ident("R"),
                TokenKind::LParen,
                ident("MAC"),
                TokenKind::Comma,
                ident("RSSI"),
                TokenKind::RParen,
            ]
        );
    }

    #[test]
    fn empty_input() {
        assert!(kinds("").is_empty());
        assert!(kinds("   # only a comment").is_empty());
    }

    #[test]
    fn history_offset_and_negative_literal() {
        assert_eq!(
            kinds("R.RSSI[-1] < -60"),
            vec![
                ident("R"),
                TokenKind::Dot,
                ident("RSSI"),
                TokenKind::LBracket,
                TokenKind::Number(-1.0),
                TokenKind::RBracket,
                TokenKind::Lt,
                TokenKind::Number(-60.0),
            ]
        );
    }

    #[test]
    fn minus_after_operand_is_an_operator() {
        assert_eq!(
            kinds("a -1"),
            vec![ident("a"), TokenKind::Minus, TokenKind::Number(1.0)]
        );
        assert_eq!(
            kinds("a - -1.5"),
            vec![ident("a"), TokenKind::Minus, TokenKind::Number(-1.5)]
        );
        assert_eq!(
            kinds("-(x)"),
            vec![TokenKind::Minus, TokenKind::LParen, ident("x"), TokenKind::RParen]
        );
    }

    #[test]
    fn keywords_are_case_sensitive() {
        assert_eq!(kinds("rule"), vec![ident("rule")]);
        assert_eq!(kinds("RULE"), vec![TokenKind::Keyword(Keyword::Rule)]);
    }

    #[test]
    fn text_escapes() {
        assert_eq!(
            kinds(r#""a\"b\\c\n""#),
            vec![TokenKind::Text("a\"b\\c\n".to_string())]
        );
    }

    #[test]
    fn unterminated_text_reports_position() {
        let err = tokenize("R (1)\n  R (\"abc").unwrap_err();
        assert_eq!(err.pos(), Some(Pos { line: 2, col: 6 }));
        assert!(err.to_string().contains("unterminated"));
    }

    #[test]
    fn illegal_character_reports_position() {
        let err = tokenize("RULE X R.A @ 1 {}").unwrap_err();
        assert_eq!(err.pos(), Some(Pos { line: 1, col: 12 }));
        assert!(tokenize("a = b").is_err());
        assert!(tokenize("a ! b").is_err());
    }

    #[test]
    fn unquoted_map_target() {
        assert_eq!(
            kinds("MAP RELATION R : module1.jsp"),
            vec![
                TokenKind::Keyword(Keyword::Map),
                TokenKind::Keyword(Keyword::Relation),
                ident("R"),
                TokenKind::Colon,
                TokenKind::RawTarget("module1.jsp".to_string()),
            ]
        );
        let k = kinds("MAP MODULE CHECK : http://h:8080/a?b=c&d=1; RELATION Q (X)");
        assert_eq!(k[3], TokenKind::Colon);
        assert_eq!(k[4], TokenKind::RawTarget("http://h:8080/a?b=c&d=1".to_string()));
        assert_eq!(k[5], TokenKind::Semi);
    }

    #[test]
    fn quoted_map_target_stays_text() {
        let k = kinds("MAP MODULE COUNTER : \"module2.jsp\"");
        assert_eq!(k[4], TokenKind::Text("module2.jsp".to_string()));
    }

    #[test]
    fn newlines_are_tokens() {
        assert_eq!(
            kinds("A\n\nB"),
            vec![ident("A"), TokenKind::Newline, TokenKind::Newline, ident("B")]
        );
    }
}
