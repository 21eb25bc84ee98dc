//! Parser for the Turtle-star subset used by the dataset files.
//!
//! Supported: `@prefix` / `PREFIX`, IRI references, prefixed names, `a`,
//! the `;` `,` `.` punctuation, plain / typed / language-tagged strings
//! (short and long quoting), integer, decimal, double and boolean literals,
//! and quoted triples `<< s p o >>` in subject or object position, nested
//! to any depth. Blank nodes, collections, `@base` and the `{| |}`
//! annotation syntax are rejected.

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::term::{vocab, Iri, Literal, Term, Triple};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiagnosticKind {
    Syntax,
    UndefinedPrefix,
    UnbalancedQuote,
    BadLiteral,
}

/// A positioned parse error. Lines and columns are 1-based; columns count
/// Unicode scalar values.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{column}: {kind:?}: {message}")]
pub struct ParseDiagnostics {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub kind: DiagnosticKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    IriRef(String),
    PName { prefix: String, local: String },
    Str(String),
    AtWord(String),
    DoubleCaret,
    Number { lexical: String, datatype: &'static str },
    Bool(bool),
    A,
    SparqlPrefix,
    SparqlBase,
    QtOpen,
    QtClose,
    Dot,
    Semicolon,
    Comma,
    Unsupported(&'static str),
    Eof,
}

struct Lexer<'a> {
    src: &'a str,
    offset: usize,
    pos: Pos,
    /// Position of the last non-whitespace character consumed; end-of-input
    /// errors are reported here so they always point inside the document.
    last: Pos,
}

fn err(pos: Pos, kind: DiagnosticKind, message: impl Into<String>) -> ParseDiagnostics {
    ParseDiagnostics { line: pos.line, column: pos.column, message: message.into(), kind }
}

fn is_pn_chars_base(c: char) -> bool {
    c.is_ascii_alphabetic()
        || matches!(c,
            '\u{C0}'..='\u{D6}' | '\u{D8}'..='\u{F6}' | '\u{F8}'..='\u{2FF}'
            | '\u{370}'..='\u{37D}' | '\u{37F}'..='\u{1FFF}' | '\u{200C}'..='\u{200D}'
            | '\u{2070}'..='\u{218F}' | '\u{2C00}'..='\u{2FEF}' | '\u{3001}'..='\u{D7FF}'
            | '\u{F900}'..='\u{FDCF}' | '\u{FDF0}'..='\u{FFFD}' | '\u{10000}'..='\u{EFFFF}')
}

fn is_pn_chars_u(c: char) -> bool {
    is_pn_chars_base(c) || c == '_'
}

fn is_pn_chars(c: char) -> bool {
    is_pn_chars_u(c)
        || c == '-'
        || c.is_ascii_digit()
        || matches!(c, '\u{B7}' | '\u{300}'..='\u{36F}' | '\u{203F}'..='\u{2040}')
}

fn is_iri_forbidden(c: char) -> bool {
    matches!(c, '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\') || c <= ' '
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        let start = Pos { line: 1, column: 1 };
        Lexer { src, offset: 0, pos: start, last: start }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.offset..].chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.src[self.offset..].chars().nth(n)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek_char()?;
        self.offset += c.len_utf8();
        if !c.is_whitespace() {
            self.last = self.pos;
        }
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn skip_ws_and_comments(&mut self) {
        while let Some(c) = self.peek_char() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '#' {
                while let Some(c) = self.peek_char() {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    /// Returns the next token and the position of its first character.
    fn next_token(&mut self) -> Result<(Tok, Pos), ParseDiagnostics> {
        self.skip_ws_and_comments();
        let start = self.pos;
        let Some(c) = self.peek_char() else {
            return Ok((Tok::Eof, self.last));
        };
        let tok = match c {
            '<' if self.peek_nth(1) == Some('<') => {
                self.bump();
                self.bump();
                Tok::QtOpen
            }
            '<' => Tok::IriRef(self.lex_iri()?),
            '>' if self.peek_nth(1) == Some('>') => {
                self.bump();
                self.bump();
                Tok::QtClose
            }
            '"' | '\'' => Tok::Str(self.lex_string(start)?),
            '^' if self.peek_nth(1) == Some('^') => {
                self.bump();
                self.bump();
                Tok::DoubleCaret
            }
            '@' => {
                self.bump();
                let mut word = String::new();
                while let Some(c) = self.peek_char() {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        word.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if word.is_empty() || !word.starts_with(|c: char| c.is_ascii_alphabetic()) {
                    return Err(err(start, DiagnosticKind::Syntax, "expected a directive or language tag after '@'"));
                }
                Tok::AtWord(word)
            }
            '.' if self.peek_nth(1).is_some_and(|d| d.is_ascii_digit()) => self.lex_number(start)?,
            '.' => {
                self.bump();
                Tok::Dot
            }
            ';' => {
                self.bump();
                Tok::Semicolon
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '+' | '-' | '0'..='9' => self.lex_number(start)?,
            '[' | ']' => {
                self.bump();
                Tok::Unsupported("blank node property lists are not supported")
            }
            '(' | ')' => {
                self.bump();
                Tok::Unsupported("collections are not supported")
            }
            '{' | '|' if matches!((c, self.peek_nth(1)), ('{', Some('|')) | ('|', Some('}'))) => {
                self.bump();
                self.bump();
                Tok::Unsupported("annotation syntax is not supported")
            }
            '_' if self.peek_nth(1) == Some(':') => {
                self.bump();
                self.bump();
                Tok::Unsupported("blank nodes are not supported")
            }
            c if is_pn_chars_base(c) || c == ':' || c == '_' => self.lex_name(start)?,
            c => {
                return Err(err(start, DiagnosticKind::Syntax, format!("unexpected character {c:?}")));
            }
        };
        Ok((tok, start))
    }

    fn lex_hex(&mut self, digits: usize, start: Pos) -> Result<char, ParseDiagnostics> {
        let mut v: u32 = 0;
        for _ in 0..digits {
            let d = self
                .bump()
                .and_then(|c| c.to_digit(16))
                .ok_or_else(|| err(start, DiagnosticKind::BadLiteral, "malformed unicode escape"))?;
            v = v * 16 + d;
        }
        char::from_u32(v).ok_or_else(|| err(start, DiagnosticKind::BadLiteral, "escape is not a valid code point"))
    }

    fn lex_iri(&mut self) -> Result<String, ParseDiagnostics> {
        self.bump();
        let mut out = String::new();
        loop {
            let here = self.pos;
            match self.bump() {
                None => return Err(err(self.last, DiagnosticKind::Syntax, "unterminated IRI")),
                Some('>') => return Ok(out),
                Some('\\') => {
                    let c = match self.bump() {
                        Some('u') => self.lex_hex(4, here)?,
                        Some('U') => self.lex_hex(8, here)?,
                        _ => return Err(err(here, DiagnosticKind::Syntax, "invalid escape in IRI")),
                    };
                    if is_iri_forbidden(c) {
                        return Err(err(here, DiagnosticKind::Syntax, "escaped character not allowed in IRI"));
                    }
                    out.push(c);
                }
                Some(c) if is_iri_forbidden(c) => {
                    return Err(err(here, DiagnosticKind::Syntax, format!("character {c:?} not allowed in IRI")));
                }
                Some(c) => out.push(c),
            }
        }
    }

    fn lex_string(&mut self, start: Pos) -> Result<String, ParseDiagnostics> {
        let quote = self.bump().expect("caller saw a quote");
        let long = self.peek_char() == Some(quote) && self.peek_nth(1) == Some(quote);
        if long {
            self.bump();
            self.bump();
        }
        let mut out = String::new();
        loop {
            let here = self.pos;
            let Some(c) = self.bump() else {
                return Err(err(start, DiagnosticKind::BadLiteral, "unterminated string literal"));
            };
            match c {
                c if c == quote && !long => return Ok(out),
                c if c == quote && self.peek_char() == Some(quote) && self.peek_nth(1) == Some(quote) => {
                    // a run of more than three quotes closes on the last three
                    if self.peek_nth(2) == Some(quote) {
                        out.push(c);
                        continue;
                    }
                    self.bump();
                    self.bump();
                    return Ok(out);
                }
                '\n' | '\r' if !long => {
                    return Err(err(start, DiagnosticKind::BadLiteral, "unterminated string literal"));
                }
                '\\' => {
                    let esc = match self.bump() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u') => self.lex_hex(4, here)?,
                        Some('U') => self.lex_hex(8, here)?,
                        _ => return Err(err(here, DiagnosticKind::BadLiteral, "invalid escape sequence")),
                    };
                    out.push(esc);
                }
                c => out.push(c),
            }
        }
    }

    fn lex_number(&mut self, start: Pos) -> Result<Tok, ParseDiagnostics> {
        let mut lexical = String::new();
        if let Some(c @ ('+' | '-')) = self.peek_char() {
            lexical.push(c);
            self.bump();
        }
        let mut int_digits = 0;
        while let Some(c) = self.peek_char().filter(char::is_ascii_digit) {
            lexical.push(c);
            self.bump();
            int_digits += 1;
        }
        let mut frac_digits = 0;
        if self.peek_char() == Some('.') && self.peek_nth(1).is_some_and(|c| c.is_ascii_digit()) {
            lexical.push('.');
            self.bump();
            while let Some(c) = self.peek_char().filter(char::is_ascii_digit) {
                lexical.push(c);
                self.bump();
                frac_digits += 1;
            }
        }
        if int_digits + frac_digits == 0 {
            return Err(err(start, DiagnosticKind::BadLiteral, "malformed numeric literal"));
        }
        let mut datatype = if frac_digits > 0 { vocab::XSD_DECIMAL } else { vocab::XSD_INTEGER };
        if let Some(e @ ('e' | 'E')) = self.peek_char() {
            lexical.push(e);
            self.bump();
            if let Some(c @ ('+' | '-')) = self.peek_char() {
                lexical.push(c);
                self.bump();
            }
            let mut exp_digits = 0;
            while let Some(c) = self.peek_char().filter(char::is_ascii_digit) {
                lexical.push(c);
                self.bump();
                exp_digits += 1;
            }
            if exp_digits == 0 {
                return Err(err(start, DiagnosticKind::BadLiteral, "malformed exponent"));
            }
            datatype = vocab::XSD_DOUBLE;
        }
        if self.peek_char().is_some_and(|c| is_pn_chars_u(c) && c != 'e' && c != 'E') {
            return Err(err(start, DiagnosticKind::BadLiteral, "malformed numeric literal"));
        }
        Ok(Tok::Number { lexical, datatype })
    }

    fn lex_name(&mut self, start: Pos) -> Result<Tok, ParseDiagnostics> {
        let mut prefix = String::new();
        while let Some(c) = self.peek_char() {
            if is_pn_chars(c) || (c == '.' && self.peek_nth(1).is_some_and(|n| is_pn_chars(n) || n == '.')) {
                prefix.push(c);
                self.bump();
            } else {
                break;
            }
        }
        if self.peek_char() != Some(':') {
            return match prefix.as_str() {
                "a" => Ok(Tok::A),
                "true" => Ok(Tok::Bool(true)),
                "false" => Ok(Tok::Bool(false)),
                p if p.eq_ignore_ascii_case("prefix") => Ok(Tok::SparqlPrefix),
                p if p.eq_ignore_ascii_case("base") => Ok(Tok::SparqlBase),
                p => Err(err(start, DiagnosticKind::Syntax, format!("unexpected bare word '{p}'"))),
            };
        }
        if prefix.starts_with(|c: char| !is_pn_chars_base(c)) || prefix.ends_with('.') {
            return Err(err(start, DiagnosticKind::Syntax, format!("invalid prefix name '{prefix}'")));
        }
        self.bump();
        let local = self.lex_local()?;
        Ok(Tok::PName { prefix, local })
    }

    fn lex_local(&mut self) -> Result<String, ParseDiagnostics> {
        let mut local = String::new();
        let mut first = true;
        while let Some(c) = self.peek_char() {
            let accept = if first {
                is_pn_chars_u(c) || c == ':' || c.is_ascii_digit()
            } else {
                is_pn_chars(c) || c == ':'
            };
            if accept {
                local.push(c);
                self.bump();
            } else if c == '.' && !first {
                // a trailing dot terminates the statement
                let mut n = 1;
                while self.peek_nth(n) == Some('.') {
                    n += 1;
                }
                let next = self.peek_nth(n);
                if next.is_some_and(|n| is_pn_chars(n) || n == ':' || n == '%' || n == '\\') {
                    for _ in 0..n {
                        local.push('.');
                        self.bump();
                    }
                } else {
                    break;
                }
            } else if c == '%' {
                let h1 = self.peek_nth(1).filter(char::is_ascii_hexdigit);
                let h2 = self.peek_nth(2).filter(char::is_ascii_hexdigit);
                match (h1, h2) {
                    (Some(a), Some(b)) => {
                        local.push('%');
                        local.push(a);
                        local.push(b);
                        self.bump();
                        self.bump();
                        self.bump();
                    }
                    _ => return Err(err(self.pos, DiagnosticKind::Syntax, "malformed percent escape in local name")),
                }
            } else if c == '\\' {
                let esc = self.peek_nth(1);
                match esc {
                    Some(e) if "_~.-!$&'()*+,;=/?#@%".contains(e) => {
                        local.push(e);
                        self.bump();
                        self.bump();
                    }
                    _ => return Err(err(self.pos, DiagnosticKind::Syntax, "invalid escape in local name")),
                }
            } else {
                break;
            }
            first = false;
        }
        Ok(local)
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<(Tok, Pos)>,
    prefixes: HashMap<String, String>,
    out: Vec<Triple>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<&(Tok, Pos), ParseDiagnostics> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next_token()?);
        }
        Ok(self.peeked.as_ref().expect("just filled"))
    }

    fn next(&mut self) -> Result<(Tok, Pos), ParseDiagnostics> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next_token(),
        }
    }

    fn expect_dot(&mut self) -> Result<(), ParseDiagnostics> {
        match self.next()? {
            (Tok::Dot, _) => Ok(()),
            (tok, pos) => Err(self.unexpected(tok, pos, "'.'")),
        }
    }

    fn unexpected(&self, tok: Tok, pos: Pos, wanted: &str) -> ParseDiagnostics {
        match tok {
            Tok::Unsupported(msg) => err(pos, DiagnosticKind::Syntax, msg),
            Tok::QtClose => err(pos, DiagnosticKind::UnbalancedQuote, "'>>' without matching '<<'"),
            Tok::Eof => err(pos, DiagnosticKind::Syntax, format!("unexpected end of input, expected {wanted}")),
            tok => err(pos, DiagnosticKind::Syntax, format!("unexpected {}, expected {wanted}", describe(&tok))),
        }
    }

    fn document(&mut self) -> Result<(), ParseDiagnostics> {
        loop {
            let (tok, pos) = self.peek()?.clone();
            match tok {
                Tok::Eof => return Ok(()),
                Tok::AtWord(w) if w == "prefix" => {
                    self.next()?;
                    self.prefix_decl(true)?;
                }
                Tok::SparqlPrefix => {
                    self.next()?;
                    self.prefix_decl(false)?;
                }
                Tok::AtWord(w) if w == "base" => {
                    return Err(err(pos, DiagnosticKind::Syntax, "base declarations are not supported"));
                }
                Tok::SparqlBase => {
                    return Err(err(pos, DiagnosticKind::Syntax, "base declarations are not supported"));
                }
                Tok::AtWord(w) => {
                    return Err(err(pos, DiagnosticKind::Syntax, format!("unknown directive '@{w}'")));
                }
                _ => self.statement()?,
            }
        }
    }

    fn prefix_decl(&mut self, turtle_style: bool) -> Result<(), ParseDiagnostics> {
        let name = match self.next()? {
            (Tok::PName { prefix, local }, _) if local.is_empty() => prefix,
            (tok, pos) => return Err(self.unexpected(tok, pos, "a prefix name ending in ':'")),
        };
        let iri = match self.next()? {
            (Tok::IriRef(iri), _) => iri,
            (tok, pos) => return Err(self.unexpected(tok, pos, "an IRI reference")),
        };
        if turtle_style {
            self.expect_dot()?;
        }
        self.prefixes.insert(name, iri);
        Ok(())
    }

    fn statement(&mut self) -> Result<(), ParseDiagnostics> {
        let subject = self.subject()?;
        self.predicate_object_list(&subject)?;
        self.expect_dot()
    }

    fn resolve(&self, prefix: &str, local: &str, pos: Pos) -> Result<Iri, ParseDiagnostics> {
        match self.prefixes.get(prefix) {
            Some(ns) => Ok(Iri::new(format!("{ns}{local}"))),
            None => Err(err(pos, DiagnosticKind::UndefinedPrefix, format!("undefined prefix '{prefix}:'"))),
        }
    }

    fn subject(&mut self) -> Result<Term, ParseDiagnostics> {
        match self.next()? {
            (Tok::IriRef(i), _) => Ok(Term::Iri(Iri::new(i))),
            (Tok::PName { prefix, local }, pos) => Ok(Term::Iri(self.resolve(&prefix, &local, pos)?)),
            (Tok::QtOpen, pos) => self.quoted(pos),
            (tok @ (Tok::Str(_) | Tok::Number { .. } | Tok::Bool(_)), pos) => {
                Err(err(pos, DiagnosticKind::Syntax, format!("{} cannot be a subject", describe(&tok))))
            }
            (tok, pos) => Err(self.unexpected(tok, pos, "a subject")),
        }
    }

    fn verb(&mut self) -> Result<Iri, ParseDiagnostics> {
        match self.next()? {
            (Tok::A, _) => Ok(Iri::new(vocab::RDF_TYPE)),
            (Tok::IriRef(i), _) => Ok(Iri::new(i)),
            (Tok::PName { prefix, local }, pos) => self.resolve(&prefix, &local, pos),
            (tok, pos) => Err(self.unexpected(tok, pos, "a predicate")),
        }
    }

    fn quoted(&mut self, open: Pos) -> Result<Term, ParseDiagnostics> {
        let subject = self.subject()?;
        let predicate = self.verb()?;
        let object = self.object()?;
        match self.next()? {
            (Tok::QtClose, _) => Ok(Term::quoted(subject, predicate, object)),
            (Tok::Unsupported(msg), pos) => Err(err(pos, DiagnosticKind::Syntax, msg)),
            (tok, pos) => Err(err(
                pos,
                DiagnosticKind::UnbalancedQuote,
                format!(
                    "'<<' opened at {}:{} is not closed; found {}",
                    open.line,
                    open.column,
                    describe(&tok)
                ),
            )),
        }
    }

    fn object(&mut self) -> Result<Term, ParseDiagnostics> {
        match self.next()? {
            (Tok::IriRef(i), _) => Ok(Term::Iri(Iri::new(i))),
            (Tok::PName { prefix, local }, pos) => Ok(Term::Iri(self.resolve(&prefix, &local, pos)?)),
            (Tok::QtOpen, pos) => self.quoted(pos),
            (Tok::Number { lexical, datatype }, _) => Ok(Literal::typed(lexical, Iri::new(datatype)).into()),
            (Tok::Bool(b), _) => Ok(Literal::typed(b.to_string(), Iri::new(vocab::XSD_BOOLEAN)).into()),
            (Tok::Str(s), _) => self.literal_suffix(s),
            (tok, pos) => Err(self.unexpected(tok, pos, "an object")),
        }
    }

    fn literal_suffix(&mut self, lexical: String) -> Result<Term, ParseDiagnostics> {
        let lexical: Arc<str> = lexical.into();
        match self.peek()?.0.clone() {
            Tok::AtWord(tag) => {
                self.next()?;
                Ok(Literal::lang(lexical, &tag).into())
            }
            Tok::DoubleCaret => {
                self.next()?;
                match self.next()? {
                    (Tok::IriRef(i), _) => Ok(Literal::typed(lexical, Iri::new(i)).into()),
                    (Tok::PName { prefix, local }, pos) => {
                        Ok(Literal::typed(lexical, self.resolve(&prefix, &local, pos)?).into())
                    }
                    (tok, pos) => Err(err(
                        pos,
                        DiagnosticKind::BadLiteral,
                        format!("expected a datatype IRI after '^^', found {}", describe(&tok)),
                    )),
                }
            }
            _ => Ok(Literal::plain(lexical).into()),
        }
    }

    fn predicate_object_list(&mut self, subject: &Term) -> Result<(), ParseDiagnostics> {
        loop {
            let predicate = self.verb()?;
            loop {
                let object = self.object()?;
                self.out.push(Triple::new(subject.clone(), predicate.clone(), object));
                if matches!(self.peek()?.0, Tok::Comma) {
                    self.next()?;
                } else {
                    break;
                }
            }
            if !matches!(self.peek()?.0, Tok::Semicolon) {
                return Ok(());
            }
            while matches!(self.peek()?.0, Tok::Semicolon) {
                self.next()?;
            }
            if matches!(self.peek()?.0, Tok::Dot | Tok::QtClose) {
                return Ok(());
            }
        }
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::IriRef(i) => format!("IRI <{i}>"),
        Tok::PName { prefix, local } => format!("prefixed name {prefix}:{local}"),
        Tok::Str(_) => "string literal".into(),
        Tok::AtWord(w) => format!("'@{w}'"),
        Tok::DoubleCaret => "'^^'".into(),
        Tok::Number { lexical, .. } => format!("number {lexical}"),
        Tok::Bool(b) => format!("boolean {b}"),
        Tok::A => "'a'".into(),
        Tok::SparqlPrefix => "PREFIX".into(),
        Tok::SparqlBase => "BASE".into(),
        Tok::QtOpen => "'<<'".into(),
        Tok::QtClose => "'>>'".into(),
        Tok::Dot => "'.'".into(),
        Tok::Semicolon => "';'".into(),
        Tok::Comma => "','".into(),
        Tok::Unsupported(msg) => (*msg).into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parses a document into its asserted triples, in document order.
pub fn parse_document(source: &str) -> Result<Vec<Triple>, ParseDiagnostics> {
    let mut parser = Parser { lexer: Lexer::new(source), peeked: None, prefixes: HashMap::new(), out: Vec::new() };
    parser.document()?;
    Ok(parser.out)
}

/// Parses a single term in canonical (or any supported) syntax, with no
/// prefixes in scope.
pub fn parse_term(source: &str) -> Result<Term, ParseDiagnostics> {
    let mut parser = Parser { lexer: Lexer::new(source), peeked: None, prefixes: HashMap::new(), out: Vec::new() };
    let term = parser.object()?;
    match parser.next()? {
        (Tok::Eof, _) => Ok(term),
        (tok, pos) => Err(parser.unexpected(tok, pos, "end of input")),
    }
}

/// Writes triples as an N-Triples-star style document using canonical terms.
pub fn write_document(triples: &[Triple]) -> String {
    let mut out = String::new();
    for t in triples {
        out.push_str(&t.to_string());
        out.push_str(" .\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::serialize_term;

    fn iri(s: &str) -> Term {
        Term::iri(s)
    }

    #[test]
    fn empty_document() {
        assert!(parse_document("").unwrap().is_empty());
        assert!(parse_document("  # only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn scene_listing() {
        let src = r#"
@prefix kgc: <http://kgc.knowledge-graph.jp/ontology/kgc.owl#> .
@prefix kdsb: <http://kgc.knowledge-graph.jp/data/SpeckledBand/> .
@prefix kdp: <http://kgc.knowledge-graph.jp/data/predicate/> .
<< kdsb:Julia kdp:meet kdsb:lieutenant_commander >> a kgc:Situation ; kgc:where kdsb:Harrow .
"#;
        let triples = parse_document(src).unwrap();
        assert_eq!(triples.len(), 2);
        assert_eq!(triples[0].subject, triples[1].subject);
        let qt = Term::quoted(
            iri("http://kgc.knowledge-graph.jp/data/SpeckledBand/Julia"),
            Iri::new("http://kgc.knowledge-graph.jp/data/predicate/meet"),
            iri("http://kgc.knowledge-graph.jp/data/SpeckledBand/lieutenant_commander"),
        );
        assert_eq!(triples[0].subject, qt);
        assert_eq!(triples[0].predicate.as_str(), vocab::RDF_TYPE);
        assert_eq!(triples[1].object, iri("http://kgc.knowledge-graph.jp/data/SpeckledBand/Harrow"));
    }

    #[test]
    fn depth_two_subject() {
        let src = "<< << <urn:a> <urn:b> <urn:c> >> <urn:d> <urn:e> >> <urn:f> <urn:g> .";
        let triples = parse_document(src).unwrap();
        assert_eq!(triples.len(), 1);
        let inner = Term::quoted(iri("urn:a"), Iri::new("urn:b"), iri("urn:c"));
        let outer = Term::quoted(inner, Iri::new("urn:d"), iri("urn:e"));
        assert_eq!(triples[0].subject, outer);
        assert_eq!(triples[0].subject.depth(), 2);
        assert_eq!(triples[0].object, iri("urn:g"));
    }

    #[test]
    fn lists_and_literals() {
        let src = r#"@prefix : <http://x/> .
:s :p "a", "b"@EN, "c"^^:dt, 42, -1.5, 2e3, true ;
   :q :o ; .
"#;
        let t = parse_document(src).unwrap();
        assert_eq!(t.len(), 8);
        let objs: Vec<String> = t.iter().map(|t| serialize_term(&t.object)).collect();
        assert_eq!(objs[0], r#""a""#);
        assert_eq!(objs[1], r#""b"@en"#);
        assert_eq!(objs[2], r#""c"^^<http://x/dt>"#);
        assert_eq!(objs[3], format!("\"42\"^^<{}>", vocab::XSD_INTEGER));
        assert_eq!(objs[4], format!("\"-1.5\"^^<{}>", vocab::XSD_DECIMAL));
        assert_eq!(objs[5], format!("\"2e3\"^^<{}>", vocab::XSD_DOUBLE));
        assert_eq!(objs[6], format!("\"true\"^^<{}>", vocab::XSD_BOOLEAN));
        assert_eq!(t[7].predicate.as_str(), "http://x/q");
    }

    #[test]
    fn local_names() {
        let src = "@prefix k: <http://k/> . k:36 k:2_years_ago k:a.b , k:c\\-d .";
        let t = parse_document(src).unwrap();
        assert_eq!(t[0].subject, iri("http://k/36"));
        assert_eq!(t[0].predicate.as_str(), "http://k/2_years_ago");
        assert_eq!(t[0].object, iri("http://k/a.b"));
        assert_eq!(t[1].object, iri("http://k/c-d"));
    }

    #[test]
    fn long_strings_and_escapes() {
        let src = "<urn:s> <urn:p> \"\"\"line1\nline \"2\"\"\"\" , 'x\\u0041\\t' .";
        let t = parse_document(src).unwrap();
        assert_eq!(t[0].object, Literal::plain("line1\nline \"2\"").into());
        assert_eq!(t[1].object, Literal::plain("xA\t").into());
    }

    fn diag(src: &str) -> ParseDiagnostics {
        parse_document(src).expect_err("should fail")
    }

    #[test]
    fn undefined_prefix() {
        let d = diag("ex:a <urn:p> <urn:o> .");
        assert_eq!(d.kind, DiagnosticKind::UndefinedPrefix);
        assert_eq!((d.line, d.column), (1, 1));
    }

    #[test]
    fn unbalanced_quote() {
        let d = diag("<< <urn:a> <urn:b> <urn:c> <urn:p> <urn:o> .");
        assert_eq!(d.kind, DiagnosticKind::UnbalancedQuote);
        assert_eq!(d.column, 28);
        let d = diag("<urn:a> <urn:b> <urn:c> >> .");
        assert_eq!(d.kind, DiagnosticKind::UnbalancedQuote);
        let d = diag("<urn:s> <urn:p> << <urn:a> <urn:b> <urn:c>");
        assert_eq!(d.kind, DiagnosticKind::UnbalancedQuote);
        assert_eq!((d.line, d.column), (1, 42));
    }

    #[test]
    fn bad_literals() {
        assert_eq!(diag("<urn:s> <urn:p> \"abc .").kind, DiagnosticKind::BadLiteral);
        assert_eq!(diag("<urn:s> <urn:p> \"a\\qb\" .").kind, DiagnosticKind::BadLiteral);
        assert_eq!(diag("<urn:s> <urn:p> 1e .").kind, DiagnosticKind::BadLiteral);
        assert_eq!(diag("<urn:s> <urn:p> 12abc .").kind, DiagnosticKind::BadLiteral);
        assert_eq!(diag("<urn:s> <urn:p> - .").kind, DiagnosticKind::BadLiteral);
    }

    #[test]
    fn unsupported_constructs() {
        for src in [
            "_:b <urn:p> <urn:o> .",
            "<urn:s> <urn:p> [ <urn:q> <urn:o> ] .",
            "<urn:s> <urn:p> ( <urn:o> ) .",
            "@base <http://x/> .",
            "BASE <http://x/>",
            "<urn:s> <urn:p> <urn:o> {| <urn:q> <urn:r> |} .",
            "\"lit\" <urn:p> <urn:o> .",
            "<urn:s> \"p\" <urn:o> .",
        ] {
            let d = diag(src);
            assert_eq!(d.kind, DiagnosticKind::Syntax, "{src}");
        }
    }

    #[test]
    fn positions_track_lines() {
        let d = diag("<urn:s> <urn:p> <urn:o> .\n\n  <urn:s> <urn:p> .");
        assert_eq!((d.line, d.column), (3, 19));
        // end-of-input errors point at the last character
        let d = diag("<urn:s> <urn:p> <urn:o>\n\n");
        assert_eq!((d.line, d.column), (1, 23));
    }

    #[test]
    fn parse_term_roundtrip() {
        let t = parse_term("<< << <e2> <r2> <e3> >> <r3> \"x\"@en >>").unwrap();
        assert_eq!(serialize_term(&t), "<< << <e2> <r2> <e3> >> <r3> \"x\"@en >>");
        assert!(parse_term("<a> <b>").is_err());
    }
}
