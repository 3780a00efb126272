//! Tokenizer for brace-block (c-family) source.
//!
//! Comments, blank lines and preprocessor directives never produce tokens;
//! string literals are single tokens with their contents opaque. The lexer
//! also tracks which physical lines carry code, which is where SLOC comes
//! from.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delim {
    Paren,
    Brace,
    Bracket,
}

impl Delim {
    /// Operator spelling for a balanced pair, counted once per pair.
    pub fn pair_symbol(self) -> &'static str {
        match self {
            Delim::Paren => "()",
            Delim::Brace => "{}",
            Delim::Bracket => "[]",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Lexeme {
    /// Identifier or keyword.
    Word(String),
    /// Numeric literal, verbatim.
    Number(String),
    /// String/char/template literal, quotes included.
    Text(String),
    /// Punctuation operator, longest-match.
    Punct(&'static str),
    Open(Delim),
    Close(Delim),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub lexeme: Lexeme,
}

#[derive(Debug)]
pub struct LexOutput {
    pub tokens: Vec<Token>,
    /// Non-blank, non-comment line count.
    pub sloc: u32,
}

/// Multi-character punctuation, longest first so e.g. `===` wins over `==`.
const PUNCTS: &[&str] = &[
    ">>>=", "===", "!==", ">>>", "<<=", ">>=", "**=", "...", "&&=", "||=", "??=", "==", "!=", "<=",
    ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>", "->",
    "=>", "::", "?.", "??", "**", "+", "-", "*", "/", "%", "=", "<", ">", "!", "&", "|", "^", "~",
    "?", ":", ".", ",", ";",
];

struct Scanner<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    code_lines: Vec<bool>,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str) -> Self {
        let line_count = text.lines().count() + 1;
        Scanner {
            src: text.as_bytes(),
            pos: 0,
            line: 0,
            code_lines: vec![false; line_count + 1],
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.src.get(self.pos + offset).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
        }
        Some(b)
    }

    fn mark_code(&mut self) {
        if let Some(flag) = self.code_lines.get_mut(self.line) {
            *flag = true;
        }
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s.as_bytes())
    }

    /// True if only whitespace precedes the current position on this line.
    fn at_line_start(&self) -> bool {
        let mut i = self.pos;
        while i > 0 {
            let b = self.src[i - 1];
            if b == b'\n' {
                return true;
            }
            if b != b' ' && b != b'\t' && b != b'\r' {
                return false;
            }
            i -= 1;
        }
        true
    }
}

pub fn lex(text: &str) -> Result<LexOutput> {
    let mut sc = Scanner::new(text);
    let mut tokens = Vec::new();

    while let Some(b) = sc.peek() {
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => {
                sc.bump();
            }
            b'/' if sc.peek_at(1) == Some(b'/') => {
                while let Some(c) = sc.peek() {
                    if c == b'\n' {
                        break;
                    }
                    sc.bump();
                }
            }
            b'/' if sc.peek_at(1) == Some(b'*') => {
                sc.bump();
                sc.bump();
                let mut closed = false;
                while let Some(c) = sc.bump() {
                    if c == b'*' && sc.peek() == Some(b'/') {
                        sc.bump();
                        closed = true;
                        break;
                    }
                }
                if !closed {
                    return Err(Error::ParseFailure("unterminated block comment".into()));
                }
            }
            b'#' if sc.at_line_start() => {
                // Preprocessor directive: the line is code but contributes
                // no tokens.
                sc.mark_code();
                while let Some(c) = sc.peek() {
                    if c == b'\n' {
                        break;
                    }
                    sc.bump();
                    sc.mark_code();
                }
            }
            b'"' | b'\'' | b'`' => {
                let text = scan_string(&mut sc, b)?;
                tokens.push(Token {
                    lexeme: Lexeme::Text(text),
                });
            }
            b'0'..=b'9' => {
                sc.mark_code();
                let n = scan_number(&mut sc);
                tokens.push(Token {
                    lexeme: Lexeme::Number(n),
                });
            }
            b'.' if sc.peek_at(1).is_some_and(|c| c.is_ascii_digit()) => {
                sc.mark_code();
                let n = scan_number(&mut sc);
                tokens.push(Token {
                    lexeme: Lexeme::Number(n),
                });
            }
            b'A'..=b'Z' | b'a'..=b'z' | b'_' | b'$' => {
                sc.mark_code();
                let start = sc.pos;
                while sc
                    .peek()
                    .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_' || c == b'$')
                {
                    sc.bump();
                }
                let word = String::from_utf8_lossy(&sc.src[start..sc.pos]).into_owned();
                tokens.push(Token {
                    lexeme: Lexeme::Word(word),
                });
            }
            b'(' => push_delim(&mut sc, &mut tokens, Lexeme::Open(Delim::Paren)),
            b')' => push_delim(&mut sc, &mut tokens, Lexeme::Close(Delim::Paren)),
            b'{' => push_delim(&mut sc, &mut tokens, Lexeme::Open(Delim::Brace)),
            b'}' => push_delim(&mut sc, &mut tokens, Lexeme::Close(Delim::Brace)),
            b'[' => push_delim(&mut sc, &mut tokens, Lexeme::Open(Delim::Bracket)),
            b']' => push_delim(&mut sc, &mut tokens, Lexeme::Close(Delim::Bracket)),
            _ => {
                if let Some(p) = PUNCTS.iter().find(|p| sc.starts_with(p)) {
                    sc.mark_code();
                    for _ in 0..p.len() {
                        sc.bump();
                    }
                    tokens.push(Token {
                        lexeme: Lexeme::Punct(p),
                    });
                } else {
                    // Characters with no c-family meaning (annotations'
                    // `@`, stray backslashes, non-ASCII) still make the
                    // line a code line.
                    sc.mark_code();
                    sc.bump();
                    while sc.peek().is_some_and(|c| !c.is_ascii()) {
                        sc.bump();
                    }
                }
            }
        }
    }

    let sloc = sc.code_lines.iter().filter(|&&c| c).count() as u32;
    Ok(LexOutput { tokens, sloc })
}

fn push_delim(sc: &mut Scanner<'_>, tokens: &mut Vec<Token>, lexeme: Lexeme) {
    sc.mark_code();
    sc.bump();
    tokens.push(Token { lexeme });
}

fn scan_string(sc: &mut Scanner<'_>, quote: u8) -> Result<String> {
    let start = sc.pos;
    sc.mark_code();
    sc.bump();
    loop {
        match sc.peek() {
            None => return Err(Error::ParseFailure("unterminated string literal".into())),
            Some(b'\\') => {
                sc.bump();
                sc.bump();
                sc.mark_code();
            }
            Some(c) if c == quote => {
                sc.bump();
                break;
            }
            Some(_) => {
                sc.bump();
                sc.mark_code();
            }
        }
    }
    Ok(String::from_utf8_lossy(&sc.src[start..sc.pos]).into_owned())
}

fn scan_number(sc: &mut Scanner<'_>) -> String {
    let start = sc.pos;
    if sc.peek() == Some(b'0') && matches!(sc.peek_at(1), Some(b'x') | Some(b'X')) {
        sc.bump();
        sc.bump();
        while sc
            .peek()
            .is_some_and(|c| c.is_ascii_hexdigit() || c == b'_')
        {
            sc.bump();
        }
    } else {
        while sc.peek().is_some_and(|c| c.is_ascii_digit() || c == b'_') {
            sc.bump();
        }
        if sc.peek() == Some(b'.') && sc.peek_at(1).is_some_and(|c| c.is_ascii_digit()) {
            sc.bump();
            while sc.peek().is_some_and(|c| c.is_ascii_digit() || c == b'_') {
                sc.bump();
            }
        }
        if matches!(sc.peek(), Some(b'e') | Some(b'E'))
            && (sc.peek_at(1).is_some_and(|c| c.is_ascii_digit())
                || (matches!(sc.peek_at(1), Some(b'+') | Some(b'-'))
                    && sc.peek_at(2).is_some_and(|c| c.is_ascii_digit())))
        {
            sc.bump();
            if matches!(sc.peek(), Some(b'+') | Some(b'-')) {
                sc.bump();
            }
            while sc.peek().is_some_and(|c| c.is_ascii_digit()) {
                sc.bump();
            }
        }
    }
    // Type suffixes (L, f, u, ...) belong to the literal.
    while sc.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
        sc.bump();
    }
    String::from_utf8_lossy(&sc.src[start..sc.pos]).into_owned()
}
