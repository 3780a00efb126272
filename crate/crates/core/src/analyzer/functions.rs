//! Function discovery and per-function decision counting over the token
//! stream.
//!
//! A `{` opens a function body when it closes a parameter list
//! (`name(...) {`, possibly with `throws X` or similar trailing words) or
//! follows a lambda arrow. Braces after control keywords (`if (..) {`)
//! and bare blocks are plain blocks; decisions inside them belong to the
//! innermost enclosing function.

use serde::{Deserialize, Serialize};

use super::lexer::{Delim, Lexeme, Token};

/// Decision-point keywords: one added path each. `do` is excluded because
/// its loop condition arrives as `while`; `else` and `default` add none.
const DECISION_WORDS: &[&str] = &["if", "for", "while", "case", "catch"];

/// Short-circuit and ternary operators, each one added path.
const DECISION_PUNCTS: &[&str] = &["&&", "||", "?"];

/// Keywords whose parenthesized head must not be mistaken for a parameter
/// list.
const CONTROL_PAREN_WORDS: &[&str] = &[
    "if",
    "for",
    "while",
    "switch",
    "catch",
    "return",
    "synchronized",
    "assert",
    "with",
];

/// Per-function cyclomatic numbers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionMetrics {
    pub name: String,
    pub decision_points: u32,
    pub cyclomatic: u32,
}

enum Ctx {
    Function { name: String, decisions: u32 },
    Block,
}

pub fn find_functions(tokens: &[Token], keyword_operators: &[&str]) -> Vec<FunctionMetrics> {
    let mut stack: Vec<Ctx> = Vec::new();
    let mut found = Vec::new();

    for (i, token) in tokens.iter().enumerate() {
        match &token.lexeme {
            Lexeme::Open(Delim::Brace) => {
                let ctx = match function_name_for_body(tokens, i, keyword_operators) {
                    Some(name) => Ctx::Function { name, decisions: 0 },
                    None => Ctx::Block,
                };
                stack.push(ctx);
            }
            Lexeme::Close(Delim::Brace) => {
                if let Some(Ctx::Function { name, decisions }) = stack.pop() {
                    found.push(FunctionMetrics {
                        name,
                        decision_points: decisions,
                        cyclomatic: decisions + 1,
                    });
                }
            }
            Lexeme::Word(w) if DECISION_WORDS.contains(&w.as_str()) => {
                bump_innermost_function(&mut stack);
            }
            Lexeme::Punct(p) if DECISION_PUNCTS.contains(p) => {
                bump_innermost_function(&mut stack);
            }
            _ => {}
        }
    }

    // Unbalanced braces at EOF: close whatever is still open.
    while let Some(ctx) = stack.pop() {
        if let Ctx::Function { name, decisions } = ctx {
            found.push(FunctionMetrics {
                name,
                decision_points: decisions,
                cyclomatic: decisions + 1,
            });
        }
    }

    found
}

fn bump_innermost_function(stack: &mut [Ctx]) {
    for ctx in stack.iter_mut().rev() {
        if let Ctx::Function { decisions, .. } = ctx {
            *decisions += 1;
            return;
        }
    }
}

/// Decide whether the `{` at `brace` opens a function body; if so, return
/// the function's name.
fn function_name_for_body(
    tokens: &[Token],
    brace: usize,
    keyword_operators: &[&str],
) -> Option<String> {
    if brace == 0 {
        return None;
    }

    // Lambda arrows bind directly to the body.
    if let Lexeme::Punct(p) = &tokens[brace - 1].lexeme {
        if *p == "=>" || *p == "->" {
            return Some(arrow_name(tokens, brace - 1));
        }
    }

    // Walk back over a short tail of words and commas (`throws A, B`,
    // `const`, ...) looking for the `)` of a parameter list.
    let mut i = brace;
    for _ in 0..8 {
        if i == 0 {
            return None;
        }
        i -= 1;
        match &tokens[i].lexeme {
            Lexeme::Word(_) | Lexeme::Punct(",") => continue,
            Lexeme::Close(Delim::Paren) => break,
            _ => return None,
        }
    }
    if !matches!(tokens[i].lexeme, Lexeme::Close(Delim::Paren)) {
        return None;
    }

    let open = matching_open_paren(tokens, i)?;
    if open == 0 {
        return None;
    }
    match &tokens[open - 1].lexeme {
        Lexeme::Word(w) if CONTROL_PAREN_WORDS.contains(&w.as_str()) => None,
        Lexeme::Word(w) if w == "function" => Some("<anonymous>".to_string()),
        Lexeme::Word(w) if keyword_operators.contains(&w.as_str()) => None,
        Lexeme::Word(w) => Some(w.clone()),
        _ => None,
    }
}

fn matching_open_paren(tokens: &[Token], close: usize) -> Option<usize> {
    let mut depth = 0usize;
    for i in (0..=close).rev() {
        match tokens[i].lexeme {
            Lexeme::Close(Delim::Paren) => depth += 1,
            Lexeme::Open(Delim::Paren) => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Name an arrow function from a `name = (params) =>` or `name = x =>`
/// binding, if one precedes the arrow.
fn arrow_name(tokens: &[Token], arrow: usize) -> String {
    if arrow == 0 {
        return "<anonymous>".to_string();
    }
    let params_start = match &tokens[arrow - 1].lexeme {
        Lexeme::Close(Delim::Paren) => match matching_open_paren(tokens, arrow - 1) {
            Some(open) => open,
            None => return "<anonymous>".to_string(),
        },
        Lexeme::Word(_) => arrow - 1,
        _ => return "<anonymous>".to_string(),
    };
    if params_start >= 2 {
        if let (Lexeme::Word(name), Lexeme::Punct("=")) = (
            &tokens[params_start - 2].lexeme,
            &tokens[params_start - 1].lexeme,
        ) {
            return name.clone();
        }
    }
    "<anonymous>".to_string()
}
