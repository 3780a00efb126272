//! Built-in per-file metrics for c-family source: cyclomatic complexity,
//! Halstead volume and difficulty, SLOC, and import coupling where the
//! language has the idiom. An external-checker escape hatch covers
//! everything else.
//!
//! Token classification is pinned so results are reproducible:
//!
//! - operators: control/computation keywords (`if`, `for`, `return`, ...),
//!   punctuation operators, paired delimiters (one count per `()`/`{}`/`[]`
//!   pair) and identifiers at call sites (`name(`);
//! - operands: all other identifiers and all literals (numbers, strings,
//!   `true`/`false`/`null`-likes). String contents are one operand.
//!
//! Comments, blank lines and preprocessor directives contribute no tokens
//! and do not count toward SLOC (directives do count as source lines).

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub mod checker;
pub mod coupling;
pub mod functions;
pub mod lexer;

pub use checker::{run_external_checker, CheckerCommand};
pub use coupling::{extract_imports, resolve_coupling};
pub use functions::FunctionMetrics;

use lexer::{Lexeme, Token};

/// Cache key component: bump when token classification or metric rules
/// change so stored records are recomputed instead of silently reused.
pub const ANALYZER_VERSION: &str = "builtin-1";

/// Files above this size are recorded as unanalyzable; generated or
/// minified assets would otherwise dominate the marks.
pub const MAX_ANALYZABLE_BYTES: usize = 1 << 20;

/// Keywords counted as Halstead operators. Everything word-like outside
/// this list (type names, modifiers, plain identifiers) is an operand,
/// except the literal words below.
pub const KEYWORD_OPERATORS: &[&str] = &[
    "if",
    "else",
    "for",
    "while",
    "do",
    "switch",
    "case",
    "default",
    "break",
    "continue",
    "return",
    "goto",
    "try",
    "catch",
    "finally",
    "throw",
    "throws",
    "new",
    "delete",
    "typeof",
    "instanceof",
    "in",
    "of",
    "sizeof",
    "yield",
    "await",
    "function",
];

/// Word-shaped literals, counted as operands.
pub const LITERAL_WORDS: &[&str] = &[
    "true",
    "false",
    "null",
    "undefined",
    "nullptr",
    "NULL",
    "this",
];

/// A language profile: which files it covers and whether import coupling
/// applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LanguageProfile {
    pub id: &'static str,
    pub extensions: &'static [&'static str],
    pub coupling: bool,
}

const PROFILES: &[LanguageProfile] = &[
    LanguageProfile {
        id: "c-family",
        extensions: &[
            "c", "h", "cc", "hh", "cpp", "hpp", "cxx", "java", "js", "jsx", "ts", "tsx", "cs",
            "go", "kt", "kts", "scala", "m", "mm",
        ],
        coupling: false,
    },
    LanguageProfile {
        id: "java-like",
        extensions: &["java", "kt", "kts", "scala"],
        coupling: true,
    },
];

pub fn profile(id: &str) -> Result<&'static LanguageProfile> {
    PROFILES
        .iter()
        .find(|p| p.id == id)
        .ok_or_else(|| Error::UnknownProfile(id.to_string()))
}

impl LanguageProfile {
    pub fn applies_to(&self, path: &str) -> bool {
        let ext = path.rsplit_once('.').map(|(_, e)| e).unwrap_or("");
        self.extensions.iter().any(|e| e.eq_ignore_ascii_case(ext))
    }
}

/// Distinct/total operator and operand tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalsteadCounts {
    pub distinct_operators: u32,
    pub total_operators: u32,
    pub distinct_operands: u32,
    pub total_operands: u32,
}

impl HalsteadCounts {
    /// `V = N * log2(eta)`, zero for an empty vocabulary.
    pub fn volume(&self) -> f64 {
        let vocabulary = (self.distinct_operators + self.distinct_operands) as f64;
        if vocabulary == 0.0 {
            return 0.0;
        }
        let length = (self.total_operators + self.total_operands) as f64;
        length * vocabulary.log2()
    }

    /// `D = (eta1 / 2) * (N2 / eta2)`, zero when there are no operands.
    pub fn difficulty(&self) -> f64 {
        if self.distinct_operands == 0 {
            return 0.0;
        }
        (self.distinct_operators as f64 / 2.0)
            * (self.total_operands as f64 / self.distinct_operands as f64)
    }
}

/// Control-flow graph bookkeeping for `v(G) = e - n + 2p`. The analyzer
/// itself counts decision points; this type exists so tests can
/// cross-check against explicitly constructed graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlFlowSummary {
    pub edges: u32,
    pub nodes: u32,
    /// Connected program-flow exits; one per function, with returns
    /// modeled as edges into a single virtual exit node.
    pub exits: u32,
    pub decision_points: u32,
}

impl ControlFlowSummary {
    pub fn cyclomatic(&self) -> i64 {
        self.edges as i64 - self.nodes as i64 + 2 * self.exits as i64
    }

    /// For single-entry single-exit structured code the graph formula and
    /// decision-point counting must agree.
    pub fn consistent(&self) -> bool {
        self.cyclomatic() == self.decision_points as i64 + 1
    }
}

/// Raw metric values for one file at one revision. Fields are optional:
/// coupling only exists for import-aware profiles, and external checkers
/// may report any subset (absent, never zero).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cc: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hv: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hd: Option<f64>,
    #[serde(rename = "Ca", default, skip_serializing_if = "Option::is_none")]
    pub ca: Option<u32>,
    #[serde(rename = "Ce", default, skip_serializing_if = "Option::is_none")]
    pub ce: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sloc: Option<u32>,
}

impl MetricVector {
    /// Per-metric overlay: fields present in `other` win.
    pub fn merged_with(&self, other: &MetricVector) -> MetricVector {
        MetricVector {
            cc: other.cc.or(self.cc),
            hv: other.hv.or(self.hv),
            hd: other.hd.or(self.hd),
            ca: other.ca.or(self.ca),
            ce: other.ce.or(self.ce),
            sloc: other.sloc.or(self.sloc),
        }
    }
}

/// Full analysis result for one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileAnalysis {
    pub metrics: MetricVector,
    pub halstead: HalsteadCounts,
    pub functions: Vec<FunctionMetrics>,
    /// Raw import specifiers, kept for revision-level coupling resolution.
    pub imports: Vec<String>,
}

/// Tokenize and measure one source text.
///
/// The per-file cyclomatic number is the maximum over its functions
/// (method-scale, matching the mark thresholds); a file without functions
/// has `cc = 0`. Volume and difficulty come straight from the Halstead
/// counts; SLOC counts non-blank non-comment lines.
pub fn analyze_source(text: &str, profile_id: &str) -> Result<FileAnalysis> {
    let profile = profile(profile_id)?;
    let lexed = lexer::lex(text)?;
    let halstead = halstead_counts(&lexed.tokens);
    let functions = functions::find_functions(&lexed.tokens, KEYWORD_OPERATORS);
    let cc = functions.iter().map(|f| f.cyclomatic).max().unwrap_or(0);
    let imports = if profile.coupling {
        coupling::extract_imports(text)
    } else {
        Vec::new()
    };
    Ok(FileAnalysis {
        metrics: MetricVector {
            cc: Some(cc),
            hv: Some(halstead.volume()),
            hd: Some(halstead.difficulty()),
            ca: None,
            ce: None,
            sloc: Some(lexed.sloc),
        },
        halstead,
        functions,
        imports,
    })
}

/// Classify the token stream into Halstead tallies.
pub fn halstead_counts(tokens: &[Token]) -> HalsteadCounts {
    let mut distinct_operators: HashSet<&str> = HashSet::new();
    let mut distinct_operands: HashSet<&str> = HashSet::new();
    let mut counts = HalsteadCounts::default();

    for (i, token) in tokens.iter().enumerate() {
        match &token.lexeme {
            Lexeme::Word(w) => {
                if KEYWORD_OPERATORS.contains(&w.as_str()) {
                    distinct_operators.insert(w);
                    counts.total_operators += 1;
                } else if LITERAL_WORDS.contains(&w.as_str()) {
                    distinct_operands.insert(w);
                    counts.total_operands += 1;
                } else if matches!(
                    tokens.get(i + 1).map(|t| &t.lexeme),
                    Some(Lexeme::Open(lexer::Delim::Paren))
                ) {
                    // Call site: the callee is an operator.
                    distinct_operators.insert(w);
                    counts.total_operators += 1;
                } else {
                    distinct_operands.insert(w);
                    counts.total_operands += 1;
                }
            }
            Lexeme::Number(n) => {
                distinct_operands.insert(n);
                counts.total_operands += 1;
            }
            Lexeme::Text(s) => {
                distinct_operands.insert(s);
                counts.total_operands += 1;
            }
            Lexeme::Punct(p) => {
                distinct_operators.insert(p);
                counts.total_operators += 1;
            }
            Lexeme::Open(delim) => {
                distinct_operators.insert(delim.pair_symbol());
                counts.total_operators += 1;
            }
            Lexeme::Close(_) => {}
        }
    }

    counts.distinct_operators = distinct_operators.len() as u32;
    counts.distinct_operands = distinct_operands.len() as u32;
    counts
}

/// Analyze a batch of `(path, text)` pairs; data-parallel with the
/// `parallel` feature, and always returned in input order.
pub fn analyze_batch(
    files: &[(String, String)],
    profile_id: &str,
) -> Result<Vec<(String, Result<FileAnalysis>)>> {
    profile(profile_id)?;
    Ok(par::map_ordered(files, |(path, text)| {
        (path.clone(), analyze_source(text, profile_id))
    }))
}

/// Sequential reference for `analyze_batch`; the benches compare the two.
pub fn analyze_batch_sequential(
    files: &[(String, String)],
    profile_id: &str,
) -> Result<Vec<(String, Result<FileAnalysis>)>> {
    profile(profile_id)?;
    Ok(par::map_ordered_seq(files, |(path, text)| {
        (path.clone(), analyze_source(text, profile_id))
    }))
}

/// Coupling over a whole file set: efferent = distinct internal files
/// imported, afferent = distinct internal importers.
pub fn analyze_coupling(
    files: &BTreeMap<String, String>,
    profile_id: &str,
) -> Result<BTreeMap<String, (u32, u32)>> {
    let profile = profile(profile_id)?;
    if !profile.coupling {
        return Err(Error::ProfileLacksCoupling(profile_id.to_string()));
    }
    let imports: BTreeMap<String, Vec<String>> = files
        .iter()
        .map(|(path, text)| (path.clone(), coupling::extract_imports(text)))
        .collect();
    Ok(coupling::resolve_coupling(&imports))
}
