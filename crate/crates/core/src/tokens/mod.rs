//! Lightweight lexers for C, Java and Python, plus the token categories used
//! when aggregating distractor tokens.
//!
//! The lexers do not parse. They produce a flat token stream: comments are
//! dropped, string and character literals stay whole, and Python layout is
//! made explicit through synthetic `NEWLINE`, `INDENT` and `UNIND` tokens.

mod category;
mod clike;
mod python;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use category::categorize;

/// Synthetic token emitted at the end of a Python logical line.
pub const NEWLINE: &str = "NEWLINE";
/// Synthetic token emitted when Python indentation increases.
pub const INDENT: &str = "INDENT";
/// Synthetic token emitted when Python indentation decreases.
pub const UNIND: &str = "UNIND";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    C,
    Java,
    Python,
}

impl Language {
    pub const ALL: [Language; 3] = [Language::C, Language::Java, Language::Python];

    pub fn as_str(self) -> &'static str {
        match self {
            Language::C => "c",
            Language::Java => "java",
            Language::Python => "python",
        }
    }

    /// File extensions picked up when a corpus directory is scanned.
    pub fn extensions(self) -> &'static [&'static str] {
        match self {
            Language::C => &["c", "h"],
            Language::Java => &["java"],
            Language::Python => &["py"],
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unsupported language `{0}` (expected one of: c, java, python)")]
pub struct UnsupportedLanguage(pub String);

impl FromStr for Language {
    type Err = UnsupportedLanguage;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "c" => Ok(Language::C),
            "java" => Ok(Language::Java),
            "python" => Ok(Language::Python),
            other => Err(UnsupportedLanguage(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TokenCategory {
    ControlFlow,
    Datatypes,
    Digits,
    Identifiers,
    Operators,
    Modifiers,
    Others,
}

impl TokenCategory {
    pub const ALL: [TokenCategory; 7] = [
        TokenCategory::ControlFlow,
        TokenCategory::Datatypes,
        TokenCategory::Digits,
        TokenCategory::Identifiers,
        TokenCategory::Operators,
        TokenCategory::Modifiers,
        TokenCategory::Others,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TokenCategory::ControlFlow => "control-flow",
            TokenCategory::Datatypes => "datatypes",
            TokenCategory::Digits => "digits",
            TokenCategory::Identifiers => "identifiers",
            TokenCategory::Operators => "operators",
            TokenCategory::Modifiers => "modifiers",
            TokenCategory::Others => "others",
        }
    }
}

impl fmt::Display for TokenCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One lexical unit of a program.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    /// Verbatim lexeme, or the name of a synthetic layout token.
    pub text: String,
    pub category: TokenCategory,
    /// Position in the original (unreduced) program.
    pub index: usize,
    /// 1-based source line.
    pub line: usize,
}

/// A tokenized program. Reduced programs keep the original token indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub source_id: String,
    pub language: Language,
    pub tokens: Vec<Token>,
}

impl Program {
    pub fn new(source_id: impl Into<String>, language: Language, tokens: Vec<Token>) -> Self {
        Program {
            source_id: source_id.into(),
            language,
            tokens,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.text.as_str())
    }

    /// Program made of the tokens at the given positions (positions into
    /// `self.tokens`, not original indices).
    pub fn select(&self, positions: impl IntoIterator<Item = usize>) -> Program {
        Program {
            source_id: self.source_id.clone(),
            language: self.language,
            tokens: positions
                .into_iter()
                .map(|p| self.tokens[p].clone())
                .collect(),
        }
    }

    /// Program keeping only tokens whose original index is in `indices`.
    pub fn retain_indices(&self, indices: &[usize]) -> Program {
        let mut keep = indices.iter().peekable();
        let tokens = self
            .tokens
            .iter()
            .filter(|t| {
                while keep.peek().is_some_and(|&&i| i < t.index) {
                    keep.next();
                }
                keep.peek().is_some_and(|&&i| i == t.index)
            })
            .cloned()
            .collect();
        Program {
            source_id: self.source_id.clone(),
            language: self.language,
            tokens,
        }
    }

    pub fn render(&self) -> String {
        render(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct LexError {
    pub line: usize,
    pub message: String,
}

impl LexError {
    pub(crate) fn new(line: usize, message: impl Into<String>) -> Self {
        LexError {
            line,
            message: message.into(),
        }
    }
}

/// Raw lexeme produced by a language lexer before indexing/categorization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Lexeme {
    pub text: String,
    pub line: usize,
}

pub fn tokenize(
    source_id: impl Into<String>,
    source: &str,
    language: Language,
) -> Result<Program, LexError> {
    let lexemes = match language {
        Language::C | Language::Java => clike::lex(source, language)?,
        Language::Python => python::lex(source)?,
    };
    let tokens = lexemes
        .into_iter()
        .enumerate()
        .map(|(index, lx)| {
            let category = categorize(&lx.text, language);
            Token {
                text: lx.text,
                category,
                index,
                line: lx.line,
            }
        })
        .collect();
    Ok(Program::new(source_id, language, tokens))
}

/// Render tokens back to text: single spaces between tokens, and for Python
/// the layout tokens become line breaks and four-space indentation.
pub fn render(program: &Program) -> String {
    match program.language {
        Language::C | Language::Java => {
            let mut out = String::new();
            for (i, t) in program.tokens.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                out.push_str(&t.text);
            }
            out
        }
        Language::Python => render_python(program),
    }
}

fn render_python(program: &Program) -> String {
    let mut out = String::new();
    let mut depth = 0usize;
    let mut at_line_start = true;
    for t in &program.tokens {
        match t.text.as_str() {
            NEWLINE => {
                out.push('\n');
                at_line_start = true;
            }
            INDENT => depth += 1,
            UNIND => depth = depth.saturating_sub(1),
            text => {
                if at_line_start {
                    for _ in 0..depth {
                        out.push_str("    ");
                    }
                    at_line_start = false;
                } else {
                    out.push(' ');
                }
                out.push_str(text);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(p: &Program) -> Vec<&str> {
        p.texts().collect()
    }

    #[test]
    fn c_statement_splits_into_lexemes() {
        let p = tokenize("s", "if (x < 0) return;", Language::C).unwrap();
        assert_eq!(texts(&p), ["if", "(", "x", "<", "0", ")", "return", ";"]);
        let indices: Vec<_> = p.tokens.iter().map(|t| t.index).collect();
        assert_eq!(indices, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn empty_java_source() {
        let p = tokenize("s", "", Language::Java).unwrap();
        assert!(p.is_empty());
        assert_eq!(render(&p), "");
    }

    #[test]
    fn python_function_layout() {
        let p = tokenize("s", "def f():\n    return 0\n", Language::Python).unwrap();
        assert_eq!(
            texts(&p),
            ["def", "f", "(", ")", ":", "NEWLINE", "INDENT", "return", "0", "NEWLINE", "UNIND"]
        );
        assert_eq!(render(&p), "def f ( ) :\n    return 0\n");
    }

    #[test]
    fn render_joins_with_single_spaces() {
        let p = tokenize("s", "if(x)", Language::C).unwrap();
        assert_eq!(render(&p), "if ( x )");
    }

    #[test]
    fn language_ids() {
        assert_eq!("java".parse::<Language>().unwrap(), Language::Java);
        assert!("rust".parse::<Language>().is_err());
    }

    #[test]
    fn retain_indices_keeps_order() {
        let p = tokenize("s", "a b c d e", Language::C).unwrap();
        let r = p.retain_indices(&[1, 3, 4]);
        assert_eq!(texts(&r), ["b", "d", "e"]);
        let r = p.retain_indices(&[]);
        assert!(r.is_empty());
    }

    #[test]
    fn unbalanced_python_subsequence_still_renders() {
        let p = tokenize("s", "if x:\n    y = 1\n", Language::Python).unwrap();
        let r = p.retain_indices(&[0, 6, 7, 8, 9]);
        assert_eq!(texts(&r), ["if", "=", "1", "NEWLINE", "UNIND"]);
        assert_eq!(render(&r), "if = 1\n");
    }
}
