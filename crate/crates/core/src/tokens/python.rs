//! Python lexer with explicit layout tokens.
//!
//! Mirrors the behaviour of CPython's `tokenize` for the token kinds it
//! handles: logical lines end in `NEWLINE`, indentation changes produce
//! `INDENT`/`UNIND`, blank and comment-only lines produce nothing, and no
//! layout is emitted inside brackets or after a backslash continuation.

use super::{LexError, Lexeme, INDENT, NEWLINE, UNIND};

const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", "==", "!=", "<=", ">=", "<<", ">>",
    "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=",
];

const STRING_PREFIXES: &[&str] = &[
    "rb", "br", "Rb", "bR", "RB", "BR", "rB", "Br", "rf", "fr", "Rf", "fR", "RF", "FR", "rF", "Fr",
    "r", "u", "f", "b", "R", "U", "F", "B",
];

const TAB_SIZE: usize = 8;

pub(super) fn lex(source: &str) -> Result<Vec<Lexeme>, LexError> {
    let mut lx = PyLexer {
        src: source,
        pos: 0,
        line: 1,
        out: Vec::new(),
        indents: vec![0],
        depth: 0,
        line_has_tokens: false,
    };
    lx.run()?;
    Ok(lx.out)
}

struct PyLexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    out: Vec<Lexeme>,
    indents: Vec<usize>,
    /// Bracket nesting depth; layout is suppressed while positive.
    depth: usize,
    /// Whether the current logical line has produced any token yet.
    line_has_tokens: bool,
}

impl PyLexer<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn emit(&mut self, text: impl Into<String>, line: usize) {
        self.out.push(Lexeme {
            text: text.into(),
            line,
        });
    }

    fn run(&mut self) -> Result<(), LexError> {
        let mut at_line_start = true;
        while self.pos < self.src.len() {
            if at_line_start {
                // a skipped blank line leaves us at the start of the next one
                at_line_start = self.depth == 0 && self.indentation()?;
                if at_line_start {
                    continue;
                }
            }
            let c = self.peek().expect("pos within source");
            match c {
                '\n' | '\r' => {
                    self.consume_newline();
                    if self.depth == 0 && self.line_has_tokens {
                        self.emit(NEWLINE, self.line);
                        self.line_has_tokens = false;
                    }
                    self.line += 1;
                    at_line_start = true;
                }
                '#' => {
                    let off = self.rest().find(['\n', '\r']).unwrap_or(self.rest().len());
                    self.pos += off;
                }
                '\\' if matches!(self.rest()[1..].chars().next(), Some('\n' | '\r')) => {
                    self.pos += 1;
                    self.consume_newline();
                    self.line += 1;
                }
                c if c == ' ' || c == '\t' || c == '\x0c' => self.pos += 1,
                _ => {
                    self.token()?;
                    self.line_has_tokens = true;
                }
            }
        }
        if self.line_has_tokens {
            self.emit(NEWLINE, self.line);
        }
        let end_line = if self.src.ends_with('\n') {
            self.line
        } else {
            self.line + 1
        };
        while self.indents.len() > 1 {
            self.indents.pop();
            self.emit(UNIND, end_line);
        }
        Ok(())
    }

    fn consume_newline(&mut self) {
        if self.rest().starts_with("\r\n") {
            self.pos += 2;
        } else {
            self.pos += 1;
        }
    }

    /// Measures leading whitespace of a physical line and emits layout tokens.
    /// Returns true when the line is blank or comment-only and was skipped.
    fn indentation(&mut self) -> Result<bool, LexError> {
        let mut col = 0;
        let mut len = 0;
        for c in self.rest().chars() {
            match c {
                ' ' => col += 1,
                '\t' => col = (col / TAB_SIZE + 1) * TAB_SIZE,
                '\x0c' => col = 0,
                _ => break,
            }
            len += 1;
        }
        self.pos += len;
        match self.peek() {
            None => return Ok(true),
            Some('#' | '\n' | '\r') => {
                // blank or comment-only line: skip up to (not including) the newline
                let off = self.rest().find(['\n', '\r']).unwrap_or(self.rest().len());
                self.pos += off;
                if self.pos < self.src.len() {
                    self.consume_newline();
                    self.line += 1;
                }
                return Ok(true);
            }
            _ => {}
        }
        let current = *self.indents.last().expect("indent stack never empty");
        if col > current {
            self.indents.push(col);
            self.emit(INDENT, self.line);
        } else {
            while col < *self.indents.last().expect("indent stack never empty") {
                self.indents.pop();
                self.emit(UNIND, self.line);
            }
            if col != *self.indents.last().expect("indent stack never empty") {
                return Err(LexError::new(
                    self.line,
                    "unindent does not match any outer indentation level",
                ));
            }
        }
        Ok(false)
    }

    fn token(&mut self) -> Result<(), LexError> {
        let line = self.line;
        let rest = self.rest();
        let c = rest.chars().next().expect("non-empty");

        if let Some(prefix_len) = string_start(rest) {
            return self.string(prefix_len);
        }
        if c.is_ascii_digit()
            || (c == '.' && rest[1..].chars().next().is_some_and(|d| d.is_ascii_digit()))
        {
            let start = self.pos;
            let mut prev = '\0';
            while let Some(ch) = self.peek() {
                let sign_in_exponent = matches!(ch, '+' | '-')
                    && matches!(prev, 'e' | 'E')
                    && !is_hex(&self.src[start..self.pos]);
                if ch.is_ascii_alphanumeric() || ch == '_' || ch == '.' || sign_in_exponent {
                    self.pos += 1;
                    prev = ch;
                } else {
                    break;
                }
            }
            let text = self.src[start..self.pos].to_string();
            self.emit(text, line);
            return Ok(());
        }
        if c == '_' || c.is_alphabetic() {
            let start = self.pos;
            while let Some(ch) = self.peek() {
                if ch == '_' || ch.is_alphanumeric() {
                    self.pos += ch.len_utf8();
                } else {
                    break;
                }
            }
            let text = self.src[start..self.pos].to_string();
            self.emit(text, line);
            return Ok(());
        }
        let len = OPERATORS
            .iter()
            .find(|op| rest.starts_with(*op))
            .map_or(c.len_utf8(), |op| op.len());
        let text = rest[..len].to_string();
        match c {
            '(' | '[' | '{' => self.depth += 1,
            ')' | ']' | '}' => self.depth = self.depth.saturating_sub(1),
            _ => {}
        }
        self.pos += len;
        self.emit(text, line);
        Ok(())
    }

    fn string(&mut self, prefix_len: usize) -> Result<(), LexError> {
        let start = self.pos;
        let line = self.line;
        let body = &self.rest()[prefix_len..];
        let quote = body.chars().next().expect("quote present");
        let triple = body.starts_with(if quote == '"' { "\"\"\"" } else { "'''" });
        let delim_len = if triple { 3 } else { 1 };
        let mut i = prefix_len + delim_len;
        let rest = self.rest();
        let bytes = rest.as_bytes();
        let mut newlines = 0;
        loop {
            if i >= bytes.len() {
                let what = if triple {
                    "triple-quoted string"
                } else {
                    "string"
                };
                return Err(LexError::new(line, format!("unterminated {what} literal")));
            }
            match bytes[i] {
                b'\\' => {
                    if bytes.get(i + 1) == Some(&b'\n') {
                        newlines += 1;
                    }
                    i += 2;
                }
                b'\n' if !triple => {
                    return Err(LexError::new(line, "unterminated string literal"));
                }
                b'\n' => {
                    newlines += 1;
                    i += 1;
                }
                b if b == quote as u8 => {
                    if !triple {
                        i += 1;
                        break;
                    }
                    if rest[i..].starts_with(&rest[prefix_len..prefix_len + 3]) {
                        i += 3;
                        break;
                    }
                    i += 1;
                }
                _ => i += 1,
            }
        }
        self.pos += i;
        self.line += newlines;
        let text = self.src[start..self.pos].to_string();
        self.emit(text, line);
        Ok(())
    }
}

fn is_hex(s: &str) -> bool {
    s.starts_with("0x") || s.starts_with("0X")
}

/// Length of the string prefix if `s` begins a string literal.
fn string_start(s: &str) -> Option<usize> {
    if s.starts_with('"') || s.starts_with('\'') {
        return Some(0);
    }
    STRING_PREFIXES.iter().find_map(|p| {
        let after = s.strip_prefix(p)?;
        (after.starts_with('"') || after.starts_with('\'')).then_some(p.len())
    })
}
