//! Shared lexer for the C-family languages (C and Java).

use super::{Language, LexError, Lexeme};

const C_OPERATORS: &[&str] = &[
    "<<=", ">>=", "...", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=",
    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "##",
];

const JAVA_OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "<<", ">>", "<=", ">=", "==", "!=",
    "&&", "||", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=",
];

pub(super) fn lex(source: &str, language: Language) -> Result<Vec<Lexeme>, LexError> {
    let operators = match language {
        Language::Java => JAVA_OPERATORS,
        _ => C_OPERATORS,
    };
    let mut lexer = Lexer {
        src: source,
        pos: 0,
        line: 1,
        out: Vec::new(),
    };
    while let Some(c) = lexer.peek() {
        if c == '\n' {
            lexer.line += 1;
            lexer.pos += 1;
        } else if c.is_whitespace() {
            lexer.pos += c.len_utf8();
        } else if lexer.starts_with("//") {
            lexer.skip_line_comment();
        } else if lexer.starts_with("/*") {
            lexer.skip_block_comment()?;
        } else if language == Language::Java && lexer.starts_with("\"\"\"") {
            lexer.text_block()?;
        } else if c == '"' || c == '\'' {
            lexer.quoted(c)?;
        } else if c.is_ascii_digit()
            || (c == '.' && lexer.peek_at(1).is_some_and(|d| d.is_ascii_digit()))
        {
            lexer.number();
        } else if is_ident_start(c) {
            lexer.identifier();
        } else {
            lexer.operator(operators);
        }
    }
    Ok(lexer.out)
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphabetic()
}

fn is_ident_continue(c: char) -> bool {
    c == '_' || c == '$' || c.is_alphanumeric()
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    out: Vec<Lexeme>,
}

impl Lexer<'_> {
    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn peek_at(&self, n: usize) -> Option<char> {
        self.rest().chars().nth(n)
    }

    fn starts_with(&self, s: &str) -> bool {
        self.rest().starts_with(s)
    }

    fn push(&mut self, start: usize, line: usize) {
        self.out.push(Lexeme {
            text: self.src[start..self.pos].to_string(),
            line,
        });
    }

    fn skip_line_comment(&mut self) {
        match self.rest().find('\n') {
            Some(off) => self.pos += off,
            None => self.pos = self.src.len(),
        }
    }

    fn skip_block_comment(&mut self) -> Result<(), LexError> {
        let start_line = self.line;
        match self.rest()[2..].find("*/") {
            Some(off) => {
                let body = &self.rest()[..off + 4];
                self.line += body.matches('\n').count();
                self.pos += off + 4;
                Ok(())
            }
            None => Err(LexError::new(start_line, "unterminated block comment")),
        }
    }

    fn quoted(&mut self, quote: char) -> Result<(), LexError> {
        let start = self.pos;
        let line = self.line;
        self.pos += 1;
        loop {
            match self.peek() {
                None | Some('\n') => {
                    let what = if quote == '"' { "string" } else { "character" };
                    return Err(LexError::new(line, format!("unterminated {what} literal")));
                }
                Some('\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some('\n') => {
                            // line splice inside a literal
                            self.line += 1;
                            self.pos += 1;
                        }
                        Some(c) => self.pos += c.len_utf8(),
                        None => {}
                    }
                }
                Some(c) if c == quote => {
                    self.pos += 1;
                    break;
                }
                Some(c) => self.pos += c.len_utf8(),
            }
        }
        self.push(start, line);
        Ok(())
    }

    fn text_block(&mut self) -> Result<(), LexError> {
        let start = self.pos;
        let line = self.line;
        let body = &self.rest()[3..];
        let mut i = 0;
        let bytes = body.as_bytes();
        while i < bytes.len() {
            if bytes[i] == b'\\' {
                i += 2;
                continue;
            }
            if body[i..].starts_with("\"\"\"") {
                let consumed = &body[..i + 3];
                self.line += consumed.matches('\n').count();
                self.pos += 3 + i + 3;
                self.push(start, line);
                return Ok(());
            }
            i += 1;
        }
        Err(LexError::new(line, "unterminated text block"))
    }

    fn number(&mut self) {
        let start = self.pos;
        let line = self.line;
        let hex = self.starts_with("0x") || self.starts_with("0X");
        let bin = self.starts_with("0b") || self.starts_with("0B");
        if hex || bin {
            self.pos += 2;
        }
        while let Some(c) = self.peek() {
            let exponent = if hex {
                matches!(c, 'p' | 'P')
            } else {
                matches!(c, 'e' | 'E')
            };
            if exponent && matches!(self.peek_at(1), Some('+' | '-')) {
                self.pos += 2;
            } else if c.is_ascii_alphanumeric() || c == '_' || c == '.' {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.push(start, line);
    }

    fn identifier(&mut self) {
        let start = self.pos;
        let line = self.line;
        while let Some(c) = self.peek() {
            if !is_ident_continue(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        self.push(start, line);
    }

    fn operator(&mut self, operators: &[&str]) {
        let start = self.pos;
        let line = self.line;
        let len = operators
            .iter()
            .find(|op| self.starts_with(op))
            .map(|op| op.len())
            .unwrap_or_else(|| self.peek().map_or(1, char::len_utf8));
        self.pos += len;
        self.push(start, line);
    }
}
