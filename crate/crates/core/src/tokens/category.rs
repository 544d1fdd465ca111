use super::{Language, Token, TokenCategory, INDENT, NEWLINE, UNIND};

const C_CONTROL: &[&str] = &[
    "if", "else", "for", "while", "do", "switch", "case", "default", "break", "continue", "return",
    "goto",
];
const C_TYPES: &[&str] = &[
    "int", "char", "float", "double", "void", "long", "short", "signed", "unsigned", "_Bool",
    "bool", "struct", "union", "enum", "size_t",
];
const C_MODIFIERS: &[&str] = &[
    "static", "const", "extern", "volatile", "register", "auto", "inline", "restrict",
];
const C_KEYWORD_OPERATORS: &[&str] = &["sizeof"];
/// Normalized literal placeholder used by pre-normalized C corpora.
const C_NUMBER_PLACEHOLDERS: &[&str] = &["NUMBER"];

const JAVA_CONTROL: &[&str] = &[
    "if", "else", "for", "while", "do", "switch", "case", "default", "break", "continue", "return",
    "try", "catch", "finally", "throw", "yield",
];
const JAVA_TYPES: &[&str] = &[
    "int",
    "char",
    "byte",
    "short",
    "long",
    "float",
    "double",
    "boolean",
    "void",
    "String",
    "Integer",
    "Long",
    "Short",
    "Byte",
    "Character",
    "Boolean",
    "Float",
    "Double",
];
const JAVA_MODIFIERS: &[&str] = &[
    "public",
    "private",
    "protected",
    "static",
    "final",
    "abstract",
    "synchronized",
    "native",
    "transient",
    "volatile",
    "strictfp",
    "sealed",
];
const JAVA_KEYWORD_OPERATORS: &[&str] = &["instanceof"];
const JAVA_OTHERS: &[&str] = &["new", "super", "this", "Override"];

const PY_CONTROL: &[&str] = &[
    "if", "elif", "else", "for", "while", "return", "try", "except", "finally", "raise", "break",
    "continue", "yield", "match", "case",
];
const PY_TYPES: &[&str] = &[
    "None",
    "int",
    "float",
    "str",
    "bool",
    "list",
    "dict",
    "tuple",
    "set",
    "frozenset",
    "bytes",
    "complex",
];
const PY_KEYWORD_OPERATORS: &[&str] = &["in", "not", "and", "or", "is"];

/// Category of a lexeme in the given language. Total: every string maps to
/// exactly one category.
pub fn categorize(text: &str, language: Language) -> TokenCategory {
    if language == Language::Python && matches!(text, NEWLINE | INDENT | UNIND) {
        return TokenCategory::Others;
    }
    type Tables = [&'static [&'static str]; 5];
    let [control, types, modifiers, keyword_ops, others]: Tables = match language {
        Language::C => [C_CONTROL, C_TYPES, C_MODIFIERS, C_KEYWORD_OPERATORS, &[]],
        Language::Java => [
            JAVA_CONTROL,
            JAVA_TYPES,
            JAVA_MODIFIERS,
            JAVA_KEYWORD_OPERATORS,
            JAVA_OTHERS,
        ],
        Language::Python => [PY_CONTROL, PY_TYPES, &[], PY_KEYWORD_OPERATORS, &[]],
    };
    if control.contains(&text) {
        TokenCategory::ControlFlow
    } else if types.contains(&text) {
        TokenCategory::Datatypes
    } else if modifiers.contains(&text) {
        TokenCategory::Modifiers
    } else if keyword_ops.contains(&text) {
        TokenCategory::Operators
    } else if others.contains(&text) {
        TokenCategory::Others
    } else if language == Language::C && C_NUMBER_PLACEHOLDERS.contains(&text) {
        TokenCategory::Digits
    } else {
        categorize_shape(text, language)
    }
}

fn categorize_shape(text: &str, language: Language) -> TokenCategory {
    let Some(first) = text.chars().next() else {
        return TokenCategory::Others;
    };
    if first.is_ascii_digit()
        || (first == '.' && text.len() > 1 && text[1..].starts_with(|c: char| c.is_ascii_digit()))
    {
        return TokenCategory::Digits;
    }
    if first == '_' || first == '$' || first.is_alphabetic() {
        // string literals with a prefix (python r'', b'') start alphabetic
        if language == Language::Python && text.ends_with(['"', '\'']) {
            return TokenCategory::Others;
        }
        if is_reserved_word(text, language) {
            return TokenCategory::Others;
        }
        return TokenCategory::Identifiers;
    }
    match text {
        ";" => TokenCategory::Others,
        "@" if language == Language::Java => TokenCategory::Others,
        _ if first == '"' || first == '\'' => TokenCategory::Others,
        _ => TokenCategory::Operators,
    }
}

/// Keywords that are not in any named category.
fn is_reserved_word(text: &str, language: Language) -> bool {
    let words: &[&str] = match language {
        Language::C => &["typedef"],
        Language::Java => &[
            "class",
            "interface",
            "enum",
            "extends",
            "implements",
            "import",
            "package",
            "throws",
            "null",
            "true",
            "false",
            "var",
            "assert",
            "record",
            "permits",
            "non",
        ],
        Language::Python => &[
            "def", "class", "import", "from", "as", "with", "pass", "lambda", "global", "nonlocal",
            "del", "assert", "async", "await", "True", "False",
        ],
    };
    words.contains(&text)
}

impl Token {
    pub fn categorize(&self, language: Language) -> TokenCategory {
        categorize(&self.text, language)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenCategory::*;

    #[test]
    fn examples() {
        assert_eq!(categorize("if", Language::C), ControlFlow);
        assert_eq!(categorize("String", Language::Java), Datatypes);
        assert_eq!(categorize("0", Language::Python), Digits);
        assert_eq!(categorize("qname", Language::Java), Identifiers);
    }

    #[test]
    fn literals_and_layout() {
        assert_eq!(categorize("\"abc\"", Language::C), Others);
        assert_eq!(categorize("'a'", Language::Java), Others);
        assert_eq!(categorize("rb'x'", Language::Python), Others);
        assert_eq!(categorize("NEWLINE", Language::Python), Others);
        assert_eq!(categorize("NEWLINE", Language::C), Identifiers);
        assert_eq!(categorize("3.5f", Language::Java), Digits);
        assert_eq!(categorize(".5", Language::C), Digits);
    }

    #[test]
    fn punctuation_is_operator_except_statement_terminator() {
        for op in ["(", ")", "{", ",", "->", "::", "..."] {
            assert_eq!(categorize(op, Language::Java), Operators, "{op}");
        }
        assert_eq!(categorize(";", Language::C), Others);
        assert_eq!(categorize("@", Language::Java), Others);
        assert_eq!(categorize("@", Language::Python), Operators);
    }

    #[test]
    fn keyword_operators() {
        assert_eq!(categorize("sizeof", Language::C), Operators);
        assert_eq!(categorize("instanceof", Language::Java), Operators);
        assert_eq!(categorize("not", Language::Python), Operators);
        assert_eq!(categorize("lambda", Language::Python), Others);
    }
}
