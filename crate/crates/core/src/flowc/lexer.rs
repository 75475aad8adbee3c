use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::FlowError;

/// Byte offset plus 1-based line/column (columns count characters).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub offset: u32,
    pub len: u32,
    pub line: u32,
    pub column: u32,
}

impl Span {
    /// Smallest span covering both.
    pub fn to(self, end: Span) -> Span {
        Span {
            offset: self.offset,
            len: (end.offset + end.len).saturating_sub(self.offset),
            line: self.line,
            column: self.column,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Keyword,
    Ident,
    Int,
    Str,
    Punct,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Exact source text, quotes and `//` included.
    pub text: String,
    pub span: Span,
}

impl Token {
    pub fn is(&self, kind: TokenKind, text: &str) -> bool {
        self.kind == kind && self.text == text
    }
}

pub const KEYWORDS: &[&str] = &[
    "void", "int", "str", "fn", "record", "static", "new", "delete", "return", "if", "else",
    "while", "goto", "break", "continue", "try", "catch", "throw", "spawn",
];

const PUNCT2: &[&str] = &["=="];
const PUNCT1: &[char] = &[
    '(', ')', '{', '}', '[', ']', ';', ',', '=', '+', '-', '<', '*', '&', '.', ':',
];

/// Splits source into tokens (longest match). Whitespace is dropped and
/// recoverable from the spans; comments are kept.
pub fn tokenize(source: &str) -> Result<Vec<Token>, FlowError> {
    let mut out = Vec::new();
    let bytes: Vec<(usize, char)> = source.char_indices().collect();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;
    let end_offset = source.len();
    let offset_at = |i: usize| bytes.get(i).map_or(end_offset, |b| b.0);

    while i < bytes.len() {
        let c = bytes[i].1;
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        let start_span = |i_end: usize| Span {
            offset: offset_at(start) as u32,
            len: (offset_at(i_end) - offset_at(start)) as u32,
            line,
            column: col,
        };

        let kind;
        if c == '/' && bytes.get(i + 1).map(|b| b.1) == Some('/') {
            while i < bytes.len() && bytes[i].1 != '\n' {
                i += 1;
            }
            kind = TokenKind::Comment;
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].1.is_ascii_alphanumeric() || bytes[i].1 == '_') {
                i += 1;
            }
            let word = &source[offset_at(start)..offset_at(i)];
            kind = if KEYWORDS.contains(&word) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            };
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].1.is_ascii_digit() {
                i += 1;
            }
            kind = TokenKind::Int;
        } else if c == '"' {
            i += 1;
            loop {
                match bytes.get(i).map(|b| b.1) {
                    None | Some('\n') => {
                        return Err(FlowError {
                            span: start_span(i),
                            message: "unterminated string literal".into(),
                        });
                    }
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => i += 2,
                    Some(_) => i += 1,
                }
            }
            kind = TokenKind::Str;
        } else {
            let rest = &source[offset_at(i)..];
            if let Some(p) = PUNCT2.iter().find(|p| rest.starts_with(**p)) {
                i += p.len();
            } else if PUNCT1.contains(&c) {
                i += 1;
            } else {
                return Err(FlowError {
                    span: start_span(i + 1),
                    message: format!("illegal character {c:?}"),
                });
            }
            kind = TokenKind::Punct;
        }
        let span = start_span(i);
        out.push(Token {
            kind,
            text: String::from(&source[offset_at(start)..offset_at(i)]),
            span,
        });
        col += (i - start) as u32;
    }
    Ok(out)
}

/// Rebuilds the source from tokens, taking the gaps between them from
/// `source` (they are whitespace).
pub fn reconstruct(source: &str, tokens: &[Token]) -> String {
    let mut out = String::new();
    let mut pos = 0usize;
    for t in tokens {
        let start = t.span.offset as usize;
        out.push_str(&source[pos..start]);
        out.push_str(&t.text);
        pos = start + t.span.len as usize;
    }
    out.push_str(&source[pos..]);
    out
}

/// Decodes the body of a string literal token.
pub fn unescape(literal: &str) -> String {
    let inner = &literal[1..literal.len() - 1];
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some(other) => out.push(other),
                None => {}
            }
        } else {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(src: &str) -> Vec<String> {
        tokenize(src).unwrap().into_iter().map(|t| t.text).collect()
    }

    #[test]
    fn constructor_declaration() {
        assert_eq!(texts("arg a(5);"), ["arg", "a", "(", "5", ")", ";"]);
    }

    #[test]
    fn empty_source() {
        assert!(tokenize("").unwrap().is_empty());
    }

    #[test]
    fn indirect_call() {
        let toks = tokenize("(*fp)(5);").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| (t.kind, t.text.as_str())).collect();
        assert_eq!(
            kinds,
            [
                (TokenKind::Punct, "("),
                (TokenKind::Punct, "*"),
                (TokenKind::Ident, "fp"),
                (TokenKind::Punct, ")"),
                (TokenKind::Punct, "("),
                (TokenKind::Int, "5"),
                (TokenKind::Punct, ")"),
                (TokenKind::Punct, ";"),
            ]
        );
    }

    #[test]
    fn comments_and_spans() {
        let src = "int x; // keep\n  x == 1";
        let toks = tokenize(src).unwrap();
        assert_eq!(toks[3].kind, TokenKind::Comment);
        assert_eq!(toks[3].text, "// keep");
        let eq = &toks[5];
        assert_eq!(eq.text, "==");
        assert_eq!((eq.span.line, eq.span.column), (2, 5));
        assert_eq!(reconstruct(src, &toks), src);
    }

    #[test]
    fn lexical_errors() {
        let e = tokenize("str s = \"abc;\n").unwrap_err();
        assert_eq!(e.message, "unterminated string literal");
        assert_eq!((e.span.line, e.span.column), (1, 9));
        let e = tokenize("int x = 1 $ 2;").unwrap_err();
        assert_eq!(e.span.column, 11);
        assert!(e.message.contains("illegal"));
    }

    #[test]
    fn string_escapes() {
        let toks = tokenize(r#""a\"b\\c\n""#).unwrap();
        assert_eq!(unescape(&toks[0].text), "a\"b\\c\n");
    }
}
