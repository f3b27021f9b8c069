//! Segmentation of mixed word/math text and the three token granularities.
//!
//! Math regions are delimited by `$…$`, `$$…$$`, `\(…\)` or `\[…\]`. Outside
//! math, text splits into words (alphanumeric runs, optionally joined by an
//! inner apostrophe or hyphen) and single punctuation characters.
//!
//! Under [`Strategy::TokenisedExpression`] a math region is split into:
//! LaTeX commands (`\` plus a letter run, or `\` plus one other character),
//! alphanumeric atoms (numbers may contain a decimal point), and every other
//! non-whitespace character as its own token. Braces, brackets, arithmetic
//! operators and the relations `= < > ≤ ≥ ≠` are therefore single tokens.
//! A region made only of alphanumerics yields one token, identical to the
//! region's token under [`Strategy::ExpressionAsWord`].

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Each math region is a single token.
    #[serde(rename = "expr-word")]
    ExpressionAsWord,
    /// Math regions split into operators, relations, braces, commands and atoms.
    #[serde(rename = "tokenised")]
    TokenisedExpression,
    /// The whole text as a sequence of characters.
    #[serde(rename = "char")]
    CharLevel,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::ExpressionAsWord,
        Strategy::TokenisedExpression,
        Strategy::CharLevel,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::ExpressionAsWord => "expr-word",
            Strategy::TokenisedExpression => "tokenised",
            Strategy::CharLevel => "char",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "expr-word" => Ok(Strategy::ExpressionAsWord),
            "tokenised" | "tokenized" => Ok(Strategy::TokenisedExpression),
            "char" => Ok(Strategy::CharLevel),
            other => Err(Error::Config(format!(
                "unknown tokenization strategy {other:?} (expected expr-word, tokenised or char)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SegmentKind {
    Word,
    MathRegion,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub content: String,
    /// Byte range of `content` in the source.
    pub span: Range<usize>,
    /// Byte range including delimiters; equals `span` for words.
    pub outer: Range<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    pub warnings: Vec<String>,
}

impl Segmentation {
    /// Byte ranges of math delimiters in the source.
    pub fn delimiter_spans(&self) -> Vec<Range<usize>> {
        let mut spans = Vec::new();
        for seg in self.segments.iter().filter(|s| s.kind == SegmentKind::MathRegion) {
            if seg.outer.start < seg.span.start {
                spans.push(seg.outer.start..seg.span.start);
            }
            if seg.span.end < seg.outer.end {
                spans.push(seg.span.end..seg.outer.end);
            }
        }
        spans
    }
}

fn is_word_joiner(c: char) -> bool {
    matches!(c, '\'' | '’' | '-')
}

/// Finds the closing delimiter starting at byte `from`, skipping
/// backslash-escaped characters. Returns the byte index of the closer.
fn find_closer(text: &str, from: usize, closer: &str) -> Option<usize> {
    let bytes = text.as_bytes();
    let mut i = from;
    while i < bytes.len() {
        if text[i..].starts_with(closer) {
            return Some(i);
        }
        if bytes[i] == b'\\' && closer != "\\)" && closer != "\\]" {
            // skip the escaped character
            i += 1;
            if i < bytes.len() {
                i += text[i..].chars().next().map_or(1, char::len_utf8);
            }
            continue;
        }
        i += text[i..].chars().next().map_or(1, char::len_utf8);
    }
    None
}

/// End (exclusive) of the `$…$` or `$$…$$` region opening at byte `start`,
/// or `None` when it is never closed.
pub(crate) fn dollar_region_end(text: &str, start: usize) -> Option<usize> {
    let delim = if text[start..].starts_with("$$") { "$$" } else { "$" };
    find_closer(text, start + delim.len(), delim).map(|end| end + delim.len())
}

pub fn segment(text: &str) -> Segmentation {
    let mut out = Segmentation::default();
    let mut i = 0;
    while i < text.len() {
        let rest = &text[i..];
        let c = rest.chars().next().unwrap();

        let opener = if rest.starts_with("$$") {
            Some(("$$", "$$"))
        } else if c == '$' {
            Some(("$", "$"))
        } else if rest.starts_with("\\(") {
            Some(("\\(", "\\)"))
        } else if rest.starts_with("\\[") {
            Some(("\\[", "\\]"))
        } else {
            None
        };

        if let Some((open, close)) = opener {
            let content_start = i + open.len();
            let (content_end, outer_end) = match find_closer(text, content_start, close) {
                Some(end) => (end, end + close.len()),
                None => {
                    out.warnings.push(format!(
                        "unbalanced math delimiter {open:?} at byte {i}; region closed at end of text"
                    ));
                    (text.len(), text.len())
                }
            };
            out.segments.push(Segment {
                kind: SegmentKind::MathRegion,
                content: text[content_start..content_end].to_string(),
                span: content_start..content_end,
                outer: i..outer_end,
            });
            i = outer_end;
            continue;
        }

        if c.is_whitespace() {
            i += c.len_utf8();
            continue;
        }

        if c == '\\' && rest[1..].starts_with('$') {
            // escaped dollar outside math is plain punctuation
            out.segments.push(Segment {
                kind: SegmentKind::Word,
                content: "$".into(),
                span: i + 1..i + 2,
                outer: i..i + 2,
            });
            i += 2;
            continue;
        }

        if c.is_alphanumeric() {
            let mut end = i + c.len_utf8();
            let mut chars = text[end..].char_indices().peekable();
            while let Some((off, ch)) = chars.next() {
                if ch.is_alphanumeric() {
                    end = i + c.len_utf8() + off + ch.len_utf8();
                } else if is_word_joiner(ch) {
                    match chars.peek() {
                        Some((_, next)) if next.is_alphanumeric() => continue,
                        _ => break,
                    }
                } else {
                    break;
                }
            }
            out.segments.push(Segment {
                kind: SegmentKind::Word,
                content: text[i..end].to_string(),
                span: i..end,
                outer: i..end,
            });
            i = end;
            continue;
        }

        let end = i + c.len_utf8();
        out.segments.push(Segment {
            kind: SegmentKind::Word,
            content: c.to_string(),
            span: i..end,
            outer: i..end,
        });
        i = end;
    }
    out
}

/// Splits the content of one math region into operator-level tokens.
pub fn tokenize_math(content: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut chars = content.char_indices().peekable();
    while let Some((start, c)) = chars.next() {
        if c.is_whitespace() {
            continue;
        }
        if c == '\\' {
            match chars.peek().copied() {
                Some((_, n)) if n.is_ascii_alphabetic() => {
                    let mut end = start + 1;
                    while let Some(&(off, n)) = chars.peek() {
                        if n.is_ascii_alphabetic() {
                            end = off + n.len_utf8();
                            chars.next();
                        } else {
                            break;
                        }
                    }
                    tokens.push(content[start..end].to_string());
                }
                Some((off, n)) => {
                    chars.next();
                    tokens.push(content[start..off + n.len_utf8()].to_string());
                }
                None => tokens.push("\\".into()),
            }
            continue;
        }
        if c.is_alphanumeric() {
            let numeric = c.is_ascii_digit();
            let mut end = start + c.len_utf8();
            while let Some(&(off, n)) = chars.peek() {
                if n.is_alphanumeric() {
                    end = off + n.len_utf8();
                    chars.next();
                } else if numeric && n == '.' && content[off + 1..].starts_with(|d: char| d.is_ascii_digit()) {
                    chars.next();
                    end = off + 1;
                } else {
                    break;
                }
            }
            tokens.push(content[start..end].to_string());
            continue;
        }
        tokens.push(c.to_string());
    }
    tokens
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenStream {
    pub source_id: String,
    pub strategy: Strategy,
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tokenizer {
    pub strategy: Strategy,
    /// Keep math delimiters in character-level streams.
    pub keep_delimiters: bool,
}

impl Tokenizer {
    pub fn new(strategy: Strategy) -> Self {
        Tokenizer {
            strategy,
            keep_delimiters: true,
        }
    }

    pub fn with_delimiters(mut self, keep: bool) -> Self {
        self.keep_delimiters = keep;
        self
    }

    pub fn tokens(&self, text: &str) -> Vec<String> {
        let segmentation = segment(text);
        match self.strategy {
            Strategy::CharLevel => {
                if self.keep_delimiters {
                    text.chars().map(String::from).collect()
                } else {
                    let delims = segmentation.delimiter_spans();
                    text.char_indices()
                        .filter(|(i, _)| !delims.iter().any(|r| r.contains(i)))
                        .map(|(_, c)| String::from(c))
                        .collect()
                }
            }
            Strategy::ExpressionAsWord | Strategy::TokenisedExpression => {
                let mut tokens = Vec::new();
                for seg in segmentation.segments {
                    match seg.kind {
                        SegmentKind::Word => tokens.push(seg.content.to_lowercase()),
                        SegmentKind::MathRegion if self.strategy == Strategy::ExpressionAsWord => {
                            let trimmed = seg.content.trim();
                            if !trimmed.is_empty() {
                                tokens.push(trimmed.to_string());
                            }
                        }
                        SegmentKind::MathRegion => tokens.extend(tokenize_math(&seg.content)),
                    }
                }
                tokens
            }
        }
    }

    pub fn stream(&self, source_id: &str, text: &str) -> TokenStream {
        TokenStream {
            source_id: source_id.to_string(),
            strategy: self.strategy,
            tokens: self.tokens(text),
        }
    }
}

/// Tokens of `text` under `strategy` with default options.
pub fn tokenize(text: &str, strategy: Strategy) -> Vec<String> {
    Tokenizer::new(strategy).tokens(text)
}
