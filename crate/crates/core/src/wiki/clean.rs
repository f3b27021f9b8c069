//! Wikitext cleaning.
//!
//! Standard markup (emphasis, lists, comments, references, formatting tags,
//! external links) is stripped. Headings are kept in a normalized
//! `== Heading ==` form because section splitting needs them. Math
//! (`$…$`, `$$…$$`, `<math>…</math>`) is copied verbatim, the last form
//! rewritten with dollar delimiters. Internal links become their anchor
//! text plus a [`LinkAnnotation`]; category links are collected separately.
//!
//! Templates are handled by name:
//! - `{{:Page}}` / `{{:Page|passage}}` and `{{Page|passage}}` naming an
//!   existing page are transclusions of the named passage (see
//!   [`extract_passage`]);
//! - `{{eqn|l=…|o=…|r=…|c=…}}` renders as `$l o r$ c`;
//! - layout, maintenance and citation templates are removed (maintenance
//!   tag names are recorded);
//! - anything else is kept verbatim with a warning.

use std::ops::Range;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{PageLookup, RawPage};
use crate::corpus::entry_id;
use crate::error::{Error, Result};
use crate::tokenize::dollar_region_end;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkAnnotation {
    /// Link target with any `#fragment` removed.
    pub target: String,
    pub anchor: String,
    /// Byte range of the anchor text in [`CleanText::text`].
    pub span: Range<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanText {
    pub text: String,
    pub links: Vec<LinkAnnotation>,
    pub categories: Vec<String>,
    /// Lowercased names of maintenance templates found on the page.
    pub maintenance_tags: Vec<String>,
    pub redirect: Option<String>,
    pub warnings: Vec<String>,
}

const LAYOUT_TEMPLATES: &[&str] = &[
    "begin-eqn",
    "end-eqn",
    "begin-axiom",
    "end-axiom",
    "begin-proof",
    "end-proof",
    "qed",
    "eqnref",
];

const MAINTENANCE_TEMPLATES: &[&str] = &[
    "wip",
    "refactor",
    "tidy",
    "proofread",
    "stub",
    "explain",
    "missinglinks",
    "missing links",
    "link wanted",
    "linkwanted",
    "citation needed",
    "improve",
    "questionable",
    "delete",
    "proof wanted",
    "proofwanted",
    "disambiguation",
    "mergeto",
    "merge",
    "rename",
    "expand",
    "finish",
    "review",
    "incomplete",
    "mistake",
];

const CITATION_TEMPLATES: &[&str] = &[
    "bookreference",
    "booklink",
    "citation",
    "mathworld",
    "planetmath",
    "wikipedia",
    "mactutor",
    "mactutor biography",
    "namedfor",
    "namedfordef",
    "sourcereference",
    "sourcework",
];

static HEADING: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(=+)\s*(.*?)\s*(=+)\s*$").unwrap());
static REDIRECT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^#redirect\s*:?\s*\[\[([^\]|#]+)(?:#[^\]|]*)?(?:\|[^\]]*)?\]\]").unwrap());
static HTML_TAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^<(/?)([A-Za-z][A-Za-z0-9]*)((?:\s[^<>]*?)?)(/?)>").unwrap());
static MAGIC_WORD: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^__[A-Z]+__").unwrap());
static ONLYINCLUDE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<onlyinclude>(.*?)</onlyinclude>").unwrap());
static NOINCLUDE_BLOCK: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?is)<noinclude>.*?</noinclude>").unwrap());

/// The passage of `wikitext` that a transclusion pulls in.
///
/// A named passage lies between `<section begin=NAME/>` and
/// `<section end=NAME/>`. Without a name, `<onlyinclude>` content is used
/// when present, otherwise the whole page minus `<noinclude>` blocks.
pub fn extract_passage(wikitext: &str, passage: Option<&str>) -> Option<String> {
    match passage {
        Some(name) => {
            let name = regex::escape(name.trim());
            let begin = Regex::new(&format!(r#"(?i)<section\s+begin\s*=\s*["']?{name}["']?\s*/?>"#)).ok()?;
            let end = Regex::new(&format!(r#"(?i)<section\s+end\s*=\s*["']?{name}["']?\s*/?>"#)).ok()?;
            let start = begin.find(wikitext)?.end();
            let stop = end.find_at(wikitext, start)?.start();
            Some(wikitext[start..stop].trim().to_string())
        }
        None => {
            let parts: Vec<&str> = ONLYINCLUDE
                .captures_iter(wikitext)
                .map(|c| c.get(1).unwrap().as_str())
                .collect();
            if parts.is_empty() {
                Some(NOINCLUDE_BLOCK.replace_all(wikitext, "").trim().to_string())
            } else {
                Some(parts.concat().trim().to_string())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Top-level page text.
    Page,
    /// A passage pulled in by transclusion.
    Transcluded,
    /// Anchor text or template argument; no line-start markup.
    Inline,
}

struct Cleaner<'a> {
    resolver: &'a dyn PageLookup,
    out: String,
    links: Vec<LinkAnnotation>,
    categories: Vec<String>,
    maintenance_tags: Vec<String>,
    warnings: Vec<String>,
    redirect: Option<String>,
    /// Titles currently being expanded, outermost first.
    stack: Vec<String>,
}

fn remove_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let mut rest = src;
    while let Some(start) = rest.find("<!--") {
        out.push_str(&rest[..start]);
        match rest[start + 4..].find("-->") {
            Some(end) => rest = &rest[start + 4 + end + 3..],
            None => {
                rest = "";
            }
        }
    }
    out.push_str(rest);
    out
}

/// Index just past the `close` matching the `open` at `start`, honouring
/// nesting and skipping math regions.
fn matching_close(src: &str, start: usize, open: &str, close: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut i = start;
    while i < src.len() {
        let rest = &src[i..];
        if rest.starts_with(open) {
            depth += 1;
            i += open.len();
        } else if rest.starts_with(close) {
            depth -= 1;
            i += close.len();
            if depth == 0 {
                return Some(i);
            }
        } else if rest.starts_with('$') && depth > 0 {
            i = dollar_region_end(src, i).unwrap_or(i + 1);
        } else {
            i += rest.chars().next().map_or(1, char::len_utf8);
        }
    }
    None
}

/// Splits template or link content on `|` at nesting depth zero.
fn split_params(body: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut last = 0;
    let mut i = 0;
    while i < body.len() {
        let rest = &body[i..];
        if rest.starts_with("{{") || rest.starts_with("[[") {
            depth += 1;
            i += 2;
        } else if (rest.starts_with("}}") || rest.starts_with("]]")) && depth > 0 {
            depth -= 1;
            i += 2;
        } else if rest.starts_with('$') {
            i = dollar_region_end(body, i).unwrap_or(i + 1);
        } else if rest.starts_with('|') && depth == 0 {
            parts.push(&body[last..i]);
            i += 1;
            last = i;
        } else {
            i += rest.chars().next().map_or(1, char::len_utf8);
        }
    }
    parts.push(&body[last..]);
    parts
}

fn named_param<'s>(params: &[&'s str], name: &str) -> Option<&'s str> {
    params.iter().find_map(|p| {
        let (key, value) = p.split_once('=')?;
        (key.trim().eq_ignore_ascii_case(name)).then(|| value.trim())
    })
}

fn normalize_template_name(name: &str) -> String {
    name.trim().replace('_', " ").to_lowercase()
}

fn strip_heading_markup(text: &str) -> String {
    let mut s = text.replace("'''", "").replace("''", "");
    while let Some(start) = s.find("[[") {
        let Some(end) = s[start..].find("]]").map(|e| start + e) else {
            break;
        };
        let inner = &s[start + 2..end];
        let anchor = inner.rsplit('|').next().unwrap_or(inner).to_string();
        s.replace_range(start..end + 2, &anchor);
    }
    s.trim().to_string()
}

impl<'a> Cleaner<'a> {
    fn new(resolver: &'a dyn PageLookup, root_title: &str) -> Self {
        Cleaner {
            resolver,
            out: String::new(),
            links: Vec::new(),
            categories: Vec::new(),
            maintenance_tags: Vec::new(),
            warnings: Vec::new(),
            redirect: None,
            stack: vec![root_title.to_string()],
        }
    }

    fn scan(&mut self, src: &str, mode: Mode) -> Result<()> {
        let mut i = 0;
        while i < src.len() {
            let at_line_start = i == 0 || src.as_bytes()[i - 1] == b'\n';
            if at_line_start && mode != Mode::Inline {
                let line_end = src[i..].find('\n').map_or(src.len(), |e| i + e);
                let line = &src[i..line_end];
                if i == 0 && mode == Mode::Page {
                    if let Some(caps) = REDIRECT.captures(line) {
                        self.redirect = Some(caps[1].trim().to_string());
                        i = line_end;
                        continue;
                    }
                }
                if let Some(caps) = HEADING.captures(line) {
                    let level = caps[1].len().min(caps[3].len());
                    let text = strip_heading_markup(&caps[2]);
                    if level >= 1 && !text.is_empty() && !text.contains('=') {
                        let bar = "=".repeat(level);
                        if !self.out.is_empty() && !self.out.ends_with('\n') {
                            self.out.push('\n');
                        }
                        self.out.push_str(&format!("{bar} {text} {bar}"));
                        i = line_end;
                        continue;
                    }
                }
                if line.trim_end().len() >= 4 && line.trim_end().chars().all(|c| c == '-') {
                    i = (line_end + 1).min(src.len());
                    continue;
                }
                let skip = line
                    .char_indices()
                    .find(|&(_, c)| !(matches!(c, ':' | '*' | '#' | ';') || (c.is_whitespace() && c != '\n')))
                    .map_or(line.len(), |(off, _)| off);
                if skip > 0 {
                    i += skip;
                    continue;
                }
            }

            let rest = &src[i..];
            let c = rest.chars().next().unwrap();

            if c == '$' {
                match dollar_region_end(src, i) {
                    Some(end) => {
                        self.out.push_str(&src[i..end]);
                        i = end;
                    }
                    None => {
                        self.out.push('$');
                        i += 1;
                    }
                }
                continue;
            }

            if rest.starts_with("{{") {
                if let Some(end) = matching_close(src, i, "{{", "}}") {
                    self.template(&src[i..end])?;
                    i = end;
                    continue;
                }
            }

            if rest.starts_with("[[") {
                if let Some(end) = matching_close(src, i, "[[", "]]") {
                    let mut trail_end = end;
                    while trail_end < src.len() && src.as_bytes()[trail_end].is_ascii_lowercase() {
                        trail_end += 1;
                    }
                    self.link(&src[i + 2..end - 2], &src[end..trail_end])?;
                    i = trail_end;
                    continue;
                }
            }

            if c == '[' && (rest[1..].starts_with("http") || rest[1..].starts_with("//")) {
                if let Some(close) = rest.find(']').filter(|&p| !rest[..p].contains('\n')) {
                    if let Some((_, label)) = rest[1..close].split_once(' ') {
                        self.scan(label.trim(), Mode::Inline)?;
                    }
                    i += close + 1;
                    continue;
                }
            }

            if c == '\'' {
                let run = rest.bytes().take_while(|&b| b == b'\'').count();
                if run >= 2 {
                    i += run;
                    continue;
                }
            }

            if c == '<' {
                if let Some(consumed) = self.html_tag(src, i, mode)? {
                    i += consumed;
                    continue;
                }
            }

            if c == '_' {
                if let Some(m) = MAGIC_WORD.find(rest) {
                    i += m.end();
                    continue;
                }
            }

            self.out.push(c);
            i += c.len_utf8();
        }
        Ok(())
    }

    /// Handles an HTML-like tag at `i`; returns bytes consumed, or `None`
    /// to emit `<` literally.
    fn html_tag(&mut self, src: &str, i: usize, mode: Mode) -> Result<Option<usize>> {
        let rest = &src[i..];
        let Some(caps) = HTML_TAG.captures(rest) else {
            return Ok(None);
        };
        let tag_len = caps[0].len();
        let closing = !caps[1].is_empty();
        let self_closing = !caps[4].is_empty();
        let name = caps[2].to_lowercase();
        let find_close = |tag: &str| -> Option<(usize, usize)> {
            let needle = format!("</{tag}>");
            let lower = rest[tag_len..].to_ascii_lowercase();
            lower.find(&needle).map(|p| (tag_len + p, tag_len + p + needle.len()))
        };
        let consumed = match name.as_str() {
            "ref" if !closing && !self_closing => find_close("ref").map_or(tag_len, |(_, end)| end),
            "ref" => tag_len,
            "br" => {
                self.out.push('\n');
                tag_len
            }
            "math" if !closing && !self_closing => match find_close("math") {
                Some((inner_end, end)) => {
                    self.out.push('$');
                    self.out.push_str(rest[tag_len..inner_end].trim());
                    self.out.push('$');
                    end
                }
                None => return Ok(None),
            },
            "nowiki" if !closing && !self_closing => match find_close("nowiki") {
                Some((inner_end, end)) => {
                    self.out.push_str(&rest[tag_len..inner_end]);
                    end
                }
                None => tag_len,
            },
            "nowiki" => tag_len,
            "includeonly" if !closing && !self_closing && mode == Mode::Page => {
                find_close("includeonly").map_or(tag_len, |(_, end)| end)
            }
            "includeonly" | "noinclude" | "onlyinclude" | "section" => tag_len,
            "span" | "div" | "sup" | "sub" | "center" | "small" | "big" | "u" | "s" | "b" | "i" | "em" | "strong"
            | "p" | "blockquote" | "font" | "tt" | "code" => tag_len,
            _ => return Ok(None),
        };
        Ok(Some(consumed))
    }

    fn link(&mut self, inner: &str, trail: &str) -> Result<()> {
        let mut parts = split_params(inner);
        let raw_target = parts.remove(0).trim();
        let lower = raw_target.to_lowercase();
        if let Some(cat) = lower.strip_prefix("category:") {
            let name = raw_target[raw_target.len() - cat.len()..].trim();
            if !name.is_empty() && !self.categories.iter().any(|c| c == name) {
                self.categories.push(name.to_string());
            }
            return Ok(());
        }
        if lower.starts_with("file:") || lower.starts_with("image:") {
            return Ok(());
        }
        let target_full = raw_target.strip_prefix(':').unwrap_or(raw_target).trim();
        let target = target_full.split('#').next().unwrap_or("").trim();

        let start = self.out.len();
        match parts.last() {
            Some(anchor) if !anchor.trim().is_empty() => self.scan(anchor.trim(), Mode::Inline)?,
            _ => self.out.push_str(target_full),
        }
        self.out.push_str(trail);
        let end = self.out.len();
        if !target.is_empty() {
            self.links.push(LinkAnnotation {
                target: target.to_string(),
                anchor: self.out[start..end].to_string(),
                span: start..end,
            });
        }
        Ok(())
    }

    fn template(&mut self, whole: &str) -> Result<()> {
        let body = &whole[2..whole.len() - 2];
        let params = split_params(body);
        let raw_name = params[0].trim();
        let args = &params[1..];

        if let Some(target) = raw_name.strip_prefix(':') {
            let passage = args.first().map(|p| p.trim()).filter(|p| !p.is_empty());
            return self.transclude(target.trim(), passage);
        }

        let name = normalize_template_name(raw_name);
        if LAYOUT_TEMPLATES.contains(&name.as_str()) || CITATION_TEMPLATES.contains(&name.as_str()) {
            return Ok(());
        }
        if MAINTENANCE_TEMPLATES.contains(&name.as_str()) {
            if !self.maintenance_tags.contains(&name) {
                self.maintenance_tags.push(name);
            }
            return Ok(());
        }
        if name == "eqn" {
            let math: Vec<&str> = ["l", "o", "r"]
                .iter()
                .filter_map(|k| named_param(args, k))
                .filter(|v| !v.is_empty())
                .collect();
            if !math.is_empty() {
                self.out.push('$');
                self.out.push_str(&math.join(" "));
                self.out.push('$');
            }
            if let Some(comment) = named_param(args, "c").filter(|c| !c.is_empty()) {
                if !math.is_empty() {
                    self.out.push(' ');
                }
                self.scan(comment, Mode::Inline)?;
            }
            return Ok(());
        }
        if name == "defof" {
            if let Some(term) = args.first().map(|a| a.trim()).filter(|a| !a.is_empty()) {
                let start = self.out.len();
                self.out.push_str("definition of ");
                self.out.push_str(term);
                let end = self.out.len();
                self.links.push(LinkAnnotation {
                    target: format!("Definition:{term}"),
                    anchor: self.out[start..end].to_string(),
                    span: start..end,
                });
            }
            return Ok(());
        }
        if self.resolver.page_text(raw_name).is_some() {
            let passage = args.first().map(|p| p.trim()).filter(|p| !p.is_empty());
            return self.transclude(raw_name, passage);
        }

        self.warnings
            .push(format!("unknown template {raw_name:?} kept verbatim"));
        self.out.push_str(whole);
        Ok(())
    }

    fn transclude(&mut self, target: &str, passage: Option<&str>) -> Result<()> {
        let target_id = entry_id(target);
        if self.stack.iter().any(|t| entry_id(t) == target_id) {
            let mut pages = self.stack.clone();
            pages.push(target.to_string());
            return Err(Error::TransclusionCycle { pages });
        }
        let Some(text) = self.resolver.page_text(target) else {
            self.warnings
                .push(format!("unresolved reference: page {target:?} not found"));
            return Ok(());
        };
        let Some(passage_text) = extract_passage(text, passage) else {
            self.warnings.push(format!(
                "unresolved reference: passage {:?} not found in {target:?}",
                passage.unwrap_or("")
            ));
            return Ok(());
        };
        let passage_text = remove_comments(&passage_text);
        self.stack.push(target.to_string());
        let result = self.scan(&passage_text, Mode::Transcluded);
        self.stack.pop();
        result
    }

    fn finish(self) -> CleanText {
        let (text, map) = normalize(&self.out);
        let links = self
            .links
            .into_iter()
            .map(|l| {
                let span = map[l.span.start]..map[l.span.end].max(map[l.span.start]);
                LinkAnnotation {
                    anchor: text[span.clone()].to_string(),
                    target: l.target,
                    span,
                }
            })
            .collect();
        CleanText {
            text,
            links,
            categories: self.categories,
            maintenance_tags: self.maintenance_tags,
            redirect: self.redirect,
            warnings: self.warnings,
        }
    }
}

/// Byte mask of math regions (delimiters included).
fn math_mask(text: &str) -> Vec<bool> {
    let mut mask = vec![false; text.len()];
    let mut i = 0;
    while i < text.len() {
        if text.as_bytes()[i] == b'$' {
            if let Some(end) = dollar_region_end(text, i) {
                mask[i..end].iter_mut().for_each(|m| *m = true);
                i = end;
                continue;
            }
        }
        i += text[i..].chars().next().map_or(1, char::len_utf8);
    }
    mask
}

/// Keeps bytes where `keep` is true; returns the new text and a map from
/// every old offset (0..=len) to the new offset.
fn retain(text: &str, keep: &[bool]) -> (String, Vec<usize>) {
    let mut bytes = Vec::with_capacity(text.len());
    let mut map = Vec::with_capacity(text.len() + 1);
    for (i, b) in text.bytes().enumerate() {
        map.push(bytes.len());
        if keep[i] {
            bytes.push(b);
        }
    }
    map.push(bytes.len());
    (String::from_utf8(bytes).expect("masks cover whole characters"), map)
}

/// Removes stray emphasis quotes, trims every line and collapses blank
/// lines, returning the offset map for link spans.
fn normalize(text: &str) -> (String, Vec<usize>) {
    // pass 1: apostrophe runs of length >= 2 outside math
    let mask = math_mask(text);
    let bytes = text.as_bytes();
    let mut keep = vec![true; text.len()];
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\'' && !mask[i] {
            let run = bytes[i..].iter().take_while(|&&b| b == b'\'').count();
            if run >= 2 {
                keep[i..i + run].iter_mut().for_each(|k| *k = false);
            }
            i += run;
        } else {
            i += 1;
        }
    }
    let (first, map1) = retain(text, &keep);

    // pass 2: trim lines outside math, collapse blank lines
    let mask = math_mask(&first);
    let mut keep = vec![true; first.len()];
    let mut lines: Vec<Range<usize>> = Vec::new();
    let mut start = 0;
    for (pos, b) in first.bytes().enumerate() {
        if b == b'\n' {
            lines.push(start..pos);
            start = pos + 1;
        }
    }
    lines.push(start..first.len());

    let mut kept_lines = 0usize;
    let mut pending_blank = false;
    for (n, line) in lines.iter().enumerate() {
        let content = &first[line.clone()];
        let lead = content.len() - content.trim_start().len();
        let trail = content.len() - content.trim_end().len();
        let mut lo = line.start;
        while lo < line.start + lead && !mask[lo] {
            keep[lo] = false;
            lo += 1;
        }
        let mut hi = line.end;
        while hi > line.start + (content.len() - trail) && hi > lo && !mask[hi - 1] {
            keep[hi - 1] = false;
            hi -= 1;
        }
        let blank = (lo..hi).all(|p| !keep[p]) || lo >= hi;
        let newline = line.end; // index of '\n' after this line, if any
        let has_newline = n + 1 < lines.len();
        if blank {
            if has_newline {
                keep[newline] = false;
            }
            if kept_lines > 0 {
                pending_blank = true;
            }
        } else {
            if pending_blank {
                // re-admit one newline from the preceding blank run
                let mut p = line.start;
                while p > 0 {
                    p -= 1;
                    if first.as_bytes()[p] == b'\n' && !keep[p] {
                        keep[p] = true;
                        break;
                    }
                }
                pending_blank = false;
            }
            kept_lines += 1;
        }
    }
    // no trailing newline after the last non-blank line
    let mut last = first.len();
    while last > 0 {
        last -= 1;
        if keep[last] {
            if first.as_bytes()[last] == b'\n' {
                keep[last] = false;
                continue;
            }
            break;
        }
    }
    let (second, map2) = retain(&first, &keep);
    let map = map1.iter().map(|&m| map2[m]).collect();
    (second, map)
}

/// Cleans one page, expanding transclusions through `resolver`.
///
/// Fails only on cyclic transclusion; every other problem becomes a warning.
pub fn clean_wikitext(page: &RawPage, resolver: &dyn PageLookup) -> Result<CleanText> {
    let source = remove_comments(&page.wikitext);
    let mut cleaner = Cleaner::new(resolver, &page.title);
    cleaner.scan(&source, Mode::Page)?;
    Ok(cleaner.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wiki::{NoPages, PageStore};
    use proptest::prelude::*;

    fn clean(text: &str) -> CleanText {
        clean_wikitext(&RawPage::new("Test Page", text), &NoPages).unwrap()
    }

    #[test]
    fn transclusion_inserts_named_passage() {
        let store = PageStore::new(&[RawPage::new(
            "X",
            "Intro.\n<section begin=main/>n be prime<section end=main/>\nMore.",
        )]);
        let page = RawPage::new("Y", "Let {{X|main}} hold.");
        let out = clean_wikitext(&page, &store).unwrap();
        assert_eq!(out.text, "Let n be prime hold.");
        assert!(out.warnings.is_empty());

        let colon = clean_wikitext(&RawPage::new("Y", "Let {{:X|main}} hold."), &store).unwrap();
        assert_eq!(colon.text, "Let n be prime hold.");
    }

    #[test]
    fn transclusion_of_whole_page_uses_onlyinclude() {
        let store = PageStore::new(&[RawPage::new(
            "Lemma Page",
            "<noinclude>== Lemma ==\n</noinclude><onlyinclude>Every $n > 1$ has a [[Prime Factor]].</onlyinclude>\n== Proof ==\nskip",
        )]);
        let out = clean_wikitext(&RawPage::new("Y", "{{:Lemma Page}}"), &store).unwrap();
        assert_eq!(out.text, "Every $n > 1$ has a Prime Factor.");
        assert_eq!(out.links[0].target, "Prime Factor");
    }

    #[test]
    fn missing_transclusion_is_dropped_with_warning() {
        let out = clean("Let {{:Nowhere|main}} hold.");
        assert_eq!(out.text, "Let  hold.");
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].starts_with("unresolved reference"));

        let store = PageStore::new(&[RawPage::new("X", "no sections here")]);
        let out = clean_wikitext(&RawPage::new("Y", "a {{X|main}} b"), &store).unwrap();
        assert_eq!(out.text, "a  b");
        assert!(out.warnings[0].contains("passage"));
    }

    #[test]
    fn cyclic_transclusion_is_an_error() {
        let store = PageStore::new(&[RawPage::new("A", "see {{:B}}"), RawPage::new("B", "see {{:A}}")]);
        let err = clean_wikitext(&RawPage::new("A", "see {{:B}}"), &store).unwrap_err();
        match err {
            Error::TransclusionCycle { pages } => assert_eq!(pages, vec!["A", "B", "A"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn plain_text_is_unchanged() {
        let text = "A prime number has exactly two divisors.\n\nIt is positive.";
        assert_eq!(clean(text).text, text);
    }

    #[test]
    fn internal_links_become_annotations() {
        let out = clean("From [[Euclid's Lemma]] we get it.");
        assert_eq!(out.text, "From Euclid's Lemma we get it.");
        assert_eq!(out.links.len(), 1);
        let link = &out.links[0];
        assert_eq!(link.target, "Euclid's Lemma");
        assert_eq!(link.anchor, "Euclid's Lemma");
        assert_eq!(&out.text[link.span.clone()], "Euclid's Lemma");
    }

    #[test]
    fn piped_links_fragments_and_trails() {
        let out = clean("a [[Definition:Real Number#Axioms|real number]] and [[Integer]]s");
        assert_eq!(out.text, "a real number and Integers");
        assert_eq!(out.links[0].target, "Definition:Real Number");
        assert_eq!(out.links[0].anchor, "real number");
        assert_eq!(out.links[1].anchor, "Integers");
    }

    #[test]
    fn categories_files_and_comments_are_removed() {
        let out = clean("Text<!-- hidden -->.\n[[File:x.png|thumb]]\n[[Category:Real Analysis/Sequences]]\n[[Category:Analysis|sortkey]]");
        assert_eq!(out.text, "Text.");
        assert_eq!(out.categories, vec!["Real Analysis/Sequences", "Analysis"]);
    }

    #[test]
    fn math_is_verbatim() {
        let out = clean("Let $\\map f {{x}} = ''y''$ and <math>a^2</math>.");
        assert_eq!(out.text, "Let $\\map f {{x}} = ''y''$ and $a^2$.");
    }

    #[test]
    fn emphasis_lists_and_headings() {
        let out = clean("== '''Theorem''' ==\n:Let ''x'' be '''real'''.\n* item\n----\n===Proof 1===\n__NOTOC__done");
        assert_eq!(out.text, "== Theorem ==\nLet x be real.\nitem\n=== Proof 1 ===\ndone");
    }

    #[test]
    fn eqn_templates_render_as_math() {
        let out = clean(
            "{{begin-eqn}}\n{{eqn | l = a^{x + y} | o = = | r = a^x a^y | c = [[Exponent Combination Laws]] }}\n{{end-eqn}}\n{{qed}}",
        );
        assert_eq!(out.text, "$a^{x + y} = a^x a^y$ Exponent Combination Laws");
        assert_eq!(out.links[0].target, "Exponent Combination Laws");
    }

    #[test]
    fn maintenance_and_unknown_templates() {
        let out = clean("{{WIP}}Text {{Tidy}}{{Mystery|arg}} end{{BookReference|Some Book|1990}}");
        assert_eq!(out.maintenance_tags, vec!["wip", "tidy"]);
        assert_eq!(out.text, "Text {{Mystery|arg}} end");
        assert_eq!(out.warnings.len(), 1);
    }

    #[test]
    fn refs_and_redirects() {
        let out = clean("Claim.<ref>Smith 1999</ref> More.<ref name=\"a\" />");
        assert_eq!(out.text, "Claim. More.");
        let redirect = clean("#REDIRECT [[Definition:Real Number]]\n[[Category:Redirects]]");
        assert_eq!(redirect.redirect.as_deref(), Some("Definition:Real Number"));
        assert_eq!(redirect.text, "");
    }

    #[test]
    fn defof_links_to_definition() {
        let out = clean("By {{Defof|Prime Number}}, done.");
        assert_eq!(out.text, "By definition of Prime Number, done.");
        assert_eq!(out.links[0].target, "Definition:Prime Number");
    }

    #[test]
    fn blank_lines_collapse() {
        let out = clean("\n\n  a  \n\n\n\n b\n\n");
        assert_eq!(out.text, "a\n\nb");
    }

    #[test]
    fn extract_passage_variants() {
        let text = "<section begin=\"s\" />one<section end=\"s\" /> <noinclude>hidden</noinclude>two";
        assert_eq!(extract_passage(text, Some("s")).as_deref(), Some("one"));
        assert_eq!(extract_passage(text, Some("t")), None);
        assert_eq!(
            extract_passage(text, None).as_deref(),
            Some("<section begin=\"s\" />one<section end=\"s\" /> two")
        );
    }

    fn wiki_soup() -> impl Strategy<Value = String> {
        let piece = prop_oneof![
            "[A-Za-z]{1,7}",
            Just(" ".to_string()),
            Just("\n".to_string()),
            Just("\n\n".to_string()),
            Just("[[Foo Bar]]".to_string()),
            Just("[[Definition:Set|sets]]".to_string()),
            Just("'''".to_string()),
            Just("''".to_string()),
            Just("{{qed}}".to_string()),
            Just("{{WIP}}".to_string()),
            Just("{{Mystery|a}}".to_string()),
            Just("$x + y = z$".to_string()),
            Just("\n== Proof ==\n".to_string()),
            Just("<ref>r</ref>".to_string()),
            Just("<!-- c -->".to_string()),
            Just("\n:".to_string()),
            Just("\n* ".to_string()),
            Just(".".to_string()),
            Just("[[Category:Algebra]]".to_string()),
        ];
        proptest::collection::vec(piece, 0..25).prop_map(|v| v.concat())
    }

    proptest! {
        #[test]
        fn cleaning_is_idempotent(src in wiki_soup()) {
            let once = clean(&src);
            let twice = clean(&once.text);
            prop_assert_eq!(&twice.text, &once.text);
        }

        #[test]
        fn link_spans_match_anchors(src in wiki_soup()) {
            let out = clean(&src);
            for link in &out.links {
                prop_assert_eq!(&out.text[link.span.clone()], link.anchor.as_str());
            }
        }
    }
}
