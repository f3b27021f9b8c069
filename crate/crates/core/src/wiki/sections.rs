use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::clean::{CleanText, LinkAnnotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectionRole {
    Statement,
    /// Zero-based index among the page's proofs.
    Proof(usize),
    /// Commentary such as historical notes or sources; never mined for premises.
    Satellite,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageSection {
    pub heading: String,
    pub body: String,
    pub section_role: SectionRole,
    /// Links inside `body`, spans relative to `body`.
    pub links: Vec<LinkAnnotation>,
}

static HEADING_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^(=+) (.+?) (=+)$").unwrap());

const STATEMENT_HEADINGS: &[&str] = &[
    "theorem",
    "definition",
    "lemma",
    "corollary",
    "statement",
    "proposition",
    "axiom",
    "conjecture",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HeadingClass {
    Statement,
    Proof,
    Satellite,
}

fn classify_heading(heading: &str) -> HeadingClass {
    let lower = heading.trim().to_lowercase();
    let first = lower.split_whitespace().next().unwrap_or("");
    if first == "proof" {
        return HeadingClass::Proof;
    }
    if STATEMENT_HEADINGS.contains(&first) && lower.split_whitespace().count() <= 2 {
        return HeadingClass::Statement;
    }
    HeadingClass::Satellite
}

/// Splits cleaned text at its headings.
///
/// Headings starting with "Proof" become consecutive `Proof(i)` sections;
/// "Theorem", "Definition", "Lemma", "Corollary" (optionally numbered) and
/// text before the first heading are statements; anything else is
/// satellite. A deeper heading under a statement or proof stays inside it
/// unless it names a new role itself.
pub fn split_sections(clean: &CleanText) -> Vec<PageSection> {
    let text = &clean.text;
    struct Raw {
        heading: String,
        role: SectionRole,
        level: usize,
        start: usize,
        end: usize,
    }
    let mut raws: Vec<Raw> = Vec::new();
    let mut preamble_end = text.len();

    for caps in HEADING_LINE.captures_iter(text) {
        let whole = caps.get(0).unwrap();
        let level = caps[1].len().min(caps[3].len());
        let heading = caps[2].trim().to_string();
        let class = classify_heading(&heading);
        if raws.is_empty() {
            preamble_end = whole.start();
        }
        if let Some(current) = raws.last() {
            let nested = level > current.level && current.role != SectionRole::Satellite;
            if nested && class == HeadingClass::Satellite {
                continue;
            }
        }
        if let Some(current) = raws.last_mut() {
            current.end = whole.start();
        }
        let role = match class {
            HeadingClass::Statement => SectionRole::Statement,
            HeadingClass::Proof => SectionRole::Proof(0),
            HeadingClass::Satellite => SectionRole::Satellite,
        };
        let body_start = (whole.end() + 1).min(text.len());
        raws.push(Raw {
            heading,
            role,
            level,
            start: body_start,
            end: text.len(),
        });
    }

    let mut sections = Vec::new();
    let mut proof_count = 0;
    let mut push = |heading: String, role: SectionRole, start: usize, end: usize| {
        let raw_body = &text[start..end];
        let lead = raw_body.len() - raw_body.trim_start().len();
        let body = raw_body.trim().to_string();
        let role = match role {
            // an empty proof heading only introduces nested proofs
            SectionRole::Proof(_) if body.is_empty() => return,
            SectionRole::Proof(_) => {
                proof_count += 1;
                SectionRole::Proof(proof_count - 1)
            }
            other => other,
        };
        let body_start = start + lead;
        let body_end = body_start + body.len();
        let links = clean
            .links
            .iter()
            .filter(|l| l.span.start >= body_start && l.span.end <= body_end)
            .map(|l| LinkAnnotation {
                target: l.target.clone(),
                anchor: l.anchor.clone(),
                span: l.span.start - body_start..l.span.end - body_start,
            })
            .collect();
        sections.push(PageSection {
            heading,
            body,
            section_role: role,
            links,
        });
    };

    let preamble = &text[..preamble_end];
    if !preamble.trim().is_empty() || raws.is_empty() {
        push(String::new(), SectionRole::Statement, 0, preamble_end);
    }
    for raw in raws {
        push(raw.heading, raw.role, raw.start, raw.end);
    }
    sections
}
