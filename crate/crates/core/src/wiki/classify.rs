use serde::{Deserialize, Serialize};

use super::RawPage;
use crate::corpus::EntryKind;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PageKind {
    Definition,
    Theorem,
    /// `derived_from` is the title of the result the lemma belongs to, when
    /// the title says so (`X/Lemma`).
    Lemma {
        derived_from: Option<String>,
    },
    Corollary {
        derived_from: String,
    },
    Excluded {
        reason: String,
    },
}

impl PageKind {
    pub fn entry_kind(&self) -> Option<EntryKind> {
        match self {
            PageKind::Definition => Some(EntryKind::Definition),
            PageKind::Theorem => Some(EntryKind::Theorem),
            PageKind::Lemma { .. } => Some(EntryKind::Lemma),
            PageKind::Corollary { .. } => Some(EntryKind::Corollary),
            PageKind::Excluded { .. } => None,
        }
    }

    fn excluded(reason: impl Into<String>) -> Self {
        PageKind::Excluded { reason: reason.into() }
    }
}

fn is_redirect(wikitext: &str) -> bool {
    wikitext
        .trim_start()
        .get(..9)
        .is_some_and(|s| s.eq_ignore_ascii_case("#redirect"))
}

/// Strips a trailing ` 2`, ` 3`, … from a title segment.
fn strip_ordinal(segment: &str) -> &str {
    let trimmed = segment.trim_end_matches(|c: char| c.is_ascii_digit());
    if trimmed.len() < segment.len() {
        trimmed.trim_end()
    } else {
        segment
    }
}

/// Classifies a page by namespace, title shape and a few structural markers.
///
/// | page | kind |
/// |---|---|
/// | any namespace other than main and `Definition` | Excluded |
/// | redirect or disambiguation page | Excluded |
/// | `…/Proof`, `…/Proof N` subpage | Excluded (transcluded into its parent) |
/// | `Definition:…` | Definition |
/// | `X/Corollary`, `X/Corollary N` | Corollary of `X` |
/// | `X/Lemma`, `X/Lemma N` | Lemma of `X` |
/// | last title word `Lemma` | Lemma |
/// | other main-namespace page | Theorem |
pub fn classify_page(page: &RawPage) -> PageKind {
    let ns = page.namespace.as_str();
    if !(ns.is_empty() || ns.eq_ignore_ascii_case("Definition")) {
        return PageKind::excluded(format!("namespace {ns}"));
    }
    if is_redirect(&page.wikitext) {
        return PageKind::excluded("redirect");
    }
    if page.wikitext.to_lowercase().contains("{{disambiguation") {
        return PageKind::excluded("disambiguation page");
    }

    let title = page.title.trim();
    let (parent, last) = match title.rsplit_once('/') {
        Some((parent, last)) => (Some(parent.trim()), last.trim()),
        None => (None, title),
    };
    let last_kind = strip_ordinal(last);

    if parent.is_some() && last_kind.eq_ignore_ascii_case("Proof") {
        return PageKind::excluded("proof subpage");
    }
    if ns.eq_ignore_ascii_case("Definition") {
        return PageKind::Definition;
    }
    if let Some(parent) = parent.filter(|p| !p.is_empty()) {
        if last_kind.eq_ignore_ascii_case("Corollary") {
            return PageKind::Corollary {
                derived_from: parent.to_string(),
            };
        }
        if last_kind.eq_ignore_ascii_case("Lemma") {
            return PageKind::Lemma {
                derived_from: Some(parent.to_string()),
            };
        }
    }
    if strip_ordinal(title)
        .split_whitespace()
        .last()
        .is_some_and(|w| w.eq_ignore_ascii_case("Lemma"))
    {
        return PageKind::Lemma { derived_from: None };
    }
    PageKind::Theorem
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kind(title: &str) -> PageKind {
        classify_page(&RawPage::new(title, "== Theorem ==\ntext"))
    }

    #[test]
    fn definitions_by_namespace() {
        assert_eq!(kind("Definition:Real Function"), PageKind::Definition);
        assert_eq!(kind("Definition:Group/Also known as"), PageKind::Definition);
    }

    #[test]
    fn non_content_namespaces_are_excluded() {
        for title in [
            "User:Prime.mover",
            "Talk:Euclid's Lemma",
            "Help:Editing",
            "Category:Analysis",
            "Template:Eqn",
            "Definition talk:Set",
        ] {
            assert!(matches!(kind(title), PageKind::Excluded { .. }), "{title}");
        }
        let page = RawPage {
            title: "Sandbox".into(),
            wikitext: "x".into(),
            namespace: "User".into(),
        };
        assert!(matches!(classify_page(&page), PageKind::Excluded { .. }));
    }

    #[test]
    fn corollaries_and_lemmas_from_titles() {
        assert_eq!(
            kind("Fermat's Little Theorem/Corollary 1"),
            PageKind::Corollary {
                derived_from: "Fermat's Little Theorem".into()
            }
        );
        assert_eq!(
            kind("Bezout's Identity/Lemma"),
            PageKind::Lemma {
                derived_from: Some("Bezout's Identity".into())
            }
        );
        assert_eq!(kind("Euclid's Lemma"), PageKind::Lemma { derived_from: None });
        assert_eq!(kind("Zorn's Lemma 2"), PageKind::Lemma { derived_from: None });
        assert_eq!(kind("Lemma of Gauss"), PageKind::Theorem);
    }

    #[test]
    fn everything_else_in_main_is_a_theorem() {
        assert_eq!(kind("Cauchy's Mean Theorem"), PageKind::Theorem);
        assert_eq!(
            kind("Sum of Sequence of Squares/Proof 2"),
            PageKind::Excluded {
                reason: "proof subpage".into()
            }
        );
    }

    #[test]
    fn redirects_and_disambiguation_excluded() {
        let r = RawPage::new("Definition:Reals", "#REDIRECT [[Definition:Real Number]]");
        assert_eq!(
            classify_page(&r),
            PageKind::Excluded {
                reason: "redirect".into()
            }
        );
        let d = RawPage::new("Cantor's Theorem", "{{Disambiguation}}\n* [[A]]");
        assert!(matches!(classify_page(&d), PageKind::Excluded { .. }));
    }
}
