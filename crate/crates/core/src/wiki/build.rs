use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::categories::{harmonize_categories, CategoryReport, CategoryRules};
use super::classify::{classify_page, PageKind};
use super::clean::{clean_wikitext, CleanText};
use super::facts::{extract_supporting_facts, PageIndex};
use super::sections::{split_sections, PageSection, SectionRole};
use super::{PageStore, RawPage};
use crate::corpus::{entry_id, Corpus, Entry, EntryKind, Proof};
use crate::error::{Error, Result};

/// Maintenance tags that exclude a page by default.
pub const DEFAULT_EXCLUDE_TAGS: &[&str] = &[
    "wip",
    "refactor",
    "proof wanted",
    "proofwanted",
    "delete",
    "questionable",
    "disambiguation",
    "mergeto",
];

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub rules: CategoryRules,
    pub min_count: usize,
    /// Lowercased maintenance template names; a page carrying any is excluded.
    pub exclude_tags: Vec<String>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            rules: CategoryRules::default(),
            min_count: 100,
            exclude_tags: DEFAULT_EXCLUDE_TAGS.iter().map(|t| t.to_string()).collect(),
        }
    }
}

/// Reads a tag blocklist: one tag per line, `#` starts a comment line.
pub fn read_tag_list(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageNote {
    pub title: String,
    pub message: String,
}

impl PageNote {
    fn new(title: &str, message: impl Into<String>) -> Self {
        PageNote {
            title: title.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildReport {
    pub pages_read: usize,
    pub counts_by_kind: BTreeMap<EntryKind, usize>,
    pub warnings: Vec<PageNote>,
    pub excluded: Vec<PageNote>,
    /// Link targets that match no page, by linking page title.
    pub unresolved_links: BTreeMap<String, Vec<String>>,
    pub failures: Vec<PageNote>,
    pub redirects_followed: usize,
    pub categories: CategoryReport,
}

enum Processed {
    Excluded(String),
    Failed(String),
    Redirect {
        target: String,
    },
    Content {
        kind: PageKind,
        clean: CleanText,
        sections: Vec<PageSection>,
    },
}

fn process(page: &RawPage, store: &PageStore, exclude_tags: &HashSet<&str>) -> Processed {
    let kind = classify_page(page);
    if let PageKind::Excluded { reason } = &kind {
        if reason == "redirect" {
            if let Ok(clean) = clean_wikitext(page, store) {
                if let Some(target) = clean.redirect {
                    return Processed::Redirect { target };
                }
            }
        }
        return Processed::Excluded(reason.clone());
    }
    let clean = match clean_wikitext(page, store) {
        Ok(c) => c,
        Err(e) => return Processed::Failed(e.to_string()),
    };
    if let Some(tag) = clean
        .maintenance_tags
        .iter()
        .find(|t| exclude_tags.contains(t.as_str()))
    {
        return Processed::Excluded(format!("maintenance tag {tag}"));
    }
    let sections = split_sections(&clean);
    Processed::Content { kind, clean, sections }
}

/// Runs the whole pipeline over `pages`.
///
/// Per-page work (cleaning, classification, section splitting) runs in
/// parallel; link resolution and assembly are a single pass in title order.
/// Pages that fail are left out and reported; links to them, like links to
/// excluded pages, are dropped.
pub fn build_corpus(pages: &[RawPage], config: &BuildConfig) -> Result<(Corpus, BuildReport)> {
    let mut pages: Vec<&RawPage> = pages.iter().collect();
    pages.sort_by(|a, b| a.title.cmp(&b.title));
    let owned: Vec<RawPage> = pages.iter().map(|p| (*p).clone()).collect();
    let store = PageStore::new(&owned);
    let exclude: HashSet<&str> = config.exclude_tags.iter().map(String::as_str).collect();

    let processed: Vec<Processed> = pages.par_iter().map(|p| process(p, &store, &exclude)).collect();

    let mut report = BuildReport {
        pages_read: pages.len(),
        ..Default::default()
    };

    // first pass: settle every page's kind
    let mut index = PageIndex::new();
    let mut kinds: BTreeMap<String, (EntryKind, Option<String>)> = BTreeMap::new();
    let mut seen: HashSet<String> = HashSet::new();
    let mut keep = vec![false; pages.len()];
    for (i, (page, result)) in pages.iter().zip(&processed).enumerate() {
        match result {
            Processed::Excluded(reason) => {
                index.insert_excluded(&page.title);
                report.excluded.push(PageNote::new(&page.title, reason.clone()));
            }
            Processed::Failed(message) => report.failures.push(PageNote::new(&page.title, message.clone())),
            Processed::Redirect { target } => {
                index.insert_redirect(&page.title, target);
                report
                    .excluded
                    .push(PageNote::new(&page.title, format!("redirect to {target}")));
            }
            Processed::Content { kind, clean, .. } => {
                let id = entry_id(&page.title);
                if !seen.insert(id.clone()) {
                    report.failures.push(PageNote::new(
                        &page.title,
                        format!("id {id} already taken by another page"),
                    ));
                    continue;
                }
                for w in &clean.warnings {
                    report.warnings.push(PageNote::new(&page.title, w.clone()));
                }
                let (entry_kind, parent) = match kind {
                    PageKind::Corollary { derived_from } => (EntryKind::Corollary, Some(derived_from.clone())),
                    PageKind::Lemma { derived_from } => (EntryKind::Lemma, derived_from.clone()),
                    other => (other.entry_kind().expect("content pages have an entry kind"), None),
                };
                kinds.insert(id, (entry_kind, parent));
                keep[i] = true;
            }
        }
    }

    // parents are checked against the settled kinds; a corollary without a
    // theorem to hang from is demoted to a theorem
    let base: BTreeMap<String, EntryKind> = kinds.iter().map(|(id, (k, _))| (id.clone(), *k)).collect();
    let mut settled: BTreeMap<String, (EntryKind, Option<String>)> = BTreeMap::new();
    for (id, (kind, parent)) in &kinds {
        let parent_id = parent.as_deref().map(entry_id);
        let parent_kind = parent_id.as_ref().and_then(|p| base.get(p)).copied();
        let resolved = match (kind, parent_kind) {
            (EntryKind::Corollary, Some(EntryKind::Theorem)) => (EntryKind::Corollary, parent_id),
            (EntryKind::Corollary, _) => {
                report.warnings.push(PageNote::new(
                    id,
                    format!(
                        "corollary parent {:?} is not a theorem; kept as a theorem",
                        parent.as_deref().unwrap_or("")
                    ),
                ));
                (EntryKind::Theorem, None)
            }
            (EntryKind::Lemma, Some(pk)) if pk != EntryKind::Definition => (EntryKind::Lemma, parent_id),
            (EntryKind::Lemma, _) => (EntryKind::Lemma, None),
            (k, _) => (*k, None),
        };
        settled.insert(id.clone(), resolved);
    }
    for (page, result) in pages.iter().zip(&processed) {
        if let Processed::Content { .. } = result {
            let id = entry_id(&page.title);
            if let Some((kind, _)) = settled.get(&id) {
                index.insert_entry(&page.title, *kind);
            }
        }
    }

    // second pass: premises, text and categories
    let mut entries = Vec::new();
    let mut raw_categories: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, (page, result)) in pages.iter().zip(&processed).enumerate() {
        let Processed::Content { clean, sections, .. } = result else {
            continue;
        };
        if !keep[i] {
            continue;
        }
        let id = entry_id(&page.title);
        let (kind, derived_from) = settled[&id].clone();
        let facts = extract_supporting_facts(sections, &index, &id);
        report.redirects_followed += facts.redirects_followed.len();
        if !facts.unresolved.is_empty() {
            report
                .unresolved_links
                .insert(page.title.clone(), facts.unresolved.clone());
        }

        let statement_text = sections
            .iter()
            .filter(|s| s.section_role == SectionRole::Statement)
            .map(|s| s.body.as_str())
            .filter(|b| !b.is_empty())
            .collect::<Vec<_>>()
            .join("\n\n");
        let mut proofs: Vec<Proof> = sections
            .iter()
            .filter_map(|s| match s.section_role {
                SectionRole::Proof(j) => Some(Proof {
                    proof_text: s.body.clone(),
                    supporting_propositions: facts.proof_propositions[j].clone(),
                }),
                _ => None,
            })
            .collect();
        if kind == EntryKind::Definition && !proofs.is_empty() {
            report.warnings.push(PageNote::new(
                &page.title,
                "proof sections on a definition page ignored",
            ));
            proofs.clear();
        }
        raw_categories.insert(id.clone(), clean.categories.clone());
        entries.push(Entry {
            id,
            kind,
            title: page.title.clone(),
            statement_text,
            categories: BTreeSet::new(),
            supporting_definitions: facts.supporting_definitions,
            proofs,
            derived_from,
            definiens: None,
        });
    }

    let (categories, category_report) = harmonize_categories(&raw_categories, &config.rules, config.min_count);
    report.categories = category_report;
    for entry in &mut entries {
        if let Some(set) = categories.get(&entry.id) {
            entry.categories = set.clone();
        }
    }

    let corpus = Corpus::new(entries)?;
    let validation = corpus.validate();
    if !validation.is_valid() {
        let issues: Vec<String> = validation.issues.iter().map(|i| i.to_string()).collect();
        return Err(Error::Contract(format!(
            "built corpus failed validation: {}",
            issues.join("; ")
        )));
    }
    report.counts_by_kind = corpus.counts_by_kind();
    Ok((corpus, report))
}
