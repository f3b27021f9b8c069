//! ProofWiki-style wikitext to corpus entries.
//!
//! The pipeline runs per page: load, clean markup and resolve transclusions,
//! classify the page, split it into statement/proof/satellite sections, and
//! read supporting facts off the internal links. Assembly into a corpus
//! (link resolution, category harmonization, validation) is a single ordered
//! pass over all pages so output never depends on worker count.

mod build;
mod categories;
mod classify;
mod clean;
mod facts;
mod load;
mod sections;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::entry_id;

pub use build::{build_corpus, read_tag_list, BuildConfig, BuildReport, PageNote, DEFAULT_EXCLUDE_TAGS};
pub use categories::{harmonize_categories, CategoryReport, CategoryRules, MergeRule, DEFAULT_TARGETS};
pub use classify::{classify_page, PageKind};
pub use clean::{clean_wikitext, extract_passage, CleanText, LinkAnnotation};
pub use facts::{extract_supporting_facts, LinkResolution, PageIndex, SupportingFacts};
pub use load::{load_pages, namespace_of};
pub use sections::{split_sections, PageSection, SectionRole};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPage {
    pub title: String,
    pub wikitext: String,
    /// Namespace name; empty for the main namespace.
    pub namespace: String,
}

impl RawPage {
    pub fn new(title: impl Into<String>, wikitext: impl Into<String>) -> Self {
        let title = title.into();
        let namespace = namespace_of(&title).to_string();
        RawPage {
            title,
            wikitext: wikitext.into(),
            namespace,
        }
    }
}

/// Source of other pages' wikitext, used to resolve transclusions.
pub trait PageLookup {
    fn page_text(&self, title: &str) -> Option<&str>;
}

/// Pages indexed by normalized title.
#[derive(Debug, Default, Clone)]
pub struct PageStore {
    pages: HashMap<String, RawPage>,
}

impl PageStore {
    pub fn new(pages: &[RawPage]) -> Self {
        PageStore {
            pages: pages.iter().map(|p| (entry_id(&p.title), p.clone())).collect(),
        }
    }

    pub fn get(&self, title: &str) -> Option<&RawPage> {
        self.pages.get(&entry_id(title))
    }
}

impl PageLookup for PageStore {
    fn page_text(&self, title: &str) -> Option<&str> {
        self.get(title).map(|p| p.wikitext.as_str())
    }
}

/// A lookup with no pages.
pub struct NoPages;

impl PageLookup for NoPages {
    fn page_text(&self, _title: &str) -> Option<&str> {
        None
    }
}
