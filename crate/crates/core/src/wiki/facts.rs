use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::sections::{PageSection, SectionRole};
use crate::corpus::{entry_id, EntryKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkResolution {
    Definition(String),
    Proposition(String),
    Excluded,
    Unknown,
}

/// Classification of every page by id, plus redirect targets.
#[derive(Debug, Default, Clone)]
pub struct PageIndex {
    kinds: HashMap<String, EntryKind>,
    excluded: HashMap<String, ()>,
    redirects: HashMap<String, String>,
}

impl PageIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_entry(&mut self, title: &str, kind: EntryKind) {
        self.kinds.insert(entry_id(title), kind);
    }

    pub fn insert_excluded(&mut self, title: &str) {
        self.excluded.insert(entry_id(title), ());
    }

    pub fn insert_redirect(&mut self, title: &str, target: &str) {
        self.redirects.insert(entry_id(title), target.to_string());
    }

    pub fn kind_of(&self, id: &str) -> Option<EntryKind> {
        self.kinds.get(id).copied()
    }

    fn resolve_id(&self, id: &str) -> LinkResolution {
        match self.kinds.get(id) {
            Some(EntryKind::Definition) => LinkResolution::Definition(id.to_string()),
            Some(_) => LinkResolution::Proposition(id.to_string()),
            None if self.excluded.contains_key(id) => LinkResolution::Excluded,
            None => LinkResolution::Unknown,
        }
    }

    /// Resolves a link target, following at most one redirect. The second
    /// value is true when a redirect was followed.
    pub fn resolve(&self, target: &str) -> (LinkResolution, bool) {
        let id = entry_id(target);
        if let Some(next) = self.redirects.get(&id) {
            return (self.resolve_id(&entry_id(next)), true);
        }
        (self.resolve_id(&id), false)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportingFacts {
    pub supporting_definitions: BTreeSet<String>,
    /// One set per proof section, indexed like [`SectionRole::Proof`].
    pub proof_propositions: Vec<BTreeSet<String>>,
    pub unresolved: Vec<String>,
    pub redirects_followed: Vec<String>,
}

/// Reads premises off the links of a page's sections.
///
/// Statement links to definitions are supporting definitions; proof links
/// to theorems, lemmas and corollaries are that proof's supporting
/// propositions. Satellite sections, links to excluded pages and links back
/// to the page itself are ignored; unknown targets are reported.
pub fn extract_supporting_facts(sections: &[PageSection], index: &PageIndex, self_id: &str) -> SupportingFacts {
    let proof_count = sections
        .iter()
        .filter_map(|s| match s.section_role {
            SectionRole::Proof(i) => Some(i + 1),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    let mut facts = SupportingFacts {
        proof_propositions: vec![BTreeSet::new(); proof_count],
        ..Default::default()
    };
    for section in sections {
        if section.section_role == SectionRole::Satellite {
            continue;
        }
        for link in &section.links {
            let (resolution, redirected) = index.resolve(&link.target);
            if redirected {
                facts.redirects_followed.push(link.target.clone());
            }
            match (section.section_role, resolution) {
                (_, LinkResolution::Definition(id) | LinkResolution::Proposition(id)) if id == self_id => {}
                (SectionRole::Statement, LinkResolution::Definition(id)) => {
                    facts.supporting_definitions.insert(id);
                }
                (SectionRole::Proof(i), LinkResolution::Proposition(id)) => {
                    facts.proof_propositions[i].insert(id);
                }
                (_, LinkResolution::Unknown) => facts.unresolved.push(link.target.clone()),
                _ => {}
            }
        }
    }
    facts.unresolved.sort();
    facts.unresolved.dedup();
    facts.redirects_followed.sort();
    facts.redirects_followed.dedup();
    facts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wiki::{clean_wikitext, split_sections, NoPages, RawPage};

    fn index() -> PageIndex {
        let mut idx = PageIndex::new();
        idx.insert_entry("Definition:Real Number", EntryKind::Definition);
        idx.insert_entry("Cauchy's Mean Theorem", EntryKind::Theorem);
        idx.insert_entry("Euclid's Lemma", EntryKind::Lemma);
        idx.insert_excluded("User:Someone");
        idx.insert_redirect("Definition:Reals", "Definition:Real Number");
        idx
    }

    fn facts(wikitext: &str) -> SupportingFacts {
        let clean = clean_wikitext(&RawPage::new("Page", wikitext), &NoPages).unwrap();
        extract_supporting_facts(&split_sections(&clean), &index(), "page")
    }

    #[test]
    fn proof_links_to_theorems_are_supporting_propositions() {
        let f =
            facts("== Theorem ==\nFor [[Definition:Real Number|reals]].\n== Proof ==\nBy [[Cauchy's Mean Theorem]].");
        assert!(f.proof_propositions[0].contains("cauchy's_mean_theorem"));
        assert_eq!(f.supporting_definitions, ["definition:real_number".to_string()].into());
    }

    #[test]
    fn no_links_no_facts() {
        let f = facts("== Theorem ==\nPlain.\n== Proof ==\nObvious.");
        assert!(f.supporting_definitions.is_empty());
        assert_eq!(f.proof_propositions, vec![BTreeSet::new()]);
    }

    #[test]
    fn duplicates_collapse() {
        let f = facts("== Theorem ==\nX.\n== Proof ==\n[[Euclid's Lemma]] and again [[Euclid's Lemma|the lemma]].");
        assert_eq!(f.proof_propositions[0].len(), 1);
    }

    #[test]
    fn satellite_excluded_and_unknown_links() {
        let f = facts(
            "== Theorem ==\nX [[User:Someone]] [[Nowhere]].\n== Proof ==\n[[Definition:Real Number]]\n== Historical Note ==\n[[Cauchy's Mean Theorem]]",
        );
        assert!(f.supporting_definitions.is_empty());
        assert!(f.proof_propositions[0].is_empty());
        assert_eq!(f.unresolved, vec!["Nowhere"]);
    }

    #[test]
    fn one_redirect_level_is_followed() {
        let f = facts("== Definition ==\nA [[Definition:Reals|real]] thing.");
        assert_eq!(f.supporting_definitions, ["definition:real_number".to_string()].into());
        assert_eq!(f.redirects_followed, vec!["Definition:Reals"]);
    }

    #[test]
    fn self_links_dropped() {
        let mut idx = index();
        idx.insert_entry("Page", EntryKind::Theorem);
        let clean = clean_wikitext(
            &RawPage::new("Page", "== Theorem ==\nX\n== Proof ==\n[[Page]]"),
            &NoPages,
        )
        .unwrap();
        let f = extract_supporting_facts(&split_sections(&clean), &idx, "page");
        assert!(f.proof_propositions[0].is_empty());
        assert!(f.unresolved.is_empty());
    }
}
