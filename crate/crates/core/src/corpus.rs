//! Structured corpus of definitions, theorems, lemmas and corollaries.
//!
//! An [`Entry`] carries its statement text, its harmonized categories, the
//! definitions its statement links to, and zero or more proofs, each with the
//! propositions it cites. The premises of an entry are the union of its
//! supporting definitions and the supporting propositions of its proofs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntryKind {
    Definition,
    Lemma,
    Theorem,
    Corollary,
}

impl EntryKind {
    pub const ALL: [EntryKind; 4] = [
        EntryKind::Definition,
        EntryKind::Lemma,
        EntryKind::Theorem,
        EntryKind::Corollary,
    ];

    /// Name of the JSON file holding entries of this kind.
    pub fn file_name(self) -> &'static str {
        match self {
            EntryKind::Definition => "definitions.json",
            EntryKind::Lemma => "lemmas.json",
            EntryKind::Theorem => "theorems.json",
            EntryKind::Corollary => "corollaries.json",
        }
    }

    pub fn is_proposition(self) -> bool {
        self != EntryKind::Definition
    }
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            EntryKind::Definition => "Definition",
            EntryKind::Lemma => "Lemma",
            EntryKind::Theorem => "Theorem",
            EntryKind::Corollary => "Corollary",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proof {
    pub proof_text: String,
    #[serde(default)]
    pub supporting_propositions: BTreeSet<String>,
}

/// A pair of a defined expression and the text that declares or qualifies it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Definiens {
    pub definiendum: String,
    pub definiens: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub id: String,
    pub kind: EntryKind,
    pub title: String,
    pub statement_text: String,
    #[serde(default)]
    pub categories: BTreeSet<String>,
    #[serde(default)]
    pub supporting_definitions: BTreeSet<String>,
    #[serde(default)]
    pub proofs: Vec<Proof>,
    #[serde(default)]
    pub derived_from: Option<String>,
    /// Never populated by the wiki pipeline; kept so hand-annotated data
    /// survives a load/save cycle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub definiens: Option<Vec<Definiens>>,
}

/// Stable identifier for a page title: lowercase, whitespace and
/// underscores collapsed to a single underscore.
pub fn entry_id(title: &str) -> String {
    title
        .split(|c: char| c.is_whitespace() || c == '_')
        .filter(|part| !part.is_empty())
        .collect::<Vec<_>>()
        .join("_")
        .to_lowercase()
}

/// Which proofs contribute supporting propositions to a premise set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ProofScope {
    /// Union over every proof of the entry.
    #[default]
    All,
    /// Only the proof at the given index.
    Only(usize),
}

/// Premises of an entry: supporting definitions together with the
/// supporting propositions of the selected proofs.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PremiseSet(pub BTreeSet<String>);

impl PremiseSet {
    pub fn contains(&self, id: &str) -> bool {
        self.0.contains(id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &String> {
        self.0.iter()
    }

    pub fn into_inner(self) -> BTreeSet<String> {
        self.0
    }
}

impl Entry {
    pub fn premise_set(&self, scope: ProofScope) -> Result<PremiseSet> {
        let mut set: BTreeSet<String> = self.supporting_definitions.clone();
        match scope {
            ProofScope::All => {
                for proof in &self.proofs {
                    set.extend(proof.supporting_propositions.iter().cloned());
                }
            }
            ProofScope::Only(index) => {
                let proof = self.proofs.get(index).ok_or(Error::ProofIndex {
                    index,
                    len: self.proofs.len(),
                })?;
                set.extend(proof.supporting_propositions.iter().cloned());
            }
        }
        set.remove(&self.id);
        Ok(PremiseSet(set))
    }

    /// Premises under [`ProofScope::All`], which cannot fail.
    pub fn premises(&self) -> PremiseSet {
        self.premise_set(ProofScope::All)
            .expect("ProofScope::All has no index to be out of range")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum Issue {
    DuplicateId { id: String },
    DanglingId { from: String, to: String, field: String },
    SelfReference { id: String, field: String },
    KindMismatch { id: String, detail: String },
    MissingDerivation { id: String },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::DuplicateId { id } => write!(f, "duplicate-id({id})"),
            Issue::DanglingId { from, to, field } => write!(f, "dangling-id({from}->{to}, {field})"),
            Issue::SelfReference { id, field } => write!(f, "self-reference({id}, {field})"),
            Issue::KindMismatch { id, detail } => write!(f, "kind-mismatch({id}: {detail})"),
            Issue::MissingDerivation { id } => write!(f, "missing-derivation({id})"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks every cross-reference and kind constraint in `entries`.
pub fn validate_corpus(entries: &[Entry]) -> ValidationReport {
    let mut kinds: HashMap<&str, EntryKind> = HashMap::with_capacity(entries.len());
    let mut issues = Vec::new();
    for entry in entries {
        if kinds.insert(&entry.id, entry.kind).is_some() {
            issues.push(Issue::DuplicateId { id: entry.id.clone() });
        }
    }

    let check_ref = |issues: &mut Vec<Issue>, from: &Entry, to: &str, field: &str| -> Option<EntryKind> {
        if to == from.id {
            issues.push(Issue::SelfReference {
                id: from.id.clone(),
                field: field.to_string(),
            });
            return None;
        }
        match kinds.get(to) {
            Some(kind) => Some(*kind),
            None => {
                issues.push(Issue::DanglingId {
                    from: from.id.clone(),
                    to: to.to_string(),
                    field: field.to_string(),
                });
                None
            }
        }
    };

    for entry in entries {
        for def in &entry.supporting_definitions {
            if let Some(kind) = check_ref(&mut issues, entry, def, "supporting_definitions") {
                if kind != EntryKind::Definition {
                    issues.push(Issue::KindMismatch {
                        id: entry.id.clone(),
                        detail: format!("supporting definition {def} is a {kind}"),
                    });
                }
            }
        }
        for (index, proof) in entry.proofs.iter().enumerate() {
            let field = format!("proofs[{index}].supporting_propositions");
            for prop in &proof.supporting_propositions {
                if let Some(EntryKind::Definition) = check_ref(&mut issues, entry, prop, &field) {
                    issues.push(Issue::KindMismatch {
                        id: entry.id.clone(),
                        detail: format!("supporting proposition {prop} is a Definition"),
                    });
                }
            }
        }

        match entry.kind {
            EntryKind::Definition => {
                if !entry.proofs.is_empty() {
                    issues.push(Issue::KindMismatch {
                        id: entry.id.clone(),
                        detail: "definition carries proofs".into(),
                    });
                }
                if entry.derived_from.is_some() {
                    issues.push(Issue::KindMismatch {
                        id: entry.id.clone(),
                        detail: "definition carries derived_from".into(),
                    });
                }
            }
            EntryKind::Theorem => {
                if entry.derived_from.is_some() {
                    issues.push(Issue::KindMismatch {
                        id: entry.id.clone(),
                        detail: "theorem carries derived_from".into(),
                    });
                }
            }
            EntryKind::Corollary => match &entry.derived_from {
                None => issues.push(Issue::MissingDerivation { id: entry.id.clone() }),
                Some(parent) => {
                    if let Some(kind) = check_ref(&mut issues, entry, parent, "derived_from") {
                        if kind != EntryKind::Theorem {
                            issues.push(Issue::KindMismatch {
                                id: entry.id.clone(),
                                detail: format!("corollary derived from {parent}, a {kind}"),
                            });
                        }
                    }
                }
            },
            EntryKind::Lemma => {
                if let Some(parent) = &entry.derived_from {
                    if let Some(EntryKind::Definition) = check_ref(&mut issues, entry, parent, "derived_from") {
                        issues.push(Issue::KindMismatch {
                            id: entry.id.clone(),
                            detail: format!("lemma derived from definition {parent}"),
                        });
                    }
                }
            }
        }
    }

    issues.sort();
    issues.dedup();
    ValidationReport { issues }
}

/// An immutable, id-sorted collection of entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    entries: Vec<Entry>,
    index: HashMap<String, usize>,
}

impl Corpus {
    /// Sorts `entries` by id. Fails on duplicate ids; other invariants are
    /// left to [`validate_corpus`].
    pub fn new(mut entries: Vec<Entry>) -> Result<Self> {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        let mut index = HashMap::with_capacity(entries.len());
        for (i, entry) in entries.iter().enumerate() {
            if index.insert(entry.id.clone(), i).is_some() {
                return Err(Error::Contract(format!("duplicate entry id {}", entry.id)));
            }
        }
        Ok(Corpus { entries, index })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Entry> {
        self.index.get(id).map(|&i| &self.entries[i])
    }

    /// Position of `id` in the id-sorted entry list.
    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn validate(&self) -> ValidationReport {
        validate_corpus(&self.entries)
    }

    pub fn counts_by_kind(&self) -> BTreeMap<EntryKind, usize> {
        let mut counts: BTreeMap<EntryKind, usize> = EntryKind::ALL.iter().map(|&k| (k, 0)).collect();
        for entry in &self.entries {
            *counts.entry(entry.kind).or_default() += 1;
        }
        counts
    }

    /// Writes one pretty-printed JSON array per kind into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for kind in EntryKind::ALL {
            let of_kind: Vec<&Entry> = self.entries.iter().filter(|e| e.kind == kind).collect();
            let path = dir.join(kind.file_name());
            let mut json = serde_json::to_string_pretty(&of_kind).map_err(|e| Error::json(&path, e))?;
            json.push('\n');
            fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    /// Reads the per-kind JSON files from `dir`. Missing files count as
    /// empty, but at least one must exist.
    pub fn read_dir(dir: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        let mut found = false;
        for kind in EntryKind::ALL {
            let path = dir.join(kind.file_name());
            if !path.exists() {
                continue;
            }
            found = true;
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let mut of_kind: Vec<Entry> = serde_json::from_str(&text).map_err(|e| Error::json(&path, e))?;
            if let Some(bad) = of_kind.iter().find(|e| e.kind != kind) {
                return Err(Error::Contract(format!(
                    "{} lists {} of kind {}",
                    path.display(),
                    bad.id,
                    bad.kind
                )));
            }
            entries.append(&mut of_kind);
        }
        if !found {
            return Err(Error::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no corpus JSON files found"),
            ));
        }
        Corpus::new(entries)
    }
}
