use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_TARGETS: [&str; 24] = [
    "Analysis",
    "Set Theory",
    "Number Theory",
    "Abstract Algebra",
    "Topology",
    "Algebra",
    "Relation Theory",
    "Mapping Theory",
    "Real Analysis",
    "Geometry",
    "Metric Spaces",
    "Linear Algebra",
    "Complex Analysis",
    "Applied Mathematics",
    "Order Theory",
    "Numbers",
    "Physics",
    "Group Theory",
    "Ring Theory",
    "Euclidean Geometry",
    "Class Theory",
    "Discrete Mathematics",
    "Plane Geometry",
    "Units of Measurement",
];

const DEFAULT_RULES: &str = include_str!("../../data/category_rules.toml");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeRule {
    pub raw: String,
    pub into: String,
}

/// Harmonized category names and the rules mapping raw wiki categories onto them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryRules {
    pub targets: Vec<String>,
    #[serde(default, rename = "merge")]
    pub merges: Vec<MergeRule>,
}

impl Default for CategoryRules {
    fn default() -> Self {
        Self::from_toml(DEFAULT_RULES).expect("bundled category rules are valid")
    }
}

fn normalize(raw: &str) -> String {
    let raw = raw.trim();
    let raw = match raw.get(..9) {
        Some(p) if p.eq_ignore_ascii_case("category:") => &raw[9..],
        _ => raw,
    };
    raw.replace('_', " ").split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Length of the match of `pattern` against `raw`: equal, or `pattern/…`.
fn match_len(raw: &str, pattern: &str) -> Option<usize> {
    let (r, p) = (raw.to_lowercase(), pattern.to_lowercase());
    if r == p || r.strip_prefix(&p).is_some_and(|rest| rest.starts_with('/')) {
        Some(p.len())
    } else {
        None
    }
}

impl CategoryRules {
    pub fn from_toml(text: &str) -> Result<Self> {
        let rules: CategoryRules = toml::from_str(text).map_err(|e| Error::Config(format!("category rules: {e}")))?;
        rules.check()?;
        Ok(rules)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    fn check(&self) -> Result<()> {
        if self.targets.is_empty() {
            return Err(Error::Config("category rules list no targets".into()));
        }
        for rule in &self.merges {
            if !self.targets.iter().any(|t| t == &rule.into) {
                return Err(Error::Config(format!(
                    "merge rule {:?} targets unknown category {:?}",
                    rule.raw, rule.into
                )));
            }
        }
        Ok(())
    }

    /// Maps one raw category to its harmonized name. The longest matching
    /// rule or target wins.
    pub fn map_raw(&self, raw: &str) -> Option<&str> {
        let raw = normalize(raw);
        let rules = self.merges.iter().map(|r| (r.raw.as_str(), r.into.as_str()));
        let targets = self.targets.iter().map(|t| (t.as_str(), t.as_str()));
        rules
            .chain(targets)
            .filter_map(|(pattern, into)| match_len(&raw, pattern).map(|n| (n, into)))
            .max_by_key(|(n, _)| *n)
            .map(|(_, into)| into)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryReport {
    /// Member counts of retained categories.
    pub kept: BTreeMap<String, usize>,
    /// Member counts of categories below the threshold.
    pub dropped: BTreeMap<String, usize>,
    /// Raw categories no rule matched, with how many entries carried them.
    pub unmapped: BTreeMap<String, usize>,
    pub entries_without_category: usize,
}

/// Maps every entry's raw categories through `rules` and keeps only
/// harmonized categories with at least `min_count` members.
pub fn harmonize_categories(
    raw: &BTreeMap<String, Vec<String>>,
    rules: &CategoryRules,
    min_count: usize,
) -> (BTreeMap<String, BTreeSet<String>>, CategoryReport) {
    let mut report = CategoryReport::default();
    let mut mapped: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (id, cats) in raw {
        let set = mapped.entry(id.clone()).or_default();
        for cat in cats {
            match rules.map_raw(cat) {
                Some(target) => {
                    set.insert(target.to_string());
                }
                None => *report.unmapped.entry(normalize(cat)).or_default() += 1,
            }
        }
    }
    let mut members: BTreeMap<String, usize> = BTreeMap::new();
    for set in mapped.values() {
        for cat in set {
            *members.entry(cat.clone()).or_default() += 1;
        }
    }
    for (cat, n) in members {
        if n >= min_count {
            report.kept.insert(cat, n);
        } else {
            report.dropped.insert(cat, n);
        }
    }
    for set in mapped.values_mut() {
        set.retain(|c| report.kept.contains_key(c));
        if set.is_empty() {
            report.entries_without_category += 1;
        }
    }
    (mapped, report)
}
