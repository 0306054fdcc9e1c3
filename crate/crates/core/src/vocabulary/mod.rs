//! Graphlet patterns and the named structural vocabularies built from them.

mod order;
mod pattern;
mod query;
mod tables;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use order::PositionalOrder;
pub use pattern::{EdgeSpec, GraphletPattern, PatternEdge, PatternSpec, Slot, MAX_PATTERN_VARS};
pub use query::render_query;

/// How occurrence classes are weighted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchMode {
    /// ASK semantics: weight 1 if any occurrence exists.
    Existence,
    /// Number of distinct variable bindings.
    #[default]
    Count,
}

impl FromStr for MatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "existence" | "exists" | "ask" => Ok(MatchMode::Existence),
            "count" => Ok(MatchMode::Count),
            other => Err(Error::InvalidArgument(format!("unknown match mode `{other}`"))),
        }
    }
}

impl fmt::Display for MatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatchMode::Existence => "existence",
            MatchMode::Count => "count",
        })
    }
}

/// Which distinctness filters a built-in pattern carries.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FilterMode {
    /// Exactly the filters of the published query templates.
    #[default]
    Printed,
    /// Every pair of entity variables distinct.
    Strict,
}

/// A named, ordered set of graphlet patterns plus a weighting mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    name: String,
    patterns: Vec<GraphletPattern>,
    mode: MatchMode,
}

impl Vocabulary {
    /// Builds a vocabulary; pattern names must be unique.
    pub fn new(name: impl Into<String>, patterns: Vec<GraphletPattern>, mode: MatchMode) -> Result<Self> {
        let name = name.into();
        for (i, p) in patterns.iter().enumerate() {
            if patterns[..i].iter().any(|q| q.name() == p.name()) {
                return Err(Error::InvalidPattern {
                    name: p.name().to_owned(),
                    reason: format!("appears twice in vocabulary `{name}`"),
                });
            }
        }
        Ok(Vocabulary { name, patterns, mode })
    }

    /// A custom vocabulary assembled from built-in pattern names.
    pub fn from_pattern_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let patterns = names
            .iter()
            .map(|n| builtin_pattern(n.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Vocabulary::new("custom", patterns, MatchMode::Count)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn patterns(&self) -> &[GraphletPattern] {
        &self.patterns
    }

    pub fn mode(&self) -> MatchMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    pub fn with_mode(mut self, mode: MatchMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_filters(mut self, filters: FilterMode) -> Self {
        if filters == FilterMode::Strict {
            self.patterns = self.patterns.iter().map(GraphletPattern::strict).collect();
        }
        self
    }

    pub fn pattern_names(&self) -> Vec<&str> {
        self.patterns.iter().map(GraphletPattern::name).collect()
    }

    /// Index of a pattern, matching names with or without underscores.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        let key = normalize(name);
        self.patterns.iter().position(|p| normalize(p.name()) == key)
    }

    pub fn pattern(&self, name: &str) -> Option<&GraphletPattern> {
        self.index_of(name).map(|i| &self.patterns[i])
    }

    /// True when every pattern of `self` (by name and shape) is in `other`.
    pub fn is_subset_of(&self, other: &Vocabulary) -> bool {
        self.patterns.iter().all(|p| other.patterns.contains(p))
    }

    /// Parses a vocabulary file: a JSON list of pattern objects.
    pub fn from_json(text: &str) -> Result<Self> {
        let specs: Vec<PatternSpec> = serde_json::from_str(text)?;
        let patterns = specs
            .into_iter()
            .map(GraphletPattern::from_spec)
            .collect::<Result<Vec<_>>>()?;
        Vocabulary::new("custom", patterns, MatchMode::Count)
    }

    pub fn to_json(&self) -> Result<String> {
        let specs: Vec<PatternSpec> = self.patterns.iter().map(GraphletPattern::to_spec).collect();
        Ok(serde_json::to_string_pretty(&specs)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vocabulary::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }
}

fn normalize(name: &str) -> String {
    name.chars()
        .filter(|&c| c != '_')
        .collect::<String>()
        .to_ascii_lowercase()
}

fn builtins() -> &'static [GraphletPattern] {
    static CELL: OnceLock<Vec<GraphletPattern>> = OnceLock::new();
    CELL.get_or_init(|| {
        tables::TEMPLATES
            .iter()
            .chain(tables::UNDISTINGUISHED_TEMPLATES)
            .map(|(name, text)| {
                query::parse_unnamed(text)
                    .unwrap_or_else(|e| panic!("built-in template {name} is malformed: {e}"))
                    .with_name(*name)
            })
            .collect()
    })
}

/// Looks up a built-in pattern; `ff_o`, `ffo` and `FFO` all name the same one.
pub fn builtin_pattern(name: &str) -> Result<GraphletPattern> {
    let key = normalize(name);
    builtins()
        .iter()
        .find(|p| normalize(p.name()) == key)
        .cloned()
        .ok_or_else(|| Error::UnknownPattern(name.to_owned()))
}

/// Every built-in pattern, in catalogue order.
pub fn builtin_patterns() -> &'static [GraphletPattern] {
    builtins()
}

/// Names accepted by [`builtin_vocabulary`].
pub const BUILTIN_VOCABULARIES: &[&str] = &["V2-", "U2", "V2", "V2+", "V3-", "V3", "V3+", "M3", "M4'"];

const V2: &[&str] = &["ffo", "ffc", "fro", "frc", "rfo", "rfc", "rro", "rrc"];
const V2_OPEN: &[&str] = &["ffo", "fro", "rfo", "rro"];
const U2: &[&str] = &["ff", "fr", "rf", "rr"];
const PATHS3: &[&str] = &[
    "fffo", "fffc", "ffro", "ffrc", "frfo", "frfc", "frro", "frrc", "rffo", "rffc", "rfro", "rfrc", "rrfo", "rrfc",
    "rrro", "rrrc",
];
const M3: &[&str] = &["ffo_1-2", "fro_1-2", "rfo_1-2", "rro_1-2"];
const M22: &[&str] = &["ffo_2-2", "fro_2-2", "rfo_2-2", "rro_2-2"];

/// Returns a named vocabulary in count mode. Names are case-insensitive and
/// `M4p` is accepted for `M4'`.
pub fn builtin_vocabulary(name: &str) -> Result<Vocabulary> {
    let open3 = || PATHS3.iter().copied().filter(|n| n.ends_with('o'));
    let names: Vec<&str> = match name.to_ascii_uppercase().as_str() {
        "V2-" => V2_OPEN.to_vec(),
        "U2" => U2.to_vec(),
        "V2" => V2.to_vec(),
        "V2+" => V2.iter().chain(M3).chain(M22).copied().collect(),
        "V3-" => V2.iter().copied().chain(open3()).collect(),
        "V3" => V2.iter().chain(PATHS3).copied().collect(),
        "V3+" => V2.iter().chain(PATHS3).chain(M3).chain(M22).copied().collect(),
        "M3" => M3.to_vec(),
        "M4'" | "M4P" | "M4" => M3.iter().chain(M22).copied().collect(),
        _ => return Err(Error::UnknownVocabulary(name.to_owned())),
    };
    let canonical = BUILTIN_VOCABULARIES
        .iter()
        .find(|v| v.eq_ignore_ascii_case(name))
        .copied()
        .unwrap_or("M4'");
    let patterns = names.into_iter().map(builtin_pattern).collect::<Result<Vec<_>>>()?;
    Vocabulary::new(canonical, patterns, MatchMode::Count)
}

/// Parses an ASK template. The result takes the name of the built-in pattern
/// with the same structure, or `custom` when there is none.
pub fn pattern_from_query_text(text: &str) -> Result<GraphletPattern> {
    let p = query::parse_unnamed(text)?;
    let name = builtins()
        .iter()
        .find(|b| b.same_shape(&p))
        .map(|b| b.name().to_owned())
        .unwrap_or_else(|| "custom".to_owned());
    Ok(p.with_name(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_sizes() {
        for (name, n) in [
            ("V2-", 4),
            ("U2", 4),
            ("V2", 8),
            ("V2+", 16),
            ("V3-", 16),
            ("V3", 24),
            ("V3+", 32),
            ("M3", 4),
            ("M4'", 8),
        ] {
            assert_eq!(builtin_vocabulary(name).unwrap().len(), n, "{name}");
        }
    }

    #[test]
    fn unknown_vocabulary() {
        assert!(matches!(builtin_vocabulary("V9"), Err(Error::UnknownVocabulary(_))));
    }

    #[test]
    fn name_lookup_ignores_underscores() {
        assert_eq!(builtin_pattern("ff_o").unwrap().name(), "ffo");
        assert_eq!(builtin_pattern("ffo1-2").unwrap().name(), "ffo_1-2");
        assert!(builtin_pattern("zzz").is_err());
    }

    #[test]
    fn three_path_wildcard_and_filters() {
        let p = builtin_pattern("fff_o").unwrap();
        assert_eq!(p.edges().len(), 3);
        assert_eq!(p.edges()[1].slot, Slot::Wildcard);
        assert_eq!(p.distinct_pairs().len(), 6);
        assert!(!p.closed());
    }

    #[test]
    fn table7_filters_kept_verbatim() {
        let p = builtin_pattern("ffo_1-2").unwrap();
        let strict = p.strict();
        assert!(strict.distinct_pairs().len() >= p.distinct_pairs().len());
        assert_ne!(p.distinct_pairs(), strict.distinct_pairs());
    }

    #[test]
    fn json_round_trip() {
        let v = builtin_vocabulary("V3+").unwrap();
        let back = Vocabulary::from_json(&v.to_json().unwrap()).unwrap();
        assert_eq!(back.patterns(), v.patterns());
    }

    #[test]
    fn duplicate_names_rejected() {
        let p = builtin_pattern("ffo").unwrap();
        assert!(Vocabulary::new("x", vec![p.clone(), p], MatchMode::Count).is_err());
    }
}
