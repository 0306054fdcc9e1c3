use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest number of entity variables a pattern may declare.
pub const MAX_PATTERN_VARS: usize = 8;

/// Relation position of a pattern edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Slot {
    /// First anchored relation.
    #[serde(rename = "rel1")]
    Rel1,
    /// Last anchored relation.
    #[serde(rename = "rel2")]
    Rel2,
    /// Unanchored relation variable; every wildcard edge shares one binding.
    #[serde(rename = "*")]
    Wildcard,
}

impl Slot {
    pub(crate) fn index(self) -> usize {
        match self {
            Slot::Rel1 => 0,
            Slot::Rel2 => 1,
            Slot::Wildcard => 2,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Slot::Rel1 => "rel1",
            Slot::Rel2 => "rel2",
            Slot::Wildcard => "*",
        })
    }
}

/// `src --slot--> dst` over entity-variable indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PatternEdge {
    pub src: usize,
    pub slot: Slot,
    pub dst: usize,
}

/// A small connected pattern graph whose relation positions are reduced to
/// two anchors, `Rel1` (first) and `Rel2` (last).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GraphletPattern {
    name: String,
    entity_vars: Vec<String>,
    edges: Vec<PatternEdge>,
    distinct_pairs: Vec<(usize, usize)>,
    closed: bool,
}

impl GraphletPattern {
    pub fn new(
        name: impl Into<String>,
        entity_vars: Vec<String>,
        edges: Vec<PatternEdge>,
        distinct_pairs: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let name = name.into();
        let invalid = |reason: String| Error::InvalidPattern {
            name: name.clone(),
            reason,
        };
        let n = entity_vars.len();
        if n == 0 || n > MAX_PATTERN_VARS {
            return Err(invalid(format!(
                "needs 1..={MAX_PATTERN_VARS} entity variables, has {n}"
            )));
        }
        let unique: BTreeSet<&String> = entity_vars.iter().collect();
        if unique.len() != n {
            return Err(invalid("duplicate entity variable".into()));
        }
        for e in &edges {
            if e.src >= n || e.dst >= n {
                return Err(invalid("edge references an undeclared variable".into()));
            }
        }
        for &(a, b) in &distinct_pairs {
            if a >= n || b >= n {
                return Err(invalid("filter references an undeclared variable".into()));
            }
            if a == b {
                return Err(invalid(format!("filter compares `{}` with itself", entity_vars[a])));
            }
        }
        if !edges.iter().any(|e| e.slot == Slot::Rel1) || !edges.iter().any(|e| e.slot == Slot::Rel2) {
            return Err(invalid("both anchor slots rel1 and rel2 must be used".into()));
        }
        if !is_connected(n, &edges) {
            return Err(invalid("pattern graph is not connected".into()));
        }
        // A connected multigraph has a cycle exactly when it has at least as
        // many edges as vertices.
        let closed = edges.len() >= n;
        Ok(GraphletPattern {
            name,
            entity_vars,
            edges,
            distinct_pairs,
            closed,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn entity_vars(&self) -> &[String] {
        &self.entity_vars
    }

    pub fn num_vars(&self) -> usize {
        self.entity_vars.len()
    }

    pub fn edges(&self) -> &[PatternEdge] {
        &self.edges
    }

    /// Entity-variable pairs required to bind to different entities, in the
    /// order the filter lists them (duplicates preserved).
    pub fn distinct_pairs(&self) -> &[(usize, usize)] {
        &self.distinct_pairs
    }

    /// The anchored positional binary order: always `(Rel1, Rel2)`.
    pub fn anchor(&self) -> (Slot, Slot) {
        (Slot::Rel1, Slot::Rel2)
    }

    pub fn closed(&self) -> bool {
        self.closed
    }

    pub fn has_wildcard(&self) -> bool {
        self.edges.iter().any(|e| e.slot == Slot::Wildcard)
    }

    /// Arity of the underlying order: 3 when a wildcard middle relation is
    /// present, 2 otherwise.
    pub fn order_arity(&self) -> usize {
        if self.has_wildcard() {
            3
        } else {
            2
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same pattern with every pair of entity variables required distinct.
    pub fn strict(&self) -> Self {
        let n = self.num_vars();
        let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                pairs.push((a, b));
            }
        }
        GraphletPattern {
            distinct_pairs: pairs,
            ..self.clone()
        }
    }

    /// Structural equality ignoring the name.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.entity_vars == other.entity_vars
            && self.edges == other.edges
            && self.distinct_pairs == other.distinct_pairs
    }

    pub(crate) fn to_spec(&self) -> PatternSpec {
        PatternSpec {
            name: self.name.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    src: self.entity_vars[e.src].clone(),
                    rel: e.slot,
                    dst: self.entity_vars[e.dst].clone(),
                })
                .collect(),
            filters: self
                .distinct_pairs
                .iter()
                .map(|&(a, b)| [self.entity_vars[a].clone(), self.entity_vars[b].clone()])
                .collect(),
            anchor: [Slot::Rel1, Slot::Rel2],
            closed: Some(self.closed),
        }
    }

    pub(crate) fn from_spec(spec: PatternSpec) -> Result<Self> {
        if spec.anchor != [Slot::Rel1, Slot::Rel2] {
            return Err(Error::InvalidPattern {
                name: spec.name,
                reason: "anchor must be [\"rel1\", \"rel2\"]".into(),
            });
        }
        let mut vars: Vec<String> = Vec::new();
        let var_index = |v: &str, vars: &mut Vec<String>| -> usize {
            match vars.iter().position(|x| x == v) {
                Some(i) => i,
                None => {
                    vars.push(v.to_owned());
                    vars.len() - 1
                }
            }
        };
        let mut edges = Vec::with_capacity(spec.edges.len());
        for e in &spec.edges {
            let src = var_index(&e.src, &mut vars);
            let dst = var_index(&e.dst, &mut vars);
            edges.push(PatternEdge { src, slot: e.rel, dst });
        }
        let mut pairs = Vec::with_capacity(spec.filters.len());
        for [a, b] in &spec.filters {
            let (Some(ia), Some(ib)) = (vars.iter().position(|x| x == a), vars.iter().position(|x| x == b)) else {
                return Err(Error::InvalidPattern {
                    name: spec.name.clone(),
                    reason: format!("filter `{a} != {b}` references an unknown variable"),
                });
            };
            pairs.push((ia, ib));
        }
        let p = GraphletPattern::new(spec.name.clone(), vars, edges, pairs)?;
        if let Some(closed) = spec.closed {
            if closed != p.closed {
                return Err(Error::InvalidPattern {
                    name: spec.name,
                    reason: format!("declared closed={closed} but the pattern graph says {}", p.closed),
                });
            }
        }
        Ok(p)
    }
}

fn is_connected(n: usize, edges: &[PatternEdge]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(v) = stack.pop() {
        for e in edges {
            for (a, b) in [(e.src, e.dst), (e.dst, e.src)] {
                if a == v && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// On-disk form of a pattern inside a vocabulary file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub name: String,
    pub edges: Vec<EdgeSpec>,
    #[serde(default)]
    pub filters: Vec<[String; 2]>,
    #[serde(default = "default_anchor")]
    pub anchor: [Slot; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed: Option<bool>,
}

fn default_anchor() -> [Slot; 2] {
    [Slot::Rel1, Slot::Rel2]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub src: String,
    pub rel: Slot,
    pub dst: String,
}
