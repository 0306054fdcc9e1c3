//! Relation graphs: relations as nodes, mined pattern classes as typed,
//! weighted edges.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, RelationId};
use crate::matcher::{mine, MatchOptions};
use crate::vocabulary::Vocabulary;

/// A typed edge `src --pattern--> dst`; `edge_type` indexes
/// [`RelationGraph::edge_types`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MetaEdge {
    pub edge_type: usize,
    pub src: RelationId,
    pub dst: RelationId,
    pub weight: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationGraph {
    nodes: Vec<String>,
    edge_types: Vec<String>,
    edges: Vec<MetaEdge>,
    epsilon: u64,
    inverse_augmented: bool,
    config_hash: Option<String>,
}

/// On-disk export formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GraphFormat {
    Json,
    Tsv,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(GraphFormat::Json),
            "tsv" => Ok(GraphFormat::Tsv),
            other => Err(Error::InvalidArgument(format!(
                "unknown relation graph format `{other}`"
            ))),
        }
    }
}

impl GraphFormat {
    /// Picks the format from a file extension, defaulting to JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("tsv") => GraphFormat::Tsv,
            _ => GraphFormat::Json,
        }
    }
}

impl RelationGraph {
    /// Mines `v` over `g` and keeps classes of weight at least `epsilon`.
    pub fn build(g: &KnowledgeGraph, v: &Vocabulary, epsilon: u64, opts: MatchOptions) -> Result<Self> {
        if epsilon == 0 {
            return Err(Error::InvalidArgument("epsilon must be at least 1".into()));
        }
        let classes = mine(g, v, opts)?;
        let edges = classes
            .into_iter()
            .filter(|c| c.weight >= epsilon)
            .map(|c| MetaEdge {
                edge_type: v.index_of(&c.pattern).expect("mined pattern belongs to the vocabulary"),
                src: c.r1,
                dst: c.r2,
                weight: c.weight,
            })
            .collect();
        Ok(RelationGraph {
            nodes: g.relation_names().to_vec(),
            edge_types: v.pattern_names().into_iter().map(str::to_owned).collect(),
            edges,
            epsilon,
            inverse_augmented: g.inverse_augmented(),
            config_hash: None,
        })
    }

    /// Assembles a graph from parts, validating ids and weights.
    pub fn from_parts(
        nodes: Vec<String>,
        edge_types: Vec<String>,
        mut edges: Vec<MetaEdge>,
        epsilon: u64,
        inverse_augmented: bool,
    ) -> Result<Self> {
        if epsilon == 0 {
            return Err(Error::InvalidArgument("epsilon must be at least 1".into()));
        }
        for e in &edges {
            if e.edge_type >= edge_types.len() {
                return Err(Error::InvalidId {
                    kind: "edge type",
                    id: e.edge_type,
                    len: edge_types.len(),
                });
            }
            for r in [e.src, e.dst] {
                if r.index() >= nodes.len() {
                    return Err(Error::InvalidId {
                        kind: "relation",
                        id: r.index(),
                        len: nodes.len(),
                    });
                }
            }
            if e.weight < epsilon {
                return Err(Error::InvalidArgument(format!(
                    "edge weight {} is below epsilon {epsilon}",
                    e.weight
                )));
            }
        }
        edges.sort();
        edges.dedup();
        Ok(RelationGraph {
            nodes,
            edge_types,
            edges,
            epsilon,
            inverse_augmented,
            config_hash: None,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edge_types(&self) -> &[String] {
        &self.edge_types
    }

    pub fn edges(&self) -> &[MetaEdge] {
        &self.edges
    }

    pub fn epsilon(&self) -> u64 {
        self.epsilon
    }

    pub fn inverse_augmented(&self) -> bool {
        self.inverse_augmented
    }

    pub fn config_hash(&self) -> Option<&str> {
        self.config_hash.as_deref()
    }

    pub fn set_config_hash(&mut self, hash: impl Into<String>) {
        self.config_hash = Some(hash.into());
    }

    pub fn node_id(&self, name: &str) -> Option<RelationId> {
        self.nodes.iter().position(|n| n == name).map(|i| RelationId(i as u32))
    }

    pub fn edge_type_id(&self, pattern: &str) -> Option<usize> {
        let key: String = pattern.chars().filter(|&c| c != '_').collect();
        self.edge_types
            .iter()
            .position(|t| t.chars().filter(|&c| c != '_').collect::<String>() == key)
    }

    /// Sources of `pattern`-typed edges pointing at `r`; empty for an
    /// unknown pattern.
    pub fn meta_neighborhood(&self, pattern: &str, r: RelationId) -> BTreeSet<RelationId> {
        let Some(t) = self.edge_type_id(pattern) else {
            return BTreeSet::new();
        };
        self.edges
            .iter()
            .filter(|e| e.edge_type == t && e.dst == r)
            .map(|e| e.src)
            .collect()
    }

    /// The same graph with node ids renumbered by `perm` (old id -> new id).
    pub fn permute_nodes(&self, perm: &[RelationId]) -> Result<Self> {
        if perm.len() != self.nodes.len() {
            return Err(Error::PartialMap(format!(
                "permutation covers {} of {} relations",
                perm.len(),
                self.nodes.len()
            )));
        }
        let mut nodes = vec![String::new(); self.nodes.len()];
        let mut seen = vec![false; self.nodes.len()];
        for (old, &new) in perm.iter().enumerate() {
            if new.index() >= nodes.len() || seen[new.index()] {
                return Err(Error::PartialMap("node map is not a permutation".into()));
            }
            seen[new.index()] = true;
            nodes[new.index()] = self.nodes[old].clone();
        }
        let edges = self
            .edges
            .iter()
            .map(|e| MetaEdge {
                src: perm[e.src.index()],
                dst: perm[e.dst.index()],
                ..*e
            })
            .collect();
        let mut out = RelationGraph::from_parts(
            nodes,
            self.edge_types.clone(),
            edges,
            self.epsilon,
            self.inverse_augmented,
        )?;
        out.config_hash = self.config_hash.clone();
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = JsonGraph {
            nodes: self.nodes.clone(),
            edge_types: self.edge_types.clone(),
            edges: self
                .edges
                .iter()
                .map(|e| JsonEdge {
                    edge_type: self.edge_types[e.edge_type].clone(),
                    src: self.nodes[e.src.index()].clone(),
                    dst: self.nodes[e.dst.index()].clone(),
                    w: e.weight,
                })
                .collect(),
            epsilon: self.epsilon,
            inverse_augmented: self.inverse_augmented,
            config_hash: self.config_hash.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: JsonGraph = serde_json::from_str(text)?;
        let node_ids = index_names(&doc.nodes, "relation")?;
        let type_ids = index_names(&doc.edge_types, "edge type")?;
        let lookup = |map: &HashMap<String, usize>, name: &str, kind: &str| {
            map.get(name)
                .copied()
                .ok_or_else(|| Error::InvalidArgument(format!("edge references unknown {kind} `{name}`")))
        };
        let edges = doc
            .edges
            .iter()
            .map(|e| {
                Ok(MetaEdge {
                    edge_type: lookup(&type_ids, &e.edge_type, "edge type")?,
                    src: RelationId(lookup(&node_ids, &e.src, "relation")? as u32),
                    dst: RelationId(lookup(&node_ids, &e.dst, "relation")? as u32),
                    weight: e.w,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rg = RelationGraph::from_parts(doc.nodes, doc.edge_types, edges, doc.epsilon, doc.inverse_augmented)?;
        rg.config_hash = doc.config_hash;
        Ok(rg)
    }

    /// Line-oriented export: `node`, `type` and `edge` records after a
    /// metadata header.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        if let Some(h) = &self.config_hash {
            let _ = writeln!(s, "# config_hash: {h}");
        }
        let _ = writeln!(s, "epsilon\t{}", self.epsilon);
        let _ = writeln!(s, "inverse_augmented\t{}", self.inverse_augmented);
        for n in &self.nodes {
            let _ = writeln!(s, "node\t{n}");
        }
        for t in &self.edge_types {
            let _ = writeln!(s, "type\t{t}");
        }
        for e in &self.edges {
            let _ = writeln!(
                s,
                "edge\t{}\t{}\t{}\t{}",
                self.edge_types[e.edge_type],
                self.nodes[e.src.index()],
                self.nodes[e.dst.index()],
                e.weight
            );
        }
        s
    }

    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut config_hash = None;
        let mut epsilon = 1;
        let mut inverse_augmented = false;
        let mut nodes = Vec::new();
        let mut types = Vec::new();
        let mut raw_edges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let bad = |message: String| Error::Parse { line: i + 1, message };
            if let Some(h) = line.strip_prefix("# config_hash: ") {
                config_hash = Some(h.trim().to_owned());
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            match cols.as_slice() {
                ["epsilon", v] => epsilon = v.parse().map_err(|_| bad(format!("bad epsilon `{v}`")))?,
                ["inverse_augmented", v] => {
                    inverse_augmented = v.parse().map_err(|_| bad(format!("bad flag `{v}`")))?
                }
                ["node", n] => nodes.push((*n).to_owned()),
                ["type", t] => types.push((*t).to_owned()),
                ["edge", t, a, b, w] => {
                    let w: u64 = w.parse().map_err(|_| bad(format!("bad weight `{w}`")))?;
                    raw_edges.push((i + 1, t.to_string(), a.to_string(), b.to_string(), w));
                }
                _ => return Err(bad(format!("unrecognized record `{line}`"))),
            }
        }
        let node_ids = index_names(&nodes, "relation")?;
        let type_ids = index_names(&types, "edge type")?;
        let edges = raw_edges
            .into_iter()
            .map(|(line, t, a, b, w)| {
                let get = |m: &HashMap<String, usize>, k: &str| {
                    m.get(k).copied().ok_or_else(|| Error::Parse {
                        line,
                        message: format!("unknown name `{k}`"),
                    })
                };
                Ok(MetaEdge {
                    edge_type: get(&type_ids, &t)?,
                    src: RelationId(get(&node_ids, &a)? as u32),
                    dst: RelationId(get(&node_ids, &b)? as u32),
                    weight: w,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rg = RelationGraph::from_parts(nodes, types, edges, epsilon, inverse_augmented)?;
        rg.config_hash = config_hash;
        Ok(rg)
    }

    pub fn export(&self, path: impl AsRef<Path>, format: GraphFormat) -> Result<()> {
        let path = path.as_ref();
        let text = match format {
            GraphFormat::Json => self.to_json()? + "\n",
            GraphFormat::Tsv => self.to_tsv(),
        };
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn import(path: impl AsRef<Path>, format: GraphFormat) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        match format {
            GraphFormat::Json => RelationGraph::from_json(&text),
            GraphFormat::Tsv => RelationGraph::from_tsv(&text),
        }
    }
}

fn index_names(names: &[String], kind: &str) -> Result<HashMap<String, usize>> {
    let mut map = HashMap::with_capacity(names.len());
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.clone(), i).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate {kind} name `{n}`")));
        }
    }
    Ok(map)
}

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    nodes: Vec<String>,
    edge_types: Vec<String>,
    edges: Vec<JsonEdge>,
    epsilon: u64,
    #[serde(default)]
    inverse_augmented: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonEdge {
    #[serde(rename = "type")]
    edge_type: String,
    src: String,
    dst: String,
    w: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn ikg_graph(epsilon: u64) -> RelationGraph {
        let v = Vocabulary::from_pattern_names(&["ff_o", "fff_o"]).unwrap();
        RelationGraph::build(&fixtures::ikg(), &v, epsilon, MatchOptions::default()).unwrap()
    }

    #[test]
    fn ikg_edges_and_neighborhoods() {
        let rg = ikg_graph(1);
        assert_eq!(rg.num_nodes(), 5);
        assert_eq!(rg.num_edges(), 7);
        let r = |n: &str| rg.node_id(n).unwrap();
        assert_eq!(rg.meta_neighborhood("fff_o", r("r3")), BTreeSet::from([r("r1")]));
        assert_eq!(
            rg.meta_neighborhood("ff_o", r("r3")),
            BTreeSet::from([r("r2"), r("r4"), r("r5")])
        );
        assert!(rg.meta_neighborhood("nope", r("r3")).is_empty());
    }

    #[test]
    fn epsilon_two_keeps_heavy_class() {
        let rg = ikg_graph(2);
        assert_eq!(rg.num_edges(), 1);
        assert_eq!(rg.edge_types()[rg.edges()[0].edge_type], "fffo");
        assert_eq!(rg.edges()[0].weight, 3);
    }

    #[test]
    fn zero_epsilon_rejected() {
        let v = Vocabulary::from_pattern_names(&["ffo"]).unwrap();
        assert!(RelationGraph::build(&fixtures::ikg(), &v, 0, MatchOptions::default()).is_err());
    }

    #[test]
    fn text_round_trips() {
        let mut rg = ikg_graph(1);
        rg.set_config_hash("abc123");
        assert_eq!(RelationGraph::from_json(&rg.to_json().unwrap()).unwrap(), rg);
        assert_eq!(RelationGraph::from_tsv(&rg.to_tsv()).unwrap(), rg);
    }

    #[test]
    fn permutation_relabels_edges() {
        let rg = ikg_graph(1);
        let perm: Vec<RelationId> = [4, 3, 2, 1, 0].into_iter().map(RelationId).collect();
        let p = rg.permute_nodes(&perm).unwrap();
        assert_eq!(p.nodes()[4], "r1");
        assert_eq!(
            p.meta_neighborhood("fffo", RelationId(2)),
            BTreeSet::from([RelationId(4)])
        );
    }
}
