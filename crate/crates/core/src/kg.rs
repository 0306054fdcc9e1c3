//! In-memory knowledge graph.
//!
//! Entities and relations are interned to dense ids in order of first
//! appearance. The graph is immutable once built and keeps three lookup
//! structures: triples by relation, by `(relation, head)` and by
//! `(relation, tail)`, plus per-entity incident edge lists used by the
//! pattern matcher.
//!
//! Inverse augmentation renumbers relations so that original relation `k`
//! becomes `2k` and its symbolic inverse becomes `2k + 1`.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Suffix appended to a relation name to form its symbolic inverse.
pub const INVERSE_SUFFIX: &str = "^-1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationId(pub u32);

impl EntityId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// A directed labelled edge `relation(head, tail)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: EntityId,
    pub relation: RelationId,
    pub tail: EntityId,
}

impl Triple {
    pub fn new(head: EntityId, relation: RelationId, tail: EntityId) -> Self {
        Triple { head, relation, tail }
    }
}

/// Input format accepted by [`load_triples`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TripleFormat {
    Tsv,
    NTriples,
}

impl FromStr for TripleFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(TripleFormat::Tsv),
            "nt" | "ntriples" | "n-triples" => Ok(TripleFormat::NTriples),
            other => Err(Error::InvalidArgument(format!("unknown triple format `{other}`"))),
        }
    }
}

/// Summary emitted as JSON by the CLI.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphStats {
    pub entities: usize,
    pub relations: usize,
    pub triples: usize,
    pub inverse_augmented: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KnowledgeGraph {
    entity_names: Vec<String>,
    entity_index: HashMap<String, EntityId>,
    relation_names: Vec<String>,
    relation_index: HashMap<String, RelationId>,
    triples: Vec<Triple>,
    triple_set: HashSet<Triple>,
    by_relation: Vec<Vec<(EntityId, EntityId)>>,
    by_relation_head: HashMap<(RelationId, EntityId), Vec<EntityId>>,
    by_relation_tail: HashMap<(RelationId, EntityId), Vec<EntityId>>,
    outgoing: Vec<Vec<(RelationId, EntityId)>>,
    incoming: Vec<Vec<(RelationId, EntityId)>>,
    inverse_augmented: bool,
    duplicates: usize,
}

/// Incrementally interns names and collects a deduplicated triple set.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    entity_names: Vec<String>,
    entity_index: HashMap<String, EntityId>,
    relation_names: Vec<String>,
    relation_index: HashMap<String, RelationId>,
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
    duplicates: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_entity(&mut self, name: &str) -> EntityId {
        if let Some(&id) = self.entity_index.get(name) {
            return id;
        }
        let id = EntityId(self.entity_names.len() as u32);
        self.entity_names.push(name.to_owned());
        self.entity_index.insert(name.to_owned(), id);
        id
    }

    pub fn intern_relation(&mut self, name: &str) -> RelationId {
        if let Some(&id) = self.relation_index.get(name) {
            return id;
        }
        let id = RelationId(self.relation_names.len() as u32);
        self.relation_names.push(name.to_owned());
        self.relation_index.insert(name.to_owned(), id);
        id
    }

    /// Adds a named triple; returns `false` when it was a duplicate.
    pub fn add(&mut self, head: &str, relation: &str, tail: &str) -> bool {
        let h = self.intern_entity(head);
        let r = self.intern_relation(relation);
        let t = self.intern_entity(tail);
        self.push(Triple::new(h, r, t))
    }

    /// Adds a triple over already interned ids.
    pub fn add_ids(&mut self, triple: Triple) -> Result<bool> {
        check_id("entity", triple.head.index(), self.entity_names.len())?;
        check_id("entity", triple.tail.index(), self.entity_names.len())?;
        check_id("relation", triple.relation.index(), self.relation_names.len())?;
        Ok(self.push(triple))
    }

    fn push(&mut self, triple: Triple) -> bool {
        if self.seen.insert(triple) {
            self.triples.push(triple);
            true
        } else {
            self.duplicates += 1;
            false
        }
    }

    pub fn build(self) -> KnowledgeGraph {
        KnowledgeGraph::assemble(
            self.entity_names,
            self.entity_index,
            self.relation_names,
            self.relation_index,
            self.triples,
            false,
            self.duplicates,
        )
    }
}

fn check_id(kind: &'static str, id: usize, len: usize) -> Result<()> {
    if id < len {
        Ok(())
    } else {
        Err(Error::InvalidId { kind, id, len })
    }
}

impl KnowledgeGraph {
    fn assemble(
        entity_names: Vec<String>,
        entity_index: HashMap<String, EntityId>,
        relation_names: Vec<String>,
        relation_index: HashMap<String, RelationId>,
        triples: Vec<Triple>,
        inverse_augmented: bool,
        duplicates: usize,
    ) -> Self {
        let n_ent = entity_names.len();
        let n_rel = relation_names.len();
        let mut by_relation = vec![Vec::new(); n_rel];
        let mut by_relation_head: HashMap<(RelationId, EntityId), Vec<EntityId>> = HashMap::new();
        let mut by_relation_tail: HashMap<(RelationId, EntityId), Vec<EntityId>> = HashMap::new();
        let mut outgoing = vec![Vec::new(); n_ent];
        let mut incoming = vec![Vec::new(); n_ent];
        for t in &triples {
            by_relation[t.relation.index()].push((t.head, t.tail));
            by_relation_head.entry((t.relation, t.head)).or_default().push(t.tail);
            by_relation_tail.entry((t.relation, t.tail)).or_default().push(t.head);
            outgoing[t.head.index()].push((t.relation, t.tail));
            incoming[t.tail.index()].push((t.relation, t.head));
        }
        for v in &mut by_relation {
            v.sort_unstable();
        }
        for v in by_relation_head.values_mut() {
            v.sort_unstable();
        }
        for v in by_relation_tail.values_mut() {
            v.sort_unstable();
        }
        for v in outgoing.iter_mut().chain(incoming.iter_mut()) {
            v.sort_unstable();
        }
        let triple_set = triples.iter().copied().collect();
        KnowledgeGraph {
            entity_names,
            entity_index,
            relation_names,
            relation_index,
            triples,
            triple_set,
            by_relation,
            by_relation_head,
            by_relation_tail,
            outgoing,
            incoming,
            inverse_augmented,
            duplicates,
        }
    }

    /// Builds a graph over anonymous ids `e0..` / `r0..`.
    pub fn from_id_triples(
        num_entities: usize,
        num_relations: usize,
        triples: impl IntoIterator<Item = Triple>,
    ) -> Result<Self> {
        let mut b = GraphBuilder::new();
        for i in 0..num_entities {
            b.intern_entity(&format!("e{i}"));
        }
        for i in 0..num_relations {
            b.intern_relation(&format!("r{i}"));
        }
        for t in triples {
            b.add_ids(t)?;
        }
        Ok(b.build())
    }

    /// Builds a graph from `(head, relation, tail)` name tuples.
    pub fn from_named_triples<'a>(triples: impl IntoIterator<Item = (&'a str, &'a str, &'a str)>) -> Self {
        let mut b = GraphBuilder::new();
        for (h, r, t) in triples {
            b.add(h, r, t);
        }
        b.build()
    }

    pub fn num_entities(&self) -> usize {
        self.entity_names.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relation_names.len()
    }

    pub fn num_triples(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn entity_ids(&self) -> impl Iterator<Item = EntityId> + '_ {
        (0..self.entity_names.len() as u32).map(EntityId)
    }

    pub fn relation_ids(&self) -> impl Iterator<Item = RelationId> + '_ {
        (0..self.relation_names.len() as u32).map(RelationId)
    }

    pub fn entity_name(&self, e: EntityId) -> &str {
        &self.entity_names[e.index()]
    }

    pub fn relation_name(&self, r: RelationId) -> &str {
        &self.relation_names[r.index()]
    }

    pub fn entity_names(&self) -> &[String] {
        &self.entity_names
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relation_names
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_index.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_index.get(name).copied()
    }

    pub fn check_entity(&self, e: EntityId) -> Result<()> {
        check_id("entity", e.index(), self.num_entities())
    }

    pub fn check_relation(&self, r: RelationId) -> Result<()> {
        check_id("relation", r.index(), self.num_relations())
    }

    pub fn contains(&self, head: EntityId, relation: RelationId, tail: EntityId) -> bool {
        self.triple_set.contains(&Triple::new(head, relation, tail))
    }

    pub fn contains_triple(&self, t: &Triple) -> bool {
        self.triple_set.contains(t)
    }

    /// `(head, tail)` pairs of a relation, sorted.
    pub fn relation_pairs(&self, r: RelationId) -> &[(EntityId, EntityId)] {
        &self.by_relation[r.index()]
    }

    /// Tails `t` with `r(head, t)`, sorted.
    pub fn tails(&self, r: RelationId, head: EntityId) -> &[EntityId] {
        self.by_relation_head.get(&(r, head)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Heads `h` with `r(h, tail)`, sorted.
    pub fn heads(&self, r: RelationId, tail: EntityId) -> &[EntityId] {
        self.by_relation_tail.get(&(r, tail)).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Outgoing `(relation, tail)` edges of an entity.
    pub fn outgoing(&self, e: EntityId) -> &[(RelationId, EntityId)] {
        &self.outgoing[e.index()]
    }

    /// Incoming `(relation, head)` edges of an entity.
    pub fn incoming(&self, e: EntityId) -> &[(RelationId, EntityId)] {
        &self.incoming[e.index()]
    }

    /// The neighborhood `{h | r(h, t)}` of `t` under `r`.
    pub fn neighborhood(&self, r: RelationId, t: EntityId) -> BTreeSet<EntityId> {
        self.heads(r, t).iter().copied().collect()
    }

    pub fn inverse_augmented(&self) -> bool {
        self.inverse_augmented
    }

    pub fn duplicate_count(&self) -> usize {
        self.duplicates
    }

    /// Partner of `r` under inverse pairing, if the graph is augmented.
    pub fn inverse_of(&self, r: RelationId) -> Option<RelationId> {
        self.inverse_augmented.then_some(RelationId(r.0 ^ 1))
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            entities: self.num_entities(),
            relations: self.num_relations(),
            triples: self.num_triples(),
            inverse_augmented: self.inverse_augmented,
        }
    }

    /// Adds `r'(t, h)` for every `r(h, t)`. Original relation `k` becomes
    /// `2k`, its inverse `2k + 1`.
    pub fn augment_inverses(&self) -> Result<Self> {
        if self.inverse_augmented {
            return Err(Error::AlreadyAugmented);
        }
        let mut relation_names = Vec::with_capacity(2 * self.num_relations());
        for name in &self.relation_names {
            relation_names.push(name.clone());
            relation_names.push(format!("{name}{INVERSE_SUFFIX}"));
        }
        let relation_index = index_names(&relation_names, RelationId);
        let mut triples = Vec::with_capacity(2 * self.triples.len());
        triples.extend(
            self.triples
                .iter()
                .map(|t| Triple::new(t.head, augmented_id(t.relation), t.tail)),
        );
        triples.extend(
            self.triples
                .iter()
                .map(|t| Triple::new(t.tail, RelationId(augmented_id(t.relation).0 + 1), t.head)),
        );
        Ok(Self::assemble(
            self.entity_names.clone(),
            self.entity_index.clone(),
            relation_names,
            relation_index,
            triples,
            true,
            self.duplicates,
        ))
    }

    /// Removes the symbolic inverses added by [`Self::augment_inverses`].
    pub fn drop_inverses(&self) -> Result<Self> {
        if !self.inverse_augmented {
            return Err(Error::InvalidArgument("graph is not inverse-augmented".into()));
        }
        let relation_names: Vec<String> = self.relation_names.iter().step_by(2).cloned().collect();
        let relation_index = index_names(&relation_names, RelationId);
        let triples = self
            .triples
            .iter()
            .filter(|t| t.relation.0 % 2 == 0)
            .map(|t| Triple::new(t.head, RelationId(t.relation.0 / 2), t.tail))
            .collect();
        Ok(Self::assemble(
            self.entity_names.clone(),
            self.entity_index.clone(),
            relation_names,
            relation_index,
            triples,
            false,
            self.duplicates,
        ))
    }

    /// Returns a copy without the listed triples; names and ids are kept.
    pub fn without_triples(&self, removed: &HashSet<Triple>) -> Self {
        let triples = self.triples.iter().filter(|t| !removed.contains(t)).copied().collect();
        Self::assemble(
            self.entity_names.clone(),
            self.entity_index.clone(),
            self.relation_names.clone(),
            self.relation_index.clone(),
            triples,
            self.inverse_augmented,
            self.duplicates,
        )
    }
}

fn index_names<I: Copy>(names: &[String], mk: impl Fn(u32) -> I) -> HashMap<String, I> {
    names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), mk(i as u32)))
        .collect()
}

/// Parses `head\trelation\ttail` rows. Blank lines are skipped.
/// Id of raw relation `r` after [`KnowledgeGraph::augment_inverses`]; its
/// inverse is the next id.
pub fn augmented_id(r: RelationId) -> RelationId {
    RelationId(2 * r.0)
}

pub fn parse_tsv(text: &str) -> Result<KnowledgeGraph> {
    let mut b = GraphBuilder::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        if let Some(pos) = fields.iter().position(|f| f.is_empty()) {
            return Err(Error::Parse {
                line: i + 1,
                message: format!("field {} is empty", pos + 1),
            });
        }
        b.add(fields[0], fields[1], fields[2]);
    }
    Ok(b.build())
}

/// Parses the `<iri> <iri> <iri> .` subset of N-Triples.
pub fn parse_ntriples(text: &str) -> Result<KnowledgeGraph> {
    let mut b = GraphBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse { line: i + 1, message };
        let mut rest = line;
        let mut terms = Vec::with_capacity(3);
        for _ in 0..3 {
            rest = rest.trim_start();
            if rest.starts_with('"') {
                return Err(err("literals are not supported".into()));
            }
            if !rest.starts_with('<') {
                return Err(err(format!("expected `<iri>`, found `{}`", first_token(rest))));
            }
            let end = rest.find('>').ok_or_else(|| err("unterminated IRI".into()))?;
            let iri = &rest[1..end];
            if iri.is_empty() || iri.contains(char::is_whitespace) {
                return Err(err(format!("invalid IRI `<{iri}>`")));
            }
            terms.push(iri);
            rest = &rest[end + 1..];
        }
        if rest.trim() != "." {
            return Err(err(format!("expected terminating `.`, found `{}`", rest.trim())));
        }
        b.add(terms[0], terms[1], terms[2]);
    }
    Ok(b.build())
}

fn first_token(s: &str) -> &str {
    s.split_whitespace().next().unwrap_or("")
}

/// Reads a triple file. Duplicate rows are dropped and counted.
pub fn load_triples(path: impl AsRef<Path>, format: TripleFormat) -> Result<KnowledgeGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let g = match format {
        TripleFormat::Tsv => parse_tsv(&text)?,
        TripleFormat::NTriples => parse_ntriples(&text)?,
    };
    if g.duplicate_count() > 0 {
        log::warn!(
            "{}: dropped {} duplicate triple(s)",
            path.display(),
            g.duplicate_count()
        );
    }
    Ok(g)
}

/// An entity map and a relation map from a source graph into a target graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomorphism {
    pub entity_map: Vec<EntityId>,
    pub relation_map: Vec<RelationId>,
}

impl Monomorphism {
    pub fn identity(g: &KnowledgeGraph) -> Self {
        Monomorphism {
            entity_map: g.entity_ids().collect(),
            relation_map: g.relation_ids().collect(),
        }
    }

    /// Maps by name through an explicit relation renaming; entities are
    /// matched through `entity_names` the same way.
    pub fn from_names(
        src: &KnowledgeGraph,
        dst: &KnowledgeGraph,
        entity_names: &[(&str, &str)],
        relation_names: &[(&str, &str)],
    ) -> Result<Self> {
        let ent: HashMap<&str, &str> = entity_names.iter().copied().collect();
        let rel: HashMap<&str, &str> = relation_names.iter().copied().collect();
        let entity_map = src
            .entity_names()
            .iter()
            .map(|n| {
                ent.get(n.as_str())
                    .and_then(|m| dst.entity_id(m))
                    .ok_or_else(|| Error::PartialMap(format!("entity `{n}` has no image")))
            })
            .collect::<Result<_>>()?;
        let relation_map = src
            .relation_names()
            .iter()
            .map(|n| {
                rel.get(n.as_str())
                    .and_then(|m| dst.relation_id(m))
                    .ok_or_else(|| Error::PartialMap(format!("relation `{n}` has no image")))
            })
            .collect::<Result<_>>()?;
        Ok(Monomorphism {
            entity_map,
            relation_map,
        })
    }
}

/// True iff both maps are injective and every mapped source triple exists
/// in `dst`.
pub fn check_monomorphism(src: &KnowledgeGraph, dst: &KnowledgeGraph, m: &Monomorphism) -> Result<bool> {
    if m.entity_map.len() != src.num_entities() {
        return Err(Error::PartialMap(format!(
            "entity map covers {} of {} entities",
            m.entity_map.len(),
            src.num_entities()
        )));
    }
    if m.relation_map.len() != src.num_relations() {
        return Err(Error::PartialMap(format!(
            "relation map covers {} of {} relations",
            m.relation_map.len(),
            src.num_relations()
        )));
    }
    for &e in &m.entity_map {
        dst.check_entity(e)?;
    }
    for &r in &m.relation_map {
        dst.check_relation(r)?;
    }
    let distinct_e: HashSet<_> = m.entity_map.iter().collect();
    let distinct_r: HashSet<_> = m.relation_map.iter().collect();
    if distinct_e.len() != m.entity_map.len() || distinct_r.len() != m.relation_map.len() {
        return Ok(false);
    }
    Ok(src.triples().iter().all(|t| {
        dst.contains(
            m.entity_map[t.head.index()],
            m.relation_map[t.relation.index()],
            m.entity_map[t.tail.index()],
        )
    }))
}
