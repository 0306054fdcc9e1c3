//! Graphlet mining, relation graphs and a conditional two-level
//! message-passing encoder for inductive link prediction on knowledge graphs.

pub mod autodiff;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod kg;
pub mod matcher;
pub mod relation_graph;
pub mod verify;
pub mod vocabulary;

pub use error::{Error, Result};
pub use kg::{EntityId, KnowledgeGraph, RelationId, Triple};
pub use vocabulary::{builtin_vocabulary, GraphletPattern, MatchMode, Vocabulary};
