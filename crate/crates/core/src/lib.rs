//! Research-topic maps built from self-reported researcher profiles.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`ingest`] parses profile and university records (or synthesizes them),
//! 2. [`normalize`] turns free-text topic fields into a canonical [`TopicLexicon`],
//! 3. [`graph`] counts topic co-occurrence and computes network statistics,
//! 4. [`layout`] embeds the graph, removes label overlaps, clusters the nodes
//!    and draws country polygons,
//! 5. [`lod`] precomputes eight semantic-zoom levels of visible labels,
//! 6. [`overlay`] evaluates citation, human-resource, department and document
//!    overlays against the annotated corpus.
//!
//! ```
//! use topicmap::ingest::{Corpus, ResearcherProfile, University, Region};
//! use topicmap::normalize::canonicalize;
//! use topicmap::graph::build_graph;
//!
//! let uni = University::new("u1", "Example University", Region::Us);
//! let profiles = vec![
//!     ResearcherProfile::new("r1", "u1", 10, "data mining, algorithms"),
//!     ResearcherProfile::new("r2", "u1", 20, "Algorithm; data mining"),
//! ];
//! let corpus = Corpus::new(profiles, vec![uni]).unwrap();
//! let (lexicon, annotated) = canonicalize(&corpus);
//! assert_eq!(lexicon.len(), 2);
//!
//! let graph = build_graph(&annotated, &lexicon);
//! assert_eq!(graph.edges().len(), 1);
//! assert_eq!(graph.edges()[0].weight, 2);
//! ```

pub mod geom;
pub mod graph;
pub mod ingest;
pub mod layout;
pub mod lod;
pub mod normalize;
pub mod overlay;

mod topic_id;

pub use graph::{GraphStats, TopicGraph};
pub use ingest::{Corpus, ResearcherProfile, University};
pub use layout::{CountryMap, Embedding};
pub use lod::LevelView;
pub use normalize::TopicLexicon;
pub use overlay::OverlayResult;
pub use topic_id::{ParseTopicIdError, TopicId};
