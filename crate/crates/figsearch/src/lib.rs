//! figsearch — a search engine for geometric constructions.
//!
//! Figures are described procedurally (an ordered list of construction
//! steps). For searching they are compiled into *ontological graphs*:
//! declarative networks of concept instances (points, segments, lines,
//! circles, angles) and relations (membership, center, radius, parallelism,
//! orthogonality, reified ratios). Queries — written in a small controlled
//! language or given as figures — compile the same way, and a figure answers
//! a query when it contains the query graph as a subgraph.
//!
//! When a query is over-specified and matches nothing, it is weakened: the
//! procedural description yields a *dependency lattice* over the constructed
//! objects, and relations and objects are removed bottom-up, one at a time,
//! re-searching after every removal until something matches.
//!
//! The accompanying guide in `book/` walks through each of these ideas; its
//! code snippets double as this crate's doctests.

pub mod construction;
pub mod cql;
pub mod dot;
pub mod engine;
pub mod inference;
pub mod lattice;
pub mod matcher;
pub mod onto;
pub mod ranking;
pub mod store;

pub mod cli;

pub use construction::{compile_figure, validate, ConstructionStep, Figure};
pub use engine::{answer_query, QueryAnswer, QuerySource, StopReason};
pub use inference::{infer, AngleMode};
pub use matcher::{find_embeddings, search_corpus, Embedding, MatchResult};
pub use onto::{AngleValue, ConceptKind, OntoGraph, Rational, RelationKind};
pub use store::{ingest, load_corpus, CompiledStore};

/// Book chapters compile as doctests so the guide never drifts from the API.
#[cfg(doctest)]
mod booktest {
    macro_rules! booktest {
        ($name:ident, $path:literal) => {
            #[doc = include_str!(concat!("../../../book/src/", $path))]
            mod $name {}
        };
    }

    booktest!(introduction, "introduction.md");
    booktest!(constructions, "constructions.md");
    booktest!(ontological_graphs, "ontological-graphs.md");
    booktest!(inference, "inference.md");
    booktest!(query_language, "query-language.md");
    booktest!(matching_and_ranking, "matching-and-ranking.md");
    booktest!(reduction, "reduction.md");
    booktest!(corpus_format, "corpus-format.md");
}
