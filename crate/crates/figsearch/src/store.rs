//! Corpus files and the compiled figure store.
//!
//! A corpus is a UTF-8 line-delimited file: one JSON figure per line, blank
//! lines ignored. The bundled mini corpus (see [`mini_corpus`]) is the
//! normative example of the format; the guide's corpus chapter documents the
//! schema field by field.
//!
//! Ingestion compiles and infers every figure, builds its dependency
//! lattice, and indexes per-figure censuses. The resulting store is
//! immutable. An optional cache file keyed by a content hash of the corpus
//! avoids recompilation.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::construction::{compile, Figure, Violation};
use crate::inference::{infer, AngleMode, InferenceError};
use crate::lattice::{build_from_compiled, DependencyLattice, LatticeError};
use crate::onto::{Census, OntoGraph};

/// The bundled mini corpus, used by the test suite and handy for a first
/// run: `figsearch stats --corpus crates/figsearch/corpus/mini.jsonl`.
pub fn mini_corpus() -> &'static str {
    include_str!("../corpus/mini.jsonl")
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("corpus line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("duplicate figure id `{0}`")]
    DuplicateId(String),
    #[error("figure `{id}` does not validate: {}", crate::store::join_violations(.violations))]
    FigureInvalid { id: String, violations: Vec<Violation> },
    #[error("figure `{id}`: {source}")]
    Inference { id: String, source: InferenceError },
    #[error("figure `{id}`: {source}")]
    Lattice { id: String, source: LatticeError },
    #[error("cache at {path} does not match the corpus content")]
    CacheMismatch { path: String },
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(Violation::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Parse corpus text; errors carry 1-based line numbers.
pub fn parse_corpus(text: &str) -> Result<Vec<Figure>, StoreError> {
    let mut figures = Vec::new();
    let mut ids = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let figure: Figure = serde_json::from_str(line).map_err(|e| StoreError::Format {
            line: i + 1,
            message: e.to_string(),
        })?;
        if ids.insert(figure.id.clone(), i).is_some() {
            return Err(StoreError::DuplicateId(figure.id));
        }
        figures.push(figure);
    }
    Ok(figures)
}

/// Load a corpus file.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<Figure>, StoreError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&text)
}

/// Canonical serialization: one JSON object per line, field order fixed.
pub fn serialize_corpus(figures: &[Figure]) -> String {
    let mut out = String::new();
    for figure in figures {
        out.push_str(&serde_json::to_string(figure).expect("figure serializes"));
        out.push('\n');
    }
    out
}

/// One ingested figure: its source, compiled-and-inferred graph, dependency
/// lattice, and census.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StoredFigure {
    pub figure: Figure,
    pub graph: OntoGraph,
    pub lattice: DependencyLattice,
    pub census: Census,
}

/// An immutable, queryable collection of compiled figures.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CompiledStore {
    angle_mode: AngleMode,
    figures: BTreeMap<String, StoredFigure>,
}

impl CompiledStore {
    pub fn angle_mode(&self) -> AngleMode {
        self.angle_mode
    }

    pub fn len(&self) -> usize {
        self.figures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.figures.is_empty()
    }

    /// Figures in stable id order.
    pub fn figures(&self) -> impl Iterator<Item = &StoredFigure> {
        self.figures.values()
    }

    pub fn get(&self, id: &str) -> Option<&StoredFigure> {
        self.figures.get(id)
    }

    /// Figure count plus summed censuses, the `stats` report.
    pub fn totals(&self) -> (usize, Census) {
        let mut total = Census::default();
        for entry in self.figures.values() {
            for (kind, count) in &entry.census.concepts {
                *total.concepts.entry(*kind).or_insert(0) += count;
            }
            total.ratio_nodes += entry.census.ratio_nodes;
            for (kind, count) in &entry.census.relations {
                *total.relations.entry(*kind).or_insert(0) += count;
            }
        }
        (self.figures.len(), total)
    }
}

/// Compile, infer, and index every figure. Deterministic: identical input
/// yields a byte-identical serialized store.
pub fn ingest(figures: &[Figure], mode: AngleMode) -> Result<CompiledStore, StoreError> {
    let mut store = BTreeMap::new();
    for figure in figures {
        let compiled = compile(figure).map_err(|e| match e {
            crate::construction::CompileError::ValidationFailed(violations) => {
                StoreError::FigureInvalid {
                    id: figure.id.clone(),
                    violations,
                }
            }
        })?;
        let graph = infer(&compiled.graph, mode).map_err(|source| StoreError::Inference {
            id: figure.id.clone(),
            source,
        })?;
        let lattice = build_from_compiled(&compiled).map_err(|source| StoreError::Lattice {
            id: figure.id.clone(),
            source,
        })?;
        let census = graph.census();
        if store
            .insert(
                figure.id.clone(),
                StoredFigure {
                    figure: figure.clone(),
                    graph,
                    lattice,
                    census,
                },
            )
            .is_some()
        {
            return Err(StoreError::DuplicateId(figure.id.clone()));
        }
    }
    Ok(CompiledStore {
        angle_mode: mode,
        figures: store,
    })
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    corpus_sha256: String,
    store: CompiledStore,
}

fn corpus_hash(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    format!("{:x}", hasher.finalize())
}

/// Serialize the compiled store, keyed by the corpus content hash.
pub fn write_cache(
    store: &CompiledStore,
    corpus_text: &str,
    path: impl AsRef<Path>,
) -> Result<(), StoreError> {
    let path = path.as_ref();
    let cache = CacheFile {
        corpus_sha256: corpus_hash(corpus_text),
        store: store.clone(),
    };
    let body = serde_json::to_string(&cache).expect("store serializes");
    std::fs::write(path, body).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Load a cache written by [`write_cache`]; fails when the hash no longer
/// matches the corpus text.
pub fn load_cache(path: impl AsRef<Path>, corpus_text: &str) -> Result<CompiledStore, StoreError> {
    let path = path.as_ref();
    let body = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let cache: CacheFile = serde_json::from_str(&body).map_err(|e| StoreError::Format {
        line: 0,
        message: e.to_string(),
    })?;
    if cache.corpus_sha256 != corpus_hash(corpus_text) {
        return Err(StoreError::CacheMismatch {
            path: path.display().to_string(),
        });
    }
    let mut store = cache.store;
    for entry in store.figures.values_mut() {
        entry.graph.rebuild_index();
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::onto::ConceptKind;

    #[test]
    fn bundled_corpus_loads_and_ingests() {
        let figures = parse_corpus(mini_corpus()).unwrap();
        assert!(figures.len() >= 20, "mini corpus holds at least 20 figures");
        assert!(figures.iter().any(|f| f.id == "013"));
        let store = ingest(&figures, AngleMode::ConstrainedOnly).unwrap();
        let entry = store.get("013").unwrap();
        assert_eq!(entry.census.concept(ConceptKind::Point), 7);
        assert_eq!(entry.census.concept(ConceptKind::Segment), 12);
        assert_eq!(entry.census.ratio_nodes, 3);
    }

    #[test]
    fn empty_corpus_is_valid() {
        assert!(parse_corpus("\n\n").unwrap().is_empty());
    }

    #[test]
    fn duplicate_ids_rejected() {
        let text = r#"{"id":"a","title":"","steps":[{"op":"free_point","name":"A"}],"draw":[]}
{"id":"a","title":"","steps":[{"op":"free_point","name":"A"}],"draw":[]}"#;
        assert!(matches!(
            parse_corpus(text),
            Err(StoreError::DuplicateId(id)) if id == "a"
        ));
    }

    #[test]
    fn format_errors_carry_line_numbers() {
        let text = "{\"id\":\"a\",\"title\":\"\",\"steps\":[{\"op\":\"free_point\",\"name\":\"A\"}],\"draw\":[]}\nnot json";
        assert!(matches!(
            parse_corpus(text),
            Err(StoreError::Format { line: 2, .. })
        ));
    }

    #[test]
    fn corpus_round_trips() {
        let figures = parse_corpus(mini_corpus()).unwrap();
        let serialized = serialize_corpus(&figures);
        let reparsed = parse_corpus(&serialized).unwrap();
        assert_eq!(figures, reparsed);
        assert_eq!(serialize_corpus(&reparsed), serialized);
    }

    #[test]
    fn ingest_is_deterministic() {
        let figures = parse_corpus(mini_corpus()).unwrap();
        let a = ingest(&figures, AngleMode::ConstrainedOnly).unwrap();
        let b = ingest(&figures, AngleMode::ConstrainedOnly).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn census_index_matches_graphs() {
        let figures = parse_corpus(mini_corpus()).unwrap();
        let store = ingest(&figures, AngleMode::ConstrainedOnly).unwrap();
        for entry in store.figures() {
            assert_eq!(entry.census, entry.graph.census(), "{}", entry.figure.id);
        }
    }

    #[test]
    fn inconsistent_figure_fails_with_its_id() {
        use crate::construction::ConstructionStep as S;
        // L_2 is introduced perpendicular to L_1, then restated parallel to
        // it; the closure would force L_2 perpendicular to itself.
        let figure = Figure {
            id: "bad".into(),
            title: String::new(),
            steps: vec![
                S::FreePoint { name: "A".into() },
                S::FreePoint { name: "B".into() },
                S::LineThrough { name: "L_1".into(), through: ["A".into(), "B".into()] },
                S::PerpendicularAt { name: "L_2".into(), to: "L_1".into(), at: "A".into() },
                S::ParallelAt { name: "L_2".into(), to: "L_1".into(), at: "B".into() },
            ],
            draw: vec![],
        };
        let err = ingest(std::slice::from_ref(&figure), AngleMode::ConstrainedOnly).unwrap_err();
        assert!(matches!(err, StoreError::Inference { id, .. } if id == "bad"));
    }

    #[test]
    fn cache_round_trips_and_detects_drift() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.json");
        let figures = parse_corpus(mini_corpus()).unwrap();
        let store = ingest(&figures, AngleMode::ConstrainedOnly).unwrap();
        write_cache(&store, mini_corpus(), &path).unwrap();
        let loaded = load_cache(&path, mini_corpus()).unwrap();
        assert_eq!(
            serde_json::to_string(&store).unwrap(),
            serde_json::to_string(&loaded).unwrap()
        );
        assert!(matches!(
            load_cache(&path, "something else"),
            Err(StoreError::CacheMismatch { .. })
        ));
    }
}
