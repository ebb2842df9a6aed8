//! The query loop: compile, search, and weaken until something matches.
//!
//! A query (controlled-language text or a figure) compiles to an ontological
//! graph and runs against the store. If nothing matches, the query's
//! dependency lattice yields a reduction stream; one action is applied per
//! iteration, re-searching after each, until the first non-empty result set,
//! the stream is exhausted, or the reduction budget runs out. Results are
//! reported for the earliest depth at which anything matched.

use num_traits::One;
use thiserror::Error;

use crate::construction::{compile, Compiled, Figure, Violation};
use crate::cql::{self, CqlError};
use crate::inference::{infer, AngleMode, InferenceError};
use crate::lattice::{
    apply_action, build_from_compiled, reduction_sequence, LatticeError, ReductionAction,
    ReductionError,
};
use crate::matcher::{search_corpus, MatchResult};
use crate::onto::{OntoGraph, Rational};
use crate::ranking;
use crate::store::CompiledStore;

/// What the user asked: query text or a ready-made figure.
#[derive(Debug, Clone)]
pub enum QuerySource {
    Cql(String),
    Figure(Figure),
}

/// A compiled query: its figure, graph, and the reductions applied so far.
#[derive(Debug, Clone)]
pub struct Query {
    pub figure: Figure,
    pub compiled: Compiled,
    pub graph: OntoGraph,
    pub reductions: Vec<ReductionAction>,
}

impl Query {
    /// Compile and infer a query figure (constrained-only: full angle
    /// instantiation on the query side would demand angles corpus graphs do
    /// not have).
    pub fn new(figure: Figure) -> Result<Query, EngineError> {
        let compiled = compile(&figure).map_err(|e| match e {
            crate::construction::CompileError::ValidationFailed(v) => EngineError::Validation(v),
        })?;
        let graph = infer(&compiled.graph, AngleMode::ConstrainedOnly)?;
        Ok(Query {
            figure,
            compiled,
            graph,
            reductions: Vec::new(),
        })
    }

    /// Apply one reduction, yielding the weakened query.
    pub fn reduce(&self, action: &ReductionAction) -> Result<Query, ReductionError> {
        let graph = apply_action(&self.graph, action)?;
        let mut next = self.clone();
        next.graph = graph;
        next.reductions.push(action.clone());
        Ok(next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Results found (possibly after reductions).
    Matched,
    /// The reduction stream ran dry with no match.
    Exhausted,
    /// The reduction budget was hit with no match.
    ReductionLimit,
}

/// Outcome of [`answer_query`]: ranked results, the applied-reduction log,
/// why the loop stopped, and the final (possibly weakened) query.
#[derive(Debug, Clone)]
pub struct QueryAnswer {
    pub results: Vec<MatchResult>,
    pub log: Vec<ReductionAction>,
    pub stop: StopReason,
    pub query: Query,
}

#[derive(Debug, Clone)]
pub struct SearchOptions {
    pub max_reductions: usize,
    pub limit_per_figure: usize,
    pub loose_linear: bool,
    /// Multiplies each result's score once per applied reduction; 1 leaves
    /// scores untouched.
    pub reduction_penalty: Rational,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            max_reductions: 32,
            limit_per_figure: 10,
            loose_linear: false,
            reduction_penalty: Rational::one(),
        }
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Cql(#[from] CqlError),
    #[error("query does not validate: {}", format_violations(.0))]
    Validation(Vec<Violation>),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("internal error: {0}")]
    Internal(String),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(Violation::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

fn penalized(
    results: Vec<MatchResult>,
    penalty: Rational,
    reductions: usize,
) -> Vec<MatchResult> {
    if penalty == Rational::one() || reductions == 0 {
        return ranking::rank(results);
    }
    let factor = (0..reductions).fold(Rational::one(), |acc, _| acc * penalty);
    let results = results
        .into_iter()
        .map(|mut r| {
            r.score *= factor;
            r
        })
        .collect();
    ranking::rank(results)
}

/// Run a query end to end against an ingested store.
pub fn answer_query(
    source: &QuerySource,
    store: &CompiledStore,
    options: &SearchOptions,
) -> Result<QueryAnswer, EngineError> {
    let figure = match source {
        QuerySource::Cql(text) => cql::compile_query(text)?,
        QuerySource::Figure(figure) => figure.clone(),
    };
    let mut query = Query::new(figure)?;

    let results = search_corpus(
        &query.graph,
        store,
        options.limit_per_figure,
        options.loose_linear,
        &[],
    );
    if !results.is_empty() {
        return Ok(QueryAnswer {
            results: ranking::rank(results),
            log: Vec::new(),
            stop: StopReason::Matched,
            query,
        });
    }

    let lattice = build_from_compiled(&query.compiled)?;
    let plan = reduction_sequence(&lattice, &query.compiled);
    for action in plan {
        if query.reductions.len() >= options.max_reductions {
            return Ok(QueryAnswer {
                results: Vec::new(),
                log: query.reductions.clone(),
                stop: StopReason::ReductionLimit,
                query,
            });
        }
        query = query
            .reduce(&action)
            .map_err(|e| EngineError::Internal(format!("{e} ({action})")))?;
        let results = search_corpus(
            &query.graph,
            store,
            options.limit_per_figure,
            options.loose_linear,
            &query.reductions,
        );
        if !results.is_empty() {
            let depth = query.reductions.len();
            return Ok(QueryAnswer {
                results: penalized(results, options.reduction_penalty, depth),
                log: query.reductions.clone(),
                stop: StopReason::Matched,
                query,
            });
        }
    }
    Ok(QueryAnswer {
        results: Vec::new(),
        log: query.reductions.clone(),
        stop: StopReason::Exhausted,
        query,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::{ingest, parse_corpus};

    fn mini_store() -> CompiledStore {
        let figures = parse_corpus(crate::store::mini_corpus()).unwrap();
        ingest(&figures, AngleMode::ConstrainedOnly).unwrap()
    }

    const SAMPLE: &str = "D, E, F are midpoints of A-C, A-B, B-C ; C-E intersects B-D at G ; \
                          draw A-C, A-F, A-B, B-C, B-D, C-E.";

    #[test]
    fn sample_query_matches_exactly() {
        let store = mini_store();
        let answer = answer_query(
            &QuerySource::Cql(SAMPLE.into()),
            &store,
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(answer.stop, StopReason::Matched);
        assert!(answer.log.is_empty());
        assert_eq!(answer.results[0].figure_id, "013");
        assert_eq!(answer.results[0].score, Rational::one());
    }

    #[test]
    fn medians_query_needs_one_reduction() {
        let store = mini_store();
        let medians = "D, E, F are midpoints of A-C, A-B, B-C ; C-E intersects B-D at G ; \
                       A-F intersects B-D at G ; draw A-C, A-F, A-B, B-C, B-D, C-E.";
        let answer = answer_query(
            &QuerySource::Cql(medians.into()),
            &store,
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(answer.stop, StopReason::Matched);
        assert_eq!(answer.log.len(), 1);
        assert!(matches!(
            &answer.log[0],
            ReductionAction::RemoveRelation { from, .. } if from == "G"
        ));
        assert!(answer.results.iter().any(|r| r.figure_id == "013"));
    }

    #[test]
    fn zero_budget_is_no_match_with_empty_log() {
        let store = mini_store();
        let options = SearchOptions {
            max_reductions: 0,
            ..SearchOptions::default()
        };
        let nonsense = "C_1 is defined by center O and point A ; C_2 is defined by center O_1 and point A_1 ; \
                        C_3 is defined by center O_2 and point A_2 ; draw C_1, C_2, C_3.";
        let answer =
            answer_query(&QuerySource::Cql(nonsense.into()), &store, &options).unwrap();
        assert_eq!(answer.stop, StopReason::ReductionLimit);
        assert!(answer.results.is_empty());
        assert!(answer.log.is_empty());
    }

    #[test]
    fn smallest_figure_ranks_first() {
        let store = mini_store();
        let answer = answer_query(
            &QuerySource::Cql("draw A-B.".into()),
            &store,
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(answer.results[0].figure_id, "001");
        assert_eq!(answer.results[0].score, Rational::one());
        let scores: Vec<Rational> = answer.results.iter().map(|r| r.score).collect();
        let mut sorted = scores.clone();
        sorted.sort_by(|a, b| b.cmp(a));
        assert_eq!(scores, sorted);
    }

    #[test]
    fn figure_queries_work_like_text_queries() {
        let store = mini_store();
        let figure = store.get("011").unwrap().figure.clone();
        let answer = answer_query(
            &QuerySource::Figure(figure),
            &store,
            &SearchOptions::default(),
        )
        .unwrap();
        assert_eq!(answer.stop, StopReason::Matched);
        assert!(answer.results.iter().any(|r| r.figure_id == "011"));
    }

    #[test]
    fn parse_errors_propagate() {
        let store = mini_store();
        let err = answer_query(
            &QuerySource::Cql("draw .".into()),
            &store,
            &SearchOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, EngineError::Cql(_)));
    }

    #[test]
    fn reduction_penalty_scales_scores() {
        let store = mini_store();
        let medians = "D, E, F are midpoints of A-C, A-B, B-C ; C-E intersects B-D at G ; \
                       A-F intersects B-D at G ; draw A-C, A-F, A-B, B-C, B-D, C-E.";
        let faithful = answer_query(
            &QuerySource::Cql(medians.into()),
            &store,
            &SearchOptions::default(),
        )
        .unwrap();
        let penalized = answer_query(
            &QuerySource::Cql(medians.into()),
            &store,
            &SearchOptions {
                reduction_penalty: Rational::new(1, 2),
                ..SearchOptions::default()
            },
        )
        .unwrap();
        assert_eq!(
            penalized.results[0].score * 2,
            faithful.results[0].score
        );
    }
}
