//! Result ordering by the size-ratio criterion.
//!
//! The score of a match is the ratio between the query's node-plus-relation
//! count and the figure's, both excluding inference-derived elements. The
//! smallest figure containing the query therefore ranks first. Scores are
//! exact rationals; ties break by ascending figure size, then figure id.

use crate::matcher::MatchResult;
use crate::onto::{OntoGraph, Rational};

/// `(|V_q| + |E_q|) / (|V_f| + |E_f|)`, counting concept and ratio nodes and
/// all relation edges, inference-derived elements excluded on both sides.
pub fn score(query: &OntoGraph, figure: &OntoGraph) -> Rational {
    let q = query.ranked_size() as i64;
    let f = figure.ranked_size() as i64;
    if f == 0 {
        return Rational::from_integer(0);
    }
    Rational::new(q, f)
}

/// Order results best-first. Total, deterministic, and independent of the
/// input permutation.
pub fn rank(mut results: Vec<MatchResult>) -> Vec<MatchResult> {
    results.sort_by(|a, b| {
        b.score
            .cmp(&a.score)
            .then(a.figure_size.cmp(&b.figure_size))
            .then(a.figure_id.cmp(&b.figure_id))
    });
    results
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(id: &str, score: Rational, size: usize) -> MatchResult {
        MatchResult {
            figure_id: id.into(),
            title: String::new(),
            embeddings: vec![],
            reductions: vec![],
            score,
            figure_size: size,
        }
    }

    #[test]
    fn arithmetic_matches_the_formula() {
        let mut query = OntoGraph::new();
        let a = query.add_point(Some("A"));
        let s = query.add_segment(Some("A-B"));
        query
            .add_relation(a, s, crate::onto::RelationKind::BelongsTo)
            .unwrap();
        assert_eq!(score(&query, &query), Rational::from_integer(1));
    }

    #[test]
    fn smaller_figure_ranks_first() {
        let ranked = rank(vec![
            result("big", Rational::new(22, 60), 60),
            result("small", Rational::new(22, 30), 30),
        ]);
        assert_eq!(ranked[0].figure_id, "small");
    }

    #[test]
    fn ties_break_by_figure_id() {
        let ranked = rank(vec![
            result("b", Rational::new(1, 2), 10),
            result("a", Rational::new(1, 2), 10),
        ]);
        assert_eq!(ranked[0].figure_id, "a");
        // Input permutation does not matter.
        let ranked2 = rank(vec![
            result("a", Rational::new(1, 2), 10),
            result("b", Rational::new(1, 2), 10),
        ]);
        assert_eq!(ranked2[0].figure_id, "a");
    }

    #[test]
    fn single_result_unchanged() {
        let ranked = rank(vec![result("only", Rational::new(1, 3), 9)]);
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].figure_id, "only");
    }
}
