//! Subgraph embedding search.
//!
//! A figure answers a query when the query graph embeds into the figure
//! graph: an injective, kind-preserving map under which every query relation
//! is present in the figure (non-induced, so richer figures still match).
//! Attributes must be compatible: constrained angle values and ratio values
//! must be equal, unconstrained query angles match any angle.
//!
//! The search is a backtracking enumeration over query nodes ordered by
//! descending degree, with figure candidates tried in ascending node id —
//! results are deterministic. Kind-census and degree filters prune before
//! and during the search.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::inference::{instantiate_angles, AngleMode};
use crate::lattice::ReductionAction;
use crate::onto::{
    AngleValue, ConceptKind, NodeId, OntoGraph, OntoNode, Rational, RelationKind,
};
use crate::ranking;
use crate::store::CompiledStore;

/// An injective map from query node ids to figure node ids.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Embedding {
    map: BTreeMap<NodeId, NodeId>,
}

impl Embedding {
    pub fn get(&self, query_node: NodeId) -> Option<NodeId> {
        self.map.get(&query_node).copied()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.map.iter().map(|(q, f)| (*q, *f))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// One matched figure: its embeddings, the reductions the query needed, and
/// the size-ratio score.
#[derive(Debug, Clone, Serialize)]
pub struct MatchResult {
    pub figure_id: String,
    pub title: String,
    pub embeddings: Vec<Embedding>,
    pub reductions: Vec<ReductionAction>,
    pub score: Rational,
    pub figure_size: usize,
}

fn kinds_compatible(query: Option<ConceptKind>, figure: Option<ConceptKind>, loose: bool) -> bool {
    match (query, figure) {
        (None, None) => true,
        (Some(q), Some(f)) => {
            q == f
                || (loose
                    && matches!(q, ConceptKind::Line | ConceptKind::Segment)
                    && matches!(f, ConceptKind::Line | ConceptKind::Segment))
        }
        _ => false,
    }
}

fn nodes_compatible(query: &OntoNode, figure: &OntoNode, loose: bool) -> bool {
    if !kinds_compatible(query.kind(), figure.kind(), loose) {
        return false;
    }
    if let (Some(qv), Some(fv)) = (query.ratio_value(), figure.ratio_value()) {
        if qv != fv {
            return false;
        }
    }
    match query.angle_value() {
        None | Some(AngleValue::Unconstrained) => true,
        Some(constrained) => figure.angle_value() == Some(constrained),
    }
}

/// Degree signature: undirected counts for the symmetric relations,
/// (out, in) for the directed ones.
fn degree_signature(graph: &OntoGraph, id: NodeId) -> BTreeMap<(RelationKind, u8), usize> {
    let mut sig = BTreeMap::new();
    for edge in graph.out_edges(id) {
        let role = if edge.kind.is_symmetric() { 2 } else { 0 };
        *sig.entry((edge.kind, role)).or_insert(0) += 1;
    }
    for edge in graph.in_edges(id) {
        let role = if edge.kind.is_symmetric() { 2 } else { 1 };
        *sig.entry((edge.kind, role)).or_insert(0) += 1;
    }
    sig
}

fn signature_dominates(
    figure: &BTreeMap<(RelationKind, u8), usize>,
    query: &BTreeMap<(RelationKind, u8), usize>,
) -> bool {
    query
        .iter()
        .all(|(key, count)| figure.get(key).copied().unwrap_or(0) >= *count)
}

/// Enumerate embeddings of `query` into `figure`, at most `limit` of them,
/// in deterministic order. The result is complete whenever its length is
/// below `limit`.
pub fn find_embeddings(
    query: &OntoGraph,
    figure: &OntoGraph,
    limit: usize,
    loose_linear: bool,
) -> Vec<Embedding> {
    if limit == 0 {
        return Vec::new();
    }
    if !query.census().fits_within(&figure.census(), loose_linear) {
        return Vec::new();
    }

    let mut order: Vec<NodeId> = query.nodes().map(|n| n.id).collect();
    order.sort_by_key(|id| (usize::MAX - query.degree(*id), *id));

    let figure_nodes: Vec<NodeId> = figure.nodes().map(|n| n.id).collect();
    let figure_sigs: BTreeMap<NodeId, _> = figure_nodes
        .iter()
        .map(|id| (*id, degree_signature(figure, *id)))
        .collect();

    // Candidate lists per query node, ascending figure id.
    let mut candidates: Vec<Vec<NodeId>> = Vec::with_capacity(order.len());
    for qid in &order {
        let qnode = query.node(*qid).expect("query node");
        let qsig = degree_signature(query, *qid);
        let list: Vec<NodeId> = figure_nodes
            .iter()
            .copied()
            .filter(|fid| {
                let fnode = figure.node(*fid).expect("figure node");
                nodes_compatible(qnode, fnode, loose_linear)
                    && signature_dominates(&figure_sigs[fid], &qsig)
            })
            .collect();
        if list.is_empty() {
            return Vec::new();
        }
        candidates.push(list);
    }

    // Incident query edges checked when the later endpoint gets assigned.
    let position: BTreeMap<NodeId, usize> = order
        .iter()
        .enumerate()
        .map(|(i, id)| (*id, i))
        .collect();
    let mut checks: Vec<Vec<(NodeId, NodeId, RelationKind)>> = vec![Vec::new(); order.len()];
    for edge in query.edges() {
        let later = position[&edge.from].max(position[&edge.to]);
        checks[later].push((edge.from, edge.to, edge.kind));
    }

    let mut results = Vec::new();
    let mut assignment: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut used: BTreeMap<NodeId, ()> = BTreeMap::new();

    fn dfs(
        depth: usize,
        order: &[NodeId],
        candidates: &[Vec<NodeId>],
        checks: &[Vec<(NodeId, NodeId, RelationKind)>],
        figure: &OntoGraph,
        assignment: &mut BTreeMap<NodeId, NodeId>,
        used: &mut BTreeMap<NodeId, ()>,
        results: &mut Vec<Embedding>,
        limit: usize,
    ) {
        if results.len() >= limit {
            return;
        }
        if depth == order.len() {
            results.push(Embedding {
                map: assignment.clone(),
            });
            return;
        }
        let qid = order[depth];
        for fid in &candidates[depth] {
            if used.contains_key(fid) {
                continue;
            }
            assignment.insert(qid, *fid);
            let consistent = checks[depth].iter().all(|(from, to, kind)| {
                let (Some(ff), Some(ft)) = (assignment.get(from), assignment.get(to)) else {
                    return true;
                };
                figure.has_relation(*ff, *ft, *kind)
            });
            if consistent {
                used.insert(*fid, ());
                dfs(
                    depth + 1,
                    order,
                    candidates,
                    checks,
                    figure,
                    assignment,
                    used,
                    results,
                    limit,
                );
                used.remove(fid);
            }
            assignment.remove(&qid);
            if results.len() >= limit {
                return;
            }
        }
    }

    dfs(
        0,
        &order,
        &candidates,
        &checks,
        figure,
        &mut assignment,
        &mut used,
        &mut results,
        limit,
    );
    results
}

/// True when the query carries angle nodes that only exist in figures after
/// full angle instantiation.
fn wants_instantiated_angles(query: &OntoGraph) -> bool {
    query
        .nodes()
        .any(|n| n.angle_value() == Some(AngleValue::Unconstrained))
}

/// Run the query against every stored figure; figures are evaluated
/// independently and reported in stable figure-id order.
///
/// When the store was compiled without angle instantiation but the query
/// contains unconstrained angle nodes, the candidate figure is re-inferred
/// in full angle mode on the fly so such queries can still match.
pub fn search_corpus(
    query: &OntoGraph,
    store: &CompiledStore,
    limit_per_figure: usize,
    loose_linear: bool,
    reductions: &[ReductionAction],
) -> Vec<MatchResult> {
    let lazy_full =
        store.angle_mode() == AngleMode::ConstrainedOnly && wants_instantiated_angles(query);
    let query_census = query.census();
    let mut results = Vec::new();
    for entry in store.figures() {
        let graph = &entry.graph;
        let embeddings = if query_census.fits_within(&graph.census(), loose_linear) {
            find_embeddings(query, graph, limit_per_figure, loose_linear)
        } else if lazy_full {
            let augmented = instantiate_angles(graph, AngleMode::Full);
            if query_census.fits_within(&augmented.census(), loose_linear) {
                find_embeddings(query, &augmented, limit_per_figure, loose_linear)
            } else {
                Vec::new()
            }
        } else {
            Vec::new()
        };
        // A census miss can still hide a lazy-full match.
        let embeddings = if embeddings.is_empty() && lazy_full {
            let augmented = instantiate_angles(graph, AngleMode::Full);
            find_embeddings(query, &augmented, limit_per_figure, loose_linear)
        } else {
            embeddings
        };
        if embeddings.is_empty() {
            continue;
        }
        results.push(MatchResult {
            figure_id: entry.figure.id.clone(),
            title: entry.figure.title.clone(),
            embeddings,
            reductions: reductions.to_vec(),
            score: ranking::score(query, graph),
            figure_size: graph.ranked_size(),
        });
    }
    results
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::{compile_figure, ConstructionStep as S, Figure};

    fn right_angle_query() -> OntoGraph {
        let fig = Figure {
            id: "q".into(),
            title: String::new(),
            steps: vec![
                S::FreePoint { name: "A".into() },
                S::FreePoint { name: "B".into() },
                S::FreePoint { name: "C".into() },
                S::RightAngle { of: "A-B-C".into() },
            ],
            draw: vec![],
        };
        compile_figure(&fig).unwrap()
    }

    fn tangency_figure() -> OntoGraph {
        let fig = Figure {
            id: "tan".into(),
            title: String::new(),
            steps: vec![
                S::FreePoint { name: "O".into() },
                S::FreePoint { name: "B".into() },
                S::Circle {
                    name: "C_1".into(),
                    center: "O".into(),
                    through: "B".into(),
                },
                S::Segment { ends: "A-B".into() },
                S::RightAngle { of: "A-B-O".into() },
            ],
            draw: vec![],
        };
        compile_figure(&fig).unwrap()
    }

    #[test]
    fn right_angle_pattern_embeds_into_tangency_figure() {
        let query = right_angle_query();
        let figure = tangency_figure();
        let embeddings = find_embeddings(&query, &figure, 10, false);
        assert!(!embeddings.is_empty());
        // The pattern's outer point C lands on the circle center O.
        let c = query
            .nodes()
            .find(|n| n.label() == Some("C"))
            .unwrap()
            .id;
        let o = figure
            .nodes()
            .find(|n| n.label() == Some("O"))
            .unwrap()
            .id;
        assert!(embeddings.iter().any(|e| e.get(c) == Some(o)));
    }

    #[test]
    fn single_point_query_counts_points() {
        let mut query = OntoGraph::new();
        query.add_point(Some("P"));
        let figure = tangency_figure();
        let embeddings = find_embeddings(&query, &figure, 100, false);
        assert_eq!(embeddings.len(), 3);
    }

    #[test]
    fn limit_cuts_enumeration() {
        let mut query = OntoGraph::new();
        query.add_point(Some("P"));
        let figure = tangency_figure();
        assert_eq!(find_embeddings(&query, &figure, 2, false).len(), 2);
    }

    #[test]
    fn census_prune_rejects_oversized_queries() {
        let mut query = OntoGraph::new();
        query.add_circle(Some("C_1"));
        query.add_circle(Some("C_2"));
        let figure = tangency_figure();
        assert!(find_embeddings(&query, &figure, 10, false).is_empty());
    }

    #[test]
    fn loose_linear_lets_lines_match_segments() {
        let mut query = OntoGraph::new();
        let p = query.add_point(Some("P"));
        let l = query.add_line(Some("L"));
        query
            .add_relation(p, l, RelationKind::BelongsTo)
            .unwrap();
        let mut figure = OntoGraph::new();
        let a = figure.add_point(Some("A"));
        let s = figure.add_segment(Some("A-B"));
        figure.add_relation(a, s, RelationKind::BelongsTo).unwrap();
        assert!(find_embeddings(&query, &figure, 10, false).is_empty());
        assert_eq!(find_embeddings(&query, &figure, 10, true).len(), 1);
    }

    #[test]
    fn constrained_angle_values_must_agree() {
        let mut query = OntoGraph::new();
        query.add_angle(Some("X"), AngleValue::Right);
        let mut fig_unconstrained = OntoGraph::new();
        fig_unconstrained.add_angle(Some("Y"), AngleValue::Unconstrained);
        assert!(find_embeddings(&query, &fig_unconstrained, 10, false).is_empty());

        let mut query_open = OntoGraph::new();
        query_open.add_angle(Some("X"), AngleValue::Unconstrained);
        let mut fig_right = OntoGraph::new();
        fig_right.add_angle(Some("Y"), AngleValue::Right);
        assert_eq!(find_embeddings(&query_open, &fig_right, 10, false).len(), 1);
    }

    #[test]
    fn deterministic_output_order() {
        let mut query = OntoGraph::new();
        query.add_point(Some("P"));
        let figure = tangency_figure();
        let a = find_embeddings(&query, &figure, 10, false);
        let b = find_embeddings(&query, &figure, 10, false);
        assert_eq!(a, b);
        let ids: Vec<NodeId> = a.iter().flat_map(|e| e.pairs().map(|(_, f)| f)).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted, "candidates explored in ascending id order");
    }
}
