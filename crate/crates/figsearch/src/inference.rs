//! Inference pass: enriches a compiled graph with derived relations.
//!
//! Three rules run to a fixpoint:
//!
//! 1. parallel/perpendicular closure — `a ∥ b ∧ b ∥ c ⊢ a ∥ c`,
//!    `a ⊥ b ∧ b ⊥ c ⊢ a ∥ c`, and the mixed `a ⊥ b ∧ b ∥ c ⊢ a ⊥ c`;
//! 2. unit-ratio materialization — every equal-by-construction pair becomes
//!    a reified ratio node with value 1;
//! 3. angle instantiation — in `Full` mode, an unconstrained angle node is
//!    added for every pair of segments sharing exactly one point.
//!
//! The closure works on direction classes: carriers connected by ∥ share a
//! class, ⊥ pairs classes, and a carrier forced perpendicular to its own
//! class is inconsistent. Derived edges carry `Inferred` provenance; they
//! participate in matching but not in ranking size.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::onto::{ConceptKind, NodeId, OntoGraph, Provenance, Rational, RelationKind};

/// Whether angle instantiation runs.
///
/// `ConstrainedOnly` (the default) keeps only angles the construction
/// created; `Full` instantiates an angle for every qualifying segment pair,
/// which grows graphs quadratically and is worth it only when queries carry
/// unconstrained angle nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleMode {
    #[default]
    ConstrainedOnly,
    Full,
}

#[derive(Debug, Error, PartialEq)]
pub enum InferenceError {
    #[error("inconsistent constraints: carrier `{0}` would be perpendicular to itself")]
    InconsistentConstraints(String),
}

/// Union-find over carriers with a parity bit: even parity to the root means
/// "same direction class", odd means "perpendicular class".
struct ParityDsu {
    parent: Vec<usize>,
    rank: Vec<u8>,
    parity: Vec<bool>,
}

impl ParityDsu {
    fn new(len: usize) -> Self {
        ParityDsu {
            parent: (0..len).collect(),
            rank: vec![0; len],
            parity: vec![false; len],
        }
    }

    fn find(&mut self, x: usize) -> (usize, bool) {
        if self.parent[x] == x {
            return (x, false);
        }
        let (root, parent_parity) = self.find(self.parent[x]);
        self.parity[x] ^= parent_parity;
        self.parent[x] = root;
        (root, self.parity[x])
    }

    /// Join `a` and `b` with the given relative parity (false = parallel).
    /// Returns false when the constraint contradicts the existing classes.
    fn union(&mut self, a: usize, b: usize, perpendicular: bool) -> bool {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return (pa ^ pb) == perpendicular;
        }
        let (ra, rb, pa, pb) = if self.rank[ra] < self.rank[rb] {
            (rb, ra, pb, pa)
        } else {
            (ra, rb, pa, pb)
        };
        self.parent[rb] = ra;
        self.parity[rb] = pa ^ pb ^ perpendicular;
        if self.rank[ra] == self.rank[rb] {
            self.rank[ra] += 1;
        }
        true
    }
}

fn carrier_label(graph: &OntoGraph, id: NodeId) -> String {
    graph
        .node(id)
        .and_then(|n| n.label().map(str::to_owned))
        .unwrap_or_else(|| id.to_string())
}

/// Least fixpoint of the parallelism/orthogonality rules.
pub fn close_parallel_perpendicular(graph: &OntoGraph) -> Result<OntoGraph, InferenceError> {
    let carriers: Vec<NodeId> = graph
        .nodes()
        .filter(|n| matches!(n.kind(), Some(ConceptKind::Line | ConceptKind::Segment)))
        .map(|n| n.id)
        .collect();
    let index: BTreeMap<NodeId, usize> = carriers
        .iter()
        .enumerate()
        .map(|(i, id)| (*id, i))
        .collect();
    let mut dsu = ParityDsu::new(carriers.len());
    for edge in graph.edges() {
        let perpendicular = match edge.kind {
            RelationKind::IsParallelTo => false,
            RelationKind::IsPerpendicularTo => true,
            _ => continue,
        };
        let (a, b) = (index[&edge.from], index[&edge.to]);
        if !dsu.union(a, b, perpendicular) {
            return Err(InferenceError::InconsistentConstraints(carrier_label(
                graph, edge.from,
            )));
        }
    }
    let mut out = graph.clone();
    out.set_origin(Some(Provenance::Inferred));
    for i in 0..carriers.len() {
        for j in (i + 1)..carriers.len() {
            let (ri, pi) = dsu.find(i);
            let (rj, pj) = dsu.find(j);
            if ri != rj {
                continue;
            }
            let kind = if pi == pj {
                RelationKind::IsParallelTo
            } else {
                RelationKind::IsPerpendicularTo
            };
            let _ = out.add_relation(carriers[i], carriers[j], kind);
        }
    }
    out.set_origin(None);
    Ok(out)
}

/// Turn each pending equal-by-construction pair into a ratio node with value
/// 1. The ratio is attributed to the construction step that declared the
/// equality, not to inference, so it counts toward ranking size.
pub fn materialize_unit_ratios(graph: &OntoGraph) -> OntoGraph {
    let mut out = graph.clone();
    for pending in out.take_pending_equalities() {
        if !out.contains_node(pending.left) || !out.contains_node(pending.right) {
            continue;
        }
        out.set_origin(pending.provenance);
        let ratio = out
            .add_ratio(Rational::from_integer(1))
            .expect("unit ratio is positive");
        let _ = out.add_relation(ratio, pending.left, RelationKind::RatioNominator);
        let _ = out.add_relation(ratio, pending.right, RelationKind::RatioDenominator);
    }
    out.set_origin(None);
    out
}

/// Instantiate angles for segment pairs with exactly one common point.
///
/// The added pattern mirrors the right-angle fragment: the angle node
/// receives membership edges from both segments, the shared point, and the
/// segments' remaining member points. Pairs already covered by an angle are
/// skipped; `ConstrainedOnly` mode adds nothing.
pub fn instantiate_angles(graph: &OntoGraph, mode: AngleMode) -> OntoGraph {
    if mode == AngleMode::ConstrainedOnly {
        return graph.clone();
    }
    let mut out = graph.clone();
    let segments: Vec<NodeId> = graph
        .nodes()
        .filter(|n| n.kind() == Some(ConceptKind::Segment))
        .map(|n| n.id)
        .collect();
    let members: BTreeMap<NodeId, BTreeSet<NodeId>> = segments
        .iter()
        .map(|s| {
            let pts = graph
                .in_edges(*s)
                .filter(|e| e.kind == RelationKind::BelongsTo)
                .filter(|e| graph.node(e.from).and_then(|n| n.kind()) == Some(ConceptKind::Point))
                .map(|e| e.from)
                .collect();
            (*s, pts)
        })
        .collect();
    // Segment pairs already joined by an angle node.
    let mut covered: BTreeSet<(NodeId, NodeId)> = BTreeSet::new();
    for angle in graph.nodes().filter(|n| n.kind() == Some(ConceptKind::Angle)) {
        let sides: Vec<NodeId> = graph
            .in_edges(angle.id)
            .filter(|e| e.kind == RelationKind::BelongsTo)
            .filter(|e| graph.node(e.from).and_then(|n| n.kind()) == Some(ConceptKind::Segment))
            .map(|e| e.from)
            .collect();
        for (i, a) in sides.iter().enumerate() {
            for b in &sides[i + 1..] {
                covered.insert((a.min(b).to_owned(), a.max(b).to_owned()));
            }
        }
    }
    out.set_origin(Some(Provenance::Inferred));
    for (i, s1) in segments.iter().enumerate() {
        for s2 in &segments[i + 1..] {
            if covered.contains(&(*s1, *s2)) {
                continue;
            }
            let shared: Vec<NodeId> = members[s1].intersection(&members[s2]).copied().collect();
            if shared.len() != 1 {
                continue;
            }
            let vertex = shared[0];
            let angle = out.add_angle(None, crate::onto::AngleValue::Unconstrained);
            let mut far: Vec<NodeId> = members[s1]
                .union(&members[s2])
                .copied()
                .filter(|p| *p != vertex)
                .collect();
            far.sort();
            let _ = out.add_relation(vertex, angle, RelationKind::BelongsTo);
            for p in far {
                let _ = out.add_relation(p, angle, RelationKind::BelongsTo);
            }
            let _ = out.add_relation(*s1, angle, RelationKind::BelongsTo);
            let _ = out.add_relation(*s2, angle, RelationKind::BelongsTo);
        }
    }
    out.set_origin(None);
    out
}

/// The full inference pass, iterated to a fixpoint.
pub fn infer(graph: &OntoGraph, mode: AngleMode) -> Result<OntoGraph, InferenceError> {
    let mut current = graph.clone();
    loop {
        let closed = close_parallel_perpendicular(&current)?;
        let with_ratios = materialize_unit_ratios(&closed);
        let next = instantiate_angles(&with_ratios, mode);
        if next == current {
            return Ok(next);
        }
        current = next;
    }
}
