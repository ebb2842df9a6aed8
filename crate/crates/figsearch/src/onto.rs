//! The ontology of plane-geometry figures as a typed graph.
//!
//! A figure is a set of concept instances (points, segments, lines, circles,
//! angles) plus reified ratio nodes, connected by typed relations. Instance
//! labels are display metadata only: matching and isomorphism ignore them and
//! look at the network of relations alone.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Exact arithmetic for ratio values and angle degrees.
pub type Rational = num_rational::Ratio<i64>;

/// The five concept kinds a node can instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ConceptKind {
    Point,
    Segment,
    Line,
    Circle,
    Angle,
}

impl ConceptKind {
    pub const ALL: [ConceptKind; 5] = [
        ConceptKind::Point,
        ConceptKind::Segment,
        ConceptKind::Line,
        ConceptKind::Circle,
        ConceptKind::Angle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConceptKind::Point => "point",
            ConceptKind::Segment => "segment",
            ConceptKind::Line => "line",
            ConceptKind::Circle => "circle",
            ConceptKind::Angle => "angle",
        }
    }
}

/// Value attribute of an angle node.
///
/// `Numeric` holds exact degrees in (0, 360). Construction never produces
/// `Numeric(90)` or `Numeric(180)` nodes: [`AngleValue::numeric`] normalizes
/// those to `Right` and `Straight`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AngleValue {
    Unconstrained,
    Right,
    Straight,
    Numeric(Rational),
}

impl AngleValue {
    pub fn numeric(degrees: Rational) -> Result<AngleValue, GraphError> {
        if degrees <= Rational::from_integer(0) || degrees >= Rational::from_integer(360) {
            return Err(GraphError::InvalidAngleValue(degrees));
        }
        Ok(if degrees == Rational::from_integer(90) {
            AngleValue::Right
        } else if degrees == Rational::from_integer(180) {
            AngleValue::Straight
        } else {
            AngleValue::Numeric(degrees)
        })
    }
}

/// Relation kinds (edge types).
///
/// `RatioNominator`/`RatioDenominator` originate only from ratio nodes; they
/// are the arms of the reified 3-ary has-ratio relation, whose value lives on
/// the ratio node itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RelationKind {
    BelongsTo,
    IsCenterOf,
    IsParallelTo,
    IsPerpendicularTo,
    IsRadiusOf,
    RatioNominator,
    RatioDenominator,
}

impl RelationKind {
    pub const ALL: [RelationKind; 7] = [
        RelationKind::BelongsTo,
        RelationKind::IsCenterOf,
        RelationKind::IsParallelTo,
        RelationKind::IsPerpendicularTo,
        RelationKind::IsRadiusOf,
        RelationKind::RatioNominator,
        RelationKind::RatioDenominator,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RelationKind::BelongsTo => "belongs_to",
            RelationKind::IsCenterOf => "is_center_of",
            RelationKind::IsParallelTo => "is_parallel_to",
            RelationKind::IsPerpendicularTo => "is_perpendicular_to",
            RelationKind::IsRadiusOf => "is_radius_of",
            RelationKind::RatioNominator => "nominator",
            RelationKind::RatioDenominator => "denominator",
        }
    }

    /// Parallel and perpendicular edges are stored once per unordered pair.
    pub fn is_symmetric(self) -> bool {
        matches!(
            self,
            RelationKind::IsParallelTo | RelationKind::IsPerpendicularTo
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// Where a node or edge came from: a construction step, a draw-list entry, or
/// the inference pass. Inferred elements participate in matching but are
/// excluded from ranking size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Provenance {
    Step(usize),
    Draw(usize),
    Inferred,
}

impl Provenance {
    pub fn is_inferred(self) -> bool {
        matches!(self, Provenance::Inferred)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NodePayload {
    Concept {
        kind: ConceptKind,
        /// Display label; ignored by matching.
        label: Option<String>,
        /// Present exactly when `kind == Angle`.
        angle: Option<AngleValue>,
    },
    Ratio { value: Rational },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OntoNode {
    pub id: NodeId,
    pub payload: NodePayload,
    pub provenance: Option<Provenance>,
}

impl OntoNode {
    /// Concept kind, or `None` for ratio nodes.
    pub fn kind(&self) -> Option<ConceptKind> {
        match &self.payload {
            NodePayload::Concept { kind, .. } => Some(*kind),
            NodePayload::Ratio { .. } => None,
        }
    }

    pub fn label(&self) -> Option<&str> {
        match &self.payload {
            NodePayload::Concept { label, .. } => label.as_deref(),
            NodePayload::Ratio { .. } => None,
        }
    }

    pub fn angle_value(&self) -> Option<AngleValue> {
        match &self.payload {
            NodePayload::Concept { angle, .. } => *angle,
            NodePayload::Ratio { .. } => None,
        }
    }

    pub fn ratio_value(&self) -> Option<Rational> {
        match &self.payload {
            NodePayload::Ratio { value } => Some(*value),
            NodePayload::Concept { .. } => None,
        }
    }

    pub fn is_ratio(&self) -> bool {
        matches!(self.payload, NodePayload::Ratio { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OntoEdge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub kind: RelationKind,
    pub provenance: Option<Provenance>,
}

/// An equal-by-construction pair (two segments or two angles), recorded at
/// compile time and turned into a unit-ratio node by inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingEquality {
    pub left: NodeId,
    pub right: NodeId,
    pub provenance: Option<Provenance>,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("domain violation: {0}")]
    DomainViolation(String),
    #[error("ratio value must be positive, got {0}")]
    InvalidRatioValue(Rational),
    #[error("angle value must lie in (0, 360) degrees, got {0}")]
    InvalidAngleValue(Rational),
}

/// Node/edge kind and relation counts of a graph; used for match pruning and
/// for the `stats` report.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub concepts: BTreeMap<ConceptKind, usize>,
    pub ratio_nodes: usize,
    pub relations: BTreeMap<RelationKind, usize>,
}

impl Census {
    pub fn concept(&self, kind: ConceptKind) -> usize {
        self.concepts.get(&kind).copied().unwrap_or(0)
    }

    pub fn relation(&self, kind: RelationKind) -> usize {
        self.relations.get(&kind).copied().unwrap_or(0)
    }

    pub fn total_nodes(&self) -> usize {
        self.concepts.values().sum::<usize>() + self.ratio_nodes
    }

    pub fn total_relations(&self) -> usize {
        self.relations.values().sum()
    }

    /// True when `self` could embed into `other` (every count dominated).
    /// Under loose linear matching, lines and segments share one budget.
    pub fn fits_within(&self, other: &Census, loose_linear: bool) -> bool {
        for kind in ConceptKind::ALL {
            if loose_linear && matches!(kind, ConceptKind::Line | ConceptKind::Segment) {
                continue;
            }
            if self.concept(kind) > other.concept(kind) {
                return false;
            }
        }
        if loose_linear {
            let mine = self.concept(ConceptKind::Line) + self.concept(ConceptKind::Segment);
            let theirs = other.concept(ConceptKind::Line) + other.concept(ConceptKind::Segment);
            if mine > theirs {
                return false;
            }
        }
        if self.ratio_nodes > other.ratio_nodes {
            return false;
        }
        RelationKind::ALL
            .iter()
            .all(|k| self.relation(*k) <= other.relation(*k))
    }
}

/// A typed graph of concept instances and relations.
///
/// Values are immutable once built by a compiler pass; the mutating methods
/// exist for builders (construction, inference, reduction) which each produce
/// a fresh value. Node and edge ids are assigned in insertion order and never
/// reused, so removals keep surviving ids stable.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OntoGraph {
    nodes: BTreeMap<NodeId, OntoNode>,
    edges: BTreeMap<EdgeId, OntoEdge>,
    /// Lookup set mirroring `edges`.
    #[serde(skip)]
    edge_set: BTreeSet<(NodeId, NodeId, RelationKind)>,
    pending: Vec<PendingEquality>,
    next_node: u32,
    next_edge: u32,
    /// Provenance applied to elements inserted next; set by builders.
    #[serde(skip)]
    origin: Option<Provenance>,
}

impl OntoGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_origin(&mut self, origin: Option<Provenance>) {
        self.origin = origin;
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &OntoNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &OntoEdge> {
        self.edges.values()
    }

    pub fn node(&self, id: NodeId) -> Option<&OntoNode> {
        self.nodes.get(&id)
    }

    pub fn edge(&self, id: EdgeId) -> Option<&OntoEdge> {
        self.edges.get(&id)
    }

    pub fn contains_node(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    fn insert_node(&mut self, payload: NodePayload) -> NodeId {
        let id = NodeId(self.next_node);
        self.next_node += 1;
        self.nodes.insert(
            id,
            OntoNode {
                id,
                payload,
                provenance: self.origin,
            },
        );
        id
    }

    pub fn add_concept(&mut self, kind: ConceptKind, label: Option<&str>) -> NodeId {
        let angle = (kind == ConceptKind::Angle).then_some(AngleValue::Unconstrained);
        self.insert_node(NodePayload::Concept {
            kind,
            label: label.map(str::to_owned),
            angle,
        })
    }

    pub fn add_point(&mut self, label: Option<&str>) -> NodeId {
        self.add_concept(ConceptKind::Point, label)
    }

    pub fn add_segment(&mut self, label: Option<&str>) -> NodeId {
        self.add_concept(ConceptKind::Segment, label)
    }

    pub fn add_line(&mut self, label: Option<&str>) -> NodeId {
        self.add_concept(ConceptKind::Line, label)
    }

    pub fn add_circle(&mut self, label: Option<&str>) -> NodeId {
        self.add_concept(ConceptKind::Circle, label)
    }

    pub fn add_angle(&mut self, label: Option<&str>, value: AngleValue) -> NodeId {
        self.insert_node(NodePayload::Concept {
            kind: ConceptKind::Angle,
            label: label.map(str::to_owned),
            angle: Some(value),
        })
    }

    pub fn add_ratio(&mut self, value: Rational) -> Result<NodeId, GraphError> {
        if value <= Rational::from_integer(0) {
            return Err(GraphError::InvalidRatioValue(value));
        }
        Ok(self.insert_node(NodePayload::Ratio { value }))
    }

    /// Relabel a concept node in place. Labels are metadata; this never
    /// affects matching.
    pub fn set_label(&mut self, id: NodeId, new_label: Option<&str>) {
        if let Some(node) = self.nodes.get_mut(&id) {
            if let NodePayload::Concept { label, .. } = &mut node.payload {
                *label = new_label.map(str::to_owned);
            }
        }
    }

    /// Overwrite the value attribute of an angle node; no-op on other nodes.
    pub fn set_angle_value(&mut self, id: NodeId, value: AngleValue) {
        if let Some(node) = self.nodes.get_mut(&id) {
            if let NodePayload::Concept {
                kind: ConceptKind::Angle,
                angle,
                ..
            } = &mut node.payload
            {
                *angle = Some(value);
            }
        }
    }

    /// The legal (from-kind, to-kind) table per relation. Ratio arms are
    /// checked separately because their source is a ratio node.
    fn check_domain(&self, from: &OntoNode, to: &OntoNode, kind: RelationKind) -> Result<(), GraphError> {
        use ConceptKind::*;
        let fail = |msg: String| Err(GraphError::DomainViolation(msg));
        let fk = from.kind();
        let tk = to.kind();
        match kind {
            RelationKind::BelongsTo => match (fk, tk) {
                (Some(Point), Some(Segment | Line | Circle | Angle)) => Ok(()),
                (Some(Segment), Some(Line | Angle)) => Ok(()),
                _ => fail(format!(
                    "belongs_to requires point -> segment/line/circle/angle or segment -> line/angle, got {:?} -> {:?}",
                    fk, tk
                )),
            },
            RelationKind::IsCenterOf => match (fk, tk) {
                (Some(Point), Some(Circle)) => Ok(()),
                _ => fail(format!("is_center_of requires point -> circle, got {:?} -> {:?}", fk, tk)),
            },
            RelationKind::IsRadiusOf => match (fk, tk) {
                (Some(Segment), Some(Circle)) => Ok(()),
                _ => fail(format!("is_radius_of requires segment -> circle, got {:?} -> {:?}", fk, tk)),
            },
            RelationKind::IsParallelTo | RelationKind::IsPerpendicularTo => {
                if from.id == to.id {
                    return fail(format!("{} cannot relate a carrier to itself", kind.name()));
                }
                match (fk, tk) {
                    (Some(Line | Segment), Some(Line | Segment)) => Ok(()),
                    _ => fail(format!(
                        "{} requires line/segment endpoints, got {:?} -> {:?}",
                        kind.name(),
                        fk,
                        tk
                    )),
                }
            }
            RelationKind::RatioNominator | RelationKind::RatioDenominator => {
                if !from.is_ratio() {
                    return fail(format!("{} must originate from a ratio node", kind.name()));
                }
                match tk {
                    Some(Segment) | Some(Angle) => {}
                    _ => return fail(format!("{} must target a segment or angle, got {:?}", kind.name(), tk)),
                }
                // Each arm exists at most once, and both arms share a kind.
                for e in self.edges.values().filter(|e| e.from == from.id) {
                    if e.kind == kind {
                        return fail(format!("ratio node {} already has a {}", from.id, kind.name()));
                    }
                    if e.kind.is_ratio_arm() {
                        let other = self.nodes.get(&e.to).and_then(OntoNode::kind);
                        if other != tk {
                            return fail(format!(
                                "ratio arms must share a kind, got {:?} and {:?}",
                                other, tk
                            ));
                        }
                    }
                }
                Ok(())
            }
        }
    }

    /// Insert an edge; idempotent (re-inserting an existing relation returns
    /// its id and leaves the graph unchanged). Parallel/perpendicular pairs
    /// are canonicalized to ascending node-id order.
    pub fn add_relation(
        &mut self,
        from: NodeId,
        to: NodeId,
        kind: RelationKind,
    ) -> Result<EdgeId, GraphError> {
        let (from, to) = if kind.is_symmetric() && to < from {
            (to, from)
        } else {
            (from, to)
        };
        let from_node = self.nodes.get(&from).ok_or(GraphError::UnknownNode(from))?;
        let to_node = self.nodes.get(&to).ok_or(GraphError::UnknownNode(to))?;
        if let Some(existing) = self.find_edge(from, to, kind) {
            return Ok(existing);
        }
        self.check_domain(from_node, to_node, kind)?;
        let id = EdgeId(self.next_edge);
        self.next_edge += 1;
        self.edges.insert(
            id,
            OntoEdge {
                id,
                from,
                to,
                kind,
                provenance: self.origin,
            },
        );
        self.edge_set.insert((from, to, kind));
        Ok(id)
    }

    pub fn find_edge(&self, from: NodeId, to: NodeId, kind: RelationKind) -> Option<EdgeId> {
        let (from, to) = if kind.is_symmetric() && to < from {
            (to, from)
        } else {
            (from, to)
        };
        if !self.edge_set.contains(&(from, to, kind)) {
            return None;
        }
        self.edges
            .values()
            .find(|e| e.from == from && e.to == to && e.kind == kind)
            .map(|e| e.id)
    }

    pub fn has_relation(&self, from: NodeId, to: NodeId, kind: RelationKind) -> bool {
        let (from, to) = if kind.is_symmetric() && to < from {
            (to, from)
        } else {
            (from, to)
        };
        self.edge_set.contains(&(from, to, kind))
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Option<OntoEdge> {
        let edge = self.edges.remove(&id)?;
        self.edge_set.remove(&(edge.from, edge.to, edge.kind));
        Some(edge)
    }

    /// Remove a node together with its incident edges. Ratio nodes left with
    /// a dangling arm afterwards are removed too.
    pub fn remove_node(&mut self, id: NodeId) -> Option<OntoNode> {
        let node = self.nodes.remove(&id)?;
        let incident: Vec<EdgeId> = self
            .edges
            .values()
            .filter(|e| e.from == id || e.to == id)
            .map(|e| e.id)
            .collect();
        for eid in incident {
            self.remove_edge(eid);
        }
        self.pending.retain(|p| p.left != id && p.right != id);
        self.drop_dangling_ratios();
        Some(node)
    }

    /// Remove ratio nodes that lost one of their arms.
    pub fn prune_dangling_ratios(&mut self) {
        self.drop_dangling_ratios();
    }

    fn drop_dangling_ratios(&mut self) {
        loop {
            let dangling: Vec<NodeId> = self
                .nodes
                .values()
                .filter(|n| n.is_ratio())
                .filter(|n| {
                    let arms: Vec<&OntoEdge> = self
                        .edges
                        .values()
                        .filter(|e| e.from == n.id && e.kind.is_ratio_arm())
                        .collect();
                    arms.len() < 2
                })
                .map(|n| n.id)
                .collect();
            if dangling.is_empty() {
                return;
            }
            for id in dangling {
                if let Some(_node) = self.nodes.remove(&id) {
                    let incident: Vec<EdgeId> = self
                        .edges
                        .values()
                        .filter(|e| e.from == id || e.to == id)
                        .map(|e| e.id)
                        .collect();
                    for eid in incident {
                        self.remove_edge(eid);
                    }
                }
            }
        }
    }

    pub fn add_pending_equality(&mut self, left: NodeId, right: NodeId) {
        self.pending.push(PendingEquality {
            left,
            right,
            provenance: self.origin,
        });
    }

    pub fn pending_equalities(&self) -> &[PendingEquality] {
        &self.pending
    }

    pub fn take_pending_equalities(&mut self) -> Vec<PendingEquality> {
        std::mem::take(&mut self.pending)
    }

    pub fn out_edges(&self, id: NodeId) -> impl Iterator<Item = &OntoEdge> {
        self.edges.values().filter(move |e| e.from == id)
    }

    pub fn in_edges(&self, id: NodeId) -> impl Iterator<Item = &OntoEdge> {
        self.edges.values().filter(move |e| e.to == id)
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.edges
            .values()
            .filter(|e| e.from == id || e.to == id)
            .count()
    }

    /// Exact node and relation counts per kind.
    pub fn census(&self) -> Census {
        let mut census = Census::default();
        for node in self.nodes.values() {
            match node.kind() {
                Some(kind) => *census.concepts.entry(kind).or_insert(0) += 1,
                None => census.ratio_nodes += 1,
            }
        }
        for edge in self.edges.values() {
            *census.relations.entry(edge.kind).or_insert(0) += 1;
        }
        census
    }

    /// Node and edge counts with inference-derived elements excluded; this is
    /// the size used by ranking.
    pub fn ranked_size(&self) -> usize {
        let nodes = self
            .nodes
            .values()
            .filter(|n| n.provenance != Some(Provenance::Inferred))
            .count();
        let edges = self
            .edges
            .values()
            .filter(|e| e.provenance != Some(Provenance::Inferred))
            .count();
        nodes + edges
    }

    /// Check every structural invariant; returns a list of violations
    /// (empty means valid).
    pub fn check_invariants(&self) -> Vec<String> {
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for edge in self.edges.values() {
            let (Some(from), Some(to)) = (self.nodes.get(&edge.from), self.nodes.get(&edge.to))
            else {
                problems.push(format!("edge {:?} references a missing node", edge.id));
                continue;
            };
            if !seen.insert((edge.from, edge.to, edge.kind)) {
                problems.push(format!(
                    "duplicate edge {} -> {} ({})",
                    edge.from,
                    edge.to,
                    edge.kind.name()
                ));
            }
            if edge.kind.is_symmetric() && edge.to < edge.from {
                problems.push(format!(
                    "symmetric edge {} -> {} not stored in canonical order",
                    edge.from, edge.to
                ));
            }
            if !edge.kind.is_ratio_arm() {
                if let Err(e) = self.check_domain(from, to, edge.kind) {
                    problems.push(e.to_string());
                }
            }
        }
        for node in self.nodes.values() {
            match &node.payload {
                NodePayload::Ratio { value } => {
                    if *value <= Rational::from_integer(0) {
                        problems.push(format!("ratio node {} has non-positive value", node.id));
                    }
                    let mut noms = 0usize;
                    let mut dens = 0usize;
                    let mut kinds = BTreeSet::new();
                    for e in self.edges.values().filter(|e| e.from == node.id) {
                        match e.kind {
                            RelationKind::RatioNominator => noms += 1,
                            RelationKind::RatioDenominator => dens += 1,
                            other => problems.push(format!(
                                "ratio node {} has outgoing {}",
                                node.id,
                                other.name()
                            )),
                        }
                        if let Some(k) = self.nodes.get(&e.to).and_then(OntoNode::kind) {
                            kinds.insert(k);
                        }
                    }
                    if noms != 1 || dens != 1 {
                        problems.push(format!(
                            "ratio node {} has {} nominator(s) and {} denominator(s)",
                            node.id, noms, dens
                        ));
                    }
                    if kinds.len() > 1 {
                        problems.push(format!("ratio node {} mixes arm kinds", node.id));
                    }
                }
                NodePayload::Concept { kind, angle, .. } => {
                    if (*kind == ConceptKind::Angle) != angle.is_some() {
                        problems.push(format!(
                            "node {} angle attribute does not match its kind",
                            node.id
                        ));
                    }
                }
            }
        }
        problems
    }
}

impl RelationKind {
    pub fn is_ratio_arm(self) -> bool {
        matches!(
            self,
            RelationKind::RatioNominator | RelationKind::RatioDenominator
        )
    }
}

// Rebuild the skipped lookup set after deserialization.
impl OntoGraph {
    pub fn rebuild_index(&mut self) {
        self.edge_set = self
            .edges
            .values()
            .map(|e| (e.from, e.to, e.kind))
            .collect();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn belongs_to_respects_direction() {
        let mut g = OntoGraph::new();
        let a = g.add_point(Some("A"));
        let ab = g.add_segment(Some("A-B"));
        assert!(g.add_relation(a, ab, RelationKind::BelongsTo).is_ok());
        let err = g.add_relation(ab, a, RelationKind::BelongsTo).unwrap_err();
        assert!(matches!(err, GraphError::DomainViolation(_)));
    }

    #[test]
    fn insertion_is_idempotent() {
        let mut g = OntoGraph::new();
        let a = g.add_point(Some("A"));
        let ab = g.add_segment(Some("A-B"));
        let first = g.add_relation(a, ab, RelationKind::BelongsTo).unwrap();
        let snapshot = g.clone();
        let second = g.add_relation(a, ab, RelationKind::BelongsTo).unwrap();
        assert_eq!(first, second);
        assert_eq!(g, snapshot);
    }

    #[test]
    fn unknown_node_rejected() {
        let mut g = OntoGraph::new();
        let a = g.add_point(Some("A"));
        let err = g
            .add_relation(a, NodeId(99), RelationKind::BelongsTo)
            .unwrap_err();
        assert_eq!(err, GraphError::UnknownNode(NodeId(99)));
    }

    #[test]
    fn parallel_stored_canonically() {
        let mut g = OntoGraph::new();
        let l1 = g.add_line(Some("L_1"));
        let l2 = g.add_line(Some("L_2"));
        let e = g.add_relation(l2, l1, RelationKind::IsParallelTo).unwrap();
        let edge = g.edge(e).unwrap();
        assert_eq!((edge.from, edge.to), (l1, l2));
        // Same unordered pair in either orientation maps to the same edge.
        assert_eq!(g.add_relation(l1, l2, RelationKind::IsParallelTo).unwrap(), e);
        assert!(g.has_relation(l2, l1, RelationKind::IsParallelTo));
        let err = g.add_relation(l1, l1, RelationKind::IsPerpendicularTo).unwrap_err();
        assert!(matches!(err, GraphError::DomainViolation(_)));
    }

    #[test]
    fn ratio_arms_unique_and_kind_consistent() {
        let mut g = OntoGraph::new();
        let s1 = g.add_segment(Some("A-M"));
        let s2 = g.add_segment(Some("B-M"));
        let ang = g.add_angle(Some("A-B-C"), AngleValue::Unconstrained);
        let r = g.add_ratio(Rational::from_integer(1)).unwrap();
        g.add_relation(r, s1, RelationKind::RatioNominator).unwrap();
        let err = g.add_relation(r, s1, RelationKind::RatioNominator);
        assert!(matches!(err, Ok(_)), "same arm twice is idempotent");
        let err = g.add_relation(r, s2, RelationKind::RatioNominator).unwrap_err();
        assert!(matches!(err, GraphError::DomainViolation(_)), "second nominator rejected");
        let err = g.add_relation(r, ang, RelationKind::RatioDenominator).unwrap_err();
        assert!(matches!(err, GraphError::DomainViolation(_)), "mixed arm kinds rejected");
        g.add_relation(r, s2, RelationKind::RatioDenominator).unwrap();
        assert!(g.check_invariants().is_empty());
    }

    #[test]
    fn ratio_value_positive() {
        let mut g = OntoGraph::new();
        assert!(matches!(
            g.add_ratio(Rational::from_integer(0)),
            Err(GraphError::InvalidRatioValue(_))
        ));
        assert!(matches!(
            g.add_ratio(Rational::from_integer(-2)),
            Err(GraphError::InvalidRatioValue(_))
        ));
    }

    #[test]
    fn numeric_angles_normalize() {
        assert_eq!(
            AngleValue::numeric(Rational::from_integer(90)).unwrap(),
            AngleValue::Right
        );
        assert_eq!(
            AngleValue::numeric(Rational::from_integer(180)).unwrap(),
            AngleValue::Straight
        );
        assert_eq!(
            AngleValue::numeric(Rational::new(45, 1)).unwrap(),
            AngleValue::Numeric(Rational::from_integer(45))
        );
        assert!(AngleValue::numeric(Rational::from_integer(360)).is_err());
        assert!(AngleValue::numeric(Rational::from_integer(0)).is_err());
    }

    #[test]
    fn census_counts_kinds() {
        let mut g = OntoGraph::new();
        assert_eq!(g.census().total_nodes(), 0);
        let a = g.add_point(Some("A"));
        let b = g.add_point(Some("B"));
        let ab = g.add_segment(Some("A-B"));
        g.add_relation(a, ab, RelationKind::BelongsTo).unwrap();
        g.add_relation(b, ab, RelationKind::BelongsTo).unwrap();
        let c = g.census();
        assert_eq!(c.concept(ConceptKind::Point), 2);
        assert_eq!(c.concept(ConceptKind::Segment), 1);
        assert_eq!(c.relation(RelationKind::BelongsTo), 2);
        assert_eq!(c.total_relations(), 2);
    }

    #[test]
    fn removing_node_cleans_dangling_ratio() {
        let mut g = OntoGraph::new();
        let s1 = g.add_segment(Some("A-M"));
        let s2 = g.add_segment(Some("B-M"));
        let r = g.add_ratio(Rational::from_integer(1)).unwrap();
        g.add_relation(r, s1, RelationKind::RatioNominator).unwrap();
        g.add_relation(r, s2, RelationKind::RatioDenominator).unwrap();
        g.remove_node(s1);
        assert!(!g.contains_node(r), "ratio with a dangling arm removed");
        assert!(g.contains_node(s2));
        assert!(g.check_invariants().is_empty());
    }
}
