//! Dependency lattices and the reduction plan.
//!
//! The procedural description of a figure induces a DAG over its constructed
//! objects: an edge runs from every input of a step to every object the step
//! produces (or constrains), labeled by the operation's letter. Adding a
//! global source `S` above the free objects and a global sink `T` below the
//! final results makes the dependency order a lattice.
//!
//! When a query matches nothing, the lattice dictates what to weaken:
//! objects and relations are removed from the *bottom* — a node may only go
//! once nothing depends on it, and its single relations are dropped one at a
//! time before the node itself. Removing from the top would force removing
//! all descendants at once.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::construction::{compile, Compiled, Figure, OpLabel, Violation};
use crate::onto::{EdgeId, NodeId, OntoGraph, Provenance, RelationKind};

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
struct LatticeNode {
    name: String,
    /// Index of the step that introduced the object.
    step: usize,
}

/// The dependency DAG of a figure's step objects, with implicit global
/// source `S` and sink `T`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DependencyLattice {
    nodes: Vec<LatticeNode>,
    index: BTreeMap<String, usize>,
    /// (from, to, label) over `nodes` indices; deduplicated.
    edges: BTreeSet<(usize, usize, OpLabel)>,
}

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("figure does not validate: {0:?}")]
    Invalid(Vec<Violation>),
    #[error("dependency cycle through `{0}`")]
    CycleDetected(String),
}

/// Build the lattice of a validated figure.
pub fn build_lattice(figure: &Figure) -> Result<DependencyLattice, LatticeError> {
    let compiled = compile(figure).map_err(|e| match e {
        crate::construction::CompileError::ValidationFailed(v) => LatticeError::Invalid(v),
    })?;
    build_from_compiled(&compiled)
}

/// Build the lattice from an already compiled figure.
pub fn build_from_compiled(compiled: &Compiled) -> Result<DependencyLattice, LatticeError> {
    let mut nodes = Vec::new();
    let mut index = BTreeMap::new();
    for (step_idx, record) in compiled.steps.iter().enumerate() {
        for name in &record.outputs {
            if !index.contains_key(name) {
                index.insert(name.clone(), nodes.len());
                nodes.push(LatticeNode {
                    name: name.clone(),
                    step: step_idx,
                });
            }
        }
    }
    let mut edges = BTreeSet::new();
    for (step_idx, record) in compiled.steps.iter().enumerate() {
        let label = compiled.figure.steps[step_idx].op_label();
        for (from, to) in &record.deps {
            let (Some(&f), Some(&t)) = (index.get(from), index.get(to)) else {
                continue;
            };
            if f != t {
                edges.insert((f, t, label));
            }
        }
    }
    let lattice = DependencyLattice { nodes, index, edges };
    if let Some(name) = lattice.find_cycle() {
        return Err(LatticeError::CycleDetected(name));
    }
    Ok(lattice)
}

impl DependencyLattice {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.name.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, OpLabel)> {
        self.edges
            .iter()
            .map(|(f, t, l)| (self.nodes[*f].name.as_str(), self.nodes[*t].name.as_str(), *l))
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        let (Some(&f), Some(&t)) = (self.index.get(from), self.index.get(to)) else {
            return false;
        };
        self.edges.iter().any(|(a, b, _)| *a == f && *b == t)
    }

    /// Nodes with no construction dependencies; `S` attaches to exactly
    /// these.
    pub fn sources(&self) -> Vec<&str> {
        (0..self.nodes.len())
            .filter(|i| !self.edges.iter().any(|(_, t, _)| t == i))
            .map(|i| self.nodes[i].name.as_str())
            .collect()
    }

    /// Nodes nothing depends on; `T` attaches to exactly these.
    pub fn sinks(&self) -> Vec<&str> {
        (0..self.nodes.len())
            .filter(|i| !self.edges.iter().any(|(f, _, _)| f == i))
            .map(|i| self.nodes[i].name.as_str())
            .collect()
    }

    fn out_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |(f, _, _)| *f == i)
            .map(|(_, t, _)| *t)
    }

    fn find_cycle(&self) -> Option<String> {
        // Kahn's algorithm; leftovers sit on a cycle.
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        for (_, t, _) in &self.edges {
            indegree[*t] += 1;
        }
        let mut queue: Vec<usize> = (0..n).filter(|i| indegree[*i] == 0).collect();
        let mut seen = 0usize;
        while let Some(i) = queue.pop() {
            seen += 1;
            for t in self.out_neighbors(i) {
                indegree[t] -= 1;
                if indegree[t] == 0 {
                    queue.push(t);
                }
            }
        }
        if seen == n {
            None
        } else {
            indegree
                .iter()
                .position(|d| *d > 0)
                .map(|i| self.nodes[i].name.clone())
        }
    }
}

/// One weakening of a query graph.
///
/// `RemoveRelation` drops a single onto edge; `RemoveNode` drops a
/// construction object, cascading to everything its introducing step
/// emitted. Both record the bottom lattice node and operation that justify
/// them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ReductionAction {
    RemoveRelation {
        edge: EdgeId,
        from: String,
        to: String,
        kind: RelationKind,
        lattice_node: String,
        op: OpLabel,
    },
    RemoveNode {
        name: String,
        node: NodeId,
        step: usize,
        /// Sibling step objects that must survive the provenance cascade.
        #[serde(skip)]
        spare: Vec<NodeId>,
        op: OpLabel,
    },
}

impl ReductionAction {
    pub fn lattice_node(&self) -> &str {
        match self {
            ReductionAction::RemoveRelation { lattice_node, .. } => lattice_node,
            ReductionAction::RemoveNode { name, .. } => name,
        }
    }

    pub fn op(&self) -> OpLabel {
        match self {
            ReductionAction::RemoveRelation { op, .. } => *op,
            ReductionAction::RemoveNode { op, .. } => *op,
        }
    }
}

impl std::fmt::Display for ReductionAction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReductionAction::RemoveRelation { from, to, kind, .. } => {
                write!(f, "remove relation {} -> {} ({})", from, to, kind.name())
            }
            ReductionAction::RemoveNode { name, .. } => write!(f, "remove node {name}"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ReductionError {
    #[error("stale action: the targeted element was already removed")]
    StaleAction,
}

/// Apply one action to a graph, preserving graph validity: removing a node
/// removes its step's fragment and incident edges, and ratio nodes left with
/// a dangling arm are cleaned up.
pub fn apply_action(graph: &OntoGraph, action: &ReductionAction) -> Result<OntoGraph, ReductionError> {
    let mut out = graph.clone();
    match action {
        ReductionAction::RemoveRelation { edge, .. } => {
            out.remove_edge(*edge).ok_or(ReductionError::StaleAction)?;
            out.prune_dangling_ratios();
        }
        ReductionAction::RemoveNode {
            node, step, spare, ..
        } => {
            if !out.contains_node(*node) {
                return Err(ReductionError::StaleAction);
            }
            let mut victims: Vec<NodeId> = out
                .nodes()
                .filter(|n| n.provenance == Some(Provenance::Step(*step)))
                .map(|n| n.id)
                .filter(|id| !spare.contains(id))
                .collect();
            if !victims.contains(node) {
                victims.push(*node);
            }
            for victim in victims {
                out.remove_node(victim);
            }
            out.prune_dangling_ratios();
        }
    }
    Ok(out)
}

/// The ordered stream of reduction actions for a compiled query.
///
/// Bottom-up: among current sinks the latest-defined object goes first (ties
/// by name); its single removable relations are emitted before the node
/// itself, most recently asserted first. Once a node falls, parents that
/// became sinks join the frontier. The stream ends when only `S` and `T`
/// would remain.
pub fn reduction_sequence(
    lattice: &DependencyLattice,
    compiled: &Compiled,
) -> ReductionPlan {
    ReductionPlan::new(lattice.clone(), compiled)
}

pub struct ReductionPlan {
    lattice: DependencyLattice,
    alive: BTreeSet<usize>,
    queue: Vec<ReductionAction>,
    /// Relation actions per lattice node, precomputed from the compiled
    /// graph: edges incident to the object, grouped by the steps that
    /// produced or constrained it, latest step first.
    relations: BTreeMap<usize, Vec<ReductionAction>>,
    node_meta: BTreeMap<usize, ReductionAction>,
}

impl ReductionPlan {
    fn new(lattice: DependencyLattice, compiled: &Compiled) -> Self {
        let mut producing: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
        for (i, node) in lattice.nodes.iter().enumerate() {
            producing.entry(i).or_default().insert(node.step);
        }
        for (step_idx, record) in compiled.steps.iter().enumerate() {
            for (_, target) in &record.deps {
                if let Some(&i) = lattice.index.get(target) {
                    producing.entry(i).or_default().insert(step_idx);
                }
            }
        }

        let label_of = |graph: &OntoGraph, id: NodeId| -> String {
            graph
                .node(id)
                .and_then(|n| n.label().map(str::to_owned))
                .unwrap_or_else(|| id.to_string())
        };

        let mut relations: BTreeMap<usize, Vec<ReductionAction>> = BTreeMap::new();
        let mut node_meta: BTreeMap<usize, ReductionAction> = BTreeMap::new();
        for (i, node) in lattice.nodes.iter().enumerate() {
            let binding = compiled
                .symbols
                .get(&node.name)
                .expect("lattice node has a binding");
            let onto_id = binding.node;
            let mut steps: Vec<usize> = producing[&i].iter().copied().collect();
            steps.sort_unstable_by(|a, b| b.cmp(a));
            let mut actions = Vec::new();
            for step in steps {
                let op = compiled.figure.steps[step].op_label();
                for edge in compiled.graph.edges() {
                    if edge.provenance != Some(Provenance::Step(step)) {
                        continue;
                    }
                    if edge.from != onto_id && edge.to != onto_id {
                        continue;
                    }
                    actions.push(ReductionAction::RemoveRelation {
                        edge: edge.id,
                        from: label_of(&compiled.graph, edge.from),
                        to: label_of(&compiled.graph, edge.to),
                        kind: edge.kind,
                        lattice_node: node.name.clone(),
                        op,
                    });
                }
            }
            relations.insert(i, actions);
            let spare: Vec<NodeId> = compiled.steps[node.step]
                .outputs
                .iter()
                .filter(|n| **n != node.name)
                .filter_map(|n| compiled.symbols.get(n).map(|b| b.node))
                .collect();
            node_meta.insert(
                i,
                ReductionAction::RemoveNode {
                    name: node.name.clone(),
                    node: onto_id,
                    step: node.step,
                    spare,
                    op: compiled.figure.steps[node.step].op_label(),
                },
            );
        }

        ReductionPlan {
            alive: (0..lattice.nodes.len()).collect(),
            lattice,
            queue: Vec::new(),
            relations,
            node_meta,
        }
    }

    fn refill(&mut self) {
        if !self.queue.is_empty() || self.alive.is_empty() {
            return;
        }
        // Current sinks, latest-defined first, ties by name.
        let mut sinks: Vec<usize> = self
            .alive
            .iter()
            .copied()
            .filter(|i| {
                !self
                    .lattice
                    .edges
                    .iter()
                    .any(|(f, t, _)| f == i && self.alive.contains(t))
            })
            .collect();
        sinks.sort_by(|a, b| {
            let (na, nb) = (&self.lattice.nodes[*a], &self.lattice.nodes[*b]);
            nb.step.cmp(&na.step).then(na.name.cmp(&nb.name))
        });
        let Some(&next) = sinks.first() else { return };
        let mut actions = self.relations.remove(&next).unwrap_or_default();
        actions.push(self.node_meta.remove(&next).expect("node meta"));
        actions.reverse(); // popped back-to-front
        self.queue = actions;
        self.alive.remove(&next);
    }
}

impl Iterator for ReductionPlan {
    type Item = ReductionAction;

    fn next(&mut self) -> Option<ReductionAction> {
        if self.queue.is_empty() {
            self.refill();
        }
        self.queue.pop()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construction::tests::centroid_figure;
    use crate::construction::ConstructionStep as S;

    fn medians_figure() -> Figure {
        let mut figure = centroid_figure();
        figure.steps.push(S::IntersectLines {
            name: "G".into(),
            of: ["A-F".into(), "B-D".into()],
        });
        figure
    }

    #[test]
    fn centroid_lattice_shape() {
        let lattice = build_lattice(&centroid_figure()).unwrap();
        let mut names: Vec<&str> = lattice.names().collect();
        names.sort();
        assert_eq!(
            names,
            vec!["A", "A-F", "B", "B-D", "C", "C-E", "D", "E", "F", "G"]
        );
        assert_eq!(lattice.sources(), vec!["A", "B", "C"]);
        let mut sinks = lattice.sinks();
        sinks.sort();
        assert_eq!(sinks, vec!["A-F", "G"]);
        assert!(lattice.has_edge("B-D", "G"));
        assert!(lattice.has_edge("C-E", "G"));
        assert!(!lattice.has_edge("A-F", "G"));
        // Operation letters on G's in-edges.
        let g_in: Vec<OpLabel> = lattice
            .edges()
            .filter(|(_, t, _)| *t == "G")
            .map(|(_, _, l)| l)
            .collect();
        assert!(g_in.iter().all(|l| *l == OpLabel::Intersection));
    }

    #[test]
    fn extra_intersection_moves_the_sink() {
        let lattice = build_lattice(&medians_figure()).unwrap();
        assert!(lattice.has_edge("A-F", "G"));
        assert_eq!(lattice.sinks(), vec!["G"], "A-F is no longer a sink");
    }

    #[test]
    fn single_free_point_lattice() {
        let figure = Figure {
            id: "pt".into(),
            title: String::new(),
            steps: vec![S::FreePoint { name: "A".into() }],
            draw: vec![],
        };
        let lattice = build_lattice(&figure).unwrap();
        assert_eq!(lattice.names().collect::<Vec<_>>(), vec!["A"]);
        assert_eq!(lattice.sources(), vec!["A"]);
        assert_eq!(lattice.sinks(), vec!["A"]);
    }

    #[test]
    fn single_free_point_reduction_sequence() {
        let figure = Figure {
            id: "pt".into(),
            title: String::new(),
            steps: vec![S::FreePoint { name: "A".into() }],
            draw: vec![],
        };
        let compiled = compile(&figure).unwrap();
        let lattice = build_from_compiled(&compiled).unwrap();
        let actions: Vec<ReductionAction> = reduction_sequence(&lattice, &compiled).collect();
        assert_eq!(actions.len(), 1, "a free point has no single relations");
        assert!(matches!(&actions[0], ReductionAction::RemoveNode { name, .. } if name == "A"));
    }

    #[test]
    fn medians_reduction_starts_with_barycenter_relations() {
        let figure = medians_figure();
        let compiled = compile(&figure).unwrap();
        let lattice = build_from_compiled(&compiled).unwrap();
        let actions: Vec<ReductionAction> =
            reduction_sequence(&lattice, &compiled).take(4).collect();
        // The latest-asserted membership goes first: G on A-F.
        match &actions[0] {
            ReductionAction::RemoveRelation { from, to, kind, lattice_node, .. } => {
                assert_eq!(from, "G");
                assert_eq!(to, "A-F");
                assert_eq!(*kind, RelationKind::BelongsTo);
                assert_eq!(lattice_node, "G");
            }
            other => panic!("expected a relation removal, got {other:?}"),
        }
        let removed: BTreeSet<String> = actions[..3]
            .iter()
            .map(|a| match a {
                ReductionAction::RemoveRelation { to, .. } => to.clone(),
                other => panic!("expected relation removals first, got {other:?}"),
            })
            .collect();
        assert_eq!(
            removed,
            ["A-F", "B-D", "C-E"].iter().map(|s| s.to_string()).collect()
        );
        assert!(matches!(&actions[3], ReductionAction::RemoveNode { name, .. } if name == "G"));
    }

    #[test]
    fn after_removing_barycenter_the_medians_join_the_frontier() {
        let figure = medians_figure();
        let compiled = compile(&figure).unwrap();
        let lattice = build_from_compiled(&compiled).unwrap();
        let actions: Vec<ReductionAction> = reduction_sequence(&lattice, &compiled).collect();
        let g_node_pos = actions
            .iter()
            .position(|a| matches!(a, ReductionAction::RemoveNode { name, .. } if name == "G"))
            .unwrap();
        let next_nodes: BTreeSet<&str> = actions[g_node_pos + 1..]
            .iter()
            .take_while(|a| {
                matches!(a, ReductionAction::RemoveRelation { .. })
                    || matches!(a, ReductionAction::RemoveNode { name, .. } if ["A-F", "B-D", "C-E"].contains(&name.as_str()))
            })
            .map(|a| a.lattice_node())
            .collect();
        assert!(next_nodes.is_subset(&["A-F", "B-D", "C-E"].into_iter().collect()));
        assert!(!next_nodes.is_empty());
    }

    #[test]
    fn order_soundness_no_node_before_its_descendants() {
        let figure = medians_figure();
        let compiled = compile(&figure).unwrap();
        let lattice = build_from_compiled(&compiled).unwrap();
        let actions: Vec<ReductionAction> = reduction_sequence(&lattice, &compiled).collect();
        let mut removed: BTreeSet<String> = BTreeSet::new();
        for action in &actions {
            if let ReductionAction::RemoveNode { name, .. } = action {
                // Every dependent of `name` must already be gone.
                for (from, to, _) in lattice.edges() {
                    if from == name {
                        assert!(
                            removed.contains(to),
                            "{name} removed before its dependent {to}"
                        );
                    }
                }
                removed.insert(name.clone());
            }
        }
        // Termination bound: actions ≤ edges + lattice nodes.
        assert!(actions.len() <= compiled.graph.edge_count() + lattice.len());
    }

    #[test]
    fn applying_a_stale_action_fails() {
        let figure = medians_figure();
        let compiled = compile(&figure).unwrap();
        let lattice = build_from_compiled(&compiled).unwrap();
        let first = reduction_sequence(&lattice, &compiled).next().unwrap();
        let reduced = apply_action(&compiled.graph, &first).unwrap();
        assert_eq!(apply_action(&reduced, &first), Err(ReductionError::StaleAction));
    }

    #[test]
    fn full_reduction_stream_preserves_graph_validity() {
        let figure = medians_figure();
        let compiled = compile(&figure).unwrap();
        let lattice = build_from_compiled(&compiled).unwrap();
        let mut graph = crate::inference::materialize_unit_ratios(&compiled.graph);
        for action in reduction_sequence(&lattice, &compiled) {
            match apply_action(&graph, &action) {
                Ok(next) => {
                    assert!(next.check_invariants().is_empty(), "invariants after {action}");
                    graph = next;
                }
                Err(ReductionError::StaleAction) => {
                    // Ratio cleanup may have raced a relation removal.
                }
            }
        }
    }
}
