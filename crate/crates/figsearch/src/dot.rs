//! Graphviz export for ontological graphs and dependency lattices.

use std::collections::BTreeSet;

use crate::lattice::DependencyLattice;
use crate::matcher::Embedding;
use crate::onto::{ConceptKind, NodeId, OntoGraph, RelationKind};

fn node_fill(kind: Option<ConceptKind>) -> &'static str {
    match kind {
        Some(ConceptKind::Point) => "palegreen",
        Some(ConceptKind::Segment) => "mistyrose",
        Some(ConceptKind::Line) => "lightblue",
        Some(ConceptKind::Circle) => "gray85",
        Some(ConceptKind::Angle) => "lightsteelblue",
        None => "lightyellow",
    }
}

fn escape(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Render a figure graph; nodes hit by any of the embeddings are emphasized
/// with a bold border.
pub fn graph_dot(graph: &OntoGraph, name: &str, highlight: &[Embedding]) -> String {
    let emphasized: BTreeSet<NodeId> = highlight
        .iter()
        .flat_map(|e| e.pairs().map(|(_, figure_node)| figure_node))
        .collect();
    let mut out = String::new();
    out.push_str(&format!("digraph \"{}\" {{\n", escape(name)));
    out.push_str("  rankdir=TB;\n  node [style=filled, fontname=\"Helvetica\"];\n");
    for node in graph.nodes() {
        let label = match (node.label(), node.ratio_value(), node.angle_value()) {
            (_, Some(value), _) => format!("has_ratio {value}"),
            (Some(l), _, Some(angle)) => format!("{l}\\n{angle:?}"),
            (Some(l), _, None) => l.to_string(),
            (None, _, _) => node.id.to_string(),
        };
        let extra = if emphasized.contains(&node.id) {
            ", penwidth=3"
        } else {
            ""
        };
        out.push_str(&format!(
            "  {} [label=\"{}\", fillcolor={}{}];\n",
            node.id,
            escape(&label),
            node_fill(node.kind()),
            extra
        ));
    }
    for edge in graph.edges() {
        let style = match edge.kind {
            RelationKind::BelongsTo => String::new(),
            RelationKind::IsCenterOf => ", style=dotted".into(),
            RelationKind::IsRadiusOf => ", style=dashed".into(),
            other => format!(", label=\"{}\"", other.name()),
        };
        out.push_str(&format!(
            "  {} -> {} [dir=forward{}];\n",
            edge.from, edge.to, style
        ));
    }
    out.push_str("}\n");
    out
}

/// Render a dependency lattice: dashed source/sink attachments, op-letter
/// edge labels.
pub fn lattice_dot(lattice: &DependencyLattice, name: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("digraph \"{}\" {{\n", escape(name)));
    out.push_str("  rankdir=TB;\n  node [fontname=\"Helvetica\"];\n");
    out.push_str("  S [shape=circle];\n  T [shape=circle];\n");
    let quoted = |n: &str| format!("\"{}\"", escape(n));
    for node in lattice.names() {
        out.push_str(&format!("  {} [shape=box];\n", quoted(node)));
    }
    for source in lattice.sources() {
        out.push_str(&format!("  S -> {} [style=dashed];\n", quoted(source)));
    }
    for (from, to, label) in lattice.edges() {
        out.push_str(&format!(
            "  {} -> {} [label=\"{}\"];\n",
            quoted(from),
            quoted(to),
            label.letter()
        ));
    }
    for sink in lattice.sinks() {
        out.push_str(&format!("  {} -> T [style=dashed];\n", quoted(sink)));
    }
    out.push_str("}\n");
    out
}
