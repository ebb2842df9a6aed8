//! The procedural construction language and its compiler.
//!
//! A [`Figure`] is an ordered list of construction steps plus a draw list; it
//! is the corpus unit. Compiling a figure walks the steps in order and emits,
//! per step, a fragment of concepts and relations into an [`OntoGraph`], with
//! every element tagged by the step that produced it. Equal-by-construction
//! lengths and angles are recorded as pending equalities; the inference pass
//! turns those into unit-ratio nodes.
//!
//! Composite names are normalized so that `A-B` and `B-A` denote the same
//! segment, and `A-B-C` / `C-B-A` the same angle (vertex in the middle).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::onto::{AngleValue, ConceptKind, NodeId, OntoGraph, Provenance, RelationKind};

/// One construction operation.
///
/// Each variant names the objects it introduces and references earlier
/// objects by name. `Segment` is the only step that auto-creates unknown
/// endpoint points; everything else requires its references to be defined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ConstructionStep {
    FreePoint { name: String },
    /// Draws and registers segment `ends` (a composite like `"A-B"`),
    /// creating unknown endpoints as free points.
    Segment { ends: String },
    LineThrough { name: String, through: [String; 2] },
    Midpoint { name: String, of: String },
    /// Carriers are line names or segment composites.
    IntersectLines { name: String, of: [String; 2] },
    PerpendicularAt { name: String, to: String, at: String },
    ParallelAt { name: String, to: String, at: String },
    Mediatrix { name: String, of: String },
    Foot { name: String, of: String, on: String },
    Circle { name: String, center: String, through: String },
    IntersectCircles { names: [String; 2], of: [String; 2] },
    IntersectCircleLine { names: [String; 2], circle: String, line: String },
    /// `of` is an angle composite `"A-B-C"` (vertex `B`).
    Bisector { name: String, of: String },
    RightAngle { of: String },
}

/// The letter a step contributes to dependency-lattice edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OpLabel {
    Midpoint,
    SegmentDraw,
    Intersection,
    Perpendicular,
    Circle,
    Foot,
    Bisector,
    Mediatrix,
}

impl OpLabel {
    pub fn letter(self) -> char {
        match self {
            OpLabel::Midpoint => 'm',
            OpLabel::SegmentDraw => 's',
            OpLabel::Intersection => 'i',
            OpLabel::Perpendicular => 'p',
            OpLabel::Circle => 'c',
            OpLabel::Foot => 'f',
            OpLabel::Bisector => 'b',
            OpLabel::Mediatrix => 'e',
        }
    }
}

impl ConstructionStep {
    pub fn op_label(&self) -> OpLabel {
        match self {
            ConstructionStep::FreePoint { .. } | ConstructionStep::Segment { .. } => {
                OpLabel::SegmentDraw
            }
            ConstructionStep::LineThrough { .. } => OpLabel::SegmentDraw,
            ConstructionStep::Midpoint { .. } => OpLabel::Midpoint,
            ConstructionStep::IntersectLines { .. }
            | ConstructionStep::IntersectCircles { .. }
            | ConstructionStep::IntersectCircleLine { .. } => OpLabel::Intersection,
            ConstructionStep::PerpendicularAt { .. }
            | ConstructionStep::ParallelAt { .. }
            | ConstructionStep::RightAngle { .. } => OpLabel::Perpendicular,
            ConstructionStep::Mediatrix { .. } => OpLabel::Mediatrix,
            ConstructionStep::Foot { .. } => OpLabel::Foot,
            ConstructionStep::Circle { .. } => OpLabel::Circle,
            ConstructionStep::Bisector { .. } => OpLabel::Bisector,
        }
    }
}

/// A procedurally described figure: the corpus unit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Figure {
    pub id: String,
    #[serde(default)]
    pub title: String,
    pub steps: Vec<ConstructionStep>,
    #[serde(default)]
    pub draw: Vec<String>,
}

/// Where a violation was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Location {
    Step(usize),
    Draw(usize),
}

impl std::fmt::Display for Location {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Location::Step(i) => write!(f, "step {}", i + 1),
            Location::Draw(i) => write!(f, "draw entry {}", i + 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub location: Location,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("figure does not validate: {}", format_violations(.0))]
    ValidationFailed(Vec<Violation>),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(Violation::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Normalized segment name: endpoint labels in lexicographic order.
pub fn segment_name(a: &str, b: &str) -> String {
    if a <= b {
        format!("{a}-{b}")
    } else {
        format!("{b}-{a}")
    }
}

/// Normalized angle name: vertex in the middle, outer labels sorted.
pub fn angle_name(a: &str, vertex: &str, c: &str) -> String {
    if a <= c {
        format!("{a}-{vertex}-{c}")
    } else {
        format!("{c}-{vertex}-{a}")
    }
}

/// Split a composite name on hyphens; primitive names come back whole.
pub fn name_parts(name: &str) -> Vec<&str> {
    name.split('-').collect()
}

/// How a name is bound in the symbol table of a figure.
#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub node: NodeId,
    pub kind: ConceptKind,
    pub origin: Provenance,
    /// True when the object was introduced by a step (free point, segment
    /// drawing, operation output) rather than as a fragment byproduct or a
    /// draw-list auto-creation. Only step objects enter the dependency
    /// lattice.
    pub step_object: bool,
}

/// Name-level record of one step, used to build the dependency lattice.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StepObjects {
    /// Step objects this step introduced (including auto-created endpoints).
    pub outputs: Vec<String>,
    /// Dependency pairs `(input, produced-or-constrained)`.
    pub deps: Vec<(String, String)>,
}

/// A figure compiled to its pre-inference graph, keeping the symbol table and
/// per-step object records around for lattice construction and reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub figure: Figure,
    pub graph: OntoGraph,
    pub symbols: BTreeMap<String, Binding>,
    pub steps: Vec<StepObjects>,
}

/// Check every definition-before-use and redefinition rule; all violations
/// are returned together with their step or draw index.
pub fn validate(figure: &Figure) -> Vec<Violation> {
    let mut builder = Builder::new(figure);
    builder.run();
    builder.violations
}

/// Compile a figure into its pre-inference ontological graph.
pub fn compile_figure(figure: &Figure) -> Result<OntoGraph, CompileError> {
    compile(figure).map(|c| c.graph)
}

/// Compile, keeping symbols and step records.
pub fn compile(figure: &Figure) -> Result<Compiled, CompileError> {
    let mut builder = Builder::new(figure);
    builder.run();
    if !builder.violations.is_empty() {
        return Err(CompileError::ValidationFailed(builder.violations));
    }
    Ok(Compiled {
        figure: figure.clone(),
        graph: builder.graph,
        symbols: builder.symbols,
        steps: builder.steps,
    })
}

struct Builder<'a> {
    figure: &'a Figure,
    graph: OntoGraph,
    symbols: BTreeMap<String, Binding>,
    steps: Vec<StepObjects>,
    violations: Vec<Violation>,
    location: Location,
}

impl<'a> Builder<'a> {
    fn new(figure: &'a Figure) -> Self {
        Builder {
            figure,
            graph: OntoGraph::new(),
            symbols: BTreeMap::new(),
            steps: Vec::new(),
            violations: Vec::new(),
            location: Location::Step(0),
        }
    }

    fn run(&mut self) {
        for (i, step) in self.figure.steps.iter().enumerate() {
            self.location = Location::Step(i);
            self.graph.set_origin(Some(Provenance::Step(i)));
            let record = self.emit_step(step);
            self.steps.push(record);
        }
        for (j, name) in self.figure.draw.iter().enumerate() {
            self.location = Location::Draw(j);
            self.graph.set_origin(Some(Provenance::Draw(j)));
            self.emit_draw(name);
        }
        self.graph.set_origin(None);
    }

    fn complain(&mut self, message: String) {
        self.violations.push(Violation {
            location: self.location,
            message,
        });
    }

    fn origin(&self) -> Provenance {
        match self.location {
            Location::Step(i) => Provenance::Step(i),
            Location::Draw(j) => Provenance::Draw(j),
        }
    }

    fn check_primitive(&mut self, name: &str) -> bool {
        if name.is_empty() || name.contains('-') {
            self.complain(format!("`{name}` is not a primitive name"));
            false
        } else {
            true
        }
    }

    /// Look up a defined point; complains (and returns None) otherwise.
    fn point(&mut self, name: &str) -> Option<NodeId> {
        match self.symbols.get(name) {
            Some(b) if b.kind == ConceptKind::Point => Some(b.node),
            Some(b) => {
                self.complain(format!(
                    "`{name}` is a {}, expected a point",
                    b.kind.name()
                ));
                None
            }
            None => {
                self.complain(format!("point `{name}` is not defined"));
                None
            }
        }
    }

    fn circle(&mut self, name: &str) -> Option<NodeId> {
        match self.symbols.get(name) {
            Some(b) if b.kind == ConceptKind::Circle => Some(b.node),
            Some(b) => {
                self.complain(format!(
                    "`{name}` is a {}, expected a circle",
                    b.kind.name()
                ));
                None
            }
            None => {
                self.complain(format!("circle `{name}` is not defined"));
                None
            }
        }
    }

    /// Resolve a carrier reference: a line name or a segment composite. The
    /// second element names the lattice inputs the carrier stands for (the
    /// object itself when it is a step object, else its endpoints).
    fn carrier(&mut self, name: &str) -> Option<(NodeId, Vec<String>)> {
        let parts = name_parts(name);
        match parts.len() {
            1 => match self.symbols.get(name) {
                Some(b) if matches!(b.kind, ConceptKind::Line | ConceptKind::Segment) => {
                    Some((b.node, vec![name.to_string()]))
                }
                Some(b) => {
                    self.complain(format!(
                        "`{name}` is a {}, expected a line or segment",
                        b.kind.name()
                    ));
                    None
                }
                None => {
                    self.complain(format!("carrier `{name}` is not defined"));
                    None
                }
            },
            2 => {
                let canonical = segment_name(parts[0], parts[1]);
                match self.symbols.get(&canonical) {
                    Some(b) if b.kind == ConceptKind::Segment => {
                        let inputs = if b.step_object {
                            vec![canonical]
                        } else {
                            vec![parts[0].to_string(), parts[1].to_string()]
                        };
                        Some((b.node, inputs))
                    }
                    Some(b) => {
                        self.complain(format!(
                            "`{canonical}` is a {}, expected a segment",
                            b.kind.name()
                        ));
                        None
                    }
                    None => {
                        self.complain(format!("segment `{canonical}` is not defined"));
                        None
                    }
                }
            }
            _ => {
                self.complain(format!("`{name}` cannot be used as a carrier"));
                None
            }
        }
    }

    fn bind(&mut self, name: &str, node: NodeId, kind: ConceptKind, step_object: bool) {
        self.symbols.insert(
            name.to_string(),
            Binding {
                node,
                kind,
                origin: self.origin(),
                step_object,
            },
        );
    }

    /// Introduce a fresh step object; redefinition is a violation (the
    /// binding is overwritten anyway so later steps do not cascade).
    fn introduce(&mut self, name: &str, kind: ConceptKind) -> Option<NodeId> {
        if !self.check_primitive(name) {
            return None;
        }
        if self.symbols.contains_key(name) {
            self.complain(format!("`{name}` is already defined"));
        }
        let node = self.graph.add_concept(kind, Some(name));
        self.bind(name, node, kind, true);
        Some(node)
    }

    /// Segment node between two labeled points, created on first use
    /// together with its endpoint memberships.
    fn ensure_segment(&mut self, a: &str, b: &str, pa: NodeId, pb: NodeId) -> NodeId {
        let name = segment_name(a, b);
        if let Some(binding) = self.symbols.get(&name) {
            return binding.node;
        }
        let node = self.graph.add_segment(Some(&name));
        self.bind(&name, node, ConceptKind::Segment, false);
        let _ = self.graph.add_relation(pa, node, RelationKind::BelongsTo);
        let _ = self.graph.add_relation(pb, node, RelationKind::BelongsTo);
        node
    }

    /// Anonymous segment (one of its endpoints has no user name).
    fn anonymous_segment(&mut self, pa: NodeId, pb: NodeId) -> NodeId {
        let node = self.graph.add_segment(None);
        let _ = self.graph.add_relation(pa, node, RelationKind::BelongsTo);
        let _ = self.graph.add_relation(pb, node, RelationKind::BelongsTo);
        node
    }

    /// The full angle fragment: an angle node receiving membership edges from
    /// its three points and its two side segments (created when absent).
    fn angle_pattern(
        &mut self,
        angle: NodeId,
        a: (&str, NodeId),
        vertex: (&str, NodeId),
        c: (&str, NodeId),
    ) {
        let side_a = self.ensure_segment(a.0, vertex.0, a.1, vertex.1);
        let side_c = self.ensure_segment(vertex.0, c.0, vertex.1, c.1);
        let _ = self.graph.add_relation(a.1, angle, RelationKind::BelongsTo);
        let _ = self.graph.add_relation(vertex.1, angle, RelationKind::BelongsTo);
        let _ = self.graph.add_relation(c.1, angle, RelationKind::BelongsTo);
        let _ = self.graph.add_relation(side_a, angle, RelationKind::BelongsTo);
        let _ = self.graph.add_relation(side_c, angle, RelationKind::BelongsTo);
    }

    /// Split a 2-part composite, endpoints in canonical order (so `C-A` and
    /// `A-C` emit identical fragments, ratio arms included).
    fn split_segment_composite(&mut self, composite: &str) -> Option<(String, String)> {
        let parts = name_parts(composite);
        if parts.len() != 2 || parts[0].is_empty() || parts[1].is_empty() {
            self.complain(format!("`{composite}` is not a segment composite"));
            return None;
        }
        let (a, b) = if parts[0] <= parts[1] {
            (parts[0], parts[1])
        } else {
            (parts[1], parts[0])
        };
        Some((a.to_string(), b.to_string()))
    }

    fn split_angle_composite(&mut self, composite: &str) -> Option<(String, String, String)> {
        let parts = name_parts(composite);
        if parts.len() != 3 || parts.iter().any(|p| p.is_empty()) {
            self.complain(format!("`{composite}` is not an angle composite"));
            return None;
        }
        Some((
            parts[0].to_string(),
            parts[1].to_string(),
            parts[2].to_string(),
        ))
    }

    fn emit_step(&mut self, step: &ConstructionStep) -> StepObjects {
        let mut record = StepObjects::default();
        match step {
            ConstructionStep::FreePoint { name } => {
                if self.introduce(name, ConceptKind::Point).is_some() {
                    record.outputs.push(name.clone());
                }
            }
            ConstructionStep::Segment { ends } => {
                let Some((a, b)) = self.split_segment_composite(ends) else {
                    return record;
                };
                if a == b {
                    self.complain(format!("segment `{ends}` has identical endpoints"));
                    return record;
                }
                // Unknown endpoints auto-create as free points.
                for end in [&a, &b] {
                    if !self.symbols.contains_key(end.as_str()) && self.check_primitive(end) {
                        let node = self.graph.add_point(Some(end));
                        self.bind(end, node, ConceptKind::Point, true);
                        record.outputs.push(end.clone());
                    }
                }
                let (Some(pa), Some(pb)) = (self.point(&a), self.point(&b)) else {
                    return record;
                };
                let name = segment_name(&a, &b);
                if let Some(existing) = self.symbols.get(&name) {
                    if existing.step_object {
                        self.complain(format!("segment `{name}` is already defined"));
                        return record;
                    }
                }
                self.ensure_segment(&a, &b, pa, pb);
                // Promote to a step object regardless of an earlier fragment
                // appearance.
                let origin = self.origin();
                if let Some(binding) = self.symbols.get_mut(&name) {
                    binding.step_object = true;
                    binding.origin = origin;
                }
                record.outputs.push(name.clone());
                record.deps.push((a.clone(), name.clone()));
                record.deps.push((b.clone(), name));
            }
            ConstructionStep::LineThrough { name, through } => {
                let pa = self.point(&through[0]);
                let pb = self.point(&through[1]);
                let Some(line) = self.introduce(name, ConceptKind::Line) else {
                    return record;
                };
                record.outputs.push(name.clone());
                if let (Some(pa), Some(pb)) = (pa, pb) {
                    let _ = self.graph.add_relation(pa, line, RelationKind::BelongsTo);
                    let _ = self.graph.add_relation(pb, line, RelationKind::BelongsTo);
                    record.deps.push((through[0].clone(), name.clone()));
                    record.deps.push((through[1].clone(), name.clone()));
                }
            }
            ConstructionStep::Midpoint { name, of } => {
                let Some((a, b)) = self.split_segment_composite(of) else {
                    return record;
                };
                let pa = self.point(&a);
                let pb = self.point(&b);
                let Some(mid) = self.introduce(name, ConceptKind::Point) else {
                    return record;
                };
                record.outputs.push(name.clone());
                let (Some(pa), Some(pb)) = (pa, pb) else {
                    return record;
                };
                let whole = self.ensure_segment(&a, &b, pa, pb);
                let _ = self.graph.add_relation(mid, whole, RelationKind::BelongsTo);
                let first = self.ensure_segment(&a, name, pa, mid);
                let second = self.ensure_segment(name, &b, mid, pb);
                self.graph.add_pending_equality(first, second);
                record.deps.push((a, name.clone()));
                record.deps.push((b, name.clone()));
            }
            ConstructionStep::IntersectLines { name, of } => {
                let c1 = self.carrier(&of[0]);
                let c2 = self.carrier(&of[1]);
                let point = self.reference_or_introduce_point(name, &mut record);
                let Some(point) = point else { return record };
                for carrier in [&c1, &c2] {
                    if let Some((node, inputs)) = carrier {
                        let _ = self.graph.add_relation(point, *node, RelationKind::BelongsTo);
                        for input in inputs {
                            record.deps.push((input.clone(), name.clone()));
                        }
                    }
                }
            }
            ConstructionStep::PerpendicularAt { name, to, at } => {
                self.linear_constraint(
                    name,
                    to,
                    at,
                    RelationKind::IsPerpendicularTo,
                    true,
                    &mut record,
                );
            }
            ConstructionStep::ParallelAt { name, to, at } => {
                self.linear_constraint(
                    name,
                    to,
                    at,
                    RelationKind::IsParallelTo,
                    false,
                    &mut record,
                );
            }
            ConstructionStep::Mediatrix { name, of } => {
                let Some((a, b)) = self.split_segment_composite(of) else {
                    return record;
                };
                let pa = self.point(&a);
                let pb = self.point(&b);
                let Some(line) = self.introduce(name, ConceptKind::Line) else {
                    return record;
                };
                record.outputs.push(name.clone());
                let (Some(pa), Some(pb)) = (pa, pb) else {
                    return record;
                };
                let whole = self.ensure_segment(&a, &b, pa, pb);
                let mid = self.graph.add_point(None);
                let _ = self.graph.add_relation(mid, whole, RelationKind::BelongsTo);
                let _ = self.graph.add_relation(mid, line, RelationKind::BelongsTo);
                let first = self.anonymous_segment(pa, mid);
                let second = self.anonymous_segment(mid, pb);
                self.graph.add_pending_equality(first, second);
                let _ = self
                    .graph
                    .add_relation(line, whole, RelationKind::IsPerpendicularTo);
                record.deps.push((a, name.clone()));
                record.deps.push((b, name.clone()));
            }
            ConstructionStep::Foot { name, of, on } => {
                let from = self.point(of);
                let carrier = self.carrier(on);
                let Some(foot) = self.introduce(name, ConceptKind::Point) else {
                    return record;
                };
                record.outputs.push(name.clone());
                let (Some(from), Some((carrier_node, inputs))) = (from, carrier) else {
                    return record;
                };
                let _ = self.graph.add_relation(foot, carrier_node, RelationKind::BelongsTo);
                let drop = self.ensure_segment(of, name, from, foot);
                let _ = self
                    .graph
                    .add_relation(drop, carrier_node, RelationKind::IsPerpendicularTo);
                record.deps.push((of.clone(), name.clone()));
                for input in inputs {
                    record.deps.push((input, name.clone()));
                }
            }
            ConstructionStep::Circle {
                name,
                center,
                through,
            } => {
                let o = self.point(center);
                let a = self.point(through);
                let Some(circle) = self.introduce(name, ConceptKind::Circle) else {
                    return record;
                };
                record.outputs.push(name.clone());
                let (Some(o), Some(a)) = (o, a) else {
                    return record;
                };
                let _ = self.graph.add_relation(o, circle, RelationKind::IsCenterOf);
                let _ = self.graph.add_relation(a, circle, RelationKind::BelongsTo);
                let radius = self.ensure_segment(center, through, o, a);
                let _ = self
                    .graph
                    .add_relation(radius, circle, RelationKind::IsRadiusOf);
                record.deps.push((center.clone(), name.clone()));
                record.deps.push((through.clone(), name.clone()));
            }
            ConstructionStep::IntersectCircles { names, of } => {
                let c = self.circle(&of[0]);
                let d = self.circle(&of[1]);
                for point_name in names {
                    let Some(point) = self.introduce(point_name, ConceptKind::Point) else {
                        continue;
                    };
                    record.outputs.push(point_name.clone());
                    for circle in [&c, &d] {
                        if let Some(circle) = circle {
                            let _ =
                                self.graph.add_relation(point, *circle, RelationKind::BelongsTo);
                        }
                    }
                    record.deps.push((of[0].clone(), point_name.clone()));
                    record.deps.push((of[1].clone(), point_name.clone()));
                }
            }
            ConstructionStep::IntersectCircleLine {
                names,
                circle,
                line,
            } => {
                let c = self.circle(circle);
                let carrier = self.carrier(line);
                for point_name in names {
                    let Some(point) = self.introduce(point_name, ConceptKind::Point) else {
                        continue;
                    };
                    record.outputs.push(point_name.clone());
                    if let Some(c) = c {
                        let _ = self.graph.add_relation(point, c, RelationKind::BelongsTo);
                    }
                    if let Some((node, inputs)) = &carrier {
                        let _ = self.graph.add_relation(point, *node, RelationKind::BelongsTo);
                        record.deps.push((circle.clone(), point_name.clone()));
                        for input in inputs {
                            record.deps.push((input.clone(), point_name.clone()));
                        }
                    } else {
                        record.deps.push((circle.clone(), point_name.clone()));
                    }
                }
            }
            ConstructionStep::Bisector { name, of } => {
                let Some((a, vertex, c)) = self.split_angle_composite(of) else {
                    return record;
                };
                let pa = self.point(&a);
                let pv = self.point(&vertex);
                let pc = self.point(&c);
                let Some(line) = self.introduce(name, ConceptKind::Line) else {
                    return record;
                };
                record.outputs.push(name.clone());
                let (Some(pa), Some(pv), Some(pc)) = (pa, pv, pc) else {
                    return record;
                };
                let main = self.ensure_angle(&a, &vertex, &c, pa, pv, pc, AngleValue::Unconstrained);
                let _ = main; // named angle node; value stays unconstrained
                let ray_point = self.graph.add_point(None);
                let _ = self.graph.add_relation(ray_point, line, RelationKind::BelongsTo);
                let _ = self.graph.add_relation(pv, line, RelationKind::BelongsTo);
                // The two half angles share the anonymous ray point; equal by
                // construction.
                let half_a = self.graph.add_angle(None, AngleValue::Unconstrained);
                self.angle_half_pattern(half_a, (&a, pa), (&vertex, pv), ray_point);
                let half_c = self.graph.add_angle(None, AngleValue::Unconstrained);
                self.angle_half_pattern(half_c, (&c, pc), (&vertex, pv), ray_point);
                self.graph.add_pending_equality(half_a, half_c);
                record.deps.push((a, name.clone()));
                record.deps.push((vertex, name.clone()));
                record.deps.push((c, name.clone()));
            }
            ConstructionStep::RightAngle { of } => {
                let Some((a, vertex, c)) = self.split_angle_composite(of) else {
                    return record;
                };
                let pa = self.point(&a);
                let pv = self.point(&vertex);
                let pc = self.point(&c);
                let (Some(pa), Some(pv), Some(pc)) = (pa, pv, pc) else {
                    return record;
                };
                let canonical = angle_name(&a, &vertex, &c);
                match self.symbols.get(&canonical) {
                    None => {
                        let angle = self.graph.add_angle(Some(&canonical), AngleValue::Right);
                        self.bind(&canonical, angle, ConceptKind::Angle, true);
                        self.angle_pattern(angle, (&a, pa), (&vertex, pv), (&c, pc));
                        record.outputs.push(canonical.clone());
                        record.deps.push((a, canonical.clone()));
                        record.deps.push((vertex, canonical.clone()));
                        record.deps.push((c, canonical));
                    }
                    Some(binding) if binding.kind == ConceptKind::Angle => {
                        // Re-asserting constrains the existing angle.
                        let node = binding.node;
                        self.constrain_angle_right(node, &canonical);
                        record.deps.push((a, canonical.clone()));
                        record.deps.push((vertex, canonical.clone()));
                        record.deps.push((c, canonical));
                    }
                    Some(binding) => {
                        let kind = binding.kind;
                        self.complain(format!(
                            "`{canonical}` is a {}, expected an angle",
                            kind.name()
                        ));
                    }
                }
            }
        }
        record
    }

    fn constrain_angle_right(&mut self, node: NodeId, name: &str) {
        let value = self.graph.node(node).and_then(|n| n.angle_value());
        match value {
            Some(AngleValue::Unconstrained) => {
                // Upgrading needs a rebuilt node payload; easiest via label
                // preserving re-insertion is not possible, so mutate in place.
                self.graph.set_angle_value(node, AngleValue::Right);
            }
            Some(AngleValue::Right) => {}
            other => {
                self.complain(format!(
                    "angle `{name}` already carries value {:?}, cannot also be right",
                    other
                ));
            }
        }
    }

    fn ensure_angle(
        &mut self,
        a: &str,
        vertex: &str,
        c: &str,
        pa: NodeId,
        pv: NodeId,
        pc: NodeId,
        value: AngleValue,
    ) -> NodeId {
        let canonical = angle_name(a, vertex, c);
        if let Some(binding) = self.symbols.get(&canonical) {
            return binding.node;
        }
        let angle = self.graph.add_angle(Some(&canonical), value);
        self.bind(&canonical, angle, ConceptKind::Angle, false);
        self.angle_pattern(angle, (a, pa), (vertex, pv), (c, pc));
        angle
    }

    /// Angle fragment where one far point is anonymous.
    fn angle_half_pattern(
        &mut self,
        angle: NodeId,
        far: (&str, NodeId),
        vertex: (&str, NodeId),
        ray_point: NodeId,
    ) {
        let side = self.ensure_segment(far.0, vertex.0, far.1, vertex.1);
        let ray_side = self.anonymous_segment(vertex.1, ray_point);
        let _ = self.graph.add_relation(far.1, angle, RelationKind::BelongsTo);
        let _ = self.graph.add_relation(vertex.1, angle, RelationKind::BelongsTo);
        let _ = self.graph.add_relation(ray_point, angle, RelationKind::BelongsTo);
        let _ = self.graph.add_relation(side, angle, RelationKind::BelongsTo);
        let _ = self.graph.add_relation(ray_side, angle, RelationKind::BelongsTo);
    }

    /// Intersection targets may name an existing point; the step then only
    /// constrains it (this is how "A-F intersects B-D at G" restates G).
    fn reference_or_introduce_point(
        &mut self,
        name: &str,
        record: &mut StepObjects,
    ) -> Option<NodeId> {
        match self.symbols.get(name) {
            Some(b) if b.kind == ConceptKind::Point => Some(b.node),
            Some(b) => {
                self.complain(format!(
                    "`{name}` is a {}, expected a point",
                    b.kind.name()
                ));
                None
            }
            None => {
                let node = self.introduce(name, ConceptKind::Point)?;
                record.outputs.push(name.to_string());
                Some(node)
            }
        }
    }

    /// Shared body of `PerpendicularAt` / `ParallelAt`. A known line or
    /// segment as target turns the step into a pure constraint; a fresh name
    /// introduces a line. The marker point lies on the new line, and for
    /// perpendiculars also on the base carrier.
    fn linear_constraint(
        &mut self,
        name: &str,
        to: &str,
        at: &str,
        kind: RelationKind,
        point_on_base: bool,
        record: &mut StepObjects,
    ) {
        let base = self.carrier(to);
        let marker = self.point(at);
        let name = &{
            let parts = name_parts(name);
            if parts.len() == 2 {
                segment_name(parts[0], parts[1])
            } else {
                name.to_string()
            }
        };
        let target = match self.symbols.get(name) {
            Some(b) if matches!(b.kind, ConceptKind::Line | ConceptKind::Segment) => Some(b.node),
            Some(b) => {
                self.complain(format!(
                    "`{name}` is a {}, expected a line or segment",
                    b.kind.name()
                ));
                None
            }
            None => {
                let node = self.introduce(name, ConceptKind::Line);
                if node.is_some() {
                    record.outputs.push(name.to_string());
                }
                node
            }
        };
        let Some(target) = target else { return };
        if let Some((base_node, inputs)) = base {
            if base_node == target {
                self.complain(format!("`{name}` cannot relate to itself"));
                return;
            }
            let _ = self.graph.add_relation(target, base_node, kind);
            for input in inputs {
                record.deps.push((input, name.to_string()));
            }
        }
        if let Some(marker) = marker {
            let _ = self.graph.add_relation(marker, target, RelationKind::BelongsTo);
            if point_on_base {
                if let Some((base_node, _)) = self.carrier_quiet(to) {
                    let _ = self.graph.add_relation(marker, base_node, RelationKind::BelongsTo);
                }
            }
            record.deps.push((at.to_string(), name.to_string()));
        }
    }

    /// Carrier lookup without duplicating a violation already reported.
    fn carrier_quiet(&self, name: &str) -> Option<(NodeId, Vec<String>)> {
        let parts = name_parts(name);
        let key = if parts.len() == 2 {
            segment_name(parts[0], parts[1])
        } else {
            name.to_string()
        };
        self.symbols
            .get(&key)
            .filter(|b| matches!(b.kind, ConceptKind::Line | ConceptKind::Segment))
            .map(|b| (b.node, vec![key.clone()]))
    }

    fn emit_draw(&mut self, name: &str) {
        let parts = name_parts(name);
        match parts.len() {
            1 => {
                if !self.symbols.contains_key(name) {
                    self.complain(format!("drawn object `{name}` is not defined"));
                }
            }
            2 => {
                let canonical = segment_name(parts[0], parts[1]);
                if self.symbols.contains_key(&canonical) {
                    return;
                }
                // A composite between defined points auto-creates the
                // segment; it stays out of the dependency lattice.
                let (a, b) = (parts[0].to_string(), parts[1].to_string());
                let (Some(pa), Some(pb)) = (self.point(&a), self.point(&b)) else {
                    return;
                };
                self.ensure_segment(&a, &b, pa, pb);
            }
            3 => {
                let canonical = angle_name(parts[0], parts[1], parts[2]);
                if !self.symbols.contains_key(&canonical) {
                    self.complain(format!("drawn angle `{canonical}` is not defined"));
                }
            }
            _ => self.complain(format!("`{name}` is not a drawable name")),
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::onto::Census;

    pub fn centroid_figure() -> Figure {
        let steps = vec![
            ConstructionStep::FreePoint { name: "A".into() },
            ConstructionStep::FreePoint { name: "B".into() },
            ConstructionStep::FreePoint { name: "C".into() },
            ConstructionStep::Midpoint { name: "D".into(), of: "A-C".into() },
            ConstructionStep::Midpoint { name: "E".into(), of: "A-B".into() },
            ConstructionStep::Midpoint { name: "F".into(), of: "B-C".into() },
            ConstructionStep::Segment { ends: "B-D".into() },
            ConstructionStep::Segment { ends: "C-E".into() },
            ConstructionStep::IntersectLines { name: "G".into(), of: ["B-D".into(), "C-E".into()] },
            ConstructionStep::Segment { ends: "A-F".into() },
        ];
        Figure {
            id: "013".into(),
            title: "Medians of a triangle".into(),
            steps,
            draw: vec![
                "A-B".into(),
                "A-C".into(),
                "B-C".into(),
                "A-F".into(),
                "B-D".into(),
                "C-E".into(),
            ],
        }
    }

    fn census_of(figure: &Figure) -> Census {
        compile_figure(figure).unwrap().census()
    }

    #[test]
    fn centroid_figure_validates() {
        assert_eq!(validate(&centroid_figure()), vec![]);
    }

    #[test]
    fn undefined_midpoint_reference_is_a_violation() {
        let figure = Figure {
            id: "x".into(),
            title: String::new(),
            steps: vec![
                ConstructionStep::FreePoint { name: "A".into() },
                ConstructionStep::Midpoint { name: "M".into(), of: "A-Z".into() },
            ],
            draw: vec![],
        };
        let violations = validate(&figure);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].location, Location::Step(1));
        assert!(violations[0].message.contains("`Z`"));
    }

    #[test]
    fn redefinition_is_a_violation() {
        let figure = Figure {
            id: "x".into(),
            title: String::new(),
            steps: vec![
                ConstructionStep::FreePoint { name: "A".into() },
                ConstructionStep::FreePoint { name: "B".into() },
                ConstructionStep::FreePoint { name: "C".into() },
                ConstructionStep::Midpoint { name: "D".into(), of: "A-B".into() },
                ConstructionStep::Midpoint { name: "D".into(), of: "A-C".into() },
            ],
            draw: vec![],
        };
        let violations = validate(&figure);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].location, Location::Step(4));
        assert!(violations[0].message.contains("already defined"));
    }

    #[test]
    fn centroid_graph_counts() {
        let census = census_of(&centroid_figure());
        assert_eq!(census.concept(ConceptKind::Point), 7);
        assert_eq!(census.concept(ConceptKind::Segment), 12);
        assert_eq!(census.relation(RelationKind::BelongsTo), 29);
        assert_eq!(census.ratio_nodes, 0, "ratios appear only after inference");
    }

    #[test]
    fn centroid_barycenter_memberships() {
        let compiled = compile(&centroid_figure()).unwrap();
        let g = compiled.symbols.get("G").unwrap().node;
        let memberships: Vec<String> = compiled
            .graph
            .out_edges(g)
            .map(|e| {
                compiled
                    .graph
                    .node(e.to)
                    .unwrap()
                    .label()
                    .unwrap_or("?")
                    .to_string()
            })
            .collect();
        assert_eq!(memberships, vec!["B-D".to_string(), "C-E".to_string()]);
        let af = compiled.symbols.get("A-F").unwrap().node;
        assert!(
            !compiled.graph.has_relation(g, af, RelationKind::BelongsTo),
            "G was never placed on A-F"
        );
    }

    #[test]
    fn right_angle_fragment_counts() {
        let figure = Figure {
            id: "ra".into(),
            title: String::new(),
            steps: vec![
                ConstructionStep::FreePoint { name: "A".into() },
                ConstructionStep::FreePoint { name: "B".into() },
                ConstructionStep::FreePoint { name: "C".into() },
                ConstructionStep::RightAngle { of: "A-B-C".into() },
            ],
            draw: vec![],
        };
        let census = census_of(&figure);
        assert_eq!(census.concept(ConceptKind::Point), 3);
        assert_eq!(census.concept(ConceptKind::Segment), 2);
        assert_eq!(census.concept(ConceptKind::Angle), 1);
        assert_eq!(census.relation(RelationKind::BelongsTo), 9);
    }

    #[test]
    fn tangency_construction() {
        let figure = Figure {
            id: "tan".into(),
            title: String::new(),
            steps: vec![
                ConstructionStep::FreePoint { name: "O".into() },
                ConstructionStep::FreePoint { name: "B".into() },
                ConstructionStep::Circle {
                    name: "C_1".into(),
                    center: "O".into(),
                    through: "B".into(),
                },
                ConstructionStep::Segment { ends: "A-B".into() },
                ConstructionStep::RightAngle { of: "A-B-O".into() },
            ],
            draw: vec![],
        };
        let compiled = compile(&figure).unwrap();
        let census = compiled.graph.census();
        assert_eq!(census.concept(ConceptKind::Point), 3);
        assert_eq!(census.concept(ConceptKind::Segment), 2, "right angle reuses the radius B-O");
        assert_eq!(census.concept(ConceptKind::Circle), 1);
        assert_eq!(census.relation(RelationKind::IsCenterOf), 1);
        assert_eq!(census.relation(RelationKind::IsRadiusOf), 1);
        let b = compiled.symbols.get("B").unwrap().node;
        let c = compiled.symbols.get("C_1").unwrap().node;
        assert!(compiled.graph.has_relation(b, c, RelationKind::BelongsTo));
    }

    #[test]
    fn segment_endpoints_auto_create() {
        let figure = Figure {
            id: "seg".into(),
            title: String::new(),
            steps: vec![ConstructionStep::Segment { ends: "A-B".into() }],
            draw: vec!["A-B".into()],
        };
        assert_eq!(validate(&figure), vec![]);
        let census = census_of(&figure);
        assert_eq!(census.concept(ConceptKind::Point), 2);
        assert_eq!(census.concept(ConceptKind::Segment), 1);
    }

    #[test]
    fn draw_composite_between_defined_points_auto_creates() {
        let mut figure = centroid_figure();
        figure.steps.truncate(6); // keep the midpoints only
        figure.draw = vec!["A-B".into(), "A-F".into()];
        let compiled = compile(&figure).unwrap();
        let af = compiled.symbols.get("A-F").unwrap();
        assert!(!af.step_object, "draw-created segments stay out of the lattice");
        assert_eq!(af.origin, Provenance::Draw(1));
    }

    #[test]
    fn draw_with_undefined_point_is_a_violation() {
        let figure = Figure {
            id: "bad".into(),
            title: String::new(),
            steps: vec![ConstructionStep::FreePoint { name: "A".into() }],
            draw: vec!["A-Z".into()],
        };
        let violations = validate(&figure);
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].location, Location::Draw(0));
    }

    #[test]
    fn compile_prefix_is_subgraph() {
        let figure = centroid_figure();
        let full = compile_figure(&figure).unwrap();
        for cut in 0..figure.steps.len() {
            let mut prefix = figure.clone();
            prefix.steps.truncate(cut);
            prefix.draw.clear();
            let small = compile_figure(&prefix).unwrap();
            for node in small.nodes() {
                let counterpart = full.node(node.id).expect("prefix node survives");
                assert_eq!(counterpart.kind(), node.kind());
            }
            for edge in small.edges() {
                assert!(full.has_relation(edge.from, edge.to, edge.kind));
            }
        }
    }

    #[test]
    fn compile_is_deterministic() {
        let figure = centroid_figure();
        let a = compile_figure(&figure).unwrap();
        let b = compile_figure(&figure).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn provenance_is_total() {
        let compiled = compile(&centroid_figure()).unwrap();
        for node in compiled.graph.nodes() {
            assert!(node.provenance.is_some());
        }
        for edge in compiled.graph.edges() {
            assert!(edge.provenance.is_some());
        }
    }

    #[test]
    fn restating_an_intersection_constrains_instead_of_redefining() {
        let mut figure = centroid_figure();
        figure.steps.push(ConstructionStep::IntersectLines {
            name: "G".into(),
            of: ["A-F".into(), "B-D".into()],
        });
        assert_eq!(validate(&figure), vec![]);
        let compiled = compile(&figure).unwrap();
        let g = compiled.symbols.get("G").unwrap().node;
        let af = compiled.symbols.get("A-F").unwrap().node;
        assert!(compiled.graph.has_relation(g, af, RelationKind::BelongsTo));
        assert_eq!(
            compiled.graph.census().relation(RelationKind::BelongsTo),
            30
        );
    }
}
