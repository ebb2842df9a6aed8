//! Lowering: classified sentences become construction steps.
//!
//! Twelve sentence shapes map onto steps one-to-one. Plural sentences
//! distribute their arguments positionally before lowering, so a plural
//! sentence and the sequence of its singular expansions produce the same
//! steps. Auto-creation keeps minimal queries expressible: a point referenced
//! by a sentence becomes a free point, an unknown segment composite becomes
//! a segment step, and draw-list composites between defined points are left
//! to the compiler.

use std::collections::BTreeMap;

use super::{
    AdjeWord, Complement, CqlError, Entity, InstWord, NounWord, PrepWord, QueryAst, Sentence,
    Span, VerbWord,
};
use crate::construction::{segment_name, ConstructionStep, Figure};
use crate::onto::ConceptKind;

struct Lowerer {
    steps: Vec<ConstructionStep>,
    draw: Vec<String>,
    table: BTreeMap<String, ConceptKind>,
}

fn semantic(message: impl Into<String>, span: Span) -> CqlError {
    CqlError::Semantic {
        message: message.into(),
        span,
    }
}

fn arity(message: impl Into<String>, span: Span) -> CqlError {
    CqlError::Arity {
        message: message.into(),
        span,
    }
}

impl Lowerer {
    fn new() -> Self {
        Lowerer {
            steps: Vec::new(),
            draw: Vec::new(),
            table: BTreeMap::new(),
        }
    }

    fn push(&mut self, step: ConstructionStep) {
        self.register(&step);
        self.steps.push(step);
    }

    /// Mirror the names a step binds (including fragment segments), so later
    /// sentences and the draw list see them as defined.
    fn register(&mut self, step: &ConstructionStep) {
        let point = |table: &mut BTreeMap<String, ConceptKind>, name: &str| {
            table.entry(name.to_string()).or_insert(ConceptKind::Point);
        };
        let segment = |table: &mut BTreeMap<String, ConceptKind>, a: &str, b: &str| {
            table
                .entry(segment_name(a, b))
                .or_insert(ConceptKind::Segment);
        };
        let table = &mut self.table;
        match step {
            ConstructionStep::FreePoint { name } => point(table, name),
            ConstructionStep::Segment { ends } => {
                let parts: Vec<&str> = ends.split('-').collect();
                point(table, parts[0]);
                point(table, parts[1]);
                segment(table, parts[0], parts[1]);
            }
            ConstructionStep::LineThrough { name, .. } => {
                table.insert(name.clone(), ConceptKind::Line);
            }
            ConstructionStep::Midpoint { name, of } => {
                point(table, name);
                let parts: Vec<&str> = of.split('-').collect();
                segment(table, parts[0], parts[1]);
                segment(table, parts[0], name);
                segment(table, name, parts[1]);
            }
            ConstructionStep::IntersectLines { name, .. } => point(table, name),
            ConstructionStep::PerpendicularAt { name, .. }
            | ConstructionStep::ParallelAt { name, .. } => {
                table.entry(name.clone()).or_insert(ConceptKind::Line);
            }
            ConstructionStep::Mediatrix { name, of } => {
                table.insert(name.clone(), ConceptKind::Line);
                let parts: Vec<&str> = of.split('-').collect();
                segment(table, parts[0], parts[1]);
            }
            ConstructionStep::Foot { name, of, .. } => {
                point(table, name);
                segment(table, of, name);
            }
            ConstructionStep::Circle {
                name,
                center,
                through,
            } => {
                table.insert(name.clone(), ConceptKind::Circle);
                segment(table, center, through);
            }
            ConstructionStep::IntersectCircles { names, .. }
            | ConstructionStep::IntersectCircleLine { names, .. } => {
                point(table, &names[0]);
                point(table, &names[1]);
            }
            ConstructionStep::Bisector { name, of } => {
                table.insert(name.clone(), ConceptKind::Line);
                let parts: Vec<&str> = of.split('-').collect();
                table
                    .entry(crate::construction::angle_name(parts[0], parts[1], parts[2]))
                    .or_insert(ConceptKind::Angle);
                segment(table, parts[0], parts[1]);
                segment(table, parts[1], parts[2]);
            }
            ConstructionStep::RightAngle { of } => {
                let parts: Vec<&str> = of.split('-').collect();
                table
                    .entry(crate::construction::angle_name(parts[0], parts[1], parts[2]))
                    .or_insert(ConceptKind::Angle);
                segment(table, parts[0], parts[1]);
                segment(table, parts[1], parts[2]);
            }
        }
    }

    fn kind_of(&self, label: &str) -> Option<ConceptKind> {
        let parts: Vec<&str> = label.split('-').collect();
        let key = if parts.len() == 2 {
            segment_name(parts[0], parts[1])
        } else if parts.len() == 3 {
            crate::construction::angle_name(parts[0], parts[1], parts[2])
        } else {
            label.to_string()
        };
        self.table.get(&key).copied()
    }

    fn check_inst(&self, entity: &Entity, allowed: &[InstWord]) -> Result<(), CqlError> {
        let Some(inst) = entity.inst else {
            return Ok(());
        };
        if allowed.contains(&inst) {
            // Rule 10 syntax: `segment` takes a composite, `line` (and the
            // other primitive types) a primitive name.
            let composite = entity.parts() > 1;
            let wants_composite = matches!(inst, InstWord::Segment | InstWord::Angle);
            if composite != wants_composite && !(inst == InstWord::Angle && entity.parts() == 3) {
                return Err(semantic(
                    format!(
                        "type `{}` does not fit the name `{}`",
                        inst.name(),
                        entity.label
                    ),
                    entity.span,
                ));
            }
            Ok(())
        } else {
            Err(semantic(
                format!("type `{}` is not allowed here", inst.name()),
                entity.span,
            ))
        }
    }

    /// A primitive point reference; unknown names become free points.
    fn point_ref(&mut self, entity: &Entity) -> Result<String, CqlError> {
        self.check_inst(entity, &[InstWord::Point])?;
        self.point_ref_by_name(&entity.label, entity.span)
    }

    fn point_ref_by_name(&mut self, label: &str, span: Span) -> Result<String, CqlError> {
        if label.contains('-') {
            return Err(semantic(
                format!("`{label}` cannot stand for a point"),
                span,
            ));
        }
        match self.kind_of(label) {
            Some(ConceptKind::Point) => {}
            Some(other) => {
                return Err(semantic(
                    format!("`{label}` is a {}, expected a point", other.name()),
                    span,
                ))
            }
            None => self.push(ConstructionStep::FreePoint {
                name: label.to_string(),
            }),
        }
        Ok(label.to_string())
    }

    /// A point a step is about to introduce (intersection targets may name
    /// an existing point, restating it).
    fn point_target(&mut self, entity: &Entity) -> Result<String, CqlError> {
        self.check_inst(entity, &[InstWord::Point])?;
        if entity.parts() != 1 {
            return Err(semantic(
                format!("`{}` cannot name a point", entity.label),
                entity.span,
            ));
        }
        if let Some(kind) = self.kind_of(&entity.label) {
            if kind != ConceptKind::Point {
                return Err(semantic(
                    format!("`{}` is a {}, expected a point", entity.label, kind.name()),
                    entity.span,
                ));
            }
        }
        Ok(entity.label.clone())
    }

    /// A carrier reference: a known line name or a segment composite
    /// (auto-created when unknown).
    fn carrier_ref(&mut self, entity: &Entity) -> Result<String, CqlError> {
        self.check_inst(entity, &[InstWord::Line, InstWord::Segment])?;
        match entity.parts() {
            1 => match self.kind_of(&entity.label) {
                None | Some(ConceptKind::Line) | Some(ConceptKind::Segment) => {
                    Ok(entity.label.clone())
                }
                Some(other) => Err(semantic(
                    format!(
                        "`{}` is a {}, expected a line or segment",
                        entity.label,
                        other.name()
                    ),
                    entity.span,
                )),
            },
            2 => self.segment_ref_by_name(&entity.label, entity.span),
            _ => Err(semantic(
                format!("`{}` cannot be used as a carrier", entity.label),
                entity.span,
            )),
        }
    }

    fn segment_ref_by_name(&mut self, label: &str, span: Span) -> Result<String, CqlError> {
        let parts: Vec<&str> = label.split('-').collect();
        let canonical = segment_name(parts[0], parts[1]);
        match self.kind_of(&canonical) {
            Some(ConceptKind::Segment) => Ok(canonical),
            Some(other) => Err(semantic(
                format!("`{canonical}` is a {}, expected a segment", other.name()),
                span,
            )),
            None => {
                let a = self.point_ref_by_name(parts[0], span)?;
                let b = self.point_ref_by_name(parts[1], span)?;
                self.push(ConstructionStep::Segment {
                    ends: segment_name(&a, &b),
                });
                Ok(canonical)
            }
        }
    }

    /// A composite naming a segment by its endpoints (midpoint/mediatrix
    /// argument); only the endpoints need to exist.
    fn segment_composite(&mut self, entity: &Entity) -> Result<String, CqlError> {
        self.check_inst(entity, &[InstWord::Segment])?;
        if entity.parts() != 2 {
            return Err(semantic(
                format!("`{}` is not a segment composite", entity.label),
                entity.span,
            ));
        }
        let parts: Vec<&str> = entity.label.split('-').collect();
        let (a, b) = (parts[0].to_string(), parts[1].to_string());
        self.point_ref_by_name(&a, entity.span)?;
        self.point_ref_by_name(&b, entity.span)?;
        Ok(segment_name(&a, &b))
    }

    fn angle_composite(&mut self, entity: &Entity) -> Result<(String, String, String), CqlError> {
        self.check_inst(entity, &[InstWord::Angle])?;
        if entity.parts() != 3 {
            return Err(semantic(
                format!("`{}` is not an angle composite", entity.label),
                entity.span,
            ));
        }
        let parts: Vec<String> = entity.label.split('-').map(str::to_string).collect();
        for part in &parts {
            self.point_ref_by_name(part, entity.span)?;
        }
        Ok((parts[0].clone(), parts[1].clone(), parts[2].clone()))
    }

    /// The target of a perpendicular/parallel sentence: a fresh line name, a
    /// known carrier (pure constraint), or a segment composite (auto-created
    /// then constrained).
    fn linear_target(&mut self, entity: &Entity) -> Result<String, CqlError> {
        self.check_inst(entity, &[InstWord::Line, InstWord::Segment])?;
        match entity.parts() {
            1 => match self.kind_of(&entity.label) {
                None | Some(ConceptKind::Line) | Some(ConceptKind::Segment) => {
                    Ok(entity.label.clone())
                }
                Some(other) => Err(semantic(
                    format!(
                        "`{}` is a {}, expected a line or segment",
                        entity.label,
                        other.name()
                    ),
                    entity.span,
                )),
            },
            2 => self.segment_ref_by_name(&entity.label, entity.span),
            _ => Err(semantic(
                format!("`{}` cannot name a line", entity.label),
                entity.span,
            )),
        }
    }

    fn fresh_primitive(&mut self, entity: &Entity, allowed: InstWord) -> Result<String, CqlError> {
        self.check_inst(entity, &[allowed])?;
        if entity.parts() != 1 {
            return Err(semantic(
                format!("`{}` must be a primitive name", entity.label),
                entity.span,
            ));
        }
        Ok(entity.label.clone())
    }

    /// Split `list` into `groups` chunks of equal size; an indivisible
    /// remainder is an arity error.
    fn chunks<'e>(
        &self,
        list: &'e [Entity],
        groups: usize,
        per_group: usize,
        what: &str,
        span: Span,
    ) -> Result<Vec<&'e [Entity]>, CqlError> {
        if list.len() != groups * per_group {
            return Err(arity(
                format!(
                    "{what}: {} argument(s) cannot distribute over {groups} group(s) of {per_group}",
                    list.len()
                ),
                span,
            ));
        }
        Ok(list.chunks(per_group).collect())
    }

    fn single_prep<'s>(
        &self,
        sentence: &'s Sentence,
        prep: PrepWord,
    ) -> Result<&'s [Entity], CqlError> {
        match sentence.preps.as_slice() {
            [(word, list)] if *word == prep => Ok(list),
            _ => Err(semantic(
                format!("this sentence form requires exactly `{} ...`", prep.name()),
                sentence.span,
            )),
        }
    }

    fn two_preps<'s>(
        &self,
        sentence: &'s Sentence,
        first: PrepWord,
        second: PrepWord,
    ) -> Result<(&'s [Entity], &'s [Entity]), CqlError> {
        match sentence.preps.as_slice() {
            [(w1, l1), (w2, l2)] if *w1 == first && *w2 == second => Ok((l1, l2)),
            _ => Err(semantic(
                format!(
                    "this sentence form requires `{} ...` followed by `{} ...`",
                    first.name(),
                    second.name()
                ),
                sentence.span,
            )),
        }
    }

    fn no_direct(&self, sentence: &Sentence) -> Result<(), CqlError> {
        if sentence.direct.is_empty() {
            Ok(())
        } else {
            Err(semantic(
                "unexpected entities after the verb in this sentence form",
                sentence.span,
            ))
        }
    }

    fn no_preps(&self, sentence: &Sentence) -> Result<(), CqlError> {
        if sentence.preps.is_empty() {
            Ok(())
        } else {
            Err(semantic(
                "unexpected prepositional phrase in this sentence form",
                sentence.span,
            ))
        }
    }

    fn sentence(&mut self, sentence: &Sentence) -> Result<(), CqlError> {
        let k = sentence.heads.len();
        let span = sentence.span;
        match (sentence.verb.verb, sentence.verb.complement) {
            // line ? intersects line ? at point ?
            (VerbWord::Intersect, None) => {
                let others = self.chunks(&sentence.direct, k, 1, "intersected carriers", span)?;
                let at = self.single_prep(sentence, PrepWord::At)?;
                let at = self.chunks(at, k, 1, "intersection points", span)?;
                for i in 0..k {
                    let c1 = self.carrier_ref(&sentence.heads[i])?;
                    let c2 = self.carrier_ref(&others[i][0])?;
                    let name = self.point_target(&at[i][0])?;
                    self.push(ConstructionStep::IntersectLines { name, of: [c1, c2] });
                }
            }
            // line ? connects points ?, ?
            (VerbWord::Connect, None) => {
                self.no_preps(sentence)?;
                let pairs = self.chunks(&sentence.direct, k, 2, "connected points", span)?;
                for i in 0..k {
                    let name = self.fresh_primitive(&sentence.heads[i], InstWord::Line)?;
                    let a = self.point_ref(&pairs[i][0])?;
                    let b = self.point_ref(&pairs[i][1])?;
                    self.push(ConstructionStep::LineThrough {
                        name,
                        through: [a, b],
                    });
                }
            }
            // point ? is the midpoint of segment ?
            (VerbWord::Is | VerbWord::Are, Some(Complement::Noun(NounWord::Midpoint))) => {
                self.no_direct(sentence)?;
                let of = self.single_prep(sentence, PrepWord::Of)?;
                let of = self.chunks(of, k, 1, "midpoint segments", span)?;
                for i in 0..k {
                    let name = self.fresh_primitive(&sentence.heads[i], InstWord::Point)?;
                    let seg = self.segment_composite(&of[i][0])?;
                    self.push(ConstructionStep::Midpoint { name, of: seg });
                }
            }
            // point ? is the foot of point ? on line ?
            (VerbWord::Is | VerbWord::Are, Some(Complement::Noun(NounWord::Foot))) => {
                self.no_direct(sentence)?;
                let (of, on) = self.two_preps(sentence, PrepWord::Of, PrepWord::On)?;
                let of = self.chunks(of, k, 1, "foot sources", span)?;
                let on = self.chunks(on, k, 1, "foot carriers", span)?;
                for i in 0..k {
                    let name = self.fresh_primitive(&sentence.heads[i], InstWord::Point)?;
                    let source = self.point_ref(&of[i][0])?;
                    let carrier = self.carrier_ref(&on[i][0])?;
                    self.push(ConstructionStep::Foot {
                        name,
                        of: source,
                        on: carrier,
                    });
                }
            }
            // line ? is the mediatrix of segment ? — a true segment only
            (VerbWord::Is | VerbWord::Are, Some(Complement::Noun(NounWord::Mediatrix))) => {
                self.no_direct(sentence)?;
                let of = self.single_prep(sentence, PrepWord::Of)?;
                let of = self.chunks(of, k, 1, "mediatrix segments", span)?;
                for i in 0..k {
                    let name = self.fresh_primitive(&sentence.heads[i], InstWord::Line)?;
                    if of[i][0].inst == Some(InstWord::Line) {
                        return Err(semantic(
                            "a mediatrix is defined over a segment, not a line",
                            of[i][0].span,
                        ));
                    }
                    let seg = self.segment_composite(&of[i][0])?;
                    self.push(ConstructionStep::Mediatrix { name, of: seg });
                }
            }
            // line ? is the bisector of angle ?
            (VerbWord::Is | VerbWord::Are, Some(Complement::Noun(NounWord::Bisector))) => {
                self.no_direct(sentence)?;
                let of = self.single_prep(sentence, PrepWord::Of)?;
                let of = self.chunks(of, k, 1, "bisected angles", span)?;
                for i in 0..k {
                    let name = self.fresh_primitive(&sentence.heads[i], InstWord::Line)?;
                    let (a, b, c) = self.angle_composite(&of[i][0])?;
                    self.push(ConstructionStep::Bisector {
                        name,
                        of: format!("{a}-{b}-{c}"),
                    });
                }
            }
            // points ?, ? are the intersections of circles ?, ?
            // points ?, ? are the intersections of circle ? and line ?
            (VerbWord::Is | VerbWord::Are, Some(Complement::Noun(NounWord::Intersection))) => {
                self.no_direct(sentence)?;
                if k % 2 != 0 {
                    return Err(arity(
                        format!("{k} intersection point(s) cannot distribute into pairs"),
                        span,
                    ));
                }
                let groups = k / 2;
                let of = self.single_prep(sentence, PrepWord::Of)?;
                if of.len() != 2 * groups {
                    return Err(arity(
                        format!(
                            "{} intersected object(s) cannot distribute over {groups} group(s) of 2",
                            of.len()
                        ),
                        span,
                    ));
                }
                let all_circles = of
                    .iter()
                    .all(|e| self.resolved_kind(e) == Some(ConceptKind::Circle));
                for i in 0..groups {
                    let p = self.fresh_primitive(&sentence.heads[2 * i], InstWord::Point)?;
                    let q = self.fresh_primitive(&sentence.heads[2 * i + 1], InstWord::Point)?;
                    if all_circles {
                        let c = self.circle_ref(&of[2 * i])?;
                        let d = self.circle_ref(&of[2 * i + 1])?;
                        self.push(ConstructionStep::IntersectCircles {
                            names: [p, q],
                            of: [c, d],
                        });
                    } else {
                        // circle first, then the carrier
                        let circle = self.circle_ref(&of[i])?;
                        let carrier = self.carrier_ref(&of[groups + i])?;
                        self.push(ConstructionStep::IntersectCircleLine {
                            names: [p, q],
                            circle,
                            line: carrier,
                        });
                    }
                }
            }
            // line ? is perpendicular to line ? at point ?
            (VerbWord::Is | VerbWord::Are, Some(Complement::Adje(AdjeWord::Perpendicular))) => {
                self.no_direct(sentence)?;
                let (to, at) = self.two_preps(sentence, PrepWord::To, PrepWord::At)?;
                let to = self.chunks(to, k, 1, "perpendicular carriers", span)?;
                let at = self.chunks(at, k, 1, "perpendicular points", span)?;
                for i in 0..k {
                    let name = self.linear_target(&sentence.heads[i])?;
                    let base = self.carrier_ref(&to[i][0])?;
                    let point = self.point_ref(&at[i][0])?;
                    self.push(ConstructionStep::PerpendicularAt {
                        name,
                        to: base,
                        at: point,
                    });
                }
            }
            // line ? is parallel to line ? at point ?
            (VerbWord::Is | VerbWord::Are, Some(Complement::Adje(AdjeWord::Parallel))) => {
                self.no_direct(sentence)?;
                let (to, at) = self.two_preps(sentence, PrepWord::To, PrepWord::At)?;
                let to = self.chunks(to, k, 1, "parallel carriers", span)?;
                let at = self.chunks(at, k, 1, "parallel points", span)?;
                for i in 0..k {
                    let name = self.linear_target(&sentence.heads[i])?;
                    let base = self.carrier_ref(&to[i][0])?;
                    let point = self.point_ref(&at[i][0])?;
                    self.push(ConstructionStep::ParallelAt {
                        name,
                        to: base,
                        at: point,
                    });
                }
            }
            // circle ? is defined by center ? and point ?
            (VerbWord::Is | VerbWord::Are, Some(Complement::Adje(AdjeWord::Defined))) => {
                self.no_direct(sentence)?;
                let by = self.single_prep(sentence, PrepWord::By)?;
                if by.len() != 2 * k {
                    return Err(arity(
                        format!("{} argument(s) cannot distribute over {k} circle(s)", by.len()),
                        span,
                    ));
                }
                let (centers, points) = by.split_at(k);
                for i in 0..k {
                    let name = self.fresh_primitive(&sentence.heads[i], InstWord::Circle)?;
                    if centers[i].inst != Some(InstWord::Center) {
                        return Err(semantic(
                            "the type name `center` is mandatory in circle definitions",
                            centers[i].span,
                        ));
                    }
                    let center = self.point_ref_by_name(&centers[i].label, centers[i].span)?;
                    self.check_inst(&points[i], &[InstWord::Point])?;
                    let through = self.point_ref_by_name(&points[i].label, points[i].span)?;
                    self.push(ConstructionStep::Circle {
                        name,
                        center,
                        through,
                    });
                }
            }
            // angle ? is right
            (VerbWord::Is | VerbWord::Are, Some(Complement::Adje(AdjeWord::Right))) => {
                self.no_direct(sentence)?;
                self.no_preps(sentence)?;
                for head in &sentence.heads {
                    let (a, b, c) = self.angle_composite(head)?;
                    self.push(ConstructionStep::RightAngle {
                        of: format!("{a}-{b}-{c}"),
                    });
                }
            }
            _ => {
                return Err(semantic(
                    "no sentence form matches this verb group",
                    sentence.verb.span,
                ))
            }
        }
        Ok(())
    }

    fn resolved_kind(&self, entity: &Entity) -> Option<ConceptKind> {
        match entity.inst {
            Some(InstWord::Circle) => Some(ConceptKind::Circle),
            Some(InstWord::Line) => Some(ConceptKind::Line),
            Some(InstWord::Segment) => Some(ConceptKind::Segment),
            Some(InstWord::Point) | Some(InstWord::Center) => Some(ConceptKind::Point),
            Some(InstWord::Angle) => Some(ConceptKind::Angle),
            None => self.kind_of(&entity.label),
        }
    }

    fn circle_ref(&mut self, entity: &Entity) -> Result<String, CqlError> {
        self.check_inst(entity, &[InstWord::Circle])?;
        if entity.parts() != 1 {
            return Err(semantic(
                format!("`{}` cannot name a circle", entity.label),
                entity.span,
            ));
        }
        match self.kind_of(&entity.label) {
            None | Some(ConceptKind::Circle) => Ok(entity.label.clone()),
            Some(other) => Err(semantic(
                format!(
                    "`{}` is a {}, expected a circle",
                    entity.label,
                    other.name()
                ),
                entity.span,
            )),
        }
    }

    fn draw_entity(&mut self, entity: &Entity) -> Result<(), CqlError> {
        match entity.parts() {
            1 => {
                self.check_inst(
                    entity,
                    &[InstWord::Point, InstWord::Line, InstWord::Circle],
                )?;
                if self.kind_of(&entity.label).is_none() {
                    // Unknown primitive labels in the draw list become free
                    // points.
                    self.push(ConstructionStep::FreePoint {
                        name: entity.label.clone(),
                    });
                }
                self.draw.push(entity.label.clone());
            }
            2 => {
                self.check_inst(entity, &[InstWord::Segment])?;
                let parts: Vec<&str> = entity.label.split('-').collect();
                let canonical = segment_name(parts[0], parts[1]);
                match self.kind_of(&canonical) {
                    Some(_) => {}
                    None => {
                        // Only undefined endpoints force explicit steps; a
                        // composite between defined points is auto-created by
                        // the compiler and stays out of the lattice.
                        let a_known = self.kind_of(parts[0]).is_some();
                        let b_known = self.kind_of(parts[1]).is_some();
                        if !a_known || !b_known {
                            self.segment_ref_by_name(&entity.label, entity.span)?;
                        }
                    }
                }
                self.draw.push(canonical);
            }
            3 => {
                self.check_inst(entity, &[InstWord::Angle])?;
                let parts: Vec<&str> = entity.label.split('-').collect();
                let canonical = crate::construction::angle_name(parts[0], parts[1], parts[2]);
                if self.kind_of(&canonical) != Some(ConceptKind::Angle) {
                    return Err(semantic(
                        format!("angle `{canonical}` is not defined"),
                        entity.span,
                    ));
                }
                self.draw.push(canonical);
            }
            _ => {
                return Err(semantic(
                    format!("`{}` is not a drawable name", entity.label),
                    entity.span,
                ))
            }
        }
        Ok(())
    }
}

/// Lower a parsed query into a figure.
pub fn lower(ast: &QueryAst) -> Result<Figure, CqlError> {
    let mut lowerer = Lowerer::new();
    for sentence in &ast.sentences {
        lowerer.sentence(sentence)?;
    }
    for entity in &ast.draw {
        lowerer.draw_entity(entity)?;
    }
    Ok(Figure {
        id: "query".to_string(),
        title: String::new(),
        steps: lowerer.steps,
        draw: lowerer.draw,
    })
}

#[cfg(test)]
mod tests {
    use super::super::compile_query;
    use super::*;
    use crate::construction::validate;

    fn lowered(text: &str) -> Figure {
        let figure = compile_query(text).unwrap();
        assert_eq!(validate(&figure), vec![], "{text}");
        figure
    }

    #[test]
    fn twelve_sentence_forms_lower() {
        let exemplars = [
            "A-B intersects C-D at P.",
            "M is the midpoint of A-B.",
            "L_1 connects A, B ; L_2 is perpendicular to L_1 at A.",
            "F is the foot of A on B-C.",
            "L is the mediatrix of A-B.",
            "L_1 connects A, B ; L_2 is parallel to L_1 at C.",
            "L connects points A, B.",
            "C_1 is defined by center O and point A.",
            "C_1 is defined by center O and point A ; C_2 is defined by center P and point B ; X, Y are the intersections of circles C_1, C_2.",
            "C_1 is defined by center O and point A ; L connects A, B ; P, Q are the intersections of circle C_1 and line L.",
            "L is the bisector of angle A-B-C.",
            "angle A-B-C is right.",
        ];
        for text in exemplars {
            lowered(text);
        }
    }

    #[test]
    fn minimal_draw_query_lowers_to_explicit_steps() {
        let figure = lowered("draw A-B.");
        assert_eq!(
            figure.steps,
            vec![
                ConstructionStep::FreePoint { name: "A".into() },
                ConstructionStep::FreePoint { name: "B".into() },
                ConstructionStep::Segment { ends: "A-B".into() },
            ]
        );
        assert_eq!(figure.draw, vec!["A-B".to_string()]);
    }

    #[test]
    fn sample_query_lowers_to_the_medians_construction() {
        let figure = lowered(
            "D, E, F are midpoints of A-C, A-B, B-C ; C-E intersects B-D at G ; \
             draw A-C, A-F, A-B, B-C, B-D, C-E.",
        );
        use ConstructionStep as S;
        assert_eq!(
            figure.steps,
            vec![
                S::FreePoint { name: "A".into() },
                S::FreePoint { name: "C".into() },
                S::Midpoint { name: "D".into(), of: "A-C".into() },
                S::FreePoint { name: "B".into() },
                S::Midpoint { name: "E".into(), of: "A-B".into() },
                S::Midpoint { name: "F".into(), of: "B-C".into() },
                S::Segment { ends: "C-E".into() },
                S::Segment { ends: "B-D".into() },
                S::IntersectLines { name: "G".into(), of: ["C-E".into(), "B-D".into()] },
            ]
        );
        // A-F is drawn between defined points: no step, compiler auto-create.
        assert!(figure.draw.contains(&"A-F".to_string()));
    }

    #[test]
    fn plural_distribution_follows_positions() {
        let plural = lowered("lines L_1, L_2, L_3 connect points A_1, B_1, A_2, B_2, A_3, B_3.");
        let singular = lowered(
            "L_1 connects A_1, B_1 ; L_2 connects A_2, B_2 ; L_3 connects A_3, B_3.",
        );
        assert_eq!(plural.steps, singular.steps);
    }

    #[test]
    fn indivisible_distribution_is_an_arity_error() {
        let err = compile_query("L_1, L_2 connect points A, B, C.").unwrap_err();
        assert!(matches!(err, CqlError::Arity { .. }), "{err}");
    }

    #[test]
    fn center_type_is_mandatory() {
        let err = compile_query("circle C_1 is defined by O and point A.").unwrap_err();
        assert!(
            matches!(&err, CqlError::Semantic { message, .. } if message.contains("center")),
            "{err}"
        );
    }

    #[test]
    fn midpoint_of_a_primitive_is_rejected() {
        let err = compile_query("L connects A, B ; M is the midpoint of L.").unwrap_err();
        assert!(matches!(err, CqlError::Semantic { .. }), "{err}");
    }

    #[test]
    fn mediatrix_refuses_lines() {
        let err = compile_query("L connects A, B ; M is the mediatrix of line L.").unwrap_err();
        assert!(matches!(err, CqlError::Semantic { .. }), "{err}");
    }

    #[test]
    fn angle_composites_are_rejected_as_carriers() {
        let err = compile_query("A-B-C intersects C-D at P.").unwrap_err();
        assert!(matches!(err, CqlError::Semantic { .. }), "{err}");
    }

    #[test]
    fn restating_an_intersection_reuses_the_point() {
        let figure = lowered(
            "D, E, F are midpoints of A-C, A-B, B-C ; C-E intersects B-D at G ; \
             A-F intersects B-D at G ; draw A-C, A-F, A-B, B-C, B-D, C-E.",
        );
        let intersections = figure
            .steps
            .iter()
            .filter(|s| matches!(s, ConstructionStep::IntersectLines { .. }))
            .count();
        assert_eq!(intersections, 2);
        // The segment A-F was forced by the carrier position, as a step.
        assert!(figure
            .steps
            .contains(&ConstructionStep::Segment { ends: "A-F".into() }));
    }

    #[test]
    fn plural_midpoints_match_singulars() {
        let plural = lowered("D, E are midpoints of A-C, A-B.");
        let singular = lowered("D is the midpoint of A-C ; E is the midpoint of A-B.");
        assert_eq!(plural.steps, singular.steps);
    }

    #[test]
    fn singular_inst_before_plural_list_normalizes() {
        // `points A` — a pluralized type word before a single label parses.
        let figure = lowered("L connects point A, point B.");
        assert!(figure
            .steps
            .contains(&ConstructionStep::LineThrough { name: "L".into(), through: ["A".into(), "B".into()] }));
    }
}
