//! The controlled query language: text → tokens → AST → [`Figure`].
//!
//! Queries are short procedural descriptions close to natural language:
//!
//! ```text
//! D, E, F are midpoints of A-C, A-B, B-C ; C-E intersects B-D at G ;
//! draw A-C, A-F, A-B, B-C, B-D, C-E.
//! ```
//!
//! Twelve sentence shapes are recognized (intersections, midpoints,
//! perpendiculars, feet, mediatrices, parallels, connecting lines, circles,
//! circle intersections, bisectors, right angles). Every sentence has a
//! plural form whose arguments distribute positionally: `lines L_1, L_2
//! connect points A_1, B_1, A_2, B_2` puts `A_i, B_i` on `L_i`. The article
//! `the` is optional in front of nouns, `and` is a synonym of the comma, and
//! a query ends with a period.
//!
//! Lowering produces an ordinary [`Figure`]: unknown points referenced by a
//! sentence become free points, unknown segment composites become segment
//! steps, and the draw list auto-creates what it names.

mod lexer;
mod lower;
mod parser;

pub use lexer::{tokenize, Token, TokenKind};
pub use lower::lower;
pub use parser::parse;

use serde::Serialize;
use thiserror::Error;

use crate::construction::Figure;

/// Byte range of a token or error inside the query text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }

    pub fn merge(self, other: Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CqlError {
    #[error("lex error at {span}: `{found}` is not a valid token")]
    Lex { found: String, span: Span },
    #[error("parse error at {span}: expected {expected}, found {found}")]
    Parse {
        expected: String,
        found: String,
        span: Span,
    },
    #[error("arity error at {span}: {message}")]
    Arity { message: String, span: Span },
    #[error("semantic error at {span}: {message}")]
    Semantic { message: String, span: Span },
}

impl CqlError {
    pub fn span(&self) -> Span {
        match self {
            CqlError::Lex { span, .. }
            | CqlError::Parse { span, .. }
            | CqlError::Arity { span, .. }
            | CqlError::Semantic { span, .. } => *span,
        }
    }
}

/// An entity reference: an optional type word and a label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entity {
    pub inst: Option<InstWord>,
    pub label: String,
    pub span: Span,
}

impl Entity {
    /// Number of hyphen-separated parts in the label.
    pub fn parts(&self) -> usize {
        self.label.split('-').count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InstWord {
    Point,
    Segment,
    Line,
    Angle,
    Circle,
    Center,
}

impl InstWord {
    pub fn name(self) -> &'static str {
        match self {
            InstWord::Point => "point",
            InstWord::Segment => "segment",
            InstWord::Line => "line",
            InstWord::Angle => "angle",
            InstWord::Circle => "circle",
            InstWord::Center => "center",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerbWord {
    Is,
    Are,
    Intersect,
    Connect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NounWord {
    Midpoint,
    Foot,
    Mediatrix,
    Intersection,
    Bisector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjeWord {
    Perpendicular,
    Parallel,
    Defined,
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrepWord {
    At,
    Of,
    By,
    To,
    On,
}

impl PrepWord {
    pub fn name(self) -> &'static str {
        match self {
            PrepWord::At => "at",
            PrepWord::Of => "of",
            PrepWord::By => "by",
            PrepWord::To => "to",
            PrepWord::On => "on",
        }
    }
}

/// The verb group of a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerbGroup {
    pub verb: VerbWord,
    pub complement: Option<Complement>,
    pub span: Span,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Complement {
    Noun(NounWord),
    Adje(AdjeWord),
}

/// A parsed sentence before form classification: subject entities, verb
/// group, direct entities, and prepositional groups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub heads: Vec<Entity>,
    pub verb: VerbGroup,
    pub direct: Vec<Entity>,
    pub preps: Vec<(PrepWord, Vec<Entity>)>,
    pub span: Span,
}

/// A parsed query: sentences plus the draw list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryAst {
    pub sentences: Vec<Sentence>,
    pub draw: Vec<Entity>,
}

/// Convenience: tokenize, parse, and lower in one call.
pub fn compile_query(text: &str) -> Result<Figure, CqlError> {
    let tokens = tokenize(text)?;
    let ast = parse(&tokens)?;
    lower(&ast)
}
