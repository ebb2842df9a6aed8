//! Maximal-munch tokenizer for the query language. Terminals are ASCII;
//! anything outside the keyword classes and the label pattern is a lex
//! error carrying its span.

use super::{AdjeWord, CqlError, InstWord, NounWord, PrepWord, Span, VerbWord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Noun(NounWord),
    Inst(InstWord),
    Verb(VerbWord),
    Adje(AdjeWord),
    Semicolon,
    And,
    Draw,
    Prep(PrepWord),
    Period,
    Label,
    The,
}

impl TokenKind {
    pub fn describe(self) -> &'static str {
        match self {
            TokenKind::Noun(_) => "a noun",
            TokenKind::Inst(_) => "a type name",
            TokenKind::Verb(_) => "a verb",
            TokenKind::Adje(_) => "an adjective",
            TokenKind::Semicolon => "`;`",
            TokenKind::And => "`,`",
            TokenKind::Draw => "`draw`",
            TokenKind::Prep(_) => "a preposition",
            TokenKind::Period => "`.`",
            TokenKind::Label => "a label",
            TokenKind::The => "`the`",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: Span,
}

/// `[A-Z]([_]?[0-9]+)?(-[A-Z]([_]?[0-9]+)?)*`
fn is_label(word: &str) -> bool {
    fn part(p: &str) -> bool {
        let mut chars = p.chars();
        match chars.next() {
            Some(c) if c.is_ascii_uppercase() => {}
            _ => return false,
        }
        let rest: Vec<char> = chars.collect();
        if rest.is_empty() {
            return true;
        }
        let digits: &[char] = if rest[0] == '_' { &rest[1..] } else { &rest[..] };
        !digits.is_empty() && digits.iter().all(char::is_ascii_digit)
    }
    !word.is_empty() && word.split('-').all(part)
}

fn classify_word(word: &str) -> Option<TokenKind> {
    let kind = match word {
        "the" => TokenKind::The,
        "draw" => TokenKind::Draw,
        "and" => TokenKind::And,
        "is" => TokenKind::Verb(VerbWord::Is),
        "are" => TokenKind::Verb(VerbWord::Are),
        "intersect" | "intersects" => TokenKind::Verb(VerbWord::Intersect),
        "connect" | "connects" => TokenKind::Verb(VerbWord::Connect),
        "perpendicular" => TokenKind::Adje(AdjeWord::Perpendicular),
        "parallel" => TokenKind::Adje(AdjeWord::Parallel),
        "defined" => TokenKind::Adje(AdjeWord::Defined),
        "right" => TokenKind::Adje(AdjeWord::Right),
        "at" => TokenKind::Prep(PrepWord::At),
        "of" => TokenKind::Prep(PrepWord::Of),
        "by" => TokenKind::Prep(PrepWord::By),
        "to" => TokenKind::Prep(PrepWord::To),
        "on" => TokenKind::Prep(PrepWord::On),
        "point" | "points" => TokenKind::Inst(InstWord::Point),
        "segment" | "segments" => TokenKind::Inst(InstWord::Segment),
        "line" | "lines" => TokenKind::Inst(InstWord::Line),
        "angle" | "angles" => TokenKind::Inst(InstWord::Angle),
        "circle" | "circles" => TokenKind::Inst(InstWord::Circle),
        "center" | "centers" => TokenKind::Inst(InstWord::Center),
        "midpoint" | "midpoints" => TokenKind::Noun(NounWord::Midpoint),
        "foot" | "foots" => TokenKind::Noun(NounWord::Foot),
        "mediatrix" | "mediatrixs" => TokenKind::Noun(NounWord::Mediatrix),
        "intersection" | "intersections" => TokenKind::Noun(NounWord::Intersection),
        "bisector" | "bisectors" => TokenKind::Noun(NounWord::Bisector),
        _ => return None,
    };
    Some(kind)
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, CqlError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let (kind, len) = match c {
            ';' => (TokenKind::Semicolon, 1),
            ',' => (TokenKind::And, 1),
            '.' => (TokenKind::Period, 1),
            _ if c.is_ascii_alphanumeric() || c == '_' || c == '-' => {
                let start = i;
                let mut end = i;
                while end < bytes.len() {
                    let b = bytes[end] as char;
                    if b.is_ascii_alphanumeric() || b == '_' || b == '-' {
                        end += 1;
                    } else {
                        break;
                    }
                }
                let word = &text[start..end];
                let kind = if let Some(kind) = classify_word(word) {
                    kind
                } else if is_label(word) {
                    TokenKind::Label
                } else {
                    return Err(CqlError::Lex {
                        found: word.to_string(),
                        span: Span::new(start, end),
                    });
                };
                (kind, end - start)
            }
            _ => {
                return Err(CqlError::Lex {
                    found: c.to_string(),
                    span: Span::new(i, i + c.len_utf8()),
                })
            }
        };
        tokens.push(Token {
            kind,
            lexeme: text[i..i + len].to_string(),
            span: Span::new(i, i + len),
        });
        i += len;
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(text: &str) -> Vec<TokenKind> {
        tokenize(text).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn sample_prefix_tokenizes() {
        assert_eq!(
            kinds("D, E, F are midpoints of A-C"),
            vec![
                TokenKind::Label,
                TokenKind::And,
                TokenKind::Label,
                TokenKind::And,
                TokenKind::Label,
                TokenKind::Verb(VerbWord::Are),
                TokenKind::Noun(NounWord::Midpoint),
                TokenKind::Prep(PrepWord::Of),
                TokenKind::Label,
            ]
        );
    }

    #[test]
    fn minimal_draw_query() {
        assert_eq!(
            kinds("draw A-B."),
            vec![TokenKind::Draw, TokenKind::Label, TokenKind::Period]
        );
    }

    #[test]
    fn lowercase_label_is_a_lex_error() {
        let err = tokenize("draw a-b.").unwrap_err();
        assert_eq!(
            err,
            CqlError::Lex {
                found: "a-b".into(),
                span: Span::new(5, 8),
            }
        );
    }

    #[test]
    fn label_pattern() {
        assert!(is_label("A"));
        assert!(is_label("A_1"));
        assert!(is_label("A1"));
        assert!(is_label("A-B"));
        assert!(is_label("A_1-B_2"));
        assert!(is_label("A-B-C"));
        assert!(!is_label("a"));
        assert!(!is_label("AB"));
        assert!(!is_label("A_"));
        assert!(!is_label("A-"));
        assert!(!is_label("-A"));
        assert!(!is_label("A__1"));
    }

    #[test]
    fn spans_are_byte_offsets() {
        let tokens = tokenize("  draw  A-B .").unwrap();
        assert_eq!(tokens[0].span, Span::new(2, 6));
        assert_eq!(tokens[1].span, Span::new(8, 11));
        assert_eq!(tokens[2].span, Span::new(12, 13));
    }
}
