//! Recursive-descent parser over the token stream.
//!
//! Follows the grammar rules directly (a query is sentences, an optional
//! draw section, and a final period); `pps` ambiguity resolves by longest
//! match — direct entities are consumed before prepositional groups. The
//! article `the` is skipped in front of nouns and type names.

use super::lexer::{Token, TokenKind};
use super::{CqlError, Entity, PrepWord, QueryAst, Sentence, Span, VerbGroup};

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<&Token> {
        let token = self.tokens.get(self.pos)?;
        self.pos += 1;
        Some(token)
    }

    fn end_span(&self) -> Span {
        self.tokens
            .last()
            .map(|t| Span::new(t.span.end, t.span.end))
            .unwrap_or(Span::new(0, 0))
    }

    fn error(&self, expected: &str) -> CqlError {
        match self.peek() {
            Some(token) => CqlError::Parse {
                expected: expected.to_string(),
                found: format!("`{}`", token.lexeme),
                span: token.span,
            },
            None => CqlError::Parse {
                expected: expected.to_string(),
                found: "end of input".to_string(),
                span: self.end_span(),
            },
        }
    }

    fn eat_the(&mut self) {
        if matches!(self.peek().map(|t| t.kind), Some(TokenKind::The)) {
            self.pos += 1;
        }
    }

    fn at_entity(&self) -> bool {
        matches!(
            self.peek().map(|t| t.kind),
            Some(TokenKind::Label | TokenKind::Inst(_) | TokenKind::The)
        )
    }

    /// ent -> INST LABEL | LABEL, with an optional article.
    fn entity(&mut self) -> Result<Entity, CqlError> {
        self.eat_the();
        let mut inst = None;
        let mut span = None;
        if let Some(token) = self.peek() {
            if let TokenKind::Inst(word) = token.kind {
                inst = Some(word);
                span = Some(token.span);
                self.pos += 1;
            }
        }
        match self.peek() {
            Some(token) if token.kind == TokenKind::Label => {
                let label = token.lexeme.clone();
                let span = span.map_or(token.span, |s| s.merge(token.span));
                self.pos += 1;
                Ok(Entity { inst, label, span })
            }
            _ => Err(self.error("a label")),
        }
    }

    /// ents -> ent AND ents | ent
    fn entities(&mut self) -> Result<Vec<Entity>, CqlError> {
        let mut list = vec![self.entity()?];
        while matches!(self.peek().map(|t| t.kind), Some(TokenKind::And)) {
            self.pos += 1;
            list.push(self.entity()?);
        }
        Ok(list)
    }

    /// vrb -> VERB ADJE | VERB NOUN | VERB
    fn verb_group(&mut self) -> Result<VerbGroup, CqlError> {
        let (verb, mut span) = match self.peek() {
            Some(token) => match token.kind {
                TokenKind::Verb(word) => {
                    let span = token.span;
                    self.pos += 1;
                    (word, span)
                }
                _ => return Err(self.error("a verb")),
            },
            None => return Err(self.error("a verb")),
        };
        self.eat_the();
        let complement = match self.peek().map(|t| (t.kind, t.span)) {
            Some((TokenKind::Adje(word), s)) => {
                self.pos += 1;
                span = span.merge(s);
                Some(super::Complement::Adje(word))
            }
            Some((TokenKind::Noun(word), s)) => {
                self.pos += 1;
                span = span.merge(s);
                Some(super::Complement::Noun(word))
            }
            _ => None,
        };
        Ok(VerbGroup {
            verb,
            complement,
            span,
        })
    }

    /// pps -> ents pents | pents | ents ; pents -> pent pents | pent ;
    /// pent -> PREP ents
    fn predicates(&mut self) -> Result<(Vec<Entity>, Vec<(PrepWord, Vec<Entity>)>), CqlError> {
        let direct = if self.at_entity() {
            self.entities()?
        } else {
            Vec::new()
        };
        let mut preps = Vec::new();
        while let Some(TokenKind::Prep(word)) = self.peek().map(|t| t.kind) {
            self.pos += 1;
            let list = self.entities()?;
            preps.push((word, list));
        }
        Ok((direct, preps))
    }

    /// sent -> nps vrb pps | nps vrb
    fn sentence(&mut self) -> Result<Sentence, CqlError> {
        let start = self.peek().map(|t| t.span).unwrap_or(self.end_span());
        let heads = self.entities()?;
        let verb = self.verb_group()?;
        let (direct, preps) = self.predicates()?;
        let end = self
            .tokens
            .get(self.pos.saturating_sub(1))
            .map(|t| t.span)
            .unwrap_or(start);
        Ok(Sentence {
            heads,
            verb,
            direct,
            preps,
            span: start.merge(end),
        })
    }

    /// query -> sents drawvp PERIOD | sents PERIOD | drawvp PERIOD
    fn query(&mut self) -> Result<QueryAst, CqlError> {
        let mut sentences = Vec::new();
        if !matches!(self.peek().map(|t| t.kind), Some(TokenKind::Draw)) && self.peek().is_some() {
            sentences.push(self.sentence()?);
            while matches!(self.peek().map(|t| t.kind), Some(TokenKind::Semicolon)) {
                self.pos += 1;
                if matches!(self.peek().map(|t| t.kind), Some(TokenKind::Draw)) {
                    break;
                }
                sentences.push(self.sentence()?);
            }
        }
        let draw = if matches!(self.peek().map(|t| t.kind), Some(TokenKind::Draw)) {
            self.pos += 1;
            self.entities()?
        } else {
            Vec::new()
        };
        if sentences.is_empty() && draw.is_empty() {
            return Err(self.error("a sentence or `draw`"));
        }
        match self.bump() {
            Some(token) if token.kind == TokenKind::Period => {}
            _ => return Err(self.error("`.`")),
        }
        if let Some(extra) = self.peek() {
            return Err(CqlError::Parse {
                expected: "end of input".to_string(),
                found: format!("`{}`", extra.lexeme),
                span: extra.span,
            });
        }
        Ok(QueryAst { sentences, draw })
    }
}

pub fn parse(tokens: &[Token]) -> Result<QueryAst, CqlError> {
    Parser { tokens, pos: 0 }.query()
}

#[cfg(test)]
mod tests {
    use super::super::{tokenize, Complement, InstWord, NounWord, VerbWord};
    use super::*;

    fn parsed(text: &str) -> QueryAst {
        parse(&tokenize(text).unwrap()).unwrap()
    }

    #[test]
    fn sample_query_shape() {
        let ast = parsed(
            "D, E, F are midpoints of A-C, A-B, B-C ; C-E intersects B-D at G ; \
             draw A-C, A-F, A-B, B-C, B-D, C-E.",
        );
        assert_eq!(ast.sentences.len(), 2);
        let first = &ast.sentences[0];
        assert_eq!(first.heads.len(), 3);
        assert_eq!(first.verb.verb, VerbWord::Are);
        assert_eq!(
            first.verb.complement,
            Some(Complement::Noun(NounWord::Midpoint))
        );
        assert_eq!(first.preps.len(), 1);
        assert_eq!(first.preps[0].1.len(), 3);
        let second = &ast.sentences[1];
        assert_eq!(second.heads[0].label, "C-E");
        assert_eq!(second.direct[0].label, "B-D");
        assert_eq!(second.preps[0].0, PrepWord::At);
        assert_eq!(ast.draw.len(), 6);
    }

    #[test]
    fn draw_only_query() {
        let ast = parsed("draw A-B.");
        assert!(ast.sentences.is_empty());
        assert_eq!(ast.draw[0].label, "A-B");
    }

    #[test]
    fn sentences_only_query() {
        let ast = parsed("M is the midpoint of A-B.");
        assert_eq!(ast.sentences.len(), 1);
        assert!(ast.draw.is_empty());
    }

    #[test]
    fn optional_articles_and_type_names() {
        let ast = parsed("the point M is the midpoint of the segment A-B.");
        let sentence = &ast.sentences[0];
        assert_eq!(sentence.heads[0].inst, Some(InstWord::Point));
        assert_eq!(sentence.preps[0].1[0].inst, Some(InstWord::Segment));
    }

    #[test]
    fn and_is_a_comma() {
        let a = parsed("draw A-B and B-C.");
        let b = parsed("draw A-B, B-C.");
        assert_eq!(a.draw, b.draw);
    }

    #[test]
    fn missing_draw_arguments_fail() {
        let tokens = tokenize("draw .").unwrap();
        let err = parse(&tokens).unwrap_err();
        assert!(matches!(err, CqlError::Parse { .. }));
        assert_eq!(err.span(), Span::new(5, 6));
    }

    #[test]
    fn missing_period_fails() {
        let tokens = tokenize("draw A-B").unwrap();
        assert!(matches!(parse(&tokens), Err(CqlError::Parse { .. })));
    }

    #[test]
    fn empty_input_fails() {
        let tokens = tokenize("").unwrap();
        assert!(matches!(parse(&tokens), Err(CqlError::Parse { .. })));
    }
}
