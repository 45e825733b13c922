//! Recursive-descent parser for the template language.
//!
//! The parser is permissive about whitespace and accepts two notational
//! variants that canonical printing normalizes away: parentheses around a
//! term, and a space instead of `|` before a path or pair attribute
//! (`a:p dpPath.dprel.seq`, `a:p dpTreeRelation`).

use super::{
    Anchor, Attr, CollectionNav, Nav, NodeExpr, Operand, PairAttr, PathKind, Reducer, Term,
    TemplateError, ValueExpr,
};

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Num(String),
    Plus,
    Colon,
    Pipe,
    Dot,
    Minus,
    Eq,
    Quest,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Lexed {
    tok: Tok,
    start: usize,
    end: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>, TemplateError> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let tok = match c {
            ' ' | '\t' => {
                i += 1;
                continue;
            }
            '+' => Tok::Plus,
            ':' => Tok::Colon,
            '|' => Tok::Pipe,
            '.' => Tok::Dot,
            '-' => Tok::Minus,
            '=' => Tok::Eq,
            '?' => Tok::Quest,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            _ if c.is_ascii_digit() => {
                let mut j = i;
                while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                    j += 1;
                }
                let tok = Tok::Num(text[i..j].to_string());
                out.push(Lexed {
                    tok,
                    start,
                    end: j,
                });
                i = j;
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < bytes.len() {
                    let cj = bytes[j] as char;
                    if cj.is_ascii_alphanumeric() || cj == '_' {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let tok = Tok::Word(text[i..j].to_string());
                out.push(Lexed {
                    tok,
                    start,
                    end: j,
                });
                i = j;
                continue;
            }
            other => {
                return Err(TemplateError::UnknownIdentifier {
                    word: other.to_string(),
                    start,
                    end: start + 1,
                })
            }
        };
        out.push(Lexed {
            tok,
            start,
            end: start + 1,
        });
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
    len: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn peek_at(&self, n: usize) -> Option<&Tok> {
        self.toks.get(self.pos + n).map(|l| &l.tok)
    }

    fn span(&self) -> (usize, usize) {
        match self.toks.get(self.pos) {
            Some(l) => (l.start, l.end),
            None => (self.len, self.len),
        }
    }

    fn bump(&mut self) -> Option<Lexed> {
        let l = self.toks.get(self.pos).cloned();
        if l.is_some() {
            self.pos += 1;
        }
        l
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), TemplateError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            let (start, end) = self.span();
            Err(TemplateError::Expected {
                what: what.to_string(),
                start,
                end,
            })
        }
    }

    fn expected(&self, what: &str) -> TemplateError {
        let (start, end) = self.span();
        TemplateError::Expected {
            what: what.to_string(),
            start,
            end,
        }
    }

    fn unknown(&self, word: &str) -> TemplateError {
        let (start, end) = self.span();
        TemplateError::UnknownIdentifier {
            word: word.to_string(),
            start,
            end,
        }
    }

    /// An optional offset: trailing digits already split off the word, or a
    /// `-N` / `N` token pair following it.
    fn offset(&mut self, split: Option<i32>) -> i32 {
        if let Some(off) = split {
            return off;
        }
        match (self.peek(), self.peek_at(1)) {
            (Some(Tok::Minus), Some(Tok::Num(_))) => {
                self.pos += 1;
                let Some(Lexed {
                    tok: Tok::Num(n), ..
                }) = self.bump()
                else {
                    unreachable!()
                };
                -(n.parse::<i32>().unwrap_or(0))
            }
            _ => 0,
        }
    }

    /// `a`, `p`, or a navigation name, possibly with trailing digits
    /// (`lm1` -> (`lm`, 1)).
    fn split_name<'w>(&self, word: &'w str, known: impl Fn(&str) -> bool) -> Option<(&'w str, Option<i32>)> {
        if known(word) {
            return Some((word, None));
        }
        let trimmed = word.trim_end_matches(|c: char| c.is_ascii_digit());
        if trimmed.len() < word.len() && known(trimmed) {
            let off: i32 = word[trimmed.len()..].parse().ok()?;
            return Some((trimmed, Some(off)));
        }
        None
    }

    fn node_starts_here(&self) -> bool {
        if let Some(Tok::Word(w)) = self.peek() {
            self.split_name(w, |n| n == "a" || n == "p").is_some()
        } else {
            false
        }
    }

    fn parse_node(&mut self) -> Result<NodeExpr, TemplateError> {
        let Some(Tok::Word(word)) = self.peek().cloned() else {
            return Err(self.expected("anchor 'a' or 'p'"));
        };
        let Some((name, split)) = self.split_name(&word, |n| n == "a" || n == "p") else {
            return Err(self.expected("anchor 'a' or 'p'"));
        };
        let anchor = if name == "a" { Anchor::A } else { Anchor::P };
        self.pos += 1;
        let offset = self.offset(split);
        let mut navs = Vec::new();
        // Consume `.nav` segments for as long as the next word is a
        // navigation; attribute and collection words end the node.
        while self.peek() == Some(&Tok::Dot) {
            let Some(Tok::Word(w)) = self.peek_at(1).cloned() else {
                break;
            };
            let Some((nav_name, split)) = self.split_name(&w, |n| Nav::from_name(n).is_some())
            else {
                break;
            };
            let nav = Nav::from_name(nav_name).expect("checked");
            self.pos += 2;
            let off = self.offset(split);
            navs.push((nav, off));
        }
        Ok(NodeExpr {
            anchor,
            offset,
            navs,
        })
    }

    /// An attribute word, extending `existSemdprel_X` suffixes over `-`.
    fn parse_attr_word(&mut self) -> Result<Attr, TemplateError> {
        let Some(Tok::Word(word)) = self.peek().cloned() else {
            return Err(self.expected("attribute name"));
        };
        let Some(mut attr) = Attr::from_name(&word) else {
            if Reducer::from_name(&word).is_some() {
                let (start, end) = self.span();
                return Err(TemplateError::ReducerOnScalar {
                    word,
                    start,
                    end,
                });
            }
            return Err(self.unknown(&word));
        };
        self.pos += 1;
        if let Attr::ExistSemdprel(label) = &mut attr {
            while self.peek() == Some(&Tok::Minus) {
                match self.peek_at(1) {
                    Some(Tok::Word(w)) => {
                        label.push('-');
                        label.push_str(w);
                        self.pos += 2;
                    }
                    Some(Tok::Num(n)) => {
                        label.push('-');
                        label.push_str(n);
                        self.pos += 2;
                    }
                    _ => break,
                }
            }
        }
        Ok(attr)
    }

    fn parse_reducer_suffix(&mut self) -> Result<Option<Reducer>, TemplateError> {
        if self.peek() != Some(&Tok::Dot) {
            return Ok(None);
        }
        let Some(Tok::Word(w)) = self.peek_at(1).cloned() else {
            return Err(self.expected("reducer after '.'"));
        };
        match Reducer::from_name(&w) {
            Some(r) => {
                self.pos += 2;
                Ok(Some(r))
            }
            None => {
                self.pos += 1;
                Err(self.expected("reducer 'seq', 'noDup' or 'bag'"))
            }
        }
    }

    fn parse_value(&mut self) -> Result<ValueExpr, TemplateError> {
        let node_span = self.span();
        let node = self.parse_node()?;

        if self.peek() == Some(&Tok::Colon) {
            self.pos += 1;
            let to = self.parse_node()?;
            // `|path` or a bare path/pair word (table notation), or `.pair`.
            let mut path: Option<PathKind> = None;
            let mut pair: Option<PairAttr> = None;
            match self.peek() {
                Some(Tok::Pipe) => {
                    self.pos += 1;
                    let Some(Tok::Word(w)) = self.peek().cloned() else {
                        return Err(self.expected("path name after '|'"));
                    };
                    match PathKind::from_name(&w) {
                        Some(p) => {
                            self.pos += 1;
                            path = Some(p);
                        }
                        None => return Err(self.unknown(&w)),
                    }
                }
                Some(Tok::Word(w)) => {
                    let w = w.clone();
                    if let Some(p) = PathKind::from_name(&w) {
                        self.pos += 1;
                        path = Some(p);
                    } else if let Some(pa) = PairAttr::from_name(&w) {
                        self.pos += 1;
                        pair = Some(pa);
                    } else {
                        return Err(self.unknown(&w));
                    }
                }
                Some(Tok::Dot) => {
                    let Some(Tok::Word(w)) = self.peek_at(1).cloned() else {
                        return Err(self.expected("pair attribute after '.'"));
                    };
                    match PairAttr::from_name(&w) {
                        Some(pa) => {
                            self.pos += 2;
                            pair = Some(pa);
                        }
                        None => {
                            self.pos += 1;
                            if w == "distance" {
                                let (start, end) = self.span();
                                return Err(TemplateError::DistanceWithoutPath { start, end });
                            }
                            return Err(self.unknown(&w));
                        }
                    }
                }
                _ => return Err(self.expected("'|<path>' or pair attribute after ':'")),
            }

            if let Some(attr) = pair {
                return Ok(ValueExpr::PairProbe {
                    from: node,
                    to,
                    attr,
                });
            }
            let path = path.expect("path set");
            self.expect(Tok::Dot, "'.' after path name")?;
            if let Some(Tok::Word(w)) = self.peek() {
                if w == "distance" {
                    self.pos += 1;
                    return Ok(ValueExpr::PathDistance {
                        from: node,
                        to,
                        path,
                    });
                }
            }
            let attr = self.parse_attr_word()?;
            let reducer = self.parse_reducer_suffix()?;
            return Ok(ValueExpr::PathCollect {
                from: node,
                to,
                path,
                attr,
                reducer,
            });
        }

        if self.peek() != Some(&Tok::Dot) {
            return Err(TemplateError::MissingAttribute {
                start: node_span.0,
                end: self.span().1,
            });
        }
        self.pos += 1;

        if let Some(Tok::Word(w)) = self.peek().cloned() {
            if let Some(nav) = CollectionNav::from_name(&w) {
                self.pos += 1;
                self.expect(Tok::Dot, "'.' after collection")?;
                let attr = self.parse_attr_word()?;
                let reducer = self.parse_reducer_suffix()?;
                return Ok(ValueExpr::Collection {
                    node,
                    nav,
                    attr,
                    reducer,
                });
            }
        }

        let first = self.parse_attr_word()?;
        let mut attrs = vec![first];
        if self.peek() == Some(&Tok::Dot) {
            if let Some(Tok::Word(w)) = self.peek_at(1).cloned() {
                if let Some(attr) = Attr::from_name(&w) {
                    if attr.is_baseline() {
                        self.pos += 2;
                        attrs.push(attr);
                    } else if let Some(r) = Reducer::from_name(&w) {
                        let _ = r;
                        self.pos += 1;
                        let (start, end) = self.span();
                        return Err(TemplateError::ReducerOnScalar {
                            word: w,
                            start,
                            end,
                        });
                    }
                } else if Reducer::from_name(&w).is_some() {
                    self.pos += 1;
                    let (start, end) = self.span();
                    return Err(TemplateError::ReducerOnScalar {
                        word: w,
                        start,
                        end,
                    });
                }
            }
        }
        Ok(ValueExpr::NodeAttr { node, attrs })
    }

    fn parse_literal(&mut self) -> Result<String, TemplateError> {
        let mut text = match self.bump() {
            Some(Lexed {
                tok: Tok::Word(w), ..
            }) => w,
            Some(Lexed {
                tok: Tok::Num(n), ..
            }) => n,
            _ => return Err(self.expected("literal")),
        };
        while self.peek() == Some(&Tok::Minus) {
            match self.peek_at(1) {
                Some(Tok::Word(w)) => {
                    text.push('-');
                    text.push_str(w);
                    self.pos += 2;
                }
                Some(Tok::Num(n)) => {
                    text.push('-');
                    text.push_str(n);
                    self.pos += 2;
                }
                _ => break,
            }
        }
        Ok(text)
    }

    fn parse_operand(&mut self) -> Result<Operand, TemplateError> {
        if self.node_starts_here() {
            Ok(Operand::Value(self.parse_value()?))
        } else {
            Ok(Operand::Literal(self.parse_literal()?))
        }
    }

    fn parse_term(&mut self) -> Result<Term, TemplateError> {
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let term = self.parse_term()?;
            self.expect(Tok::RParen, "')'")?;
            // A parenthesized value may still be the left side of a probe.
            if self.peek() == Some(&Tok::Eq) {
                self.pos += 1;
                let left = match term {
                    Term::Value(v) => Operand::Value(v),
                    probe => {
                        let _ = probe;
                        return Err(self.expected("value before '='"));
                    }
                };
                let right = self.parse_operand()?;
                self.expect(Tok::Quest, "'?'")?;
                return Ok(Term::Probe { left, right });
            }
            return Ok(term);
        }
        let left = self.parse_operand()?;
        if self.peek() == Some(&Tok::Eq) {
            self.pos += 1;
            let right = self.parse_operand()?;
            self.expect(Tok::Quest, "'?'")?;
            return Ok(Term::Probe { left, right });
        }
        match left {
            Operand::Value(v) => Ok(Term::Value(v)),
            Operand::Literal(word) => Err(TemplateError::UnknownIdentifier {
                word,
                start: 0,
                end: 0,
            }),
        }
    }
}

pub(super) fn parse_terms(text: &str) -> Result<Vec<Term>, TemplateError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        len: text.len(),
    };
    if p.peek().is_none() {
        return Err(p.expected("a template"));
    }
    let mut terms = vec![p.parse_term()?];
    while p.peek() == Some(&Tok::Plus) {
        p.pos += 1;
        terms.push(p.parse_term()?);
    }
    if p.peek().is_some() {
        return Err(p.expected("'+' or end of template"));
    }
    Ok(terms)
}

#[cfg(test)]
mod tests {
    use super::super::{FeatureTemplate, TemplateError};

    fn canon(text: &str) -> String {
        FeatureTemplate::parse(text).unwrap().source().to_string()
    }

    #[test]
    fn parses_basic_forms() {
        assert_eq!(canon("a.lm.lemma"), "a.lm.lemma");
        assert_eq!(canon("p.h.dprel"), "p.h.dprel");
        assert_eq!(canon("p-1.pos+p.pos"), "p-1.pos + p.pos");
        assert_eq!(canon("a:p|dpPath.lemma.bag"), "a:p|dpPath.lemma.bag");
        assert_eq!(
            canon("a:p.highSupportNoun|linePath.dprel.seq"),
            "a:p.highSupportNoun|linePath.dprel.seq"
        );
    }

    #[test]
    fn table_notation_normalizes() {
        assert_eq!(canon("a:p dpPath.dprel"), "a:p|dpPath.dprel");
        assert_eq!(canon("(a:p dpTreeRelation) + p.form"), "a:p.dpTreeRelation + p.form");
        assert_eq!(canon("a:p existCross"), "a:p.existCross");
        assert_eq!(canon("p.voice + (a:p direction)"), "p.voice + a:p.direction");
        assert_eq!(canon("a.semdprel = A0 ?"), "a.semdprel = A0 ?");
        assert_eq!(canon("a.semdprel=A2?"), "a.semdprel = A2 ?");
        assert_eq!(canon("a.form = p.form ?"), "a.form = p.form ?");
        assert_eq!(canon("p.dprel = OBJ ?"), "p.dprel = OBJ ?");
        assert_eq!(canon("a1:p.direction + a2:p.direction"), "a1:p.direction + a2:p.direction");
    }

    #[test]
    fn offsets_parse_in_both_spellings() {
        assert_eq!(canon("a.lm-1.spPos"), "a.lm-1.spPos");
        assert_eq!(canon("a.lm1.lemma"), "a.lm1.lemma");
        assert_eq!(canon("p1.pos"), "p1.pos");
        assert_eq!(canon("a-2.isCurPred.lemma + a-1.isCurPred.lemma"),
                   "a-2.isCurPred.lemma + a-1.isCurPred.lemma");
    }

    #[test]
    fn collections_and_baselines() {
        assert_eq!(
            canon("p.spForm + p.lm.spPos + p.noFarChildren.spPos.bag + p.rm.spPos"),
            "p.spForm + p.lm.spPos + p.noFarChildren.spPos.bag + p.rm.spPos"
        );
        assert_eq!(canon("p.children.dprel.noDup"), "p.children.dprel.noDup");
        assert_eq!(canon("a.spPos.baseline_Ax + a.voice"), "a.spPos.baseline_Ax + a.voice");
        assert_eq!(canon("a.baseline_Mod"), "a.baseline_Mod");
        assert_eq!(canon("a.existSemdprel_A0"), "a.existSemdprel_A0");
        assert_eq!(canon("a.existSemdprel_AM-MNR"), "a.existSemdprel_AM-MNR");
        assert_eq!(canon("a:p|dpPath.distance"), "a:p|dpPath.distance");
    }

    #[test]
    fn sense_alias_normalizes() {
        assert_eq!(canon("p.sense + p.lemma"), "p.currentSense + p.lemma");
    }

    #[test]
    fn rejects_malformed_templates() {
        assert!(matches!(
            FeatureTemplate::parse("a"),
            Err(TemplateError::MissingAttribute { .. })
        ));
        assert!(matches!(
            FeatureTemplate::parse("a.bogus"),
            Err(TemplateError::UnknownIdentifier { word, .. }) if word == "bogus"
        ));
        assert!(matches!(
            FeatureTemplate::parse("a.lemma.bag"),
            Err(TemplateError::ReducerOnScalar { .. })
        ));
        assert!(matches!(
            FeatureTemplate::parse("a:p.distance"),
            Err(TemplateError::DistanceWithoutPath { .. })
        ));
        assert!(matches!(
            FeatureTemplate::parse("a:p|bogusPath.lemma.seq"),
            Err(TemplateError::UnknownIdentifier { .. })
        ));
        assert!(matches!(
            FeatureTemplate::parse("p.currentSense"),
            Err(TemplateError::SenseAlone)
        ));
        assert!(matches!(
            FeatureTemplate::parse("p.currentSense + a.currentSense"),
            Err(TemplateError::SenseAlone)
        ));
        assert!(FeatureTemplate::parse("p.currentSense + p.lemma").is_ok());
        assert!(FeatureTemplate::parse("").is_err());
    }

    #[test]
    fn print_parse_is_identity_on_canonical_text() {
        for text in [
            "a.lm.lemma",
            "a:p|dpPath.lemma.bag",
            "a.lemma + a.dprel + a.h.lemma",
            "a:p.dpTreeRelation + a.spPos",
            "a.semdprel = A2 ?",
            "a.lowSupportVerb:p|dpPathShared.dprel.seq",
            "p.spForm + p.children.dprel.bag",
            "a-1.isCurPred.spLemma + a.isCurPred.spLemma",
            "a:p|linePath.distance",
            "a.isLeaf",
        ] {
            let t = FeatureTemplate::parse(text).unwrap();
            assert_eq!(t.source(), text);
            let reparsed = FeatureTemplate::parse(t.source()).unwrap();
            assert_eq!(reparsed, t);
        }
    }
}
