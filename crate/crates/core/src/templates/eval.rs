//! Template evaluation against a word pair in its sentence and
//! partial-structure context.
//!
//! During training the partial structure reflects gold labels of
//! already-traversed pairs; during decoding, predicted ones. Token-derived
//! strings are escaped (`\\`, `\#`, `\=`) before joining with `#`, so the
//! NIL token `\N` can never collide with real text.

use super::{
    Anchor, Attr, CollectionNav, FeatureTemplate, Nav, NodeExpr, Operand, PairAttr, PathKind,
    Reducer, Term, ValueExpr,
};
use crate::conll::Sentence;
use crate::deptree::{DepGraph, SupportClass, SupportLevel};
use crate::labels::PairLabel;
use crate::pos::PosClasses;

/// Distinguished token for absent values; unreachable by escaped real text.
pub const NIL: &str = "\\N";

fn escape(s: &str) -> String {
    if !s.bytes().any(|b| matches!(b, b'\\' | b'#' | b'=')) {
        return s.to_string();
    }
    let mut out = String::with_capacity(s.len() + 4);
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '#' => out.push_str("\\#"),
            '=' => out.push_str("\\="),
            other => out.push(other),
        }
    }
    out
}

fn bool_str(b: bool) -> String {
    if b { "1".into() } else { "0".into() }
}

/// The semantic structure assigned so far for one sentence: senses of
/// recognized predicates plus role assignments in assignment order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PartialParse {
    senses: Vec<Option<String>>,
    assignments: Vec<(usize, usize, String)>,
}

impl PartialParse {
    pub fn new(sentence_len: usize) -> PartialParse {
        PartialParse {
            senses: vec![None; sentence_len],
            assignments: Vec::new(),
        }
    }

    pub fn assign_sense(&mut self, node: usize, sense: &str) {
        self.senses[node - 1] = Some(sense.to_string());
    }

    pub fn assign_role(&mut self, pred: usize, arg: usize, role: &str) {
        self.assignments.push((pred, arg, role.to_string()));
    }

    /// Applies one classified pair: senses for predicate-stage sense labels,
    /// edges for argument-stage role labels, nothing for NONE or stop labels.
    pub fn apply(&mut self, head: Option<usize>, dependent: usize, label: &PairLabel) {
        match (head, label) {
            (None, PairLabel::Sense(s)) => self.assign_sense(dependent, s),
            (Some(p), PairLabel::Role(r)) => self.assign_role(p, dependent, r),
            _ => {}
        }
    }

    pub fn sense_of(&self, node: usize) -> Option<&str> {
        self.senses.get(node - 1)?.as_deref()
    }

    /// Most recent role label assigned to `node` under any predicate.
    pub fn semdprel_of(&self, node: usize) -> Option<&str> {
        self.assignments
            .iter()
            .rev()
            .find(|(_, arg, _)| *arg == node)
            .map(|(_, _, r)| r.as_str())
    }

    /// The `X` of the most recent `<prefix>X` label under `pred`.
    pub fn prefixed_label_under(&self, pred: usize, prefix: &str) -> Option<&str> {
        self.assignments
            .iter()
            .rev()
            .filter(|(p, _, _)| *p == pred)
            .find_map(|(_, _, r)| r.strip_prefix(prefix))
    }

    pub fn label_exists_under(&self, pred: usize, label: &str) -> bool {
        self.assignments
            .iter()
            .any(|(p, _, r)| *p == pred && r == label)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.assignments.iter().map(|(p, a, _)| (*p, *a))
    }

    pub fn assignments(&self) -> &[(usize, usize, String)] {
        &self.assignments
    }
}

/// Evaluation context for one word pair. `head == None` is the virtual root:
/// every `p`-anchored value then resolves to NIL.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext<'a> {
    pub sentence: &'a Sentence,
    pub graph: &'a DepGraph,
    pub classes: &'a PosClasses,
    pub partial: &'a PartialParse,
    pub head: Option<usize>,
    pub dependent: usize,
    /// Bucket path distances at {1,2,3,4,5,6-10,>10}; raw counts otherwise.
    pub bucket_distance: bool,
}

impl<'a> EvalContext<'a> {
    /// The full feature string `<template text>=<value>`.
    pub fn evaluate(&self, template: &FeatureTemplate) -> String {
        let value = self.evaluate_value(template);
        let mut out = String::with_capacity(template.source().len() + value.len() + 1);
        out.push_str(template.source());
        out.push('=');
        out.push_str(&value);
        out
    }

    /// The value part alone.
    pub fn evaluate_value(&self, template: &FeatureTemplate) -> String {
        template
            .terms()
            .iter()
            .map(|t| self.term_value(t))
            .collect::<Vec<_>>()
            .join("#")
    }

    fn term_value(&self, term: &Term) -> String {
        match term {
            Term::Value(v) => self.value_string(v),
            Term::Probe { left, right } => {
                bool_str(self.operand_string(left) == self.operand_string(right))
            }
        }
    }

    fn operand_string(&self, op: &Operand) -> String {
        match op {
            Operand::Value(v) => self.value_string(v),
            Operand::Literal(l) => escape(l),
        }
    }

    fn value_string(&self, value: &ValueExpr) -> String {
        match value {
            ValueExpr::NodeAttr { node, attrs } => {
                let id = self.resolve(node);
                attrs
                    .iter()
                    .map(|a| element(self.attr_value(id, a)))
                    .collect::<Vec<_>>()
                    .join("#")
            }
            ValueExpr::Collection {
                node,
                nav,
                attr,
                reducer,
            } => {
                let Some(id) = self.resolve(node) else {
                    return NIL.into();
                };
                let items: Vec<usize> = match nav {
                    CollectionNav::Children => self.graph.children(id).to_vec(),
                    CollectionNav::NoFarChildren => self.graph.family(id).no_far_children,
                };
                let elems: Vec<String> = items
                    .iter()
                    .map(|&i| element(self.attr_value(Some(i), attr)))
                    .collect();
                reduce(&elems, *reducer)
            }
            ValueExpr::PathCollect {
                from,
                to,
                path,
                attr,
                reducer,
            } => {
                let (Some(f), Some(t)) = (self.resolve(from), self.resolve(to)) else {
                    return NIL.into();
                };
                let nodes = self.path_nodes(f, t, *path);
                let elems: Vec<String> = nodes
                    .iter()
                    .map(|&i| element(self.attr_value(Some(i), attr)))
                    .collect();
                reduce(&elems, *reducer)
            }
            ValueExpr::PathDistance { from, to, path } => {
                let (Some(f), Some(t)) = (self.resolve(from), self.resolve(to)) else {
                    return NIL.into();
                };
                let steps = self.path_nodes(f, t, *path).len().saturating_sub(1);
                if self.bucket_distance {
                    match steps {
                        0..=5 => steps.to_string(),
                        6..=10 => "6-10".into(),
                        _ => ">10".into(),
                    }
                } else {
                    steps.to_string()
                }
            }
            ValueExpr::PairProbe { from, to, attr } => {
                let (Some(f), Some(t)) = (self.resolve(from), self.resolve(to)) else {
                    return NIL.into();
                };
                match attr {
                    PairAttr::DpTreeRelation => self.graph.tree_relation(f, t).as_str().into(),
                    PairAttr::Direction => match f.cmp(&t) {
                        std::cmp::Ordering::Less => "L".into(),
                        std::cmp::Ordering::Equal => "S".into(),
                        std::cmp::Ordering::Greater => "R".into(),
                    },
                    PairAttr::ExistCross => {
                        let (x1, x2) = (f.min(t), f.max(t));
                        let crosses = self.partial.edges().any(|(p, a)| {
                            let (y1, y2) = (p.min(a), p.max(a));
                            (x1 < y1 && y1 < x2 && x2 < y2) || (y1 < x1 && x1 < y2 && y2 < x2)
                        });
                        bool_str(crosses)
                    }
                }
            }
        }
    }

    fn path_nodes(&self, from: usize, to: usize, path: PathKind) -> Vec<usize> {
        match path {
            PathKind::LinePath => self.graph.linear_path(from, to),
            _ => {
                let d = self.graph.decompose_paths(from, to);
                match path {
                    PathKind::DpPath => d.dp_path,
                    PathKind::DpPathArgu => d.dp_path_argu,
                    PathKind::DpPathPred => d.dp_path_pred,
                    PathKind::DpPathShared => d.dp_path_shared,
                    PathKind::LinePath => unreachable!(),
                }
            }
        }
    }

    fn resolve(&self, node: &NodeExpr) -> Option<usize> {
        let mut cur = match node.anchor {
            Anchor::A => Some(self.dependent),
            Anchor::P => self.head,
        };
        cur = self.shift(cur, node.offset);
        for (nav, off) in &node.navs {
            let id = cur?;
            cur = self.nav_step(id, *nav);
            cur = self.shift(cur, *off);
        }
        cur
    }

    fn shift(&self, id: Option<usize>, offset: i32) -> Option<usize> {
        let id = id?;
        if offset == 0 {
            return Some(id);
        }
        let target = id as i64 + i64::from(offset);
        (1..=self.sentence.len() as i64)
            .contains(&target)
            .then_some(target as usize)
    }

    fn nav_step(&self, id: usize, nav: Nav) -> Option<usize> {
        let children = self.graph.children(id);
        match nav {
            Nav::Head => self.graph.head_node(id),
            Nav::Lm => children.first().copied(),
            Nav::Rm => children.last().copied(),
            Nav::Ln => children.iter().rev().find(|&&c| c < id).copied(),
            Nav::Rn => children.iter().find(|&&c| c > id).copied(),
            Nav::PpHead => Some(self.graph.pphead(self.sentence, id, self.classes)),
            Nav::IsCurPred => (self.head == Some(id)).then_some(id),
            Nav::HighSupportVerb => self.support(id, SupportClass::Verb, SupportLevel::High),
            Nav::HighSupportNoun => self.support(id, SupportClass::Noun, SupportLevel::High),
            Nav::HighSupportProp => self.support(id, SupportClass::Prep, SupportLevel::High),
            Nav::LowSupportVerb => self.support(id, SupportClass::Verb, SupportLevel::Low),
            Nav::LowSupportNoun => self.support(id, SupportClass::Noun, SupportLevel::Low),
            Nav::LowSupportProp => self.support(id, SupportClass::Prep, SupportLevel::Low),
        }
    }

    fn support(&self, id: usize, class: SupportClass, level: SupportLevel) -> Option<usize> {
        self.graph
            .support_word(self.sentence, id, class, level, self.classes)
    }

    fn attr_value(&self, id: Option<usize>, attr: &Attr) -> Option<String> {
        let id = id?;
        let token = self.sentence.token(id);
        let v = match attr {
            Attr::Form => token.form.clone(),
            Attr::Lemma => token.lemma.clone(),
            Attr::Pos => token.pos.clone(),
            Attr::SpForm => token.sp_form.clone(),
            Attr::SpLemma => token.sp_lemma.clone(),
            Attr::SpPos => token.sp_pos.clone(),
            Attr::Dprel => token.deprel.clone(),
            Attr::Semdprel => return self.partial.semdprel_of(id).map(String::from),
            Attr::CurrentSense => return self.partial.sense_of(id).map(String::from),
            Attr::Voice => return self.voice(id),
            Attr::IsLeaf => bool_str(self.graph.is_leaf(id)),
            Attr::CtypeSemdprel => {
                return self.partial.prefixed_label_under(id, "C-").map(String::from)
            }
            Attr::RtypeSemdprel => {
                return self.partial.prefixed_label_under(id, "R-").map(String::from)
            }
            Attr::IsCtypeSemdprel => bool_str(self.partial.prefixed_label_under(id, "C-").is_some()),
            Attr::IsRtypeSemdprel => bool_str(self.partial.prefixed_label_under(id, "R-").is_some()),
            Attr::BaselineAx => return self.baseline_ax(id),
            Attr::BaselineMod => return self.baseline_mod(id),
            Attr::ExistSemdprel(label) => bool_str(
                self.head
                    .is_some_and(|p| self.partial.label_exists_under(p, label)),
            ),
        };
        Some(v)
    }

    /// Active/Passive for verbs, absent for everything else. Passive needs a
    /// participle tag plus a passive auxiliary among ancestors or children.
    fn voice(&self, id: usize) -> Option<String> {
        let pos = &self.sentence.token(id).pos;
        if !self.classes.is_verb(pos) {
            return None;
        }
        if self.classes.is_participle(pos) {
            let neighbors = self
                .graph
                .ancestors(id)
                .into_iter()
                .chain(self.graph.children(id).iter().copied());
            for n in neighbors {
                let t = self.sentence.token(n);
                if self.classes.is_passive_auxiliary(&t.form)
                    || self.classes.is_passive_auxiliary(&t.lemma)
                {
                    return Some("Passive".into());
                }
            }
        }
        Some("Active".into())
    }

    /// The head of the first noun before/after the current predicate is
    /// tagged A0/A1.
    fn baseline_ax(&self, id: usize) -> Option<String> {
        let p = self.head?;
        let left = (1..p)
            .rev()
            .find(|&i| self.classes.is_noun(&self.sentence.token(i).pos));
        let right = (p + 1..=self.sentence.len())
            .find(|&i| self.classes.is_noun(&self.sentence.token(i).pos));
        if left == Some(id) {
            Some("A0".into())
        } else if right == Some(id) {
            Some("A1".into())
        } else {
            None
        }
    }

    /// Modal-verb dependents of the current predicate are tagged AM-MOD.
    fn baseline_mod(&self, id: usize) -> Option<String> {
        let p = self.head?;
        (self.graph.head(id) == p && self.classes.is_modal(&self.sentence.token(id).pos))
            .then(|| "AM-MOD".into())
    }
}

fn element(v: Option<String>) -> String {
    match v {
        Some(s) => escape(&s),
        None => NIL.into(),
    }
}

/// seq preserves order, noDup drops adjacent duplicates, bag sorts unique
/// elements; an empty collection is NIL.
pub(crate) fn reduce(elems: &[String], reducer: Option<Reducer>) -> String {
    if elems.is_empty() {
        return NIL.into();
    }
    match reducer.unwrap_or(Reducer::Seq) {
        Reducer::Seq => elems.join("#"),
        Reducer::NoDup => {
            let mut out: Vec<&String> = Vec::new();
            for e in elems {
                if out.last() != Some(&e) {
                    out.push(e);
                }
            }
            out.iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join("#")
        }
        Reducer::Bag => {
            let mut sorted: Vec<&String> = elems.iter().collect();
            sorted.sort_unstable();
            sorted.dedup();
            sorted
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join("#")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::{example_sentence, SemanticFrame, Sentence, Token};
    use crate::templates::TemplateSet;
    use proptest::prelude::*;

    struct Fixture {
        sentence: Sentence,
        graph: DepGraph,
        classes: PosClasses,
        partial: PartialParse,
    }

    impl Fixture {
        fn example() -> Fixture {
            let sentence = example_sentence();
            let graph = DepGraph::new(&sentence);
            let partial = PartialParse::new(sentence.len());
            Fixture {
                sentence,
                graph,
                classes: PosClasses::default(),
                partial,
            }
        }

        fn ctx(&self, head: Option<usize>, dependent: usize) -> EvalContext<'_> {
            EvalContext {
                sentence: &self.sentence,
                graph: &self.graph,
                classes: &self.classes,
                partial: &self.partial,
                head,
                dependent,
                bucket_distance: true,
            }
        }
    }

    fn eval(fx: &Fixture, head: Option<usize>, dep: usize, template: &str) -> String {
        let t = FeatureTemplate::parse(template).unwrap();
        fx.ctx(head, dep).evaluate_value(&t)
    }

    #[test]
    fn node_attr_navigation() {
        let fx = Fixture::example();
        // lm of token 3 is token 2: lemma "focus".
        assert_eq!(eval(&fx, Some(7), 3, "a.lm.lemma"), "focus");
        assert_eq!(eval(&fx, Some(7), 3, "a.h.dprel"), "ROOT");
        assert_eq!(eval(&fx, Some(3), 2, "p.lm.lemma"), "focus");
        // Absent navigation yields NIL but the feature is still emitted.
        assert_eq!(eval(&fx, Some(7), 1, "a.lm.lemma"), NIL);
        let full = fx
            .ctx(Some(7), 1)
            .evaluate(&FeatureTemplate::parse("a.lm.lemma").unwrap());
        assert_eq!(full, format!("a.lm.lemma={NIL}"));
        // Offsets respect sentence bounds.
        assert_eq!(eval(&fx, Some(7), 1, "a-1.form"), NIL);
        assert_eq!(eval(&fx, Some(7), 1, "a1.form"), "focus");
        assert_eq!(eval(&fx, Some(7), 8, "a1.form"), NIL);
        // Virtual-root head: every p value is NIL.
        assert_eq!(eval(&fx, None, 3, "p.lemma"), NIL);
        assert_eq!(eval(&fx, None, 3, "a.lemma + p.lemma"), format!("shift#{NIL}"));
    }

    #[test]
    fn collections_paths_and_pairs() {
        let fx = Fixture::example();
        assert_eq!(eval(&fx, Some(3), 2, "p.children.dprel.seq"), "SBJ#MNR");
        assert_eq!(
            eval(&fx, Some(7), 2, "p.noFarChildren.spPos.bag"),
            ",#NNS"
        );
        // Leaf collections are NIL.
        assert_eq!(eval(&fx, Some(7), 1, "a.children.pos.seq"), NIL);
        assert_eq!(eval(&fx, Some(3), 6, "a:p|dpPath.lemma.seq"), "trader#say#shift");
        assert_eq!(eval(&fx, Some(3), 6, "a:p|dpPath.pos.bag"), "NNS#VBD");
        assert_eq!(eval(&fx, Some(3), 6, "a:p|linePath.form.seq"), "traders#,#quickly#shifted");
        assert_eq!(eval(&fx, Some(3), 2, "a:p.dpTreeRelation"), "child");
        assert_eq!(eval(&fx, Some(3), 2, "a:p.direction"), "L");
        assert_eq!(eval(&fx, Some(3), 4, "a:p.direction"), "R");
        assert_eq!(eval(&fx, Some(3), 2, "a:p|dpPath.distance"), "1");
        assert_eq!(eval(&fx, Some(3), 6, "a:p|linePath.distance"), "3");
        assert_eq!(eval(&fx, Some(3), 3, "a:p|dpPath.distance"), "0");
    }

    #[test]
    fn reducer_semantics_match_contract() {
        let seq = |v: &[&str]| reduce(&v.iter().map(|s| s.to_string()).collect::<Vec<_>>(), Some(Reducer::Seq));
        let nodup = |v: &[&str]| reduce(&v.iter().map(|s| s.to_string()).collect::<Vec<_>>(), Some(Reducer::NoDup));
        let bag = |v: &[&str]| reduce(&v.iter().map(|s| s.to_string()).collect::<Vec<_>>(), Some(Reducer::Bag));
        assert_eq!(seq(&["NMOD", "NMOD", "SBJ"]), "NMOD#NMOD#SBJ");
        assert_eq!(nodup(&["NMOD", "NMOD", "SBJ"]), "NMOD#SBJ");
        assert_eq!(bag(&["SBJ", "NMOD", "SBJ"]), "NMOD#SBJ");
        // All three agree on singletons.
        for r in [Reducer::Seq, Reducer::NoDup, Reducer::Bag] {
            assert_eq!(reduce(&["X".to_string()], Some(r)), "X");
        }
        assert_eq!(reduce(&[], Some(Reducer::Bag)), NIL);
    }

    proptest! {
        #[test]
        fn reducer_laws(elems in proptest::collection::vec("[a-c]{1,2}", 0..8)) {
            let seq = reduce(&elems, Some(Reducer::Seq));
            let nodup = reduce(&elems, Some(Reducer::NoDup));
            let bag = reduce(&elems, Some(Reducer::Bag));
            if !elems.is_empty() {
                // seq preserves order and multiplicity.
                prop_assert_eq!(seq.split('#').collect::<Vec<_>>(), elems.iter().map(|s| s.as_str()).collect::<Vec<_>>());
                // noDup has no two adjacent equal tokens and is a subsequence of seq.
                let nd: Vec<&str> = nodup.split('#').collect();
                for w in nd.windows(2) {
                    prop_assert_ne!(w[0], w[1]);
                }
                let mut it = elems.iter();
                for d in &nd {
                    prop_assert!(it.any(|e| e == d));
                }
                // bag is sorted, duplicate-free and permutation-invariant.
                let b: Vec<&str> = bag.split('#').collect();
                let mut sorted = b.clone();
                sorted.sort_unstable();
                sorted.dedup();
                prop_assert_eq!(&b, &sorted);
                let mut shuffled = elems.clone();
                shuffled.reverse();
                prop_assert_eq!(bag, reduce(&shuffled, Some(Reducer::Bag)));
            } else {
                prop_assert_eq!(&seq, NIL);
                prop_assert_eq!(&nodup, NIL);
                prop_assert_eq!(&bag, NIL);
            }
        }
    }

    #[test]
    fn partial_structure_probes() {
        let mut fx = Fixture::example();
        fx.partial.assign_sense(3, "01");
        fx.partial.assign_role(3, 2, "A1");
        fx.partial.assign_role(3, 4, "C-A1");
        assert_eq!(eval(&fx, Some(3), 7, "p.currentSense + p.lemma"), "01#shift");
        assert_eq!(eval(&fx, Some(3), 2, "a.semdprel"), "A1");
        assert_eq!(eval(&fx, Some(3), 2, "a.semdprel = A1 ?"), "1");
        assert_eq!(eval(&fx, Some(3), 2, "a.semdprel = A2 ?"), "0");
        assert_eq!(eval(&fx, Some(3), 7, "a.existSemdprel_A1"), "1");
        assert_eq!(eval(&fx, Some(3), 7, "a.existSemdprel_A0"), "0");
        assert_eq!(eval(&fx, Some(3), 7, "p.ctypeSemdprel"), "A1");
        assert_eq!(eval(&fx, Some(3), 7, "p.isCtypeSemdprel"), "1");
        assert_eq!(eval(&fx, Some(3), 7, "p.rtypeSemdprel"), NIL);
        assert_eq!(eval(&fx, Some(3), 7, "p.isRtypeSemdprel"), "0");
        // Unassigned semdprel probes equal against another NIL value.
        assert_eq!(eval(&fx, Some(3), 5, "a.semdprel = p.rtypeSemdprel ?"), "1");
    }

    #[test]
    fn exist_cross_detects_interleaving() {
        let mut fx = Fixture::example();
        // Edge 2-5 interleaves with the span 3..6: exactly one endpoint
        // falls strictly inside it.
        fx.partial.assign_role(2, 5, "A0");
        assert_eq!(eval(&fx, Some(3), 6, "a:p.existCross"), "1");
        assert_eq!(eval(&fx, Some(3), 2, "a:p.existCross"), "0");
        // Nested spans do not cross.
        assert_eq!(eval(&fx, Some(8), 1, "a:p.existCross"), "0");
        assert_eq!(eval(&fx, Some(4), 3, "a:p.existCross"), "0");
    }

    #[test]
    fn is_cur_pred_marks_the_self_candidate() {
        let fx = Fixture::example();
        assert_eq!(eval(&fx, Some(3), 3, "a.isCurPred.lemma"), "shift");
        assert_eq!(eval(&fx, Some(3), 2, "a.isCurPred.lemma"), NIL);
        assert_eq!(eval(&fx, None, 3, "a.isCurPred.lemma"), NIL);
        assert_eq!(eval(&fx, Some(3), 4, "a-1.isCurPred.lemma"), "shift");
    }

    #[test]
    fn voice_rule() {
        let tokens = vec![
            Token::new(1, "was", "be", "VBD", 2, "VC", None),
            Token::new(2, "shifted", "shift", "VBN", 0, "ROOT", None),
            Token::new(3, "focus", "focus", "NN", 2, "SBJ", None),
            Token::new(4, "moved", "move", "VBD", 2, "CONJ", None),
        ];
        let sentence = Sentence::new(tokens, vec![]).unwrap();
        let graph = DepGraph::new(&sentence);
        let partial = PartialParse::new(sentence.len());
        let fx = Fixture {
            sentence,
            graph,
            classes: PosClasses::default(),
            partial,
        };
        assert_eq!(eval(&fx, Some(2), 2, "a.voice"), "Passive");
        assert_eq!(eval(&fx, Some(2), 4, "a.voice"), "Active");
        assert_eq!(eval(&fx, Some(2), 3, "a.voice"), NIL);
    }

    #[test]
    fn baseline_features() {
        let fx = Fixture::example();
        // Around predicate 3: nearest noun left is 2, nearest right is 6.
        assert_eq!(eval(&fx, Some(3), 2, "a.baseline_Ax"), "A0");
        assert_eq!(eval(&fx, Some(3), 6, "a.baseline_Ax"), "A1");
        assert_eq!(eval(&fx, Some(3), 1, "a.baseline_Ax"), NIL);
        assert_eq!(eval(&fx, Some(3), 2, "a.spPos.baseline_Ax"), "NN#A0");

        let tokens = vec![
            Token::new(1, "can", "can", "MD", 2, "VC", None),
            Token::new(2, "go", "go", "VB", 0, "ROOT", None),
        ];
        let sentence = Sentence::new(tokens, vec![]).unwrap();
        let graph = DepGraph::new(&sentence);
        let partial = PartialParse::new(sentence.len());
        let fx2 = Fixture {
            sentence,
            graph,
            classes: PosClasses::default(),
            partial,
        };
        assert_eq!(eval(&fx2, Some(2), 1, "a.baseline_Mod"), "AM-MOD");
        assert_eq!(eval(&fx2, Some(2), 2, "a.baseline_Mod"), NIL);
    }

    #[test]
    fn evaluation_is_local_and_deterministic() {
        let fx = Fixture::example();
        let t = FeatureTemplate::parse("a.lm.lemma + a:p|dpPath.dprel.seq").unwrap();
        let v1 = fx.ctx(Some(7), 3).evaluate(&t);
        let v2 = fx.ctx(Some(7), 3).evaluate(&t);
        assert_eq!(v1, v2);

        // Changing a token outside every touched navigation leaves the value
        // unchanged.
        let mut other = example_sentence();
        other.tokens[7].form = "!".into();
        other.tokens[7].lemma = "!".into();
        let graph = DepGraph::new(&other);
        let partial = PartialParse::new(other.len());
        let ctx = EvalContext {
            sentence: &other,
            graph: &graph,
            classes: &fx.classes,
            partial: &partial,
            head: Some(7),
            dependent: 3,
            bucket_distance: true,
        };
        assert_eq!(ctx.evaluate(&t), v1);
    }

    #[test]
    fn escaping_keeps_tokens_apart() {
        let tokens = vec![
            Token::new(1, "x#y", "x=y", "NN", 2, "NMOD", None),
            Token::new(2, "b\\c", "b", "NN", 0, "ROOT", None),
        ];
        let sentence = Sentence::new(tokens, vec![]).unwrap();
        let graph = DepGraph::new(&sentence);
        let partial = PartialParse::new(sentence.len());
        let fx = Fixture {
            sentence,
            graph,
            classes: PosClasses::default(),
            partial,
        };
        assert_eq!(eval(&fx, Some(2), 1, "a.form"), "x\\#y");
        assert_eq!(eval(&fx, Some(2), 1, "a.lemma"), "x\\=y");
        assert_eq!(eval(&fx, Some(2), 2, "a.form"), "b\\\\c");
        // The escaped form can never equal the NIL token.
        let tokens = vec![Token::new(1, "\\N", "\\N", "NN", 0, "ROOT", None)];
        let sentence = Sentence::new(tokens, vec![]).unwrap();
        let graph = DepGraph::new(&sentence);
        let partial = PartialParse::new(sentence.len());
        let fx2 = Fixture {
            sentence,
            graph,
            classes: PosClasses::default(),
            partial,
        };
        assert_eq!(eval(&fx2, None, 1, "a.form"), "\\\\N");
        assert_ne!(eval(&fx2, None, 1, "a.form"), NIL);
    }

    #[test]
    fn evaluate_all_is_order_stable() {
        let fx = Fixture::example();
        let set = TemplateSet::parse_lines(
            "t",
            "p.lm.dprel\na:p|dpPath.dprel\na.lemma + p.lemma\na.lemma + a.dprel + a.h.lemma\na.spLemma + p.spLemma\n",
        )
        .unwrap();
        let ctx = fx.ctx(Some(3), 2);
        let feats = set.evaluate_all(&ctx);
        assert_eq!(feats.len(), 5);
        assert_eq!(feats[0], "p.lm.dprel=SBJ");
        assert_eq!(feats[2], "a.lemma + p.lemma=focus#shift");
        let empty = TemplateSet::new("empty", vec![]).unwrap();
        assert!(empty.evaluate_all(&ctx).is_empty());
    }

    #[test]
    fn frames_do_not_leak_into_syntax_probes() {
        // semdprel reads the partial structure, not gold frames.
        let s = example_sentence();
        assert_eq!(s.frames.len(), 3);
        let fx = Fixture::example();
        assert_eq!(eval(&fx, Some(3), 2, "a.semdprel"), NIL);
        let _ = SemanticFrame::new(3, "01", vec![(2, "A1".into())]).unwrap();
    }
}
