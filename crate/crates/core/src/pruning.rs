//! Word-pair generation: POS-pruned predicate candidates, synPth/linPth
//! argument-candidate traversal, and adaptive auxiliary-label assignment.
//!
//! Along synPth the candidates come in levels: the predicate's children, the
//! predicate itself (nominal predicates only), then alternately each ancestor
//! and that ancestor's not-yet-seen children, up to and including the root.
//! Along linPth the predicate itself is followed by the left and the right
//! directional stream. Training samples are cut adaptively: once every
//! reachable gold argument has been emitted, the first candidate of the next
//! level gets `noMoreArg` (synPth), or the first token past the outermost
//! gold argument of a direction gets `noMoreLeftArg`/`noMoreRightArg`
//! (linPth), and traversal stops there.

use serde::Serialize;

use crate::conll::Sentence;
use crate::deptree::DepGraph;
use crate::labels::{PairLabel, TraverseScheme};
use crate::pos::PosClasses;

/// Display form of the virtual-root head cell.
pub const VIRTUAL_ROOT: &str = "_VR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairStage {
    Predicate,
    Argument,
}

/// One classification instance. `head == None` is the virtual root, which by
/// invariant happens exactly for predicate-stage pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPair {
    pub head: Option<usize>,
    pub dependent: usize,
    pub stage: PairStage,
    pub label: Option<PairLabel>,
}

impl WordPair {
    pub fn predicate_stage(dependent: usize, label: Option<PairLabel>) -> WordPair {
        WordPair {
            head: None,
            dependent,
            stage: PairStage::Predicate,
            label,
        }
    }

    pub fn argument_stage(head: usize, dependent: usize, label: Option<PairLabel>) -> WordPair {
        WordPair {
            head: Some(head),
            dependent,
            stage: PairStage::Argument,
            label,
        }
    }
}

/// Predicate candidates: verbs and nouns, in text order.
pub fn predicate_candidates(sentence: &Sentence, classes: &PosClasses) -> Vec<usize> {
    sentence
        .tokens
        .iter()
        .filter(|t| classes.is_predicate_candidate(&t.pos))
        .map(|t| t.id)
        .collect()
}

/// Ordered candidate levels along the syntactic tree.
pub fn syn_traverse(predicate: usize, graph: &DepGraph, is_nominal: bool) -> Vec<Vec<usize>> {
    let mut seen = vec![false; graph.len()];
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let push = |level: Vec<usize>, seen: &mut Vec<bool>, levels: &mut Vec<Vec<usize>>| {
        if !level.is_empty() {
            for &c in &level {
                seen[c - 1] = true;
            }
            levels.push(level);
        }
    };

    push(graph.children(predicate).to_vec(), &mut seen, &mut levels);
    seen[predicate - 1] = true;
    if is_nominal {
        push(vec![predicate], &mut seen, &mut levels);
    }
    for ancestor in graph.ancestors(predicate) {
        if !seen[ancestor - 1] {
            push(vec![ancestor], &mut seen, &mut levels);
        }
        let children: Vec<usize> = graph
            .children(ancestor)
            .iter()
            .copied()
            .filter(|&c| !seen[c - 1])
            .collect();
        push(children, &mut seen, &mut levels);
    }
    levels
}

/// Directional candidate streams along the word sequence. The predicate
/// itself is a candidate once, before the streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinTraversal {
    pub predicate: usize,
    /// p-1, p-2, … toward the sentence start.
    pub left: Vec<usize>,
    /// p+1, p+2, … toward the sentence end.
    pub right: Vec<usize>,
}

pub fn lin_traverse(predicate: usize, sentence_len: usize) -> LinTraversal {
    LinTraversal {
        predicate,
        left: (1..predicate).rev().collect(),
        right: (predicate + 1..=sentence_len).collect(),
    }
}

fn is_nominal_predicate(sentence: &Sentence, predicate: usize, classes: &PosClasses) -> bool {
    classes.is_noun(&sentence.token(predicate).pos)
}

/// Labeled training pairs for one sentence: predicate-stage pairs for every
/// POS candidate, then argument-stage pairs per gold predicate in traversal
/// order with the adaptive stop rule applied.
pub fn generate_training_pairs(
    sentence: &Sentence,
    graph: &DepGraph,
    scheme: TraverseScheme,
    classes: &PosClasses,
) -> Vec<WordPair> {
    let mut pairs = Vec::new();
    for candidate in predicate_candidates(sentence, classes) {
        let label = match sentence.frame_of(candidate) {
            Some(frame) => PairLabel::Sense(frame.sense.clone()),
            None => PairLabel::NonePred,
        };
        pairs.push(WordPair::predicate_stage(candidate, Some(label)));
    }
    for frame in &sentence.frames {
        let p = frame.predicate_id;
        match scheme {
            TraverseScheme::SynPth => {
                let nominal = is_nominal_predicate(sentence, p, classes);
                let levels = syn_traverse(p, graph, nominal);
                let reachable: usize = levels
                    .iter()
                    .flatten()
                    .filter(|c| frame.role_of(**c).is_some())
                    .count();
                let mut remaining = reachable;
                for level in &levels {
                    if remaining == 0 {
                        pairs.push(WordPair::argument_stage(
                            p,
                            level[0],
                            Some(PairLabel::NoMoreArg),
                        ));
                        break;
                    }
                    for &c in level {
                        let label = match frame.role_of(c) {
                            Some(role) => {
                                remaining -= 1;
                                PairLabel::Role(role.to_string())
                            }
                            None => PairLabel::NoneArg,
                        };
                        pairs.push(WordPair::argument_stage(p, c, Some(label)));
                    }
                }
            }
            TraverseScheme::LinPth => {
                let t = lin_traverse(p, sentence.len());
                let self_label = match frame.role_of(p) {
                    Some(role) => PairLabel::Role(role.to_string()),
                    None => PairLabel::NoneArg,
                };
                pairs.push(WordPair::argument_stage(p, p, Some(self_label)));
                for (stream, stop) in [
                    (&t.left, PairLabel::NoMoreLeftArg),
                    (&t.right, PairLabel::NoMoreRightArg),
                ] {
                    let outermost = stream
                        .iter()
                        .rposition(|c| frame.role_of(*c).is_some());
                    for (i, &c) in stream.iter().enumerate() {
                        match outermost {
                            Some(last) if i <= last => {
                                let label = match frame.role_of(c) {
                                    Some(role) => PairLabel::Role(role.to_string()),
                                    None => PairLabel::NoneArg,
                                };
                                pairs.push(WordPair::argument_stage(p, c, Some(label)));
                            }
                            _ => {
                                pairs.push(WordPair::argument_stage(p, c, Some(stop)));
                                break;
                            }
                        }
                    }
                }
            }
        }
    }
    pairs
}

/// The same traversal without the adaptive cut: every candidate labeled with
/// its gold role or NONE_ARG, no auxiliary labels.
pub fn generate_training_pairs_full(
    sentence: &Sentence,
    graph: &DepGraph,
    scheme: TraverseScheme,
    classes: &PosClasses,
) -> Vec<WordPair> {
    let mut pairs = Vec::new();
    for candidate in predicate_candidates(sentence, classes) {
        let label = match sentence.frame_of(candidate) {
            Some(frame) => PairLabel::Sense(frame.sense.clone()),
            None => PairLabel::NonePred,
        };
        pairs.push(WordPair::predicate_stage(candidate, Some(label)));
    }
    for frame in &sentence.frames {
        let p = frame.predicate_id;
        let candidates: Vec<usize> = match scheme {
            TraverseScheme::SynPth => {
                let nominal = is_nominal_predicate(sentence, p, classes);
                syn_traverse(p, graph, nominal).into_iter().flatten().collect()
            }
            TraverseScheme::LinPth => {
                let t = lin_traverse(p, sentence.len());
                let mut v = vec![p];
                v.extend(&t.left);
                v.extend(&t.right);
                v
            }
        };
        for c in candidates {
            let label = match frame.role_of(c) {
                Some(role) => PairLabel::Role(role.to_string()),
                None => PairLabel::NoneArg,
            };
            pairs.push(WordPair::argument_stage(p, c, Some(label)));
        }
    }
    pairs
}

/// Candidate-count and coverage statistics of the adaptive pruning over a
/// corpus, per gold predicate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PruneStats {
    /// Gold predicates x (sentence length - 1): the no-pruning pair count.
    pub pairs_all: u64,
    /// Argument pairs emitted by the full (non-adaptive) traversal.
    pub pairs_before: u64,
    /// Argument pairs emitted by the adaptive traversal, stop rows included.
    pub pairs_after: u64,
    pub gold_args: u64,
    pub reachable_gold_args: u64,
    /// Relative change of `pairs_after` against `pairs_before`, in percent;
    /// negative means the adaptive cut removed candidates.
    pub reduction_pct: f64,
    /// Share of gold arguments present among the pruned candidates, in
    /// percent; 100.0 when there are no gold arguments.
    pub coverage_pct: f64,
}

pub fn coverage_and_reduction_stats(
    corpus: &[Sentence],
    scheme: TraverseScheme,
    classes: &PosClasses,
) -> PruneStats {
    let mut pairs_all = 0u64;
    let mut pairs_before = 0u64;
    let mut pairs_after = 0u64;
    let mut gold_args = 0u64;
    let mut reachable = 0u64;

    for sentence in corpus {
        let graph = DepGraph::new(sentence);
        let arg_pairs = |pairs: &[WordPair]| {
            pairs.iter().filter(|p| p.stage == PairStage::Argument).count() as u64
        };
        pairs_before += arg_pairs(&generate_training_pairs_full(
            sentence, &graph, scheme, classes,
        ));
        pairs_after += arg_pairs(&generate_training_pairs(sentence, &graph, scheme, classes));
        for frame in &sentence.frames {
            let p = frame.predicate_id;
            pairs_all += (sentence.len() - 1) as u64;
            gold_args += frame.arguments.len() as u64;
            let candidates: Vec<usize> = match scheme {
                TraverseScheme::SynPth => {
                    let nominal = is_nominal_predicate(sentence, p, classes);
                    syn_traverse(p, &graph, nominal).into_iter().flatten().collect()
                }
                TraverseScheme::LinPth => (1..=sentence.len()).collect(),
            };
            reachable += frame
                .arguments
                .iter()
                .filter(|(id, _)| candidates.contains(id))
                .count() as u64;
        }
    }

    let reduction_pct = if pairs_before == 0 {
        0.0
    } else {
        100.0 * (pairs_after as f64 / pairs_before as f64 - 1.0)
    };
    let coverage_pct = if gold_args == 0 {
        100.0
    } else {
        100.0 * reachable as f64 / gold_args as f64
    };
    PruneStats {
        pairs_all,
        pairs_before,
        pairs_after,
        gold_args,
        reachable_gold_args: reachable,
        reduction_pct,
        coverage_pct,
    }
}
