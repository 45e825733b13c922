//! Decoding: predicate identification followed by per-predicate beam search
//! over argument-candidate streams.
//!
//! Candidates stream in the same order as training-pair generation. Every
//! classified pair, NONE and stop labels included, contributes its
//! log-probability to the hypothesis score. A hypothesis that assigns a stop
//! label skips the rest of its stream: `noMoreArg` ends the whole syntactic
//! traversal, `noMoreLeftArg`/`noMoreRightArg` end one direction. Ties break
//! deterministically: higher score, then fewer assigned arguments, then
//! lexicographically smaller label-id sequence; per-pair argmax prefers the
//! lower label index.

use std::rc::Rc;

use thiserror::Error;

use crate::conll::{SemanticFrame, Sentence};
use crate::deptree::DepGraph;
use crate::labels::{PairLabel, TraverseScheme};
use crate::maxent::MaxEntModel;
use crate::pos::PosClasses;
use crate::pruning::{lin_traverse, predicate_candidates, syn_traverse};
use crate::templates::{EvalContext, PartialParse, TemplateSet};

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("exhaustive decoding over {candidates} candidates exceeds the cap of {cap}")]
    CapExceeded { candidates: usize, cap: usize },
    #[error("invalid frame from decoder: {0}")]
    Frame(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeConfig {
    pub beam_width: usize,
    pub scheme: TraverseScheme,
    /// Candidate-count cap for the exhaustive oracle.
    pub exhaustive_cap: usize,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            beam_width: 8,
            scheme: TraverseScheme::SynPth,
            exhaustive_cap: 8,
        }
    }
}

/// Model bundle the decoder scores pairs with.
#[derive(Debug, Clone, Copy)]
pub struct Scorer<'a> {
    pub model: &'a MaxEntModel,
    pub templates: &'a TemplateSet,
    pub classes: &'a PosClasses,
    pub bucket_distance: bool,
}

/// Stage masks over the model's label list, with parsed label semantics.
#[derive(Debug, Clone)]
pub struct LabelMasks {
    /// Label ids admissible for (VR, candidate) pairs.
    pub predicate: Vec<usize>,
    /// Label ids admissible for argument-stage pairs.
    pub argument: Vec<usize>,
    parsed: Vec<Option<PairLabel>>,
}

impl LabelMasks {
    pub fn for_model(model: &MaxEntModel) -> LabelMasks {
        let parsed: Vec<Option<PairLabel>> = model
            .labels()
            .iter()
            .map(|l| PairLabel::parse(l))
            .collect();
        let mut predicate = Vec::new();
        let mut argument = Vec::new();
        for (i, p) in parsed.iter().enumerate() {
            match p {
                Some(l) if l.is_predicate_stage() => predicate.push(i),
                Some(_) => argument.push(i),
                None => {}
            }
        }
        LabelMasks {
            predicate,
            argument,
            parsed,
        }
    }

    fn label(&self, id: usize) -> &PairLabel {
        self.parsed[id].as_ref().expect("masked ids parse")
    }
}

impl<'a> Scorer<'a> {
    fn features(
        &self,
        sentence: &Sentence,
        graph: &DepGraph,
        partial: &PartialParse,
        head: Option<usize>,
        dependent: usize,
    ) -> Vec<String> {
        let ctx = EvalContext {
            sentence,
            graph,
            classes: self.classes,
            partial,
            head,
            dependent,
            bucket_distance: self.bucket_distance,
        };
        self.templates.evaluate_all(&ctx)
    }

    fn log_probs(
        &self,
        sentence: &Sentence,
        graph: &DepGraph,
        partial: &PartialParse,
        head: Option<usize>,
        dependent: usize,
        allowed: &[usize],
    ) -> Vec<f64> {
        let features = self.features(sentence, graph, partial, head, dependent);
        let refs: Vec<&str> = features.iter().map(|f| f.as_str()).collect();
        self.model.predict_log_proba_masked(&refs, allowed)
    }
}

/// Classifies every POS-filtered candidate against the virtual root, in text
/// order, recording accepted senses in `partial` so later pairs see them.
/// Ties prefer the lower label index.
pub fn identify_predicates(
    sentence: &Sentence,
    graph: &DepGraph,
    scorer: &Scorer<'_>,
    masks: &LabelMasks,
    partial: &mut PartialParse,
) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    if masks.predicate.is_empty() {
        return out;
    }
    for candidate in predicate_candidates(sentence, scorer.classes) {
        let logps = scorer.log_probs(sentence, graph, partial, None, candidate, &masks.predicate);
        let mut best = 0;
        for (i, lp) in logps.iter().enumerate() {
            if *lp > logps[best] {
                best = i;
            }
        }
        if let PairLabel::Sense(sense) = masks.label(masks.predicate[best]) {
            let sense = sense.clone();
            partial.assign_sense(candidate, &sense);
            out.push((candidate, sense));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StreamTag {
    Syn,
    SelfCand,
    Left,
    Right,
}

/// Argument-candidate stream for decoding: the same traversal order as
/// training, without the adaptive cut.
pub fn decode_candidates(
    scheme: TraverseScheme,
    predicate: usize,
    sentence: &Sentence,
    graph: &DepGraph,
    classes: &PosClasses,
) -> Vec<usize> {
    tagged_candidates(scheme, predicate, sentence, graph, classes)
        .into_iter()
        .map(|(c, _)| c)
        .collect()
}

fn tagged_candidates(
    scheme: TraverseScheme,
    predicate: usize,
    sentence: &Sentence,
    graph: &DepGraph,
    classes: &PosClasses,
) -> Vec<(usize, StreamTag)> {
    match scheme {
        TraverseScheme::SynPth => {
            let nominal = classes.is_noun(&sentence.token(predicate).pos);
            syn_traverse(predicate, graph, nominal)
                .into_iter()
                .flatten()
                .map(|c| (c, StreamTag::Syn))
                .collect()
        }
        TraverseScheme::LinPth => {
            let t = lin_traverse(predicate, sentence.len());
            let mut out = vec![(predicate, StreamTag::SelfCand)];
            out.extend(t.left.iter().map(|&c| (c, StreamTag::Left)));
            out.extend(t.right.iter().map(|&c| (c, StreamTag::Right)));
            out
        }
    }
}

#[derive(Debug, Clone)]
struct Hypothesis {
    score: f64,
    labels: Vec<usize>,
    args: Vec<(usize, String)>,
    partial: Rc<PartialParse>,
    halted_all: bool,
    halted_left: bool,
    halted_right: bool,
}

impl Hypothesis {
    fn root(partial: PartialParse) -> Hypothesis {
        Hypothesis {
            score: 0.0,
            labels: Vec::new(),
            args: Vec::new(),
            partial: Rc::new(partial),
            halted_all: false,
            halted_right: false,
            halted_left: false,
        }
    }

    fn skips(&self, tag: StreamTag) -> bool {
        self.halted_all
            || (tag == StreamTag::Left && self.halted_left)
            || (tag == StreamTag::Right && self.halted_right)
    }

    fn extend(
        &self,
        predicate: usize,
        candidate: usize,
        label_id: usize,
        label: &PairLabel,
        logp: f64,
    ) -> Hypothesis {
        let mut h = self.clone();
        h.score += logp;
        h.labels.push(label_id);
        match label {
            PairLabel::Role(role) => {
                h.args.push((candidate, role.clone()));
                Rc::make_mut(&mut h.partial).assign_role(predicate, candidate, role);
            }
            PairLabel::NoMoreArg => h.halted_all = true,
            PairLabel::NoMoreLeftArg => h.halted_left = true,
            PairLabel::NoMoreRightArg => h.halted_right = true,
            _ => {}
        }
        h
    }

    /// Higher score first, then fewer arguments, then the lexicographically
    /// smaller label sequence.
    fn rank_key(&self) -> (f64, usize, &[usize]) {
        (self.score, self.args.len(), &self.labels)
    }
}

fn better(a: &Hypothesis, b: &Hypothesis) -> std::cmp::Ordering {
    let (sa, na, la) = a.rank_key();
    let (sb, nb, lb) = b.rank_key();
    sb.total_cmp(&sa)
        .then_with(|| na.cmp(&nb))
        .then_with(|| la.cmp(lb))
}

/// Beam search over one predicate's argument candidates. `partial` is the
/// sentence-level structure decoded so far (senses plus earlier frames).
pub fn beam_decode_arguments(
    predicate: usize,
    sentence: &Sentence,
    graph: &DepGraph,
    scorer: &Scorer<'_>,
    masks: &LabelMasks,
    config: &DecodeConfig,
    partial: &PartialParse,
) -> Vec<(usize, String)> {
    let best = beam_best_hypothesis(predicate, sentence, graph, scorer, masks, config, partial);
    best.map(|h| h.args).unwrap_or_default()
}

/// Best complete hypothesis and its score; `None` only for an empty label
/// mask.
pub fn beam_decode_scored(
    predicate: usize,
    sentence: &Sentence,
    graph: &DepGraph,
    scorer: &Scorer<'_>,
    masks: &LabelMasks,
    config: &DecodeConfig,
    partial: &PartialParse,
) -> Option<(Vec<(usize, String)>, f64)> {
    beam_best_hypothesis(predicate, sentence, graph, scorer, masks, config, partial)
        .map(|h| (h.args, h.score))
}

fn beam_best_hypothesis(
    predicate: usize,
    sentence: &Sentence,
    graph: &DepGraph,
    scorer: &Scorer<'_>,
    masks: &LabelMasks,
    config: &DecodeConfig,
    partial: &PartialParse,
) -> Option<Hypothesis> {
    if masks.argument.is_empty() {
        return None;
    }
    let stream = tagged_candidates(config.scheme, predicate, sentence, graph, scorer.classes);
    let width = config.beam_width.max(1);
    let mut beams = vec![Hypothesis::root(partial.clone())];
    for (candidate, tag) in stream {
        let mut next: Vec<Hypothesis> = Vec::with_capacity(beams.len() * masks.argument.len());
        for h in &beams {
            if h.skips(tag) {
                next.push(h.clone());
                continue;
            }
            let logps = scorer.log_probs(
                sentence,
                graph,
                &h.partial,
                Some(predicate),
                candidate,
                &masks.argument,
            );
            for (i, &label_id) in masks.argument.iter().enumerate() {
                next.push(h.extend(
                    predicate,
                    candidate,
                    label_id,
                    masks.label(label_id),
                    logps[i],
                ));
            }
        }
        next.sort_by(better);
        next.truncate(width);
        beams = next;
    }
    beams.into_iter().next()
}

/// True argmax over all halting label assignments, by depth-first
/// enumeration; the Eq-style test oracle for the beam.
pub fn exhaustive_decode(
    predicate: usize,
    sentence: &Sentence,
    graph: &DepGraph,
    scorer: &Scorer<'_>,
    masks: &LabelMasks,
    scheme: TraverseScheme,
    cap: usize,
    partial: &PartialParse,
) -> Result<Vec<(usize, String)>, DecodeError> {
    exhaustive_decode_scored(predicate, sentence, graph, scorer, masks, scheme, cap, partial)
        .map(|r| r.map(|(args, _)| args).unwrap_or_default())
}

#[allow(clippy::too_many_arguments)]
pub fn exhaustive_decode_scored(
    predicate: usize,
    sentence: &Sentence,
    graph: &DepGraph,
    scorer: &Scorer<'_>,
    masks: &LabelMasks,
    scheme: TraverseScheme,
    cap: usize,
    partial: &PartialParse,
) -> Result<Option<(Vec<(usize, String)>, f64)>, DecodeError> {
    if masks.argument.is_empty() {
        return Ok(None);
    }
    let stream = tagged_candidates(scheme, predicate, sentence, graph, scorer.classes);
    if stream.len() > cap {
        return Err(DecodeError::CapExceeded {
            candidates: stream.len(),
            cap,
        });
    }

    fn dfs(
        pos: usize,
        stream: &[(usize, StreamTag)],
        hyp: &Hypothesis,
        predicate: usize,
        sentence: &Sentence,
        graph: &DepGraph,
        scorer: &Scorer<'_>,
        masks: &LabelMasks,
        best: &mut Option<Hypothesis>,
    ) {
        if pos == stream.len() {
            let replace = match best {
                None => true,
                Some(b) => better(hyp, b) == std::cmp::Ordering::Less,
            };
            if replace {
                *best = Some(hyp.clone());
            }
            return;
        }
        let (candidate, tag) = stream[pos];
        if hyp.skips(tag) {
            dfs(
                pos + 1,
                stream,
                hyp,
                predicate,
                sentence,
                graph,
                scorer,
                masks,
                best,
            );
            return;
        }
        let logps = scorer.log_probs(
            sentence,
            graph,
            &hyp.partial,
            Some(predicate),
            candidate,
            &masks.argument,
        );
        for (i, &label_id) in masks.argument.iter().enumerate() {
            let next = hyp.extend(predicate, candidate, label_id, masks.label(label_id), logps[i]);
            dfs(
                pos + 1,
                stream,
                &next,
                predicate,
                sentence,
                graph,
                scorer,
                masks,
                best,
            );
        }
    }

    let root = Hypothesis::root(partial.clone());
    let mut best: Option<Hypothesis> = None;
    dfs(
        0,
        &stream,
        &root,
        predicate,
        sentence,
        graph,
        scorer,
        masks,
        &mut best,
    );
    Ok(best.map(|h| (h.args, h.score)))
}

/// Full sentence decoding: predicates in text order, then each predicate's
/// arguments; later predicates see earlier frames through the partial
/// structure.
pub fn parse_sentence(
    sentence: &Sentence,
    graph: &DepGraph,
    scorer: &Scorer<'_>,
    masks: &LabelMasks,
    config: &DecodeConfig,
) -> Result<Vec<SemanticFrame>, DecodeError> {
    let mut partial = PartialParse::new(sentence.len());
    let predicates = identify_predicates(sentence, graph, scorer, masks, &mut partial);
    let mut frames = Vec::with_capacity(predicates.len());
    for (node, sense) in predicates {
        let args = beam_decode_arguments(node, sentence, graph, scorer, masks, config, &partial);
        for (arg, role) in &args {
            partial.assign_role(node, *arg, role);
        }
        let mut arguments = args;
        arguments.sort_unstable_by_key(|(id, _)| *id);
        let frame = SemanticFrame::new(node, &sense, arguments)
            .map_err(|e| DecodeError::Frame(e.to_string()))?;
        frames.push(frame);
    }
    Ok(frames)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::example_sentence;
    use crate::labels::LabelSet;
    use crate::templates::TemplateSet;

    fn uniform_setup(
        scheme: TraverseScheme,
    ) -> (MaxEntModel, TemplateSet, PosClasses) {
        let labels = LabelSet::standard(scheme);
        let model = MaxEntModel::uniform(labels.labels());
        let templates = TemplateSet::parse_lines("t", "a.lemma\n").unwrap();
        (model, templates, PosClasses::default())
    }

    #[test]
    fn masks_split_by_stage() {
        let (model, _, _) = uniform_setup(TraverseScheme::SynPth);
        let masks = LabelMasks::for_model(&model);
        assert_eq!(masks.predicate.len(), 22);
        assert_eq!(masks.argument.len(), 56);
        let (model, _, _) = uniform_setup(TraverseScheme::LinPth);
        let masks = LabelMasks::for_model(&model);
        assert_eq!(masks.argument.len(), 57);
    }

    #[test]
    fn uniform_model_ties_break_to_first_sense() {
        let s = example_sentence();
        let g = DepGraph::new(&s);
        let (model, templates, classes) = uniform_setup(TraverseScheme::SynPth);
        let scorer = Scorer {
            model: &model,
            templates: &templates,
            classes: &classes,
            bucket_distance: true,
        };
        let masks = LabelMasks::for_model(&model);
        let mut partial = PartialParse::new(s.len());
        let preds = identify_predicates(&s, &g, &scorer, &masks, &mut partial);
        // All ties: the lowest label index is sense "01", so every candidate
        // is accepted with it.
        assert_eq!(preds.len(), 5);
        assert!(preds.iter().all(|(_, sense)| sense == "01"));
        assert_eq!(partial.sense_of(2), Some("01"));
    }

    #[test]
    fn uniform_model_halts_immediately() {
        let s = example_sentence();
        let g = DepGraph::new(&s);
        for scheme in [TraverseScheme::SynPth, TraverseScheme::LinPth] {
            let (model, templates, classes) = uniform_setup(scheme);
            let scorer = Scorer {
                model: &model,
                templates: &templates,
                classes: &classes,
                bucket_distance: true,
            };
            let masks = LabelMasks::for_model(&model);
            let partial = PartialParse::new(s.len());
            let config = DecodeConfig {
                beam_width: 8,
                scheme,
                exhaustive_cap: 10,
            };
            let args =
                beam_decode_arguments(3, &s, &g, &scorer, &masks, &config, &partial);
            assert!(args.is_empty(), "{scheme}: {args:?}");
        }
    }

    /// A uniform model over a small label list keeps the oracle enumeration
    /// tractable.
    fn small_uniform(scheme: TraverseScheme) -> (MaxEntModel, TemplateSet, PosClasses) {
        let mut labels: Vec<String> = vec!["01".into(), "NONE_PRED".into(), "A0".into()];
        labels.push("NONE_ARG".into());
        match scheme {
            TraverseScheme::SynPth => labels.push("noMoreArg".into()),
            TraverseScheme::LinPth => {
                labels.push("noMoreLeftArg".into());
                labels.push("noMoreRightArg".into());
            }
        }
        let model = MaxEntModel::uniform(&labels);
        let templates = TemplateSet::parse_lines("t", "a.lemma\n").unwrap();
        (model, templates, PosClasses::default())
    }

    #[test]
    fn beam_matches_exhaustive_on_uniform_model() {
        let s = example_sentence();
        let g = DepGraph::new(&s);
        for scheme in [TraverseScheme::SynPth, TraverseScheme::LinPth] {
            let (model, templates, classes) = small_uniform(scheme);
            let scorer = Scorer {
                model: &model,
                templates: &templates,
                classes: &classes,
                bucket_distance: true,
            };
            let masks = LabelMasks::for_model(&model);
            let partial = PartialParse::new(s.len());
            for predicate in [2usize, 3, 7] {
                let wide = DecodeConfig {
                    beam_width: 1_000_000,
                    scheme,
                    exhaustive_cap: 10,
                };
                let (beam_args, beam_score) = beam_decode_scored(
                    predicate, &s, &g, &scorer, &masks, &wide, &partial,
                )
                .unwrap();
                let (oracle_args, oracle_score) = exhaustive_decode_scored(
                    predicate, &s, &g, &scorer, &masks, scheme, 10, &partial,
                )
                .unwrap()
                .unwrap();
                assert_eq!(beam_args, oracle_args, "{scheme} pred {predicate}");
                assert_eq!(beam_score.to_bits(), oracle_score.to_bits());
            }
        }
    }

    #[test]
    fn exhaustive_cap_is_enforced() {
        let s = example_sentence();
        let g = DepGraph::new(&s);
        let (model, templates, classes) = small_uniform(TraverseScheme::LinPth);
        let scorer = Scorer {
            model: &model,
            templates: &templates,
            classes: &classes,
            bucket_distance: true,
        };
        let masks = LabelMasks::for_model(&model);
        let partial = PartialParse::new(s.len());
        let err = exhaustive_decode(
            3,
            &s,
            &g,
            &scorer,
            &masks,
            TraverseScheme::LinPth,
            4,
            &partial,
        )
        .unwrap_err();
        assert!(matches!(err, DecodeError::CapExceeded { candidates: 8, cap: 4 }));
    }

    #[test]
    fn parsed_frames_have_no_auxiliary_labels() {
        let s = example_sentence();
        let g = DepGraph::new(&s);
        let (model, templates, classes) = uniform_setup(TraverseScheme::SynPth);
        let scorer = Scorer {
            model: &model,
            templates: &templates,
            classes: &classes,
            bucket_distance: true,
        };
        let masks = LabelMasks::for_model(&model);
        let frames =
            parse_sentence(&s, &g, &scorer, &masks, &DecodeConfig::default()).unwrap();
        // Frame construction itself rejects auxiliary labels; reaching here
        // means every decoded role was a real one.
        for f in &frames {
            for (_, role) in &f.arguments {
                assert!(crate::labels::is_role_label(role));
            }
        }
    }

    #[test]
    fn empty_sentence_parses_to_nothing() {
        let s = crate::conll::Sentence::new(vec![], vec![]).unwrap();
        let g = DepGraph::new(&s);
        let (model, templates, classes) = uniform_setup(TraverseScheme::SynPth);
        let scorer = Scorer {
            model: &model,
            templates: &templates,
            classes: &classes,
            bucket_distance: true,
        };
        let masks = LabelMasks::for_model(&model);
        let frames =
            parse_sentence(&s, &g, &scorer, &masks, &DecodeConfig::default()).unwrap();
        assert!(frames.is_empty());
    }
}
