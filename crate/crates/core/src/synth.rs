//! Deterministic synthetic corpus generation for tests and benchmarks.
//!
//! The grammar builds projective clause trees: a root verb with a subject NP,
//! an optional object NP, an optional temporal adverb, optional subordinate
//! clauses, and a final punctuation token. Every label is a deterministic
//! function of surface-observable signals, each carried by a different
//! feature, so the corpus is exactly learnable from word-pair features:
//!
//! - designated verb lemmas are predicates; sense = lemma index mod n_senses
//!   (signal: the candidate lemma);
//! - noun arguments attach with deprel ARG and take A0 left of their verb,
//!   A1 right of it; verbs may also carry a non-argument NMOD noun child
//!   (signals: deprel, direction);
//! - adverbs and determiners share one homograph modifier vocabulary and the
//!   deprel MOD; only the RB-tagged adverb under a verb is an argument,
//!   AM-TMP (signal: POS);
//! - designated nominal lemmas are predicates taking themselves as A1; the
//!   traversal stop after saturation always falls on the parent candidate,
//!   which shares deprel, POS and direction with non-argument CONJ children
//!   (signal: tree relation);
//! - optionally (`deep_arg_rate`) a verb also takes the NMOD grandchild under
//!   its object as A2, which the syntactic traversal cannot reach.
//!
//! Generation is a pure function of (seed, params): fixed seeds reproduce
//! corpora bit for bit.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::conll::{SemanticFrame, Sentence, Token};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("degenerate grammar parameters: {0}")]
    Degenerate(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrammarParams {
    pub verb_vocab: usize,
    pub noun_vocab: usize,
    /// Nominal-predicate lemmas (self-argument nouns).
    pub npred_vocab: usize,
    pub adverb_vocab: usize,
    pub det_vocab: usize,
    /// Distinct senses per POS class, at most 21.
    pub n_senses: usize,
    /// Soft cap on sentence length; optional material stops when reached.
    pub max_len: usize,
    /// Fraction of verb lemmas that are predicates.
    pub predicate_verb_fraction: f64,
    pub object_rate: f64,
    pub adverb_rate: f64,
    /// Probability that a subject/object head noun is a nominal predicate.
    pub nominal_predicate_rate: f64,
    pub det_rate: f64,
    pub nmod_rate: f64,
    /// Probability that a predicate verb takes an A2 on the NMOD grandchild
    /// under its object; such arguments are unreachable along synPth.
    pub deep_arg_rate: f64,
    pub clause_rate: f64,
    pub max_clauses: usize,
}

impl Default for GrammarParams {
    fn default() -> Self {
        GrammarParams {
            verb_vocab: 30,
            noun_vocab: 60,
            npred_vocab: 15,
            adverb_vocab: 10,
            det_vocab: 5,
            n_senses: 3,
            max_len: 24,
            predicate_verb_fraction: 0.8,
            object_rate: 0.7,
            adverb_rate: 0.4,
            nominal_predicate_rate: 0.3,
            det_rate: 0.6,
            nmod_rate: 0.35,
            deep_arg_rate: 0.0,
            clause_rate: 0.4,
            max_clauses: 2,
        }
    }
}

impl GrammarParams {
    fn validate(&self) -> Result<(), SynthError> {
        for (name, v) in [
            ("verb_vocab", self.verb_vocab),
            ("noun_vocab", self.noun_vocab),
            ("adverb_vocab", self.adverb_vocab),
            ("det_vocab", self.det_vocab),
        ] {
            if v == 0 {
                return Err(SynthError::Degenerate(format!("{name} is zero")));
            }
        }
        if self.n_senses == 0 || self.n_senses > 21 {
            return Err(SynthError::Degenerate(format!(
                "n_senses {} outside 1..=21",
                self.n_senses
            )));
        }
        if self.max_len < 4 {
            return Err(SynthError::Degenerate("max_len below 4".into()));
        }
        if (self.predicate_verb_fraction * self.verb_vocab as f64).ceil() < 1.0 {
            return Err(SynthError::Degenerate(
                "no verb lemma is a predicate".into(),
            ));
        }
        Ok(())
    }

    fn sense_of(&self, lemma_index: usize) -> String {
        format!("{:02}", lemma_index % self.n_senses + 1)
    }

    fn verb_is_predicate(&self, lemma_index: usize) -> bool {
        let cut = (self.predicate_verb_fraction * self.verb_vocab as f64).ceil() as usize;
        lemma_index < cut
    }
}

struct ProtoToken {
    form: String,
    lemma: String,
    pos: String,
    parent: Option<usize>,
    deprel: &'static str,
    pred_sense: Option<String>,
}

struct Builder<'a> {
    params: &'a GrammarParams,
    tokens: Vec<ProtoToken>,
    /// (predicate index, [(argument index, role)])
    frames: Vec<(usize, Vec<(usize, &'static str)>)>,
}

impl<'a> Builder<'a> {
    fn remaining(&self) -> usize {
        self.params.max_len.saturating_sub(self.tokens.len())
    }

    fn push(
        &mut self,
        lemma: String,
        pos: &str,
        parent: Option<usize>,
        deprel: &'static str,
        pred_sense: Option<String>,
    ) -> usize {
        self.tokens.push(ProtoToken {
            form: lemma.clone(),
            lemma,
            pos: pos.to_string(),
            parent,
            deprel,
            pred_sense,
        });
        self.tokens.len() - 1
    }

    /// `[det] [nmod] head`; returns (head index, nmod index if any).
    fn noun_phrase(
        &mut self,
        rng: &mut ChaCha8Rng,
        parent: Option<usize>,
        deprel: &'static str,
        allow_nmod: bool,
    ) -> (usize, Option<usize>) {
        let params = self.params;
        let want_det = rng.gen::<f64>() < params.det_rate;
        let want_nmod = allow_nmod && rng.gen::<f64>() < params.nmod_rate;
        let nominal_pred = rng.gen::<f64>() < params.nominal_predicate_rate;

        let det = (want_det && self.remaining() > 2).then(|| {
            let i = rng.gen_range(0..params.det_vocab);
            self.push(format!("m{i}"), "DT", None, "MOD", None)
        });
        let nmod = (want_nmod && self.remaining() > 2).then(|| {
            let i = rng.gen_range(0..params.noun_vocab);
            self.push(format!("n{i}"), "NN", None, "NMOD", None)
        });
        let head = if nominal_pred {
            let i = rng.gen_range(0..params.npred_vocab);
            let sense = params.sense_of(i);
            let idx = self.push(format!("pn{i}"), "NN", parent, deprel, Some(sense));
            self.frames.push((idx, vec![(idx, "A1")]));
            idx
        } else {
            let i = rng.gen_range(0..params.noun_vocab);
            self.push(format!("n{i}"), "NN", parent, deprel, None)
        };
        if let Some(d) = det {
            self.tokens[d].parent = Some(head);
        }
        if let Some(m) = nmod {
            self.tokens[m].parent = Some(head);
        }
        (head, nmod)
    }

    /// `sbj verb [obj] [adv] [subclause]`; returns the verb index.
    fn clause(&mut self, rng: &mut ChaCha8Rng, parent: Option<usize>, depth: usize) -> usize {
        let params = self.params;
        let verb_lemma = rng.gen_range(0..params.verb_vocab);
        let is_pred = params.verb_is_predicate(verb_lemma);
        let want_obj = rng.gen::<f64>() < params.object_rate;
        let want_adv = rng.gen::<f64>() < params.adverb_rate;
        let want_sub = depth < params.max_clauses && rng.gen::<f64>() < params.clause_rate;
        let want_deep = rng.gen::<f64>() < params.deep_arg_rate;

        let (sbj, _) = self.noun_phrase(rng, None, "ARG", false);
        let deprel = if parent.is_some() { "CONJ" } else { "ROOT" };
        let sense = is_pred.then(|| params.sense_of(verb_lemma));
        let verb = self.push(format!("v{verb_lemma}"), "VBD", parent, deprel, sense);
        self.tokens[sbj].parent = Some(verb);

        let mut args: Vec<(usize, &'static str)> = vec![(sbj, "A0")];
        if want_obj && self.remaining() > 2 {
            let (obj, nmod) = self.noun_phrase(rng, Some(verb), "ARG", true);
            args.push((obj, "A1"));
            if want_deep && is_pred {
                if let Some(nmod) = nmod {
                    args.push((nmod, "A2"));
                }
            }
        }
        if want_adv && self.remaining() > 2 {
            let i = rng.gen_range(0..params.adverb_vocab);
            let adv = self.push(format!("m{i}"), "RB", Some(verb), "MOD", None);
            args.push((adv, "AM-TMP"));
        }
        // A non-argument noun directly under the verb; same POS, relation
        // and side as an object, distinguished only by its deprel.
        if rng.gen::<f64>() < params.nmod_rate && self.remaining() > 2 {
            let i = rng.gen_range(0..params.noun_vocab);
            self.push(format!("n{i}"), "NN", Some(verb), "NMOD", None);
        }
        if is_pred {
            self.frames.push((verb, args));
        }
        if want_sub && self.remaining() > 3 {
            self.clause(rng, Some(verb), depth + 1);
        }
        verb
    }
}

pub fn generate_sentence(rng: &mut ChaCha8Rng, params: &GrammarParams) -> Sentence {
    let mut b = Builder {
        params,
        tokens: Vec::new(),
        frames: Vec::new(),
    };
    let root = b.clause(rng, None, 1);
    b.push(".".into(), ".", Some(root), "P", None);

    let tokens: Vec<Token> = b
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let pred = t
                .pred_sense
                .as_ref()
                .map(|sense| format!("{}.{}", t.lemma, sense));
            Token::new(
                i + 1,
                &t.form,
                &t.lemma,
                &t.pos,
                t.parent.map_or(0, |p| p + 1),
                t.deprel,
                pred.as_deref(),
            )
        })
        .collect();

    let mut frames: Vec<SemanticFrame> = b
        .frames
        .iter()
        .map(|(pred, args)| {
            let mut arguments: Vec<(usize, String)> =
                args.iter().map(|(i, role)| (i + 1, role.to_string())).collect();
            arguments.sort_unstable_by_key(|(id, _)| *id);
            let sense = b.tokens[*pred].pred_sense.clone().expect("predicate sense");
            SemanticFrame::new(pred + 1, &sense, arguments).expect("valid frame")
        })
        .collect();
    frames.sort_unstable_by_key(|f| f.predicate_id);

    Sentence::new(tokens, frames).expect("generated sentence is valid")
}

/// Deterministic corpus: fixed `(seed, n_sentences, params)` reproduce the
/// same sentences bit for bit.
pub fn generate_corpus(
    seed: u64,
    n_sentences: usize,
    params: &GrammarParams,
) -> Result<Vec<Sentence>, SynthError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_sentences)
        .map(|_| generate_sentence(&mut rng, params))
        .collect())
}
