//! CoNLL-style scoring of semantic frames and syntactic attachments.
//!
//! The unit of semantic credit is one labeled dependency: every frame
//! contributes a sense dependency (virtual root -> predicate, labeled
//! `lemma.sense`, correct iff token and the full roleset string match) plus
//! one dependency per argument (correct iff predicate token, argument token
//! and role all match). Empty denominators score vacuously as 1; fields
//! whose category is empty on both sides are reported as undefined instead
//! of NaN.

use serde::Serialize;
use thiserror::Error;

use crate::conll::Sentence;
use crate::pos::PosClasses;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("corpus misalignment: {0}")]
    Misaligned(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrfScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PrfScore {
    pub fn from_counts(correct: u64, predicted: u64, gold: u64) -> PrfScore {
        let precision = if predicted == 0 {
            1.0
        } else {
            correct as f64 / predicted as f64
        };
        let recall = if gold == 0 {
            1.0
        } else {
            correct as f64 / gold as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        PrfScore {
            precision,
            recall,
            f1,
        }
    }
}

/// Raw dependency counts, split by dependency kind (sense vs argument) and
/// by the predicate token's POS class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct DependencyCounts {
    pub gold_sense: u64,
    pub predicted_sense: u64,
    pub correct_sense: u64,
    pub gold_arg: u64,
    pub predicted_arg: u64,
    pub correct_arg: u64,
    pub gold_verb: u64,
    pub predicted_verb: u64,
    pub correct_verb: u64,
    pub gold_nominal: u64,
    pub predicted_nominal: u64,
    pub correct_nominal: u64,
}

impl DependencyCounts {
    pub fn gold_total(&self) -> u64 {
        self.gold_sense + self.gold_arg
    }

    pub fn predicted_total(&self) -> u64 {
        self.predicted_sense + self.predicted_arg
    }

    pub fn correct_total(&self) -> u64 {
        self.correct_sense + self.correct_arg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub sem: PrfScore,
    /// Labeled attachment score; undefined over zero scored tokens.
    pub las: Option<f64>,
    pub macro_f1: Option<f64>,
    pub sem_over_las: Option<f64>,
    pub pred_f1: Option<PrfScore>,
    pub argu_f1: Option<PrfScore>,
    pub verb_f1: Option<PrfScore>,
    pub nomi_f1: Option<PrfScore>,
    pub counts: DependencyCounts,
    pub las_correct: u64,
    pub las_total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreOptions {
    pub classes: PosClasses,
    /// Exclude punctuation tokens from LAS (included by default).
    pub exclude_punctuation: bool,
    /// Tokens with this gold dependency label count as punctuation.
    pub punctuation_deprel: String,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            classes: PosClasses::default(),
            exclude_punctuation: false,
            punctuation_deprel: "P".into(),
        }
    }
}

fn check_alignment(gold: &[Sentence], predicted: &[Sentence]) -> Result<(), ScoreError> {
    if gold.len() != predicted.len() {
        return Err(ScoreError::Misaligned(format!(
            "{} gold sentences vs {} predicted",
            gold.len(),
            predicted.len()
        )));
    }
    for (i, (g, p)) in gold.iter().zip(predicted).enumerate() {
        if g.len() != p.len() {
            return Err(ScoreError::Misaligned(format!(
                "sentence {}: {} gold tokens vs {} predicted",
                i + 1,
                g.len(),
                p.len()
            )));
        }
        for (tg, tp) in g.tokens.iter().zip(&p.tokens) {
            if tg.form != tp.form {
                return Err(ScoreError::Misaligned(format!(
                    "sentence {}, token {}: form '{}' vs '{}'",
                    i + 1,
                    tg.id,
                    tg.form,
                    tp.form
                )));
            }
        }
    }
    Ok(())
}

/// One sentence's labeled semantic dependencies.
fn dependencies(sentence: &Sentence) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    for frame in &sentence.frames {
        let roleset = sentence
            .token(frame.predicate_id)
            .pred
            .clone()
            .unwrap_or_else(|| format!("?.{}", frame.sense));
        // Argument id 0 marks the sense dependency from the virtual root.
        out.push((frame.predicate_id, 0, roleset));
        for (arg, role) in &frame.arguments {
            out.push((frame.predicate_id, *arg, role.clone()));
        }
    }
    out
}

/// Accumulates dependency counts over an aligned corpus pair.
pub fn count_dependencies(
    gold: &[Sentence],
    predicted: &[Sentence],
    classes: &PosClasses,
) -> Result<DependencyCounts, ScoreError> {
    check_alignment(gold, predicted)?;
    let mut c = DependencyCounts::default();
    for (g, p) in gold.iter().zip(predicted) {
        let gold_deps = dependencies(g);
        let pred_deps = dependencies(p);
        let bucket = |dep: &(usize, usize, String)| {
            let pos = &g.token(dep.0).pos;
            if classes.is_verb(pos) {
                Some(true)
            } else if classes.is_noun(pos) {
                Some(false)
            } else {
                None
            }
        };
        for d in &gold_deps {
            if d.1 == 0 {
                c.gold_sense += 1;
            } else {
                c.gold_arg += 1;
            }
            match bucket(d) {
                Some(true) => c.gold_verb += 1,
                Some(false) => c.gold_nominal += 1,
                None => {}
            }
        }
        for d in &pred_deps {
            if d.1 == 0 {
                c.predicted_sense += 1;
            } else {
                c.predicted_arg += 1;
            }
            match bucket(d) {
                Some(true) => c.predicted_verb += 1,
                Some(false) => c.predicted_nominal += 1,
                None => {}
            }
            if gold_deps.contains(d) {
                if d.1 == 0 {
                    c.correct_sense += 1;
                } else {
                    c.correct_arg += 1;
                }
                match bucket(d) {
                    Some(true) => c.correct_verb += 1,
                    Some(false) => c.correct_nominal += 1,
                    None => {}
                }
            }
        }
    }
    Ok(c)
}

/// Labeled semantic precision/recall/F1 over the whole corpus.
pub fn semantic_score(
    gold: &[Sentence],
    predicted: &[Sentence],
) -> Result<PrfScore, ScoreError> {
    let c = count_dependencies(gold, predicted, &PosClasses::default())?;
    Ok(PrfScore::from_counts(
        c.correct_total(),
        c.predicted_total(),
        c.gold_total(),
    ))
}

/// Labeled attachment score: the fraction of scored tokens with the correct
/// head and dependency label. Returns counts so callers can aggregate.
pub fn las_counts(
    gold: &[Sentence],
    predicted: &[Sentence],
    options: &ScoreOptions,
) -> Result<(u64, u64), ScoreError> {
    check_alignment(gold, predicted)?;
    let mut correct = 0u64;
    let mut total = 0u64;
    for (g, p) in gold.iter().zip(predicted) {
        for (tg, tp) in g.tokens.iter().zip(&p.tokens) {
            if options.exclude_punctuation && tg.deprel == options.punctuation_deprel {
                continue;
            }
            total += 1;
            if tg.head == tp.head && tg.deprel == tp.deprel {
                correct += 1;
            }
        }
    }
    Ok((correct, total))
}

pub fn las(
    gold: &[Sentence],
    predicted: &[Sentence],
    options: &ScoreOptions,
) -> Result<Option<f64>, ScoreError> {
    let (correct, total) = las_counts(gold, predicted, options)?;
    Ok((total > 0).then(|| correct as f64 / total as f64))
}

/// The full score breakdown. Macro-F1 is the harmonic mean of the
/// macro-averaged precision and recall, where the syntactic side enters as
/// LAS (precision = recall = LAS).
pub fn full_report(
    gold: &[Sentence],
    predicted: &[Sentence],
    options: &ScoreOptions,
) -> Result<ScoreReport, ScoreError> {
    let counts = count_dependencies(gold, predicted, &options.classes)?;
    let sem = PrfScore::from_counts(
        counts.correct_total(),
        counts.predicted_total(),
        counts.gold_total(),
    );
    let (las_correct, las_total) = las_counts(gold, predicted, options)?;
    let las = (las_total > 0).then(|| las_correct as f64 / las_total as f64);

    let optional = |correct, predicted_n, gold_n| {
        (predicted_n > 0 || gold_n > 0).then(|| PrfScore::from_counts(correct, predicted_n, gold_n))
    };
    let pred_f1 = optional(counts.correct_sense, counts.predicted_sense, counts.gold_sense);
    let argu_f1 = optional(counts.correct_arg, counts.predicted_arg, counts.gold_arg);
    let verb_f1 = optional(counts.correct_verb, counts.predicted_verb, counts.gold_verb);
    let nomi_f1 = optional(
        counts.correct_nominal,
        counts.predicted_nominal,
        counts.gold_nominal,
    );

    let macro_f1 = las.map(|l| {
        let mp = (l + sem.precision) / 2.0;
        let mr = (l + sem.recall) / 2.0;
        if mp + mr == 0.0 {
            0.0
        } else {
            2.0 * mp * mr / (mp + mr)
        }
    });
    let sem_over_las = las.and_then(|l| (l > 0.0).then(|| sem.f1 / l));

    Ok(ScoreReport {
        sem,
        las,
        macro_f1,
        sem_over_las,
        pred_f1,
        argu_f1,
        verb_f1,
        nomi_f1,
        counts,
        las_correct,
        las_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::example_sentence;
    use crate::synth::{generate_corpus, GrammarParams};
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_prediction_scores_one() {
        let corpus = vec![example_sentence()];
        let score = semantic_score(&corpus, &corpus).unwrap();
        assert_eq!((score.precision, score.recall, score.f1), (1.0, 1.0, 1.0));
        let counts = count_dependencies(&corpus, &corpus, &PosClasses::default()).unwrap();
        assert_eq!(counts.gold_total(), 8);
        assert_eq!(counts.gold_sense, 3);
        assert_eq!(counts.gold_arg, 5);
    }

    #[test]
    fn one_flipped_role_scores_seven_eighths() {
        let gold = vec![example_sentence()];
        let mut predicted = gold.clone();
        let frame = &mut predicted[0].frames[2];
        assert_eq!(frame.arguments[1], (6, "A0".to_string()));
        frame.arguments[1].1 = "A1".into();
        let score = semantic_score(&gold, &predicted).unwrap();
        assert!((score.precision - 0.875).abs() < 1e-12);
        assert!((score.recall - 0.875).abs() < 1e-12);
    }

    #[test]
    fn empty_prediction_conventions() {
        let gold = vec![example_sentence()];
        let empty = vec![gold[0].with_frames(vec![]).unwrap()];
        let score = semantic_score(&gold, &empty).unwrap();
        assert_eq!(score.precision, 1.0);
        assert_eq!(score.recall, 0.0);
        assert_eq!(score.f1, 0.0);
        // Both empty: vacuous perfection.
        let score = semantic_score(&empty, &empty).unwrap();
        assert_eq!((score.precision, score.recall, score.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn las_counting() {
        let gold = vec![example_sentence()];
        assert_eq!(las(&gold, &gold, &ScoreOptions::default()).unwrap(), Some(1.0));
        let mut predicted = gold.clone();
        predicted[0].tokens[0].head = 3;
        let l = las(&gold, &predicted, &ScoreOptions::default()).unwrap().unwrap();
        assert!((l - 7.0 / 8.0).abs() < 1e-12);
        // Excluding punctuation drops tokens 5 and 8.
        let opts = ScoreOptions {
            exclude_punctuation: true,
            ..ScoreOptions::default()
        };
        let (correct, total) = las_counts(&gold, &predicted, &opts).unwrap();
        assert_eq!((correct, total), (5, 6));
        assert_eq!(las(&[], &[], &ScoreOptions::default()).unwrap(), None);
    }

    #[test]
    fn full_report_fields() {
        let gold = vec![example_sentence()];
        let report = full_report(&gold, &gold, &ScoreOptions::default()).unwrap();
        assert_eq!(report.sem.f1, 1.0);
        assert_eq!(report.las, Some(1.0));
        assert_eq!(report.macro_f1, Some(1.0));
        assert_eq!(report.sem_over_las, Some(1.0));
        assert_eq!(report.pred_f1.unwrap().f1, 1.0);
        assert_eq!(report.argu_f1.unwrap().f1, 1.0);
        // Verbal predicates: shifted (3 deps incl sense) and said (3);
        // nominal: focus (2).
        assert_eq!(report.counts.gold_verb, 6);
        assert_eq!(report.counts.gold_nominal, 2);
        assert!(report.verb_f1.is_some());
        assert!(report.nomi_f1.is_some());
        assert_eq!(
            report.counts.correct_total(),
            report.counts.correct_sense + report.counts.correct_arg
        );

        // Gold with only verbal predicates leaves the nominal bucket
        // undefined.
        let mut verbal_only = example_sentence();
        verbal_only.frames.remove(0);
        verbal_only.tokens[1].pred = None;
        let gold = vec![verbal_only];
        let report = full_report(&gold, &gold, &ScoreOptions::default()).unwrap();
        assert!(report.nomi_f1.is_none());
        assert!(report.verb_f1.is_some());
    }

    #[test]
    fn scoring_is_symmetric_under_sentence_reordering() {
        let corpus = generate_corpus(5, 20, &GrammarParams::default()).unwrap();
        let mut broken = corpus.clone();
        // Decay some predictions deterministically.
        for s in broken.iter_mut() {
            if s.frames.len() > 1 {
                let f = s.frames.pop().unwrap();
                s.tokens[f.predicate_id - 1].pred = None;
            }
        }
        let direct = full_report(&corpus, &broken, &ScoreOptions::default()).unwrap();
        let mut reordered_gold = corpus.clone();
        let mut reordered_pred = broken.clone();
        reordered_gold.reverse();
        reordered_pred.reverse();
        let reordered =
            full_report(&reordered_gold, &reordered_pred, &ScoreOptions::default()).unwrap();
        assert_eq!(direct.counts, reordered.counts);
        assert_eq!(direct.sem, reordered.sem);
    }

    #[test]
    fn misalignment_is_an_error() {
        let gold = vec![example_sentence()];
        assert!(matches!(
            semantic_score(&gold, &[]),
            Err(ScoreError::Misaligned(_))
        ));
        let mut other = gold.clone();
        other[0].tokens[0].form = "different".into();
        assert!(matches!(
            semantic_score(&gold, &other),
            Err(ScoreError::Misaligned(_))
        ));
    }

    /// Field-by-field agreement with an independent dependency-set recount.
    #[test]
    fn matches_independent_recount_on_corrupted_corpus() {
        let gold = generate_corpus(31, 60, &GrammarParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut predicted = gold.clone();
        for s in predicted.iter_mut() {
            // Flip some roles, drop some frames.
            let mut frames = s.frames.clone();
            frames.retain(|_| rng.gen::<f64>() > 0.2);
            for f in frames.iter_mut() {
                for arg in f.arguments.iter_mut() {
                    if rng.gen::<f64>() < 0.3 {
                        arg.1 = if arg.1 == "A0" { "A1".into() } else { "A0".into() };
                    }
                }
            }
            *s = s.with_frames(frames).unwrap();
        }

        let report = full_report(&gold, &predicted, &ScoreOptions::default()).unwrap();

        // Recount: enumerate labeled dependencies as explicit sets per
        // sentence and intersect naively.
        let deps = |s: &Sentence| -> Vec<(usize, usize, String)> {
            let mut v = Vec::new();
            for f in &s.frames {
                v.push((f.predicate_id, 0, s.token(f.predicate_id).pred.clone().unwrap()));
                for (a, r) in &f.arguments {
                    v.push((f.predicate_id, *a, r.clone()));
                }
            }
            v
        };
        let mut gold_n = 0u64;
        let mut pred_n = 0u64;
        let mut correct = 0u64;
        for (g, p) in gold.iter().zip(&predicted) {
            let gd = deps(g);
            let pd = deps(p);
            gold_n += gd.len() as u64;
            pred_n += pd.len() as u64;
            correct += pd.iter().filter(|d| gd.contains(d)).count() as u64;
        }
        assert_eq!(report.counts.gold_total(), gold_n);
        assert_eq!(report.counts.predicted_total(), pred_n);
        assert_eq!(report.counts.correct_total(), correct);
        let expect = PrfScore::from_counts(correct, pred_n, gold_n);
        assert_eq!(report.sem, expect);
    }
}
