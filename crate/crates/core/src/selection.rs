//! Greedy feature-template selection with the recruit/shake-off loop.
//!
//! Starting from a random subset of the template space, each outer iteration
//! first recruits every template whose individual addition strictly improves
//! the dev score (all judged against the same base score), then repeatedly
//! shakes off templates whose removal does not hurt: candidates are sorted
//! by ascending importance and dropped front-first, keeping the best set
//! seen; a drop is kept on score ties, while recruiting requires a strict
//! gain. The outer loop stops when nothing is recruited or the shaken set is
//! no better than the current one.
//!
//! Scores come from full train-plus-decode runs and are cached by template
//! subset, so identical sets never retrain; the routine-call counter counts
//! actual executions.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::conll::Sentence;
use crate::pipeline::{train_pipeline, PipelineConfig, PipelineError};
use crate::templates::TemplateSet;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("template space is empty")]
    EmptySpace,
    #[error("initial fraction {0} is not in (0, 1]")]
    BadFraction(f64),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    /// Fraction of the template space drawn as the initial random subset.
    pub init_fraction: f64,
    pub seed: u64,
    /// Beam width of the dev-set scorer, frozen across the run.
    pub beam_width: usize,
    pub pipeline: PipelineConfig,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            init_fraction: 0.1,
            seed: 1,
            beam_width: 8,
            pipeline: PipelineConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SelectionCounters {
    /// Outer-loop iterations.
    pub k1: usize,
    /// Shake-off outer-while iterations, total and per-call maximum.
    pub k2_total: usize,
    pub k2_max: usize,
    /// Largest candidate set entering a shake-off call.
    pub max_smax: usize,
    /// Largest complement |FT - S| scanned by a recruit pass.
    pub max_complement: usize,
    /// Actual train-and-evaluate executions of the selection loop.
    pub routine_calls: usize,
    pub cache_hits: usize,
    /// Extra executions spent on the final importance report.
    pub report_calls: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelectionReport {
    pub space_size: usize,
    pub initial_size: usize,
    pub initial_score: f64,
    pub final_size: usize,
    pub final_score: f64,
    /// Accepted outer-iteration scores, strictly increasing.
    pub iteration_scores: Vec<f64>,
    pub counters: SelectionCounters,
    /// Per selected template: score drop when it alone is removed from the
    /// final set, descending (rank 1 first).
    pub importance: Vec<(String, f64)>,
}

pub struct GreedySelection {
    pub selected: TemplateSet,
    pub report: SelectionReport,
}

/// Scoring state shared by the selection phases: the template space, the
/// corpora, the frozen pipeline config, and the subset-score cache.
pub struct SelectionState<'a> {
    space: &'a TemplateSet,
    train_corpus: &'a [Sentence],
    dev_corpus: &'a [Sentence],
    config: &'a SelectionConfig,
    cache: Mutex<HashMap<Vec<usize>, f64>>,
    routine_calls: AtomicUsize,
    cache_hits: AtomicUsize,
}

impl<'a> SelectionState<'a> {
    pub fn new(
        space: &'a TemplateSet,
        train_corpus: &'a [Sentence],
        dev_corpus: &'a [Sentence],
        config: &'a SelectionConfig,
    ) -> SelectionState<'a> {
        SelectionState {
            space,
            train_corpus,
            dev_corpus,
            config,
            cache: Mutex::new(HashMap::new()),
            routine_calls: AtomicUsize::new(0),
            cache_hits: AtomicUsize::new(0),
        }
    }

    pub fn routine_calls(&self) -> usize {
        self.routine_calls.load(Ordering::SeqCst)
    }

    pub fn cache_hits(&self) -> usize {
        self.cache_hits.load(Ordering::SeqCst)
    }

    /// Dev-set labeled semantic F1 of the pipeline trained with the subset;
    /// cached by subset.
    pub fn score(&self, subset: &[usize]) -> Result<f64, SelectionError> {
        let key: Vec<usize> = subset.to_vec();
        if let Some(&cached) = self.cache.lock().expect("cache lock").get(&key) {
            self.cache_hits.fetch_add(1, Ordering::SeqCst);
            return Ok(cached);
        }
        let templates = self.space.subset("candidate", subset);
        let trained = train_pipeline(self.train_corpus, &templates, &self.config.pipeline)?;
        let f1 = trained.sem_f1(self.dev_corpus, self.config.beam_width)?;
        self.routine_calls.fetch_add(1, Ordering::SeqCst);
        self.cache.lock().expect("cache lock").insert(key, f1);
        Ok(f1)
    }
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn minus(set: &[usize], drop: usize) -> Vec<usize> {
    set.iter().copied().filter(|&i| i != drop).collect()
}

/// Templates from the complement whose individual addition strictly beats
/// the base score. Candidate evaluations run concurrently; the result is in
/// template-space order.
pub fn recruit_more(
    state: &SelectionState<'_>,
    current: &[usize],
) -> Result<Vec<usize>, SelectionError> {
    let base = state.score(current)?;
    let complement: Vec<usize> = (0..state.space.len())
        .filter(|i| !current.contains(i))
        .collect();
    let scored: Vec<(usize, f64)> = complement
        .par_iter()
        .map(|&f| {
            let with = sorted(current.iter().copied().chain([f]).collect());
            state.score(&with).map(|s| (f, s))
        })
        .collect::<Result<_, _>>()?;
    Ok(scored
        .into_iter()
        .filter(|(_, s)| *s > base)
        .map(|(f, _)| f)
        .collect())
}

/// Shakes useless templates off a candidate set. Returns the surviving set
/// and the number of outer-while iterations used.
pub fn shake_off(
    state: &SelectionState<'_>,
    s_max: Vec<usize>,
) -> Result<(Vec<usize>, usize), SelectionError> {
    let mut s_max = sorted(s_max);
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        let s0 = s_max.clone();
        // Ascending importance = descending score-without-template; ties
        // keep template-space order.
        let removal_scores: Vec<(usize, f64)> = s0
            .par_iter()
            .map(|&f| state.score(&minus(&s0, f)).map(|s| (f, s)))
            .collect::<Result<_, _>>()?;
        let mut order = removal_scores;
        order.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

        let mut best = s0.clone();
        let mut best_score = state.score(&s0)?;
        let mut remaining = s0.clone();
        for (f, _) in &order {
            remaining = minus(&remaining, *f);
            if remaining.is_empty() {
                break;
            }
            let score = state.score(&remaining)?;
            // Non-strict: a drop that does not deteriorate is kept.
            if score >= best_score {
                best_score = score;
                best = remaining.clone();
            }
        }
        if best == s0 {
            return Ok((s0, iterations));
        }
        s_max = best;
    }
}

/// The full greedy selection loop over a template space.
pub fn greedy_select(
    space: &TemplateSet,
    train_corpus: &[Sentence],
    dev_corpus: &[Sentence],
    config: &SelectionConfig,
) -> Result<GreedySelection, SelectionError> {
    let n = space.len();
    if n == 0 {
        return Err(SelectionError::EmptySpace);
    }
    if !(config.init_fraction > 0.0 && config.init_fraction <= 1.0) {
        return Err(SelectionError::BadFraction(config.init_fraction));
    }
    let state = SelectionState::new(space, train_corpus, dev_corpus, config);

    let init_size = ((config.init_fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let mut current = sorted(indices[..init_size].to_vec());

    let initial_size = current.len();
    let initial_score = state.score(&current)?;
    let mut counters = SelectionCounters {
        max_smax: current.len(),
        ..SelectionCounters::default()
    };
    let mut iteration_scores = Vec::new();

    loop {
        counters.k1 += 1;
        counters.max_complement = counters.max_complement.max(n - current.len());
        let recruited = recruit_more(&state, &current)?;
        if recruited.is_empty() {
            break;
        }
        let union = sorted(current.iter().copied().chain(recruited).collect());
        counters.max_smax = counters.max_smax.max(union.len());
        let (shaken, k2) = shake_off(&state, union)?;
        counters.k2_total += k2;
        counters.k2_max = counters.k2_max.max(k2);
        if state.score(&current)? >= state.score(&shaken)? {
            break;
        }
        iteration_scores.push(state.score(&shaken)?);
        current = shaken;
    }

    counters.routine_calls = state.routine_calls();
    counters.cache_hits = state.cache_hits();
    let final_score = state.score(&current)?;

    // Importance of each survivor: score drop when it alone is removed.
    let mut importance: Vec<(String, f64)> = Vec::with_capacity(current.len());
    for &f in &current {
        let without = state.score(&minus(&current, f))?;
        importance.push((
            space.templates()[f].source().to_string(),
            final_score - without,
        ));
    }
    importance.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    counters.report_calls = state.routine_calls() - counters.routine_calls;
    counters.cache_hits = state.cache_hits();

    let selected = space.subset(&format!("{}-selected", space.name()), &current);
    Ok(GreedySelection {
        selected,
        report: SelectionReport {
            space_size: n,
            initial_size,
            initial_score,
            final_size: current.len(),
            final_score,
            iteration_scores,
            counters,
            importance,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labels::TraverseScheme;
    use crate::maxent::TrainConfig;
    use crate::synth::{generate_corpus, GrammarParams};
    use crate::templates::FeatureTemplate;

    fn fast_config(seed: u64) -> SelectionConfig {
        SelectionConfig {
            seed,
            beam_width: 4,
            pipeline: PipelineConfig {
                scheme: TraverseScheme::SynPth,
                train: TrainConfig {
                    sigma_squared: 10.0,
                    max_iterations: 80,
                    tolerance: 1e-4,
                    ..TrainConfig::default()
                },
                ..PipelineConfig::default()
            },
            ..SelectionConfig::default()
        }
    }

    /// Five templates each carrying one signal of the synthetic grammar.
    pub(crate) const INFORMATIVE: [&str; 5] = [
        "a.lemma",
        "a.dprel",
        "a.pos",
        "a:p.direction",
        "a:p.dpTreeRelation",
    ];

    /// Constant-valued probes under the synthetic grammar: pure noise.
    pub(crate) const NOISE: [&str; 15] = [
        "p.isCtypeSemdprel",
        "p.isRtypeSemdprel",
        "a.isCtypeSemdprel",
        "a.isRtypeSemdprel",
        "a.existSemdprel_AM-LOC",
        "a.existSemdprel_AM-DIR",
        "a.existSemdprel_AM-CAU",
        "a.existSemdprel_AM-EXT",
        "a.existSemdprel_R-A0",
        "a.existSemdprel_R-A1",
        "a.existSemdprel_C-A1",
        "a.existSemdprel_C-A2",
        "a.existSemdprel_SU",
        "a.existSemdprel_AM-REC",
        "a.existSemdprel_AM-PRT",
    ];

    pub(crate) fn template_space() -> TemplateSet {
        let mut templates = Vec::new();
        for src in INFORMATIVE.iter().chain(NOISE.iter()) {
            templates.push(FeatureTemplate::parse(src).unwrap());
        }
        TemplateSet::new("space20", templates).unwrap()
    }

    fn corpora() -> (Vec<Sentence>, Vec<Sentence>) {
        let corpus = generate_corpus(1234, 140, &GrammarParams::default()).unwrap();
        let (t, d) = corpus.split_at(100);
        (t.to_vec(), d.to_vec())
    }

    #[test]
    fn score_cache_contract() {
        let space = template_space();
        let (train, dev) = corpora();
        let config = fast_config(1);
        let state = SelectionState::new(&space, &train, &dev, &config);
        let subset = vec![0, 1];
        let a = state.score(&subset).unwrap();
        assert_eq!(state.routine_calls(), 1);
        assert_eq!(state.cache_hits(), 0);
        let b = state.score(&subset).unwrap();
        assert_eq!(state.routine_calls(), 1);
        assert_eq!(state.cache_hits(), 1);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn perfect_memorization_scores_one() {
        let space = template_space();
        let tiny = generate_corpus(5, 4, &GrammarParams::default()).unwrap();
        let config = SelectionConfig {
            pipeline: PipelineConfig {
                train: TrainConfig {
                    sigma_squared: 50.0,
                    max_iterations: 400,
                    tolerance: 1e-6,
                    ..TrainConfig::default()
                },
                ..PipelineConfig::default()
            },
            ..fast_config(1)
        };
        let state = SelectionState::new(&space, &tiny, &tiny, &config);
        let all: Vec<usize> = (0..space.len()).collect();
        assert_eq!(state.score(&all).unwrap(), 1.0);
    }

    #[test]
    fn informative_beats_noise() {
        let space = template_space();
        let (train, dev) = corpora();
        let config = fast_config(1);
        let state = SelectionState::new(&space, &train, &dev, &config);
        let informative: Vec<usize> = (0..5).collect();
        let noise: Vec<usize> = (5..20).collect();
        let si = state.score(&informative).unwrap();
        let sn = state.score(&noise).unwrap();
        assert!(si > sn, "informative {si} vs noise {sn}");
    }

    #[test]
    fn recruit_more_edge_cases() {
        let space = template_space();
        let (train, dev) = corpora();
        let config = fast_config(1);
        let state = SelectionState::new(&space, &train, &dev, &config);
        // FT == S: empty complement.
        let all: Vec<usize> = (0..space.len()).collect();
        assert!(recruit_more(&state, &all).unwrap().is_empty());

        // With four of the five signals present, the held-out informative
        // template is recruited; the pure-noise probes are not.
        let four: Vec<usize> = vec![0, 1, 2, 3];
        let recruited = recruit_more(&state, &four).unwrap();
        assert!(recruited.contains(&4), "recruited: {recruited:?}");
        // All noise: nothing recruited from the noise block.
        assert!(recruited.iter().all(|f| *f < 5), "recruited: {recruited:?}");
    }

    #[test]
    fn shake_off_edge_cases() {
        let space = template_space();
        let (train, dev) = corpora();
        let config = fast_config(1);
        let state = SelectionState::new(&space, &train, &dev, &config);

        // A singleton set survives: dropping its element would empty it.
        let (kept, _) = shake_off(&state, vec![0]).unwrap();
        assert_eq!(kept, vec![0]);

        // Pure noise riding on the informative five is shaken off.
        let mixed: Vec<usize> = vec![0, 1, 2, 3, 4, 5, 6, 7];
        let (kept, _) = shake_off(&state, mixed).unwrap();
        assert!(kept.iter().all(|f| *f < 5), "kept: {kept:?}");
        for f in 0..5 {
            assert!(kept.contains(&f), "informative {f} dropped: {kept:?}");
        }
    }

    #[test]
    fn greedy_select_finds_the_informative_five() {
        let space = template_space();
        let (train, dev) = corpora();
        let config = fast_config(7);
        let selection = greedy_select(&space, &train, &dev, &config).unwrap();
        let report = &selection.report;
        assert!(report.final_score >= report.initial_score);
        for src in INFORMATIVE {
            assert!(
                selection
                    .selected
                    .iter()
                    .any(|t| t.source() == src),
                "missing {src}; selected: {:?}",
                selection
                    .selected
                    .iter()
                    .map(|t| t.source())
                    .collect::<Vec<_>>()
            );
        }
        // Outer-loop scores strictly increase.
        let mut prev = report.initial_score;
        for s in &report.iteration_scores {
            assert!(*s > prev);
            prev = *s;
        }
        // Routine-call bound in the documented reading.
        let c = &report.counters;
        assert!(c.k1 >= 1);
        let bound = c.k1 * (space.len() + 2 * c.k2_max.max(1) * c.max_smax);
        assert!(
            c.routine_calls <= bound,
            "{} calls > bound {bound} (k1 {}, k2max {}, smax {})",
            c.routine_calls,
            c.k1,
            c.k2_max,
            c.max_smax
        );
        // Importance ranks cover the surviving set.
        assert_eq!(report.importance.len(), report.final_size);
    }

    #[test]
    fn single_informative_template_space_terminates_immediately() {
        let space = TemplateSet::new(
            "one",
            vec![FeatureTemplate::parse("a.lemma").unwrap()],
        )
        .unwrap();
        let (train, dev) = corpora();
        let config = SelectionConfig {
            init_fraction: 1.0,
            ..fast_config(1)
        };
        let selection = greedy_select(&space, &train, &dev, &config).unwrap();
        assert_eq!(selection.selected.len(), 1);
        assert_eq!(selection.report.counters.k1, 1);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let (train, dev) = corpora();
        let config = fast_config(1);
        let empty = TemplateSet::new("empty", vec![]).unwrap();
        assert!(matches!(
            greedy_select(&empty, &train, &dev, &config),
            Err(SelectionError::EmptySpace)
        ));
        let space = template_space();
        let bad = SelectionConfig {
            init_fraction: 0.0,
            ..fast_config(1)
        };
        assert!(matches!(
            greedy_select(&space, &train, &dev, &bad),
            Err(SelectionError::BadFraction(_))
        ));
    }
}
