//! End-to-end pipeline: training-pair extraction with gold partial-structure
//! threading, classifier training, corpus decoding, and the bundled model
//! file (templates + classifier) that `train`/`parse` exchange.

use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::conll::{ConllError, Sentence};
use crate::decoder::{self, DecodeConfig, DecodeError, LabelMasks, Scorer};
use crate::deptree::DepGraph;
use crate::labels::{LabelSet, TraverseScheme};
use crate::maxent::{self, MaxEntError, MaxEntModel, Sample, TrainConfig};
use crate::pos::PosClasses;
use crate::pruning::generate_training_pairs;
use crate::scoring::{self, ScoreError};
use crate::templates::{EvalContext, PartialParse, TemplateError, TemplateSet};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    MaxEnt(#[from] MaxEntError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Conll(#[from] ConllError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Score(#[from] ScoreError),
    #[error("model file {path}, line {line}: {message}")]
    ModelFormat {
        path: String,
        line: usize,
        message: String,
    },
    #[error("model file {path}: {message}")]
    ModelIo { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub scheme: TraverseScheme,
    pub train: TrainConfig,
    pub beam_width: usize,
    pub classes: PosClasses,
    pub bucket_distance: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            scheme: TraverseScheme::SynPth,
            train: TrainConfig::default(),
            beam_width: 8,
            classes: PosClasses::default(),
            bucket_distance: true,
        }
    }
}

/// A small template set that keeps the synthetic grammar learnable; also the
/// shape of the starter catalog shipped in `templates/`.
pub const STARTER_TEMPLATES: &str = "\
a.form
a.lemma
a.pos
a.dprel
p.lemma
p.pos
a.lemma + p.lemma
a.dprel + a:p.dpTreeRelation
a.dprel + a:p.direction
a:p.dpTreeRelation + p.pos
a.isCurPred.lemma
a:p.direction
a:p|dpPath.dprel.seq
a:p|dpPath.distance
a.h.lemma
";

/// Labeled feature samples for one sentence, in traversal order. The partial
/// structure grows with each pair's gold label, so structure-sensitive
/// features see exactly what decoding will see.
pub fn sentence_samples(
    sentence: &Sentence,
    templates: &TemplateSet,
    scheme: TraverseScheme,
    classes: &PosClasses,
    bucket_distance: bool,
) -> Vec<Sample> {
    let graph = DepGraph::new(sentence);
    let pairs = generate_training_pairs(sentence, &graph, scheme, classes);
    let mut partial = PartialParse::new(sentence.len());
    let mut samples = Vec::with_capacity(pairs.len());
    for pair in &pairs {
        let ctx = EvalContext {
            sentence,
            graph: &graph,
            classes,
            partial: &partial,
            head: pair.head,
            dependent: pair.dependent,
            bucket_distance,
        };
        let label = pair.label.as_ref().expect("training pairs are labeled");
        samples.push(Sample {
            features: templates.evaluate_all(&ctx),
            label: label.as_str().to_string(),
        });
        partial.apply(pair.head, pair.dependent, label);
    }
    samples
}

/// Extracts samples for a whole corpus; sentence-parallel, order-stable.
pub fn extract_samples(
    corpus: &[Sentence],
    templates: &TemplateSet,
    scheme: TraverseScheme,
    classes: &PosClasses,
    bucket_distance: bool,
) -> Vec<Sample> {
    corpus
        .par_iter()
        .map(|s| sentence_samples(s, templates, scheme, classes, bucket_distance))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Observed labels in canonical order: standard-set position first, unknown
/// labels after it lexicographically.
pub fn observed_labels(samples: &[Sample], scheme: TraverseScheme) -> Vec<String> {
    let standard = LabelSet::standard(scheme);
    let mut labels: Vec<String> = samples.iter().map(|s| s.label.clone()).collect();
    labels.sort_unstable();
    labels.dedup();
    labels.sort_by_key(|l| standard.sort_rank(l));
    labels
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPipeline {
    pub model: MaxEntModel,
    pub templates: TemplateSet,
    pub scheme: TraverseScheme,
    pub classes: PosClasses,
    pub bucket_distance: bool,
}

pub fn train_pipeline(
    corpus: &[Sentence],
    templates: &TemplateSet,
    config: &PipelineConfig,
) -> Result<TrainedPipeline, PipelineError> {
    let samples = extract_samples(
        corpus,
        templates,
        config.scheme,
        &config.classes,
        config.bucket_distance,
    );
    let labels = observed_labels(&samples, config.scheme);
    let mut model = maxent::train(&samples, &labels, &config.train)?;
    model.provenance = format!("{}@{:016x}", templates.name(), templates.fingerprint());
    Ok(TrainedPipeline {
        model,
        templates: templates.clone(),
        scheme: config.scheme,
        classes: config.classes.clone(),
        bucket_distance: config.bucket_distance,
    })
}

impl TrainedPipeline {
    pub fn decode_config(&self, beam_width: usize) -> DecodeConfig {
        DecodeConfig {
            beam_width,
            scheme: self.scheme,
            ..DecodeConfig::default()
        }
    }

    pub fn scorer(&self) -> Scorer<'_> {
        Scorer {
            model: &self.model,
            templates: &self.templates,
            classes: &self.classes,
            bucket_distance: self.bucket_distance,
        }
    }

    /// Decodes one sentence into frames.
    pub fn parse_sentence(
        &self,
        sentence: &Sentence,
        beam_width: usize,
    ) -> Result<Sentence, PipelineError> {
        let graph = DepGraph::new(sentence);
        let scorer = self.scorer();
        let masks = LabelMasks::for_model(&self.model);
        let frames = decoder::parse_sentence(
            sentence,
            &graph,
            &scorer,
            &masks,
            &self.decode_config(beam_width),
        )?;
        Ok(sentence.with_frames(frames)?)
    }

    /// Decodes a corpus; sentence-parallel, order-stable.
    pub fn parse_corpus(
        &self,
        corpus: &[Sentence],
        beam_width: usize,
    ) -> Result<Vec<Sentence>, PipelineError> {
        corpus
            .par_iter()
            .map(|s| self.parse_sentence(s, beam_width))
            .collect()
    }

    /// Labeled semantic F1 of this model on a gold corpus, as a fraction.
    pub fn sem_f1(&self, gold: &[Sentence], beam_width: usize) -> Result<f64, PipelineError> {
        let predicted = self.parse_corpus(gold, beam_width)?;
        Ok(scoring::semantic_score(gold, &predicted)?.f1)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        let file = std::fs::File::create(path).map_err(|e| PipelineError::ModelIo {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut out = std::io::BufWriter::new(file);
        self.write(&mut out).map_err(|e| PipelineError::ModelIo {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "srl-model v1")?;
        writeln!(out, "scheme\t{}", self.scheme)?;
        writeln!(out, "bucket_distance\t{}", self.bucket_distance)?;
        writeln!(
            out,
            "classes\t{}\t{}\t{}\t{}\t{}\t{}",
            self.classes.verb_prefixes.join(","),
            self.classes.noun_prefixes.join(","),
            self.classes.prep_prefixes.join(","),
            self.classes.modal_tags.join(","),
            self.classes.participle_tags.join(","),
            self.classes.passive_auxiliaries.join(",")
        )?;
        writeln!(out, "templates\t{}\t{}", self.templates.name(), self.templates.len())?;
        for t in self.templates.iter() {
            writeln!(out, "{}", t.source())?;
        }
        self.model.write(out)
    }

    pub fn load(path: &Path) -> Result<TrainedPipeline, PipelineError> {
        let file = std::fs::File::open(path).map_err(|e| PipelineError::ModelIo {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut input = std::io::BufReader::new(file);
        Self::read(&mut input, &path.display().to_string())
    }

    pub fn read(input: &mut impl BufRead, path: &str) -> Result<TrainedPipeline, PipelineError> {
        let mut line_no = 0usize;
        let fail = |line: usize, message: String| PipelineError::ModelFormat {
            path: path.to_string(),
            line,
            message,
        };
        let next_line = |input: &mut dyn BufRead, line_no: &mut usize| {
            let mut buf = String::new();
            match input.read_line(&mut buf) {
                Ok(0) => Err(fail(*line_no + 1, "unexpected end of file".into())),
                Ok(_) => {
                    *line_no += 1;
                    Ok(buf.trim_end_matches('\n').to_string())
                }
                Err(e) => Err(fail(*line_no + 1, e.to_string())),
            }
        };

        let header = next_line(input, &mut line_no)?;
        if header != "srl-model v1" {
            return Err(fail(line_no, format!("bad header '{header}'")));
        }
        let scheme_line = next_line(input, &mut line_no)?;
        let scheme = scheme_line
            .strip_prefix("scheme\t")
            .and_then(TraverseScheme::parse)
            .ok_or_else(|| fail(line_no, "expected scheme".into()))?;
        let bucket_line = next_line(input, &mut line_no)?;
        let bucket_distance: bool = bucket_line
            .strip_prefix("bucket_distance\t")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| fail(line_no, "expected bucket_distance".into()))?;
        let classes_line = next_line(input, &mut line_no)?;
        let parts: Vec<&str> = classes_line
            .strip_prefix("classes\t")
            .ok_or_else(|| fail(line_no, "expected classes".into()))?
            .split('\t')
            .collect();
        if parts.len() != 6 {
            return Err(fail(line_no, "classes needs 6 fields".into()));
        }
        let list = |s: &str| -> Vec<String> {
            if s.is_empty() {
                Vec::new()
            } else {
                s.split(',').map(String::from).collect()
            }
        };
        let classes = PosClasses {
            verb_prefixes: list(parts[0]),
            noun_prefixes: list(parts[1]),
            prep_prefixes: list(parts[2]),
            modal_tags: list(parts[3]),
            participle_tags: list(parts[4]),
            passive_auxiliaries: list(parts[5]),
        };
        let tmpl_line = next_line(input, &mut line_no)?;
        let tmpl_parts: Vec<&str> = tmpl_line
            .strip_prefix("templates\t")
            .ok_or_else(|| fail(line_no, "expected templates".into()))?
            .split('\t')
            .collect();
        if tmpl_parts.len() != 2 {
            return Err(fail(line_no, "templates needs name and count".into()));
        }
        let name = tmpl_parts[0].to_string();
        let count: usize = tmpl_parts[1]
            .parse()
            .map_err(|e| fail(line_no, format!("bad template count: {e}")))?;
        let mut lines = String::new();
        for _ in 0..count {
            lines.push_str(&next_line(input, &mut line_no)?);
            lines.push('\n');
        }
        let templates = TemplateSet::parse_lines(&name, &lines)
            .map_err(|e| fail(line_no, format!("bad template section: {e}")))?;
        let model = MaxEntModel::read(input, path, &mut line_no)?;
        Ok(TrainedPipeline {
            model,
            templates,
            scheme,
            classes,
            bucket_distance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conll::example_sentence;
    use crate::labels::PairLabel;
    use crate::synth::{generate_corpus, GrammarParams};

    fn starter() -> TemplateSet {
        TemplateSet::parse_lines("starter", STARTER_TEMPLATES).unwrap()
    }

    fn memorization_config() -> PipelineConfig {
        PipelineConfig {
            train: TrainConfig {
                sigma_squared: 50.0,
                max_iterations: 600,
                tolerance: 1e-7,
                ..TrainConfig::default()
            },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn training_pairs_thread_gold_partial_structure() {
        let s = example_sentence();
        let templates = TemplateSet::parse_lines(
            "probe",
            "p.currentSense + p.lemma\na.existSemdprel_A1\n",
        )
        .unwrap();
        let samples = sentence_samples(
            &s,
            &templates,
            TraverseScheme::SynPth,
            &PosClasses::default(),
            true,
        );
        // The predicate-stage block precedes argument pairs, so by the time
        // `said` classifies its arguments the gold senses are in place.
        let said_a1 = samples
            .iter()
            .find(|x| x.label == "A1" && x.features[0].contains("say"))
            .expect("argument sample under 'said'");
        assert_eq!(said_a1.features[0], "p.currentSense + p.lemma=01#say");
        // existSemdprel sees roles assigned earlier under the same predicate:
        // by the time `traders` is classified, `shifted` already carries A1.
        let said_a0 = samples
            .iter()
            .find(|x| x.label == "A0" && x.features[0].contains("say"))
            .expect("A0 sample under 'said' comes after its A1");
        assert_eq!(said_a0.features[1], "a.existSemdprel_A1=1");
        // But the A0 under `focus` precedes any A1 assignment.
        let focus_a0 = samples
            .iter()
            .find(|x| x.label == "A0" && x.features[0].contains("focus"))
            .unwrap();
        assert_eq!(focus_a0.features[1], "a.existSemdprel_A1=0");
    }

    #[test]
    fn observed_labels_follow_canonical_order() {
        let s = example_sentence();
        let samples = sentence_samples(
            &s,
            &starter(),
            TraverseScheme::SynPth,
            &PosClasses::default(),
            true,
        );
        let labels = observed_labels(&samples, TraverseScheme::SynPth);
        assert_eq!(
            labels,
            vec!["01", "NONE_PRED", "A0", "A1", "AM-MNR", "NONE_ARG", "noMoreArg"]
        );
    }

    #[test]
    fn memorization_reproduces_gold_frames() {
        let corpus = vec![example_sentence()];
        let trained = train_pipeline(&corpus, &starter(), &memorization_config()).unwrap();
        let parsed = trained.parse_corpus(&corpus, 8).unwrap();
        assert_eq!(parsed[0].frames, corpus[0].frames);
        assert_eq!(
            parsed[0].token(3).pred.as_deref(),
            Some("shift.01"),
            "sense output is lemma.sense"
        );
        assert_eq!(trained.sem_f1(&corpus, 8).unwrap(), 1.0);
    }

    #[test]
    fn small_corpus_generalizes_to_held_out_sentences() {
        let params = GrammarParams::default();
        let corpus = generate_corpus(21, 90, &params).unwrap();
        let (train_part, dev_part) = corpus.split_at(75);
        let config = PipelineConfig {
            train: TrainConfig {
                sigma_squared: 10.0,
                max_iterations: 200,
                tolerance: 1e-5,
                ..TrainConfig::default()
            },
            ..PipelineConfig::default()
        };
        let trained = train_pipeline(train_part, &starter(), &config).unwrap();
        let f1 = trained.sem_f1(dev_part, 8).unwrap();
        assert!(f1 > 0.9, "dev Sem-F1 {f1}");
    }

    #[test]
    fn model_file_round_trips_with_identical_outputs() {
        let corpus = vec![example_sentence()];
        let trained = train_pipeline(&corpus, &starter(), &memorization_config()).unwrap();
        let mut bytes = Vec::new();
        trained.write(&mut bytes).unwrap();
        let loaded =
            TrainedPipeline::read(&mut std::io::Cursor::new(&bytes), "mem").unwrap();
        assert_eq!(loaded.scheme, trained.scheme);
        assert_eq!(loaded.templates, trained.templates);
        let a = trained.parse_corpus(&corpus, 8).unwrap();
        let b = loaded.parse_corpus(&corpus, 8).unwrap();
        assert_eq!(a, b);
        let mut rebytes = Vec::new();
        loaded.write(&mut rebytes).unwrap();
        assert_eq!(bytes, rebytes);
    }

    #[test]
    fn training_is_reproducible_byte_for_byte() {
        let corpus = generate_corpus(3, 12, &GrammarParams::default()).unwrap();
        let emit = || {
            let trained =
                train_pipeline(&corpus, &starter(), &PipelineConfig::default()).unwrap();
            let mut bytes = Vec::new();
            trained.write(&mut bytes).unwrap();
            bytes
        };
        assert_eq!(emit(), emit());
    }

    #[test]
    fn linear_scheme_trains_and_decodes_consistently() {
        let corpus = vec![example_sentence()];
        let config = PipelineConfig {
            scheme: TraverseScheme::LinPth,
            ..memorization_config()
        };
        let trained = train_pipeline(&corpus, &starter(), &config).unwrap();
        let parsed = trained.parse_corpus(&corpus, 8).unwrap();
        assert_eq!(parsed[0].frames, corpus[0].frames);
        // The linPth label space is in use.
        assert!(trained
            .model
            .labels()
            .iter()
            .any(|l| PairLabel::parse(l) == Some(PairLabel::NoMoreLeftArg)));
    }
}
