//! Conditional maximum-entropy classifier over string-feature sets.
//!
//! Training maximizes the log-likelihood penalized by a Gaussian prior
//! (`sum w^2 / 2 sigma^2`) with L-BFGS. Features are binary presence
//! indicators. Gradient accumulation runs in fixed-size sample blocks whose
//! per-block results are combined in block order, so worker count never
//! changes the result; prediction sums weights in sorted feature-id order,
//! making it invariant under feature-set permutation.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::lbfgs::{self, LbfgsParams};

#[derive(Debug, Error)]
pub enum MaxEntError {
    #[error("empty sample set")]
    EmptySamples,
    #[error("sample label '{0}' is not in the model label list")]
    UnknownLabel(String),
    #[error("label list holds duplicates or is empty")]
    BadLabelList,
    #[error("dimension mismatch: {0}")]
    Dimensions(String),
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
pub struct TrainConfig {
    /// Gaussian prior variance.
    pub sigma_squared: f64,
    pub lbfgs_memory: usize,
    pub max_iterations: usize,
    /// Gradient infinity-norm convergence threshold.
    pub tolerance: f64,
    /// Features occurring fewer than this many times are dropped before
    /// indexing; 1 keeps everything.
    pub feature_cutoff: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            sigma_squared: 1.0,
            lbfgs_memory: 8,
            max_iterations: 300,
            tolerance: 1e-6,
            feature_cutoff: 1,
        }
    }
}

/// Bidirectional feature-string <-> dense-id map. Frozen after training;
/// unseen strings at prediction time simply contribute nothing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureIndex {
    names: Vec<String>,
    ids: HashMap<String, usize>,
}

impl FeatureIndex {
    pub fn intern(&mut self, name: &str) -> usize {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.ids.insert(name.to_string(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<usize> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainMeta {
    pub iterations: usize,
    pub final_objective: f64,
    pub converged: bool,
    pub samples: usize,
    pub dropped_features: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntModel {
    labels: Vec<String>,
    features: FeatureIndex,
    /// Row-major `[feature id * n_labels + label id]`.
    weights: Vec<f64>,
    pub sigma_squared: f64,
    /// Template-set provenance recorded in the model header.
    pub provenance: String,
    pub meta: TrainMeta,
}

/// One training instance: a feature-string set and its label.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<String>,
    pub label: String,
}

/// Indexed samples shared by training and the gradient oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexedSamples {
    /// Sorted, deduplicated feature ids per sample.
    pub rows: Vec<(Vec<usize>, usize)>,
    pub n_features: usize,
    pub n_labels: usize,
}

const BLOCK: usize = 4096;

/// Negated penalized log-likelihood and its gradient at `weights`.
///
/// Gradient entry (f, l) = model-expected count - empirical count + w/sigma^2.
pub fn objective_and_gradient(
    weights: &[f64],
    samples: &IndexedSamples,
    sigma_squared: f64,
) -> Result<(f64, Vec<f64>), MaxEntError> {
    let nl = samples.n_labels;
    if weights.len() != samples.n_features * nl {
        return Err(MaxEntError::Dimensions(format!(
            "{} weights for {} features x {} labels",
            weights.len(),
            samples.n_features,
            nl
        )));
    }
    let mut grad = vec![0.0; weights.len()];
    let mut objective = 0.0;

    for block in samples.rows.chunks(BLOCK) {
        // Probability rows are independent per sample; the sequential
        // accumulation below fixes the summation order.
        let rows: Vec<(Vec<f64>, f64)> = block
            .par_iter()
            .map(|(feats, label)| {
                let probs = label_probs(weights, nl, feats);
                let logp = probs[*label].ln();
                (probs, logp)
            })
            .collect();
        for ((feats, label), (probs, logp)) in block.iter().zip(rows) {
            objective -= logp;
            for &f in feats {
                let base = f * nl;
                for (l, p) in probs.iter().enumerate() {
                    grad[base + l] += p;
                }
                grad[base + *label] -= 1.0;
            }
        }
    }

    for (g, w) in grad.iter_mut().zip(weights) {
        *g += w / sigma_squared;
        objective += w * w / (2.0 * sigma_squared);
    }
    Ok((objective, grad))
}

fn label_probs(weights: &[f64], n_labels: usize, feats: &[usize]) -> Vec<f64> {
    let mut scores = vec![0.0; n_labels];
    for &f in feats {
        let base = f * n_labels;
        for (s, w) in scores.iter_mut().zip(&weights[base..base + n_labels]) {
            *s += w;
        }
    }
    let max = scores.iter().fold(f64::NEG_INFINITY, |m, s| m.max(*s));
    let mut z = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        z += *s;
    }
    for s in scores.iter_mut() {
        *s /= z;
    }
    scores
}

/// Indexes samples against a fixed label list, applying the count cutoff.
pub fn index_samples(
    samples: &[Sample],
    labels: &[String],
    feature_cutoff: usize,
) -> Result<(FeatureIndex, IndexedSamples, usize), MaxEntError> {
    if samples.is_empty() {
        return Err(MaxEntError::EmptySamples);
    }
    if labels.is_empty() {
        return Err(MaxEntError::BadLabelList);
    }
    let mut label_ids: HashMap<&str, usize> = HashMap::new();
    for (i, l) in labels.iter().enumerate() {
        if label_ids.insert(l.as_str(), i).is_some() {
            return Err(MaxEntError::BadLabelList);
        }
    }

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for s in samples {
        for f in &s.features {
            *counts.entry(f.as_str()).or_insert(0) += 1;
        }
    }
    let mut index = FeatureIndex::default();
    let mut dropped = 0usize;
    let mut rows = Vec::with_capacity(samples.len());
    for s in samples {
        let label = *label_ids
            .get(s.label.as_str())
            .ok_or_else(|| MaxEntError::UnknownLabel(s.label.clone()))?;
        let mut feats: Vec<usize> = Vec::with_capacity(s.features.len());
        for f in &s.features {
            if counts[f.as_str()] < feature_cutoff {
                dropped += 1;
                continue;
            }
            feats.push(index.intern(f));
        }
        feats.sort_unstable();
        feats.dedup();
        rows.push((feats, label));
    }
    let n_features = index.len();
    Ok((
        index,
        IndexedSamples {
            rows,
            n_features,
            n_labels: labels.len(),
        },
        dropped,
    ))
}

/// Trains a model. The caller supplies the ordered label list; every sample
/// label must be in it. Deterministic given sample order and config.
pub fn train(
    samples: &[Sample],
    labels: &[String],
    config: &TrainConfig,
) -> Result<MaxEntModel, MaxEntError> {
    let (features, indexed, dropped) = index_samples(samples, labels, config.feature_cutoff)?;
    let mut warnings = Vec::new();
    let distinct: std::collections::HashSet<&str> =
        samples.iter().map(|s| s.label.as_str()).collect();
    if distinct.len() == 1 {
        warnings.push(format!(
            "degenerate training set: single label '{}'",
            samples[0].label
        ));
    }

    let mut weights = vec![0.0; indexed.n_features * indexed.n_labels];
    let params = LbfgsParams {
        memory: config.lbfgs_memory.max(1),
        max_iterations: config.max_iterations,
        tolerance: config.tolerance,
    };
    let outcome = lbfgs::minimize(&mut weights, &params, |w, g| {
        let (obj, grad) =
            objective_and_gradient(w, &indexed, config.sigma_squared).expect("fixed dims");
        g.copy_from_slice(&grad);
        obj
    });

    Ok(MaxEntModel {
        labels: labels.to_vec(),
        features,
        weights,
        sigma_squared: config.sigma_squared,
        provenance: String::new(),
        meta: TrainMeta {
            iterations: outcome.iterations,
            final_objective: outcome.objective,
            converged: outcome.converged,
            samples: samples.len(),
            dropped_features: dropped,
            warnings,
        },
    })
}

impl MaxEntModel {
    /// A zero-weight model over the given labels: uniform everywhere.
    pub fn uniform(labels: &[String]) -> MaxEntModel {
        MaxEntModel {
            labels: labels.to_vec(),
            features: FeatureIndex::default(),
            weights: Vec::new(),
            sigma_squared: 1.0,
            provenance: String::new(),
            meta: TrainMeta::default(),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// Sorted ids of the known features in the set; unseen strings drop out.
    fn feature_ids(&self, features: &[&str]) -> Vec<usize> {
        let mut ids: Vec<usize> = features
            .iter()
            .filter_map(|f| self.features.get(f))
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// Distribution over all labels; probabilities sum to 1.
    pub fn predict_proba(&self, features: &[&str]) -> Vec<f64> {
        let ids = self.feature_ids(features);
        label_probs(&self.weights, self.labels.len(), &ids)
    }

    /// Log-probabilities over `allowed` label ids, renormalized to that set.
    pub fn predict_log_proba_masked(&self, features: &[&str], allowed: &[usize]) -> Vec<f64> {
        let ids = self.feature_ids(features);
        let nl = self.labels.len();
        let mut scores: Vec<f64> = allowed
            .iter()
            .map(|&l| {
                ids.iter()
                    .map(|&f| self.weights[f * nl + l])
                    .sum::<f64>()
            })
            .collect();
        let max = scores.iter().fold(f64::NEG_INFINITY, |m, s| m.max(*s));
        let logz = max
            + scores
                .iter()
                .map(|s| (s - max).exp())
                .sum::<f64>()
                .ln();
        for s in scores.iter_mut() {
            *s -= logz;
        }
        scores
    }

    pub fn save(&self, path: &Path) -> Result<(), MaxEntError> {
        let file = std::fs::File::create(path).map_err(|e| MaxEntError::ModelIo {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut w = std::io::BufWriter::new(file);
        self.write(&mut w).map_err(|e| MaxEntError::ModelIo {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn write(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "maxent v1")?;
        writeln!(out, "labels\t{}", self.labels.join("\t"))?;
        writeln!(out, "sigma2\t{}", self.sigma_squared)?;
        writeln!(out, "provenance\t{}", escape_line(&self.provenance))?;
        writeln!(
            out,
            "meta\t{}\t{}\t{}\t{}\t{}",
            self.meta.iterations,
            self.meta.final_objective,
            self.meta.converged,
            self.meta.samples,
            self.meta.dropped_features
        )?;
        writeln!(out, "features\t{}", self.features.len())?;
        let nl = self.labels.len();
        for id in 0..self.features.len() {
            let row: Vec<String> = self.weights[id * nl..(id + 1) * nl]
                .iter()
                .map(|w| w.to_string())
                .collect();
            writeln!(
                out,
                "{}\t{}",
                escape_line(self.features.name(id)),
                row.join(" ")
            )?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<MaxEntModel, MaxEntError> {
        let file = std::fs::File::open(path).map_err(|e| MaxEntError::ModelIo {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let mut reader = std::io::BufReader::new(file);
        Self::read(&mut reader, &path.display().to_string(), &mut 0)
    }

    pub fn read(
        input: &mut impl BufRead,
        path: &str,
        line_no: &mut usize,
    ) -> Result<MaxEntModel, MaxEntError> {
        let fail = |line: usize, message: String| MaxEntError::ModelFormat {
            path: path.to_string(),
            line,
            message,
        };
        let mut next_line = |line_no: &mut usize| -> Result<String, MaxEntError> {
            let mut buf = String::new();
            let n = input
                .read_line(&mut buf)
                .map_err(|e| fail(*line_no + 1, e.to_string()))?;
            if n == 0 {
                return Err(fail(*line_no + 1, "unexpected end of file".into()));
            }
            *line_no += 1;
            Ok(buf.trim_end_matches('\n').to_string())
        };

        let header = next_line(line_no)?;
        if header != "maxent v1" {
            return Err(fail(*line_no, format!("bad header '{header}'")));
        }
        let labels_line = next_line(line_no)?;
        let labels: Vec<String> = labels_line
            .strip_prefix("labels\t")
            .ok_or_else(|| fail(*line_no, "expected labels".into()))?
            .split('\t')
            .map(String::from)
            .collect();
        let sigma_line = next_line(line_no)?;
        let sigma_squared: f64 = sigma_line
            .strip_prefix("sigma2\t")
            .ok_or_else(|| fail(*line_no, "expected sigma2".into()))?
            .parse()
            .map_err(|e| fail(*line_no, format!("bad sigma2: {e}")))?;
        let prov_line = next_line(line_no)?;
        let provenance = unescape_line(
            prov_line
                .strip_prefix("provenance\t")
                .ok_or_else(|| fail(*line_no, "expected provenance".into()))?,
        );
        let meta_line = next_line(line_no)?;
        let meta_parts: Vec<&str> = meta_line
            .strip_prefix("meta\t")
            .ok_or_else(|| fail(*line_no, "expected meta".into()))?
            .split('\t')
            .collect();
        if meta_parts.len() != 5 {
            return Err(fail(*line_no, "meta needs 5 fields".into()));
        }
        let meta = TrainMeta {
            iterations: meta_parts[0]
                .parse()
                .map_err(|e| fail(*line_no, format!("bad meta: {e}")))?,
            final_objective: meta_parts[1]
                .parse()
                .map_err(|e| fail(*line_no, format!("bad meta: {e}")))?,
            converged: meta_parts[2]
                .parse()
                .map_err(|e| fail(*line_no, format!("bad meta: {e}")))?,
            samples: meta_parts[3]
                .parse()
                .map_err(|e| fail(*line_no, format!("bad meta: {e}")))?,
            dropped_features: meta_parts[4]
                .parse()
                .map_err(|e| fail(*line_no, format!("bad meta: {e}")))?,
            warnings: Vec::new(),
        };
        let count_line = next_line(line_no)?;
        let n_features: usize = count_line
            .strip_prefix("features\t")
            .ok_or_else(|| fail(*line_no, "expected features count".into()))?
            .parse()
            .map_err(|e| fail(*line_no, format!("bad feature count: {e}")))?;

        let nl = labels.len();
        let mut features = FeatureIndex::default();
        let mut weights = Vec::with_capacity(n_features * nl);
        for _ in 0..n_features {
            let row = next_line(line_no)?;
            let (name, values) = row
                .split_once('\t')
                .ok_or_else(|| fail(*line_no, "expected feature row".into()))?;
            features.intern(&unescape_line(name));
            let mut n = 0;
            for v in values.split(' ') {
                let w: f64 = v
                    .parse()
                    .map_err(|e| fail(*line_no, format!("bad weight: {e}")))?;
                weights.push(w);
                n += 1;
            }
            if n != nl {
                return Err(fail(*line_no, format!("{n} weights for {nl} labels")));
            }
        }

        Ok(MaxEntModel {
            labels,
            features,
            weights,
            sigma_squared,
            provenance,
            meta,
        })
    }
}

fn escape_line(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            other => out.push(other),
        }
    }
    out
}

fn unescape_line(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}
