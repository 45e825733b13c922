//! Semantic dependency parsing as word-pair classification.
//!
//! The pipeline turns syntactically analyzed sentences into head-dependent
//! word pairs (adaptive candidate pruning), evaluates feature templates over
//! each pair, trains a maximum-entropy classifier, and beam-decodes
//! predicate-argument structures, with CoNLL-style scoring throughout.

pub mod conll;
pub mod pruning;
pub mod selection;
pub mod scoring;
pub mod synth;
pub mod templates;
pub mod decoder;
pub mod deptree;
pub mod labels;
pub mod pipeline;
pub mod lbfgs;
pub mod maxent;
pub mod pos;

pub use conll::{parse_corpus, serialize_corpus, SemanticFrame, Sentence, Token};
pub use deptree::DepGraph;
pub use labels::{LabelSet, PairLabel, TraverseScheme};
pub use pos::PosClasses;
