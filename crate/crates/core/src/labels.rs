//! Class-label inventory for the word-pair classifier.
//!
//! Three label families share one space: predicate sense labels (`"01"`..`"21"`
//! plus `NONE_PRED`), argument role labels (the 54 PropBank/NomBank roles plus
//! `NONE_ARG`), and the auxiliary stop labels that adaptive pruning introduces
//! (`noMoreArg` along the syntactic traversal, `noMoreLeftArg`/`noMoreRightArg`
//! along the linear one). The standard sets hold 78 labels for `SynPth` and 79
//! for `LinPth`.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Argument-candidate traversal scheme: along the syntactic tree or the
/// linear word sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraverseScheme {
    SynPth,
    LinPth,
}

impl TraverseScheme {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraverseScheme::SynPth => "synPth",
            TraverseScheme::LinPth => "linPth",
        }
    }

    pub fn parse(s: &str) -> Option<TraverseScheme> {
        match s {
            "synPth" | "synpth" | "syn" => Some(TraverseScheme::SynPth),
            "linPth" | "linpth" | "lin" => Some(TraverseScheme::LinPth),
            _ => None,
        }
    }
}

impl fmt::Display for TraverseScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The 54 argument role labels, in canonical order.
pub const ROLE_INVENTORY: [&str; 54] = [
    "A0", "A1", "A2", "A3", "A4", "A5", "AA", "AM", "AM-ADV", "AM-CAU", "AM-DIR", "AM-DIS",
    "AM-EXT", "AM-LOC", "AM-MNR", "AM-MOD", "AM-NEG", "AM-PNC", "AM-PRD", "AM-PRT", "AM-REC",
    "AM-TM", "AM-TMP", "C-A0", "C-A1", "C-A2", "C-A3", "C-A4", "C-AM-ADV", "C-AM-CAU",
    "C-AM-DIR", "C-AM-DIS", "C-AM-EXT", "C-AM-LOC", "C-AM-MNR", "C-AM-NEG", "C-AM-PNC",
    "C-AM-TMP", "C-R-AM-TMP", "R-A0", "R-A1", "R-A2", "R-A3", "R-A4", "R-AA", "R-AM-ADV",
    "R-AM-CAU", "R-AM-DIR", "R-AM-EXT", "R-AM-LOC", "R-AM-MNR", "R-AM-PNC", "R-AM-TMP", "SU",
];

pub const NONE_PRED: &str = "NONE_PRED";
pub const NONE_ARG: &str = "NONE_ARG";
pub const NO_MORE_ARG: &str = "noMoreArg";
pub const NO_MORE_LEFT_ARG: &str = "noMoreLeftArg";
pub const NO_MORE_RIGHT_ARG: &str = "noMoreRightArg";

/// True iff `label` is one of the 54 argument roles.
pub fn is_role_label(label: &str) -> bool {
    ROLE_INVENTORY.contains(&label)
}

/// True iff `label` is a two-digit sense label `"01"`..`"21"`.
pub fn is_sense_label(label: &str) -> bool {
    label.len() == 2
        && label.bytes().all(|b| b.is_ascii_digit())
        && matches!(label.parse::<u8>(), Ok(1..=21))
}

/// True iff `label` is an adaptive-pruning stop label.
pub fn is_auxiliary_label(label: &str) -> bool {
    label == NO_MORE_ARG || label == NO_MORE_LEFT_ARG || label == NO_MORE_RIGHT_ARG
}

/// The label of one classified word pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PairLabel {
    /// Predicate-stage: a two-digit sense string.
    Sense(String),
    /// Predicate-stage: candidate is not a predicate.
    NonePred,
    /// Argument-stage: one of the 54 roles.
    Role(String),
    /// Argument-stage: candidate is not an argument.
    NoneArg,
    NoMoreArg,
    NoMoreLeftArg,
    NoMoreRightArg,
}

impl PairLabel {
    pub fn as_str(&self) -> &str {
        match self {
            PairLabel::Sense(s) => s,
            PairLabel::NonePred => NONE_PRED,
            PairLabel::Role(r) => r,
            PairLabel::NoneArg => NONE_ARG,
            PairLabel::NoMoreArg => NO_MORE_ARG,
            PairLabel::NoMoreLeftArg => NO_MORE_LEFT_ARG,
            PairLabel::NoMoreRightArg => NO_MORE_RIGHT_ARG,
        }
    }

    pub fn parse(s: &str) -> Option<PairLabel> {
        match s {
            NONE_PRED => Some(PairLabel::NonePred),
            NONE_ARG => Some(PairLabel::NoneArg),
            NO_MORE_ARG => Some(PairLabel::NoMoreArg),
            NO_MORE_LEFT_ARG => Some(PairLabel::NoMoreLeftArg),
            NO_MORE_RIGHT_ARG => Some(PairLabel::NoMoreRightArg),
            _ if is_role_label(s) => Some(PairLabel::Role(s.to_string())),
            _ if is_sense_label(s) => Some(PairLabel::Sense(s.to_string())),
            _ => None,
        }
    }

    /// Auxiliary labels never appear in final frames.
    pub fn is_auxiliary(&self) -> bool {
        matches!(
            self,
            PairLabel::NoMoreArg | PairLabel::NoMoreLeftArg | PairLabel::NoMoreRightArg
        )
    }

    pub fn is_predicate_stage(&self) -> bool {
        matches!(self, PairLabel::Sense(_) | PairLabel::NonePred)
    }

    pub fn is_argument_stage(&self) -> bool {
        !self.is_predicate_stage()
    }
}

impl fmt::Display for PairLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The full ordered label space for one traversal scheme.
///
/// Order is canonical: senses "01".."21", NONE_PRED, the 54 roles, NONE_ARG,
/// then the scheme's auxiliary labels. Tie-breaking throughout the decoder
/// prefers the lower index in this order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    scheme: TraverseScheme,
    labels: Vec<String>,
}

impl LabelSet {
    pub fn standard(scheme: TraverseScheme) -> LabelSet {
        let mut labels = Vec::with_capacity(79);
        for s in 1..=21 {
            labels.push(format!("{s:02}"));
        }
        labels.push(NONE_PRED.to_string());
        labels.extend(ROLE_INVENTORY.iter().map(|r| r.to_string()));
        labels.push(NONE_ARG.to_string());
        match scheme {
            TraverseScheme::SynPth => labels.push(NO_MORE_ARG.to_string()),
            TraverseScheme::LinPth => {
                labels.push(NO_MORE_LEFT_ARG.to_string());
                labels.push(NO_MORE_RIGHT_ARG.to_string());
            }
        }
        LabelSet { scheme, labels }
    }

    pub fn scheme(&self) -> TraverseScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index_of(label).is_some()
    }

    /// Canonical sort rank used when building data-driven model label lists:
    /// standard-set position first, unknown labels after, lexicographically.
    pub fn sort_rank(&self, label: &str) -> (usize, String) {
        match self.index_of(label) {
            Some(i) => (i, String::new()),
            None => (self.labels.len(), label.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_sizes_match_scheme() {
        assert_eq!(LabelSet::standard(TraverseScheme::SynPth).len(), 78);
        assert_eq!(LabelSet::standard(TraverseScheme::LinPth).len(), 79);
    }

    #[test]
    fn role_inventory_is_distinct() {
        let mut roles = ROLE_INVENTORY.to_vec();
        roles.sort_unstable();
        roles.dedup();
        assert_eq!(roles.len(), 54);
    }

    #[test]
    fn sense_labels_are_two_digit() {
        assert!(is_sense_label("01"));
        assert!(is_sense_label("21"));
        assert!(!is_sense_label("00"));
        assert!(!is_sense_label("22"));
        assert!(!is_sense_label("1"));
        assert!(!is_sense_label("0a"));
    }

    #[test]
    fn aux_never_in_role_inventory() {
        for aux in [NO_MORE_ARG, NO_MORE_LEFT_ARG, NO_MORE_RIGHT_ARG, NONE_ARG] {
            assert!(!is_role_label(aux));
        }
    }

    #[test]
    fn pair_label_round_trips() {
        for s in ["01", "21", "NONE_PRED", "A0", "AM-MNR", "NONE_ARG", "noMoreArg"] {
            assert_eq!(PairLabel::parse(s).unwrap().as_str(), s);
        }
        assert_eq!(PairLabel::parse("bogus"), None);
    }
}
