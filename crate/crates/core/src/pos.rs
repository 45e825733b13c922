//! POS-class configuration.
//!
//! Verb/noun/preposition membership is decided by configurable tag prefixes so
//! the same machinery works for Penn tags and synthetic tag sets alike.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PosClasses {
    pub verb_prefixes: Vec<String>,
    pub noun_prefixes: Vec<String>,
    pub prep_prefixes: Vec<String>,
    /// Tags treated as modal verbs by the baseline_Mod feature.
    pub modal_tags: Vec<String>,
    /// Tags treated as passive participles by the voice rule.
    pub participle_tags: Vec<String>,
    /// Lowercased forms/lemmas that license a Passive reading when found among
    /// a participle's ancestors or dependents.
    pub passive_auxiliaries: Vec<String>,
}

impl Default for PosClasses {
    fn default() -> Self {
        PosClasses {
            verb_prefixes: vec!["V".into()],
            noun_prefixes: vec!["N".into()],
            prep_prefixes: vec!["IN".into()],
            modal_tags: vec!["MD".into()],
            participle_tags: vec!["VBN".into()],
            passive_auxiliaries: [
                "be", "am", "is", "are", "was", "were", "been", "being", "get", "got", "gets",
                "getting", "gotten",
            ]
            .into_iter()
            .map(String::from)
            .collect(),
        }
    }
}

impl PosClasses {
    pub fn is_verb(&self, pos: &str) -> bool {
        self.verb_prefixes.iter().any(|p| pos.starts_with(p.as_str()))
    }

    pub fn is_noun(&self, pos: &str) -> bool {
        self.noun_prefixes.iter().any(|p| pos.starts_with(p.as_str()))
    }

    pub fn is_prep(&self, pos: &str) -> bool {
        self.prep_prefixes.iter().any(|p| pos.starts_with(p.as_str()))
    }

    pub fn is_modal(&self, pos: &str) -> bool {
        self.modal_tags.iter().any(|t| t == pos)
    }

    pub fn is_participle(&self, pos: &str) -> bool {
        self.participle_tags.iter().any(|t| t == pos)
    }

    pub fn is_passive_auxiliary(&self, word: &str) -> bool {
        let lower = word.to_ascii_lowercase();
        self.passive_auxiliaries.iter().any(|w| *w == lower)
    }

    /// Predicate candidates are verbs and nouns.
    pub fn is_predicate_candidate(&self, pos: &str) -> bool {
        self.is_verb(pos) || self.is_noun(pos)
    }
}
