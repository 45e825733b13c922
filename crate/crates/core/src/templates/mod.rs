//! Feature-template macro language: parsing, evaluation, template-set files.
//!
//! A template is a `+`-concatenation of terms. Each term reads attributes off
//! nodes reached from the pair anchors `a` (dependent) and `p` (head),
//! through navigations (`h`, `lm`, `ln`, `rm`, `rn`, `pphead`, support
//! words, `isCurPred`) with optional positional offsets (`a-1`, `p1`,
//! `a.lm-1`), over child collections (`children`, `noFarChildren`), or along
//! paths (`a:p|dpPath.dprel.seq`, `a:p.dpTreeRelation`). Collections are
//! reduced by `seq`, `noDup` or `bag` (default `seq`). `x = y ?` probes
//! equality against another value or a literal.
//!
//! Every template evaluates to one feature string `<canonical text>=<value>`;
//! absent navigations surface as the NIL token `\N` inside the value, so
//! absence is informative and evaluation is total.

mod eval;
mod parser;

use std::fmt;
use std::path::Path;

use thiserror::Error;

pub use eval::{EvalContext, PartialParse, NIL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    A,
    P,
}

impl Anchor {
    fn as_str(&self) -> &'static str {
        match self {
            Anchor::A => "a",
            Anchor::P => "p",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nav {
    Head,
    Lm,
    Ln,
    Rm,
    Rn,
    PpHead,
    IsCurPred,
    HighSupportVerb,
    HighSupportNoun,
    HighSupportProp,
    LowSupportVerb,
    LowSupportNoun,
    LowSupportProp,
}

impl Nav {
    pub(crate) fn from_name(name: &str) -> Option<Nav> {
        Some(match name {
            "h" => Nav::Head,
            "lm" => Nav::Lm,
            "ln" => Nav::Ln,
            "rm" => Nav::Rm,
            "rn" => Nav::Rn,
            "pphead" => Nav::PpHead,
            "isCurPred" => Nav::IsCurPred,
            "highSupportVerb" => Nav::HighSupportVerb,
            "highSupportNoun" => Nav::HighSupportNoun,
            "highSupportProp" => Nav::HighSupportProp,
            "lowSupportVerb" => Nav::LowSupportVerb,
            "lowSupportNoun" => Nav::LowSupportNoun,
            "lowSupportProp" => Nav::LowSupportProp,
            _ => return None,
        })
    }

    fn as_str(&self) -> &'static str {
        match self {
            Nav::Head => "h",
            Nav::Lm => "lm",
            Nav::Ln => "ln",
            Nav::Rm => "rm",
            Nav::Rn => "rn",
            Nav::PpHead => "pphead",
            Nav::IsCurPred => "isCurPred",
            Nav::HighSupportVerb => "highSupportVerb",
            Nav::HighSupportNoun => "highSupportNoun",
            Nav::HighSupportProp => "highSupportProp",
            Nav::LowSupportVerb => "lowSupportVerb",
            Nav::LowSupportNoun => "lowSupportNoun",
            Nav::LowSupportProp => "lowSupportProp",
        }
    }
}

/// A node expression: anchor, optional offset, navigation chain with
/// per-step offsets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeExpr {
    pub anchor: Anchor,
    pub offset: i32,
    pub navs: Vec<(Nav, i32)>,
}

impl fmt::Display for NodeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.anchor.as_str())?;
        if self.offset != 0 {
            write!(f, "{}", self.offset)?;
        }
        for (nav, off) in &self.navs {
            write!(f, ".{}", nav.as_str())?;
            if *off != 0 {
                write!(f, "{off}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Attr {
    Form,
    Lemma,
    Pos,
    SpForm,
    SpLemma,
    SpPos,
    Dprel,
    Semdprel,
    CurrentSense,
    Voice,
    IsLeaf,
    CtypeSemdprel,
    RtypeSemdprel,
    IsCtypeSemdprel,
    IsRtypeSemdprel,
    BaselineAx,
    BaselineMod,
    /// `existSemdprel_<LABEL>`: has the label already been assigned under
    /// the current predicate?
    ExistSemdprel(String),
}

impl Attr {
    pub(crate) fn from_name(name: &str) -> Option<Attr> {
        Some(match name {
            "form" => Attr::Form,
            "lemma" => Attr::Lemma,
            "pos" => Attr::Pos,
            "spForm" => Attr::SpForm,
            "spLemma" => Attr::SpLemma,
            "spPos" => Attr::SpPos,
            "dprel" => Attr::Dprel,
            "semdprel" => Attr::Semdprel,
            "currentSense" | "sense" => Attr::CurrentSense,
            "voice" => Attr::Voice,
            "isLeaf" => Attr::IsLeaf,
            "ctypeSemdprel" => Attr::CtypeSemdprel,
            "rtypeSemdprel" => Attr::RtypeSemdprel,
            "isCtypeSemdprel" => Attr::IsCtypeSemdprel,
            "isRtypeSemdprel" => Attr::IsRtypeSemdprel,
            "baseline_Ax" => Attr::BaselineAx,
            "baseline_Mod" => Attr::BaselineMod,
            _ => {
                let suffix = name.strip_prefix("existSemdprel_")?;
                if suffix.is_empty() {
                    return None;
                }
                Attr::ExistSemdprel(suffix.to_string())
            }
        })
    }

    pub(crate) fn is_baseline(&self) -> bool {
        matches!(self, Attr::BaselineAx | Attr::BaselineMod)
    }
}

impl fmt::Display for Attr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Attr::Form => "form",
            Attr::Lemma => "lemma",
            Attr::Pos => "pos",
            Attr::SpForm => "spForm",
            Attr::SpLemma => "spLemma",
            Attr::SpPos => "spPos",
            Attr::Dprel => "dprel",
            Attr::Semdprel => "semdprel",
            Attr::CurrentSense => "currentSense",
            Attr::Voice => "voice",
            Attr::IsLeaf => "isLeaf",
            Attr::CtypeSemdprel => "ctypeSemdprel",
            Attr::RtypeSemdprel => "rtypeSemdprel",
            Attr::IsCtypeSemdprel => "isCtypeSemdprel",
            Attr::IsRtypeSemdprel => "isRtypeSemdprel",
            Attr::BaselineAx => "baseline_Ax",
            Attr::BaselineMod => "baseline_Mod",
            Attr::ExistSemdprel(l) => return write!(f, "existSemdprel_{l}"),
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollectionNav {
    Children,
    NoFarChildren,
}

impl CollectionNav {
    pub(crate) fn from_name(name: &str) -> Option<CollectionNav> {
        match name {
            "children" => Some(CollectionNav::Children),
            "noFarChildren" => Some(CollectionNav::NoFarChildren),
            _ => None,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            CollectionNav::Children => "children",
            CollectionNav::NoFarChildren => "noFarChildren",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    DpPath,
    DpPathArgu,
    DpPathPred,
    DpPathShared,
    LinePath,
}

impl PathKind {
    pub(crate) fn from_name(name: &str) -> Option<PathKind> {
        Some(match name {
            "dpPath" => PathKind::DpPath,
            "dpPathArgu" => PathKind::DpPathArgu,
            "dpPathPred" => PathKind::DpPathPred,
            "dpPathShared" | "dpPathShare" => PathKind::DpPathShared,
            "linePath" => PathKind::LinePath,
            _ => return None,
        })
    }

    fn as_str(&self) -> &'static str {
        match self {
            PathKind::DpPath => "dpPath",
            PathKind::DpPathArgu => "dpPathArgu",
            PathKind::DpPathPred => "dpPathPred",
            PathKind::DpPathShared => "dpPathShared",
            PathKind::LinePath => "linePath",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairAttr {
    DpTreeRelation,
    ExistCross,
    Direction,
}

impl PairAttr {
    pub(crate) fn from_name(name: &str) -> Option<PairAttr> {
        Some(match name {
            "dpTreeRelation" => PairAttr::DpTreeRelation,
            "existCross" => PairAttr::ExistCross,
            "direction" => PairAttr::Direction,
            _ => return None,
        })
    }

    fn as_str(&self) -> &'static str {
        match self {
            PairAttr::DpTreeRelation => "dpTreeRelation",
            PairAttr::ExistCross => "existCross",
            PairAttr::Direction => "direction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reducer {
    Seq,
    NoDup,
    Bag,
}

impl Reducer {
    pub(crate) fn from_name(name: &str) -> Option<Reducer> {
        match name {
            "seq" => Some(Reducer::Seq),
            "noDup" => Some(Reducer::NoDup),
            "bag" => Some(Reducer::Bag),
            _ => None,
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Reducer::Seq => "seq",
            Reducer::NoDup => "noDup",
            Reducer::Bag => "bag",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueExpr {
    /// `a.lm.lemma`, `a.spPos.baseline_Ax` (a baseline attribute may chain
    /// after the first attribute).
    NodeAttr { node: NodeExpr, attrs: Vec<Attr> },
    /// `p.children.dprel.noDup`
    Collection {
        node: NodeExpr,
        nav: CollectionNav,
        attr: Attr,
        reducer: Option<Reducer>,
    },
    /// `a:p|dpPath.dprel.seq`; without a reducer the collection joins in
    /// path order.
    PathCollect {
        from: NodeExpr,
        to: NodeExpr,
        path: PathKind,
        attr: Attr,
        reducer: Option<Reducer>,
    },
    /// `a:p|dpPath.distance`
    PathDistance {
        from: NodeExpr,
        to: NodeExpr,
        path: PathKind,
    },
    /// `a:p.dpTreeRelation`, `a:p.existCross`, `a:p.direction`
    PairProbe {
        from: NodeExpr,
        to: NodeExpr,
        attr: PairAttr,
    },
}

impl fmt::Display for ValueExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueExpr::NodeAttr { node, attrs } => {
                write!(f, "{node}")?;
                for a in attrs {
                    write!(f, ".{a}")?;
                }
                Ok(())
            }
            ValueExpr::Collection {
                node,
                nav,
                attr,
                reducer,
            } => {
                write!(f, "{node}.{}.{attr}", nav.as_str())?;
                if let Some(r) = reducer {
                    write!(f, ".{}", r.as_str())?;
                }
                Ok(())
            }
            ValueExpr::PathCollect {
                from,
                to,
                path,
                attr,
                reducer,
            } => {
                write!(f, "{from}:{to}|{}.{attr}", path.as_str())?;
                if let Some(r) = reducer {
                    write!(f, ".{}", r.as_str())?;
                }
                Ok(())
            }
            ValueExpr::PathDistance { from, to, path } => {
                write!(f, "{from}:{to}|{}.distance", path.as_str())
            }
            ValueExpr::PairProbe { from, to, attr } => {
                write!(f, "{from}:{to}.{}", attr.as_str())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Value(ValueExpr),
    Literal(String),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Value(v) => write!(f, "{v}"),
            Operand::Literal(l) => f.write_str(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Value(ValueExpr),
    /// `x = y ?`
    Probe { left: Operand, right: Operand },
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Value(v) => write!(f, "{v}"),
            Term::Probe { left, right } => write!(f, "{left} = {right} ?"),
        }
    }
}

/// A parsed feature template; `source()` is the canonical text and doubles
/// as the feature-name prefix, so features stay comparable across sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureTemplate {
    source: String,
    terms: Vec<Term>,
}

impl FeatureTemplate {
    pub fn parse(text: &str) -> Result<FeatureTemplate, TemplateError> {
        let terms = parser::parse_terms(text)?;
        let all_sense = terms.iter().all(|t| {
            matches!(
                t,
                Term::Value(ValueExpr::NodeAttr { attrs, .. })
                    if attrs == &[Attr::CurrentSense]
            )
        });
        if all_sense {
            return Err(TemplateError::SenseAlone);
        }
        let source = terms
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join(" + ");
        Ok(FeatureTemplate { source, terms })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }
}

impl fmt::Display for FeatureTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("unknown identifier '{word}' at {start}..{end}")]
    UnknownIdentifier {
        word: String,
        start: usize,
        end: usize,
    },
    #[error("expected {what} at {start}..{end}")]
    Expected {
        what: String,
        start: usize,
        end: usize,
    },
    #[error("node expression carries no attribute at {start}..{end}")]
    MissingAttribute { start: usize, end: usize },
    #[error("reducer '{word}' applied to a non-collection value at {start}..{end}")]
    ReducerOnScalar {
        word: String,
        start: usize,
        end: usize,
    },
    #[error("path required: 'distance' must follow '|<path>' at {start}..{end}")]
    DistanceWithoutPath { start: usize, end: usize },
    #[error("a sense label is never used in separation from a word attribute")]
    SenseAlone,
    #[error("duplicate template '{0}'")]
    Duplicate(String),
    #[error("line {line}: {error}")]
    InFile {
        line: usize,
        #[source]
        error: Box<TemplateError>,
    },
    #[error("template file {path}: {message}")]
    Io { path: String, message: String },
}

/// A named, ordered, duplicate-free list of templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    name: String,
    templates: Vec<FeatureTemplate>,
}

impl TemplateSet {
    pub fn new(name: &str, templates: Vec<FeatureTemplate>) -> Result<TemplateSet, TemplateError> {
        let mut seen: Vec<&str> = Vec::new();
        for t in &templates {
            if seen.contains(&t.source()) {
                return Err(TemplateError::Duplicate(t.source().to_string()));
            }
            seen.push(t.source());
        }
        Ok(TemplateSet {
            name: name.to_string(),
            templates,
        })
    }

    pub fn parse_lines(name: &str, text: &str) -> Result<TemplateSet, TemplateError> {
        let mut templates = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let t = FeatureTemplate::parse(line).map_err(|e| TemplateError::InFile {
                line: i + 1,
                error: Box::new(e),
            })?;
            templates.push(t);
        }
        TemplateSet::new(name, templates)
    }

    pub fn load(path: &Path) -> Result<TemplateSet, TemplateError> {
        let text = std::fs::read_to_string(path).map_err(|e| TemplateError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "templates".to_string());
        TemplateSet::parse_lines(&name, &text)
    }

    /// One template per line, canonical text.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for t in &self.templates {
            out.push_str(t.source());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), TemplateError> {
        std::fs::write(path, self.to_text()).map_err(|e| TemplateError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn templates(&self) -> &[FeatureTemplate] {
        &self.templates
    }

    pub fn iter(&self) -> std::slice::Iter<'_, FeatureTemplate> {
        self.templates.iter()
    }

    /// Subset by template index, preserving order; used by feature selection.
    pub fn subset(&self, name: &str, indices: &[usize]) -> TemplateSet {
        TemplateSet {
            name: name.to_string(),
            templates: indices.iter().map(|&i| self.templates[i].clone()).collect(),
        }
    }

    /// Order-stable batch evaluation: one feature string per template.
    pub fn evaluate_all(&self, ctx: &EvalContext<'_>) -> Vec<String> {
        self.templates.iter().map(|t| ctx.evaluate(t)).collect()
    }

    /// FNV-1a fingerprint of the canonical sources; identifies the set in
    /// model files and selection caches.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for t in &self.templates {
            for b in t.source().as_bytes() {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x100000001b3);
            }
            h ^= u64::from(b'\n');
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}
