//! Reader/writer for the column-oriented treebank format.
//!
//! A sentence is a block of tab-separated rows, blank-line terminated; `#`
//! lines are comments. The canonical layout is
//! `ID FORM LEMMA POS HEAD DEPREL PRED ARG…`; a split-form layout inserts
//! `SPLIT_FORM SPLIT_LEMMA SPLIT_POS` before `HEAD`, and arbitrary files can
//! be mapped with [`ColumnMap`]. The i-th ARG column binds to the i-th
//! predicate in text order. Empty cells are written `-`; `_` is accepted on
//! read. The empty-cell reading applies to the PRED, ARG and split columns
//! only; in required columns `-` is a literal value (punctuation).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::labels::is_role_label;

pub const EMPTY_CELL: &str = "-";

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConllError {
    #[error("line {line}: row has {found} columns, expected {expected}")]
    ColumnCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: invalid token id '{text}' (expected {expected})")]
    BadId {
        line: usize,
        text: String,
        expected: usize,
    },
    #[error("line {line}: unresolvable head '{text}' for sentence of {len} tokens")]
    BadHead {
        line: usize,
        text: String,
        len: usize,
    },
    #[error("line {line}: token {id} is its own head")]
    SelfHead { line: usize, id: usize },
    #[error("line {line}: invalid predicate roleset '{text}' (expected <lemma>.<two digits>)")]
    BadPred { line: usize, text: String },
    #[error("line {line}: unknown argument label '{text}'")]
    BadRole { line: usize, text: String },
    #[error("line {line}: argument cell for predicate {column} but sentence has {npreds} predicates")]
    ArgColumnMismatch {
        line: usize,
        column: usize,
        npreds: usize,
    },
    #[error("invalid sentence: {0}")]
    Invalid(String),
}

/// Repairable tree-shape violations, flagged at parse and repaired by the
/// dependency graph at construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TreeFlag {
    MultiRoot { roots: Vec<usize> },
    NoRoot,
    Unreachable { ids: Vec<usize> },
}

impl fmt::Display for TreeFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeFlag::MultiRoot { roots } => write!(f, "multiple roots: {roots:?}"),
            TreeFlag::NoRoot => write!(f, "no token has head 0"),
            TreeFlag::Unreachable { ids } => {
                write!(f, "head chains never reach the root: {ids:?}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    /// 1-based sentence position.
    pub id: usize,
    pub form: String,
    pub lemma: String,
    pub pos: String,
    pub sp_form: String,
    pub sp_lemma: String,
    pub sp_pos: String,
    /// Token id of the syntactic head; 0 is the root.
    pub head: usize,
    pub deprel: String,
    /// Predicate roleset of shape `lemma.NN`, if this token is a predicate.
    pub pred: Option<String>,
}

impl Token {
    /// A token with split fields defaulted to the unsplit ones.
    pub fn new(
        id: usize,
        form: &str,
        lemma: &str,
        pos: &str,
        head: usize,
        deprel: &str,
        pred: Option<&str>,
    ) -> Token {
        Token {
            id,
            form: form.to_string(),
            lemma: lemma.to_string(),
            pos: pos.to_string(),
            sp_form: form.to_string(),
            sp_lemma: lemma.to_string(),
            sp_pos: pos.to_string(),
            head,
            deprel: deprel.to_string(),
            pred: pred.map(String::from),
        }
    }

    pub fn has_default_split(&self) -> bool {
        self.sp_form == self.form && self.sp_lemma == self.lemma && self.sp_pos == self.pos
    }
}

/// One predicate with its sense and labeled arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SemanticFrame {
    pub predicate_id: usize,
    /// Two-digit sense string, e.g. `"01"`.
    pub sense: String,
    /// `(token id, role label)`, in text order.
    pub arguments: Vec<(usize, String)>,
}

impl SemanticFrame {
    pub fn new(
        predicate_id: usize,
        sense: &str,
        arguments: Vec<(usize, String)>,
    ) -> Result<SemanticFrame, ConllError> {
        if sense.len() != 2 || !sense.bytes().all(|b| b.is_ascii_digit()) {
            return Err(ConllError::Invalid(format!(
                "frame sense '{sense}' is not a two-digit string"
            )));
        }
        let mut seen = Vec::new();
        for (id, role) in &arguments {
            if !is_role_label(role) {
                return Err(ConllError::Invalid(format!(
                    "frame argument label '{role}' is not in the role inventory"
                )));
            }
            if seen.contains(id) {
                return Err(ConllError::Invalid(format!(
                    "duplicate argument token {id} in frame of predicate {predicate_id}"
                )));
            }
            seen.push(*id);
        }
        Ok(SemanticFrame {
            predicate_id,
            sense: sense.to_string(),
            arguments,
        })
    }

    pub fn role_of(&self, token_id: usize) -> Option<&str> {
        self.arguments
            .iter()
            .find(|(id, _)| *id == token_id)
            .map(|(_, r)| r.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    /// One frame per token with a PRED value, in text order.
    pub frames: Vec<SemanticFrame>,
    /// Tree-shape violations found at construction.
    pub flags: Vec<TreeFlag>,
}

impl Sentence {
    pub fn new(tokens: Vec<Token>, frames: Vec<SemanticFrame>) -> Result<Sentence, ConllError> {
        let len = tokens.len();
        for (i, t) in tokens.iter().enumerate() {
            if t.id != i + 1 {
                return Err(ConllError::Invalid(format!(
                    "token at position {} has id {}",
                    i + 1,
                    t.id
                )));
            }
            if t.head > len {
                return Err(ConllError::Invalid(format!(
                    "token {} has head {} out of range",
                    t.id, t.head
                )));
            }
            if t.head == t.id {
                return Err(ConllError::Invalid(format!("token {} is its own head", t.id)));
            }
            if let Some(pred) = &t.pred {
                if split_roleset(pred).is_none() {
                    return Err(ConllError::Invalid(format!(
                        "token {} predicate '{pred}' is not of shape lemma.NN",
                        t.id
                    )));
                }
            }
        }
        let pred_ids: Vec<usize> = tokens
            .iter()
            .filter(|t| t.pred.is_some())
            .map(|t| t.id)
            .collect();
        if pred_ids.len() != frames.len() {
            return Err(ConllError::Invalid(format!(
                "{} PRED tokens but {} frames",
                pred_ids.len(),
                frames.len()
            )));
        }
        for (frame, id) in frames.iter().zip(&pred_ids) {
            if frame.predicate_id != *id {
                return Err(ConllError::Invalid(format!(
                    "frame order mismatch: frame for {} where predicate {} expected",
                    frame.predicate_id, id
                )));
            }
            for (arg, _) in &frame.arguments {
                if *arg == 0 || *arg > len {
                    return Err(ConllError::Invalid(format!(
                        "frame of predicate {id} has argument {arg} out of range"
                    )));
                }
            }
        }
        let flags = tree_flags(&tokens);
        Ok(Sentence {
            tokens,
            frames,
            flags,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Token by 1-based id.
    pub fn token(&self, id: usize) -> &Token {
        &self.tokens[id - 1]
    }

    pub fn frame_of(&self, predicate_id: usize) -> Option<&SemanticFrame> {
        self.frames.iter().find(|f| f.predicate_id == predicate_id)
    }

    /// The sentence with frames and PRED cells replaced.
    pub fn with_frames(&self, frames: Vec<SemanticFrame>) -> Result<Sentence, ConllError> {
        let mut tokens = self.tokens.clone();
        for t in &mut tokens {
            t.pred = None;
        }
        for f in &frames {
            let t = &mut tokens[f.predicate_id - 1];
            t.pred = Some(format!("{}.{}", t.lemma, f.sense));
        }
        Sentence::new(tokens, frames)
    }
}

/// Splits `lemma.NN` into its lemma and sense parts.
pub fn split_roleset(pred: &str) -> Option<(&str, &str)> {
    let (lemma, sense) = pred.rsplit_once('.')?;
    if lemma.is_empty() || sense.len() != 2 || !sense.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some((lemma, sense))
}

fn tree_flags(tokens: &[Token]) -> Vec<TreeFlag> {
    let mut flags = Vec::new();
    let roots: Vec<usize> = tokens.iter().filter(|t| t.head == 0).map(|t| t.id).collect();
    if roots.is_empty() && !tokens.is_empty() {
        flags.push(TreeFlag::NoRoot);
    } else if roots.len() > 1 {
        flags.push(TreeFlag::MultiRoot { roots });
    }
    let n = tokens.len();
    let mut unreachable = Vec::new();
    for t in tokens {
        let mut cur = t.id;
        let mut steps = 0;
        while cur != 0 && steps <= n {
            cur = tokens[cur - 1].head;
            steps += 1;
        }
        if cur != 0 {
            unreachable.push(t.id);
        }
    }
    if !unreachable.is_empty() {
        flags.push(TreeFlag::Unreachable { ids: unreachable });
    }
    flags
}

/// Which token attribute a prefix column carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnRole {
    Id,
    Form,
    Lemma,
    Pos,
    SpForm,
    SpLemma,
    SpPos,
    Head,
    Deprel,
    Pred,
    Skip,
}

/// Maps prefix columns to token attributes; everything after the prefix is
/// read as ARG columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub roles: Vec<ColumnRole>,
}

impl ColumnMap {
    pub fn simple() -> ColumnMap {
        use ColumnRole::*;
        ColumnMap {
            roles: vec![Id, Form, Lemma, Pos, Head, Deprel, Pred],
        }
    }

    pub fn split() -> ColumnMap {
        use ColumnRole::*;
        ColumnMap {
            roles: vec![Id, Form, Lemma, Pos, SpForm, SpLemma, SpPos, Head, Deprel, Pred],
        }
    }

    /// The official 2008 shared-task column set (GPOS skipped, PPOS used).
    pub fn conll2008() -> ColumnMap {
        use ColumnRole::*;
        ColumnMap {
            roles: vec![Id, Form, Lemma, Skip, Pos, SpForm, SpLemma, SpPos, Head, Deprel, Pred],
        }
    }

    /// Parses a comma-separated role list, e.g. `id,form,lemma,pos,head,deprel,pred`;
    /// `_` skips a column.
    pub fn parse(spec: &str) -> Result<ColumnMap, ConllError> {
        let mut roles = Vec::new();
        for part in spec.split(',') {
            let role = match part.trim() {
                "id" => ColumnRole::Id,
                "form" => ColumnRole::Form,
                "lemma" => ColumnRole::Lemma,
                "pos" => ColumnRole::Pos,
                "sp_form" | "spform" => ColumnRole::SpForm,
                "sp_lemma" | "splemma" => ColumnRole::SpLemma,
                "sp_pos" | "sppos" => ColumnRole::SpPos,
                "head" => ColumnRole::Head,
                "deprel" => ColumnRole::Deprel,
                "pred" => ColumnRole::Pred,
                "_" | "skip" => ColumnRole::Skip,
                other => {
                    return Err(ConllError::Invalid(format!("unknown column role '{other}'")))
                }
            };
            roles.push(role);
        }
        for required in [ColumnRole::Id, ColumnRole::Form, ColumnRole::Head, ColumnRole::Deprel] {
            if !roles.contains(&required) {
                return Err(ConllError::Invalid(format!(
                    "column map is missing required role {required:?}"
                )));
            }
        }
        Ok(ColumnMap { roles })
    }

    pub fn prefix_len(&self) -> usize {
        self.roles.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Layout {
    /// Try the split layout, then the simple one, on the first sentence.
    #[default]
    Auto,
    Simple,
    Split,
    Custom(ColumnMap),
}

impl Layout {
    fn column_map(&self) -> Option<ColumnMap> {
        match self {
            Layout::Auto => None,
            Layout::Simple => Some(ColumnMap::simple()),
            Layout::Split => Some(ColumnMap::split()),
            Layout::Custom(m) => Some(m.clone()),
        }
    }
}

struct Block<'a> {
    /// (1-based line number, line text)
    rows: Vec<(usize, &'a str)>,
}

fn blocks(text: &str) -> Vec<Block<'_>> {
    let mut out = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() {
            if !rows.is_empty() {
                out.push(Block {
                    rows: std::mem::take(&mut rows),
                });
            }
        } else if !trimmed.trim_start().starts_with('#') {
            rows.push((i + 1, trimmed));
        }
    }
    if !rows.is_empty() {
        out.push(Block { rows });
    }
    out
}

fn split_cells(line: &str) -> Vec<&str> {
    if line.contains('\t') {
        line.split('\t').collect()
    } else {
        line.split_whitespace().collect()
    }
}

fn is_empty_cell(cell: &str) -> bool {
    cell == "-" || cell == "_"
}

fn parse_block(block: &Block<'_>, map: &ColumnMap) -> Result<Sentence, ConllError> {
    let prefix = map.prefix_len();
    let n = block.rows.len();
    let mut tokens: Vec<Token> = Vec::with_capacity(n);
    let mut pred_rows: Vec<usize> = Vec::new();
    let mut arg_cells: Vec<Vec<&str>> = Vec::with_capacity(n);

    for (idx, (line, text)) in block.rows.iter().enumerate() {
        let cells = split_cells(text);
        if cells.len() < prefix {
            return Err(ConllError::ColumnCount {
                line: *line,
                expected: prefix,
                found: cells.len(),
            });
        }
        let mut token = Token::new(idx + 1, "", "", "", 0, "", None);
        let mut sp_form: Option<String> = None;
        let mut sp_lemma: Option<String> = None;
        let mut sp_pos: Option<String> = None;
        for (cell, role) in cells.iter().zip(&map.roles) {
            match role {
                ColumnRole::Id => {
                    let id: usize = cell.parse().map_err(|_| ConllError::BadId {
                        line: *line,
                        text: cell.to_string(),
                        expected: idx + 1,
                    })?;
                    if id != idx + 1 {
                        return Err(ConllError::BadId {
                            line: *line,
                            text: cell.to_string(),
                            expected: idx + 1,
                        });
                    }
                }
                ColumnRole::Form => token.form = cell.to_string(),
                ColumnRole::Lemma => token.lemma = cell.to_string(),
                ColumnRole::Pos => token.pos = cell.to_string(),
                ColumnRole::SpForm => {
                    if !is_empty_cell(cell) {
                        sp_form = Some(cell.to_string());
                    }
                }
                ColumnRole::SpLemma => {
                    if !is_empty_cell(cell) {
                        sp_lemma = Some(cell.to_string());
                    }
                }
                ColumnRole::SpPos => {
                    if !is_empty_cell(cell) {
                        sp_pos = Some(cell.to_string());
                    }
                }
                ColumnRole::Head => {
                    let head: usize = cell.parse().map_err(|_| ConllError::BadHead {
                        line: *line,
                        text: cell.to_string(),
                        len: n,
                    })?;
                    if head > n {
                        return Err(ConllError::BadHead {
                            line: *line,
                            text: cell.to_string(),
                            len: n,
                        });
                    }
                    if head == idx + 1 {
                        return Err(ConllError::SelfHead {
                            line: *line,
                            id: idx + 1,
                        });
                    }
                    token.head = head;
                }
                ColumnRole::Deprel => token.deprel = cell.to_string(),
                ColumnRole::Pred => {
                    if !is_empty_cell(cell) {
                        if split_roleset(cell).is_none() {
                            return Err(ConllError::BadPred {
                                line: *line,
                                text: cell.to_string(),
                            });
                        }
                        token.pred = Some(cell.to_string());
                        pred_rows.push(idx);
                    }
                }
                ColumnRole::Skip => {}
            }
        }
        token.sp_form = sp_form.unwrap_or_else(|| token.form.clone());
        token.sp_lemma = sp_lemma.unwrap_or_else(|| token.lemma.clone());
        token.sp_pos = sp_pos.unwrap_or_else(|| token.pos.clone());
        tokens.push(token);
        arg_cells.push(cells[prefix..].to_vec());
    }

    // Every row must carry exactly one ARG cell per predicate.
    let npreds = pred_rows.len();
    for ((line, _), cells) in block.rows.iter().zip(&arg_cells) {
        if cells.len() != npreds {
            return Err(ConllError::ArgColumnMismatch {
                line: *line,
                column: cells.len(),
                npreds,
            });
        }
    }

    let mut frames = Vec::with_capacity(npreds);
    for (col, pred_row) in pred_rows.iter().enumerate() {
        let pred = tokens[*pred_row].pred.as_deref().expect("pred row");
        let (_, sense) = split_roleset(pred).expect("validated roleset");
        let mut arguments = Vec::new();
        for (row, cells) in arg_cells.iter().enumerate() {
            let cell = cells[col];
            if is_empty_cell(cell) {
                continue;
            }
            if !is_role_label(cell) {
                return Err(ConllError::BadRole {
                    line: block.rows[row].0,
                    text: cell.to_string(),
                });
            }
            arguments.push((row + 1, cell.to_string()));
        }
        let frame = SemanticFrame::new(*pred_row + 1, sense, arguments)
            .map_err(|e| ConllError::Invalid(e.to_string()))?;
        frames.push(frame);
    }

    Sentence::new(tokens, frames)
}

/// Structural fit of one row: enough prefix columns, id cell holding the
/// expected position, head cell numeric. Content validity (roles, rolesets,
/// ARG counts) is left to the real parse so its errors carry the right layout.
fn row_fits(row: &str, idx: usize, map: &ColumnMap) -> bool {
    let cells = split_cells(row);
    if cells.len() < map.prefix_len() {
        return false;
    }
    for (cell, role) in cells.iter().zip(&map.roles) {
        match role {
            ColumnRole::Id if cell.parse::<usize>() != Ok(idx + 1) => return false,
            ColumnRole::Head if cell.parse::<usize>().is_err() => return false,
            _ => {}
        }
    }
    true
}

/// Picks the layout fitting the most rows of the first sentence, split before
/// simple on ties, so the real parse reports the offending row when neither
/// fits cleanly.
fn detect_layout(block: &Block<'_>) -> ColumnMap {
    let split = ColumnMap::split();
    let simple = ColumnMap::simple();
    let count = |map: &ColumnMap| {
        block
            .rows
            .iter()
            .enumerate()
            .filter(|(idx, (_, text))| row_fits(text, *idx, map))
            .count()
    };
    let (split_n, simple_n) = (count(&split), count(&simple));
    if split_n == block.rows.len() || split_n > simple_n {
        split
    } else {
        simple
    }
}

/// Parses a whole corpus, failing on the first malformed row.
pub fn parse_corpus(text: &str) -> Result<Vec<Sentence>, ConllError> {
    parse_corpus_with(text, &Layout::Auto)
}

pub fn parse_corpus_with(text: &str, layout: &Layout) -> Result<Vec<Sentence>, ConllError> {
    let blocks = blocks(text);
    let Some(first) = blocks.first() else {
        return Ok(Vec::new());
    };
    let map = layout.column_map().unwrap_or_else(|| detect_layout(first));
    blocks.iter().map(|b| parse_block(b, &map)).collect()
}

/// Parses a corpus collecting errors; malformed sentences are skipped.
pub fn parse_corpus_lenient(text: &str, layout: &Layout) -> (Vec<Sentence>, Vec<ConllError>) {
    let blocks = blocks(text);
    let Some(first) = blocks.first() else {
        return (Vec::new(), Vec::new());
    };
    let map = layout.column_map().unwrap_or_else(|| detect_layout(first));
    let mut sentences = Vec::new();
    let mut errors = Vec::new();
    for block in &blocks {
        match parse_block(block, &map) {
            Ok(s) => sentences.push(s),
            Err(e) => errors.push(e),
        }
    }
    (sentences, errors)
}

/// Serializes to canonical text: tab-separated, `-` empty cells, split columns
/// only when some token has a non-default split field, one blank line after
/// every sentence. `parse -> serialize` is the identity on canonical files.
pub fn serialize_corpus(sentences: &[Sentence]) -> String {
    let mut out = String::new();
    for sentence in sentences {
        serialize_sentence(sentence, &mut out);
        out.push('\n');
    }
    out
}

fn serialize_sentence(sentence: &Sentence, out: &mut String) {
    let split = sentence.tokens.iter().any(|t| !t.has_default_split());
    let frame_args: Vec<&SemanticFrame> = sentence.frames.iter().collect();
    for t in &sentence.tokens {
        out.push_str(&t.id.to_string());
        for field in [&t.form, &t.lemma, &t.pos] {
            out.push('\t');
            out.push_str(field);
        }
        if split {
            for field in [&t.sp_form, &t.sp_lemma, &t.sp_pos] {
                out.push('\t');
                out.push_str(field);
            }
        }
        out.push('\t');
        out.push_str(&t.head.to_string());
        out.push('\t');
        out.push_str(&t.deprel);
        out.push('\t');
        out.push_str(t.pred.as_deref().unwrap_or(EMPTY_CELL));
        for frame in &frame_args {
            out.push('\t');
            out.push_str(frame.role_of(t.id).unwrap_or(EMPTY_CELL));
        }
        out.push('\n');
    }
}

/// The worked example sentence used throughout the tests: 8 tokens, 3 frames.
#[cfg(any(test, feature = "fixtures"))]
pub fn example_sentence() -> Sentence {
    let tokens = vec![
        Token::new(1, "Investor", "investor", "NN", 2, "NMOD", None),
        Token::new(2, "focus", "focus", "NN", 3, "SBJ", Some("focus.01")),
        Token::new(3, "shifted", "shift", "VBD", 7, "OBJ", Some("shift.01")),
        Token::new(4, "quickly", "quickly", "RB", 3, "MNR", None),
        Token::new(5, ",", ",", ",", 7, "P", None),
        Token::new(6, "traders", "trader", "NNS", 7, "SBJ", None),
        Token::new(7, "said", "say", "VBD", 0, "ROOT", Some("say.01")),
        Token::new(8, ".", ".", ".", 7, "P", None),
    ];
    let frames = vec![
        SemanticFrame::new(2, "01", vec![(1, "A0".into())]).unwrap(),
        SemanticFrame::new(3, "01", vec![(2, "A1".into()), (4, "AM-MNR".into())]).unwrap(),
        SemanticFrame::new(7, "01", vec![(3, "A1".into()), (6, "A0".into())]).unwrap(),
    ];
    Sentence::new(tokens, frames).unwrap()
}
