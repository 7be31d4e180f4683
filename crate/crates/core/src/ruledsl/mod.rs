//! Guarded-rule language for robot algorithms.
//!
//! A rule file declares the color palette and then lists rules in priority
//! order, one per line:
//!
//! ```text
//! colors: W R B
//! R0: E^phi [?] E^phi :: .
//! R2b: E^phi [@R!] W! ?^(phi-1) :: B,->
//! ```
//!
//! Cell predicates: `E` empty node, `?` anything, `X` contains color `X`,
//! `X!` exactly `{X}`, `@X` the observer has color `X` (center only),
//! `!p` negation, `(p|q)` either, `{p,q}` both. `@X!` is shorthand for
//! `{@X,X!}`. A segment is a predicate or a negated sequence `!( ... )`,
//! optionally repeated with `^k`, `^phi`, `^(phi-k)` or `^(phi+k)`. The
//! bracketed cell is the observer's node. Statements are `color`, a move
//! (`->` toward the right end of the guard, `<-`, `.`), or `color,move`.

mod eval;
mod parser;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::color::Color;

pub use eval::{eval_cell, eval_guard, select_rule, GuardMatch, Program, ResolvedRule, Selection};
pub use parser::parse_rule_set;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CellPredicate {
    Empty,
    Any,
    Contains(Color),
    ExactlySingle(Color),
    SelfIs(Color),
    Not(Box<CellPredicate>),
    AnyOf(Vec<CellPredicate>),
    AllOf(Vec<CellPredicate>),
}

/// Repetition count of a segment, possibly relative to the visibility range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Count {
    Literal(u32),
    /// `phi + offset`.
    Phi(i64),
}

impl Count {
    pub fn resolve(self, phi: u32) -> Option<usize> {
        match self {
            Count::Literal(n) => Some(n as usize),
            Count::Phi(offset) => usize::try_from(i64::from(phi) + offset).ok(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SegmentBody {
    Cell(CellPredicate),
    /// Matches a slice iff the inner sequence does not match it.
    NegatedSequence(Vec<Segment>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Segment {
    pub body: SegmentBody,
    pub count: Count,
}

impl Segment {
    pub fn cell(pred: CellPredicate, count: Count) -> Self {
        Segment {
            body: SegmentBody::Cell(pred),
            count,
        }
    }
}

/// Guard split around its single center cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Guard {
    pub left: Vec<Segment>,
    pub center: CellPredicate,
    pub right: Vec<Segment>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Move {
    /// Toward the right end of the guard as written.
    Forward,
    Backward,
    Stay,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Statement {
    pub color: Option<Color>,
    pub movement: Move,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub label: Arc<str>,
    pub guard: Guard,
    pub statement: Statement,
}

/// Declared palette plus rules in priority order (first = highest).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RuleSet {
    pub colors: Vec<Color>,
    pub rules: Vec<Rule>,
}

impl RuleSet {
    pub fn rule(&self, label: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| &*r.label == label)
    }

    /// Color every robot starts with: the first declared one.
    pub fn initial_color(&self) -> Option<Color> {
        self.colors.first().copied()
    }

    pub fn declares(&self, color: Color) -> bool {
        self.colors.contains(&color)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: duplicate label `{label}`")]
    DuplicateLabel { line: usize, label: String },
    #[error("line {line}: color `{color}` is not declared in the `colors:` header")]
    UndeclaredColor { line: usize, color: String },
    #[error("line {line}: a guard needs exactly one center cell, found {found}")]
    CenterCount { line: usize, found: usize },
    #[error("line {line}: `@` observer markers are only allowed in the center cell")]
    SelfOutsideCenter { line: usize },
    #[error("line {line}: label `{label}` must come after `{previous}` in priority order")]
    LabelOrder {
        line: usize,
        label: String,
        previous: String,
    },
    #[error("line {line}: label `{label}` must be letters, a number, then an optional suffix")]
    BadLabel { line: usize, label: String },
    #[error("missing `colors:` header before the first rule")]
    MissingColors,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("rule {label}: guard does not resolve to {phi} cells on each side of the center at phi={phi} ({detail})")]
    GuardLength {
        label: String,
        phi: u32,
        detail: String,
    },
    #[error("rule {label} matches the view in both orientations but prescribes a move")]
    AmbiguousOrientation { label: String },
}

/// Priority key of a label: alphabetic prefix, number, then suffix compared
/// lexicographically (`R2 < R2a < R2b < R10`).
pub(crate) fn label_key(label: &str) -> Option<(&str, u64, &str)> {
    let digits_at = label.find(|c: char| c.is_ascii_digit())?;
    if digits_at == 0 {
        return None;
    }
    let rest = &label[digits_at..];
    let digits_end = rest
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(rest.len());
    let number = rest[..digits_end].parse().ok()?;
    let prefix = &label[..digits_at];
    prefix
        .chars()
        .all(|c| c.is_ascii_alphabetic())
        .then_some((prefix, number, &rest[digits_end..]))
}

impl fmt::Display for CellPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellPredicate::Empty => f.write_str("E"),
            CellPredicate::Any => f.write_str("?"),
            CellPredicate::Contains(c) => write!(f, "{c}"),
            CellPredicate::ExactlySingle(c) => write!(f, "{c}!"),
            CellPredicate::SelfIs(c) => write!(f, "@{c}"),
            CellPredicate::Not(p) => write!(f, "!{p}"),
            CellPredicate::AnyOf(ps) if ps.len() == 1 => write!(f, "{}", ps[0]),
            CellPredicate::AllOf(ps) if ps.len() == 1 => write!(f, "{}", ps[0]),
            CellPredicate::AllOf(ps) => match ps.as_slice() {
                [CellPredicate::SelfIs(a), CellPredicate::ExactlySingle(b)] if a == b => {
                    write!(f, "@{a}!")
                }
                _ => write_list(f, ps, "{", ",", "}"),
            },
            CellPredicate::AnyOf(ps) => write_list(f, ps, "(", "|", ")"),
        }
    }
}

fn write_list(
    f: &mut fmt::Formatter<'_>,
    items: &[CellPredicate],
    open: &str,
    sep: &str,
    close: &str,
) -> fmt::Result {
    f.write_str(open)?;
    for (i, p) in items.iter().enumerate() {
        if i > 0 {
            f.write_str(sep)?;
        }
        write!(f, "{p}")?;
    }
    f.write_str(close)
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Count::Literal(n) => write!(f, "{n}"),
            Count::Phi(0) => f.write_str("phi"),
            Count::Phi(k) if k > 0 => write!(f, "(phi+{k})"),
            Count::Phi(k) => write!(f, "(phi-{})", -k),
        }
    }
}

impl fmt::Display for Segment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.body {
            SegmentBody::Cell(p) => write!(f, "{p}")?,
            SegmentBody::NegatedSequence(inner) => {
                f.write_str("!(")?;
                write_segments(f, inner)?;
                f.write_str(")")?;
            }
        }
        if self.count != Count::Literal(1) {
            write!(f, "^{}", self.count)?;
        }
        Ok(())
    }
}

fn write_segments(f: &mut fmt::Formatter<'_>, segs: &[Segment]) -> fmt::Result {
    for (i, s) in segs.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{s}")?;
    }
    Ok(())
}

impl fmt::Display for Guard {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_segments(f, &self.left)?;
        if !self.left.is_empty() {
            f.write_str(" ")?;
        }
        write!(f, "[{}]", self.center)?;
        if !self.right.is_empty() {
            f.write_str(" ")?;
        }
        write_segments(f, &self.right)
    }
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Move::Forward => "->",
            Move::Backward => "<-",
            Move::Stay => ".",
        })
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.color, self.movement) {
            (None, m) => write!(f, "{m}"),
            (Some(c), Move::Stay) => write!(f, "{c}"),
            (Some(c), m) => write!(f, "{c},{m}"),
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} :: {}", self.label, self.guard, self.statement)
    }
}

impl fmt::Display for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("colors:")?;
        for c in &self.colors {
            write!(f, " {c}")?;
        }
        f.write_str("\n")?;
        for r in &self.rules {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}
