use std::sync::Arc;

use super::{CellPredicate, EvalError, Move, Rule, RuleSet, Segment, SegmentBody, Statement};
use crate::color::{Color, ColorSet};
use crate::config::View;

/// Which readings of a view satisfy a guard. Robots cannot tell left from
/// right, so a guard is tried on the view as given and on its reflection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct GuardMatch {
    pub as_written: bool,
    pub mirrored: bool,
}

impl GuardMatch {
    pub fn matched(&self) -> bool {
        self.as_written || self.mirrored
    }

    pub fn swapped(self) -> GuardMatch {
        GuardMatch {
            as_written: self.mirrored,
            mirrored: self.as_written,
        }
    }
}

pub fn eval_cell(pred: &CellPredicate, cell: &ColorSet, observer: Color) -> bool {
    match pred {
        CellPredicate::Empty => cell.is_empty(),
        CellPredicate::Any => true,
        CellPredicate::Contains(c) => cell.contains(*c),
        CellPredicate::ExactlySingle(c) => cell.is_single(*c),
        CellPredicate::SelfIs(c) => observer == *c && cell.contains(*c),
        CellPredicate::Not(p) => !eval_cell(p, cell, observer),
        CellPredicate::AnyOf(ps) => ps.iter().any(|p| eval_cell(p, cell, observer)),
        CellPredicate::AllOf(ps) => ps.iter().all(|p| eval_cell(p, cell, observer)),
    }
}

/// A segment with its repetition resolved for one visibility range.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Slot {
    Run {
        pred: CellPredicate,
        len: usize,
    },
    Negated {
        width: usize,
        reps: usize,
        inner: Vec<Slot>,
    },
}

impl Slot {
    fn width(&self) -> usize {
        match self {
            Slot::Run { len, .. } => *len,
            Slot::Negated { width, reps, .. } => width * reps,
        }
    }
}

fn resolve_segments(segs: &[Segment], phi: u32) -> Result<Vec<Slot>, String> {
    segs.iter()
        .map(|seg| {
            let reps = seg
                .count
                .resolve(phi)
                .ok_or_else(|| format!("`{seg}` has a negative length"))?;
            Ok(match &seg.body {
                SegmentBody::Cell(pred) => Slot::Run {
                    pred: pred.clone(),
                    len: reps,
                },
                SegmentBody::NegatedSequence(inner) => {
                    let inner = resolve_segments(inner, phi)?;
                    let width = inner.iter().map(Slot::width).sum();
                    Slot::Negated { width, reps, inner }
                }
            })
        })
        .collect()
}

/// Cells of a view read in one orientation.
struct Oriented<'a> {
    cells: &'a [ColorSet],
    reversed: bool,
    observer: Color,
}

impl Oriented<'_> {
    fn cell(&self, i: usize) -> &ColorSet {
        if self.reversed {
            &self.cells[self.cells.len() - 1 - i]
        } else {
            &self.cells[i]
        }
    }

    fn matches(&self, slots: &[Slot], mut at: usize) -> bool {
        for slot in slots {
            match slot {
                Slot::Run { pred, len } => {
                    if !(at..at + len).all(|i| eval_cell(pred, self.cell(i), self.observer)) {
                        return false;
                    }
                }
                Slot::Negated { width, reps, inner } => {
                    if (0..*reps).any(|k| self.matches(inner, at + k * width)) {
                        return false;
                    }
                }
            }
            at += slot.width();
        }
        true
    }
}

/// A rule instantiated for one visibility range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedRule {
    pub label: Arc<str>,
    pub statement: Statement,
    left: Vec<Slot>,
    center: CellPredicate,
    right: Vec<Slot>,
}

impl ResolvedRule {
    pub fn resolve(rule: &Rule, phi: u32) -> Result<Self, EvalError> {
        let length_error = |detail: String| EvalError::GuardLength {
            label: rule.label.to_string(),
            phi,
            detail,
        };
        let left = resolve_segments(&rule.guard.left, phi).map_err(length_error)?;
        let right = resolve_segments(&rule.guard.right, phi).map_err(length_error)?;
        let lw: usize = left.iter().map(Slot::width).sum();
        let rw: usize = right.iter().map(Slot::width).sum();
        if lw != phi as usize || rw != phi as usize {
            return Err(length_error(format!(
                "left side has {lw}, right side has {rw}"
            )));
        }
        Ok(ResolvedRule {
            label: rule.label.clone(),
            statement: rule.statement,
            left,
            center: rule.guard.center.clone(),
            right,
        })
    }

    fn matches_oriented(&self, view: &View, reversed: bool) -> bool {
        let o = Oriented {
            cells: &view.cells,
            reversed,
            observer: view.observer,
        };
        let phi = self.left.iter().map(Slot::width).sum::<usize>();
        eval_cell(&self.center, o.cell(phi), view.observer)
            && o.matches(&self.left, 0)
            && o.matches(&self.right, phi + 1)
    }

    pub fn matches(&self, view: &View) -> GuardMatch {
        GuardMatch {
            as_written: self.matches_oriented(view, false),
            mirrored: self.matches_oriented(view, true),
        }
    }
}

/// The action chosen for one robot: the rule that fired, its new color and
/// the physical displacement (-1, 0 or +1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Selection {
    pub index: usize,
    pub label: Arc<str>,
    pub color: Option<Color>,
    pub step: i64,
}

/// A rule set instantiated for a fixed visibility range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    phi: u32,
    rules: Vec<ResolvedRule>,
}

impl RuleSet {
    pub fn instantiate(&self, phi: u32) -> Result<Program, EvalError> {
        let rules = self
            .rules
            .iter()
            .map(|r| ResolvedRule::resolve(r, phi))
            .collect::<Result<_, _>>()?;
        Ok(Program { phi, rules })
    }
}

impl Program {
    pub fn phi(&self) -> u32 {
        self.phi
    }

    pub fn rules(&self) -> &[ResolvedRule] {
        &self.rules
    }

    /// First enabled rule in priority order, or `None` when the robot idles.
    pub fn select(&self, view: &View) -> Result<Option<Selection>, EvalError> {
        debug_assert_eq!(view.phi(), self.phi as usize);
        for (index, rule) in self.rules.iter().enumerate() {
            let m = rule.matches(view);
            if !m.matched() {
                continue;
            }
            let forward = match rule.statement.movement {
                Move::Stay => 0,
                Move::Forward => 1,
                Move::Backward => -1,
            };
            if forward != 0 && m.as_written && m.mirrored {
                return Err(EvalError::AmbiguousOrientation {
                    label: rule.label.to_string(),
                });
            }
            let step = if m.as_written { forward } else { -forward };
            return Ok(Some(Selection {
                index,
                label: rule.label.clone(),
                color: rule.statement.color,
                step,
            }));
        }
        Ok(None)
    }
}

pub fn eval_guard(rule: &Rule, view: &View) -> Result<GuardMatch, EvalError> {
    Ok(ResolvedRule::resolve(rule, view.phi() as u32)?.matches(view))
}

pub fn select_rule(rules: &RuleSet, view: &View) -> Result<Option<Selection>, EvalError> {
    rules.instantiate(view.phi() as u32)?.select(view)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::ruledsl::parse_rule_set;
    use CellPredicate::*;

    fn c(s: &str) -> Color {
        Color::new(s).unwrap()
    }

    fn set(names: &[&str]) -> ColorSet {
        names.iter().map(|n| c(n)).collect()
    }

    fn view(cells: &[&[&str]], observer: &str) -> View {
        View {
            cells: cells.iter().map(|n| set(n)).collect(),
            observer: c(observer),
        }
    }

    #[test]
    fn exactly_single() {
        let p = ExactlySingle(c("W"));
        assert!(eval_cell(&p, &set(&["W"]), c("W")));
        assert!(!eval_cell(&p, &set(&["W", "R"]), c("W")));
        assert!(!eval_cell(&p, &set(&[]), c("W")));
    }

    #[test]
    fn stacked_negations() {
        let p = AllOf(vec![
            Not(Box::new(ExactlySingle(c("W")))),
            Not(Box::new(ExactlySingle(c("B")))),
        ]);
        assert!(eval_cell(&p, &set(&["R"]), c("R")));
        assert!(!eval_cell(&p, &set(&["W"]), c("R")));
    }

    #[test]
    fn alternatives() {
        let p = AnyOf(vec![ExactlySingle(c("R")), ExactlySingle(c("B"))]);
        assert!(eval_cell(&p, &set(&["B"]), c("R")));
        assert!(!eval_cell(&p, &set(&["R", "B"]), c("R")));
    }

    #[test]
    fn self_marker_needs_observer_color() {
        let p = SelfIs(c("W"));
        assert!(eval_cell(&p, &set(&["R", "W"]), c("W")));
        assert!(!eval_cell(&p, &set(&["R", "W"]), c("R")));
        assert!(!eval_cell(&p, &set(&["R"]), c("W")));
    }

    #[test]
    fn border_rule_orientation() {
        let alg1 = builtin::alg1();
        let r1 = alg1.rule("R1").unwrap();
        let m = eval_guard(r1, &view(&[&[], &["W"], &["W"]], "W")).unwrap();
        assert_eq!(
            m,
            GuardMatch {
                as_written: true,
                mirrored: false
            }
        );
        let m = eval_guard(r1, &view(&[&["W"], &["W"], &[]], "W")).unwrap();
        assert_eq!(
            m,
            GuardMatch {
                as_written: false,
                mirrored: true
            }
        );
        let r0 = alg1.rule("R0").unwrap();
        let m = eval_guard(r0, &view(&[&[], &["W"], &[]], "W")).unwrap();
        assert_eq!(
            m,
            GuardMatch {
                as_written: true,
                mirrored: true
            }
        );
    }

    #[test]
    fn negated_sequence_with_gap() {
        let alg1 = builtin::alg1();
        let r1 = alg1.rule("R1").unwrap();
        // φ=2: right side has an occupied node two hops away.
        let v = view(&[&[], &[], &["W"], &[], &["W"]], "W");
        assert_eq!(
            eval_guard(r1, &v).unwrap(),
            GuardMatch {
                as_written: true,
                mirrored: false
            }
        );
        let v = view(&[&[], &[], &["W"], &[], &[]], "W");
        assert!(!eval_guard(r1, &v).unwrap().matched());
    }

    #[test]
    fn guard_length_mismatch() {
        let rs = parse_rule_set("colors: W\nR0: E^2 [?] E^phi :: .\n").unwrap();
        let v = view(&[&[], &["W"], &[]], "W");
        assert!(matches!(
            eval_guard(&rs.rules[0], &v),
            Err(EvalError::GuardLength { phi: 1, .. })
        ));
        let rs = parse_rule_set("colors: W\nR0: E^(phi-2) [?] E^phi :: .\n").unwrap();
        assert!(matches!(
            eval_guard(&rs.rules[0], &v),
            Err(EvalError::GuardLength { .. })
        ));
    }

    #[test]
    fn alg2_initial_border_turns_red() {
        let alg2 = builtin::alg2();
        let sel = select_rule(&alg2, &view(&[&[], &["W"], &["W"]], "W"))
            .unwrap()
            .unwrap();
        assert_eq!(&*sel.label, "R1");
        assert_eq!(sel.color, Some(c("R")));
        assert_eq!(sel.step, 0);
    }

    #[test]
    fn alg2_captured_white_takes_border_color() {
        let alg2 = builtin::alg2();
        let sel = select_rule(&alg2, &view(&[&[], &["R", "W"], &["W"]], "W"))
            .unwrap()
            .unwrap();
        assert_eq!(&*sel.label, "R4a");
        assert_eq!(sel.color, Some(c("R")));
        assert_eq!(sel.step, 0);
    }

    #[test]
    fn alg2_border_move_resolves_direction() {
        let alg2 = builtin::alg2();
        let sel = select_rule(&alg2, &view(&[&["W"], &["R"], &[]], "R"))
            .unwrap()
            .unwrap();
        assert_eq!(&*sel.label, "R2b");
        assert_eq!(sel.color, Some(c("B")));
        assert_eq!(sel.step, -1);
    }

    #[test]
    fn symmetric_move_rule_is_ambiguous() {
        let rs = parse_rule_set("colors: W\nR1: E^phi [@W!] E^phi :: ->\n").unwrap();
        assert_eq!(
            select_rule(&rs, &view(&[&[], &["W"], &[]], "W")),
            Err(EvalError::AmbiguousOrientation { label: "R1".into() })
        );
    }

    #[test]
    fn no_enabled_rule_idles() {
        let alg2 = builtin::alg2();
        assert_eq!(
            select_rule(&alg2, &view(&[&["W"], &["W"], &["W"]], "W")).unwrap(),
            None
        );
    }
}
