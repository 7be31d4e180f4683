use std::collections::HashSet;
use std::sync::Arc;

use super::{
    label_key, CellPredicate, Count, Guard, Move, ParseError, Rule, RuleSet, Segment, SegmentBody,
    Statement,
};
use crate::color::Color;

/// Parses a rule file.
pub fn parse_rule_set(source: &str) -> Result<RuleSet, ParseError> {
    let mut colors: Option<Vec<Color>> = None;
    let mut rules: Vec<Rule> = Vec::new();
    let mut labels = HashSet::new();

    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        let mut cur = Cursor::new(line, line_no);
        cur.skip_ws();
        if cur.rest().starts_with("colors:") {
            if colors.is_some() {
                return Err(cur.error("duplicate `colors:` header"));
            }
            if !rules.is_empty() {
                return Err(cur.error("`colors:` header must precede the rules"));
            }
            cur.pos += "colors:".len();
            let mut declared = Vec::new();
            loop {
                cur.skip_ws();
                if cur.at_end() {
                    break;
                }
                let color = cur.color()?;
                if declared.contains(&color) {
                    return Err(cur.error(&format!("color `{color}` declared twice")));
                }
                declared.push(color);
            }
            if declared.is_empty() {
                return Err(cur.error("`colors:` header declares no color"));
            }
            colors = Some(declared);
            continue;
        }

        let declared = colors.as_ref().ok_or(ParseError::MissingColors)?;
        let rule = cur.rule()?;
        check_rule(&rule, declared, line_no)?;
        if !labels.insert(rule.label.clone()) {
            return Err(ParseError::DuplicateLabel {
                line: line_no,
                label: rule.label.to_string(),
            });
        }
        if let Some(prev) = rules.last() {
            if label_key(&prev.label) >= label_key(&rule.label) {
                return Err(ParseError::LabelOrder {
                    line: line_no,
                    label: rule.label.to_string(),
                    previous: prev.label.to_string(),
                });
            }
        }
        rules.push(rule);
    }

    let colors = colors.ok_or(ParseError::MissingColors)?;
    Ok(RuleSet { colors, rules })
}

fn check_rule(rule: &Rule, declared: &[Color], line: usize) -> Result<(), ParseError> {
    let mut used = Vec::new();
    collect_pred(&rule.guard.center, &mut used, &mut false);
    let mut self_outside = false;
    for seg in rule.guard.left.iter().chain(&rule.guard.right) {
        collect_segment(seg, &mut used, &mut self_outside);
    }
    if self_outside {
        return Err(ParseError::SelfOutsideCenter { line });
    }
    used.extend(rule.statement.color);
    match used.into_iter().find(|c| !declared.contains(c)) {
        Some(c) => Err(ParseError::UndeclaredColor {
            line,
            color: c.name(),
        }),
        None => Ok(()),
    }
}

fn collect_segment(seg: &Segment, used: &mut Vec<Color>, self_seen: &mut bool) {
    match &seg.body {
        SegmentBody::Cell(p) => collect_pred(p, used, self_seen),
        SegmentBody::NegatedSequence(inner) => {
            for s in inner {
                collect_segment(s, used, self_seen);
            }
        }
    }
}

fn collect_pred(pred: &CellPredicate, used: &mut Vec<Color>, self_seen: &mut bool) {
    match pred {
        CellPredicate::Empty | CellPredicate::Any => {}
        CellPredicate::Contains(c) | CellPredicate::ExactlySingle(c) => used.push(*c),
        CellPredicate::SelfIs(c) => {
            *self_seen = true;
            used.push(*c);
        }
        CellPredicate::Not(p) => collect_pred(p, used, self_seen),
        CellPredicate::AnyOf(ps) | CellPredicate::AllOf(ps) => {
            for p in ps {
                collect_pred(p, used, self_seen);
            }
        }
    }
}

enum GuardItem {
    Center(CellPredicate),
    Segment(Segment),
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize) -> Self {
        Cursor { src, pos: 0, line }
    }

    fn error(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            column: self.src[..self.pos].chars().count() + 1,
            message: message.to_string(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<(), ParseError> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{token}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, ParseError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '_' {
                self.pos += 1;
            } else {
                break;
            }
        }
        if start == self.pos {
            return Err(self.error("expected a name"));
        }
        Ok(&self.src[start..self.pos])
    }

    fn color(&mut self) -> Result<Color, ParseError> {
        let start = self.pos;
        let name = self.ident()?;
        Color::new(name).map_err(|e| {
            self.pos = start;
            self.error(&e.to_string())
        })
    }

    fn uint(&mut self) -> Result<u32, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.src[start..self.pos].parse().map_err(|_| {
            self.pos = start;
            self.error("expected a number")
        })
    }

    fn rule(&mut self) -> Result<Rule, ParseError> {
        let label_at = self.pos;
        let label = self.ident()?;
        if label_key(label).is_none() {
            self.pos = label_at;
            return Err(ParseError::BadLabel {
                line: self.line,
                label: label.to_string(),
            });
        }
        self.skip_ws();
        if self.rest().starts_with("::") {
            return Err(self.error("expected `:` after the label"));
        }
        self.expect(":")?;

        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.at_end() {
                return Err(self.error("expected `::` and a statement"));
            }
            if self.eat("::") {
                break;
            }
            if self.peek() == Some('[') {
                self.pos += 1;
                self.skip_ws();
                let pred = self.cell_predicate()?;
                self.skip_ws();
                self.expect("]")?;
                if self.peek() == Some('^') {
                    return Err(self.error("the center cell cannot be repeated"));
                }
                items.push(GuardItem::Center(pred));
            } else {
                items.push(GuardItem::Segment(self.segment()?));
            }
        }

        let centers = items
            .iter()
            .filter(|i| matches!(i, GuardItem::Center(_)))
            .count();
        if centers != 1 {
            return Err(ParseError::CenterCount {
                line: self.line,
                found: centers,
            });
        }
        let mut left = Vec::new();
        let mut right = Vec::new();
        let mut center = None;
        for item in items {
            match item {
                GuardItem::Center(p) => center = Some(p),
                GuardItem::Segment(s) if center.is_none() => left.push(s),
                GuardItem::Segment(s) => right.push(s),
            }
        }

        let statement = self.statement()?;
        self.skip_ws();
        if !self.at_end() {
            return Err(self.error("unexpected input after the statement"));
        }
        Ok(Rule {
            label: Arc::from(label),
            guard: Guard {
                left,
                center: center.expect("one center"),
                right,
            },
            statement,
        })
    }

    fn segment(&mut self) -> Result<Segment, ParseError> {
        let body = if self.rest().starts_with("!(") && !self.group_has_top_level_bar(self.pos + 1) {
            self.pos += 2;
            let mut inner = Vec::new();
            loop {
                self.skip_ws();
                if self.eat(")") {
                    break;
                }
                if self.at_end() {
                    return Err(self.error("unclosed `!(`"));
                }
                if self.peek() == Some('[') {
                    return Err(self.error("the center cell cannot appear inside a negation"));
                }
                inner.push(self.segment()?);
            }
            if inner.is_empty() {
                return Err(self.error("empty negated sequence"));
            }
            SegmentBody::NegatedSequence(inner)
        } else {
            SegmentBody::Cell(self.cell_predicate()?)
        };
        let count = if self.eat("^") {
            self.count()?
        } else {
            Count::Literal(1)
        };
        Ok(Segment { body, count })
    }

    /// Whether the parenthesised group opening at byte `open` holds a `|` at
    /// its own nesting level, which makes `!( .. )` a negated alternative
    /// rather than a negated sequence.
    fn group_has_top_level_bar(&self, open: usize) -> bool {
        let mut depth = 0usize;
        for c in self.src[open..].chars() {
            match c {
                '(' | '{' | '[' => depth += 1,
                ')' | '}' | ']' => {
                    depth -= 1;
                    if depth == 0 {
                        return false;
                    }
                }
                '|' if depth == 1 => return true,
                _ => {}
            }
        }
        false
    }

    fn count(&mut self) -> Result<Count, ParseError> {
        if self.eat("(") {
            self.skip_ws();
            let count = if self.eat("phi") {
                self.skip_ws();
                let sign = if self.eat("+") {
                    1
                } else if self.eat("-") {
                    -1
                } else {
                    return Err(self.error("expected `+` or `-` after `phi`"));
                };
                self.skip_ws();
                Count::Phi(sign * i64::from(self.uint()?))
            } else {
                Count::Literal(self.uint()?)
            };
            self.skip_ws();
            self.expect(")")?;
            Ok(count)
        } else if self.rest().starts_with("phi")
            && !matches!(self.rest()[3..].chars().next(), Some(c) if c.is_ascii_alphanumeric() || c == '_')
        {
            self.pos += 3;
            Ok(Count::Phi(0))
        } else if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            Ok(Count::Literal(self.uint()?))
        } else {
            Err(self.error("expected a count: number, `phi` or `(phi-k)`"))
        }
    }

    fn cell_predicate(&mut self) -> Result<CellPredicate, ParseError> {
        match self.peek() {
            Some('!') => {
                self.pos += 1;
                Ok(CellPredicate::Not(Box::new(self.cell_predicate()?)))
            }
            Some('?') => {
                self.pos += 1;
                Ok(CellPredicate::Any)
            }
            Some('@') => {
                self.pos += 1;
                let c = self.color()?;
                if self.eat("!") {
                    Ok(CellPredicate::AllOf(vec![
                        CellPredicate::SelfIs(c),
                        CellPredicate::ExactlySingle(c),
                    ]))
                } else {
                    Ok(CellPredicate::SelfIs(c))
                }
            }
            Some('(') => {
                self.pos += 1;
                let items = self.pred_list('|', ")")?;
                Ok(collapse(items, CellPredicate::AnyOf))
            }
            Some('{') => {
                self.pos += 1;
                let items = self.pred_list(',', "}")?;
                Ok(collapse(items, CellPredicate::AllOf))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                let name = self.ident()?;
                if name == "E" {
                    return Ok(CellPredicate::Empty);
                }
                self.pos = start;
                let color = self.color()?;
                if self.eat("!") {
                    Ok(CellPredicate::ExactlySingle(color))
                } else {
                    Ok(CellPredicate::Contains(color))
                }
            }
            _ => Err(self.error("expected a cell predicate")),
        }
    }

    fn pred_list(&mut self, sep: char, close: &str) -> Result<Vec<CellPredicate>, ParseError> {
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            items.push(self.cell_predicate()?);
            self.skip_ws();
            if self.eat(close) {
                return Ok(items);
            }
            if self.peek() == Some(sep) {
                self.pos += 1;
            } else {
                return Err(self.error(&format!("expected `{sep}` or `{close}`")));
            }
        }
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        self.skip_ws();
        if let Some(movement) = self.movement() {
            return Ok(Statement {
                color: None,
                movement,
            });
        }
        if !matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
            return Err(self.error("expected a statement: color, move, or `color,move`"));
        }
        let color = self.color()?;
        self.skip_ws();
        let movement = if self.eat(",") {
            self.skip_ws();
            self.movement()
                .ok_or_else(|| self.error("expected `->`, `<-` or `.` after `,`"))?
        } else {
            Move::Stay
        };
        Ok(Statement {
            color: Some(color),
            movement,
        })
    }

    fn movement(&mut self) -> Option<Move> {
        if self.eat("->") {
            Some(Move::Forward)
        } else if self.eat("<-") {
            Some(Move::Backward)
        } else if self.eat(".") {
            Some(Move::Stay)
        } else {
            None
        }
    }
}

fn collapse(
    mut items: Vec<CellPredicate>,
    wrap: fn(Vec<CellPredicate>) -> CellPredicate,
) -> CellPredicate {
    if items.len() == 1 {
        items.pop().unwrap()
    } else {
        wrap(items)
    }
}
