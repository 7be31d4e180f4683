use std::fmt::Write as _;
use std::sync::Arc;

use sha2::{Digest, Sha256};

use super::EngineError;
use crate::color::Color;
use crate::config::{Robot, RobotId};
use crate::ruledsl::RuleSet;

/// State before round `round` plus the rule each robot ran during it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub round: u64,
    pub robots: Vec<Robot>,
    pub fired: Vec<(RobotId, Arc<str>)>,
}

impl Record {
    pub fn fired_label(&self, robot: RobotId) -> Option<&str> {
        self.fired
            .iter()
            .find(|(id, _)| *id == robot)
            .map(|(_, l)| &**l)
    }

    /// Inclusive occupied interval.
    pub fn span(&self) -> (i64, i64) {
        let min = self.robots.iter().map(|r| r.position).min().unwrap();
        let max = self.robots.iter().map(|r| r.position).max().unwrap();
        (min, max)
    }

    pub fn is_gathered(&self) -> bool {
        let first = self.robots[0].position;
        self.robots.iter().all(|r| r.position == first)
    }

    fn render(&self) -> String {
        let mut fired: Vec<&(RobotId, Arc<str>)> = self.fired.iter().collect();
        fired.sort_by_key(|(id, _)| *id);
        let fired = if fired.is_empty() {
            "-".to_string()
        } else {
            fired
                .iter()
                .map(|(id, l)| format!("{id}={l}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "t={} | {} | fired: {}",
            self.round,
            render_robots(&self.robots),
            fired
        )
    }
}

/// `pos:color[*k][!]` groups, sorted by node, color, crash flag.
pub fn render_robots(robots: &[Robot]) -> String {
    let mut keys: Vec<(i64, Color, bool)> = robots
        .iter()
        .map(|r| (r.position, r.color, r.crashed))
        .collect();
    keys.sort();
    let mut out = String::new();
    let mut i = 0;
    while i < keys.len() {
        let j = keys[i..].iter().take_while(|k| **k == keys[i]).count() + i;
        let (pos, color, crashed) = keys[i];
        if !out.is_empty() {
            out.push(' ');
        }
        let _ = write!(out, "{pos}:{color}");
        if j - i > 1 {
            let _ = write!(out, "*{}", j - i);
        }
        if crashed {
            out.push('!');
        }
        i = j;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    GatheredAt { node: i64, round: u64 },
    TimedOut { horizon: u64 },
    Error(EngineError),
}

impl Outcome {
    pub fn is_gathered(&self) -> bool {
        matches!(self, Outcome::GatheredAt { .. })
    }

    pub fn gathered_round(&self) -> Option<u64> {
        match self {
            Outcome::GatheredAt { round, .. } => Some(*round),
            _ => None,
        }
    }

    /// The `outcome: ...` line of the trace format.
    pub fn render(&self) -> String {
        match self {
            Outcome::GatheredAt { node, round } => {
                format!("outcome: gathered@{node} round={round}")
            }
            Outcome::TimedOut { horizon } => format!("outcome: timeout horizon={horizon}"),
            Outcome::Error(e) => format!("outcome: error {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trace {
    pub phi: u32,
    pub rules_hash: String,
    /// Round budget the trace was produced with.
    pub horizon: u64,
    pub records: Vec<Record>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayVerdict {
    Identical,
    Diverged { round: u64 },
}

impl ReplayVerdict {
    pub fn is_identical(&self) -> bool {
        *self == ReplayVerdict::Identical
    }
}

/// First 16 hex digits of the SHA-256 of the normalized rule listing.
pub fn rules_hash(rules: &RuleSet) -> String {
    let digest = Sha256::digest(rules.to_string().as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

impl Trace {
    pub fn header(&self) -> String {
        format!("trace v1 phi={} rules={}", self.phi, self.rules_hash)
    }

    /// Line-oriented text form, byte-stable for a given execution.
    pub fn render(&self) -> String {
        let mut out = self.header();
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.render());
            out.push('\n');
        }
        out.push_str(&self.outcome.render());
        out.push('\n');
        out
    }

    pub fn final_record(&self) -> &Record {
        self.records
            .last()
            .expect("a trace has at least one record")
    }

    /// Labels fired in the round that produced the gathered configuration.
    pub fn gathering_step_labels(&self) -> Option<Vec<String>> {
        let round = self.outcome.gathered_round()?;
        if round == 0 {
            return Some(Vec::new());
        }
        let mut labels: Vec<String> = self.records[round as usize - 1]
            .fired
            .iter()
            .map(|(_, l)| l.to_string())
            .collect();
        labels.sort();
        labels.dedup();
        Some(labels)
    }

    pub(crate) fn first_difference(&self, other: &Trace) -> ReplayVerdict {
        if self.phi != other.phi || self.rules_hash != other.rules_hash {
            return ReplayVerdict::Diverged { round: 0 };
        }
        for (a, b) in self.records.iter().zip(&other.records) {
            if a != b {
                return ReplayVerdict::Diverged { round: a.round };
            }
        }
        if self.records.len() != other.records.len() || self.outcome != other.outcome {
            let round = self.records.len().min(other.records.len()) as u64;
            return ReplayVerdict::Diverged { round };
        }
        ReplayVerdict::Identical
    }
}

/// Horizon to re-execute a rendered trace with, read off its last line.
pub(super) fn horizon_from_text(text: &str) -> Option<u64> {
    let last = text.lines().last()?;
    if let Some(rest) = last.strip_prefix("outcome: timeout horizon=") {
        return rest.parse().ok();
    }
    if let Some(rest) = last.strip_prefix("outcome: gathered@") {
        return rest.split_once(" round=")?.1.parse().ok();
    }
    // An error trace stops at the failing round; one more round reproduces it.
    let rounds = text.lines().filter(|l| l.starts_with("t=")).count() as u64;
    (rounds > 0).then_some(rounds)
}

pub(super) fn first_text_difference(recorded: &str, fresh: &str) -> ReplayVerdict {
    let mut a = recorded.lines();
    let mut b = fresh.lines();
    if a.next() != b.next() {
        return ReplayVerdict::Diverged { round: 0 };
    }
    let mut round = 0;
    loop {
        match (a.next(), b.next()) {
            (None, None) => return ReplayVerdict::Identical,
            (x, y) if x == y => {
                if x.is_some_and(|l| l.starts_with("t=")) {
                    round += 1;
                }
            }
            _ => return ReplayVerdict::Diverged { round },
        }
    }
}
