//! Canonical crash scenarios derived from a reference execution.
//!
//! Robots sharing a node and a color at some round behave in lockstep from
//! then on, so which of them crash does not matter, only how many. Each
//! such group is either spared, partly crashed (represented by its
//! lowest-id robot) or wholly crashed.

use crate::config::{Robot, RobotId};
use crate::engine::{CrashEvent, CrashPhase, CrashScenario, Trace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrashBounds {
    /// Crash rounds are `0..window`.
    pub window: u64,
    pub phases: Vec<CrashPhase>,
}

impl CrashBounds {
    /// Window reaching `extra` rounds past the reference gathering round, or
    /// the whole reference trace when it did not gather.
    pub fn after_reference(reference: &Trace, extra: u64, phases: Vec<CrashPhase>) -> Self {
        let window = match reference.outcome.gathered_round() {
            Some(t) => t + extra + 1,
            None => reference.records.len() as u64,
        };
        CrashBounds { window, phases }
    }
}

fn robots_at(trace: &Trace, round: u64) -> &[Robot] {
    let record = trace
        .records
        .get(round as usize)
        .unwrap_or_else(|| trace.final_record());
    &record.robots
}

/// Ways to crash robots on one node: every combination of per-color-group
/// choices except sparing them all. Crashed robots are skipped.
pub fn group_patterns(robots: &[Robot], node: i64) -> Vec<Vec<RobotId>> {
    let mut groups: Vec<Vec<&Robot>> = Vec::new();
    let mut here: Vec<&Robot> = robots
        .iter()
        .filter(|r| r.position == node && !r.crashed)
        .collect();
    here.sort_by_key(|r| (r.color, r.id));
    for r in here {
        match groups.last_mut() {
            Some(g) if g[0].color == r.color => g.push(r),
            _ => groups.push(vec![r]),
        }
    }
    let mut patterns: Vec<Vec<RobotId>> = vec![Vec::new()];
    for g in &groups {
        let mut choices: Vec<Vec<RobotId>> = vec![Vec::new()];
        if g.len() >= 2 {
            choices.push(vec![g[0].id]);
        }
        choices.push(g.iter().map(|r| r.id).collect());
        patterns = patterns
            .iter()
            .flat_map(|p| {
                choices.iter().map(move |c| {
                    let mut next = p.clone();
                    next.extend_from_slice(c);
                    next
                })
            })
            .collect();
    }
    patterns.retain(|p| !p.is_empty());
    for p in &mut patterns {
        p.sort();
    }
    patterns
}

fn events(ids: &[RobotId], round: u64, phase: CrashPhase) -> impl Iterator<Item = CrashEvent> + '_ {
    ids.iter().map(move |&robot| CrashEvent {
        robot,
        round,
        phase,
    })
}

/// Single-event scenarios: one round, one node, one phase, one group
/// pattern. The empty scenario comes first.
pub fn enumerate_crash_scenarios(reference: &Trace, bounds: &CrashBounds) -> Vec<CrashScenario> {
    let mut out = vec![CrashScenario::none()];
    for round in 0..bounds.window {
        let robots = robots_at(reference, round);
        let mut nodes: Vec<i64> = robots.iter().map(|r| r.position).collect();
        nodes.sort_unstable();
        nodes.dedup();
        for node in nodes {
            let patterns = group_patterns(robots, node);
            for &phase in &bounds.phases {
                for p in &patterns {
                    out.push(CrashScenario::new(events(p, round, phase).collect()));
                }
            }
        }
    }
    out
}

/// Extends a scenario with one more event at its crash node, strictly after
/// its last crash round, using the execution `trace` of `first`.
pub fn enumerate_follow_up(
    trace: &Trace,
    first: &CrashScenario,
    bounds: &CrashBounds,
) -> Vec<CrashScenario> {
    let Some(last) = first.events.iter().map(|e| e.round).max() else {
        return Vec::new();
    };
    let crashed_node = |round: u64| {
        robots_at(trace, round)
            .iter()
            .find(|r| r.crashed)
            .map(|r| r.position)
    };
    let mut out = Vec::new();
    for round in last + 1..bounds.window {
        let Some(node) = crashed_node(round) else {
            continue;
        };
        let patterns = group_patterns(robots_at(trace, round), node);
        for &phase in &bounds.phases {
            for p in &patterns {
                let mut all = first.events.clone();
                all.extend(events(p, round, phase));
                out.push(CrashScenario::new(all));
            }
        }
    }
    out
}
