//! Bounded search for a semi-synchronous schedule that keeps robots apart.
//!
//! Depth-first over the non-empty sets of (node, color) groups to activate
//! each round. Robots of one group see the same view, so activating part of
//! a group only splits it; whole groups are enough to keep the branching
//! small. States that already failed are memoized modulo translation and
//! reflection together with the number of rounds they could not survive.
//! Rounds in which nothing changes are not allowed in a witness.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::color::Color;
use crate::config::{Configuration, RobotId};
use crate::engine::{step_program, CrashScenario, EngineError, Schedule};
use crate::ruledsl::RuleSet;

pub const DEFAULT_STATE_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search budget of {0} memoized states exceeded")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    pub budget: usize,
    /// Only ever activate every robot, which degenerates to a synchronous run.
    pub full_activation: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            budget: DEFAULT_STATE_BUDGET,
            full_activation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    /// Activation sets for rounds `0..horizon`, none of which gathers.
    pub witness: Option<Schedule>,
    pub states: usize,
}

type StateKey = Vec<(i64, Color, u32)>;

fn canonical(config: &Configuration) -> StateKey {
    let mut groups: Vec<(i64, Color, u32)> = Vec::new();
    let mut keys: Vec<(i64, Color)> = config
        .robots()
        .iter()
        .map(|r| (r.position, r.color))
        .collect();
    keys.sort();
    for (p, c) in keys {
        match groups.last_mut() {
            Some(g) if g.0 == p && g.1 == c => g.2 += 1,
            _ => groups.push((p, c, 1)),
        }
    }
    let (min, max) = config.span();
    let forward: StateKey = groups.iter().map(|&(p, c, n)| (p - min, c, n)).collect();
    let mut backward: StateKey = groups.iter().map(|&(p, c, n)| (max - p, c, n)).collect();
    backward.sort();
    forward.min(backward)
}

fn groups(config: &Configuration) -> Vec<BTreeSet<RobotId>> {
    let mut by_key: Vec<((i64, Color), BTreeSet<RobotId>)> = Vec::new();
    for r in config.robots() {
        let key = (r.position, r.color);
        match by_key.iter_mut().find(|(k, _)| *k == key) {
            Some((_, set)) => {
                set.insert(r.id);
            }
            None => by_key.push((key, [r.id].into_iter().collect())),
        }
    }
    by_key.sort_by_key(|(k, _)| *k);
    by_key.into_iter().map(|(_, s)| s).collect()
}

struct Search<'a> {
    program: &'a crate::ruledsl::Program,
    options: SearchOptions,
    failed: HashMap<StateKey, u64>,
    path: Vec<BTreeSet<RobotId>>,
    none: CrashScenario,
}

impl Search<'_> {
    fn survives(&mut self, config: &Configuration, remaining: u64) -> Result<bool, SearchError> {
        if config.is_gathered() {
            return Ok(false);
        }
        if remaining == 0 {
            return Ok(true);
        }
        let key = canonical(config);
        if self.failed.get(&key).is_some_and(|&r| r <= remaining) {
            return Ok(false);
        }
        let groups = groups(config);
        let mut masks: Vec<u64> = if self.options.full_activation || groups.len() > 20 {
            vec![(1u64 << groups.len()) - 1]
        } else {
            (1..1u64 << groups.len()).collect()
        };
        masks.sort_by_key(|m| (m.count_ones(), *m));
        let round = self.path.len() as u64;
        for mask in masks {
            let active: BTreeSet<RobotId> = groups
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .flat_map(|(_, g)| g.iter().copied())
                .collect();
            let next = step_program(config, self.program, Some(&active), &self.none, round)?;
            if next.config == *config {
                // Activating only idle robots would stall the run for free.
                continue;
            }
            self.path.push(active);
            if self.survives(&next.config, remaining - 1)? {
                return Ok(true);
            }
            self.path.pop();
        }
        let entry = self.failed.entry(key).or_insert(remaining);
        *entry = (*entry).min(remaining);
        if self.failed.len() > self.options.budget {
            return Err(SearchError::BudgetExceeded(self.options.budget));
        }
        Ok(false)
    }
}

/// Looks for an activation schedule under which `config` is not gathered in
/// any of the rounds `0..=horizon`. No robot crashes.
pub fn ssync_adversary_search(
    rules: &RuleSet,
    config: &Configuration,
    horizon: u64,
    options: SearchOptions,
) -> Result<SearchOutcome, SearchError> {
    let program = rules
        .instantiate(config.phi())
        .map_err(EngineError::Program)?;
    let mut search = Search {
        program: &program,
        options,
        failed: HashMap::new(),
        path: Vec::new(),
        none: CrashScenario::none(),
    };
    let found = search.survives(config, horizon)?;
    Ok(SearchOutcome {
        witness: found.then_some(Schedule::Ssync(search.path)),
        states: search.failed.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::engine::{run, Outcome};

    fn white(phi: u32, nodes: &[i64]) -> Configuration {
        Configuration::uniform(phi, nodes, Color::new("W").unwrap(), 1).unwrap()
    }

    #[test]
    fn alg2_three_nodes_has_a_witness() {
        let cfg = white(1, &[0, 1, 2]);
        let out =
            ssync_adversary_search(&builtin::alg2(), &cfg, 50, SearchOptions::default()).unwrap();
        let schedule = out.witness.expect("witness");
        let Schedule::Ssync(rounds) = &schedule else {
            panic!("ssync schedule expected")
        };
        assert_eq!(rounds.len(), 50);
        let trace = run(
            &cfg,
            &builtin::alg2(),
            &schedule,
            &CrashScenario::none(),
            50,
        )
        .unwrap();
        assert_eq!(trace.outcome, Outcome::TimedOut { horizon: 50 });
    }

    #[test]
    fn gathered_start_has_none() {
        let cfg = white(1, &[4, 4]);
        let out =
            ssync_adversary_search(&builtin::alg2(), &cfg, 10, SearchOptions::default()).unwrap();
        assert_eq!(out.witness, None);
    }

    #[test]
    fn full_activation_matches_synchronous_run() {
        let opts = SearchOptions {
            full_activation: true,
            ..SearchOptions::default()
        };
        let cfg = white(2, &[0, 2, 3, 4, 6]);
        let out = ssync_adversary_search(&builtin::alg1(), &cfg, 40, opts).unwrap();
        assert_eq!(out.witness, None);
    }

    #[test]
    fn canonical_key_ignores_translation_and_reflection() {
        let a = white(1, &[0, 1, 3]);
        let b = white(1, &[10, 12, 13]);
        assert_eq!(canonical(&a), canonical(&b));
        assert_ne!(canonical(&a), canonical(&white(1, &[0, 1, 2])));
    }

    #[test]
    fn tiny_budget_is_reported() {
        let cfg = white(1, &[0, 1, 2]);
        let opts = SearchOptions {
            budget: 0,
            full_activation: true,
        };
        // One synchronous run of alg2 on three nodes gathers, so the
        // search fails at least one state.
        assert_eq!(
            ssync_adversary_search(&builtin::alg2(), &cfg, 50, opts),
            Err(SearchError::BudgetExceeded(0))
        );
    }
}
