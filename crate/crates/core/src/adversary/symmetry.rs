//! Edge-symmetric configurations under a fully synchronous scheduler.
//!
//! Robots on mirrored nodes see mirrored views and make mirrored moves, so
//! an edge-symmetric configuration stays edge-symmetric about the same axis
//! and never collapses onto one node. This module checks that round by round.

use thiserror::Error;

use crate::config::Configuration;
use crate::engine::{run, CrashScenario, EngineError, Outcome, Schedule, Trace};
use crate::ruledsl::RuleSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SymmetryError {
    #[error("configuration is not edge-symmetric")]
    NotEdgeSymmetric,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetryRound {
    pub round: u64,
    /// Doubled axis of the configuration at that round, if edge-symmetric.
    pub axis: Option<i64>,
    pub gathered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryVerdict {
    /// Doubled axis of the initial configuration.
    pub axis: i64,
    pub rounds: Vec<SymmetryRound>,
    pub trace: Trace,
    pub horizon: u64,
}

impl SymmetryVerdict {
    /// Every round up to the horizon kept the initial axis and stayed apart.
    pub fn holds(&self) -> bool {
        self.rounds.len() as u64 == self.horizon + 1
            && self
                .rounds
                .iter()
                .all(|r| r.axis == Some(self.axis) && !r.gathered)
    }

    pub fn first_violation(&self) -> Option<u64> {
        self.rounds
            .iter()
            .find(|r| r.axis != Some(self.axis) || r.gathered)
            .map(|r| r.round)
            .or_else(|| (!self.holds()).then_some(self.rounds.len() as u64))
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.rounds {
            let axis = match r.axis {
                Some(a) if a.rem_euclid(2) == 1 => format!("{}.5", (a - 1) / 2),
                Some(a) => format!("{}", a / 2),
                None => "-".to_string(),
            };
            out.push_str(&format!(
                "t={} axis={} gathered={} {}\n",
                r.round,
                axis,
                r.gathered,
                if r.axis == Some(self.axis) && !r.gathered {
                    "ok"
                } else {
                    "broken"
                }
            ));
        }
        if let Outcome::Error(e) = &self.trace.outcome {
            out.push_str(&format!("error: {e}\n"));
        }
        out.push_str(if self.holds() {
            "verdict: PASS\n"
        } else {
            "verdict: FAIL\n"
        });
        out
    }
}

/// Runs `rules` without crashes from an edge-symmetric `config` and records,
/// for every round up to `horizon`, its symmetry axis and whether it gathered.
pub fn symmetry_preservation_check(
    rules: &RuleSet,
    config: &Configuration,
    horizon: u64,
) -> Result<SymmetryVerdict, SymmetryError> {
    let axis = config
        .edge_symmetry_axis()
        .ok_or(SymmetryError::NotEdgeSymmetric)?;
    let trace = run(
        config,
        rules,
        &Schedule::Fsync,
        &CrashScenario::none(),
        horizon,
    )?;
    let rounds = trace
        .records
        .iter()
        .map(|rec| {
            let cfg =
                Configuration::new(config.phi(), rec.robots.clone()).expect("robots from a run");
            SymmetryRound {
                round: rec.round,
                axis: cfg.edge_symmetry_axis(),
                gathered: cfg.is_gathered(),
            }
        })
        .collect();
    Ok(SymmetryVerdict {
        axis,
        rounds,
        trace,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::color::Color;

    fn white(nodes: &[i64]) -> Configuration {
        Configuration::uniform(1, nodes, Color::new("W").unwrap(), 1).unwrap()
    }

    #[test]
    fn alg1_pair_swaps_forever() {
        let v = symmetry_preservation_check(&builtin::alg1(), &white(&[0, 1]), 100).unwrap();
        assert!(v.holds());
        assert_eq!(v.rounds.len(), 101);
        let r = &v.trace.records;
        assert_eq!(r[0].robots[0].position, 0);
        assert_eq!(r[1].robots[0].position, 1);
        assert_eq!(r[2].robots, r[0].robots);
        assert_eq!(v.first_violation(), None);
    }

    #[test]
    fn alg2_pair_never_gathers() {
        let v = symmetry_preservation_check(&builtin::alg2(), &white(&[0, 1]), 100).unwrap();
        assert!(v.holds());
        assert!(v.render().ends_with("verdict: PASS\n"));
    }

    #[test]
    fn precondition() {
        assert_eq!(
            symmetry_preservation_check(&builtin::alg1(), &white(&[0, 0]), 10),
            Err(SymmetryError::NotEdgeSymmetric)
        );
        assert_eq!(
            symmetry_preservation_check(&builtin::alg1(), &white(&[0, 2]), 10),
            Err(SymmetryError::NotEdgeSymmetric)
        );
    }
}
