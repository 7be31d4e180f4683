//! Round-synchronous execution of a rule set with crash injection.
//!
//! Every round, the robots activated by the scheduler take a snapshot of the
//! same configuration, pick their rule, recolor, and then move. A crash can
//! cut a cycle in two places: [`CrashPhase::Pre`] means the robot does
//! nothing from that round on, while [`CrashPhase::Mid`] lets the color
//! change of that round land but drops the move. A crash at the end of
//! round `t` is `Pre(t + 1)`. A crash between Look and Compute has the same
//! net effect as `Pre(t)`.

mod files;
mod trace;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::color::Color;
use crate::config::{view_from_occupancy, Configuration, Metrics, Robot, RobotId};
use crate::ruledsl::{EvalError, Program, RuleSet, Selection};

pub use files::{parse_scenario, parse_schedule, FileError};
pub use trace::{render_robots, rules_hash, Outcome, Record, ReplayVerdict, Trace};

/// Extra rounds a gathered configuration must hold still before it counts.
pub const STABILITY_ROUNDS: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CrashPhase {
    Pre,
    Mid,
}

impl fmt::Display for CrashPhase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrashPhase::Pre => "pre",
            CrashPhase::Mid => "mid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CrashEvent {
    pub robot: RobotId,
    pub round: u64,
    pub phase: CrashPhase,
}

/// Crash injections for one run. All of them must hit a single node.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CrashScenario {
    pub events: Vec<CrashEvent>,
}

impl CrashScenario {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(mut events: Vec<CrashEvent>) -> Self {
        events.sort();
        CrashScenario { events }
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn event_for(&self, robot: RobotId) -> Option<&CrashEvent> {
        self.events.iter().find(|e| e.robot == robot)
    }

    pub fn events_at(&self, round: u64) -> impl Iterator<Item = &CrashEvent> {
        self.events.iter().filter(move |e| e.round == round)
    }

    fn validate(&self, config: &Configuration) -> Result<(), EngineError> {
        let mut seen = BTreeSet::new();
        for e in &self.events {
            if config.robot(e.robot).is_none() {
                return Err(EngineError::UnknownRobot(e.robot));
            }
            if !seen.insert(e.robot) {
                return Err(EngineError::DuplicateCrash(e.robot));
            }
        }
        Ok(())
    }

    /// One `crash <robot> <round> <phase>` line per event.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# crash <robot> <round> pre|mid\n");
        for e in &self.events {
            out.push_str(&format!("crash {} {} {}\n", e.robot, e.round, e.phase));
        }
        out
    }
}

impl fmt::Display for CrashScenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.events.is_empty() {
            return f.write_str("none");
        }
        for (i, e) in self.events.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}@{}{}", e.robot, e.round, e.phase)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Schedule {
    Fsync,
    /// Robots activated in each round. Rounds past the end activate everyone.
    Ssync(Vec<BTreeSet<RobotId>>),
}

impl Schedule {
    pub fn active(&self, round: u64) -> Option<&BTreeSet<RobotId>> {
        match self {
            Schedule::Fsync => None,
            Schedule::Ssync(rounds) => rounds.get(round as usize),
        }
    }

    fn validate(&self, config: &Configuration) -> Result<(), EngineError> {
        if let Schedule::Ssync(rounds) = self {
            for (t, set) in rounds.iter().enumerate() {
                if set.is_empty() {
                    return Err(EngineError::EmptyActivation { round: t as u64 });
                }
                if let Some(id) = set.iter().find(|id| config.robot(**id).is_none()) {
                    return Err(EngineError::UnknownRobot(*id));
                }
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        match self {
            Schedule::Fsync => "fsync\n".to_string(),
            Schedule::Ssync(rounds) => {
                let mut out = String::from("ssync\n");
                for (t, set) in rounds.iter().enumerate() {
                    out.push_str(&format!("round {t}:"));
                    for id in set {
                        out.push_str(&format!(" {id}"));
                    }
                    out.push('\n');
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("rule set cannot run at this visibility range: {0}")]
    Program(#[source] EvalError),
    #[error("robot {robot} in round {round}: {source}")]
    Rule {
        robot: RobotId,
        round: u64,
        #[source]
        source: EvalError,
    },
    #[error(
        "round {round}: crashes at nodes {first} and {second}, but all crashes must hit one node"
    )]
    CrashNodeConflict { round: u64, first: i64, second: i64 },
    #[error("robot {robot} cannot crash mid-cycle in round {round}: it is not activated")]
    MidCrashInactive { robot: RobotId, round: u64 },
    #[error("unknown robot id {0}")]
    UnknownRobot(RobotId),
    #[error("robot {0} has more than one crash event")]
    DuplicateCrash(RobotId),
    #[error("round {round}: empty activation set")]
    EmptyActivation { round: u64 },
    #[error("robot {robot} has color {color}, which the rule set does not declare")]
    UndeclaredColor { robot: RobotId, color: Color },
    #[error("horizon must be at least 1")]
    ZeroHorizon,
    #[error("robot {0} moved past the end of the position range")]
    PositionOverflow(RobotId),
}

/// Default round budget: `4·m_init + 16`.
pub fn default_horizon(metrics: &Metrics) -> u64 {
    4 * metrics.m_init + 16
}

/// Result of one round: the next configuration and the rule each acting
/// robot executed, by robot id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    pub config: Configuration,
    pub fired: Vec<(RobotId, Arc<str>)>,
}

/// Executes round `round` of `rules` on `config`.
///
/// `active = None` activates every robot.
pub fn step(
    config: &Configuration,
    rules: &RuleSet,
    active: Option<&BTreeSet<RobotId>>,
    crashes: &CrashScenario,
    round: u64,
) -> Result<StepResult, EngineError> {
    let program = rules
        .instantiate(config.phi())
        .map_err(EngineError::Program)?;
    step_program(config, &program, active, crashes, round)
}

pub(crate) fn step_program(
    config: &Configuration,
    program: &Program,
    active: Option<&BTreeSet<RobotId>>,
    crashes: &CrashScenario,
    round: u64,
) -> Result<StepResult, EngineError> {
    let is_active = |id: RobotId| active.is_none_or(|set| set.contains(&id));

    let mut crash_node = config
        .robots()
        .iter()
        .find(|r| r.crashed)
        .map(|r| r.position);
    let mut pre = BTreeSet::new();
    let mut mid = BTreeSet::new();
    for event in crashes.events_at(round) {
        let robot = config
            .robot(event.robot)
            .ok_or(EngineError::UnknownRobot(event.robot))?;
        if robot.crashed {
            continue;
        }
        match crash_node {
            Some(node) if node != robot.position => {
                return Err(EngineError::CrashNodeConflict {
                    round,
                    first: node,
                    second: robot.position,
                });
            }
            _ => crash_node = Some(robot.position),
        }
        match event.phase {
            CrashPhase::Pre => {
                pre.insert(event.robot);
            }
            CrashPhase::Mid => {
                if !is_active(event.robot) {
                    return Err(EngineError::MidCrashInactive {
                        robot: event.robot,
                        round,
                    });
                }
                mid.insert(event.robot);
            }
        }
    }

    // Look + Compute, all against the same snapshot. Robots sharing node and
    // color see the same view, so their choice is computed once.
    let occupancy = config.occupancy();
    let mut choices: HashMap<(i64, Color), Option<Selection>> = HashMap::new();
    let mut actions: Vec<(usize, Selection)> = Vec::new();
    for (idx, robot) in config.robots().iter().enumerate() {
        if robot.crashed || !is_active(robot.id) || pre.contains(&robot.id) {
            continue;
        }
        let key = (robot.position, robot.color);
        let choice = match choices.get(&key) {
            Some(choice) => choice.clone(),
            None => {
                let view =
                    view_from_occupancy(&occupancy, robot.position, robot.color, program.phi());
                let choice = program.select(&view).map_err(|source| EngineError::Rule {
                    robot: robot.id,
                    round,
                    source,
                })?;
                choices.insert(key, choice.clone());
                choice
            }
        };
        if let Some(sel) = choice {
            actions.push((idx, sel));
        }
    }

    // Move.
    let mut next = config.clone();
    let mut fired = Vec::with_capacity(actions.len());
    {
        let robots = next.robots_mut();
        for (idx, sel) in actions {
            let robot: &mut Robot = &mut robots[idx];
            if let Some(color) = sel.color {
                robot.color = color;
            }
            if !mid.contains(&robot.id) {
                robot.position = robot
                    .position
                    .checked_add(sel.step)
                    .ok_or(EngineError::PositionOverflow(robot.id))?;
            }
            fired.push((robot.id, sel.label));
        }
        for robot in robots.iter_mut() {
            if pre.contains(&robot.id) || mid.contains(&robot.id) {
                robot.crashed = true;
            }
        }
    }
    Ok(StepResult {
        config: next,
        fired,
    })
}

/// Runs until the robots gather (and stay put for [`STABILITY_ROUNDS`]
/// more rounds) or `horizon` rounds pass.
///
/// Input problems (zero horizon, unusable rule set, malformed scenario or
/// schedule) are returned as errors. Failures that only surface while
/// executing, such as an ambiguous rule or crashes on two nodes, end the
/// trace with [`Outcome::Error`].
pub fn run(
    config: &Configuration,
    rules: &RuleSet,
    schedule: &Schedule,
    crashes: &CrashScenario,
    horizon: u64,
) -> Result<Trace, EngineError> {
    if horizon == 0 {
        return Err(EngineError::ZeroHorizon);
    }
    let program = rules
        .instantiate(config.phi())
        .map_err(EngineError::Program)?;
    if let Some(r) = config.robots().iter().find(|r| !rules.declares(r.color)) {
        return Err(EngineError::UndeclaredColor {
            robot: r.id,
            color: r.color,
        });
    }
    crashes.validate(config)?;
    schedule.validate(config)?;

    let mut runner = Runner {
        program: &program,
        schedule,
        crashes,
        records: vec![Record {
            round: 0,
            robots: config.robots().to_vec(),
            fired: Vec::new(),
        }],
        configs: vec![config.clone()],
        error: None,
    };

    let mut outcome = None;
    for t in 0..=horizon {
        if !runner.ensure(t) {
            break;
        }
        if let Some(node) = runner.configs[t as usize].gathered_node() {
            let stable = (1..=STABILITY_ROUNDS).all(|k| {
                runner.ensure(t + k)
                    && runner.records[(t + k) as usize]
                        .robots
                        .iter()
                        .zip(&runner.records[t as usize].robots)
                        .all(|(a, b)| a.position == b.position)
            });
            if stable {
                outcome = Some(Outcome::GatheredAt { node, round: t });
                runner.truncate(t + STABILITY_ROUNDS);
                break;
            }
            if runner.error.is_some() {
                break;
            }
        }
    }
    let outcome = match (outcome, runner.error.take()) {
        (Some(o), _) => o,
        (None, Some((round, err))) => {
            runner.truncate(round);
            Outcome::Error(err)
        }
        (None, None) => {
            runner.truncate(horizon);
            Outcome::TimedOut { horizon }
        }
    };
    Ok(Trace {
        phi: config.phi(),
        rules_hash: rules_hash(rules),
        horizon,
        records: runner.records,
        outcome,
    })
}

struct Runner<'a> {
    program: &'a Program,
    schedule: &'a Schedule,
    crashes: &'a CrashScenario,
    records: Vec<Record>,
    configs: Vec<Configuration>,
    error: Option<(u64, EngineError)>,
}

impl Runner<'_> {
    /// Makes sure record `t` exists; false if a step error prevents it.
    fn ensure(&mut self, t: u64) -> bool {
        while (self.records.len() as u64) <= t {
            if self.error.is_some() {
                return false;
            }
            let round = self.records.len() as u64 - 1;
            let current = &self.configs[round as usize];
            match step_program(
                current,
                self.program,
                self.schedule.active(round),
                self.crashes,
                round,
            ) {
                Ok(result) => {
                    self.records[round as usize].fired = result.fired;
                    self.records.push(Record {
                        round: round + 1,
                        robots: result.config.robots().to_vec(),
                        fired: Vec::new(),
                    });
                    self.configs.push(result.config);
                }
                Err(err) => {
                    self.error = Some((round, err));
                    return false;
                }
            }
        }
        true
    }

    /// Keeps records `0..=last`; the final record never lists fired rules.
    fn truncate(&mut self, last: u64) {
        self.records.truncate(last as usize + 1);
        if let Some(r) = self.records.last_mut() {
            r.fired.clear();
        }
    }
}

/// Re-executes a trace and reports the first round where it differs.
pub fn replay_check(
    trace: &Trace,
    config: &Configuration,
    rules: &RuleSet,
    schedule: &Schedule,
    crashes: &CrashScenario,
) -> ReplayVerdict {
    if trace.phi != config.phi() || trace.rules_hash != rules_hash(rules) {
        return ReplayVerdict::Diverged { round: 0 };
    }
    let fresh = match run(config, rules, schedule, crashes, trace.horizon) {
        Ok(t) => t,
        Err(_) => return ReplayVerdict::Diverged { round: 0 },
    };
    trace.first_difference(&fresh)
}

/// Text form of [`replay_check`]: re-executes and compares rendered lines.
pub fn replay_check_text(
    text: &str,
    config: &Configuration,
    rules: &RuleSet,
    schedule: &Schedule,
    crashes: &CrashScenario,
) -> ReplayVerdict {
    let Some(horizon) = trace::horizon_from_text(text) else {
        return ReplayVerdict::Diverged { round: 0 };
    };
    let fresh = match run(config, rules, schedule, crashes, horizon) {
        Ok(t) => t.render(),
        Err(_) => return ReplayVerdict::Diverged { round: 0 },
    };
    trace::first_text_difference(text, &fresh)
}
