//! Text formats for crash scenarios and activation schedules.

use std::collections::BTreeSet;

use thiserror::Error;

use super::{CrashEvent, CrashPhase, CrashScenario, Schedule};
use crate::config::RobotId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FileError {
    pub line: usize,
    pub message: String,
}

fn meaningful_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

/// Parses `crash <robot> <round> pre|mid` lines.
pub fn parse_scenario(text: &str) -> Result<CrashScenario, FileError> {
    let mut events = Vec::new();
    for (line, content) in meaningful_lines(text) {
        let err = |message: &str| FileError {
            line,
            message: message.to_string(),
        };
        let words: Vec<&str> = content.split_whitespace().collect();
        let [kw, robot, round, phase] = words.as_slice() else {
            return Err(err("expected `crash <robot> <round> pre|mid`"));
        };
        if *kw != "crash" {
            return Err(err("expected `crash <robot> <round> pre|mid`"));
        }
        let robot = robot.parse().map_err(|_| err("bad robot id"))?;
        let round = round.parse().map_err(|_| err("bad round"))?;
        let phase = match *phase {
            "pre" => CrashPhase::Pre,
            "mid" => CrashPhase::Mid,
            _ => return Err(err("phase must be `pre` or `mid`")),
        };
        events.push(CrashEvent {
            robot: RobotId(robot),
            round,
            phase,
        });
    }
    Ok(CrashScenario::new(events))
}

/// Parses `fsync`, or `ssync` followed by `round <t>: <id> <id> ...` lines
/// numbered from 0 without gaps.
pub fn parse_schedule(text: &str) -> Result<Schedule, FileError> {
    let mut lines = meaningful_lines(text);
    let Some((first_line, header)) = lines.next() else {
        return Ok(Schedule::Fsync);
    };
    match header {
        "fsync" => {
            if let Some((line, _)) = lines.next() {
                return Err(FileError {
                    line,
                    message: "an fsync schedule takes no rounds".into(),
                });
            }
            Ok(Schedule::Fsync)
        }
        "ssync" => {
            let mut rounds = Vec::new();
            for (line, content) in lines {
                let err = |message: String| FileError { line, message };
                let (head, ids) = content
                    .split_once(':')
                    .ok_or_else(|| err("expected `round <t>: <ids>`".into()))?;
                let t: usize = head
                    .trim()
                    .strip_prefix("round")
                    .and_then(|n| n.trim().parse().ok())
                    .ok_or_else(|| err("expected `round <t>:`".into()))?;
                if t != rounds.len() {
                    return Err(err(format!(
                        "expected round {}, found round {t}",
                        rounds.len()
                    )));
                }
                let set = ids
                    .split_whitespace()
                    .map(|w| w.parse().map(RobotId))
                    .collect::<Result<BTreeSet<_>, _>>()
                    .map_err(|_| err("bad robot id".into()))?;
                if set.is_empty() {
                    return Err(err(format!("round {t} activates no robot")));
                }
                rounds.push(set);
            }
            Ok(Schedule::Ssync(rounds))
        }
        _ => Err(FileError {
            line: first_line,
            message: "schedule must start with `fsync` or `ssync`".into(),
        }),
    }
}
