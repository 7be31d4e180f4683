//! Robots, configurations on the line, views and configuration metrics.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::color::{Color, ColorError, ColorSet};

/// Bookkeeping identity of a robot. Rules never see it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RobotId(pub u32);

impl fmt::Display for RobotId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Robot {
    pub id: RobotId,
    pub position: i64,
    pub color: Color,
    /// Once set, position and color stay frozen.
    pub crashed: bool,
}

impl Robot {
    pub fn new(id: u32, position: i64, color: Color) -> Self {
        Robot {
            id: RobotId(id),
            position,
            color,
            crashed: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("configuration has no robots")]
    Empty,
    #[error("visibility range must be at least 1")]
    ZeroPhi,
    #[error("robot id {0} appears twice")]
    DuplicateRobot(RobotId),
    #[error("unknown robot id {0}")]
    UnknownRobot(RobotId),
    #[error("at least 2 robots are required, found {0}")]
    TooFewRobots(usize),
    #[error("visibility range phi={phi} is smaller than the largest gap h_init={h_init}")]
    Disconnected { phi: u32, h_init: u64 },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Color {
        line: usize,
        #[source]
        source: ColorError,
    },
}

/// Robots on the infinite line plus the shared visibility range.
///
/// Robots are stored one by one (sorted by id) rather than as counted
/// groups, so a crash can hit part of a same-colored tower.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    phi: u32,
    robots: Vec<Robot>,
}

/// The `2φ+1` color sets around an observer, left to right, and the
/// observer's own color.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct View {
    pub cells: Vec<ColorSet>,
    pub observer: Color,
}

impl View {
    pub fn phi(&self) -> usize {
        self.cells.len() / 2
    }

    pub fn center(&self) -> &ColorSet {
        &self.cells[self.phi()]
    }

    pub fn mirrored(&self) -> View {
        View {
            cells: self.cells.iter().rev().cloned().collect(),
            observer: self.observer,
        }
    }

    /// True when the two sides of the view read the same outward.
    pub fn is_symmetric(&self) -> bool {
        self.cells.iter().eq(self.cells.iter().rev())
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let phi = self.phi();
        for (i, cell) in self.cells.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if i == phi {
                write!(f, "[{cell}@{}]", self.observer)?;
            } else {
                write!(f, "{cell}")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Metrics {
    /// Nodes between the two borders, borders included.
    pub m_init: u64,
    /// Occupied nodes.
    pub o_init: u64,
    /// Largest distance between neighboring occupied nodes (0 with one node).
    pub h_init: u64,
}

impl fmt::Display for Metrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "m_init={} o_init={} h_init={}",
            self.m_init, self.o_init, self.h_init
        )
    }
}

/// Node → visible color set, for occupied nodes only.
pub type Occupancy = BTreeMap<i64, ColorSet>;

/// Builds the view of an observer at `position` from an occupancy map.
pub fn view_from_occupancy(occ: &Occupancy, position: i64, observer: Color, phi: u32) -> View {
    let phi = i64::from(phi);
    let cells = (position - phi..=position + phi)
        .map(|p| occ.get(&p).cloned().unwrap_or_default())
        .collect();
    View { cells, observer }
}

impl Configuration {
    /// Builds a configuration; robots are re-sorted by id.
    pub fn new(phi: u32, mut robots: Vec<Robot>) -> Result<Self, ConfigError> {
        if phi == 0 {
            return Err(ConfigError::ZeroPhi);
        }
        if robots.is_empty() {
            return Err(ConfigError::Empty);
        }
        robots.sort_by_key(|r| r.id);
        if let Some(w) = robots.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(ConfigError::DuplicateRobot(w[0].id));
        }
        Ok(Configuration { phi, robots })
    }

    /// `count` robots of `color` on each listed node; ids follow the order given.
    pub fn uniform(phi: u32, nodes: &[i64], color: Color, count: u32) -> Result<Self, ConfigError> {
        let mut robots = Vec::new();
        for &p in nodes {
            for _ in 0..count {
                robots.push(Robot::new(robots.len() as u32, p, color));
            }
        }
        Configuration::new(phi, robots)
    }

    /// Checks the assumptions made on initial configurations: `n ≥ 2` and
    /// `φ ≥ h_init`.
    pub fn validate_initial(&self) -> Result<(), ConfigError> {
        if self.robots.len() < 2 {
            return Err(ConfigError::TooFewRobots(self.robots.len()));
        }
        let h_init = self.metrics().h_init;
        if u64::from(self.phi) < h_init {
            return Err(ConfigError::Disconnected {
                phi: self.phi,
                h_init,
            });
        }
        Ok(())
    }

    pub fn phi(&self) -> u32 {
        self.phi
    }

    pub fn robots(&self) -> &[Robot] {
        &self.robots
    }

    pub(crate) fn robots_mut(&mut self) -> &mut [Robot] {
        &mut self.robots
    }

    pub fn robot(&self, id: RobotId) -> Option<&Robot> {
        self.robots
            .binary_search_by_key(&id, |r| r.id)
            .ok()
            .map(|i| &self.robots[i])
    }

    pub fn occupancy(&self) -> Occupancy {
        let mut occ = Occupancy::new();
        for r in &self.robots {
            occ.entry(r.position).or_default().insert(r.color);
        }
        occ
    }

    pub fn occupied_nodes(&self) -> Vec<i64> {
        let mut nodes: Vec<i64> = self.robots.iter().map(|r| r.position).collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Inclusive `[min, max]` of occupied positions.
    pub fn span(&self) -> (i64, i64) {
        let min = self.robots.iter().map(|r| r.position).min().unwrap();
        let max = self.robots.iter().map(|r| r.position).max().unwrap();
        (min, max)
    }

    pub fn compute_view(&self, id: RobotId) -> Result<View, ConfigError> {
        let robot = self.robot(id).ok_or(ConfigError::UnknownRobot(id))?;
        Ok(view_from_occupancy(
            &self.occupancy(),
            robot.position,
            robot.color,
            self.phi,
        ))
    }

    pub fn metrics(&self) -> Metrics {
        let nodes = self.occupied_nodes();
        let first = nodes[0];
        let last = nodes[nodes.len() - 1];
        let h_init = nodes
            .windows(2)
            .map(|w| (w[1] - w[0]) as u64)
            .max()
            .unwrap_or(0);
        Metrics {
            m_init: (last - first) as u64 + 1,
            o_init: nodes.len() as u64,
            h_init,
        }
    }

    /// Twice the reflection axis when the configuration is mirror-symmetric
    /// about the middle of an edge. Color sets are compared, counts are not.
    pub fn edge_symmetry_axis(&self) -> Option<i64> {
        let (min, max) = self.span();
        let doubled = min + max;
        if doubled.rem_euclid(2) == 0 {
            return None;
        }
        let occ = self.occupancy();
        occ.iter()
            .all(|(p, set)| occ.get(&(doubled - p)) == Some(set))
            .then_some(doubled)
    }

    pub fn is_edge_symmetric(&self) -> bool {
        self.edge_symmetry_axis().is_some()
    }

    /// The single node hosting every robot (crashed ones included), if any.
    pub fn gathered_node(&self) -> Option<i64> {
        let first = self.robots[0].position;
        self.robots
            .iter()
            .all(|r| r.position == first)
            .then_some(first)
    }

    pub fn is_gathered(&self) -> bool {
        self.gathered_node().is_some()
    }

    /// Reflection about node 0.
    pub fn mirrored(&self) -> Configuration {
        let robots = self
            .robots
            .iter()
            .map(|r| Robot {
                position: r.position.checked_neg().expect("position overflow"),
                ..*r
            })
            .collect();
        Configuration {
            phi: self.phi,
            robots,
        }
    }

    pub fn shifted(&self, d: i64) -> Configuration {
        let robots = self
            .robots
            .iter()
            .map(|r| Robot {
                position: r.position.checked_add(d).expect("position overflow"),
                ..*r
            })
            .collect();
        Configuration {
            phi: self.phi,
            robots,
        }
    }

    /// Parses the `phi` / `node` text format. Robot ids follow file order.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut phi = None;
        let mut robots = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |message: String| ConfigError::Syntax {
                line: line_no,
                message,
            };
            let mut words = line.split_whitespace();
            match words.next() {
                Some("phi") => {
                    if phi.is_some() {
                        return Err(syntax("duplicate `phi` header".into()));
                    }
                    let value = words
                        .next()
                        .ok_or_else(|| syntax("missing phi value".into()))?;
                    let value: u32 = value
                        .parse()
                        .map_err(|_| syntax(format!("bad phi value `{value}`")))?;
                    if words.next().is_some() {
                        return Err(syntax("trailing input after phi value".into()));
                    }
                    phi = Some(value);
                }
                Some("node") => {
                    let pos = words
                        .next()
                        .ok_or_else(|| syntax("missing node position".into()))?;
                    let pos: i64 = pos
                        .parse()
                        .map_err(|_| syntax(format!("bad node position `{pos}`")))?;
                    let mut any = false;
                    for group in words {
                        any = true;
                        let (name, count) = match group.split_once('*') {
                            Some((name, count)) => {
                                let count: u32 = count
                                    .parse()
                                    .map_err(|_| syntax(format!("bad robot count in `{group}`")))?;
                                (name, count)
                            }
                            None => (group, 1),
                        };
                        if count == 0 {
                            return Err(syntax(format!("zero robot count in `{group}`")));
                        }
                        let color = Color::new(name).map_err(|source| ConfigError::Color {
                            line: line_no,
                            source,
                        })?;
                        for _ in 0..count {
                            robots.push(Robot::new(robots.len() as u32, pos, color));
                        }
                    }
                    if !any {
                        return Err(syntax("node line lists no robots".into()));
                    }
                }
                Some(other) => return Err(syntax(format!("unknown directive `{other}`"))),
                None => unreachable!(),
            }
        }
        let phi = phi.ok_or(ConfigError::Syntax {
            line: 0,
            message: "missing `phi` header".into(),
        })?;
        Configuration::new(phi, robots)
    }

    /// Loads and checks an initial configuration.
    pub fn load(text: &str) -> Result<Self, ConfigError> {
        let config = Configuration::parse(text)?;
        config.validate_initial()?;
        Ok(config)
    }

    /// Writes the text format. Consecutive robots (by id) sharing node and
    /// color collapse into one `color*count` group, so parsing the output
    /// reproduces ids whenever each node's robots have contiguous ids.
    pub fn to_text(&self) -> String {
        let mut out = format!("phi {}\n", self.phi);
        let mut current: Option<i64> = None;
        let mut groups: Vec<(Color, u32)> = Vec::new();
        let flush = |out: &mut String, pos: i64, groups: &mut Vec<(Color, u32)>| {
            out.push_str(&format!("node {pos}"));
            for (c, k) in groups.drain(..) {
                if k == 1 {
                    out.push_str(&format!(" {c}"));
                } else {
                    out.push_str(&format!(" {c}*{k}"));
                }
            }
            out.push('\n');
        };
        for r in &self.robots {
            if current != Some(r.position) {
                if let Some(pos) = current {
                    flush(&mut out, pos, &mut groups);
                }
                current = Some(r.position);
            }
            match groups.last_mut() {
                Some((c, k)) if *c == r.color => *k += 1,
                _ => groups.push((r.color, 1)),
            }
        }
        if let Some(pos) = current {
            flush(&mut out, pos, &mut groups);
        }
        out
    }
}
