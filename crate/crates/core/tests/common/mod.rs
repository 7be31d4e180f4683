//! Generators, oracles and run comparisons shared by the test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use suig_core::adversary::{enumerate_crash_scenarios, CrashBounds};
use suig_core::engine::{render_robots, run, CrashPhase, CrashScenario, Outcome, Schedule, Trace};
use suig_core::ruledsl::{
    CellPredicate, Count, Guard, Move, Rule, Segment, SegmentBody, Statement,
};
use suig_core::{builtin, Color, ColorSet, Configuration, Robot, RuleSet, View};

pub fn color(name: &str) -> Color {
    Color::new(name).unwrap()
}

pub fn palette() -> [Color; 3] {
    [color("W"), color("R"), color("B")]
}

pub fn white(phi: u32, nodes: &[i64], per_node: u32) -> Configuration {
    Configuration::uniform(phi, nodes, color("W"), per_node).unwrap()
}

pub fn alg(which: bool) -> RuleSet {
    if which {
        builtin::alg2()
    } else {
        builtin::alg1()
    }
}

// ---- random rules and views -------------------------------------------------

pub fn random_set(rng: &mut ChaCha8Rng) -> ColorSet {
    palette()
        .into_iter()
        .filter(|_| rng.gen_bool(0.4))
        .collect()
}

pub fn random_view(rng: &mut ChaCha8Rng, phi: usize) -> View {
    let mut cells: Vec<ColorSet> = (0..2 * phi + 1).map(|_| random_set(rng)).collect();
    let observer = *palette().choose(rng).unwrap();
    cells[phi].insert(observer);
    View { cells, observer }
}

pub fn random_pred(rng: &mut ChaCha8Rng, depth: u32, center: bool) -> CellPredicate {
    let c = *palette().choose(rng).unwrap();
    let leaf_kinds = if center { 5 } else { 4 };
    let kinds = if depth == 0 {
        leaf_kinds
    } else {
        leaf_kinds + 3
    };
    match rng.gen_range(0..kinds) {
        0 => CellPredicate::Empty,
        1 => CellPredicate::Any,
        2 => CellPredicate::Contains(c),
        3 => CellPredicate::ExactlySingle(c),
        4 if center => CellPredicate::SelfIs(c),
        k => {
            let k = if center { k - 5 } else { k - 4 };
            match k {
                0 => CellPredicate::Not(Box::new(random_pred(rng, depth - 1, center))),
                1 => CellPredicate::AnyOf(
                    (0..rng.gen_range(2..=3))
                        .map(|_| random_pred(rng, depth - 1, center))
                        .collect(),
                ),
                _ => CellPredicate::AllOf(
                    (0..rng.gen_range(2..=3))
                        .map(|_| random_pred(rng, depth - 1, center))
                        .collect(),
                ),
            }
        }
    }
}

fn random_count(rng: &mut ChaCha8Rng, n: usize, phi: u32) -> Count {
    let n64 = n as i64;
    let phi64 = i64::from(phi);
    if rng.gen_bool(0.4) && (n64 - phi64).abs() <= 2 {
        Count::Phi(n64 - phi64)
    } else {
        Count::Literal(n as u32)
    }
}

/// Segments covering exactly `width` cells at visibility `phi`.
pub fn random_side(rng: &mut ChaCha8Rng, width: usize, phi: u32, depth: u32) -> Vec<Segment> {
    let mut segs = Vec::new();
    let mut left = width;
    while left > 0 {
        let part = rng.gen_range(1..=left);
        if depth > 0 && rng.gen_bool(0.3) {
            let divisors: Vec<usize> = (1..=part).filter(|d| part % d == 0).collect();
            let reps = *divisors.choose(rng).unwrap();
            let inner = random_side(rng, part / reps, phi, depth - 1);
            segs.push(Segment {
                body: SegmentBody::NegatedSequence(inner),
                count: random_count(rng, reps, phi),
            });
        } else {
            segs.push(Segment::cell(
                random_pred(rng, 2, false),
                random_count(rng, part, phi),
            ));
        }
        if rng.gen_bool(0.1) {
            segs.push(Segment::cell(random_pred(rng, 1, false), Count::Literal(0)));
        }
        left -= part;
    }
    segs
}

pub fn random_rule(rng: &mut ChaCha8Rng, label: &str, phi: u32) -> Rule {
    let moves = [Move::Forward, Move::Backward, Move::Stay];
    Rule {
        label: Arc::from(label),
        guard: Guard {
            left: random_side(rng, phi as usize, phi, 2),
            center: random_pred(rng, 2, true),
            right: random_side(rng, phi as usize, phi, 2),
        },
        statement: Statement {
            color: rng.gen_bool(0.5).then(|| *palette().choose(rng).unwrap()),
            movement: *moves.choose(rng).unwrap(),
        },
    }
}

pub fn random_rule_set(rng: &mut ChaCha8Rng) -> RuleSet {
    let phi = rng.gen_range(1..=3);
    let n = rng.gen_range(1..=5);
    RuleSet {
        colors: palette().to_vec(),
        rules: (0..n)
            .map(|i| random_rule(rng, &format!("R{i}"), phi))
            .collect(),
    }
}

// ---- brute-force guard oracle -----------------------------------------------

fn oracle_cell(pred: &CellPredicate, cell: &ColorSet, observer: Color) -> bool {
    let colors: Vec<Color> = cell.iter().collect();
    match pred {
        CellPredicate::Empty => colors.is_empty(),
        CellPredicate::Any => true,
        CellPredicate::Contains(c) => colors.contains(c),
        CellPredicate::ExactlySingle(c) => colors == [*c],
        CellPredicate::SelfIs(c) => observer == *c && colors.contains(c),
        CellPredicate::Not(p) => !oracle_cell(p, cell, observer),
        CellPredicate::AnyOf(ps) => ps.iter().any(|p| oracle_cell(p, cell, observer)),
        CellPredicate::AllOf(ps) => ps.iter().all(|p| oracle_cell(p, cell, observer)),
    }
}

fn oracle_width(seg: &Segment, phi: u32) -> usize {
    let reps = seg.count.resolve(phi).unwrap();
    match &seg.body {
        SegmentBody::Cell(_) => reps,
        SegmentBody::NegatedSequence(inner) => {
            reps * inner.iter().map(|s| oracle_width(s, phi)).sum::<usize>()
        }
    }
}

/// Expands a side into one predicate per cell, where a negated block is a
/// closure over its slice. Checked cell by cell and block by block.
fn oracle_side(segs: &[Segment], cells: &[ColorSet], observer: Color, phi: u32) -> bool {
    let total: usize = segs.iter().map(|s| oracle_width(s, phi)).sum();
    if total != cells.len() {
        return false;
    }
    let mut at = 0;
    for seg in segs {
        let reps = seg.count.resolve(phi).unwrap();
        match &seg.body {
            SegmentBody::Cell(p) => {
                for k in 0..reps {
                    if !oracle_cell(p, &cells[at + k], observer) {
                        return false;
                    }
                }
                at += reps;
            }
            SegmentBody::NegatedSequence(inner) => {
                let w: usize = inner.iter().map(|s| oracle_width(s, phi)).sum();
                for _ in 0..reps {
                    if oracle_side(inner, &cells[at..at + w], observer, phi) {
                        return false;
                    }
                    at += w;
                }
            }
        }
    }
    true
}

/// `(as_written, mirrored)` by direct recursion over the guard.
pub fn oracle_guard(rule: &Rule, view: &View) -> (bool, bool) {
    let phi = view.phi() as u32;
    let p = view.phi();
    let check = |cells: &[ColorSet]| {
        oracle_cell(&rule.guard.center, &cells[p], view.observer)
            && oracle_side(&rule.guard.left, &cells[..p], view.observer, phi)
            && oracle_side(&rule.guard.right, &cells[p + 1..], view.observer, phi)
    };
    let reversed: Vec<ColorSet> = view.cells.iter().rev().cloned().collect();
    (check(&view.cells), check(&reversed))
}

// ---- random configurations --------------------------------------------------

/// Nodes `0..m` with both ends occupied, robots per node in `1..=max_per_node`.
pub fn random_config(
    rng: &mut ChaCha8Rng,
    m_max: i64,
    max_per_node: u32,
    extra_phi: u32,
) -> Configuration {
    let m = rng.gen_range(2..=m_max);
    let mut nodes = vec![0];
    nodes.extend((1..m - 1).filter(|_| rng.gen_bool(0.5)));
    nodes.push(m - 1);
    let h = nodes.windows(2).map(|w| w[1] - w[0]).max().unwrap() as u32;
    let phi = h + rng.gen_range(0..=extra_phi);
    let mut robots = Vec::new();
    for &p in &nodes {
        for _ in 0..rng.gen_range(1..=max_per_node) {
            robots.push(Robot::new(robots.len() as u32, p, color("W")));
        }
    }
    Configuration::new(phi, robots).unwrap()
}

pub fn horizon_for(config: &Configuration) -> u64 {
    suig_core::engine::default_horizon(&config.metrics())
}

/// A random scenario from the canonical single-event set, or none.
pub fn random_scenario(
    rng: &mut ChaCha8Rng,
    config: &Configuration,
    rules: &RuleSet,
) -> CrashScenario {
    let reference = run(
        config,
        rules,
        &Schedule::Fsync,
        &CrashScenario::none(),
        horizon_for(config),
    )
    .unwrap();
    let bounds =
        CrashBounds::after_reference(&reference, 3, vec![CrashPhase::Pre, CrashPhase::Mid]);
    enumerate_crash_scenarios(&reference, &bounds)
        .choose(rng)
        .unwrap()
        .clone()
}

// ---- run comparisons --------------------------------------------------------

/// Per-round group rendering with positions mapped by `f`; ids are dropped.
pub fn shape(trace: &Trace, f: impl Fn(i64) -> i64) -> Vec<String> {
    trace
        .records
        .iter()
        .map(|r| {
            let robots: Vec<Robot> = r
                .robots
                .iter()
                .map(|x| Robot {
                    position: f(x.position),
                    ..*x
                })
                .collect();
            render_robots(&robots)
        })
        .collect()
}

pub fn outcome_node(outcome: &Outcome) -> Option<(i64, u64)> {
    match outcome {
        Outcome::GatheredAt { node, round } => Some((*node, *round)),
        _ => None,
    }
}

/// Label → count in each round.
pub fn label_counts(trace: &Trace) -> Vec<BTreeMap<String, usize>> {
    trace
        .records
        .iter()
        .map(|r| {
            let mut m = BTreeMap::new();
            for (_, l) in &r.fired {
                *m.entry(l.to_string()).or_default() += 1;
            }
            m
        })
        .collect()
}
