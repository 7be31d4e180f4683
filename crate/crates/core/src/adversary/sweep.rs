//! Crash sweeps over generated initial configurations.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::scenarios::{enumerate_crash_scenarios, enumerate_follow_up, CrashBounds};
use crate::config::Configuration;
use crate::engine::{
    render_robots, run, CrashPhase, CrashScenario, EngineError, Outcome, Schedule, Trace,
};
use crate::ruledsl::RuleSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Any,
    Odd,
    Even,
}

impl Parity {
    pub fn accepts(self, n: u64) -> bool {
        match self {
            Parity::Any => true,
            Parity::Odd => n % 2 == 1,
            Parity::Even => n.is_multiple_of(2),
        }
    }
}

impl FromStr for Parity {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "any" => Ok(Parity::Any),
            "odd" => Ok(Parity::Odd),
            "even" => Ok(Parity::Even),
            _ => Err(format!("expected odd, even or any, found `{s}`")),
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Any => "any",
            Parity::Odd => "odd",
            Parity::Even => "even",
        })
    }
}

/// `c*m+b`, a linear function of `m_init`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Linear {
    pub c: u64,
    pub b: u64,
}

impl Linear {
    pub fn at(self, m: u64) -> u64 {
        self.c * m + self.b
    }
}

impl FromStr for Linear {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || format!("expected `c*m+b`, found `{s}`");
        let (c, b) = match compact.split_once('m') {
            None => (0, compact.parse().map_err(|_| bad())?),
            Some((head, tail)) => {
                let c = match head {
                    "" => 1,
                    _ => head
                        .strip_suffix('*')
                        .ok_or_else(bad)?
                        .parse()
                        .map_err(|_| bad())?,
                };
                let b = match tail {
                    "" => 0,
                    _ => tail
                        .strip_prefix('+')
                        .ok_or_else(bad)?
                        .parse()
                        .map_err(|_| bad())?,
                };
                (c, b)
            }
        };
        Ok(Linear { c, b })
    }
}

impl fmt::Display for Linear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*m+{}", self.c, self.b)
    }
}

/// What to sweep: which initial configurations, which crashes, and the
/// round bound every run must meet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    /// Rule set name or path, for front ends. The library takes rules separately.
    pub rules: Option<String>,
    pub parity_m: Parity,
    pub parity_o: Parity,
    pub m_min: u64,
    pub m_max: u64,
    /// Occupied-node patterns are enumerated up to this `m_init`, sampled above.
    pub exhaustive_m_max: u64,
    pub samples_per_m: usize,
    pub robots_per_node: u32,
    /// Visibility ranges tried, as offsets above `h_init`.
    pub phi_offsets: Vec<u32>,
    pub crash_events_max: u32,
    pub phases: Vec<CrashPhase>,
    /// Crash rounds reach this far past the no-crash gathering round.
    pub window_extra: u64,
    /// Two-event scenarios are all tried up to this `m_init`, sampled above.
    pub two_event_exhaustive_m_max: u64,
    pub two_event_samples: usize,
    pub bound: Linear,
    pub horizon: Linear,
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            rules: None,
            parity_m: Parity::Any,
            parity_o: Parity::Any,
            m_min: 2,
            m_max: 9,
            exhaustive_m_max: 9,
            samples_per_m: 100,
            robots_per_node: 1,
            phi_offsets: vec![0],
            crash_events_max: 0,
            phases: vec![CrashPhase::Pre, CrashPhase::Mid],
            window_extra: 3,
            two_event_exhaustive_m_max: 0,
            two_event_samples: 0,
            bound: Linear { c: 4, b: 0 },
            horizon: Linear { c: 4, b: 16 },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct SpecError {
    pub line: usize,
    pub message: String,
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>, String> {
    v.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| format!("bad list item `{}`", x.trim()))
        })
        .collect()
}

fn parse_phase(s: &str) -> Result<CrashPhase, String> {
    match s {
        "pre" => Ok(CrashPhase::Pre),
        "mid" => Ok(CrashPhase::Mid),
        _ => Err(format!("unknown phase `{s}`")),
    }
}

fn num<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("bad number `{v}`"))
}

impl SweepSpec {
    /// Parses `key = value` lines; unset keys keep their defaults.
    pub fn parse(text: &str) -> Result<Self, SpecError> {
        let mut spec = SweepSpec::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let err = |message: String| SpecError { line, message };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let value = value.trim();
            let r: Result<(), String> = (|| {
                match key.trim() {
                    "rules" => spec.rules = Some(value.to_string()),
                    "parity_m" => spec.parity_m = value.parse()?,
                    "parity_o" => spec.parity_o = value.parse()?,
                    "m_min" => spec.m_min = num(value)?,
                    "m_max" => spec.m_max = num(value)?,
                    "exhaustive_m_max" => spec.exhaustive_m_max = num(value)?,
                    "samples_per_m" => spec.samples_per_m = num(value)?,
                    "robots_per_node" => spec.robots_per_node = num(value)?,
                    "phi_offsets" => spec.phi_offsets = parse_list(value)?,
                    "crash_events_max" => spec.crash_events_max = num(value)?,
                    "phases" => {
                        spec.phases = value
                            .split(',')
                            .map(|p| parse_phase(p.trim()))
                            .collect::<Result<_, _>>()?
                    }
                    "window_extra" => spec.window_extra = num(value)?,
                    "two_event_exhaustive_m_max" => spec.two_event_exhaustive_m_max = num(value)?,
                    "two_event_samples" => spec.two_event_samples = num(value)?,
                    "bound" => spec.bound = value.parse()?,
                    "horizon" => spec.horizon = value.parse()?,
                    "seed" => spec.seed = num(value)?,
                    other => return Err(format!("unknown key `{other}`")),
                }
                Ok(())
            })();
            r.map_err(err)?;
        }
        if spec.crash_events_max > 2 {
            return Err(SpecError {
                line: 0,
                message: "crash_events_max must be 0, 1 or 2".into(),
            });
        }
        if spec.robots_per_node == 0 || spec.m_min < 2 {
            return Err(SpecError {
                line: 0,
                message: "robots_per_node must be positive and m_min at least 2".into(),
            });
        }
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let phases: Vec<String> = self.phases.iter().map(|p| p.to_string()).collect();
        let offsets: Vec<String> = self.phi_offsets.iter().map(|p| p.to_string()).collect();
        let mut out = String::new();
        if let Some(r) = &self.rules {
            out.push_str(&format!("rules = {r}\n"));
        }
        out.push_str(&format!(
            "parity_m = {}\nparity_o = {}\nm_min = {}\nm_max = {}\nexhaustive_m_max = {}\n\
             samples_per_m = {}\nrobots_per_node = {}\nphi_offsets = {}\ncrash_events_max = {}\n\
             phases = {}\nwindow_extra = {}\ntwo_event_exhaustive_m_max = {}\n\
             two_event_samples = {}\nbound = {}\nhorizon = {}\nseed = {}\n",
            self.parity_m,
            self.parity_o,
            self.m_min,
            self.m_max,
            self.exhaustive_m_max,
            self.samples_per_m,
            self.robots_per_node,
            offsets.join(","),
            self.crash_events_max,
            phases.join(","),
            self.window_extra,
            self.two_event_exhaustive_m_max,
            self.two_event_samples,
            self.bound,
            self.horizon,
            self.seed,
        ));
        out
    }
}

/// Occupied node sets `{0, .., m-1}` with both borders occupied, as interior bitmasks.
fn patterns_for(spec: &SweepSpec, m: u64) -> Vec<u64> {
    let interior = m.saturating_sub(2);
    let accept = |mask: u64| spec.parity_o.accepts(2 + u64::from(mask.count_ones()));
    if m <= spec.exhaustive_m_max {
        return (0..1u64 << interior).filter(|&mask| accept(mask)).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ m.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut chosen = BTreeSet::new();
    let mut attempts = 0;
    while chosen.len() < spec.samples_per_m && attempts < spec.samples_per_m * 64 {
        attempts += 1;
        let mask = rng.gen_range(0..1u64 << interior);
        if accept(mask) {
            chosen.insert(mask);
        }
    }
    chosen.into_iter().collect()
}

/// All initial configurations the spec describes, in a fixed order.
pub fn generate_configs(spec: &SweepSpec, rules: &RuleSet) -> Vec<Configuration> {
    let color = rules
        .initial_color()
        .expect("a rule set declares at least one color");
    let mut out = Vec::new();
    for m in spec.m_min..=spec.m_max.min(62) {
        if !spec.parity_m.accepts(m) {
            continue;
        }
        for mask in patterns_for(spec, m) {
            let mut nodes = vec![0i64];
            nodes.extend(
                (0..m - 2)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| i as i64 + 1),
            );
            nodes.push(m as i64 - 1);
            let base = Configuration::uniform(1, &nodes, color, spec.robots_per_node)
                .expect("nonempty node list");
            let h = base.metrics().h_init as u32;
            for off in &spec.phi_offsets {
                let phi = h.max(1) + off;
                let cfg = Configuration::uniform(phi, &nodes, color, spec.robots_per_node)
                    .expect("nonempty node list");
                if cfg.validate_initial().is_ok() {
                    out.push(cfg);
                }
            }
        }
    }
    out
}

/// One execution inside a sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSummary {
    pub config: usize,
    pub scenario: CrashScenario,
    pub outcome: Outcome,
    pub passed: bool,
    /// Label each mid-cycle crashing robot ran in its crash round.
    pub mid_crash_labels: Vec<String>,
    pub gathering_step: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub config: Configuration,
    pub scenario: CrashScenario,
    pub outcome: Outcome,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SweepReport {
    pub configs: Vec<Configuration>,
    pub runs: Vec<RunSummary>,
    pub failures: Vec<Failure>,
}

impl SweepReport {
    pub fn scenarios(&self) -> usize {
        self.runs.len()
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn max_round(&self) -> Option<u64> {
        self.runs
            .iter()
            .filter_map(|r| r.outcome.gathered_round())
            .max()
    }

    /// `m_init → gathering round → runs`.
    pub fn histogram(&self) -> BTreeMap<u64, BTreeMap<u64, usize>> {
        let mut h: BTreeMap<u64, BTreeMap<u64, usize>> = BTreeMap::new();
        for r in &self.runs {
            if let Some(t) = r.outcome.gathered_round() {
                let m = self.configs[r.config].metrics().m_init;
                *h.entry(m).or_default().entry(t).or_default() += 1;
            }
        }
        h
    }

    pub fn mid_crash_label_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.runs {
            for l in &r.mid_crash_labels {
                *counts.entry(l.clone()).or_default() += 1;
            }
        }
        counts
    }

    /// Label sets fired in the gathering round, with run counts.
    pub fn gathering_steps(&self) -> BTreeMap<Vec<String>, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.runs {
            if let Some(labels) = &r.gathering_step {
                *counts.entry(labels.clone()).or_default() += 1;
            }
        }
        counts
    }

    pub fn run_line(&self, run: &RunSummary) -> String {
        let cfg = &self.configs[run.config];
        format!(
            "config={} phi={} crash={} {}",
            render_robots(cfg.robots()),
            cfg.phi(),
            run.scenario,
            run.outcome.render()
        )
    }

    pub fn summary(&self) -> String {
        let mut out = String::from("summary\n");
        out.push_str(&format!("configs: {}\n", self.configs.len()));
        out.push_str(&format!("scenarios: {}\n", self.scenarios()));
        let gathered = self.runs.iter().filter(|r| r.outcome.is_gathered()).count();
        out.push_str(&format!("gathered: {gathered}\n"));
        out.push_str(&format!("failures: {}\n", self.failures.len()));
        match self.max_round() {
            Some(t) => out.push_str(&format!("max_round: {t}\n")),
            None => out.push_str("max_round: -\n"),
        }
        for (m, rounds) in self.histogram() {
            let cells: Vec<String> = rounds.iter().map(|(t, n)| format!("{t}:{n}")).collect();
            out.push_str(&format!("histogram m={m}: {}\n", cells.join(" ")));
        }
        for (label, n) in self.mid_crash_label_counts() {
            out.push_str(&format!("mid_crash {label}: {n}\n"));
        }
        for (labels, n) in self.gathering_steps() {
            let labels = if labels.is_empty() {
                "-".to_string()
            } else {
                labels.join(",")
            };
            out.push_str(&format!("gathering_step {labels}: {n}\n"));
        }
        out.push_str(if self.passed() {
            "verdict: PASS\n"
        } else {
            "verdict: FAIL\n"
        });
        out
    }

    /// One line per run followed by the summary block.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.runs {
            out.push_str(&self.run_line(r));
            out.push('\n');
        }
        out.push_str(&self.summary());
        out
    }
}

fn summarize(
    index: usize,
    config: &Configuration,
    scenario: &CrashScenario,
    trace: &Trace,
    spec: &SweepSpec,
    failures: &mut Vec<Failure>,
) -> RunSummary {
    let m = config.metrics().m_init;
    let passed = trace
        .outcome
        .gathered_round()
        .is_some_and(|t| t <= spec.bound.at(m));
    if !passed {
        failures.push(Failure {
            config: config.clone(),
            scenario: scenario.clone(),
            outcome: trace.outcome.clone(),
            trace: trace.clone(),
        });
    }
    let mid_crash_labels = scenario
        .events
        .iter()
        .filter(|e| e.phase == CrashPhase::Mid)
        .filter_map(|e| {
            trace
                .records
                .get(e.round as usize)
                .and_then(|r| r.fired_label(e.robot))
                .map(str::to_string)
        })
        .collect();
    RunSummary {
        config: index,
        scenario: scenario.clone(),
        outcome: trace.outcome.clone(),
        passed,
        mid_crash_labels,
        gathering_step: trace.gathering_step_labels(),
    }
}

struct ConfigResult {
    runs: Vec<RunSummary>,
    failures: Vec<Failure>,
}

fn execute(
    rules: &RuleSet,
    config: &Configuration,
    scenario: &CrashScenario,
    horizon: u64,
) -> Trace {
    match run(config, rules, &Schedule::Fsync, scenario, horizon) {
        Ok(t) => t,
        Err(e) => input_error_trace(config, rules, horizon, e),
    }
}

fn input_error_trace(
    config: &Configuration,
    rules: &RuleSet,
    horizon: u64,
    e: EngineError,
) -> Trace {
    Trace {
        phi: config.phi(),
        rules_hash: crate::engine::rules_hash(rules),
        horizon,
        records: vec![crate::engine::Record {
            round: 0,
            robots: config.robots().to_vec(),
            fired: Vec::new(),
        }],
        outcome: Outcome::Error(e),
    }
}

fn sweep_config(
    rules: &RuleSet,
    spec: &SweepSpec,
    index: usize,
    config: &Configuration,
) -> ConfigResult {
    let m = config.metrics().m_init;
    let horizon = spec.horizon.at(m).max(1);
    let mut failures = Vec::new();
    let reference = execute(rules, config, &CrashScenario::none(), horizon);
    let mut runs = vec![summarize(
        index,
        config,
        &CrashScenario::none(),
        &reference,
        spec,
        &mut failures,
    )];
    if spec.crash_events_max == 0 {
        return ConfigResult { runs, failures };
    }
    let bounds = CrashBounds::after_reference(&reference, spec.window_extra, spec.phases.clone());
    let singles = enumerate_crash_scenarios(&reference, &bounds);
    let mut single_traces = Vec::with_capacity(singles.len());
    for s in singles.iter().skip(1) {
        let trace = execute(rules, config, s, horizon);
        runs.push(summarize(index, config, s, &trace, spec, &mut failures));
        single_traces.push(trace);
    }
    if spec.crash_events_max < 2 || single_traces.is_empty() {
        return ConfigResult { runs, failures };
    }

    let follow_ups = |i: usize| {
        let b =
            CrashBounds::after_reference(&single_traces[i], spec.window_extra, spec.phases.clone());
        enumerate_follow_up(&single_traces[i], &singles[i + 1], &b)
    };
    let doubles: Vec<CrashScenario> = if m <= spec.two_event_exhaustive_m_max {
        (0..single_traces.len()).flat_map(follow_ups).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(
            spec.seed
                .wrapping_add(index as u64)
                .wrapping_mul(0x2545_f491_4f6c_dd1d),
        );
        let mut cache: HashMap<usize, Vec<CrashScenario>> = HashMap::new();
        let mut chosen = BTreeSet::new();
        let mut attempts = 0;
        while chosen.len() < spec.two_event_samples && attempts < spec.two_event_samples * 16 {
            attempts += 1;
            let i = rng.gen_range(0..single_traces.len());
            let options = cache.entry(i).or_insert_with(|| follow_ups(i));
            if let Some(s) = options.choose(&mut rng) {
                chosen.insert(s.clone());
            }
        }
        chosen.into_iter().collect()
    };
    for s in &doubles {
        let trace = execute(rules, config, s, horizon);
        runs.push(summarize(index, config, s, &trace, spec, &mut failures));
    }
    ConfigResult { runs, failures }
}

/// Runs every generated configuration under every enumerated scenario.
/// `jobs` worker threads share the configurations; the report does not
/// depend on `jobs`.
pub fn sweep_verify(rules: &RuleSet, spec: &SweepSpec, jobs: usize) -> SweepReport {
    let configs = generate_configs(spec, rules);
    let work = |(i, c): (usize, &Configuration)| sweep_config(rules, spec, i, c);
    let results: Vec<ConfigResult> = if jobs <= 1 {
        configs.iter().enumerate().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .expect("thread pool");
        pool.install(|| configs.par_iter().enumerate().map(work).collect())
    };
    let mut report = SweepReport {
        configs,
        ..SweepReport::default()
    };
    for r in results {
        report.runs.extend(r.runs);
        report.failures.extend(r.failures);
    }
    report
}
