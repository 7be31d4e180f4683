//! `suig`: run, sweep and probe gathering rule sets for robots on a line.
//!
//! Exit codes: 0 on success, 1 when a verification fails, 2 on usage or
//! input errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use suig_core::adversary::{
    ssync_adversary_search, sweep_verify, symmetry_preservation_check, SearchError, SearchOptions,
    SweepSpec, SymmetryError, DEFAULT_STATE_BUDGET,
};
use suig_core::engine::{
    default_horizon, parse_scenario, parse_schedule, replay_check_text, run, CrashScenario,
    Outcome, ReplayVerdict, Schedule,
};
use suig_core::{builtin, parse_rule_set, Configuration, RuleSet};

#[derive(Parser)]
#[command(
    name = "suig",
    version,
    about = "Crash-tolerant gathering of myopic luminous robots on a line"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a rule set from a configuration and print the outcome.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// `alg1`, `alg2` or a rule file.
        #[arg(long)]
        rules: String,
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        schedule: Option<PathBuf>,
        /// Defaults to 4*m_init+16.
        #[arg(long)]
        horizon: Option<u64>,
        /// Write the trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Re-execute and compare against an existing trace file.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Run every configuration and crash scenario a sweep spec describes.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the spec's `rules` key.
        #[arg(long)]
        rules: Option<String>,
        /// Write the full report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Directory for failure bundles. Defaults to `<report>.failures`.
        #[arg(long)]
        bundles: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Overrides the spec's sampling seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check that an edge-symmetric configuration never breaks symmetry.
    CheckSymmetric {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        rules: String,
        #[arg(long, default_value_t = 100)]
        horizon: u64,
    },
    /// Search for a semi-synchronous schedule that prevents gathering.
    SsyncSearch {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        rules: String,
        #[arg(long, default_value_t = 50)]
        horizon: u64,
        #[arg(long, default_value_t = DEFAULT_STATE_BUDGET)]
        budget: usize,
        /// Only consider activating every robot each round.
        #[arg(long)]
        full_activation: bool,
        /// Fail unless the search ends this way.
        #[arg(long, value_enum)]
        expect: Option<Expect>,
        /// Write the witness schedule here.
        #[arg(long)]
        witness_out: Option<PathBuf>,
    },
    /// Print the normalized listing of a rule set.
    Parse {
        #[arg(long)]
        rules: String,
    },
    /// Print m_init, o_init and h_init of a configuration.
    Metrics {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Expect {
    Witness,
    None,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// A builtin name or a rule file, the latter relative to `base` if given.
fn load_rules(spec: &str, base: Option<&Path>) -> Result<RuleSet> {
    if let Some(rules) = builtin::by_name(spec) {
        return Ok(rules);
    }
    let path = match base {
        Some(dir) => dir.join(spec),
        None => PathBuf::from(spec),
    };
    let text = read(&path)?;
    parse_rule_set(&text).with_context(|| format!("in {}", path.display()))
}

fn load_config(path: &Path) -> Result<Configuration> {
    Configuration::load(&read(path)?).with_context(|| format!("in {}", path.display()))
}

fn cmd_run(
    config: &Path,
    rules: &str,
    scenario: Option<&Path>,
    schedule: Option<&Path>,
    horizon: Option<u64>,
    trace_out: Option<&Path>,
    replay: Option<&Path>,
) -> Result<u8> {
    let config = load_config(config)?;
    let rules = load_rules(rules, None)?;
    let scenario = match scenario {
        Some(p) => parse_scenario(&read(p)?).with_context(|| format!("in {}", p.display()))?,
        None => CrashScenario::none(),
    };
    let schedule = match schedule {
        Some(p) => parse_schedule(&read(p)?).with_context(|| format!("in {}", p.display()))?,
        None => Schedule::Fsync,
    };
    if let Some(p) = replay {
        let text = read(p)?;
        return Ok(
            match replay_check_text(&text, &config, &rules, &schedule, &scenario) {
                ReplayVerdict::Identical => {
                    println!("replay: identical");
                    0
                }
                ReplayVerdict::Diverged { round } => {
                    println!("replay: diverged at round {round}");
                    1
                }
            },
        );
    }
    let horizon = horizon.unwrap_or_else(|| default_horizon(&config.metrics()));
    let trace = run(&config, &rules, &schedule, &scenario, horizon)?;
    if let Some(p) = trace_out {
        write(p, &trace.render())?;
    }
    println!("{}", trace.header());
    println!("rounds: {}", trace.records.len() - 1);
    println!("{}", trace.outcome.render());
    Ok(0)
}

fn cmd_sweep(
    spec_path: &Path,
    rules: Option<&str>,
    report_out: Option<&Path>,
    bundles: Option<&Path>,
    jobs: usize,
    seed: Option<u64>,
) -> Result<u8> {
    let mut spec = SweepSpec::parse(&read(spec_path)?)
        .with_context(|| format!("in {}", spec_path.display()))?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let (name, base) = match rules {
        Some(r) => (r.to_string(), None),
        None => match &spec.rules {
            Some(r) => (r.clone(), spec_path.parent()),
            None => bail!(
                "{}: no `rules` key and no --rules flag",
                spec_path.display()
            ),
        },
    };
    let rules = load_rules(&name, base)?;
    let report = sweep_verify(&rules, &spec, jobs.max(1));
    if let Some(p) = report_out {
        write(p, &report.render())?;
    }
    let bundle_dir = bundles
        .map(Path::to_path_buf)
        .or_else(|| report_out.map(|p| PathBuf::from(format!("{}.failures", p.display()))));
    if let (Some(dir), false) = (&bundle_dir, report.failures.is_empty()) {
        for (k, f) in report.failures.iter().enumerate() {
            let d = dir.join(format!("failure-{k:04}"));
            fs::create_dir_all(&d).with_context(|| format!("cannot create {}", d.display()))?;
            write(&d.join("config.cfg"), &f.config.to_text())?;
            write(&d.join("scenario.txt"), &f.scenario.to_text())?;
            write(&d.join("rules.rules"), &rules.to_string())?;
            write(&d.join("trace.tr"), &f.trace.render())?;
        }
    }
    print!("{}", report.summary());
    for f in report.failures.iter().take(10) {
        println!(
            "failure: config={} phi={} crash={} {}",
            suig_core::engine::render_robots(f.config.robots()),
            f.config.phi(),
            f.scenario,
            f.outcome.render()
        );
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn cmd_check_symmetric(config: &Path, rules: &str, horizon: u64) -> Result<u8> {
    let config = load_config(config)?;
    let rules = load_rules(rules, None)?;
    match symmetry_preservation_check(&rules, &config, horizon) {
        Ok(v) => {
            print!("{}", v.render());
            Ok(if v.holds() { 0 } else { 1 })
        }
        Err(SymmetryError::NotEdgeSymmetric) => bail!("configuration is not edge-symmetric"),
        Err(e) => Err(e.into()),
    }
}

fn cmd_ssync_search(
    config: &Path,
    rules: &str,
    horizon: u64,
    budget: usize,
    full_activation: bool,
    expect: Option<Expect>,
    witness_out: Option<&Path>,
) -> Result<u8> {
    let config = load_config(config)?;
    let rules = load_rules(rules, None)?;
    let options = SearchOptions {
        budget,
        full_activation,
    };
    let out = match ssync_adversary_search(&rules, &config, horizon, options) {
        Ok(out) => out,
        Err(SearchError::BudgetExceeded(n)) => {
            println!("search: budget of {n} states exceeded, no verdict");
            return Ok(1);
        }
        Err(e) => return Err(e.into()),
    };
    let found = match &out.witness {
        Some(schedule) => {
            let replay = run(&config, &rules, schedule, &CrashScenario::none(), horizon)?;
            println!("search: witness after {} failed states", out.states);
            println!("replay: {}", replay.outcome.render());
            if let Some(p) = witness_out {
                write(p, &schedule.to_text())?;
            }
            if !matches!(replay.outcome, Outcome::TimedOut { .. }) {
                println!("witness does not prevent gathering");
                return Ok(1);
            }
            Expect::Witness
        }
        None => {
            println!("search: no witness ({} failed states)", out.states);
            Expect::None
        }
    };
    Ok(match expect {
        Some(e) if e != found => 1,
        _ => 0,
    })
}

fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Run {
            config,
            rules,
            scenario,
            schedule,
            horizon,
            trace,
            replay,
        } => cmd_run(
            &config,
            &rules,
            scenario.as_deref(),
            schedule.as_deref(),
            horizon,
            trace.as_deref(),
            replay.as_deref(),
        ),
        Command::Sweep {
            spec,
            rules,
            report,
            bundles,
            jobs,
            seed,
        } => cmd_sweep(
            &spec,
            rules.as_deref(),
            report.as_deref(),
            bundles.as_deref(),
            jobs,
            seed,
        ),
        Command::CheckSymmetric {
            config,
            rules,
            horizon,
        } => cmd_check_symmetric(&config, &rules, horizon),
        Command::SsyncSearch {
            config,
            rules,
            horizon,
            budget,
            full_activation,
            expect,
            witness_out,
        } => cmd_ssync_search(
            &config,
            &rules,
            horizon,
            budget,
            full_activation,
            expect,
            witness_out.as_deref(),
        ),
        Command::Parse { rules } => {
            let rules = load_rules(&rules, None)?;
            print!("{rules}");
            Ok(0)
        }
        Command::Metrics { config } => {
            let config = Configuration::parse(&read(&config)?)
                .with_context(|| format!("in {}", config.display()))?;
            let m = config.metrics();
            println!(
                "m_init={} o_init={} h_init={}",
                m.m_init, m.o_init, m.h_init
            );
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
