//! Adversarial exploration: crash sweeps backing the gathering results and
//! scheduler and symmetry demonstrations of the impossibility results.
//!
//! The semi-synchronous search works with the myopic, three-color rule sets
//! of this crate. It shows schedules that defeat a concrete algorithm, which
//! is weaker than an impossibility argument over all algorithms.

pub mod scenarios;
pub mod ssync;
pub mod sweep;
pub mod symmetry;

pub use scenarios::{enumerate_crash_scenarios, enumerate_follow_up, group_patterns, CrashBounds};
pub use ssync::{
    ssync_adversary_search, SearchError, SearchOptions, SearchOutcome, DEFAULT_STATE_BUDGET,
};
pub use sweep::{
    generate_configs, sweep_verify, Failure, Linear, Parity, RunSummary, SpecError, SweepReport,
    SweepSpec,
};
pub use symmetry::{symmetry_preservation_check, SymmetryError, SymmetryRound, SymmetryVerdict};
