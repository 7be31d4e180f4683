//! Simulation and adversarial checking of crash-tolerant gathering for
//! myopic luminous robots on an infinite line.
//!
//! Robots are anonymous, disoriented and oblivious. Each one sees the color
//! sets of the nodes within `phi` hops, with no multiplicity detection, and
//! follows a prioritized list of guarded rules written in the rule language
//! of [`ruledsl`]. The [`engine`] executes rule sets round by round under a
//! fully synchronous or semi-synchronous scheduler and injects crashes that
//! may split a Look-Compute-Move cycle. The [`adversary`] module drives the
//! engine through exhaustive crash sweeps, symmetry checks and scheduler
//! searches.

pub mod adversary;
pub mod builtin;
pub mod color;
pub mod config;
pub mod engine;
pub mod ruledsl;

pub use color::{Color, ColorSet};
pub use config::{Configuration, Metrics, Robot, RobotId, View};
pub use ruledsl::{parse_rule_set, RuleSet};
