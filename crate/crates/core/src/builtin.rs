//! Rule sets shipped with the crate.

use crate::ruledsl::{parse_rule_set, RuleSet};

/// Colorless border walk for an odd number of nodes between the borders.
pub const ALG1_SOURCE: &str = include_str!("../rules/alg1.rules");

/// Three-color algorithm for an odd number of occupied nodes.
pub const ALG2_SOURCE: &str = include_str!("../rules/alg2.rules");

pub fn alg1() -> RuleSet {
    parse_rule_set(ALG1_SOURCE).expect("alg1.rules parses")
}

pub fn alg2() -> RuleSet {
    parse_rule_set(ALG2_SOURCE).expect("alg2.rules parses")
}

/// Source text of a builtin rule set by name (`alg1`, `alg2`).
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "alg1" => Some(ALG1_SOURCE),
        "alg2" => Some(ALG2_SOURCE),
        _ => None,
    }
}

/// Parsed builtin rule set by name.
pub fn by_name(name: &str) -> Option<RuleSet> {
    source(name).map(|s| parse_rule_set(s).expect("builtin rules parse"))
}
