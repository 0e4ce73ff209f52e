//! Instances shipped with the crate.

use crate::io::parse_fjs;
use crate::model::Instance;

/// One job, one task, duration 5.
pub const TINY: &str = include_str!("../data/tiny.fjs");
/// Four jobs of three tasks on three machines, two alternatives per task.
pub const BASE_4X3X3: &str = include_str!("../data/base_4x3x3.fjs");
/// Ten jobs of ten tasks on ten machines, one to three alternatives per task.
pub const MK10X10: &str = include_str!("../data/mk10x10.fjs");

pub fn tiny() -> Instance {
    parse_fjs(TINY).expect("bundled instance parses")
}

pub fn base_4x3x3() -> Instance {
    parse_fjs(BASE_4X3X3).expect("bundled instance parses")
}

pub fn mk10x10() -> Instance {
    parse_fjs(MK10X10).expect("bundled instance parses")
}

/// Every bundled instance with its name.
pub fn all() -> Vec<(&'static str, Instance)> {
    vec![("tiny", tiny()), ("base_4x3x3", base_4x3x3()), ("mk10x10", mk10x10())]
}
