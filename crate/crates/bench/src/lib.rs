//! Shared fixtures for the benchmarks.

use fawkes::group::Group;
use fawkes::hd::Seed;
use fawkes::sim::{scenarios, ScenarioConfig};

/// The default chain group.
pub fn chain_group() -> Group {
    Group::toy_bits(20).expect("toy group")
}

/// The default canary group.
pub fn canary_group() -> Group {
    Group::toy(8191).expect("toy group")
}

pub fn seed(tag: u8) -> Seed {
    Seed::new(vec![tag; 32], b"bench".to_vec()).expect("valid seed")
}

pub fn bundled(name: &str) -> ScenarioConfig {
    ScenarioConfig::from_toml(scenarios::bundled(name).expect("bundled scenario")).expect("bundled config parses")
}
