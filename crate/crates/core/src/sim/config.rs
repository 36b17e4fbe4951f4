//! Scenario files.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::ChainConfig;
use crate::ledger::FcMethod;
use crate::params::OverrideError;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("cannot write scenario: {0}")]
    Write(#[from] toml::ser::Error),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Override(#[from] OverrideError),
}

mod d {
    pub fn one() -> u64 {
        1
    }
    pub fn yes() -> bool {
        true
    }
    pub fn fee() -> u64 {
        10
    }
    pub fn low_fee() -> u64 {
        1
    }
    pub fn bump() -> u64 {
        50
    }
    pub fn funds() -> u64 {
        10_000
    }
    pub fn fast_fee() -> u64 {
        5
    }
    pub fn slow_delay() -> u64 {
        4
    }
    pub fn ttl() -> u64 {
        300
    }
}

/// Mempool timing. A transaction paying less than `fast_fee` becomes
/// includable `slow_delay` blocks after it is first visible. Entries are
/// dropped `ttl` blocks after becoming includable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Latency {
    #[serde(default = "d::fast_fee")]
    pub fast_fee: u64,
    #[serde(default = "d::slow_delay")]
    pub slow_delay: u64,
    #[serde(default = "d::ttl")]
    pub ttl: u64,
}

impl Default for Latency {
    fn default() -> Self {
        Self {
            fast_fee: d::fast_fee(),
            slow_delay: d::slow_delay(),
            ttl: d::ttl(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventDetail {
    None,
    /// Everything but per-block coinbase and fee-share events.
    #[default]
    Notable,
    All,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    pub events: EventDetail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpendMethod {
    #[default]
    Hashed,
    Derived,
    Naked,
    Lost,
}

impl From<SpendMethod> for FcMethod {
    fn from(m: SpendMethod) -> Self {
        match m {
            SpendMethod::Hashed => FcMethod::Hashed,
            SpendMethod::Derived => FcMethod::Derived,
            SpendMethod::Naked => FcMethod::Naked,
            SpendMethod::Lost => FcMethod::Lost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AgentSpec {
    /// Produces blocks, commits admitted lifted messages and claims its own
    /// commitments once the reveal window has passed.
    Miner {
        name: String,
        #[serde(default = "d::one")]
        weight: u64,
        /// Post-quantum funds available for escrow.
        #[serde(default)]
        funds: u64,
        #[serde(default = "d::yes")]
        claims: bool,
    },
    /// A miner that also commits a fake lifted record for `target`'s UTXO.
    DelayAttacker {
        name: String,
        target: String,
        #[serde(default = "d::one")]
        weight: u64,
        #[serde(default)]
        funds: u64,
        #[serde(default)]
        start: u64,
    },
    /// Moves one pre-quantum UTXO to a post-quantum address with FawkesCoin.
    FcUser {
        name: String,
        value: u64,
        #[serde(default)]
        method: SpendMethod,
        #[serde(default)]
        start: u64,
        #[serde(default = "d::fee")]
        fee: u64,
        /// Hold the UTXO under a plain public key, public from genesis.
        #[serde(default)]
        leaked: bool,
        /// The owner no longer has the secret key.
        #[serde(default)]
        lost: bool,
    },
    /// Spends a pre-quantum UTXO directly at height `at`.
    DirectSpender {
        name: String,
        value: u64,
        at: u64,
        #[serde(default = "d::low_fee")]
        fee: u64,
    },
    /// Watches the mempool for public keys, inverts them and races the spend.
    FrontRunner {
        name: String,
        #[serde(default = "d::bump")]
        bump: u64,
        /// Also try a commit-reveal race in the quantum era.
        #[serde(default)]
        reckless: bool,
        #[serde(default = "d::funds")]
        funds: u64,
    },
    /// Spends one pre-quantum UTXO with lifted FawkesCoin.
    LfcUser {
        name: String,
        value: u64,
        #[serde(default)]
        start: u64,
        #[serde(default = "d::fee")]
        alpha: u64,
        #[serde(default)]
        derived: bool,
    },
    /// Posts lifted commitments it never reveals.
    LfcSpammer {
        name: String,
        value: u64,
        #[serde(default = "d::one")]
        count: u64,
        #[serde(default)]
        start: u64,
        /// Only submit when the next block is at this lifted epoch offset.
        #[serde(default)]
        lfc_offset: Option<u64>,
        #[serde(default)]
        derived: bool,
    },
    /// Holds a pre-quantum UTXO and does nothing.
    Holder {
        name: String,
        value: u64,
        #[serde(default)]
        derived: bool,
        /// Hold at a plain public key address.
        #[serde(default)]
        leaked: bool,
    },
    /// Claims leaked UTXOs of `target` with a challenged FawkesCoin spend.
    LootThief {
        name: String,
        target: String,
        #[serde(default)]
        start: u64,
        #[serde(default)]
        quantum: bool,
        #[serde(default = "d::fee")]
        fee: u64,
        #[serde(default = "d::funds")]
        funds: u64,
    },
    /// Holds a derived UTXO, publishes its key and answers thefts with a fraud proof.
    DepositBaiter {
        name: String,
        value: u64,
        #[serde(default = "d::one")]
        leak_at: u64,
        #[serde(default = "d::fee")]
        fee: u64,
    },
    CanaryHunter {
        name: String,
        #[serde(default = "d::one")]
        at: u64,
        #[serde(default = "d::yes")]
        quantum: bool,
    },
}

impl AgentSpec {
    pub fn name(&self) -> &str {
        match self {
            AgentSpec::Miner { name, .. }
            | AgentSpec::DelayAttacker { name, .. }
            | AgentSpec::FcUser { name, .. }
            | AgentSpec::DirectSpender { name, .. }
            | AgentSpec::FrontRunner { name, .. }
            | AgentSpec::LfcUser { name, .. }
            | AgentSpec::LfcSpammer { name, .. }
            | AgentSpec::Holder { name, .. }
            | AgentSpec::LootThief { name, .. }
            | AgentSpec::DepositBaiter { name, .. }
            | AgentSpec::CanaryHunter { name, .. } => name,
        }
    }

    pub fn target(&self) -> Option<&str> {
        match self {
            AgentSpec::DelayAttacker { target, .. } | AgentSpec::LootThief { target, .. } => Some(target),
            _ => None,
        }
    }

    pub fn is_miner(&self) -> bool {
        matches!(self, AgentSpec::Miner { .. } | AgentSpec::DelayAttacker { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ScheduledEvent {
    /// Replace the last `depth` blocks before `height` with a longer branch.
    Reorg { height: u64, depth: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub blocks: u64,
    #[serde(default)]
    pub chain: ChainConfig,
    #[serde(default)]
    pub latency: Latency,
    #[serde(default)]
    pub report: ReportOptions,
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub events: Vec<ScheduledEvent>,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        Ok(toml::to_string(self)?)
    }

    /// Apply `key=value` overrides to the chain parameters.
    pub fn apply_overrides<'a>(&mut self, overrides: impl IntoIterator<Item = &'a str>) -> Result<(), ConfigError> {
        for o in overrides {
            self.chain.params.apply_override(o)?;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.blocks == 0 {
            return bad("blocks must be positive".into());
        }
        let mut names = BTreeSet::new();
        for a in &self.agents {
            if a.name().is_empty() {
                return bad("agent with an empty name".into());
            }
            if !names.insert(a.name()) {
                return bad(format!("duplicate agent name {:?}", a.name()));
            }
        }
        for a in &self.agents {
            if let Some(t) = a.target() {
                if !names.contains(t) || t == a.name() {
                    return bad(format!("agent {:?} targets unknown agent {t:?}", a.name()));
                }
            }
            match a {
                AgentSpec::Miner { weight: 0, .. } | AgentSpec::DelayAttacker { weight: 0, .. } => {
                    return bad(format!("miner {:?} has zero weight", a.name()))
                }
                AgentSpec::FcUser {
                    method, leaked, lost, ..
                } => {
                    if *method == SpendMethod::Lost && !*leaked {
                        return bad(format!("{:?}: a lost spend needs a leaked key", a.name()));
                    }
                    if *lost && *method != SpendMethod::Lost {
                        return bad(format!("{:?}: an owner without the key can only use a lost spend", a.name()));
                    }
                }
                AgentSpec::LfcSpammer { count: 0, .. } => return bad(format!("{:?}: count must be positive", a.name())),
                _ => {}
            }
        }
        if !self.agents.iter().any(AgentSpec::is_miner) {
            return bad("at least one miner is required".into());
        }
        let p = &self.chain.params;
        if p.epochs.fc_len == 0 || p.epochs.lfc_len == 0 {
            return bad("epoch lengths must be positive".into());
        }
        if p.epochs.fc_commit_cutoff > p.epochs.fc_len || p.epochs.lfc_commit_cutoff > p.epochs.lfc_len {
            return bad("commit cutoff longer than its epoch".into());
        }
        if p.fc.deposit_p.den == 0 || p.fc.deposit_p.num >= p.fc.deposit_p.den {
            return bad("deposit probability must be in [0, 1)".into());
        }
        if p.lfc.extension_p.den == 0 {
            return bad("extension probability has a zero denominator".into());
        }
        if p.consensus.reorg_max_depth == 0 {
            return bad("reorg depth bound must be positive".into());
        }
        if self.chain.group.build().is_err() || self.chain.canary_group.build().is_err() {
            return bad("group parameters do not build".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
name = "small"
blocks = 10

[chain.params.era]
countdown_blocks = 5

[[agents]]
kind = "miner"
name = "m"

[[agents]]
kind = "fc-user"
name = "alice"
value = 1000
method = "derived"
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ScenarioConfig::from_toml(SMALL).unwrap();
        assert_eq!(cfg.chain.params.era.countdown_blocks, 5);
        assert_eq!(cfg.latency, Latency::default());
        let again = ScenarioConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn unknown_fields_are_errors() {
        let text = SMALL.replace("value = 1000", "value = 1000\ncolour = 3");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(ConfigError::Parse(_))));
        let text = SMALL.replace("[chain.params.era]", "[chain.params.eras]");
        assert!(ScenarioConfig::from_toml(&text).is_err());
    }

    #[test]
    fn semantic_checks() {
        let text = SMALL.replace("name = \"alice\"", "name = \"m\"");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(ConfigError::Invalid(_))));
        let text = SMALL.replace("kind = \"miner\"", "kind = \"holder\"\nvalue = 1");
        assert!(matches!(ScenarioConfig::from_toml(&text), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn overrides_reach_params() {
        let mut cfg = ScenarioConfig::from_toml(SMALL).unwrap();
        cfg.apply_overrides(["fc.wait_blocks=7"]).unwrap();
        assert_eq!(cfg.chain.params.fc.wait_blocks, 7);
        assert!(cfg.apply_overrides(["fc.nope=1"]).is_err());
    }
}
