//! Chain snapshots: the scenario config plus every block, replayable.

use thiserror::Error;

use crate::consensus::{apply_block, genesis_state, ChainEnv, RuleViolation};
use crate::encoding::{DecodeError, Reader, Writer};
use crate::hash::{to_hex, Digest32};
use crate::ledger::Block;

use super::config::{ConfigError, ScenarioConfig};

const MAGIC: &[u8; 8] = b"FKSNAP1\n";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a snapshot")]
    Magic,
    #[error("decode: {0}")]
    Decode(#[from] DecodeError),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("config is not UTF-8")]
    Utf8,
    #[error("chain parameters: {0}")]
    Group(String),
    #[error("block {height}: {violation}")]
    Invalid { height: u64, violation: RuleViolation },
    #[error("block {0} does not re-encode to its stored bytes")]
    Encoding(u64),
    #[error("replayed tip {found} differs from stored {stored}")]
    Tip { stored: String, found: String },
}

impl SnapshotError {
    pub fn rule(&self) -> Option<&'static str> {
        match self {
            SnapshotError::Invalid { violation, .. } => Some(violation.rule),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub config: ScenarioConfig,
    /// Genesis first.
    pub blocks: Vec<Block>,
}

/// Result of a successful replay.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verified {
    pub blocks: usize,
    pub tip: Digest32,
}

fn env_of(config: &ScenarioConfig) -> Result<ChainEnv, SnapshotError> {
    ChainEnv::new(config.chain.clone()).map_err(|e| SnapshotError::Group(e.to_string()))
}

impl Snapshot {
    pub fn encode(&self) -> Result<Vec<u8>, SnapshotError> {
        let env = env_of(&self.config)?;
        let mut w = Writer::new();
        w.fixed(MAGIC);
        w.bytes(self.config.to_toml()?.as_bytes());
        w.len(self.blocks.len());
        let mut tip = [0u8; 32];
        for b in &self.blocks {
            w.bytes(&b.encode(&env.group));
            tip = b.hash(&env.group);
        }
        w.fixed(&tip);
        Ok(w.finish())
    }

    /// Decode and replay every block against the consensus rules.
    pub fn verify(bytes: &[u8]) -> Result<(Snapshot, Verified), SnapshotError> {
        let mut r = Reader::new(bytes);
        if r.fixed(MAGIC.len()).map_err(|_| SnapshotError::Magic)? != MAGIC {
            return Err(SnapshotError::Magic);
        }
        let text = std::str::from_utf8(r.bytes()?).map_err(|_| SnapshotError::Utf8)?;
        let config = ScenarioConfig::from_toml(text)?;
        let env = env_of(&config)?;
        let n = r.count(1)?;
        let mut blocks = Vec::with_capacity(n);
        let mut st = None;
        let mut tip = [0u8; 32];
        for height in 0..n as u64 {
            let raw = r.bytes()?;
            let block = Block::decode(&env.group, raw)?;
            if block.encode(&env.group) != raw {
                return Err(SnapshotError::Encoding(height));
            }
            let next = match &st {
                None => genesis_state(&env, &block),
                Some(prev) => apply_block(&env, prev, &block).map(|(s, _)| s),
            }
            .map_err(|violation| SnapshotError::Invalid { height, violation })?;
            tip = next.tip_hash;
            st = Some(next);
            blocks.push(block);
        }
        let stored: Digest32 = r.array()?;
        r.finish()?;
        if stored != tip {
            return Err(SnapshotError::Tip {
                stored: to_hex(&stored),
                found: to_hex(&tip),
            });
        }
        Ok((Snapshot { config, blocks }, Verified { blocks: n, tip }))
    }
}
