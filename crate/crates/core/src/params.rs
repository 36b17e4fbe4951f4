//! Protocol constants, grouped by subsystem. All durations are block counts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hd::{DerivationPath, DerivationStep, KDF_ITERATIONS};

/// Exact rational `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub const HALF: Ratio = Ratio { num: 1, den: 2 };

    /// `x > k * self`, without rounding.
    pub fn exceeded_by(&self, x: u64, k: u64) -> bool {
        x as u128 * self.den as u128 > k as u128 * self.num as u128
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FcMode {
    Restrictive,
    Unrestrictive,
    Permissive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClaimDeadline {
    /// Claims close a fixed number of blocks after the reveal window; the
    /// commitment is fined as soon as that passes.
    Window,
    /// Claims stay open until the LFC epoch (and any extension) ends; unsettled
    /// commitments are fined at rotation.
    EpochEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FineMode {
    /// One fixed fraction regardless of how long the UTXO was held.
    Flat,
    /// Compounded over the actual delay.
    Prorated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BountyFunding {
    Minted,
    /// Paid out of value previously sent to burn outputs, capped by what is there.
    BurnPool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FinePolicy {
    pub mode: FineMode,
    pub annual_rate_percent: u32,
    pub reference_minutes: u64,
    pub year_minutes: u64,
}

impl Default for FinePolicy {
    fn default() -> Self {
        Self {
            mode: FineMode::Flat,
            annual_rate_percent: 100,
            reference_minutes: 25_000,
            year_minutes: 525_600,
        }
    }
}

impl FinePolicy {
    /// `(1 + r)^(t / Y) - 1` for `t` minutes.
    pub fn fraction_for(&self, minutes: u64) -> f64 {
        let growth = 1.0 + self.annual_rate_percent as f64 / 100.0;
        growth.powf(minutes as f64 / self.year_minutes as f64) - 1.0
    }

    /// Flat fraction over the reference period.
    pub fn fraction(&self) -> f64 {
        self.fraction_for(self.reference_minutes)
    }

    /// Flat fraction quantized to basis points.
    pub fn fraction_bps(&self) -> u64 {
        (self.fraction() * 10_000.0).round() as u64
    }

    /// Fine on `value`. `delay_minutes` only matters in prorated mode.
    /// Rounds half up.
    pub fn fine(&self, value: u64, delay_minutes: u64) -> u64 {
        let (parts, scale) = match self.mode {
            FineMode::Flat => (self.fraction_bps(), 10_000u128),
            FineMode::Prorated => (
                (self.fraction_for(delay_minutes) * 1_000_000.0).round() as u64,
                1_000_000u128,
            ),
        };
        ((value as u128 * parts as u128 + scale / 2) / scale) as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LedgerParams {
    pub block_reward: u64,
    pub coinbase_maturity: u64,
    pub samaritan_budget_bytes: usize,
    pub registry_path_bound: usize,
    /// Regular derivation paths checked for every revealed key.
    pub regular_paths: Vec<DerivationPath>,
}

pub fn default_regular_paths() -> Vec<DerivationPath> {
    (0..16)
        .map(|i| {
            DerivationPath::new(vec![
                DerivationStep::hardened(0),
                DerivationStep::normal(0),
                DerivationStep::normal(i),
            ])
        })
        .collect()
}

impl Default for LedgerParams {
    fn default() -> Self {
        Self {
            block_reward: 50,
            coinbase_maturity: 100,
            samaritan_budget_bytes: 1024,
            registry_path_bound: 32,
            regular_paths: default_regular_paths(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FcParams {
    pub wait_blocks: u64,
    /// Lowest per-UTXO wait override honored.
    pub wait_floor: u64,
    pub challenge_blocks: u64,
    pub mode: FcMode,
    /// Probability `p` in the deposit rule `d >= v * p / (1 - p) + fee`.
    pub deposit_p: Ratio,
    /// Addresses first seen below this height stay under restrictive rules.
    pub legacy_threshold_height: u64,
}

impl Default for FcParams {
    fn default() -> Self {
        Self {
            wait_blocks: 100,
            wait_floor: 1,
            challenge_blocks: 52_560,
            mode: FcMode::Permissive,
            deposit_p: Ratio::HALF,
            legacy_threshold_height: 0,
        }
    }
}

impl FcParams {
    /// Minimum deposit for spending `value` with `fee`.
    pub fn min_deposit(&self, value: u64, fee: u64) -> u128 {
        let p = self.deposit_p;
        let q = p.den - p.num;
        // ceil(value * p / (1 - p)) + fee
        (value as u128 * p.num as u128).div_ceil(q as u128) + fee as u128
    }

    pub fn effective_wait(&self, utxo_override: Option<u64>) -> u64 {
        match utxo_override {
            Some(w) if w >= self.wait_floor => w,
            _ => self.wait_blocks,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LfcParams {
    pub wait_blocks: u64,
    pub reveal_window: u64,
    pub claim_window: u64,
    pub claim_deadline: ClaimDeadline,
    /// Claims allowed per `capacity_window` blocks (`k`).
    pub proof_capacity: u64,
    pub capacity_window: u64,
    /// Extension threshold `p`: extend when claims in the last window exceed `k * p`.
    pub extension_p: Ratio,
    pub fee_aggregation_delay: u64,
    pub fine: FinePolicy,
}

impl Default for LfcParams {
    fn default() -> Self {
        Self {
            wait_blocks: 100,
            reveal_window: 100,
            claim_window: 100,
            claim_deadline: ClaimDeadline::EpochEnd,
            proof_capacity: 100,
            capacity_window: 100,
            extension_p: Ratio::HALF,
            fee_aggregation_delay: 300,
            fine: FinePolicy::default(),
        }
    }
}

impl LfcParams {
    pub fn reveal_opens(&self) -> u64 {
        self.wait_blocks
    }

    pub fn reveal_closes(&self) -> u64 {
        self.wait_blocks + self.reveal_window
    }

    pub fn claim_closes(&self) -> u64 {
        self.reveal_closes() + self.claim_window
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpochParams {
    pub fc_len: u64,
    pub lfc_len: u64,
    pub fc_commit_cutoff: u64,
    pub lfc_commit_cutoff: u64,
}

impl Default for EpochParams {
    fn default() -> Self {
        Self {
            fc_len: 1_900,
            lfc_len: 500,
            fc_commit_cutoff: 100,
            lfc_commit_cutoff: 300,
        }
    }
}

impl EpochParams {
    pub fn fc_commit_window(&self) -> u64 {
        self.fc_len - self.fc_commit_cutoff
    }

    pub fn lfc_commit_window(&self) -> u64 {
        self.lfc_len - self.lfc_commit_cutoff
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EraParams {
    pub countdown_blocks: u64,
    pub bounty: u64,
    pub bounty_funding: BountyFunding,
}

impl Default for EraParams {
    fn default() -> Self {
        Self {
            countdown_blocks: 8_000,
            bounty: 20_000,
            bounty_funding: BountyFunding::Minted,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsensusParams {
    pub reorg_max_depth: u64,
    pub block_minutes: u64,
}

impl Default for ConsensusParams {
    fn default() -> Self {
        Self {
            reorg_max_depth: 6,
            block_minutes: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub ledger: LedgerParams,
    pub fc: FcParams,
    pub lfc: LfcParams,
    pub epochs: EpochParams,
    pub era: EraParams,
    pub consensus: ConsensusParams,
    pub kdf_iterations: u32,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            ledger: LedgerParams::default(),
            fc: FcParams::default(),
            lfc: LfcParams::default(),
            epochs: EpochParams::default(),
            era: EraParams::default(),
            consensus: ConsensusParams::default(),
            kdf_iterations: KDF_ITERATIONS,
        }
    }
}

#[derive(Debug, Error)]
pub enum OverrideError {
    #[error("override {0:?} is not of the form key=value")]
    Syntax(String),
    #[error("unknown parameter {0:?}")]
    UnknownKey(String),
    #[error("bad value for {key}: {msg}")]
    Value { key: String, msg: String },
}

impl Params {
    /// Apply a dotted `section.field=value` override. The value is parsed as a
    /// TOML value, falling back to a bare string.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), OverrideError> {
        let (key, raw) = spec
            .split_once('=')
            .ok_or_else(|| OverrideError::Syntax(spec.to_string()))?;
        let key = key.trim();
        let value: toml::Value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
        let mut tree = toml::Value::try_from(&*self).expect("params serialize");
        let mut node = &mut tree;
        for part in key.split('.') {
            node = node
                .as_table_mut()
                .and_then(|t| t.get_mut(part))
                .ok_or_else(|| OverrideError::UnknownKey(key.to_string()))?;
        }
        *node = value;
        *self = tree.try_into().map_err(|e: toml::de::Error| OverrideError::Value {
            key: key.to_string(),
            msg: e.message().to_string(),
        })?;
        Ok(())
    }
}
