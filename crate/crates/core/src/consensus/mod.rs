//! Block validation, the chain with bounded reorgs, and block building.

pub mod builder;
pub mod ctx;
pub mod epoch;
pub mod era;

use std::collections::VecDeque;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::group::{Group, GroupError, GroupSpec};
use crate::hash::{to_hex, Digest32};
use crate::hd::Kdf;
use crate::ledger::{Address, Block, ChainState, FcMethod, OutPoint, TxId};
use crate::lifted::{AddressHash, KeyLifting, SeedLifting, TransparentBackend};
use crate::params::Params;

use ctx::BlockCtx;
use epoch::EpochKind;
use era::CanaryRecord;

/// Machine-readable identifiers carried by every [`RuleViolation`].
pub mod rules {
    pub const BAD_SIGNATURE: &str = "bad-signature";
    pub const BAD_WITNESS: &str = "bad-witness";
    pub const CANARY_BAD_SOLUTION: &str = "canary-bad-solution";
    pub const CANARY_DEAD: &str = "canary-dead";
    pub const COINBASE_IMMATURE: &str = "coinbase-immature";
    pub const COINBASE_MISMATCH: &str = "coinbase-mismatch";
    pub const CONSERVATION: &str = "conservation";
    pub const DEPOSIT_INSUFFICIENT: &str = "deposit-insufficient";
    pub const ERA_DIRECT_SPEND: &str = "era-direct-spend";
    pub const ESCROW_EXCESS: &str = "escrow-excess";
    pub const FC_COMMITMENT_MISSING: &str = "fc-commitment-missing";
    pub const FC_COMMITMENT_YOUNG: &str = "fc-commitment-young";
    pub const FC_COMMIT_WINDOW: &str = "fc-commit-window";
    pub const FC_DERIVATION_MISMATCH: &str = "fc-derivation-mismatch";
    pub const FC_INACTIVE: &str = "fc-inactive";
    pub const FC_KEY_LEAKED: &str = "fc-key-leaked";
    pub const FC_LEGACY_RESTRICTIVE: &str = "fc-legacy-restrictive";
    pub const FC_LOST_NOT_LEAKED: &str = "fc-lost-not-leaked";
    pub const FC_MODE: &str = "fc-mode";
    pub const FC_PREQUANTUM_FEE: &str = "fc-commit-prequantum-fee";
    pub const FRAUD_LATE: &str = "fraud-late";
    pub const FRAUD_NO_RECORD: &str = "fraud-no-record";
    pub const FRAUD_RECORD_CLOSED: &str = "fraud-record-closed";
    pub const FRAUD_WRONG_UTXO: &str = "fraud-wrong-utxo";
    pub const GENESIS_CONTENT: &str = "genesis-content";
    pub const HEADER_HEIGHT: &str = "header-height";
    pub const HEADER_MINER: &str = "header-miner";
    pub const HEADER_PARENT: &str = "header-parent";
    pub const LFC_ADDENDUM_MISMATCH: &str = "lfc-addendum-mismatch";
    pub const LFC_CLAIM_BAD_PROOF: &str = "lfc-claim-bad-proof";
    pub const LFC_CLAIM_CAPACITY: &str = "lfc-claim-capacity";
    pub const LFC_CLAIM_EARLY: &str = "lfc-claim-early";
    pub const LFC_CLAIM_KEYLIFT_LEAKED: &str = "lfc-claim-keylift-leaked";
    pub const LFC_CLAIM_LATE: &str = "lfc-claim-late";
    pub const LFC_CLAIM_RESOLVED: &str = "lfc-claim-resolved";
    pub const LFC_CLAIM_UNKNOWN: &str = "lfc-claim-unknown";
    pub const LFC_COMMIT_WINDOW: &str = "lfc-commit-window";
    pub const LFC_FEE_MISMATCH: &str = "lfc-fee-mismatch";
    pub const LFC_FINE_COVERAGE: &str = "lfc-fine-coverage";
    pub const LFC_HASH_MISMATCH: &str = "lfc-hash-mismatch";
    pub const LFC_INACTIVE: &str = "lfc-inactive";
    pub const LFC_LOCKED: &str = "lfc-locked";
    pub const LFC_NOT_COMMITTED: &str = "lfc-not-committed";
    pub const LFC_NOT_PREQUANTUM: &str = "lfc-not-prequantum";
    pub const LFC_REVEAL_WINDOW: &str = "lfc-reveal-window";
    pub const LFC_UNKNOWN_UTXO: &str = "lfc-unknown-utxo";
    pub const MISSING_INPUT: &str = "missing-input";
    pub const REGISTRY_BANNED: &str = "registry-banned";
    pub const REGISTRY_DUPLICATE: &str = "registry-duplicate";
    pub const REGISTRY_PATH_BOUND: &str = "registry-path-bound";
    pub const SAMARITAN_BUDGET: &str = "samaritan-budget";
    pub const SAMARITAN_ERA: &str = "samaritan-era";
    pub const SAMARITAN_LEAKED: &str = "samaritan-leaked";
    pub const TX_SHAPE: &str = "tx-shape";
    pub const UTXO_LOCKED: &str = "utxo-locked";
    pub const VALUE_MISMATCH: &str = "value-mismatch";
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{rule}: {detail}")]
pub struct RuleViolation {
    pub rule: &'static str,
    pub detail: String,
}

fn short(d: &Digest32) -> String {
    to_hex(&d[..6])
}

/// Something a block did, in application order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    CanaryKilled { claimant: Address, bounty: u64 },
    EraStarted,
    RegistryMaterialized { key_id: Digest32, keys: usize },
    FcCommitted { payload: Digest32 },
    FcSpent { txid: TxId, method: FcMethod, utxo: OutPoint },
    ChallengeOpened { txid: TxId, end: u64 },
    ChallengeFinalized { txid: TxId },
    ChallengeDefeated { txid: TxId, by: TxId, payout: u64, miner_fee: u64 },
    LfcCommitted { id: Digest32, utxo: OutPoint },
    LfcRevealed { id: Digest32, committer_share: u64, revealer_share: u64 },
    LfcClaimed { id: Digest32, value: u64 },
    LfcFined { id: Digest32, fine: u64, address: Address },
    EpochRotated { kind: EpochKind, at: u64 },
    EpochExtended { at: u64, claims: u64 },
    /// Reward, non-lifted fees and revealer shares earned by the block's
    /// miner; `escrow` of it was withheld for fines.
    Coinbase { miner: Address, income: u64, escrow: u64 },
    /// Committer fee shares paid through the coinbase addendum.
    FeeShare { miner: Address, amount: u64 },
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::CanaryKilled { bounty, .. } => write!(f, "canary-killed bounty={bounty}"),
            Event::EraStarted => write!(f, "era-started"),
            Event::RegistryMaterialized { key_id, keys } => {
                write!(f, "registry-materialized key={} keys={keys}", short(key_id))
            }
            Event::FcCommitted { payload } => write!(f, "fc-committed payload={}", short(payload)),
            Event::FcSpent { txid, method, utxo } => {
                write!(f, "fc-spent tx={} method={method:?} utxo={utxo:?}", short(txid))
            }
            Event::ChallengeOpened { txid, end } => write!(f, "challenge-opened tx={} end={end}", short(txid)),
            Event::ChallengeFinalized { txid } => write!(f, "challenge-finalized tx={}", short(txid)),
            Event::ChallengeDefeated {
                txid,
                by,
                payout,
                miner_fee,
            } => write!(
                f,
                "challenge-defeated tx={} by={} payout={payout} miner_fee={miner_fee}",
                short(txid),
                short(by)
            ),
            Event::LfcCommitted { id, utxo } => write!(f, "lfc-committed id={} utxo={utxo:?}", short(id)),
            Event::LfcRevealed {
                id,
                committer_share,
                revealer_share,
            } => write!(
                f,
                "lfc-revealed id={} committer={committer_share} revealer={revealer_share}",
                short(id)
            ),
            Event::LfcClaimed { id, value } => write!(f, "lfc-claimed id={} value={value}", short(id)),
            Event::LfcFined { id, fine, .. } => write!(f, "lfc-fined id={} fine={fine}", short(id)),
            Event::EpochRotated { kind, at } => write!(f, "epoch-rotated from={kind:?} at={at}"),
            Event::EpochExtended { at, claims } => write!(f, "epoch-extended at={at} claims={claims}"),
            Event::Coinbase { income, escrow, .. } => write!(f, "coinbase income={income} escrow={escrow}"),
            Event::FeeShare { amount, .. } => write!(f, "fee-share amount={amount}"),
        }
    }
}

fn default_group() -> GroupSpec {
    GroupSpec::ToyBits { bits: 20 }
}

fn default_canary_group() -> GroupSpec {
    GroupSpec::Toy { q: 8191 }
}

/// Everything validators must agree on besides the blocks themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub params: Params,
    pub group: GroupSpec,
    pub canary_group: GroupSpec,
    pub canary_seed: u64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            params: Params::default(),
            group: default_group(),
            canary_group: default_canary_group(),
            canary_seed: 0,
        }
    }
}

/// Immutable context shared by all blocks of a chain.
#[derive(Debug, Clone)]
pub struct ChainEnv {
    pub config: ChainConfig,
    pub params: Params,
    pub group: Group,
    pub canary_group: Group,
    pub kdf: Kdf,
    pub key_lifting: KeyLifting,
    pub seed_lifting: SeedLifting,
    /// Post-quantum signatures for post-quantum addresses.
    pub pq: TransparentBackend<AddressHash>,
    pub canary: CanaryRecord,
}

impl ChainEnv {
    pub fn new(config: ChainConfig) -> Result<Self, GroupError> {
        let group = config.group.build()?;
        let canary_group = config.canary_group.build()?;
        let kdf = Kdf::new(config.params.kdf_iterations);
        let canary = CanaryRecord::from_seed(&canary_group, config.canary_seed, config.params.era.bounty);
        Ok(Self {
            params: config.params.clone(),
            key_lifting: KeyLifting::transparent(group.clone()),
            seed_lifting: SeedLifting::transparent(group.clone(), kdf),
            pq: TransparentBackend::new(AddressHash),
            group,
            canary_group,
            kdf,
            canary,
            config,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReorgError {
    #[error("reorg of depth {depth} exceeds the bound {max}")]
    TooDeep { depth: u64, max: u64 },
    #[error("fork point {0} is above the tip")]
    BadForkPoint(u64),
    #[error("branch does not extend past the current tip")]
    NotLonger,
    #[error("branch block {height} invalid: {violation}")]
    Invalid { height: u64, violation: RuleViolation },
}

/// A validated chain. Keeps the last `reorg_max_depth + 1` states.
#[derive(Debug, Clone)]
pub struct Chain {
    env: Arc<ChainEnv>,
    blocks: Vec<Block>,
    hashes: Vec<Digest32>,
    /// States after the most recent blocks, oldest first.
    states: VecDeque<ChainState>,
    events: Vec<(u64, Event)>,
}

/// Apply the genesis block: its coinbase is the initial allocation.
pub fn genesis_state(env: &ChainEnv, block: &Block) -> Result<ChainState, RuleViolation> {
    let fail = |d: &str| {
        Err(RuleViolation {
            rule: rules::GENESIS_CONTENT,
            detail: d.to_string(),
        })
    };
    if block.height != 0 || block.parent != [0; 32] {
        return fail("genesis must be height 0 with a zero parent");
    }
    if block.miner.is_some()
        || !block.transactions.is_empty()
        || !block.lfc_records.is_empty()
        || !block.lfc_claims.is_empty()
        || !block.samaritan_reports.is_empty()
        || !block.registry.is_empty()
        || block.canary_kill.is_some()
    {
        return fail("genesis carries only allocations");
    }
    let mut st = ChainState::default();
    let cb = block.coinbase_txid();
    for (i, o) in block.coinbase.iter().enumerate() {
        if o.address == Address::Burn {
            return fail("allocation to the burn address");
        }
        if let Address::PlainPk(pk) = &o.address {
            st.mark_leaked(&env.group, pk, 0);
        }
        st.insert_utxo(crate::ledger::Utxo {
            outpoint: OutPoint::new(cb, i as u32),
            value: o.value,
            address: o.address.clone(),
            created_height: 0,
            wait_blocks: o.wait_blocks,
            coinbase: false,
        });
        st.supply.minted += o.value as u128;
    }
    st.tip_height = Some(0);
    st.tip_hash = block.hash(&env.group);
    Ok(st)
}

/// Validate `block` on top of `st`. Returns the new state and its events.
pub fn apply_block(env: &ChainEnv, st: &ChainState, block: &Block) -> Result<(ChainState, Vec<Event>), RuleViolation> {
    let header = |rule, detail: String| Err(RuleViolation { rule, detail });
    if block.height != st.next_height() {
        return header(rules::HEADER_HEIGHT, format!("{} after tip {:?}", block.height, st.tip_height));
    }
    if block.parent != st.tip_hash {
        return header(rules::HEADER_PARENT, "parent is not the tip".into());
    }
    let miner = match &block.miner {
        Some(Address::Burn) | None => return header(rules::HEADER_MINER, "block needs a miner address".into()),
        Some(m) => m.clone(),
    };
    let mut ctx = BlockCtx::begin(env, st, miner);
    if let Some(kill) = &block.canary_kill {
        ctx.apply_canary_kill(kill)?;
    }
    for pk in &block.samaritan_reports {
        ctx.apply_samaritan(pk)?;
    }
    for msg in &block.registry {
        ctx.apply_registry(msg)?;
    }
    for tx in &block.transactions {
        ctx.apply_tx(tx)?;
    }
    for rec in &block.lfc_records {
        ctx.apply_lfc_record(rec)?;
    }
    for claim in &block.lfc_claims {
        ctx.apply_lfc_claim(claim)?;
    }
    let (mut st, _, events) = ctx.finish(Some(&block.coinbase))?;
    st.tip_height = Some(block.height);
    st.tip_hash = block.hash(&env.group);
    Ok((st, events))
}

impl Chain {
    pub fn new(env: Arc<ChainEnv>, genesis: Block) -> Result<Self, RuleViolation> {
        let st = genesis_state(&env, &genesis)?;
        Ok(Self {
            hashes: vec![st.tip_hash],
            blocks: vec![genesis],
            states: VecDeque::from([st]),
            events: Vec::new(),
            env,
        })
    }

    pub fn env(&self) -> &Arc<ChainEnv> {
        &self.env
    }

    pub fn state(&self) -> &ChainState {
        self.states.back().expect("at least the genesis state")
    }

    pub fn height(&self) -> u64 {
        self.blocks.len() as u64 - 1
    }

    pub fn tip_hash(&self) -> Digest32 {
        *self.hashes.last().expect("genesis")
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block_hash(&self, height: u64) -> Option<Digest32> {
        self.hashes.get(height as usize).copied()
    }

    /// State after block `height`, if still retained.
    pub fn state_at(&self, height: u64) -> Option<&ChainState> {
        let oldest = self.height() + 1 - self.states.len() as u64;
        let i = height.checked_sub(oldest)?;
        self.states.get(i as usize)
    }

    /// Every event so far, tagged with its block height.
    pub fn events(&self) -> &[(u64, Event)] {
        &self.events
    }

    /// Check `block` against the tip without applying it.
    pub fn validate(&self, block: &Block) -> Result<(ChainState, Vec<Event>), RuleViolation> {
        apply_block(&self.env, self.state(), block)
    }

    pub fn apply_block(&mut self, block: Block) -> Result<&[(u64, Event)], RuleViolation> {
        let (st, events) = self.validate(&block)?;
        Ok(self.push(block, st, events))
    }

    fn push(&mut self, block: Block, st: ChainState, events: Vec<Event>) -> &[(u64, Event)] {
        let h = block.height;
        let first = self.events.len();
        self.events.extend(events.into_iter().map(|e| (h, e)));
        self.hashes.push(st.tip_hash);
        self.blocks.push(block);
        self.states.push_back(st);
        while self.states.len() as u64 > self.env.params.consensus.reorg_max_depth + 1 {
            self.states.pop_front();
        }
        &self.events[first..]
    }

    /// Replace the blocks above `fork_height` with `branch`. On success the
    /// abandoned blocks are returned, newest last; on failure the chain is
    /// unchanged.
    pub fn reorg(&mut self, fork_height: u64, branch: Vec<Block>) -> Result<Vec<Block>, ReorgError> {
        let tip = self.height();
        if fork_height > tip {
            return Err(ReorgError::BadForkPoint(fork_height));
        }
        let depth = tip - fork_height;
        let max = self.env.params.consensus.reorg_max_depth;
        if depth > max || depth as usize >= self.states.len() {
            return Err(ReorgError::TooDeep { depth, max });
        }
        if fork_height + branch.len() as u64 <= tip {
            return Err(ReorgError::NotLonger);
        }
        let saved = self.clone();
        let keep = fork_height as usize + 1;
        let abandoned = self.blocks.split_off(keep);
        self.hashes.truncate(keep);
        for _ in 0..depth {
            self.states.pop_back();
        }
        self.events.retain(|(h, _)| *h <= fork_height);
        for b in branch {
            let height = b.height;
            if let Err(violation) = self.apply_block(b) {
                *self = saved;
                return Err(ReorgError::Invalid { height, violation });
            }
        }
        Ok(abandoned)
    }
}
