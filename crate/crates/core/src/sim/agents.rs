//! Simulated participants.

use std::collections::{BTreeMap, BTreeSet};

use crate::consensus::builder::Candidates;
use crate::consensus::ctx::BlockCtx;
use crate::consensus::epoch::{epoch_of, EpochPosition};
use crate::consensus::era::EraState;
use crate::consensus::{ChainEnv, RuleViolation};
use crate::fawkes::ChallengeStatus;
use crate::group::{Point, PreQuantumSignature};
use crate::hash::{sha256_parts, Digest32};
use crate::hd::{derive, DerivationPath, DerivationStep};
use crate::ledger::{
    Address, Block, CanaryKill, ChainState, FcMethod, LfcClaim, LfcRecord, OutPoint, Transaction, TxKind, TxOut,
    Witness,
};
use crate::lfc::{check_admission, LfcMessage, LfcState};
use crate::lifted::{address_of, LiftedSignature};
use crate::params::ClaimDeadline;

use super::config::AgentSpec;
use super::flow::{FcFlow, RETRY_BLOCKS};
use super::mempool::{Mempool, Submission};
use super::wallet::{build_tx, PqKey, PreKey, Signer};

/// Names and owned addresses of every agent.
#[derive(Debug, Clone, Default)]
pub struct Directory {
    entries: Vec<(String, Vec<Address>)>,
}

impl Directory {
    pub fn push(&mut self, name: &str, addresses: Vec<Address>) {
        self.entries.push((name.to_string(), addresses));
    }

    pub fn addresses_of(&self, name: &str) -> &[Address] {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a.as_slice())
            .unwrap_or(&[])
    }
}

/// What an agent sees at one tick.
pub struct View<'a> {
    pub env: &'a ChainEnv,
    pub st: &'a ChainState,
    /// Height of the block built this tick. `st` is the state below it;
    /// submissions made now can be included from `h + 1`.
    pub h: u64,
    pub pool: &'a Mempool,
    pub me: usize,
    pub directory: &'a Directory,
}

impl View<'_> {
    pub fn era_at(&self, h: u64) -> EraState {
        EraState::at(self.st.canary.killed_at, self.env.params.era.countdown_blocks, h)
    }

    /// Epoch position of `h`, known for the tip's successor.
    pub fn position_at(&self, h: u64) -> EpochPosition {
        match self.st.epochs.current {
            Some(_) => self.st.epochs.position(h),
            None => {
                let start = self.st.canary.killed_at.map(|k| k + self.env.params.era.countdown_blocks);
                epoch_of(&self.env.params.epochs, start, h)
            }
        }
    }

    pub fn fc_commit_open(&self, h: u64) -> bool {
        self.era_at(h).is_quantum()
            && matches!(self.position_at(h), EpochPosition::Fc(off) if off < self.env.params.epochs.fc_commit_window())
    }

    /// Offset into the lifted epoch when commitments are accepted at `h`.
    pub fn lfc_commit_offset(&self, h: u64) -> Option<u64> {
        if !self.era_at(h).is_quantum() {
            return None;
        }
        match self.position_at(h) {
            EpochPosition::Lfc(off) if off < self.env.params.epochs.lfc_commit_window() => Some(off),
            _ => None,
        }
    }

    /// The public key behind a pre-quantum address, if it is on chain.
    pub fn leaked_pk(&self, address: &Address) -> Option<Point> {
        let g = &self.env.group;
        match address {
            Address::PlainPk(pk) => Some(pk.clone()),
            Address::PkHash(h) => {
                self.st.leaked_addr.get(h)?;
                self.st
                    .leaked
                    .keys()
                    .filter_map(|enc| g.decode_point(enc))
                    .find(|pk| address_of(g, pk) == *h)
            }
            _ => None,
        }
    }
}

type RecordKey = (Digest32, Digest32, u64);

fn record_key(r: &LfcRecord) -> RecordKey {
    (r.tx_hash, r.utxo_hash, r.alpha)
}

/// Block production shared by miners.
#[derive(Debug, Clone)]
pub struct MinerCore {
    pub key: PqKey,
    pub weight: u64,
    pub claims: bool,
    pub funds: u64,
    /// Ownership proofs of messages this miner has committed.
    known: BTreeMap<RecordKey, LiftedSignature>,
    /// Records of its own to put in its next block.
    pub extra_records: Vec<LfcRecord>,
    nonce: u64,
}

impl MinerCore {
    pub fn new(label: &str, weight: u64, claims: bool, funds: u64) -> Self {
        Self {
            key: PqKey::from_label(label),
            weight,
            claims,
            funds,
            known: BTreeMap::new(),
            extra_records: Vec::new(),
            nonce: 0,
        }
    }

    pub fn address(&self) -> Address {
        self.key.address()
    }

    /// Add admitted messages from `offered`, own records and claims to `c`.
    /// Returns, per pushed record, the offered index it came from, and the
    /// admission refusals.
    pub fn prepare(
        &mut self,
        env: &ChainEnv,
        st: &ChainState,
        offered: &[LfcMessage],
        c: &mut Candidates,
    ) -> (Vec<Option<usize>>, Vec<(usize, RuleViolation)>) {
        let mut sources = Vec::new();
        let mut refused = Vec::new();
        for (i, m) in offered.iter().enumerate() {
            match check_admission(env, st, m) {
                Ok(()) => {
                    self.known.insert(record_key(&m.record()), m.sig.clone());
                    c.lfc_records.push(m.record());
                    sources.push(Some(i));
                }
                Err(v) => refused.push((i, v)),
            }
        }
        for r in &self.extra_records {
            c.lfc_records.push(r.clone());
            sources.push(None);
        }
        if self.claims {
            let lp = &env.params.lfc;
            let next = st.next_height();
            let me = self.address();
            for (height, id) in st.lfc_open.iter() {
                let com = &st.lfc[id];
                if com.miner != me {
                    continue;
                }
                let Some(sig) = self.known.get(&record_key(&com.record)) else {
                    continue;
                };
                let age = next - height;
                let late = lp.claim_deadline == ClaimDeadline::Window && age > lp.claim_closes();
                if age > lp.reveal_closes() && !late {
                    c.lfc_claims.push(LfcClaim {
                        commitment: *id,
                        sig: sig.clone(),
                    });
                }
            }
        }
        (sources, refused)
    }

    /// Zero-fee escrow funding of exactly `shortfall` from mature funds.
    pub fn fund_escrow(&mut self, env: &ChainEnv, st: &ChainState, shortfall: u64) -> Option<Transaction> {
        let h = st.next_height();
        let maturity = env.params.ledger.coinbase_maturity;
        let mut picked = Vec::new();
        let mut total = 0u64;
        for u in st.utxos_of(&self.address()) {
            if u.coinbase && h < u.created_height + maturity {
                continue;
            }
            total += u.value;
            picked.push(u.outpoint);
            if total >= shortfall {
                break;
            }
        }
        if total < shortfall {
            return None;
        }
        self.nonce += 1;
        let change = total - shortfall;
        let outputs = if change > 0 {
            vec![TxOut::new(change, self.address())]
        } else {
            Vec::new()
        };
        let inputs = picked.into_iter().map(|op| (op, Signer::Pq(self.key.clone()))).collect();
        Some(build_tx(env, TxKind::EscrowFunding, inputs, outputs, 0, self.nonce))
    }

    pub fn on_block(&mut self, block: &Block) {
        self.extra_records.retain(|r| !block.lfc_records.contains(r));
        self.nonce = self.nonce.max(block.height << 8);
    }
}

pub trait Agent {
    fn name(&self) -> &str;
    fn kind(&self) -> &'static str;
    /// Genesis allocations owned by this agent.
    fn genesis(&self) -> Vec<TxOut>;
    /// Every address whose balance counts as this agent's.
    fn addresses(&self) -> Vec<Address>;
    fn act(&mut self, v: &View, out: &mut Vec<Submission>);
    fn miner(&mut self) -> Option<&mut MinerCore> {
        None
    }
    fn miner_ref(&self) -> Option<&MinerCore> {
        None
    }
    /// `key=value` facts for the report.
    fn outcomes(&self, _v: &View) -> Vec<(String, String)> {
        Vec::new()
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn key_path(i: u32) -> DerivationPath {
    DerivationPath::new(vec![
        DerivationStep::hardened(44),
        DerivationStep::normal(0),
        DerivationStep::normal(i),
    ])
}

fn pre_key(env: &ChainEnv, label: &str, derived: bool) -> PreKey {
    if derived {
        PreKey::derived(env, label, key_path(0))
    } else {
        PreKey::standalone(env, label)
    }
}

fn nonce_base(name: &str) -> u64 {
    let d = sha256_parts(&[b"sim/nonce", name.as_bytes()]);
    u64::from_be_bytes(d[..8].try_into().expect("8 bytes")) >> 16
}

/// Largest UTXO at `addr` holding at least `min`.
fn largest(st: &ChainState, addr: &Address, min: u64) -> Option<crate::ledger::Utxo> {
    st.utxos_of(addr)
        .into_iter()
        .filter(|u| u.value >= min)
        .max_by_key(|u| (u.value, u.outpoint))
}

fn dry_run(env: &ChainEnv, st: &ChainState, tx: &Transaction) -> Result<(), RuleViolation> {
    BlockCtx::begin(env, st, Address::Burn).apply_tx(tx)
}

// ---- miners ----

pub struct Miner {
    name: String,
    core: MinerCore,
}

impl Agent for Miner {
    fn name(&self) -> &str {
        &self.name
    }
    fn kind(&self) -> &'static str {
        "miner"
    }
    fn genesis(&self) -> Vec<TxOut> {
        if self.core.funds > 0 {
            vec![TxOut::new(self.core.funds, self.core.address())]
        } else {
            Vec::new()
        }
    }
    fn addresses(&self) -> Vec<Address> {
        vec![self.core.address()]
    }
    fn act(&mut self, _v: &View, _out: &mut Vec<Submission>) {}
    fn miner(&mut self) -> Option<&mut MinerCore> {
        Some(&mut self.core)
    }
    fn miner_ref(&self) -> Option<&MinerCore> {
        Some(&self.core)
    }
}

/// Commits a fake lifted record for each of the target's UTXOs it can lock.
pub struct DelayAttacker {
    name: String,
    core: MinerCore,
    target: String,
    start: u64,
}

impl Agent for DelayAttacker {
    fn name(&self) -> &str {
        &self.name
    }
    fn kind(&self) -> &'static str {
        "delay-attacker"
    }
    fn genesis(&self) -> Vec<TxOut> {
        if self.core.funds > 0 {
            vec![TxOut::new(self.core.funds, self.core.address())]
        } else {
            Vec::new()
        }
    }
    fn addresses(&self) -> Vec<Address> {
        vec![self.core.address()]
    }
    fn act(&mut self, v: &View, _out: &mut Vec<Submission>) {
        self.core.extra_records.clear();
        if v.h < self.start || v.lfc_commit_offset(v.h).is_none() {
            return;
        }
        for addr in v.directory.addresses_of(&self.target) {
            if !addr.is_pre_quantum() {
                continue;
            }
            // One fake per address.
            let me = self.core.address();
            if v.st.lfc.values().any(|c| c.address == *addr && c.miner == me) {
                continue;
            }
            for u in v.st.utxos_of(addr) {
                if v.st.lfc_locks.contains_key(&u.outpoint) {
                    continue;
                }
                self.core.extra_records.push(LfcRecord {
                    tx_hash: sha256_parts(&[b"sim/fake", self.name.as_bytes(), &u.outpoint.hash()]),
                    utxo_hash: u.outpoint.hash(),
                    alpha: 0,
                });
            }
        }
    }
    fn miner(&mut self) -> Option<&mut MinerCore> {
        Some(&mut self.core)
    }
    fn miner_ref(&self) -> Option<&MinerCore> {
        Some(&self.core)
    }
    fn outcomes(&self, v: &View) -> Vec<(String, String)> {
        let me = self.core.address();
        let targets = v.directory.addresses_of(&self.target);
        let fakes: Vec<_> = v
            .st
            .lfc
            .values()
            .filter(|c| c.miner == me && targets.contains(&c.address))
            .collect();
        let fined: u64 = fakes
            .iter()
            .filter(|c| c.state == LfcState::ExpiredFined)
            .map(|c| c.escrow)
            .sum();
        let delay: Vec<u64> = fakes
            .iter()
            .filter_map(|c| c.resolved_height.map(|r| r - c.height))
            .collect();
        vec![
            kv("fake_commitments", fakes.len()),
            kv("fined_escrow", fined),
            kv("max_delay", delay.iter().max().copied().unwrap_or(0)),
        ]
    }
}

// ---- FawkesCoin users ----

pub struct FcUser {
    name: String,
    key: PreKey,
    value: u64,
    method: FcMethod,
    start: u64,
    fee: u64,
    leaked: bool,
    vault: PqKey,
    fee_key: PqKey,
    dep_key: PqKey,
    flow: Option<FcFlow>,
}

impl FcUser {
    fn address(&self, env: &ChainEnv) -> Address {
        if self.leaked {
            Address::PlainPk(self.key.pk.clone())
        } else {
            self.key.address(env)
        }
    }

    fn deposit(&self, env: &ChainEnv) -> u64 {
        if self.method.challenged() {
            env.params.fc.min_deposit(self.value, self.fee) as u64
        } else {
            0
        }
    }

    fn build_flow(&self, v: &View) -> Option<FcFlow> {
        let env = v.env;
        let u = largest(v.st, &self.address(env), 1)?;
        let signer = match self.method {
            FcMethod::Hashed | FcMethod::Naked => Signer::Pre(self.key.sk.clone()),
            FcMethod::Derived => self.key.derivation(env)?,
            FcMethod::Lost => Signer::Unsigned,
        };
        let mut inputs = vec![(u.outpoint, signer)];
        let mut outputs = vec![TxOut::new(u.value.checked_sub(self.fee)?, self.vault.address())];
        if self.method.challenged() {
            let d = largest(v.st, &self.dep_key.address(), 1)?;
            inputs.push((d.outpoint, Signer::Pq(self.dep_key.clone())));
            outputs.push(TxOut::new(d.value, self.dep_key.address()));
        }
        let nonce = nonce_base(&self.name);
        let reveal = build_tx(env, TxKind::FcSpend(self.method), inputs, outputs, self.fee, nonce);
        Some(FcFlow::new(v, reveal, u.outpoint, self.fee_key.clone(), self.fee, self.start, nonce))
    }
}

impl Agent for FcUser {
    fn name(&self) -> &str {
        &self.name
    }
    fn kind(&self) -> &'static str {
        "fc-user"
    }
    fn genesis(&self) -> Vec<TxOut> {
        Vec::new()
    }
    fn addresses(&self) -> Vec<Address> {
        Vec::new()
    }
    fn act(&mut self, v: &View, out: &mut Vec<Submission>) {
        if self.flow.is_none() && v.era_at(v.h + 1).is_quantum() {
            self.flow = self.build_flow(v);
        }
        if let Some(f) = &mut self.flow {
            f.step(v, out);
        }
    }
    fn outcomes(&self, v: &View) -> Vec<(String, String)> {
        let mut o = vec![kv("method", format!("{:?}", self.method).to_lowercase())];
        match &self.flow {
            Some(f) => {
                o.push(kv("stage", f.stage_name()));
                if let Some(r) = v.st.challenges.get(&f.txid) {
                    o.push(kv("challenge", format!("{:?}", r.status).to_lowercase()));
                }
                if let Some(h) = f.done_at {
                    o.push(kv("settled_at", h));
                }
            }
            None => o.push(kv("stage", "idle")),
        }
        o.push(kv("received", v.st.balance_of(&self.vault.address())));
        o
    }
}

/// Wraps the address list and genesis of an [`FcUser`]; kept apart so the
/// env-dependent address is computed once.
pub struct FcUserAgent {
    inner: FcUser,
    address: Address,
    deposit: u64,
}

impl Agent for FcUserAgent {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn kind(&self) -> &'static str {
        self.inner.kind()
    }
    fn genesis(&self) -> Vec<TxOut> {
        let mut g = vec![
            TxOut::new(self.inner.value, self.address.clone()),
            TxOut::new(self.inner.fee * 4, self.inner.fee_key.address()),
        ];
        if self.deposit > 0 {
            g.push(TxOut::new(self.deposit, self.inner.dep_key.address()));
        }
        g
    }
    fn addresses(&self) -> Vec<Address> {
        vec![
            self.address.clone(),
            self.inner.vault.address(),
            self.inner.fee_key.address(),
            self.inner.dep_key.address(),
        ]
    }
    fn act(&mut self, v: &View, out: &mut Vec<Submission>) {
        self.inner.act(v, out)
    }
    fn outcomes(&self, v: &View) -> Vec<(String, String)> {
        self.inner.outcomes(v)
    }
}

/// Spends a pre-quantum UTXO without any protection.
pub struct DirectSpender {
    name: String,
    key: PreKey,
    addr: Address,
    value: u64,
    at: u64,
    fee: u64,
    vault: PqKey,
    sent: Option<Digest32>,
}

impl Agent for DirectSpender {
    fn name(&self) -> &str {
        &self.name
    }
    fn kind(&self) -> &'static str {
        "direct-spender"
    }
    fn genesis(&self) -> Vec<TxOut> {
        vec![TxOut::new(self.value, self.addr.clone())]
    }
    fn addresses(&self) -> Vec<Address> {
        vec![self.addr.clone(), self.vault.address()]
    }
    fn act(&mut self, v: &View, out: &mut Vec<Submission>) {
        if self.sent.is_some() || v.h < self.at {
            return;
        }
        let Some(u) = largest(v.st, &self.key.address(v.env), 1) else {
            return;
        };
        let tx = build_tx(
            v.env,
            TxKind::Transfer,
            vec![(u.outpoint, Signer::Pre(self.key.sk.clone()))],
            vec![TxOut::new(u.value - self.fee, self.vault.address())],
            self.fee,
            nonce_base(&self.name),
        );
        self.sent = Some(tx.txid(&v.env.group));
        out.push(Submission::Tx(tx));
    }
    fn outcomes(&self, v: &View) -> Vec<(String, String)> {
        vec![
            kv("sent", self.sent.is_some()),
            kv("received", v.st.balance_of(&self.vault.address())),
        ]
    }
}

/// Inverts public keys seen in the mempool and races the owner.
pub struct FrontRunner {
    name: String,
    bump: u64,
    reckless: bool,
    funds: u64,
    loot: PqKey,
    fee_key: PqKey,
    seen: BTreeSet<OutPoint>,
    attempts: u64,
    submitted: u64,
    declined: u64,
    flows: Vec<FcFlow>,
}

impl FrontRunner {
    fn forge(&self, v: &View, w: &Witness) -> Option<crate::group::Scalar> {
        let g = &v.env.group;
        match w {
            Witness::PreQuantum { pk, .. } => g.quantum_invert(pk).ok(),
            Witness::Derivation { xsk, path } => Some(derive(g, xsk, path).sk),
            _ => None,
        }
    }
}

impl Agent for FrontRunner {
    fn name(&self) -> &str {
        &self.name
    }
    fn kind(&self) -> &'static str {
        "front-runner"
    }
    fn genesis(&self) -> Vec<TxOut> {
        vec![TxOut::new(self.funds, self.fee_key.address())]
    }
    fn addresses(&self) -> Vec<Address> {
        vec![self.loot.address(), self.fee_key.address()]
    }
    fn act(&mut self, v: &View, out: &mut Vec<Submission>) {
        let next = v.h + 1;
        let mut targets = Vec::new();
        for e in v.pool.visible(v.h) {
            if e.from == v.me {
                continue;
            }
            let Submission::Tx(tx) = &e.item else { continue };
            for input in &tx.inputs {
                let Some(u) = v.st.utxo(&input.prevout) else { continue };
                if !u.address.is_pre_quantum() || self.seen.contains(&u.outpoint) {
                    continue;
                }
                if let Some(sk) = self.forge(v, &input.witness) {
                    targets.push((u.clone(), sk, tx.fee));
                }
            }
        }
        for (u, sk, victim_fee) in targets {
            self.seen.insert(u.outpoint);
            self.attempts += 1;
            let fee = victim_fee + self.bump;
            if fee >= u.value {
                self.declined += 1;
                continue;
            }
            let nonce = nonce_base(&self.name) + self.attempts;
            let theft = build_tx(
                v.env,
                TxKind::Transfer,
                vec![(u.outpoint, Signer::Pre(sk.clone()))],
                vec![TxOut::new(u.value - fee, self.loot.address())],
                fee,
                nonce,
            );
            if dry_run(v.env, v.st, &theft).is_ok() {
                self.submitted += 1;
                out.push(Submission::Tx(theft));
            } else if self.reckless && v.era_at(next).is_quantum() {
                let spend = build_tx(
                    v.env,
                    TxKind::FcSpend(FcMethod::Hashed),
                    vec![(u.outpoint, Signer::Pre(sk))],
                    vec![TxOut::new(u.value - fee, self.loot.address())],
                    fee,
                    nonce,
                );
                self.submitted += 1;
                self.flows
                    .push(FcFlow::new(v, spend, u.outpoint, self.fee_key.clone(), fee, next, nonce));
            } else {
                self.declined += 1;
            }
        }
        for f in &mut self.flows {
            f.step(v, out);
        }
    }
    fn outcomes(&self, v: &View) -> Vec<(String, String)> {
        vec![
            kv("attempts", self.attempts),
            kv("submitted", self.submitted),
            kv("declined", self.declined),
            kv("stolen", v.st.balance_of(&self.loot.address())),
        ]
    }
}

// ---- lifted FawkesCoin users ----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LfcStage {
    Waiting,
    Sent { since: u64 },
    Committed { id: Digest32, since: u64 },
    Done,
    Failed,
}

pub struct LfcUser {
    name: String,
    key: PreKey,
    addr: Address,
    value: u64,
    start: u64,
    alpha: u64,
    vault: PqKey,
    stage: LfcStage,
    reveal: Option<Transaction>,
    attempts: u64,
    blocked_by_foreign_lock: u64,
}

impl LfcUser {
    fn reveal_tx(&mut self, v: &View) -> Option<Transaction> {
        if self.reveal.is_none() {
            let u = largest(v.st, &self.key.address(v.env), 1)?;
            self.reveal = Some(build_tx(
                v.env,
                TxKind::LfcSpend,
                vec![(u.outpoint, Signer::Pre(self.key.sk.clone()))],
                vec![TxOut::new(u.value.checked_sub(self.alpha)?, self.vault.address())],
                self.alpha,
                nonce_base(&self.name),
            ));
        }
        self.reveal.clone()
    }
}

impl Agent for LfcUser {
    fn name(&self) -> &str {
        &self.name
    }
    fn kind(&self) -> &'static str {
        "lfc-user"
    }
    fn genesis(&self) -> Vec<TxOut> {
        vec![TxOut::new(self.value, self.addr.clone())]
    }
    fn addresses(&self) -> Vec<Address> {
        vec![self.addr.clone(), self.vault.address()]
    }
    fn act(&mut self, v: &View, out: &mut Vec<Submission>) {
        let next = v.h + 1;
        let g = &v.env.group;
        let lp = &v.env.params.lfc;
        match self.stage {
            LfcStage::Waiting => {
                if next < self.start || v.lfc_commit_offset(next).is_none() {
                    return;
                }
                let Some(tx) = self.reveal_tx(v) else {
                    self.stage = LfcStage::Failed;
                    return;
                };
                let utxo = tx.inputs[0].prevout;
                if v.st.lfc_locks.contains_key(&utxo) {
                    self.blocked_by_foreign_lock += 1;
                    return;
                }
                let tx_hash = tx.txid(g);
                out.push(Submission::Lfc(LfcMessage {
                    tx_hash,
                    sig: self.key.ownership(v.env, &tx_hash, self.alpha),
                    utxo,
                    alpha: self.alpha,
                }));
                self.attempts += 1;
                self.stage = LfcStage::Sent { since: v.h };
            }
            LfcStage::Sent { since } => {
                let tx = self.reveal.clone().expect("built before sending");
                let utxo = tx.inputs[0].prevout;
                match v.st.lfc_locks.get(&utxo) {
                    Some(id) if v.st.lfc[id].record.tx_hash == tx.txid(g) => {
                        self.stage = LfcStage::Committed { id: *id, since: 0 };
                    }
                    _ if v.h >= since + RETRY_BLOCKS => self.stage = LfcStage::Waiting,
                    _ => {}
                }
            }
            LfcStage::Committed { id, since } => {
                let Some(c) = v.st.lfc.get(&id) else {
                    // Reorganized away.
                    self.stage = LfcStage::Waiting;
                    return;
                };
                match c.state {
                    LfcState::Revealed => self.stage = LfcStage::Done,
                    LfcState::ClaimedByMiner | LfcState::ExpiredFined => self.stage = LfcStage::Failed,
                    LfcState::Locked => {
                        let age = next - c.height;
                        if age >= lp.reveal_opens() && age <= lp.reveal_closes() && (since == 0 || v.h >= since + RETRY_BLOCKS) {
                            out.push(Submission::Tx(self.reveal.clone().expect("built")));
                            self.stage = LfcStage::Committed { id, since: v.h };
                        }
                    }
                }
            }
            LfcStage::Done | LfcStage::Failed => {}
        }
    }
    fn outcomes(&self, v: &View) -> Vec<(String, String)> {
        let stage = match self.stage {
            LfcStage::Waiting => "waiting",
            LfcStage::Sent { .. } => "sent",
            LfcStage::Committed { .. } => "committed",
            LfcStage::Done => "done",
            LfcStage::Failed => "failed",
        };
        vec![
            kv("stage", stage),
            kv("messages", self.attempts),
            kv("blocked_ticks", self.blocked_by_foreign_lock),
            kv("received", v.st.balance_of(&self.vault.address())),
        ]
    }
}

/// Posts lifted commitments over random transaction hashes.
pub struct LfcSpammer {
    name: String,
    keys: Vec<PreKey>,
    addrs: Vec<Address>,
    value: u64,
    start: u64,
    lfc_offset: Option<u64>,
    sent: bool,
}

impl Agent for LfcSpammer {
    fn name(&self) -> &str {
        &self.name
    }
    fn kind(&self) -> &'static str {
        "lfc-spammer"
    }
    fn genesis(&self) -> Vec<TxOut> {
        self.addrs
            .iter()
            .map(|a| TxOut::new(self.value, a.clone()))
            .collect()
    }
    fn addresses(&self) -> Vec<Address> {
        self.addrs.clone()
    }
    fn act(&mut self, v: &View, out: &mut Vec<Submission>) {
        let next = v.h + 1;
        if self.sent || next < self.start {
            return;
        }
        match (v.lfc_commit_offset(next), self.lfc_offset) {
            (Some(off), Some(want)) if off == want => {}
            (Some(_), None) => {}
            _ => return,
        }
        for (i, k) in self.keys.iter().enumerate() {
            let Some(u) = largest(v.st, &k.address(v.env), 1) else { continue };
            let tx_hash = sha256_parts(&[b"sim/spam", self.name.as_bytes(), &(i as u64).to_be_bytes()]);
            out.push(Submission::Lfc(LfcMessage {
                tx_hash,
                sig: k.ownership(v.env, &tx_hash, 0),
                utxo: u.outpoint,
                alpha: 0,
            }));
        }
        self.sent = true;
    }
    fn outcomes(&self, v: &View) -> Vec<(String, String)> {
        let mine: BTreeSet<Address> = self.addresses().into_iter().collect();
        let claimed = v
            .st
            .lfc
            .values()
            .filter(|c| mine.contains(&c.address) && c.state == LfcState::ClaimedByMiner)
            .count();
        vec![kv("sent", self.sent), kv("claimed_by_miner", claimed)]
    }
}

pub struct Holder {
    name: String,
    address: Address,
    value: u64,
}

impl Agent for Holder {
    fn name(&self) -> &str {
        &self.name
    }
    fn kind(&self) -> &'static str {
        "holder"
    }
    fn genesis(&self) -> Vec<TxOut> {
        vec![TxOut::new(self.value, self.address.clone())]
    }
    fn addresses(&self) -> Vec<Address> {
        vec![self.address.clone()]
    }
    fn act(&mut self, _v: &View, _out: &mut Vec<Submission>) {}
    fn outcomes(&self, v: &View) -> Vec<(String, String)> {
        let locked = v
            .st
            .utxos_of(&self.address)
            .iter()
            .filter(|u| v.st.lfc_locks.contains_key(&u.outpoint))
            .count();
        vec![kv("locked", locked)]
    }
}

// ---- challenged spends ----

/// Takes leaked UTXOs of a target through a naked or lost spend.
pub struct LootThief {
    name: String,
    target: String,
    start: u64,
    quantum: bool,
    fee: u64,
    funds: u64,
    loot: PqKey,
    fee_key: PqKey,
    dep_key: PqKey,
    tried: BTreeSet<OutPoint>,
    flows: Vec<FcFlow>,
    skipped_deposit: u64,
}

impl Agent for LootThief {
    fn name(&self) -> &str {
        &self.name
    }
    fn kind(&self) -> &'static str {
        "loot-thief"
    }
    fn genesis(&self) -> Vec<TxOut> {
        vec![
            TxOut::new(self.fee * 8, self.fee_key.address()),
            TxOut::new(self.funds, self.dep_key.address()),
        ]
    }
    fn addresses(&self) -> Vec<Address> {
        vec![self.loot.address(), self.fee_key.address(), self.dep_key.address()]
    }
    fn act(&mut self, v: &View, out: &mut Vec<Submission>) {
        let next = v.h + 1;
        let busy = self.flows.iter().any(|f| !f.finished());
        if !busy && next >= self.start && v.fc_commit_open(next) {
            'scan: for addr in v.directory.addresses_of(&self.target) {
                if !addr.is_pre_quantum() {
                    continue;
                }
                let Some(pk) = v.leaked_pk(addr) else { continue };
                for u in v.st.utxos_of(addr) {
                    if self.tried.contains(&u.outpoint) || v.st.lfc_locks.contains_key(&u.outpoint) {
                        continue;
                    }
                    let (method, signer) = if self.quantum {
                        match v.env.group.quantum_invert(&pk) {
                            Ok(sk) => (FcMethod::Naked, Signer::Pre(sk)),
                            Err(_) => continue,
                        }
                    } else {
                        (FcMethod::Lost, Signer::Unsigned)
                    };
                    let need = v.env.params.fc.min_deposit(u.value, self.fee) as u64;
                    let Some(d) = largest(v.st, &self.dep_key.address(), need) else {
                        self.skipped_deposit += 1;
                        continue;
                    };
                    self.tried.insert(u.outpoint);
                    let nonce = nonce_base(&self.name) + self.tried.len() as u64;
                    let spend = build_tx(
                        v.env,
                        TxKind::FcSpend(method),
                        vec![(u.outpoint, signer), (d.outpoint, Signer::Pq(self.dep_key.clone()))],
                        vec![
                            TxOut::new(u.value, self.loot.address()),
                            TxOut::new(d.value - self.fee, self.dep_key.address()),
                        ],
                        self.fee,
                        nonce,
                    );
                    self.flows
                        .push(FcFlow::new(v, spend, u.outpoint, self.fee_key.clone(), self.fee, next, nonce));
                    break 'scan;
                }
            }
        }
        for f in &mut self.flows {
            f.step(v, out);
        }
    }
    fn outcomes(&self, v: &View) -> Vec<(String, String)> {
        let status = |s: ChallengeStatus| {
            self.flows
                .iter()
                .filter(|f| v.st.challenges.get(&f.txid).is_some_and(|r| r.status == s))
                .count()
        };
        vec![
            kv("attempts", self.flows.len()),
            kv("open", status(ChallengeStatus::Open)),
            kv("finalized", status(ChallengeStatus::Finalized)),
            kv("defeated", status(ChallengeStatus::Defeated)),
            kv("stolen", v.st.balance_of(&self.loot.address())),
        ]
    }
}

/// Leaks its derived key, then defends its UTXO with a fraud proof.
pub struct DepositBaiter {
    name: String,
    key: PreKey,
    addr: Address,
    value: u64,
    leak_at: u64,
    fee: u64,
    vault: PqKey,
    fee_key: PqKey,
    leaked: bool,
    flows: Vec<(Digest32, FcFlow)>,
}

impl Agent for DepositBaiter {
    fn name(&self) -> &str {
        &self.name
    }
    fn kind(&self) -> &'static str {
        "deposit-baiter"
    }
    fn genesis(&self) -> Vec<TxOut> {
        vec![
            TxOut::new(self.value, self.addr.clone()),
            TxOut::new(self.fee * 8, self.fee_key.address()),
        ]
    }
    fn addresses(&self) -> Vec<Address> {
        vec![self.addr.clone(), self.vault.address(), self.fee_key.address()]
    }
    fn act(&mut self, v: &View, out: &mut Vec<Submission>) {
        if !self.leaked && v.h >= self.leak_at && !v.era_at(v.h + 1).is_quantum() {
            out.push(Submission::Samaritan(self.key.pk.clone()));
            self.leaked = true;
        }
        let me = self.key.address(v.env);
        let open: Vec<_> = v
            .st
            .challenges
            .values()
            .filter(|r| r.status == ChallengeStatus::Open && r.utxo.address == me)
            .filter(|r| !self.flows.iter().any(|(t, _)| *t == r.txid))
            .cloned()
            .collect();
        for r in open {
            let Some(signer) = self.key.derivation(v.env) else { return };
            let nonce = nonce_base(&self.name) + self.flows.len() as u64;
            let proof = build_tx(
                v.env,
                TxKind::FraudProof { challenged: r.txid },
                vec![(r.utxo.outpoint, signer)],
                vec![TxOut::new(r.utxo.value - self.fee, self.vault.address())],
                self.fee,
                nonce,
            );
            let flow = FcFlow::new(v, proof, r.utxo.outpoint, self.fee_key.clone(), self.fee, v.h + 1, nonce);
            self.flows.push((r.txid, flow));
        }
        for (_, f) in &mut self.flows {
            f.step(v, out);
        }
    }
    fn outcomes(&self, v: &View) -> Vec<(String, String)> {
        let mut payout = 0;
        let mut miner_fee = 0;
        let mut defeated = 0;
        for (t, f) in &self.flows {
            if let Some(r) = v.st.challenges.get(t) {
                if r.status == ChallengeStatus::Defeated && r.defeated_by == Some(f.txid) {
                    defeated += 1;
                    payout += r.deposit_value - r.fee;
                    miner_fee += r.fee;
                }
            }
        }
        vec![
            kv("leaked", self.leaked),
            kv("challenges", self.flows.len()),
            kv("defeated", defeated),
            kv("deposit_payout", payout),
            kv("deposit_miner_fee", miner_fee),
            kv("recovered", v.st.balance_of(&self.vault.address())),
        ]
    }
}

pub struct CanaryHunter {
    name: String,
    at: u64,
    quantum: bool,
    claim: PqKey,
    attempts: u64,
    last: Option<u64>,
}

impl Agent for CanaryHunter {
    fn name(&self) -> &str {
        &self.name
    }
    fn kind(&self) -> &'static str {
        "canary-hunter"
    }
    fn genesis(&self) -> Vec<TxOut> {
        Vec::new()
    }
    fn addresses(&self) -> Vec<Address> {
        vec![self.claim.address()]
    }
    fn act(&mut self, v: &View, out: &mut Vec<Submission>) {
        if v.st.canary.killed_at.is_some() || v.h < self.at {
            return;
        }
        if self.last.is_some_and(|l| v.h < l + RETRY_BLOCKS) {
            return;
        }
        let cg = &v.env.canary_group;
        let sig: PreQuantumSignature = if self.quantum {
            match cg.quantum_invert(&v.env.canary.challenge_pk) {
                Ok(sk) => cg.prequantum_sign(&sk, &v.env.canary.nonce),
                Err(_) => return,
            }
        } else {
            // Without an inversion oracle the best it can do is guess a key.
            let guess = cg.scalar_reduce(&sha256_parts(&[b"sim/guess", self.name.as_bytes(), &v.h.to_be_bytes()]));
            cg.prequantum_sign(&guess, &v.env.canary.nonce)
        };
        self.attempts += 1;
        self.last = Some(v.h);
        out.push(Submission::Kill(CanaryKill {
            sig,
            claimant: self.claim.address(),
        }));
    }
    fn outcomes(&self, v: &View) -> Vec<(String, String)> {
        vec![
            kv("attempts", self.attempts),
            kv("killed", v.st.canary.claimant.as_ref() == Some(&self.claim.address())),
        ]
    }
}

/// Instantiate the agent described by `spec`.
pub fn build_agent(env: &ChainEnv, spec: &AgentSpec) -> Box<dyn Agent> {
    let pq = |name: &str, role: &str| PqKey::from_label(&format!("{name}/{role}"));
    match spec.clone() {
        AgentSpec::Miner {
            name,
            weight,
            funds,
            claims,
        } => Box::new(Miner {
            core: MinerCore::new(&format!("{name}/miner"), weight, claims, funds),
            name,
        }),
        AgentSpec::DelayAttacker {
            name,
            target,
            weight,
            funds,
            start,
        } => Box::new(DelayAttacker {
            core: MinerCore::new(&format!("{name}/miner"), weight, true, funds),
            name,
            target,
            start,
        }),
        AgentSpec::FcUser {
            name,
            value,
            method,
            start,
            fee,
            leaked,
            lost: _,
        } => {
            let method: FcMethod = method.into();
            let key = pre_key(env, &name, method == FcMethod::Derived);
            let inner = FcUser {
                vault: pq(&name, "vault"),
                fee_key: pq(&name, "fee"),
                dep_key: pq(&name, "deposit"),
                key,
                value,
                method,
                start,
                fee,
                leaked,
                flow: None,
                name,
            };
            Box::new(FcUserAgent {
                address: inner.address(env),
                deposit: inner.deposit(env),
                inner,
            })
        }
        AgentSpec::DirectSpender { name, value, at, fee } => {
            let key = pre_key(env, &name, false);
            Box::new(DirectSpender {
            addr: key.address(env),
            key,
            vault: pq(&name, "vault"),
            value,
            at,
            fee,
            sent: None,
            name,
        })
        }
        AgentSpec::FrontRunner {
            name,
            bump,
            reckless,
            funds,
        } => Box::new(FrontRunner {
            loot: pq(&name, "loot"),
            fee_key: pq(&name, "fee"),
            bump,
            reckless,
            funds,
            seen: BTreeSet::new(),
            attempts: 0,
            submitted: 0,
            declined: 0,
            flows: Vec::new(),
            name,
        }),
        AgentSpec::LfcUser {
            name,
            value,
            start,
            alpha,
            derived,
        } => {
            let key = pre_key(env, &name, derived);
            Box::new(LfcUser {
            addr: key.address(env),
            key,
            vault: pq(&name, "vault"),
            value,
            start,
            alpha,
            stage: LfcStage::Waiting,
            reveal: None,
            attempts: 0,
            blocked_by_foreign_lock: 0,
            name,
        })
        }
        AgentSpec::LfcSpammer {
            name,
            value,
            count,
            start,
            lfc_offset,
            derived,
        } => {
            let keys: Vec<PreKey> = (0..count)
                .map(|i| pre_key(env, &format!("{name}/{i}"), derived))
                .collect();
            Box::new(LfcSpammer {
            addrs: keys.iter().map(|k| k.address(env)).collect(),
            keys,
            value,
            start,
            lfc_offset,
            sent: false,
            name,
        })
        }
        AgentSpec::Holder {
            name,
            value,
            derived,
            leaked,
        } => {
            let key = pre_key(env, &name, derived);
            Box::new(Holder {
                address: if leaked {
                    Address::PlainPk(key.pk.clone())
                } else {
                    key.address(env)
                },
                value,
                name,
            })
        }
        AgentSpec::LootThief {
            name,
            target,
            start,
            quantum,
            fee,
            funds,
        } => Box::new(LootThief {
            loot: pq(&name, "loot"),
            fee_key: pq(&name, "fee"),
            dep_key: pq(&name, "deposit"),
            target,
            start,
            quantum,
            fee,
            funds,
            tried: BTreeSet::new(),
            flows: Vec::new(),
            skipped_deposit: 0,
            name,
        }),
        AgentSpec::DepositBaiter {
            name,
            value,
            leak_at,
            fee,
        } => {
            let key = PreKey::derived(env, &name, key_path(1));
            Box::new(DepositBaiter {
            addr: key.address(env),
            key,
            vault: pq(&name, "vault"),
            fee_key: pq(&name, "fee"),
            value,
            leak_at,
            fee,
            leaked: false,
            flows: Vec::new(),
            name,
        })
        }
        AgentSpec::CanaryHunter { name, at, quantum } => Box::new(CanaryHunter {
            claim: pq(&name, "bounty"),
            at,
            quantum,
            attempts: 0,
            last: None,
            name,
        }),
    }
}
