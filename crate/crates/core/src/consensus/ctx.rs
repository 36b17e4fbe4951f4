//! Per-block rule application.
//!
//! A [`BlockCtx`] holds a working copy of the chain state while the items of
//! one block are applied in consensus order:
//!
//! 1. canary kill, samaritan reports, registry messages;
//! 2. transactions;
//! 3. lifted commitment records, then miner claims;
//! 4. sweeps: lifted expiries, challenge finalization, epoch end;
//! 5. coinbase and the balance check.
//!
//! Every item either applies completely or returns a [`RuleViolation`]; the
//! builder relies on this by cloning the context before each attempt.

use crate::group::Point;
use crate::hash::Digest32;
use crate::hd::{derive, DerivationPath, ExtendedSecretKey};
use crate::ledger::block::{coinbase_txid, settlement_txid};
use crate::ledger::{Address, CanaryKill, ChainState, OutPoint, RegistryMessage, Transaction, TxId, TxKind, TxOut, Utxo, Witness};
use crate::params::BountyFunding;

use super::epoch::EpochPosition;
use super::era::EraState;
use super::{rules, ChainEnv, Event, RuleViolation};

pub type RuleResult<T = ()> = Result<T, RuleViolation>;

pub(crate) fn reject<T>(rule: &'static str, detail: impl Into<String>) -> RuleResult<T> {
    Err(RuleViolation {
        rule,
        detail: detail.into(),
    })
}

#[derive(Debug, Clone)]
pub struct BlockCtx<'e> {
    pub env: &'e ChainEnv,
    pub st: ChainState,
    pub h: u64,
    pub parent: Digest32,
    pub miner: Address,
    pub era: EraState,
    settle_index: u32,
    pub non_lfc_fees: u64,
    /// Revealer halves of lifted fees, paid in this coinbase.
    pub revealer_shares: u64,
    pub escrow_needed: u64,
    pub escrow_funded: u64,
    pub events: Vec<Event>,
    samaritan_count: usize,
    swept: bool,
}

/// Inputs of a transaction resolved against the UTXO set.
pub(crate) struct Resolved {
    pub utxos: Vec<Utxo>,
}

impl Resolved {
    pub fn total(&self) -> u128 {
        self.utxos.iter().map(|u| u.value as u128).sum()
    }
}

impl<'e> BlockCtx<'e> {
    pub fn begin(env: &'e ChainEnv, st: &ChainState, miner: Address) -> Self {
        let h = st.next_height();
        let mut st = st.clone();
        let countdown = env.params.era.countdown_blocks;
        let era = EraState::at(st.canary.killed_at, countdown, h);
        let era_start = st.canary.killed_at.map(|k| k + countdown);
        st.epochs.begin_block(&env.params.epochs, era_start, h);
        let mut events = Vec::new();
        if era_start == Some(h) {
            events.push(Event::EraStarted);
        }
        Self {
            env,
            parent: st.tip_hash,
            st,
            h,
            miner,
            era,
            settle_index: 0,
            non_lfc_fees: 0,
            revealer_shares: 0,
            escrow_needed: 0,
            escrow_funded: 0,
            events,
            samaritan_count: 0,
            swept: false,
        }
    }

    pub fn epoch(&self) -> EpochPosition {
        self.st.epochs.position(self.h)
    }

    // ---- value plumbing ----

    /// Pay a protocol-created output.
    pub(crate) fn settle(&mut self, value: u64, address: &Address) {
        if value == 0 {
            return;
        }
        let outpoint = OutPoint::new(settlement_txid(self.h, &self.parent), self.settle_index);
        self.settle_index += 1;
        self.create_output(outpoint, &TxOut::new(value, address.clone()), false);
    }

    pub(crate) fn create_output(&mut self, outpoint: OutPoint, out: &TxOut, coinbase: bool) {
        match &out.address {
            Address::Burn => {
                self.st.supply.burned += out.value as u128;
                self.st.supply.burn_pool += out.value as u128;
            }
            a => {
                if let Address::PlainPk(pk) = a {
                    let pk = pk.clone();
                    self.leak(&pk);
                }
                self.st.insert_utxo(Utxo {
                    outpoint,
                    value: out.value,
                    address: a.clone(),
                    created_height: self.h,
                    wait_blocks: out.wait_blocks,
                    coinbase,
                });
            }
        }
    }

    pub(crate) fn create_outputs(&mut self, txid: TxId, outputs: &[TxOut]) {
        for (i, o) in outputs.iter().enumerate() {
            self.create_output(OutPoint::new(txid, i as u32), o, false);
        }
    }

    pub(crate) fn leak(&mut self, pk: &Point) {
        let g = &self.env.group;
        self.st.mark_leaked(g, pk, self.h);
    }

    /// Publish `xsk`: materialize its key set and leak every key in it.
    pub(crate) fn reveal_xsk(&mut self, xsk: &ExtendedSecretKey) {
        let g = self.env.group.clone();
        if let Some(keys) = self
            .st
            .registry
            .materialize(&g, xsk, &self.env.params.ledger.regular_paths, self.h)
        {
            for k in &keys {
                let pk = g.pk_ec(&k.sk);
                self.leak(&pk);
            }
            self.events.push(Event::RegistryMaterialized {
                key_id: xsk.id(&g),
                keys: keys.len(),
            });
        }
    }

    // ---- input checks ----

    pub(crate) fn resolve_input(&self, op: &OutPoint) -> RuleResult<Utxo> {
        let Some(u) = self.st.utxo(op) else {
            return reject(rules::MISSING_INPUT, format!("{op:?}"));
        };
        if u.coinbase && self.h < u.created_height + self.env.params.ledger.coinbase_maturity {
            return reject(rules::COINBASE_IMMATURE, format!("{op:?} created at {}", u.created_height));
        }
        Ok(u.clone())
    }

    pub(crate) fn resolve(&self, tx: &Transaction) -> RuleResult<Resolved> {
        if tx.inputs.is_empty() {
            return reject(rules::TX_SHAPE, "no inputs");
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut utxos = Vec::with_capacity(tx.inputs.len());
        for i in &tx.inputs {
            if !seen.insert(i.prevout) {
                return reject(rules::TX_SHAPE, "duplicate input");
            }
            utxos.push(self.resolve_input(&i.prevout)?);
        }
        Ok(Resolved { utxos })
    }

    pub(crate) fn check_unlocked(&self, u: &Utxo) -> RuleResult {
        if self.st.lfc_locks.contains_key(&u.outpoint) {
            return reject(rules::UTXO_LOCKED, format!("{:?}", u.outpoint));
        }
        Ok(())
    }

    pub(crate) fn check_pq(&self, u: &Utxo, w: &Witness, sighash: &Digest32) -> RuleResult {
        match (&u.address, w) {
            (Address::PostQuantum(a), Witness::PostQuantum { proof }) => {
                use crate::lifted::OwfBackend;
                if self.env.pq.verify(a, sighash, proof) {
                    Ok(())
                } else {
                    reject(rules::BAD_WITNESS, "post-quantum proof")
                }
            }
            (Address::PostQuantum(_), _) => reject(rules::BAD_WITNESS, "post-quantum input needs a proof"),
            _ => reject(rules::TX_SHAPE, "expected a post-quantum input"),
        }
    }

    /// Valid pre-quantum signature by the key behind `u`. Returns the key.
    pub(crate) fn check_signed(&self, u: &Utxo, w: &Witness, sighash: &Digest32) -> RuleResult<Point> {
        let g = &self.env.group;
        match w {
            Witness::PreQuantum { pk, sig } => {
                if !u.address.matches_pk(g, pk) {
                    return reject(rules::BAD_WITNESS, "key does not match address");
                }
                if !g.prequantum_verify(pk, sighash, sig) {
                    return reject(rules::BAD_SIGNATURE, format!("{:?}", u.outpoint));
                }
                Ok(pk.clone())
            }
            _ => reject(rules::BAD_WITNESS, "expected a pre-quantum signature"),
        }
    }

    /// `PK(Der(xsk, P))` controls `u`. Returns the derived key.
    pub(crate) fn check_derivation(
        &self,
        u: &Utxo,
        xsk: &ExtendedSecretKey,
        path: &DerivationPath,
    ) -> RuleResult<Point> {
        let g = &self.env.group;
        let pk = g.pk_ec(&derive(g, xsk, path).sk);
        if !u.address.matches_pk(g, &pk) {
            return reject(rules::FC_DERIVATION_MISMATCH, format!("{:?} via {path}", u.outpoint));
        }
        Ok(pk)
    }

    pub(crate) fn check_value(&self, inputs: u128, tx: &Transaction) -> RuleResult {
        if inputs != tx.output_value() + tx.fee as u128 {
            return reject(
                rules::VALUE_MISMATCH,
                format!("inputs {inputs}, outputs {} + fee {}", tx.output_value(), tx.fee),
            );
        }
        Ok(())
    }

    /// Split inputs into the single pre-quantum input and the rest, checking
    /// the rest carry post-quantum proofs.
    pub(crate) fn split_single_prequantum(
        &self,
        tx: &Transaction,
        res: &Resolved,
        sighash: &Digest32,
    ) -> RuleResult<usize> {
        let pre: Vec<usize> = res
            .utxos
            .iter()
            .enumerate()
            .filter(|(_, u)| u.address.is_pre_quantum())
            .map(|(i, _)| i)
            .collect();
        if pre.len() != 1 {
            return reject(rules::TX_SHAPE, format!("{} pre-quantum inputs, expected 1", pre.len()));
        }
        for (i, u) in res.utxos.iter().enumerate() {
            if i != pre[0] {
                self.check_pq(u, &tx.inputs[i].witness, sighash)?;
            }
        }
        Ok(pre[0])
    }

    pub(crate) fn spend_all(&mut self, res: &Resolved) {
        for u in &res.utxos {
            self.st.remove_utxo(&u.outpoint);
        }
    }

    // ---- items ----

    pub fn apply_canary_kill(&mut self, kill: &CanaryKill) -> RuleResult {
        if self.st.canary.killed_at.is_some() {
            return reject(rules::CANARY_DEAD, "canary already killed");
        }
        if !self.env.canary.verify(&self.env.canary_group, &kill.sig) {
            return reject(rules::CANARY_BAD_SOLUTION, "signature does not verify");
        }
        let bounty = self.env.canary.bounty;
        let paid = match self.env.params.era.bounty_funding {
            BountyFunding::Minted => {
                self.st.supply.minted += bounty as u128;
                bounty
            }
            BountyFunding::BurnPool => {
                let amount = (bounty as u128).min(self.st.supply.burn_pool) as u64;
                self.st.supply.burn_pool -= amount as u128;
                self.st.supply.burned -= amount as u128;
                amount
            }
        };
        self.settle(paid, &kill.claimant);
        self.st.canary.killed_at = Some(self.h);
        self.st.canary.claimant = Some(kill.claimant.clone());
        self.events.push(Event::CanaryKilled {
            claimant: kill.claimant.clone(),
            bounty: paid,
        });
        Ok(())
    }

    pub fn apply_samaritan(&mut self, pk: &Point) -> RuleResult {
        if self.era.is_quantum() {
            return reject(rules::SAMARITAN_ERA, "reports close when the quantum era starts");
        }
        let g = &self.env.group;
        let used = (self.samaritan_count + 1) * g.point_len();
        if used > self.env.params.ledger.samaritan_budget_bytes {
            return reject(rules::SAMARITAN_BUDGET, format!("{used} bytes"));
        }
        if self.st.is_leaked(g, pk) {
            return reject(rules::SAMARITAN_LEAKED, "key already public");
        }
        self.leak(pk);
        self.samaritan_count += 1;
        Ok(())
    }

    pub fn apply_registry(&mut self, msg: &RegistryMessage) -> RuleResult {
        match msg {
            RegistryMessage::Declare { key_id, paths } => self
                .st
                .registry
                .declare(*key_id, paths, self.env.params.ledger.registry_path_bound)
                .or_else(|e| reject(rules::REGISTRY_PATH_BOUND, e.to_string())),
            RegistryMessage::Reveal { xsk } => {
                if self.st.registry.entry(&xsk.id(&self.env.group)).included_height.is_some() {
                    return reject(rules::REGISTRY_DUPLICATE, "already materialized");
                }
                self.reveal_xsk(xsk);
                Ok(())
            }
        }
    }

    pub fn apply_tx(&mut self, tx: &Transaction) -> RuleResult {
        match &tx.kind {
            TxKind::Transfer => self.apply_transfer(tx),
            TxKind::EscrowFunding => self.apply_escrow_funding(tx),
            TxKind::FcCommit { .. } => self.apply_fc_commit(tx),
            TxKind::FcSpend(m) => self.apply_fc_spend(tx, *m),
            TxKind::FraudProof { challenged } => self.apply_fraud_proof(tx, challenged),
            TxKind::LfcSpend => self.apply_lfc_spend(tx),
        }
    }

    fn apply_transfer(&mut self, tx: &Transaction) -> RuleResult {
        let g = self.env.group.clone();
        let res = self.resolve(tx)?;
        let sighash = tx.sighash(&g);
        let mut revealed = Vec::new();
        for (u, i) in res.utxos.iter().zip(&tx.inputs) {
            self.check_unlocked(u)?;
            if u.address.is_pre_quantum() {
                if self.era.is_quantum() {
                    return reject(rules::ERA_DIRECT_SPEND, format!("{:?}", u.outpoint));
                }
                revealed.push(self.check_signed(u, &i.witness, &sighash)?);
            } else {
                self.check_pq(u, &i.witness, &sighash)?;
            }
        }
        self.check_value(res.total(), tx)?;
        self.spend_all(&res);
        for pk in &revealed {
            self.leak(pk);
        }
        self.create_outputs(tx.txid(&g), &tx.outputs);
        self.non_lfc_fees += tx.fee;
        Ok(())
    }

    fn apply_escrow_funding(&mut self, tx: &Transaction) -> RuleResult {
        let g = self.env.group.clone();
        let res = self.resolve(tx)?;
        let sighash = tx.sighash(&g);
        for (u, i) in res.utxos.iter().zip(&tx.inputs) {
            self.check_pq(u, &i.witness, &sighash)?;
        }
        let spent = tx.output_value() + tx.fee as u128;
        if res.total() < spent {
            return reject(rules::VALUE_MISMATCH, "escrow funding spends more than its inputs");
        }
        let escrow = (res.total() - spent) as u64;
        self.spend_all(&res);
        self.create_outputs(tx.txid(&g), &tx.outputs);
        self.non_lfc_fees += tx.fee;
        self.escrow_funded += escrow;
        self.st.supply.escrow_held += escrow as u128;
        Ok(())
    }

    // ---- end of block ----

    /// Deadline sweeps in fixed order. Idempotent.
    pub fn sweep(&mut self) {
        if self.swept {
            return;
        }
        self.swept = true;
        self.sweep_lfc_expiries();
        self.finalize_challenges();
        self.end_epoch();
    }

    /// Coinbase escrow contribution and the expected coinbase outputs.
    pub fn expected_coinbase(&self) -> RuleResult<Vec<TxOut>> {
        let lp = &self.env.params.lfc;
        let guaranteed = self.env.params.ledger.block_reward + self.non_lfc_fees;
        let from_coinbase = self.escrow_needed.min(guaranteed);
        let shortfall = self.escrow_needed - from_coinbase;
        if self.escrow_funded < shortfall {
            return reject(
                rules::LFC_FINE_COVERAGE,
                format!("fines need {} beyond the coinbase, {} funded", shortfall, self.escrow_funded),
            );
        }
        if self.escrow_funded > shortfall {
            return reject(rules::ESCROW_EXCESS, format!("{} funded, {} needed", self.escrow_funded, shortfall));
        }
        let mut out = Vec::new();
        let main = guaranteed - from_coinbase + self.revealer_shares;
        if main > 0 {
            out.push(TxOut::new(main, self.miner.clone()));
        }
        if let Some(src) = self.h.checked_sub(lp.fee_aggregation_delay) {
            if let Some((miner, amount)) = self.st.pending_shares.get(&src) {
                out.push(TxOut::new(*amount, miner.clone()));
            }
        }
        Ok(out)
    }

    /// Escrow still needed beyond what the coinbase can cover.
    pub fn escrow_shortfall(&self) -> u64 {
        let guaranteed = self.env.params.ledger.block_reward + self.non_lfc_fees;
        self.escrow_needed.saturating_sub(guaranteed)
    }

    /// Close the block. `declared` is checked against the expected coinbase
    /// when given; otherwise the expected one is used.
    pub fn finish(mut self, declared: Option<&[TxOut]>) -> RuleResult<(ChainState, Vec<TxOut>, Vec<Event>)> {
        self.sweep();
        let expected = self.expected_coinbase()?;
        if let Some(d) = declared {
            if d != expected.as_slice() {
                let rule = if d.first() == expected.first() {
                    rules::LFC_ADDENDUM_MISMATCH
                } else {
                    rules::COINBASE_MISMATCH
                };
                return reject(rule, format!("declared {d:?}, expected {expected:?}"));
            }
        }
        let guaranteed = self.env.params.ledger.block_reward + self.non_lfc_fees;
        let from_coinbase = self.escrow_needed.min(guaranteed);
        self.st.supply.escrow_held += from_coinbase as u128;
        self.st.supply.minted += self.env.params.ledger.block_reward as u128;
        if let Some(src) = self.h.checked_sub(self.env.params.lfc.fee_aggregation_delay) {
            if let Some((miner, amount)) = self.st.pending_shares.remove(&src) {
                self.st.supply.shares_held -= amount as u128;
                self.events.push(Event::FeeShare { miner, amount });
            }
        }
        self.events.push(Event::Coinbase {
            miner: self.miner.clone(),
            income: guaranteed + self.revealer_shares,
            escrow: from_coinbase,
        });
        let cb = coinbase_txid(self.h, &self.parent);
        for (i, o) in expected.iter().enumerate() {
            self.create_output(OutPoint::new(cb, i as u32), o, true);
        }
        if !self.st.supply.balanced() {
            let (l, r) = self.st.supply.balance();
            return reject(rules::CONSERVATION, format!("held {l} != issued {r}"));
        }
        Ok((self.st, expected, self.events))
    }
}
