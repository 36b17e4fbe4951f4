//! FawkesCoin: commit, wait, reveal.
//!
//! A commitment is a transaction with payload `H(tx)` paid from post-quantum
//! inputs. After the wait, `tx` itself is revealed:
//!
//! * hashed: signed by a key that was not public at the commitment height;
//! * derived: carries `(xsk_par, P)` with `PK(Der(xsk_par, P)) = pk`, and
//!   `xsk_par` must not be banned by the registry at the commitment height;
//! * naked (unrestrictive and permissive modes): signed, with a deposit;
//! * lost (permissive mode): unsigned, with a deposit.
//!
//! Naked and lost reveals open a challenge record. Until its deadline the
//! owner may defeat it with a fraud proof, a derived spend of the same UTXO;
//! the challenged fee then goes to the miner that included the reveal and the
//! rest of the deposit to the fraud proof's first output address.

use crate::consensus::ctx::{reject, BlockCtx, RuleResult};
use crate::consensus::epoch::EpochPosition;
use crate::consensus::{rules, Event};
use crate::hash::Digest32;
use crate::ledger::{Address, FcMethod, OutPoint, Transaction, TxId, TxOut, Utxo, Witness};
use crate::params::FcMode;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FcCommitment {
    pub payload: Digest32,
    pub commit_txid: TxId,
    pub height: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChallengeStatus {
    Open,
    Finalized,
    Defeated,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeRecord {
    pub txid: TxId,
    pub method: FcMethod,
    pub utxo: Utxo,
    pub deposit_outpoints: Vec<OutPoint>,
    pub deposit_value: u64,
    pub fee: u64,
    pub outputs: Vec<TxOut>,
    /// Miner that included the reveal; receives the fee on resolution.
    pub miner: Address,
    pub revealed_height: u64,
    pub challenge_end: u64,
    pub status: ChallengeStatus,
    pub defeated_by: Option<TxId>,
}

impl ChallengeRecord {
    pub fn held(&self) -> u128 {
        self.utxo.value as u128 + self.deposit_value as u128
    }
}

impl BlockCtx<'_> {
    pub(crate) fn apply_fc_commit(&mut self, tx: &Transaction) -> RuleResult {
        let crate::ledger::TxKind::FcCommit { payload } = tx.kind else {
            unreachable!()
        };
        if !self.era.is_quantum() {
            return reject(rules::FC_INACTIVE, "commitments open with the quantum era");
        }
        let window = self.env.params.epochs.fc_commit_window();
        match self.epoch() {
            EpochPosition::Fc(off) if off < window => {}
            pos => return reject(rules::FC_COMMIT_WINDOW, format!("{pos:?}")),
        }
        let g = self.env.group.clone();
        let res = self.resolve(tx)?;
        let sighash = tx.sighash(&g);
        for (u, i) in res.utxos.iter().zip(&tx.inputs) {
            if !matches!(u.address, Address::PostQuantum(_)) {
                return reject(rules::FC_PREQUANTUM_FEE, "a post-quantum UTXO is required");
            }
            self.check_pq(u, &i.witness, &sighash)?;
        }
        self.check_value(res.total(), tx)?;
        self.spend_all(&res);
        let txid = tx.txid(&g);
        self.create_outputs(txid, &tx.outputs);
        self.non_lfc_fees += tx.fee;
        self.st.fc_commits.entry(payload).or_default().push_back(FcCommitment {
            payload,
            commit_txid: txid,
            height: self.h,
        });
        self.events.push(Event::FcCommitted { payload });
        Ok(())
    }

    /// Earliest commitment to `txid` old enough for `u`.
    fn aged_commitment(&self, txid: &TxId, u: &Utxo) -> RuleResult<FcCommitment> {
        let wait = self.env.params.fc.effective_wait(u.wait_blocks);
        let Some(list) = self.st.fc_commits.get(txid) else {
            return reject(rules::FC_COMMITMENT_MISSING, "no commitment to this transaction");
        };
        match list.iter().find(|c| self.h >= c.height + wait) {
            Some(c) => Ok(c.clone()),
            None => reject(
                rules::FC_COMMITMENT_YOUNG,
                format!("oldest commitment at {}, wait {}", list[0].height, wait),
            ),
        }
    }

    fn check_not_banned(&self, xsk: &crate::hd::ExtendedSecretKey, commit_height: u64) -> RuleResult {
        if self.st.registry.is_banned(&self.env.group, xsk, commit_height) {
            return reject(rules::REGISTRY_BANNED, "parent key is in a published key set");
        }
        Ok(())
    }

    fn check_unrestricted(&self, u: &Utxo, method: FcMethod) -> RuleResult {
        let fc = &self.env.params.fc;
        let allowed = match method {
            FcMethod::Naked => fc.mode != FcMode::Restrictive,
            FcMethod::Lost => fc.mode == FcMode::Permissive,
            _ => true,
        };
        if !allowed {
            return reject(rules::FC_MODE, format!("{method:?} spend under {:?} mode", fc.mode));
        }
        if self
            .st
            .first_seen(&u.address)
            .is_some_and(|h| h < fc.legacy_threshold_height)
        {
            return reject(rules::FC_LEGACY_RESTRICTIVE, "address predates the legacy threshold");
        }
        Ok(())
    }

    pub(crate) fn apply_fc_spend(&mut self, tx: &Transaction, method: FcMethod) -> RuleResult {
        if !self.era.is_quantum() {
            return reject(rules::FC_INACTIVE, "reveals open with the quantum era");
        }
        let g = self.env.group.clone();
        let res = self.resolve(tx)?;
        let sighash = tx.sighash(&g);
        let ui = self.split_single_prequantum(tx, &res, &sighash)?;
        let u = res.utxos[ui].clone();
        self.check_unlocked(&u)?;
        let txid = tx.txid(&g);
        let commitment = self.aged_commitment(&txid, &u)?;
        self.check_value(res.total(), tx)?;
        let witness = &tx.inputs[ui].witness;
        match method {
            FcMethod::Hashed => {
                let pk = self.check_signed(&u, witness, &sighash)?;
                if self.st.leaked_at(&g, &pk).is_some_and(|l| l <= commitment.height) {
                    return reject(rules::FC_KEY_LEAKED, "public key appeared before the commitment");
                }
                self.spend_all(&res);
                self.leak(&pk);
                self.create_outputs(txid, &tx.outputs);
                self.non_lfc_fees += tx.fee;
            }
            FcMethod::Derived => {
                let Witness::Derivation { xsk, path } = witness else {
                    return reject(rules::BAD_WITNESS, "derived spend needs (xsk, P)");
                };
                let pk = self.check_derivation(&u, xsk, path)?;
                self.check_not_banned(xsk, commitment.height)?;
                self.spend_all(&res);
                self.leak(&pk);
                self.reveal_xsk(xsk);
                self.create_outputs(txid, &tx.outputs);
                self.non_lfc_fees += tx.fee;
            }
            FcMethod::Naked | FcMethod::Lost => {
                self.check_unrestricted(&u, method)?;
                let revealed = if method == FcMethod::Naked {
                    Some(self.check_signed(&u, witness, &sighash)?)
                } else {
                    if !matches!(witness, Witness::Unsigned) {
                        return reject(rules::TX_SHAPE, "lost spend carries no signature");
                    }
                    if self.st.address_leaked_at(&g, &u.address).is_none() {
                        return reject(rules::FC_LOST_NOT_LEAKED, "public key never appeared");
                    }
                    None
                };
                let deposit: u128 = res
                    .utxos
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != ui)
                    .map(|(_, d)| d.value as u128)
                    .sum();
                let need = self.env.params.fc.min_deposit(u.value, tx.fee);
                if deposit < need {
                    return reject(rules::DEPOSIT_INSUFFICIENT, format!("deposit {deposit}, need {need}"));
                }
                self.spend_all(&res);
                if let Some(pk) = revealed {
                    self.leak(&pk);
                }
                let end = self.h + self.env.params.fc.challenge_blocks;
                let record = ChallengeRecord {
                    txid,
                    method,
                    utxo: u.clone(),
                    deposit_outpoints: res
                        .utxos
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != ui)
                        .map(|(_, d)| d.outpoint)
                        .collect(),
                    deposit_value: deposit as u64,
                    fee: tx.fee,
                    outputs: tx.outputs.clone(),
                    miner: self.miner.clone(),
                    revealed_height: self.h,
                    challenge_end: end,
                    status: ChallengeStatus::Open,
                    defeated_by: None,
                };
                self.st.supply.challenge_held += record.held();
                self.st.challenges.insert(txid, record);
                self.st.challenge_queue.insert((end, txid));
                self.events.push(Event::ChallengeOpened { txid, end });
            }
        }
        self.events.push(Event::FcSpent {
            txid,
            method,
            utxo: u.outpoint,
        });
        Ok(())
    }

    pub(crate) fn apply_fraud_proof(&mut self, tx: &Transaction, challenged: &TxId) -> RuleResult {
        if !self.era.is_quantum() {
            return reject(rules::FC_INACTIVE, "fraud proofs open with the quantum era");
        }
        let g = self.env.group.clone();
        let Some(record) = self.st.challenges.get(challenged).cloned() else {
            return reject(rules::FRAUD_NO_RECORD, "no challenge record");
        };
        if record.status != ChallengeStatus::Open {
            return reject(rules::FRAUD_RECORD_CLOSED, format!("{:?}", record.status));
        }
        if self.h > record.challenge_end {
            return reject(rules::FRAUD_LATE, format!("deadline {}", record.challenge_end));
        }
        let Some(ui) = tx.inputs.iter().position(|i| i.prevout == record.utxo.outpoint) else {
            return reject(rules::FRAUD_WRONG_UTXO, "fraud proof must spend the challenged UTXO");
        };
        let Some(first) = tx.outputs.first() else {
            return reject(rules::TX_SHAPE, "fraud proof needs an output for the deposit");
        };
        let payout_address = first.address.clone();
        let sighash = tx.sighash(&g);
        let mut others = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for (i, input) in tx.inputs.iter().enumerate() {
            if !seen.insert(input.prevout) {
                return reject(rules::TX_SHAPE, "duplicate input");
            }
            if i == ui {
                continue;
            }
            let d = self.resolve_input(&input.prevout)?;
            self.check_pq(&d, &input.witness, &sighash)?;
            others.push(d);
        }
        let u = record.utxo.clone();
        let Witness::Derivation { xsk, path } = &tx.inputs[ui].witness else {
            return reject(rules::BAD_WITNESS, "fraud proof needs (xsk, P)");
        };
        let pk = self.check_derivation(&u, xsk, path)?;
        let txid = tx.txid(&g);
        let commitment = self.aged_commitment(&txid, &u)?;
        self.check_not_banned(xsk, commitment.height)?;
        let inputs = u.value as u128 + others.iter().map(|d| d.value as u128).sum::<u128>();
        self.check_value(inputs, tx)?;

        for d in &others {
            self.st.remove_utxo(&d.outpoint);
        }
        self.st.supply.challenge_held -= record.held();
        self.st.challenge_queue.remove(&(record.challenge_end, record.txid));
        self.leak(&pk);
        self.reveal_xsk(xsk);
        self.create_outputs(txid, &tx.outputs);
        self.non_lfc_fees += tx.fee;
        let payout = record.deposit_value - record.fee;
        self.settle(record.fee, &record.miner);
        self.settle(payout, &payout_address);
        let mut closed = record.clone();
        closed.status = ChallengeStatus::Defeated;
        closed.defeated_by = Some(txid);
        self.st.challenges.insert(record.txid, closed);
        self.events.push(Event::ChallengeDefeated {
            txid: record.txid,
            by: txid,
            payout,
            miner_fee: record.fee,
        });
        Ok(())
    }

    /// Records whose deadline is this block pay out as revealed.
    pub(crate) fn finalize_challenges(&mut self) {
        let due: Vec<(u64, TxId)> = self
            .st
            .challenge_queue
            .range(..=(self.h, [0xff; 32]))
            .cloned()
            .collect();
        for key in due {
            self.st.challenge_queue.remove(&key);
            let mut record = self.st.challenges[&key.1].clone();
            self.st.supply.challenge_held -= record.held();
            self.create_outputs(record.txid, &record.outputs);
            self.settle(record.fee, &record.miner.clone());
            record.status = ChallengeStatus::Finalized;
            self.events.push(Event::ChallengeFinalized { txid: record.txid });
            self.st.challenges.insert(key.1, record);
        }
    }
}
