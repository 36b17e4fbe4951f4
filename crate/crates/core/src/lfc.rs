//! Lifted FawkesCoin.
//!
//! The owner gives a miner `(H(tx), sigma, u, alpha)` where `sigma` is a lifted
//! signature on `(H(tx), alpha)`. The miner posts `(H(tx), H(u), alpha)` and
//! escrows the delay fine, which locks `u`. Then:
//!
//! * ages `100..=200`: the owner reveals `tx` with fee exactly `alpha`; the fee
//!   is split between the committing and the revealing miner;
//! * from age `201`: the committing miner may post `sigma` and take `u`;
//! * if neither happens by the claim deadline, the escrowed fine goes to the
//!   address of `u` and the lock is dropped.
//!
//! Committer fee shares are paid by the block `fee_aggregation_delay` after
//! the commitment, as a separate coinbase output.

use crate::consensus::ctx::{reject, BlockCtx, RuleResult};
use crate::consensus::epoch::{EpochEnd, EpochKind, EpochPosition};
use crate::consensus::{rules, ChainEnv, Event};
use crate::encoding::{DecodeError, Reader, Writer};
use crate::group::Group;
use crate::hash::{sha256_parts, Digest32};
use crate::hd::ExtendedSecretKey;
use crate::ledger::{Address, ChainState, LfcClaim, LfcRecord, OutPoint, Transaction, Utxo, Witness};
use crate::lifted::{address_of, LiftedSignature};
use crate::params::{ClaimDeadline, FineMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LfcState {
    Locked,
    Revealed,
    ClaimedByMiner,
    ExpiredFined,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfcCommitment {
    pub id: Digest32,
    pub record: LfcRecord,
    pub utxo: OutPoint,
    pub value: u64,
    pub address: Address,
    /// Miner of the block that posted the record.
    pub miner: Address,
    pub height: u64,
    pub escrow: u64,
    pub state: LfcState,
    pub resolved_height: Option<u64>,
}

/// Bytes the proof of ownership signs: the pair `(H(tx), alpha)`.
pub fn ownership_message(tx_hash: &Digest32, alpha: u64) -> Vec<u8> {
    let mut w = Writer::new();
    w.fixed(b"lfc-ownership").fixed(tx_hash).u64(alpha);
    w.finish()
}

pub fn commitment_id(height: u64, record: &LfcRecord) -> Digest32 {
    let mut w = Writer::new();
    record.encode_into(&mut w);
    sha256_parts(&[b"lfc-commitment", &height.to_be_bytes(), w.as_slice()])
}

/// Mempool message from owner to miner.
///
/// Layout: `H(tx)(32) || txid(32) || be32(index) || be64(alpha) || sigma`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LfcMessage {
    pub tx_hash: Digest32,
    pub sig: LiftedSignature,
    pub utxo: OutPoint,
    pub alpha: u64,
}

impl LfcMessage {
    pub fn record(&self) -> LfcRecord {
        LfcRecord {
            tx_hash: self.tx_hash,
            utxo_hash: self.utxo.hash(),
            alpha: self.alpha,
        }
    }

    pub fn encode(&self, group: &Group) -> Vec<u8> {
        let mut w = Writer::new();
        w.fixed(&self.tx_hash);
        self.utxo.encode_into(&mut w);
        w.u64(self.alpha);
        self.sig.encode_into(group, &mut w);
        w.finish()
    }

    pub fn decode(group: &Group, bytes: &[u8]) -> Result<Self, DecodeError> {
        let mut r = Reader::new(bytes);
        let tx_hash = r.array()?;
        let utxo = OutPoint::decode_from(&mut r)?;
        let alpha = r.u64()?;
        let sig = LiftedSignature::decode_from(group, &mut r)?;
        r.finish()?;
        Ok(Self {
            tx_hash,
            sig,
            utxo,
            alpha,
        })
    }
}

/// Check `sigma` proves ownership of `u` over `(H(tx), alpha)`. A key-lifted
/// proof is refused when the key behind `u` was public at or before
/// `leak_cutoff`. Returns the master key a seed-lifted proof exposes.
pub fn verify_ownership(
    env: &ChainEnv,
    st: &ChainState,
    u: &Utxo,
    tx_hash: &Digest32,
    alpha: u64,
    sig: &LiftedSignature,
    leak_cutoff: u64,
) -> RuleResult<Option<ExtendedSecretKey>> {
    let g = &env.group;
    let msg = ownership_message(tx_hash, alpha);
    let addr = match &u.address {
        Address::PkHash(a) => *a,
        Address::PlainPk(pk) => address_of(g, pk),
        _ => return reject(rules::LFC_NOT_PREQUANTUM, "proof for a non pre-quantum UTXO"),
    };
    match sig {
        LiftedSignature::Key(s) => {
            if st.address_leaked_at(g, &u.address).is_some_and(|l| l <= leak_cutoff) {
                return reject(rules::LFC_CLAIM_KEYLIFT_LEAKED, "key-lifted proof for a leaked key");
            }
            if !env.key_lifting.verify(&addr, &msg, s) {
                return reject(rules::LFC_CLAIM_BAD_PROOF, "key-lifted proof");
            }
            Ok(None)
        }
        LiftedSignature::Seed(s) => {
            if !env.seed_lifting.verify_address(&addr, &msg, s) {
                return reject(rules::LFC_CLAIM_BAD_PROOF, "seed-lifted proof");
            }
            Ok(Some(s.msk.clone()))
        }
    }
}

/// Miner-side admission of a mempool message against state `st` at the
/// height it would be committed.
pub fn check_admission(env: &ChainEnv, st: &ChainState, msg: &LfcMessage) -> RuleResult {
    let Some(u) = st.utxo(&msg.utxo) else {
        return reject(rules::LFC_UNKNOWN_UTXO, format!("{:?}", msg.utxo));
    };
    if st.lfc_locks.contains_key(&msg.utxo) {
        return reject(rules::LFC_LOCKED, format!("{:?}", msg.utxo));
    }
    verify_ownership(env, st, u, &msg.tx_hash, msg.alpha, &msg.sig, st.next_height()).map(|_| ())
}

impl BlockCtx<'_> {
    fn age(&self, c: &LfcCommitment) -> u64 {
        self.h - c.height
    }

    fn resolve_commitment(&mut self, id: &Digest32, state: LfcState) -> LfcCommitment {
        let mut c = self.st.lfc[id].clone();
        self.st.lfc_locks.remove(&c.utxo);
        self.st.lfc_open.remove(&(c.height, c.id));
        self.st.supply.escrow_held -= c.escrow as u128;
        c.state = state;
        c.resolved_height = Some(self.h);
        self.st.lfc.insert(*id, c.clone());
        c
    }

    pub fn apply_lfc_record(&mut self, rec: &LfcRecord) -> RuleResult {
        if !self.era.is_quantum() {
            return reject(rules::LFC_INACTIVE, "commitments open with the quantum era");
        }
        let window = self.env.params.epochs.lfc_commit_window();
        match self.epoch() {
            EpochPosition::Lfc(off) if off < window => {}
            pos => return reject(rules::LFC_COMMIT_WINDOW, format!("{pos:?}")),
        }
        let Some(u) = self.st.utxo_by_hash(&rec.utxo_hash).cloned() else {
            return reject(rules::LFC_UNKNOWN_UTXO, "no UTXO with this hash");
        };
        if !u.address.is_pre_quantum() {
            return reject(rules::LFC_NOT_PREQUANTUM, format!("{:?}", u.outpoint));
        }
        if self.st.lfc_locks.contains_key(&u.outpoint) {
            return reject(rules::LFC_LOCKED, format!("{:?}", u.outpoint));
        }
        let lp = &self.env.params.lfc;
        let id = commitment_id(self.h, rec);
        let escrow = lp.fine.fine(u.value, lp.fine.reference_minutes);
        self.escrow_needed += escrow;
        let c = LfcCommitment {
            id,
            record: rec.clone(),
            utxo: u.outpoint,
            value: u.value,
            address: u.address.clone(),
            miner: self.miner.clone(),
            height: self.h,
            escrow,
            state: LfcState::Locked,
            resolved_height: None,
        };
        self.st.lfc.insert(id, c);
        self.st.lfc_locks.insert(u.outpoint, id);
        self.st.lfc_open.insert((self.h, id));
        self.events.push(Event::LfcCommitted { id, utxo: u.outpoint });
        Ok(())
    }

    pub(crate) fn apply_lfc_spend(&mut self, tx: &Transaction) -> RuleResult {
        if !self.era.is_quantum() {
            return reject(rules::LFC_INACTIVE, "reveals open with the quantum era");
        }
        let g = self.env.group.clone();
        let res = self.resolve(tx)?;
        let sighash = tx.sighash(&g);
        let ui = self.split_single_prequantum(tx, &res, &sighash)?;
        let u = res.utxos[ui].clone();
        let Some(id) = self.st.lfc_locks.get(&u.outpoint).copied() else {
            return reject(rules::LFC_NOT_COMMITTED, format!("{:?}", u.outpoint));
        };
        let c = self.st.lfc[&id].clone();
        let txid = tx.txid(&g);
        if c.record.tx_hash != txid {
            return reject(rules::LFC_HASH_MISMATCH, "transaction differs from the commitment");
        }
        let lp = &self.env.params.lfc;
        let age = self.age(&c);
        if age < lp.reveal_opens() || age > lp.reveal_closes() {
            return reject(rules::LFC_REVEAL_WINDOW, format!("age {age}"));
        }
        if tx.fee != c.record.alpha {
            return reject(rules::LFC_FEE_MISMATCH, format!("fee {}, committed {}", tx.fee, c.record.alpha));
        }
        self.check_value(res.total(), tx)?;
        let (pk, xsk) = match &tx.inputs[ui].witness {
            w @ Witness::PreQuantum { .. } => (self.check_signed(&u, w, &sighash)?, None),
            Witness::Derivation { xsk, path } => (self.check_derivation(&u, xsk, path)?, Some(xsk.clone())),
            _ => return reject(rules::BAD_WITNESS, "reveal needs a signature or (xsk, P)"),
        };
        self.spend_all(&res);
        self.leak(&pk);
        if let Some(xsk) = &xsk {
            self.reveal_xsk(xsk);
        }
        self.create_outputs(txid, &tx.outputs);
        let alpha = c.record.alpha;
        let committer = alpha / 2;
        let revealer = alpha - committer;
        self.revealer_shares += revealer;
        if committer > 0 {
            let entry = self
                .st
                .pending_shares
                .entry(c.height)
                .or_insert_with(|| (c.miner.clone(), 0));
            entry.1 += committer;
            self.st.supply.shares_held += committer as u128;
        }
        let c = self.resolve_commitment(&id, LfcState::Revealed);
        self.settle(c.escrow, &c.miner);
        self.events.push(Event::LfcRevealed {
            id,
            committer_share: committer,
            revealer_share: revealer,
        });
        Ok(())
    }

    pub fn apply_lfc_claim(&mut self, claim: &LfcClaim) -> RuleResult {
        let Some(c) = self.st.lfc.get(&claim.commitment).cloned() else {
            return reject(rules::LFC_CLAIM_UNKNOWN, "no such commitment");
        };
        if c.state != LfcState::Locked {
            return reject(rules::LFC_CLAIM_RESOLVED, format!("{:?}", c.state));
        }
        let lp = &self.env.params.lfc;
        let age = self.age(&c);
        if age <= lp.reveal_closes() {
            return reject(rules::LFC_CLAIM_EARLY, format!("age {age}"));
        }
        if lp.claim_deadline == ClaimDeadline::Window && age > lp.claim_closes() {
            return reject(rules::LFC_CLAIM_LATE, format!("age {age}"));
        }
        let used = self.st.claims_in_window(self.h, lp.capacity_window);
        if used >= lp.proof_capacity {
            return reject(rules::LFC_CLAIM_CAPACITY, format!("{used} claims in window"));
        }
        let u = self.st.utxo(&c.utxo).cloned().expect("locked UTXO present");
        let msk = verify_ownership(self.env, &self.st, &u, &c.record.tx_hash, c.record.alpha, &claim.sig, c.height)?;
        if let (Some(msk), LiftedSignature::Seed(s)) = (&msk, &claim.sig) {
            let pk = self.env.seed_lifting.derived_point(s);
            self.leak(&pk);
            self.reveal_xsk(msk);
        }
        self.st.remove_utxo(&c.utxo);
        *self.st.claim_log.entry(self.h).or_insert(0) += 1;
        let c = self.resolve_commitment(&claim.commitment, LfcState::ClaimedByMiner);
        self.settle(c.value, &c.miner);
        self.settle(c.escrow, &c.miner);
        self.events.push(Event::LfcClaimed {
            id: c.id,
            value: c.value,
        });
        Ok(())
    }

    fn fine_commitment(&mut self, id: &Digest32) {
        let c = self.resolve_commitment(id, LfcState::ExpiredFined);
        let fp = &self.env.params.lfc.fine;
        let fine = match fp.mode {
            FineMode::Flat => c.escrow,
            FineMode::Prorated => {
                let minutes = (self.h - c.height) * self.env.params.consensus.block_minutes;
                fp.fine(c.value, minutes).min(c.escrow)
            }
        };
        self.settle(fine, &c.address);
        self.settle(c.escrow - fine, &c.miner);
        self.events.push(Event::LfcFined {
            id: c.id,
            fine,
            address: c.address,
        });
    }

    /// Window mode: commitments whose claim window closed with this block.
    pub(crate) fn sweep_lfc_expiries(&mut self) {
        let lp = &self.env.params.lfc;
        if lp.claim_deadline != ClaimDeadline::Window {
            return;
        }
        let Some(cutoff) = self.h.checked_sub(lp.claim_closes()) else {
            return;
        };
        let due: Vec<Digest32> = self
            .st
            .lfc_open
            .range(..=(cutoff, [0xff; 32]))
            .map(|(_, id)| *id)
            .collect();
        for id in due {
            self.fine_commitment(&id);
        }
    }

    /// At the last block of an epoch: rotate, or extend an LFC epoch when
    /// claims in the last window exceed `k * p`.
    pub(crate) fn end_epoch(&mut self) {
        let Some(kind) = self.st.epochs.is_last_block(self.h) else {
            return;
        };
        let ep = self.env.params.epochs.clone();
        let decision = match kind {
            EpochKind::Fc => EpochEnd::Rotate,
            EpochKind::Lfc => {
                let lp = &self.env.params.lfc;
                let claims = self.st.claims_in_window(self.h, lp.capacity_window);
                if lp.extension_p.exceeded_by(claims, lp.proof_capacity) {
                    self.events.push(Event::EpochExtended { at: self.h, claims });
                    EpochEnd::Extend
                } else {
                    let open: Vec<Digest32> = self.st.lfc_open.iter().map(|(_, id)| *id).collect();
                    for id in open {
                        self.fine_commitment(&id);
                    }
                    EpochEnd::Rotate
                }
            }
        };
        if decision == EpochEnd::Rotate {
            self.events.push(Event::EpochRotated { kind, at: self.h });
        }
        self.st.epochs.end_block(&ep, self.h, decision);
    }
}
