//! Commit, wait and reveal for one FawkesCoin transaction.

use crate::fawkes::ChallengeStatus;
use crate::hash::Digest32;
use crate::ledger::{OutPoint, Transaction, TxKind, TxOut};

use super::agents::View;
use super::mempool::Submission;
use super::wallet::{build_tx, PqKey, Signer};

/// Blocks to wait for an inclusion before resubmitting.
pub const RETRY_BLOCKS: u64 = 12;
const MAX_REVEALS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStage {
    Waiting,
    Committing { since: u64 },
    Revealing { since: u64 },
    Done,
    Failed,
}

#[derive(Debug, Clone)]
pub struct FcFlow {
    pub reveal: Transaction,
    pub txid: Digest32,
    /// The pre-quantum UTXO being spent.
    pub utxo: OutPoint,
    pub fee_key: PqKey,
    pub commit_fee: u64,
    pub wait: u64,
    pub start: u64,
    pub stage: FlowStage,
    pub commits_sent: u32,
    pub reveals_sent: u32,
    pub done_at: Option<u64>,
    nonce: u64,
}

impl FcFlow {
    pub fn new(
        v: &View,
        reveal: Transaction,
        utxo: OutPoint,
        fee_key: PqKey,
        commit_fee: u64,
        start: u64,
        nonce: u64,
    ) -> Self {
        let wait_override = v.st.utxo(&utxo).and_then(|u| u.wait_blocks);
        Self {
            txid: reveal.txid(&v.env.group),
            reveal,
            utxo,
            fee_key,
            commit_fee,
            wait: v.env.params.fc.effective_wait(wait_override),
            start,
            stage: FlowStage::Waiting,
            commits_sent: 0,
            reveals_sent: 0,
            done_at: None,
            nonce,
        }
    }

    pub fn finished(&self) -> bool {
        matches!(self.stage, FlowStage::Done | FlowStage::Failed)
    }

    fn committed_height(&self, v: &View) -> Option<u64> {
        v.st.fc_commits
            .get(&self.txid)
            .and_then(|cs| cs.iter().map(|c| c.height).min())
    }

    /// `Some(true)` once the reveal is on chain, `Some(false)` once it can no
    /// longer get there.
    fn settled(&self, v: &View) -> Option<bool> {
        if v.st.challenges.contains_key(&self.txid) || v.st.utxo(&OutPoint::new(self.txid, 0)).is_some() {
            return Some(true);
        }
        match &self.reveal.kind {
            TxKind::FraudProof { challenged } => {
                let r = v.st.challenges.get(challenged)?;
                match r.status {
                    ChallengeStatus::Open => None,
                    ChallengeStatus::Defeated if r.defeated_by == Some(self.txid) => Some(true),
                    _ => Some(false),
                }
            }
            _ => (!v.st.utxos.contains_key(&self.utxo)).then_some(false),
        }
    }

    fn commit_tx(&mut self, v: &View) -> Option<Transaction> {
        let addr = self.fee_key.address();
        let u = v
            .st
            .utxos_of(&addr)
            .into_iter()
            .filter(|u| u.value >= self.commit_fee)
            .max_by_key(|u| (u.value, u.outpoint))?;
        self.nonce += 1;
        let change = u.value - self.commit_fee;
        let outputs = if change > 0 { vec![TxOut::new(change, addr)] } else { Vec::new() };
        Some(build_tx(
            v.env,
            TxKind::FcCommit { payload: self.txid },
            vec![(u.outpoint, Signer::Pq(self.fee_key.clone()))],
            outputs,
            self.commit_fee,
            self.nonce,
        ))
    }

    pub fn step(&mut self, v: &View, out: &mut Vec<Submission>) {
        if self.finished() {
            return;
        }
        if let Some(ok) = self.settled(v) {
            self.stage = if ok { FlowStage::Done } else { FlowStage::Failed };
            self.done_at = Some(v.h);
            return;
        }
        let next = v.h + 1;
        match self.stage {
            FlowStage::Waiting => {
                if next >= self.start && v.fc_commit_open(next) {
                    if let Some(tx) = self.commit_tx(v) {
                        out.push(Submission::Tx(tx));
                        self.commits_sent += 1;
                        self.stage = FlowStage::Committing { since: v.h };
                    }
                }
            }
            FlowStage::Committing { since } => match self.committed_height(v) {
                Some(c) if next >= c + self.wait => {
                    out.push(Submission::Tx(self.reveal.clone()));
                    self.reveals_sent += 1;
                    self.stage = FlowStage::Revealing { since: v.h };
                }
                Some(_) => {}
                None if v.h >= since + RETRY_BLOCKS => self.stage = FlowStage::Waiting,
                None => {}
            },
            FlowStage::Revealing { since } => {
                if self.committed_height(v).is_none() {
                    // The commitment was reorganized away.
                    self.stage = FlowStage::Committing { since: v.h };
                } else if v.h >= since + RETRY_BLOCKS {
                    if self.reveals_sent >= MAX_REVEALS {
                        self.stage = FlowStage::Failed;
                        self.done_at = Some(v.h);
                    } else {
                        out.push(Submission::Tx(self.reveal.clone()));
                        self.reveals_sent += 1;
                        self.stage = FlowStage::Revealing { since: v.h };
                    }
                }
            }
            FlowStage::Done | FlowStage::Failed => {}
        }
    }

    pub fn stage_name(&self) -> &'static str {
        match self.stage {
            FlowStage::Waiting => "waiting",
            FlowStage::Committing { .. } => "committing",
            FlowStage::Revealing { .. } => "revealing",
            FlowStage::Done => "done",
            FlowStage::Failed => "failed",
        }
    }
}
