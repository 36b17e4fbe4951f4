//! Quantum canary record and era activation.

use crate::group::{Group, Point, PreQuantumSignature};
use crate::hash::{sha256_parts, Digest32};

use crate::ledger::Address;

/// Static part of the canary, fixed at genesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CanaryRecord {
    pub challenge_pk: Point,
    pub nonce: Digest32,
    pub bounty: u64,
}

impl CanaryRecord {
    /// Canary derived from `seed`. The secret is dropped; only a discrete-log
    /// oracle can produce a solution.
    pub fn from_seed(group: &Group, seed: u64, bounty: u64) -> Self {
        let mut sk_bytes = sha256_parts(&[b"canary/key", &seed.to_be_bytes()]).to_vec();
        let mut sk = group.scalar_reduce(&sk_bytes);
        if sk.is_zero() {
            sk_bytes[31] ^= 1;
            sk = group.scalar_reduce(&sk_bytes);
        }
        Self {
            challenge_pk: group.pk_ec(&sk),
            nonce: sha256_parts(&[b"canary/nonce", &seed.to_be_bytes()]),
            bounty,
        }
    }

    pub fn verify(&self, group: &Group, sig: &PreQuantumSignature) -> bool {
        group.prequantum_verify(&self.challenge_pk, &self.nonce, sig)
    }
}

/// Mutable part of the canary.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CanaryState {
    pub killed_at: Option<u64>,
    pub claimant: Option<Address>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EraState {
    PreQuantum,
    Countdown { since: u64 },
    QuantumEra { since: u64 },
}

impl EraState {
    pub fn at(killed_at: Option<u64>, countdown: u64, height: u64) -> Self {
        match killed_at {
            None => EraState::PreQuantum,
            Some(k) if height >= k + countdown => EraState::QuantumEra { since: k + countdown },
            Some(k) if height >= k => EraState::Countdown { since: k },
            Some(_) => EraState::PreQuantum,
        }
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self, EraState::QuantumEra { .. })
    }

    fn rank(&self) -> u8 {
        match self {
            EraState::PreQuantum => 0,
            EraState::Countdown { .. } => 1,
            EraState::QuantumEra { .. } => 2,
        }
    }

    /// Era states only move forward.
    pub fn precedes_or_equals(&self, other: &EraState) -> bool {
        self.rank() <= other.rank()
    }
}
