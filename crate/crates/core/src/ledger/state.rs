//! Chain state after a block. Built on persistent maps so past states can be
//! kept for reorgs at little cost.

use im::{OrdMap, OrdSet, Vector};

use crate::consensus::epoch::EpochTracker;
use crate::consensus::era::CanaryState;
use crate::fawkes::{ChallengeRecord, FcCommitment};
use crate::group::{Group, Point};
use crate::hash::Digest32;
use crate::lfc::LfcCommitment;
use crate::lifted::address_of;

use super::registry::Registry;
use super::{Address, OutPoint, TxId, Utxo};

/// Value accounting. `utxo + held == minted - burned` after every block.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Supply {
    pub minted: u128,
    pub burned: u128,
    /// Burned value still available to fund a bounty.
    pub burn_pool: u128,
    pub utxo_value: u128,
    /// Inputs of open challenge records (spent value plus deposit).
    pub challenge_held: u128,
    /// Fine escrow of unresolved lifted commitments.
    pub escrow_held: u128,
    /// Committer fee shares waiting for their payout block.
    pub shares_held: u128,
}

impl Supply {
    pub fn held(&self) -> u128 {
        self.challenge_held + self.escrow_held + self.shares_held
    }

    /// `(lhs, rhs)` of the balance equation.
    pub fn balance(&self) -> (u128, u128) {
        (self.utxo_value + self.held(), self.minted - self.burned)
    }

    pub fn balanced(&self) -> bool {
        let (l, r) = self.balance();
        l == r
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ChainState {
    pub tip_height: Option<u64>,
    pub tip_hash: Digest32,
    pub utxos: OrdMap<OutPoint, Utxo>,
    pub by_address: OrdMap<Address, OrdSet<OutPoint>>,
    pub by_hash: OrdMap<Digest32, OutPoint>,
    /// Encoded public key to the height it first appeared.
    pub leaked: OrdMap<Vec<u8>, u64>,
    /// Address hash of every leaked key, same heights.
    pub leaked_addr: OrdMap<Digest32, u64>,
    pub first_seen: OrdMap<Address, u64>,
    pub fc_commits: OrdMap<Digest32, Vector<FcCommitment>>,
    pub challenges: OrdMap<TxId, ChallengeRecord>,
    /// Open records keyed by `(challenge_end, txid)`.
    pub challenge_queue: OrdSet<(u64, TxId)>,
    pub lfc: OrdMap<Digest32, LfcCommitment>,
    pub lfc_locks: OrdMap<OutPoint, Digest32>,
    /// Locked commitments keyed by `(height, id)`.
    pub lfc_open: OrdSet<(u64, Digest32)>,
    /// Committer shares by commitment height: `(miner, amount)`.
    pub pending_shares: OrdMap<u64, (Address, u64)>,
    /// Miner claims per height.
    pub claim_log: OrdMap<u64, u64>,
    pub registry: Registry,
    pub canary: CanaryState,
    pub epochs: EpochTracker,
    pub supply: Supply,
}

impl ChainState {
    pub fn next_height(&self) -> u64 {
        self.tip_height.map_or(0, |h| h + 1)
    }

    pub fn utxo(&self, op: &OutPoint) -> Option<&Utxo> {
        self.utxos.get(op)
    }

    pub fn utxos_of(&self, address: &Address) -> Vec<Utxo> {
        self.by_address
            .get(address)
            .map(|set| set.iter().filter_map(|op| self.utxos.get(op).cloned()).collect())
            .unwrap_or_default()
    }

    pub fn balance_of(&self, address: &Address) -> u64 {
        self.utxos_of(address).iter().map(|u| u.value).sum()
    }

    pub fn utxo_by_hash(&self, h: &Digest32) -> Option<&Utxo> {
        self.by_hash.get(h).and_then(|op| self.utxos.get(op))
    }

    pub fn insert_utxo(&mut self, u: Utxo) {
        self.supply.utxo_value += u.value as u128;
        self.by_address.entry(u.address.clone()).or_default().insert(u.outpoint);
        self.by_hash.insert(u.outpoint.hash(), u.outpoint);
        self.first_seen.entry(u.address.clone()).or_insert(u.created_height);
        self.utxos.insert(u.outpoint, u);
    }

    pub fn remove_utxo(&mut self, op: &OutPoint) -> Option<Utxo> {
        let u = self.utxos.remove(op)?;
        self.supply.utxo_value -= u.value as u128;
        if let Some(set) = self.by_address.get_mut(&u.address) {
            set.remove(op);
            if set.is_empty() {
                self.by_address.remove(&u.address);
            }
        }
        self.by_hash.remove(&op.hash());
        Some(u)
    }

    /// Record `pk` as public from `height` on. The first recorded height is kept.
    pub fn mark_leaked(&mut self, group: &Group, pk: &Point, height: u64) {
        self.leaked.entry(group.encode_point(pk)).or_insert(height);
        self.leaked_addr.entry(address_of(group, pk)).or_insert(height);
    }

    pub fn leaked_at(&self, group: &Group, pk: &Point) -> Option<u64> {
        self.leaked.get(&group.encode_point(pk)).copied()
    }

    pub fn is_leaked(&self, group: &Group, pk: &Point) -> bool {
        self.leaked_at(group, pk).is_some()
    }

    /// Height the key behind a pre-quantum address became public.
    pub fn address_leaked_at(&self, group: &Group, address: &Address) -> Option<u64> {
        match address {
            Address::PkHash(h) => self.leaked_addr.get(h).copied(),
            Address::PlainPk(pk) => self.leaked_at(group, pk),
            _ => None,
        }
    }

    pub fn first_seen(&self, address: &Address) -> Option<u64> {
        self.first_seen.get(address).copied()
    }

    /// Claims in the `window` blocks ending at `height`.
    pub fn claims_in_window(&self, height: u64, window: u64) -> u64 {
        let lo = (height + 1).saturating_sub(window);
        self.claim_log.range(lo..=height).map(|(_, n)| *n).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utxo(i: u32, value: u64, address: Address) -> Utxo {
        Utxo {
            outpoint: OutPoint::new([i as u8; 32], i),
            value,
            address,
            created_height: 3,
            wait_blocks: None,
            coinbase: false,
        }
    }

    #[test]
    fn insert_remove_keeps_indexes() {
        let mut s = ChainState::default();
        let a = Address::PostQuantum([1; 32]);
        s.insert_utxo(utxo(1, 10, a.clone()));
        s.insert_utxo(utxo(2, 5, a.clone()));
        assert_eq!(s.balance_of(&a), 15);
        assert_eq!(s.supply.utxo_value, 15);
        let op = OutPoint::new([1; 32], 1);
        assert_eq!(s.utxo_by_hash(&op.hash()).unwrap().value, 10);
        s.remove_utxo(&op).unwrap();
        assert!(s.utxo_by_hash(&op.hash()).is_none());
        assert_eq!(s.balance_of(&a), 5);
        assert_eq!(s.first_seen(&a), Some(3));
    }

    #[test]
    fn leak_heights_are_monotone() {
        let g = Group::toy(101).unwrap();
        let pk = g.pk_ec(&g.scalar(3));
        let mut s = ChainState::default();
        assert!(!s.is_leaked(&g, &pk));
        s.mark_leaked(&g, &pk, 9);
        s.mark_leaked(&g, &pk, 4);
        s.mark_leaked(&g, &pk, 12);
        assert_eq!(s.leaked_at(&g, &pk), Some(9));
        assert_eq!(s.address_leaked_at(&g, &Address::pk_hash(&g, &pk)), Some(9));
    }

    #[test]
    fn claim_window_sum() {
        let mut s = ChainState::default();
        s.claim_log.insert(100, 2);
        s.claim_log.insert(150, 3);
        s.claim_log.insert(199, 1);
        assert_eq!(s.claims_in_window(199, 100), 6);
        assert_eq!(s.claims_in_window(200, 100), 4);
    }
}
