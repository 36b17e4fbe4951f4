//! Shared mempool with next-tick visibility and fee-dependent latency.

use std::collections::BTreeSet;

use crate::group::{Group, Point};
use crate::hash::{sha256_parts, to_hex, Digest32};
use crate::ledger::{CanaryKill, Transaction};
use crate::lfc::LfcMessage;

use super::config::Latency;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Submission {
    Tx(Transaction),
    Lfc(LfcMessage),
    Kill(CanaryKill),
    Samaritan(Point),
}

impl Submission {
    /// Identity used for deduplication and inclusion tracking.
    pub fn key(&self, g: &Group) -> Digest32 {
        match self {
            Submission::Tx(tx) => tx.txid(g),
            Submission::Lfc(m) => sha256_parts(&[b"sim/lfc", &m.encode(g)]),
            Submission::Kill(k) => sha256_parts(&[b"sim/kill", &k.sig.0]),
            Submission::Samaritan(pk) => sha256_parts(&[b"sim/samaritan", &g.encode_point(pk)]),
        }
    }

    pub fn label(&self, g: &Group) -> String {
        let short = |d: Digest32| to_hex(&d[..6]);
        match self {
            Submission::Tx(tx) => format!("tx:{}:{}", tx.kind_name(), short(tx.txid(g))),
            Submission::Lfc(m) => format!("lfc:{}", short(m.tx_hash)),
            Submission::Kill(_) => "canary-kill".to_string(),
            Submission::Samaritan(pk) => format!("samaritan:{}", short(crate::lifted::address_of(g, pk))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PoolEntry {
    pub item: Submission,
    pub key: Digest32,
    /// Agent index of the submitter.
    pub from: usize,
    pub visible: u64,
    pub eligible: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Mempool {
    entries: Vec<PoolEntry>,
    keys: BTreeSet<Digest32>,
}

impl Mempool {
    /// Submit at tick `tick`: visible from the next tick. Duplicates are ignored.
    pub fn submit(&mut self, g: &Group, latency: &Latency, item: Submission, from: usize, tick: u64) -> bool {
        let visible = tick + 1;
        let eligible = match &item {
            Submission::Tx(tx) if tx.fee < latency.fast_fee => visible + latency.slow_delay,
            _ => visible,
        };
        self.insert(g, item, from, visible, eligible)
    }

    /// Put an item back, includable at once.
    pub fn requeue(&mut self, g: &Group, item: Submission, from: usize, height: u64) -> bool {
        self.insert(g, item, from, height, height)
    }

    fn insert(&mut self, g: &Group, item: Submission, from: usize, visible: u64, eligible: u64) -> bool {
        let key = item.key(g);
        if !self.keys.insert(key) {
            return false;
        }
        self.entries.push(PoolEntry {
            item,
            key,
            from,
            visible,
            eligible,
        });
        true
    }

    pub fn contains(&self, key: &Digest32) -> bool {
        self.keys.contains(key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// What agents can see at tick `h`.
    pub fn visible(&self, h: u64) -> impl Iterator<Item = &PoolEntry> {
        self.entries.iter().filter(move |e| e.visible <= h)
    }

    /// What a block at height `h` may include.
    pub fn eligible(&self, h: u64) -> impl Iterator<Item = &PoolEntry> {
        self.entries.iter().filter(move |e| e.eligible <= h)
    }

    pub fn remove(&mut self, keys: &BTreeSet<Digest32>) {
        if keys.is_empty() {
            return;
        }
        self.entries.retain(|e| !keys.contains(&e.key));
        for k in keys {
            self.keys.remove(k);
        }
    }

    /// Drop entries includable for longer than `ttl` blocks.
    pub fn expire(&mut self, h: u64, ttl: u64) -> Vec<PoolEntry> {
        let (old, keep): (Vec<_>, Vec<_>) = self.entries.drain(..).partition(|e| e.eligible + ttl < h);
        self.entries = keep;
        for e in &old {
            self.keys.remove(&e.key);
        }
        old
    }
}
